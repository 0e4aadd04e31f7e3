"""Subcarrier-domain OFDM radar processing at the full-duplex BS.

Chain: received frame -> per-(subcarrier, symbol) reference division ->
zero-padded range/Doppler transform -> peak -> range and velocity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .numkernels import dft_padded_2d, idft_padded
from .propagation import SPEED_OF_LIGHT, target_phase


class DegenerateBeamError(ValueError):
    pass


def pilot_symbols(M, N, n_streams, tx_power, seed):
    """Seeded QPSK symbols with per-stream power ``tx_power / n_streams``, shape (M, N, Ns)."""
    rng = np.random.default_rng(seed)
    q = rng.integers(0, 4, size=(M, N, n_streams))
    return np.sqrt(tx_power / n_streams) * np.exp(1j * (np.pi / 4 + np.pi / 2 * q))


def rx_frame(channels, W, precoders, symbols, si_power, noise_var, noise_seed=0):
    """Received RF-chain samples ``W^H (H_t F s + sqrt(rho) H_SI F s + n)``.

    Returns an array of shape (N_RF, M, N). Noise is circular Gaussian with
    per-antenna variance ``noise_var`` drawn from ``noise_seed``.
    """
    W = np.asarray(W)
    F = np.asarray(precoders)
    s = np.asarray(symbols)
    M, N, _ = s.shape
    x = np.einsum("mis,mns->mni", F, s)                     # transmitted per antenna
    y = np.zeros((W.shape[1], M, N), dtype=complex)
    if channels.targets:
        A = channels.target_steering()                      # (K, n)
        c = target_phase(channels.targets, np.arange(M)[:, None], np.arange(N)[None, :],
                         channels.subcarrier_spacing, channels.symbol_duration)  # (M, N, K)
        ax = np.einsum("ki,mni->mnk", A.conj(), x)
        wa = W.conj().T @ A.T                               # (N_RF, K)
        y += np.einsum("rk,mnk->rmn", wa, c * ax)
    if si_power > 0:
        G = W.conj().T @ channels.si
        y += np.sqrt(si_power) * np.einsum("ri,mni->rmn", G, x)
    if noise_var > 0:
        rng = np.random.default_rng(noise_seed)
        n_bs = W.shape[0]
        noise = rng.standard_normal((M, N, n_bs)) + 1j * rng.standard_normal((M, N, n_bs))
        noise *= np.sqrt(noise_var / 2)
        y += np.einsum("ir,mni->rmn", W.conj(), noise)
    return y


def reference(W, precoders, symbols, steering):
    """Expected per-chain target response ``w^H a a^H F_m s_mn``, shape (N_RF, M, N)."""
    wa = np.asarray(W).conj().T @ steering
    aFs = np.einsum("i,mis,mns->mn", steering.conj(), precoders, symbols)
    return wa[:, None, None] * aFs[None]


def build_z(y, W, precoders, symbols, steering, guard=None, conjugate=False):
    """Matched subcarrier/symbol matrix ``Z[m, n] = sum_r y_r / d_r``.

    ``d_r = w_r^H a a^H F_m s_mn`` by default. ``conjugate=True`` divides by
    the complex conjugate of ``d_r`` instead; that variant keeps the modulus
    but adds a symbol-dependent phase ``2 arg(d_r)``, which destroys the
    subcarrier/symbol phase progression unless those phases are constant.
    Raises ``DegenerateBeamError`` when some ``|d_r| <= guard``.
    """
    F = np.asarray(precoders)
    s = np.asarray(symbols)
    n_bs = F.shape[1]
    if guard is None:
        p = np.mean(np.abs(s) ** 2)
        guard = 1e-12 * n_bs * np.sqrt(p)
    d = reference(W, F, s, steering)
    small = np.abs(d) <= guard
    if np.any(small):
        chains = sorted(set(np.nonzero(small)[0].tolist()))
        raise DegenerateBeamError(f"reference response vanishes on RF chain(s) {chains}")
    if conjugate:
        d = d.conj()
    return np.sum(np.asarray(y) / d, axis=0)


@dataclass(frozen=True)
class RangeDopplerMap:
    magnitudes: np.ndarray      # (Mbar, Nbar)
    range_bin: float            # m per range bin
    velocity_bin: float         # m/s per Doppler bin, printed convention v = nb lambda/(Nbar T)
    peak: tuple                 # (mb*, nb*)
    doppler_bin_hz: float

    @property
    def range_m(self):
        return self.peak[0] * self.range_bin

    @property
    def velocity_printed(self):
        """``nb* lambda / (Nbar T)``, i.e. ``f_D lambda`` (one-way convention)."""
        return self.peak[1] * self.velocity_bin

    @property
    def doppler_hz(self):
        return self.peak[1] * self.doppler_bin_hz

    def velocity_mps(self, convention="monostatic", signed=True):
        """Physical radial velocity.

        ``monostatic`` treats the Doppler axis as ``2v/lambda`` (half the
        printed value); ``printed`` returns the printed formula unchanged.
        ``signed`` maps the upper half of the Doppler axis to negative speeds.
        """
        nb = self.peak[1]
        Nbar = self.magnitudes.shape[1]
        if signed and nb >= Nbar / 2:
            nb -= Nbar
        v = nb * self.velocity_bin
        if convention == "monostatic":
            return v / 2
        if convention == "printed":
            return v
        raise ValueError(f"unknown velocity convention {convention!r}")


def argmax_lex(X):
    """Index of the maximum; ties broken by lowest (row, col)."""
    flat = int(np.argmax(X))   # numpy returns the first occurrence in C order
    return tuple(int(i) for i in np.unravel_index(flat, X.shape))


def range_doppler(Z, Mbar, Nbar, subcarrier_spacing, symbol_duration, wavelength) -> RangeDopplerMap:
    mag = np.abs(dft_padded_2d(Z, Mbar, Nbar))
    return RangeDopplerMap(
        magnitudes=mag,
        range_bin=SPEED_OF_LIGHT / (2 * Mbar * subcarrier_spacing),
        velocity_bin=wavelength / (Nbar * symbol_duration),
        peak=argmax_lex(mag),
        doppler_bin_hz=1.0 / (Nbar * symbol_duration),
    )


def range_profile(Z, Mbar):
    """Zero-Doppler column of the range/Doppler map, computed in 1-D."""
    return np.abs(idft_padded(np.sum(Z, axis=1), Mbar))


@dataclass(frozen=True)
class AngleRangeMap:
    angles: np.ndarray          # rad
    ranges: np.ndarray          # m
    magnitudes: np.ndarray      # (n_angles, Mbar)


def angle_range_map(z_for_angle: Callable[[float], np.ndarray], angle_grid: Sequence[float],
                    Mbar, subcarrier_spacing) -> AngleRangeMap:
    """Stack zero-Doppler range profiles, redesigning the beams for every angle.

    ``z_for_angle(theta)`` must run the whole design and processing chain
    for a target direction ``theta`` and return the matched M x N matrix.
    """
    angle_grid = np.asarray(angle_grid, dtype=float)
    if angle_grid.size == 0:
        raise ValueError("angle grid must be non-empty")
    rows = [range_profile(z_for_angle(th), Mbar) for th in angle_grid]
    ranges = np.arange(Mbar) * SPEED_OF_LIGHT / (2 * Mbar * subcarrier_spacing)
    return AngleRangeMap(angle_grid, ranges, np.array(rows))


def _db(x, floor_db=-300.0):
    with np.errstate(divide="ignore"):
        return np.maximum(20 * np.log10(x), floor_db)


def export_range_velocity_csv(rd: RangeDopplerMap, path, max_range_m=None, max_velocity_mps=None,
                              convention="monostatic"):
    """Write ``range_m,velocity_mps,magnitude_db`` rows (range-major, velocity ascending).

    Doppler bins are mapped to signed velocities; ``max_velocity_mps`` keeps
    only ``|v| <= max_velocity_mps``.
    """
    mag = rd.magnitudes
    n_r = mag.shape[0]
    if max_range_m is not None:
        n_r = min(n_r, int(np.floor(max_range_m / rd.range_bin)) + 1)
    Nbar = mag.shape[1]
    nb = np.arange(Nbar)
    nb = np.where(nb >= Nbar / 2, nb - Nbar, nb)
    v = nb * rd.velocity_bin / (2 if convention == "monostatic" else 1)
    order = np.argsort(v, kind="stable")
    if max_velocity_mps is not None:
        order = order[np.abs(v[order]) <= max_velocity_mps]
    db = _db(mag[:n_r])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["range_m", "velocity_mps", "magnitude_db"])
        for i in range(n_r):
            r = f"{i * rd.range_bin:.9g}"
            for j in order:
                w.writerow([r, f"{v[j]:.9g}", f"{db[i, j]:.9g}"])


def export_angle_range_csv(ar: AngleRangeMap, path, max_range_m=None):
    """Write ``angle_deg,range_m,magnitude_db`` rows (angle-major)."""
    n_r = ar.magnitudes.shape[1]
    if max_range_m is not None:
        n_r = int(np.sum(ar.ranges <= max_range_m))
    db = _db(ar.magnitudes[:, :n_r])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["angle_deg", "range_m", "magnitude_db"])
        for i, th in enumerate(ar.angles):
            a = f"{np.rad2deg(th):.9g}"
            for j in range(n_r):
                w.writerow([a, f"{ar.ranges[j]:.9g}", f"{db[i, j]:.9g}"])
