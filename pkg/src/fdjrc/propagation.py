"""Array geometry, channel models and seeded scenario generation.

Angles are radians from broadside internally; configs carry degrees.
Powers are linear Watts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


class GeometryError(ValueError):
    pass


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def db_to_lin(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class UlaSpec:
    n_ant: int
    element_spacing: float
    wavelength: float
    origin: tuple = (0.0, 0.0, 0.0)
    axis: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        if self.n_ant < 1:
            raise ValueError("n_ant must be >= 1")
        if self.element_spacing <= 0:
            raise ValueError("element_spacing must be positive")
        if abs(np.linalg.norm(self.axis) - 1.0) > 1e-12:
            raise ValueError("axis must be a unit vector")

    @classmethod
    def half_wavelength(cls, n_ant, wavelength, origin=(0.0, 0.0, 0.0)):
        return cls(n_ant, wavelength / 2, wavelength, tuple(map(float, origin)))

    def positions(self):
        """Element positions, shape (n_ant, 3)."""
        k = np.arange(self.n_ant)[:, None]
        return np.asarray(self.origin, float) + k * self.element_spacing * np.asarray(self.axis, float)


def ula_response(spec: UlaSpec, angle):
    """Array response ``exp(j 2pi (d/lambda) k sin(angle))``, k = 0..n_ant-1."""
    k = np.arange(spec.n_ant)
    return np.exp(2j * np.pi * (spec.element_spacing / spec.wavelength) * k * np.sin(angle))


@dataclass(frozen=True)
class PathSpec:
    gain: complex
    delay: float
    aoa: float
    aod: float

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError("path delay must be >= 0")
        if abs(self.aoa) > np.pi / 2 + 1e-12 or abs(self.aod) > np.pi / 2 + 1e-12:
            raise ValueError("path angles must lie in [-pi/2, pi/2]")


@dataclass(frozen=True)
class TargetSpec:
    """Point target. ``doppler`` is the two-way (monostatic) shift 2v/lambda."""

    reflection: complex
    doppler: float
    round_trip: float
    angle: float
    range: float
    velocity: float
    rcs: float

    @classmethod
    def from_physical(cls, range_m, velocity, angle, rcs, wavelength, phase=0.0):
        mag = radar_reflection_magnitude(range_m, rcs, wavelength)
        return cls(
            reflection=mag * np.exp(1j * phase),
            doppler=2.0 * velocity / wavelength,
            round_trip=2.0 * range_m / SPEED_OF_LIGHT,
            angle=float(angle),
            range=float(range_m),
            velocity=float(velocity),
            rcs=float(rcs),
        )


def free_space_amplitude(distance, wavelength):
    return wavelength / (4 * np.pi * distance)


def radar_reflection_magnitude(distance, rcs, wavelength):
    """Two-way amplitude from the radar range equation."""
    return np.sqrt(wavelength ** 2 * rcs / ((4 * np.pi) ** 3 * distance ** 4))


def si_channel(tx: UlaSpec, rx: UlaSpec):
    """Near-field LoS leakage between the BS transmit and receive arrays.

    Entry (p, q) couples receive element p with transmit element q and is
    scaled so that the squared Frobenius norm equals ``n_ant**2``.
    """
    if tx.n_ant != rx.n_ant:
        raise ValueError("transmit and receive arrays must have equal size")
    d = np.linalg.norm(rx.positions()[:, None, :] - tx.positions()[None, :, :], axis=-1)
    if np.any(d <= 0):
        raise GeometryError("transmit and receive elements coincide")
    H = np.exp(-2j * np.pi * d / tx.wavelength) / d
    return H * (tx.n_ant / np.linalg.norm(H))


def downlink_channels(paths: Sequence[PathSpec], bs: UlaSpec, ms: UlaSpec, M, subcarrier_spacing):
    """Frequency-selective geometric channel, shape (M, n_ms, n_bs)."""
    if len(paths) == 0:
        raise ValueError("at least one path is required")
    m = np.arange(M)
    H = np.zeros((M, ms.n_ant, bs.n_ant), dtype=complex)
    for p in paths:
        outer = np.outer(ula_response(ms, p.aoa), ula_response(bs, p.aod).conj())
        H += (p.gain * np.exp(-2j * np.pi * m * p.delay * subcarrier_spacing))[:, None, None] * outer
    return H


def target_phase(targets: Sequence[TargetSpec], m, n, subcarrier_spacing, symbol_duration):
    """Complex factor ``alpha_k exp(j2pi(n T fD_k - m tau_k df))`` per target.

    ``m`` and ``n`` broadcast; output has a trailing target axis.
    """
    m = np.asarray(m, dtype=float)[..., None]
    n = np.asarray(n, dtype=float)[..., None]
    alpha = np.array([t.reflection for t in targets], dtype=complex)
    fd = np.array([t.doppler for t in targets], dtype=float)
    tau = np.array([t.round_trip for t in targets], dtype=float)
    return alpha * np.exp(2j * np.pi * (n * symbol_duration * fd - m * tau * subcarrier_spacing))


def target_channel(targets: Sequence[TargetSpec], bs: UlaSpec, m, n, subcarrier_spacing, symbol_duration):
    """Monostatic target channel at subcarrier ``m`` and symbol ``n``."""
    H = np.zeros((bs.n_ant, bs.n_ant), dtype=complex)
    if not targets:
        return H
    c = target_phase(targets, m, n, subcarrier_spacing, symbol_duration)
    for ck, t in zip(c, targets):
        a = ula_response(bs, t.angle)
        H += ck * np.outer(a, a.conj())
    return H


@dataclass(frozen=True)
class ChannelSet:
    downlink: np.ndarray          # (M, n_ms, n_bs)
    si: np.ndarray                # (n_bs, n_bs)
    targets: tuple                # TargetSpec, kept symbolic; see target()
    bs: UlaSpec
    subcarrier_spacing: float
    symbol_duration: float
    M: int
    N: int

    def target(self, m, n):
        return target_channel(self.targets, self.bs, m, n, self.subcarrier_spacing, self.symbol_duration)

    def target_steering(self):
        """Steering vectors of all targets, shape (K, n_bs)."""
        return np.array([ula_response(self.bs, t.angle) for t in self.targets]).reshape(-1, self.bs.n_ant)


@dataclass(frozen=True)
class TargetConfig:
    range_m: float
    angle_deg: float
    velocity_mps: float = 0.0
    rcs_m2: float = 10.0


@dataclass(frozen=True)
class ScenarioConfig:
    carrier_hz: float = 28e9
    n_bs: int = 32
    n_ms: int = 16
    ms_distance_m: float = 50.0
    n_paths: int = 5
    los_angle_range_deg: tuple = (-60.0, 60.0)
    nlos_angle_range_deg: tuple = (-90.0, 90.0)
    nlos_gain_offset_db: tuple = (5.0, 15.0)
    nlos_excess_delay_max_s: float = 100e-9
    ms_los_angle_deg: float | None = None
    array_separation_wl: float = 6.0
    si_power: float = 0.0
    targets: tuple = field(default_factory=lambda: (TargetConfig(40.0, 45.0),))

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.carrier_hz

    def validate(self):
        lo, hi = self.los_angle_range_deg
        nlo, nhi = self.nlos_angle_range_deg
        g0, g1 = self.nlos_gain_offset_db
        problems = []
        if not -90 <= lo <= hi <= 90:
            problems.append("los_angle_range_deg must satisfy -90 <= lo <= hi <= 90")
        if not -90 <= nlo <= nhi <= 90:
            problems.append("nlos_angle_range_deg must satisfy -90 <= lo <= hi <= 90")
        if not 0 <= g0 <= g1:
            problems.append("nlos_gain_offset_db must satisfy 0 <= lo <= hi")
        if self.ms_distance_m <= 0:
            problems.append("ms_distance_m must be positive")
        if self.n_paths < 1:
            problems.append("n_paths must be >= 1")
        if self.carrier_hz <= 0:
            problems.append("carrier_hz must be positive")
        if self.array_separation_wl <= 0:
            problems.append("array_separation_wl must be positive")
        if self.si_power < 0:
            problems.append("si_power must be >= 0")
        if self.nlos_excess_delay_max_s < 0:
            problems.append("nlos_excess_delay_max_s must be >= 0")
        if self.ms_los_angle_deg is not None and abs(self.ms_los_angle_deg) > 90:
            problems.append("ms_los_angle_deg must lie in [-90, 90]")
        for t in self.targets:
            if t.range_m <= 0 or t.rcs_m2 <= 0 or abs(t.angle_deg) > 90:
                problems.append(f"invalid target {t}")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class Scenario:
    bs_tx: UlaSpec
    bs_rx: UlaSpec
    ms: UlaSpec
    paths: tuple
    targets: tuple
    si_power: float
    seed: int

    @property
    def wavelength(self):
        return self.bs_tx.wavelength


def generate_scenario(cfg: ScenarioConfig, seed: int) -> Scenario:
    """Draw one random deployment; deterministic in ``(cfg, seed)``.

    Draw order: LoS AoD, LoS AoA, then per NLoS path (AoD, AoA, gain offset,
    excess delay), then all path phases, then target phases.
    """
    cfg.validate()
    rng = np.random.default_rng(seed)
    lam = cfg.wavelength
    bs_tx = UlaSpec.half_wavelength(cfg.n_bs, lam)
    bs_rx = UlaSpec.half_wavelength(cfg.n_bs, lam, origin=(0.0, 0.0, cfg.array_separation_wl * lam))
    ms = UlaSpec.half_wavelength(cfg.n_ms, lam, origin=(0.0, cfg.ms_distance_m, 0.0))

    lo, hi = np.deg2rad(cfg.los_angle_range_deg)
    aod_los = rng.uniform(lo, hi)
    aoa_los = rng.uniform(lo, hi)
    if cfg.ms_los_angle_deg is not None:
        aod_los = aoa_los = np.deg2rad(cfg.ms_los_angle_deg)
    los_mag = free_space_amplitude(cfg.ms_distance_m, lam)
    los_delay = cfg.ms_distance_m / SPEED_OF_LIGHT

    nlo, nhi = np.deg2rad(cfg.nlos_angle_range_deg)
    nlos = []
    for _ in range(cfg.n_paths - 1):
        aod = rng.uniform(nlo, nhi)
        aoa = rng.uniform(nlo, nhi)
        offset_db = rng.uniform(*cfg.nlos_gain_offset_db)
        excess = rng.uniform(0.0, cfg.nlos_excess_delay_max_s)
        nlos.append((aod, aoa, los_mag * 10 ** (-offset_db / 20), los_delay + excess))

    phases = rng.uniform(0.0, 2 * np.pi, size=cfg.n_paths)
    paths = [PathSpec(los_mag * np.exp(1j * phases[0]), los_delay, aoa_los, aod_los)]
    for (aod, aoa, mag, delay), ph in zip(nlos, phases[1:]):
        paths.append(PathSpec(mag * np.exp(1j * ph), delay, aoa, aod))

    tphases = rng.uniform(0.0, 2 * np.pi, size=len(cfg.targets))
    targets = tuple(
        TargetSpec.from_physical(t.range_m, t.velocity_mps, np.deg2rad(t.angle_deg), t.rcs_m2, lam, ph)
        for t, ph in zip(cfg.targets, tphases)
    )
    return Scenario(bs_tx, bs_rx, ms, tuple(paths), targets, float(cfg.si_power), int(seed))


def build_channels(scenario: Scenario, M, N, subcarrier_spacing, symbol_duration) -> ChannelSet:
    H = downlink_channels(scenario.paths, scenario.bs_tx, scenario.ms, M, subcarrier_spacing)
    si = si_channel(scenario.bs_tx, scenario.bs_rx)
    H.setflags(write=False)
    si.setflags(write=False)
    return ChannelSet(H, si, scenario.targets, scenario.bs_tx, float(subcarrier_spacing),
                      float(symbol_duration), int(M), int(N))
