"""Fully digital BS precoders and MS combiners.

Three precoding methods share one pipeline:

``proposed``
    generalized-eigenvector precoder against the SI covariance, coherently
    mixed with an SI-avoiding target beam until the transmit gain threshold
    is met.
``coherent_eigenvector``
    same mixing, no SI term (metric matrix C = 0).
``optimal_svd``
    dominant right singular vectors of each subcarrier channel.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .numkernels import default_ridge, gev, gev_top_k, gev_top_k_batch, svd_truncated

log = logging.getLogger(__name__)

METHODS = ("proposed", "coherent_eigenvector", "optimal_svd")


@dataclass(frozen=True)
class PrecoderSet:
    matrices: np.ndarray            # (M, N_BS, Ns), ||F_m||_F^2 = Ns
    kappa: np.ndarray               # (M,), 1.0 for optimal_svd
    method: str
    infeasible: np.ndarray = field(default=None)  # (M,) bool, gain threshold unreachable

    def __post_init__(self):
        if np.any((self.kappa < 0) | (self.kappa > 1)):
            raise ValueError("kappa must lie in [0, 1]")
        if self.infeasible is None:
            object.__setattr__(self, "infeasible", np.zeros(len(self.kappa), dtype=bool))

    @property
    def n_streams(self):
        return self.matrices.shape[-1]

    def __len__(self):
        return self.matrices.shape[0]


def si_covariance(H_si, W_bs):
    """``H_SI^H W W^H H_SI``: the SI directions seen by the BS combiner."""
    G = np.asarray(W_bs).conj().T @ H_si
    C = G.conj().T @ G
    return 0.5 * (C + C.conj().T)


def gev_precoder(H, C, n_streams, ridge=None):
    """Top generalized eigenvectors of (H^H H, C + ridge I)."""
    A = H.conj().T @ H
    return gev_top_k(A, C, n_streams, ridge)


def target_beam(steering, C, ridge=None):
    """Beam maximizing ``|f^H a|^2 / f^H (C + ridge I) f``, scaled to unit C-norm."""
    a = np.asarray(steering)
    return gev(np.outer(a, a.conj()), C, ridge).vectors[:, 0]


def _normalize(F, n_streams):
    norm = np.linalg.norm(F, axis=(-2, -1), keepdims=True)
    return F * (np.sqrt(n_streams) / norm)


def _mix(F_gev, f_aligned, kappa):
    k = np.asarray(kappa)[..., None, None]
    return k * F_gev + (1 - k) * f_aligned


def _min_gain(F, steering):
    n_streams = F.shape[-1]
    F = _normalize(F, n_streams)
    return np.min(np.abs(np.einsum("...is,i->...s", F.conj(), steering)), axis=-1)


def coherent_combine(F_gev, f, steering, tau_t, tol=None, max_bisect=60):
    """Mix communication beams with a target beam to meet a transmit gain.

    Column k becomes ``kappa F_gev[:, k] + (1 - kappa) exp(j psi_k) f`` with
    ``psi_k`` aligning ``f`` to the column, then the whole matrix is scaled to
    ``||F||_F^2 = Ns``. ``kappa`` is the largest value in [0, 1] whose minimum
    column gain reaches ``tau_t``; bisection assumes the gain is non-increasing
    in ``kappa``. When even ``kappa = 0`` falls short the target-only beam is
    returned and flagged.

    Leading batch dimensions of ``F_gev`` (e.g. subcarriers) are supported;
    ``f`` may be shared or batched likewise.

    Returns ``(F, kappa, infeasible)``.
    """
    F_gev = np.asarray(F_gev)
    f = np.asarray(f)
    n_bs = F_gev.shape[-2]
    if tol is None:
        tol = 1e-4 * n_bs
    if tau_t < 0 or tol <= 0:
        raise ValueError("tau_t must be >= 0 and tol > 0")
    inner = np.einsum("...i,...is->...s", f.conj(), F_gev)
    psi = np.angle(inner)
    f_aligned = np.exp(1j * psi)[..., None, :] * f[..., :, None]

    batch = F_gev.shape[:-2]
    gain_at = lambda k: _min_gain(_mix(F_gev, f_aligned, k), steering)  # noqa: E731
    lo = np.zeros(batch)
    hi = np.ones(batch)
    g_hi = gain_at(hi)
    g_lo = gain_at(lo)
    infeasible = g_lo < tau_t
    done = g_hi >= tau_t
    lo = np.where(done, 1.0, lo)
    g_lo = np.where(done, g_hi, g_lo)
    active = ~done & ~infeasible & (g_lo - tau_t > tol)
    for _ in range(max_bisect):
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        g = gain_at(mid)
        good = g >= tau_t
        lo = np.where(active & good, mid, lo)
        g_lo = np.where(active & good, g, g_lo)
        hi = np.where(active & ~good, mid, hi)
        active &= (g_lo - tau_t > tol) & (hi - lo > 1e-12)
    kappa = lo
    if np.any(infeasible):
        log.warning("transmit gain %.4g unreachable on %d of %d subcarriers; using kappa=0",
                    tau_t, int(np.sum(infeasible)), int(infeasible.size))
    F = _normalize(_mix(F_gev, f_aligned, kappa), F_gev.shape[-1])
    return F, kappa, infeasible


def ms_combiner(H, n_streams):
    """Dominant left singular vectors of H (the SE-maximizing receive subspace)."""
    U, _, _ = svd_truncated(H, n_streams)
    return U


def optimal_svd_precoders(H, n_streams):
    """Top right singular vectors per subcarrier, scaled to ||F||_F^2 = Ns."""
    _, _, Vh = np.linalg.svd(H)
    V = np.swapaxes(Vh.conj(), -1, -2)[..., :n_streams]
    return _normalize(V, n_streams)


def design_precoders(H, H_si, W_bs, steering, n_streams, tau_t, method="proposed",
                     ridge=None, tol=None) -> PrecoderSet:
    """Fully digital per-subcarrier precoders for one of ``METHODS``.

    ``H`` is the stacked downlink (M, N_MS, N_BS); ``W_bs`` the BS combiner
    defining the SI covariance (only used by ``proposed``); ``tau_t`` an
    absolute transmit-gain amplitude.
    """
    H = np.asarray(H)
    M, _, n_bs = H.shape
    if method == "optimal_svd":
        F = optimal_svd_precoders(H, n_streams)
        return PrecoderSet(F, np.ones(M), method)
    if method == "proposed":
        C = si_covariance(H_si, W_bs)
    elif method == "coherent_eigenvector":
        C = np.zeros((n_bs, n_bs), dtype=complex)
    else:
        raise ValueError(f"unknown precoding method {method!r}; expected one of {METHODS}")
    if ridge is None:
        ridge = default_ridge(C)
    A = np.swapaxes(H.conj(), -1, -2) @ H
    F_gev = gev_top_k_batch(A, C, n_streams, ridge)
    f = target_beam(steering, C, ridge)
    F, kappa, infeasible = coherent_combine(F_gev, f, steering, tau_t, tol)
    return PrecoderSet(F, kappa, method, infeasible)
