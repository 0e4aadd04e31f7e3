"""Communication and sensing figures of merit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numkernels import pinv
from .propagation import target_phase


@dataclass(frozen=True)
class LinkBudget:
    tx_power: float       # W
    noise_ms: float       # W
    noise_bs: float       # W
    si_power: float       # linear rho
    n_streams: int

    def __post_init__(self):
        if min(self.tx_power, self.noise_ms, self.noise_bs) <= 0:
            raise ValueError("powers must be positive")
        if self.si_power < 0:
            raise ValueError("si_power must be >= 0")
        if self.n_streams < 1:
            raise ValueError("n_streams must be >= 1")


def spectral_efficiency(H, F, W, budget: LinkBudget):
    """Per-subcarrier spectral efficiency in bits/s/Hz.

    ``log2 det(I + P/(sigma^2 Ns) W^+ H F F^H H^H W)``, W^+ the pseudoinverse.
    """
    H, F, W = np.asarray(H), np.asarray(F), np.asarray(W)
    if np.linalg.matrix_rank(W) < W.shape[1]:
        raise np.linalg.LinAlgError(f"MS combiner W ({W.shape}) is rank deficient")
    HF = H @ F
    G = pinv(W) @ HF @ HF.conj().T @ W
    snr = budget.tx_power / (budget.noise_ms * budget.n_streams)
    sign, logdet = np.linalg.slogdet(np.eye(G.shape[0]) + snr * G)
    return float(logdet / np.log(2))


def mean_spectral_efficiency(Hs, Fs, Ws, budget: LinkBudget):
    """Average of ``spectral_efficiency`` over the leading subcarrier axis."""
    return float(np.mean([spectral_efficiency(H, F, W, budget) for H, F, W in zip(Hs, Fs, Ws)]))


def tx_radar_gain(F, steering):
    """``|F[:, k]^H a|`` for each column k."""
    return np.abs(np.asarray(F).conj().T @ steering)


def rx_radar_gain(W, steering):
    return np.abs(np.asarray(W).conj().T @ steering)


def tx_gain_threshold(fraction, n_bs, semantics="power"):
    """Absolute transmit-gain amplitude for a threshold given as a fraction of N_BS.

    ``amplitude``: the fraction multiplies N_BS directly.
    ``power``: the squared gain of a unit-power column must reach
    ``fraction * N_BS`` (the unit-norm Cauchy-Schwarz ceiling is N_BS).
    """
    if semantics == "amplitude":
        return fraction * n_bs
    if semantics == "power":
        return float(np.sqrt(fraction * n_bs))
    raise ValueError(f"unknown gain_semantics {semantics!r}; expected 'amplitude' or 'power'")


@dataclass(frozen=True)
class SinrTerms:
    """Energy terms of the radar SINR, per chain (columns) and subcarrier (rows).

    ``signal`` and ``si`` exclude the ``P/Ns`` and ``P rho/Ns`` factors so that
    a sweep over rho or P reuses them.
    """

    signal: np.ndarray   # (M, N_RF)
    si: np.ndarray       # (M, N_RF)
    wnorm2: np.ndarray   # (N_RF,)

    def sinr(self, budget: LinkBudget):
        """Returns (aggregate over subcarriers, per-subcarrier), both per chain."""
        p = budget.tx_power / budget.n_streams
        num = p * self.signal
        den = p * budget.si_power * self.si + budget.noise_bs * self.wnorm2
        return num.sum(0) / den.sum(0), num / den


def sinr_terms(W, channels, precoders, symbol=0):
    """Evaluate ``||w^H H_t(m, n) F_m||^2`` and ``||w^H H_SI F_m||^2`` for all m."""
    W = np.asarray(W)
    F = np.asarray(precoders)
    M = F.shape[0]
    si = np.einsum("ic,ij,mjs->mcs", W.conj(), channels.si, F)
    si_e = np.sum(np.abs(si) ** 2, axis=-1)
    if channels.targets:
        A = channels.target_steering()                     # (K, n)
        c = target_phase(channels.targets, np.arange(M), symbol,
                         channels.subcarrier_spacing, channels.symbol_duration)  # (M, K)
        wa = W.conj().T @ A.T                              # (N_RF, K)
        aF = np.einsum("kj,mjs->mks", A.conj(), F)         # (M, K, Ns)
        sig = np.einsum("mk,ck,mks->mcs", c, wa, aF)
        sig_e = np.sum(np.abs(sig) ** 2, axis=-1)
    else:
        sig_e = np.zeros_like(si_e)
    return SinrTerms(sig_e, si_e, np.sum(np.abs(W) ** 2, axis=0))


def radar_sinr(W, channels, precoders, budget: LinkBudget, chain, symbol=0):
    """Radar SINR at one receive RF chain.

    Returns ``(aggregate, per_subcarrier)``; the aggregate divides summed
    signal energy by summed SI-plus-noise energy over subcarriers.
    """
    W = np.asarray(W)
    if not 0 <= chain < W.shape[1]:
        raise IndexError(f"chain {chain} outside [0, {W.shape[1]})")
    agg, per = sinr_terms(W[:, [chain]], channels, precoders, symbol).sinr(budget)
    return float(agg[0]), per[:, 0]
