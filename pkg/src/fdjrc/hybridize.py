"""Hybrid analog/digital decomposition by phase-extraction alternating minimization.

One frequency-flat unit-modulus analog matrix is shared by all subcarriers;
each subcarrier gets its own digital matrix. Used for BS precoders and MS
combiners alike.

Internally the per-subcarrier targets are stacked side by side into one
``N_ant x (M Ns)`` matrix, which turns every step into a single product.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HybridFactorization:
    analog: np.ndarray      # (N_ant, N_RF), unit modulus
    digital: np.ndarray     # (M, N_RF, Ns)
    residuals: tuple        # objective after each accepted digital step
    converged: bool

    def effective(self):
        """All effective matrices ``analog @ digital_m``, shape (M, N_ant, Ns)."""
        return self.analog @ self.digital

    @property
    def n_rf(self):
        return self.analog.shape[1]


def _phase(X):
    zero = np.abs(X) == 0
    if np.any(zero):
        log.debug("phase extraction hit %d zero entries; using phase 0", int(zero.sum()))
    return np.exp(1j * np.where(zero, 0.0, np.angle(X)))


def _stack(targets):
    M, n_ant, n_s = targets.shape
    return targets.transpose(1, 0, 2).reshape(n_ant, M * n_s)


def _unstack(X, M):
    r = X.shape[0]
    return X.reshape(r, M, -1).transpose(1, 0, 2)


def _initial_analog(T, n_rf):
    U, _, _ = np.linalg.svd(T, full_matrices=n_rf > min(T.shape))
    return _phase(U[:, :n_rf])


def _digital_step(analog, T):
    D = np.linalg.pinv(analog) @ T
    return D, float(np.sum(np.abs(T - analog @ D) ** 2))


def _coordinate_phase_step(analog, T, D):
    """Exact unit-modulus minimizer for one analog column at a time.

    The objective decouples over analog rows, so each column update is a
    vectorized phase extraction given the other columns.
    """
    A = analog.copy()
    G = D @ D.conj().T
    R = T @ D.conj().T
    for j in range(A.shape[1]):
        b = R[:, j] - A @ G[:, j] + A[:, j] * G[j, j]
        A[:, j] = _phase(b)
    return A


def _altmin(T, analog, max_iter, tol):
    digital, obj = _digital_step(analog, T)
    residuals = [obj]
    floor = 1e-28 * (float(np.sum(np.abs(T) ** 2)) or 1.0)
    converged = obj <= floor
    for _ in range(max_iter - 1):
        if converged:
            break
        cand = _phase(T @ digital.conj().T)
        cand_digital, cand_obj = _digital_step(cand, T)
        if cand_obj > obj:
            cand = _coordinate_phase_step(analog, T, digital)
            cand_digital, cand_obj = _digital_step(cand, T)
        if cand_obj > obj:
            # only reachable through round-off
            converged = True
            break
        decrease = (obj - cand_obj) / obj
        analog, digital, obj = cand, cand_digital, cand_obj
        residuals.append(obj)
        converged = decrease < tol or obj <= floor
    return analog, digital, residuals, converged


def pe_altmin(targets, n_rf, max_iter=200, tol=1e-6, escapes=2, analog0=None) -> HybridFactorization:
    """Factor ``targets[m] ~ analog @ digital[m]`` with a unit-modulus analog stage.

    Alternates a least-squares digital step with a phase-extraction analog
    step ``phase(sum_m targets[m] digital[m]^H)``. That step is only exact for
    semi-unitary digital matrices; when it fails to lower the objective the
    analog matrix is instead updated column by column with the exact
    unit-modulus minimizer, so ``residuals`` is non-increasing. A run stops
    when the relative decrease drops below ``tol`` or after ``max_iter``
    digital steps.

    ``escapes`` > 0 enables local-minimum escapes: after a run stalls, each
    analog column in turn is replaced by the phases of the residual's dominant
    direction and the run is repeated (``max_iter`` each); the best strictly
    improving candidate is kept. Objective values of accepted escapes are
    appended to ``residuals``.

    Final digital matrices are rescaled so every effective matrix keeps the
    Frobenius power of its target.
    """
    targets = np.asarray(targets, dtype=complex)
    if targets.ndim == 2:
        targets = targets[None]
    M, n_ant, n_s = targets.shape
    if not n_s <= n_rf <= n_ant:
        raise ValueError(f"need Ns <= N_RF <= N_ant, got {n_s}, {n_rf}, {n_ant}")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    T = _stack(targets)
    analog = _initial_analog(T, n_rf) if analog0 is None else _phase(analog0)
    analog, digital, residuals, converged = _altmin(T, analog, max_iter, tol)
    floor = 1e-28 * (float(np.sum(np.abs(T) ** 2)) or 1.0)
    for _ in range(escapes):
        if residuals[-1] <= floor:
            break
        R = T - analog @ digital
        u = np.linalg.svd(R, full_matrices=False)[0][:, 0]
        best = None
        for j in range(n_rf):
            A = analog.copy()
            A[:, j] = _phase(u)
            cand = _altmin(T, A, max_iter, tol)
            if best is None or cand[2][-1] < best[2][-1]:
                best = cand
        if best[2][-1] >= residuals[-1] * (1 - 1e-9):
            break
        analog, digital, converged = best[0], best[1], best[3]
        residuals.append(best[2][-1])

    digital = _unstack(digital, M)
    target_pow = np.linalg.norm(targets, axis=(1, 2))
    eff_pow = np.linalg.norm(analog @ digital, axis=(1, 2))
    scale = np.divide(target_pow, eff_pow, out=np.zeros_like(eff_pow), where=eff_pow > 0)
    digital = digital * scale[:, None, None]
    return HybridFactorization(analog, digital, tuple(residuals), bool(converged))


def apply_hybrid(fact: HybridFactorization, m):
    if not 0 <= m < fact.digital.shape[0]:
        raise IndexError(f"subcarrier {m} outside [0, {fact.digital.shape[0]})")
    return fact.analog @ fact.digital[m]
