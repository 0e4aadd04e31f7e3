"""Dense numeric primitives shared by the design and radar modules.

Everything here is a pure function of its inputs. Matrices are plain
``numpy`` complex arrays; batched variants accept leading dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla


class RegularizationError(np.linalg.LinAlgError):
    """Raised when a regularized metric matrix is still numerically singular."""


@dataclass(frozen=True)
class EigPair:
    values: np.ndarray   # real, descending
    vectors: np.ndarray  # column k pairs with values[k]


def _check_square(A, name="A"):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {A.shape}")
    return A


def _check_hermitian(A, name="A", rtol=1e-10):
    scale = max(np.linalg.norm(A), 1.0)
    if np.linalg.norm(A - A.conj().T) > rtol * scale:
        raise ValueError(f"{name} is not Hermitian (rtol={rtol:g})")


def herm_eig(A) -> EigPair:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending."""
    A = _check_square(A)
    _check_hermitian(A)
    w, V = np.linalg.eigh(A)
    return EigPair(values=w[::-1].copy(), vectors=V[:, ::-1].copy())


def default_ridge(C) -> float:
    """Scale-aware diagonal loading for a PSD metric matrix."""
    C = np.asarray(C)
    n = C.shape[-1]
    tr = float(np.real(np.trace(C)))
    if tr <= 0.0:
        return 1e-8
    return 1e-8 * tr / n


def whitener(C, ridge=None):
    """Return ``Linv`` with ``Linv (C + ridge I) Linv^H = I``.

    ``C + ridge I`` is Cholesky-factored. A ``RegularizationError`` is raised
    when its eigenvalue spread exceeds 1e14.
    """
    C = _check_square(C, "C")
    _check_hermitian(C, "C")
    n = C.shape[0]
    if ridge is None:
        ridge = default_ridge(C)
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    Cr = C + ridge * np.eye(n)
    ev = np.linalg.eigvalsh(Cr)
    if ev[-1] <= 0 or ev[0] < 1e-14 * ev[-1]:
        raise RegularizationError(
            f"C + ridge*I is numerically singular (min eig {ev[0]:.3e}, "
            f"max eig {ev[-1]:.3e}); increase ridge (currently {ridge:.3e})")
    L = np.linalg.cholesky(Cr)
    return sla.solve_triangular(L, np.eye(n, dtype=complex), lower=True)


def gev(A, C, ridge=None) -> EigPair:
    """Full generalized eigendecomposition of the pencil (A, C + ridge I).

    Vectors are normalized so that ``V^H (C + ridge I) V = I``.
    """
    A = _check_square(A)
    _check_hermitian(A)
    Linv = whitener(C, ridge)
    if Linv.shape != A.shape:
        raise ValueError(f"A {A.shape} and C {Linv.shape} differ in size")
    M = Linv @ A @ Linv.conj().T
    M = 0.5 * (M + M.conj().T)
    w, V = np.linalg.eigh(M)
    return EigPair(values=w[::-1].copy(), vectors=Linv.conj().T @ V[:, ::-1])


def gev_top_k(A, C, k, ridge=None):
    """Top-``k`` generalized eigenvectors of (A, C + ridge I), shape (n, k).

    Columns satisfy ``A F = (C + ridge I) F diag(lam)`` and
    ``F^H (C + ridge I) F = I``.
    """
    n = np.shape(A)[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    return gev(A, C, ridge).vectors[:, :k]


def gev_top_k_batch(A, C, k, ridge=None):
    """Batched ``gev_top_k`` over a stack ``A`` of shape (M, n, n) with one C."""
    A = np.asarray(A)
    Linv = whitener(C, ridge)
    M = Linv @ A @ Linv.conj().T
    M = 0.5 * (M + np.swapaxes(M.conj(), -1, -2))
    _, V = np.linalg.eigh(M)
    return Linv.conj().T @ V[..., ::-1][..., :k]


def svd_truncated(H, k):
    """Leading ``k`` singular triplets: ``H v_i = s_i u_i``.

    Returns ``(U, s, V)`` with ``U`` (n, k), ``s`` descending, ``V`` (m, k).
    """
    H = np.asarray(H)
    if H.ndim != 2:
        raise ValueError("H must be 2-D")
    if not 1 <= k <= min(H.shape):
        raise ValueError(f"k={k} outside [1, {min(H.shape)}]")
    U, s, Vh = np.linalg.svd(H, full_matrices=False)
    return U[:, :k], s[:k], Vh[:k].conj().T


def pinv(A, rcond=1e-12):
    return np.linalg.pinv(A, rcond=rcond)


def dft_padded_2d(Z, Mbar, Nbar):
    """Zero-padded range/Doppler transform of an M x N subcarrier/symbol matrix.

    ``out[mb, nb] = sum_{m,n} Z[m,n] exp(+j2pi m mb/Mbar) exp(-j2pi n nb/Nbar)``,
    i.e. a forward DFT over symbols followed by an (unnormalized) inverse DFT
    over subcarriers.
    """
    Z = np.asarray(Z)
    if Z.ndim != 2:
        raise ValueError("Z must be 2-D")
    M, N = Z.shape
    if Mbar < M or Nbar < N:
        raise ValueError(f"padded size ({Mbar}, {Nbar}) smaller than input ({M}, {N})")
    out = np.fft.fft(Z, n=Nbar, axis=1)
    out = np.fft.ifft(out, n=Mbar, axis=0)
    out *= Mbar
    return out


def idft_padded(z, Mbar):
    """1-D counterpart over subcarriers: ``sum_m z[m] exp(+j2pi m mb/Mbar)``."""
    z = np.asarray(z)
    if Mbar < z.shape[0]:
        raise ValueError("Mbar smaller than input length")
    return Mbar * np.fft.ifft(z, n=Mbar, axis=0)
