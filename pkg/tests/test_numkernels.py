import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fdjrc import numkernels as nk

from conftest import crandn, rand_herm, rand_psd


def test_herm_eig_identity():
    e = nk.herm_eig(np.eye(3))
    np.testing.assert_allclose(e.values, [1, 1, 1])
    np.testing.assert_allclose(e.vectors.conj().T @ e.vectors, np.eye(3), atol=1e-12)


def test_herm_eig_diagonal_sorted():
    e = nk.herm_eig(np.diag([3.0, 1.0, 2.0]))
    np.testing.assert_allclose(e.values, [3, 2, 1])


def test_herm_eig_reconstruction(rng):
    A = rand_herm(rng, 8)
    e = nk.herm_eig(A)
    R = e.vectors @ np.diag(e.values) @ e.vectors.conj().T
    assert np.linalg.norm(R - A) <= 1e-8 * np.linalg.norm(A)
    assert np.all(np.diff(e.values) <= 0)
    np.testing.assert_allclose(A @ e.vectors, e.vectors * e.values, atol=1e-8 * np.linalg.norm(A))


def test_herm_eig_rejects_bad_input():
    with pytest.raises(ValueError):
        nk.herm_eig(np.ones((2, 3)))
    with pytest.raises(ValueError):
        nk.herm_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_gev_identity_metric_is_plain_eig(rng):
    A = rand_psd(rng, 6)
    F = nk.gev_top_k(A, np.eye(6), 2, ridge=0.0)
    V = nk.herm_eig(A).vectors[:, :2]
    # same subspace
    P1 = F @ np.linalg.pinv(F)
    P2 = V @ V.conj().T
    assert np.linalg.norm(P1 - P2) < 1e-8


def test_gev_rank_one(rng):
    a = crandn(rng, 5)
    f = nk.gev_top_k(np.outer(a, a.conj()), np.eye(5), 1, ridge=0.0)[:, 0]
    assert abs(abs(np.vdot(f, a)) - np.linalg.norm(f) * np.linalg.norm(a)) < 1e-10


def test_gev_matches_inverse_pencil(rng):
    n, k = 8, 3
    A, C = rand_psd(rng, n), rand_psd(rng, n)
    ridge = nk.default_ridge(C)
    Cr = C + ridge * np.eye(n)
    F = nk.gev_top_k(A, C, k)
    w, V = np.linalg.eig(np.linalg.inv(Cr) @ A)
    order = np.argsort(-w.real)
    lam = w.real[order[:k]]
    np.testing.assert_allclose(A @ F, Cr @ F * lam, atol=1e-8 * np.linalg.norm(A @ F))
    np.testing.assert_allclose(F.conj().T @ Cr @ F, np.eye(k), atol=1e-8)


def test_gev_singular_metric_raises():
    C = np.zeros((4, 4))
    C[0, 0] = 1.0
    with pytest.raises(nk.RegularizationError, match="ridge"):
        nk.gev_top_k(np.eye(4), C, 1, ridge=0.0)


def test_default_ridge():
    assert nk.default_ridge(np.zeros((3, 3))) == 1e-8
    assert nk.default_ridge(4 * np.eye(2)) == pytest.approx(4e-8)


def test_gev_top_k_batch_matches_single(rng):
    C = rand_psd(rng, 6, rank=2)
    A = np.stack([rand_psd(rng, 6) for _ in range(3)])
    Fb = nk.gev_top_k_batch(A, C, 2, ridge=1e-3)
    for m in range(3):
        Fs = nk.gev_top_k(A[m], C, 2, ridge=1e-3)
        # equal up to per-column phase
        ph = np.sum(Fs.conj() * Fb[m], axis=0)
        np.testing.assert_allclose(np.abs(ph), np.linalg.norm(Fs, axis=0) ** 2, rtol=1e-8)


def test_svd_truncated_examples(rng):
    U, s, V = nk.svd_truncated(np.diag([2.0, 1.0]), 2)
    np.testing.assert_allclose(s, [2, 1])
    u, v = crandn(rng, 4), crandn(rng, 3)
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    _, s, _ = nk.svd_truncated(3.0 * np.outer(u, v.conj()), 3)
    np.testing.assert_allclose(s, [3, 0, 0], atol=1e-12)


def test_svd_truncated_reconstruction(rng):
    H = crandn(rng, 16, 32)
    U, s, V = nk.svd_truncated(H, 16)
    assert np.linalg.norm(H - U @ np.diag(s) @ V.conj().T) <= 1e-8 * np.linalg.norm(H)
    np.testing.assert_allclose(H @ V, U * s, atol=1e-8)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(16), atol=1e-10)
    with pytest.raises(ValueError):
        nk.svd_truncated(H, 17)


def test_dft_zero_and_tone():
    M, N, Mbar, Nbar = 8, 4, 32, 16
    assert not np.any(nk.dft_padded_2d(np.zeros((M, N)), Mbar, Nbar))
    k, l = 5, 3
    m, n = np.arange(M)[:, None], np.arange(N)[None, :]
    Z = np.exp(-2j * np.pi * m * k / Mbar) * np.exp(2j * np.pi * n * l / Nbar)
    out = np.abs(nk.dft_padded_2d(Z, Mbar, Nbar))
    assert np.unravel_index(np.argmax(out), out.shape) == (k, l)
    assert out[k, l] == pytest.approx(M * N)
    assert np.sum(out >= out[k, l] * (1 - 1e-9)) == 1


def naive_dft2(Z, Mbar, Nbar):
    M, N = Z.shape
    out = np.zeros((Mbar, Nbar), dtype=complex)
    for mb in range(Mbar):
        for nb in range(Nbar):
            for m in range(M):
                for n in range(N):
                    out[mb, nb] += Z[m, n] * np.exp(2j * np.pi * m * mb / Mbar) * np.exp(-2j * np.pi * n * nb / Nbar)
    return out


def test_dft_matches_double_sum(rng):
    Z = crandn(rng, 8, 4)
    np.testing.assert_allclose(nk.dft_padded_2d(Z, 16, 8), naive_dft2(Z, 16, 8), atol=1e-9)


def test_dft_rejects_small_padding():
    with pytest.raises(ValueError):
        nk.dft_padded_2d(np.zeros((4, 4)), 3, 4)
    with pytest.raises(ValueError):
        nk.idft_padded(np.zeros(4), 3)


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_gev_rayleigh_quotient_bound(seed):
    rng = np.random.default_rng(seed)
    n = 6
    A, C = rand_psd(rng, n), rand_psd(rng, n, rank=3)
    ridge = 1e-3
    Cr = C + ridge * np.eye(n)
    f = nk.gev_top_k(A, C, 1, ridge)[:, 0]
    lam = np.real(f.conj() @ A @ f) / np.real(f.conj() @ Cr @ f)
    V = crandn(rng, n, 1000)
    q = np.real(np.sum(V.conj() * (A @ V), 0)) / np.real(np.sum(V.conj() * (Cr @ V), 0))
    assert np.max(q) <= lam * (1 + 1e-8)


@settings(max_examples=25, deadline=None)
@given(seeds, st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_dft_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    Z1, Z2 = crandn(rng, 6, 3), crandn(rng, 6, 3)
    lhs = nk.dft_padded_2d(a * Z1 + b * Z2, 12, 9)
    rhs = a * nk.dft_padded_2d(Z1, 12, 9) + b * nk.dft_padded_2d(Z2, 12, 9)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * (1 + abs(a) + abs(b)) * 100)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(2, 10))
def test_herm_eig_reconstruction_property(seed, n):
    A = rand_herm(np.random.default_rng(seed), n)
    e = nk.herm_eig(A)
    R = e.vectors @ np.diag(e.values) @ e.vectors.conj().T
    assert np.linalg.norm(R - A) <= 1e-8 * max(np.linalg.norm(A), 1e-300)
    np.testing.assert_allclose(e.vectors.conj().T @ e.vectors, np.eye(n), atol=1e-10)
