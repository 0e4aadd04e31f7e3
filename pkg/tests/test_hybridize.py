import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fdjrc import hybridize as hy
from fdjrc import txdesign as tx
from fdjrc.propagation import ula_response

from conftest import crandn, small_channels


def unit_modulus(rng, *shape):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, shape))


def rel_residual(fact, targets):
    T = np.asarray(targets)
    # before power rescaling the residual tuple is in absolute units
    return fact.residuals[-1] / np.sum(np.abs(T) ** 2)


def test_square_analog_is_exact(rng):
    T = crandn(rng, 3, 6, 2)
    fact = hy.pe_altmin(T, 6, analog0=unit_modulus(rng, 6, 6))
    assert rel_residual(fact, T) <= 1e-6
    np.testing.assert_allclose(fact.effective(), T, atol=1e-6 * np.abs(T).max())


def test_rank_one_closed_form(rng):
    f = crandn(rng, 8, 1)
    fact = hy.pe_altmin(f[None], 1)
    mag = np.abs(f[:, 0])
    expected = np.sum((mag - mag.mean()) ** 2)
    assert fact.residuals[0] == pytest.approx(expected, rel=1e-10)
    # analog equals the phases of f up to one common phase
    ratio = fact.analog[:, 0] / np.exp(1j * np.angle(f[:, 0]))
    np.testing.assert_allclose(ratio, ratio[0], atol=1e-10)
    # rescaled digital scalar keeps the target power
    assert abs(fact.digital[0, 0, 0]) * np.sqrt(8) == pytest.approx(np.linalg.norm(f), rel=1e-12)


def test_invariants_on_random_targets(rng):
    T = crandn(rng, 5, 16, 2)
    fact = hy.pe_altmin(T, 4)
    np.testing.assert_allclose(np.abs(fact.analog), 1.0, atol=1e-12)
    assert np.all(np.diff(fact.residuals) <= 0)
    np.testing.assert_allclose(np.linalg.norm(fact.effective(), axis=(1, 2)),
                               np.linalg.norm(T, axis=(1, 2)), rtol=1e-10)
    assert fact.n_rf == 4


def test_apply_hybrid(rng):
    T = crandn(rng, 3, 4, 2)
    fact = hy.pe_altmin(T, 4, analog0=np.eye(4) + 0j + (np.eye(4) == 0))
    for m in range(3):
        np.testing.assert_allclose(hy.apply_hybrid(fact, m), fact.analog @ fact.digital[m])
        assert np.linalg.norm(hy.apply_hybrid(fact, m)) ** 2 == pytest.approx(
            np.linalg.norm(T[m]) ** 2, rel=1e-10)
    with pytest.raises(IndexError):
        hy.apply_hybrid(fact, 3)


def test_apply_hybrid_identity_analog():
    digital = np.arange(8, dtype=complex).reshape(1, 2, 4)[:, :, :2] + 1
    fact = hy.HybridFactorization(np.eye(2, dtype=complex), digital, (0.0,), True)
    np.testing.assert_allclose(hy.apply_hybrid(fact, 0), digital[0])


def test_shape_errors(rng):
    with pytest.raises(ValueError):
        hy.pe_altmin(crandn(rng, 2, 8, 3), 2)
    with pytest.raises(ValueError):
        hy.pe_altmin(crandn(rng, 2, 8, 2), 2, max_iter=0)


def test_zero_entries_fall_back_to_phase_zero():
    T = np.zeros((1, 4, 1), dtype=complex)
    T[0, 0, 0] = 1.0
    fact = hy.pe_altmin(T, 1)
    np.testing.assert_allclose(np.abs(fact.analog), 1.0)
    assert np.all(np.isfinite(fact.digital))


@pytest.mark.parametrize("n_s,extra", [(1, 0), (1, 2), (2, 1), (3, 0), (3, 1)])
@pytest.mark.parametrize("seed", range(6))
def test_hybrid_form_targets_recovered(seed, n_s, extra):
    # seeded sample: PE-AltMin is a local method and has rare exact-hybrid
    # instances where it stalls (see the decisions ledger)
    rng = np.random.default_rng(seed)
    n_rf = n_s + extra
    A = unit_modulus(rng, 16, n_rf)
    T = A @ crandn(rng, 4, n_rf, n_s)
    fact = hy.pe_altmin(T, n_rf, max_iter=200)
    assert rel_residual(fact, T) <= 1e-4
    assert np.all(np.diff(fact.residuals) <= 0)
    np.testing.assert_allclose(np.abs(fact.analog), 1.0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(0, 2))
def test_residuals_monotone_and_unit_modulus(seed, n_s, extra):
    rng = np.random.default_rng(seed)
    T = crandn(rng, 3, 12, n_s)
    fact = hy.pe_altmin(T, n_s + extra, max_iter=50, escapes=1)
    assert np.all(np.diff(fact.residuals) <= 0)
    np.testing.assert_allclose(np.abs(fact.analog), 1.0, atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**16))
def test_decomposition_does_not_improve_si(seed):
    _, ch = small_channels(seed, n_bs=32, n_ms=16, M=4)
    a = ula_response(ch.bs, np.deg2rad(35))
    W = np.tile(a[:, None], (1, 4))
    P = tx.design_precoders(ch.downlink, ch.si, W, a, 4, np.sqrt(0.3 * 32), "proposed")
    F_hyb = hy.pe_altmin(P.matrices, 4).effective()
    dig = np.linalg.norm(np.einsum("ir,ij,mjs->mrs", W.conj(), ch.si, P.matrices), axis=(1, 2))
    hyb = np.linalg.norm(np.einsum("ir,ij,mjs->mrs", W.conj(), ch.si, F_hyb), axis=(1, 2))
    assert np.all(hyb >= dig - 1e-12)
