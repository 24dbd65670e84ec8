import numpy as np
import pytest

from bhf.errors import DomainError, ParameterError
from bhf.quasifree import (density_block, gamma_from_pair, gibbs_trace,
                           pureness_residual, pureness_tolerance, sample_mixed,
                           sample_pure, sample_squeeze, state_from_squeeze, takagi)


def random_symmetric(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a + a.T


def test_takagi_zero():
    U, s = takagi(np.zeros((4, 4)))
    assert np.array_equal(U, np.eye(4))
    assert not s.any()


def test_takagi_real_symmetric(rng):
    b = rng.standard_normal((7, 7))
    b = b + b.T
    U, s = takagi(b)
    ev = np.linalg.eigvalsh(b)
    assert np.allclose(s, np.sort(np.abs(ev))[::-1], atol=1e-12)
    # columns are real up to a phase (i for negative eigenvalues)
    for col in U.T:
        j = np.argmax(np.abs(col))
        rephased = col * np.conj(col[j]) / abs(col[j])
        assert np.abs(rephased.imag).max() < 1e-12
    assert np.linalg.norm(U * s @ U.T - b) < 1e-12 * np.linalg.norm(b)


@pytest.mark.parametrize("n", [1, 3, 12, 40])
def test_takagi_random(rng, n):
    r = random_symmetric(rng, n)
    U, s = takagi(r)
    assert np.all(s >= 0) and np.all(np.diff(s) <= 0)
    assert np.linalg.norm(U.conj().T @ U - np.eye(n)) < 1e-12
    assert np.linalg.norm(U * s @ U.T - r) <= 1e-10 * np.linalg.norm(r)


def test_takagi_degenerate_and_rank_deficient(rng):
    Q = np.linalg.qr(rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6)))[0]
    r = Q @ np.diag([2.0, 2.0, 2.0, 1.0, 0.0, 0.0]) @ Q.T
    U, s = takagi(r)
    assert np.allclose(s, [2, 2, 2, 1, 0, 0], atol=1e-12)
    assert np.linalg.norm(U.conj().T @ U - np.eye(6)) < 1e-12
    assert np.linalg.norm(U * s @ U.T - r) < 1e-12


def test_takagi_rejects_non_symmetric():
    with pytest.raises(ParameterError):
        takagi(np.array([[0, 1], [0, 0]]))


def test_coherent_state_from_zero_kernel():
    st = state_from_squeeze(np.ones(3), np.zeros((3, 3)))
    assert not st.gamma.any() and not st.t.any() and st.pure


def test_single_mode_squeeze():
    s = 0.37
    r = np.diag([s, 0, 0]).astype(complex)
    st = state_from_squeeze(np.zeros(3), r)
    assert st.gamma[0, 0].real == pytest.approx(0.5 * (np.cosh(2 * s) - 1), rel=1e-14)
    assert st.t[0, 0].real == pytest.approx(0.5 * np.sinh(2 * s), rel=1e-14)
    g = st.gamma[0, 0].real
    assert g + g * g == pytest.approx(0.25 * np.sinh(2 * s) ** 2, rel=1e-13)


def test_photon_number_from_takagi_values(rng):
    r = 0.2 * random_symmetric(rng, 8)
    st = state_from_squeeze(np.zeros(8), r)
    _, s = takagi(r)
    assert np.trace(st.gamma).real == pytest.approx(np.sum(0.5 * (np.cosh(2 * s) - 1)), rel=1e-12)


def test_pureness_residual_examples(rng):
    assert pureness_residual(np.zeros((2, 2)), np.zeros((2, 2))) == 0
    assert pureness_residual(np.eye(1), np.zeros((1, 1))) == pytest.approx(2)
    st = state_from_squeeze(np.zeros(10), 0.5 * random_symmetric(rng, 10))
    assert pureness_residual(st.gamma, st.t) <= pureness_tolerance(st.gamma)


def test_gamma_from_pair(rng):
    assert not gamma_from_pair(np.zeros((3, 3))).any()
    s = np.array([0.1, 0.7, 1.3])
    g = gamma_from_pair(np.diag(0.5 * np.sinh(2 * s)))
    assert np.allclose(np.diag(g), 0.5 * (np.cosh(2 * s) - 1), rtol=1e-13)
    t = 0.3 * random_symmetric(rng, 9)
    g = gamma_from_pair(t)
    assert np.linalg.eigvalsh(g).min() >= -1e-14
    assert pureness_residual(g, t) <= pureness_tolerance(g)


def test_round_trip(rng):
    r = 0.4 * random_symmetric(rng, 12)
    st = state_from_squeeze(np.zeros(12), r)
    back = gamma_from_pair(st.t)
    assert np.linalg.norm(back - st.gamma) <= 1e-10 * np.linalg.norm(st.gamma)


def test_series_agrees_for_small_kernel(rng):
    # (cosh 2r - 1)/2 z as a power series in the antilinear map z -> r conj(z)
    r = 0.05 * random_symmetric(rng, 5)
    z = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    st = state_from_squeeze(np.zeros(5), r)

    def apply(v):
        return r @ np.conj(v)

    total = np.zeros(5, complex)
    term = z.copy()
    fact = 1.0
    for n in range(1, 12):
        term = apply(apply(term))
        fact *= (2 * n - 1) * (2 * n)
        total += 0.5 * 2 ** (2 * n) * term / fact
    assert np.linalg.norm(total - st.gamma @ z) < 1e-14 * np.linalg.norm(z) * 10


def test_samplers(tiny_grid):
    a = sample_pure(7, 0.1, tiny_grid)
    b = sample_pure(7, 0.1, tiny_grid)
    assert np.array_equal(a.f, b.f) and np.array_equal(a.gamma, b.gamma)
    assert pureness_residual(a.gamma, a.t) <= 1e-10
    tiny = sample_pure(7, 1e-12, tiny_grid)
    assert np.abs(tiny.f).max() < 1e-10 and np.abs(tiny.gamma).max() < 1e-20
    with pytest.raises(ParameterError):
        sample_pure(0, 0.0, tiny_grid)


def test_mixed_sampler(tiny_grid):
    same = sample_mixed(4, 0.1, tiny_grid, mix=0.0)
    pure = sample_pure(4, 0.1, tiny_grid)
    assert same.pure and np.array_equal(same.gamma, pure.gamma)
    for seed in range(10):
        st = sample_mixed(seed, 0.2, tiny_grid)
        assert not st.pure
        assert np.linalg.eigvalsh(density_block(st.gamma, st.t)).min() >= -1e-10
        assert np.linalg.eigvalsh(st.gamma).min() >= -1e-14
        assert pureness_residual(st.gamma, st.t) > 0


def test_pure_block_positive(rng):
    for seed in range(5):
        f, r = sample_squeeze(seed, 0.3, 10)
        st = state_from_squeeze(f, r)
        assert np.linalg.eigvalsh(st.block_matrix()).min() >= -1e-10


def test_gibbs_trace():
    assert gibbs_trace([]) == 1
    assert gibbs_trace([0, 0]) == 1
    assert gibbs_trace([0.5]) == pytest.approx(2)
    assert gibbs_trace([0.5, 1 / 3]) == pytest.approx(3)
    with pytest.raises(DomainError):
        gibbs_trace([0.2, 1.0])
