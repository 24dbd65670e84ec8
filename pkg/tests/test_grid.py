import numpy as np
import pytest

from bhf.errors import ParameterError
from bhf.grid import (analytic_g_norm2, build_grid, coupling_field, g_norm2,
                      polarization_frame, random_gauge, shell_volume)


def test_node_count_and_weight_sum():
    grid = build_grid(1, 2, 8, 26)
    assert len(grid) == 416
    # both polarizations of a shell of volume 4pi/3 (8 - 1)
    assert grid.weights.sum() == pytest.approx(58.64306286700947, rel=1e-13)
    assert grid.weights.sum() == pytest.approx(2 * shell_volume(1, 2), rel=1e-13)


def test_nodes_inside_shell_and_paired():
    grid = build_grid(0, 1, 8, 26)
    assert grid.knorm.min() > 0
    assert grid.knorm.max() < 1
    assert np.all(grid.weights > 0)
    assert np.array_equal(grid.k[0::2], grid.k[1::2])
    assert set(grid.tau[0::2]) == {1} and set(grid.tau[1::2]) == {-1}


@pytest.mark.parametrize("args", [(-0.1, 1, 4, 6), (1, 1, 4, 6), (2, 1, 4, 6),
                                  (0, 1, 1, 6), (0, 1, 4, 7)])
def test_invalid_parameters(args):
    with pytest.raises(ParameterError):
        build_grid(*args)


@pytest.mark.parametrize("khat", [(0, 0, 1), (0, 0, -1), (1, 0, 0), (0.6, 0.0, 0.8)])
def test_frame_right_handed(khat):
    khat = np.array(khat, float)
    ep, em = polarization_frame(khat)
    F = np.array([ep, em, khat])
    assert np.allclose(F @ F.T, np.eye(3), atol=1e-14)
    assert np.linalg.det(F) == pytest.approx(1.0, abs=1e-14)


def test_frame_deterministic_and_rejects_non_unit():
    k = np.array([0.0, 0.6, 0.8])
    a, b = polarization_frame(k), polarization_frame(k)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    with pytest.raises(ParameterError):
        polarization_frame([0, 0, 2])


def test_frame_completeness(rng):
    for _ in range(20):
        khat = rng.standard_normal(3)
        khat /= np.linalg.norm(khat)
        ep, em = polarization_frame(khat)
        v = rng.standard_normal(3)
        assert (ep @ v) ** 2 + (em @ v) ** 2 == pytest.approx(v @ v - (khat @ v) ** 2, abs=1e-12)


def test_grid_frames_orthonormal(desk_grid):
    F = desk_grid.frames
    gram = np.einsum("nij,nkj->nik", F, F)
    assert np.abs(gram - np.eye(3)).max() < 1e-13
    assert np.abs(np.linalg.det(F) - 1).max() < 1e-13
    assert np.allclose(F[:, 2], desk_grid.khat, atol=1e-14)


def test_coupling_field_values():
    grid = build_grid(1, 2, 8, 26)
    assert not coupling_field(grid, 0.0).any()
    G = coupling_field(grid, 0.1)
    assert G.dtype == float and G.shape == (3, 416)
    assert g_norm2(G) == pytest.approx(0.12 * np.pi, rel=1e-12)
    expected = np.sqrt(grid.weights) * 0.1 / np.sqrt(grid.knorm)
    assert np.allclose(G.T, grid.pol * expected[:, None])
    # transverse: G_j^* K_j f vanishes for every f
    assert np.abs(np.einsum("ja,aj->a", G, grid.k)).max() < 1e-15


def test_analytic_g_norm2():
    assert analytic_g_norm2(0.1, 1, 2) == pytest.approx(0.3769911184307752, rel=1e-14)
    assert analytic_g_norm2(0.3, 1.5, 1.5) == 0
    assert analytic_g_norm2(1, 0, 1) == pytest.approx(4 * np.pi)


def _pair_sums(grid):
    F = grid.frames[0::2]
    khat = F[:, 2]
    dots = np.einsum("aij,bkj->abik", F[:, :2], F[:, :2])
    return (dots**2).sum(axis=(2, 3)), 1 + (khat @ khat.T) ** 2


def test_polarization_completeness_pairs(desk_grid):
    lhs, rhs = _pair_sums(desk_grid)
    assert np.abs(lhs - rhs).max() < 1e-12


def test_gauge_rotation_invariance(desk_grid):
    rot = random_gauge(desk_grid, seed=3)
    assert not np.allclose(rot.frames, desk_grid.frames)
    lhs, rhs = _pair_sums(rot)
    assert np.abs(lhs - rhs).max() < 1e-12
    assert g_norm2(coupling_field(rot, 0.3)) == pytest.approx(
        g_norm2(coupling_field(desk_grid, 0.3)), abs=1e-12)
    F = rot.frames
    assert np.abs(np.linalg.det(F) - 1).max() < 1e-13


def test_quadrature_convergence_monotone():
    # ||G||^2 has a polynomial radial integrand, which Gauss-Legendre already
    # integrates exactly; the refinement check uses the rational c22 integrand
    exact = 8 * np.pi / 3 * 2 * np.log(12 / 3)
    errs = []
    for nr in (2, 3, 4, 6):
        grid = build_grid(1, 10, nr, 26)
        G = coupling_field(grid, 1.0)
        errs.append(abs(np.sum(G**2 / grid.dispersion) / 3 - exact))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    for nr in (2, 4, 8):
        grid = build_grid(1, 2, nr, 14)
        assert g_norm2(coupling_field(grid, 0.1)) == pytest.approx(
            analytic_g_norm2(0.1, 1, 2), rel=1e-13)
