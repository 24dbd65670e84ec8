"""Quasifree energy functional, its gradients and positivity decomposition.

All vectors live in weight-orthonormalized coordinates over the grid nodes.
``G`` is the ``(3, N)`` coupling field, ``K_j`` the diagonal multiplication
by the ``j``-th momentum component, ``D = |k|^2/2 + |k|``.  For a state
``(f, gamma, t)`` we write ``phi_j = G_j + K_j f``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .grid import MomentumGrid, coupling_field, g_norm2
from .quasifree import QuasifreeState, takagi


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy split into the groups of the positivity decomposition.

    ``total = (kinetic_square + field_quadratic + pairing_group)/2 + photon_energy``.
    ``momentum_trace_square`` is ``|Tr[gamma k]|^2``; together with
    ``field_quadratic`` it forms a non-negative group.  ``pairing_margin``
    holds, per component ``j``, ``Tr[(2 gamma + 1) phi_j phi_j^*]`` minus
    ``|2 Re sum conj(t) phi_j phi_j^T|``.
    """

    total: float
    kinetic_square: float
    field_quadratic: float
    pairing_group: float
    photon_energy: float
    momentum_trace_square: float = 0.0
    pairing_margin: tuple = field(default=(0.0, 0.0, 0.0))
    imag_residue: float = 0.0


def _vec3(p) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape != (3,) or not np.all(np.isfinite(p)):
        raise ParameterError("p must be a finite 3-vector")
    return p


def _check_state(grid: MomentumGrid, f, gamma=None, t=None):
    n = len(grid)
    f = np.asarray(f, dtype=complex)
    if f.shape != (n,):
        raise ParameterError(f"field has {f.shape} entries, grid has {n} nodes")
    for name, m in (("gamma", gamma), ("t", t)):
        if m is not None and np.shape(m) != (n, n):
            raise ParameterError(f"{name} must be {n}x{n}")
    return f


def field_momentum(grid: MomentumGrid, G, f, gamma=None) -> np.ndarray:
    """``Tr[gamma k] + f^* k f + 2 Re(f^* G)`` as a real 3-vector."""
    af2 = np.abs(f) ** 2
    out = grid.k.T @ af2 + 2 * (G @ f.conj()).real
    if gamma is not None:
        out = out + grid.k.T @ np.diagonal(gamma).real
    return out


def dressed_momentum(grid: MomentumGrid, g: float, p, f, gamma=None) -> np.ndarray:
    """``u = p - Tr[gamma k] - f^* k f - 2 Re(f^* G)``."""
    f = _check_state(grid, f, gamma)
    return _vec3(p) - field_momentum(grid, coupling_field(grid, g), f, gamma)


def energy(grid: MomentumGrid, g: float, p, state: QuasifreeState) -> EnergyBreakdown:
    """Energy of a quasifree state ``(f, gamma, t)``."""
    f = _check_state(grid, state.f, state.gamma, state.t)
    gamma = np.asarray(state.gamma, complex)
    t = np.asarray(state.t, complex)
    return _breakdown(grid, coupling_field(grid, g), _vec3(p), f, gamma, t)


positivity_terms = energy


def _breakdown(grid, G, p, f, gamma, t) -> EnergyBreakdown:
    k, kn, kdot = grid.k, grid.knorm, grid.kdot
    gdiag = np.diagonal(gamma)
    c = field_momentum(grid, G, f, gamma) - p
    kinetic_square = float(c @ c)

    trace_gk = k.T @ gdiag.real
    fq = (np.sum(np.abs(gamma) ** 2 * kdot) + np.sum(np.abs(t) ** 2 * kdot)
          + np.sum(kn**2 * gdiag.real))

    phi = G + k.T * f  # (3, N)
    two_g1 = 2 * gamma + np.eye(len(f))
    pair_terms = np.einsum("ja,ab,jb->j", phi, t.conj(), phi)
    dens_terms = np.einsum("ja,ab,jb->j", phi.conj(), two_g1, phi)
    pairing = float(np.sum(2 * pair_terms.real + dens_terms.real))
    margin = tuple(float(x) for x in dens_terms.real - np.abs(2 * pair_terms.real))

    photon = float(np.sum(kn * gdiag.real) + np.sum(kn * np.abs(f) ** 2))
    total = 0.5 * (kinetic_square + fq + pairing) + photon
    imag = float(abs(np.sum(gdiag.imag)) + np.abs(dens_terms.imag).sum())
    return EnergyBreakdown(
        total=float(total), kinetic_square=kinetic_square,
        field_quadratic=float(fq), pairing_group=pairing,
        photon_energy=photon, momentum_trace_square=float(trace_gk @ trace_gk),
        pairing_margin=margin, imag_residue=imag)


def vacuum_energy(grid: MomentumGrid, g: float, p) -> float:
    """``|p|^2/2 + ||G||^2/2``."""
    p = _vec3(p)
    return 0.5 * float(p @ p) + 0.5 * g_norm2(coupling_field(grid, g))


def energy_coherent(grid: MomentumGrid, g: float, p, f) -> float:
    """Energy of the coherent state with displacement ``f``."""
    f = _check_state(grid, f)
    G = coupling_field(grid, g)
    c = field_momentum(grid, G, f) - _vec3(p)
    return float(0.5 * g_norm2(G) + 0.5 * c @ c
                 + np.sum(grid.dispersion * np.abs(f) ** 2))


def grad_coherent(grid: MomentumGrid, g: float, p, f) -> np.ndarray:
    """Wirtinger gradient ``dE/d conj(f) = (D - u.k) f - u.G``.

    The first variation is ``dE = 2 Re <grad, df>``.
    """
    f = _check_state(grid, f)
    G = coupling_field(grid, g)
    u = _vec3(p) - field_momentum(grid, G, f)
    return (grid.dispersion - grid.k @ u) * f - u @ G


# ---------------------------------------------------------------- squeeze


@dataclass(frozen=True, eq=False)
class SqueezeSpectrum:
    """Takagi data of ``r`` plus the derived ``gamma`` and ``t``."""

    U: np.ndarray
    s: np.ndarray
    gamma: np.ndarray
    t: np.ndarray

    @classmethod
    def of(cls, r) -> "SqueezeSpectrum":
        U, s = takagi(r)
        sh = np.sinh(s)
        gamma = (U * sh**2) @ U.conj().T
        t = (U * (0.5 * np.sinh(2 * s))) @ U.T
        return cls(U, s, 0.5 * (gamma + gamma.conj().T), 0.5 * (t + t.T))

    def pullback(self, grad_gamma, grad_t) -> np.ndarray:
        """Chain rule from ``(gamma, t)`` to ``r``.

        ``gamma`` and ``t`` are blocks of ``h(R) = (exp(2R) - 1)/2`` with
        ``R = [[0, r], [conj(r), 0]]``.  The eigenvectors of ``R`` are
        ``[u; conj(u)]`` and ``[u; -conj(u)]`` (eigenvalues ``+s``, ``-s``), so
        the Frechet derivative follows from the divided differences of ``h``
        on that spectrum.
        """
        U, s = self.U, self.s
        n = len(s)
        a = np.concatenate([s, -s])
        lo = np.minimum.outer(a, a)
        x = 2 * np.abs(np.subtract.outer(a, a))
        safe = np.where(x > 0, x, 1.0)
        L = np.exp(2 * lo) * np.where(x > 0, np.expm1(x) / safe, 1.0)
        # blockwise V^* [[dgamma, dt], [0, 0]] V, then back-transform
        AU = grad_gamma @ U
        BU = grad_t @ U.conj()
        X = 0.5 * (U.conj().T @ (AU + BU))
        Y = 0.5 * (U.conj().T @ (AU - BU))
        W11, W12 = L[:n, :n] * X, L[:n, n:] * Y
        W21, W22 = L[n:, :n] * X, L[n:, n:] * Y
        core = (W11 + W21 - W12 - W22) + (W11 - W21 + W12 - W22).conj()
        gr = 0.5 * (U @ core @ U.T)
        return 0.5 * (gr + gr.T)


def energy_squeeze(grid: MomentumGrid, g: float, p, f, r) -> float:
    """Energy of the pure state with displacement ``f`` and squeeze kernel ``r``."""
    f = _check_state(grid, f, r)
    spectrum = SqueezeSpectrum.of(r)
    return _breakdown(grid, coupling_field(grid, g), _vec3(p), f,
                      spectrum.gamma, spectrum.t).total


def state_gradients(grid, G, p, f, gamma, t):
    """Partial derivatives of the energy with respect to ``(f, gamma, t)``.

    Returns ``(df, dgamma, dt, u)`` where ``df = dE/d conj(f)``, and
    ``dE = 2 Re<df, delta f> + Re Tr[dgamma delta gamma]
    + Re sum conj(dt) delta t``.
    """
    k, kn, kdot = grid.k, grid.knorm, grid.kdot
    u = p - field_momentum(grid, G, f, gamma)
    phi = G + k.T * f
    Mdiag = grid.dispersion - k @ u
    kgk = kdot * gamma
    dgamma = kgk + phi.T @ phi.conj() + np.diag(Mdiag)
    dt = kdot * t + phi.T @ phi
    gh = gamma + 0.5 * np.eye(len(f))
    df = (Mdiag * f + kgk @ f - u @ G
          + np.einsum("ja,ab,jb->a", k.T, gh, G)
          + np.einsum("ja,ab,jb->a", k.T, t, phi.conj()))
    return df, dgamma, dt, u


def energy_and_grad_squeeze(grid: MomentumGrid, g: float, p, f, r):
    """Energy and Riesz gradient in ``(f, r)``.

    The gradient is taken with respect to the real inner product
    ``Re<f, f'> + Re Tr[r^* r']`` on pairs of a vector and a symmetric matrix.
    Returns ``(energy, grad_f, grad_r)``.
    """
    f = _check_state(grid, f, r)
    p = _vec3(p)
    G = coupling_field(grid, g)
    spectrum = SqueezeSpectrum.of(r)
    e = _breakdown(grid, G, p, f, spectrum.gamma, spectrum.t).total
    df, dgamma, dt, _ = state_gradients(grid, G, p, f, spectrum.gamma, spectrum.t)
    return e, 2 * df, spectrum.pullback(dgamma, dt)


def grad_squeeze(grid: MomentumGrid, g: float, p, f, r):
    """Riesz gradient ``(grad_f, grad_r)`` of :func:`energy_squeeze`."""
    _, gf, gr = energy_and_grad_squeeze(grid, g, p, f, r)
    return gf, gr


def origin_curvature(grid: MomentumGrid, p):
    """Diagonal of the coupling-free Hessian at the origin.

    Returns ``(hf, hr)``: ``2(D - k.p)`` for the field and the matrix
    ``k_a.k_b + D_a + D_b - p.(k_a + k_b)`` for the squeeze kernel.
    """
    p = _vec3(p)
    kp = grid.k @ p
    d = grid.dispersion - kp
    return 2 * d, grid.kdot + d[:, None] + d[None, :]


def hessian_form_at_origin(grid: MomentumGrid, g: float, p):
    """Quadratic form ``Q(f, r)`` of the second-order Taylor term of the energy at 0.

    ``E(f, r) = E(0) + Q(f, r) + O(3)``.
    """
    p = _vec3(p)
    G = coupling_field(grid, g)
    k, kn, kdot = grid.k, grid.knorm, grid.kdot
    soft = grid.dispersion - k @ p
    xdiag = 0.5 * kn**2 + kn - k @ p

    def form(f, r) -> float:
        f = np.asarray(f, complex)
        r = np.asarray(r, complex)
        rG = r.conj() @ G.T  # (N, 3)
        cross = 2 * np.sum((rG * (k * f[:, None])).real)
        lin = 2 * (G @ f.conj()).real
        abs_r2 = np.abs(r) ** 2
        rr_diag = abs_r2.sum(axis=1)  # diagonal of r conj(r)
        val = (cross + 0.5 * lin @ lin + np.sum(np.abs(rG) ** 2)
               + 0.5 * np.sum(abs_r2 * kdot) + rr_diag @ xdiag
               + np.sum(soft * np.abs(f) ** 2))
        return float(val)

    return form
