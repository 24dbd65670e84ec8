"""Self-consistent solution of the Lagrange equations of the quasifree energy.

Unknowns are ``(f, t, gamma, lambda, u)`` where ``lambda`` is the Hermitian
multiplier of the pureness constraint ``gamma + gamma^2 = t t^*``.  With
``phi_j = G_j + K_j f`` and ``M(gamma, u) = D - k.u + sum_j K_j gamma K_j``
the equations are

* ``sum_j K_j t K_j + lambda t + t lambda^T = -sum_j phi_j phi_j^T``
* ``gamma = (sqrt(1 + 4 t t^*) - 1)/2``
* ``u = p - Tr[gamma k] - f^* k f - 2 Re(f^* G)``
* ``M f + (k(gamma + 1/2) - u).G + sum_j K_j t conj(phi_j) = 0``
* ``lambda (1/2 + gamma) + (1/2 + gamma) lambda = M + sum_j phi_j phi_j^*``
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from .energy import _vec3, energy, field_momentum
from .errors import DomainError, NumericError, ParameterError
from .grid import MomentumGrid, coupling_field
from .quasifree import QuasifreeState, gamma_from_pair, pureness_residual


@dataclass
class LagrangeState:
    f: np.ndarray
    t: np.ndarray
    gamma: np.ndarray
    lam: np.ndarray
    u: np.ndarray


@dataclass
class ResidualSet:
    res_f: float
    res_alpha: float
    res_gamma: float
    res_lambda: float
    res_u: float

    def max(self) -> float:
        return max(asdict(self).values())


@dataclass
class LagrangeReport:
    state: LagrangeState
    residuals: ResidualSet
    energy: float
    iterations: int
    converged: bool
    certified: bool
    step_trace: list = field(default_factory=list)
    min_pair_curvature: float = np.inf
    message: str = ""


def sylvester_solve(A, B) -> np.ndarray:
    """Solve ``A X + X A = B`` for Hermitian positive definite ``A``."""
    A = np.asarray(A)
    B = np.asarray(B)
    a, V = np.linalg.eigh(A)
    if a[0] <= 0:
        raise DomainError(f"A must be positive definite (min eigenvalue {a[0]:.3e})")
    Bt = V.conj().T @ B @ V
    return V @ (Bt / np.add.outer(a, a)) @ V.conj().T


@dataclass
class PairSolve:
    t: np.ndarray
    iterations: int
    residual: float
    min_curvature: float


def pair_operator(kdot, lam):
    """``t -> kdot * t + lam t + t lam^T`` on symmetric matrices."""
    lamT = lam.T

    def apply(t):
        return kdot * t + lam @ t + t @ lamT

    return apply


def pair_solve(kdot, lam, rhs, tol: float = 1e-12, max_iter: int = 500,
               x0=None) -> PairSolve:
    """Preconditioned conjugate gradients for ``kdot * t + lam t + t lam^T = rhs``.

    The operator is self-adjoint for ``Re Tr[a^* b]``.  The smallest Rayleigh
    quotient over search directions is recorded; a non-positive one raises
    :class:`DomainError`.
    """
    kdot = np.asarray(kdot, float)
    lam = np.asarray(lam, complex)
    rhs = np.asarray(rhs, complex)
    op = pair_operator(kdot, lam)
    ld = np.diagonal(lam).real
    prec = kdot + ld[:, None] + ld[None, :]
    if np.any(prec <= 0):
        prec = np.ones_like(prec)
    bnorm = np.linalg.norm(rhs)
    x = np.zeros_like(rhs) if x0 is None else np.asarray(x0, complex).copy()
    if bnorm == 0:
        return PairSolve(np.zeros_like(rhs), 0, 0.0, np.inf)
    res = rhs - op(x)
    z = res / prec
    d = z.copy()
    rz = np.vdot(res, z).real
    min_curv = np.inf
    it = 0
    while np.linalg.norm(res) > tol * bnorm and it < max_iter:
        it += 1
        Ad = op(d)
        dAd = np.vdot(d, Ad).real
        curv = dAd / np.vdot(d, d).real
        min_curv = min(min_curv, curv)
        if curv <= 0:
            raise DomainError(f"pair operator is not positive (curvature {curv:.3e})")
        step = rz / dAd
        x += step * d
        res -= step * Ad
        z = res / prec
        rz_new = np.vdot(res, z).real
        d = z + (rz_new / rz) * d
        rz = rz_new
    rnorm = float(np.linalg.norm(rhs - op(x)))
    if rnorm > max(tol, 1e-14) * bnorm * 10:
        raise NumericError(f"pair solve stalled at relative residual {rnorm / bnorm:.3e}")
    return PairSolve(0.5 * (x + x.T), it, rnorm, float(min_curv))


def _pieces(grid, G, p, f, gamma):
    u = p - field_momentum(grid, G, f, gamma)
    phi = G + grid.k.T * f
    M = grid.kdot * gamma + np.diag(grid.dispersion - grid.k @ u)
    return u, phi, M


def _f_source(grid, G, gamma, t, u, phi):
    gh = gamma + 0.5 * np.eye(len(gamma))
    return (np.einsum("ja,ab,jb->a", grid.k.T, gh, G) - u @ G
            + np.einsum("ja,ab,jb->a", grid.k.T, t, phi.conj()))


def residuals(grid: MomentumGrid, g: float, p, f, gamma, t, lam=None, u=None) -> ResidualSet:
    """Norms of the five equation residuals.

    Missing ``lam`` or ``u`` are reconstructed from their defining equations,
    which makes the corresponding residuals vanish.
    """
    p = _vec3(p)
    G = coupling_field(grid, g)
    f = np.asarray(f, complex)
    gamma = np.asarray(gamma, complex)
    t = np.asarray(t, complex)
    u_def, phi, _ = _pieces(grid, G, p, f, gamma)
    u = u_def if u is None else _vec3(u)
    M = grid.kdot * gamma + np.diag(grid.dispersion - grid.k @ u)
    half = gamma + 0.5 * np.eye(len(f))
    dgamma = M + phi.T @ phi.conj()
    if lam is None:
        lam = sylvester_solve(half, dgamma)
    res_f = M @ f + _f_source(grid, G, gamma, t, u, phi)
    res_a = grid.kdot * t + lam @ t + t @ lam.T + phi.T @ phi
    res_l = lam @ half + half @ lam - dgamma
    return ResidualSet(
        res_f=float(np.linalg.norm(res_f)), res_alpha=float(np.linalg.norm(res_a)),
        res_gamma=pureness_residual(gamma, t), res_lambda=float(np.linalg.norm(res_l)),
        res_u=float(np.linalg.norm(u - u_def)))


def lagrange_iterate(grid: MomentumGrid, g: float, p, tol: float = 1e-8,
                     max_iter: int = 200) -> LagrangeReport:
    """Sweep ``t -> gamma -> u -> f -> lambda`` from ``f = 0``, ``lambda = D - p.k``."""
    if not grid.sigma > 0:
        raise ParameterError("sigma > 0 required for the quasifree solvers")
    if tol <= 0:
        raise ParameterError("tol > 0 required")
    p = _vec3(p)
    G = coupling_field(grid, g)
    n = len(grid)
    ref = np.diag(grid.dispersion - grid.k @ p)
    f = np.zeros(n, complex)
    lam = ref.astype(complex)
    t = np.zeros((n, n), complex)
    gamma = np.zeros((n, n), complex)
    u = p.copy()
    steps = []
    min_curv = np.inf
    certified = True
    it = 0
    res = residuals(grid, g, p, f, gamma, t, lam, u)
    while res.max() > tol and it < max_iter:
        it += 1
        phi = G + grid.k.T * f
        ps = pair_solve(grid.kdot, lam, -(phi.T @ phi), tol=1e-3 * tol, x0=t)
        min_curv = min(min_curv, ps.min_curvature)
        t = ps.t
        gamma = gamma_from_pair(t)
        u, phi, M = _pieces(grid, G, p, f, gamma)
        try:
            cho = scipy.linalg.cho_factor(M)
        except np.linalg.LinAlgError as exc:
            raise DomainError("M(gamma, u) lost positivity") from exc
        f_new = -scipy.linalg.cho_solve(cho, _f_source(grid, G, gamma, t, u, phi))
        phi = G + grid.k.T * f_new
        half = gamma + 0.5 * np.eye(n)
        lam_new = sylvester_solve(half, M + phi.T @ phi.conj())
        lam_new = 0.5 * (lam_new + lam_new.conj().T)
        steps.append(float(np.sqrt(np.linalg.norm(f_new - f) ** 2
                                   + np.linalg.norm(lam_new - lam) ** 2)))
        f, lam = f_new, lam_new
        certified = certified and (
            np.linalg.norm(u) < 0.5
            and np.linalg.norm(lam - ref, 2) < grid.sigma / 2)
        res = residuals(grid, g, p, f, gamma, t, lam)
        u = p - field_momentum(grid, G, f, gamma)
    converged = res.max() <= tol
    state = LagrangeState(f=f, t=t, gamma=gamma, lam=lam, u=u)
    e = energy(grid, g, p, QuasifreeState(f, gamma, t)).total
    return LagrangeReport(
        state=state, residuals=res, energy=float(e), iterations=it,
        converged=converged, certified=bool(certified), step_trace=steps,
        min_pair_curvature=float(min_curv),
        message="converged" if converged else f"no convergence in {max_iter} sweeps")
