"""Coherent-state minimization by fixed-point iteration on the dressed momentum.

For a coherent state the stationarity condition reads ``f = Phi_u`` with
``Phi_u = u.G / (D - k.u)`` and ``u = Psi(u) = p - Phi_u^* k Phi_u - 2 Re(Phi_u^* G)``.
Plain Picard iteration on ``u`` starting from ``p`` is a contraction for
small coupling.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .energy import _vec3, energy_coherent, grad_coherent, vacuum_energy
from .errors import DivergenceError, DomainError, NumericError, ParameterError
from .grid import MomentumGrid, coupling_field

# analytic constant in  f^* D f <= C0 g^2 ln(cutoff + 2) |u|^2 / (1 - |u|)^2
C0_BOUND = 16 * np.pi / 3


@dataclass
class CoherentReport:
    f: np.ndarray
    u: np.ndarray
    energy: float
    iterations: int
    residual: float
    contraction_trace: list = field(default_factory=list)
    converged: bool = True
    message: str = ""

    @property
    def max_contraction(self) -> float:
        return max(self.contraction_trace, default=0.0)


def phi_u(grid: MomentumGrid, g: float, u) -> np.ndarray:
    """Coherent field ``u.G / (D - k.u)`` at fixed dressed momentum ``u``."""
    u = _vec3(u)
    if np.linalg.norm(u) >= 1.0:
        raise DomainError("|u| < 1 required")
    G = coupling_field(grid, g)
    return (u @ G) / (grid.dispersion - grid.k @ u)


def weighted_norm2(grid: MomentumGrid, f) -> float:
    """``f^* (|k|^2/2 + |k|) f``."""
    return float(np.sum(grid.dispersion * np.abs(f) ** 2))


def psi_map(grid: MomentumGrid, g: float, p, u) -> np.ndarray:
    """``Psi(u) = p - Phi_u^* k Phi_u - 2 Re(Phi_u^* G)``."""
    f = phi_u(grid, g, u)
    G = coupling_field(grid, g)
    return _vec3(p) - grid.k.T @ np.abs(f) ** 2 - 2 * (G @ f.conj()).real


def solve_coherent(grid: MomentumGrid, g: float, p, tol: float = 1e-10,
                   max_iter: int = 200) -> CoherentReport:
    """Picard iteration ``u <- Psi(u)`` from ``u = p``.

    Stops when ``|Psi(u) - u| <= tol``.  Exceeding ``max_iter`` returns a
    report with ``converged=False``; leaving the unit ball raises
    :class:`DivergenceError`.
    """
    if tol <= 0:
        raise ParameterError("tol > 0 required")
    p = _vec3(p)
    u = p.copy()
    ratios: list[float] = []
    prev_step = None
    it = 0
    res = np.inf
    while it < max_iter:
        it += 1
        try:
            nxt = psi_map(grid, g, p, u)
        except DomainError as exc:
            raise DivergenceError(f"iterate left the unit ball: |u| = {np.linalg.norm(u):.3g}") from exc
        step = float(np.linalg.norm(nxt - u))
        if prev_step is not None and prev_step > 0 and step > 0:
            ratios.append(step / prev_step)
        prev_step = step
        res = step
        u = nxt
        if res <= tol:
            break
        if np.linalg.norm(u) >= 1.0:
            raise DivergenceError(f"iterate left the unit ball: |u| = {np.linalg.norm(u):.3g}")
    f = phi_u(grid, g, u)
    residual = float(np.linalg.norm(psi_map(grid, g, p, u) - u))
    converged = res <= tol
    msg = "converged" if converged else f"no convergence in {max_iter} iterations"
    if ratios and max(ratios) > 1:
        msg += "; contraction ratio above 1 observed"
    return CoherentReport(f=f, u=u, energy=energy_coherent(grid, g, p, f),
                          iterations=it, residual=residual,
                          contraction_trace=ratios, converged=converged,
                          message=msg)


def rank3_resolvent_apply(diag, G, v, factor: float) -> np.ndarray:
    """Apply ``(diag + factor * sum_j G_j G_j^*)^{-1}`` to ``v``.

    Woodbury identity with the 3x3 capacitance ``I + factor * G D^{-1} G^*``.
    """
    diag = np.asarray(diag, float)
    if np.any(diag <= 0):
        raise ParameterError("diagonal entries must be positive")
    v = np.asarray(v, complex)
    Dv = v / diag
    if factor == 0:
        return Dv
    Ut = np.atleast_2d(np.asarray(G))  # rows G_j
    DU = Ut.T / diag[:, None]
    cap = np.eye(len(Ut)) + factor * (Ut.conj() @ DU)
    if np.linalg.cond(cap) > 1e12:
        raise NumericError("capacitance matrix is singular")
    coef = np.linalg.solve(cap, Ut.conj() @ Dv)
    return Dv - factor * DU @ coef


def coherent_p2_expansion(grid: MomentumGrid, g: float, p) -> float:
    """``E(0) - (p.G)^* (D + 2 G G^*)^{-1} (p.G)``, the energy to second order in ``p``."""
    p = _vec3(p)
    G = coupling_field(grid, g)
    pg = p @ G
    x = rank3_resolvent_apply(grid.dispersion, G, pg, 2.0)
    return vacuum_energy(grid, g, p) - float(np.vdot(pg, x).real)


def vacuum_gap_identity(grid: MomentumGrid, g: float, p, report: CoherentReport):
    """Both sides of ``E(f_p) = E(0) - Re(f_p^* (u.G)) - |u - p|^2/2``."""
    p = _vec3(p)
    G = coupling_field(grid, g)
    lhs = report.energy
    rhs = (vacuum_energy(grid, g, p) - float(np.vdot(report.f, report.u @ G).real)
           - 0.5 * float(np.sum((report.u - p) ** 2)))
    return lhs, rhs


def stationarity(grid: MomentumGrid, g: float, p, f) -> float:
    return float(np.linalg.norm(grad_coherent(grid, g, p, f)))
