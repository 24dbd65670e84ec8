"""Small-coupling, small-momentum asymptotics of the quasifree minimum.

To leading order the minimizer is ``f = (p.G)/D`` and
``r_ab = -(sum_j G_j(a) G_j(b)) / S_ab`` with
``S_ab = k_a.k_b + D_a + D_b``, and the minimum energy is

``E = |p|^2/2 + ||G||^2/2 - (p.G)^* D^{-1} (p.G) - (1/2) sum_ab Phi_ab^2 / S_ab``

up to fifth order in ``(g, p)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import _vec3, vacuum_energy
from .errors import ParameterError
from .grid import MomentumGrid, coupling_field


@dataclass(frozen=True)
class PerturbativeSummary:
    e_vacuum: float
    quad_p: float
    quart_g: float

    @property
    def e_pred2(self) -> float:
        """Prediction through second order in ``p`` (no ``g^4`` term)."""
        return self.e_vacuum - self.quad_p

    @property
    def e_pred(self) -> float:
        return self.e_vacuum - self.quad_p - self.quart_g


@dataclass(frozen=True)
class C22Report:
    quadrature: float
    radial_oracle: float
    closed_form: float

    @property
    def ratio(self) -> float:
        """``closed_form / quadrature``."""
        return self.closed_form / self.quadrature

    @property
    def discrepancy(self) -> bool:
        return abs(self.ratio - 1.0) > 1e-3


def pair_source(G) -> np.ndarray:
    """``Phi_ab = sum_j G_j(a) G_j(b)``."""
    return G.T @ G


def shell_operator(grid: MomentumGrid) -> np.ndarray:
    """``S_ab = k_a.k_b + D_a + D_b``."""
    d = grid.dispersion
    return grid.kdot + d[:, None] + d[None, :]


def pert_f(grid: MomentumGrid, g: float, p) -> np.ndarray:
    """Leading-order displacement ``(p.G)/D``."""
    return (_vec3(p) @ coupling_field(grid, g)) / grid.dispersion + 0j


def pert_r(grid: MomentumGrid, g: float) -> np.ndarray:
    """Leading-order squeeze kernel ``-Phi / S`` (entrywise)."""
    G = coupling_field(grid, g)
    return -pair_source(G) / shell_operator(grid) + 0j


def quad_p(grid: MomentumGrid, g: float, p) -> float:
    pg = _vec3(p) @ coupling_field(grid, g)
    return float(np.sum(pg**2 / grid.dispersion))


def quart_g(grid: MomentumGrid, g: float) -> float:
    phi = pair_source(coupling_field(grid, g))
    return 0.5 * float(np.sum(phi**2 / shell_operator(grid)))


def energy_fourth_order(grid: MomentumGrid, g: float, p) -> PerturbativeSummary:
    return PerturbativeSummary(e_vacuum=vacuum_energy(grid, g, p),
                               quad_p=quad_p(grid, g, p), quart_g=quart_g(grid, g))


def c22_quadrature(grid: MomentumGrid) -> float:
    """``p.G^* D^{-1} G.p / g^2`` for unit ``p``, averaged over the three axes."""
    G = coupling_field(grid, 1.0)
    return float(np.sum(G**2 / grid.dispersion) / 3.0)


def c22_radial_oracle(sigma: float, cutoff: float) -> float:
    """Reduced integral: angular factor ``8 pi/3`` times ``2 ln((cutoff+2)/(sigma+2))``."""
    return 8 * np.pi / 3 * 2 * np.log((cutoff + 2) / (sigma + 2))


def c22_closed_form(sigma: float, cutoff: float) -> float:
    """Published constant ``(2 pi^2 - 8 pi/3) ln((cutoff+2)/(sigma+2))``."""
    return (2 * np.pi**2 - 8 * np.pi / 3) * np.log((cutoff + 2) / (sigma + 2))


def c22_report(grid: MomentumGrid) -> C22Report:
    return C22Report(quadrature=c22_quadrature(grid),
                     radial_oracle=c22_radial_oracle(grid.sigma, grid.cutoff),
                     closed_form=c22_closed_form(grid.sigma, grid.cutoff))


def c40_quadrature(sigma: float, cutoff: float, n_quad: int = 32) -> float:
    """``(1/2) g^{-4} sum Phi^2/S`` as a reduced integral over ``(r1, r2, cos)``.

    Summing over polarizations gives the angular weight ``1 + c^2`` and the
    coupling contributes ``1/(r1 r2)``; the two solid angles collapse to
    ``8 pi^2 dc``.
    """
    if n_quad < 8:
        raise ParameterError("n_quad >= 8 required")
    if not 0 <= sigma < cutoff:
        raise ParameterError("0 <= sigma < cutoff required")
    x, w = np.polynomial.legendre.leggauss(int(n_quad))
    half = 0.5 * (cutoff - sigma)
    r = sigma + half * (x + 1)
    wr = half * w
    r1, r2, c = np.meshgrid(r, r, x, indexing="ij")
    W = wr[:, None, None] * wr[None, :, None] * w[None, None, :]
    S = r1 * r2 * c + 0.5 * r1**2 + r1 + 0.5 * r2**2 + r2
    integrand = r1 * r2 * (1 + c**2) / S
    return 0.5 * 8 * np.pi**2 * float(np.sum(W * integrand))
