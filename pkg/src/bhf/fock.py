"""Brute-force truncated Fock space model for a handful of photon modes.

Used to validate the closed-form quasifree energy: build the fiber
Hamiltonian as a dense matrix on states with at most ``nmax`` photons,
prepare a displaced squeezed vacuum by matrix exponentials, and take the
expectation value.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import ParameterError
from .grid import MomentumGrid, build_grid, coupling_field

MAX_MODES = 4
MAX_NMAX = 10


def _occupations(d: int, nmax: int) -> list[tuple[int, ...]]:
    out = []
    for total in range(nmax + 1):
        level = [c for c in itertools.product(range(total + 1), repeat=d)
                 if sum(c) == total]
        out.extend(sorted(level, reverse=True))
    return out


@dataclass(frozen=True, eq=False)
class FockContext:
    """Occupation-number basis truncated by total photon number."""

    modes: int
    nmax: int
    basis: tuple
    ladder: tuple  # annihilation matrices, one per mode

    @property
    def dim(self) -> int:
        return len(self.basis)

    def number(self, i: int) -> np.ndarray:
        return np.diag([float(n[i]) for n in self.basis])

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, complex)
        v[0] = 1.0
        return v

    def top_shell(self) -> np.ndarray:
        """Mask of basis states with exactly ``nmax`` photons."""
        return np.array([sum(n) == self.nmax for n in self.basis])


def build_fock(d: int, nmax: int) -> FockContext:
    if not 1 <= d <= MAX_MODES:
        raise ParameterError(f"mode count must be in 1..{MAX_MODES}")
    if not 0 <= nmax <= MAX_NMAX:
        raise ParameterError(f"nmax must be in 0..{MAX_NMAX}")
    basis = _occupations(d, nmax)
    index = {n: i for i, n in enumerate(basis)}
    ladder = []
    for i in range(d):
        a = np.zeros((len(basis),) * 2)
        for col, n in enumerate(basis):
            if n[i] > 0:
                lower = n[:i] + (n[i] - 1,) + n[i + 1:]
                a[index[lower], col] = np.sqrt(n[i])
        ladder.append(a)
    return FockContext(d, nmax, tuple(basis), tuple(ladder))


def oracle_grid(d: int, sigma: float = 1.0, cutoff: float = 2.0) -> MomentumGrid:
    """A ``d``-node grid with distinct momenta, taken from a coarse shell rule.

    Quadrature accuracy is irrelevant here; the weights are kept so the
    coupling has a realistic size.
    """
    if not 1 <= d <= MAX_MODES:
        raise ParameterError(f"mode count must be in 1..{MAX_MODES}")
    full = build_grid(sigma, cutoff, 2, 6)
    # alternate polarizations over different directions and radii
    picks = [0, 3, 16, 21][:d]
    return full.select(picks)


def hamiltonian(ctx: FockContext, grid: MomentumGrid, g: float, p) -> np.ndarray:
    """Dense matrix of ``(P_f + A - p)^2 / 2 + H_f`` on the truncated space."""
    if len(grid) != ctx.modes:
        raise ParameterError("grid node count differs from mode count")
    p = np.asarray(p, float)
    G = coupling_field(grid, g)
    eye = np.eye(ctx.dim)
    H = np.zeros((ctx.dim, ctx.dim))
    for j in range(3):
        op = -p[j] * eye
        for a in range(ctx.modes):
            lad = ctx.ladder[a]
            op = op + grid.k[a, j] * ctx.number(a) + G[j, a] * (lad + lad.T)
        H += 0.5 * op @ op
    for a in range(ctx.modes):
        H += grid.knorm[a] * ctx.number(a)
    return 0.5 * (H + H.T)


def quasifree_vector(ctx: FockContext, f, r) -> np.ndarray:
    """Displaced squeezed vacuum ``exp(a^+(f) - a(f)) exp(Q(r)) Omega``.

    ``Q(r) = (sum r_ij a_i^+ a_j^+ - conj(r_ij) a_i a_j)/2``.  With this sign
    the centered pairing ``<a_i a_j>`` equals ``sinh(2r)/2`` and
    ``<a_j^+ a_i>`` equals ``(cosh 2r - 1)/2``.
    """
    f = np.asarray(f, complex)
    r = np.asarray(r, complex)
    d = ctx.modes
    if f.shape != (d,) or r.shape != (d, d):
        raise ParameterError("f, r dimensions differ from mode count")
    a = ctx.ladder
    Q = np.zeros((ctx.dim, ctx.dim), complex)
    for i in range(d):
        for j in range(d):
            Q += 0.5 * (r[i, j] * a[i].T @ a[j].T - np.conj(r[i, j]) * a[i] @ a[j])
    psi = displacement(ctx, f) @ (expm(Q) @ ctx.vacuum())
    return psi / np.linalg.norm(psi)


def displacement(ctx: FockContext, f) -> np.ndarray:
    """Truncated displacement ``exp(a^+(f) - a(f))``."""
    f = np.asarray(f, complex)
    gen = sum(f[i] * ctx.ladder[i].T - np.conj(f[i]) * ctx.ladder[i]
              for i in range(ctx.modes))
    return expm(gen)


def weyl(ctx: FockContext, z) -> np.ndarray:
    """Truncated Weyl operator ``exp(i Phi(z))``, ``Phi(z) = (a(z) + a^+(z))/sqrt 2``.

    ``weyl(ctx, -1j*sqrt(2)*f)`` is the displacement by ``f``.
    """
    return displacement(ctx, 1j * np.asarray(z, complex) / np.sqrt(2))


def moments(ctx: FockContext, psi):
    """Return ``(f, gamma, t)`` of a vector: ``<a_i>``, centered ``<a_j^+ a_i>`` and ``<a_i a_j>``."""
    a = ctx.ladder
    d = ctx.modes
    f = np.array([np.vdot(psi, a[i] @ psi) for i in range(d)])
    gamma = np.empty((d, d), complex)
    t = np.empty((d, d), complex)
    for i in range(d):
        for j in range(d):
            gamma[i, j] = np.vdot(psi, a[j].T @ a[i] @ psi) - np.conj(f[j]) * f[i]
            t[i, j] = np.vdot(psi, a[i] @ a[j] @ psi) - f[i] * f[j]
    return f, gamma, t


def oracle_energy(ctx: FockContext, grid: MomentumGrid, g: float, p, f, r) -> float:
    """``<Psi|H|Psi>`` for the quasifree vector with parameters ``(f, r)``."""
    psi = quasifree_vector(ctx, f, r)
    H = hamiltonian(ctx, grid, g, p)
    return float(np.vdot(psi, H @ psi).real)


def convergence_table(grid: MomentumGrid, g: float, p, f, r, reference: float,
                      nmax_values=(4, 6, 8)) -> list[dict]:
    """Oracle energy and relative error against ``reference`` for each ``nmax``."""
    rows = []
    for nmax in nmax_values:
        ctx = build_fock(len(grid), nmax)
        e = oracle_energy(ctx, grid, g, p, f, r)
        rows.append({"nmax": int(nmax), "dim": ctx.dim, "energy": e,
                     "rel_error": abs(e - reference) / abs(reference)})
    return rows
