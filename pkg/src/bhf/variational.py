"""Direct minimization of the pure quasifree energy over ``(f, r)``.

The squeeze parametrization makes the pureness constraint automatic, so the
problem is unconstrained.  Descent uses Armijo backtracking, optionally
preconditioned by the coupling-free Hessian at the origin (diagonal in the
node basis).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coherent import solve_coherent
from .energy import (_vec3, energy_and_grad_squeeze, energy_squeeze,
                     hessian_form_at_origin, origin_curvature, vacuum_energy)
from .errors import NumericError, ParameterError
from .grid import MomentumGrid, coupling_field
from .quasifree import QuasifreeState, sample_squeeze, state_from_squeeze

STRATEGIES = ("gradient", "preconditioned")
ARMIJO_C = 1e-4
BACKTRACK = 0.5
MIN_STEP = 1e-14


@dataclass
class VariationalReport:
    f: np.ndarray
    r: np.ndarray
    state: QuasifreeState
    energy: float
    grad_norm: float
    iterations: int
    converged: bool
    certified: bool
    inside_ball: bool | None = None
    radius_estimate: float | None = None
    energy_trace: list = field(default_factory=list)
    imag_norm: float = 0.0
    message: str = ""


def xnorm(f, r) -> float:
    """Norm on the product space: ``sqrt(|f|^2 + |r|_F^2)``."""
    return float(np.sqrt(np.vdot(f, f).real + np.vdot(r, r).real))


def smallness_margin(grid: MomentumGrid, g: float) -> float:
    """``1/4 - || |k|^{-1/2} G ||^2``; non-negative means the origin Hessian
    bound ``sigma/4`` is guaranteed."""
    G = coupling_field(grid, g)
    return 0.25 - float(np.sum(np.abs(G) ** 2 / grid.knorm))


def _check_sigma(grid: MomentumGrid):
    if not grid.sigma > 0:
        raise ParameterError("sigma > 0 required for the quasifree solvers")


def minimize_quasifree(grid: MomentumGrid, g: float, p, tol: float = 1e-8,
                       max_iter: int = 500, strategy: str = "preconditioned",
                       x0=None, probe_ball: bool = True) -> VariationalReport:
    """Minimize ``E(f, r)`` from ``(0, 0)`` (or ``x0``) until ``|grad| <= tol``.

    Raises :class:`NumericError` when the line search cannot decrease the
    energy at a point that is not yet stationary.
    """
    _check_sigma(grid)
    if strategy not in STRATEGIES:
        raise ParameterError(f"strategy must be one of {STRATEGIES}")
    if tol <= 0:
        raise ParameterError("tol > 0 required")
    p = _vec3(p)
    n = len(grid)
    if x0 is None:
        f, r = np.zeros(n, complex), np.zeros((n, n), complex)
    else:
        f, r = (np.asarray(x0[0], complex).copy(), np.asarray(x0[1], complex).copy())
    if strategy == "preconditioned":
        hf, hr = origin_curvature(grid, p)
    else:
        hf, hr = np.ones(n), np.ones((n, n))

    e, gf, gr = energy_and_grad_squeeze(grid, g, p, f, r)
    trace = [e]
    gnorm = xnorm(gf, gr)
    it = 0
    msg = ""
    while gnorm > tol and it < max_iter:
        it += 1
        df, dr = -gf / hf, -gr / hr
        slope = float(np.vdot(gf, df).real + np.vdot(gr, dr).real)
        if slope >= 0:
            raise NumericError(f"not a descent direction at iteration {it}")
        # roundoff allowance so a stationary point is not mistaken for failure
        slack = 16 * np.finfo(float).eps * max(1.0, abs(e))
        step = 1.0
        while True:
            fn, rn = f + step * df, r + step * dr
            en = energy_squeeze(grid, g, p, fn, rn)
            if en <= e + ARMIJO_C * step * slope + slack:
                break
            step *= BACKTRACK
            if step < MIN_STEP:
                raise NumericError(
                    f"line search failed at iteration {it}: energy {e!r}, "
                    f"gradient norm {gnorm:.3e}")
        f, r = fn, rn
        e, gf, gr = energy_and_grad_squeeze(grid, g, p, f, r)
        trace.append(e)
        gnorm = xnorm(gf, gr)
    converged = gnorm <= tol
    if not converged:
        msg = f"no convergence in {max_iter} iterations"
    certified = smallness_margin(grid, g) >= 0 and np.linalg.norm(p) <= 0.5
    state = state_from_squeeze(f, r)
    radius = inside = None
    if probe_ball:
        radius = estimate_radius(grid, g, p, xnorm(f, r), seed=0)
        inside = radius >= xnorm(f, r)
    return VariationalReport(
        f=f, r=r, state=state, energy=float(e), grad_norm=gnorm, iterations=it,
        converged=converged, certified=bool(certified), inside_ball=inside,
        radius_estimate=radius, energy_trace=trace,
        imag_norm=xnorm(f.imag, r.imag), message=msg or "converged")


def _random_direction(rng, n):
    f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    r = 0.5 * (a + a.T)
    s = xnorm(f, r)
    return f / s, r / s


def curvature_along(grid, g, p, x, d, h: float = 1e-3) -> float:
    """Half the second directional derivative ``E''(x)[d, d]/2`` by central differences."""
    f, r = x
    df, dr = d
    ep = energy_squeeze(grid, g, p, f + h * df, r + h * dr)
    em = energy_squeeze(grid, g, p, f - h * df, r - h * dr)
    e0 = energy_squeeze(grid, g, p, f, r)
    return (ep + em - 2 * e0) / (2 * h * h) / xnorm(df, dr) ** 2


def estimate_radius(grid: MomentumGrid, g: float, p, scale: float, seed: int = 0,
                    factors=(0.5, 1.0, 2.0, 4.0), directions: int = 2) -> float:
    """Largest probed radius up to which sampled curvatures stay above ``sigma/4``.

    Radii are ``scale * factors`` (``scale`` is typically the minimizer's norm);
    returns 0 when the smallest radius already fails.
    """
    p = _vec3(p)
    n = len(grid)
    rng = np.random.default_rng(seed)
    bound = grid.sigma / 4
    best = 0.0
    base = max(scale, 1e-3)
    for fac in sorted(factors):
        rad = base * fac
        ok = True
        for _ in range(directions):
            xf, xr = _random_direction(rng, n)
            df, dr = _random_direction(rng, n)
            if curvature_along(grid, g, p, (rad * xf, rad * xr), (df, dr)) < bound:
                ok = False
                break
        if not ok:
            break
        best = rad
    return best


def coercivity_check(grid: MomentumGrid, g: float, p, samples: int = 100,
                     seed: int = 0, max_norm: float = 10.0) -> float:
    """Smallest ``E(f, r) / (sigma |(f, r)|^2)`` over random nonzero samples.

    Sample norms are spread log-uniformly over ``[1e-3, max_norm]`` and the
    last sample sits exactly at ``max_norm``.
    """
    _check_sigma(grid)
    p = _vec3(p)
    rng = np.random.default_rng(seed)
    n = len(grid)
    norms = np.exp(rng.uniform(np.log(1e-3), np.log(max_norm), samples))
    norms[-1] = max_norm
    worst = np.inf
    for rad in norms:
        df, dr = _random_direction(rng, n)
        e = energy_squeeze(grid, g, p, rad * df, rad * dr)
        worst = min(worst, e / (grid.sigma * rad**2))
    return float(worst)


def convexity_check(grid: MomentumGrid, g: float, p, samples: int = 20,
                    seed: int = 0, ball: float = 0.05, fd_points: int = 4) -> float:
    """Smallest Rayleigh quotient of half the Hessian.

    Combines the exact origin form over ``samples`` random directions (plus
    single-node field directions) with finite-difference curvatures at
    ``fd_points`` random points of radius ``ball``.
    """
    _check_sigma(grid)
    p = _vec3(p)
    rng = np.random.default_rng(seed)
    n = len(grid)
    form = hessian_form_at_origin(grid, g, p)
    worst = np.inf
    for _ in range(samples):
        df, dr = _random_direction(rng, n)
        worst = min(worst, form(df, dr))
    soft = int(np.argmin(grid.dispersion - grid.k @ p))
    e = np.zeros(n, complex)
    e[soft] = 1.0
    worst = min(worst, form(e, np.zeros((n, n))))
    for _ in range(fd_points):
        xf, xr = _random_direction(rng, n)
        df, dr = _random_direction(rng, n)
        worst = min(worst, curvature_along(grid, g, p, (ball * xf, ball * xr), (df, dr)))
    return float(worst)


def coercivity_hypothesis(grid: MomentumGrid, g: float, p, radius: float) -> bool:
    """Whether ``|p|^2/2 + ||G||^2/2 < sigma R^2`` holds for the given radius."""
    return vacuum_energy(grid, g, p) < grid.sigma * radius**2


def uniqueness_probe(grid: MomentumGrid, g: float, p, starts: int = 5,
                     scale: float = 0.01, seed: int = 0, tol: float = 1e-8):
    """Minimize from several random small starting points; return the minimizers."""
    out = []
    for i in range(starts):
        f0, r0 = sample_squeeze(seed + i, scale, len(grid))
        rep = minimize_quasifree(grid, g, p, tol=tol, x0=(f0, r0), probe_ball=False)
        out.append(rep)
    return out


def coherent_slice_energy(grid: MomentumGrid, g: float, p) -> float:
    """Energy at the coherent minimizer embedded as ``(f_p, 0)``."""
    rep = solve_coherent(grid, g, p)
    return energy_squeeze(grid, g, p, rep.f, np.zeros((len(grid),) * 2))
