"""Product quadrature on the photon momentum shell and the coupling field.

Every downstream quantity is expressed in weight-orthonormalized
coordinates: a function ``f(k, tau)`` on the shell is stored as the vector
``x_a = sqrt(w_a) f(k_a, tau_a)``.  Inner products, traces and adjoints are
then plain complex linear algebra.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import lebedev_rule

from .errors import ParameterError

# point count -> polynomial degree of the Lebedev rule shipped with scipy
_LEBEDEV_DEGREES = (3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25, 27, 29, 31, 35)
_LEBEDEV_SIZES = {6: 3, 14: 5, 26: 7, 38: 9, 50: 11, 74: 13, 86: 15, 110: 17,
                  146: 19, 170: 21, 194: 23, 230: 25, 266: 27, 302: 29,
                  350: 31, 434: 35}

_AXIS_TOL = 1e-8


def spherical_rule(n_angular: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Return ``(directions, weights, degree)`` of the Lebedev rule with
    ``n_angular`` points.  Weights sum to ``4*pi``."""
    try:
        degree = _LEBEDEV_SIZES[int(n_angular)]
    except KeyError:
        raise ParameterError(
            f"no spherical rule with {n_angular} points; "
            f"available sizes: {sorted(_LEBEDEV_SIZES)}") from None
    x, w = lebedev_rule(degree)
    x = x.T / np.linalg.norm(x.T, axis=1, keepdims=True)
    return x, w, degree


def polarization_frame(khat) -> tuple[np.ndarray, np.ndarray]:
    """Complete ``khat`` to a right-handed orthonormal triple ``(e+, e-, khat)``.

    ``e+`` is the normalized ``z x khat`` (``x x khat`` when ``khat`` is
    parallel to the z axis) and ``e- = khat x e+``.
    """
    khat = np.asarray(khat, dtype=float)
    if khat.shape != (3,) or abs(np.linalg.norm(khat) - 1.0) > 1e-12:
        raise ParameterError("polarization_frame expects a unit 3-vector")
    e_plus = np.cross([0.0, 0.0, 1.0], khat)
    if np.linalg.norm(e_plus) < _AXIS_TOL:
        e_plus = np.cross([1.0, 0.0, 0.0], khat)
    e_plus /= np.linalg.norm(e_plus)
    e_minus = np.cross(khat, e_plus)
    return e_plus, e_minus


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    """Quadrature nodes on ``S_{sigma,cutoff} x {+,-}``.

    Attributes
    ----------
    sigma, cutoff : float
        Infrared and ultraviolet cutoffs.
    k : (N, 3) array
        Photon momentum of each node.
    tau : (N,) int array
        Polarization label, ``+1`` or ``-1``.
    weights : (N,) array
        Quadrature weight of each node (radial Jacobian included).
    frames : (N, 3, 3) array
        Rows ``(e+, e-, khat)`` at the node's momentum.
    """

    sigma: float
    cutoff: float
    k: np.ndarray
    tau: np.ndarray
    weights: np.ndarray
    frames: np.ndarray

    @property
    def size(self) -> int:
        return len(self.weights)

    def __len__(self) -> int:
        return self.size

    @cached_property
    def knorm(self) -> np.ndarray:
        return np.linalg.norm(self.k, axis=1)

    @cached_property
    def khat(self) -> np.ndarray:
        return self.k / self.knorm[:, None]

    @cached_property
    def pol(self) -> np.ndarray:
        """Polarization vector ``e_tau(k)`` of each node, shape ``(N, 3)``."""
        idx = np.where(self.tau > 0, 0, 1)
        return self.frames[np.arange(self.size), idx]

    @cached_property
    def dispersion(self) -> np.ndarray:
        """Diagonal of ``|k|^2/2 + |k|``."""
        return 0.5 * self.knorm**2 + self.knorm

    @cached_property
    def kdot(self) -> np.ndarray:
        """Matrix of ``k_a . k_b``."""
        return self.k @ self.k.T

    def select(self, indices) -> "MomentumGrid":
        """Sub-grid made of the given nodes (weights kept as they are)."""
        idx = np.asarray(indices, dtype=int)
        return MomentumGrid(self.sigma, self.cutoff, self.k[idx], self.tau[idx],
                            self.weights[idx], self.frames[idx])

    def rotate_frames(self, angles) -> "MomentumGrid":
        """Rotate ``(e+, e-)`` of every node by a per-node angle about ``khat``.

        ``angles`` has one entry per node.  Both polarization nodes sharing a
        momentum must receive the same angle for the result to remain a
        consistent basis; :func:`random_gauge` takes care of that.
        """
        a = np.asarray(angles, dtype=float)
        c, s = np.cos(a)[:, None], np.sin(a)[:, None]
        ep, em = self.frames[:, 0], self.frames[:, 1]
        frames = self.frames.copy()
        frames[:, 0] = c * ep + s * em
        frames[:, 1] = -s * ep + c * em
        return MomentumGrid(self.sigma, self.cutoff, self.k, self.tau,
                            self.weights, frames)


def build_grid(sigma: float, cutoff: float, n_radial: int,
               n_angular: int) -> MomentumGrid:
    """Gauss-Legendre (radius, weight ``r^2 dr``) times Lebedev product rule.

    Nodes are ordered radius-major, then direction, then polarization
    ``(+, -)``, so the two polarizations of a momentum are adjacent.
    """
    if not (np.isfinite(sigma) and np.isfinite(cutoff)):
        raise ParameterError("cutoffs must be finite")
    if sigma < 0:
        raise ParameterError("sigma >= 0 required")
    if cutoff <= sigma:
        raise ParameterError("sigma < cutoff required")
    if n_radial < 2:
        raise ParameterError("n_radial >= 2 required")
    dirs, wang, _ = spherical_rule(n_angular)

    x, wx = np.polynomial.legendre.leggauss(int(n_radial))
    half = 0.5 * (cutoff - sigma)
    r = sigma + half * (x + 1.0)
    wr = half * wx * r**2

    k = (r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    w = (wr[:, None] * wang[None, :]).reshape(-1)
    frames = np.empty((len(w), 3, 3))
    for i, kv in enumerate(k):
        khat = kv / np.linalg.norm(kv)
        frames[i, 0], frames[i, 1] = polarization_frame(khat)
        frames[i, 2] = khat

    return MomentumGrid(
        sigma=float(sigma), cutoff=float(cutoff),
        k=np.repeat(k, 2, axis=0),
        tau=np.tile([1, -1], len(w)),
        weights=np.repeat(w, 2),
        frames=np.repeat(frames, 2, axis=0),
    )


def random_gauge(grid: MomentumGrid, seed: int) -> MomentumGrid:
    """Same grid with polarization frames rotated by random angles."""
    rng = np.random.default_rng(seed)
    # one angle per momentum, shared by the (+, -) pair
    _, inverse = np.unique(grid.k, axis=0, return_inverse=True)
    angles = rng.uniform(0.0, 2 * np.pi, inverse.max() + 1)[inverse.ravel()]
    return grid.rotate_frames(angles)


def coupling_field(grid: MomentumGrid, g: float) -> np.ndarray:
    """Components ``G_j`` of the coupling ``g e_tau(k) |k|^{-1/2}``.

    Returns a real ``(3, N)`` array in orthonormalized coordinates.
    """
    amp = g * np.sqrt(grid.weights) / np.sqrt(grid.knorm)
    return (grid.pol * amp[:, None]).T


def g_norm2(G: np.ndarray) -> float:
    """``sum_j G_j^* G_j``."""
    return float(np.sum(np.abs(G) ** 2))


def analytic_g_norm2(g: float, sigma: float, cutoff: float) -> float:
    """Closed form of ``||G||^2 = 4 pi g^2 (cutoff^2 - sigma^2)``."""
    return 4.0 * np.pi * g**2 * (cutoff**2 - sigma**2)


def shell_volume(sigma: float, cutoff: float) -> float:
    return 4.0 * np.pi / 3.0 * (cutoff**3 - sigma**3)
