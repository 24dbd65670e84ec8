"""Pure and mixed quasifree states on a discretized one-photon space.

Antilinear operators are stored as complex symmetric matrices acting by
``z -> r @ conj(z)``.  A pure state is parametrized by a displacement ``f``
and a squeeze kernel ``r``; its one-particle density matrix ``gamma`` and
pairing matrix ``t`` follow from the Takagi spectrum of ``r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .errors import DomainError, NumericError, ParameterError

SYM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class QuasifreeState:
    """Triple ``(f, gamma, t)`` describing a quasifree state.

    ``gamma`` is Hermitian PSD, ``t`` complex symmetric.  ``pure`` records
    whether the state was built from a squeeze kernel.
    """

    f: np.ndarray
    gamma: np.ndarray
    t: np.ndarray
    pure: bool = True

    @property
    def size(self) -> int:
        return len(self.f)

    def photon_number(self) -> float:
        """Expected photon number ``|f|^2 + Tr gamma``."""
        return float(np.vdot(self.f, self.f).real + np.trace(self.gamma).real)

    def block_matrix(self) -> np.ndarray:
        return density_block(self.gamma, self.t)


def _check_symmetric(r: np.ndarray, name: str = "r") -> np.ndarray:
    r = np.asarray(r, dtype=complex)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ParameterError(f"{name} must be a square matrix")
    scale = max(1.0, np.abs(r).max(initial=0.0))
    if np.abs(r - r.T).max(initial=0.0) > SYM_TOL * scale:
        raise ParameterError(f"{name} must be symmetric")
    return r


def takagi(r) -> tuple[np.ndarray, np.ndarray]:
    """Takagi factorization ``r = U diag(s) U^T``.

    Returns ``(U, s)`` with ``U`` unitary and ``s`` non-negative, descending.

    With ``r = B + iC`` and ``u = x + iy`` the condition ``r conj(u) = s u``
    is the real symmetric eigenproblem ``[[B, C], [C, -B]] [x; y] = s [x; y]``,
    whose spectrum is ``{+s, -s}``.  The positive half gives the nonzero
    Takagi vectors; the kernel is completed by an orthonormal complement.
    """
    r = _check_symmetric(r)
    n = r.shape[0]
    if n == 0:
        return np.zeros((0, 0), complex), np.zeros(0)
    B, C = r.real, r.imag
    emb = np.block([[B, C], [C, -B]])
    try:
        w, v = np.linalg.eigh(emb)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"Takagi factorization failed: {exc}") from exc
    w, v = w[::-1], v[:, ::-1]
    smax = max(w[0], 0.0)
    tol = 64 * np.finfo(float).eps * n * smax
    m = int(np.count_nonzero(w[:n] > tol)) if smax > 0 else 0
    U = v[:n, :m] + 1j * v[n:, :m]
    if m == 0:
        U = np.eye(n, dtype=complex)
    elif m < n:
        U = np.hstack([U, null_space(U.conj().T)])
    s = np.concatenate([w[:m], np.zeros(n - m)])
    return U, s


def squeeze_functions(r) -> tuple[np.ndarray, np.ndarray]:
    """``(gamma, t)`` with ``gamma = (cosh 2r - 1)/2`` and ``t = sinh(2r)/2``."""
    U, s = takagi(r)
    sh = np.sinh(s)
    gamma = (U * sh**2) @ U.conj().T
    t = (U * (0.5 * np.sinh(2 * s))) @ U.T
    return 0.5 * (gamma + gamma.conj().T), 0.5 * (t + t.T)


def state_from_squeeze(f, r) -> QuasifreeState:
    """Pure quasifree state with displacement ``f`` and squeeze kernel ``r``."""
    r = _check_symmetric(r)
    f = np.asarray(f, dtype=complex)
    if f.shape != (r.shape[0],):
        raise ParameterError("f and r dimensions differ")
    gamma, t = squeeze_functions(r)
    return QuasifreeState(f=f.copy(), gamma=gamma, t=t, pure=True)


def pureness_residual(gamma, t) -> float:
    """Frobenius norm of ``gamma + gamma^2 - t t^*``."""
    gamma = np.asarray(gamma)
    t = np.asarray(t)
    return float(np.linalg.norm(gamma + gamma @ gamma - t @ t.conj().T))


def pureness_tolerance(gamma, base: float = 1e-10) -> float:
    return base * (1.0 + np.linalg.norm(gamma) ** 2)


def gamma_from_pair(t) -> np.ndarray:
    """Solve ``gamma + gamma^2 = t t^*`` for the PSD root ``gamma``."""
    t = _check_symmetric(t, "t")
    mu, v = np.linalg.eigh(t @ t.conj().T)
    mu = np.clip(mu, 0.0, None)
    # (sqrt(1 + 4 mu) - 1)/2 written without cancellation
    root = 2 * mu / (1.0 + np.sqrt(1.0 + 4 * mu))
    gamma = (v * root) @ v.conj().T
    return 0.5 * (gamma + gamma.conj().T)


def density_block(gamma, t) -> np.ndarray:
    """Generalized one-particle density matrix ``[[gamma, t], [t^*, 1 + conj(gamma)]]``."""
    gamma = np.asarray(gamma, dtype=complex)
    t = np.asarray(t, dtype=complex)
    n = gamma.shape[0]
    return np.block([[gamma, t], [t.conj().T, np.eye(n) + gamma.conj()]])


def _random_vector(rng, n, scale):
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)


def sample_squeeze(seed: int, scale: float, n: int):
    """Deterministic random ``(f, r)`` pair with entries of size ``scale``."""
    if not scale > 0:
        raise ParameterError("scale > 0 required")
    rng = np.random.default_rng(seed)
    f = _random_vector(rng, n, scale)
    a = _random_vector(rng, n * n, scale).reshape(n, n)
    r = 0.5 * (a + a.T)
    return f, r


def sample_pure(seed: int, scale: float, grid) -> QuasifreeState:
    """Random pure state over ``grid`` (Gaussian ``f`` and ``r`` of size ``scale``)."""
    f, r = sample_squeeze(seed, scale, len(grid))
    return state_from_squeeze(f, r)


def sample_mixed(seed: int, scale: float, grid, mix: float | None = None) -> QuasifreeState:
    """Random pure state with a PSD diagonal added to ``gamma``.

    The diagonal has entries uniform in ``[0, mix]`` (``mix`` defaults to
    ``scale``); ``mix = 0`` reproduces :func:`sample_pure`.
    """
    base = sample_pure(seed, scale, grid)
    mix = scale if mix is None else float(mix)
    if mix < 0:
        raise ParameterError("mix >= 0 required")
    rng = np.random.default_rng([seed, 1])
    d = rng.uniform(0.0, mix, len(grid))
    return QuasifreeState(f=base.f, gamma=base.gamma + np.diag(d), t=base.t,
                          pure=bool(mix == 0))


def gibbs_trace(c) -> float:
    """Trace of the second quantization of ``C`` with spectrum ``c``: ``prod 1/(1-c_j)``."""
    c = [float(x) for x in c]
    for x in c:
        if not 0.0 <= x < 1.0:
            raise DomainError(f"eigenvalue {x} outside [0, 1)")
    return math.prod(1.0 / (1.0 - x) for x in c)
