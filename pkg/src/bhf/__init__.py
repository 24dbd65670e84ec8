"""Quasifree (Bogolubov-Hartree-Fock) ground-state energies of the
translation-invariant Pauli-Fierz fiber Hamiltonian on a discretized photon
momentum shell."""

__version__ = "0.1.0"

from .errors import BHFError, DivergenceError, DomainError, NumericError, ParameterError
from .grid import MomentumGrid, analytic_g_norm2, build_grid, coupling_field
from .quasifree import QuasifreeState, state_from_squeeze, takagi
from .energy import energy, energy_coherent, energy_squeeze, grad_squeeze
from .coherent import solve_coherent
from .variational import minimize_quasifree
from .lagrange import lagrange_iterate
from .perturbation import energy_fourth_order

__all__ = [
    "BHFError", "DivergenceError", "DomainError", "NumericError", "ParameterError",
    "MomentumGrid", "analytic_g_norm2", "build_grid", "coupling_field",
    "QuasifreeState", "state_from_squeeze", "takagi",
    "energy", "energy_coherent", "energy_squeeze", "grad_squeeze",
    "solve_coherent", "minimize_quasifree", "lagrange_iterate", "energy_fourth_order",
]
