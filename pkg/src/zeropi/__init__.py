"""Simulation toolkit for the 0-pi superconducting qubit.

Builds circuit Hamiltonians on truncated bases, diagonalizes them, evolves
driven and dissipative dynamics, and evaluates the closed-form dispersive,
gate, Raman and cooling quantities with cross-validation between reduced
models and full simulations.
"""

from .params import BasisSpec, CircuitParams, ParameterError
from .operators import OperatorMatrix

__all__ = ["BasisSpec", "CircuitParams", "ParameterError", "OperatorMatrix"]

__version__ = "0.1.0"
