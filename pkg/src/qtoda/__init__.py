"""q-Bessel eigenfunctions of the relativistic open Toda q-difference operator,
their Mellin-Barnes representations, Whittaker constructions and an exact
verification layer for the underlying quantum-group module."""
from __future__ import annotations

from .qcalc import DomainError, NonConvergenceError, QContext, SeriesValue, Tolerances

__all__ = ["DomainError", "NonConvergenceError", "QContext", "SeriesValue", "Tolerances"]
