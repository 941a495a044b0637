"""Ulam polynomials: monic polynomials whose coefficients are their zeros."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .poly_core import MonicPoly, RootFindingError, all_roots, elem_sym, elem_sym_all, poly_from_roots
from .ulam_map import (
    FixedPointRecord,
    ResidualSystem,
    iterate_map,
    newton_polish,
    residual,
    ulam_map,
    verify_equivalent_system,
    verify_identities,
)
from .homotopy import SolutionSet, TrackingError, count_ulam, solve_system
from .hypergeometric import HyperParams, recurrence_coeffs, ulam_rigidity_check
from .dynamics import flow_rhs, integrate, stability_probe

__all__ = [
    "BACKEND", "MonicPoly", "RootFindingError", "all_roots", "elem_sym", "elem_sym_all",
    "poly_from_roots", "FixedPointRecord", "ResidualSystem", "iterate_map", "newton_polish",
    "residual", "ulam_map", "verify_equivalent_system", "verify_identities", "SolutionSet",
    "TrackingError", "count_ulam", "solve_system", "HyperParams", "recurrence_coeffs",
    "ulam_rigidity_check", "flow_rhs", "integrate", "stability_probe",
]
