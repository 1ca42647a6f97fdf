"""Boundary contact problems on metric graphs.

Data model for graphs with even-order matrix edge operators and vertex
coupling blocks, parameter-ellipticity verdicts over a spectral sector,
certified eigenvalue sweeps with contour-count certificates, resolvent
solves, and trace asymptotics (heat, resolvent, zeta, Weyl).
"""

from .asymptotics import (AsymptoticFit, FlatIndexModel, HeatTrace,
                          ResolventTraceValue, WeylFit, completed_heat_trace,
                          fit_heat_invariants, fit_resolvent_coeffs,
                          flat_index_model, heat_trace, resolvent_trace,
                          weyl_fit, zeta, zeta_poles)
from .builtins import build, oracle
from .ellipticity import (EllipticityVerdict, characteristic_exponents,
                          check, interior_check, lopatinsky_matrix,
                          stable_solution_basis, vertex_check)
from .errors import (CertificateError, DomainError, IntegrationError,
                     NearSingularResolvent, NotElliptic, NotSymmetric,
                     ProblemFormatError, QgError, WindowTooSmall,
                     ZetaUndefined)
from .fileio import (SCHEMA, canonical_problem_text, emit_problem,
                     load_problem, parse_problem, problem_from_dict,
                     problem_to_dict, spectrum_csv)
from .graphs import (LEFT, RIGHT, BoundaryContactProblem, CouplingCondition,
                     Edge, EdgeOperator, Endpoint, MetricGraph, Sector,
                     ValidationReport, Vertex, apply_coupling, canonical_hash,
                     fiber_inner, pull_back, push_forward,
                     self_adjointness_report, validate)
from .spectra import (SecularMatrix, SolveResult, Spectrum,
                      default_lambda_lo, eigenfunction_edge_masses,
                      eigenvalues, fundamental_system, multiplicity,
                      resolvent_norm, secular_matrix, solve_resolvent,
                      winding_count)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticFit", "BoundaryContactProblem", "CertificateError",
    "CouplingCondition", "DomainError", "Edge", "EdgeOperator",
    "EllipticityVerdict", "Endpoint", "FlatIndexModel", "HeatTrace",
    "IntegrationError", "LEFT", "MetricGraph", "NearSingularResolvent",
    "NotElliptic", "NotSymmetric", "ProblemFormatError", "QgError", "RIGHT",
    "ResolventTraceValue", "SCHEMA", "Sector", "SecularMatrix", "SolveResult",
    "Spectrum", "ValidationReport", "Vertex", "WeylFit", "WindowTooSmall",
    "ZetaUndefined", "apply_coupling", "build", "canonical_hash",
    "canonical_problem_text", "characteristic_exponents", "check",
    "completed_heat_trace", "default_lambda_lo", "eigenfunction_edge_masses",
    "eigenvalues", "emit_problem", "fiber_inner", "fit_heat_invariants",
    "fit_resolvent_coeffs", "flat_index_model", "fundamental_system",
    "heat_trace", "interior_check", "load_problem", "lopatinsky_matrix",
    "multiplicity", "oracle", "parse_problem", "problem_from_dict",
    "problem_to_dict", "pull_back", "push_forward", "resolvent_norm",
    "resolvent_trace", "secular_matrix", "self_adjointness_report",
    "solve_resolvent", "spectrum_csv", "stable_solution_basis", "validate",
    "vertex_check", "weyl_fit", "winding_count", "zeta", "zeta_poles",
]
