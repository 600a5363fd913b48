"""Optimal gas flow toolkit.

Steady-state pipeline network optimization for a non-ideal gas: typed
network model, nondimensionalized physics, polyhedral (lambda-form) and
mixed-integer conic relaxations of the nonlinear friction and equation of
state terms, an embedded branch-and-bound MILP solver, and verification of
relaxation solutions against the true physics.
"""

from .eos import NondimContext, build_context, cnga_coefficients, potential
from .formulation import FormulationOptions, Nomination, build, fix_discrete
from .network import Network, ValidationReport, validate
from .optmodel import OptModel, Solution, export, load_model_json, relax_integrality
from .polyrelax import PartitionRelaxation, UnivariateSpec, build_relaxation, refine
from .solver import SolveOptions, outer_approx_misoc, solve_lp, solve_milp
from .verify import VerificationReport, relative_gap, residuals, run_batch

__version__ = "0.1.0"

__all__ = [
    "Network", "ValidationReport", "validate",
    "NondimContext", "build_context", "cnga_coefficients", "potential",
    "UnivariateSpec", "PartitionRelaxation", "build_relaxation", "refine",
    "OptModel", "Solution", "export", "load_model_json", "relax_integrality",
    "FormulationOptions", "Nomination", "build", "fix_discrete",
    "SolveOptions", "solve_lp", "solve_milp", "outer_approx_misoc",
    "VerificationReport", "residuals", "relative_gap", "run_batch",
    "__version__",
]
