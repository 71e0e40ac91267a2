"""Operator Krylov solvers for ``-(a u')' + b u' + c u = f``, ``u(+-1) = 0``.

Functions are adaptive piecewise Chebyshev series (:mod:`opkrylov.chebfun`);
the differential operator and its integral preconditioner act on them
directly (:mod:`opkrylov.operator`), and CG, MINRES and GMRES iterate on the
preconditioned operator without ever forming a matrix (:mod:`opkrylov.krylov`).
"""

from .chebfun import PiecewiseFun, UnresolvedFunctionError, construct_adaptive
from .exprparse import EvaluationError, ParseError, eval_at, parse, to_text
from .krylov import (
    KrylovOptions,
    KrylovReport,
    NotPositiveDefinite,
    cg_error_bound,
    cg_unpreconditioned,
    gmres,
    iteration_bound,
    minres,
    pcg,
)
from .operator import (
    AncillaryBreakdown,
    BvpProblem,
    ContractError,
    OperatorContext,
    apply_L,
    apply_R,
    apply_R_star,
    apply_T,
    bilinear_form,
    condition_bound,
    energy_norm,
    prepare_rhs,
)

__version__ = "0.1.0"

__all__ = [
    "PiecewiseFun",
    "UnresolvedFunctionError",
    "construct_adaptive",
    "EvaluationError",
    "ParseError",
    "eval_at",
    "parse",
    "to_text",
    "KrylovOptions",
    "KrylovReport",
    "NotPositiveDefinite",
    "cg_error_bound",
    "cg_unpreconditioned",
    "gmres",
    "iteration_bound",
    "minres",
    "pcg",
    "AncillaryBreakdown",
    "BvpProblem",
    "ContractError",
    "OperatorContext",
    "apply_L",
    "apply_R",
    "apply_R_star",
    "apply_T",
    "bilinear_form",
    "condition_bound",
    "energy_norm",
    "prepare_rhs",
]
