"""Command-line front end.

Usage::

    opkrylov solve problem.txt --out results/
    opkrylov check-bound problem.txt

A problem file is a flat list of ``key = value`` lines. ``#`` starts a
comment, and expressions may be quoted::

    # -((2 + cos(pi x)) u')' = 1/(1 + x^2)
    a = "2 + cos(pi*x)"
    f = "1/(1+x^2)"
    method = pcg
    tol = 1e-12

Recognised keys: ``a``, ``b``, ``c``, ``f``, ``exact_solution``,
``breakpoints``, ``method``, ``tol``, ``max_iter``, ``restart``,
``v0_degree`` and ``sample_count``.
"""

from __future__ import annotations

import argparse
import csv
import shlex
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import chebfun as cf
from . import exprparse
from .chebfun import PiecewiseFun, UnresolvedFunctionError
from .krylov import (
    KrylovOptions,
    KrylovReport,
    NotPositiveDefinite,
    cg_error_bound,
    cg_unpreconditioned,
    gmres,
    minres,
    pcg,
)
from .operator import (
    AncillaryBreakdown,
    BvpProblem,
    ContractError,
    OperatorContext,
    apply_L,
    condition_bound,
)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NOT_CONVERGED = 2

METHODS = ("cg", "pcg", "minres", "gmres")
DEFAULT_V0_DEGREE = 32
DEFAULT_SAMPLE_COUNT = 501
# Slack added to the CG bound when checking it, to absorb rounding.
BOUND_SLACK = 1e-8

_EXPR_KEYS = ("a", "b", "c", "f", "exact_solution")
_INT_KEYS = ("max_iter", "restart", "v0_degree", "sample_count")
_KNOWN_KEYS = set(_EXPR_KEYS) | set(_INT_KEYS) | {"breakpoints", "method", "tol"}


class ProblemFileError(ValueError):
    """Malformed or inconsistent problem file."""


@dataclass(frozen=True)
class ProblemFile:
    """Parsed contents of a problem file.

    Expression fields hold the source text; ``b`` and ``c`` default to ``"0"``
    and ``f`` may be omitted when ``exact_solution`` is given.
    """

    a: str
    f: Optional[str] = None
    b: str = "0"
    c: str = "0"
    exact_solution: Optional[str] = None
    breakpoints: Optional[tuple[float, ...]] = None
    method: str = "pcg"
    tol: float = 1e-10
    max_iter: int = 200
    restart: Optional[int] = None
    v0_degree: Optional[int] = None
    sample_count: int = DEFAULT_SAMPLE_COUNT

    def validate(self) -> "ProblemFile":
        """Check option constraints and that every expression parses."""
        if self.method not in METHODS:
            raise ProblemFileError(f"method must be one of {', '.join(METHODS)}, got {self.method!r}")
        if self.restart is not None and self.method != "gmres":
            raise ProblemFileError(f"restart invalid for {self.method}")
        if self.v0_degree is not None and self.method != "cg":
            raise ProblemFileError(f"v0_degree invalid for {self.method}")
        if self.v0_degree is not None and self.v0_degree < 2:
            raise ProblemFileError("v0_degree must be at least 2")
        if self.restart is not None and self.restart < 1:
            raise ProblemFileError("restart must be at least 1")
        if self.max_iter < 1:
            raise ProblemFileError("max_iter must be at least 1")
        if not 0 < self.tol < 1:
            raise ProblemFileError("tol must lie in (0, 1)")
        if self.sample_count < 2:
            raise ProblemFileError("sample_count must be at least 2")
        if self.f is None and self.exact_solution is None:
            raise ProblemFileError("either f or exact_solution must be given")
        if self.breakpoints is not None:
            bp = self.breakpoints
            if len(bp) < 2 or bp[0] != -1.0 or bp[-1] != 1.0:
                raise ProblemFileError("breakpoints must start at -1 and end at 1")
            if any(b <= a for a, b in zip(bp, bp[1:])):
                raise ProblemFileError("breakpoints must be strictly increasing")
        for key in _EXPR_KEYS:
            text = getattr(self, key)
            if text is None:
                continue
            try:
                ast = exprparse.parse(text)
            except exprparse.ParseError as exc:
                raise ProblemFileError(f"{key}: {exc}") from None
            if self.breakpoints is None and exprparse.is_piecewise_smooth(ast):
                raise ProblemFileError(
                    f"{key} uses abs or sign; give breakpoints at its kinks and jumps"
                )
        return self


def _parse_breakpoints(text: str) -> tuple[float, ...]:
    items = [s for s in text.strip().strip("[]").split(",") if s.strip()]
    out = []
    for item in items:
        try:
            ast = exprparse.parse(item)
            if exprparse.uses_variable(ast):
                raise ProblemFileError(f"breakpoints must be constants, got {item.strip()!r}")
            out.append(exprparse.eval_at(ast, 0.0))
        except exprparse.ExprError as exc:
            raise ProblemFileError(f"breakpoints: {exc}") from None
    return tuple(out)


def parse_problem_text(text: str) -> ProblemFile:
    """Parse the text of a problem file (without validating it)."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, rest = line.partition("=")
        key = key.strip()
        if not sep:
            raise ProblemFileError(f"line {lineno}: expected 'key = value'")
        if key not in _KNOWN_KEYS:
            raise ProblemFileError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ProblemFileError(f"line {lineno}: duplicate key {key!r}")
        try:
            value = " ".join(shlex.split(rest, comments=True))
        except ValueError as exc:
            raise ProblemFileError(f"line {lineno}: {exc}") from None
        if not value:
            raise ProblemFileError(f"line {lineno}: empty value for {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key == "tol":
                values[key] = float(value)
            elif key == "breakpoints":
                values[key] = _parse_breakpoints(value)
            else:
                values[key] = value
        except ProblemFileError as exc:
            raise ProblemFileError(f"line {lineno}: {exc}") from None
        except ValueError:
            raise ProblemFileError(f"line {lineno}: bad value for {key!r}: {value!r}") from None
    if "a" not in values:
        raise ProblemFileError("missing required key 'a'")
    return ProblemFile(**values)


def load_problem(path) -> ProblemFile:
    """Read and parse a problem file."""
    return parse_problem_text(Path(path).read_text())


# --------------------------------------------------------------------------
# Building the problem
# --------------------------------------------------------------------------


def _to_fun(text: str, breakpoints) -> PiecewiseFun:
    ast = exprparse.parse(text)
    one_sided = exprparse.uses_function(ast, "sign")
    return cf.construct_adaptive(
        lambda x: exprparse.eval_array(ast, x), breakpoints, one_sided=one_sided
    )


@dataclass
class Setup:
    """A problem file turned into functions ready for the solvers."""

    pf: ProblemFile
    ctx: OperatorContext
    exact: Optional[PiecewiseFun]


def build_setup(pf: ProblemFile) -> Setup:
    """Resolve every expression and assemble the operator context.

    When ``f`` is absent, it is manufactured as ``L(exact_solution)``.
    """
    bp = pf.breakpoints
    a = _to_fun(pf.a, bp)
    b = _to_fun(pf.b, bp)
    c = _to_fun(pf.c, bp)
    exact = _to_fun(pf.exact_solution, bp) if pf.exact_solution is not None else None
    if pf.f is not None:
        f = _to_fun(pf.f, bp)
        problem = BvpProblem.build(a, f, b=b, c=c)
    else:
        placeholder = BvpProblem.build(a, PiecewiseFun.zero(a.breakpoints), b=b, c=c)
        f = apply_L(OperatorContext(placeholder), exact)
        problem = placeholder.with_rhs(f)
    return Setup(pf, OperatorContext(problem), exact)


def _kappa(ctx: OperatorContext) -> Optional[float]:
    pb = ctx.problem
    if pb.self_adjoint and pb.coercive:
        return condition_bound(ctx)
    return None


def run_solver(setup: Setup) -> KrylovReport:
    """Dispatch to the solver named in the problem file."""
    pf, ctx = setup.pf, setup.ctx
    pb = ctx.problem
    # Energy errors need a positive definite form.
    track = setup.exact if (pb.self_adjoint and pb.coercive) else None
    opts = KrylovOptions(tol=pf.tol, max_iter=pf.max_iter, restart=pf.restart,
                         exact_solution=track)
    if pf.method == "cg":
        return cg_unpreconditioned(ctx, pf.v0_degree or DEFAULT_V0_DEGREE, opts)
    if pf.method == "pcg":
        return pcg(ctx, opts)
    if pf.method == "minres":
        return minres(ctx, opts)
    return gmres(ctx, opts)


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_history(path: Path, report: KrylovReport) -> None:
    errs = report.energy_error_history
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "residual_norm", "energy_error_or_blank", "cumulative_seconds"])
        for k, (r, t) in enumerate(zip(report.residual_history, report.time_history)):
            e = _fmt(errs[k]) if errs is not None and k < len(errs) else ""
            w.writerow([k, _fmt(r), e, _fmt(t)])


def write_solution(path: Path, u: PiecewiseFun, n: int) -> None:
    xs = np.linspace(-1.0, 1.0, n)
    us = np.asarray(cf.evaluate(u, xs), dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u"])
        for x, v in zip(xs, us):
            w.writerow([_fmt(x), _fmt(v)])


def write_summary(path: Path, report: KrylovReport, kappa: Optional[float]) -> None:
    lines = [
        f"method = {report.method}",
        f"converged = {str(report.converged).lower()}",
        f"iterations = {report.iterations}",
        f"kappa_bound = {_fmt(kappa) if kappa is not None else 'n/a'}",
        f"final_residual = {_fmt(report.final_residual)}",
    ]
    if report.energy_error_history:
        lines.append(f"final_energy_error = {_fmt(report.energy_error_history[-1])}")
    Path(path).write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

_INPUT_ERRORS = (
    OSError,
    ProblemFileError,
    exprparse.ExprError,
    ContractError,
    AncillaryBreakdown,
    NotPositiveDefinite,
    UnresolvedFunctionError,
)


def _apply_overrides(pf: ProblemFile, args: argparse.Namespace) -> ProblemFile:
    changes = {}
    for name in ("tol", "max_iter", "restart", "method"):
        value = getattr(args, name, None)
        if value is not None:
            changes[name] = value
    return replace(pf, **changes).validate()


def solve_command(problem_path, output_dir, overrides: argparse.Namespace | None = None) -> int:
    """Solve a problem file and write CSV/summary outputs to ``output_dir``."""
    pf = _apply_overrides(load_problem(problem_path), overrides or argparse.Namespace())
    setup = build_setup(pf)
    kappa = _kappa(setup.ctx)
    report = run_solver(setup)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_history(out / "history.csv", report)
    write_solution(out / "solution.csv", report.u, pf.sample_count)
    write_summary(out / "summary.txt", report, kappa)
    status = "converged" if report.converged else "did not converge"
    print(f"{report.method}: {status} after {report.iterations} iterations, "
          f"residual {report.final_residual:.3e}")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def check_bound_command(problem_path, overrides: argparse.Namespace | None = None, stream=None) -> int:
    """Run PCG and compare each energy error with the CG convergence bound.

    With ``kappa == 1`` the bound is ``2`` at ``k = 0`` and ``0`` afterwards,
    i.e. the iteration must be exact after one step.
    """
    stream = stream or sys.stdout
    pf = load_problem(problem_path)
    if overrides is not None and getattr(overrides, "method", None) not in (None, "pcg"):
        raise ProblemFileError("check-bound always uses pcg")
    pf = _apply_overrides(replace(pf, method="pcg", restart=None, v0_degree=None),
                            overrides or argparse.Namespace())
    if pf.exact_solution is None:
        raise ProblemFileError("check-bound needs exact_solution")
    setup = build_setup(pf)
    kappa = condition_bound(setup.ctx)
    report = pcg(setup.ctx, KrylovOptions(tol=pf.tol, max_iter=pf.max_iter,
                                          exact_solution=setup.exact))
    ok = True
    print(f"kappa_bound = {_fmt(kappa)}", file=stream)
    for k, err in enumerate(report.energy_error_history):
        bound = cg_error_bound(kappa, k)
        passed = err <= bound + BOUND_SLACK
        ok &= passed
        print(f"k={k} error={err:.6e} bound={bound:.6e} {'PASS' if passed else 'FAIL'}", file=stream)
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opkrylov",
        description="Solve -(a u')' + b u' + c u = f, u(-1) = u(1) = 0, with operator Krylov methods.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def overrides(p):
        p.add_argument("--tol", type=float, help="stopping tolerance (relative residual)")
        p.add_argument("--max-iter", dest="max_iter", type=int, help="iteration cap")
        p.add_argument("--restart", type=int, help="GMRES restart length")
        p.add_argument("--method", choices=METHODS, help="solver to use")

    p_solve = sub.add_parser("solve", help="solve a problem file and write CSV output")
    p_solve.add_argument("problem", help="problem file")
    p_solve.add_argument("--out", default="output", help="output directory (default: ./output)")
    overrides(p_solve)

    p_check = sub.add_parser("check-bound", help="verify the PCG energy-error bound")
    p_check.add_argument("problem", help="problem file")
    overrides(p_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return solve_command(args.problem, args.out, args)
        return check_bound_command(args.problem, args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
