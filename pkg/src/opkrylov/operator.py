"""The differential operator, its weak form, and the integral preconditioner.

Problems have the form ``-(a u')' + b u' + c u = f`` on (-1, 1) with
``u(-1) = u(1) = 0``. The preconditioned Krylov methods iterate on the
composed map ``T = P R* L R P`` where ``R`` is indefinite integration from -1,
``R*`` its L2 adjoint (integration up to 1) and ``P`` removes the mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from . import chebfun as cf
from .chebfun import PiecewiseFun

# 4/pi, the L2 operator norm of indefinite integration on [-1, 1]
R_OP_NORM = 4.0 / math.pi
BOUNDARY_TOL = 1e-10
SAMPLES_PER_PIECE = 2049
SELF_ADJOINT_TOL = 1e-13


class ContractError(ValueError):
    """An operation was called outside its stated preconditions."""


class AncillaryBreakdown(RuntimeError):
    """No trial function produced a usable ancillary functional value."""


@dataclass(frozen=True, eq=False)
class BvpProblem:
    """Coefficients, right-hand side and structural flags of a BVP.

    Attributes:
        a: Diffusion coefficient.
        b: Advection coefficient.
        c: Reaction coefficient.
        f: Right-hand side.
        self_adjoint: True iff ``b`` vanishes (checked by sampling).
        coercive: Caller's assertion that ``a > 0`` and ``c >= 0``.
    """

    a: PiecewiseFun
    b: PiecewiseFun
    c: PiecewiseFun
    f: PiecewiseFun
    self_adjoint: bool = True
    coercive: bool = True

    def __post_init__(self):
        if self.self_adjoint and cf.max_abs(self.b, SAMPLES_PER_PIECE - 1) >= SELF_ADJOINT_TOL:
            raise ContractError("self_adjoint is set but b is not identically zero")
        if self.a.num_pieces > 1:
            jump = np.max(np.abs(self.a.jumps()))
            if jump > 1e-12 * max(1.0, cf.max_abs(self.a)):
                raise ContractError("a must be continuous: the flux derivative would need delta terms")

    @classmethod
    def build(cls, a, f, b=None, c=None, coercive: bool | None = None) -> "BvpProblem":
        """Convenience constructor. ``None`` coefficients are zero; scalars
        become constants. Flags are inferred by sampling unless given."""
        bp = cf.concatenate_breakpoints(x for x in (a, b, c, f) if isinstance(x, PiecewiseFun))
        a, b, c, f = (_as_fun(x, bp) for x in (a, b, c, f))
        self_adjoint = cf.max_abs(b, SAMPLES_PER_PIECE - 1) < SELF_ADJOINT_TOL
        if coercive is None:
            coercive = _sampled_min(a) > 0 and _sampled_min(c) >= -1e-14
        return cls(a, b, c, f, self_adjoint, coercive)

    def with_rhs(self, f: PiecewiseFun) -> "BvpProblem":
        return BvpProblem(self.a, self.b, self.c, f, self.self_adjoint, self.coercive)


def _as_fun(x, bp) -> PiecewiseFun:
    if x is None:
        return PiecewiseFun.zero(bp)
    if isinstance(x, PiecewiseFun):
        return x
    return PiecewiseFun.constant(float(x), bp)


def _sample_grid(p: PiecewiseFun) -> list[tuple[cf.ChebSeries, np.ndarray, np.ndarray]]:
    out = []
    for s in p.pieces:
        x = s.points(SAMPLES_PER_PIECE - 1)
        out.append((s, x, s(x)))
    return out


def _polish(s: cf.ChebSeries, x: np.ndarray, v: np.ndarray, sign: float) -> float:
    """Refine the extreme sample of ``sign * v`` with a bounded scalar search."""
    i = int(np.argmax(sign * v))
    best = sign * v[i]
    lo = x[max(i - 1, 0)]
    hi = x[min(i + 1, x.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda t: -sign * float(s(t)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12 * max(hi - lo, 1e-300)})
        best = max(best, -float(res.fun))
    return best


def sampled_max(p: PiecewiseFun) -> float:
    return max(_polish(s, x, v, 1.0) for s, x, v in _sample_grid(p))


def _sampled_min(p: PiecewiseFun) -> float:
    return -max(_polish(s, x, v, -1.0) for s, x, v in _sample_grid(p))


def sampled_sup_norm(p: PiecewiseFun) -> float:
    """Sup-norm from dense Chebyshev sampling, polished near the maximiser."""
    return max(sampled_max(p), -_sampled_min(p))


@dataclass(eq=False)
class OperatorContext:
    """A problem plus solver-wide settings and caches.

    Attributes:
        problem: The BVP.
        tol: Chop tolerance for composed operator outputs.
    """

    problem: BvpProblem
    tol: float = cf.DEFAULT_TOL
    _v0_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.tol > 0:
            raise ContractError("tolerance must be positive")

    @property
    def breakpoints(self) -> np.ndarray:
        return self.problem.f.breakpoints


# ----------------------------------------------------------------------------
#  differential operator and weak form
# ----------------------------------------------------------------------------


def apply_L(ctx: OperatorContext, u: PiecewiseFun) -> PiecewiseFun:
    """``-(a u')' + b u' + c u``."""
    pb = ctx.problem
    du = cf.differentiate(u)
    out = cf.scale(cf.differentiate(cf.multiply(pb.a, du)), -1.0)
    if not pb.self_adjoint:
        out = out + cf.multiply(pb.b, du)
    if not pb.c.is_zero:
        out = out + cf.multiply(pb.c, u)
    return out


def _check_boundary(name: str, phi: PiecewiseFun) -> None:
    scl = max(1.0, max(s.scale for s in phi.pieces))
    lo, hi = phi(-1.0), phi(1.0)
    if abs(lo) > BOUNDARY_TOL * scl or abs(hi) > BOUNDARY_TOL * scl:
        raise ContractError(f"{name} must vanish at -1 and 1 (got {lo:.3e}, {hi:.3e})")


def bilinear_form(ctx: OperatorContext, phi: PiecewiseFun, psi: PiecewiseFun) -> float:
    """``int a phi' psi' + b phi' psi + c phi psi`` for ``phi, psi`` in H^1_0."""
    _check_boundary("phi", phi)
    _check_boundary("psi", psi)
    pb = ctx.problem
    dphi = cf.differentiate(phi)
    dpsi = cf.differentiate(psi)
    total = cf.inner_product(cf.multiply(pb.a, dphi), dpsi)
    if not pb.self_adjoint:
        total += cf.inner_product(cf.multiply(pb.b, dphi), psi)
    if not pb.c.is_zero:
        total += cf.inner_product(cf.multiply(pb.c, phi), psi)
    return total


def energy_norm(ctx: OperatorContext, phi: PiecewiseFun) -> float:
    return math.sqrt(max(bilinear_form(ctx, phi, phi), 0.0))


# ----------------------------------------------------------------------------
#  preconditioner and projections
# ----------------------------------------------------------------------------


def apply_R(p: PiecewiseFun) -> PiecewiseFun:
    return cf.indefinite_integral(p)


def apply_R_star(p: PiecewiseFun) -> PiecewiseFun:
    return cf.adjoint_integral(p)


def projection_w0(p: PiecewiseFun) -> PiecewiseFun:
    """Orthogonal projection onto zero-mean functions."""
    return p - cf.mean(p)


def v0_basis(ctx: OperatorContext, n: int) -> tuple[PiecewiseFun, ...]:
    """L2-orthonormal basis of polynomials of degree <= n vanishing at +-1.

    Gram-Schmidt (two passes) on ``(1 - x^2) T_k``, ``k = 0..n-2``; cached on
    the context per ``n``.
    """
    if n < 2:
        raise ContractError("V0 degree must be at least 2")
    basis = ctx._v0_cache.get(n)
    if basis is not None:
        return basis
    bubble = PiecewiseFun.from_coeffs([0.5, 0.0, -0.5])
    out: list[PiecewiseFun] = []
    for k in range(n - 1):
        e = np.zeros(k + 1)
        e[k] = 1.0
        q = cf.multiply(bubble, PiecewiseFun.from_coeffs(e))
        for _ in range(2):
            for prev in out:
                q = cf.axpy(-cf.inner_product(prev, q), prev, q)
        q = q / cf.norm_l2(q)
        out.append(q)
    basis = tuple(out)
    ctx._v0_cache[n] = basis
    return basis


def projection_v0(ctx: OperatorContext, p: PiecewiseFun, n: int) -> PiecewiseFun:
    """L2-orthogonal projection onto ``{v in P_n : v(+-1) = 0}``."""
    basis = v0_basis(ctx, n)
    coef = [cf.inner_product(p, e) for e in basis]
    out = PiecewiseFun.zero()
    for c, e in zip(coef, basis):
        out = cf.axpy(c, e, out)
    return out


def apply_T(ctx: OperatorContext, p: PiecewiseFun) -> PiecewiseFun:
    """``P R* L R P p`` with ``P`` the zero-mean projection."""
    w = projection_w0(p)
    out = projection_w0(apply_R_star(apply_L(ctx, apply_R(w))))
    return cf.chop(out, ctx.tol)


def condition_bound(ctx: OperatorContext) -> float:
    """Upper bound ``(|a|_inf + |c|_inf (4/pi)^2) / inf |a|`` on the condition
    number of the preconditioned operator."""
    pb = ctx.problem
    if not pb.coercive:
        raise ContractError("condition bound needs a coercive problem (a > 0, c >= 0)")
    if not pb.self_adjoint:
        raise ContractError("condition bound needs a self-adjoint problem (b = 0)")
    a_inf = _sampled_min(pb.a)
    if a_inf <= 0:
        raise ContractError("a must be positive")
    a_sup = sampled_max(pb.a)
    c_sup = sampled_sup_norm(pb.c) if not pb.c.is_zero else 0.0
    return (a_sup + c_sup * R_OP_NORM**2) / a_inf


# ----------------------------------------------------------------------------
#  ancillary right-hand-side correction
# ----------------------------------------------------------------------------

ANCILLARY_SKIP_TOL = 1e-14
ANCILLARY_ETA_TOL = 1e-10


def _candidate_trials() -> list[tuple[str, Callable]]:
    return [
        ("x", lambda x: x),
        ("x^2-1/3", lambda x: x**2 - 1.0 / 3.0),
        ("x^3-(3/5)x", lambda x: x**3 - 0.6 * x),
        ("sin(pi*x)", lambda x: np.sin(np.pi * x)),
    ]


def ancillary_functional(ctx: OperatorContext, w: PiecewiseFun) -> float:
    """``[R R* L R w](1)``."""
    return apply_R(apply_R_star(apply_L(ctx, apply_R(w))))(1.0)


def solve_ancillary(ctx: OperatorContext) -> tuple[PiecewiseFun, float, float]:
    """Find a zero-mean ``v2`` with ``[R R* L R v2](1) = [R R* f](1)``.

    Returns:
        ``(v2, eta, rho)``: the correction, the functional value of the chosen
        trial function, and ``rho = int (s + 1) f(s) ds``.

    Raises:
        AncillaryBreakdown: every trial function gave a negligible ``eta``.
    """
    f = ctx.problem.f
    bp = ctx.breakpoints
    rho = apply_R(apply_R_star(f))(1.0)
    fnorm = cf.norm_l2(f)
    if abs(rho) <= ANCILLARY_SKIP_TOL * fnorm:
        return PiecewiseFun.zero(bp), 0.0, rho
    tried = []
    for name, fn in _candidate_trials():
        w = cf.construct_adaptive(fn, bp)
        eta = ancillary_functional(ctx, w)
        tried.append(f"{name} (eta={eta:.3e})")
        if abs(eta) > ANCILLARY_ETA_TOL * fnorm:
            return cf.scale(w, rho / eta), eta, rho
    raise AncillaryBreakdown("ancillary problem broke down; tried " + ", ".join(tried))


def prepare_rhs(ctx: OperatorContext) -> tuple[PiecewiseFun, PiecewiseFun]:
    """Start residual ``r0 = P R* g`` with ``g = f - L R v2``, and ``v2``."""
    v2, _, _ = solve_ancillary(ctx)
    r0 = projection_w0(apply_R_star(corrected_rhs(ctx, v2)))
    return cf.chop(r0, ctx.tol), v2


def corrected_rhs(ctx: OperatorContext, v2: PiecewiseFun) -> PiecewiseFun:
    """``g = f - L R v2`` (the right-hand side left for the Krylov solve)."""
    if v2.is_zero:
        return ctx.problem.f
    return ctx.problem.f - apply_L(ctx, apply_R(v2))
