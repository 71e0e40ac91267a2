"""Operator Krylov solvers: CG (plain and preconditioned), GMRES, MINRES.

All vectors are :class:`~opkrylov.chebfun.PiecewiseFun` objects and all dot
products are L2 inner products on [-1, 1]. The preconditioned solvers work on
``v`` with ``u = R(v + v2)``, where ``v2`` is the ancillary correction from
:func:`~opkrylov.operator.prepare_rhs`.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import chebfun as cf
from .chebfun import PiecewiseFun
from .operator import (
    ContractError,
    OperatorContext,
    apply_L,
    apply_R,
    apply_T,
    bilinear_form,
    energy_norm,
    prepare_rhs,
    projection_v0,
)

LUCKY_BREAKDOWN_TOL = 1e-13


class NotPositiveDefinite(RuntimeError):
    """CG met a direction with non-positive energy."""


@dataclass
class KrylovOptions:
    """Settings shared by the solvers.

    Attributes:
        tol: Stopping tolerance on the residual norm.
        max_iter: Iteration cap (total across GMRES restarts).
        restart: GMRES cycle length; ``None`` means no restarts.
        exact_solution: If given, energy errors ``|u - u_k|_L / |u|_L`` are
            recorded at every iteration.
        stop: ``"relative"`` (``|r_k| <= tol |r_0|``) or ``"absolute"``.
        record: Keep every residual, direction and iterate in the report.
        chop_tol: Relative chop applied to iterates each step.
        reorthogonalize: MINRES only. Keep the Lanczos vectors and
            orthogonalize each new one against all of them. Costs storage
            but removes the finite-precision drift of the short recurrence.
    """

    tol: float = 1e-10
    max_iter: int = 200
    restart: Optional[int] = None
    exact_solution: Optional[PiecewiseFun] = None
    stop: str = "relative"
    record: bool = False
    chop_tol: float = 1e-14
    reorthogonalize: bool = False

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ContractError("tol must lie in (0, 1)")
        if self.max_iter < 1:
            raise ContractError("max_iter must be at least 1")
        if self.restart is not None and self.restart < 1:
            raise ContractError("restart must be at least 1")
        if self.stop not in ("relative", "absolute"):
            raise ContractError("stop must be 'relative' or 'absolute'")


@dataclass
class KrylovReport:
    """Outcome of a solve. Histories have ``iterations + 1`` entries."""

    method: str
    u: PiecewiseFun
    v: PiecewiseFun
    v2: PiecewiseFun
    residual_history: list[float]
    energy_error_history: Optional[list[float]]
    time_history: list[float]
    alphas: list[float] = field(default_factory=list)
    betas: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    wall_time: float = 0.0
    solution_norm_history: list[float] = field(default_factory=list)
    residuals: list[PiecewiseFun] = field(default_factory=list)
    directions: list[PiecewiseFun] = field(default_factory=list)
    iterates: list[PiecewiseFun] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1]

    def normalized_residuals(self) -> list[float]:
        """``|R* g - T v_k| / |v_k|`` (blank-free; ``inf`` where ``v_k = 0``)."""
        return [r / n if n > 0 else math.inf for r, n in zip(self.residual_history, self.solution_norm_history)]


class _Tracker:
    """Book-keeping shared by all drivers."""

    def __init__(self, ctx: OperatorContext, opts: KrylovOptions, method: str):
        self.ctx = ctx
        self.opts = opts
        self.method = method
        self.t0 = time.perf_counter()
        self.res: list[float] = []
        self.times: list[float] = []
        self.norms: list[float] = []
        self.errs: Optional[list[float]] = [] if opts.exact_solution is not None else None
        self.iterates: list[PiecewiseFun] = []
        self._unorm = None
        if opts.exact_solution is not None:
            self._unorm = energy_norm(ctx, opts.exact_solution)

    def target(self, r0: float) -> float:
        return self.opts.tol * r0 if self.opts.stop == "relative" else self.opts.tol

    def log(self, resnorm: float, u: PiecewiseFun | None = None, vnorm: float = math.nan) -> None:
        self.res.append(float(resnorm))
        self.norms.append(float(vnorm))
        self.times.append(time.perf_counter() - self.t0)
        if self.errs is not None and u is not None:
            e = self.opts.exact_solution - u
            err = energy_norm(self.ctx, e)
            self.errs.append(err / self._unorm if self._unorm > 0 else err)
        if self.opts.record and u is not None:
            self.iterates.append(u)

    def wants_iterate(self) -> bool:
        return self.errs is not None or self.opts.record

    def report(self, u, v, v2, converged, iterations, **kw) -> KrylovReport:
        return KrylovReport(
            method=self.method, u=u, v=v, v2=v2, residual_history=self.res,
            energy_error_history=self.errs, time_history=self.times, converged=converged,
            iterations=iterations, wall_time=time.perf_counter() - self.t0,
            solution_norm_history=self.norms, iterates=self.iterates, **kw)


def _solution(v: PiecewiseFun, v2: PiecewiseFun) -> PiecewiseFun:
    return apply_R(v + v2 if not v2.is_zero else v)


def _require(ctx: OperatorContext, self_adjoint: bool = False, coercive: bool = False, hint: str = "") -> None:
    pb = ctx.problem
    if self_adjoint and not pb.self_adjoint:
        raise ContractError("operator is not self-adjoint (b != 0)" + hint)
    if coercive and not pb.coercive:
        raise ContractError("operator is not coercive (need a > 0, c >= 0)" + hint)


# ----------------------------------------------------------------------------
#  CG
# ----------------------------------------------------------------------------


def cg_unpreconditioned(ctx: OperatorContext, n: int, opts: KrylovOptions | None = None) -> KrylovReport:
    """CG on ``P_V0 L P_V0`` over polynomials of degree <= n vanishing at +-1.

    The right-hand side is replaced by its projection onto that space; the
    size of the discarded part is reported as ``info["rhs_projection_residual"]``.
    """
    opts = opts or KrylovOptions()
    _require(ctx, self_adjoint=True, coercive=True)
    tr = _Tracker(ctx, opts, "cg")
    f = ctx.problem.f
    r = projection_v0(ctx, f, n)
    info = {"rhs_projection_residual": cf.norm_l2(f - r), "v0_dimension": n - 1}
    zero = PiecewiseFun.zero(ctx.breakpoints)
    u = zero
    p = r
    rr = cf.inner_product(r, r)
    r0 = math.sqrt(rr)
    target = tr.target(r0)
    tr.log(r0, u, 0.0)
    res_list, dir_list = [r], [p]
    alphas, betas = [], []
    k = 0
    converged = r0 <= target
    while not converged and k < min(opts.max_iter, n - 1):
        Ap = projection_v0(ctx, apply_L(ctx, projection_v0(ctx, p, n)), n)
        bpp = bilinear_form(ctx, p, p)
        if bpp <= 0:
            raise NotPositiveDefinite(f"B[p, p] = {bpp:.3e} <= 0 at iteration {k}")
        alpha = rr / bpp
        u = cf.chop(cf.axpy(alpha, p, u), opts.chop_tol)
        r = cf.chop(cf.axpy(-alpha, Ap, r), opts.chop_tol)
        rr_new = cf.inner_product(r, r)
        beta = rr_new / rr
        p = cf.chop(cf.axpy(beta, p, r), opts.chop_tol)
        rr = rr_new
        k += 1
        alphas.append(alpha)
        betas.append(beta)
        tr.log(math.sqrt(rr), u, cf.norm_l2(u))
        if opts.record:
            res_list.append(r)
            dir_list.append(p)
        converged = math.sqrt(rr) <= target
    rep = tr.report(u, u, zero, converged, k, alphas=alphas, betas=betas, info=info)
    if opts.record:
        rep.residuals, rep.directions = res_list, dir_list
    return rep


def pcg(ctx: OperatorContext, opts: KrylovOptions | None = None) -> KrylovReport:
    """Preconditioned CG with the indefinite-integral preconditioner.

    Raises:
        ContractError: the problem is not self-adjoint and coercive.
        NotPositiveDefinite: ``B[R p, R p] <= 0`` was met.
    """
    opts = opts or KrylovOptions()
    _require(ctx, self_adjoint=True, coercive=True, hint="; use minres or gmres")
    tr = _Tracker(ctx, opts, "pcg")
    r, v2 = prepare_rhs(ctx)
    v = PiecewiseFun.zero(ctx.breakpoints)
    p = r
    rr = cf.inner_product(r, r)
    r0 = math.sqrt(rr)
    target = tr.target(r0)
    tr.log(r0, _solution(v, v2) if tr.wants_iterate() else None, 0.0)
    res_list, dir_list = [r], [p]
    alphas, betas = [], []
    k = 0
    converged = r0 <= target
    while not converged and k < opts.max_iter:
        Tp = apply_T(ctx, p)
        Rp = apply_R(p)
        bpp = bilinear_form(ctx, Rp, Rp)
        if bpp <= 0:
            raise NotPositiveDefinite(f"B[Rp, Rp] = {bpp:.3e} <= 0 at iteration {k}; use minres or gmres")
        alpha = rr / bpp
        v = cf.chop(cf.axpy(alpha, p, v), opts.chop_tol)
        r = cf.chop(cf.axpy(-alpha, Tp, r), opts.chop_tol)
        rr_new = cf.inner_product(r, r)
        beta = rr_new / rr
        p = cf.chop(cf.axpy(beta, p, r), opts.chop_tol)
        rr = rr_new
        k += 1
        alphas.append(alpha)
        betas.append(beta)
        tr.log(math.sqrt(rr), _solution(v, v2) if tr.wants_iterate() else None, cf.norm_l2(v))
        if opts.record:
            res_list.append(r)
            dir_list.append(p)
        converged = math.sqrt(rr) <= target
    rep = tr.report(_solution(v, v2), v, v2, converged, k, alphas=alphas, betas=betas)
    if opts.record:
        rep.residuals, rep.directions = res_list, dir_list
    return rep


# ----------------------------------------------------------------------------
#  Arnoldi / GMRES
# ----------------------------------------------------------------------------


@dataclass
class ArnoldiFactorization:
    """``T Q_k = Q_{k+1} H_k`` with orthonormal function columns.

    ``hessenberg`` has shape ``(len(basis), len(basis) - 1)`` while the
    factorization is extendable, and ``(k + 1, k)`` with ``breakdown`` set once
    the new direction vanished.
    """

    basis: list[PiecewiseFun]
    hessenberg: np.ndarray
    beta0: float
    breakdown: bool = False

    @classmethod
    def start(cls, r0: PiecewiseFun, norm: float | None = None) -> "ArnoldiFactorization":
        beta0 = cf.norm_l2(r0) if norm is None else norm
        if beta0 == 0:
            raise ContractError("cannot start Arnoldi from the zero function")
        return cls([r0 / beta0], np.zeros((1, 0)), beta0)

    @property
    def k(self) -> int:
        """Number of columns of ``H``."""
        return self.hessenberg.shape[1]


def arnoldi_step(ctx: OperatorContext, fact: ArnoldiFactorization, chop_tol: float = 1e-14) -> ArnoldiFactorization:
    """Append one column by modified Gram-Schmidt with one reorthogonalization.

    When the new direction has norm below ``1e-13 * beta0`` the result has
    ``breakdown=True`` and no new basis function (the Krylov space is
    invariant).
    """
    if fact.breakdown:
        raise ContractError("factorization already broke down")
    k = fact.k
    w = apply_T(ctx, fact.basis[k])
    h = np.zeros(k + 2)
    # Two MGS passes: one pass loses orthogonality once T q_k is nearly
    # inside the current space, which is exactly when GMRES converges.
    for _ in range(2):
        for j in range(k + 1):
            hj = cf.inner_product(fact.basis[j], w)
            h[j] += hj
            w = cf.axpy(-hj, fact.basis[j], w)
    w = cf.chop(w, chop_tol)
    h[k + 1] = cf.norm_l2(w)
    H = np.zeros((k + 2, k + 1))
    H[: k + 1, :k] = fact.hessenberg
    H[:, k] = h
    if h[k + 1] < LUCKY_BREAKDOWN_TOL * fact.beta0:
        return ArnoldiFactorization(list(fact.basis), H, fact.beta0, breakdown=True)
    return ArnoldiFactorization(fact.basis + [w / h[k + 1]], H, fact.beta0)


def _givens(a: float, b: float) -> tuple[float, float, float]:
    if b == 0.0:
        return 1.0, 0.0, a
    r = math.hypot(a, b)
    return a / r, b / r, r


def _combine(x0: PiecewiseFun, basis: list[PiecewiseFun], y: np.ndarray) -> PiecewiseFun:
    out = x0
    for yj, q in zip(y, basis):
        out = cf.axpy(float(yj), q, out)
    return out


def gmres(ctx: OperatorContext, opts: KrylovOptions | None = None) -> KrylovReport:
    """(Restarted) GMRES on ``T v = P R* g``.

    The least-squares residual is updated with Givens rotations. At a restart
    the true residual ``r0 - T v`` is recomputed. Non-convergence is reported,
    not raised.
    """
    opts = opts or KrylovOptions()
    tr = _Tracker(ctx, opts, "gmres")
    r0, v2 = prepare_rhs(ctx)
    beta0 = cf.norm_l2(r0)
    target = tr.target(beta0)
    v = PiecewiseFun.zero(ctx.breakpoints)
    tr.log(beta0, _solution(v, v2) if tr.wants_iterate() else None, 0.0)
    total = 0
    cycles = 0
    converged = beta0 <= target
    r, rnorm = r0, beta0
    while not converged and total < opts.max_iter:
        cycles += 1
        m = opts.restart or opts.max_iter
        fact = ArnoldiFactorization.start(r, rnorm)
        x0norm2 = cf.inner_product(v, v)
        proj = [cf.inner_product(fact.basis[0], v)]
        cs: list[float] = []
        sn: list[float] = []
        g = [rnorm]
        R = np.zeros((m, m))
        y = np.zeros(0)
        j = 0
        while j < m and total < opts.max_iter:
            fact = arnoldi_step(ctx, fact, opts.chop_tol)
            total += 1
            h = fact.hessenberg[:, j].copy()
            for i in range(j):
                h[i], h[i + 1] = cs[i] * h[i] + sn[i] * h[i + 1], -sn[i] * h[i] + cs[i] * h[i + 1]
            c, s, rr = _givens(h[j], h[j + 1])
            cs.append(c)
            sn.append(s)
            R[: j + 1, j] = h[: j + 1]
            R[j, j] = rr
            g.append(-s * g[j])
            g[j] = c * g[j]
            j += 1
            y = _back_substitute(R[:j, :j], np.array(g[:j]))
            if not fact.breakdown:
                proj.append(cf.inner_product(fact.basis[-1], v))
            vnorm2 = x0norm2 + 2.0 * float(np.dot(y, proj[:j])) + float(np.dot(y, y))
            res = abs(g[j])
            if fact.breakdown:
                res = 0.0
            need_u = tr.wants_iterate()
            vk = _combine(v, fact.basis, y) if need_u else None
            tr.log(res, _solution(vk, v2) if need_u else None, math.sqrt(max(vnorm2, 0.0)))
            if res <= target or fact.breakdown:
                converged = True
                break
        v = cf.chop(_combine(v, fact.basis, y), opts.chop_tol)
        if converged or total >= opts.max_iter:
            break
        r = cf.chop(r0 - apply_T(ctx, v), opts.chop_tol)
        rnorm = cf.norm_l2(r)
        if rnorm <= target:
            converged = True
            break
    return tr.report(_solution(v, v2), v, v2, converged, total, info={"cycles": cycles})


def _back_substitute(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    n = g.size
    y = np.zeros(n)
    for i in range(n - 1, -1, -1):
        y[i] = (g[i] - np.dot(R[i, i + 1:n], y[i + 1:n])) / R[i, i]
    return y


# ----------------------------------------------------------------------------
#  MINRES
# ----------------------------------------------------------------------------


def minres(ctx: OperatorContext, opts: KrylovOptions | None = None) -> KrylovReport:
    """MINRES on ``T v = P R* g`` for self-adjoint (possibly indefinite) problems.

    Lanczos three-term recurrence with two stored update directions; the
    residual norm is the rotated scalar of the tridiagonal least-squares
    problem, as in GMRES.
    """
    opts = opts or KrylovOptions()
    _require(ctx, self_adjoint=True, hint="; use gmres")
    tr = _Tracker(ctx, opts, "minres")
    b, v2 = prepare_rhs(ctx)
    zero = PiecewiseFun.zero(ctx.breakpoints)
    x = zero
    beta1 = cf.norm_l2(b)
    target = tr.target(beta1)
    tr.log(beta1, _solution(x, v2) if tr.wants_iterate() else None, 0.0)
    if beta1 <= target:
        return tr.report(_solution(x, v2), x, v2, True, 0)

    r1 = zero
    r2 = b
    beta = beta1
    oldb = 0.0
    dbar = 0.0
    epsln = 0.0
    phibar = beta1
    cs, sn = -1.0, 0.0
    w = zero
    w2 = zero
    alphas, betas = [], []
    basis = []
    k = 0
    converged = False
    while k < opts.max_iter:
        q = r2 / beta
        y = apply_T(ctx, q)
        if k > 0:
            y = cf.axpy(-beta / oldb, r1, y)
        alfa = cf.inner_product(q, y)
        y = cf.axpy(-alfa / beta, r2, y)
        if opts.reorthogonalize:
            basis.append(q)
            for qj in basis:
                y = cf.axpy(-cf.inner_product(qj, y), qj, y)
        y = cf.chop(y, opts.chop_tol)
        r1, r2 = r2, y
        oldb, beta = beta, cf.norm_l2(y)
        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(math.hypot(gbar, beta), np.finfo(float).eps)
        cs, sn = gbar / gamma, beta / gamma
        phi = cs * phibar
        phibar = sn * phibar
        w1, w2 = w2, w
        w = cf.chop(cf.axpy(-delta, w2, cf.axpy(-oldeps, w1, q)) / gamma, opts.chop_tol)
        x = cf.chop(cf.axpy(phi, w, x), opts.chop_tol)
        k += 1
        alphas.append(alfa)
        betas.append(beta)
        res = abs(phibar)
        tr.log(res, _solution(x, v2) if tr.wants_iterate() else None, cf.norm_l2(x))
        if res <= target or beta < LUCKY_BREAKDOWN_TOL * beta1:
            converged = True
            break
    return tr.report(_solution(x, v2), x, v2, converged, k, alphas=alphas, betas=betas)


def iteration_bound(kappa: float, eps: float) -> int:
    """Iterations sufficient for a relative energy error ``eps`` when the
    condition number is at most ``kappa``."""
    if kappa <= 1.0:
        return 1
    s = math.sqrt(kappa)
    return math.ceil(math.log(2.0 / eps) / (math.log(s + 1.0) - math.log(s - 1.0)))


def cg_error_bound(kappa: float, k: int) -> float:
    """``2 ((sqrt(kappa) - 1) / (sqrt(kappa) + 1))^k``."""
    s = math.sqrt(kappa)
    return 2.0 * ((s - 1.0) / (s + 1.0)) ** k
