"""Shared fixtures: model problems and random function generators."""

import math

import numpy as np
import pytest

from opkrylov import chebfun as cf
from opkrylov.chebfun import ChebSeries, PiecewiseFun
from opkrylov.operator import BvpProblem, OperatorContext, bilinear_form, energy_norm, v0_basis


def exp_taylor(x, terms=40):
    """exp(x) by direct summation of its Taylor series (independent oracle)."""
    return math.fsum(x**k / math.factorial(k) for k in range(terms))


def random_fun(rng, degree, breakpoints=None, decay=0.0):
    """Random piecewise polynomial with coefficients in [-1, 1]."""
    bp = np.array([-1.0, 1.0] if breakpoints is None else breakpoints, dtype=float)
    pieces = []
    for lo, hi in zip(bp[:-1], bp[1:]):
        c = rng.uniform(-1, 1, degree + 1) * np.exp(-decay * np.arange(degree + 1))
        pieces.append(ChebSeries(c, (lo, hi)))
    return PiecewiseFun(bp, tuple(pieces))


def laplacian_problem():
    f = cf.construct_adaptive(lambda x: 1 - x**2)
    return BvpProblem.build(1.0, f)


def laplacian_exact():
    return cf.construct_adaptive(lambda x: (x**4 - 6 * x**2 + 5) / 12)


def _rhs():
    return cf.construct_adaptive(lambda x: 1 / (1 + x**2))


def problem_e1():
    """-((2 + cos(pi x)) u')' = 1/(1+x^2)."""
    a = cf.construct_adaptive(lambda x: 2 + np.cos(np.pi * x))
    return BvpProblem.build(a, _rhs())


def problem_e2():
    """-((1 + x^2) u')' + ((pi/4) cos(pi x))^2 u = 1/(1+x^2)."""
    a = cf.construct_adaptive(lambda x: 1 + x**2)
    c = cf.construct_adaptive(lambda x: (np.pi / 4 * np.cos(np.pi * x)) ** 2)
    return BvpProblem.build(a, _rhs(), c=c)


def problem_e3():
    """-u'' + 2 (pi/4)^2 u = 1/(1+x^2)."""
    return BvpProblem.build(1.0, _rhs(), c=2 * (np.pi / 4) ** 2)


def matrix_cg_errors(ctx, n, iters, exact):
    """Textbook CG on the Galerkin system in the cached V0 basis."""
    basis = v0_basis(ctx, n)
    A = np.array([[bilinear_form(ctx, p, q) for q in basis] for p in basis])
    b = np.array([cf.inner_product(ctx.problem.f, e) for e in basis])
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    unorm = energy_norm(ctx, exact)

    def err(x):
        u = PiecewiseFun.zero()
        for c, e in zip(x, basis):
            u = cf.axpy(c, e, u)
        return energy_norm(ctx, exact - u) / unorm

    out = [err(x)]
    for _ in range(iters):
        rr = r @ r
        if rr == 0:
            out.append(out[-1])
            continue
        Ap = A @ p
        alpha = rr / (p @ Ap)
        x = x + alpha * p
        r = r - alpha * Ap
        p = r + (r @ r) / rr * p
        out.append(err(x))
    return np.array(out)


SMOOTH_PROBLEMS = {"E1": problem_e1, "E2": problem_e2, "E3": problem_e3}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def laplacian():
    return OperatorContext(laplacian_problem())


@pytest.fixture(scope="session")
def smooth_contexts():
    return {name: OperatorContext(make()) for name, make in SMOOTH_PROBLEMS.items()}
