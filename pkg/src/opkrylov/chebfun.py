"""Adaptive Chebyshev function algebra on [-1, 1].

Functions are stored as :class:`PiecewiseFun` objects: a sorted array of
breakpoints with one :class:`ChebSeries` per subinterval. A single-piece
function is the smooth case. Every operation returns a fresh, chopped object;
inputs are never modified.

Conventions:
    * Chebyshev points of the second kind are ordered ascending,
      ``x_j = -cos(j*pi/n)`` for ``j = 0..n``.
    * ``coeffs[k]`` multiplies ``T_k`` of the affinely mapped variable.
    * Evaluation at an interior breakpoint uses the right-hand piece.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.fft import dct

DEFAULT_TOL = 1e-15
MAX_DEGREE = 2**16
_MIN_LOG2 = 3
_BREAK_MERGE_TOL = 1e-14


class UnresolvedFunctionError(RuntimeError):
    """Adaptive construction hit the degree cap on at least one piece.

    The partially resolved function is available as ``result``.
    """

    def __init__(self, message: str, result: "PiecewiseFun"):
        super().__init__(message)
        self.result = result


# ----------------------------------------------------------------------------
#  coefficient-level kernels
# ----------------------------------------------------------------------------


def chebpts(n: int) -> np.ndarray:
    """Return the ``n + 1`` Chebyshev points of the second kind, ascending."""
    if n == 0:
        return np.array([0.0])
    # sin form is symmetric to the last bit and gives exact 0 at the centre
    j = np.arange(-n, n + 1, 2)
    return np.sin(np.pi * j / (2.0 * n))


def values_to_coeffs(values: Sequence[float]) -> np.ndarray:
    """Chebyshev coefficients of the interpolant through values at ``chebpts``.

    Uses a type-I DCT, so the cost is O(n log n).
    """
    v = np.asarray(values, dtype=float)
    n = v.size - 1
    if n == 0:
        return v.copy()
    c = dct(v[::-1], type=1) / n
    c[0] /= 2.0
    c[-1] /= 2.0
    return c


def coeffs_to_values(coeffs: Sequence[float]) -> np.ndarray:
    """Values of a Chebyshev series at its own ``chebpts`` grid (inverse of
    :func:`values_to_coeffs`)."""
    c = np.asarray(coeffs, dtype=float)
    n = c.size - 1
    if n == 0:
        return c.copy()
    y = dct(c, type=1)
    alt = np.ones(n + 1)
    alt[1::2] = -1.0
    v = 0.5 * (y + c[0] + alt * c[-1])
    return v[::-1]


def clenshaw(coeffs: np.ndarray, t) -> np.ndarray:
    """Evaluate ``sum coeffs[k] T_k(t)`` by Clenshaw's recurrence."""
    t = np.asarray(t, dtype=float)
    c = coeffs
    if c.size == 1:
        return np.full_like(t, c[0])
    b1 = np.zeros_like(t)
    b2 = np.zeros_like(t)
    tt = 2.0 * t
    for ck in c[:0:-1]:
        b1, b2 = ck + tt * b1 - b2, b1
    return c[0] + t * b1 - b2


def chop_coeffs(coeffs: np.ndarray, tol: float = DEFAULT_TOL, scale: float | None = None) -> np.ndarray:
    """Drop trailing coefficients with magnitude at or below ``tol * scale``.

    ``scale`` defaults to ``max|coeffs|``. A zero sequence becomes ``[0.0]``.
    """
    c = np.asarray(coeffs, dtype=float)
    if scale is None:
        scale = float(np.max(np.abs(c))) if c.size else 0.0
    if c.size == 0 or scale == 0.0:
        return np.zeros(1)
    big = np.nonzero(np.abs(c) > tol * scale)[0]
    if big.size == 0:
        return np.zeros(1)
    return c[: big[-1] + 1].copy()


def standard_chop(coeffs: np.ndarray, tol: float = DEFAULT_TOL) -> int:
    """Number of leading coefficients worth keeping, or ``len(coeffs)`` if the
    sequence has not reached a noise plateau yet.

    Plateau detection on the monotone envelope of ``|coeffs|``, followed by a
    log-linear cutoff. Sequences shorter than 17 are never declared converged.
    """
    b = np.abs(np.asarray(coeffs, dtype=float))
    n = b.size
    if n < 17:
        return n
    env = np.maximum.accumulate(b[::-1])[::-1]
    if env[0] == 0.0:
        return 1
    env = env / env[0]
    plateau = None
    j2 = n
    for j in range(1, n):
        j2 = int(round(1.25 * (j + 1) + 5)) - 1
        if j2 >= n:
            return n
        e1, e2 = env[j], env[j2]
        r = 3.0 * (1.0 - math.log(e1) / math.log(tol)) if e1 > 0 else 0.0
        if e1 == 0.0 or e2 / e1 > r:
            plateau = j - 1
            break
    if env[plateau] == 0.0:
        return plateau + 1
    floor = tol ** (7.0 / 6.0)
    j3 = int(np.sum(env >= floor))
    if j3 < j2 + 1:
        j2 = j3
        env = env.copy()
        env[j2] = floor
    cc = np.log10(env[: j2 + 1]) + np.linspace(0.0, -math.log10(tol) / 3.0, j2 + 1)
    return max(int(np.argmin(cc)), 1)


def _cumsum_coeffs(a: np.ndarray) -> np.ndarray:
    """Coefficients of an antiderivative on [-1, 1], constant term left at 0."""
    n = a.size - 1
    ap = np.zeros(n + 3)
    ap[: n + 1] = a
    b = np.zeros(n + 2)
    b[1] = ap[0] - ap[2] / 2.0
    k = np.arange(2, n + 2)
    b[2:] = (ap[k - 1] - ap[k + 1]) / (2.0 * k)
    return b


def _diff_coeffs(a: np.ndarray) -> np.ndarray:
    """Coefficients of the derivative on [-1, 1]."""
    n = a.size - 1
    if n == 0:
        return np.zeros(1)
    d = np.zeros(n + 2)
    for k in range(n, 0, -1):
        d[k - 1] = d[k + 1] + 2.0 * k * a[k]
    d[0] /= 2.0
    return d[:n]


def _left_sum(c: np.ndarray) -> float:
    """Series value at -1."""
    alt = np.ones(c.size - 1)
    alt[::2] = -1.0
    return float(c[0] + np.dot(alt, c[1:]))


def _right_sum(c: np.ndarray) -> float:
    """Series value at 1."""
    return float(c[0] + np.sum(c[1:]))


def _sum_coeffs(a: np.ndarray) -> float:
    """Integral over [-1, 1] (Clenshaw-Curtis weights in coefficient space)."""
    even = a[::2]
    k = np.arange(0, a.size, 2)
    return float(np.sum(even * (2.0 / (1.0 - k * k))))


# ----------------------------------------------------------------------------
#  single smooth piece
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ChebSeries:
    """Chebyshev expansion of a smooth function on ``domain``.

    Attributes:
        coeffs: Chebyshev coefficients, highest degree last.
        domain: ``(lo, hi)`` subinterval of [-1, 1].
        resolved: False when adaptive construction hit the degree cap.
    """

    coeffs: np.ndarray
    domain: tuple[float, float] = (-1.0, 1.0)
    resolved: bool = True

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size == 0:
            c = np.zeros(1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        lo, hi = float(self.domain[0]), float(self.domain[1])
        if not lo < hi:
            raise ValueError(f"empty domain ({lo}, {hi})")
        object.__setattr__(self, "domain", (lo, hi))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def halfwidth(self) -> float:
        return 0.5 * (self.domain[1] - self.domain[0])

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def to_reference(self, x):
        lo, hi = self.domain
        return (2.0 * np.asarray(x, dtype=float) - (lo + hi)) / (hi - lo)

    def from_reference(self, t):
        lo, hi = self.domain
        return 0.5 * (hi - lo) * (np.asarray(t, dtype=float) + 1.0) + lo

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = clenshaw(self.coeffs, self.to_reference(x))
        # Endpoint values use the closed sums T_k(+-1) = (+-1)^k, in the same
        # order the integrators use to pin their constants, so that
        # integrals vanish exactly where they should.
        lo, hi = self.domain
        if np.any(x == lo):
            out = np.where(x == lo, _left_sum(self.coeffs), out)
        if np.any(x == hi):
            out = np.where(x == hi, _right_sum(self.coeffs), out)
        return out

    def points(self, n: int | None = None) -> np.ndarray:
        """Chebyshev points mapped to this piece's domain."""
        if n is None:
            n = self.degree
        pts = self.from_reference(chebpts(n))
        if n > 0:
            pts[0], pts[-1] = self.domain
        return pts

    def values(self, n: int | None = None) -> np.ndarray:
        """Values on an ``n + 1`` point Chebyshev grid (padded transform)."""
        if n is None or n == self.degree:
            return coeffs_to_values(self.coeffs)
        if n > self.degree:
            c = np.zeros(n + 1)
            c[: self.coeffs.size] = self.coeffs
            return coeffs_to_values(c)
        return self(self.points(n))

    def restrict(self, lo: float, hi: float) -> "ChebSeries":
        """The same polynomial re-expanded on ``[lo, hi]``."""
        if (lo, hi) == self.domain:
            return self
        sub = ChebSeries(np.zeros(1), (lo, hi))
        return ChebSeries(values_to_coeffs(self(sub.points(self.degree))), (lo, hi), self.resolved)

    def chop(self, tol: float = DEFAULT_TOL, scale: float | None = None) -> "ChebSeries":
        return ChebSeries(chop_coeffs(self.coeffs, tol, scale), self.domain, self.resolved)


def construct_series(sampler: Callable, domain: tuple[float, float] = (-1.0, 1.0),
                     tol: float = DEFAULT_TOL, one_sided: bool = False) -> ChebSeries:
    """Adaptively resolve ``sampler`` on one interval.

    Samples on grids of ``2**j + 1`` Chebyshev points (j = 3, 4, ...) until the
    coefficients reach a plateau at relative level ``tol`` (:func:`standard_chop`).
    With ``one_sided`` the two end samples are taken a hair inside the
    interval, which gives the one-sided limit of a jump sitting on a
    breakpoint.
    """
    lo, hi = float(domain[0]), float(domain[1])
    shell = ChebSeries(np.zeros(1), (lo, hi))
    coeffs = np.zeros(1)
    for j in range(_MIN_LOG2, 17):
        n = 2**j
        x = shell.points(n)
        if one_sided:
            nudge = 1e-13 * (hi - lo)
            x[0] += nudge
            x[-1] -= nudge
        v = _sample(sampler, x)
        coeffs = values_to_coeffs(v)
        keep = standard_chop(coeffs, tol)
        if keep < coeffs.size:
            return ChebSeries(chop_coeffs(coeffs[:keep], tol), (lo, hi), True)
    return ChebSeries(coeffs, (lo, hi), False)


def _sample(sampler: Callable, x: np.ndarray) -> np.ndarray:
    v = np.asarray(sampler(x), dtype=float)
    if v.shape != x.shape:
        v = np.broadcast_to(v, x.shape).astype(float)
    if not np.all(np.isfinite(v)):
        raise ValueError("sampler returned non-finite values")
    return v


# ----------------------------------------------------------------------------
#  piecewise functions
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PiecewiseFun:
    """A function on [-1, 1] with one Chebyshev series per subinterval.

    Supports ``+``, ``-``, ``*`` (with scalars or other functions), unary
    minus, and calling on scalars or arrays.
    """

    breakpoints: np.ndarray
    pieces: tuple[ChebSeries, ...] = field(default=())

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float).ravel()
        pieces = tuple(self.pieces)
        if bp.size < 2 or bp[0] != -1.0 or bp[-1] != 1.0:
            raise ValueError("breakpoints must start at -1 and end at 1")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if len(pieces) != bp.size - 1:
            raise ValueError("need exactly one piece per subinterval")
        for p, lo, hi in zip(pieces, bp[:-1], bp[1:]):
            if p.domain != (lo, hi):
                raise ValueError(f"piece domain {p.domain} does not match [{lo}, {hi}]")
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "pieces", pieces)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[float]) -> "PiecewiseFun":
        """Single-piece function from Chebyshev coefficients on [-1, 1]."""
        return cls(np.array([-1.0, 1.0]), (ChebSeries(coeffs),))

    @classmethod
    def constant(cls, value: float, breakpoints: Sequence[float] | None = None) -> "PiecewiseFun":
        bp = _as_breakpoints(breakpoints)
        return cls(bp, tuple(ChebSeries([value], (lo, hi)) for lo, hi in zip(bp[:-1], bp[1:])))

    @classmethod
    def identity(cls, breakpoints: Sequence[float] | None = None) -> "PiecewiseFun":
        bp = _as_breakpoints(breakpoints)
        return cls(bp, tuple(ChebSeries([0.5 * (lo + hi), 0.5 * (hi - lo)], (lo, hi))
                             for lo, hi in zip(bp[:-1], bp[1:])))

    @classmethod
    def zero(cls, breakpoints: Sequence[float] | None = None) -> "PiecewiseFun":
        return cls.constant(0.0, breakpoints)

    # -- properties ---------------------------------------------------------

    @property
    def num_pieces(self) -> int:
        return len(self.pieces)

    @property
    def resolved(self) -> bool:
        return all(p.resolved for p in self.pieces)

    @property
    def degrees(self) -> list[int]:
        return [p.degree for p in self.pieces]

    @property
    def is_zero(self) -> bool:
        return all(not np.any(p.coeffs) for p in self.pieces)

    def vscale(self, samples: int = 0) -> float:
        """Rough sup-norm: max |value| on each piece's own grid."""
        return max(float(np.max(np.abs(p.values(max(p.degree, samples))))) for p in self.pieces)

    def jumps(self) -> np.ndarray:
        """Value jumps (right limit minus left limit) at interior breakpoints."""
        out = []
        for left, right in zip(self.pieces[:-1], self.pieces[1:]):
            x = left.domain[1]
            out.append(float(right(x)) - float(left(x)))
        return np.array(out)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x):
        return evaluate(self, x)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, PiecewiseFun):
            return axpy(1.0, other, self)
        return _add_constant(self, float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, PiecewiseFun):
            return axpy(-1.0, other, self)
        return _add_constant(self, -float(other))

    def __rsub__(self, other):
        return _add_constant(scale(self, -1.0), float(other))

    def __neg__(self):
        return scale(self, -1.0)

    def __mul__(self, other):
        if isinstance(other, PiecewiseFun):
            return multiply(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return scale(self, 1.0 / float(other))

    def __repr__(self):
        return f"PiecewiseFun(pieces={self.num_pieces}, degrees={self.degrees})"


def _as_breakpoints(breakpoints) -> np.ndarray:
    if breakpoints is None:
        return np.array([-1.0, 1.0])
    return np.asarray(breakpoints, dtype=float)


def construct_adaptive(sampler: Callable, breakpoints: Sequence[float] | None = None,
                       tol: float = DEFAULT_TOL, strict: bool = True,
                       one_sided: bool = False) -> PiecewiseFun:
    """Resolve a vectorised ``sampler`` on each subinterval of ``breakpoints``.

    Args:
        sampler: Callable accepting an array of points in [-1, 1].
        breakpoints: Sorted, including -1 and 1. Defaults to ``[-1, 1]``.
        tol: Relative resolution target.
        strict: Raise :class:`UnresolvedFunctionError` if a piece reaches the
            degree cap; otherwise warn and return the partial result.
        one_sided: Sample end points slightly inside each piece (for
            discontinuities placed on breakpoints).

    Returns:
        The chopped piecewise approximation.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    bp = _as_breakpoints(breakpoints)
    if bp.size < 2 or bp[0] != -1.0 or bp[-1] != 1.0:
        raise ValueError("breakpoints must include -1 and 1")
    pieces = tuple(construct_series(sampler, (lo, hi), tol, one_sided) for lo, hi in zip(bp[:-1], bp[1:]))
    fun = PiecewiseFun(bp, pieces)
    if not fun.resolved:
        bad = [p.domain for p in pieces if not p.resolved]
        msg = f"function not resolved to degree {MAX_DEGREE} on {bad}"
        if strict:
            raise UnresolvedFunctionError(msg, fun)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return fun


chebfun = construct_adaptive


def evaluate(p: PiecewiseFun, x):
    """Evaluate ``p`` at a scalar or array of points in [-1, 1]."""
    xa = np.asarray(x, dtype=float)
    if np.any((xa < -1.0) | (xa > 1.0)) or np.any(np.isnan(xa)):
        raise ValueError("evaluation point outside [-1, 1]")
    if p.num_pieces == 1:
        out = p.pieces[0](xa)
    else:
        idx = np.searchsorted(p.breakpoints, xa, side="right") - 1
        idx = np.clip(idx, 0, p.num_pieces - 1)
        out = np.empty(xa.shape)
        for i in np.unique(idx):
            mask = idx == i
            out[mask] = p.pieces[i](xa[mask])
    if np.ndim(x) == 0:
        return float(out)
    return out


# ----------------------------------------------------------------------------
#  breakpoint alignment
# ----------------------------------------------------------------------------


def _union_breakpoints(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    u = np.union1d(a, b)
    keep = [u[0]]
    for x in u[1:]:
        if x - keep[-1] > _BREAK_MERGE_TOL:
            keep.append(x)
    keep[-1] = 1.0
    return np.array(keep)


def refine(p: PiecewiseFun, breakpoints: np.ndarray) -> PiecewiseFun:
    """Re-express ``p`` on a finer breakpoint set (must contain p's)."""
    if p.breakpoints.size == breakpoints.size and np.array_equal(p.breakpoints, breakpoints):
        return p
    pieces = []
    for lo, hi in zip(breakpoints[:-1], breakpoints[1:]):
        mid = 0.5 * (lo + hi)
        i = min(int(np.searchsorted(p.breakpoints, mid, side="right")) - 1, p.num_pieces - 1)
        pieces.append(p.pieces[i].restrict(lo, hi))
    return PiecewiseFun(breakpoints, tuple(pieces))


def align(p: PiecewiseFun, q: PiecewiseFun) -> tuple[PiecewiseFun, PiecewiseFun]:
    """Refine both operands to the union of their breakpoints."""
    if p.breakpoints.size == q.breakpoints.size and np.array_equal(p.breakpoints, q.breakpoints):
        return p, q
    bp = _union_breakpoints(p.breakpoints, q.breakpoints)
    return refine(p, bp), refine(q, bp)


# ----------------------------------------------------------------------------
#  algebra
# ----------------------------------------------------------------------------


def _map_pieces(p: PiecewiseFun, fn) -> PiecewiseFun:
    return PiecewiseFun(p.breakpoints, tuple(fn(s) for s in p.pieces))


def scale(p: PiecewiseFun, alpha: float) -> PiecewiseFun:
    return _map_pieces(p, lambda s: ChebSeries(alpha * s.coeffs, s.domain, s.resolved).chop())


def _add_constant(p: PiecewiseFun, c: float) -> PiecewiseFun:
    def add(s):
        coeffs = s.coeffs.copy()
        scl = max(s.scale, abs(c))
        coeffs[0] += c
        return ChebSeries(chop_coeffs(coeffs, DEFAULT_TOL, scl), s.domain, s.resolved)

    return _map_pieces(p, add)


def axpy(alpha: float, p: PiecewiseFun, q: PiecewiseFun, tol: float = DEFAULT_TOL) -> PiecewiseFun:
    """``alpha * p + q``, chopped relative to the operand scale on each piece."""
    p, q = align(p, q)
    pieces = []
    for sp, sq in zip(p.pieces, q.pieces):
        n = max(sp.coeffs.size, sq.coeffs.size)
        c = np.zeros(n)
        c[: sp.coeffs.size] += alpha * sp.coeffs
        c[: sq.coeffs.size] += sq.coeffs
        scl = max(abs(alpha) * sp.scale, sq.scale)
        pieces.append(ChebSeries(chop_coeffs(c, tol, scl), sp.domain, sp.resolved and sq.resolved))
    return PiecewiseFun(p.breakpoints, tuple(pieces))


def chop(p: PiecewiseFun, tol: float = DEFAULT_TOL) -> PiecewiseFun:
    """Remove trailing coefficients below ``tol * max|coeff|`` on every piece."""
    return _map_pieces(p, lambda s: s.chop(tol))


def multiply(p: PiecewiseFun, q: PiecewiseFun, tol: float = DEFAULT_TOL) -> PiecewiseFun:
    """Pointwise product, exact up to rounding (padded transform to values)."""
    p, q = align(p, q)
    pieces = []
    for sp, sq in zip(p.pieces, q.pieces):
        ok = sp.resolved and sq.resolved
        if sp.degree == 0 or sq.degree == 0:
            c = sp.coeffs * sq.coeffs[0] if sq.degree == 0 else sq.coeffs * sp.coeffs[0]
            pieces.append(ChebSeries(chop_coeffs(c, tol), sp.domain, ok))
            continue
        n = sp.degree + sq.degree
        v = sp.values(n) * sq.values(n)
        c = values_to_coeffs(v)
        scl = max(float(np.max(np.abs(v))), float(np.max(np.abs(c))))
        pieces.append(ChebSeries(chop_coeffs(c, tol, scl), sp.domain, ok))
    return PiecewiseFun(p.breakpoints, tuple(pieces))


# ----------------------------------------------------------------------------
#  calculus
# ----------------------------------------------------------------------------


def indefinite_integral(p: PiecewiseFun) -> PiecewiseFun:
    """``x -> int_{-1}^x p(s) ds``; continuous, exactly zero at -1."""
    pieces = []
    acc = 0.0
    for s in p.pieces:
        h = s.halfwidth
        b = h * _cumsum_coeffs(s.coeffs)
        b[0] = acc - _left_sum(b)
        b = chop_coeffs(b, DEFAULT_TOL, max(float(np.max(np.abs(b))), abs(acc)))
        # Pin the constant after chopping so the left value is exactly acc.
        b[0] = 0.0
        b[0] = acc - _left_sum(b)
        acc = _right_sum(b)
        pieces.append(ChebSeries(b, s.domain, s.resolved))
    return PiecewiseFun(p.breakpoints, tuple(pieces))


def adjoint_integral(p: PiecewiseFun) -> PiecewiseFun:
    """``x -> int_x^1 p(s) ds``; continuous and zero at 1."""
    pieces = []
    acc = 0.0
    for s in reversed(p.pieces):
        h = s.halfwidth
        b = -h * _cumsum_coeffs(s.coeffs)
        b[0] = acc - _right_sum(b)
        b = chop_coeffs(b, DEFAULT_TOL, max(float(np.max(np.abs(b))), abs(acc)))
        b[0] = 0.0
        b[0] = acc - _right_sum(b)
        acc = _left_sum(b)
        pieces.append(ChebSeries(b, s.domain, s.resolved))
    return PiecewiseFun(p.breakpoints, tuple(reversed(pieces)))


def differentiate(p: PiecewiseFun) -> PiecewiseFun:
    """Piecewise classical derivative. Jumps at breakpoints contribute no
    delta terms."""
    return _map_pieces(p, lambda s: ChebSeries(chop_coeffs(_diff_coeffs(s.coeffs) / s.halfwidth),
                                               s.domain, s.resolved))


def definite_integral(p: PiecewiseFun) -> float:
    """``int_{-1}^1 p(s) ds``."""
    return math.fsum(s.halfwidth * _sum_coeffs(s.coeffs) for s in p.pieces)


def inner_product(p: PiecewiseFun, q: PiecewiseFun) -> float:
    """L2 inner product on [-1, 1]."""
    return definite_integral(multiply(p, q))


def norm_l2(p: PiecewiseFun) -> float:
    return math.sqrt(max(inner_product(p, p), 0.0))


def mean(p: PiecewiseFun) -> float:
    return 0.5 * definite_integral(p)


def max_abs(p: PiecewiseFun, samples: int = 2048) -> float:
    """Estimate of the sup-norm by sampling each piece on a Chebyshev grid."""
    return max(float(np.max(np.abs(s(s.points(samples))))) for s in p.pieces)


def concatenate_breakpoints(funs: Iterable[PiecewiseFun]) -> np.ndarray:
    """Union of the breakpoints of several functions."""
    bp = np.array([-1.0, 1.0])
    for f in funs:
        bp = _union_breakpoints(bp, f.breakpoints)
    return bp
