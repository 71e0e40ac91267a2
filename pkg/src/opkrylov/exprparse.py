"""Parsing and evaluation of one-variable scalar expressions.

Problem files describe coefficients such as ``2+cos(pi*x)`` or
``1+2*abs(cos(pi*x))`` as text. This module turns such text into an immutable
syntax tree, prints trees back to text, and evaluates them either at a single
point (strict IEEE semantics with domain checks) or on a numpy array.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | power ;
    power   = primary , [ "^" , unary ] ;
    primary = number | "x" | "pi" | func , "(" , expr , ")" | "(" , expr , ")" ;
    func    = "sin" | "cos" | "tan" | "exp" | "log" | "sqrt" | "abs" | "sign" ;
    number  = digits , [ "." , [ digits ] ] , [ exponent ]
            | "." , digits , [ exponent ] ;
    exponent = ( "e" | "E" ) , [ "+" | "-" ] , digits ;

``^`` is right-associative and binds tighter than unary minus, so ``-x^2``
means ``-(x^2)`` and ``2^-x`` means ``2^(-x)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ExprError",
    "ParseError",
    "UnknownIdentifierError",
    "EvaluationError",
    "Num",
    "Var",
    "Const",
    "Unary",
    "Binary",
    "Expr",
    "FUNCTIONS",
    "BINARY_OPS",
    "parse",
    "to_text",
    "eval_at",
    "eval_array",
    "uses_function",
    "uses_variable",
    "is_piecewise_smooth",
]


class ExprError(ValueError):
    """Base class for expression errors."""


class ParseError(ExprError):
    """Syntax error at a character offset into the source text."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ParseError):
    """An identifier that is neither ``x``, ``pi`` nor a known function."""

    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class EvaluationError(ExprError):
    """Evaluation left the domain of an operation."""

    def __init__(self, message: str, node: "Expr"):
        super().__init__(f"{message} in {to_text(node)!r}")
        self.node = node


FUNCTIONS = ("neg", "sin", "cos", "tan", "exp", "log", "sqrt", "abs", "sign")
BINARY_OPS = ("+", "-", "*", "/", "^")
_CALLABLE = FUNCTIONS[1:]
_CONSTANTS = {"pi": math.pi}


@dataclass(frozen=True)
class Num:
    """Non-negative finite literal."""

    value: float

    def __post_init__(self):
        value = float(self.value)
        if not math.isfinite(value) or value < 0 or math.copysign(1.0, value) < 0:
            raise ExprError(f"literal must be finite and non-negative, got {self.value!r}")
        object.__setattr__(self, "value", value)


@dataclass(frozen=True)
class Var:
    """The independent variable ``x``."""


@dataclass(frozen=True)
class Const:
    """A named constant (only ``pi``)."""

    name: str

    def __post_init__(self):
        if self.name not in _CONSTANTS:
            raise ExprError(f"unknown constant {self.name!r}")


@dataclass(frozen=True)
class Unary:
    """Negation (``op == "neg"``) or a call to one of the named functions."""

    op: str
    arg: "Expr"

    def __post_init__(self):
        if self.op not in FUNCTIONS:
            raise ExprError(f"unknown unary operator {self.op!r}")


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ExprError(f"unknown binary operator {self.op!r}")


Expr = Union[Num, Var, Const, Unary, Binary]


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.lastgroup is None:
            # Trailing whitespace matches the empty alternative; anything
            # else is an illegal character.
            stripped = len(text) - len(text[pos:].lstrip())
            if stripped == len(text):
                break
            raise ParseError(f"unexpected character {text[stripped]!r}", stripped)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def accept(self, symbol: str) -> bool:
        kind, value, _ = self.peek()
        if kind == "op" and value == symbol:
            self.i += 1
            return True
        return False

    def expect(self, symbol: str) -> None:
        if not self.accept(symbol):
            self.fail(f"expected {symbol!r}")

    def fail(self, message: str):
        kind, value, offset = self.peek()
        found = "end of input" if kind == "end" else repr(value)
        raise ParseError(f"{message}, found {found}", offset)

    def expr(self) -> Expr:
        node = self.term()
        while True:
            if self.accept("+"):
                node = Binary("+", node, self.term())
            elif self.accept("-"):
                node = Binary("-", node, self.term())
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            if self.accept("*"):
                node = Binary("*", node, self.unary())
            elif self.accept("/"):
                node = Binary("/", node, self.unary())
            else:
                return node

    def unary(self) -> Expr:
        if self.accept("-"):
            return Unary("neg", self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.accept("^"):
            return Binary("^", base, self.unary())
        return base

    def primary(self) -> Expr:
        kind, value, offset = self.peek()
        if kind == "num":
            self.take()
            if not math.isfinite(float(value)):
                raise ParseError(f"literal {value!r} overflows", offset)
            return Num(float(value))
        if kind == "name":
            self.take()
            if value == "x":
                return Var()
            if value in _CONSTANTS:
                return Const(value)
            if value in _CALLABLE:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(value, arg)
            raise UnknownIdentifierError(value, offset)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        self.fail("expected a number, 'x', 'pi', a function call or '('")


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises:
        ParseError: On a syntax error; ``offset`` is the 0-based character
            position at which parsing failed.
        UnknownIdentifierError: On an unrecognised name.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    parser = _Parser(text)
    node = parser.expr()
    if parser.peek()[0] != "end":
        parser.fail("unexpected trailing input")
    return node


# --------------------------------------------------------------------------
# Printing
# --------------------------------------------------------------------------

# Binding strength of each node kind when printed.
_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(node: Expr) -> int:
    if isinstance(node, Binary):
        return {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL}.get(
            node.op, _PREC_POW
        )
    if isinstance(node, Unary) and node.op == "neg":
        return _PREC_NEG
    return _PREC_ATOM


def _wrap(node: Expr, min_prec: int) -> str:
    text = to_text(node)
    return text if _prec(node) >= min_prec else f"({text})"


def to_text(node: Expr) -> str:
    """Render ``node`` with the minimum parentheses needed to re-parse it."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            return "-" + _wrap(node.arg, _PREC_NEG)
        return f"{node.op}({to_text(node.arg)})"
    if isinstance(node, Binary):
        if node.op == "^":
            return f"{_wrap(node.left, _PREC_ATOM)}^{_wrap(node.right, _PREC_NEG)}"
        level = _prec(node)
        return f"{_wrap(node.left, level)}{node.op}{_wrap(node.right, level + 1)}"
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# Evaluation
# --------------------------------------------------------------------------


def _sign(t: float) -> float:
    return float((t > 0) - (t < 0))


def _apply_unary(node: Unary, t: float) -> float:
    op = node.op
    if op == "neg":
        return -t
    if op == "log":
        if not t > 0:
            raise EvaluationError(f"log of non-positive value {t!r}", node)
        return math.log(t)
    if op == "sqrt":
        if t < 0:
            raise EvaluationError(f"sqrt of negative value {t!r}", node)
        return math.sqrt(t)
    if op == "abs":
        return abs(t)
    if op == "sign":
        return _sign(t)
    try:
        return getattr(math, op)(t)
    except (ValueError, OverflowError) as exc:
        raise EvaluationError(f"{op} undefined at {t!r} ({exc})", node) from None


def _apply_binary(node: Binary, s: float, t: float) -> float:
    op = node.op
    if op == "+":
        return s + t
    if op == "-":
        return s - t
    if op == "*":
        return s * t
    if op == "/":
        if t == 0:
            raise EvaluationError("division by zero", node)
        return s / t
    try:
        return math.pow(s, t)
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise EvaluationError(f"power undefined for {s!r}^{t!r} ({exc})", node) from None


def eval_at(node: Expr, x: float) -> float:
    """Evaluate ``node`` at the real number ``x``.

    Raises:
        EvaluationError: Outside the domain of log, sqrt, division or power,
            or on overflow. The message names the offending subexpression.
    """
    x = float(x)

    def ev(n: Expr) -> float:
        if isinstance(n, Num):
            return n.value
        if isinstance(n, Var):
            return x
        if isinstance(n, Const):
            return _CONSTANTS[n.name]
        if isinstance(n, Unary):
            return _apply_unary(n, ev(n.arg))
        return _apply_binary(n, ev(n.left), ev(n.right))

    return ev(node)


_NUMPY_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "abs": np.abs,
    "sign": np.sign,
}


def eval_array(node: Expr, x) -> np.ndarray:
    """Vectorized evaluation on an array of points.

    Values agree with :func:`eval_at` to rounding; domain violations at any
    point raise :class:`EvaluationError` instead of producing NaN.
    """
    xs = np.asarray(x, dtype=float)

    def ev(n: Expr) -> np.ndarray:
        if isinstance(n, Num):
            return np.full(xs.shape, n.value)
        if isinstance(n, Var):
            return xs.copy()
        if isinstance(n, Const):
            return np.full(xs.shape, _CONSTANTS[n.name])
        if isinstance(n, Unary):
            t = ev(n.arg)
            if n.op == "neg":
                return -t
            if n.op == "log" and np.any(~(t > 0)):
                raise EvaluationError("log of non-positive value", n)
            if n.op == "sqrt" and np.any(t < 0):
                raise EvaluationError("sqrt of negative value", n)
            out = (_NUMPY_FUNCS.get(n.op) or getattr(np, n.op))(t)
        else:
            s, t = ev(n.left), ev(n.right)
            if n.op == "+":
                out = s + t
            elif n.op == "-":
                out = s - t
            elif n.op == "*":
                out = s * t
            elif n.op == "/":
                if np.any(t == 0):
                    raise EvaluationError("division by zero", n)
                out = s / t
            else:
                bad = ((s < 0) & (t != np.round(t))) | ((s == 0) & (t < 0))
                if np.any(bad):
                    raise EvaluationError("power undefined", n)
                out = np.power(s, t)
        if not np.all(np.isfinite(out)):
            raise EvaluationError("non-finite value", n)
        return out

    with np.errstate(all="ignore"):
        return ev(node)


def _walk(node: Expr):
    yield node
    if isinstance(node, Unary):
        yield from _walk(node.arg)
    elif isinstance(node, Binary):
        yield from _walk(node.left)
        yield from _walk(node.right)


def uses_function(node: Expr, name: str) -> bool:
    """True if a call to ``name`` occurs anywhere in ``node``."""
    return any(isinstance(n, Unary) and n.op == name for n in _walk(node))


def uses_variable(node: Expr) -> bool:
    """True if ``x`` occurs in ``node``."""
    return any(isinstance(n, Var) for n in _walk(node))


def is_piecewise_smooth(node: Expr) -> bool:
    """True if ``node`` contains ``abs`` or ``sign`` and so may have kinks or
    jumps that need user-supplied breakpoints."""
    return uses_function(node, "abs") or uses_function(node, "sign")
