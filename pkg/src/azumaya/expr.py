"""Expression language for smooth functions of n real variables.

Grammar (whitespace is ignored)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := base ('^' INT)?
    base   := NUMBER | VAR | FUNC '(' expr ')' | '(' expr ')'

``VAR`` is the variable prefix followed by a 1-based index (``y1``, ``y2``,
...), ``FUNC`` one of exp, log, sin, cos, sqrt. ``**`` is accepted as a
synonym for ``^``. A minus sign directly in front of a number literal is
folded into a negative constant.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .errors import DomainError, ParseError, ValidationError
from .jets import Jet, factorial, multi_indices

UNARY_OPS = ("neg", "exp", "log", "sin", "cos", "sqrt")
FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")
BINARY_OPS = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


class Expr:
    """Base class of expression nodes. Nodes are immutable and hashable."""

    __slots__ = ()

    def __add__(self, other):
        return Binary("add", self, as_expr(other))

    def __radd__(self, other):
        return Binary("add", as_expr(other), self)

    def __sub__(self, other):
        return Binary("sub", self, as_expr(other))

    def __rsub__(self, other):
        return Binary("sub", as_expr(other), self)

    def __mul__(self, other):
        return Binary("mul", self, as_expr(other))

    def __rmul__(self, other):
        return Binary("mul", as_expr(other), self)

    def __truediv__(self, other):
        return Binary("div", self, as_expr(other))

    def __rtruediv__(self, other):
        return Binary("div", as_expr(other), self)

    def __neg__(self):
        return Unary("neg", self)

    def __pow__(self, exponent):
        return Pow(self, exponent)

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValidationError(f"non-finite constant {self.value!r}")
        object.__setattr__(self, "value", float(self.value))

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True, repr=False)
class Var(Expr):
    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ValidationError("variable indices start at 1")

    def __repr__(self):
        return f"Var({self.index})"


@dataclass(frozen=True, repr=False)
class Unary(Expr):
    op: str
    arg: Expr

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValidationError(f"unknown unary operation {self.op!r}")

    def __repr__(self):
        return f"Unary({self.op!r}, {self.arg!r})"


@dataclass(frozen=True, repr=False)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValidationError(f"unknown binary operation {self.op!r}")

    def __repr__(self):
        return f"Binary({self.op!r}, {self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    base: Expr
    exponent: int

    def __post_init__(self):
        if isinstance(self.exponent, bool) or int(self.exponent) != self.exponent or self.exponent < 0:
            raise ValidationError(f"exponent must be a nonnegative integer, got {self.exponent!r}")
        object.__setattr__(self, "exponent", int(self.exponent))

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exponent})"


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Const(float(value))


def variables(f: Expr) -> set[int]:
    """Indices of all variables occurring in ``f``."""
    if isinstance(f, Var):
        return {f.index}
    if isinstance(f, Const):
        return set()
    if isinstance(f, Unary):
        return variables(f.arg)
    if isinstance(f, Pow):
        return variables(f.base)
    return variables(f.left) | variables(f.right)


def check_arity(f: Expr, arity: int) -> None:
    bad = [i for i in variables(f) if i > arity]
    if bad:
        raise ValidationError(f"variable index {max(bad)} out of range for arity {arity}")


def is_polynomial(f: Expr) -> bool:
    if isinstance(f, (Const, Var)):
        return True
    if isinstance(f, Unary):
        return f.op == "neg" and is_polynomial(f.arg)
    if isinstance(f, Pow):
        return is_polynomial(f.base)
    if f.op == "div":
        return is_polynomial(f.left) and isinstance(f.right, Const) and f.right.value != 0
    return is_polynomial(f.left) and is_polynomial(f.right)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = len(text) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        value = m.group(kind)
        if value == "**":
            value = "^"
        tokens.append((kind, value, m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, arity, var):
        self.tokens = _tokenize(text)
        self.i = 0
        self.arity = arity
        self.var_re = re.compile(rf"{re.escape(var)}(\d+)$")

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value or kind == "end":
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, val, _ = self.take()
            node = Binary("add" if val == "+" else "sub", node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, val, _ = self.take()
            node = Binary("mul" if val == "*" else "div", node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            if self.peek()[0] == "num":
                operand = self.power()
                if isinstance(operand, Const):
                    return Const(-operand.value)
                return Unary("neg", operand)
            return Unary("neg", self.unary())
        return self.power()

    def power(self):
        node = self.base()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                raise ParseError("exponent must be a nonnegative integer literal", pos)
            node = Pow(node, int(val))
        return node

    def base(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            m = self.var_re.match(val)
            if m:
                index = int(m.group(1))
                if not 1 <= index <= self.arity:
                    raise ParseError(f"variable index out of range: {val} with arity {self.arity}", pos)
                return Var(index)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(val, arg)
            raise ParseError(f"unknown identifier {val!r}", pos)
        if (kind, val) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {found}", pos)


def parse(text: str, arity: int, var: str = "y") -> Expr:
    """Parse ``text`` into an expression over variables ``{var}1..{var}{arity}``."""
    if arity < 0:
        raise ValidationError("arity must be nonnegative")
    return _Parser(text, arity, var).parse()


_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2}


def _prec(f: Expr) -> int:
    if isinstance(f, Binary):
        return _PREC[f.op]
    if isinstance(f, Unary) and f.op == "neg":
        return 3
    if isinstance(f, Const) and (f.value < 0 or math.copysign(1.0, f.value) < 0):
        return 3
    if isinstance(f, Pow):
        return 4
    return 5


def to_string(f: Expr, var: str = "y") -> str:
    """Render ``f`` in the parser's grammar with minimal parentheses."""

    def wrap(g, min_prec):
        s = to_string(g, var)
        return f"({s})" if _prec(g) < min_prec else s

    if isinstance(f, Const):
        return repr(f.value)
    if isinstance(f, Var):
        return f"{var}{f.index}"
    if isinstance(f, Unary):
        if f.op == "neg":
            inner = to_string(f.arg, var)
            # keep -(3.0) distinct from the folded literal -3.0
            if _prec(f.arg) < 3 or isinstance(f.arg, Const):
                inner = f"({inner})"
            return f"-{inner}"
        return f"{f.op}({to_string(f.arg, var)})"
    if isinstance(f, Pow):
        return f"{wrap(f.base, 5)}^{f.exponent}"
    p = _PREC[f.op]
    left = wrap(f.left, p)
    right = wrap(f.right, p + 1)
    return f"{left} {BINARY_OPS[f.op]} {right}"


# ------------------------------------------------------------- evaluation


def eval_real(f: Expr, p: Sequence[float]) -> float:
    """Evaluate ``f`` at the point ``p`` (coordinates y1..yn)."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Var):
        if f.index > len(p):
            raise ValidationError(f"variable y{f.index} not defined at a point of dimension {len(p)}")
        return float(p[f.index - 1])
    if isinstance(f, Unary):
        x = eval_real(f.arg, p)
        op = f.op
        if op == "neg":
            return -x
        if op == "exp":
            try:
                return math.exp(x)
            except OverflowError:
                raise DomainError(f, x, "overflow") from None
        if op == "log":
            if x <= 0:
                raise DomainError(f, x, "log of a nonpositive number")
            return math.log(x)
        if op == "sqrt":
            if x < 0:
                raise DomainError(f, x, "sqrt of a negative number")
            return math.sqrt(x)
        if op == "sin":
            return math.sin(x)
        return math.cos(x)
    if isinstance(f, Pow):
        return eval_real(f.base, p) ** f.exponent
    a = eval_real(f.left, p)
    b = eval_real(f.right, p)
    if f.op == "add":
        return a + b
    if f.op == "sub":
        return a - b
    if f.op == "mul":
        return a * b
    if b == 0:
        raise DomainError(f, b, "division by zero")
    return a / b


# ---------------------------------------------------------- differentiation
# Smart constructors fold constants and drop additive zeros / unit factors.

_ZERO = Const(0.0)
_ONE = Const(1.0)


def _const(f):
    return f.value if isinstance(f, Const) else None


def _add(a, b):
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return Const(ca + cb)
    if ca == 0:
        return b
    if cb == 0:
        return a
    return Binary("add", a, b)


def _sub(a, b):
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return Const(ca - cb)
    if cb == 0:
        return a
    if ca == 0:
        return _neg(b)
    return Binary("sub", a, b)


def _neg(a):
    ca = _const(a)
    if ca is not None:
        return Const(-ca)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def _mul(a, b):
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return Const(ca * cb)
    if ca == 0 or cb == 0:
        return _ZERO
    if ca == 1:
        return b
    if cb == 1:
        return a
    if ca == -1:
        return _neg(b)
    if cb == -1:
        return _neg(a)
    return Binary("mul", a, b)


def _div(a, b):
    ca, cb = _const(a), _const(b)
    if ca == 0 and cb != 0:
        return _ZERO
    if cb == 1:
        return a
    if ca is not None and cb is not None and cb != 0:
        return Const(ca / cb)
    return Binary("div", a, b)


def _pow(a, n):
    if n == 0:
        return _ONE
    if n == 1:
        return a
    ca = _const(a)
    if ca is not None:
        return Const(ca**n)
    return Pow(a, n)


@lru_cache(maxsize=4096)
def diff(f: Expr, i: int) -> Expr:
    """Partial derivative of ``f`` with respect to variable ``i`` (1-based)."""
    if i < 1:
        raise ValidationError("variable indices start at 1")
    if isinstance(f, Const):
        return _ZERO
    if isinstance(f, Var):
        return _ONE if f.index == i else _ZERO
    if isinstance(f, Pow):
        du = diff(f.base, i)
        if f.exponent == 0 or _const(du) == 0:
            return _ZERO
        return _mul(_mul(Const(f.exponent), _pow(f.base, f.exponent - 1)), du)
    if isinstance(f, Unary):
        u = f.arg
        du = diff(u, i)
        if _const(du) == 0:
            return _ZERO
        if f.op == "neg":
            return _neg(du)
        if f.op == "exp":
            return _mul(f, du)
        if f.op == "log":
            return _div(du, u)
        if f.op == "sin":
            return _mul(Unary("cos", u), du)
        if f.op == "cos":
            return _neg(_mul(Unary("sin", u), du))
        return _div(du, _mul(Const(2.0), f))
    a, b = f.left, f.right
    da, db = diff(a, i), diff(b, i)
    if f.op == "add":
        return _add(da, db)
    if f.op == "sub":
        return _sub(da, db)
    if f.op == "mul":
        return _add(_mul(da, b), _mul(a, db))
    # quotient rule in the form u'/v - u v'/v^2
    return _sub(_div(da, b), _div(_mul(a, db), _pow(b, 2)))


@lru_cache(maxsize=256)
def partials(f: Expr, n: int, k: int) -> dict[tuple[int, ...], Expr]:
    """All partial derivatives of ``f`` in ``n`` variables up to total order ``k``."""
    table = {}
    for d in multi_indices(n, k):
        if sum(d) == 0:
            table[d] = f
            continue
        i = next(j for j, x in enumerate(d) if x)
        parent = d[:i] + (d[i] - 1,) + d[i + 1 :]
        table[d] = diff(table[parent], i + 1)
    return table


def taylor_jet(f: Expr, q: Sequence[float], k: int) -> Jet:
    """Truncated Taylor expansion of ``f`` about ``q``: coefficient d is d-th partial / d!."""
    q = tuple(float(x) for x in q)
    n = len(q)
    check_arity(f, n)
    table = partials(f, n, k)
    coeffs = [eval_real(table[d], q) / factorial(d) for d in multi_indices(n, k)]
    return Jet(n, k, coeffs)
