"""Truncated multivariate polynomials R[t_1..t_m]/(t_1..t_m)^(k+1).

A :class:`Jet` stores its coefficients densely, one slot per multi-index of
total degree <= k, in graded order (degree first, then reverse
lexicographic). Multiplication uses a cached table of index triples so the
truncation is built into the product rather than applied afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ShapeError, ValidationError


@lru_cache(maxsize=None)
def multi_indices(m: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices in ``m`` variables with total degree <= ``k``."""
    if m < 0 or k < 0:
        raise ValidationError("generator count and order must be nonnegative")
    idx = [d for d in product(range(k + 1), repeat=m) if sum(d) <= k]
    idx.sort(key=lambda d: (sum(d), tuple(-x for x in d)))
    return tuple(idx)


@lru_cache(maxsize=None)
def _positions(m: int, k: int) -> dict[tuple[int, ...], int]:
    return {d: i for i, d in enumerate(multi_indices(m, k))}


@lru_cache(maxsize=None)
def _mul_table(m: int, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    idx = multi_indices(m, k)
    pos = _positions(m, k)
    left, right, out = [], [], []
    for i, a in enumerate(idx):
        da = sum(a)
        for j, b in enumerate(idx):
            if da + sum(b) > k:
                continue
            left.append(i)
            right.append(j)
            out.append(pos[tuple(x + y for x, y in zip(a, b))])
    return np.array(left, int), np.array(right, int), np.array(out, int)


def factorial(d: Sequence[int]) -> int:
    """Multi-index factorial d! = d_1! ... d_m!."""
    return math.prod(math.factorial(x) for x in d)


class Jet:
    """Element of the truncated polynomial algebra with ``m`` generators, order ``k``."""

    __slots__ = ("m", "k", "coeffs")

    def __init__(self, m: int, k: int, coeffs=None):
        n = len(multi_indices(m, k))
        if coeffs is None:
            arr = np.zeros(n)
        else:
            arr = np.array(coeffs, dtype=float)
            if arr.shape != (n,):
                raise ShapeError(f"expected {n} coefficients for m={m}, k={k}, got {arr.shape}")
        arr.flags.writeable = False
        self.m = m
        self.k = k
        self.coeffs = arr

    # constructors

    @classmethod
    def constant(cls, c: float, m: int, k: int) -> "Jet":
        coeffs = np.zeros(len(multi_indices(m, k)))
        coeffs[0] = c
        return cls(m, k, coeffs)

    @classmethod
    def generator(cls, i: int, m: int, k: int, body: float = 0.0) -> "Jet":
        """``body + t_i`` with ``i`` counted from 1."""
        if not 1 <= i <= m:
            raise ValidationError(f"generator index {i} outside 1..{m}")
        out = dict.fromkeys([(0,) * m], body)
        if k >= 1:
            d = [0] * m
            d[i - 1] = 1
            out[tuple(d)] = 1.0
        return cls.from_dict(out, m, k)

    @classmethod
    def from_dict(cls, terms: Mapping[Sequence[int], float], m: int, k: int) -> "Jet":
        pos = _positions(m, k)
        coeffs = np.zeros(len(pos))
        for d, c in terms.items():
            d = tuple(int(x) for x in d)
            if len(d) != m or any(x < 0 for x in d):
                raise ShapeError(f"multi-index {d} does not fit {m} generators")
            if sum(d) > k:
                raise ShapeError(f"multi-index {d} exceeds order {k}")
            coeffs[pos[d]] += c
        return cls(m, k, coeffs)

    # access

    @property
    def indices(self) -> tuple[tuple[int, ...], ...]:
        return multi_indices(self.m, self.k)

    @property
    def body(self) -> float:
        return float(self.coeffs[0])

    @property
    def soul(self) -> "Jet":
        c = self.coeffs.copy()
        c[0] = 0.0
        return Jet(self.m, self.k, c)

    def coeff(self, d: Sequence[int]) -> float:
        d = tuple(d)
        if sum(d) > self.k:
            return 0.0
        return float(self.coeffs[_positions(self.m, self.k)[d]])

    def to_dict(self, drop_zeros: bool = True) -> dict[tuple[int, ...], float]:
        return {d: float(c) for d, c in zip(self.indices, self.coeffs) if c != 0.0 or not drop_zeros}

    def truncate(self, k: int) -> "Jet":
        """Reduce to a lower order by dropping coefficients of degree > ``k``."""
        if k > self.k:
            raise ShapeError("cannot raise the order of a jet")
        return Jet.from_dict({d: c for d, c in self.to_dict().items() if sum(d) <= k}, self.m, k)

    # arithmetic

    def _check(self, other: "Jet"):
        if (self.m, self.k) != (other.m, other.k):
            raise ShapeError(f"jet shapes differ: (m={self.m}, k={self.k}) vs (m={other.m}, k={other.k})")

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            self._check(other)
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet.constant(float(other), self.m, self.k)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Jet(self.m, self.k, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Jet(self.m, self.k, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __neg__(self):
        return Jet(self.m, self.k, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet(self.m, self.k, self.coeffs * float(other))
        if not isinstance(other, Jet):
            return NotImplemented
        self._check(other)
        left, right, out = _mul_table(self.m, self.k)
        res = np.zeros_like(self.coeffs)
        np.add.at(res, out, self.coeffs[left] * other.coeffs[right])
        return Jet(self.m, self.k, res)

    __rmul__ = __mul__

    def __pow__(self, p: int):
        if not isinstance(p, (int, np.integer)) or p < 0:
            raise ValidationError("jets only support nonnegative integer powers")
        result = Jet.constant(1.0, self.m, self.k)
        base = self
        while p:
            if p & 1:
                result = result * base
            base = base * base
            p >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return (self.m, self.k) == (other.m, other.k) and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None

    def allclose(self, other: "Jet", rtol: float = 1e-9, atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.allclose(self.coeffs, other.coeffs, rtol=rtol, atol=atol))

    def __repr__(self):
        terms = ", ".join(f"{d}: {c:.6g}" for d, c in self.to_dict().items())
        return f"Jet(m={self.m}, k={self.k}, {{{terms}}})"

    # serialization

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "k": self.k,
            "coeffs": [{"d": list(d), "c": float(c)} for d, c in zip(self.indices, self.coeffs)],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Jet":
        try:
            m, k = int(data["m"]), int(data["k"])
            terms = {}
            for item in data["coeffs"]:
                d = tuple(int(x) for x in item["d"])
                terms[d] = terms.get(d, 0.0) + float(item["c"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed jet JSON: {exc}") from exc
        return cls.from_dict(terms, m, k)


def jet_arith(op: str, a: Jet, b) -> Jet:
    """Apply ``op`` in {'add', 'sub', 'mul', 'scalar'} to two jets (or a jet and a real)."""
    if op == "scalar":
        if isinstance(b, Jet):
            raise ShapeError("scalar multiplication expects a real second operand")
        return a * float(b)
    if not isinstance(b, Jet):
        raise ShapeError(f"'{op}' expects two jets")
    a._check(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValidationError(f"unknown jet operation {op!r}")


def split(a: Jet) -> tuple[float, Jet]:
    """Decompose into the real body and the nilpotent soul: ``a = body + soul``."""
    return a.body, a.soul


@dataclass(frozen=True)
class WeilTuple:
    """A tuple of jets sharing generator count and order."""

    elements: tuple[Jet, ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not self.elements:
            raise ShapeError("a WeilTuple needs at least one element")
        m, k = self.elements[0].m, self.elements[0].k
        for e in self.elements:
            if (e.m, e.k) != (m, k):
                raise ShapeError("all elements of a WeilTuple must share (m, k)")

    @classmethod
    def of(cls, elements: Iterable[Jet]) -> "WeilTuple":
        return cls(tuple(elements))

    @property
    def m(self) -> int:
        return self.elements[0].m

    @property
    def k(self) -> int:
        return self.elements[0].k

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)
