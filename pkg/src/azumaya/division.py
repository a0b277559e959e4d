"""Polynomial normal forms: Hermite interpolation and Euclidean division.

The interpolant is built on the tensor grid spanned by the node coordinates.
Along each axis the grid values carry the largest order any node requests
there, and univariate Hermite interpolation (Newton form over confluent
divided differences) is applied axis by axis. Every grid point carries the
Taylor coefficients of f inside its order box; grid points that are not
nodes and lie outside the domain of f carry zero data. Polynomials that fit
in the tensor space are therefore reproduced exactly. The result has degree
< (sum of axis multiplicities) in each variable, i.e. it is already reduced
modulo the product polynomials prod_v (y_i - v)^mult on every axis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .calculus import AzumayaPoint, apply
from .errors import DomainError, ShapeError, ValidationError
from .expr import Binary, Const, Expr, Pow, Var, taylor_jet
from .matrixalg import fro


class DivisionByZeroPolynomial(ValidationError):
    pass


class Poly:
    """Real polynomial in ``nvars`` variables, stored as {exponent tuple: coefficient}."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], float] | None = None):
        self.nvars = nvars
        clean = {}
        for d, c in (terms or {}).items():
            d = tuple(int(x) for x in d)
            if len(d) != nvars or any(x < 0 for x in d):
                raise ShapeError(f"exponent {d} does not fit {nvars} variables")
            c = float(c)
            if c != 0.0:
                clean[d] = clean.get(d, 0.0) + c
        self.terms = clean

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[float], descending: bool = True) -> "Poly":
        """Univariate polynomial from a coefficient list."""
        coeffs = list(coeffs)
        if descending:
            coeffs = coeffs[::-1]
        return cls(1, {(p,): c for p, c in enumerate(coeffs)})

    def coeffs(self, descending: bool = True) -> np.ndarray:
        if self.nvars != 1:
            raise ShapeError("coefficient lists are only defined for univariate polynomials")
        deg = max(self.degree(), 0)
        out = np.zeros(deg + 1)
        for (p,), c in self.terms.items():
            out[p] = c
        return out[::-1] if descending else out

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(d) for d in self.terms), default=-1)

    def __call__(self, *point) -> float:
        if len(point) == 1 and isinstance(point[0], (list, tuple, np.ndarray)):
            point = tuple(point[0])
        return sum(c * math.prod(x**e for x, e in zip(point, d)) for d, c in self.terms.items())

    def _check(self, other):
        if self.nvars != other.nvars:
            raise ShapeError("polynomials in different numbers of variables")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Poly(self.nvars, {(0,) * self.nvars: other})
        self._check(other)
        out = dict(self.terms)
        for d, c in other.terms.items():
            out[d] = out.get(d, 0.0) + c
        return Poly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.nvars, {d: -c for d, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Poly(self.nvars, {d: c * other for d, c in self.terms.items()})
        self._check(other)
        out: dict = {}
        for (da, ca), (db, cb) in itertools.product(self.terms.items(), other.terms.items()):
            d = tuple(x + y for x, y in zip(da, db))
            out[d] = out.get(d, 0.0) + ca * cb
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def max_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def to_expr(self) -> Expr:
        """Sum of monomials as an expression over y1..y_nvars."""
        out = None
        for d, c in sorted(self.terms.items()):
            mono: Expr = Const(c)
            for i, e in enumerate(d):
                if e:
                    v = Var(i + 1)
                    mono = Binary("mul", mono, v if e == 1 else Pow(v, e))
            out = mono if out is None else Binary("add", out, mono)
        return out if out is not None else Const(0.0)

    def to_json(self) -> dict:
        return {"vars": self.nvars, "terms": [{"d": list(d), "c": c} for d, c in sorted(self.terms.items())]}

    @classmethod
    def from_json(cls, data: Mapping) -> "Poly":
        try:
            nvars = int(data["vars"])
            terms: dict = {}
            for t in data["terms"]:
                d = tuple(int(x) for x in t["d"])
                terms[d] = terms.get(d, 0.0) + float(t["c"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed polynomial JSON: {exc}") from exc
        return cls(nvars, terms)

    def __repr__(self):
        return f"Poly({self.nvars}, {self.terms})"


# -------------------------------------------------------------- division


@dataclass(frozen=True)
class DivisionResult:
    quotient: Poly
    remainder: tuple[float, ...]  # a_1..a_s, remainder = sum_i a_i y^(s-i)

    @property
    def remainder_poly(self) -> Poly:
        return Poly.from_coeffs(self.remainder) if self.remainder else Poly(1)

    def to_json(self) -> dict:
        return {"quotient": self.quotient.to_json(), "remainder": list(self.remainder)}


def poly_divide(f: Poly, h: Poly) -> DivisionResult:
    """Euclidean division f = g h + sum_{i=1}^s a_i y^(s-i) with s = deg h."""
    if f.nvars != 1 or h.nvars != 1:
        raise ShapeError("poly_divide works on univariate polynomials")
    hc = h.coeffs()
    if not h.terms:
        raise DivisionByZeroPolynomial("division by the zero polynomial")
    s = len(hc) - 1
    lead = hc[0]
    monic = hc / lead
    rem = list(f.coeffs()) if f.terms else [0.0]
    nq = len(rem) - s
    quot = np.zeros(max(nq, 0))
    for i in range(max(nq, 0)):
        c = rem[i]
        quot[i] = c
        if c != 0.0:
            for j in range(1, s + 1):
                rem[i + j] -= c * monic[j]
    tail = rem[-s:] if s else []
    tail = [0.0] * (s - len(tail)) + list(tail)
    g = Poly.from_coeffs(quot / lead) if nq > 0 else Poly(1)
    return DivisionResult(g, tuple(float(x) for x in tail))


# ---------------------------------------------------------------- Hermite


@dataclass(frozen=True)
class HermiteSpec:
    """Interpolation nodes with per-axis orders (number of matched derivatives)."""

    nodes: tuple[tuple[tuple[float, ...], tuple[int, ...]], ...]

    def __post_init__(self):
        nodes = tuple((tuple(float(x) for x in q), tuple(int(o) for o in d)) for q, d in self.nodes)
        if not nodes:
            raise ValidationError("a Hermite spec needs at least one node")
        n = len(nodes[0][0])
        for q, d in nodes:
            if len(q) != n or len(d) != n:
                raise ShapeError("all nodes and order vectors must share one dimension")
            if any(o < 1 for o in d):
                raise ValidationError("node orders must be at least 1")
        points = [q for q, _ in nodes]
        if len(set(points)) != len(points):
            raise ValidationError("underdetermined spec: duplicate interpolation nodes")
        object.__setattr__(self, "nodes", nodes)

    @property
    def dim(self) -> int:
        return len(self.nodes[0][0])

    @classmethod
    def from_spectrum(cls, a: AzumayaPoint) -> "HermiteSpec":
        return cls(tuple((p.lam, (p.nilpotency,) * a.n) for p in a.spectrum.points))


def hermite_1d(nodes: Sequence[float], mults: Sequence[int], data: Sequence[float]) -> np.ndarray:
    """Ascending monomial coefficients of the Hermite interpolant.

    ``data`` lists, node by node, the Taylor coefficients f^(a)(v)/a! for
    a = 0..mult-1.
    """
    z = np.repeat(np.asarray(nodes, float), mults)
    N = len(z)
    starts = np.concatenate([[0], np.cumsum(mults)[:-1]])
    taylor = {}
    for v, st, mu in zip(nodes, starts, mults):
        for a in range(mu):
            taylor[(v, a)] = data[st + a]
    # confluent divided-difference table, column j holds f[z_i..z_{i+j}]
    table = np.zeros((N, N))
    table[:, 0] = [taylor[(v, 0)] for v in z]
    for j in range(1, N):
        for i in range(N - j):
            if z[i + j] == z[i]:
                table[i, j] = taylor[(z[i], j)]
            else:
                table[i, j] = (table[i + 1, j - 1] - table[i, j - 1]) / (z[i + j] - z[i])
    newton = table[0]
    # expand the Newton form by nested multiplication
    coef = np.zeros(N)
    coef[0] = newton[N - 1]
    deg = 0
    for j in range(N - 2, -1, -1):
        # coef <- coef * (t - z_j) + newton_j
        shifted = np.zeros(N)
        shifted[1 : deg + 2] = coef[: deg + 1]
        shifted[: deg + 1] -= z[j] * coef[: deg + 1]
        shifted[0] += newton[j]
        coef = shifted
        deg += 1
    return coef


def _snap_axis(values: Sequence[float], radius: float) -> dict[float, float]:
    """Map each coordinate to the mean of its run of values closer than ``radius``."""
    values = sorted(set(values))
    groups = [[values[0]]]
    for v in values[1:]:
        if v - groups[-1][-1] <= radius:
            groups[-1].append(v)
        else:
            groups.append([v])
    return {v: float(np.mean(g)) for g in groups for v in g}


def hermite_interpolant(f: Expr, spec: HermiteSpec, radius: float | None = None) -> Poly:
    """Polynomial whose Taylor data agree with ``f`` in every node's order box.

    Node coordinates on one axis that differ by at most ``radius`` (default
    1e-7 * (1 + max |coordinate|)) are identified before the grid is built;
    computed spectra reproduce a shared coordinate only to rounding, and the
    divided differences would otherwise blow up.
    """
    n = spec.dim
    if radius is None:
        radius = 1e-7 * (1.0 + max(abs(x) for q, _ in spec.nodes for x in q))
    snaps = [_snap_axis([q[i] for q, _ in spec.nodes], radius) for i in range(n)]
    snapped = [(tuple(snaps[i][q[i]] for i in range(n)), d) for q, d in spec.nodes]
    if len({q for q, _ in snapped}) != len(snapped):
        raise ValidationError(f"underdetermined spec: nodes closer than {radius:.3g} coincide")
    axes = []
    for i in range(n):
        mult: dict[float, int] = {}
        for q, d in snapped:
            mult[q[i]] = max(mult.get(q[i], 0), d[i])
        values = sorted(mult)
        axes.append((values, [mult[v] for v in values]))
    shape = tuple(sum(m) for _, m in axes)
    offsets = [dict(zip(v, np.concatenate([[0], np.cumsum(m)[:-1]]))) for v, m in axes]
    mults = [dict(zip(v, m)) for v, m in axes]
    nodes = {q for q, _ in snapped}
    data = np.zeros(shape)
    for q in itertools.product(*(v for v, _ in axes)):
        box = [mults[i][q[i]] for i in range(n)]
        try:
            jet = taylor_jet(f, q, sum(o - 1 for o in box))
        except DomainError:
            if q in nodes:
                raise
            continue  # off-node grid point outside the domain of f: zero data
        for a in itertools.product(*(range(o) for o in box)):
            pos = tuple(int(offsets[i][q[i]]) + a[i] for i in range(n))
            data[pos] = jet.coeff(a)
    for i, (values, counts) in enumerate(axes):
        data = np.apply_along_axis(lambda col: hermite_1d(values, counts, col), i, data)
    terms = {tuple(int(x) for x in idx): float(c) for idx, c in np.ndenumerate(data) if c != 0.0}
    return Poly(n, terms)


@dataclass(frozen=True)
class EquivalenceReport:
    residual: float
    normalized: float
    interpolant: Poly
    tol: float

    @property
    def passed(self) -> bool:
        return self.normalized <= self.tol


def remainder_equiv_check(f: Expr, a: AzumayaPoint, tol: float | None = None) -> EquivalenceReport:
    """Compare f(m) with p0(m), p0 the Hermite normal form of f on the joint spectrum."""
    spec = HermiteSpec.from_spectrum(a)
    p0 = hermite_interpolant(f, spec, radius=1e-7 * a.scale)
    F = apply(f, a)
    P = apply(p0.to_expr(), a)
    raw = fro(F - P)
    return EquivalenceReport(raw, raw / (1.0 + fro(F)), p0, a.tol if tol is None else tol)

