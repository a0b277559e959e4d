"""Evaluation of smooth functions at commuting matrix tuples.

For each joint eigenvalue q_j the block of f(m) is the Taylor polynomial of
f at q_j, truncated at the block's nilpotency, with the commuting nilpotent
parts N_1j..N_nj substituted for the displacement. The blocks are assembled
in the decomposition basis B and conjugated back::

    f(m) = B . blockdiag_j( sum_d  (d-th partial of f)(q_j) / d!  *  N_j^d ) . B^-1
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ConditioningWarning, DomainError
from .expr import Binary, Const, Expr, check_arity, taylor_jet, to_string
from .jets import Jet, multi_indices
from .matrixalg import (
    DEFAULT_TOL,
    JointSpectrum,
    MatrixTuple,
    char_poly,
    fro,
    joint_decompose,
    polyval_matrix,
)

COND_LIMIT = 1e8


@dataclass(frozen=True, eq=False)
class AzumayaPoint:
    """A validated commuting tuple together with its cached joint spectrum."""

    tuple: MatrixTuple
    seed: int = 0
    spectrum: JointSpectrum = field(default=None, repr=False)

    def __post_init__(self):
        if self.spectrum is None:
            object.__setattr__(self, "spectrum", joint_decompose(self.tuple, seed=self.seed))

    @classmethod
    def from_matrices(cls, matrices, tol: float = DEFAULT_TOL, seed: int = 0) -> "AzumayaPoint":
        return cls(MatrixTuple(tuple(matrices), tol), seed)

    @property
    def n(self) -> int:
        return self.tuple.n

    @property
    def r(self) -> int:
        return self.tuple.r

    @property
    def tol(self) -> float:
        return self.tuple.tol

    @property
    def scale(self) -> float:
        return self.tuple.scale

    @property
    def orders(self) -> tuple[int, ...]:
        """Taylor truncation order used for each block."""
        return tuple(p.nilpotency - 1 for p in self.spectrum.points)


def matrix_monomials(nilpotents: Sequence[np.ndarray], k: int) -> dict[tuple[int, ...], np.ndarray]:
    n = len(nilpotents)
    size = nilpotents[0].shape[0]
    table = {(0,) * n: np.eye(size, dtype=complex)}
    for d in multi_indices(n, k):
        if d in table:
            continue
        i = next(j for j, x in enumerate(d) if x)
        parent = d[:i] + (d[i] - 1,) + d[i + 1 :]
        table[d] = table[parent] @ nilpotents[i]
    return table


def substitute(jet: Jet, nilpotents: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate the polynomial with the jet's coefficients at commuting matrices."""
    mono = matrix_monomials(nilpotents, jet.k)
    out = np.zeros_like(mono[(0,) * len(nilpotents)])
    for d, c in zip(jet.indices, jet.coeffs):
        if c != 0.0:
            out = out + c * mono[d]
    return out


def apply(f: Expr, a: AzumayaPoint) -> np.ndarray:
    """The matrix f(m_1, ..., m_n)."""
    check_arity(f, a.n)
    spec = a.spectrum
    if spec.cond > COND_LIMIT:
        warnings.warn(
            f"block basis condition number {spec.cond:.3g} exceeds {COND_LIMIT:g}",
            ConditioningWarning,
            stacklevel=2,
        )
    blocks = []
    for p in spec.points:
        try:
            jet = taylor_jet(f, p.lam, p.nilpotency - 1)
        except DomainError as exc:
            raise DomainError(exc.node, exc.argument, f"{to_string(f)} undefined near spectral point {p.lam}") from exc
        blocks.append(substitute(jet, p.nilpotents))
    return spec.basis @ scipy.linalg.block_diag(*blocks) @ spec.inverse


def _rel(x, y, denom) -> float:
    return fro(x - y) / (1.0 + denom)


@dataclass(frozen=True)
class LawReport:
    residuals: dict
    worst: dict
    tol: float

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.residuals.values())

    def to_json(self) -> dict:
        return {
            "tol": self.tol,
            "passed": self.passed,
            "laws": {
                k: {"residual": v, "passed": v <= self.tol, "worst": self.worst.get(k)}
                for k, v in self.residuals.items()
            },
        }


def verify_ring_hom(a: AzumayaPoint, fs: Sequence[Expr], tol: float | None = None) -> LawReport:
    """Normalized residuals of the ring-homomorphism laws on the expressions ``fs``.

    Each residual is ||lhs - rhs||_F / (1 + natural scale of the terms), so
    the report is comparable across tuples of different magnitude.
    """
    tol = a.tol if tol is None else tol
    res = {k: 0.0 for k in ("unit", "linearity", "additivity", "multiplicativity", "commutativity", "center")}
    worst = {}

    def record(law, value, label):
        if value > res[law] or law not in worst:
            res[law] = max(res[law], value)
            worst[law] = label

    eye = np.eye(a.r)
    one = apply(Const(1.0), a)
    record("unit", _rel(one, eye, fro(eye)), "1")
    values = {f: apply(f, a) for f in fs}
    for f, F in values.items():
        label = to_string(f)
        for c in (2.5, -0.75):
            record("linearity", _rel(apply(Binary("mul", Const(c), f), a), c * F, abs(c) * fro(F)), f"{c}*({label})")
        for i, m in enumerate(a.tuple.matrices):
            record("center", _rel(F @ m, m @ F, fro(F) * fro(m)), f"[{label}, m{i + 1}]")
    for f, g in itertools.combinations_with_replacement(list(values), 2):
        F, G = values[f], values[g]
        label = f"({to_string(f)}, {to_string(g)})"
        record("additivity", _rel(apply(f + g, a), F + G, fro(F) + fro(G)), label)
        record("multiplicativity", _rel(apply(f * g, a), F @ G, fro(F) * fro(G)), label)
        record("commutativity", _rel(F @ G, G @ F, fro(F) * fro(G)), label)
    return LawReport(res, worst, tol)


@dataclass(frozen=True)
class AnnihilationReport:
    residuals: tuple[float, ...]
    normalized: tuple[float, ...]
    tol: float

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.normalized)

    @property
    def max_normalized(self) -> float:
        return max(self.normalized)


def annihilation_check(a: AzumayaPoint | MatrixTuple, tol: float | None = None) -> AnnihilationReport:
    """Substitute each m_i into its own characteristic polynomial."""
    t = a.tuple if isinstance(a, AzumayaPoint) else a
    tol = t.tol if tol is None else tol
    raw, norm = [], []
    for m in t.matrices:
        value = fro(polyval_matrix(char_poly(m).coeffs, m))
        raw.append(value)
        norm.append(value / (1.0 + fro(m) ** t.r))
    return AnnihilationReport(tuple(raw), tuple(norm), tol)
