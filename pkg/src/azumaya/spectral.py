"""Matrix families over a gridded base: spectral-locus samples, walls, smoothness.

A family assigns to every base point p an n-tuple of commuting matrices whose
entries are expressions in the base coordinates x1..x_d. At each grid point
the joint spectrum is the fiber of the spectral locus over p. Walls are grid
cells across which the number of spectral points or a nilpotency changes;
there the decomposition frames jump while f(m(p)) must stay continuous.
"""

from __future__ import annotations

import csv
import io
import itertools
import re
import statistics
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .calculus import AzumayaPoint, apply
from .errors import AzumayaError, ShapeError, ValidationError
from .expr import Expr, check_arity, eval_real, parse, to_string
from .matrixalg import DEFAULT_TOL, JointSpectrum, MatrixTuple


@dataclass(frozen=True)
class MatrixFamily:
    """n matrices of r x r expressions in the base coordinates x1..x_base_dim."""

    base_dim: int
    entries: tuple

    def __post_init__(self):
        mats = tuple(tuple(tuple(row) for row in m) for m in self.entries)
        if not mats:
            raise ShapeError("a family needs at least one matrix")
        r = len(mats[0])
        for m in mats:
            if len(m) != r or any(len(row) != r for row in m):
                raise ShapeError("family matrices must all be r x r")
            for row in m:
                for e in row:
                    check_arity(e, self.base_dim)
        object.__setattr__(self, "entries", mats)

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def r(self) -> int:
        return len(self.entries[0])

    def matrices_at(self, p: Sequence[float]) -> list[np.ndarray]:
        return [np.array([[eval_real(e, p) for e in row] for row in m], dtype=complex) for m in self.entries]

    def instantiate(self, p: Sequence[float], tol: float = DEFAULT_TOL) -> MatrixTuple:
        return MatrixTuple(tuple(self.matrices_at(p)), tol)

    @classmethod
    def parse(cls, base_dim: int, matrices: Sequence[Sequence[Sequence[str]]]) -> "MatrixFamily":
        return cls(base_dim, tuple(tuple(tuple(parse(str(e), base_dim, var="x") for e in row) for row in m) for m in matrices))

    def to_json(self) -> dict:
        return {
            "base_dim": self.base_dim,
            "n": self.n,
            "r": self.r,
            "matrices": [[[to_string(e, var="x") for e in row] for row in m] for m in self.entries],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "MatrixFamily":
        try:
            fam = cls.parse(int(data["base_dim"]), data["matrices"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed family JSON: {exc}") from exc
        if "n" in data and int(data["n"]) != fam.n or "r" in data and int(data["r"]) != fam.r:
            raise ShapeError("family JSON declares n/r inconsistent with its matrices")
        return fam


@dataclass(frozen=True)
class GridSpec:
    axes: tuple[tuple[float, float, int], ...]

    def __post_init__(self):
        axes = tuple((float(a), float(b), int(c)) for a, b, c in self.axes)
        for lo, hi, count in axes:
            if count < 2:
                raise ValidationError("grid axes need at least 2 points")
            if not lo < hi:
                raise ValidationError("grid axes need min < max")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse ``"x1:min:max:count[,x2:...]"``; axes must be listed in order."""
        axes = []
        for i, part in enumerate(p for p in text.split(",") if p.strip()):
            fields = part.strip().split(":")
            if len(fields) != 4 or not re.fullmatch(r"x?\d+", fields[0].strip()):
                raise ValidationError(f"bad grid axis {part!r}; expected axis:min:max:count")
            if int(fields[0].strip().lstrip("x")) != i + 1:
                raise ValidationError(f"grid axis {fields[0]!r} out of order; expected x{i + 1}")
            try:
                axes.append((float(fields[1]), float(fields[2]), int(fields[3])))
            except ValueError as exc:
                raise ValidationError(f"bad grid axis {part!r}: {exc}") from exc
        if not axes:
            raise ValidationError("empty grid specification")
        return cls(tuple(axes))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(c for _, _, c in self.axes)

    @property
    def steps(self) -> tuple[float, ...]:
        return tuple((hi - lo) / (c - 1) for lo, hi, c in self.axes)

    def coords(self, axis: int) -> np.ndarray:
        lo, hi, c = self.axes[axis]
        return np.linspace(lo, hi, c)

    def indices(self):
        return itertools.product(*(range(c) for c in self.shape))

    def point(self, index) -> tuple[float, ...]:
        return tuple(float(self.coords(i)[j]) for i, j in enumerate(index))

    def neighbours(self):
        """Adjacent index pairs (a, b, axis) with b one step above a along ``axis``."""
        for idx in self.indices():
            for ax in range(self.dim):
                if idx[ax] + 1 < self.shape[ax]:
                    nb = idx[:ax] + (idx[ax] + 1,) + idx[ax + 1 :]
                    yield idx, nb, ax


@dataclass(frozen=True, eq=False)
class SpectralSample:
    index: tuple[int, ...]
    point: tuple[float, ...]
    spectrum: JointSpectrum | None = field(repr=False)
    defect: str | None = None

    @property
    def ok(self) -> bool:
        return self.spectrum is not None

    @property
    def s(self) -> int:
        return self.spectrum.s if self.ok else 0

    @property
    def nilpotencies(self) -> tuple[int, ...]:
        return tuple(p.nilpotency for p in self.spectrum.points) if self.ok else ()

    @property
    def cond(self) -> float:
        return self.spectrum.cond if self.ok else float("nan")

    @property
    def projector_norm(self) -> float:
        """Largest 2-norm among the spectral projectors V_j W_j."""
        if not self.ok:
            return float("nan")
        return max(float(np.linalg.norm(p.basis @ p.left, 2)) for p in self.spectrum.points)


def sample_family(fam: MatrixFamily, grid: GridSpec, tol: float = DEFAULT_TOL, seed: int = 0) -> list[SpectralSample]:
    """One joint-spectrum sample per grid point, in grid (C) order.

    Points where the family violates a hypothesis or the decomposition fails
    are kept as defective samples carrying the error message.
    """
    if grid.dim != fam.base_dim:
        raise ShapeError(f"grid has {grid.dim} axes but the family has base dimension {fam.base_dim}")
    out = []
    for idx in grid.indices():
        p = grid.point(idx)
        try:
            a = AzumayaPoint(fam.instantiate(p, tol), seed)
            out.append(SpectralSample(idx, p, a.spectrum))
        except AzumayaError as exc:
            out.append(SpectralSample(idx, p, None, f"{type(exc).__name__}: {exc}"))
    return out


def defects(samples: Sequence[SpectralSample]) -> list[dict]:
    return [{"index": list(s.index), "point": list(s.point), "error": s.defect} for s in samples if not s.ok]


@dataclass(frozen=True)
class Wall:
    a: tuple[int, ...]
    b: tuple[int, ...]
    axis: int
    changed: tuple[str, ...]
    before: dict
    after: dict

    def to_json(self) -> dict:
        return {
            "a": list(self.a),
            "b": list(self.b),
            "axis": self.axis + 1,
            "changed": list(self.changed),
            "before": self.before,
            "after": self.after,
        }


def wall_detect(samples: Sequence[SpectralSample], grid: GridSpec) -> list[Wall]:
    """Grid cells across which s or the nilpotency profile changes."""
    by_index = {s.index: s for s in samples}
    walls = []
    for a, b, ax in grid.neighbours():
        sa, sb = by_index[a], by_index[b]
        if not (sa.ok and sb.ok):
            continue
        changed = []
        if sa.s != sb.s:
            changed.append("s")
        if sorted(sa.nilpotencies) != sorted(sb.nilpotencies):
            changed.append("nilpotency")
        if changed:
            walls.append(
                Wall(a, b, ax, tuple(changed),
                     {"s": sa.s, "nilpotency": sorted(sa.nilpotencies)},
                     {"s": sb.s, "nilpotency": sorted(sb.nilpotencies)})
            )
    return walls


@dataclass(frozen=True)
class SmoothnessReport:
    max_jump: float
    max_jump_cell: tuple
    median_away: float
    max_wall_jump: float
    factor: float
    frame_jump_wall: float
    frame_median_away: float

    @property
    def ratio(self) -> float:
        return self.max_jump / self.median_away if self.median_away > 0 else (0.0 if self.max_jump == 0 else float("inf"))

    @property
    def budget(self) -> float:
        return self.factor * self.median_away

    @property
    def passed(self) -> bool:
        return self.max_jump <= self.budget or self.max_jump == 0.0

    def to_json(self) -> dict:
        return {
            "max_jump": self.max_jump,
            "max_jump_cell": [list(c) for c in self.max_jump_cell] if self.max_jump_cell else None,
            "median_away_from_walls": self.median_away,
            "max_jump_at_walls": self.max_wall_jump,
            "budget": self.budget,
            "ratio": self.ratio,
            "passed": self.passed,
            "frame_jump_at_walls": self.frame_jump_wall,
            "frame_jump_median_away_from_walls": self.frame_median_away,
        }


@dataclass(frozen=True)
class FamilyApplyResult:
    values: list
    samples: list
    walls: list
    report: SmoothnessReport


def smoothness(values, samples, grid: GridSpec, walls, entry=None, factor: float = 3.0) -> SmoothnessReport:
    """Compare adjacent-point jumps of ``values`` against the typical jump away from walls.

    The continuity budget is ``factor * median`` of the jumps over cells not
    touching a wall, i.e. C*h with C estimated from the regular cells.
    """
    by_index = {s.index: (v, s) for v, s in zip(values, samples)}
    wall_pts = {w.a for w in walls} | {w.b for w in walls}
    wall_cells = {(w.a, w.b) for w in walls}
    jumps, away, at_wall, frame_wall, frame_away = [], [], [], [0.0], []
    for a, b, ax in grid.neighbours():
        (va, sa), (vb, sb) = by_index[a], by_index[b]
        if va is None or vb is None:
            continue
        d = np.abs(vb - va)
        jump = float(d[entry] if entry is not None else d.max())
        jumps.append((jump, (a, b)))
        frame = abs(sb.projector_norm - sa.projector_norm)
        if (a, b) in wall_cells:
            at_wall.append(jump)
            frame_wall.append(frame)
        if a not in wall_pts and b not in wall_pts:
            away.append(jump)
            frame_away.append(frame)
    if not jumps:
        raise ValidationError("no adjacent pair of valid grid points")
    top = max(jumps, key=lambda t: t[0])
    return SmoothnessReport(
        top[0], top[1], statistics.median(away) if away else 0.0, max(at_wall, default=0.0),
        factor, max(frame_wall), statistics.median(frame_away) if frame_away else 0.0,
    )


def family_apply(f: Expr, fam: MatrixFamily, grid: GridSpec, tol: float = DEFAULT_TOL, seed: int = 0,
                 entry=None, factor: float = 3.0, samples=None) -> FamilyApplyResult:
    """f(m(p)) at every grid point plus a continuity report."""
    check_arity(f, fam.n)
    if samples is None:
        samples = sample_family(fam, grid, tol, seed)
    values = []
    for s in samples:
        if not s.ok:
            values.append(None)
            continue
        a = AzumayaPoint(fam.instantiate(s.point, tol), seed, s.spectrum)
        values.append(apply(f, a))
    walls = wall_detect(samples, grid)
    return FamilyApplyResult(values, samples, walls, smoothness(values, samples, grid, walls, entry, factor))


def samples_to_csv(samples: Sequence[SpectralSample], fam: MatrixFamily) -> str:
    """One row per grid point; spectral-point columns are padded to r slots."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = [f"x{i + 1}" for i in range(fam.base_dim)] + ["s", "cond", "projector_norm", "defect"]
    for j in range(1, fam.r + 1):
        head += [f"q{j}_y{i + 1}" for i in range(fam.n)] + [f"rank{j}", f"nilpotency{j}"]
    w.writerow(head)
    fmt = "{:.17g}".format
    for s in samples:
        row = [fmt(x) for x in s.point]
        if s.ok:
            row += [s.s, fmt(s.cond), fmt(s.projector_norm), ""]
            for p in s.spectrum.points:
                row += [fmt(x) for x in p.lam] + [p.rank, p.nilpotency]
            row += [""] * ((fam.n + 2) * (fam.r - s.s))
        else:
            row += ["", "", "", s.defect] + [""] * ((fam.n + 2) * fam.r)
        w.writerow(row)
    return buf.getvalue()
