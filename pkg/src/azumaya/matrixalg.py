"""Commuting matrix tuples with real spectrum and their joint spectral data.

The joint decomposition follows the generic-combination route: a random real
combination T = sum_i gamma_i m_i separates distinct joint eigenvalues, the
eigenvalues of T are clustered, and for each cluster an orthonormal basis of
the generalized eigenspace is read from a reordered Schur form of T. Because
the m_i commute with T, each such subspace is invariant under every m_i; the
restrictions give the joint eigenvalue (trace / rank) and the commuting
nilpotent parts.

Eigenvalues belonging to a Jordan block of size k are only determined to
about eps^(1/k) by a dense eigensolver, while their mean is accurate to
working precision. Clustering therefore allows a cluster of size k to spread
by ``scale * defect_eps**(1/k)`` on top of the fixed clustering radius, and
every reported eigenvalue is a cluster mean.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import InitVar, dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg
from scipy.cluster.hierarchy import linkage, to_tree
from scipy.spatial.distance import pdist

from .errors import ClusteringError, EigensolverError, HypothesisError, ShapeError, ValidationError

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFECT_EPS = 1e-13
MAX_TRIES = 5


def as_matrix(m) -> np.ndarray:
    """Coerce to a finite square complex array."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ShapeError(f"expected a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    a.flags.writeable = False
    return a


def fro(m) -> float:
    return float(np.linalg.norm(m, "fro"))


def polyval_matrix(coeffs: Sequence[complex], m: np.ndarray) -> np.ndarray:
    """Horner evaluation of a polynomial (highest degree first) at a square matrix."""
    r = m.shape[0]
    out = np.zeros((r, r), dtype=complex)
    eye = np.eye(r)
    for c in coeffs:
        out = out @ m + c * eye
    return out


# ---------------------------------------------------------------- tuples


@dataclass(frozen=True, eq=False)
class MatrixTuple:
    """n pairwise-commuting r x r complex matrices with real spectrum.

    Construction validates both hypotheses at ``tol`` and raises
    :class:`HypothesisError` on failure; pass ``validate=False`` to build an
    unchecked tuple (e.g. for reporting on bad data).
    """

    matrices: tuple
    tol: float = DEFAULT_TOL
    validate: InitVar[bool] = True

    def __post_init__(self, validate):
        mats = tuple(as_matrix(m) for m in self.matrices)
        if not mats:
            raise ShapeError("a matrix tuple needs at least one matrix")
        r = mats[0].shape[0]
        if any(m.shape != (r, r) for m in mats):
            raise ShapeError("all matrices of a tuple must share the same size")
        if not self.tol > 0:
            raise ValidationError("tolerance must be positive")
        object.__setattr__(self, "matrices", mats)
        if validate:
            rep = check_commuting(self)
            if not rep.passed:
                raise HypothesisError(
                    f"matrices {rep.pair[0]} and {rep.pair[1]} do not commute "
                    f"(normalized commutator {rep.normalized:.3g} > tol {self.tol:g})"
                )
            spec = real_spectrum_check(self)
            if not spec.passed:
                raise HypothesisError(
                    f"matrix {spec.worst} has non-real eigenvalues (max |Im| = {spec.max_imag:.3g})"
                )

    @property
    def n(self) -> int:
        return len(self.matrices)

    @property
    def r(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def scale(self) -> float:
        return 1.0 + max(fro(m) for m in self.matrices)

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.matrices[i]

    def conjugate(self, s) -> "MatrixTuple":
        """The tuple S m_i S^-1."""
        s = np.asarray(s, dtype=complex)
        sinv = np.linalg.inv(s)
        return MatrixTuple(tuple(s @ m @ sinv for m in self.matrices), self.tol)

    def to_json(self) -> dict:
        return {"n": self.n, "matrices": [matrix_to_json(m) for m in self.matrices], "tol": self.tol}

    @classmethod
    def from_json(cls, data: Mapping, tol: float | None = None, validate: bool = True) -> "MatrixTuple":
        try:
            mats = [matrix_from_json(m) for m in data["matrices"]]
            n = int(data.get("n", len(mats)))
            tol = float(tol if tol is not None else data.get("tol", DEFAULT_TOL))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed tuple JSON: {exc}") from exc
        if n != len(mats):
            raise ValidationError(f"tuple declares n={n} but lists {len(mats)} matrices")
        return cls(tuple(mats), tol, validate)


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {
        "r": int(m.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in m],
    }


def matrix_from_json(data: Mapping) -> np.ndarray:
    try:
        r = int(data["r"])
        rows = data["entries"]
        m = np.array([[complex(e[0], e[1]) if isinstance(e, (list, tuple)) else complex(e) for e in row] for row in rows])
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ValidationError(f"malformed matrix JSON: {exc}") from exc
    if m.shape != (r, r):
        raise ShapeError(f"matrix declares r={r} but has shape {m.shape}")
    return as_matrix(m)


# -------------------------------------------------------------- reports


@dataclass(frozen=True)
class CommutingReport:
    residual: float
    normalized: float
    pair: tuple[int, int] | None
    passed: bool


def check_commuting(t: MatrixTuple) -> CommutingReport:
    """Largest normalized commutator ||m_i m_j - m_j m_i|| / (1 + ||m_i|| ||m_j||)."""
    worst = (0.0, 0.0, None)
    for i, j in itertools.combinations(range(t.n), 2):
        a, b = t.matrices[i], t.matrices[j]
        raw = fro(a @ b - b @ a)
        norm = raw / (1.0 + fro(a) * fro(b))
        if worst[2] is None or norm > worst[1]:
            worst = (raw, norm, (i + 1, j + 1))
    return CommutingReport(worst[0], worst[1], worst[2], worst[1] <= t.tol)


def _threshold(k: int, radius: float, scale: float, defect_eps: float) -> float:
    if k <= 1:
        return radius
    return radius + scale * defect_eps ** (1.0 / k)


def _spread(values: np.ndarray) -> float:
    return float(np.max(np.abs(values - values.mean()))) if len(values) else 0.0


def _dendrogram(values: np.ndarray):
    if len(values) == 1:
        return None
    pts = np.column_stack([values.real, values.imag])
    return to_tree(linkage(pdist(pts), method="single"))


def cluster_eigenvalues(values, scale: float, radius: float | None = None,
                        defect_eps: float = DEFECT_EPS) -> list[list[int]]:
    """Group eigenvalues that numerically represent one multiple eigenvalue.

    A node of the single-linkage tree is accepted as a cluster when all its
    members lie within the size-dependent threshold of their mean.
    """
    values = np.asarray(values, dtype=complex)
    if radius is None:
        radius = 1e-7 * scale
    root = _dendrogram(values)
    if root is None:
        return [[0]]
    out = []
    stack = [root]
    while stack:
        node = stack.pop()
        idx = node.pre_order()
        if node.is_leaf() or _spread(values[idx]) <= _threshold(len(idx), radius, scale, defect_eps):
            out.append(sorted(idx))
        else:
            stack.extend([node.right, node.left])
    out.sort(key=lambda c: (values[c].mean().real, values[c].mean().imag))
    return out


def _eigvals(m: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.eigvals(m)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"eigensolver failed: {exc}") from exc


@dataclass(frozen=True)
class RealSpectrumReport:
    max_imag: float
    per_matrix: tuple[float, ...]
    eigenvalues: tuple[np.ndarray, ...]
    worst: int
    passed: bool


def real_spectrum_check(t: MatrixTuple, defect_eps: float = DEFECT_EPS) -> RealSpectrumReport:
    """Max |Im| over the (cluster-averaged) eigenvalues of every m_i."""
    per, eigs, ok = [], [], True
    for m in t.matrices:
        ev = _eigvals(m)
        scale = 1.0 + fro(m)
        means = [ev[c].mean() for c in cluster_eigenvalues(ev, scale, defect_eps=defect_eps)]
        imag = max(abs(z.imag) for z in means)
        per.append(float(imag))
        eigs.append(ev)
        ok = ok and imag <= t.tol * scale
    worst = int(np.argmax(per)) + 1
    return RealSpectrumReport(max(per), tuple(per), tuple(eigs), worst, ok)


# ------------------------------------------------------ joint spectrum


@dataclass(frozen=True, eq=False)
class SpectrumPoint:
    """One joint eigenvalue q_j with its invariant subspace V_j."""

    lam: tuple[float, ...]
    rank: int
    basis: np.ndarray
    nilpotency: int
    nilpotents: tuple[np.ndarray, ...] = field(repr=False)
    left: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {
            "lambda": list(self.lam),
            "rank": self.rank,
            "nilpotency": self.nilpotency,
            "basis": matrix_block_to_json(self.basis),
        }


def matrix_block_to_json(b: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in b]


@dataclass(frozen=True, eq=False)
class JointSpectrum:
    points: tuple[SpectrumPoint, ...]
    basis: np.ndarray
    inverse: np.ndarray
    cond: float
    offblock: float
    projection: float
    gamma: np.ndarray
    attempts: int

    @property
    def s(self) -> int:
        return len(self.points)

    @property
    def r(self) -> int:
        return self.basis.shape[0]

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "r": self.r,
            "points": [p.to_json() for p in self.points],
            "cond": self.cond,
            "offblock_residual": self.offblock,
            "projection": self.projection,
        }


def monomial_norms(nilpotents: Sequence[np.ndarray], degree: int) -> float:
    """Largest Frobenius norm among all products of ``degree`` of the given matrices."""
    best = 0.0
    for combo in itertools.combinations_with_replacement(range(len(nilpotents)), degree):
        p = nilpotents[combo[0]]
        for c in combo[1:]:
            p = p @ nilpotents[c]
        best = max(best, fro(p))
    return best


def joint_nilpotency(nilpotents: Sequence[np.ndarray], tol: float, scale: float) -> int:
    """Least l such that every degree-l monomial in the nilpotents vanishes (to tolerance)."""
    k = nilpotents[0].shape[0]
    for l in range(1, k + 1):
        if monomial_norms(nilpotents, l) <= tol * scale:
            return l
    return k + 1


class _Inconsistent(Exception):
    def __init__(self, cluster, reason):
        super().__init__(reason)
        self.cluster = cluster


def _schur_subspace(T, means, j, k):
    """Orthonormal basis of the invariant subspace of T for eigenvalues nearest means[j]."""
    means = np.asarray(means)

    def select(x):
        return int(np.argmin(np.abs(means - x))) == j

    try:
        _, Z, sdim = scipy.linalg.schur(T, output="complex", sort=select)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"Schur decomposition failed: {exc}") from exc
    if sdim != k:
        raise _Inconsistent(j, f"Schur reordering selected {sdim} eigenvalues, expected {k}")
    return Z[:, :k]


def _decompose(mats, tol, scale, gamma, radius, defect_eps):
    r = mats[0].shape[0]
    T = sum(g * m for g, m in zip(gamma, mats))
    ev = _eigvals(T)
    root = _dendrogram(ev)
    clusters = cluster_eigenvalues(ev, scale, radius, defect_eps)
    # refine clusters that fail verification by descending the dendrogram
    for _ in range(r):
        means = [ev[c].mean() for c in clusters]
        try:
            return _blocks(mats, T, clusters, means, tol, scale, radius)
        except _Inconsistent as exc:
            bad = clusters[exc.cluster]
            if len(bad) == 1:
                raise
            children = _split(root, bad)
            clusters = clusters[: exc.cluster] + children + clusters[exc.cluster + 1 :]
    raise _Inconsistent(0, "cluster refinement did not converge")


def _split(root, members):
    target = sorted(members)
    stack = [root]
    while stack:
        node = stack.pop()
        if sorted(node.pre_order()) == target:
            return [sorted(node.left.pre_order()), sorted(node.right.pre_order())]
        if not node.is_leaf():
            stack.extend([node.left, node.right])
    # cluster was not a dendrogram node; fall back to singletons
    return [[i] for i in target]


def _blocks(mats, T, clusters, means, tol, scale, radius):
    r = T.shape[0]
    bases = [_schur_subspace(T, means, j, len(c)) for j, c in enumerate(clusters)]
    B = np.hstack(bases)
    try:
        W = np.linalg.inv(B)
    except np.linalg.LinAlgError as exc:
        raise _Inconsistent(0, f"block bases are linearly dependent: {exc}") from None
    pts, off = [], 0.0
    start = 0
    for j, V in enumerate(bases):
        k = V.shape[1]
        Wj = W[start : start + k]
        lam, nil = [], []
        for m in mats:
            R = Wj @ m @ V
            mu = np.trace(R) / k
            N = R - mu * np.eye(k)
            if k > 1 and fro(np.linalg.matrix_power(N, k)) > tol * scale:
                raise _Inconsistent(j, "restriction is not a single joint eigenvalue")
            lam.append(mu)
            nil.append(N)
        pts.append((np.array(lam), k, V, nil, Wj))
        start += k
    # off-block residual of W m B
    for m in mats:
        full = W @ m @ B
        mask = np.ones((r, r), bool)
        start = 0
        for _, k, *_ in pts:
            mask[start : start + k, start : start + k] = False
            start += k
        off = max(off, float(np.max(np.abs(full[mask]), initial=0.0)))
    if off > np.sqrt(tol) * scale * max(1.0, np.linalg.cond(B)):
        raise _Inconsistent(0, f"block bases are not jointly invariant (off-block residual {off:.3g})")
    for a, b in itertools.combinations(range(len(pts)), 2):
        if np.max(np.abs(pts[a][0] - pts[b][0])) <= radius:
            raise ClusteringError("two clusters share the same joint eigenvalue")
    return pts, B, W, off


def decompose_matrices(mats, tol=DEFAULT_TOL, seed=0, radius=None, defect_eps=DEFECT_EPS,
                       max_tries=MAX_TRIES):
    """Joint decomposition without the real-spectrum precondition (complex points)."""
    mats = [as_matrix(m) for m in mats]
    n = len(mats)
    scale = 1.0 + max(fro(m) for m in mats)
    if radius is None:
        radius = 1e-7 * scale
    rng = np.random.default_rng(seed)
    last = best = None
    tries = 1 if n == 1 else max_tries
    for attempt in range(1, tries + 1):
        if n == 1:
            gamma = np.ones(1)
        else:
            gamma = rng.standard_normal(n)
            gamma /= np.linalg.norm(gamma)
        try:
            pts, B, W, off = _decompose(mats, tol, scale, gamma, radius, defect_eps)
        except _Inconsistent as exc:
            log.debug("joint decomposition attempt %d failed: %s", attempt, exc)
            last = exc
            continue
        # A combination that nearly merges two defective points gives poorly
        # separated invariant subspaces; keep looking for a cleaner one.
        if off <= tol * scale * max(1.0, np.linalg.cond(B)):
            return pts, B, W, off, gamma, attempt, scale
        log.debug("attempt %d: off-block residual %.3g, retrying", attempt, off)
        if best is None or off < best[3]:
            best = (pts, B, W, off, gamma, attempt, scale)
    if best is not None:
        return best
    raise ClusteringError(f"joint decomposition failed after {tries} attempt(s): {last}")


def joint_decompose(t: MatrixTuple, seed: int = 0, radius: float | None = None,
                    defect_eps: float = DEFECT_EPS) -> JointSpectrum:
    """Joint spectrum, block bases and nilpotent parts of a validated tuple."""
    pts, B, W, off, gamma, attempts, scale = decompose_matrices(
        t.matrices, t.tol, seed, radius, defect_eps
    )
    points = []
    projection = 0.0
    for lam, k, V, nil, Wj in pts:
        projection = max(projection, float(np.max(np.abs(lam.imag))))
        q = tuple(float(x) for x in lam.real)
        # fold the projected imaginary part back into the nilpotent parts
        nil = tuple(N + 1j * z.imag * np.eye(k) for N, z in zip(nil, lam))
        l = joint_nilpotency(nil, t.tol, scale)
        points.append(SpectrumPoint(q, k, V, l, nil, Wj))
    order = sorted(range(len(points)), key=lambda j: points[j].lam)
    points = [points[j] for j in order]
    cols = np.cumsum([0] + [len(p[3][0]) for p in pts])
    perm = np.concatenate([np.arange(cols[j], cols[j + 1]) for j in order])
    B, W = B[:, perm], W[perm]
    if projection > t.tol * scale:
        raise HypothesisError(f"joint eigenvalues are not real (max |Im| = {projection:.3g})")
    return JointSpectrum(tuple(points), B, W, float(np.linalg.cond(B)), off, projection, gamma, attempts)


def nilpotency(m, lam: float, tol: float = DEFAULT_TOL, defect_eps: float = DEFECT_EPS) -> int:
    """Size of the largest Jordan block of ``m`` for the eigenvalue ``lam``."""
    m = as_matrix(m)
    pts, *_, scale = decompose_matrices([m], tol, defect_eps=defect_eps)
    lams = np.array([p[0][0] for p in pts])
    j = int(np.argmin(np.abs(lams - lam)))
    k = pts[j][1]
    if abs(lams[j] - lam) > _threshold(k, 1e-7 * scale, scale, defect_eps):
        raise ValidationError(f"{lam!r} is not an eigenvalue (nearest is {lams[j]:.6g})")
    N = pts[j][3][0]
    for l in range(1, k + 1):
        if fro(np.linalg.matrix_power(N, l)) <= tol * scale:
            return l
    return k + 1


@dataclass(frozen=True)
class CharPoly:
    """Monic coefficients of det(y I - m), highest degree first."""

    coeffs: np.ndarray
    imag_residue: float


def char_poly(m) -> CharPoly:
    m = as_matrix(m)
    c = np.poly(_eigvals(m))
    c = np.atleast_1d(c).astype(complex)
    return CharPoly(c.real.copy(), float(np.max(np.abs(c.imag))))
