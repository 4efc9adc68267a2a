"""Finite metric spaces and basic metric/geometric statistics.

A :class:`FiniteMetricSpace` is an indexed point set with a metric oracle:
either coordinates under a standard metric (euclidean, chebyshev), or an
explicit distance matrix.  Any of these can be snowflaked, i.e. re-metrized
as ``d**exponent`` for an exponent in (0, 1].

Points are addressed by 0-based integer ids.  Pairwise distances are cached
as a full matrix when the point count is at or below ``cache_threshold``
(default 4096); above that they are computed row-by-row on demand.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DomainError, InputError

DEFAULT_CACHE_THRESHOLD = 4096
_METRICS = ("euclidean", "chebyshev", "matrix")


class FiniteMetricSpace:
    """Indexed finite point set with a metric oracle.

    Parameters
    ----------
    points : array-like of shape (n, dim), optional
        Coordinate vectors; required unless ``matrix`` is given.
    matrix : array-like of shape (n, n), optional
        Explicit distance matrix.  Rejected (not repaired) if it is not a
        metric: it must be symmetric, zero exactly on the diagonal, positive
        off it, and pass a triangle-inequality spot check.
    metric : {"euclidean", "chebyshev", "matrix"}
    exponent : float
        Snowflake exponent in (0, 1]; 1.0 keeps the base metric.
    triangle_samples : int
        Number of random triples spot-checked for the triangle inequality
        when validating an explicit matrix.
    """

    def __init__(self, points=None, matrix=None, metric: str | None = None,
                 exponent: float = 1.0,
                 cache_threshold: int = DEFAULT_CACHE_THRESHOLD,
                 triangle_samples: int = 200):
        if not 0.0 < exponent <= 1.0:
            raise DomainError(f"snowflake exponent must be in (0, 1], got {exponent}")
        self.exponent = float(exponent)
        self.cache_threshold = int(cache_threshold)
        self._cache = None
        if matrix is not None:
            m = np.asarray(matrix, dtype=float)
            _validate_matrix(m, triangle_samples)
            self.points = None
            self.matrix = m
            self.metric = "matrix"
            self.n = m.shape[0]
        else:
            if points is None:
                raise DomainError("either points or matrix is required")
            pts = np.asarray(points, dtype=float)
            if pts.ndim == 1:
                pts = pts[:, None]
            if pts.ndim != 2 or pts.shape[0] == 0:
                raise DomainError("points must be a non-empty (n, dim) array")
            self.points = pts
            self.matrix = None
            self.metric = metric or "euclidean"
            if self.metric not in ("euclidean", "chebyshev"):
                raise DomainError(f"unknown metric {self.metric!r}")
            self.n = pts.shape[0]
        if self.n <= self.cache_threshold:
            self._cache = self._compute_all_rows()

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_points(cls, points, metric: str = "euclidean", **kw) -> "FiniteMetricSpace":
        return cls(points=points, metric=metric, **kw)

    @classmethod
    def from_matrix(cls, matrix, **kw) -> "FiniteMetricSpace":
        return cls(matrix=matrix, **kw)

    def snowflaked(self, exponent: float) -> "FiniteMetricSpace":
        """Same point set under the metric ``d**exponent``."""
        if not 0.0 < exponent <= 1.0:
            raise DomainError(f"snowflake exponent must be in (0, 1], got {exponent}")
        out = object.__new__(FiniteMetricSpace)
        out.points = self.points
        out.matrix = self.matrix
        out.metric = self.metric
        out.exponent = self.exponent * exponent
        out.cache_threshold = self.cache_threshold
        out.n = self.n
        out._cache = None
        if self._cache is not None:
            out._cache = self._cache ** exponent
        return out

    # -- distance oracle -------------------------------------------------------

    def _base_row(self, i: int) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix[i]
        if self.metric == "euclidean":
            diff = self.points - self.points[i]
            return np.sqrt(np.einsum("ij,ij->i", diff, diff))
        return np.abs(self.points - self.points[i]).max(axis=1)

    def _compute_all_rows(self) -> np.ndarray:
        # row-by-row coordinate differences: no gram-trick cancellation,
        # so nearby points keep full relative precision
        if self.matrix is not None:
            base = self.matrix.copy()
        else:
            base = np.zeros((self.n, self.n))
            for i in range(self.n):
                base[i] = self._base_row(i)
        if self.exponent != 1.0:
            base = base ** self.exponent
            np.fill_diagonal(base, 0.0)
        return base

    def distances_from(self, i: int) -> np.ndarray:
        """Distances from point ``i`` to every point, as a length-n array."""
        self._check_id(i)
        if self._cache is not None:
            return self._cache[i]
        row = self._base_row(i)
        if self.exponent != 1.0:
            row = row ** self.exponent
            row[i] = 0.0
        return row

    def distance(self, i: int, j: int) -> float:
        self._check_id(i)
        self._check_id(j)
        if self._cache is not None:
            return float(self._cache[i, j])
        return float(self.distances_from(i)[j])

    def pairwise(self) -> np.ndarray:
        """Full distance matrix (cached when small enough)."""
        if self._cache is not None:
            return self._cache
        if self.n > self.cache_threshold:
            raise CapacityError(
                f"{self.n} points exceed the cache threshold {self.cache_threshold}")
        self._cache = self._compute_all_rows()
        return self._cache

    def _check_id(self, i: int) -> None:
        if not 0 <= int(i) < self.n:
            raise DomainError(f"point id {i} outside [0, {self.n})")

    def check_metric_axioms(self, triangle_samples: int = 200) -> None:
        """Assert d(x,x)=0, symmetry, positivity, and spot-check triangles."""
        if self.n <= self.cache_threshold:
            _validate_matrix(self.pairwise(), triangle_samples)
            return
        rng = np.random.default_rng(0)
        ids = rng.integers(0, self.n, size=min(64, self.n))
        for i in ids:
            row = self.distances_from(int(i))
            if row[i] != 0.0:
                raise DomainError(f"d(x,x) != 0 at id {i}")
            if (np.delete(row, i) <= 0).any():
                raise DomainError(f"non-positive distance from id {i}")


def _validate_matrix(m: np.ndarray, triangle_samples: int) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DomainError("distance matrix must be square and non-empty")
    n = m.shape[0]
    if (np.diagonal(m) != 0).any():
        raise DomainError("distance matrix diagonal must be exactly zero")
    if not np.array_equal(m, m.T):
        raise DomainError("distance matrix must be symmetric")
    off = m[~np.eye(n, dtype=bool)]
    if n > 1 and (off <= 0).any():
        raise DomainError("off-diagonal distances must be positive")
    if n >= 3 and triangle_samples > 0:
        rng = np.random.default_rng(12345)
        tri = rng.integers(0, n, size=(triangle_samples, 3))
        i, j, k = tri[:, 0], tri[:, 1], tri[:, 2]
        slack = 1e-12 * max(1.0, float(m.max()))
        if (m[i, k] > m[i, j] + m[j, k] + slack).any():
            raise DomainError("triangle inequality violated (matrix rejected)")


@dataclass(frozen=True)
class SubsetRef:
    """A non-empty subset of a space's point ids, kept sorted and unique."""

    space: FiniteMetricSpace
    ids: np.ndarray = field(repr=False)

    def __post_init__(self):
        ids = np.unique(np.asarray(self.ids, dtype=np.int64))
        if ids.size == 0:
            raise DomainError("subset must be non-empty")
        if ids[0] < 0 or ids[-1] >= self.space.n:
            raise DomainError("subset ids outside the parent space")
        object.__setattr__(self, "ids", ids)

    @property
    def size(self) -> int:
        return int(self.ids.size)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.space.n, dtype=bool)
        m[self.ids] = True
        return m


def whole_space(space: FiniteMetricSpace) -> SubsetRef:
    return SubsetRef(space, np.arange(space.n))


def min_positive_gap(subset: SubsetRef) -> float:
    """Smallest positive pairwise distance: the subset's resolution floor."""
    ids = subset.ids
    if ids.size < 2:
        return 0.0
    space = subset.space
    pts = space.points
    if pts is not None and space.metric == "euclidean" and pts.shape[1] == 1:
        srt = np.sort(pts[ids, 0])
        gaps = np.diff(srt)
        gaps = gaps[gaps > 0]
        base = float(gaps.min()) if gaps.size else 0.0
        return base ** space.exponent if space.exponent != 1.0 else base
    best = np.inf
    for i in ids:
        row = space.distances_from(int(i))[ids]
        pos = row[row > 0]
        if pos.size:
            best = min(best, float(pos.min()))
    return best if np.isfinite(best) else 0.0


def diameter(subset: SubsetRef) -> float:
    """Max pairwise distance over the subset; 0 for singletons."""
    return float(_diameter_ids(subset.space, subset.ids))


def _diameter_ids(space: FiniteMetricSpace, ids: np.ndarray) -> float:
    if len(ids) <= 1:
        return 0.0
    pts = space.points
    if pts is not None and space.metric == "euclidean" and pts.shape[1] == 1:
        c = pts[ids, 0]
        base = float(c.max() - c.min())
        return base ** space.exponent if space.exponent != 1.0 else base
    if pts is not None and space.metric == "chebyshev":
        sub = pts[ids]
        base = float((sub.max(axis=0) - sub.min(axis=0)).max())
        return base ** space.exponent if space.exponent != 1.0 else base
    if space._cache is not None:
        sub = space._cache[np.ix_(ids, ids)]
        return float(sub.max())
    best = 0.0
    for i in ids:
        best = max(best, float(space.distances_from(int(i))[ids].max()))
    return best


# -- doubling and uniform perfectness -----------------------------------------


def estimate_doubling_constant(space: FiniteMetricSpace,
                               radius_sample: list[tuple[int, float]]) -> int:
    """Greedy lower estimate of the doubling constant.

    For each sampled (center, r), counts the r-balls needed to cover the
    points of B(center, 2r) by an id-order scan (a new ball is opened at each
    point not yet covered).  Returns the max count over the sample.  This is
    a lower estimate: the scan cover is not a minimum cover.
    """
    if not radius_sample:
        raise DomainError("radius sample must be non-empty")
    worst = 1
    for center, r in radius_sample:
        r = float(r)
        if r <= 0:
            raise DomainError("sample radii must be positive")
        row = space.distances_from(int(center))
        pool = np.flatnonzero(row < 2.0 * r)
        worst = max(worst, _scan_ball_cover_count(space, pool, r))
    return worst


def _scan_ball_cover_count(space: FiniteMetricSpace, pool: np.ndarray, r: float) -> int:
    if pool.size == 0:
        return 1
    covered = np.zeros(pool.size, dtype=bool)
    count = 0
    for pos, pid in enumerate(pool):
        if covered[pos]:
            continue
        count += 1
        covered |= space.distances_from(int(pid))[pool] <= r
    return count


@dataclass
class PerfectnessReport:
    """Result of the uniform-perfectness search on a subset."""

    constant: float | None          # largest passing grid value, None if flagged
    flagged: bool                   # even the smallest grid value failed
    resolution_floor: float         # max over x of nearest-neighbour distance
    worst_ratio: float              # min over samples of (best annulus dist)/r
    failures: list = field(default_factory=list)   # (x, r) with empty punctured ball


def estimate_uniform_perfectness(subset: SubsetRef, radii: list[float],
                                 grid: np.ndarray | None = None) -> PerfectnessReport:
    """Largest c on a logarithmic grid with B(x, r) \\ B(x, c*r) non-empty
    for every x in the subset and every sampled r.

    Finite sets always fail once r drops below their resolution; in that case
    the report is flagged and carries the resolution floor.
    """
    if subset.size < 2:
        raise DomainError("uniform perfectness needs at least 2 points")
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0 for r in radii):
        raise DomainError("radius grid must be positive and non-empty")
    if grid is None:
        grid = 2.0 ** (-np.arange(0, 40) / 4.0)
    ids = subset.ids
    space = subset.space
    worst = np.inf
    failures = []
    nn = np.empty(len(ids))
    for pos, x in enumerate(ids):
        row = space.distances_from(int(x))[ids]
        nn[pos] = np.min(row[row > 0]) if (row > 0).any() else np.inf
        for r in radii:
            inside = row[(row > 0) & (row < r)]
            if inside.size == 0:
                failures.append((int(x), r))
            else:
                worst = min(worst, float(inside.max()) / r)
    floor = float(nn.max())
    if failures or not np.isfinite(worst):
        return PerfectnessReport(None, True, floor, 0.0, failures)
    passing = grid[grid <= worst + 1e-15]
    if passing.size == 0:
        return PerfectnessReport(None, True, floor, worst, failures)
    return PerfectnessReport(float(passing[0]), False, floor, worst, failures)


# -- CSV ingestion -------------------------------------------------------------


def load_points_csv(path: str) -> np.ndarray:
    """One row per point, columns = coordinates. Ids are 0-based row indices."""
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise InputError(f"{path}: row {lineno}: {exc}") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise InputError(f"{path}: row {lineno}: expected {width} columns, got {len(vals)}")
            rows.append(vals)
    if not rows:
        raise InputError(f"{path}: no points")
    return np.asarray(rows, dtype=float)


def load_matrix_csv(path: str) -> np.ndarray:
    m = load_points_csv(path)
    if m.shape[0] != m.shape[1]:
        raise InputError(f"{path}: distance matrix must be square, got {m.shape}")
    return m


def load_map_csv(path: str, n_source: int, n_target: int) -> np.ndarray:
    """Rows of (source id, target id); must cover every source id exactly once."""
    assignment = np.full(n_source, -1, dtype=np.int64)
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise InputError(f"{path}: row {lineno}: expected 2 columns")
            try:
                s, t = int(row[0]), int(row[1])
            except ValueError as exc:
                raise InputError(f"{path}: row {lineno}: {exc}") from None
            if not 0 <= s < n_source or not 0 <= t < n_target:
                raise InputError(f"{path}: row {lineno}: id out of range")
            if assignment[s] != -1:
                raise InputError(f"{path}: row {lineno}: duplicate source id {s}")
            assignment[s] = t
    if (assignment < 0).any():
        missing = int(np.flatnonzero(assignment < 0)[0])
        raise InputError(f"{path}: source id {missing} has no image")
    return assignment
