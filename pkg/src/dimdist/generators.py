"""Deterministic generators for fractal point sets and map families.

All generators are pure: the same spec always yields the same bytes.  Each
generated set carries its exact resolution floor (minimum positive gap).

Spec syntax (used by the CLI and tests)::

    cantor(ratio, depth)        endpoints of the level-`depth` intervals
    sequence_set(p, n_max)      {n**-p : 1 <= n <= n_max} plus {0}
    grid(n, dim)                n**dim lattice points on [0,1]**dim
    product(spec, spec)         cartesian product (coordinates concatenate)
    union(spec, spec)           set union (same ambient dimension)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DomainError
from .holder import MapSample
from .spaces import FiniteMetricSpace, SubsetRef, whole_space

MAX_POINTS_BUDGET = 2_000_000


@dataclass(frozen=True)
class GeneratedSet:
    space: FiniteMetricSpace
    subset: SubsetRef
    resolution_floor: float
    spec: str


def _cantor_points(ratio: float, depth: int) -> np.ndarray:
    if not 0.0 < ratio <= 0.5:
        raise DomainError(f"cantor ratio must be in (0, 1/2], got {ratio}")
    if depth < 0:
        raise DomainError("cantor depth must be >= 0")
    if 2 ** (depth + 1) > MAX_POINTS_BUDGET:
        raise CapacityError(f"cantor depth {depth} exceeds the point budget")
    lefts = np.array([0.0])
    length = 1.0
    for _ in range(depth):
        child = length * ratio
        lefts = np.concatenate([lefts, lefts + (length - child)])
        length = child
    pts = np.concatenate([lefts, lefts + length])
    return np.unique(pts)


def cantor_min_gap(ratio: float, depth: int) -> float:
    """Exact minimum positive gap between the generated endpoints.

    At depth k the candidate gaps are the interval length ratio**k and the
    hole between sibling intervals ratio**(k-1) * (1 - 2*ratio).
    """
    if depth == 0:
        return 1.0  # single interval, endpoints {0, 1}
    interval = ratio ** depth
    hole = ratio ** (depth - 1) * (1.0 - 2.0 * ratio)
    if hole == 0.0:  # ratio == 1/2: touching intervals, duplicates removed
        return interval
    return min(interval, hole)


def _sequence_points(p: float, n_max: int) -> np.ndarray:
    if p <= 0:
        raise DomainError(f"sequence exponent must be positive, got {p}")
    if n_max < 1:
        raise DomainError("sequence n_max must be >= 1")
    if n_max + 1 > MAX_POINTS_BUDGET:
        raise CapacityError("sequence n_max exceeds the point budget")
    n = np.arange(1, n_max + 1, dtype=float)
    pts = np.concatenate([[0.0], (1.0 / n) ** p])
    return np.unique(pts)


def _grid_points(n: int, dim: int) -> np.ndarray:
    if n < 1 or dim < 1:
        raise DomainError("grid needs n >= 1 and dim >= 1")
    if n ** dim > MAX_POINTS_BUDGET:
        raise CapacityError("grid size exceeds the point budget")
    axis = np.linspace(0.0, 1.0, n) if n > 1 else np.array([0.0])
    if dim == 1:
        return axis[:, None]
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _min_gap(points: np.ndarray) -> float:
    """Exact minimum positive pairwise distance (euclidean)."""
    pts = points if points.ndim == 2 else points[:, None]
    n = pts.shape[0]
    if n < 2:
        return 0.0
    if pts.shape[1] == 1:
        srt = np.sort(pts[:, 0])
        gaps = np.diff(srt)
        gaps = gaps[gaps > 0]
        return float(gaps.min()) if gaps.size else 0.0
    if n > 4096:
        raise CapacityError("exact min gap needs <= 4096 points in dim >= 2")
    sq = np.einsum("ij,ij->i", pts, pts)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
    d2[d2 <= 0] = np.inf
    np.fill_diagonal(d2, np.inf)
    return float(np.sqrt(d2.min()))


def parse_spec(text: str):
    """Parse a generator spec string into (name, args) recursively."""
    text = text.strip()
    if "(" not in text:
        raise DomainError(f"bad generator spec {text!r}")
    name, _, rest = text.partition("(")
    name = name.strip().lower()
    if not rest.endswith(")"):
        raise DomainError(f"bad generator spec {text!r}")
    body = rest[:-1]
    args, depth, cur = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            args.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if cur:
        args.append("".join(cur).strip())
    return name, args


def _num(token: str) -> float:
    if "/" in token:
        a, b = token.split("/")
        return float(a) / float(b)
    return float(token)


def generate(spec: str, cache_threshold: int | None = None) -> GeneratedSet:
    """Build the point set described by ``spec`` with its resolution floor."""
    name, args = parse_spec(spec)
    kw = {}
    if cache_threshold is not None:
        kw["cache_threshold"] = cache_threshold
    if name == "cantor":
        ratio, depth = _num(args[0]), int(args[1])
        pts = _cantor_points(ratio, depth)
        floor = cantor_min_gap(ratio, depth)
        space = FiniteMetricSpace(points=pts, **kw)
    elif name in ("sequence_set", "seq"):
        p, n_max = _num(args[0]), int(args[1])
        pts = _sequence_points(p, n_max)
        floor = _min_gap(pts[:, None])
        space = FiniteMetricSpace(points=pts, **kw)
    elif name == "grid":
        n, dim = int(args[0]), int(args[1])
        pts = _grid_points(n, dim)
        floor = 1.0 / (n - 1) if n > 1 else 0.0
        space = FiniteMetricSpace(points=pts, **kw)
    elif name == "product":
        a = generate(args[0], cache_threshold)
        b = generate(args[1], cache_threshold)
        pa, pb = a.space.points, b.space.points
        combo = np.concatenate(
            [np.repeat(pa, len(pb), axis=0), np.tile(pb, (len(pa), 1))], axis=1)
        if combo.shape[0] > MAX_POINTS_BUDGET:
            raise CapacityError("product exceeds the point budget")
        combo = np.unique(combo, axis=0)
        space = FiniteMetricSpace(points=combo, **kw)
        floor = _min_gap(combo)
    elif name == "union":
        a = generate(args[0], cache_threshold)
        b = generate(args[1], cache_threshold)
        if a.space.points.shape[1] != b.space.points.shape[1]:
            raise DomainError("union requires equal ambient dimensions")
        combo = np.unique(np.concatenate([a.space.points, b.space.points]), axis=0)
        space = FiniteMetricSpace(points=combo, **kw)
        floor = _min_gap(combo)
    else:
        raise DomainError(f"unknown generator {name!r}")
    return GeneratedSet(space, whole_space(space), floor, spec)


def generate_map(kind: str, source: FiniteMetricSpace) -> MapSample:
    """Build a sampled map on ``source``.

    Kinds: ``identity``, ``power(a)`` (x -> x**a, requires 1-d points in
    [0, 1]), ``linear(c)`` (x -> c*x, 1-d), ``snowflake_target(eps)``
    (identity assignment into the snowflaked source metric).
    """
    name, args = parse_spec(kind) if "(" in kind else (kind.strip().lower(), [])
    n = source.n
    ident = np.arange(n, dtype=np.int64)
    if name == "identity":
        return MapSample(source, source, ident)
    if name == "snowflake_target":
        eps = _num(args[0])
        return MapSample(source, source.snowflaked(eps), ident)
    if source.points is None or source.points.shape[1] != 1:
        raise DomainError(f"map kind {name!r} needs a one-dimensional coordinate source")
    x = source.points[:, 0]
    if name == "power":
        a = _num(args[0])
        if a <= 0:
            raise DomainError("power exponent must be positive")
        if (x < 0).any() or (x > 1).any():
            raise DomainError("power map expects samples inside [0, 1]")
        images = x ** a
    elif name == "linear":
        images = _num(args[0]) * x
    else:
        raise DomainError(f"unknown map kind {name!r}")
    target_pts, inverse = np.unique(images, return_inverse=True)
    target = FiniteMetricSpace(points=target_pts[:, None],
                               cache_threshold=source.cache_threshold)
    return MapSample(source, target, inverse.astype(np.int64))
