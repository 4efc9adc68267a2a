"""Nested dyadic-style cube systems over a finite metric space.

A system is a hierarchy of partitions, one per level ``k = 0..max_level``.
Level-k centers are a maximal ``sep * ratio**k``-separated subset of the
points (greedy farthest-point insertion, lowest-id tie-break); maximality
makes every point lie within ``cov * ratio**k`` of a center once
``cov >= sep``.  Cubes are built by nearest-center assignment at the deepest
level and by attaching each finer cube to the level above through its own
center, so members aggregate upward into a forest.

Because farthest-point insertion visits points in a threshold-independent
order, the per-level greedy runs share prefixes: the selection order is
computed once and each level keeps the prefix whose insertion distances
clear its separation threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .spaces import FiniteMetricSpace, _diameter_ids

MAX_LEVELS = 40

DEFAULT_STRICT = dict(sep=1.0, cov=6.0, ratio=1.0 / 72.0)
DEFAULT_RELAXED = dict(sep=1.0, cov=6.0, ratio=0.5)


@dataclass(frozen=True)
class DyadicParams:
    """Constants of a cube system.

    ``strict`` mode enforces ``12 * cov * ratio <= sep`` and ``cov > 5 * sep``
    (the regime where the full nesting/sandwich theory applies); ``relaxed``
    mode allows any ratio in (0, 1) and tags the system so consumers that
    need the strict constants can warn.
    """

    ratio: float
    sep: float = 1.0
    cov: float = 6.0
    max_level: int = 8
    mode: str = "relaxed"

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise DomainError(f"ratio must be in (0, 1), got {self.ratio}")
        if self.sep <= 0 or self.cov <= 0:
            raise DomainError("sep and cov must be positive")
        if self.max_level < 0 or self.max_level > MAX_LEVELS:
            raise DomainError(f"max_level must be in [0, {MAX_LEVELS}]")
        if self.mode not in ("strict", "relaxed"):
            raise DomainError(f"mode must be strict or relaxed, got {self.mode!r}")
        if self.mode == "strict":
            if 12.0 * self.cov * self.ratio > self.sep:
                raise DomainError("strict mode requires 12 * cov * ratio <= sep")
            if self.cov <= 5.0 * self.sep:
                raise DomainError("strict mode requires cov > 5 * sep")

    def sep_radius(self, level: int) -> float:
        return self.sep * self.ratio ** level

    def cov_radius(self, level: int) -> float:
        return self.cov * self.ratio ** level

    def outer_radius(self, level: int) -> float:
        return 2.0 * self.cov * self.ratio ** level

    def inner_radius(self, level: int) -> float:
        return self.sep * self.ratio ** level / 3.0


def default_params(mode: str = "relaxed", max_level: int | None = None,
                   resolution_floor: float | None = None) -> DyadicParams:
    """Default constants; depth defaults to the resolution-floor level."""
    base = DEFAULT_STRICT if mode == "strict" else DEFAULT_RELAXED
    if max_level is None:
        if resolution_floor and resolution_floor > 0:
            k = math.ceil(math.log(resolution_floor) / math.log(base["ratio"]))
            max_level = max(0, min(MAX_LEVELS, k))
        else:
            max_level = 8
    return DyadicParams(mode=mode, max_level=max_level, **base)


@dataclass
class DyadicCube:
    index: int
    level: int
    center: int                      # point id
    parent: int | None               # cube index
    children: list = field(default_factory=list)
    members: np.ndarray = None       # point ids, sorted
    diam: float = 0.0                # member-set diameter
    outer_radius: float = 0.0
    inner_radius: float = 0.0


class DyadicSystem:
    """Immutable multi-level nested partition of a finite metric space."""

    def __init__(self, space: FiniteMetricSpace, params: DyadicParams,
                 cubes: list[DyadicCube], levels: list[list[int]],
                 level_centers: list[np.ndarray]):
        self.space = space
        self.params = params
        self.cubes = cubes
        self.levels = levels                  # cube indexes per level
        self.level_centers = level_centers    # point ids per level
        self.roots = list(levels[0])

    @property
    def max_level(self) -> int:
        return self.params.max_level

    def cubes_at(self, level: int) -> list[DyadicCube]:
        return [self.cubes[i] for i in self.levels[level]]

    def to_json(self) -> dict:
        return {
            "params": {
                "ratio": self.params.ratio, "sep": self.params.sep,
                "cov": self.params.cov, "max_level": self.params.max_level,
                "mode": self.params.mode,
            },
            "n_points": self.space.n,
            "levels": [
                {"level": k, "centers": centers.tolist()}
                for k, centers in enumerate(self.level_centers)
            ],
            "cubes": [
                {
                    "index": c.index, "level": c.level, "center": c.center,
                    "parent": c.parent, "children": list(c.children),
                    "members": c.members.tolist(), "diam": c.diam,
                }
                for c in self.cubes
            ],
        }


def farthest_point_order(space: FiniteMetricSpace) -> tuple[np.ndarray, np.ndarray]:
    """Farthest-point insertion order starting at id 0, with the distance to
    the already-selected set at each insertion (inf for the first point).

    Ties take the lowest id.  Insertion distances are non-increasing, so the
    level-k centers are exactly the prefix with insertion distance >= threshold.
    """
    n = space.n
    order = np.empty(n, dtype=np.int64)
    dists = np.empty(n)
    min_dist = np.full(n, np.inf)
    current = 0
    for step in range(n):
        order[step] = current
        dists[step] = min_dist[current]
        min_dist = np.minimum(min_dist, space.distances_from(int(current)))
        min_dist[current] = -1.0
        current = int(np.argmax(min_dist))
    dists[0] = np.inf
    return order, dists


def build_net_points(space: FiniteMetricSpace, params: DyadicParams) -> list[np.ndarray]:
    """Per-level center lists: maximal greedy separated subsets.

    Level k keeps the farthest-point prefix whose insertion distances are
    >= sep * ratio**k; maximality gives the covering property for cov >= sep.
    """
    if space.n == 0:
        raise DomainError("cannot build nets on an empty space")
    order, dists = farthest_point_order(space)
    centers = []
    for k in range(params.max_level + 1):
        thr = params.sep_radius(k)
        count = int(np.searchsorted(-dists, -thr, side="right"))
        count = max(count, 1)
        centers.append(np.sort(order[:count]))
    return centers


def _nearest(space: FiniteMetricSpace, targets: np.ndarray,
             centers: np.ndarray) -> np.ndarray:
    """Index (into ``centers``) of the nearest center for each target point.

    Centers are sorted by id, and argmin takes the first minimum, so ties go
    to the lowest center id.
    """
    out = np.empty(len(targets), dtype=np.int64)
    if len(centers) <= len(targets):
        block = np.empty((len(centers), len(targets)))
        for ci, c in enumerate(centers):
            block[ci] = space.distances_from(int(c))[targets]
        out = np.argmin(block, axis=0)
    else:
        for ti, t in enumerate(targets):
            out[ti] = int(np.argmin(space.distances_from(int(t))[centers]))
    return out


def build_cubes(space: FiniteMetricSpace, level_centers: list[np.ndarray],
                params: DyadicParams) -> DyadicSystem:
    """Assemble the cube forest from per-level center lists.

    Deepest level: each point joins its nearest center.  Level k < K: each
    level-(k+1) cube attaches to the nearest level-k center of its own
    center.  Ties go to the lowest center id; members aggregate upward.
    """
    if len(level_centers) != params.max_level + 1:
        raise DomainError("center lists do not match max_level")
    for k, centers in enumerate(level_centers):
        if len(centers) == 0 or centers.min() < 0 or centers.max() >= space.n:
            raise DomainError(f"level {k} centers inconsistent with the space")
    K = params.max_level
    all_points = np.arange(space.n)

    # members of the deepest level
    deep_centers = level_centers[K]
    if len(deep_centers) == space.n and np.array_equal(deep_centers, all_points):
        deep_assign = all_points.copy()
    else:
        deep_assign = _nearest(space, all_points, deep_centers)
    deep_members = [np.sort(all_points[deep_assign == ci])
                    for ci in range(len(deep_centers))]

    # attach each level-(k+1) cube to a level-k cube via its center
    attach = []  # attach[k][j] = index into level_centers[k] for child j at level k+1
    for k in range(K):
        child_centers = level_centers[k + 1]
        parent_centers = level_centers[k]
        if np.array_equal(child_centers, parent_centers):
            attach.append(np.arange(len(child_centers), dtype=np.int64))
        else:
            attach.append(_nearest(space, child_centers, parent_centers))

    cubes: list[DyadicCube] = []
    levels: list[list[int]] = [[] for _ in range(K + 1)]
    index_of = {}  # (level, center position) -> cube index

    def add_cube(level, center_pos, center_id):
        cube = DyadicCube(index=len(cubes), level=level, center=int(center_id),
                          parent=None,
                          outer_radius=params.outer_radius(level),
                          inner_radius=params.inner_radius(level))
        cubes.append(cube)
        levels[level].append(cube.index)
        index_of[(level, center_pos)] = cube.index
        return cube

    for k in range(K + 1):
        for pos, cid in enumerate(level_centers[k]):
            add_cube(k, pos, cid)

    for k in range(K):
        for pos in range(len(level_centers[k + 1])):
            child = cubes[index_of[(k + 1, pos)]]
            parent = cubes[index_of[(k, int(attach[k][pos]))]]
            child.parent = parent.index
            parent.children.append(child.index)

    # aggregate members bottom-up
    for pos, members in enumerate(deep_members):
        cubes[index_of[(K, pos)]].members = members
    for k in range(K - 1, -1, -1):
        for idx in levels[k]:
            cube = cubes[idx]
            parts = [cubes[ch].members for ch in cube.children]
            cube.members = (np.sort(np.concatenate(parts)) if parts
                            else np.empty(0, dtype=np.int64))
    for cube in cubes:
        cube.diam = _diameter_ids(space, cube.members) if cube.members.size else 0.0

    return DyadicSystem(space, params, cubes, levels, level_centers)


def build_system(space: FiniteMetricSpace, params: DyadicParams | None = None,
                 mode: str = "relaxed", max_level: int | None = None) -> DyadicSystem:
    if params is None:
        params = default_params(mode=mode, max_level=max_level)
    return build_cubes(space, build_net_points(space, params), params)


@dataclass
class VerificationReport:
    """Per-property violation counts for a cube system.

    Nesting is witnessed by two exact checks: every level partitions the
    point set, and every cube's members equal the concatenation of its
    children's members.  Together those force subset-or-disjoint for every
    pair of cubes.
    """

    partition_violations: int = 0
    aggregation_violations: int = 0
    outer_ball_violations: int = 0
    inner_ball_violations: int = 0
    separation_violations: int = 0
    covering_violations: int = 0
    ball_chain_flags: int = 0     # parent-chain radii inequality, non-fatal when relaxed
    mode: str = "relaxed"
    details: list = field(default_factory=list)

    @property
    def core_violations(self) -> int:
        return (self.partition_violations + self.aggregation_violations
                + self.outer_ball_violations)

    def ok(self, strict: bool | None = None) -> bool:
        strict = (self.mode == "strict") if strict is None else strict
        bad = self.core_violations
        if strict:
            bad += self.separation_violations + self.covering_violations
            bad += self.ball_chain_flags
        return bad == 0

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "partition_violations": self.partition_violations,
            "aggregation_violations": self.aggregation_violations,
            "outer_ball_violations": self.outer_ball_violations,
            "inner_ball_violations": self.inner_ball_violations,
            "separation_violations": self.separation_violations,
            "covering_violations": self.covering_violations,
            "ball_chain_flags": self.ball_chain_flags,
            "details": self.details[:50],
        }


def verify_system(system: DyadicSystem) -> VerificationReport:
    """Check the partition/nesting/ball properties on a (possibly hand-built,
    possibly corrupted) system and report violations instead of raising."""
    rep = VerificationReport(mode=system.params.mode)
    space, params = system.space, system.params
    all_ids = np.arange(space.n)

    for k, idxs in enumerate(system.levels):
        member_lists = [system.cubes[i].members for i in idxs
                        if system.cubes[i].members.size]
        combined = (np.sort(np.concatenate(member_lists)) if member_lists
                    else np.empty(0, dtype=np.int64))
        if not np.array_equal(combined, all_ids):
            rep.partition_violations += 1
            rep.details.append(f"level {k}: cubes do not partition the points")

    for cube in system.cubes:
        if cube.children:
            parts = [system.cubes[ch].members for ch in cube.children]
            agg = np.sort(np.concatenate(parts))
            if not np.array_equal(agg, cube.members):
                rep.aggregation_violations += 1
                rep.details.append(f"cube {cube.index}: children do not aggregate")

        if cube.members.size:
            row = space.distances_from(cube.center)
            dists = row[cube.members]
            outer = params.outer_radius(cube.level)
            if (dists >= outer).any():
                rep.outer_ball_violations += 1
                rep.details.append(
                    f"cube {cube.index}: member at distance >= outer radius")
            inner = params.inner_radius(cube.level)
            inside = np.flatnonzero(row < inner)
            if not np.isin(inside, cube.members).all():
                rep.inner_ball_violations += 1
                rep.details.append(
                    f"cube {cube.index}: inner-ball point assigned elsewhere")

        if cube.parent is not None:
            parent = system.cubes[cube.parent]
            d = space.distance(cube.center, parent.center)
            if (params.outer_radius(cube.level) + d
                    > params.outer_radius(parent.level) + 1e-12):
                rep.ball_chain_flags += 1

    for k, centers in enumerate(system.level_centers):
        thr = params.sep_radius(k)
        for c in centers:
            row = space.distances_from(int(c))[centers]
            row = row[centers != c]
            if row.size and row.min() < thr:
                rep.separation_violations += 1
                rep.details.append(f"level {k}: centers closer than separation")
                break
        cov = params.cov_radius(k)
        min_dist = np.full(space.n, np.inf)
        for c in centers:
            np.minimum(min_dist, space.distances_from(int(c)), out=min_dist)
        if float(min_dist.max()) >= cov:
            rep.covering_violations += 1
            rep.details.append(f"level {k}: point at distance >= covering radius")

    return rep


def child_bound(params: DyadicParams, doubling_constant: int) -> float:
    """Theoretical cap on per-cube child counts from the doubling constant.

    Returns ``Cd ** ((6 * cov / (sep * ratio)) * log2(Cd))``; typically
    astronomically larger than any observed child count.
    """
    if doubling_constant < 1:
        raise DomainError("doubling constant must be >= 1")
    if doubling_constant == 1:
        return 1.0
    cd = float(doubling_constant)
    exponent = (6.0 * params.cov / (params.sep * params.ratio)) * math.log2(cd)
    return cd ** exponent
