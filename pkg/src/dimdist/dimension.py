"""Dimension estimators: covering counts, level windows, and optimal
admissible antichain covers by bottom-up tree dynamic programming.

Box-counting estimates come from greedy covering numbers over a geometric
scale grid.  Intermediate and Hausdorff-style estimates solve, per scale
``delta``, for the exponent ``s`` where the cheapest admissible antichain
cover of the target has cost ``sum(diam**s) == 1``, then extrapolate the
series ``s(delta)`` against ``1/log(1/delta)``.

Finite data caveats are explicit: every estimate carries a scale window, and
deep levels whose cubes degenerate below the sample resolution are priced at
the theoretical per-level diameter floor ``perfectness * sep / 3 * ratio**k``
so that isolated points still pay for the mandatory lower diameter bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicSystem
from .errors import CapacityError, DomainError
from .spaces import SubsetRef, estimate_uniform_perfectness, min_positive_gap

DEFAULT_BISECTION_TOL = 1e-3
DEFAULT_RESIDUAL_CAP = 0.05
DEFAULT_PERFECTNESS = 0.5
_EPS = 1e-9


# -- covering numbers ----------------------------------------------------------


def covering_number(subset: SubsetRef, r: float, method: str = "greedy") -> int:
    """Number of diameter-<= r sets needed to cover the subset.

    ``greedy`` scans points in id order and joins the first open group that
    stays within diameter r, opening a new group otherwise.  ``exact`` is a
    brute-force minimum over partitions, for at most 12 points.  Greedy is
    always >= exact.

    Diameter comparisons carry a 1e-12 relative slack so that spans which
    equal the scale exactly in the reals survive float rounding.
    """
    if r <= 0:
        raise DomainError("covering scale must be positive")
    thr = r * (1.0 + 1e-12)
    if method == "exact":
        return _exact_covering_number(subset, thr)
    if method != "greedy":
        raise DomainError(f"unknown covering method {method!r}")
    ids = subset.ids
    space = subset.space
    if ids.size == 1:
        return 1
    pts = space.points
    if pts is not None and space.metric == "euclidean" and pts.shape[1] == 1 \
            and space.exponent == 1.0:
        # 1-d fast path: ids are sorted, group diameter = coord - group min
        coords = pts[ids, 0]
        mins: list[float] = []
        for c in coords:
            joined = False
            for m in mins:
                if c - m <= thr:
                    joined = True
                    break
            if not joined:
                mins.append(c)
        return len(mins)
    groups: list[list[int]] = []
    for pid in ids:
        row = space.distances_from(int(pid))
        for g in groups:
            if row[g].max() <= thr:
                g.append(int(pid))
                break
        else:
            groups.append([int(pid)])
    return len(groups)


def _exact_covering_number(subset: SubsetRef, r: float) -> int:
    ids = subset.ids
    n = ids.size
    if n > 12:
        raise CapacityError("exact covering number supports at most 12 points")
    if n == 1:
        return 1
    d = np.empty((n, n))
    for i, pid in enumerate(ids):
        d[i] = subset.space.distances_from(int(pid))[ids]
    full = 1 << n
    ok = np.zeros(full, dtype=bool)   # ok[mask]: the mask has diameter <= r
    ok[0] = True
    for i in range(n):
        ok[1 << i] = True
    for mask in range(1, full):
        if ok[mask] or mask & (mask - 1) == 0:
            continue
        low = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << low)
        if not ok[rest]:
            continue
        members = [j for j in range(n) if rest >> j & 1]
        ok[mask] = all(d[low, j] <= r for j in members)
    best = np.full(full, n + 1, dtype=np.int32)
    best[0] = 0
    for mask in range(1, full):
        low = (mask & -mask).bit_length() - 1
        sub = mask
        while sub:
            if sub >> low & 1 and ok[sub]:
                cand = best[mask ^ sub] + 1
                if cand < best[mask]:
                    best[mask] = cand
            sub = (sub - 1) & mask
    return int(best[full - 1])


# -- estimates -----------------------------------------------------------------


@dataclass
class DimensionEstimate:
    """An exponent estimate with its scale window and per-scale series."""

    kind: str                      # "box", "hausdorff", "intermediate"
    value: float
    theta: float | None = None
    scale_min: float = 0.0
    scale_max: float = 0.0
    series: list = field(default_factory=list)   # (scale, exponent) pairs
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "theta": self.theta,
            "value": self.value,
            "scale_min": self.scale_min,
            "scale_max": self.scale_max,
            "series": [{"scale": a, "s": b} for a, b in self.series],
            "diagnostics": self.diagnostics,
        }


def _check_geometric(values: list[float], name: str, minimum: int = 2) -> None:
    if len(values) < minimum:
        raise DomainError(f"{name} needs at least {minimum} entries")
    vals = np.asarray(values, dtype=float)
    if (vals <= 0).any() or (np.diff(vals) >= 0).any():
        raise DomainError(f"{name} must be positive and strictly decreasing")
    if len(vals) >= 3:
        ratios = vals[1:] / vals[:-1]
        if not np.allclose(ratios, ratios[0], rtol=1e-6):
            raise DomainError(f"{name} must be geometrically spaced")


def box_dimension(subset: SubsetRef, scales: list[float],
                  resolution_floor: float | None = None) -> DimensionEstimate:
    """Least-squares slope of log N(E, r) against log(1/r) over the grid."""
    _check_geometric(list(scales), "scale grid", minimum=4)
    if resolution_floor is not None and min(scales) < resolution_floor:
        raise DomainError(
            f"scales below the resolution floor {resolution_floor:g} are not reportable")
    counts = [covering_number(subset, r) for r in scales]
    x = np.log(1.0 / np.asarray(scales))
    y = np.log(np.asarray(counts, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    local = list((y[1:] - y[:-1]) / (x[1:] - x[:-1]))
    series = [(float(r), float(sl)) for r, sl in zip(scales[:-1], local)]
    return DimensionEstimate(
        kind="box", value=float(slope),
        scale_min=float(min(scales)), scale_max=float(max(scales)),
        series=series,
        diagnostics={
            "counts": [int(c) for c in counts],
            "log_counts": [float(v) for v in y],
            "residual": float(np.abs(resid).max()),
            "intercept": float(intercept),
        })


# -- admissible level windows --------------------------------------------------


@dataclass(frozen=True)
class WindowConstants:
    perfectness: float
    sep: float
    cov: float
    ratio: float


@dataclass(frozen=True)
class LevelWindow:
    """Integer level interval whose cube scales fit an admissibility range."""

    level_min: int
    level_max: int
    theta: float
    delta: float
    constants: WindowConstants
    empty: bool = False
    fallback: bool = False

    def levels(self) -> range:
        return range(self.level_min, self.level_max + 1)

    def to_json(self) -> dict:
        return {"level_min": self.level_min, "level_max": self.level_max,
                "theta": self.theta, "delta": self.delta,
                "empty": self.empty, "fallback": self.fallback}


def admissible_levels(theta: float, delta: float,
                      constants: WindowConstants) -> LevelWindow:
    """Largest level interval with ``ratio**k`` inside
    ``[3 * delta**(1/theta) / (perfectness * sep), delta / (4 * cov)]``.

    An inverted interval yields a flagged empty window, not an error.
    """
    if not 0.0 < theta <= 1.0:
        raise DomainError(f"theta must be in (0, 1], got {theta}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must be in (0, 1), got {delta}")
    c = constants
    if min(c.perfectness, c.sep, c.cov) <= 0 or not 0 < c.ratio < 1:
        raise DomainError("window constants must be positive with ratio in (0,1)")
    log_b = math.log(c.ratio)
    upper = delta / (4.0 * c.cov)
    lower = 3.0 * delta ** (1.0 / theta) / (c.perfectness * c.sep)
    k_min = max(0, math.ceil(math.log(upper) / log_b - _EPS))
    k_max = math.floor(math.log(lower) / log_b + _EPS)
    empty = k_min > k_max or lower > upper * (1 + _EPS)
    return LevelWindow(k_min, k_max, theta, delta, c, empty=empty)


def slack_window(theta: float, delta: float,
                 constants: WindowConstants) -> LevelWindow:
    """Constant-slack fallback: levels with ``ratio**k`` in
    ``[delta**(1/theta), delta]``.

    Fixed multiplicative slack on the admissible diameter range does not move
    the exponent, so this keeps large-theta estimation usable at scales where
    the strict window is inverted.  Flagged as a fallback.
    """
    log_b = math.log(constants.ratio)
    k_min = max(0, math.ceil(math.log(delta) / log_b - _EPS))
    k_max = math.floor((1.0 / theta) * math.log(delta) / log_b + _EPS)
    empty = k_min > k_max
    return LevelWindow(k_min, k_max, theta, delta, constants,
                       empty=empty, fallback=True)


# -- antichain cover DP ---------------------------------------------------------


@dataclass
class CoverTree:
    """Minimal forest view used by the antichain DP (systems or toy trees)."""

    level: np.ndarray            # per-node level
    parent: np.ndarray           # -1 for roots
    children: list               # list[list[int]]
    diam: np.ndarray             # per-node cost diameter
    meets: np.ndarray            # per-node bool: intersects the target

    @classmethod
    def from_system(cls, system: DyadicSystem, subset: SubsetRef,
                    cost_diam: np.ndarray | None = None) -> "CoverTree":
        mask = subset.mask()
        n = len(system.cubes)
        level = np.array([c.level for c in system.cubes], dtype=np.int64)
        parent = np.array([-1 if c.parent is None else c.parent
                           for c in system.cubes], dtype=np.int64)
        children = [list(c.children) for c in system.cubes]
        diam = (np.array([c.diam for c in system.cubes])
                if cost_diam is None else np.asarray(cost_diam, dtype=float))
        meets = np.zeros(n, dtype=bool)
        deepest = system.levels[system.max_level]
        for idx in deepest:
            meets[idx] = bool(mask[system.cubes[idx].members].any())
        for k in range(system.max_level - 1, -1, -1):
            for idx in system.levels[k]:
                meets[idx] = any(meets[ch] for ch in children[idx])
        return cls(level, parent, children, diam, meets)


def antichain_min_cost(tree: CoverTree, s: float, level_min: int,
                       level_max: int,
                       diam_floor: float = 0.0) -> tuple[float, list[int]]:
    """Exact minimizer of ``sum(max(diam, diam_floor)**s)`` over antichains
    of nodes with levels in [level_min, level_max] covering every flagged
    node.

    ``diam_floor`` prices the mandatory enlargement of covering sets up to an
    admissibility floor; 0 keeps raw member diameters.  Bottom-up: at
    ``level_max`` a flagged node must be taken; above it the cheaper of
    taking the node (allowed from ``level_min``) or the sum of its flagged
    children wins, ties preferring the coarser node.  Convention:
    ``0.0 ** 0.0 == 1.0`` so at s=0 the cost counts cubes.
    """
    if level_min > level_max:
        raise DomainError("empty level window")
    level, parent, meets = tree.level, tree.parent, tree.meets
    n = len(level)
    active = meets & (level <= level_max)
    meeting_kids = np.zeros(n, dtype=np.int64)
    inner = active & (parent >= 0) & (level <= level_max)
    np.add.at(meeting_kids, parent[inner], 1)
    eff_diam = np.maximum(tree.diam, diam_floor) if diam_floor > 0 else tree.diam
    own = np.where(level >= level_min, eff_diam ** s, np.inf)
    cost = np.zeros(n)
    take = np.zeros(n, dtype=bool)
    child_sum = np.zeros(n)
    for lvl in range(int(level.max()), -1, -1):
        nodes = np.flatnonzero(active & (level == lvl))
        if nodes.size == 0:
            continue
        forced = (lvl == level_max) | (meeting_kids[nodes] == 0)
        pick = forced | (own[nodes] <= child_sum[nodes])
        if not np.isfinite(own[nodes][forced]).all():
            raise DomainError(
                f"node at level {lvl} cannot be covered inside the window")
        cost[nodes] = np.where(pick, own[nodes], child_sum[nodes])
        take[nodes] = pick
        has_parent = nodes[parent[nodes] >= 0]
        np.add.at(child_sum, parent[has_parent], cost[has_parent])
    total = 0.0
    chosen: list[int] = []
    stack = sorted(int(i) for i in np.flatnonzero((parent == -1) & active))
    while stack:
        idx = stack.pop(0)
        if take[idx]:
            total += float(cost[idx])
            chosen.append(idx)
        else:
            stack = sorted(ch for ch in tree.children[idx]
                           if active[ch]) + stack
    return total, chosen


@dataclass
class AntichainCover:
    """A set of pairwise non-nested cubes covering the target subset."""

    system: DyadicSystem
    subset: SubsetRef
    window: LevelWindow
    cube_indexes: list[int]
    cost_value: float
    exponent: float
    diam_floor: float = 0.0

    def cost(self, s: float, cost_diam: np.ndarray | None = None) -> float:
        total = 0.0
        for idx in self.cube_indexes:
            d = (self.system.cubes[idx].diam if cost_diam is None
                 else float(cost_diam[idx]))
            total += max(d, self.diam_floor) ** s
        return total

    def validate(self) -> None:
        mask = self.subset.mask()
        seen = np.zeros(self.system.space.n, dtype=np.int64)
        for idx in self.cube_indexes:
            cube = self.system.cubes[idx]
            if not self.window.level_min <= cube.level <= self.window.level_max:
                raise DomainError(f"cube {idx} outside the level window")
            seen[cube.members] += 1
        if (seen > 1).any():
            raise DomainError("cover cubes overlap (not an antichain)")
        if not (seen[mask] >= 1).all():
            raise DomainError("cover misses part of the target subset")


def min_cover_cost(system: DyadicSystem, subset: SubsetRef, s: float,
                   window: LevelWindow,
                   cost_diam: np.ndarray | None = None,
                   diam_floor: float = 0.0) -> tuple[float, AntichainCover]:
    """Cheapest admissible antichain cover of the subset at exponent ``s``.

    Members-set diameters by default (zero-diameter cubes cost 0 for s > 0);
    a positive ``diam_floor`` prices each cube at
    ``max(diam, diam_floor)**s`` instead, modelling the mandatory enlargement
    of covering sets up to an admissibility floor.
    """
    if window.empty:
        raise DomainError("empty level window")
    if window.level_max > system.max_level:
        raise DomainError(
            f"window reaches level {window.level_max} but the system stops at "
            f"{system.max_level}")
    tree = CoverTree.from_system(system, subset, cost_diam)
    total, chosen = antichain_min_cost(tree, s, window.level_min,
                                       window.level_max, diam_floor)
    cover = AntichainCover(system, subset, window, sorted(chosen), total, s,
                           diam_floor)
    return total, cover


# -- exponent solving and extrapolation -----------------------------------------


def solve_cost_exponent(cost_fn, hi: float = 4.0,
                        tol: float = DEFAULT_BISECTION_TOL) -> float:
    """Smallest s with cost(s) <= 1, by bisection (cost is non-increasing
    once all admissible diameters are below 1)."""
    if cost_fn(0.0) <= 1.0:
        return 0.0
    while cost_fn(hi) > 1.0:
        hi *= 2.0
        if hi > 512.0:
            raise DomainError("cover cost does not drop below 1 at any exponent")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if cost_fn(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def extrapolate_series(deltas: list[float], svals: list[float],
                       residual_cap: float = DEFAULT_RESIDUAL_CAP) -> tuple[float, dict]:
    """Affine extrapolation of s(delta) against 1/log(1/delta) to 0."""
    diag: dict = {"points": len(deltas)}
    if len(deltas) == 1:
        diag["fallback"] = True
        return svals[0], diag
    x = 1.0 / np.log(1.0 / np.asarray(deltas))
    y = np.asarray(svals)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.abs(y - (slope * x + intercept)).max())
    diag.update(slope=float(slope), intercept=float(intercept), residual=resid)
    if resid > residual_cap:
        diag["fallback"] = True
        return float(svals[-1]), diag
    diag["fallback"] = False
    return max(float(intercept), 0.0), diag


def resolve_perfectness(subset: SubsetRef, override: float | None = None,
                        default: float = DEFAULT_PERFECTNESS) -> tuple[float, str]:
    """Uniform-perfectness constant used for windows and diameter floors.

    Measured on the subset itself over a radius grid when possible; falls
    back to the documented default when the measurement is flagged (isolated
    points make finite samples fail at most radii).
    """
    if override is not None:
        if not 0.0 < override <= 1.0:
            raise DomainError("perfectness override must be in (0, 1]")
        return float(override), "override"
    if subset.size < 2:
        return default, "default"
    from .spaces import diameter as _diam
    dia = _diam(subset)
    if dia <= 0:
        return default, "default"
    radii = [dia / 4.0, dia / 8.0, dia / 16.0]
    report = estimate_uniform_perfectness(subset, radii)
    if report.flagged or report.constant is None:
        return default, "default"
    return float(report.constant), "measured"


def _ambient_guess(subset: SubsetRef) -> float:
    pts = subset.space.points
    return float(pts.shape[1]) if pts is not None else 2.0


def _windowed_estimate(system: DyadicSystem, subset: SubsetRef,
                       windows: list[LevelWindow], kind: str,
                       theta: float | None,
                       perfectness: float, perfectness_source: str,
                       bisection_tol: float, residual_cap: float,
                       use_floor: bool,
                       resolution_floor: float | None = None) -> DimensionEstimate:
    tree_cache: CoverTree | None = None
    series: list[tuple[float, float]] = []
    skipped: list[dict] = []
    fallback_windows = 0
    floor_binds = False
    for window in windows:
        if window.empty:
            skipped.append({"delta": window.delta, "reason": "empty window"})
            continue
        if window.level_max > system.max_level:
            skipped.append({"delta": window.delta,
                            "reason": f"needs level {window.level_max} > depth "
                                      f"{system.max_level}"})
            continue
        if (theta is not None and resolution_floor is not None
                and resolution_floor > 0
                and window.delta ** (1.0 / theta) < resolution_floor):
            skipped.append({"delta": window.delta,
                            "reason": "effective scale below the resolution floor"})
            continue
        if tree_cache is None:
            tree_cache = CoverTree.from_system(system, subset)
        tree = tree_cache
        clamp = (window.delta ** (1.0 / theta)
                 if theta is not None and use_floor else 0.0)

        def cost_fn(s: float) -> float:
            return antichain_min_cost(tree, s, window.level_min,
                                      window.level_max, clamp)[0]

        s_val = solve_cost_exponent(cost_fn, hi=_ambient_guess(subset) + 2.0,
                                    tol=bisection_tol)
        _, chosen = antichain_min_cost(tree, s_val, window.level_min,
                                       window.level_max, clamp)
        if any(tree.level[i] == system.max_level for i in chosen):
            floor_binds = True
        if window.fallback:
            fallback_windows += 1
        series.append((window.delta, s_val))
    if not series:
        raise DomainError(
            "no usable scales: every delta produced an empty or too-deep window "
            "(hint: smaller theta needs smaller delta, or build a deeper system); "
            f"skipped={skipped}")
    value, fit_diag = extrapolate_series([d for d, _ in series],
                                         [s for _, s in series], residual_cap)
    if kind == "hausdorff" and floor_binds:
        # the deepest level participates in the optimal covers, so the series
        # trend is data-limited; extrapolating it would overshoot
        value = series[-1][1]
        fit_diag["fallback"] = True
        fit_diag["fallback_reason"] = "resolution floor binds"
    diag = {
        "perfectness": perfectness,
        "perfectness_source": perfectness_source,
        "resolution_floor": resolution_floor,
        "fallback_windows": fallback_windows,
        "resolution_floor_binds": floor_binds,
        "skipped": skipped,
        "windows": [w.to_json() for w in windows if not w.empty],
        "fit": fit_diag,
        "bisection_tol": bisection_tol,
    }
    return DimensionEstimate(kind=kind, theta=theta, value=value,
                             scale_min=min(d for d, _ in series),
                             scale_max=max(d for d, _ in series),
                             series=series, diagnostics=diag)


def pick_window(theta: float, delta: float, constants: WindowConstants,
                rule: str = "slack") -> LevelWindow:
    """Level window for one scale under the chosen admissibility rule.

    ``slack``: levels with ``ratio**k`` in ``[delta**(1/theta), delta]``;
    cube diameters then sit in that range up to fixed constants, which
    leaves the exponent untouched.  ``strict``: the constant-corrected
    window when non-empty (at desk scales it is only a couple of levels
    wide, which biases mid-theta estimates toward box counting), with the
    slack window as the flagged fallback.
    """
    if rule == "slack":
        return slack_window(theta, delta, constants)
    if rule != "strict":
        raise DomainError(f"unknown window rule {rule!r}")
    w = admissible_levels(theta, delta, constants)
    if w.empty:
        w = slack_window(theta, delta, constants)
    return w


def intermediate_dimension(system: DyadicSystem, subset: SubsetRef, theta: float,
                           deltas: list[float], *,
                           perfectness: float | None = None,
                           bisection_tol: float = DEFAULT_BISECTION_TOL,
                           residual_cap: float = DEFAULT_RESIDUAL_CAP,
                           use_floor: bool = True,
                           window_rule: str = "slack",
                           resolution_floor: float | None = None
                           ) -> DimensionEstimate:
    """Exponent estimate for covers whose diameters live in
    ``[delta**(1/theta), delta]`` (theta = 1 recovers box-like counting).

    Scales whose fine end ``delta**(1/theta)`` falls below the subset's
    resolution floor are refused (finite data carries no information there);
    pass ``resolution_floor=0`` to disable the guard.
    """
    if not 0.0 < theta <= 1.0:
        raise DomainError(f"theta must be in (0, 1], got {theta}")
    _check_geometric(list(deltas), "delta grid")
    if max(deltas) >= 1.0:
        raise DomainError("delta grid must stay below 1")
    if resolution_floor is None:
        resolution_floor = min_positive_gap(subset)
    c_u, source = resolve_perfectness(subset, perfectness)
    p = system.params
    constants = WindowConstants(c_u, p.sep, p.cov, p.ratio)
    windows = [pick_window(theta, d, constants, window_rule) for d in deltas]
    return _windowed_estimate(system, subset, windows, "intermediate", theta,
                              c_u, source, bisection_tol, residual_cap, use_floor,
                              resolution_floor)


def hausdorff_dimension(system: DyadicSystem, subset: SubsetRef,
                        deltas: list[float], *,
                        perfectness: float | None = None,
                        bisection_tol: float = DEFAULT_BISECTION_TOL,
                        residual_cap: float = DEFAULT_RESIDUAL_CAP,
                        use_floor: bool = True) -> DimensionEstimate:
    """Effective Hausdorff exponent: cover diameters only bounded above by
    ``delta``, with the level window released down to the system's deepest
    level.  When the deepest level participates in the optimal covers the
    estimate carries a ``resolution_floor_binds`` caveat flag.
    """
    _check_geometric(list(deltas), "delta grid")
    if max(deltas) >= 1.0:
        raise DomainError("delta grid must stay below 1")
    c_u, source = resolve_perfectness(subset, perfectness)
    p = system.params
    constants = WindowConstants(c_u, p.sep, p.cov, p.ratio)
    log_b = math.log(p.ratio)
    windows = []
    for d in deltas:
        k_lo = max(0, math.ceil(math.log(d) / log_b - _EPS))
        windows.append(LevelWindow(k_lo, system.max_level, 0.0, d, constants,
                                   empty=k_lo > system.max_level))
    return _windowed_estimate(system, subset, windows, "hausdorff", None,
                              c_u, source, bisection_tol, residual_cap, use_floor)
