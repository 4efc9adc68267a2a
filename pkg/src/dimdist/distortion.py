"""Distortion bound evaluators and the cover-pushforward experiment.

The experiment takes an admissible antichain cover of the source subset,
classifies every cube by the diameter of its image (green below the target
admissibility floor, blue inside the admissible range, red at or above the
top), iteratively subdivides red cubes into their target-meeting children,
and emits a cover of the image out of blue images plus enlarged green images.
The solved exponent of that cover is compared against the closed-form bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dimension import (AntichainCover, DimensionEstimate, WindowConstants,
                        intermediate_dimension, min_cover_cost, pick_window,
                        resolve_perfectness, solve_cost_exponent)
from .dyadic import MAX_LEVELS, DyadicParams, DyadicSystem, build_system
from .errors import DomainError
from .holder import MapSample
from .spaces import SubsetRef, min_positive_gap

BOUND_VARIANTS = ("thm11", "cor12-newtonian", "cor12-qs", "thm13-TL",
                  "thm13-besov", "thm14")


@dataclass(frozen=True)
class BoundParams:
    """Parameters of one closed-form distortion bound.

    ``d`` is the dimension value of the source set; which other fields are
    required depends on the variant.  ``space`` selects the seminorm regime
    ("tl" or "besov") for the thm14 dispatch.
    """

    variant: str
    d: float
    p: float | None = None
    q: float | None = None
    s: float | None = None
    alpha: float | None = None
    ambient: float | None = None      # the homogeneity exponent Q
    theta: float | None = None
    space: str | None = None          # "tl" | "besov" (thm14 only)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise DomainError(message)


def evaluate_bound(params: BoundParams):
    """Exact value of the selected closed-form bound.

    Returns a float, except ``cor12-qs`` which returns the (lower, upper)
    pair.  Out-of-domain parameters raise naming the violated hypothesis.
    """
    v = params.variant
    d = params.d
    _require(d is not None and d >= 0, "d must be >= 0")
    if v == "thm11":
        p, a = params.p, params.alpha
        _require(p is not None and p > 1, "thm11 requires p > 1")
        _require(a is not None and a > 0, "thm11 requires alpha > 0")
        return max(p * d / (a * p + d), d)
    if v in ("cor12-newtonian", "cor12-qs"):
        p, Q = params.p, params.ambient
        _require(Q is not None and Q > 1, f"{v} requires Q > 1")
        _require(p is not None and p > Q, f"{v} requires p > Q")
        _require(d < Q, f"{v} requires d < Q")
        upper = p * d / (p - Q + d)
        if v == "cor12-newtonian":
            return upper
        _require(d > 0, "cor12-qs requires d > 0")
        lower = (p - Q) * d / (p - d)
        return (lower, upper)
    if v == "thm13-TL":
        p, s, Q = params.p, params.s, params.ambient
        _require(s is not None and s > 0, "thm13-TL requires s > 0")
        _require(Q is not None and Q > 0, "thm13-TL requires Q > 0")
        _require(p is not None and p > Q / s, "thm13-TL requires p > Q/s")
        return max(p * d / (s * p - Q + d), d)
    if v == "thm13-besov":
        p, q, s, Q = params.p, params.q, params.s, params.ambient
        _require(s is not None and s > 0, "thm13-besov requires s > 0")
        _require(Q is not None and Q > 0, "thm13-besov requires Q > 0")
        _require(p is not None and p > Q / s, "thm13-besov requires p > Q/s")
        _require(q is not None and p < q < math.inf,
                 "thm13-besov requires p < q < inf")
        return max(q * d / ((s - Q / p) * q + d), d)
    if v == "thm14":
        p, q, s, Q = params.p, params.q, params.s, params.ambient
        space = params.space or "tl"
        _require(space in ("tl", "besov"), "thm14 requires space in {tl, besov}")
        _require(s is not None and s > 0, "thm14 requires s > 0")
        _require(Q is not None and Q > 0, "thm14 requires Q > 0")
        _require(p is not None and p > Q / s, "thm14 requires p > Q/s")
        if space == "besov" and q is not None and p < q < math.inf:
            return max(q * d / ((s - Q / p) * q + d), d)
        return max(p * d / (s * p - Q + d), d)
    raise DomainError(f"unknown bound variant {v!r}; known: {BOUND_VARIANTS}")


# -- cube coloring and the subdivision graph -------------------------------------


RED, BLUE, GREEN = "red", "blue", "green"


@dataclass
class ColoredCube:
    cube_index: int
    level: int
    image_diam: float
    color: str
    row: int


def classify_image_diameter(image_diam: float, delta_y: float, theta: float) -> str:
    """Green below ``delta_y**(1/theta)``, blue inside
    ``[delta_y**(1/theta), delta_y)``, red at or above ``delta_y``."""
    floor = delta_y ** (1.0 / theta)
    if image_diam >= delta_y:
        return RED
    if image_diam >= floor:
        return BLUE
    return GREEN


def classify_cubes(f: MapSample, system: DyadicSystem, cube_indexes: list[int],
                   delta_y: float, theta: float, row: int = 0) -> list[ColoredCube]:
    if not 0.0 < delta_y < 1.0:
        raise DomainError("delta_y must be in (0, 1)")
    if not 0.0 < theta <= 1.0:
        raise DomainError("theta must be in (0, 1]")
    out = []
    for idx in cube_indexes:
        cube = system.cubes[idx]
        if cube.members.size == 0:
            raise DomainError(f"cube {idx} has no members")
        diam = f.image_diameter(cube.members)
        out.append(ColoredCube(idx, cube.level, diam,
                               classify_image_diameter(diam, delta_y, theta),
                               row))
    return out


@dataclass
class SubdivisionGraph:
    """Rows of colored cubes; red cubes point to their target-meeting children."""

    vertices: dict                  # cube index -> ColoredCube
    edges: list                     # (parent cube index, child cube index)
    rows: list                      # list of per-row cube index lists
    first_level: int
    last_level: int
    terminated: bool
    delta_y: float
    theta: float

    def leaves(self) -> list[ColoredCube]:
        with_out_edges = {a for a, _ in self.edges}
        return [v for v in self.vertices.values() if v.cube_index not in with_out_edges]

    def color_counts(self) -> dict:
        counts = {RED: 0, BLUE: 0, GREEN: 0}
        for v in self.vertices.values():
            counts[v.color] += 1
        return counts


def build_subdivision_graph(system: DyadicSystem, f: MapSample,
                            initial: AntichainCover, delta_y: float,
                            theta: float) -> SubdivisionGraph:
    """Iteratively subdivide red cubes into target-meeting children until a
    row has no red cubes or the system depth is exhausted (then the graph is
    returned with ``terminated=False``)."""
    initial.validate()   # also rejects nested initial covers
    mask = initial.subset.mask()
    by_level: dict[int, list[int]] = {}
    for idx in initial.cube_indexes:
        by_level.setdefault(system.cubes[idx].level, []).append(idx)
    if not by_level:
        raise DomainError("initial cover is empty")
    first = min(by_level)
    vertices: dict[int, ColoredCube] = {}
    edges: list[tuple[int, int]] = []
    rows: list[list[int]] = []
    carry_red: list[int] = []
    level = first
    while True:
        row_indexes = list(by_level.get(level, []))
        for parent_idx in carry_red:
            for ch in system.cubes[parent_idx].children:
                if mask[system.cubes[ch].members].any():
                    row_indexes.append(ch)
                    edges.append((parent_idx, ch))
        if not row_indexes and level > max(by_level):
            break
        colored = classify_cubes(f, system, row_indexes, delta_y, theta,
                                 row=len(rows))
        for c in colored:
            vertices[c.cube_index] = c
        rows.append(row_indexes)
        carry_red = [c.cube_index for c in colored if c.color == RED]
        if not carry_red and level >= max(by_level):
            return SubdivisionGraph(vertices, edges, rows, first, level, True,
                                    delta_y, theta)
        if level >= system.max_level:
            return SubdivisionGraph(vertices, edges, rows, first, level,
                                    not carry_red, delta_y, theta)
        level += 1
    return SubdivisionGraph(vertices, edges, rows, first, level - 1, True,
                            delta_y, theta)


@dataclass
class PushforwardEntry:
    cube_index: int
    diameter: float            # reported diameter used in the cover sums
    worst_diameter: float      # upper end of the enlargement interval
    actual_diameter: float     # image diameter before any enlargement
    color: str
    enlarged: bool


@dataclass
class PushforwardCover:
    """Admissible cover of the image: blue images as they are, green images
    enlarged to the admissibility floor (reported) with the worst-case
    enlargement ``2 * floor / target_perfectness`` recorded alongside."""

    entries: list
    delta_y: float
    theta: float
    target_perfectness: float

    def s_sum(self, s: float, policy: str = "reported") -> float:
        if policy == "reported":
            return float(sum(e.diameter ** s for e in self.entries))
        if policy == "worst":
            return float(sum(e.worst_diameter ** s for e in self.entries))
        if policy == "actual":
            return float(sum(e.actual_diameter ** s for e in self.entries))
        raise DomainError(f"unknown s-sum policy {policy!r}")

    def admissible_interval(self) -> tuple[float, float]:
        floor = self.delta_y ** (1.0 / self.theta)
        upper = max(self.delta_y, 2.0 * floor / self.target_perfectness)
        return floor, upper

    def check_admissible(self) -> bool:
        lo, hi = self.admissible_interval()
        return all(lo <= e.diameter <= hi and lo <= e.worst_diameter <= hi
                   for e in self.entries)


def pushforward_cover(graph: SubdivisionGraph,
                      target_perfectness: float) -> PushforwardCover:
    if not graph.terminated:
        raise DomainError("subdivision graph did not terminate; cannot emit a cover")
    if not 0.0 < target_perfectness <= 1.0:
        raise DomainError("target perfectness must be in (0, 1]")
    floor = graph.delta_y ** (1.0 / graph.theta)
    worst = 2.0 * floor / target_perfectness
    entries = []
    for leaf in graph.leaves():
        if leaf.color == BLUE:
            entries.append(PushforwardEntry(leaf.cube_index, leaf.image_diam,
                                            leaf.image_diam, leaf.image_diam,
                                            BLUE, False))
        elif leaf.color == GREEN:
            entries.append(PushforwardEntry(leaf.cube_index, floor, worst,
                                            leaf.image_diam, GREEN, True))
        else:  # unreachable on a terminated graph
            raise DomainError("red leaf in a terminated graph")
    return PushforwardCover(entries, graph.delta_y, graph.theta,
                            target_perfectness)


# -- the end-to-end experiment -----------------------------------------------------


@dataclass
class DeltaRecord:
    delta: float
    delta_y: float
    rows: int
    color_counts: dict
    cover_size: int
    image_exponent: float      # image-set cover exponent at this scale
    witness_exponent: float    # exponent solved on the emitted pushforward cover
    source_exponent: float     # source cover exponent at this same scale
    bound: float               # bound at the matched-scale source exponent
    violation: bool
    thresholds_ok: bool
    skipped: str | None = None

    def to_json(self) -> dict:
        return {"delta": self.delta, "delta_y": self.delta_y, "rows": self.rows,
                "colors": self.color_counts, "cover_size": self.cover_size,
                "image_exponent": self.image_exponent,
                "witness_exponent": self.witness_exponent,
                "source_exponent": self.source_exponent, "bound": self.bound,
                "violation": self.violation, "thresholds_ok": self.thresholds_ok,
                "skipped": self.skipped}


@dataclass
class PushforwardReport:
    theta: float
    p: float
    alpha: float
    source_dimension: float
    bound: float
    image_dimension: float = 0.0
    records: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    nonterminated: int = 0

    @property
    def violations(self) -> int:
        return sum(1 for r in self.records if r.violation)

    @property
    def usable(self) -> int:
        return len(self.records)

    def to_json(self) -> dict:
        return {"theta": self.theta, "p": self.p, "alpha": self.alpha,
                "source_dimension": self.source_dimension, "bound": self.bound,
                "image_dimension": self.image_dimension,
                "violations": self.violations,
                "nonterminated": self.nonterminated,
                "records": [r.to_json() for r in self.records],
                "skipped": self.skipped}

    def csv_rows(self) -> list:
        return [(r.delta, r.image_exponent, r.bound) for r in self.records]


def needed_window_depth(theta: float, deltas: list[float],
                        constants: WindowConstants) -> int:
    """Deepest level any usable window reaches for this theta/delta grid."""
    depth = 1
    for delta in deltas:
        w = pick_window(theta, delta, constants)
        if not w.empty:
            depth = max(depth, w.level_max)
    return min(depth, MAX_LEVELS)


def distortion_experiment(system: DyadicSystem, f: MapSample, subset: SubsetRef,
                          theta: float, p: float, alpha: float,
                          deltas: list[float], *,
                          source_dimension: float | None = None,
                          source_estimate: DimensionEstimate | None = None,
                          image_system: DyadicSystem | None = None,
                          perfectness: float | None = None,
                          target_perfectness: float | None = None,
                          bound_tolerance: float = 0.05,
                          bisection_tol: float = 1e-3,
                          collect_covers: bool = False
                          ) -> PushforwardReport | tuple:
    """Per-delta pipeline: admissible source cover, image-diameter coloring,
    red-cube subdivision, pushforward cover of the image, and the bound check.

    The target scale is ``delta_y = delta**(d/D)`` with ``D`` the evaluated
    bound at the measured source dimension ``d``; a tiny perturbation keeps
    ``D`` off ``d`` when the bound collapses onto it.

    Per delta the record carries two image exponents.  ``witness_exponent``
    is solved on the emitted pushforward cover (the upper-bound witness at
    scale ``delta_y``; at theta = 1 it uses actual image diameters since
    box-style covers carry no lower diameter bound).  ``image_exponent`` is
    the image set's own cover exponent at the same ``delta``, measured by the
    same windowed machinery on a cube system over the target; violations
    compare it against the bound evaluated at the source exponent measured at
    the matched ``delta``, so finite-scale bias cancels between the two sides
    (the identity map gives bit-identical exponents).
    """
    if source_dimension is None:
        if source_estimate is None:
            try:
                source_estimate = intermediate_dimension(
                    system, subset, theta, deltas, perfectness=perfectness,
                    bisection_tol=bisection_tol)
            except DomainError:
                report = PushforwardReport(theta=theta, p=p, alpha=alpha,
                                           source_dimension=float("nan"),
                                           bound=float("nan"),
                                           image_dimension=float("nan"))
                report.skipped = [{"delta": dd,
                                   "reason": "source estimate had no usable scales"}
                                  for dd in deltas]
                return (report, []) if collect_covers else report
        d = float(source_estimate.value)
        per_scale = dict(source_estimate.series)
    else:
        d = float(source_dimension)
        per_scale = {}
    bound_at = lambda dd: float(evaluate_bound(
        BoundParams(variant="thm11", d=dd, p=p, alpha=alpha)))
    D = bound_at(d)
    if D == d:
        D = bound_at(d + 1e-6)
    bound_value = bound_at(d)

    c_u, _ = resolve_perfectness(subset, perfectness)
    image_subset = SubsetRef(f.target, np.unique(f.assignment[subset.ids]))
    if target_perfectness is None:
        c_u_target, _ = resolve_perfectness(image_subset, None)
    else:
        c_u_target = float(target_perfectness)

    params = system.params
    constants = WindowConstants(c_u, params.sep, params.cov, params.ratio)
    identity_map = (f.target is f.source
                    and np.array_equal(f.assignment, np.arange(f.source.n)))
    if image_system is None:
        if identity_map:
            image_system = system
        else:
            depth = needed_window_depth(theta, deltas, constants)
            image_system = build_system(
                f.target, DyadicParams(ratio=params.ratio, sep=params.sep,
                                       cov=params.cov, max_level=depth,
                                       mode=params.mode))
    try:
        image_estimate = intermediate_dimension(
            image_system, image_subset, theta, deltas,
            perfectness=target_perfectness, bisection_tol=bisection_tol)
        image_scale = dict(image_estimate.series)
        image_value = float(image_estimate.value)
    except DomainError:
        image_scale = {}
        image_value = float("nan")

    report = PushforwardReport(theta=theta, p=p, alpha=alpha,
                               source_dimension=d, bound=bound_value,
                               image_dimension=image_value)
    covers = []
    for delta in deltas:
        window = pick_window(theta, delta, constants)
        if window.empty or window.level_max > system.max_level:
            report.skipped.append({"delta": delta, "reason": "no usable window"})
            continue
        if per_scale and delta not in per_scale:
            report.skipped.append({"delta": delta,
                                   "reason": "source estimate skipped this scale"})
            continue
        if delta not in image_scale:
            report.skipped.append({"delta": delta,
                                   "reason": "image estimate skipped this scale"})
            continue
        delta_y = delta ** (d / D) if d > 0 else delta
        if not 0.0 < delta_y < 1.0:
            report.skipped.append({"delta": delta, "reason": "degenerate delta_y"})
            continue
        _, cover = min_cover_cost(system, subset, d, window,
                                  diam_floor=delta ** (1.0 / theta))
        graph = build_subdivision_graph(system, f, cover, delta_y, theta)
        if not graph.terminated:
            report.nonterminated += 1
            report.skipped.append({"delta": delta,
                                   "reason": "subdivision hit the depth limit"})
            continue
        push = pushforward_cover(graph, c_u_target)
        policy = "actual" if theta >= 1.0 else "reported"
        witness = solve_cost_exponent(
            lambda s: push.s_sum(s, policy), hi=bound_value + 2.0,
            tol=bisection_tol)
        d_scale = per_scale.get(delta, d)
        scale_bound = bound_at(d_scale)
        # smallness threshold: the enlarged green diameter must stay below
        # the admissible ceiling for the cover to be strictly in-range
        green_ceiling = 2.0 * delta_y ** (1.0 / theta) / c_u_target
        thresholds_ok = green_ceiling <= delta_y + 1e-12
        img_exp = image_scale[delta]
        record = DeltaRecord(
            delta=delta, delta_y=delta_y, rows=len(graph.rows),
            color_counts=graph.color_counts(), cover_size=len(push.entries),
            image_exponent=img_exp, witness_exponent=witness,
            source_exponent=d_scale, bound=scale_bound,
            violation=img_exp > scale_bound + bound_tolerance,
            thresholds_ok=thresholds_ok)
        report.records.append(record)
        if collect_covers:
            covers.append((delta, graph, push))
    if collect_covers:
        return report, covers
    return report
