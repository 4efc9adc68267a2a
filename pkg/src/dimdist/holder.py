"""Hölder coefficients of sampled maps, disjoint-ball cover p-sums, and the
discrete minimal-gradient problem.

A :class:`MapSample` is a total assignment from the points of a source space
to points of a target space.  The per-ball Hölder coefficient profile is a
falsifier for bounded p-sums: it reports whether the sums stay bounded as the
ball radius shrinks, one greedy cover per radius.

The gradient solver finds a nonnegative ``g`` with
``d_Y(f(x), f(y)) <= d_X(x, y)**s * (g(x) + g(y))`` for all pairs, of minimal
weighted L^p norm.  For p = inf the closed form ``g == max_ratio / 2`` is
optimal: the maximizing pair forces ``g(x) + g(y) >= max_ratio``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .spaces import FiniteMetricSpace, SubsetRef, _diameter_ids


@dataclass(frozen=True)
class MapSample:
    """Sampled map: source point id -> target point id (total)."""

    source: FiniteMetricSpace
    target: FiniteMetricSpace
    assignment: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        if a.shape != (self.source.n,):
            raise DomainError("assignment must cover every source id exactly once")
        if a.size and (a.min() < 0 or a.max() >= self.target.n):
            raise DomainError("assignment hits ids outside the target space")
        object.__setattr__(self, "assignment", a)

    def image_ids(self, source_ids: np.ndarray) -> np.ndarray:
        return self.assignment[source_ids]

    def image_diameter(self, source_ids: np.ndarray) -> float:
        ids = np.unique(self.assignment[source_ids])
        return _diameter_ids(self.target, ids)


def holder_coefficient(f: MapSample, ball: SubsetRef, alpha: float) -> float:
    """Max over distinct pairs in the ball of d_Y(fx, fy) / d_X(x, y)**alpha.

    0 for singletons; inf when duplicate source points have distinct images.
    """
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    ids = ball.ids
    if ids.size <= 1:
        return 0.0
    best = 0.0
    fa = f.assignment
    for pos in range(ids.size - 1):
        x = int(ids[pos])
        rest = ids[pos + 1:]
        dx = f.source.distances_from(x)[rest]
        dy = f.target.distances_from(int(fa[x]))[fa[rest]]
        zero = dx == 0.0
        if zero.any():
            if (dy[zero] > 0).any():
                return math.inf
            dx = dx[~zero]
            dy = dy[~zero]
            if dx.size == 0:
                continue
        best = max(best, float(np.max(dy / dx ** alpha)))
    return best


@dataclass
class BallCover:
    """Equal-radius greedy ball cover with disjoint shrunken balls.

    Centers are scanned in id order and accepted when at least
    ``2 * epsilon * radius`` from every accepted center, so the shrunken
    balls ``B(x_i, epsilon * radius)`` are pairwise disjoint and every
    covered point lies within the effective radius
    ``radius * (1 + 2 * epsilon)`` of some center.
    """

    centers: np.ndarray
    radius: float
    epsilon: float
    effective_radius: float
    covered: SubsetRef
    members: list = field(default_factory=list)   # per-ball member id arrays

    def __len__(self) -> int:
        return len(self.centers)

    def validate(self) -> None:
        space = self.covered.space
        eps_r = self.epsilon * self.radius
        for i, c in enumerate(self.centers):
            row = space.distances_from(int(c))[self.centers]
            row[i] = np.inf
            if (row < 2.0 * eps_r).any():
                raise DomainError("shrunken balls overlap")
        for pid in self.covered.ids:
            row = space.distances_from(int(pid))[self.centers]
            if row.min() > self.effective_radius + 1e-12:
                raise DomainError(f"point {pid} not covered at the effective radius")


def epsilon_disjoint_cover(subset: SubsetRef, r: float, epsilon: float) -> BallCover:
    """Greedy cover of the subset with disjoint-shrunken-ball guarantees."""
    if r <= 0:
        raise DomainError("radius must be positive")
    if not 0.0 < epsilon < 1.0:
        raise DomainError("epsilon must be in (0, 1)")
    space = subset.space
    min_sep = 2.0 * epsilon * r
    centers: list[int] = []
    for pid in subset.ids:
        pid = int(pid)
        if not centers:
            centers.append(pid)
            continue
        d = space.distances_from(pid)[centers]
        if (d >= min_sep).all():
            centers.append(pid)
    eff = r * (1.0 + 2.0 * epsilon)
    centers_arr = np.asarray(centers, dtype=np.int64)
    members = []
    for c in centers_arr:
        row = space.distances_from(int(c))[subset.ids]
        members.append(subset.ids[row <= eff])
    return BallCover(centers_arr, r, epsilon, eff, subset, members)


def ch_p_sum(f: MapSample, cover: BallCover, alpha: float, p: float) -> float:
    """Sum over cover balls of the per-ball alpha-Hölder coefficient to the
    power p."""
    if not 1.0 < p < math.inf:
        raise DomainError("p must be in (1, inf)")
    total = 0.0
    for ball_ids in cover.members:
        coeff = holder_coefficient(f, SubsetRef(cover.covered.space, ball_ids), alpha)
        total += coeff ** p
    return total


@dataclass
class HolderProfile:
    radii: list
    sums: list
    empirical_bound: float     # max p-sum over the grid
    slope: float               # of log(sum) vs log(r); negative = divergence
    diverging: bool
    alpha: float
    p: float
    epsilon: float

    def to_json(self) -> dict:
        return {"radii": self.radii, "sums": self.sums,
                "empirical_bound": self.empirical_bound, "slope": self.slope,
                "diverging": self.diverging, "alpha": self.alpha,
                "p": self.p, "epsilon": self.epsilon}


def estimate_ch_profile(f: MapSample, subset: SubsetRef, alpha: float, p: float,
                        radii: list[float], epsilon: float = 0.5) -> HolderProfile:
    """p-sum of per-ball Hölder coefficients across a radius grid.

    The reported slope is for log(sum) against log(r): a negative slope means
    the sums grow as the radius shrinks, falsifying a bounded-sum hypothesis
    at these scales.
    """
    radii = sorted((float(r) for r in radii), reverse=True)
    if not radii or radii[-1] <= 0:
        raise DomainError("radius grid must be positive")
    sums = []
    for r in radii:
        cover = epsilon_disjoint_cover(subset, r, epsilon)
        sums.append(ch_p_sum(f, cover, alpha, p))
    positive = [(r, v) for r, v in zip(radii, sums) if v > 0]
    if len(positive) >= 2:
        x = np.log([r for r, _ in positive])
        y = np.log([v for _, v in positive])
        slope = float(np.polyfit(x, y, 1)[0])
    else:
        slope = 0.0
    return HolderProfile(radii, sums, float(max(sums)), slope,
                         diverging=slope < -0.1, alpha=alpha, p=p,
                         epsilon=epsilon)


# -- minimal gradient solver -----------------------------------------------------


@dataclass
class GradientSolution:
    g: np.ndarray
    smoothness: float           # exponent s on the source distance
    integrability: float        # p, may be math.inf
    seminorm: float             # weighted L^p norm of g
    iterations: int
    max_violation: float        # feasibility slack on exit (<= 0 means feasible)

    def to_json(self) -> dict:
        return {"g": self.g.tolist(), "smoothness": self.smoothness,
                "integrability": (None if math.isinf(self.integrability)
                                  else self.integrability),
                "seminorm": self.seminorm, "iterations": self.iterations,
                "max_violation": self.max_violation}


def _pair_requirements(f: MapSample, s: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = f.source.n
    ii, jj, cc = [], [], []
    fa = f.assignment
    for i in range(n - 1):
        rest = np.arange(i + 1, n)
        dx = f.source.distances_from(i)[rest]
        dy = f.target.distances_from(int(fa[i]))[fa[rest]]
        if ((dx == 0.0) & (dy > 0.0)).any():
            raise DomainError(
                "duplicate source points with distinct images: no gradient exists")
        keep = dx > 0.0
        ii.append(np.full(keep.sum(), i))
        jj.append(rest[keep])
        cc.append(dy[keep] / dx[keep] ** s)
    if not ii:
        return (np.empty(0, np.int64),) * 2 + (np.empty(0),)
    return (np.concatenate(ii).astype(np.int64),
            np.concatenate(jj).astype(np.int64),
            np.concatenate(cc))


def _norm(g: np.ndarray, p: float, w: np.ndarray) -> float:
    if math.isinf(p):
        return float(g.max()) if g.size else 0.0
    return float(np.sum(w * g ** p) ** (1.0 / p))


def _repair(g: np.ndarray, ii, jj, cc, passes: int = 8) -> np.ndarray:
    """Restore feasibility by splitting each constraint deficit symmetrically."""
    for _ in range(passes):
        deficit = cc - g[ii] - g[jj]
        if (deficit <= 1e-15).all():
            break
        order = np.argsort(-deficit)
        for k in order:
            if deficit[k] <= 0:
                break
            need = cc[k] - g[ii[k]] - g[jj[k]]
            if need > 0:
                g[ii[k]] += need / 2.0
                g[jj[k]] += need / 2.0
    return g


def hajlasz_gradient(f: MapSample, s: float, p: float,
                     weights: np.ndarray | None = None,
                     iterations: int = 10_000,
                     seed_tol: float = 1e-12) -> GradientSolution:
    """Minimal weighted-L^p gradient for the sampled map.

    p = inf has the exact closed form ``g == max_ratio / 2``.  Finite p runs
    a projected subgradient descent with Polyak-style steps against the best
    feasible objective seen, restoring feasibility after each step by the
    symmetric per-constraint repair; the returned solution is feasible.
    """
    if s <= 0:
        raise DomainError("smoothness exponent must be positive")
    n = f.source.n
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (n,) or (w <= 0).any():
        raise DomainError("weights must be positive, one per source point")
    ii, jj, cc = _pair_requirements(f, s)
    if cc.size == 0 or cc.max() == 0.0:
        g = np.zeros(n)
        return GradientSolution(g, s, p, 0.0, 0, 0.0)
    cmax = float(cc.max())
    if math.isinf(p):
        g = np.full(n, cmax / 2.0)
        return GradientSolution(g, s, p, cmax / 2.0, 0, _max_violation(g, ii, jj, cc))
    if p <= 0:
        raise DomainError("integrability exponent must be positive")

    g = _repair(np.zeros(n), ii, jj, cc)
    best = g.copy()
    best_obj = float(np.sum(w * g ** p))
    stall = 0
    ran = 0
    for it in range(iterations):
        ran = it + 1
        grad = w * p * np.maximum(g, 1e-12) ** (p - 1.0)
        gn2 = float(grad @ grad)
        if gn2 <= 0:
            break
        obj = float(np.sum(w * g ** p))
        target = best_obj * (1.0 - 1e-3) - seed_tol
        step = max(obj - target, 1e-6 * max(best_obj, 1e-12)) / gn2
        g = np.maximum(g - step * grad, 0.0)
        g = _repair(g, ii, jj, cc)
        obj = float(np.sum(w * g ** p))
        if obj < best_obj - 1e-13 * max(best_obj, 1.0):
            best_obj = obj
            best = g.copy()
            stall = 0
        else:
            stall += 1
            if stall >= 800:
                break
    g = _repair(best, ii, jj, cc)
    return GradientSolution(g, s, p, _norm(g, p, w), ran,
                            _max_violation(g, ii, jj, cc))


def _max_violation(g: np.ndarray, ii, jj, cc) -> float:
    if cc.size == 0:
        return 0.0
    return float(np.max(cc - g[ii] - g[jj]))
