"""Independent brute-force oracles used by the unit and acceptance tests.

These deliberately avoid the library's own algorithms: expected values are
computed by enumeration or direct scans and then compared against the
production paths.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


def pairwise_diameter(points: np.ndarray) -> float:
    """Max pairwise euclidean distance by direct double loop."""
    best = 0.0
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            best = max(best, float(np.linalg.norm(points[i] - points[j])))
    return best


def interval_cover_count(coords: np.ndarray, r: float) -> int:
    """Optimal 1-d covering count by sets of diameter <= r (left-to-right
    sweep, provably minimal in one dimension)."""
    srt = np.sort(coords)
    thr = r * (1.0 + 1e-12)
    count = 0
    i = 0
    while i < len(srt):
        count += 1
        anchor = srt[i]
        while i < len(srt) and srt[i] - anchor <= thr:
            i += 1
    return count


def enumerate_partitions(items: list):
    """All set partitions of ``items`` (Bell-number many)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in enumerate_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def exact_cover_count_by_partitions(points: np.ndarray, r: float) -> int:
    """Minimum number of diameter-<= r parts over all partitions."""
    idx = list(range(len(points)))
    thr = r * (1.0 + 1e-12)
    best = len(points)
    for part in enumerate_partitions(idx):
        ok = all(pairwise_diameter(points[g]) <= thr for g in part)
        if ok:
            best = min(best, len(part))
    return best


class ToyTree:
    """A rooted forest with per-node levels, diameters and target flags,
    matching the antichain DP's input contract."""

    def __init__(self, level, parent, diam, meets):
        self.level = np.asarray(level, dtype=np.int64)
        self.parent = np.asarray(parent, dtype=np.int64)
        self.diam = np.asarray(diam, dtype=float)
        self.meets = np.asarray(meets, dtype=bool)
        self.children = [[] for _ in range(len(self.level))]
        for i, p in enumerate(self.parent):
            if p >= 0:
                self.children[int(p)].append(i)


def enumerate_antichain_covers(tree: ToyTree, level_min: int, level_max: int):
    """Yield every admissible antichain cover (list of node ids) of the
    flagged nodes, by exhaustive choice at each node."""

    def choices(node: int):
        if not tree.meets[node]:
            return [[]]
        out = []
        lvl = int(tree.level[node])
        if level_min <= lvl <= level_max:
            out.append([node])
        kids = [c for c in tree.children[node] if tree.meets[c]]
        if kids and lvl < level_max:
            for combo in itertools.product(*(choices(k) for k in kids)):
                merged = [n for part in combo for n in part]
                out.append(merged)
        return out

    roots = [i for i in range(len(tree.level))
             if tree.parent[i] < 0 and tree.meets[i]]
    if not roots:
        yield []
        return
    for combo in itertools.product(*(choices(r) for r in roots)):
        yield [n for part in combo for n in part]


def brute_force_min_antichain_cost(tree: ToyTree, s: float, level_min: int,
                                   level_max: int, diam_floor: float = 0.0):
    """Minimum cost over all enumerated antichain covers."""
    best = math.inf
    best_cover = None
    for cover in enumerate_antichain_covers(tree, level_min, level_max):
        if not _covers_all(tree, cover):
            continue
        cost = sum(max(float(tree.diam[n]), diam_floor) ** s for n in cover)
        if cost < best:
            best = cost
            best_cover = cover
    return best, best_cover


def _covers_all(tree: ToyTree, cover: list) -> bool:
    covered = set()
    stack = list(cover)
    while stack:
        n = stack.pop()
        covered.add(n)
        stack.extend(tree.children[n])
    for i in range(len(tree.level)):
        if tree.meets[i] and not tree.children[i] and i not in covered:
            return False
    return True


def random_toy_tree(rng: np.random.Generator, max_leaves: int = 8) -> ToyTree:
    """Random forest with at most ``max_leaves`` leaves, random diameters
    decreasing with depth, and at least one flagged leaf."""
    levels = [0]
    parents = [-1]
    leaves = [0]
    target_leaves = int(rng.integers(1, max_leaves + 1))
    while len(leaves) < target_leaves:
        node = int(rng.choice(leaves))
        n_kids = int(rng.integers(1, 4))
        leaves.remove(node)
        for _ in range(n_kids):
            parents.append(node)
            levels.append(levels[node] + 1)
            leaves.append(len(parents) - 1)
        if len(leaves) >= max_leaves:
            break
    n = len(parents)
    diam = rng.random(n) * np.power(0.5, levels)
    meets_leaves = rng.random(n) < 0.8
    meets = np.zeros(n, dtype=bool)
    children = [[] for _ in range(n)]
    for i, p in enumerate(parents):
        if p >= 0:
            children[p].append(i)
    order = np.argsort(levels)[::-1]
    for i in order:
        i = int(i)
        if not children[i]:
            meets[i] = meets_leaves[i]
        else:
            meets[i] = any(meets[c] for c in children[i])
    if not meets.any():
        leaf = max(range(n), key=lambda i: levels[i])
        node = leaf
        while node >= 0:
            meets[node] = True
            node = parents[node]
    return ToyTree(levels, parents, diam, meets)


def gradient_grid_oracle(dist: np.ndarray, image_dist: np.ndarray, s: float,
                         p: float, step: float = 0.01) -> float:
    """Minimal-norm gradient objective on a coordinate grid (4 points).

    Enumerates the first three coordinates on the grid and closes the fourth
    at its minimal feasible value; the reported optimum is over grid-feasible
    points, hence an upper reference for the true optimum.
    """
    n = dist.shape[0]
    assert n == 4
    c = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                c[i, j] = image_dist[i, j] / dist[i, j] ** s
    cmax = float(c.max())
    if cmax == 0.0:
        return 0.0
    grid = np.arange(0.0, cmax + step, step)
    g1 = grid[:, None]
    g2 = grid[None, :]
    best = math.inf
    for g0 in grid:
        feasible01 = g0 + g1 >= c[0, 1]
        lo2 = np.maximum(np.maximum(c[0, 2] - g0, c[1, 2] - g1), 0.0)
        valid = feasible01 & (g2 >= lo2 - 1e-12)
        if not valid.any():
            continue
        g3 = np.maximum(np.maximum(c[0, 3] - g0, c[1, 3] - g1), c[2, 3] - g2)
        g3 = np.maximum(g3, 0.0)
        if math.isinf(p):
            objs = np.maximum(np.maximum(g0, g1), np.maximum(g2, g3))
        else:
            objs = (g0 ** p + g1 ** p + g2 ** p + g3 ** p) ** (1.0 / p)
        cand = float(objs[valid].min())
        if cand < best:
            best = cand
    return best
