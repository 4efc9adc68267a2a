"""Covering numbers, level windows, the antichain DP, and the estimators."""
import math

import numpy as np
import pytest

from dimdist import (CapacityError, DomainError, DyadicParams,
                     FiniteMetricSpace, SubsetRef, admissible_levels,
                     box_dimension, build_system, covering_number, generate,
                     hausdorff_dimension, intermediate_dimension,
                     min_cover_cost, whole_space)
from dimdist.dimension import (CoverTree, LevelWindow, WindowConstants,
                               antichain_min_cost, extrapolate_series,
                               pick_window, slack_window, solve_cost_exponent)

from oracles import (ToyTree, brute_force_min_antichain_cost,
                     exact_cover_count_by_partitions, interval_cover_count,
                     random_toy_tree)


def line(*xs):
    return FiniteMetricSpace(points=np.asarray(xs, dtype=float)[:, None])


CONSTS = WindowConstants(perfectness=1.0, sep=1.0, cov=6.0, ratio=0.5)


# -- covering numbers -----------------------------------------------------------


def test_covering_two_forced_sets():
    assert covering_number(whole_space(line(0.0, 1.0)), 0.5) == 2


def test_covering_exact_oracle_three_points():
    sub = whole_space(line(0.0, 0.4, 1.0))
    assert covering_number(sub, 0.5, method="exact") == 2
    assert covering_number(sub, 0.5) == 2
    assert exact_cover_count_by_partitions(sub.space.points, 0.5) == 2


def test_covering_singleton():
    assert covering_number(whole_space(line(3.0)), 0.1) == 1


def test_covering_exact_capacity():
    sp = line(*np.arange(13, dtype=float))
    with pytest.raises(CapacityError):
        covering_number(whole_space(sp), 1.0, method="exact")


def test_greedy_at_least_exact():
    rng = np.random.default_rng(11)
    for _ in range(25):
        pts = np.sort(rng.random(6))
        sub = whole_space(line(*pts))
        r = float(rng.uniform(0.05, 0.5))
        greedy = covering_number(sub, r)
        exact = covering_number(sub, r, method="exact")
        assert greedy >= exact
        assert exact == exact_cover_count_by_partitions(sub.space.points, r)


# -- box dimension ----------------------------------------------------------------


def test_box_cantor_exact_counts():
    g = generate("cantor(1/3,10)")
    scales = [3.0 ** -k for k in range(2, 9)]
    est = box_dimension(g.subset, scales)
    assert est.diagnostics["counts"] == [2 ** k for k in range(2, 9)]
    assert est.value == pytest.approx(math.log(2) / math.log(3), abs=0.05)


def test_box_grid_frozen_counts():
    g = generate("grid(1025,1)")
    scales = [2.0 ** -k for k in range(2, 9)]
    est = box_dimension(g.subset, scales)
    oracle = [interval_cover_count(g.space.points[:, 0], r) for r in scales]
    assert est.diagnostics["counts"] == oracle
    assert oracle == [4, 8, 16, 32, 61, 114, 205]
    assert est.value == pytest.approx(1.0, abs=0.05)


def test_box_isolated_points_flat():
    sub = whole_space(line(0.0, 1.0, 2.0))
    scales = [0.4 * 0.5 ** i for i in range(4)]
    est = box_dimension(sub, scales)
    assert est.value == pytest.approx(0.0, abs=1e-9)
    assert est.diagnostics["counts"] == [3, 3, 3, 3]


def test_box_grid_validation():
    sub = whole_space(line(0.0, 1.0))
    with pytest.raises(DomainError):
        box_dimension(sub, [0.4, 0.2])                 # too few scales
    with pytest.raises(DomainError):
        box_dimension(sub, [0.4, 0.2, 0.11, 0.05])      # not geometric
    with pytest.raises(DomainError):
        box_dimension(sub, [0.4, 0.2, 0.1, 0.05], resolution_floor=0.07)


def test_box_scale_invariance():
    rng = np.random.default_rng(5)
    pts = np.sort(rng.random(200))
    scales = [0.2 * 0.5 ** i for i in range(5)]
    base = box_dimension(whole_space(line(*pts)), scales)
    lam = 3.7
    scaled = box_dimension(whole_space(line(*(lam * pts))),
                           [lam * s for s in scales])
    assert scaled.value == pytest.approx(base.value, abs=1e-9)


# -- level windows ----------------------------------------------------------------


def test_window_theta1_inverted_empty():
    w = admissible_levels(1.0, 2.0 ** -10, CONSTS)
    assert w.empty


def test_window_theta_half_example():
    w = admissible_levels(0.5, 2.0 ** -6, CONSTS)
    # endpoint formulas: ceil(log2(24 * 2^6)) = 11, floor(log2(2^12 / 3)) = 10
    assert (w.level_min, w.level_max) == (11, 10)
    assert w.empty


def test_window_forced_empty_when_interval_inverted():
    # lower end above upper end forces emptiness for any theta
    w = admissible_levels(0.9, 0.5, CONSTS)
    assert w.empty


def test_window_wide_at_small_theta():
    w = admissible_levels(0.25, 2.0 ** -6, CONSTS)
    assert not w.empty
    assert w.level_min <= w.level_max


def test_slack_window_theta1_single_level():
    w = slack_window(1.0, 2.0 ** -6, CONSTS)
    assert (w.level_min, w.level_max) == (6, 6)
    assert w.fallback


def test_pick_window_rules():
    assert pick_window(0.5, 2.0 ** -6, CONSTS).fallback
    strict = pick_window(0.25, 2.0 ** -6, CONSTS, rule="strict")
    assert not strict.fallback
    with pytest.raises(DomainError):
        pick_window(0.5, 0.5, CONSTS, rule="nope")


# -- antichain DP -----------------------------------------------------------------


def _window(level_min, level_max, system):
    p = system.params
    c = WindowConstants(0.5, p.sep, p.cov, p.ratio)
    return LevelWindow(level_min, level_max, 0.5, 0.1, c)


def test_cover_cost_s0_counts_cubes():
    g = generate("grid(16,1)")
    sys_ = build_system(g.space, DyadicParams(ratio=0.5, max_level=4))
    cost, cover = min_cover_cost(sys_, g.subset, 0.0, _window(2, 4, sys_))
    counts = sum(1 for i in sys_.levels[2]
                 if sys_.cubes[i].members.size > 0)
    assert cost == len(cover.cube_indexes)
    assert cost <= counts


def test_singleton_zero_diameter_costs_zero():
    sys_ = build_system(line(5.0), DyadicParams(ratio=0.5, max_level=2))
    cost, cover = min_cover_cost(sys_, whole_space(sys_.space), 1.0,
                                 _window(0, 2, sys_))
    assert cost == 0.0
    assert len(cover.cube_indexes) == 1


def test_dp_matches_brute_force_depth3_toy():
    tree = ToyTree(
        level=[0, 1, 1, 2, 2, 2, 2],
        parent=[-1, 0, 0, 1, 1, 2, 2],
        diam=[0.9, 0.5, 0.4, 0.2, 0.1, 0.3, 0.05],
        meets=[True, True, True, True, True, True, True])
    ct = CoverTree(tree.level, tree.parent, tree.children, tree.diam, tree.meets)
    for s in (0.0, 0.3, 0.7, 1.0, 2.0):
        got, chosen = antichain_min_cost(ct, s, 0, 2)
        want, _ = brute_force_min_antichain_cost(tree, s, 0, 2)
        assert got == pytest.approx(want, abs=1e-12)


def test_dp_matches_brute_force_random_trees():
    rng = np.random.default_rng(123)
    for _ in range(60):
        tree = random_toy_tree(rng)
        ct = CoverTree(tree.level, tree.parent, tree.children, tree.diam,
                       tree.meets)
        kmax = int(tree.level.max())
        kmin = int(rng.integers(0, kmax + 1))
        s = float(rng.uniform(0.0, 2.0))
        floor = float(rng.choice([0.0, 0.05]))
        want, _ = brute_force_min_antichain_cost(tree, s, kmin, kmax, floor)
        if math.isinf(want):
            with pytest.raises(DomainError):
                antichain_min_cost(ct, s, kmin, kmax, floor)
            continue
        got, _ = antichain_min_cost(ct, s, kmin, kmax, floor)
        assert got == pytest.approx(want, abs=1e-12)


def test_cover_validates_own_invariants():
    g = generate("cantor(1/3,6)")
    sys_ = build_system(g.space, DyadicParams(ratio=0.5, max_level=5))
    _, cover = min_cover_cost(sys_, g.subset, 0.6, _window(2, 5, sys_))
    cover.validate()
    levels = {sys_.cubes[i].level for i in cover.cube_indexes}
    assert levels <= set(range(2, 6))


def test_cover_window_errors():
    g = generate("grid(8,1)")
    sys_ = build_system(g.space, DyadicParams(ratio=0.5, max_level=3))
    empty = LevelWindow(3, 2, 0.5, 0.1, CONSTS, empty=True)
    with pytest.raises(DomainError):
        min_cover_cost(sys_, g.subset, 1.0, empty)
    deep = _window(2, 9, sys_)
    with pytest.raises(DomainError):
        min_cover_cost(sys_, g.subset, 1.0, deep)


def test_cost_non_increasing_in_s():
    g = generate("cantor(1/3,7)")
    sys_ = build_system(g.space, DyadicParams(ratio=0.5, max_level=6))
    w = _window(3, 6, sys_)
    costs = [min_cover_cost(sys_, g.subset, s, w)[0]
             for s in (0.0, 0.25, 0.5, 0.75, 1.0)]
    assert all(a >= b - 1e-12 for a, b in zip(costs, costs[1:]))
    assert costs[0] > costs[-1]


# -- windowed estimators -----------------------------------------------------------


def test_intermediate_theta1_matches_box_on_grid():
    g = generate("grid(1025,1)")
    sys_ = build_system(g.space, DyadicParams(ratio=0.5, max_level=7))
    deltas = [2.0 ** -k for k in range(3, 7)]
    est = intermediate_dimension(sys_, g.subset, 1.0, deltas)
    box = box_dimension(g.subset, [2.0 ** -k for k in range(2, 9)])
    assert est.value == pytest.approx(box.value, abs=0.05)


def test_intermediate_singleton_zero():
    sys_ = build_system(line(5.0), DyadicParams(ratio=0.5, max_level=8))
    est = intermediate_dimension(sys_, whole_space(sys_.space), 0.5,
                                 [0.25, 0.125])
    assert est.value == 0.0


def test_intermediate_rejects_bad_grids():
    g = generate("grid(16,1)")
    sys_ = build_system(g.space, DyadicParams(ratio=0.5, max_level=4))
    with pytest.raises(DomainError):
        intermediate_dimension(sys_, g.subset, 1.5, [0.25, 0.125])
    with pytest.raises(DomainError):
        intermediate_dimension(sys_, g.subset, 0.5, [0.125, 0.25])


def test_intermediate_all_windows_unusable_raises():
    g = generate("grid(16,1)")
    sys_ = build_system(g.space, DyadicParams(ratio=0.5, max_level=2))
    # theta small: windows reach far below the system depth at these deltas
    with pytest.raises(DomainError, match="no usable scales"):
        intermediate_dimension(sys_, g.subset, 0.05,
                               [2.0 ** -8, 2.0 ** -9])


def test_hausdorff_grid_calibrated_window():
    g = generate("grid(1025,1)")
    sys_ = build_system(g.space, DyadicParams(ratio=0.5, max_level=7))
    deltas = [2.0 ** -k for k in range(2, 6)]
    est = hausdorff_dimension(sys_, g.subset, deltas)
    assert est.value == pytest.approx(1.0, abs=0.05)
    assert est.diagnostics["resolution_floor_binds"]


def test_hausdorff_singleton_zero():
    sys_ = build_system(line(5.0), DyadicParams(ratio=0.5, max_level=3))
    est = hausdorff_dimension(sys_, whole_space(sys_.space), [0.25, 0.125])
    assert est.value == 0.0


def test_hausdorff_below_intermediate_per_scale():
    g = generate("sequence_set(1,400)")
    sys_ = build_system(g.space, DyadicParams(ratio=0.5, max_level=24))
    deltas = [2.0 ** -k for k in range(3, 7)]
    h = hausdorff_dimension(sys_, g.subset, deltas)
    hs = dict(h.series)
    for theta in (0.5, 1.0):
        est = intermediate_dimension(sys_, g.subset, theta, deltas)
        for d, s in est.series:
            assert hs[d] <= s + 2e-3


def test_monotone_in_theta_per_scale():
    g = generate("sequence_set(1,400)")
    sys_ = build_system(g.space, DyadicParams(ratio=0.5, max_level=24))
    deltas = [2.0 ** -k for k in range(3, 7)]
    prev = None
    for theta in (0.25, 0.5, 1.0):
        est = dict(intermediate_dimension(sys_, g.subset, theta, deltas).series)
        if prev is not None:
            for d in est:
                if d in prev:
                    assert prev[d] <= est[d] + 2e-3
        prev = est


def test_solver_and_extrapolation_helpers():
    assert solve_cost_exponent(lambda s: 4.0 * 0.25 ** s, tol=1e-4) == \
        pytest.approx(1.0, abs=1e-3)
    value, diag = extrapolate_series([0.25, 0.125, 0.0625],
                                     [0.5, 0.45, 0.425], residual_cap=0.5)
    assert diag["fallback"] is False
    assert 0.0 <= value <= 0.5
