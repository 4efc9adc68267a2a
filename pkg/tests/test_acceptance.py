"""Acceptance suite: one test per criterion, each printing a PASS line with
its headline numbers and asserting its stated tolerance and runtime budget.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.
"""
import math
import time

import numpy as np
import pytest

from dimdist import (DyadicParams, FiniteMetricSpace, MapSample, SubsetRef,
                     box_dimension, build_system, distortion_experiment,
                     evaluate_bound, generate, generate_map, hajlasz_gradient,
                     hausdorff_dimension, holder_coefficient,
                     intermediate_dimension, min_cover_cost, verify_system,
                     whole_space)
from dimdist.dimension import (CoverTree, WindowConstants, antichain_min_cost,
                               pick_window, solve_cost_exponent)
from dimdist.distortion import BLUE, GREEN, RED, BoundParams
from dimdist.errors import DomainError

from oracles import (brute_force_min_antichain_cost, gradient_grid_oracle,
                     interval_cover_count, random_toy_tree)

BISECT_TOL = 1e-3


def report(criterion, detail):
    print(f"\nACCEPTANCE {criterion}: PASS ({detail})")


def test_criterion_1_dyadic_invariant_suite():
    """Theorem-A style invariants on randomized clouds, relaxed and strict."""
    t0 = time.time()
    rng = np.random.default_rng(20_240_817)
    relaxed = DyadicParams(ratio=0.5, sep=1.0, cov=6.0, max_level=5)
    for run in range(50):
        n = int(rng.integers(100, 2001))
        dim = int(rng.integers(1, 3))
        pts = rng.random((n, dim))
        system = build_system(FiniteMetricSpace(points=pts), relaxed)
        rep = verify_system(system)
        assert rep.partition_violations == 0, f"cloud {run}: partition broken"
        assert rep.aggregation_violations == 0, f"cloud {run}: nesting broken"
        assert rep.outer_ball_violations == 0, f"cloud {run}: outer ball broken"
    strict = DyadicParams(ratio=1 / 72, sep=1.0, cov=6.0, max_level=2,
                          mode="strict")
    for run in range(10):
        n = int(rng.integers(20, 201))
        dim = int(rng.integers(1, 3))
        pts = rng.random((n, dim))
        system = build_system(FiniteMetricSpace(points=pts), strict)
        rep = verify_system(system)
        assert rep.partition_violations == 0
        assert rep.aggregation_violations == 0
        assert rep.outer_ball_violations == 0
        assert rep.separation_violations == 0, f"strict cloud {run}: separation"
        assert rep.covering_violations == 0, f"strict cloud {run}: covering"
    elapsed = time.time() - t0
    assert elapsed < 60.0, f"criterion 1 took {elapsed:.1f}s"
    report(1, f"50 relaxed + 10 strict clouds clean in {elapsed:.1f}s")


def test_criterion_2_dp_vs_brute_force():
    """Exact agreement of the antichain DP with exhaustive enumeration."""
    t0 = time.time()
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(200):
        tree = random_toy_tree(rng)
        ct = CoverTree(tree.level, tree.parent, tree.children, tree.diam,
                       tree.meets)
        kmax = int(tree.level.max())
        kmin = int(rng.integers(0, kmax + 1))
        s = float(rng.uniform(0.0, 2.0))
        want, _ = brute_force_min_antichain_cost(tree, s, kmin, kmax)
        if math.isinf(want):
            with pytest.raises(DomainError):
                antichain_min_cost(ct, s, kmin, kmax)
            continue
        got, chosen = antichain_min_cost(ct, s, kmin, kmax)
        assert abs(got - want) <= 1e-12, (kmin, kmax, s)
        checked += 1
    elapsed = time.time() - t0
    assert elapsed < 10.0, f"criterion 2 took {elapsed:.1f}s"
    assert checked >= 150
    report(2, f"{checked} feasible trees matched to 1e-12 in {elapsed:.1f}s")


def test_criterion_3_box_dimension_oracle():
    t0 = time.time()
    cantor = generate("cantor(1/3,10)")
    scales3 = [3.0 ** -k for k in range(2, 9)]
    est_c = box_dimension(cantor.subset, scales3)
    assert est_c.diagnostics["counts"] == [2 ** k for k in range(2, 9)], \
        "exact-count oracle N(E, 3^-k) = 2^k failed"
    target = math.log(2) / math.log(3)
    assert abs(est_c.value - target) <= 0.05

    grid = generate("grid(1025,1)")
    scales2 = [2.0 ** -k for k in range(2, 9)]
    est_g = box_dimension(grid.subset, scales2)
    oracle = [interval_cover_count(grid.space.points[:, 0], r) for r in scales2]
    assert est_g.diagnostics["counts"] == oracle
    assert abs(est_g.value - 1.0) <= 0.05
    elapsed = time.time() - t0
    assert elapsed < 30.0, f"criterion 3 took {elapsed:.1f}s"
    report(3, f"cantor {est_c.value:.4f} (target {target:.4f}), "
              f"grid {est_g.value:.4f} in {elapsed:.1f}s")


def test_criterion_4_intermediate_dimension_oracle():
    t0 = time.time()
    deltas = [2.0 ** -k for k in range(3, 9)]
    thetas = (0.25, 0.5, 1.0)
    summary = []
    for p_exp in (1, 2):
        g = generate(f"sequence_set({p_exp},2000)")
        system = build_system(g.space, DyadicParams(ratio=0.5, max_level=33))
        estimates = {}
        for theta in thetas:
            est = intermediate_dimension(system, g.subset, theta, deltas,
                                         bisection_tol=BISECT_TOL)
            target = theta / (p_exp + theta)
            assert abs(est.value - target) <= 0.10, \
                f"F_{p_exp} theta={theta}: {est.value:.4f} vs {target:.4f}"
            estimates[theta] = est
            summary.append(f"F_{p_exp}@{theta}:{est.value:.3f}")

            # independent re-solve of the two smallest usable scales
            c_u = est.diagnostics["perfectness"]
            consts = WindowConstants(c_u, 1.0, 6.0, 0.5)
            for delta, s_recorded in est.series[-2:]:
                window = pick_window(theta, delta, consts)
                clamp = delta ** (1.0 / theta)

                def cost(s, w=window, c=clamp):
                    return min_cover_cost(system, g.subset, s, w,
                                          diam_floor=c)[0]

                s_direct = solve_cost_exponent(cost, tol=BISECT_TOL)
                assert abs(s_direct - s_recorded) <= 2 * BISECT_TOL

        # monotonicity in theta: per matched scale and on headlines
        for lo, hi in zip(thetas, thetas[1:]):
            assert (estimates[lo].value
                    <= estimates[hi].value + 2 * BISECT_TOL)
            lo_series = dict(estimates[lo].series)
            hi_series = dict(estimates[hi].series)
            for delta, s_lo in lo_series.items():
                if delta in hi_series:
                    assert s_lo <= hi_series[delta] + 2 * BISECT_TOL

        # sandwich at matched scale windows, box side via the theta=1 proxy
        haus = hausdorff_dimension(system, g.subset, deltas,
                                   bisection_tol=BISECT_TOL)
        h_series = dict(haus.series)
        top_series = dict(estimates[1.0].series)
        for theta in thetas:
            for delta, s_val in estimates[theta].series:
                assert h_series[delta] <= s_val + 2 * BISECT_TOL
                assert s_val <= top_series[delta] + 2 * BISECT_TOL
        assert haus.value <= min(e.value for e in estimates.values()) \
            + 2 * BISECT_TOL
        # box linkage at its documented cross-machinery tolerance
        box = box_dimension(g.subset, deltas)
        assert estimates[1.0].value <= box.value + 0.05
    elapsed = time.time() - t0
    assert elapsed < 300.0, f"criterion 4 took {elapsed:.1f}s"
    report(4, f"{' '.join(summary)} in {elapsed:.1f}s")


def _experiment_matrix():
    """Criterion 5/6 matrix with (p, alpha) at each map's exact Hölder data.

    alpha is the map's exact Hölder exponent.  The integrability p must make
    the per-ball coefficient p-sums summable: any p for the identity (taken
    at 2, the canonical choice), p > 2 for the square root, p > 3/2 for the
    cube root; both power maps use p = 4.
    """
    maps = [("identity", 2.0, 1.0), ("power(1/2)", 4.0, 0.5),
            ("power(1/3)", 4.0, 1.0 / 3.0)]
    sets = ["cantor(1/3,8)", "sequence_set(2,2000)"]
    deltas = [2.0 ** -k for k in range(2, 8)]
    for spec in sets:
        g = generate(spec)
        system = build_system(g.space, DyadicParams(ratio=0.5, max_level=33))
        for map_kind, p, alpha in maps:
            f = generate_map(map_kind, g.space)
            for theta in (0.25, 0.5, 1.0):
                yield spec, map_kind, theta, g, system, f, p, alpha, deltas


def test_criterion_5_and_6_distortion_bound_and_admissibility():
    t0 = time.time()
    cells = 0
    total_entries = 0
    for spec, map_kind, theta, g, system, f, p, alpha, deltas in \
            _experiment_matrix():
        rep, covers = distortion_experiment(
            system, f, g.subset, theta, p, alpha, deltas,
            bound_tolerance=0.05, bisection_tol=BISECT_TOL,
            collect_covers=True)
        assert rep.usable >= 1, f"{spec} {map_kind} theta={theta}: no scales"
        for r in rep.records:
            assert r.image_exponent <= r.bound + 0.05, \
                (f"{spec} {map_kind} theta={theta} delta={r.delta}: "
                 f"{r.image_exponent:.4f} > {r.bound:.4f} + 0.05")
        # criterion 6 on the same runs
        for delta, graph, push in covers:
            floor, ceiling = push.admissible_interval()
            for entry in push.entries:
                assert floor <= entry.diameter <= ceiling
                assert floor <= entry.worst_diameter <= ceiling
                total_entries += 1
            red = {i for i, v in graph.vertices.items() if v.color == RED}
            for parent, child in graph.edges:
                assert parent in red, "edge not parented by a red cube"
            for leaf in graph.leaves():
                assert leaf.color in (BLUE, GREEN), "red leaf survived"
        cells += 1
    elapsed = time.time() - t0
    assert cells == 18
    assert elapsed < 600.0, f"criteria 5-6 took {elapsed:.1f}s"
    report(5, f"18 cells, no bound violations beyond 0.05 in {elapsed:.1f}s")
    report(6, f"{total_entries} cover entries all admissible, graph invariants hold")


def test_criterion_7_gradient_solver_optimality():
    t0 = time.time()
    rng = np.random.default_rng(99)
    cases = 0
    worst_gap = 0.0
    while cases < 100:
        src_pts = rng.random((4, 2))
        tgt_pts = rng.random((4, 2))
        src = FiniteMetricSpace(points=src_pts, triangle_samples=0)
        tgt = FiniteMetricSpace(points=tgt_pts, triangle_samples=0)
        d = src.pairwise()
        if d[~np.eye(4, dtype=bool)].min() < 0.05:
            continue  # keep the ratio scale tame for the 0.01-step oracle
        f = MapSample(src, tgt, np.arange(4))
        img = tgt.pairwise()
        ratios = img[~np.eye(4, dtype=bool)] / d[~np.eye(4, dtype=bool)]
        if ratios.max() > 4.0:
            continue
        for p in (1.0, 2.0):
            sol = hajlasz_gradient(f, 1.0, p)
            assert sol.max_violation <= 1e-12, "feasibility broken"
            oracle = gradient_grid_oracle(d, img, 1.0, p)
            gap = sol.seminorm - oracle
            worst_gap = max(worst_gap, gap)
            assert gap <= 1e-3, f"case {cases} p={p}: {sol.seminorm} vs {oracle}"
        inf_sol = hajlasz_gradient(f, 1.0, math.inf)
        cmax = float(ratios.max())
        assert inf_sol.g[0] == cmax / 2.0
        assert np.all(inf_sol.g == cmax / 2.0)
        cases += 1
    elapsed = time.time() - t0
    assert elapsed < 60.0, f"criterion 7 took {elapsed:.1f}s"
    report(7, f"100 cases, worst solver-minus-oracle gap {worst_gap:.2e}, "
              f"{elapsed:.1f}s")


def test_criterion_8_formula_evaluator_identities():
    t0 = time.time()
    rng = np.random.default_rng(3)
    for _ in range(1000):
        Q = float(rng.uniform(1.01, 5.0))
        p = float(rng.uniform(Q + 0.01, 12.0))
        d = float(rng.uniform(0.005, Q - 0.005))
        tl = evaluate_bound(BoundParams(variant="thm13-TL", d=d, p=p, s=1.0,
                                        ambient=Q))
        upper = evaluate_bound(BoundParams(variant="cor12-newtonian", d=d,
                                           p=p, ambient=Q))
        assert tl == max(upper, d), "s=1 identity not exact"
    # monotonicity in d and the large-alpha*p limit
    grid = np.linspace(0.01, 2.0, 200)
    vals = [evaluate_bound(BoundParams(variant="thm11", d=float(d), p=2.0,
                                       alpha=0.7)) for d in grid]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    for d in (0.3, 0.9, 1.7):
        v = evaluate_bound(BoundParams(variant="thm11", d=d, p=1e6, alpha=1.0))
        assert abs(v - d) <= 1e-5
    elapsed = time.time() - t0
    report(8, f"1000-point s=1 identity exact, monotone + limit ok, "
              f"{elapsed:.1f}s")


def test_criterion_9_snowflake_exactness():
    t0 = time.time()
    for spec in ("cantor(1/3,8)", "grid(257,1)", "sequence_set(1,500)"):
        g = generate(spec)
        for eps in (0.5, 2.0 / 3.0):
            f = generate_map(f"snowflake_target({eps})", g.space)
            assert holder_coefficient(f, g.subset, eps) == 1.0, \
                f"{spec} eps={eps}: coefficient not exactly 1"
    cantor = generate("cantor(1/3,10)")
    base_scales = [3.0 ** -k for k in range(2, 9)]
    base = box_dimension(cantor.subset, base_scales)
    target = math.log(2) / math.log(3)
    for eps in (0.5, 2.0 / 3.0):
        snow = cantor.space.snowflaked(eps)
        est = box_dimension(whole_space(snow), [r ** eps for r in base_scales])
        assert est.diagnostics["counts"] == base.diagnostics["counts"], \
            "covering-count identity under snowflaking failed"
        assert abs(est.value - target / eps) <= 0.05
    elapsed = time.time() - t0
    report(9, f"coefficient exactly 1 on all sets; snowflaked box within "
              f"0.05 of target, {elapsed:.1f}s")
