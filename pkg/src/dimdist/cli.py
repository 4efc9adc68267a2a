"""Command-line surface.

Subcommands: ``net`` (build + verify a cube system), ``dims`` (box /
windowed / Hausdorff estimates), ``holder`` (coefficient p-sum profile),
``gradient`` (minimal-gradient solver), ``bounds`` (closed-form evaluator),
``experiment`` (cover-pushforward runs), ``generate`` (point-set emission).

Every command is driven by a JSON config file plus ``--out DIR``; re-runs
produce byte-identical outputs.  Exit codes: 0 ok, 2 input error, 3 bound
violation found, 4 no usable scales.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import dimension as dim
from . import serialize
from .distortion import BoundParams, distortion_experiment, evaluate_bound
from .dyadic import (MAX_LEVELS, DyadicParams, build_system, default_params,
                     verify_system)
from .errors import DimdistError, DomainError, InputError
from .generators import generate, generate_map
from .holder import MapSample, estimate_ch_profile, hajlasz_gradient
from .spaces import (FiniteMetricSpace, SubsetRef, load_map_csv,
                     load_matrix_csv, load_points_csv, whole_space)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_VIOLATION = 3
EXIT_NO_SCALES = 4

# every numeric default in one place
DEFAULTS = {
    "bisection_tol": 1e-3,
    "bound_tolerance": 0.05,
    "residual_cap": 0.05,
    "delta_ratio": 0.5,
    "delta_count": 8,
    "delta_start": 0.125,
    "holder_epsilon": 0.5,
    "gradient_iterations": 10_000,
}


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None


def _resolve_space(cfg: dict, resolution_hint: list) -> FiniteMetricSpace:
    inp = cfg.get("input", {})
    metric_cfg = cfg.get("metric", {})
    if "generator" in inp:
        gen = generate(inp["generator"])
        resolution_hint.append(gen.resolution_floor)
        space = gen.space
    elif "points_csv" in inp:
        pts = load_points_csv(inp["points_csv"])
        space = FiniteMetricSpace(points=pts,
                                  metric=metric_cfg.get("kind", "euclidean"))
    elif "matrix_csv" in inp:
        space = FiniteMetricSpace(matrix=load_matrix_csv(inp["matrix_csv"]))
    else:
        raise InputError("config.input needs generator, points_csv, or matrix_csv")
    snow = metric_cfg.get("snowflake")
    if snow is not None:
        space = space.snowflaked(float(snow))
    return space


def _resolve_map(cfg: dict, source: FiniteMetricSpace) -> MapSample:
    m = cfg.get("map", {})
    if "generator" in m:
        return generate_map(m["generator"], source)
    if "map_csv" in m:
        tgt_cfg = m.get("target", {})
        if "points_csv" in tgt_cfg:
            target = FiniteMetricSpace(points=load_points_csv(tgt_cfg["points_csv"]),
                                       metric=tgt_cfg.get("kind", "euclidean"))
        elif "matrix_csv" in tgt_cfg:
            target = FiniteMetricSpace(matrix=load_matrix_csv(tgt_cfg["matrix_csv"]))
        else:
            target = source
        assignment = load_map_csv(m["map_csv"], source.n, target.n)
        return MapSample(source, target, assignment)
    raise InputError("config.map needs generator or map_csv")


def _dyadic_params(cfg: dict, mode_flag: str | None, needed_depth: int | None,
                   resolution_floor: float | None) -> DyadicParams:
    d = dict(cfg.get("dyadic", {}))
    mode = mode_flag or d.get("mode", "relaxed")
    base = default_params(mode=mode, max_level=d.get("max_level"),
                          resolution_floor=resolution_floor)
    max_level = d.get("max_level")
    if max_level is None:
        max_level = base.max_level if needed_depth is None else min(
            MAX_LEVELS, max(needed_depth, 1))
    return DyadicParams(ratio=float(d.get("ratio", base.ratio)),
                        sep=float(d.get("sep", base.sep)),
                        cov=float(d.get("cov", base.cov)),
                        max_level=int(max_level), mode=mode)


def _delta_grid(cfg: dict) -> list[float]:
    d = cfg.get("deltas", {})
    start = float(d.get("start", DEFAULTS["delta_start"]))
    ratio = float(d.get("ratio", DEFAULTS["delta_ratio"]))
    count = int(d.get("count", DEFAULTS["delta_count"]))
    if not 0 < ratio < 1 or not 0 < start < 1 or count < 1:
        raise InputError("deltas must have start, ratio in (0,1) and count >= 1")
    return [start * ratio ** i for i in range(count)]


def _needed_depth(thetas: list[float], deltas: list[float], ratio: float,
                  perfectness: float) -> int:
    consts = dim.WindowConstants(perfectness, 1.0, 6.0, ratio)
    depth = 1
    for theta in thetas:
        for delta in deltas:
            w = dim.pick_window(theta, delta, consts)
            if not w.empty:
                depth = max(depth, w.level_max)
    return min(depth, MAX_LEVELS)


def _tolerances(cfg: dict) -> dict:
    t = dict(DEFAULTS)
    t.update(cfg.get("tolerances", {}))
    return t


def _parallel_map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- subcommands --------------------------------------------------------------


def cmd_generate(cfg: dict, out: str, args) -> int:
    gen = generate(cfg["input"]["generator"])
    rows = [tuple(p) for p in gen.space.points]
    serialize.write_csv(os.path.join(out, "points.csv"),
                        [f"x{i}" for i in range(gen.space.points.shape[1])], rows)
    serialize.write_json(os.path.join(out, "generate.json"), {
        "spec": gen.spec, "n_points": gen.space.n,
        "resolution_floor": gen.resolution_floor,
    })
    return EXIT_OK


def cmd_net(cfg: dict, out: str, args) -> int:
    hint: list[float] = []
    space = _resolve_space(cfg, hint)
    params = _dyadic_params(cfg, args.mode, None, hint[0] if hint else None)
    system = build_system(space, params)
    report = verify_system(system)
    serialize.write_json(os.path.join(out, "net.json"), system.to_json())
    payload = report.to_json()
    payload["violations"] = (report.core_violations + report.separation_violations
                             + report.covering_violations
                             if params.mode == "strict" else report.core_violations)
    serialize.write_json(os.path.join(out, "net_verification.json"), payload)
    if not report.ok():
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_dims(cfg: dict, out: str, args) -> int:
    hint: list[float] = []
    space = _resolve_space(cfg, hint)
    subset = whole_space(space)
    floor = hint[0] if hint else None
    deltas = _delta_grid(cfg)
    thetas = [float(t) for t in cfg.get("thetas", [0.5, 1.0])]
    tol = _tolerances(cfg)
    perfectness = cfg.get("perfectness")
    c_u, _ = dim.resolve_perfectness(subset, perfectness)
    ratio = float(cfg.get("dyadic", {}).get("ratio", 0.5))
    depth = _needed_depth(thetas, deltas, ratio, c_u)
    params = _dyadic_params(cfg, args.mode, depth, floor)
    system = build_system(space, params)

    results = {}
    scales = cfg.get("scales")
    box_scales = ([float(s) for s in scales] if scales else deltas[:max(4, len(deltas))])
    if len(box_scales) < 4:
        box_scales = [box_scales[0] * 0.5 ** i for i in range(4)]
    box = dim.box_dimension(subset, box_scales, resolution_floor=floor)
    results["box"] = box.to_json()
    serialize.write_csv(os.path.join(out, "dims_box.csv"), ["scale", "local_slope"],
                        box.series)

    def run_theta(theta: float):
        return dim.intermediate_dimension(
            system, subset, theta, deltas, perfectness=perfectness,
            bisection_tol=tol["bisection_tol"], residual_cap=tol["residual_cap"])

    inter = _parallel_map(run_theta, thetas, args.threads)
    for theta, est in zip(thetas, inter):
        key = f"intermediate_theta_{theta:g}"
        results[key] = est.to_json()
        serialize.write_csv(os.path.join(out, f"dims_{key}.csv"), ["delta", "s"],
                            est.series)
    haus = dim.hausdorff_dimension(system, subset, deltas,
                                   perfectness=perfectness,
                                   bisection_tol=tol["bisection_tol"],
                                   residual_cap=tol["residual_cap"])
    results["hausdorff"] = haus.to_json()
    serialize.write_csv(os.path.join(out, "dims_hausdorff.csv"), ["delta", "s"],
                        haus.series)
    serialize.write_json(os.path.join(out, "dims.json"), results)
    return EXIT_OK


def cmd_holder(cfg: dict, out: str, args) -> int:
    hint: list[float] = []
    space = _resolve_space(cfg, hint)
    f = _resolve_map(cfg, space)
    h = cfg.get("holder", {})
    alpha = float(h.get("alpha", 1.0))
    p = float(h.get("p", 2.0))
    eps = float(h.get("epsilon", DEFAULTS["holder_epsilon"]))
    radii = h.get("radii")
    if radii is None:
        from .spaces import diameter
        dia = diameter(whole_space(space))
        radii = [dia / 2.0 * 0.5 ** i for i in range(6)]
    profile = estimate_ch_profile(f, whole_space(space), alpha, p,
                                  [float(r) for r in radii], eps)
    serialize.write_json(os.path.join(out, "holder_profile.json"),
                         profile.to_json())
    serialize.write_csv(os.path.join(out, "holder_profile.csv"), ["r", "p_sum"],
                        list(zip(profile.radii, profile.sums)))
    return EXIT_OK


def cmd_gradient(cfg: dict, out: str, args) -> int:
    hint: list[float] = []
    space = _resolve_space(cfg, hint)
    f = _resolve_map(cfg, space)
    g = cfg.get("gradient", {})
    s = float(g.get("smoothness", 1.0))
    p_raw = g.get("integrability", 2.0)
    p = math.inf if p_raw in ("inf", None) else float(p_raw)
    sol = hajlasz_gradient(f, s, p,
                           iterations=int(g.get("iterations",
                                                DEFAULTS["gradient_iterations"])))
    serialize.write_json(os.path.join(out, "gradient.json"), sol.to_json())
    serialize.write_csv(os.path.join(out, "gradient.csv"), ["id", "g"],
                        list(enumerate(sol.g.tolist())))
    return EXIT_OK


def cmd_bounds(cfg: dict, out: str, args) -> int:
    b = cfg.get("bound", {})
    q_raw = b.get("q")
    params = BoundParams(
        variant=b.get("variant", "thm11"), d=float(b.get("d", 1.0)),
        p=None if b.get("p") is None else float(b["p"]),
        q=None if q_raw is None else float(q_raw),
        s=None if b.get("s") is None else float(b["s"]),
        alpha=None if b.get("alpha") is None else float(b["alpha"]),
        ambient=None if b.get("Q") is None else float(b["Q"]),
        theta=None if b.get("theta") is None else float(b["theta"]),
        space=b.get("space"))
    value = evaluate_bound(params)
    payload = {"variant": params.variant, "d": params.d}
    if isinstance(value, tuple):
        payload["lower"], payload["upper"] = value
    else:
        payload["value"] = value
    serialize.write_json(os.path.join(out, "bounds.json"), payload)
    return EXIT_OK


def cmd_experiment(cfg: dict, out: str, args) -> int:
    hint: list[float] = []
    space = _resolve_space(cfg, hint)
    subset = whole_space(space)
    f = _resolve_map(cfg, space)
    deltas = _delta_grid(cfg)
    thetas = [float(t) for t in cfg.get("thetas", [0.5])]
    b = cfg.get("bound", {})
    p = float(b.get("p", 2.0))
    alpha = float(b.get("alpha", 1.0))
    tol = _tolerances(cfg)
    perfectness = cfg.get("perfectness")
    c_u, _ = dim.resolve_perfectness(subset, perfectness)
    ratio = float(cfg.get("dyadic", {}).get("ratio", 0.5))
    depth = _needed_depth(thetas, deltas, ratio, c_u)
    params = _dyadic_params(cfg, args.mode, depth, hint[0] if hint else None)
    system = build_system(space, params)

    def run_theta(theta: float):
        return distortion_experiment(
            system, f, subset, theta, p, alpha, deltas,
            perfectness=perfectness,
            bound_tolerance=tol["bound_tolerance"],
            bisection_tol=tol["bisection_tol"])

    reports = _parallel_map(run_theta, thetas, args.threads)
    payload = {}
    rows = []
    total_violations = 0
    total_usable = 0
    for theta, rep in zip(thetas, reports):
        payload[f"theta_{theta:g}"] = rep.to_json()
        total_violations += rep.violations
        total_usable += rep.usable
        rows.extend((theta,) + r for r in rep.csv_rows())
    serialize.write_json(os.path.join(out, "experiment.json"), payload)
    serialize.write_csv(os.path.join(out, "experiment.csv"),
                        ["theta", "delta", "empirical", "bound"], rows)
    if total_usable == 0:
        print("no usable scales", file=sys.stderr)
        return EXIT_NO_SCALES
    if total_violations > 0:
        return EXIT_VIOLATION
    return EXIT_OK


_COMMANDS = {
    "net": cmd_net,
    "dims": cmd_dims,
    "holder": cmd_holder,
    "gradient": cmd_gradient,
    "bounds": cmd_bounds,
    "experiment": cmd_experiment,
    "generate": cmd_generate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dimdist",
        description="dyadic cube systems, dimension estimates, and "
                    "distortion-bound experiments on finite metric spaces")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1)
        mode = p.add_mutually_exclusive_group()
        mode.add_argument("--strict", dest="mode", action="store_const",
                          const="strict")
        mode.add_argument("--relaxed", dest="mode", action="store_const",
                          const="relaxed")
        p.set_defaults(mode=None)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        return _COMMANDS[args.command](cfg, args.out, args)
    except (InputError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        if "no usable scales" in str(exc):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NO_SCALES
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DimdistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
