"""``fluidpass`` command line interface.

    fluidpass run --config cfg.json [--output DIR]
    fluidpass compare --config cfg.json [--output DIR]
    fluidpass bench --suite example1 [--scale 1]
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import catalog, lst, mesh, timestep
from .errors import ConfigError, FluidPassError, UnknownSuite
from .runner import (Curves, RunConfig, compute, discontinuity_windows, interpolate_states, load_config,
                     outside_windows)

log = logging.getLogger("fluidpass")


def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(path: Path, times: np.ndarray, header: list[str], values: np.ndarray) -> None:
    lines = [",".join(["t", *header])]
    for t, row in zip(times, values):
        lines.append(",".join([_fmt(t), *map(_fmt, row)]))
    path.write_text("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def write_curves(out: Path, curves: Curves, extra: dict | None = None) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for x, vals in curves.values.items():
        path = out / f"{curves.scheme}_x{x:g}.csv"
        write_csv(path, curves.times, curves.columns, vals)
        written.append(path)
    meta = dict(curves.meta)
    if extra:
        meta.update(extra)
    sidecar = out / f"{curves.scheme}.json"
    sidecar.write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n")
    written.append(sidecar)
    return written


def cmd_run(cfg: RunConfig) -> int:
    curves = compute(cfg)
    extra = {"x": cfg.x, "t_end": cfg.t_end, "initial_state": cfg.initial_state}
    for path in write_curves(cfg.output, curves, extra):
        print(path)
    return 0


def _cell(v) -> str:
    return f"{'(windowed)':>16}" if v is None else f"{v:>16.3e}"


def cmd_compare(cfg: RunConfig) -> int:
    # the baseline counts as one of the compared schemes, so a lone scheme is a self-check
    schemes = cfg.schemes or [cfg.scheme]
    if cfg.initial_state == "all":
        raise ConfigError("compare works on a single curve; use 'stationary' or a state index")
    runs = {s: compute(cfg, s) for s in dict.fromkeys([cfg.baseline, *schemes])}
    base = runs[cfg.baseline]
    cfg.output.mkdir(parents=True, exist_ok=True)
    report = {"baseline": cfg.baseline, "schemes": {}}
    for x in cfg.x:
        jumps, half = discontinuity_windows(cfg, x)
        mask = outside_windows(cfg.output_times, jumps, half)
        cols, header = [base.values[x][:, 0]], [cfg.baseline]
        for s in schemes:
            err = runs[s].values[x][:, 0] - base.values[x][:, 0]
            cols.append(err)
            header.append(f"err_{s}")
            sup = float(np.max(np.abs(err[mask]))) if mask.any() else None
            entry = report["schemes"].setdefault(s, {"wall_time": runs[s].meta["wall_time"], "sup_error": {}})
            entry["sup_error"][f"{x:g}"] = sup
        write_csv(cfg.output / f"compare_x{x:g}.csv", cfg.output_times, header, np.column_stack(cols))
        report.setdefault("windows", {})[f"{x:g}"] = {"jumps": jumps, "half_width": half}
    report["baseline_wall_time"] = base.meta["wall_time"]
    (cfg.output / "compare.json").write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")

    print(f"{'scheme':<16}{'wall [s]':>10}" + "".join(f"{'sup err x=' + format(x, 'g'):>16}" for x in cfg.x))
    for s, entry in report["schemes"].items():
        errs = "".join(_cell(entry["sup_error"][format(x, "g")]) for x in cfg.x)
        print(f"{s:<16}{entry['wall_time']:>10.3f}{errs}")
    return 0


# reference resolutions: (dx for RK3b, dx for RK4, output dt for the transform method)
_EX1_RES = {"low": (0.1, 0.1, 0.1), "high": (0.01, 0.01, 0.01)}
_BENCH_TEND = {"example1": 20.0, "example2": 20.0, "example3": 5.0, "example4": 5.0}


def _timed(fn):
    start = time.perf_counter()
    try:
        fn()
    except FluidPassError as exc:
        return f"{type(exc).__name__}"
    return time.perf_counter() - start


def bench(suite: str, scale: float = 1.0) -> list[dict]:
    """Wall times per method for a named example.

    For ``example1``/``example2`` ``scale`` refines the reference grids
    (``dx / scale``); for ``example3``/``example4`` it scales the state
    count (``S = round(100 * scale)``).
    """
    if suite not in catalog.EXAMPLES:
        raise UnknownSuite(f"unknown suite {suite!r}; choose from {sorted(catalog.EXAMPLES)}")
    if not scale > 0:
        raise ConfigError("scale must be positive")
    t_end = _BENCH_TEND[suite]
    rows = []

    def pde(model, scheme, dx, x):
        kind = mesh.CELL if scheme == "limiter3-rk3b" else mesh.VERTEX
        grid = mesh.make_space_grid(model, dx, kind)
        traj = timestep.integrate(model, grid, scheme, t_end, np.arange(0, t_end + 1e-9, 0.1))
        interpolate_states(model, grid, traj.snapshots, x)

    if suite == "example1":
        model, x = catalog.example1(), 5.0
        for res, (dx3, dx4, dt_lst) in _EX1_RES.items():
            dx3, dx4, dt_lst = dx3 / scale, dx4 / scale, dt_lst / scale
            times = np.arange(dt_lst, t_end + 1e-9, dt_lst)
            rows.append({
                "resolution": res, "dx": dx4,
                "RK3b": _timed(lambda: pde(model, "limiter3-rk3b", dx3, x)),
                "RK4": _timed(lambda: pde(model, "upwind1-rk4", dx4, x)),
                "LST closed-form": _timed(lambda: [lst.invert_aw(
                    lambda w: catalog.example1_closed_form(x, w) / w, t) for t in times]),
                "LST numeric": _timed(lambda: lst.passage_cdf_lst(model, x, times)),
            })
        return rows

    if suite == "example2":
        model, x = catalog.example2(), 6.0
        dx3, dx4 = 0.1 / scale, 0.005 / scale
    else:
        S = max(2, int(round(100 * scale)))
        model = (catalog.example3 if suite == "example3" else catalog.example4)(S)
        x, dx3, dx4 = 5.0, 0.5, 0.05
    times = np.arange(0.5 if suite != "example2" else 0.01, t_end + 1e-9, 0.5 if suite != "example2" else 0.01)
    rows.append({
        "S": model.S, "dx RK3b": dx3, "dx RK4": dx4,
        "RK3b": _timed(lambda: pde(model, "limiter3-rk3b", dx3, x)),
        "RK4": _timed(lambda: pde(model, "upwind1-rk4", dx4, x)),
        "LST numeric": _timed(lambda: lst.passage_cdf_lst(model, x, times)),
    })
    return rows


def cmd_bench(suite: str, scale: float, output: Path | None) -> int:
    rows = bench(suite, scale)
    keys = list(rows[0])
    print("".join(f"{k:>16}" for k in keys))
    for row in rows:
        cells = []
        for k in keys:
            v = row[k]
            cells.append(f"{v:>16.3f}" if isinstance(v, float) else f"{str(v):>16}")
        print("".join(cells))
    if output is not None:
        output.mkdir(parents=True, exist_ok=True)
        (output / f"bench_{suite}.json").write_text(json.dumps(_jsonable(rows), indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fluidpass",
                                     description="First-passage time distributions of fluid queues.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "compare"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--output", type=Path, default=None)
    p = sub.add_parser("bench")
    p.add_argument("--suite", required=True)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--output", type=Path, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "bench":
            return cmd_bench(args.suite, args.scale, args.output)
        cfg = load_config(args.config)
        if args.output is not None:
            cfg.output = args.output
        return cmd_run(cfg) if args.command == "run" else cmd_compare(cfg)
    except FluidPassError as exc:
        print(f"fluidpass: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
