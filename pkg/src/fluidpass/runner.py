"""Run configuration and scheme dispatch behind the command line tool."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import lst, mesh, montecarlo, timestep
from .errors import ConfigError
from .model import FluidModel, discontinuity_times, from_dict, load, stationary

SCHEMES = ("upwind1-rk4", "upwind1-bdf2", "limiter3-rk3b", "lst-aw", "mc")
GRID_KIND = {"upwind1-rk4": mesh.VERTEX, "upwind1-bdf2": mesh.VERTEX, "limiter3-rk3b": mesh.CELL}


@dataclass
class RunConfig:
    model: FluidModel
    scheme: str = "upwind1-rk4"
    schemes: list[str] = field(default_factory=list)
    baseline: str = "mc"
    dx: float = 0.1
    dt: float | None = None
    t_end: float = 20.0
    output_times: np.ndarray = field(default_factory=lambda: np.array([0.0]))
    x: list[float] = field(default_factory=lambda: [0.0])
    initial_state: int | str = "stationary"
    mc_paths: int = 100_000
    mc_seed: int = 0
    output: Path = Path("fluidpass_out")
    format: str = "csv"
    jumps: list[float] = field(default_factory=list)
    window: float | None = None


def output_grid(times_arg: Any, t_end: float) -> np.ndarray:
    """Expand an output-time argument.

    Accepts a step (uniform grid from 0 to ``t_end``), an explicit list of
    times, or a list of ``[t_start, t_stop, dt]`` segments.
    """
    if times_arg is None:
        return np.array([0.0]) if t_end == 0 else np.linspace(0.0, t_end, 201)
    if isinstance(times_arg, (int, float)):
        if times_arg <= 0:
            raise ConfigError("output step must be positive")
        k = int(np.floor(t_end / times_arg + 1e-9))
        times = np.arange(k + 1) * float(times_arg)
        return times if np.isclose(times[-1], t_end) else np.append(times, t_end)
    times_arg = list(times_arg)
    if times_arg and all(isinstance(s, (list, tuple)) for s in times_arg):
        parts = []
        for seg in times_arg:
            if len(seg) != 3 or seg[2] <= 0 or seg[1] < seg[0]:
                raise ConfigError(f"bad output segment {seg}; expected [t_start, t_stop, dt]")
            a, b, h = map(float, seg)
            k = int(np.floor((b - a) / h + 1e-9))
            parts.append(a + np.arange(k + 1) * h)
        times = np.unique(np.round(np.concatenate(parts), 12))
    else:
        times = np.unique(np.asarray(times_arg, dtype=float))
    if np.any(times < 0) or np.any(times > t_end + 1e-12):
        raise ConfigError("output times must lie in [0, t_end]")
    return times


def parse_config(obj: dict, base: Path | None = None) -> RunConfig:
    obj = dict(obj)
    raw_model = obj.pop("model", None)
    if raw_model is None:
        raise ConfigError("config lacks a 'model'")
    if isinstance(raw_model, str):
        path = Path(raw_model)
        if base is not None and not path.is_absolute():
            path = base / path
        try:
            model = load(path)
        except OSError as exc:
            raise ConfigError(f"cannot read model file {path}: {exc}") from None
    else:
        model = from_dict(raw_model)

    known = set(RunConfig.__dataclass_fields__) - {"model"}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    t_end = float(obj.pop("t_end", 20.0))
    if t_end < 0:
        raise ConfigError("t_end must be nonnegative")
    times = output_grid(obj.pop("output_times", None), t_end)
    xs = obj.pop("x", [0.0])
    xs = [float(v) for v in (xs if isinstance(xs, list) else [xs])]
    cfg = RunConfig(model=model, t_end=t_end, output_times=times, x=xs, **obj)
    cfg.output = Path(cfg.output)
    for s in [cfg.scheme, *cfg.schemes]:
        if s not in SCHEMES:
            raise ConfigError(f"unknown scheme {s!r}; choose from {SCHEMES}")
    for v in cfg.x:
        if not 0 <= v <= model.bmax:
            raise ConfigError(f"x={v} outside [0, {model.bmax}]")
    if cfg.format not in ("csv",):
        raise ConfigError(f"unsupported output format {cfg.format!r}")
    if cfg.initial_state not in ("stationary", "all"):
        if not isinstance(cfg.initial_state, int) or not 0 <= cfg.initial_state < model.S:
            raise ConfigError(f"initial_state must be 'stationary', 'all' or a state index, "
                              f"got {cfg.initial_state!r}")
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(obj, base=path.parent)


@dataclass
class Curves:
    """Result of one scheme: per-x matrices of shape ``(len(times), columns)``."""

    scheme: str
    times: np.ndarray
    columns: list[str]
    values: dict[float, np.ndarray]
    meta: dict


def _columns(model: FluidModel, initial_state) -> list[str]:
    if initial_state == "stationary":
        return ["J"]
    if initial_state == "all":
        return [f"K_{a + 1}" for a in range(model.S)]
    return [f"K_{int(initial_state) + 1}"]


def _select(model: FluidModel, K_user: np.ndarray, initial_state, pi: np.ndarray) -> np.ndarray:
    """Reduce per-state curves (user order, last axis) to the requested columns."""
    if initial_state == "stationary":
        return (K_user @ model.to_original(pi))[:, None]
    if initial_state == "all":
        return K_user
    return K_user[:, [int(initial_state)]]


def interpolate_states(model: FluidModel, grid: mesh.SpaceGrid, snapshots: np.ndarray, x: float) -> np.ndarray:
    """Per-state values at level ``x`` (canonical order), linear in space.

    On the cell-centered grid the Dirichlet value at ``x = 0`` is used as an
    extra node for draining states.
    """
    S, n = model.S, grid.n
    K = snapshots.reshape(len(snapshots), S, n)
    pts = grid.points
    out = np.empty((len(snapshots), S))
    for a in range(S):
        if grid.kind == mesh.CELL and model.rates[a] <= 0:
            xp = np.concatenate([[0.0], pts])
            fp = np.concatenate([np.ones((len(snapshots), 1)), K[:, a]], axis=1)
        else:
            xp, fp = pts, K[:, a]
        out[:, a] = [np.interp(x, xp, row) for row in fp]
    return out


def compute(cfg: RunConfig, scheme: str | None = None) -> Curves:
    """Evaluate one scheme on the configured x values and output times."""
    scheme = scheme or cfg.scheme
    model = cfg.model
    pi = stationary(model)
    times = cfg.output_times
    cols = _columns(model, cfg.initial_state)
    meta: dict[str, Any] = {"scheme": scheme}
    values: dict[float, np.ndarray] = {}
    start = time.perf_counter()

    if scheme in GRID_KIND:
        grid = mesh.make_space_grid(model, cfg.dx, GRID_KIND[scheme])
        dt = cfg.dt
        if dt is None:
            dt = mesh.cfl_dt(model, grid, scheme if scheme != "upwind1-bdf2" else "upwind1-rk4")
        traj = timestep.integrate(model, grid, scheme, cfg.t_end, times, dt=dt)
        meta.update(dx=grid.dx, n=grid.n, dt=traj.dt, grid=grid.kind)
        for x in cfg.x:
            K = model.to_original(interpolate_states(model, grid, traj.snapshots, x), axis=1)
            values[x] = _select(model, K, cfg.initial_state, pi)
    elif scheme == "lst-aw":
        conds = []
        for x in cfg.x:
            res = lst.passage_cdf_lst(model, x, times, per_state=True)
            conds.append(res.info["max_condition"])
            values[x] = _select(model, res.values, cfg.initial_state, pi)
        meta.update(max_condition=max(conds), A=lst.AW_A, n=lst.AW_N, m=lst.AW_M)
    elif scheme == "mc":
        states = ["stationary"] if cfg.initial_state == "stationary" else (
            list(range(model.S)) if cfg.initial_state == "all" else [cfg.initial_state])
        censored = {}
        for x in cfg.x:
            cols_v = []
            for st in states:
                sim = montecarlo.SimConfig(x=x, paths=cfg.mc_paths, seed=cfg.mc_seed,
                                           t_end=cfg.t_end, initial_state=st)
                cdf = montecarlo.empirical_cdf(montecarlo.simulate(model, sim), times)
                cols_v.append(cdf.values)
                censored[f"x={x:g},state={st}"] = 1.0 - float(cdf.values[-1]) if len(times) else 0.0
                meta["band"] = cdf.band
            values[x] = np.column_stack(cols_v)
        meta.update(paths=cfg.mc_paths, seed=cfg.mc_seed, censored_fraction=censored)
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")
    meta["wall_time"] = time.perf_counter() - start
    return Curves(scheme, times, cols, values, meta)


def discontinuity_windows(cfg: RunConfig, x: float) -> tuple[np.ndarray, float]:
    """Jump times at level ``x`` and the half-width of the window excluded around each."""
    model = cfg.model
    jumps = np.unique(np.concatenate([discontinuity_times(model, x) if model.n_negative else [],
                                      np.asarray(cfg.jumps, dtype=float)]))
    if cfg.window is not None:
        return jumps, float(cfg.window)
    nz = np.abs(model.rates[model.rates != 0])
    spatial = cfg.dx * float(np.max(1.0 / nz)) if nz.size else 0.0
    steps = np.diff(cfg.output_times)
    temporal = float(steps[steps > 0].min()) if steps.size else 0.0
    return jumps, 5.0 * max(spatial, temporal)


def outside_windows(times: np.ndarray, jumps: np.ndarray, half: float) -> np.ndarray:
    mask = np.ones(len(times), dtype=bool)
    for tj in jumps:
        mask &= np.abs(times - tj) > half
    return mask
