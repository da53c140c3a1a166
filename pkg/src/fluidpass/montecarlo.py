"""Exact-event simulation of first passage to an empty buffer.

Between switches of the background chain the level moves linearly, so a
path is simulated jump by jump: draw the holding time, check whether the
level reaches zero before it ends, otherwise advance (clipped at ``bmax``)
and switch.  Many paths are advanced together as numpy arrays.

Paths are generated in fixed-size chunks, each with its own random stream
derived from ``(seed, chunk index)``, so results do not depend on how
chunks are scheduled over workers.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySample, SimulationError, TooCensored
from .model import FluidModel, stationary

CHUNK = 1 << 18
_SINGLE_PATH_KEY = 1 << 40
DKW_DELTA = 0.01
MAX_CENSORED_FOR_MEAN = 1e-3


@dataclass
class SimConfig:
    """Simulation settings.

    ``initial_state`` is ``"stationary"`` or a state index in the user's order.
    """

    x: float
    paths: int = 100_000
    seed: int = 0
    t_end: float = math.inf
    initial_state: int | str = "stationary"


@dataclass
class PassageCdf:
    """Passage-time distribution sampled on a time grid.

    ``values`` is ``(len(times),)`` for a single curve or ``(len(times), S)``
    for per-state curves.  ``band`` is the 99% DKW half-width (0 when the
    curve is not a sample estimate).
    """

    times: np.ndarray
    values: np.ndarray
    censored: float = 0.0
    band: float = 0.0
    info: dict = field(default_factory=dict)


def _jump_table(Q: np.ndarray) -> np.ndarray:
    """Row-wise cumulative jump probabilities ``q_ab / -q_aa`` (zero rows for absorbing states)."""
    out = np.maximum(Q, 0.0)
    np.fill_diagonal(out, 0.0)
    exit_rate = 0.0 - np.diag(Q)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(exit_rate[:, None] > 0, out / exit_rate[:, None], 0.0)
    cum = np.cumsum(out, axis=1)
    cum[:, -1] = np.where(exit_rate > 0, 1.0, cum[:, -1])
    return cum


def _simulate_chunk(model: FluidModel, cfg: SimConfig, pi: np.ndarray, chunk: int, size: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(chunk,)))
    rates, bmax = model.rates, model.bmax
    exit_rate = 0.0 - np.diag(model.Q)  # avoid -0.0 (holding time -inf) for absorbing states
    cum = _jump_table(model.Q)
    S = model.S

    out = np.full(size, np.inf)
    if cfg.initial_state == "stationary":
        state = np.minimum(np.searchsorted(np.cumsum(pi), rng.random(size), side="right"), S - 1)
    else:
        state = np.full(size, model.original_index(int(cfg.initial_state)))
    level = np.full(size, float(cfg.x))
    t = np.zeros(size)
    idx = np.arange(size)

    while idx.size:
        r = rates[state]
        er = exit_rate[state]
        with np.errstate(divide="ignore"):
            hold = rng.exponential(1.0, idx.size) / er
        with np.errstate(divide="ignore", invalid="ignore"):
            cross = np.where(r < 0, level / -r, np.inf)
        cross = np.where((level == 0) & (r <= 0), 0.0, cross)
        hit = cross <= hold
        t_hit = t + cross
        ok = hit & (t_hit <= cfg.t_end)
        out[idx[ok]] = t_hit[ok]

        t = t + hold
        # absorbing non-draining states never hit
        alive = ~hit & np.isfinite(t) & (t <= cfg.t_end)
        level = np.clip(level + r * np.where(np.isfinite(hold), hold, 0.0), 0.0, bmax)

        idx, state, level, t = idx[alive], state[alive], level[alive], t[alive]
        if idx.size:
            u = rng.random(idx.size)
            state = np.minimum((u[:, None] >= cum[state]).sum(axis=1), S - 1)
    return out


def _workers() -> int:
    env = os.environ.get("FLUIDPASS_THREADS")
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def simulate(model: FluidModel, cfg: SimConfig) -> np.ndarray:
    """Passage times of ``cfg.paths`` independent paths; censored paths are ``inf``."""
    if cfg.paths < 1:
        raise SimulationError("need at least one path")
    if not 0 <= cfg.x <= model.bmax:
        raise SimulationError(f"initial level {cfg.x} outside [0, {model.bmax}]")
    pi = stationary(model) if cfg.initial_state == "stationary" else None
    sizes = [min(CHUNK, cfg.paths - start) for start in range(0, cfg.paths, CHUNK)]
    jobs = list(enumerate(sizes))
    workers = min(_workers(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda job: _simulate_chunk(model, cfg, pi, *job), jobs))
    else:
        parts = [_simulate_chunk(model, cfg, pi, *job) for job in jobs]
    return np.concatenate(parts)


def simulate_passage(model: FluidModel, cfg: SimConfig, path: int = 0) -> float:
    """Passage time of a single path (``inf`` when censored).

    Draws from a stream keyed by ``(seed, path)`` that is disjoint from the
    chunk streams of :func:`simulate`.
    """
    pi = stationary(model) if cfg.initial_state == "stationary" else None
    return float(_simulate_chunk(model, cfg, pi, _SINGLE_PATH_KEY + path, 1)[0])


def dkw_halfwidth(n: int, delta: float = DKW_DELTA) -> float:
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def empirical_cdf(samples: np.ndarray, times) -> PassageCdf:
    """Right-continuous empirical CDF ``#{T <= t} / N`` with its 99% DKW band."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise EmptySample("no samples")
    times = np.asarray(times, dtype=float)
    srt = np.sort(samples)
    counts = np.searchsorted(srt, times, side="right")
    N = samples.size
    censored = float(np.mean(~np.isfinite(samples)))
    return PassageCdf(times, counts / N, censored=censored, band=dkw_halfwidth(N),
                      info={"paths": N})


def mean_passage(samples: np.ndarray) -> tuple[float, float]:
    """Sample mean and standard error of the passage time."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise EmptySample("no samples")
    finite = samples[np.isfinite(samples)]
    frac = 1.0 - finite.size / samples.size
    if frac >= MAX_CENSORED_FOR_MEAN:
        raise TooCensored(f"{frac:.2%} of paths censored; mean would be biased")
    se = float(finite.std(ddof=1) / math.sqrt(finite.size)) if finite.size > 1 else 0.0
    return float(finite.mean()), se
