"""Space and time grids."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AllRatesZero, DegenerateGrid, GridError
from .model import FluidModel

VERTEX = "vertex"
CELL = "cell-centered"

# schemes whose explicit step is bounded by the plain CFL number
_CFL_FACTOR = {"rk4": 1.0, "upwind1": 1.0, "upwind1-rk4": 1.0,
               "rk3b": 0.25, "limiter3": 0.25, "limiter3-rk3b": 0.25}


@dataclass(frozen=True, eq=False)
class SpaceGrid:
    kind: str
    n: int
    dx: float
    points: np.ndarray
    bmax: float

    @property
    def faces(self) -> np.ndarray:
        """Face coordinates of a cell-centered grid, ``n + 1`` values from 0 to bmax."""
        if self.kind != CELL:
            raise GridError("faces are only defined on cell-centered grids")
        return np.arange(self.n + 1) * self.dx


def make_space_grid(model: FluidModel, dx_request: float, kind: str = VERTEX) -> SpaceGrid:
    """Uniform grid on ``[0, bmax]`` with spacing no larger than ``dx_request``."""
    bmax = model.bmax
    if not 0 < dx_request <= bmax:
        raise DegenerateGrid(f"dx must lie in (0, {bmax}], got {dx_request}")
    # guard against ceil(10/0.1) = 101 from representation error
    cells = math.ceil(bmax / dx_request - 1e-9)
    if kind == VERTEX:
        n = cells + 1
        if n < 3:
            raise DegenerateGrid(f"vertex grid needs at least 3 points, got {n}")
        dx = bmax / (n - 1)
        points = np.arange(n) * dx
        points[-1] = bmax
    elif kind == CELL:
        n = cells
        if n < 4:
            raise DegenerateGrid(f"cell-centered grid needs at least 4 cells, got {n}")
        dx = bmax / n
        points = (np.arange(n) + 0.5) * dx
    else:
        raise GridError(f"unknown grid kind {kind!r}")
    points.flags.writeable = False
    return SpaceGrid(kind=kind, n=n, dx=dx, points=points, bmax=bmax)


def cfl_dt(model: FluidModel, grid: SpaceGrid, scheme: str, dt_request: float | None = None) -> float:
    """Time step for ``scheme`` on ``grid``.

    Explicit schemes get ``factor * min |dx / r|`` over nonzero rates, with
    factor 1 for RK4 and 1/4 for RK3b.  BDF2 returns ``dt_request`` unchanged.
    """
    if scheme in ("bdf2", "upwind1-bdf2"):
        if dt_request is None:
            raise GridError("BDF2 needs an explicit dt")
        return float(dt_request)
    try:
        factor = _CFL_FACTOR[scheme]
    except KeyError:
        raise GridError(f"unknown scheme {scheme!r}") from None
    nz = np.abs(model.rates[model.rates != 0])
    if nz.size == 0:
        raise AllRatesZero("every rate is zero; advection imposes no step bound")
    return factor * float(np.min(grid.dx / nz))


@dataclass(frozen=True)
class TimeGrid:
    m: int
    dt: float
    t_end: float

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.m) * self.dt


def make_time_grid(t_end: float, dt: float) -> TimeGrid:
    """Uniform time levels from 0 landing exactly on ``t_end``.

    The step is shrunk (never grown) to ``t_end / ceil(t_end / dt)`` so an
    explicit step bound stays satisfied.
    """
    if t_end < 0 or dt <= 0:
        raise GridError(f"need t_end >= 0 and dt > 0, got {t_end}, {dt}")
    steps = math.ceil(t_end / dt - 1e-9)
    if steps == 0:
        return TimeGrid(m=1, dt=dt, t_end=0.0)
    return TimeGrid(m=steps + 1, dt=t_end / steps, t_end=float(t_end))
