"""Time integrators for the semi-discrete systems.

Linear steppers (RK4, BDF2, matrix exponential) accept a
:class:`~fluidpass.upwind1.SpatialOperator`, a scipy sparse matrix or a dense
array.  RK3b takes any callable right-hand side, in particular
:class:`~fluidpass.limiter3.LimitedRhs`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import limiter3, upwind1
from .errors import NonFinite, SingularSystem, TooLarge, WrongGridKind
from .mesh import CELL, VERTEX, SpaceGrid, cfl_dt, make_time_grid
from .model import FluidModel

log = logging.getLogger(__name__)

EXPM_MAX_SIZE = 400
SCHEMES = ("upwind1-rk4", "upwind1-bdf2", "limiter3-rk3b")


@dataclass
class Trajectory:
    times: np.ndarray
    snapshots: np.ndarray  # shape (len(times), nS)
    scheme: str
    dt: float = float("nan")
    info: dict = field(default_factory=dict)


def _matrix(op):
    if isinstance(op, upwind1.SpatialOperator):
        return op.A
    return op


def _check_finite(field: np.ndarray, scheme: str) -> np.ndarray:
    if not np.isfinite(field).all():
        raise NonFinite(f"{scheme} produced non-finite values; step size likely violates stability")
    return field


def rk4_step(op, field: np.ndarray, dt: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of ``dK/dt = A K``."""
    A = _matrix(op)
    with np.errstate(over="ignore", invalid="ignore"):
        p1 = A @ field
        p2 = A @ (field + 0.5 * dt * p1)
        p3 = A @ (field + 0.5 * dt * p2)
        p4 = A @ (field + dt * p3)
        new = field + (dt / 6.0) * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
    return _check_finite(new, "RK4")


def rk3b_step(rhs: Callable[[np.ndarray], np.ndarray], field: np.ndarray, dt: float) -> np.ndarray:
    """One step of the three-stage, third-order RK3b scheme.

    ``K + dt/6 (p1 + p2 + 4 p3)`` with ``p1 = F(K)``, ``p2 = F(K + dt p1)``
    and ``p3 = F(K + dt/4 (p1 + p2))``.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        p1 = rhs(field)
        p2 = rhs(field + dt * p1)
        p3 = rhs(field + 0.25 * dt * (p1 + p2))
        new = field + (dt / 6.0) * (p1 + p2 + 4.0 * p3)
    return _check_finite(new, "RK3b")


def _factorize(M):
    try:
        lu = spla.splu(sp.csc_matrix(M))
    except RuntimeError as exc:  # "Factor is exactly singular"
        raise SingularSystem(str(exc)) from None
    return lu


def bdf2_advance(op, field0: np.ndarray, dt: float, m: int,
                 record: Sequence[int] | None = None,
                 on_step: Callable[[int, np.ndarray], None] | None = None) -> Trajectory:
    """Advance ``m`` BDF2 steps from ``field0``.

    The first step is implicit Euler; both systems are factorised once.
    ``record`` lists the step indices to keep (default: all ``m + 1`` levels).
    """
    A = sp.csc_matrix(_matrix(op))
    N = A.shape[0]
    eye = sp.identity(N, format="csc")
    keep = set(range(m + 1)) if record is None else set(record)
    times, snaps = [], []

    def emit(q, K):
        if q in keep:
            times.append(q * dt)
            snaps.append(K.copy())
        if on_step is not None:
            on_step(q, K)

    prev = np.array(field0, dtype=float)
    emit(0, prev)
    if m == 0:
        return Trajectory(np.array(times), np.array(snaps), "bdf2", dt)

    cur = _factorize(eye - dt * A).solve(prev)
    _check_finite(cur, "BDF2")
    emit(1, cur)
    lu = _factorize(eye - (2.0 / 3.0) * dt * A)
    for q in range(2, m + 1):
        nxt = lu.solve((4.0 / 3.0) * cur - (1.0 / 3.0) * prev)
        _check_finite(nxt, "BDF2")
        prev, cur = cur, nxt
        emit(q, cur)
    return Trajectory(np.array(times), np.array(snaps), "bdf2", dt)


def expm_reference(op, field0: np.ndarray, t: float) -> np.ndarray:
    """``exp(A t) K(0)`` by dense scaling and squaring; small systems only."""
    A = _matrix(op)
    N = A.shape[0]
    if N > EXPM_MAX_SIZE:
        raise TooLarge(f"dense exponential limited to {EXPM_MAX_SIZE} unknowns, got {N}")
    dense = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    return scipy.linalg.expm(dense * t) @ np.asarray(field0, dtype=float)


def _sample_indices(times: Sequence[float], dt: float, m: int) -> np.ndarray:
    idx = np.rint(np.asarray(times, dtype=float) / dt).astype(int)
    return np.clip(idx, 0, m - 1)


def integrate(model: FluidModel, grid: SpaceGrid, scheme: str, t_end: float,
              output_times: Sequence[float] | None = None, dt: float | None = None,
              on_step: Callable[[int, np.ndarray], None] | None = None) -> Trajectory:
    """Solve for ``K_alpha(x_p, t)`` on ``grid`` up to ``t_end``.

    ``dt`` defaults to the scheme's stable step (required for BDF2).  The step
    is shrunk so the last level lands on ``t_end``.  Snapshots are taken at
    the levels nearest to ``output_times`` (every level when omitted).
    ``on_step(q, K)`` is called after every level, including the initial one.
    """
    if scheme not in SCHEMES:
        raise WrongGridKind(f"unknown PDE scheme {scheme!r}; expected one of {SCHEMES}")
    want = CELL if scheme == "limiter3-rk3b" else VERTEX
    if grid.kind != want:
        raise WrongGridKind(f"{scheme} needs a {want} grid, got {grid.kind}")

    if dt is None:
        dt = cfl_dt(model, grid, scheme)
    tg = make_time_grid(t_end, dt)
    m = tg.m - 1
    record = None if output_times is None else _sample_indices(output_times, tg.dt, tg.m)
    log.debug("%s: n=%d S=%d dt=%.3g steps=%d", scheme, grid.n, model.S, tg.dt, m)

    if scheme == "upwind1-bdf2":
        op = upwind1.assemble(model, grid)
        traj = bdf2_advance(op, upwind1.initial_field(model, grid), tg.dt, m,
                            record=None if record is None else record.tolist(), on_step=on_step)
        traj.scheme = scheme
        if record is not None:
            traj = _resample(traj, record, tg.dt)
        return traj

    if scheme == "upwind1-rk4":
        op = upwind1.assemble(model, grid)
        K = upwind1.initial_field(model, grid)
        step = rk4_step
    else:
        op = limiter3.LimitedRhs(model, grid)
        K = limiter3.initial_field(model, grid)
        step = rk3b_step

    keep = np.zeros(m + 1, dtype=bool)
    if record is None:
        keep[:] = True
    else:
        keep[record] = True
    times, snaps = [], []
    for q in range(m + 1):
        if q:
            K = step(op, K, tg.dt)
        if keep[q]:
            times.append(q * tg.dt)
            snaps.append(K.copy())
        if on_step is not None:
            on_step(q, K)
    traj = Trajectory(np.array(times), np.array(snaps), scheme, tg.dt)
    if record is not None:
        traj = _resample(traj, record, tg.dt)
    return traj


def _resample(traj: Trajectory, record: np.ndarray, dt: float) -> Trajectory:
    """Expand unique recorded levels to one snapshot per requested output time."""
    levels = np.rint(traj.times / dt).astype(int)
    pos = np.searchsorted(levels, record)
    return Trajectory(record * dt, traj.snapshots[pos], traj.scheme, dt, traj.info)
