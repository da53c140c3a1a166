"""Flux-limited upwind-biased discretisation on the cell-centered grid.

Cell ``c`` (0-based) holds ``K_alpha`` at ``(c + 1/2) dx``; face ``j`` sits at
``j dx`` between cells ``j-1`` and ``j``.  The semi-discrete form is

    dK^c/dt = (F^{c+1} - F^c) / dx + sum_beta q_{alpha beta} K_beta^c

with face fluxes ``F = r * K_face``.  On interior faces the face value is the
upstream cell value plus a Koren-limited correction, which is third-order
accurate where the solution is smooth and positivity preserving across jumps.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import DimensionMismatch, WrongGridKind
from .mesh import CELL, SpaceGrid
from .model import FluidModel

RATIO_THETA = 1e-14
# degenerate gradient ratios are mapped here; every limiter sends it to 0
SENTINEL = -np.inf
_TINY = np.finfo(float).tiny


def koren_limiter(f):
    """Koren limiter ``max(0, min(2f, (1+2f)/3, 2))``."""
    f = np.asarray(f, dtype=float)
    with np.errstate(invalid="ignore"):
        phi = np.maximum(0.0, np.minimum(np.minimum(2.0 * f, (1.0 + 2.0 * f) / 3.0), 2.0))
    return phi if phi.ndim else float(phi)


def limited_ratio(num, den):
    """Ratio of consecutive gradients, or :data:`SENTINEL` when the denominator is negligible."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    ok = np.abs(den) > RATIO_THETA * (np.abs(num) + np.abs(den) + _TINY)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(ok, num / np.where(ok, den, 1.0), SENTINEL)
    return out if out.ndim else float(out)


class LimitedRhs:
    """Nonlinear right-hand side ``K -> A(K) K`` of the flux-limited scheme.

    Parameters
    ----------
    model, grid
        Validated model and a cell-centered grid.
    limiter
        Limiter function, vectorised over arrays.  Defaults to Koren.
    """

    def __init__(self, model: FluidModel, grid: SpaceGrid, limiter: Callable = koren_limiter):
        if grid.kind != CELL:
            raise WrongGridKind(f"flux-limited scheme needs a cell-centered grid, got {grid.kind}")
        self.model = model
        self.grid = grid
        self.limiter = limiter
        self.size = model.S * grid.n
        rates = model.rates
        self._r = rates[:, None]
        self._drain = rates <= 0
        self._fill = ~self._drain

    def __call__(self, field: np.ndarray) -> np.ndarray:
        return eval_rhs(self, field)


def initial_field(model: FluidModel, grid: SpaceGrid) -> np.ndarray:
    """All cells start at zero; the x=0 boundary enters through the inflow flux."""
    if grid.kind != CELL:
        raise WrongGridKind(f"expected a cell-centered grid, got {grid.kind}")
    return np.zeros(model.S * grid.n)


def _as_blocks(rhs: LimitedRhs, field: np.ndarray) -> np.ndarray:
    field = np.asarray(field, dtype=float)
    if field.shape != (rhs.size,):
        raise DimensionMismatch(f"field of shape {field.shape} for system of size {rhs.size}")
    return field.reshape(rhs.model.S, rhs.grid.n)


def face_values(rhs: LimitedRhs, K: np.ndarray) -> np.ndarray:
    """Face values ``K_face`` of shape ``(S, n + 1)``; fluxes are ``r * K_face``."""
    S, n = K.shape
    phi = rhs.limiter
    Kf = np.empty((S, n + 1))
    c = slice(1, n - 1)  # cells with both neighbours

    d = rhs._drain
    if d.any():
        # the Dirichlet value K(0, t) = 1 acts as upstream neighbour of cell 0
        Kd = np.hstack([np.ones((int(d.sum()), 1)), K[d]])
        up = Kd[:, 1:n] - Kd[:, :n - 1]
        f = limited_ratio(Kd[:, 2:] - Kd[:, 1:n], up)
        Kf[d, 0] = 1.0
        Kf[d, 1:n] = Kd[:, 1:n] + 0.5 * phi(f) * up
        Kf[d, n] = 1.5 * Kd[:, -1] - 0.5 * Kd[:, -2]

    u = rhs._fill
    if u.any():
        Ku = K[u]
        up = Ku[:, c] - Ku[:, 2:]
        f = limited_ratio(Ku[:, :-2] - Ku[:, c], up)
        Kf[u, 0] = 1.5 * Ku[:, 0] - 0.5 * Ku[:, 1]
        Kf[u, 1:n - 1] = Ku[:, c] + 0.5 * phi(f) * up
        Kf[u, n - 1] = 0.5 * (Ku[:, -1] + Ku[:, -2])
        # last cell obeys the bmax ODE: zero net advective flux
        Kf[u, n] = Kf[u, n - 1]
    return Kf


def face_fluxes(rhs: LimitedRhs, field: np.ndarray) -> np.ndarray:
    """Numerical fluxes ``F_alpha^{j}`` at the ``n + 1`` faces of every state."""
    return rhs._r * face_values(rhs, _as_blocks(rhs, field))


def eval_rhs(rhs: LimitedRhs, field: np.ndarray) -> np.ndarray:
    K = _as_blocks(rhs, field)
    F = rhs._r * face_values(rhs, K)
    dK = (F[:, 1:] - F[:, :-1]) / rhs.grid.dx
    dK += rhs.model.Q @ K
    return dK.ravel()
