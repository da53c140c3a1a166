"""Markov-modulated fluid queue model.

A model is the triple (generator ``Q``, net rates ``r``, buffer capacity
``bmax``).  Internally states are kept in canonical order, sorted by
descending rate, and :meth:`FluidModel.to_original` maps per-state results
back to the order the user supplied.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, NoDrainingState, NonGenerator, NonPositiveBuffer, Reducible

GENERATOR_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FluidModel:
    """Validated fluid model in canonical (descending-rate) state order.

    Attributes
    ----------
    Q : ndarray, shape (S, S)
        Generator of the background chain.
    rates : ndarray, shape (S,)
        Net input rates, nonincreasing.
    bmax : float
        Buffer capacity.
    perm : ndarray of int, shape (S,)
        ``perm[i]`` is the user-facing index of canonical state ``i``.
    """

    Q: np.ndarray
    rates: np.ndarray
    bmax: float
    perm: np.ndarray = field(repr=False)

    @property
    def S(self) -> int:
        return len(self.rates)

    @property
    def n_positive(self) -> int:
        return int(np.sum(self.rates > 0))

    @property
    def n_negative(self) -> int:
        return int(np.sum(self.rates < 0))

    def to_original(self, values: np.ndarray, axis: int = -1) -> np.ndarray:
        """Reorder a per-state array from canonical to user order along ``axis``."""
        values = np.asarray(values)
        out = np.empty_like(values)
        idx = [slice(None)] * values.ndim
        idx[axis] = self.perm
        out[tuple(idx)] = values
        return out

    def original_index(self, alpha: int) -> int:
        """Canonical index of user-facing state ``alpha``."""
        return int(np.flatnonzero(self.perm == alpha)[0])

    def to_dict(self) -> dict:
        Q = np.empty_like(self.Q)
        Q[np.ix_(self.perm, self.perm)] = self.Q
        return {"Q": Q.tolist(), "rates": self.to_original(self.rates).tolist(), "bmax": self.bmax}


def validate(Q, rates=None, bmax=None) -> FluidModel:
    """Check a raw model and return it in canonical state order.

    ``validate(model)`` with an already validated model is a no-op up to
    object identity.
    """
    if isinstance(Q, FluidModel):
        model = Q
        Q, rates, bmax, perm0 = model.Q, model.rates, model.bmax, model.perm
    else:
        perm0 = None
    Q = np.array(Q, dtype=float, ndmin=2)
    rates = np.array(rates, dtype=float, ndmin=1)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise DimensionMismatch(f"generator must be square, got shape {Q.shape}")
    if rates.ndim != 1 or len(rates) != Q.shape[0]:
        raise DimensionMismatch(f"{len(rates)} rates for a {Q.shape[0]}-state generator")
    if Q.shape[0] < 1:
        raise DimensionMismatch("model needs at least one state")
    if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(rates))):
        raise NonGenerator("non-finite entries in Q or rates")
    if bmax is None or not np.isfinite(bmax) or bmax <= 0:
        raise NonPositiveBuffer(f"buffer capacity must be positive, got {bmax}")

    off = Q - np.diag(np.diag(Q))
    if np.any(off < 0):
        raise NonGenerator("negative off-diagonal entry in Q")
    if np.any(np.diag(Q) > 0):
        raise NonGenerator("positive diagonal entry in Q")
    row_sums = Q.sum(axis=1)
    if np.max(np.abs(row_sums)) > GENERATOR_TOL:
        raise NonGenerator(f"row sums of Q must vanish, max |sum| = {np.max(np.abs(row_sums)):.3e}")

    order = np.argsort(-rates, kind="stable")
    perm = order if perm0 is None else perm0[order]
    Qc = Q[np.ix_(order, order)]
    rc = rates[order]
    Qc.flags.writeable = False
    rc.flags.writeable = False
    perm.flags.writeable = False
    return FluidModel(Q=Qc, rates=rc, bmax=float(bmax), perm=perm)


def from_dict(obj: dict) -> FluidModel:
    """Build a model from the JSON object ``{"Q": ..., "rates": ..., "bmax": ...}``."""
    try:
        return validate(obj["Q"], obj["rates"], obj["bmax"])
    except KeyError as exc:
        raise DimensionMismatch(f"model object lacks key {exc}") from None


def load(path) -> FluidModel:
    return from_dict(json.loads(Path(path).read_text()))


def stationary(model: FluidModel) -> np.ndarray:
    """Stationary distribution ``pi`` with ``pi Q = 0`` and ``sum(pi) = 1``.

    One balance equation is replaced by the normalisation condition.
    """
    S = model.S
    if S == 1:
        return np.ones(1)
    if np.linalg.matrix_rank(model.Q) < S - 1:
        raise Reducible("generator has more than one stationary direction")
    A = model.Q.T.copy()
    A[-1, :] = 1.0
    b = np.zeros(S)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    # roundoff can leave tiny negatives on near-transient states
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def drift(model: FluidModel, pi: np.ndarray | None = None) -> float:
    if pi is None:
        pi = stationary(model)
    return float(np.dot(pi, model.rates))


def _slowest_drain(model: FluidModel) -> float:
    r_min = model.rates[-1]
    if r_min >= 0:
        raise NoDrainingState("no state has a negative net rate")
    return r_min


def earliest_hit_time(model: FluidModel, x: float) -> float:
    """Smallest attainable passage time from level ``x``: ``-x / r_S``."""
    return -x / _slowest_drain(model)


def jump_mass_at_tmin(model: FluidModel, pi: np.ndarray, x: float) -> float:
    """Probability of starting in the fastest-draining state and never leaving it before empty."""
    r_min = _slowest_drain(model)
    return float(pi[-1] * np.exp(-model.Q[-1, -1] * x / r_min))


def discontinuity_times(model: FluidModel, x: float) -> np.ndarray:
    """Direct-drain times ``x/|r|`` for every draining state, sorted."""
    neg = model.rates[model.rates < 0]
    return np.unique(x / np.abs(neg))
