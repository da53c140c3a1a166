"""Laplace-Stieltjes transform of the passage-time distribution and its inversion.

For a complex frequency ``w`` the transform ``Kt(x, w) = E[exp(-w T) | x, alpha]``
is a combination of exponential modes ``exp(s_k x) Phi^k`` solving
``(Q + s R - w I) Phi = 0``.  The mode weights follow from the boundary
conditions at ``x = 0`` (draining states hit immediately) and at ``bmax``
(filling states wait for a switch).  Time-domain values come from
Abate-Whitt Euler inversion of ``Kt(x, w) / w``.
"""
from __future__ import annotations

import logging
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import (DefectiveWarning, EigFailure, IllConditioned, NoDrainingState, NonPositiveTime,
                     ZeroRate)
from .model import FluidModel, stationary
from .montecarlo import PassageCdf

log = logging.getLogger(__name__)

EIGVEC_COND_LIMIT = 1e12
COND_LIMIT = 1.0 / (64.0 * np.finfo(float).eps)

# Euler summation defaults
AW_A = 18.4
AW_N = 15
AW_M = 11


@dataclass(frozen=True, eq=False)
class LstSystem:
    """Solved transform system at one frequency.

    ``coef`` holds the mode weights with growing modes (``Re s_k > 0``)
    pre-multiplied by ``exp(s_k bmax)``; see :meth:`atilde` for the raw ones.
    """

    w: complex
    s: np.ndarray
    Phi: np.ndarray
    M: np.ndarray
    coef: np.ndarray
    growing: np.ndarray
    bmax: float
    cond: float
    residual: float

    @property
    def atilde(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.where(self.growing, self.coef * np.exp(-self.s * self.bmax), self.coef)


def _require_nonzero_rates(model: FluidModel) -> None:
    if np.any(model.rates == 0):
        raise ZeroRate("transform method needs every rate to be nonzero")
    if model.n_negative == 0:
        raise NoDrainingState("no draining state: the buffer never empties")


def eigensystem(model: FluidModel, w: complex) -> tuple[np.ndarray, np.ndarray]:
    """Roots ``s_k`` and eigenvectors of ``(Q + s R - w I) Phi = 0``.

    Roots are the eigenvalues of ``R^{-1} (w I - Q)``, sorted by real part
    and then imaginary part.
    """
    _require_nonzero_rates(model)
    S = model.S
    T = (w * np.eye(S) - model.Q) / model.rates[:, None]
    try:
        s, Phi = scipy.linalg.eig(T)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigFailure(f"eigensolver failed at w={w}: {exc}") from None
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(Phi))):
        raise EigFailure(f"non-finite eigenpairs at w={w}")
    order = np.lexsort((s.imag, s.real))
    s, Phi = s[order], Phi[:, order]
    if np.linalg.cond(Phi) > EIGVEC_COND_LIMIT:
        warnings.warn(f"nearly defective eigenvector matrix at w={w}", DefectiveWarning, stacklevel=2)
    return s, Phi


def boundary_matrix(model: FluidModel, w: complex) -> np.ndarray:
    """``M(w)``: rows of the reflecting condition at ``bmax`` for filling states."""
    Sp = model.n_positive
    Q = model.Q
    M = np.empty((Sp, model.S), dtype=complex)
    for a in range(Sp):
        M[a] = Q[a] / (Q[a, a] - w)
        M[a, a] = 1.0
    return M


def boundary_system(model: FluidModel, s: np.ndarray, Phi: np.ndarray, w: complex) -> LstSystem:
    """Solve for the mode weights.

    Top block ``M Phi diag(exp(s bmax))`` (filling states, zero right-hand
    side), bottom block ``Phi_-`` (draining states, unit right-hand side).
    Growing modes are rescaled so no exponential exceeds one in modulus.
    """
    Sp, S, B = model.n_positive, model.S, model.bmax
    M = boundary_matrix(model, w)
    growing = s.real > 0
    with np.errstate(over="ignore", under="ignore"):
        top_scale = np.where(growing, 1.0, np.exp(s * B))
        bot_scale = np.where(growing, np.exp(-s * B), 1.0)
    G = np.vstack([(M @ Phi) * top_scale, Phi[Sp:] * bot_scale])
    rhs = np.concatenate([np.zeros(Sp), np.ones(S - Sp)]).astype(complex)

    cond = float(np.linalg.cond(G))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        spread = np.abs(s * B)
        raise IllConditioned(
            f"boundary system at w={w} has condition {cond:.3e} > {COND_LIMIT:.3e}; "
            f"|s_k bmax| ranges over [{spread.min():.3e}, {spread.max():.3e}]")
    coef = np.linalg.solve(G, rhs)
    res = np.linalg.norm(G @ coef - rhs) / (np.linalg.norm(G) * np.linalg.norm(coef) + np.linalg.norm(rhs))
    return LstSystem(w=complex(w), s=s, Phi=Phi, M=M, coef=coef, growing=growing, bmax=B,
                     cond=cond, residual=float(res))


def solve(model: FluidModel, w: complex) -> LstSystem:
    s, Phi = eigensystem(model, w)
    return boundary_system(model, s, Phi, w)


def ktilde(sys: LstSystem, x: float) -> np.ndarray:
    """Per-state transform ``Kt_alpha(x, w)`` in canonical state order."""
    with np.errstate(under="ignore"):
        e = np.exp(sys.s * np.where(sys.growing, x - sys.bmax, x))
    return sys.Phi @ (e * sys.coef)


def transform(model: FluidModel, x: float, w: complex, weights: np.ndarray | None = None):
    """``Kt(x, w)`` per state, or ``weights . Kt`` when weights are given."""
    K = ktilde(solve(model, w), x)
    return K if weights is None else weights @ K


def aw_nodes(t: float, A: float = AW_A, n: int = AW_N, m: int = AW_M) -> np.ndarray:
    """Bromwich-contour nodes ``(A + 2 k pi i) / (2 t)``, ``k = 0 .. n + m``."""
    if not t > 0:
        raise NonPositiveTime(f"inversion needs t > 0, got {t}")
    k = np.arange(n + m + 1)
    return (A + 2j * np.pi * k) / (2.0 * t)


def aw_combine(values: np.ndarray, t: float, A: float = AW_A, n: int = AW_N, m: int = AW_M) -> float:
    """Euler-accelerated Fourier series from transform values at :func:`aw_nodes`."""
    terms = np.real(values).astype(float)
    terms[0] *= 0.5
    terms[1::2] *= -1.0
    partial = np.cumsum(terms)
    weights = np.array([comb(m, j) for j in range(m + 1)], dtype=float) / 2.0 ** m
    return float(np.exp(A / 2.0) / t * (weights @ partial[n:n + m + 1]))


def invert_aw(F: Callable[[complex], complex], t: float, A: float = AW_A, n: int = AW_N,
              m: int = AW_M) -> float:
    """Invert an ordinary Laplace transform ``F`` at time ``t`` (Abate-Whitt Euler)."""
    nodes = aw_nodes(t, A, n, m)
    return aw_combine(np.array([F(w) for w in nodes]), t, A, n, m)


def _workers() -> int:
    env = os.environ.get("FLUIDPASS_THREADS")
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def passage_cdf_lst(model: FluidModel, x: float, times: Sequence[float], per_state: bool = False,
                    A: float = AW_A, n: int = AW_N, m: int = AW_M) -> PassageCdf:
    """Passage-time CDF at level ``x`` by transform inversion.

    Returns ``J(x, t) = sum_alpha pi_alpha K_alpha(x, t)`` or, with
    ``per_state``, the matrix of ``K_alpha`` in the user's state order.
    ``t = 0`` is filled in exactly (only ``x = 0`` draining states have hit).
    """
    _require_nonzero_rates(model)
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise NonPositiveTime("negative output time")
    pi = stationary(model)
    S = model.S
    conds: list[float] = []

    def at_time(t: float) -> np.ndarray:
        if t == 0:
            return np.where(model.rates < 0, 1.0, 0.0) if x == 0 else np.zeros(S)
        vals = []
        for w in aw_nodes(t, A, n, m):
            sys = solve(model, w)
            conds.append(sys.cond)
            vals.append(ktilde(sys, x) / w)
        vals = np.array(vals)
        return np.array([aw_combine(vals[:, a], t, A, n, m) for a in range(S)])

    workers = min(_workers(), max(1, len(times)))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            K = np.array(list(ex.map(at_time, times)))
    else:
        K = np.array([at_time(t) for t in times])
    K = K.reshape(len(times), S)
    info = {"max_condition": max(conds) if conds else 1.0, "evaluations": len(conds)}
    if per_state:
        return PassageCdf(times, model.to_original(K, axis=1), info=info)
    return PassageCdf(times, K @ pi, info=info)
