"""Benchmark models used in the examples, tests and ``fluidpass bench``."""
from __future__ import annotations

import numpy as np

from .model import FluidModel, drift, stationary, validate

EXAMPLE3_SEED = 20200801


def example1() -> FluidModel:
    """Two states, rates (1, -2), capacity 10."""
    return validate([[-1.0, 1.0], [1.0, -1.0]], [1.0, -2.0], 10.0)


def example2() -> FluidModel:
    """Five fully connected states with rates (4, 2, -1, -2, 3)."""
    Q = (np.ones((5, 5)) - 5.0 * np.eye(5)) / 10.0
    return validate(Q, [4.0, 2.0, -1.0, -2.0, 3.0], 10.0)


def sample_rates(S: int, seed: int = EXAMPLE3_SEED, mean: float = -50.0, sd: float = 100.0) -> np.ndarray:
    """Normal rates, redrawn until their mean (the drift under a uniform stationary law) is negative."""
    rng = np.random.default_rng(seed)
    while True:
        r = rng.normal(mean, sd, S)
        if r.mean() < 0 and np.all(r != 0):
            return r


def ring_generator(S: int) -> np.ndarray:
    """Periodic birth-death generator: rate 1/2 to each neighbour on a ring."""
    Q = -np.eye(S)
    for a in range(S):
        Q[a, (a + 1) % S] += 0.5
        Q[a, (a - 1) % S] += 0.5
    return Q


def example3(S: int = 20, seed: int = EXAMPLE3_SEED) -> FluidModel:
    """Ring birth-death chain with random rates and negative drift."""
    m = validate(ring_generator(S), sample_rates(S, seed), 10.0)
    assert drift(m, stationary(m)) < 0
    return m


def example4(S: int = 20, seed: int = EXAMPLE3_SEED) -> FluidModel:
    """Fully connected uniform chain with the rates of :func:`example3`."""
    Q = np.full((S, S), 1.0 / S)
    np.fill_diagonal(Q, -(S - 1) / S)
    return validate(Q, sample_rates(S, seed), 10.0)


def stiff_pair() -> FluidModel:
    """Two draining states whose speeds differ by four orders of magnitude."""
    return validate([[-1.0, 1.0], [1.0, -1.0]], [-1e-2, -1e2], 10.0)


EXAMPLES = {"example1": example1, "example2": example2, "example3": example3, "example4": example4}


def example1_closed_form(x: float, w):
    """Closed-form transform ``E[exp(-w T)]`` of :func:`example1` from stationarity."""
    w = np.asarray(w, dtype=complex)
    rw = np.sqrt(9.0 * w * w + 18.0 * w + 1.0)
    # numerator and denominator divided by exp(5 rw) so nothing overflows
    em = np.exp(-5.0 * rw)
    num = (w / 2.0 + 1.0) * np.exp(0.25 * x * (-rw + w + 1.0)) * (
        (rw - 3.0 * w - 1.0) * np.exp((0.5 * x - 5.0) * rw) + (rw + 3.0 * w + 1.0))
    den = (w + 1.0) * (1.0 + em) * rw - (3.0 * w * w + 6.0 * w + 1.0) * (em - 1.0)
    return num / den
