"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or directly with ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import math
import subprocess
import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from fluidpass import catalog, limiter3, lst, mesh, timestep, upwind1
from fluidpass import montecarlo as mc
from fluidpass.errors import IllConditioned, NonFinite
from fluidpass.model import stationary
from fluidpass.runner import (RunConfig, compute, discontinuity_windows, interpolate_states,
                              outside_windows)

sys.path.insert(0, str(Path(__file__).parent))
from conftest import random_model  # noqa: E402
from test_upwind1 import dense_oracle  # noqa: E402

RESULTS: list[str] = []

# tolerances
CLOSED_FORM_RTOL = 1e-10
CLOSED_FORM_MAX_SECONDS = 1.0
JUMP_PATHS = 1_000_000
JUMP_MAX_SECONDS = 30.0
MEAN_TARGET, MEAN_TOL = 11.27, 0.1
ORACLE_PATHS = 10_000_000
PDE_HIGH_DX = 0.01
PDE_WINDOW = 0.25
PDE_SUP_TOL = 0.01
AW_MC_TOL = 1e-3
AW_SYNTH_TOL = 1e-7
BOUND_EPS = 1e-8
ORDER_TOL = 0.3
EXPM_TOL = 1e-8
STIFF_FACTOR = 100.0
EX3_PDE_TOL = 0.02
EX3_LST_TOL = 5e-3


def record(num: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    assert ok, line


@lru_cache(maxsize=None)
def example1_oracle_samples() -> np.ndarray:
    return mc.simulate(catalog.example1(), mc.SimConfig(x=5.0, paths=ORACLE_PATHS, seed=2024, t_end=500.0))


def test_c01_closed_form_transform():
    m = catalog.example1()
    start = time.perf_counter()
    pi = stationary(m)
    worst = 0.0
    for w in (0.5, 1.0, 2.0, 1 + 3j, 10.0):
        J = pi @ lst.ktilde(lst.solve(m, w), 5.0)
        ref = catalog.example1_closed_form(5.0, w)
        worst = max(worst, abs(J - ref) / abs(ref))
    took = time.perf_counter() - start
    record(1, "closed-form transform equivalence", worst <= CLOSED_FORM_RTOL and took < CLOSED_FORM_MAX_SECONDS,
           f"max rel err {worst:.2e} <= {CLOSED_FORM_RTOL:g}, {took:.3f} s")


def test_c02_jump_mass():
    m = catalog.example1()
    start = time.perf_counter()
    s = mc.simulate(m, mc.SimConfig(x=5.0, paths=JUMP_PATHS, seed=1))
    took = time.perf_counter() - start
    p = 0.5 * math.exp(-2.5)
    frac = float(np.mean(s == 2.5))
    se = math.sqrt(p * (1 - p) / JUMP_PATHS)
    record(2, "jump mass at t = x/2", abs(frac - p) <= 3 * se and took < JUMP_MAX_SECONDS,
           f"mass {frac:.6f} vs {p:.6f}, |diff| {abs(frac - p):.1e} <= {3 * se:.1e}, {took:.2f} s")


def test_c03_mean_passage():
    s = mc.simulate(catalog.example1(), mc.SimConfig(x=5.0, paths=1_000_000, seed=3, t_end=500.0))
    mean, se = mc.mean_passage(s)
    record(3, "mean passage time", abs(mean - MEAN_TARGET) <= MEAN_TOL,
           f"E[T] = {mean:.4f} +- {se:.4f}, target {MEAN_TARGET} +- {MEAN_TOL}")


def test_c04_pde_vs_oracle():
    m = catalog.example1()
    times = np.round(np.arange(0.0, 20.0 + 1e-9, 0.05), 10)
    ref = mc.empirical_cdf(example1_oracle_samples(), times)
    mask = np.abs(times - 2.5) > PDE_WINDOW
    parts, ok = [], True
    for scheme in ("upwind1-rk4", "limiter3-rk3b"):
        cfg = RunConfig(model=m, scheme=scheme, dx=PDE_HIGH_DX, t_end=20.0, output_times=times, x=[5.0])
        J = compute(cfg).values[5.0][:, 0]
        err = float(np.abs(J - ref.values)[mask].max())
        ok &= err <= PDE_SUP_TOL
        parts.append(f"{scheme} sup err {err:.2e}")
    record(4, "high-resolution PDE vs Monte Carlo", ok,
           ", ".join(parts) + f" <= {PDE_SUP_TOL:g}; DKW band {ref.band:.1e}")


def test_c05_inversion_accuracy():
    times = np.array([5.0, 10.0, 15.0])
    ref = mc.empirical_cdf(example1_oracle_samples(), times).values
    got = np.array([lst.invert_aw(lambda w: catalog.example1_closed_form(5.0, w) / w, t) for t in times])
    err = float(np.abs(got - ref).max())
    synth = abs(lst.invert_aw(lambda w: 1.0 / (w * (w + 1.0)), 2.0) - (1 - math.exp(-2.0)))
    record(5, "Abate-Whitt inversion", err <= AW_MC_TOL and synth <= AW_SYNTH_TOL,
           f"vs MC max err {err:.1e} <= {AW_MC_TOL:g}; synthetic err {synth:.1e} <= {AW_SYNTH_TOL:g}")


def test_c06_operator_oracle():
    rng = np.random.default_rng(6)
    mismatches = 0
    for _ in range(50):
        m = random_model(rng, int(rng.integers(1, 5)), allow_zero=True)
        n = int(rng.integers(3, 9))
        g = mesh.make_space_grid(m, m.bmax / (n - 1), mesh.VERTEX)
        assert g.n == n
        mismatches += not np.array_equal(upwind1.assemble(m, g).A.toarray(), dense_oracle(m, g))
    record(6, "sparse operator equals dense oracle", mismatches == 0, f"{mismatches}/50 mismatching models")


def first_order_rhs(m, g, K):
    """Cell-centered RHS with upstream face values and the scheme's boundary closures."""
    S, n = K.shape
    F = np.empty((S, n + 1))
    for a in range(S):
        r, k = m.rates[a], K[a]
        if r <= 0:
            F[a, 0] = r
            F[a, 1:n] = r * k[:-1]
            F[a, n] = r * (1.5 * k[-1] - 0.5 * k[-2])
        else:
            F[a, 0] = r * (1.5 * k[0] - 0.5 * k[1])
            F[a, 1:n - 1] = r * k[1:-1]
            F[a, n - 1] = r * 0.5 * (k[-1] + k[-2])
            F[a, n] = F[a, n - 1]
    return ((F[:, 1:] - F[:, :-1]) / g.dx + m.Q @ K).ravel()


def test_c07_limiter_properties():
    rng = np.random.default_rng(7)
    f = np.concatenate([rng.normal(0, 3, 5000), rng.uniform(-10, 10, 5000)])
    phi = limiter3.koren_limiter(f)
    neg_ok = bool(np.all(phi[f <= 0] == 0.0))
    pos = f > 0
    pos_ok = bool(np.all((phi[pos] >= 0) & (phi[pos] <= np.minimum(2 * f[pos], 2.0))))
    worst = 0.0
    for _ in range(20):
        m = random_model(rng, int(rng.integers(1, 4)))
        g = mesh.make_space_grid(m, m.bmax / int(rng.integers(4, 9)), mesh.CELL)
        K = rng.random((m.S, g.n))
        rhs = limiter3.LimitedRhs(m, g, limiter=lambda v: np.zeros_like(v))
        a = rhs(K.ravel())
        b = first_order_rhs(m, g, K)
        worst = max(worst, float(np.abs(a - b).max() / max(1.0, np.abs(b).max())))
    record(7, "limiter region and first-order reduction", neg_ok and pos_ok and worst <= 1e-14,
           f"{f.size} samples, phi(f<=0)=0 {neg_ok}, 0<=phi<=min(2f,2) {pos_ok}; reduction err {worst:.1e}")


def _bounds_and_monotone(model, scheme, dx):
    kind = mesh.CELL if scheme == "limiter3-rk3b" else mesh.VERTEX
    g = mesh.make_space_grid(model, dx, kind)
    state = {"lo": 0.0, "hi": 0.0, "drop": 0.0, "prev": None}

    def watch(q, K):
        state["lo"] = min(state["lo"], float(K.min()))
        state["hi"] = max(state["hi"], float(K.max()))
        if state["prev"] is not None:
            state["drop"] = min(state["drop"], float((K - state["prev"]).min()))
        state["prev"] = K.copy()

    timestep.integrate(model, g, scheme, 20.0, output_times=[20.0], on_step=watch)
    bounded = state["lo"] >= -BOUND_EPS and state["hi"] <= 1 + BOUND_EPS
    monotone = state["drop"] >= -BOUND_EPS
    return bounded, monotone, state


def test_c08_positivity_monotonicity():
    ok, parts = True, []
    for name, model in (("ex1", catalog.example1()), ("ex2", catalog.example2())):
        for scheme in ("upwind1-rk4", "limiter3-rk3b"):
            bounded, monotone, st = _bounds_and_monotone(model, scheme, 0.1)
            ok &= bounded and monotone
            parts.append(f"{name}/{scheme}: range [{st['lo']:.1e}, {1 - st['hi']:.1e} below 1], "
                         f"min step change {st['drop']:.1e}")
    record(8, "positivity and monotonicity in time", ok, "; ".join(parts))


def test_c09_convergence_orders():
    A = np.array([[-1.0]])
    k0 = np.array([1.0])

    def err(step, dt):
        k = k0
        for _ in range(int(round(1.0 / dt))):
            k = step(k, dt)
        return abs(k[0] - math.exp(-1.0))

    dts = np.array([0.2, 0.1, 0.05, 0.025])
    rk4 = [err(lambda k, h: timestep.rk4_step(A, k, h), h) for h in dts]
    rk3 = [err(lambda k, h: timestep.rk3b_step(lambda v: A @ v, k, h), h) for h in dts]
    bdf = []
    for h in dts / 2:
        steps = int(round(1.0 / h))
        bdf.append(abs(timestep.bdf2_advance(A, k0, h, steps, record=[steps]).snapshots[-1][0] - math.exp(-1.0)))
    slope = lambda e, d: float(np.polyfit(np.log(d), np.log(e), 1)[0])
    s4, s3, s2 = slope(rk4, dts), slope(rk3, dts), slope(bdf, dts / 2)

    m = catalog.example1()
    g = mesh.make_space_grid(m, 1.0, mesh.VERTEX)
    op = upwind1.assemble(m, g)
    # the CFL step (0.5) leaves an O(1e-2) local error; the trajectory check uses a refined step
    traj = timestep.integrate(m, g, "upwind1-rk4", 1.0, dt=0.01)
    dev = float(np.abs(traj.snapshots[-1] - timestep.expm_reference(op, upwind1.initial_field(m, g), 1.0)).max())
    ok = abs(s4 - 4) <= ORDER_TOL and abs(s3 - 3) <= ORDER_TOL and abs(s2 - 2) <= ORDER_TOL and dev <= EXPM_TOL
    record(9, "convergence orders and expm agreement", ok,
           f"slopes RK4 {s4:.2f}, RK3b {s3:.2f}, BDF2 {s2:.2f}; RK4 vs expm (n={g.n}) {dev:.1e}")


def test_c10_stiff_stability():
    m = catalog.stiff_pair()
    g = mesh.make_space_grid(m, 0.5, mesh.VERTEX)
    dt = STIFF_FACTOR * mesh.cfl_dt(m, g, "rk4")
    traj = timestep.integrate(m, g, "upwind1-bdf2", 200.0, dt=dt)
    peak = float(np.abs(traj.snapshots).max())
    bdf_ok = bool(np.isfinite(traj.snapshots).all()) and peak <= 1.05
    try:
        timestep.integrate(m, g, "upwind1-rk4", 200.0, dt=dt)
        rk4_diverged = False
    except NonFinite:
        rk4_diverged = True
    record(10, "stiff stability", bdf_ok and rk4_diverged,
           f"BDF2 at {STIFF_FACTOR:g}x CFL max |K| {peak:.4f}; RK4 NonFinite raised {rk4_diverged}")


def test_c11_example3_desk_scale():
    m = catalog.example3(20)
    times = np.round(np.arange(0.0, 5.0 + 1e-9, 0.02), 10)
    base = dict(model=m, t_end=5.0, output_times=times, x=[5.0], mc_paths=1_000_000, mc_seed=11)
    ref = compute(RunConfig(scheme="mc", **base)).values[5.0][:, 0]
    ok, parts = True, []
    for scheme, dx in (("upwind1-rk4", 0.05), ("limiter3-rk3b", 0.1)):
        cfg = RunConfig(scheme=scheme, dx=dx, **base)
        J = compute(cfg).values[5.0][:, 0]
        jumps, half = discontinuity_windows(cfg, 5.0)
        mask = outside_windows(times, jumps, half)
        e = float(np.abs(J - ref)[mask].max())
        ok &= e <= EX3_PDE_TOL
        parts.append(f"{scheme} dx={dx} sup err {e:.1e}")
    cfg = RunConfig(scheme="lst-aw", dx=0.05, **base)
    try:
        J = compute(cfg).values[5.0][:, 0]
        jumps, half = discontinuity_windows(cfg, 5.0)
        e = float(np.abs(J - ref)[outside_windows(times, jumps, half)].max())
        ok &= e <= EX3_LST_TOL
        parts.append(f"lst-aw sup err {e:.1e}")
    except IllConditioned as exc:
        parts.append(f"lst-aw IllConditioned: {exc}")
    record(11, "desk-scale ring model (S=20)", ok, "; ".join(parts))


def test_c12_timing_order():
    m = catalog.example1()
    times = np.round(np.arange(0.0, 20.0 + 1e-9, 0.1), 10)

    def run(scheme):
        kind = mesh.CELL if scheme == "limiter3-rk3b" else mesh.VERTEX
        g = mesh.make_space_grid(m, 0.1, kind)
        best = math.inf
        for _ in range(3):
            start = time.perf_counter()
            traj = timestep.integrate(m, g, scheme, 20.0, times)
            interpolate_states(m, g, traj.snapshots, 5.0)
            best = min(best, time.perf_counter() - start)
        return best

    t4, t3 = run("upwind1-rk4"), run("limiter3-rk3b")
    record(12, "RK4 faster than RK3b at low resolution", t4 < t3, f"RK4 {t4:.3f} s, RK3b {t3:.3f} s")


def test_c13_cli_determinism(tmp_path):
    import json
    cfg = {"model": catalog.example1().to_dict(), "scheme": "mc", "x": [5.0], "t_end": 20.0,
           "output_times": 0.1, "mc_paths": 200_000, "mc_seed": 13}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    outs = []
    for run in ("a", "b"):
        subprocess.run([sys.executable, "-m", "fluidpass", "run", "--config", str(tmp_path / "cfg.json"),
                        "--output", str(tmp_path / run)], check=True, capture_output=True)
        outs.append((tmp_path / run / "mc_x5.csv").read_bytes())
    record(13, "bitwise-identical CLI reruns", outs[0] == outs[1] and len(outs[0]) > 0,
           f"{len(outs[0])} bytes each")


if __name__ == "__main__":
    import tempfile
    failed = 0
    for name, fn in sorted((k, v) for k, v in dict(globals()).items() if k.startswith("test_c")):
        try:
            if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(Path(d))
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
