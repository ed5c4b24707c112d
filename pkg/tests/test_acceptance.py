"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line with the measured values,
the tolerance and the wall time against its budget. The lines are also
collected into the ``acceptance criteria`` section of the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from ldflows import (action_J_alpha_beta, action_J_RI, cosh_family, jump_cost_delta, lagrangian, langevin_escape_ensemble,
                     legendre, make_builtin, make_wiggly, mosco_quadratic_experiment, mosco_ri_experiment,
                     SampledCurve, shifted_reference, solve_generalized_flow, solve_rate_independent,
                     vanishing_viscosity_family, bridge_experiment, ldp_tube_experiment, lln_experiment)


def report(number, name, passed, detail, elapsed, budget):
    in_time = elapsed < budget
    ok = bool(passed and in_time)
    line = (f"[{'PASS' if ok else 'FAIL'}] {number:>2} {name}: {detail}; "
            f"runtime {elapsed:.1f} s (budget {budget:g} s{'' if in_time else ', EXCEEDED'})")
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_01_duality():
    t0 = time.perf_counter()
    vs = np.linspace(-10.0, 10.0, 41)
    grid = np.logspace(-1, 1, 5)
    worst = 0.0
    for a in grid:
        for b in grid:
            for fam in (cosh_family(b, alpha=a), vanishing_viscosity_family(b, threshold=a)):
                for v in vs:
                    num = legendre(lambda w: float(fam.psi_star(w)), float(v))
                    worst = max(worst, abs(num - float(fam.psi(v))))
    report(1, "duality", worst <= 1e-8, f"max |psi_num - psi| = {worst:.2e} (tol 1e-8) over 2x5x5x41 points",
           time.perf_counter() - t0, 5)


def test_02_lagrangian_identity():
    t0 = time.perf_counter()
    L = make_builtin("double_well_loading")
    rng = np.random.default_rng(2)
    pairs, per = 25, 400
    worst = 0.0
    for _ in range(pairs):
        a, b = math.exp(rng.uniform(-2, 2)), math.exp(rng.uniform(-2, 2))
        fam = cosh_family(b, alpha=a)
        x, t = rng.uniform(-1.9, 1.9, per), rng.uniform(0.0, 1.0, per)
        v = rng.uniform(-10.0, 10.0, per)
        g = L.gradient(x, t)
        lhs = lagrangian(x, v, t, L, a, b)
        rhs = b * (fam.psi(v) + fam.psi_star(-g) + v * g)
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs)))))
    report(2, "Lagrangian identity", worst <= 1e-10,
           f"max |L - beta(psi + psi* + v dE)| / max(1, |L|) = {worst:.2e} (tol 1e-10), "
           f"{pairs * per} samples over {pairs} random (alpha, beta)", time.perf_counter() - t0, 1)


def test_03_zero_set():
    t0 = time.perf_counter()
    L = make_builtin("quadratic_loading", speed=1.0)
    tol, T = 1e-8, 1.0
    values = []
    for a, b in [(1.0, 1.0), (10.0, 0.1), (math.exp(-50.0), 50.0)]:
        curve = solve_generalized_flow(L, a, b, 0.0, T, tol)
        values.append(action_J_alpha_beta(curve, L, a, b).total)
    worst = max(abs(v) for v in values)
    report(3, "zero set", worst <= 10 * tol * T,
           f"J of sinh-flow solutions = {', '.join(f'{v:.1e}' for v in values)} (tol {10 * tol * T:.0e})",
           time.perf_counter() - t0, 10)


def test_04_lln_trend():
    t0 = time.perf_counter()
    L = make_builtin("quadratic_loading", speed=1.0, x_min=-1.0, x_max=2.0)
    tab = lln_experiment(L, [250, 1000, 4000], 1.0, 1.0, 200, seed=4)
    med = tab.column("median_sup_distance")
    ratios = med[1:] / med[:-1]
    ok = bool(np.all(np.diff(med) < 0) and np.all((ratios >= 1 / 3) & (ratios <= 2 / 3)))
    report(4, "LLN trend", ok,
           f"median sup-distance {', '.join(f'{m:.4f}' for m in med)} at n = 250, 1000, 4000; "
           f"ratios {', '.join(f'{r:.3f}' for r in ratios)} (need [0.333, 0.667])",
           time.perf_counter() - t0, 120)


def test_05_quadratic_mosco():
    t0 = time.perf_counter()
    L = make_builtin("double_well_loading")
    t = np.linspace(0.0, 1.0, 2001)
    curve = SampledCurve(t, 0.3 * np.sin(2 * np.pi * t) + 0.2 * t)
    tab = mosco_quadratic_experiment(L, curve, 1.0, [1.0, 0.1, 0.01])
    gaps, ref = tab.column("abs_gap"), tab.rows[0]["reference"]
    ok = bool(np.all(np.diff(gaps) < 0) and gaps[-1] <= 0.01 * ref)
    report(5, "quadratic Mosco", ok,
           f"|J_beta - J_Q| = {', '.join(f'{g:.2e}' for g in gaps)} at beta = 1, 0.1, 0.01; "
           f"final/J_Q = {gaps[-1] / ref:.1e} (tol 1e-2)", time.perf_counter() - t0, 5)


def test_06_bridge_variance():
    t0 = time.perf_counter()
    L = make_builtin("quadratic_loading", speed=0.0, x_min=-1.0, x_max=1.0, T=3.0)
    h = 0.02
    tab = bridge_experiment(L, [2000], 1.0, 1.0, h, 500, seed=6, window=(1.5, 3.0), sde_dt=0.001)
    row = tab.rows[0]
    vx, vy = row["var_window"], row["sde_var_window"]
    ex, ey = abs(vx / (h / 2) - 1), abs(vy / (h / 2) - 1)
    report(6, "bridge variance", ex <= 0.15 and ey <= 0.15,
           f"stationary variance X^n {vx:.5f} ({ex:.1%} off), Y^h {vy:.5f} ({ey:.1%} off), target h/2 = {h / 2} "
           f"(tol 15%)", time.perf_counter() - t0, 180)


def test_07_ri_recovery():
    t0 = time.perf_counter()
    scenarios = {
        "play": (make_builtin("quadratic_loading", speed=2.0, x_min=-3.0, x_max=3.0), 1.0, 0.0),
        "double well jump": (make_builtin("double_well_loading", stiffness=0.5, tilt0=-0.2, tilt_rate=0.8),
                             0.2, -1.0),
    }
    ok, parts = True, []
    for name, (L, A, x0) in scenarios.items():
        bv = solve_rate_independent(L, A, x0, 1.0)
        tab = mosco_ri_experiment(L, bv, cosh_family(1.0, threshold=A), [100.0, 1000.0])
        gaps = tab.column("gap")
        ok &= bool(np.all(gaps > -1e-6) and gaps[1] < gaps[0])
        parts.append(f"{name} ({len(bv.jumps)} jumps) gap {gaps[0]:.2e} -> {gaps[1]:.2e}")
    report(7, "RI recovery", ok, "; ".join(parts) + " at beta = 100, 1000", time.perf_counter() - t0, 60)


def test_08_jump_cost():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst, slack = 0.0, math.inf
    for _ in range(20):
        L = make_builtin("double_well_loading", tilt0=rng.uniform(-0.5, 0.5), tilt_rate=0.0)
        x0, x1 = rng.uniform(-1.8, 1.8, 2)
        A = rng.uniform(0.05, 1.0)
        closed = jump_cost_delta(x0, x1, 0.0, L, A)
        brute = jump_cost_delta(x0, x1, 0.0, L, A, mode="brute_force")
        worst = max(worst, abs(closed - brute))
        slack = min(slack, closed - A * abs(x1 - x0))
    report(8, "jump cost", worst <= 1e-6 and slack >= 0,
           f"max |closed - brute force| = {worst:.1e} (tol 1e-6); min(Delta - A|x1-x0|) = {slack:.2e}",
           time.perf_counter() - t0, 30)


def test_09_ri_balance():
    t0 = time.perf_counter()
    cyclic = make_builtin("quadratic_loading", loading=lambda t: 1.5 * np.sin(2 * np.pi * np.asarray(t)),
                          loading_rate=lambda t: 3 * np.pi * np.cos(2 * np.pi * np.asarray(t)),
                          x_min=-3.0, x_max=3.0, T=2.0)
    scenarios = {
        "monotone loading": (make_builtin("quadratic_loading", speed=2.0, x_min=-3.0, x_max=3.0), 1.0, 0.0, 1.0),
        "double well": (make_builtin("double_well_loading", stiffness=0.5, tilt0=-0.2, tilt_rate=0.8), 0.2, -1.0, 1.0),
        "cyclic loading": (cyclic, 0.5, 0.0, 2.0),
    }
    values = {}
    for name, (L, A, x0, T) in scenarios.items():
        values[name] = action_J_RI(solve_rate_independent(L, A, x0, T), L, A).total
    worst = max(abs(v) for v in values.values())
    report(9, "RI energy balance", worst <= 1e-3,
           ", ".join(f"{k} {v:.1e}" for k, v in values.items()) + " (tol 1e-3)", time.perf_counter() - t0, 30)


@pytest.mark.slow
def test_10_kramers_slope():
    t0 = time.perf_counter()
    W = make_wiggly(make_builtin("linear_tilt", g=0.0, x_min=-1000.0, x_max=1000.0), 1)
    betas = np.array([4.0, 6.0, 8.0])
    rates = []
    for i, b in enumerate(betas):
        counts = langevin_escape_ensemble(W, b, 2000.0, 1000, seed=[10, i])
        rates.append(counts.transitions / counts.exposure)
    slope = np.polyfit(-betas, np.log(rates), 1)[0]
    err = abs(slope / W.wiggle_amplitude - 1)
    report(10, "Kramers slope", err <= 0.15,
           f"slope of log rate on -beta = {slope:.3f} vs barrier {W.wiggle_amplitude} ({err:.1%} off, tol 15%)",
           time.perf_counter() - t0, 1800)


def test_11_ldp_tube():
    t0 = time.perf_counter()
    L = make_builtin("quadratic_loading", speed=1.0, x_min=-1.5, x_max=3.0)
    alpha, beta, r, x0 = 0.2, 1.0, 0.3, 0.0
    ref = shifted_reference(L, alpha, beta, x0, 1.0, 2 * r)
    tab = ldp_tube_experiment(L, [20, 40], alpha, beta, ref, r, 200_000, seed=11, x0=x0)
    rows = [row for row in tab.rows if not row["low_statistics"]]
    rates = [row["rate"] for row in rows]
    ratios = [row["ratio_to_bound"] for row in rows]
    trend = all(b >= a for a, b in zip(rates, rates[1:]))
    within = all(1 / 3 <= q <= 3 for q in ratios)
    flagged = [row["n"] for row in tab.rows if row["low_statistics"]]
    detail = (f"rates {', '.join(f'{q:.3f}' for q in rates)} at n = {', '.join(str(row['n']) for row in rows)} "
              f"({'nondecreasing' if trend else 'DECREASING'}); bound {tab.rows[0]['action_bound']:.3f}; "
              f"ratios {', '.join(f'{q:.2f}' for q in ratios)} (need within 3x); "
              f"stays {', '.join(str(row['stays']) for row in tab.rows)}; low-statistics rows {flagged or 'none'}")
    report(11, "LDP tube", trend and within and len(rows) >= 2, detail, time.perf_counter() - t0, 600)
