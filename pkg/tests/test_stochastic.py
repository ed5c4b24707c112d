import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from ldflows import (LowStatisticsError, SamplePath, SimulationSpec, estimate_escape_rates, langevin_escape_ensemble,
                     make_builtin, make_wiggly, run_ensemble, simulate_jump_ensemble, simulate_jump_process,
                     simulate_langevin_wiggly, simulate_sde, simulate_sde_ensemble, solve_generalized_flow,
                     solve_quadratic_flow)
from ldflows.stochastic import replica_seed


def wide_tilt(g, T=1.0):
    return make_builtin("linear_tilt", g=g, x_min=-50.0, x_max=50.0, T=T)


def test_tilt_mean_drift():
    g, alpha, beta, n = 0.4, 1.0, 1.0, 50
    st_ = simulate_jump_ensemble(wide_tilt(g), n, alpha, beta, 0.0, 1.0, 2000, seed=1)
    mean = st_.final_values.mean()
    se = st_.final_values.std(ddof=1) / math.sqrt(2000)
    assert abs(mean - (-2 * alpha * math.sinh(beta * g))) <= 3 * se


def test_flat_event_count():
    path = simulate_jump_process(wide_tilt(0.0), 100, 1.0, 1.0, 0.0, 1.0, seed=3)
    assert abs(path.event_count - 200) <= 3 * math.sqrt(200)


def test_inter_event_times_exponential():
    n, alpha = 50, 1.0
    path = simulate_jump_process(wide_tilt(0.0, 120.0), n, alpha, 1.0, 0.0, 120.0, seed=4)
    gaps = np.diff(np.concatenate([[0.0], path.times]))[:10_000]
    assert gaps.size == 10_000
    assert stats.kstest(gaps, "expon", args=(0, 1 / (2 * n * alpha))).pvalue > 0.01


def test_direction_frequencies():
    g, beta = 0.3, 1.5
    path = simulate_jump_process(wide_tilt(g, 5.0), 200, 1.0, beta, 0.0, 5.0, seed=5)
    right = int(np.sum(path.directions > 0))
    p = math.exp(-beta * g) / (math.exp(-beta * g) + math.exp(beta * g))
    assert stats.binomtest(right, path.event_count, p).pvalue > 0.01


def test_lln_sup_distance():
    L = make_builtin("quadratic_loading", speed=1.0, x_min=-1.0, x_max=2.0)
    ref = solve_generalized_flow(L, 1.0, 1.0, 0.0, 1.0, tol=1e-10)
    st_ = simulate_jump_ensemble(L, 1000, 1.0, 1.0, 0.0, 1.0, 200, seed=6, reference=ref)
    assert np.mean(st_.sup_distance_samples <= 0.1) >= 0.95


def test_determinism_and_replica_streams():
    L = make_builtin("double_well_loading", x_min=-1.5, x_max=1.5)
    a = simulate_jump_process(L, 40, 1.0, 1.0, 0.0, 1.0, seed=9)
    b = simulate_jump_process(L, 40, 1.0, 1.0, 0.0, 1.0, seed=9)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.directions, b.directions)
    grid = np.linspace(0, 1, 11)
    ens = simulate_jump_ensemble(L, 40, 1.0, 1.0, 0.0, 1.0, 4, seed=9, grid=grid, keep_values=True)
    for r in range(4):
        single = simulate_jump_process(L, 40, 1.0, 1.0, 0.0, 1.0, seed=replica_seed(9, r))
        assert np.array_equal(ens.values[r], single.value_at(grid))


def test_domain_exit_flags():
    L = make_builtin("linear_tilt", g=-2.0, x_min=-0.1, x_max=0.1)
    path = simulate_jump_process(L, 100, 1.0, 1.0, 0.0, 1.0, seed=1)
    assert path.exited and path.exit_time is not None


def test_sde_zero_noise_is_euler():
    L = make_builtin("quadratic_loading", speed=1.0)
    exact = solve_quadratic_flow(L, 1.0, 0.0, 1.0, tol=1e-10).x[-1]
    errs = []
    for dt in (0.01, 0.005):
        p = simulate_sde(L, 1.0, 0.0, 0.0, 1.0, dt, seed=0)
        errs.append(abs(p.values[-1] - exact))
    assert errs[0] < 0.01
    assert errs[1] / errs[0] == pytest.approx(0.5, abs=0.1)


def test_sde_stability_bound():
    L = make_builtin("quadratic_loading", speed=0.0, curvature=10.0)
    with pytest.raises(ValueError):
        simulate_sde(L, 1.0, 0.1, 0.0, 1.0, 0.1, seed=0)


def test_ou_stationary_variance():
    L = make_builtin("quadratic_loading", speed=0.0, x_min=-3.0, x_max=3.0, T=10.0)
    h = 0.05
    st_ = simulate_sde_ensemble(L, 1.0, h, 0.0, 10.0, 0.002, 2000, seed=2)
    assert st_.final_values.var(ddof=1) == pytest.approx(h / 2, rel=0.1)


def test_sde_mean_follows_quadratic_flow():
    L = make_builtin("quadratic_loading", speed=1.0)
    ref = solve_quadratic_flow(L, 1.0, 0.0, 1.0, tol=1e-10)
    st_ = simulate_sde_ensemble(L, 1.0, 0.01, 0.0, 1.0, 0.001, 500, seed=3, every=10)
    assert np.max(np.abs(st_.mean_path.values - ref(st_.grid))) < 0.05


def test_sde_weak_order():
    L = make_builtin("quadratic_loading", speed=0.0, x_min=-3.0, x_max=3.0)
    exact = math.exp(-2.0)
    errs = []
    for dt in (0.04, 0.02, 0.01):
        st_ = simulate_sde_ensemble(L, 1.0, 0.001, 1.0, 1.0, dt, 10000, seed=4)
        errs.append(abs(st_.final_values.mean() - exact))
    for e0, e1 in zip(errs, errs[1:]):
        assert 0.5 / 1.5 <= e1 / e0 <= 0.5 * 1.5


def test_langevin_noiseless_stays_in_cell():
    W = make_wiggly(make_builtin("linear_tilt", g=0.0), 5)
    p = simulate_langevin_wiggly(W, math.inf, 5.0, None, seed=0)
    assert np.max(np.abs(p.values - W.well_center(0))) < 1.0 / 5


def test_langevin_dt_rule():
    W = make_wiggly(make_builtin("linear_tilt", g=0.0), 5)
    with pytest.raises(ValueError):
        simulate_langevin_wiggly(W, 1.0, 1.0, 0.01, seed=0)


def test_flat_escape_symmetry():
    W = make_wiggly(make_builtin("linear_tilt", g=0.0, x_min=-1000, x_max=1000), 1)
    c = langevin_escape_ensemble(W, 3.0, 200.0, 100, seed=8)
    assert stats.binomtest(c.left, c.transitions, 0.5).pvalue > 0.01


def test_tilt_escape_ratio():
    g, beta = 0.2, 4.0
    W = make_wiggly(make_builtin("linear_tilt", g=g, x_min=-1000, x_max=1000), 1)
    left, right = langevin_escape_ensemble(W, beta, 200.0, 200, seed=9).rates()
    assert left / right == pytest.approx(math.exp(2 * beta * g), rel=0.3)


def test_escape_rates_synthetic():
    W = make_wiggly(make_builtin("linear_tilt", g=0.0, x_min=-500, x_max=500), 1)
    t = np.arange(0, 30.0 + 1e-9, 0.01)
    p = SamplePath(t, W.well_center(np.floor(t + 1e-9)))
    assert estimate_escape_rates(p, W) == pytest.approx((0.0, 1.0))
    k = np.floor(t + 1e-9)
    sym = np.where(k % 2 == 0, 0, 1)
    rates = estimate_escape_rates(SamplePath(t, W.well_center(sym)), W)
    assert rates[0] == pytest.approx(rates[1], rel=0.2)
    with pytest.raises(LowStatisticsError):
        estimate_escape_rates(SamplePath(t[:500], W.well_center(np.floor(t[:500]))), W)


def test_run_ensemble_identical_seeds_and_infinite_tube():
    L = make_builtin("double_well_loading", x_min=-1.5, x_max=1.5)
    spec = SimulationSpec("jump", L, {"n": 30, "alpha": 1.0, "beta": 1.0, "x0": 0.0, "T": 1.0})
    same = run_ensemble(spec, 2, None, math.inf, seed=0, seeds=[5, 5])
    assert np.all(same.variance_path == 0.0)
    ref = solve_generalized_flow(L, 1.0, 1.0, 0.0, 1.0)
    st_ = run_ensemble(spec, 20, ref, math.inf, seed=1)
    assert st_.tube_exit_count == 0
    with pytest.raises(ValueError):
        run_ensemble(spec, 1, None, math.inf, seed=0)


def test_run_ensemble_records_failures():
    def bad(seed):
        raise RuntimeError("boom")
    L = make_builtin("linear_tilt", g=0.0)
    good = lambda s: simulate_jump_process(L, 10, 1.0, 1.0, 0.0, 1.0, s)
    calls = [good, bad]
    st_ = run_ensemble(lambda s: calls[int(s.spawn_key[0]) % 2](s), 4, None, math.inf, seed=0)
    assert st_.replica_count == 2
    assert sum(1 for f in st_.flags if f.get("error") == "RuntimeError") == 2


def test_lln_ratio_two_sizes():
    L = make_builtin("quadratic_loading", speed=1.0, x_min=-1.0, x_max=2.0)
    ref = solve_generalized_flow(L, 1.0, 1.0, 0.0, 1.0, tol=1e-10)
    med = [np.median(simulate_jump_ensemble(L, n, 1.0, 1.0, 0.0, 1.0, 200, seed=[7, n],
                                            reference=ref).sup_distance_samples) for n in (250, 1000)]
    assert med[1] / med[0] == pytest.approx(0.5, rel=0.5)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_lattice_values(seed):
    p = simulate_jump_process(wide_tilt(0.2), 7, 1.0, 1.0, 0.0, 0.5, seed)
    pos = p.positions() * 7
    assert np.allclose(pos, np.rint(pos))
    assert np.all(np.abs(np.diff(pos)) == 1)
