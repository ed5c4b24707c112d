import math

import numpy as np
import pytest

from ldflows import (BVCurve, DegeneratePlateauError, FloatRangeError, Jump, SampledCurve, action_J_beta, action_J_RI,
                     bridge_experiment, build_recovery_sequence, cosh_family, lagrangian_integral,
                     ldp_tube_experiment, lln_experiment, make_builtin, mosco_quadratic_experiment,
                     mosco_ri_experiment, reparametrize, solve_generalized_flow, solve_quadratic_flow,
                     solve_rate_independent, variation)
from ldflows.convergence import InadmissibleCurveError


@pytest.fixture(scope="module")
def play():
    L = make_builtin("quadratic_loading", speed=2.0, x_min=-3.0, x_max=3.0)
    return L, solve_rate_independent(L, 1.0, 0.0, 1.0)


@pytest.fixture(scope="module")
def well_jump():
    L = make_builtin("double_well_loading", stiffness=0.5, tilt0=-0.2, tilt_rate=0.8)
    return L, solve_rate_independent(L, 0.2, -1.0, 1.0)


def test_reparametrize_smooth_curve():
    L = make_builtin("linear_tilt", g=0.1)
    t = np.linspace(0, 1, 101)
    c = BVCurve(t, 0.3 * np.sin(2 * np.pi * t))
    pc = reparametrize(c, L, 0.5)
    assert pc.S == pytest.approx(1.0 + 0.5 * c.total_variation, abs=1e-12)
    assert np.all(np.diff(pc.t) > 0)
    assert np.allclose(pc.x_of_s(pc.node_s), c.x, atol=1e-8)


def test_reparametrize_pure_jump():
    L = make_builtin("linear_tilt", g=0.1)
    c = BVCurve([0.0, 0.5, 1.0], [0.0, 0.0, 1.0], [Jump(0.5, 0.0, 0.0, 1.0)])
    pc = reparametrize(c, L, 0.4)
    (i0, i1), = pc.jump_slices
    assert pc.s[i1] - pc.s[i0] == pytest.approx(0.4, rel=1e-12)
    assert np.all(pc.t[i0:i1 + 1] == 0.5)


def test_reparametrize_rejects_inadmissible():
    L = make_builtin("linear_tilt", g=2.0)
    with pytest.raises(InadmissibleCurveError):
        reparametrize(BVCurve([0.0, 1.0], [0.0, 0.0]), L, 1.0)


def test_play_lagrangian_integral(play):
    L, bv = play
    pc = reparametrize(bv, L, 1.0)
    assert lagrangian_integral(pc, L) == pytest.approx(1.0 * variation(bv)[0], abs=1e-6)
    assert pc.S == pytest.approx(1.0 + variation(bv)[0], abs=1e-9)


def test_recovery_no_jumps(play):
    L, bv = play
    pc = reparametrize(bv, L, 1.0)
    fam = cosh_family(1.0, threshold=1.0)
    lams = []
    for beta in (100.0, 1000.0):
        rec = build_recovery_sequence(pc, fam, beta, L)
        lams.append(max(rec.flags["lambdas"]))
        assert np.max(np.abs(np.interp(bv.t, rec.t, rec.x) - bv.x)) < 10 * fam.K(beta)
        assert rec.total_variation == pytest.approx(variation(bv)[0], abs=1e-6)
    assert abs(lams[1] - 1) <= abs(lams[0] - 1)


def test_recovery_anchors_and_gap(well_jump):
    L, bv = well_jump
    pc = reparametrize(bv, L, 0.2)
    fam = cosh_family(1.0, threshold=0.2)
    ref = action_J_RI(bv, L, 0.2).total
    gaps = []
    for beta in (100.0, 1000.0):
        rec = build_recovery_sequence(pc, fam, beta, L)
        for ta in rec.flags["anchor_times"]:
            k = int(np.argmin(np.abs(rec.t - ta)))
            assert rec.t[k] == ta
        assert rec.t[0] == 0.0 and rec.t[-1] == 1.0
        assert rec.total_variation == pytest.approx(variation(bv)[0], abs=1e-6)
        gaps.append(action_J_beta(rec, L, fam.with_beta(beta)).total - ref)
    assert gaps[0] > -1e-6 and gaps[1] > -1e-6
    assert gaps[1] < gaps[0]


def test_recovery_range_limit():
    L = make_builtin("double_well_loading", stiffness=2.0, tilt0=-0.2, tilt_rate=2.0)
    bv = solve_rate_independent(L, 0.2, -1.0, 1.0)
    assert len(bv.jumps) == 1
    pc = reparametrize(bv, L, 0.2)
    with pytest.raises(FloatRangeError):
        build_recovery_sequence(pc, cosh_family(1.0, threshold=0.2), 1000.0, L)


def test_recovery_degenerate_plateau():
    from ldflows.convergence import ParametrizedCurve
    pc = ParametrizedCurve(np.array([0.0, 1.0, 2.0]), np.array([0.0, 0.5, 0.5]), np.array([0.0, 0.0, 0.0]),
                           np.array(["ac", "ac"]), np.array([0.0, 2.0]), 1.0)
    L = make_builtin("linear_tilt", g=0.0)
    with pytest.raises(DegeneratePlateauError):
        build_recovery_sequence(pc, cosh_family(1.0, threshold=1.0), 10.0, L)


def test_mosco_quadratic_on_solution():
    L = make_builtin("quadratic_loading", speed=1.0)
    sol = solve_quadratic_flow(L, 1.0, 0.0, 1.0, tol=1e-10)
    tab = mosco_quadratic_experiment(L, sol, 1.0, [1.0, 0.1, 0.01])
    vals = tab.column("value")
    assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-4


def test_mosco_quadratic_line_on_tilt_second_order():
    g = 0.5
    L = make_builtin("linear_tilt", g=g)
    t = np.linspace(0, 1, 11)
    tab = mosco_quadratic_experiment(L, SampledCurve(t, 0.3 * t), 1.0, [1.0, 0.1, 0.01])
    gaps = tab.column("abs_gap")
    assert np.all(np.diff(gaps) < 0)
    betas = np.array([0.4, 0.2, 0.1, 0.05])
    rem = [2 * (1 / b) / b * (math.cosh(b * g) - 1) - g * g for b in betas]
    slope = np.polyfit(np.log(betas), np.log(rem), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)


def test_mosco_quadratic_requires_decreasing():
    L = make_builtin("linear_tilt", g=0.5)
    with pytest.raises(ValueError):
        mosco_quadratic_experiment(L, SampledCurve([0.0, 1.0], [0.0, 0.0]), 1.0, [0.1, 1.0])


def test_mosco_ri_play(play):
    L, bv = play
    tab = mosco_ri_experiment(L, bv, cosh_family(1.0, threshold=1.0), [10.0, 100.0, 1000.0])
    gaps = tab.column("gap")
    assert tab.rows[0]["reference"] == pytest.approx(0.0, abs=1e-9)
    assert np.all(np.diff(gaps) < 0) and gaps[-1] < 1e-3


def test_mosco_ri_rejects_free_alpha(play):
    L, bv = play
    with pytest.raises(ValueError):
        mosco_ri_experiment(L, bv, cosh_family(1.0, alpha=0.5, threshold=1.0), [10.0])


def test_lln_experiment_reproducible():
    L = make_builtin("quadratic_loading", speed=1.0, x_min=-1.0, x_max=2.0)
    a = lln_experiment(L, [50, 200], 1.0, 1.0, 50, seed=4)
    b = lln_experiment(L, [50, 200], 1.0, 1.0, 50, seed=4)
    assert a.to_csv() == b.to_csv()
    d = a.column("median_sup_distance")
    assert d[1] < d[0]


def test_lln_flat_clt_scaling():
    L = make_builtin("linear_tilt", g=0.0, x_min=-2.0, x_max=2.0)
    tab = lln_experiment(L, [100, 400, 1600], 1.0, 1.0, 200, seed=5)
    scaled = tab.column("scaled")
    assert np.max(scaled) / np.min(scaled) < 1.3


def test_bridge_half_delta_variance_decreases():
    L = make_builtin("quadratic_loading", speed=0.0, x_min=-1.0, x_max=1.0, T=0.5)
    tab = bridge_experiment(L, [50, 200, 800], 0.5, 1.0, None, 200, seed=6, x0=0.5)
    v = tab.column("var_T")
    assert v[0] > v[1] > v[2]


def test_bridge_sde_step_not_dividing_grid():
    L = make_builtin("quadratic_loading", speed=0.0, x_min=-1.0, x_max=1.0, T=0.3)
    tab = bridge_experiment(L, [50], 1.0, 1.0, 0.05, 20, seed=1, window=(0.1, 0.3), sde_dt=0.0004,
                            grid_points=21)
    assert tab.rows[0]["sde_var_window"] >= 0.0


def test_bridge_delta_one_needs_h():
    L = make_builtin("quadratic_loading", speed=0.0)
    with pytest.raises(ValueError):
        bridge_experiment(L, [10], 1.0, 1.0, None, 10, seed=0)


def test_ldp_tube_around_solution():
    L = make_builtin("quadratic_loading", speed=1.0, x_min=-1.5, x_max=2.5)
    sol = solve_generalized_flow(L, 1.0, 1.0, 0.0, 1.0)
    ref = SampledCurve(np.linspace(0, 1, 201), sol(np.linspace(0, 1, 201)))
    tab = ldp_tube_experiment(L, [50], 1.0, 1.0, ref, 1.0, 200, seed=1)
    row = tab.rows[0]
    assert row["p_hat"] == 1.0 and row["rate"] == 0.0
    assert row["action_bound"] == pytest.approx(0.0, abs=1e-6)


def test_ldp_low_statistics_flag():
    L = make_builtin("linear_tilt", g=0.0, x_min=-3.0, x_max=3.0)
    ref = SampledCurve([0.0, 1.0], [0.0, 2.0])
    tab = ldp_tube_experiment(L, [40], 0.2, 1.0, ref, 0.1, 50, seed=2)
    assert tab.rows[0]["low_statistics"] and tab.rows[0]["rate"] is None
