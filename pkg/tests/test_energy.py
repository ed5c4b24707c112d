import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ldflows import make_builtin, make_wiggly, validate


def test_linear_tilt_constants():
    L = make_builtin("linear_tilt", g=1.0)
    xs = np.linspace(-2, 2, 7)
    assert np.all(L.gradient(xs, 0.3) == 1.0)
    assert L.grad_bound == 1.0
    assert L.grad_time_lipschitz == 0.0


def test_quadratic_loading_examples():
    L = make_builtin("quadratic_loading", speed=1.0, x_min=-2.0, x_max=2.0, T=1.0)
    assert L.gradient(0.0, 0.0) == 0.0
    assert L.grad_bound == pytest.approx(3.0)
    X, T = np.meshgrid(np.linspace(-2, 2, 201), np.linspace(0, 1, 101))
    assert np.max(np.abs(L.gradient(X, T))) == pytest.approx(3.0)


def test_unknown_id_and_unbounded_domain():
    with pytest.raises(ValueError):
        make_builtin("banana")
    with pytest.raises(ValueError):
        make_builtin("linear_tilt", g=1.0, x_min=-np.inf)


def test_validate_passes_on_tilt():
    L = make_builtin("linear_tilt", g=1.0)
    rep = validate(L, np.linspace(-2, 2, 11), np.linspace(0, 1, 5))
    assert rep.passed
    assert rep["grad_bound"]["worst"] == 1.0


def test_validate_flags_understated_bound():
    f = lambda x, t: 1.0 + 0.0 * np.asarray(x) * np.asarray(t)
    L = make_builtin("custom", value=lambda x, t: np.asarray(x) + 2.0, gradient=f,
                     time_derivative=lambda x, t: 0.0 * np.asarray(x), grad_bound=0.5,
                     grad_time_lipschitz=0.0)
    rep = validate(L, np.linspace(-2, 2, 11), [0.0, 1.0])
    assert not rep["grad_bound"]["passed"]
    assert rep["grad_bound"]["worst"] == 1.0


def test_validate_double_well_grid():
    L = make_builtin("double_well_loading", tilt0=-0.5, tilt_rate=1.0)
    rep = validate(L, np.linspace(-2, 2, 100), np.linspace(0, 1, 100))
    assert rep.passed
    assert 0 < rep["grad_bound"]["worst"] <= L.grad_bound


def test_validate_rejects_empty_or_outside_grid():
    L = make_builtin("linear_tilt", g=1.0)
    with pytest.raises(ValueError):
        validate(L, [], [0.0])
    with pytest.raises(ValueError):
        validate(L, [5.0], [0.0])


@pytest.mark.parametrize("name,params", [
    ("linear_tilt", {"g": 0.7}),
    ("quadratic_loading", {"speed": 1.3, "offset": -0.2, "curvature": 2.0}),
    ("double_well_loading", {"stiffness": 1.5, "tilt0": 0.1, "tilt_rate": -0.4}),
])
def test_finite_difference_derivatives(name, params):
    L = make_builtin(name, **params)
    rng = np.random.default_rng(0)
    h = 1e-5
    for x, t in zip(rng.uniform(-1.8, 1.8, 50), rng.uniform(0.1, 0.9, 50)):
        fd_x = (L.value(x + h, t) - L.value(x - h, t)) / (2 * h)
        fd_t = (L.value(x, t + h) - L.value(x, t - h)) / (2 * h)
        g, dt = L.gradient(x, t), L.time_derivative(x, t)
        assert abs(fd_x - g) <= 1e-6 * max(1.0, abs(g))
        assert abs(fd_t - dt) <= 1e-6 * max(1.0, abs(dt))


@pytest.mark.parametrize("name", ["linear_tilt", "quadratic_loading", "double_well_loading"])
def test_builtins_nonnegative(name):
    L = make_builtin(name)
    X, T = np.meshgrid(np.linspace(*L.x_domain, 101), np.linspace(0, L.horizon, 21))
    assert np.min(L.value(X, T)) >= 0.0


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-1.9, 1.9), t=st.floats(0, 1), n=st.integers(1, 50))
def test_wiggle_difference_exact(x, t, n):
    base = make_builtin("double_well_loading")
    W = make_wiggly(base, n, amplitude=0.8)
    diff = W.value(x, t) - base.value(x, t)
    assert diff == pytest.approx(W.wiggle(n * x) / n, abs=1e-14)


def test_wiggly_wells_and_prefactor():
    W = make_wiggly(make_builtin("linear_tilt", g=0.0), 4, amplitude=2.0)
    centers = W.well_center(np.arange(-2, 3))
    assert np.allclose(W.wiggle(4 * centers), 0.0, atol=1e-14)
    assert np.allclose(W.well_coordinate(centers), np.arange(-2, 3))
    assert W.kramers_prefactor == pytest.approx(np.pi * 4 * 2.0 / 4)
    with pytest.raises(ValueError):
        make_wiggly(make_builtin("linear_tilt"), 0)
