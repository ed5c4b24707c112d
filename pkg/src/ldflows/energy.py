"""Driving energies E(x, t) and the wiggly landscapes built on top of them.

Every experiment in the package is driven by an :class:`EnergyLandscape`:
a smooth energy on a bounded space-time window together with its spatial
gradient, its time derivative and the regularity constants (gradient bound
``R`` and time-Lipschitz constant ``L`` of the gradient) that the stochastic
and deterministic solvers rely on.

Landscapes are immutable. All callables accept scalars or numpy arrays and
broadcast like ufuncs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

__all__ = [
    "EnergyLandscape",
    "WigglyLandscape",
    "ValidationReport",
    "make_builtin",
    "make_wiggly",
    "validate",
    "BUILTINS",
]

Field = Callable[[Any, Any], Any]


@dataclass(frozen=True)
class EnergyLandscape:
    """Smooth driving energy on ``[x_min, x_max] x [0, horizon]``.

    Parameters
    ----------
    value, gradient, time_derivative : callable
        ``E(x, t)``, ``dE/dx(x, t)`` and ``dE/dt(x, t)``.
    grad_bound : float
        Declared bound ``R`` on ``|dE/dx|`` over the domain.
    grad_time_lipschitz : float
        Declared Lipschitz constant ``L`` of ``t -> dE/dx(x, t)``.
    x_domain : tuple of float
        Closed position interval.
    horizon : float
        Final time ``T``.
    hessian : callable, optional
        ``d2E/dx2(x, t)``; finite differences are used when absent.
    grad_space_lipschitz : float, optional
        Lipschitz constant of ``x -> dE/dx``; needed for the SDE step bound.
    """

    value: Field
    gradient: Field
    time_derivative: Field
    grad_bound: float
    grad_time_lipschitz: float
    x_domain: tuple[float, float]
    horizon: float
    hessian: Field | None = None
    grad_space_lipschitz: float | None = None
    name: str = "custom"
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        lo, hi = self.x_domain
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError(f"x_domain must be a finite interval, got {self.x_domain}")
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError("horizon must be positive and finite")
        if not np.isfinite(self.grad_bound) or self.grad_bound < 0:
            raise ValueError("grad_bound must be a finite nonnegative number")
        if self.grad_time_lipschitz < 0:
            raise ValueError("grad_time_lipschitz must be nonnegative")

    def contains(self, x, t=0.0):
        """Whether ``(x, t)`` lies in the declared space-time window."""
        lo, hi = self.x_domain
        x = np.asarray(x)
        t = np.asarray(t)
        return (x >= lo) & (x <= hi) & (t >= 0.0) & (t <= self.horizon)

    def second_derivative(self, x, t):
        """``d2E/dx2``; central differences when no analytic hessian was given."""
        if self.hessian is not None:
            return self.hessian(x, t)
        h = 1e-5 * max(1.0, self.x_domain[1] - self.x_domain[0])
        return (self.gradient(np.asarray(x) + h, t) - self.gradient(np.asarray(x) - h, t)) / (2 * h)

    def frozen(self, t_freeze: float = 0.0) -> "EnergyLandscape":
        """Return the time-independent landscape ``x -> E(x, t_freeze)``."""
        return EnergyLandscape(
            value=lambda x, t: self.value(x, t_freeze + 0.0 * np.asarray(t)),
            gradient=lambda x, t: self.gradient(x, t_freeze + 0.0 * np.asarray(t)),
            time_derivative=lambda x, t: 0.0 * np.asarray(x, dtype=float) * np.asarray(t, dtype=float),
            hessian=(None if self.hessian is None
                     else lambda x, t: self.hessian(x, t_freeze + 0.0 * np.asarray(t))),
            grad_bound=self.grad_bound,
            grad_time_lipschitz=0.0,
            grad_space_lipschitz=self.grad_space_lipschitz,
            x_domain=self.x_domain,
            horizon=self.horizon,
            name=f"{self.name}@t={t_freeze}",
            params=dict(self.params),
        )


# ---------------------------------------------------------------------------
# builtin catalog


def _domain(params, default_x=(-2.0, 2.0), default_T=1.0):
    lo = float(params.get("x_min", default_x[0]))
    hi = float(params.get("x_max", default_x[1]))
    T = float(params.get("T", default_T))
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError("domain must be bounded: the gradient bound is unbounded on an infinite window")
    return (lo, hi), T


def _linear_tilt(params):
    g = float(params.get("g", 0.0))
    (lo, hi), T = _domain(params)
    shift = abs(g) * max(abs(lo), abs(hi))

    def value(x, t):
        return g * np.asarray(x, dtype=float) + shift + 0.0 * np.asarray(t, dtype=float)

    def gradient(x, t):
        return np.full(np.broadcast(np.asarray(x), np.asarray(t)).shape, g)[()]

    def zero(x, t):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(t)).shape)[()]

    return EnergyLandscape(
        value=value, gradient=gradient, time_derivative=zero, hessian=zero,
        grad_bound=abs(g), grad_time_lipschitz=0.0, grad_space_lipschitz=0.0,
        x_domain=(lo, hi), horizon=T, name="linear_tilt", params={"g": g},
    )


def _quadratic_loading(params):
    (lo, hi), T = _domain(params)
    loading = params.get("loading")
    if loading is None:
        speed = float(params.get("speed", 1.0))
        offset = float(params.get("offset", 0.0))

        def loading(t):
            return offset + speed * np.asarray(t, dtype=float)

        def loading_rate(t):
            return speed + 0.0 * np.asarray(t, dtype=float)

        ell_lo, ell_hi = sorted((offset, offset + speed * T))
        rate_max = abs(speed)
        stored = {"speed": speed, "offset": offset}
    else:
        loading_rate = params.get("loading_rate")
        if loading_rate is None:
            raise ValueError("a custom loading needs its derivative 'loading_rate'")
        ts = np.linspace(0.0, T, 4097)
        ell = np.asarray(loading(ts), dtype=float)
        ell_lo, ell_hi = float(ell.min()), float(ell.max())
        rate_max = float(np.max(np.abs(loading_rate(ts))))
        stored = {"loading": "callable"}

    curvature = float(params.get("curvature", 1.0))

    def value(x, t):
        return 0.5 * curvature * (np.asarray(x, dtype=float) - loading(t)) ** 2

    def gradient(x, t):
        return curvature * (np.asarray(x, dtype=float) - loading(t))

    def time_derivative(x, t):
        return -curvature * (np.asarray(x, dtype=float) - loading(t)) * loading_rate(t)

    def hessian(x, t):
        return np.full(np.broadcast(np.asarray(x), np.asarray(t)).shape, curvature)[()]

    R = curvature * max(hi - ell_lo, ell_hi - lo)
    return EnergyLandscape(
        value=value, gradient=gradient, time_derivative=time_derivative, hessian=hessian,
        grad_bound=abs(R), grad_time_lipschitz=abs(curvature) * rate_max,
        grad_space_lipschitz=abs(curvature), x_domain=(lo, hi), horizon=T,
        name="quadratic_loading", params={**stored, "curvature": curvature},
    )


def _cubic_range(k, lo, hi):
    """Range of ``k (x^3 - x)`` over ``[lo, hi]``."""
    pts = [lo, hi] + [c for c in (-1 / np.sqrt(3), 1 / np.sqrt(3)) if lo < c < hi]
    vals = [k * (p ** 3 - p) for p in pts]
    return min(vals), max(vals)


def _double_well_loading(params):
    (lo, hi), T = _domain(params, default_x=(-2.0, 2.0))
    k = float(params.get("stiffness", 1.0))
    f0 = float(params.get("tilt0", 0.0))
    rate = float(params.get("tilt_rate", 1.0))
    f_lo, f_hi = sorted((f0, f0 + rate * T))
    shift = max(abs(f_lo), abs(f_hi)) * max(abs(lo), abs(hi))

    def tilt(t):
        return f0 + rate * np.asarray(t, dtype=float)

    def value(x, t):
        x = np.asarray(x, dtype=float)
        return 0.25 * k * (x * x - 1.0) ** 2 - tilt(t) * x + shift

    def gradient(x, t):
        x = np.asarray(x, dtype=float)
        return k * x * (x * x - 1.0) - tilt(t)

    def time_derivative(x, t):
        return -rate * np.asarray(x, dtype=float) + 0.0 * np.asarray(t, dtype=float)

    def hessian(x, t):
        x = np.asarray(x, dtype=float)
        return k * (3.0 * x * x - 1.0) + 0.0 * np.asarray(t, dtype=float)

    g_lo, g_hi = _cubic_range(k, lo, hi)
    R = max(abs(g_hi - f_lo), abs(g_lo - f_hi))
    h_vals = [abs(k * (3 * p * p - 1)) for p in (lo, hi, 0.0) if lo <= p <= hi]
    return EnergyLandscape(
        value=value, gradient=gradient, time_derivative=time_derivative, hessian=hessian,
        grad_bound=R, grad_time_lipschitz=abs(rate), grad_space_lipschitz=max(h_vals),
        x_domain=(lo, hi), horizon=T, name="double_well_loading",
        params={"stiffness": k, "tilt0": f0, "tilt_rate": rate},
    )


def _custom(params):
    required = ("value", "gradient", "time_derivative", "grad_bound", "grad_time_lipschitz")
    missing = [key for key in required if key not in params]
    if missing:
        raise ValueError(f"custom landscape is missing {missing}")
    (lo, hi), T = _domain(params)
    return EnergyLandscape(
        value=params["value"], gradient=params["gradient"],
        time_derivative=params["time_derivative"], hessian=params.get("hessian"),
        grad_bound=float(params["grad_bound"]),
        grad_time_lipschitz=float(params["grad_time_lipschitz"]),
        grad_space_lipschitz=params.get("grad_space_lipschitz"),
        x_domain=(lo, hi), horizon=T, name="custom", params={},
    )


BUILTINS: dict[str, Callable[[Mapping[str, Any]], EnergyLandscape]] = {
    "linear_tilt": _linear_tilt,
    "quadratic_loading": _quadratic_loading,
    "double_well_loading": _double_well_loading,
    "custom": _custom,
}


def make_builtin(name: str, **params) -> EnergyLandscape:
    """Construct one of the catalog landscapes.

    ``linear_tilt``
        ``E = g x`` (shifted to be nonnegative); params ``g``.
    ``quadratic_loading``
        ``E = c (x - l(t))^2 / 2`` with ``l(t) = offset + speed t`` or a custom
        ``loading``/``loading_rate`` pair; params ``speed``, ``offset``,
        ``curvature``.
    ``double_well_loading``
        ``E = k (x^2 - 1)^2 / 4 - f(t) x`` with ``f(t) = tilt0 + tilt_rate t``.
    ``custom``
        User callables plus declared ``grad_bound`` and ``grad_time_lipschitz``.

    All ids accept ``x_min``, ``x_max`` and ``T`` for the domain.
    """
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown landscape id {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(params)


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    checks: dict[str, dict[str, Any]]

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def __getitem__(self, key):
        return self.checks[key]


def validate(landscape: EnergyLandscape, xs, ts, rtol: float = 1e-12) -> ValidationReport:
    """Audit the declared regularity constants on a sample grid.

    Checks the three standing assumptions on the energy: nonnegativity,
    ``|dE/dx| <= R`` and Lipschitz continuity of the gradient in time
    (over consecutive time samples). Each entry of the report carries the
    worst sample found.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if xs.size == 0 or ts.size == 0:
        raise ValueError("empty validation grid")
    if not np.all(landscape.contains(xs[:, None], ts[None, :])):
        raise ValueError("validation grid leaves the declared domain")
    X, Tg = np.meshgrid(xs, ts, indexing="ij")
    grad = np.broadcast_to(landscape.gradient(X, Tg), X.shape)
    energy = np.broadcast_to(landscape.value(X, Tg), X.shape)

    checks = {}
    absg = np.abs(grad)
    i = np.unravel_index(np.argmax(absg), absg.shape)
    R = landscape.grad_bound
    checks["grad_bound"] = {
        "passed": bool(absg[i] <= R * (1 + rtol) + rtol),
        "declared": R,
        "worst": float(absg[i]),
        "at": (float(X[i]), float(Tg[i])),
    }

    if ts.size > 1:
        order = np.argsort(ts)
        g_sorted = grad[:, order]
        dt = np.diff(ts[order])
        keep = dt > 0
        slopes = np.abs(np.diff(g_sorted, axis=1))[:, keep] / dt[keep]
        if slopes.size:
            j = np.unravel_index(np.argmax(slopes), slopes.shape)
            worst_L = float(slopes[j])
            at = (float(xs[j[0]]), float(ts[order][:-1][keep][j[1]]))
        else:
            worst_L, at = 0.0, (float(xs[0]), float(ts[0]))
    else:
        worst_L, at = 0.0, (float(xs[0]), float(ts[0]))
    L = landscape.grad_time_lipschitz
    checks["grad_time_lipschitz"] = {
        "passed": bool(worst_L <= L * (1 + 1e-6) + 1e-9),
        "declared": L,
        "worst": worst_L,
        "at": at,
    }

    i = np.unravel_index(np.argmin(energy), energy.shape)
    checks["nonnegative"] = {
        "passed": bool(energy[i] >= -rtol),
        "worst": float(energy[i]),
        "at": (float(X[i]), float(Tg[i])),
    }
    return ValidationReport(checks)


# ---------------------------------------------------------------------------
# wiggly landscapes


def _cosine_wiggle(amplitude):
    def e(y):
        return 0.5 * amplitude * (1.0 + np.cos(np.pi * np.asarray(y, dtype=float)))

    def de(y):
        return -0.5 * amplitude * np.pi * np.sin(np.pi * np.asarray(y, dtype=float))

    return e, de


@dataclass(frozen=True)
class WigglyLandscape:
    """Composite energy ``E(x, t) + e(n x) / n`` with a 2-periodic wiggle ``e``.

    Wells of the wiggle sit at ``y = well_offset + 2 k`` in the fast variable
    ``y = n x``. ``kramers_prefactor`` is the constant ``a`` in the escape rate
    ``a exp(-beta (amplitude -/+ dE/dx))``.
    """

    base: EnergyLandscape
    lattice_scale: int
    wiggle_amplitude: float
    kramers_prefactor: float
    wiggle: Callable[[Any], Any]
    wiggle_derivative: Callable[[Any], Any]
    wiggle_slope_max: float
    well_offset: float = 1.0

    def value(self, x, t):
        n = self.lattice_scale
        return self.base.value(x, t) + self.wiggle(n * np.asarray(x, dtype=float)) / n

    def gradient(self, x, t):
        n = self.lattice_scale
        return self.base.gradient(x, t) + self.wiggle_derivative(n * np.asarray(x, dtype=float))

    def well_center(self, k):
        """Position of the ``k``-th wiggle minimum."""
        return (self.well_offset + 2.0 * np.asarray(k)) / self.lattice_scale

    def well_coordinate(self, x):
        """Continuous well coordinate: integer values at wiggle minima."""
        return (self.lattice_scale * np.asarray(x, dtype=float) - self.well_offset) / 2.0

    def default_dt(self) -> float:
        return 0.1 / (self.lattice_scale ** 2 * self.wiggle_slope_max ** 2)


def make_wiggly(base: EnergyLandscape, n: int, amplitude: float = 1.0,
                prefactor: float | None = None) -> WigglyLandscape:
    """Attach the cosine wiggle ``(amplitude/2)(1 + cos(pi y))`` to ``base``.

    The Kramers prefactor defaults to the overdamped value
    ``sqrt(U''_min |U''_max|) / (2 pi) = pi n amplitude / 4`` for this wiggle.
    """
    if n < 1 or int(n) != n:
        raise ValueError("lattice scale must be a positive integer")
    if amplitude <= 0:
        raise ValueError("wiggle amplitude must be positive")
    e, de = _cosine_wiggle(amplitude)
    a = np.pi * n * amplitude / 4.0 if prefactor is None else float(prefactor)
    return WigglyLandscape(
        base=base, lattice_scale=int(n), wiggle_amplitude=float(amplitude),
        kramers_prefactor=a, wiggle=e, wiggle_derivative=de,
        wiggle_slope_max=0.5 * np.pi * amplitude, well_offset=1.0,
    )
