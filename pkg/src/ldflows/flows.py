"""Deterministic evolutions: dissipative gradient flows and rate-independent BV solutions.

The smooth flows ``x' = -dpsi*(dE/dx(x, t))`` (sinh flow, quadratic flow,
vanishing viscosity) share one adaptive implicit-midpoint integrator. The
rate-independent evolution is solved by stick-slip stepping in the load
with explicit jump transients.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .curves import BVCurve, Jump, SampledCurve
from .dissipation import DissipationFamily, cosh_family, quadratic_family
from .energy import EnergyLandscape
from .errors import INF, ConvergenceFailure, DomainExitError, RunawayJumpError, UnstableStartError

__all__ = [
    "BVCurve",
    "SampledCurve",
    "solve_dissipative_flow",
    "solve_generalized_flow",
    "solve_quadratic_flow",
    "solve_rate_independent",
]


def _implicit_midpoint_step(x0, t0, h, rhs, drhs, newton_tol=1e-14, max_iter=60):
    """Solve ``x1 = x0 + h f((x0 + x1)/2, t0 + h/2)`` by Newton's method.

    Returns ``None`` when Newton fails or meets a non-finite value; the
    caller then retries with a smaller step.
    """
    tm = t0 + 0.5 * h
    f0 = rhs(x0, tm)
    if not math.isfinite(f0):
        return None
    x1 = x0 + h * f0
    for _ in range(max_iter):
        m = 0.5 * (x0 + x1)
        f = rhs(m, tm)
        df = drhs(m, tm)
        if not (math.isfinite(f) and math.isfinite(df)):
            return None
        G = x1 - x0 - h * f
        dG = 1.0 - 0.5 * h * df
        if dG == 0.0:
            return None
        step = G / dG
        x1 -= step
        if abs(step) <= newton_tol * (1.0 + abs(x1)):
            return x1
    return None


def _integrate(rhs, drhs, x0, T, tol, domain, h0=None, h_min=1e-300, max_steps=2_000_000):
    """Adaptive implicit midpoint with step doubling.

    Error control is per unit arc length ``h + |dx|``: during fast
    transients (velocities up to ``exp(beta R)``) a per-unit-time tolerance
    would force absurdly small absolute errors. Step durations are kept in
    ``steps`` because such transients may last less than the spacing of
    floating-point numbers near ``t``.
    """
    lo, hi = domain
    ts, xs, hs = [0.0], [float(x0)], []
    t, x = 0.0, float(x0)
    h = h0 if h0 is not None else min(T, 1e-3)
    flags = {"exited": False, "steps": 0, "rejected": 0}
    steps = 0
    eps = np.finfo(float).eps

    def done():
        flags["steps"] = steps
        return SampledCurve(np.array(ts), np.array(xs), steps=np.array(hs), flags=flags)

    while t < T:
        if steps > max_steps:
            raise ConvergenceFailure("step budget exhausted", state=(t, x))
        h = min(h, T - t)
        if h < h_min:
            raise ConvergenceFailure("step size underflow", state=(t, x))
        full = _implicit_midpoint_step(x, t, h, rhs, drhs)
        half1 = _implicit_midpoint_step(x, t, 0.5 * h, rhs, drhs) if full is not None else None
        half2 = (_implicit_midpoint_step(half1, t + 0.5 * h, 0.5 * h, rhs, drhs)
                 if half1 is not None else None)
        if half2 is None:
            h *= 0.25
            flags["rejected"] += 1
            continue
        err = abs(half2 - full) / 3.0
        scale = max(tol * (h + abs(half2 - x)), 8 * eps * max(1.0, abs(x)))
        if err <= scale:
            steps += 1
            last = T - (t + h) <= 1e-15 * T
            for tn, xn in ((t + 0.5 * h, half1), (T if last else t + h, half2)):
                if xn < lo or xn > hi:
                    flags["exited"] = True
                    flags["exit_time"] = tn
                    ts.append(tn)
                    xs.append(min(max(xn, lo), hi))
                    hs.append(0.5 * h)
                    return done()
                ts.append(tn)
                xs.append(xn)
                hs.append(0.5 * h)
            t, x = (T if last else t + h), half2
            factor = 4.0 if err == 0 else min(4.0, max(0.2, 0.9 * math.sqrt(scale / err)))
            h *= factor
        else:
            flags["rejected"] += 1
            h *= max(0.1, 0.9 * math.sqrt(scale / err))
    return done()


def solve_dissipative_flow(landscape: EnergyLandscape, family: DissipationFamily, x0: float, T: float,
                           tol: float = 1e-8, h0: float | None = None) -> SampledCurve:
    """Integrate ``x' = -dpsi*(dE/dx(x, t))`` for a smooth dissipation family.

    Adaptive implicit midpoint with step doubling: a step of size ``h`` is
    compared with two steps of size ``h/2``; the step is accepted when the
    error estimate ``|x_half - x_full| / 3`` is at most ``tol * (h + |dx|)``,
    i.e. the tolerance is per unit of arc length in the ``(t, x)`` plane, so
    fast transients are resolved without forcing tiny steps on slow stretches.
    The returned curve contains the half-step solution at every half-step node
    and records the accepted step sizes in ``steps``.

    Raises
    ------
    DomainExitError
        If ``x0`` lies outside the domain. Later exits truncate the curve and
        set ``flags['exited']``.
    ConvergenceFailure
        If the implicit solve keeps failing; ``state`` holds the last ``(t, x)``.
    """
    if family.tag == "rate_independent":
        raise ValueError("use solve_rate_independent for the rate-independent family")
    if not landscape.contains(x0, 0.0):
        raise DomainExitError("start point outside the domain")
    if T > landscape.horizon * (1 + 1e-12):
        raise ValueError("T exceeds the landscape horizon")
    grad = landscape.gradient
    hess = landscape.second_derivative

    def rhs(x, t):
        v = float(family.dpsi_star(float(grad(x, t))))
        return -v

    def drhs(x, t):
        c = float(family.d2psi_star(float(grad(x, t))))
        e2 = float(hess(x, t))
        if c == INF:
            return -INF if e2 > 0 else (INF if e2 < 0 else 0.0)
        return -c * e2

    return _integrate(rhs, drhs, x0, T, tol, landscape.x_domain, h0=h0)


def solve_generalized_flow(landscape: EnergyLandscape, alpha: float | None, beta: float, x0: float,
                           T: float, tol: float = 1e-8, threshold: float = 0.0) -> SampledCurve:
    """Sinh flow ``x' = -2 alpha sinh(beta dE/dx(x, t))``.

    ``alpha=None`` uses ``alpha = exp(-beta * threshold)`` in log form, which
    stays representable for ``beta * threshold`` far beyond the float range.
    """
    family = cosh_family(beta, alpha=alpha, threshold=threshold)
    return solve_dissipative_flow(landscape, family, x0, T, tol)


def solve_quadratic_flow(landscape: EnergyLandscape, omega: float, x0: float, T: float,
                         tol: float = 1e-8) -> SampledCurve:
    """Quadratic gradient flow ``x' = -2 omega dE/dx(x, t)``."""
    return solve_dissipative_flow(landscape, quadratic_family(omega), x0, T, tol)


# ---------------------------------------------------------------------------
# rate-independent evolution


def _scan_grid(length, n_geo=64, n_fine=1024, n_uni=4096):
    geo = length * np.logspace(-14, -1, n_geo)
    fine = np.linspace(0.0, 0.01 * length, n_fine + 1)[1:]
    uni = np.linspace(0.0, length, n_uni + 1)[1:]
    return np.unique(np.concatenate([[0.0], geo, fine, uni]))


def _restabilize(landscape, x, t, A, atol):
    """Move from ``x`` against the force until ``|dE/dx| <= A`` at frozen ``t``.

    Returns ``(x_new, is_jump)``. The transition is a jump when the driving
    force grows somewhere along the way, i.e. there is no constrained
    continuation of the slip from ``x``.
    """
    lo, hi = landscape.x_domain
    w0 = float(landscape.gradient(x, t))
    sgn = 1.0 if w0 > 0 else -1.0
    direction = -sgn
    room = (x - lo) if direction < 0 else (hi - x)
    if room <= 0:
        raise RunawayJumpError(f"no room to relax inside the domain at t={t}")
    s = _scan_grid(room)
    phi = sgn * np.asarray(landscape.gradient(x + direction * s, t), dtype=float)
    phi = np.broadcast_to(phi, s.shape)
    below = np.flatnonzero(phi <= A)
    if below.size == 0:
        raise RunawayJumpError(f"jump transient from x={x} at t={t} does not re-stabilize in the domain")
    i = int(below[0])
    is_jump = bool(np.any(phi[1:i] > phi[0] + atol))

    def g(si):
        return sgn * float(landscape.gradient(x + direction * si, t)) - A

    if phi[i] == A:
        s_root = s[i]
    else:
        s_root = brentq(g, s[i - 1], s[i], xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return x + direction * s_root, is_jump


def solve_rate_independent(landscape: EnergyLandscape, A: float, x0: float, T: float,
                           dt_load: float | None = None) -> BVCurve:
    """BV solution of ``x' in m_A(-dE/dx)`` by stick-slip stepping in the load.

    On each load step ``[t_k, t_k+1]`` the state sticks while
    ``|dE/dx(x, t_k+1)| <= A``. Otherwise it moves against the force to the
    first point where the constraint holds again. When the force decreases
    monotonically along that move it is a constrained slip (a continuous
    piece); when it increases somewhere the stable branch has vanished and
    the move is recorded as a jump ``(t_k+1, x_left, x_left, x_right)``.

    Parameters
    ----------
    landscape : EnergyLandscape
    A : float
        Activation threshold.
    x0 : float
        Start; must satisfy ``|dE/dx(x0, 0)| <= A``.
    T : float
        Horizon.
    dt_load : float, optional
        Load step, default ``T / 2048``.

    Raises
    ------
    UnstableStartError
        If the start is outside the stable set.
    RunawayJumpError
        If a transient does not re-stabilize inside the domain.
    """
    if A < 0:
        raise ValueError("threshold must be nonnegative")
    if not landscape.contains(x0, 0.0):
        raise DomainExitError("start point outside the domain")
    scale = max(1.0, landscape.grad_bound)
    atol = 1e-12 * scale
    if abs(float(landscape.gradient(x0, 0.0))) > A + atol:
        raise UnstableStartError(f"|dE/dx(x0, 0)| exceeds A={A}")
    dt_load = T / 2048 if dt_load is None else float(dt_load)
    K = max(1, int(math.ceil(T / dt_load - 1e-9)))
    ts = np.linspace(0.0, T, K + 1)
    jumps = []
    x = float(x0)
    t_nodes, x_nodes = [0.0], [float(x0)]
    for k in range(1, K + 1):
        t = ts[k]
        w = float(landscape.gradient(x, t))
        if abs(w) <= A + atol:
            t_nodes.append(t)
            x_nodes.append(x)
            continue
        x_new, is_jump = _restabilize(landscape, x, t, A, atol)
        if not is_jump:
            t_nodes.append(t)
            x_nodes.append(x_new)
            x = x_new
            continue
        # locate the loss of stability inside the load step by bisection
        t_lo, x_lo, t_hi = ts[k - 1], x, t
        while t_hi - t_lo > 1e-13 * max(1.0, T):
            t_mid = 0.5 * (t_lo + t_hi)
            if abs(float(landscape.gradient(x_lo, t_mid))) <= A + atol:
                t_lo = t_mid
                continue
            x_mid, jump_mid = _restabilize(landscape, x_lo, t_mid, A, atol)
            if jump_mid:
                t_hi = t_mid
            else:
                t_lo, x_lo = t_mid, x_mid
        if t_hi < t and t_lo > t_nodes[-1]:
            t_nodes.append(t_lo)
            x_nodes.append(x_lo)
        x_right, _ = _restabilize(landscape, x_lo, t_hi, A, atol)
        jumps.append(Jump(float(t_hi), x_lo, x_lo, x_right))
        t_nodes.append(t_hi)
        x_nodes.append(x_lo)
        x = x_right
        if t_hi < t:
            # finish the load step from the post-jump state
            w = float(landscape.gradient(x, t))
            if abs(w) > A + atol:
                x_new, again = _restabilize(landscape, x, t, A, atol)
                if again:
                    raise RunawayJumpError(f"second jump inside one load step at t={t}; reduce dt_load")
                x = x_new
            t_nodes.append(t)
            x_nodes.append(x)
    return BVCurve(np.array(t_nodes), np.array(x_nodes), jumps, flags={"dt_load": dt_load, "threshold": A})
