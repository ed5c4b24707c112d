"""Action functionals on sampled and BV curves.

Every smooth action is evaluated by the midpoint rule on the curve's own
grid: on each interval the velocity is the difference quotient (the central
difference about the interval midpoint) and the force is evaluated at the
midpoint of the chord. The work term is integrated directly as
``int x' dE/dx dt`` rather than through energy differences, so the chain
rule stays a testable property.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.sparse import diags
from scipy.sparse.csgraph import dijkstra

from .curves import BVCurve, SampledCurve
from .dissipation import DissipationFamily, cosh_family, quadratic_family
from .energy import EnergyLandscape
from .errors import INF, DomainExitError

__all__ = [
    "ActionReport",
    "action_J_beta",
    "action_J_alpha_beta",
    "action_J_Q",
    "action_J_RI",
    "jump_cost_delta",
    "energy_identity_residual",
    "variation",
]

_GL64 = np.polynomial.legendre.leggauss(64)
_GL3 = np.polynomial.legendre.leggauss(3)


@dataclass
class ActionReport:
    """Action value split into its contributions; ``total`` is their sum."""

    functional: str
    total: float
    part_psi: float = 0.0
    part_psi_star: float = 0.0
    part_work: float = 0.0
    part_jump: float = 0.0
    part_var: float = 0.0
    quadrature_step: float = 0.0
    violation_time: float | None = None

    def to_dict(self) -> dict:
        return {k: (("inf" if v == INF else v) if isinstance(v, float) else v) for k, v in asdict(self).items()}


def _sum_parts(*parts):
    if any(p == INF for p in parts):
        return INF
    return float(sum(parts))


def _check_curve(curve, landscape):
    t = curve.t
    if not np.all(landscape.contains(curve.x, np.clip(t, 0.0, None))):
        raise DomainExitError("curve leaves the landscape domain")


def _midpoint_data(curve: SampledCurve, landscape: EnergyLandscape):
    dt = curve.dt
    v = curve.slopes
    tm = curve.t[:-1] + 0.5 * dt
    xm = 0.5 * (curve.x[:-1] + curve.x[1:])
    w = np.broadcast_to(np.asarray(landscape.gradient(xm, tm), dtype=float), xm.shape)
    return dt, v, w


def _smooth_action(curve, landscape, family, scale, name):
    _check_curve(curve, landscape)
    dt, v, w = _midpoint_data(curve, landscape)
    ps = np.asarray(family.psi(v), dtype=float)
    pss = np.asarray(family.psi_star(w), dtype=float)
    part_psi = scale * float(np.sum(ps * dt))
    part_psi_star = INF if np.any(pss == INF) else scale * float(np.sum(pss * dt))
    part_work = scale * float(np.sum(v * w * dt))
    return ActionReport(name, _sum_parts(part_psi, part_psi_star, part_work), part_psi, part_psi_star,
                        part_work, quadrature_step=float(np.max(dt)))


def action_J_beta(curve: SampledCurve, landscape: EnergyLandscape, family: DissipationFamily) -> ActionReport:
    """``J_beta(x) = int psi(x') + psi*(dE/dx) + x' dE/dx dt`` for a smooth family."""
    if family.tag == "rate_independent":
        raise ValueError("use action_J_RI for the rate-independent family")
    return _smooth_action(curve, landscape, family, 1.0, f"J_beta[{family.tag}]")


def action_J_alpha_beta(curve: SampledCurve, landscape: EnergyLandscape, alpha: float | None, beta: float,
                        threshold: float = 0.0) -> ActionReport:
    """Large-deviation rate functional ``beta * J_beta`` of the cosh family.

    ``alpha=None`` ties ``alpha = exp(-beta * threshold)``. Each part is
    ``beta`` times the corresponding part of :func:`action_J_beta`.
    """
    family = cosh_family(beta, alpha=alpha, threshold=threshold)
    base = action_J_beta(curve, landscape, family)
    parts = [beta * p if p != INF else INF for p in (base.part_psi, base.part_psi_star, base.part_work)]
    return ActionReport("J_alpha_beta", _sum_parts(*parts), *parts, quadrature_step=base.quadrature_step)


def action_J_Q(curve: SampledCurve, landscape: EnergyLandscape, omega: float) -> ActionReport:
    """``J_Q(x) = int x'^2/(4 omega) + omega (dE/dx)^2 + x' dE/dx dt``."""
    return _smooth_action(curve, landscape, quadratic_family(omega), 1.0, "J_Q")


# ---------------------------------------------------------------------------
# jump cost


def _gl(f, a, b, nodes=_GL64):
    x, wts = nodes
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.sum(wts * f(mid + half * x)))


def _adaptive_gl(f, a, b, tol=1e-14, depth=0):
    whole = _gl(f, a, b)
    m = 0.5 * (a + b)
    left, right = _gl(f, a, m), _gl(f, m, b)
    if abs(left + right - whole) <= tol * max(1.0, abs(whole)) or depth >= 30:
        return left + right
    return _adaptive_gl(f, a, m, tol, depth + 1) + _adaptive_gl(f, m, b, tol, depth + 1)


def _kinks(g, a, b, n=2049):
    """Roots of ``g`` on ``[a, b]`` located by sampling plus Brent refinement."""
    u = np.linspace(a, b, n)
    vals = g(u)
    out = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        out.append(brentq(lambda s: float(g(s)), u[i], u[i + 1], xtol=1e-15))
    out.extend(u[np.flatnonzero(vals == 0.0)].tolist())
    return sorted(set(out))


def _weight(landscape, t, A):
    def w(u):
        return np.maximum(np.abs(np.asarray(landscape.gradient(u, t), dtype=float)), A)
    return w


def _delta_closed_form(x0, x1, t, landscape, A):
    a, b = sorted((float(x0), float(x1)))
    if a == b:
        return 0.0
    weight = _weight(landscape, t, A)

    def grad(u):
        return np.asarray(landscape.gradient(u, t), dtype=float) + 0.0 * np.asarray(u)

    cuts = set(_kinks(lambda u: np.abs(grad(u)) - A, a, b))
    if A == 0:
        cuts |= set(_kinks(grad, a, b))
    pts = [a] + [c for c in sorted(cuts) if a < c < b] + [b]
    return float(sum(_adaptive_gl(weight, p, q) for p, q in zip(pts, pts[1:])))


def _delta_brute_force(x0, x1, t, landscape, A, n_grid=1000, return_path=False):
    lo, hi = landscape.x_domain
    a, b = sorted((float(x0), float(x1)))
    span = max(b - a, 1e-12)
    # candidate paths may overshoot either endpoint by half the segment length
    g_lo, g_hi = max(lo, a - 0.5 * span), min(hi, b + 0.5 * span)
    grid = np.unique(np.concatenate([np.linspace(g_lo, g_hi, n_grid), [a, b]]))
    weight = _weight(landscape, t, A)
    edge = np.array([quad(lambda u: float(weight(u)), p, q, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
                     for p, q in zip(grid[:-1], grid[1:])])
    graph = diags([edge, edge], [1, -1], shape=(grid.size, grid.size), format="csr")
    src = int(np.searchsorted(grid, x0))
    dst = int(np.searchsorted(grid, x1))
    dist, pred = dijkstra(graph, directed=False, indices=src, return_predecessors=True)
    cost = float(dist[dst])
    if not return_path:
        return cost
    path = [dst]
    while path[-1] != src:
        path.append(int(pred[path[-1]]))
    return cost, grid[np.array(path[::-1])]


def jump_cost_delta(x0: float, x1: float, t: float, landscape: EnergyLandscape, A: float,
                    mode: str = "closed_form", return_path: bool = False, n_grid: int = 1000):
    """Energy-weighted jump cost ``Delta(x0, x1)`` at frozen time ``t``.

    ``closed_form`` integrates ``u -> max(|dE/dx(u, t)|, A)`` over the
    segment between ``x0`` and ``x1`` (Gauss-Legendre, 64 nodes, adaptively
    bisected and split where ``|dE/dx| = A``). In one dimension the weight
    depends on position only, so the monotone path is optimal.

    ``brute_force`` makes no such assumption: it builds a position grid of
    ``n_grid`` points extending past both endpoints, weights each grid edge
    by adaptive quadrature and returns the shortest-path cost between the
    endpoints (``return_path=True`` also returns the optimal node sequence).
    """
    lo, hi = landscape.x_domain
    if min(x0, x1) < lo or max(x0, x1) > hi:
        raise DomainExitError("jump segment leaves the domain")
    if mode == "closed_form":
        return _delta_closed_form(x0, x1, t, landscape, A)
    if mode == "brute_force":
        return _delta_brute_force(x0, x1, t, landscape, A, n_grid, return_path)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# rate-independent action


def _power_integral(landscape, t0, t1, xa, xb):
    """Three-point Gauss rule for ``int dE/dt`` along linear pieces."""
    nodes, wts = _GL3
    h = t1 - t0
    tau = 0.5 * (nodes[None, :] + 1.0)
    ts = t0[:, None] + h[:, None] * tau
    xs = xa[:, None] + (xb - xa)[:, None] * tau
    vals = np.broadcast_to(np.asarray(landscape.time_derivative(xs, ts), dtype=float), xs.shape)
    return float(np.sum(0.5 * h[:, None] * wts[None, :] * vals))


def action_J_RI(curve: BVCurve, landscape: EnergyLandscape, A: float, violation_tol: float | None = None
                ) -> ActionReport:
    """Rate-independent energy balance ``J_RI``.

    ``total = A Var_AC + Jmp_E + E(x(T), T) - E(x(0), 0) - int dE/dt``,
    where ``Jmp_E`` sums ``Delta(x_left, x_plateau) + Delta(x_plateau, x_right)``
    over the jumps and the Cantor part is zero for sampled curves. The
    result is the infinity sentinel, with ``violation_time`` set, when
    ``|dE/dx| > A`` at a node of a continuous piece.
    """
    if not isinstance(curve, BVCurve):
        curve = BVCurve(curve.t, curve.x)
    _check_curve(curve, landscape)
    tol = 1e-9 * max(1.0, A) if violation_tol is None else violation_tol
    left, right = curve.left_limits, curve.right_limits
    t = curve.t
    # both ends of every continuous piece
    for arr, tt in ((right[:-1], t[:-1]), (left[1:], t[1:])):
        g = np.abs(np.broadcast_to(np.asarray(landscape.gradient(arr, tt), dtype=float), arr.shape))
        bad = np.flatnonzero(g > A + tol)
        if bad.size:
            return ActionReport("J_RI", INF, part_psi_star=INF, quadrature_step=float(np.max(np.diff(t))),
                                violation_time=float(tt[bad[0]]))
    part_var = A * float(np.sum(np.abs(curve.ac_increments())))
    part_jump = float(sum(
        _delta_closed_form(j.x_left, j.x_plateau, j.time, landscape, A)
        + _delta_closed_form(j.x_plateau, j.x_right, j.time, landscape, A)
        for j in curve.jumps))
    e_end = float(landscape.value(right[-1], t[-1]))
    e_start = float(landscape.value(left[0], t[0]))
    power = _power_integral(landscape, t[:-1], t[1:], right[:-1], left[1:])
    part_work = e_end - e_start - power
    return ActionReport("J_RI", _sum_parts(part_var, part_jump, part_work), part_work=part_work,
                        part_jump=part_jump, part_var=part_var, quadrature_step=float(np.max(np.diff(t))))


# ---------------------------------------------------------------------------
# energy identity and variation


def energy_identity_residual(curve: SampledCurve, landscape: EnergyLandscape, family: DissipationFamily
                             ) -> float:
    """Left-hand side of the generalized energy identity.

    ``int psi(x') + psi*(-dE/dx) dt + E(x(T), T) - E(x(0), 0) - int dE/dt dt``,
    with ``psi`` exact on each linear piece, ``psi*`` and ``dE/dt`` by
    three-point Gauss quadrature and the energy difference exact. It is
    nonnegative for every curve and vanishes on solutions of the flow.
    """
    _check_curve(curve, landscape)
    dt = curve.dt
    v = curve.slopes
    nodes, wts = _GL3
    tau = 0.5 * (nodes[None, :] + 1.0)
    ts = curve.t[:-1, None] + dt[:, None] * tau
    xs = curve.x[:-1, None] + (curve.x[1:] - curve.x[:-1])[:, None] * tau
    w = np.broadcast_to(np.asarray(landscape.gradient(xs, ts), dtype=float), xs.shape)
    pss = np.asarray(family.psi_star(-w), dtype=float)
    if np.any(pss == INF):
        return INF
    dissipation = float(np.sum(np.asarray(family.psi(v)) * dt)) + float(
        np.sum(0.5 * dt[:, None] * wts[None, :] * pss))
    power = _power_integral(landscape, curve.t[:-1], curve.t[:-1] + dt, curve.x[:-1], curve.x[1:])
    e_diff = float(landscape.value(curve.x[-1], curve.t[-1])) - float(landscape.value(curve.x[0], curve.t[0]))
    return dissipation + e_diff - power


def variation(curve) -> tuple[float, float, float]:
    """``(Var, Var_AC, Jmp)`` of a BV or sampled curve; ``Var = Var_AC + Jmp``."""
    if isinstance(curve, BVCurve):
        var_ac = float(np.sum(np.abs(curve.ac_increments())))
        jmp = float(sum(j.size for j in curve.jumps))
    else:
        var_ac = float(np.sum(np.abs(np.diff(curve.x))))
        jmp = 0.0
    return var_ac + jmp, var_ac, jmp
