"""Dissipation pairs, their Legendre duality and the Hamiltonian/Lagrangian.

Four families are supported:

``cosh``
    ``psi*(w) = (2 alpha / beta)(cosh(beta w) - 1)`` with conjugate
    ``psi(v) = (v/beta) asinh(v / 2alpha) - (sqrt(v^2 + 4 alpha^2) - 2 alpha)/beta``.
    When ``alpha`` is not given it is tied to the threshold, ``alpha = exp(-beta A)``,
    and only ``log(alpha)`` is stored so that ``beta A`` in the hundreds is fine.
``vanishing_viscosity``
    ``psi*(w) = beta (|w| - A)_+^2`` and ``psi(v) = A|v| + v^2 / (4 beta)``.
``quadratic_limit``
    ``psi*(w) = omega w^2`` and ``psi(v) = v^2 / (4 omega)``.
``rate_independent``
    ``psi(v) = A|v|`` and ``psi*`` the indicator of ``[-A, A]``.

Infinite values are returned as the explicit sentinel :data:`INF` and never
produced by floating-point overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import bisect

from .energy import EnergyLandscape
from .errors import INF, DomainExitError, WidenBoundError

__all__ = [
    "DissipationFamily",
    "FAMILY_TAGS",
    "cosh_family",
    "vanishing_viscosity_family",
    "quadratic_family",
    "rate_independent_family",
    "psi",
    "psi_star",
    "dpsi_star",
    "legendre",
    "hamiltonian",
    "lagrangian",
    "check_conditions",
]

FAMILY_TAGS = ("cosh", "vanishing_viscosity", "quadratic_limit", "rate_independent")

# exp() of anything above this is treated as the infinity sentinel
_EXP_CAP = 700.0


def _log_delta(beta):
    return math.log(beta) / beta


def _cube_root_delta(beta):
    return beta ** (-1.0 / 3.0)


@dataclass(frozen=True)
class DissipationFamily:
    """One member ``(psi_beta, psi*_beta)`` of a dissipation family.

    Parameters
    ----------
    tag : str
        One of :data:`FAMILY_TAGS`.
    beta : float
        Inverse temperature. Ignored by ``quadratic_limit`` and ``rate_independent``.
    alpha : float, optional
        Jump-rate scale of the ``cosh`` family. ``None`` ties it to the
        threshold through ``alpha = exp(-beta A)``.
    omega : float, optional
        Scale of the ``quadratic_limit`` family.
    threshold : float
        Activation threshold ``A``.
    delta_rule : callable, optional
        ``beta -> delta_beta`` used by :meth:`K` and :func:`check_conditions`.
        Defaults to ``log(beta)/beta`` for ``cosh`` and ``beta**(-1/3)`` for
        ``vanishing_viscosity``.
    """

    tag: str
    beta: float = 1.0
    alpha: float | None = None
    omega: float | None = None
    threshold: float = 0.0
    delta_rule: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.tag not in FAMILY_TAGS:
            raise ValueError(f"unknown family tag {self.tag!r}")
        if self.tag in ("cosh", "vanishing_viscosity") and not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.tag == "quadratic_limit" and not (self.omega is not None and self.omega > 0):
            raise ValueError("quadratic_limit needs a positive omega")
        if self.threshold < 0:
            raise ValueError("threshold must be nonnegative")
        if self.delta_rule is None:
            default = {"cosh": _log_delta, "vanishing_viscosity": _cube_root_delta}.get(self.tag)
            object.__setattr__(self, "delta_rule", default)

    # -- parameters ---------------------------------------------------------

    @property
    def log_alpha(self) -> float:
        if self.alpha is None:
            return -self.beta * self.threshold
        return math.log(self.alpha)

    @property
    def alpha_value(self) -> float:
        """``alpha`` as a float; may underflow to 0 for ``alpha = exp(-beta A)``."""
        return math.exp(self.log_alpha)

    def with_beta(self, beta: float) -> "DissipationFamily":
        """Same family at another ``beta`` (a tied ``alpha`` follows along)."""
        return replace(self, beta=float(beta))

    def delta(self, beta: float | None = None) -> float:
        if self.delta_rule is None:
            raise ValueError(f"family {self.tag!r} has no delta_rule")
        return float(self.delta_rule(self.beta if beta is None else beta))

    def K(self, beta: float | None = None) -> float:
        """``K_beta = 1 / dpsi*_beta(A + delta_beta)``."""
        fam = self if beta is None else self.with_beta(beta)
        slope = float(fam.dpsi_star(fam.threshold + fam.delta()))
        if slope == INF:
            return 0.0
        if slope <= 0:
            return INF
        return 1.0 / slope

    def describe(self) -> dict:
        out = {"tag": self.tag, "beta": self.beta, "threshold": self.threshold}
        if self.tag == "cosh":
            out["log_alpha"] = self.log_alpha
            out["alpha_tied_to_threshold"] = self.alpha is None
        if self.omega is not None:
            out["omega"] = self.omega
        return out

    # -- potentials ---------------------------------------------------------

    def psi(self, v):
        """Primal dissipation potential ``psi(v)``."""
        v = np.asarray(v, dtype=float)
        u = np.abs(v)
        tag = self.tag
        if tag == "rate_independent":
            return self.threshold * u
        if tag == "quadratic_limit":
            return u * u / (4.0 * self.omega)
        if tag == "vanishing_viscosity":
            return self.threshold * u + u * u / (4.0 * self.beta)
        return _psi_cosh(u, self.log_alpha, self.beta)

    def psi_star(self, w):
        """Dual dissipation potential ``psi*(w)``."""
        w = np.asarray(w, dtype=float)
        a = np.abs(w)
        tag = self.tag
        if tag == "rate_independent":
            return np.where(a <= self.threshold, 0.0, INF)[()]
        if tag == "quadratic_limit":
            return self.omega * a * a
        if tag == "vanishing_viscosity":
            excess = np.maximum(a - self.threshold, 0.0)
            return self.beta * excess * excess
        expo = self.log_alpha + self.beta * a - math.log(self.beta)
        with np.errstate(over="ignore"):
            core = np.exp(np.minimum(expo, _EXP_CAP)) * np.expm1(-self.beta * a) ** 2
        return np.where(expo > _EXP_CAP, INF, core)[()]

    def dpsi_star(self, w):
        """Derivative ``d psi*(w) / dw`` (odd in ``w``)."""
        w = np.asarray(w, dtype=float)
        a = np.abs(w)
        s = np.sign(w)
        tag = self.tag
        if tag == "rate_independent":
            return np.where(a <= self.threshold, 0.0, s * INF)[()]
        if tag == "quadratic_limit":
            return 2.0 * self.omega * w
        if tag == "vanishing_viscosity":
            return 2.0 * self.beta * s * np.maximum(a - self.threshold, 0.0)
        expo = self.log_alpha + self.beta * a
        core = np.exp(np.minimum(expo, _EXP_CAP)) * (-np.expm1(-2.0 * self.beta * a))
        return (s * np.where(expo > _EXP_CAP, INF, core))[()]

    def d2psi_star(self, w):
        """Second derivative of ``psi*`` (where it exists)."""
        w = np.asarray(w, dtype=float)
        a = np.abs(w)
        tag = self.tag
        if tag == "rate_independent":
            return np.where(a < self.threshold, 0.0, INF)[()]
        if tag == "quadratic_limit":
            return 2.0 * self.omega + 0.0 * a
        if tag == "vanishing_viscosity":
            return np.where(a > self.threshold, 2.0 * self.beta, 0.0)[()]
        expo = self.log_alpha + self.beta * a + math.log(self.beta)
        core = np.exp(np.minimum(expo, _EXP_CAP)) * (1.0 + np.exp(-2.0 * self.beta * a))
        return np.where(expo > _EXP_CAP, INF, core)[()]

    def dpsi(self, v):
        """Derivative of ``psi`` (the inverse map of ``dpsi_star``)."""
        v = np.asarray(v, dtype=float)
        tag = self.tag
        if tag == "rate_independent":
            return self.threshold * np.sign(v)
        if tag == "quadratic_limit":
            return v / (2.0 * self.omega)
        if tag == "vanishing_viscosity":
            return self.threshold * np.sign(v) + v / (2.0 * self.beta)
        return np.sign(v) * _asinh_scaled(np.abs(v), self.log_alpha) / self.beta


def _asinh_scaled(u, log_alpha):
    """``asinh(u / (2 alpha))`` for ``u >= 0`` without forming ``1/alpha``."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        log_z = np.log(u) - math.log(2.0) - log_alpha
    big = log_z > 20.0
    z = np.exp(np.minimum(log_z, 20.0))
    small_branch = np.arcsinh(z)
    big_branch = math.log(2.0) + log_z + 0.25 * np.exp(-2.0 * np.where(big, log_z, 20.0))
    return np.where(big, big_branch, small_branch)


def _psi_cosh(u, log_alpha, beta):
    alpha = math.exp(log_alpha)
    two_a = 2.0 * alpha
    hyp = np.hypot(u, two_a)
    with np.errstate(invalid="ignore", divide="ignore"):
        # sqrt(u^2 + 4 alpha^2) - 2 alpha, written without cancellation
        excess = np.where(u > 0, u * (u / (hyp + two_a)), 0.0)
    value = (u * _asinh_scaled(u, log_alpha) - excess) / beta
    return np.where(u > 0, value, 0.0)[()]


def cosh_family(beta, alpha=None, threshold=0.0, delta_rule=None):
    return DissipationFamily("cosh", beta=beta, alpha=alpha, threshold=threshold, delta_rule=delta_rule)


def vanishing_viscosity_family(beta, threshold, delta_rule=None):
    return DissipationFamily("vanishing_viscosity", beta=beta, threshold=threshold, delta_rule=delta_rule)


def quadratic_family(omega, delta_rule=None):
    return DissipationFamily("quadratic_limit", omega=omega, delta_rule=delta_rule)


def rate_independent_family(threshold):
    return DissipationFamily("rate_independent", threshold=threshold)


def psi(family: DissipationFamily, v):
    """Closed-form ``psi`` of ``family`` at velocity ``v``."""
    return family.psi(v)


def psi_star(family: DissipationFamily, w):
    """Closed-form ``psi*`` of ``family`` at force ``w``."""
    return family.psi_star(w)


def dpsi_star(family: DissipationFamily, w):
    return family.dpsi_star(w)


# ---------------------------------------------------------------------------
# numeric Legendre transform

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(g, lo, hi, xtol):
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    gc, gd = g(c), g(d)
    best_x, best_g = (c, gc) if gc >= gd else (d, gd)
    while b - a > xtol:
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - _INV_PHI * (b - a)
            gc = g(c)
            if gc > best_g:
                best_x, best_g = c, gc
        else:
            a, c, gc = c, d, gd
            d = a + _INV_PHI * (b - a)
            gd = g(d)
            if gd > best_g:
                best_x, best_g = d, gd
    return best_x, best_g


def legendre(f: Callable[[float], float], v: float, search_bound=None, tol: float = 1e-10) -> float:
    """Numeric convex conjugate ``sup_w { v w - f(w) }``.

    Golden-section search on the concave map ``w -> v w - f(w)``.

    Parameters
    ----------
    f : callable
        Convex scalar function; may return ``inf`` outside its domain.
    v : float
        Dual variable.
    search_bound : (float, float), optional
        Interval searched for the maximizer. When omitted the interval
        ``[-1, 1]`` is doubled until the objective decreases at both ends.
    tol : float
        Target absolute accuracy of the returned value.

    Raises
    ------
    WidenBoundError
        If the maximizer lies at the edge of a user-supplied ``search_bound``.
    """
    v = float(v)

    def g(w):
        fw = float(f(w))
        return -INF if fw == INF else v * w - fw

    def ascending_at(w, direction):
        # objective still increases when stepping outward
        h = 1e-6 * max(1.0, abs(w))
        return g(w + direction * h) > g(w)

    if search_bound is None:
        lo, hi = -1.0, 1.0
        for _ in range(200):
            grow_lo = ascending_at(lo, -1)
            grow_hi = ascending_at(hi, +1)
            if not (grow_lo or grow_hi):
                break
            if grow_lo:
                lo *= 2.0
            if grow_hi:
                hi *= 2.0
        else:
            raise WidenBoundError("objective unbounded: conjugate is infinite")
    else:
        lo, hi = map(float, search_bound)
        if not lo < hi:
            raise ValueError("search_bound must be an increasing pair")
        if ascending_at(lo, -1) or ascending_at(hi, +1):
            raise WidenBoundError(f"maximizer not interior to {search_bound}; widen the bound")

    # the value error is about f'' * (dw)^2, so a tight x-tolerance is cheap
    xtol = max(tol, 1e-13 * max(abs(lo), abs(hi)))
    w_best, g_best = _golden_max(g, lo, hi, xtol)
    for edge in (lo, hi):
        ge = g(edge)
        if ge > g_best:
            w_best, g_best = edge, ge
    return g_best


# ---------------------------------------------------------------------------
# Hamiltonian and Lagrangian of the jump process


def _force(landscape: EnergyLandscape, x, t):
    if not np.all(landscape.contains(x, t)):
        raise DomainExitError("evaluation point outside the landscape domain")
    return np.asarray(landscape.gradient(x, t), dtype=float)


def hamiltonian(x, p, t, landscape: EnergyLandscape, alpha: float, beta: float):
    """``H(x, p) = r+ (e^p - 1) + r- (e^-p - 1)`` with ``r+- = alpha exp(-+ beta dE/dx)``."""
    grad = _force(landscape, x, t)
    p = np.asarray(p, dtype=float)
    r_plus = alpha * np.exp(-beta * grad)
    r_minus = alpha * np.exp(beta * grad)
    return r_plus * np.expm1(p) + r_minus * np.expm1(-p)


def lagrangian(x, v, t, landscape: EnergyLandscape, alpha: float, beta: float):
    """Legendre dual of :func:`hamiltonian` in closed form.

    ``L(x, v) = v log((v + S) / (2 r+)) - S + r+ + r-`` with
    ``S = sqrt(v^2 + 4 r+ r-)``. Evaluated directly from the rates, with
    ``v + S`` rewritten as ``4 r+ r- / (S - v)`` for negative ``v``.
    """
    grad = _force(landscape, x, t)
    v = np.asarray(v, dtype=float)
    r_plus = alpha * np.exp(-beta * grad)
    r_minus = alpha * np.exp(beta * grad)
    c = 4.0 * r_plus * r_minus
    S = np.sqrt(v * v + c)
    v_plus_S = np.where(v >= 0, v + S, c / (S - v))
    return v * np.log(v_plus_S / (2.0 * r_plus)) - S + r_plus + r_minus


# ---------------------------------------------------------------------------
# conditions A-D


def _strictly_decreasing(values):
    vals = [float(x) for x in values]
    return all(b < a for a, b in zip(vals, vals[1:]))


def _nondecreasing(values, atol=1e-12):
    v = np.asarray(values, dtype=float)
    a, b = v[:-1], v[1:]
    return bool(np.all((b >= a - atol) | (b == a)))


def _log_dpsi_star(fam: DissipationFamily, a):
    """``log dpsi*(a)`` for ``a >= 0``; finite where ``dpsi*`` itself overflows."""
    a = np.asarray(a, dtype=float)
    if fam.tag == "cosh":
        with np.errstate(divide="ignore"):
            return fam.log_alpha + fam.beta * a + np.log(-np.expm1(-2.0 * fam.beta * a))
    with np.errstate(divide="ignore"):
        return np.log(np.abs(fam.dpsi_star(a)))


def _eta(fam: DissipationFamily, w: float, factor: float, tol: float = 1e-10):
    """Root ``eta >= 0`` of ``dpsi*(w + eta) = factor * dpsi*(w)``, solved in log form."""
    base = float(_log_dpsi_star(fam, w))
    if base == -INF:
        return 0.0
    target = math.log(factor) + base
    if target == INF:
        return INF

    def gap(eta):
        return float(_log_dpsi_star(fam, w + eta)) - target

    hi = 1e-3
    while gap(hi) < 0:
        hi *= 2.0
        if hi > 1e6:
            return INF
    return bisect(gap, 0.0, hi, xtol=tol)


def check_conditions(family: DissipationFamily, beta_sequence, M: float, R: float,
                     n_grid: int = 512, eta_factor: float = 2.0) -> dict:
    """Evaluate conditions A-D along an increasing sequence of ``beta``.

    For each ``beta`` the report lists ``K_beta``, the condition-C supremum
    ``sup_|w|<=R dpsi*(|w| + M K) / dpsi*(|w| v (A + delta)) * K`` over an
    ``n_grid``-point grid on ``[-R, R]``, the third condition-C quantity
    ``dpsi*(A + M K) K``, and the largest ``eta_beta(w, eta_factor)`` of
    condition D over the same grid (restricted to ``|w| > A``; the branch
    ``|w| <= A`` is reported separately and not enforced). Conditions A and
    B are checked by sampling.

    The verdict passes when ``K``, the C supremum and the third C quantity
    all decrease strictly along the sequence, and ``eta`` stays bounded
    (does not grow along the sequence).
    """
    betas = [float(b) for b in beta_sequence]
    if len(betas) < 2 or any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("beta_sequence must be strictly increasing with at least two entries")
    if family.delta_rule is None:
        raise ValueError("family needs a delta_rule for condition C")
    A = family.threshold
    w_grid = np.linspace(-R, R, n_grid)
    abs_w = np.abs(w_grid)
    rows = []
    for beta in betas:
        fam = family.with_beta(beta)
        delta = fam.delta()
        K = fam.K()
        log_num = _log_dpsi_star(fam, abs_w + M * K)
        log_den = _log_dpsi_star(fam, np.maximum(abs_w, A + delta))
        with np.errstate(invalid="ignore", over="ignore"):
            ratio = np.where(log_num == -INF, 0.0, np.exp(log_num - log_den)) * K
        ratio = np.where(np.isnan(ratio), INF, ratio)
        c_sup = float(np.max(ratio))
        c_edge = float(np.exp(_log_dpsi_star(fam, A + M * K))) * K if K > 0 else 0.0

        active = abs_w[abs_w > A]
        inactive = abs_w[(abs_w <= A) & (abs_w > 0)]
        eta_active = max((_eta(fam, w, eta_factor) for w in active[:: max(1, len(active) // 64)]),
                         default=0.0)
        eta_inactive = max((_eta(fam, w, eta_factor) for w in inactive[:: max(1, len(inactive) // 16)]),
                           default=0.0)

        samples = np.linspace(-R, R, 41)
        cond_a = bool(
            np.allclose(fam.psi(samples), fam.psi(-samples), rtol=0, atol=0)
            and np.allclose(fam.psi_star(samples), fam.psi_star(-samples), rtol=0, atol=0)
            and float(fam.psi(0.0)) == 0.0 and float(fam.psi_star(0.0)) == 0.0
            and _nondecreasing(fam.dpsi_star(samples))
        )
        rows.append({
            "beta": beta,
            "delta": delta,
            "K": K,
            "c_sup": c_sup,
            "c_edge": c_edge,
            "eta_max": eta_active,
            "eta_max_below_threshold": eta_inactive,
            "condition_A": cond_a,
        })

    # condition B: psi* -> 0 inside, -> infinity outside the threshold band
    inside = [float(family.with_beta(b).psi_star(0.5 * A)) for b in betas] if A > 0 else [0.0]
    outside = [float(family.with_beta(b).psi_star(A + 0.5 * max(A, 1.0))) for b in betas]
    cond_b = (all(y <= x + 1e-300 for x, y in zip(inside, inside[1:]))
              and all(y >= x for x, y in zip(outside, outside[1:])))

    K_dec = _strictly_decreasing([r["K"] for r in rows])
    sup_dec = _strictly_decreasing([r["c_sup"] for r in rows])
    edge_dec = _strictly_decreasing([r["c_edge"] for r in rows])
    etas = [r["eta_max"] for r in rows]
    eta_bounded = all(np.isfinite(etas)) and max(etas) <= etas[0] * (1 + 1e-6) + 1e-9
    verdict = bool(K_dec and sup_dec and edge_dec and eta_bounded)
    return {
        "family": family.describe(),
        "M": M,
        "R": R,
        "rows": rows,
        "condition_A": all(r["condition_A"] for r in rows),
        "condition_B_trend": bool(cond_b),
        "K_decreasing": K_dec,
        "c_sup_decreasing": sup_dec,
        "c_edge_decreasing": edge_dec,
        "eta_bounded": bool(eta_bounded),
        "verdict": verdict,
    }
