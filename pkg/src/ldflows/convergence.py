"""Reparametrization, recovery sequences and the convergence experiments.

The experiments compare finite-parameter objects (stochastic ensembles,
actions at finite ``beta``) with their limits and return a
:class:`ConvergenceTable` per experiment.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .curves import BVCurve, SampledCurve
from .dissipation import DissipationFamily, cosh_family
from .energy import EnergyLandscape
from .errors import INF, DegeneratePlateauError, FloatRangeError, LDFlowsError
from .flows import solve_generalized_flow, solve_quadratic_flow
from .functionals import action_J_alpha_beta, action_J_beta, action_J_Q, action_J_RI, jump_cost_delta
from .stochastic import simulate_jump_ensemble, simulate_sde_ensemble

__all__ = [
    "ParametrizedCurve",
    "ConvergenceTable",
    "InadmissibleCurveError",
    "reparametrize",
    "lagrangian_integral",
    "build_recovery_sequence",
    "mosco_quadratic_experiment",
    "mosco_ri_experiment",
    "lln_experiment",
    "bridge_experiment",
    "ldp_tube_experiment",
    "shifted_reference",
]


class InadmissibleCurveError(LDFlowsError):
    """The curve has infinite rate-independent action."""


@dataclass
class ParametrizedCurve:
    """Lipschitz reparametrization ``s -> (t(s), x(s))`` of a BV curve on ``[0, S]``.

    Nodes are exact images of the original grid nodes plus the interior
    points of each jump transition. ``kind[i]`` labels the interval
    ``[s[i], s[i+1]]`` as ``'ac'`` or ``'jump'``; ``node_s[k]`` is ``s(t_k)``
    for the original grid node ``k``.
    """

    s: np.ndarray
    t: np.ndarray
    x: np.ndarray
    kind: np.ndarray
    node_s: np.ndarray
    threshold: float
    jump_slices: list[tuple[int, int]] = field(default_factory=list)

    @property
    def S(self) -> float:
        return float(self.s[-1])

    @property
    def ds(self) -> np.ndarray:
        return np.diff(self.s)

    @property
    def t_dot(self) -> np.ndarray:
        return np.diff(self.t) / self.ds

    @property
    def x_dot(self) -> np.ndarray:
        return np.diff(self.x) / self.ds

    def t_of_s(self, s):
        return np.interp(s, self.s, self.t)

    def x_of_s(self, s):
        return np.interp(s, self.s, self.x)


def _jump_leg(x_a, x_b, t, landscape, A, n_nodes):
    """Nodes of the monotone transition ``x_a -> x_b`` with cumulative cost."""
    total = jump_cost_delta(x_a, x_b, t, landscape, A)
    if x_a == x_b:
        return np.array([x_a]), np.array([0.0])
    u = np.linspace(x_a, x_b, n_nodes + 1)
    gx, gw = np.polynomial.legendre.leggauss(8)
    mid = 0.5 * (u[:-1] + u[1:])
    half = 0.5 * np.abs(u[1:] - u[:-1])
    pts = mid[:, None] + half[:, None] * gx[None, :]
    wgt = np.maximum(np.abs(np.asarray(landscape.gradient(pts, t), dtype=float)), A)
    piece = half * np.sum(gw[None, :] * wgt, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(piece)])
    # pin the end to the adaptive closed form
    cum *= total / cum[-1]
    return u, cum


def reparametrize(curve: BVCurve, landscape: EnergyLandscape, A: float, n_jump: int = 2048
                  ) -> ParametrizedCurve:
    """Arc-length type rescaling ``s(t) = t + A Var_AC(x, [0, t]) + Jmp_E(x, [0, t])``.

    Continuous pieces keep their grid; each jump is expanded into an
    ``s``-interval of length ``Delta(x_left, x_plateau) + Delta(x_plateau, x_right)``
    traversed by the monotone transition at the frozen jump time with
    ``n_jump`` nodes per leg.

    Raises
    ------
    InadmissibleCurveError
        If ``|dE/dx| > A`` on a continuous piece.
    """
    check = action_J_RI(curve, landscape, A)
    if check.total == INF:
        raise InadmissibleCurveError(f"|dE/dx| exceeds A at t={check.violation_time}")
    left, right = curve.left_limits, curve.right_limits
    s_list, t_list, x_list, kinds = [0.0], [curve.t[0]], [left[0]], []
    node_s = np.empty(curve.t.size)
    jump_slices = []

    def add_jump(j):
        start = len(s_list) - 1
        for xa, xb in ((j.x_left, j.x_plateau), (j.x_plateau, j.x_right)):
            if xa == xb:
                continue
            u, cum = _jump_leg(xa, xb, j.time, landscape, A, n_jump)
            base = s_list[-1]
            s_list.extend((base + cum[1:]).tolist())
            t_list.extend([j.time] * (u.size - 1))
            x_list.extend(u[1:].tolist())
            kinds.extend(["jump"] * (u.size - 1))
        jump_slices.append((start, len(s_list) - 1))

    k0 = curve.jump_at(0)
    if k0 is not None:
        add_jump(k0)
    node_s[0] = 0.0 if k0 is None or k0.x_left == k0.x_plateau else s_list[-1]
    for k in range(curve.t.size - 1):
        dt = curve.t[k + 1] - curve.t[k]
        dx = left[k + 1] - right[k]
        s_list.append(s_list[-1] + dt + A * abs(dx))
        t_list.append(curve.t[k + 1])
        x_list.append(left[k + 1])
        kinds.append("ac")
        node_s[k + 1] = s_list[-1]
        j = curve.jump_at(k + 1)
        if j is not None:
            # s(t_k) sits at the plateau point of the expansion
            before = s_list[-1]
            add_jump(j)
            if j.x_left != j.x_plateau:
                node_s[k + 1] = before + jump_cost_delta(j.x_left, j.x_plateau, j.time, landscape, A)
    return ParametrizedCurve(np.array(s_list), np.array(t_list), np.array(x_list), np.array(kinds),
                             node_s, float(A), jump_slices)


def lagrangian_integral(pc: ParametrizedCurve, landscape: EnergyLandscape) -> float:
    """``int_0^S L ds`` of the rate-independent dissipation along ``pc``.

    Continuous pieces contribute ``A |dx|`` and jump pieces
    ``max(|dE/dx|, A) |dx|`` at the chord midpoint, so the result is an
    independent midpoint-rule evaluation of ``A Var_AC + Jmp_E``.
    """
    dx = np.abs(np.diff(pc.x))
    jump = pc.kind == "jump"
    xm = 0.5 * (pc.x[:-1] + pc.x[1:])
    tm = pc.t[:-1]
    w = np.broadcast_to(np.asarray(landscape.gradient(xm, tm), dtype=float), xm.shape)
    weight = np.where(jump, np.maximum(np.abs(w), pc.threshold), pc.threshold)
    return float(np.sum(weight * dx))


def build_recovery_sequence(pc: ParametrizedCurve, family: DissipationFamily, beta: float,
                            landscape: EnergyLandscape) -> SampledCurve:
    """Recovery curve ``x_beta`` for the ``beta`` member of ``family``.

    On each interval of the reparametrization the new time speed is
    ``t_beta' = max(t', eps_beta)`` with
    ``eps_beta = |x'| / dpsi*_beta(max(|dE/dx|, A + delta_beta))``.
    Time is rescaled by a factor ``lambda`` per segment so that ``x_beta``
    hits ``x`` at anchor times (``0``, ``T`` and one grid node between any
    two consecutive jumps). The curve is returned on the images of the
    ``s``-nodes with exact interval durations in ``steps``.

    Raises
    ------
    DegeneratePlateauError
        If ``t' = x' = 0`` on an interval of positive length.
    FloatRangeError
        If a jump transient would need durations below the double range,
        which happens once ``beta (|dE/dx| - A)`` approaches 700.
    """
    fam = family.with_beta(beta)
    A = fam.threshold
    delta = fam.delta()
    ds = pc.ds
    t_dot = np.diff(pc.t) / ds
    x_dot = np.diff(pc.x) / ds
    if np.any((t_dot <= 0) & (x_dot == 0) & (ds > 0)):
        raise DegeneratePlateauError("reparametrized curve rests in both t and x")
    sm = 0.5 * (pc.x[:-1] + pc.x[1:])
    tm = 0.5 * (pc.t[:-1] + pc.t[1:])
    w = np.abs(np.broadcast_to(np.asarray(landscape.gradient(sm, tm), dtype=float), sm.shape))
    slope = np.asarray(fam.dpsi_star(np.maximum(w, A + delta)), dtype=float)
    moving = (x_dot != 0) & (t_dot == 0)
    if np.any(moving & (slope == INF)):
        raise FloatRangeError(f"jump transient at beta={beta} needs durations below the double range; "
                              "beta (|dE/dx| - A) must stay below about 700")
    eps = np.where(slope == INF, 0.0, np.abs(x_dot) / slope)
    speed = np.maximum(t_dot, eps)
    steps = speed * ds
    if np.any(moving & (steps == 0) & (ds > 0)):
        raise FloatRangeError(f"jump transient durations underflow at beta={beta}")

    # anchors: original grid nodes that separate consecutive jumps
    anchor_idx = [0]
    node_idx = np.searchsorted(pc.s, pc.node_s)
    for (_, end), (start, _) in zip(pc.jump_slices, pc.jump_slices[1:]):
        between = node_idx[(node_idx > end) & (node_idx < start)]
        if between.size:
            anchor_idx.append(int(between[between.size // 2]))
    anchor_idx.append(pc.s.size - 1)
    lambdas = []
    for i0, i1 in zip(anchor_idx, anchor_idx[1:]):
        span_beta = float(np.sum(steps[i0:i1]))
        span = float(pc.t[i1] - pc.t[i0])
        lam = span_beta / span if span > 0 else 1.0
        steps[i0:i1] /= lam
        lambdas.append(lam)
    t_new = np.concatenate([[pc.t[0]], pc.t[0] + np.cumsum(steps)])
    # re-pin anchors to suppress summation drift
    for i in anchor_idx:
        t_new[i] = pc.t[i]
    curve = SampledCurve(t_new, pc.x.copy(), steps=steps,
                         flags={"lambdas": lambdas, "anchor_times": [float(pc.t[i]) for i in anchor_idx],
                                "beta": beta, "min_step": float(np.min(steps[steps > 0]))})
    return curve


# ---------------------------------------------------------------------------
# tables


@dataclass
class ConvergenceTable:
    """Rows of an experiment, ordered by the varied parameter."""

    parameter: str
    columns: list[str]
    rows: list[dict[str, Any]]
    meta: dict[str, Any] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([r.get(name, np.nan) for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for r in self.rows:
            writer.writerow([_fmt(r.get(c)) for c in self.columns])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"parameter": self.parameter, "columns": self.columns, "rows": self.rows, "meta": self.meta}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _gap_row(param_name, param, value, reference):
    gap = value - reference
    rel = abs(gap) / abs(reference) if reference not in (0.0, INF) else (0.0 if gap == 0 else INF)
    return {param_name: param, "value": value, "reference": reference, "gap": gap,
            "abs_gap": abs(gap), "rel_gap": rel}


# ---------------------------------------------------------------------------
# deterministic experiments


def mosco_quadratic_experiment(landscape: EnergyLandscape, curve: SampledCurve, omega: float,
                               beta_list: Sequence[float]) -> ConvergenceTable:
    """``J_beta(curve)`` with ``alpha = omega/beta`` against ``J_Q(curve)``.

    The recovery sequence is the constant one, so each row evaluates both
    functionals on the same curve.
    """
    betas = [float(b) for b in beta_list]
    if any(b2 >= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("beta_list must be decreasing")
    ref = action_J_Q(curve, landscape, omega).total
    rows = []
    for b in betas:
        rep = action_J_beta(curve, landscape, cosh_family(b, alpha=omega / b))
        rows.append(_gap_row("beta", b, rep.total, ref))
    cols = ["beta", "value", "reference", "gap", "abs_gap", "rel_gap"]
    return ConvergenceTable("beta", cols, rows, {"functional": "J_beta vs J_Q", "omega": omega})


def mosco_ri_experiment(landscape: EnergyLandscape, bv_curve: BVCurve, family_template: DissipationFamily,
                        beta_list: Sequence[float], n_jump: int = 2048) -> ConvergenceTable:
    """``J_beta(x_beta)`` along recovery sequences against ``J_RI(x)``.

    ``family_template`` fixes the tag and threshold; a cosh template must
    leave ``alpha`` tied to the threshold.
    """
    if family_template.tag == "cosh" and family_template.alpha is not None:
        raise ValueError("the rate-independent scaling needs alpha = exp(-beta A)")
    A = family_template.threshold
    ref = action_J_RI(bv_curve, landscape, A).total
    pc = reparametrize(bv_curve, landscape, A, n_jump)
    rows = []
    for b in sorted(float(x) for x in beta_list):
        rec = build_recovery_sequence(pc, family_template, b, landscape)
        rep = action_J_beta(rec, landscape, family_template.with_beta(b))
        row = _gap_row("beta", b, rep.total, ref)
        row["lambda_max"] = max(rec.flags["lambdas"])
        rows.append(row)
    cols = ["beta", "value", "reference", "gap", "abs_gap", "rel_gap", "lambda_max"]
    return ConvergenceTable("beta", cols, rows, {"functional": "J_beta(x_beta) vs J_RI", "threshold": A,
                                                 "S": pc.S})


# ---------------------------------------------------------------------------
# stochastic experiments


def lln_experiment(landscape: EnergyLandscape, n_list: Sequence[int], alpha: float, beta: float,
                   replicas: int, seed, x0: float = 0.0, T: float | None = None,
                   tol: float = 1e-9) -> ConvergenceTable:
    """Median sup-distance of ``X^n`` ensembles to the sinh-flow solution."""
    ns = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_list must be increasing")
    T = landscape.horizon if T is None else T
    reference = solve_generalized_flow(landscape, alpha, beta, x0, T, tol)
    rows = []
    prev = None
    for i, n in enumerate(ns):
        stats = simulate_jump_ensemble(landscape, n, alpha, beta, x0, T, replicas, [seed, i],
                                       reference=reference)
        med = float(np.median(stats.sup_distance_samples))
        exits = sum(1 for f in stats.flags if f.get("exited"))
        rows.append({"n": n, "median_sup_distance": med,
                     "ratio": (med / prev) if prev else None,
                     "scaled": med * math.sqrt(n), "exits": exits})
        prev = med
    cols = ["n", "median_sup_distance", "ratio", "scaled", "exits"]
    return ConvergenceTable("n", cols, rows, {"alpha": alpha, "beta": beta, "replicas": replicas})


def bridge_experiment(landscape: EnergyLandscape, n_list: Sequence[int], delta: float, omega: float,
                      h_target: float | None, replicas: int, seed, x0: float = 0.0, T: float | None = None,
                      window: tuple[float, float] | None = None, sde_dt: float | None = None,
                      grid_points: int = 201) -> ConvergenceTable:
    """Diffusive and deterministic limits of ``X^n`` with ``beta_n ~ n^-delta``, ``alpha_n = omega/beta_n``.

    For ``delta < 1`` the ensemble mean and variance at ``T`` are compared
    with the quadratic-flow endpoint (``beta_n = n^-delta``). For
    ``delta = 1`` the scaling is ``beta_n = 1/(n h)`` and the law of ``X^n``
    is compared with an Euler-Maruyama ensemble of
    ``dY = -2 omega dE/dx dt + sqrt(2 omega h) dW``. When ``window`` is given
    the variance is also pooled over all grid times in that window, which
    estimates the stationary variance. ``sde_dt`` is shrunk where needed so
    that it divides the output grid step.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    if delta == 1.0 and not (h_target and h_target > 0):
        raise ValueError("delta = 1 needs a positive h_target")
    T = landscape.horizon if T is None else T
    grid = np.linspace(0.0, T, grid_points)
    ns = [int(n) for n in n_list]
    deterministic = solve_quadratic_flow(landscape, omega, x0, T, 1e-10)
    rows = []

    def pooled(stats):
        if window is None:
            return None
        m = (grid >= window[0]) & (grid <= window[1])
        return float(np.mean(stats.variance_path[m]))

    for i, n in enumerate(ns):
        beta_n = 1.0 / (n * h_target) if delta == 1.0 else n ** (-delta)
        alpha_n = omega / beta_n
        stats = simulate_jump_ensemble(landscape, n, alpha_n, beta_n, x0, T, replicas, [seed, i], grid=grid)
        row = {"n": n, "beta_n": beta_n, "alpha_n": alpha_n,
               "mean_T": float(stats.mean_path.values[-1]), "var_T": float(stats.variance_path[-1]),
               "var_window": pooled(stats),
               "ode_T": float(deterministic.x[-1]),
               "mean_gap": float(np.max(np.abs(stats.mean_path.values - deterministic(grid))))}
        if delta == 1.0:
            # the SDE step must divide the output grid step
            step = T / (grid_points - 1)
            every = 16 if sde_dt is None else max(1, math.ceil(step / sde_dt - 1e-9))
            dt = step / every
            sde = simulate_sde_ensemble(landscape, omega, h_target, x0, T, dt, replicas, [seed, 10_000 + i],
                                        every=every)
            row.update({"sde_mean_T": float(sde.mean_path.values[-1]), "sde_var_T": float(sde.variance_path[-1]),
                        "sde_var_window": pooled(sde)})
        rows.append(row)
    cols = ["n", "beta_n", "alpha_n", "mean_T", "var_T", "var_window", "ode_T", "mean_gap"]
    if delta == 1.0:
        cols += ["sde_mean_T", "sde_var_T", "sde_var_window"]
    return ConvergenceTable("n", cols, rows, {"delta": delta, "omega": omega, "h": h_target,
                                              "replicas": replicas, "window": window})


def shifted_reference(landscape: EnergyLandscape, alpha: float, beta: float, x0: float, T: float,
                      shift: float, points: int = 401, tol: float = 1e-9) -> SampledCurve:
    """Sinh-flow solution plus the linear drift ``shift * t / T``.

    The curve starts at ``x0`` and ends ``shift`` away from the flow, so a
    tube around it excludes the typical path for ``|shift| > radius``.
    """
    sol = solve_generalized_flow(landscape, alpha, beta, x0, T, tol)
    grid = np.linspace(0.0, T, points)
    return SampledCurve(grid, sol(grid) + shift * grid / T)


def ldp_tube_experiment(landscape: EnergyLandscape, n_list: Sequence[int], alpha: float, beta: float,
                        reference: SampledCurve, tube_radius: float, replicas: int, seed,
                        x0: float = 0.0, min_events: int = 5, grid_points: int = 201) -> ConvergenceTable:
    """Tube probabilities ``p_n = P(sup |X^n - reference| <= r)`` and their decay rates.

    Each row reports the stay fraction, ``-(1/n) log p_n`` and the number of
    paths that stayed; rows with fewer than ``min_events`` stays are flagged
    and carry no rate.

    The companion ``action_bound`` is the smallest ``J_alpha_beta`` among
    admissible curves of the closed tube that start at ``x0``: the flow
    solution clipped to the tube (it rides the tube edge once the flow
    leaves) and the chord from ``x0`` to the clipped flow endpoint, itself
    clipped to the tube. Any such curve bounds the limiting decay rate from
    above, so the ratio ``rate / action_bound`` tends to at most 1.
    """
    T = float(reference.t[-1])
    fine = np.union1d(reference.t, np.linspace(0.0, T, 4001))
    lo = reference(fine) - tube_radius
    hi = reference(fine) + tube_radius
    if not lo[0] <= x0 <= hi[0]:
        raise ValueError("x0 lies outside the tube at t = 0")
    sol = solve_generalized_flow(landscape, alpha, beta, x0, T, 1e-10)
    edge = np.clip(sol(fine), lo, hi)
    chord = np.clip(x0 + (edge[-1] - x0) * fine / T, lo, hi)
    bounds = {}
    for name, path in (("edge", edge), ("chord", chord)):
        try:
            bounds[name] = action_J_alpha_beta(SampledCurve(fine, path), landscape, alpha, beta).total
        except LDFlowsError:
            bounds[name] = INF
    action_bound = min(bounds.values())
    grid = np.linspace(0.0, T, grid_points)
    rows = []
    for i, n in enumerate(int(n) for n in n_list):
        stats = simulate_jump_ensemble(landscape, n, alpha, beta, x0, T, replicas, [seed, i], grid=grid,
                                       reference=reference, tube_radius=tube_radius)
        stays = replicas - stats.tube_exit_count
        p = stays / replicas
        low = stays < min_events
        rate = None if (low or stays == 0) else -math.log(p) / n
        rows.append({"n": n, "stays": stays, "p_hat": p, "rate": rate, "low_statistics": low,
                     "action_bound": action_bound,
                     "ratio_to_bound": (rate / action_bound) if (rate is not None and action_bound > 0) else None})
    cols = ["n", "stays", "p_hat", "rate", "low_statistics", "action_bound", "ratio_to_bound"]
    return ConvergenceTable("n", cols, rows, {"alpha": alpha, "beta": beta, "tube_radius": tube_radius,
                                              "replicas": replicas, "candidate_actions": bounds})
