"""Monte Carlo simulation of the lattice jump process and its diffusive limits.

All simulators share one design: replicas advance in lockstep as numpy
vectors, and every replica owns its own random stream spawned from the run
seed (``SeedSequence(seed, spawn_key=(r,))``). A single-path call is the
one-replica case of the same engine, so replica ``r`` of an ensemble is
bit-identical to a single run seeded with that replica's stream.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .curves import SampledCurve
from .energy import EnergyLandscape, WigglyLandscape
from .errors import DomainExitError, LowStatisticsError

__all__ = [
    "JumpPath",
    "SamplePath",
    "EnsembleStats",
    "EscapeCounts",
    "SimulationSpec",
    "replica_seed",
    "simulate_jump_process",
    "simulate_jump_ensemble",
    "simulate_sde",
    "simulate_sde_ensemble",
    "simulate_langevin_wiggly",
    "langevin_escape_ensemble",
    "estimate_escape_rates",
    "run_ensemble",
]

_BLOCK = 1024


def replica_seed(seed, r: int) -> np.random.SeedSequence:
    """Independent stream for replica ``r`` of a run seeded with ``seed``."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + (r,))
    return np.random.SeedSequence(seed, spawn_key=(r,))


def _as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


class _Streams:
    """Per-replica random buffers refilled in fixed-size blocks."""

    def __init__(self, seeds: Sequence[np.random.SeedSequence], kinds: Sequence[str], block=_BLOCK):
        self.gens = [np.random.Generator(np.random.PCG64(s)) for s in seeds]
        self.kinds = tuple(kinds)
        self.block = block
        R = len(self.gens)
        self.buf = {k: np.empty((R, block)) for k in self.kinds}
        self.ptr = np.full(R, block, dtype=np.int64)

    def _refill(self, rows):
        for r in rows:
            g = self.gens[r]
            for k in self.kinds:
                if k == "exponential":
                    self.buf[k][r] = g.standard_exponential(self.block)
                elif k == "uniform":
                    self.buf[k][r] = g.random(self.block)
                else:
                    self.buf[k][r] = g.standard_normal(self.block)
        self.ptr[rows] = 0

    def draw(self, idx: np.ndarray) -> dict[str, np.ndarray]:
        """One draw of every kind for the replicas in ``idx``."""
        empty = idx[self.ptr[idx] >= self.block]
        if empty.size:
            self._refill(empty)
        p = self.ptr[idx]
        out = {k: self.buf[k][idx, p] for k in self.kinds}
        self.ptr[idx] = p + 1
        return out


# ---------------------------------------------------------------------------
# path containers


@dataclass
class JumpPath:
    """Exact trajectory of the lattice process ``X^n`` as an event list.

    ``times[k]`` is the ``k``-th jump time and ``directions[k]`` its sign.
    The path is right-continuous: at a jump time it already has the new value.
    """

    lattice_scale: int
    start_index: int
    times: np.ndarray
    directions: np.ndarray
    horizon: float
    exited: bool = False
    exit_time: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.directions = np.asarray(self.directions, dtype=np.int64)

    @property
    def start(self) -> float:
        return self.start_index / self.lattice_scale

    @property
    def event_count(self) -> int:
        return int(self.times.size)

    def positions(self) -> np.ndarray:
        """Position right after each event, with the start prepended."""
        steps = np.concatenate([[self.start_index], self.start_index + np.cumsum(self.directions)])
        return steps / self.lattice_scale

    def value_at(self, t):
        k = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right")
        return self.positions()[k]

    def end_value(self) -> float:
        return float(self.positions()[-1])

    def sample(self, grid) -> "SamplePath":
        grid = np.asarray(grid, dtype=float)
        return SamplePath(grid, self.value_at(grid),
                          flags={"exited": self.exited, "exit_time": self.exit_time})

    def sup_distance(self, reference: SampledCurve) -> float:
        """Exact sup-norm distance to a piecewise-linear reference on ``[0, T_end]``.

        On each constant stretch the distance to a linear piece is largest at
        a node, so it suffices to check the union of event times and
        reference nodes with both one-sided values.
        """
        end = self.exit_time if self.exited else self.horizon
        ref_t = reference.t[reference.t <= end]
        pts = np.union1d(np.append(ref_t, [0.0, end]), self.times)
        pos = self.positions()
        right = pos[np.searchsorted(self.times, pts, side="right")]
        left = pos[np.searchsorted(self.times, pts, side="left")]
        ref = reference(pts)
        return float(max(np.max(np.abs(right - ref)), np.max(np.abs(left - ref))))

    def csv_rows(self):
        """``(t, x)`` rows at the start, at every event and at the horizon."""
        end = self.exit_time if self.exited else self.horizon
        pos = self.positions()
        t = np.concatenate([[0.0], self.times, [end]])
        x = np.concatenate([pos, [pos[-1]]])
        return np.column_stack([t, x])


@dataclass
class SamplePath:
    """Path on a uniform time grid (SDE and Langevin output)."""

    grid: np.ndarray
    values: np.ndarray
    flags: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape:
            raise ValueError("grid and values must have equal shape")

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0]) if self.grid.size > 1 else 0.0

    def as_curve(self) -> SampledCurve:
        return SampledCurve(self.grid, self.values, flags=dict(self.flags))


@dataclass
class EnsembleStats:
    """Summary statistics of a replica ensemble on a common time grid."""

    replica_count: int
    grid: np.ndarray
    mean_path: SamplePath
    variance_path: np.ndarray
    sup_distance_samples: np.ndarray
    tube_exit_count: int
    final_values: np.ndarray
    flags: list[dict[str, Any]] = field(default_factory=list)
    values: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "replica_count": self.replica_count,
            "tube_exit_count": self.tube_exit_count,
            "median_sup_distance": float(np.median(self.sup_distance_samples))
            if self.sup_distance_samples.size else None,
            "grid": self.grid.tolist(),
            "mean": self.mean_path.values.tolist(),
            "variance": self.variance_path.tolist(),
            "sup_distance_samples": self.sup_distance_samples.tolist(),
            "flags": self.flags,
        }


def _ensemble_stats(grid, values, sup, tube_radius, flags, keep_values=False) -> EnsembleStats:
    R = values.shape[0]
    mean = values.mean(axis=0)
    var = values.var(axis=0, ddof=1) if R > 1 else np.zeros_like(mean)
    sup = np.asarray(sup, dtype=float)
    exits = int(np.sum(sup > tube_radius)) if np.isfinite(tube_radius) else 0
    return EnsembleStats(
        replica_count=R, grid=grid, mean_path=SamplePath(grid, mean), variance_path=np.maximum(var, 0.0),
        sup_distance_samples=sup, tube_exit_count=exits, final_values=values[:, -1].copy(),
        flags=flags, values=values if keep_values else None,
    )


# ---------------------------------------------------------------------------
# lattice jump process


def _lattice_index(x0: float, n: int) -> int:
    k = round(x0 * n)
    if abs(k - x0 * n) > 1e-9 * max(1.0, abs(x0 * n)):
        raise ValueError(f"x0={x0} is not on the lattice (1/{n})Z")
    return int(k)


@dataclass
class _JumpRun:
    grid: np.ndarray
    values: np.ndarray
    sup: np.ndarray
    event_counts: np.ndarray
    exited: np.ndarray
    exit_time: np.ndarray
    events: list | None


def _jump_engine(landscape, n, alpha, beta, x0, T, seeds, grid, reference, record_events) -> _JumpRun:
    n = int(n)
    if n < 1:
        raise ValueError("lattice scale n must be a positive integer")
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    if T > landscape.horizon * (1 + 1e-12):
        raise ValueError("T exceeds the landscape horizon")
    k0 = _lattice_index(x0, n)
    if not landscape.contains(k0 / n, 0.0):
        raise DomainExitError("start point outside the domain")
    R = len(seeds)
    lo, hi = landscape.x_domain
    bR = beta * landscape.grad_bound
    # dominating rate 2 n alpha exp(beta R); acceptance probabilities in log form
    Lam = 2.0 * n * alpha * math.exp(bR)
    streams = _Streams(seeds, ("exponential", "uniform"))

    k = np.full(R, k0, dtype=np.int64)
    t = np.zeros(R)
    G = grid.size
    values = np.empty((R, G))
    next_j = np.zeros(R, dtype=np.int64)
    counts = np.zeros(R, dtype=np.int64)
    exited = np.zeros(R, dtype=bool)
    exit_time = np.full(R, np.nan)
    sup = np.zeros(R)
    if reference is not None:
        sup[:] = abs(k0 / n - float(reference(0.0)))
    ev_rep, ev_t, ev_d = ([], [], []) if record_events else (None, None, None)

    active = np.arange(R)
    while active.size:
        draws = streams.draw(active)
        t_new = t[active] + draws["exponential"] / Lam
        x_cur = k[active] / n
        # record grid values passed before the candidate time
        while True:
            jj = next_j[active]
            m = jj < G
            m[m] = grid[jj[m]] < t_new[m]
            if not m.any():
                break
            rows = active[m]
            values[rows, jj[m]] = x_cur[m]
            if reference is not None:
                d = np.abs(x_cur[m] - reference.x_at_grid[jj[m]])
                sup[rows] = np.maximum(sup[rows], d)
            next_j[rows] += 1
        done = t_new > T
        live = ~done
        idx = active[live]
        tl = t_new[live]
        xl = x_cur[live]
        t[idx] = tl
        grad = np.broadcast_to(np.asarray(landscape.gradient(xl, tl), dtype=float), xl.shape)
        u = draws["uniform"][live]
        p_plus = 0.5 * np.exp(-beta * grad - bR)
        p_minus = 0.5 * np.exp(beta * grad - bR)
        step = np.where(u < p_plus, 1, np.where(u < p_plus + p_minus, -1, 0))
        jumped = step != 0
        if jumped.any():
            jr = idx[jumped]
            k[jr] += step[jumped]
            counts[jr] += 1
            x_new = k[jr] / n
            tj = tl[jumped]
            if reference is not None:
                ref = reference(tj)
                sup[jr] = np.maximum(sup[jr], np.maximum(np.abs(x_new - ref), np.abs(xl[jumped] - ref)))
            if record_events:
                ev_rep.append(jr)
                ev_t.append(tj)
                ev_d.append(step[jumped])
            out = (x_new < lo) | (x_new > hi)
            if out.any():
                gone = jr[out]
                exited[gone] = True
                exit_time[gone] = tj[out]
                # freeze exited replicas: remaining grid values hold the exit position
                for r in gone:
                    values[r, next_j[r]:] = k[r] / n
                    next_j[r] = G
        keep = live.copy()
        keep[live] = ~exited[idx]
        active = active[keep]

    events = None
    if record_events:
        if ev_rep:
            rep = np.concatenate(ev_rep)
            tt = np.concatenate(ev_t)
            dd = np.concatenate(ev_d)
            order = np.lexsort((tt, rep))
            rep, tt, dd = rep[order], tt[order], dd[order]
            bounds = np.searchsorted(rep, np.arange(R + 1))
            events = [(tt[bounds[r]:bounds[r + 1]], dd[bounds[r]:bounds[r + 1]]) for r in range(R)]
        else:
            events = [(np.empty(0), np.empty(0, dtype=np.int64)) for _ in range(R)]
    return _JumpRun(grid, values, sup, counts, exited, exit_time, events)


class _Reference:
    """Piecewise-linear reference with values cached on the sampling grid."""

    def __init__(self, curve: SampledCurve, grid):
        self.curve = curve
        self.x_at_grid = curve(grid)

    def __call__(self, s):
        return self.curve(s)


def simulate_jump_process(landscape: EnergyLandscape, n: int, alpha: float, beta: float,
                          x0: float, T: float, seed) -> JumpPath:
    """Exact simulation of the lattice chain by thinning.

    The chain jumps from ``x`` to ``x +- 1/n`` at rates ``n alpha exp(-+ beta dE/dx(x, t))``.
    Candidates arrive at the dominating rate ``2 n alpha exp(beta R)`` and are
    accepted as a right or left jump with probabilities ``n r+- / Lambda``.

    Parameters
    ----------
    landscape : EnergyLandscape
        Supplies ``dE/dx`` and the bound ``R``.
    n : int
        Lattice scale; positions live on ``(1/n) Z``.
    alpha, beta : float
        Rate scale and inverse temperature.
    x0 : float
        Start, a multiple of ``1/n``.
    T : float
        Horizon.
    seed : int or SeedSequence
        Reproducibility seed.

    Returns
    -------
    JumpPath
        Event list; truncated with ``exited=True`` on leaving the domain.
    """
    grid = np.array([0.0, T])
    run = _jump_engine(landscape, n, alpha, beta, x0, T, [_as_seed_sequence(seed)], grid, None, True)
    times, dirs = run.events[0]
    exited = bool(run.exited[0])
    return JumpPath(int(n), _lattice_index(x0, n), times, dirs, float(T), exited,
                    float(run.exit_time[0]) if exited else None)


def simulate_jump_ensemble(landscape, n, alpha, beta, x0, T, replicas, seed, grid=None,
                           reference: SampledCurve | None = None, tube_radius=math.inf,
                           keep_values=False) -> EnsembleStats:
    """Lockstep ensemble of :func:`simulate_jump_process` replicas.

    Replica ``r`` uses the stream ``replica_seed(seed, r)``. Values are
    recorded on ``grid`` (default 201 uniform points). When a reference is
    given, the sup distance is tracked at every event and grid time.
    """
    if replicas < 2:
        raise ValueError("an ensemble needs at least two replicas")
    grid = np.linspace(0.0, T, 201) if grid is None else np.asarray(grid, dtype=float)
    seeds = [replica_seed(seed, r) for r in range(replicas)]
    ref = _Reference(reference, grid) if reference is not None else None
    run = _jump_engine(landscape, n, alpha, beta, x0, T, seeds, grid, ref, False)
    flags = [{"replica": r, "exited": True, "exit_time": float(run.exit_time[r])}
             for r in np.flatnonzero(run.exited)]
    sup = run.sup if reference is not None else np.zeros(0)
    stats = _ensemble_stats(grid, run.values, sup, tube_radius, flags, keep_values)
    stats.flags.append({"event_counts_mean": float(run.event_counts.mean())})
    return stats


# ---------------------------------------------------------------------------
# SDE and Langevin


def _sde_engine(drift: Callable, noise: float, x0, T, dt, seeds, domain, every=1):
    K = int(round(T / dt))
    if K < 1 or abs(K * dt - T) > 1e-9 * T:
        raise ValueError("T must be an integer multiple of dt")
    R = len(seeds)
    streams = _Streams(seeds, ("normal",)) if noise > 0 else None
    lo, hi = domain
    x = np.full(R, float(x0))
    n_rec = K // every + 1
    grid = np.arange(n_rec) * (every * dt)
    values = np.empty((R, n_rec))
    values[:, 0] = x
    alive = np.ones(R, dtype=bool)
    exit_time = np.full(R, np.nan)
    sq = math.sqrt(dt) * noise
    all_idx = np.arange(R)
    for i in range(1, K + 1):
        t = (i - 1) * dt
        step = drift(x, t) * dt
        if streams is not None:
            step = step + sq * streams.draw(all_idx)["normal"]
        x_new = np.where(alive, x + step, x)
        out = alive & ((x_new < lo) | (x_new > hi))
        if out.any():
            exit_time[out] = i * dt
            alive &= ~out
            x_new = np.where(out, np.clip(x_new, lo, hi), x_new)
        x = x_new
        if i % every == 0:
            values[:, i // every] = x
    return grid, values, alive, exit_time


def _check_sde_step(landscape, omega, dt):
    Lx = landscape.grad_space_lipschitz
    if Lx is None:
        raise ValueError("landscape declares no spatial Lipschitz constant; the step bound is unknown")
    if Lx > 0 and not dt < 1.0 / (2.0 * omega * Lx):
        raise ValueError(f"dt={dt} violates the stability bound dt < 1/(2 omega L_x) = {1 / (2 * omega * Lx)}")


def simulate_sde(landscape: EnergyLandscape, omega: float, h: float, x0: float, T: float,
                 dt: float, seed) -> SamplePath:
    """Euler-Maruyama path of ``dY = -2 omega dE/dx(Y, t) dt + sqrt(2 omega h) dW``.

    With ``h = 0`` this is explicit Euler for the quadratic gradient flow.
    Leaving the domain truncates the path (remaining values are frozen at
    the boundary) and sets ``flags['exited']``.
    """
    if omega <= 0 or h < 0:
        raise ValueError("need omega > 0 and h >= 0")
    _check_sde_step(landscape, omega, dt)
    if not landscape.contains(x0, 0.0):
        raise DomainExitError("start point outside the domain")

    def drift(x, t):
        return -2.0 * omega * landscape.gradient(x, t)

    grid, values, alive, exit_time = _sde_engine(
        drift, math.sqrt(2.0 * omega * h), x0, T, dt, [_as_seed_sequence(seed)], landscape.x_domain)
    flags = {"exited": not bool(alive[0])}
    if not alive[0]:
        flags["exit_time"] = float(exit_time[0])
    return SamplePath(grid, values[0], flags)


def simulate_sde_ensemble(landscape, omega, h, x0, T, dt, replicas, seed, reference=None,
                          tube_radius=math.inf, every=1, keep_values=False) -> EnsembleStats:
    """Lockstep ensemble of :func:`simulate_sde`; replica ``r`` matches ``replica_seed(seed, r)``."""
    if replicas < 2:
        raise ValueError("an ensemble needs at least two replicas")
    _check_sde_step(landscape, omega, dt)
    seeds = [replica_seed(seed, r) for r in range(replicas)]

    def drift(x, t):
        return -2.0 * omega * landscape.gradient(x, t)

    grid, values, alive, exit_time = _sde_engine(
        drift, math.sqrt(2.0 * omega * h), x0, T, dt, seeds, landscape.x_domain, every)
    sup = np.max(np.abs(values - reference(grid)), axis=1) if reference is not None else np.zeros(0)
    flags = [{"replica": int(r), "exited": True, "exit_time": float(exit_time[r])}
             for r in np.flatnonzero(~alive)]
    return _ensemble_stats(grid, values, sup, tube_radius, flags, keep_values)


def _langevin_dt(wiggly: WigglyLandscape, dt):
    n = wiggly.lattice_scale
    bound = (10.0 * n) ** -2
    if dt is None:
        return min(wiggly.default_dt(), bound)
    if dt > bound * (1 + 1e-12):
        raise ValueError(f"dt={dt} does not resolve the wiggle; need dt <= (10 n)^-2 = {bound}")
    return float(dt)


def _langevin_drift(wiggly: WigglyLandscape):
    def drift(x, t):
        return -wiggly.gradient(x, t)
    return drift


def simulate_langevin_wiggly(wiggly: WigglyLandscape, beta: float, T: float, dt: float | None,
                             seed, x0: float | None = None) -> SamplePath:
    """Overdamped Langevin dynamics ``dZ = -d/dx[E + e(n x)/n] dt + sqrt(2/(beta n)) dW``.

    ``beta = inf`` gives the noiseless gradient flow. The default ``dt`` is
    ``min(0.1 / (n max|e'|)^2, (10 n)^-2)``; the start defaults to the well
    ``k = 0``.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    dt = _langevin_dt(wiggly, dt)
    x0 = float(wiggly.well_center(0)) if x0 is None else float(x0)
    if not wiggly.base.contains(x0, 0.0):
        raise DomainExitError("start point outside the domain")
    noise = 0.0 if math.isinf(beta) else math.sqrt(2.0 / (beta * wiggly.lattice_scale))
    K = int(round(T / dt))
    T_eff = K * dt
    grid, values, alive, exit_time = _sde_engine(
        _langevin_drift(wiggly), noise, x0, T_eff, dt, [_as_seed_sequence(seed)], wiggly.base.x_domain)
    flags = {"exited": not bool(alive[0]), "dt": dt}
    if not alive[0]:
        flags["exit_time"] = float(exit_time[0])
    return SamplePath(grid, values[0], flags)


# ---------------------------------------------------------------------------
# escape-rate estimation


@dataclass
class EscapeCounts:
    """Pooled inter-well transition counts and residence (exposure) time."""

    left: int = 0
    right: int = 0
    exposure: float = 0.0

    @property
    def transitions(self) -> int:
        return self.left + self.right

    def rates(self, min_transitions: int = 20) -> tuple[float, float]:
        if self.transitions < min_transitions:
            raise LowStatisticsError(
                f"only {self.transitions} inter-well transitions observed; need {min_transitions}")
        return self.left / self.exposure, self.right / self.exposure


class _WellTracker:
    """Nearest-minimum well assignment with a hysteresis band.

    A replica is reassigned only once it comes within ``0.5 - band`` cells of
    another well centre, so brief recrossings of the barrier top are not
    counted. A wide band (small core around each minimum) makes every
    counted hop start from the bottom of a well; narrow bands bias the
    left/right ratio because a hop is then measured from the core edge. Exposure accumulates from the first assignment on.
    """

    def __init__(self, wiggly: WigglyLandscape, R: int, band: float = 0.4):
        self.wiggly = wiggly
        self.core = 0.5 - band
        self.well = np.zeros(R, dtype=np.int64)
        self.assigned = np.zeros(R, dtype=bool)
        self.counts = EscapeCounts()

    def update(self, x, dt_elapsed, alive=None):
        c = self.wiggly.well_coordinate(x)
        k = np.rint(c).astype(np.int64)
        inside = np.abs(c - k) < self.core
        if alive is not None:
            inside &= alive
        exposed = self.assigned if alive is None else (self.assigned & alive)
        self.counts.exposure += dt_elapsed * int(np.count_nonzero(exposed))
        newly = inside & ~self.assigned
        self.well[newly] = k[newly]
        self.assigned |= newly
        moved = inside & self.assigned & (k != self.well)
        if moved.any():
            diff = k[moved] - self.well[moved]
            self.counts.right += int(np.sum(diff[diff > 0]))
            self.counts.left += int(-np.sum(diff[diff < 0]))
            self.well[moved] = k[moved]


def estimate_escape_rates(path, wiggly: WigglyLandscape, min_transitions: int = 20,
                          band: float = 0.4) -> tuple[float, float]:
    """Left and right escape rates from one path or a list of paths.

    Each path is split into residences in the wells of the wiggle (nearest
    minimum with a hysteresis band of ``band`` cells). Rates are transition
    counts per unit residence time, pooled over all paths.

    Raises
    ------
    LowStatisticsError
        If fewer than ``min_transitions`` transitions are observed.
    """
    paths = [path] if isinstance(path, SamplePath) else list(path)
    total = EscapeCounts()
    for p in paths:
        tracker = _WellTracker(wiggly, 1, band)
        steps = np.diff(p.grid, prepend=p.grid[0])
        for x, dt in zip(p.values, steps):
            tracker.update(np.array([x]), dt)
        total.left += tracker.counts.left
        total.right += tracker.counts.right
        total.exposure += tracker.counts.exposure
    return total.rates(min_transitions)


def langevin_escape_ensemble(wiggly: WigglyLandscape, beta: float, T: float, replicas: int, seed,
                             dt: float | None = None, band: float = 0.4) -> EscapeCounts:
    """Run ``replicas`` Langevin paths in lockstep and count escapes on the fly.

    Equivalent to pooling :func:`estimate_escape_rates` over the individual
    paths of :func:`simulate_langevin_wiggly`, without storing them.
    """
    dt = _langevin_dt(wiggly, dt)
    K = int(round(T / dt))
    seeds = [replica_seed(seed, r) for r in range(replicas)]
    streams = _Streams(seeds, ("normal",))
    noise = math.sqrt(2.0 / (beta * wiggly.lattice_scale)) * math.sqrt(dt)
    lo, hi = wiggly.base.x_domain
    x = np.full(replicas, float(wiggly.well_center(0)))
    alive = np.ones(replicas, dtype=bool)
    tracker = _WellTracker(wiggly, replicas, band)
    tracker.update(x, 0.0, alive)
    idx = np.arange(replicas)
    for i in range(1, K + 1):
        t = (i - 1) * dt
        x = x - wiggly.gradient(x, t) * dt + noise * streams.draw(idx)["normal"]
        alive &= (x >= lo) & (x <= hi)
        tracker.update(x, dt, alive)
    return tracker.counts


# ---------------------------------------------------------------------------
# generic ensembles


@dataclass
class SimulationSpec:
    """Declarative description of a stochastic run for :func:`run_ensemble`.

    ``kind`` is ``'jump'`` (params ``n, alpha, beta, x0, T``) or ``'sde'``
    (params ``omega, h, x0, T, dt``).
    """

    kind: str
    landscape: EnergyLandscape
    params: dict[str, Any]


def run_ensemble(spec, replicas: int, reference: SampledCurve | None, tube_radius: float, seed,
                 grid=None, workers: int = 1, seeds=None) -> EnsembleStats:
    """Independent seeded replicas with mean/variance paths and tube statistics.

    Parameters
    ----------
    spec : SimulationSpec or callable
        Either a declarative spec (run by the lockstep engines) or a callable
        ``seed -> JumpPath | SamplePath`` run once per replica.
    replicas : int
        At least 2.
    reference : SampledCurve, optional
        Curve for sup-distances and the tube test.
    tube_radius : float
        Tube radius; ``inf`` disables exits.
    seed : int
        Run seed; replica ``r`` gets ``replica_seed(seed, r)`` unless
        ``seeds`` lists the per-replica seeds explicitly.
    workers : int
        Thread count for callable specs.

    Per-replica exceptions are recorded in ``flags`` and the replica is
    dropped; the ensemble itself never aborts.
    """
    if replicas < 2:
        raise ValueError("an ensemble needs at least two replicas")
    if isinstance(spec, SimulationSpec) and seeds is None:
        p = dict(spec.params)
        if spec.kind == "jump":
            return simulate_jump_ensemble(spec.landscape, p["n"], p["alpha"], p["beta"], p["x0"], p["T"],
                                          replicas, seed, grid=grid, reference=reference,
                                          tube_radius=tube_radius)
        if spec.kind == "sde":
            return simulate_sde_ensemble(spec.landscape, p["omega"], p["h"], p["x0"], p["T"], p["dt"],
                                         replicas, seed, reference=reference, tube_radius=tube_radius)
        raise ValueError(f"unknown simulation kind {spec.kind!r}")

    if isinstance(spec, SimulationSpec):
        p = dict(spec.params)
        if spec.kind == "jump":
            def call(s):
                return simulate_jump_process(spec.landscape, p["n"], p["alpha"], p["beta"], p["x0"], p["T"], s)
        else:
            def call(s):
                return simulate_sde(spec.landscape, p["omega"], p["h"], p["x0"], p["T"], p["dt"], s)
    else:
        call = spec
    replica_seeds = list(seeds) if seeds is not None else [replica_seed(seed, r) for r in range(replicas)]
    if len(replica_seeds) != replicas:
        raise ValueError("need one seed per replica")

    def one(r):
        try:
            return r, call(replica_seeds[r]), None
        except Exception as exc:  # recorded, never aborts the ensemble
            return r, None, {"replica": r, "error": type(exc).__name__, "message": str(exc)}

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(replicas)))
    else:
        results = [one(r) for r in range(replicas)]

    good = [(r, p) for r, p, err in results if p is not None]
    flags = [err for _, _, err in results if err is not None]
    if not good:
        raise RuntimeError("every replica failed: " + str(flags[:3]))
    if grid is None:
        first = good[0][1]
        if isinstance(first, SamplePath):
            grid = first.grid
        else:
            grid = np.linspace(0.0, first.horizon, 201)
    grid = np.asarray(grid, dtype=float)
    values, sups = [], []
    for r, path in good:
        if isinstance(path, JumpPath):
            values.append(path.value_at(grid))
            if reference is not None:
                sups.append(path.sup_distance(reference))
            if path.exited:
                flags.append({"replica": r, "exited": True, "exit_time": path.exit_time})
        else:
            values.append(np.interp(grid, path.grid, path.values))
            if reference is not None:
                sups.append(float(np.max(np.abs(path.values - reference(path.grid)))))
            if path.flags.get("exited"):
                flags.append({"replica": r, **path.flags})
    return _ensemble_stats(grid, np.array(values), np.array(sups), tube_radius, flags)
