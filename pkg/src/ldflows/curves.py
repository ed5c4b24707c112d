"""Curve containers shared by the solvers, functionals and experiments."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

__all__ = ["SampledCurve", "BVCurve", "Jump"]


@dataclass
class SampledCurve:
    """Absolutely continuous curve sampled at increasing times.

    The curve is the piecewise-linear interpolant of ``(t, x)``.

    Parameters
    ----------
    t, x : ndarray
        Node times and positions.
    steps : ndarray, optional
        Authoritative interval durations ``t[k+1] - t[k]``. Recovery
        sequences resolve jump transients on time scales far below the
        spacing of floating-point numbers near ``t``; there ``steps`` keeps
        the durations exact while ``t`` is only their cumulative sum.
    flags : dict
        Solver diagnostics (domain exit, truncation, ...).
    """

    t: np.ndarray
    x: np.ndarray
    steps: np.ndarray | None = None
    flags: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.x = np.asarray(self.x, dtype=float)
        if self.t.ndim != 1 or self.t.shape != self.x.shape:
            raise ValueError("t and x must be 1-d arrays of equal length")
        if self.t.size < 2:
            raise ValueError("a curve needs at least two nodes")
        if self.steps is not None:
            self.steps = np.asarray(self.steps, dtype=float)
            if self.steps.shape != (self.t.size - 1,) or np.any(self.steps < 0):
                raise ValueError("steps must be nonnegative with one entry per interval")
        elif np.any(np.diff(self.t) <= 0):
            raise ValueError("curve times must be strictly increasing")

    @property
    def dt(self) -> np.ndarray:
        return self.steps if self.steps is not None else np.diff(self.t)

    @property
    def horizon(self) -> float:
        return float(self.t[-1] - self.t[0])

    @property
    def slopes(self) -> np.ndarray:
        """Difference quotients on each interval, i.e. central differences at the midpoints.

        Intervals of zero duration (allowed only through ``steps``) get slope 0.
        """
        dx = np.diff(self.x)
        dt = self.dt
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(dt > 0, dx / np.where(dt > 0, dt, 1.0), 0.0)

    def node_velocities(self) -> np.ndarray:
        """Central differences at interior nodes, one-sided at the ends."""
        return np.gradient(self.x, self.t)

    def __call__(self, s):
        return np.interp(s, self.t, self.x)

    def resample(self, grid) -> "SampledCurve":
        grid = np.asarray(grid, dtype=float)
        return SampledCurve(grid, self(grid), flags=dict(self.flags))

    @property
    def total_variation(self) -> float:
        return float(np.sum(np.abs(np.diff(self.x))))


@dataclass(frozen=True)
class Jump:
    """Jump at ``time`` from ``x_left`` through ``x_plateau`` to ``x_right``."""

    time: float
    x_left: float
    x_plateau: float
    x_right: float

    @property
    def size(self) -> float:
        return abs(self.x_left - self.x_plateau) + abs(self.x_plateau - self.x_right)


@dataclass
class BVCurve:
    """Curve of bounded variation: continuous pieces on a grid plus explicit jumps.

    ``x[k]`` is the value at ``t[k]``. A jump at ``t[k]`` stores its left
    limit, plateau value and right limit; the node value equals the plateau
    (for single-transition jumps this is the left limit, giving the
    left-continuous convention). Between consecutive nodes the curve is
    linear, starting from the right limit at the left node.
    """

    t: np.ndarray
    x: np.ndarray
    jumps: list[Jump] = field(default_factory=list)
    flags: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.x = np.asarray(self.x, dtype=float)
        if self.t.ndim != 1 or self.t.shape != self.x.shape or self.t.size < 2:
            raise ValueError("t and x must be equal-length 1-d arrays with at least two nodes")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("BV grid must be strictly increasing")
        self.jumps = sorted(
            (j if isinstance(j, Jump) else Jump(*map(float, j)) for j in self.jumps),
            key=lambda j: j.time,
        )
        self._jump_index = {}
        for j in self.jumps:
            k = int(np.argmin(np.abs(self.t - j.time)))
            if not np.isclose(self.t[k], j.time, rtol=0, atol=1e-12 * max(1.0, abs(j.time))):
                raise ValueError(f"jump time {j.time} is not a grid node")
            if k in self._jump_index:
                raise ValueError("at most one jump per grid node")
            self._jump_index[k] = j

    @property
    def horizon(self) -> float:
        return float(self.t[-1] - self.t[0])

    def jump_at(self, k: int) -> Jump | None:
        return self._jump_index.get(k)

    @property
    def left_limits(self) -> np.ndarray:
        out = self.x.copy()
        for k, j in self._jump_index.items():
            out[k] = j.x_left
        return out

    @property
    def right_limits(self) -> np.ndarray:
        out = self.x.copy()
        for k, j in self._jump_index.items():
            out[k] = j.x_right
        return out

    def ac_increments(self) -> np.ndarray:
        """Increments of the continuous part on each grid interval."""
        return self.left_limits[1:] - self.right_limits[:-1]

    @property
    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.ac_increments())) + sum(j.size for j in self.jumps))

    def check_consistency(self, atol: float = 1e-12) -> bool:
        """Node value at a jump equals its plateau and the plateau lies between the limits."""
        for k, j in self._jump_index.items():
            if abs(self.x[k] - j.x_plateau) > atol:
                return False
            lo, hi = sorted((j.x_left, j.x_right))
            if not (lo - atol <= j.x_plateau <= hi + atol):
                return False
        return True

    def as_sampled(self) -> SampledCurve:
        """Drop the jump list (only valid for jump-free curves)."""
        if self.jumps:
            raise ValueError("curve has jumps; it is not absolutely continuous")
        return SampledCurve(self.t.copy(), self.x.copy(), flags=dict(self.flags))
