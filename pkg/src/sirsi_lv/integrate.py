"""Adaptive Dormand-Prince 5(4) integration with continuous (dense) output.

Backward solves are plain integrations over a reversed span: the step size
is negative and the breakpoints decrease.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "SolverOptions",
    "Trajectory",
    "IntegrationError",
    "TrajectoryRangeError",
    "integrate",
    "sample",
]

# Butcher tableau of the Dormand-Prince pair
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# 5th-order minus embedded 4th-order weights, including the FSAL stage
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# Shampine's quartic continuous extension: y(t0 + s*h) = y0 + h * K^T P [s, s^2, s^3, s^4]
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


@dataclass(frozen=True)
class SolverOptions:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    first_step: Optional[float] = None
    max_steps: int = 100_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be strictly positive")
        if self.first_step is not None and not self.first_step > 0:
            raise ValueError("first_step must be positive when given")
        if int(self.max_steps) < 1:
            raise ValueError("max_steps must be >= 1")


class TrajectoryRangeError(ValueError):
    """Requested evaluation time lies outside a trajectory's span."""


class IntegrationError(RuntimeError):
    """Integration stopped early; ``trajectory`` holds the accepted steps so far."""

    def __init__(self, message: str, t: float, trajectory: "Trajectory"):
        super().__init__(message)
        self.t = t
        self.trajectory = trajectory


class Trajectory:
    """Immutable piecewise-quartic solution of an ODE.

    ``t`` and ``y`` hold the accepted breakpoints (strictly monotone in the
    direction of integration); ``q`` holds per-step interpolation
    coefficients. Calling the trajectory evaluates the dense output.
    """

    __slots__ = ("t", "y", "q", "direction", "_tsorted", "_ascending")

    def __init__(self, t, y, q):
        t = np.array(t, dtype=float)
        y = np.array(y, dtype=float)
        q = np.array(q, dtype=float).reshape(max(len(t) - 1, 0), y.shape[1], 4)
        for arr in (t, y, q):
            arr.flags.writeable = False
        self.t, self.y, self.q = t, y, q
        self.direction = 1.0 if len(t) < 2 or t[-1] > t[0] else -1.0
        # searchsorted needs ascending keys
        self._ascending = t if self.direction > 0 else -t

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def n_steps(self) -> int:
        return len(self.t) - 1

    def __call__(self, t):
        """Evaluate at a scalar time (returns a state vector) or an array of times (rows)."""
        if np.ndim(t) == 0:
            return self._eval_scalar(float(t))
        return sample(self, t)

    def _eval_scalar(self, t: float) -> np.ndarray:
        lo, hi = sorted((self.t0, self.t_end))
        if not (lo <= t <= hi):
            raise TrajectoryRangeError(f"time {t!r} outside trajectory span [{lo!r}, {hi!r}]")
        key = t * self.direction
        i = int(np.searchsorted(self._ascending, key, side="left"))
        if i < len(self.t) and self._ascending[i] == key:
            return self.y[i].copy()
        i -= 1
        h = self.t[i + 1] - self.t[i]
        s = (t - self.t[i]) / h
        powers = np.array([s, s * s, s**3, s**4])
        return self.y[i] + h * (self.q[i] @ powers)


def sample(traj: Trajectory, grid) -> np.ndarray:
    """Dense-output values at each time of a monotone ``grid`` (one row per time)."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1:
        raise ValueError("grid must be one-dimensional")
    if len(grid) > 1:
        steps = np.diff(grid)
        if not (np.all(steps >= 0) or np.all(steps <= 0)):
            raise ValueError("grid must be monotone")
    out = np.empty((len(grid), traj.y.shape[1]))
    for k, t in enumerate(grid):
        out[k] = traj._eval_scalar(float(t))
    return out


def _rms_norm(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x)))


def _initial_step(rhs, t0, y0, f0, direction, rtol, atol) -> float:
    # Hairer, Norsett & Wanner, "Solving ODEs I", sec. II.4
    scale = atol + np.abs(y0) * rtol
    d0 = _rms_norm(y0 / scale)
    d1 = _rms_norm(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = np.asarray(rhs(t0 + h0 * direction, y1), dtype=float)
    d2 = _rms_norm((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_span: tuple[float, float],
    opts: SolverOptions | None = None,
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t_span[0]`` to ``t_span[1]``.

    ``t_span[1] < t_span[0]`` integrates backward in time. Each step keeps the
    weighted RMS of the embedded error estimate below one, with weights
    ``abs_tol + rel_tol * max(|y_old|, |y_new|)``.

    Raises :class:`IntegrationError` (carrying the partial trajectory) on
    step-size underflow, on exceeding ``max_steps``, or when the right-hand
    side returns a non-finite value.
    """
    opts = opts or SolverOptions()
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not (math.isfinite(t0) and math.isfinite(t1)) or t0 == t1:
        raise ValueError(f"t_span must be two distinct finite times, got {t_span!r}")
    y = np.array(y0, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise ValueError(f"initial state has non-finite components: {y.tolist()}")
    direction = 1.0 if t1 > t0 else -1.0
    rtol, atol = opts.rel_tol, opts.abs_tol
    n = y.size

    ts, ys, qs = [t0], [y.copy()], []

    def fail(msg: str, t: float):
        raise IntegrationError(msg, t, Trajectory(ts, ys, qs))

    def evaluate(t, state):
        f = np.asarray(rhs(t, state), dtype=float)
        if not np.all(np.isfinite(f)):
            fail(f"right-hand side returned a non-finite value at t={t!r}", t)
        return f

    t = t0
    f = evaluate(t, y)
    h_abs = opts.first_step or _initial_step(evaluate, t0, y, f, direction, rtol, atol)
    K = np.empty((7, n))
    steps = 0
    while direction * (t1 - t) > 0:
        if steps >= opts.max_steps:
            fail(f"max_steps={opts.max_steps} exceeded at t={t!r}", t)
        min_step = 10 * np.spacing(abs(t))
        rejected = False
        while True:
            if h_abs < min_step:
                fail(f"step size underflow at t={t!r}", t)
            h = h_abs * direction
            t_new = t + h
            if direction * (t_new - t1) > 0:
                t_new = t1
            h = t_new - t
            h_abs = abs(h)

            K[0] = f
            for i in range(1, 6):
                K[i] = evaluate(t + _C[i] * h, y + h * (_A[i] @ K[:i]))
            y_new = y + h * (_B @ K[:6])
            f_new = evaluate(t_new, y_new)
            K[6] = f_new

            scale = atol + np.maximum(np.abs(y), np.abs(y_new)) * rtol
            err = _rms_norm(h * (_E @ K) / scale)
            if err < 1.0:
                factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err ** (-1 / 5))
                if rejected:
                    factor = min(1.0, factor)
                h_abs *= factor
                break
            h_abs *= max(MIN_FACTOR, SAFETY * err ** (-1 / 5))
            rejected = True

        qs.append(K.T @ _P)
        t, y, f = t_new, y_new, f_new
        ts.append(t)
        ys.append(y.copy())
        steps += 1

    return Trajectory(ts, ys, qs)
