"""Predator-release optimal control: Pontryagin conditions and forward-backward sweep.

The control ``u(t) in [0, u_max]`` is a predator source added to the D
equation. Objective values are reported in minimisation form::

    J(u) = int_0^T (c u^2 + q u + r I_h) dt - a S_h(T)

which is the negative of the maximised payoff. Everything here works with
either parameterization: :class:`DimensionlessParams` uses the rescaled
model, :class:`DimensionalParams` the reduced dimensional one, and the
control, adjoint and weights are then in that model's units.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np

from .integrate import IntegrationError, SolverOptions, Trajectory, integrate, sample
from .model import DimensionalParams, DimensionlessParams, DomainError, rhs_controlled

__all__ = [
    "CostWeights",
    "ControlSignal",
    "AdjointState",
    "SweepOptions",
    "SweepResult",
    "SweepError",
    "GradientReport",
    "default_grid_size",
    "hamiltonian",
    "adjoint_rhs",
    "optimal_u",
    "simulate_controlled",
    "solve_adjoint",
    "objective",
    "sweep_solve",
    "gradient_check",
]

Params = Union[DimensionalParams, DimensionlessParams]

SINGULAR_TOL = 1e-10


@dataclass(frozen=True)
class CostWeights:
    """Running-cost weights ``c, q, r``, terminal reward ``a``, bound ``u_max``, horizon ``T``."""

    c: float
    q: float
    r: float
    a: float
    u_max: float
    T: float

    def __post_init__(self):
        for name in ("c", "q", "r", "a"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise DomainError(f"CostWeights.{name} must be finite and >= 0, got {value!r}")
        if self.c == 0 and self.q == 0:
            raise DomainError("CostWeights: c and q cannot both be zero")
        for name in ("u_max", "T"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"CostWeights.{name} must be finite and > 0, got {value!r}")

    @classmethod
    def table1(cls, c: float = 1.0, T: float = 30.0) -> "CostWeights":
        return cls(c=c, q=1.0, r=5.0, a=5.0, u_max=0.5, T=T)

    def to_dict(self) -> dict:
        return asdict(self)


class ControlSignal:
    """Control values on a uniform grid over ``[0, T]``, linearly interpolated."""

    __slots__ = ("grid", "values", "u_max", "_h")

    def __init__(self, grid, values, u_max: float):
        grid = np.array(grid, dtype=float)
        values = np.array(values, dtype=float)
        if grid.ndim != 1 or len(grid) < 2 or grid.shape != values.shape:
            raise DomainError("control grid and values must be 1-d arrays of equal length >= 2")
        if grid[0] != 0.0:
            raise DomainError(f"control grid must start at 0, got {grid[0]!r}")
        n = len(grid) - 1
        h = grid[-1] / n
        if not h > 0 or np.max(np.abs(grid - h * np.arange(n + 1))) > 1e-9 * grid[-1]:
            raise DomainError("control grid must be uniform on [0, T]")
        if not np.all(np.isfinite(values)) or values.min() < 0 or values.max() > u_max:
            raise DomainError(f"control values must lie in [0, {u_max}]")
        grid.flags.writeable = False
        values.flags.writeable = False
        self.grid, self.values, self.u_max, self._h = grid, values, float(u_max), h

    @classmethod
    def constant(cls, T: float, n: int, value: float, u_max: float) -> "ControlSignal":
        return cls(np.linspace(0.0, T, n + 1), np.full(n + 1, float(value)), u_max)

    @property
    def T(self) -> float:
        return float(self.grid[-1])

    @property
    def n(self) -> int:
        return len(self.grid) - 1

    def with_values(self, values) -> "ControlSignal":
        return ControlSignal(self.grid, values, self.u_max)

    def __call__(self, t: float) -> float:
        x = t / self._h
        i = min(max(int(x), 0), self.n - 1)
        s = min(max(x - i, 0.0), 1.0)
        return float(self.values[i] + s * (self.values[i + 1] - self.values[i]))


class AdjointState(NamedTuple):
    p1: float
    p2: float
    p3: float
    p4: float
    p5: float


def default_grid_size(T: float) -> int:
    """Even node count: 2000 intervals per 120 time units, at least 100."""
    n = max(100, math.ceil(2000 * T / 120))
    return n + n % 2


def hamiltonian(state, u: float, p, params: Params, w: CostWeights) -> float:
    """``p . f(X, u) - (c u^2 + q u + r I_h)`` with the cost multiplier normalised to one."""
    f = rhs_controlled(state, params, u)
    return float(np.dot(np.asarray(p, dtype=float), f) - (w.c * u * u + w.q * u + w.r * state[1]))


def adjoint_rhs(p, state, params: Params, w: CostWeights) -> np.ndarray:
    """Costate derivatives ``-dH/dX`` along a state."""
    p1, p2, p3, p4, p5 = p
    S_h, I_h, S_v, I_v, D = state
    if isinstance(params, DimensionalParams):
        k = params
        k_h = k.b * k.beta_h / k.N_h
        k_v = k.b * k.beta_v / k.N_h
        return np.array([
            (p1 - p2) * k_h * I_v + p1 * k.mu_h,
            p2 * (k.gamma + k.mu_h) + (p3 - p4) * k_v * S_v + w.r,
            p3 * (k.alpha * D - k.mu_v) + (p3 - p4) * k_v * I_h - p5 * k.eta * D,
            (p1 - p2) * k_h * S_h - p3 * k.mu_v + p4 * k.alpha * D - p5 * k.eta * D,
            k.alpha * (p3 * S_v + p4 * I_v) - p5 * (k.eta * (S_v + I_v) - k.mu_D),
        ])
    k = params
    return np.array([
        (p1 - p2) * k.B_h * I_v + p1 * k.mu_h,
        p2 * (k.gamma + k.mu_h) + (p3 - p4) * k.B_v * S_v + w.r,
        p3 * (-1.0 + D) + (p3 - p4) * k.B_v * I_h - p5 * k.mu_D * D,
        (p1 - p2) * k.B_h * S_h - p3 + p4 * D - p5 * k.mu_D * D,
        p3 * S_v + p4 * I_v - p5 * k.mu_D * (S_v + I_v) + p5 * k.mu_D,
    ])


def optimal_u(p5, w: CostWeights, previous=None):
    """Pointwise maximiser of ``p5 u - c u^2 - q u`` over ``[0, u_max]``.

    For ``c = 0`` the law is bang-bang; where ``|p5 - q| <= 1e-10`` the switching
    function gives no information and ``previous`` (default 0) is kept.
    Accepts scalars or arrays.
    """
    p5_arr = np.asarray(p5, dtype=float)
    if w.c > 0:
        out = np.clip((p5_arr - w.q) / (2.0 * w.c), 0.0, w.u_max)
    else:
        prev = np.zeros_like(p5_arr) if previous is None else np.broadcast_to(np.asarray(previous, dtype=float), p5_arr.shape)
        out = np.where(p5_arr > w.q, w.u_max, 0.0)
        tie = np.abs(p5_arr - w.q) <= SINGULAR_TOL
        out = np.where(tie, np.clip(prev, 0.0, w.u_max), out)
    return float(out) if out.ndim == 0 else out


def simulate_controlled(params: Params, x0, control: ControlSignal, opts: SolverOptions | None = None) -> Trajectory:
    """Forward solve of the controlled model over ``[0, control.T]``."""

    def rhs(t, y):
        return rhs_controlled(y, params, control(t))

    return integrate(rhs, np.asarray(x0, dtype=float), (0.0, control.T), opts)


def solve_adjoint(state: Trajectory, params: Params, w: CostWeights, opts: SolverOptions | None = None) -> Trajectory:
    """Backward costate solve from ``p(T) = (a, 0, 0, 0, 0)``; reads the state through dense output."""

    def rhs(t, p):
        return adjoint_rhs(p, state(t), params, w)

    return integrate(rhs, np.array([w.a, 0.0, 0.0, 0.0, 0.0]), (w.T, 0.0), opts)


def _simpson_weights(n: int, h: float) -> np.ndarray:
    if n < 2 or n % 2:
        raise DomainError(f"composite Simpson needs an even number of intervals, got {n}")
    wts = np.full(n + 1, 2.0)
    wts[1::2] = 4.0
    wts[0] = wts[-1] = 1.0
    return wts * (h / 3.0)


def objective(state: Trajectory, control: ControlSignal, w: CostWeights) -> float:
    """Minimisation-form objective by composite Simpson on the control grid."""
    T = control.T
    lo, hi = sorted((state.t0, state.t_end))
    tol = 1e-12 * max(T, 1.0)
    if abs(lo) > tol or abs(hi - T) > tol or abs(T - w.T) > tol:
        raise DomainError(f"trajectory span [{lo}, {hi}] does not match control horizon [0, {T}]")
    wts = _simpson_weights(control.n, T / control.n)
    I_h = sample(state, control.grid)[:, 1]
    u = control.values
    running = float(wts @ (w.c * u * u + w.q * u + w.r * I_h))
    return running - w.a * float(state(hi)[0])


@dataclass(frozen=True)
class SweepOptions:
    """Forward-backward sweep settings.

    ``d`` weights the previous control in ``u_new = d u_old + (1 - d) u*``.
    ``n`` (grid intervals) defaults to :func:`default_grid_size` of the horizon.
    """

    d: float = 0.1
    u0: float = 0.1
    n: Optional[int] = None
    tol_abs: float = 1e-6
    tol_rel: float = 1e-4
    max_iter: int = 200
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if not 0.0 <= self.d < 1.0:
            raise DomainError(f"relaxation d must lie in [0, 1), got {self.d!r}")
        if self.n is not None and (self.n < 2 or self.n % 2):
            raise DomainError(f"grid size n must be even and >= 2, got {self.n!r}")
        if self.tol_abs < 0 or self.tol_rel < 0 or self.tol_abs + self.tol_rel == 0:
            raise DomainError("sweep tolerances must be >= 0 and not both zero")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["solver"] = asdict(self.solver)
        return out


class SweepError(RuntimeError):
    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


@dataclass(frozen=True)
class SweepResult:
    """Returned sweep iterate with its state and costate.

    ``law_residual`` is ``max |u - u*|`` between the returned control and the
    pointwise optimal law evaluated on its own costate.
    """

    control: ControlSignal
    state: Trajectory
    adjoint: Trajectory
    objective_history: list
    iterations: int
    converged: bool
    final_change: float
    best_iteration: int
    law_residual: float

    @property
    def objective(self) -> float:
        return self.objective_history[self.best_iteration]

    @property
    def best_history(self) -> np.ndarray:
        return np.minimum.accumulate(np.asarray(self.objective_history))


def sweep_solve(params: Params, w: CostWeights, x0, opts: SweepOptions | None = None) -> SweepResult:
    """Forward-backward sweep for the predator-release problem.

    Each iteration solves the state forward under the current control, the
    costate backward from ``p(T) = (a, 0, 0, 0, 0)``, evaluates the pointwise
    optimal law on the grid and relaxes toward it. Stops once the max-norm
    control change is at most ``tol_abs + tol_rel * max|u|`` and returns that
    iterate. Without convergence, returns the evaluated iterate with the
    smallest objective and ``converged=False``.
    """
    opts = opts or SweepOptions()
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (5,) or not np.all(np.isfinite(x0)) or x0.min() < 0:
        raise DomainError(f"initial state must be 5 finite nonnegative values, got {x0.tolist()}")
    n = opts.n or default_grid_size(w.T)
    u0 = min(max(opts.u0, 0.0), w.u_max)
    control = ControlSignal.constant(w.T, n, u0, w.u_max)

    history: list[float] = []
    best = None
    converged = False
    change = math.inf
    for k in range(opts.max_iter):
        try:
            state = simulate_controlled(params, x0, control, opts.solver)
            J = objective(state, control, w)
            costate = solve_adjoint(state, params, w, opts.solver)
        except IntegrationError as exc:
            raise SweepError(f"integration failed in sweep iteration {k}: {exc}", k) from exc
        history.append(J)

        u = control.values
        u_star = optimal_u(sample(costate, control.grid)[:, 4], w, previous=u)
        residual = float(np.max(np.abs(u - u_star)))
        u_next = np.clip(opts.d * u + (1.0 - opts.d) * u_star, 0.0, w.u_max)
        change = float(np.max(np.abs(u_next - u)))
        converged = change <= opts.tol_abs + opts.tol_rel * float(np.max(np.abs(u)))
        # a converged iterate is returned as is; otherwise the best one seen
        if converged or best is None or J < best[0]:
            best = (J, k, control, state, costate, residual)
        if converged:
            break
        control = control.with_values(u_next)

    J, k_best, control, state, costate, residual = best
    return SweepResult(
        control=control,
        state=state,
        adjoint=costate,
        objective_history=history,
        iterations=len(history),
        converged=converged,
        final_change=change,
        best_iteration=k_best,
        law_residual=residual,
    )


@dataclass(frozen=True)
class GradientReport:
    """Finite-difference vs costate directional derivative of the maximised payoff.

    ``finite_difference`` is ``(P(u + eps phi) - P(u - eps phi)) / (2 eps)`` with
    ``P = -J`` and ``phi`` the interpolated indicator of the grid nodes in
    ``[t1, t2]``. ``adjoint_derivative`` is the same quantity predicted from the
    unperturbed costate, discretised like the objective.
    ``interval_integral`` is ``int_{t1}^{t2} (p5 - 2 c u - q) dt``.
    """

    t1: float
    t2: float
    eps: float
    finite_difference: float
    adjoint_derivative: float
    interval_integral: float
    magnitude: float

    @property
    def relative_discrepancy(self) -> float:
        return abs(self.finite_difference - self.adjoint_derivative) / max(
            abs(self.finite_difference), abs(self.adjoint_derivative), 1e-300
        )

    @property
    def scaled_discrepancy(self) -> float:
        """Discrepancy relative to the summed size of the terms in the derivative.

        Better conditioned than :attr:`relative_discrepancy` near a stationary arc.
        """
        return abs(self.finite_difference - self.adjoint_derivative) / max(self.magnitude, 1e-300)


_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(5)


def gradient_check(
    control: ControlSignal,
    params: Params,
    w: CostWeights,
    x0,
    bump: tuple[float, float],
    eps: float = 1e-5,
    opts: SolverOptions | None = None,
) -> GradientReport:
    """Verify the costate gradient formula on ``[t1, t2]`` by central differences."""
    t1, t2 = map(float, bump)
    if not 0.0 <= t1 < t2 <= control.T:
        raise DomainError(f"bump interval must satisfy 0 <= t1 < t2 <= T, got {bump!r}")
    # finite differences amplify integration error by 1/eps
    opts = opts or SolverOptions(rel_tol=3e-14, abs_tol=1e-16)
    grid, u = control.grid, control.values
    tol = 1e-12 * control.T
    nodes = (grid >= t1 - tol) & (grid <= t2 + tol)
    if not nodes.any():
        raise DomainError("bump interval contains no control node")
    if u[nodes].min() - eps < 0.0 or u[nodes].max() + eps > control.u_max:
        raise DomainError("bump leaves the admissible control box")
    phi = nodes.astype(float)

    def payoff(values):
        perturbed = control.with_values(values)
        return -objective(simulate_controlled(params, x0, perturbed, opts), perturbed, w)

    fd = (payoff(u + eps * phi) - payoff(u - eps * phi)) / (2.0 * eps)

    state = simulate_controlled(params, x0, control, opts)
    costate = solve_adjoint(state, params, w, opts)
    h = control.T / control.n
    wts = _simpson_weights(control.n, h)
    cost_part = float(wts @ ((-2.0 * w.c * u - w.q) * phi))

    # costate part: int p5 * phi dt with phi piecewise linear, Gauss-Legendre per interval
    active = np.nonzero(np.maximum(phi[:-1], phi[1:]) > 0)[0]
    state_part = 0.0
    magnitude = float(wts @ (np.abs(2.0 * w.c * u + w.q) * phi))
    for i in active:
        s = 0.5 * (_GAUSS_X + 1.0)
        t = grid[i] + s * h
        p5 = sample(costate, t)[:, 4]
        shape = phi[i] + s * (phi[i + 1] - phi[i])
        state_part += 0.5 * h * float(_GAUSS_W @ (p5 * shape))
        magnitude += 0.5 * h * float(_GAUSS_W @ np.abs(p5 * shape))

    # plain interval integral of the switching expression
    m = max(2, 2 * math.ceil((t2 - t1) / h))
    ts = np.linspace(t1, t2, m + 1)
    integrand = sample(costate, ts)[:, 4] - 2.0 * w.c * np.interp(ts, grid, u) - w.q
    interval = float(_simpson_weights(m, (t2 - t1) / m) @ integrand)

    return GradientReport(
        t1=t1,
        t2=t2,
        eps=eps,
        finite_difference=fd,
        adjoint_derivative=state_part + cost_part,
        interval_integral=interval,
        magnitude=magnitude,
    )
