"""Equilibria, thresholds and stability of the rescaled model.

Jacobians are returned in the rearranged variable order
``(I_h, I_v, S_h, S_v, D)``, which puts the infective block first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .integrate import SolverOptions, Trajectory, integrate, sample
from .model import DimensionlessParams, DomainError, SystemState, rhs_dimensionless

__all__ = [
    "REARRANGED",
    "EquilibriumReport",
    "LevelSetBounds",
    "ComparisonReport",
    "basic_reproduction_number",
    "disease_free_equilibria",
    "endemic_equilibrium",
    "jacobian",
    "infective_block",
    "lnx_minus_x_roots",
    "level_set_bounds",
    "metzler_comparison",
    "comparison_bound_check",
    "classify_equilibria",
    "equilibrium_residual",
]

# position of each rearranged variable (I_h, I_v, S_h, S_v, D) in the canonical state
REARRANGED = (1, 3, 0, 2, 4)

ZERO_REAL_REL_TOL = 1e-6


@dataclass(frozen=True)
class EquilibriumReport:
    label: str
    state: SystemState
    jacobian: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    classification: str

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "state": dict(zip(SystemState._fields, self.state)),
            "jacobian_order": ["I_h", "I_v", "S_h", "S_v", "D"],
            "jacobian": self.jacobian.tolist(),
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "classification": self.classification,
        }


@dataclass(frozen=True)
class LevelSetBounds:
    """Bounds ``a <= N_v, D <= b`` on the Lotka-Volterra orbit ``V_LV = k0``."""

    k0: float
    a: float
    b: float
    eco_r0: float

    def to_dict(self) -> dict:
        return {"k0": self.k0, "a": self.a, "b": self.b, "eco_r0": self.eco_r0}


def basic_reproduction_number(params: DimensionlessParams) -> float:
    p = params
    return math.sqrt(p.B_h * p.B_v / (p.gamma + p.mu_h))


def disease_free_equilibria() -> tuple[SystemState, SystemState]:
    """Vector-free ``E1`` and predator-vector coexistence ``E2`` (both disease free)."""
    return SystemState(1.0, 0.0, 0.0, 0.0, 0.0), SystemState(1.0, 0.0, 1.0, 0.0, 1.0)


def endemic_equilibrium(params: DimensionlessParams) -> Optional[SystemState]:
    """Closed-form endemic equilibrium, or ``None`` when ``R0 < 1``."""
    p = params
    gm = p.gamma + p.mu_h
    excess = p.B_h * p.B_v - gm
    if excess < 0:
        return None
    return SystemState(
        S_h=(p.B_v * p.mu_h + gm) / (p.B_v * (p.B_h + p.mu_h)),
        I_h=p.mu_h * excess / (p.B_v * (p.B_h + p.mu_h) * gm),
        S_v=(p.B_h + p.mu_h) * gm / (p.B_h * (p.B_v * p.mu_h + gm)),
        I_v=p.mu_h * excess / (p.B_h * (p.B_v * p.mu_h + gm)),
        D=1.0,
    )


def _canonical_jacobian(y, p: DimensionlessParams) -> np.ndarray:
    S_h, I_h, S_v, I_v, D = y
    gm = p.gamma + p.mu_h
    return np.array([
        [-p.mu_h - p.B_h * I_v, 0.0, 0.0, -p.B_h * S_h, 0.0],
        [p.B_h * I_v, -gm, 0.0, p.B_h * S_h, 0.0],
        [0.0, -p.B_v * S_v, 1.0 - p.B_v * I_h - D, 1.0, -S_v],
        [0.0, p.B_v * S_v, p.B_v * I_h, -D, -I_v],
        [0.0, 0.0, p.mu_D * D, p.mu_D * D, p.mu_D * (S_v + I_v - 1.0)],
    ])


def jacobian(state, params: DimensionlessParams) -> np.ndarray:
    """Analytic Jacobian of the rescaled model in the order ``(I_h, I_v, S_h, S_v, D)``."""
    y = np.asarray(state, dtype=float)
    if y.shape != (5,) or not np.all(np.isfinite(y)):
        raise DomainError(f"jacobian needs a finite 5-component state, got {state!r}")
    perm = list(REARRANGED)
    return _canonical_jacobian(y, params)[np.ix_(perm, perm)]


def _spectral_abscissa(m: np.ndarray) -> float:
    return float(np.max(np.linalg.eigvals(m).real))


def infective_block(params: DimensionlessParams) -> tuple[np.ndarray, float]:
    """Linearised infective dynamics at E2 (``F - V``) and its spectral abscissa."""
    p = params
    m = np.array([[-(p.gamma + p.mu_h), p.B_h], [p.B_v, -1.0]])
    return m, _spectral_abscissa(m)


def _bisect(g, lo: float, hi: float) -> float:
    # runs to full float resolution; g(lo) and g(hi) have opposite signs
    g_lo = g(lo)
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        g_mid = g(mid)
        if g_mid == 0.0:
            return mid
        if (g_mid > 0) == (g_lo > 0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lnx_minus_x_roots(level: float) -> tuple[float, float]:
    """Both roots ``x_lo <= 1 <= x_hi`` of ``ln x - x = level`` for ``level <= -1``."""
    if not level <= -1.0:
        raise DomainError(f"ln x - x = {level!r} has no real root (need level <= -1)")
    if level == -1.0:
        return 1.0, 1.0

    def g(x):
        return math.log(x) - x - level

    # g(exp(level)) = -exp(level) < 0 <= g(1)
    lo = max(min(1e-12, math.exp(level)), 5e-324)
    x_lo = _bisect(g, lo, 1.0) if g(lo) < 0 else lo
    hi = 2.0
    while g(hi) > 0:
        hi *= 2.0
    x_hi = _bisect(g, 1.0, hi)
    return x_lo, x_hi


def level_set_bounds(k0: float, params: DimensionlessParams) -> LevelSetBounds:
    """Tight bounds on ``N_v`` and ``D`` along the orbit ``V_LV = k0`` and the ecological R0."""
    if not k0 <= -2.0:
        raise DomainError(f"k0 must be <= -2 (V_LV never exceeds -2), got {k0!r}")
    a, b = lnx_minus_x_roots(k0 + 1.0)
    p = params
    eco_r0 = p.B_h * p.B_v / (p.gamma + p.mu_h) * b / a
    return LevelSetBounds(k0=float(k0), a=a, b=b, eco_r0=eco_r0)


def metzler_comparison(params: DimensionlessParams, k0: float) -> tuple[np.ndarray, bool]:
    """Constant Metzler matrix dominating the infective dynamics inside the orbit ``V_LV = k0``.

    The flag is true when the matrix is Hurwitz (negative trace, positive
    determinant), i.e. exactly when the ecological R0 is below one.
    """
    bounds = level_set_bounds(k0, params)
    p = params
    m = np.array([[-(p.gamma + p.mu_h), p.B_h], [p.B_v * bounds.b, -bounds.a]])
    trace = m[0, 0] + m[1, 1]
    det = (p.gamma + p.mu_h) * bounds.a - p.B_h * p.B_v * bounds.b
    return m, bool(trace < 0 and det > 0)


@dataclass(frozen=True)
class ComparisonReport:
    """Outcome of checking ``I_h <= z1`` and ``I_v <= z2`` for ``z' = M z``.

    ``max_excess_*`` are maxima over the grid of ``I - z`` (<= 0 when the bound
    holds). ``exit_time`` is the first grid time at which the trajectory left
    the invariant region, or None.
    """

    grid: np.ndarray = field(repr=False)
    infectives: np.ndarray = field(repr=False)
    comparison: np.ndarray = field(repr=False)
    max_excess_h: float
    max_excess_v: float
    exit_time: Optional[float]
    decay_time_infectives: Optional[float]
    decay_time_comparison: Optional[float]
    matrix: np.ndarray = field(repr=False)

    def holds(self, slack: float = 1e-8) -> bool:
        return self.exit_time is None and max(self.max_excess_h, self.max_excess_v) <= slack


def _first_time_below(grid, values, threshold) -> Optional[float]:
    below = np.all(values < threshold, axis=1)
    # first time after which the values stay below
    if not below[-1]:
        return None
    above = np.nonzero(~below)[0]
    return float(grid[0] if len(above) == 0 else grid[above[-1] + 1])


def comparison_bound_check(
    traj: Trajectory,
    params: DimensionlessParams,
    k0: float,
    grid=None,
    decay_threshold: float = 1e-6,
    region_tol: float = 1e-9,
    opts: SolverOptions | None = None,
) -> ComparisonReport:
    """Compare a rescaled-model trajectory's infectives with the linear comparison system.

    The trajectory must stay in the region ``S_h + I_h <= 1`` and
    ``v_lv(S_v + I_v, D, mu_D) >= k0`` (inside the orbit), where the bound is valid.
    """
    m, _ = metzler_comparison(params, k0)
    if grid is None:
        grid = np.linspace(traj.t0, traj.t_end, 2001)
    grid = np.asarray(grid, dtype=float)
    states = sample(traj, grid)
    infectives = states[:, [1, 3]]

    n_v = states[:, 2] + states[:, 3]
    d = states[:, 4]
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where((n_v > 0) & (d > 0), 2.0 * (params.mu_D * (np.log(n_v) - n_v) + np.log(d) - d) / (1.0 + params.mu_D), -np.inf)
    outside = (v < k0 - region_tol) | (states[:, 0] + states[:, 1] > 1.0 + region_tol)
    exit_time = float(grid[np.argmax(outside)]) if outside.any() else None

    z_opts = opts or SolverOptions(rel_tol=1e-10, abs_tol=1e-14)
    z_traj = integrate(lambda t, z: m @ z, infectives[0], (grid[0], grid[-1]), z_opts)
    comparison = sample(z_traj, grid)
    excess = infectives - comparison
    return ComparisonReport(
        grid=grid,
        infectives=infectives,
        comparison=comparison,
        max_excess_h=float(np.max(excess[:, 0])),
        max_excess_v=float(np.max(excess[:, 1])),
        exit_time=exit_time,
        decay_time_infectives=_first_time_below(grid, infectives, decay_threshold),
        decay_time_comparison=_first_time_below(grid, comparison, decay_threshold),
        matrix=m,
    )


def _spectrum_tag(eigenvalues: np.ndarray) -> str:
    tol = ZERO_REAL_REL_TOL * max(float(np.max(np.abs(eigenvalues))), 1.0)
    n_pos = int(np.sum(eigenvalues.real > tol))
    n_zero = int(np.sum(np.abs(eigenvalues.real) <= tol))
    n_neg = len(eigenvalues) - n_pos - n_zero
    if n_pos:
        kind = "unstable (non-hyperbolic)" if n_zero else "unstable"
    elif n_zero:
        kind = "non-hyperbolic, no unstable direction"
    else:
        kind = "asymptotically stable"
    return f"{kind}: {n_neg} negative, {n_zero} zero, {n_pos} positive real parts"


def classify_equilibria(params: DimensionlessParams) -> list[EquilibriumReport]:
    """Spectral reports for E1, E2 and (when R0 >= 1) the endemic equilibrium."""
    e1, e2 = disease_free_equilibria()
    r0 = basic_reproduction_number(params)
    candidates = [("E1", e1), ("E2", e2)]
    ee = endemic_equilibrium(params)
    if ee is not None:
        candidates.append(("Ee", ee))

    reports = []
    for label, state in candidates:
        jac = jacobian(state, params)
        eig = np.linalg.eigvals(jac)
        eig = eig[np.lexsort((eig.imag, eig.real))]
        tag = _spectrum_tag(eig)
        if label == "E1":
            tag = "unstable (non-hyperbolic); " + tag.split(": ", 1)[1]
        elif label == "E2":
            if r0 > 1:
                head = "unstable (R0 > 1)"
            elif r0 < 1:
                head = "infectives decay locally (R0 < 1), non-hyperbolic"
            else:
                head = "threshold (R0 = 1), non-hyperbolic"
            tag = head + "; " + tag.split(": ", 1)[1]
        reports.append(EquilibriumReport(label, state, jac, eig, tag))
    return reports


def equilibrium_residual(state, params: DimensionlessParams) -> float:
    return float(np.linalg.norm(rhs_dimensionless(state, params)))
