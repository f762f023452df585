"""Parameter/state types and right-hand sides of the SIR-SI / Lotka-Volterra model.

State vectors are always stored in the order ``(S_h, I_h, S_v, I_v, D)``;
the full dimensional model appends ``R_h`` after ``I_h``:
``(S_h, I_h, R_h, S_v, I_v, D)``.

All right-hand sides accept any float sequence (a state tuple or a numpy
array) and return a fresh ``numpy.ndarray``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "DomainError",
    "DimensionalParams",
    "DimensionlessParams",
    "SystemState",
    "FullState",
    "LVState",
    "Scales",
    "rhs_full",
    "rhs_reduced",
    "rhs_dimensionless",
    "rhs_controlled",
    "rhs_lv",
    "nondimensionalize",
    "redimensionalize",
    "v_lv",
]


class DomainError(ValueError):
    """Raised when an input lies outside the domain of an operation."""


def _check_positive(obj) -> None:
    for f in fields(obj):
        value = getattr(obj, f.name)
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise DomainError(f"{type(obj).__name__}.{f.name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class DimensionalParams:
    """Rates in 1/day; see :meth:`table1` for the reference parameter set."""

    mu_h: float
    mu_v: float
    mu_D: float
    gamma: float
    alpha: float
    eta: float
    b: float
    beta_h: float
    beta_v: float
    N_h: float

    def __post_init__(self):
        _check_positive(self)

    @classmethod
    def table1(cls, N_h: float = 10.0) -> "DimensionalParams":
        return cls(
            mu_h=3.4e-5,
            mu_v=0.0125,
            mu_D=0.15,
            gamma=0.14,
            alpha=0.3,
            eta=0.1,
            b=0.7,
            beta_h=0.45,
            beta_v=0.55,
            N_h=N_h,
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DimensionlessParams:
    B_h: float
    B_v: float
    mu_h: float
    gamma: float
    mu_D: float

    def __post_init__(self):
        _check_positive(self)

    def to_dict(self) -> dict:
        return asdict(self)


class _SystemState(NamedTuple):
    S_h: float
    I_h: float
    S_v: float
    I_v: float
    D: float


class SystemState(_SystemState):
    """Nonnegative reduced state ``(S_h, I_h, S_v, I_v, D)``."""

    __slots__ = ()

    def __new__(cls, S_h, I_h, S_v, I_v, D):
        self = super().__new__(cls, float(S_h), float(I_h), float(S_v), float(I_v), float(D))
        _check_state(self)
        return self

    @classmethod
    def from_array(cls, y) -> "SystemState":
        return cls(*np.asarray(y, dtype=float).tolist())


class _FullState(NamedTuple):
    S_h: float
    I_h: float
    R_h: float
    S_v: float
    I_v: float
    D: float


class FullState(_FullState):
    """Nonnegative full dimensional state ``(S_h, I_h, R_h, S_v, I_v, D)``."""

    __slots__ = ()

    def __new__(cls, S_h, I_h, R_h, S_v, I_v, D):
        self = super().__new__(cls, float(S_h), float(I_h), float(R_h), float(S_v), float(I_v), float(D))
        _check_state(self)
        return self

    def reduced(self) -> SystemState:
        return SystemState(self.S_h, self.I_h, self.S_v, self.I_v, self.D)


class _LVState(NamedTuple):
    N_v: float
    D: float


class LVState(_LVState):
    __slots__ = ()

    def __new__(cls, N_v, D):
        self = super().__new__(cls, float(N_v), float(D))
        _check_state(self)
        return self


def _check_state(state) -> None:
    for name, value in zip(state._fields, state):
        if not math.isfinite(value) or value < 0:
            raise DomainError(f"{type(state).__name__}.{name} must be finite and >= 0, got {value!r}")


def _as_vector(state, size: int) -> np.ndarray:
    y = np.asarray(state, dtype=float)
    if y.shape != (size,):
        raise DomainError(f"expected a state of length {size}, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise DomainError(f"state has non-finite components: {y.tolist()}")
    return y


def rhs_full(state: Sequence[float], params: DimensionalParams) -> np.ndarray:
    """Time derivatives of the six-compartment dimensional model."""
    S_h, I_h, R_h, S_v, I_v, D = _as_vector(state, 6)
    p = params
    host_force = p.b * p.beta_h / p.N_h * I_v
    vector_force = p.b * p.beta_v / p.N_h * I_h
    return np.array([
        p.mu_h * p.N_h - host_force * S_h - p.mu_h * S_h,
        host_force * S_h - (p.gamma + p.mu_h) * I_h,
        p.gamma * I_h - p.mu_h * R_h,
        p.mu_v * (S_v + I_v) - (vector_force + p.alpha * D) * S_v,
        vector_force * S_v - p.alpha * D * I_v,
        p.eta * (S_v + I_v) * D - p.mu_D * D,
    ])


def rhs_reduced(state: Sequence[float], params: DimensionalParams, u: float = 0.0) -> np.ndarray:
    """Dimensional model with ``R_h`` eliminated; ``u`` is a predator source (predators/day)."""
    S_h, I_h, S_v, I_v, D = _as_vector(state, 5)
    p = params
    host_force = p.b * p.beta_h / p.N_h * I_v
    vector_force = p.b * p.beta_v / p.N_h * I_h
    return np.array([
        p.mu_h * p.N_h - host_force * S_h - p.mu_h * S_h,
        host_force * S_h - (p.gamma + p.mu_h) * I_h,
        p.mu_v * (S_v + I_v) - (vector_force + p.alpha * D) * S_v,
        vector_force * S_v - p.alpha * D * I_v,
        p.eta * (S_v + I_v) * D - p.mu_D * D + u,
    ])


def rhs_dimensionless(state: Sequence[float], params: DimensionlessParams) -> np.ndarray:
    S_h, I_h, S_v, I_v, D = _as_vector(state, 5)
    p = params
    return np.array([
        p.mu_h * (1.0 - S_h) - p.B_h * S_h * I_v,
        p.B_h * S_h * I_v - (p.gamma + p.mu_h) * I_h,
        (S_v + I_v) - p.B_v * S_v * I_h - D * S_v,
        p.B_v * S_v * I_h - D * I_v,
        (S_v + I_v) * p.mu_D * D - p.mu_D * D,
    ])


def rhs_controlled(state: Sequence[float], params, u: float) -> np.ndarray:
    """Model right-hand side with a predator release ``u >= 0`` added to the D equation.

    ``params`` selects the variant: :class:`DimensionlessParams` gives the
    rescaled model, :class:`DimensionalParams` the reduced dimensional one.
    The control is in the units of the chosen variant (see :class:`Scales`).
    """
    if not (u >= 0.0) or not math.isfinite(u):
        raise DomainError(f"control value must be finite and >= 0, got {u!r}")
    if isinstance(params, DimensionalParams):
        return rhs_reduced(state, params, u)
    dy = rhs_dimensionless(state, params)
    dy[4] += u
    return dy


def rhs_lv(state: Sequence[float], params: DimensionlessParams) -> np.ndarray:
    N_v, D = _as_vector(state, 2)
    return np.array([N_v * (1.0 - D), params.mu_D * D * (N_v - 1.0)])


def v_lv(N_v: float, D: float, mu_D: float = 1.0) -> float:
    """Lotka-Volterra level function ``2 (mu_D (ln N_v - N_v) + ln D - D) / (1 + mu_D)``.

    With the default ``mu_D = 1`` this is ``ln N_v - N_v + ln D - D``. The
    weighting makes the value conserved along ``N_v' = N_v (1 - D)``,
    ``D' = mu_D D (N_v - 1)`` for any ``mu_D``; the maximum is -2, attained at
    (1, 1), in every case.
    """
    if not (N_v > 0 and D > 0) or not (math.isfinite(N_v) and math.isfinite(D)):
        raise DomainError(f"v_lv needs positive finite arguments, got N_v={N_v!r}, D={D!r}")
    if not (mu_D > 0 and math.isfinite(mu_D)):
        raise DomainError(f"v_lv needs a positive finite mu_D, got {mu_D!r}")
    return 2.0 * (mu_D * (math.log(N_v) - N_v) + math.log(D) - D) / (1.0 + mu_D)


@dataclass(frozen=True)
class Scales:
    """Reference scales linking dimensional and rescaled variables.

    ``tau = mu_v * t``, hosts scale by ``N_h``, vectors by ``N_v_star = mu_D / eta``
    and predators by ``D_star = mu_v / alpha``. ``mu_D`` and ``b`` are kept so
    the dimensional parameter set can be reconstructed exactly.
    """

    mu_v: float
    mu_D: float
    N_h: float
    eta: float
    alpha: float
    b: float

    @property
    def N_v_star(self) -> float:
        return self.mu_D / self.eta

    @property
    def D_star(self) -> float:
        return self.mu_v / self.alpha

    def time_to_dimensionless(self, t):
        return self.mu_v * t

    def time_to_dimensional(self, tau):
        return tau / self.mu_v

    def _state_factors(self, n: int) -> np.ndarray:
        if n == 5:
            return np.array([self.N_h, self.N_h, self.N_v_star, self.N_v_star, self.D_star])
        if n == 6:
            return np.array([self.N_h, self.N_h, self.N_h, self.N_v_star, self.N_v_star, self.D_star])
        raise DomainError(f"state must have 5 or 6 components (or rows), got {n}")

    def state_to_dimensionless(self, y) -> np.ndarray:
        """Map dimensional state(s) to rescaled ones; last axis is the state axis."""
        y = np.asarray(y, dtype=float)
        return y / self._state_factors(y.shape[-1])

    def state_to_dimensional(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return y * self._state_factors(y.shape[-1])

    def control_to_dimensionless(self, u):
        """Predators/day -> rescaled release rate (``u * alpha / mu_v**2``)."""
        return u * self.alpha / self.mu_v**2

    def control_to_dimensional(self, u):
        return u * self.mu_v**2 / self.alpha

    def to_dict(self) -> dict:
        return asdict(self)


def nondimensionalize(params: DimensionalParams) -> tuple[DimensionlessParams, Scales]:
    p = params
    dimless = DimensionlessParams(
        B_h=p.b * p.beta_h * p.mu_D / (p.mu_v * p.N_h * p.eta),
        B_v=p.b * p.beta_v / p.mu_v,
        mu_h=p.mu_h / p.mu_v,
        gamma=p.gamma / p.mu_v,
        mu_D=p.mu_D / p.mu_v,
    )
    scales = Scales(mu_v=p.mu_v, mu_D=p.mu_D, N_h=p.N_h, eta=p.eta, alpha=p.alpha, b=p.b)
    return dimless, scales


def redimensionalize(params: DimensionlessParams, scales: Scales) -> DimensionalParams:
    """Inverse of :func:`nondimensionalize` given the scales it returned."""
    s = scales
    mu_D = params.mu_D * s.mu_v
    if not math.isclose(mu_D, s.mu_D, rel_tol=1e-12):
        raise DomainError("scales do not belong to this parameter set (mu_D mismatch)")
    return DimensionalParams(
        mu_h=params.mu_h * s.mu_v,
        mu_v=s.mu_v,
        mu_D=mu_D,
        gamma=params.gamma * s.mu_v,
        alpha=s.alpha,
        eta=s.eta,
        b=s.b,
        beta_h=params.B_h * s.mu_v * s.N_h * s.eta / (s.b * mu_D),
        beta_v=params.B_v * s.mu_v / s.b,
        N_h=s.N_h,
    )
