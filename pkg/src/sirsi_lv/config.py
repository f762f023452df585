"""Scenario configuration: JSON loading, dot-path overrides and validation."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Any, Optional, Union

from .control import CostWeights, SweepOptions, default_grid_size
from .integrate import SolverOptions
from .model import DimensionalParams, DimensionlessParams, DomainError, FullState, SystemState

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "MODEL_FORMS",
    "default_config_dict",
    "load_config_dict",
    "apply_overrides",
    "parse_config",
    "load_config",
]

MODEL_FORMS = ("dimensional", "dimensionless")

_TOP_LEVEL = {"model_form", "params", "initial_state", "T", "weights", "sweep", "solver", "k0", "output_dir"}
_STATE_KEYS = {
    "dimensional": ("S_h", "I_h", "R_h", "S_v", "I_v", "D"),
    "dimensionless": ("S_h", "I_h", "S_v", "I_v", "D"),
}


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the offending field."""


@dataclass(frozen=True)
class ScenarioConfig:
    model_form: str
    params: Union[DimensionalParams, DimensionlessParams]
    initial_state: Union[FullState, SystemState]
    T: float
    weights: CostWeights
    sweep: SweepOptions
    solver: SolverOptions
    k0: tuple
    output_dir: Optional[str] = None

    @property
    def x0(self) -> SystemState:
        """Reduced five-component initial state used by the controlled model."""
        s = self.initial_state
        return s.reduced() if isinstance(s, FullState) else s

    def to_dict(self) -> dict:
        """Fully resolved configuration; loading it back gives an equal config."""
        w = self.weights
        return {
            "model_form": self.model_form,
            "params": self.params.to_dict(),
            "initial_state": dict(zip(self.initial_state._fields, self.initial_state)),
            "T": self.T,
            "weights": {"c": w.c, "q": w.q, "r": w.r, "a": w.a, "u_max": w.u_max},
            "sweep": {k: v for k, v in self.sweep.to_dict().items() if k != "solver"},
            "solver": asdict(self.solver),
            "k0": list(self.k0),
            "output_dir": self.output_dir,
        }


def default_config_dict() -> dict:
    """The packaged default scenario (table1.json) as a plain dict."""
    text = resources.files("sirsi_lv").joinpath("data/table1.json").read_text(encoding="utf-8")
    return json.loads(text)


def load_config_dict(path: Union[str, Path, None]) -> dict:
    """Read a config file; a previous run's ``summary.json`` is accepted too."""
    if path is None:
        return default_config_dict()
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if isinstance(doc, dict) and "config" in doc and "summary" in doc:
        doc = doc["config"]
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    return doc


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict, overrides) -> dict:
    """Apply ``key.sub=value`` overrides (values parsed as JSON when possible)."""
    doc = json.loads(json.dumps(doc))
    for item in overrides or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} must look like key.path=value")
        parts = key.split(".")
        node = doc
        for part in parts[:-1]:
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            if not isinstance(child, dict):
                raise ConfigError(f"override {key!r}: {part!r} is not a section")
            node = child
        node[parts[-1]] = _parse_value(raw)
    return doc


def _section(doc: dict, name: str, allowed) -> dict:
    value = doc.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: expected an object")
    unknown = sorted(set(value) - set(allowed))
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}: unknown key")
    return value


def _number(value, field_name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{field_name}: expected a finite number, got {value!r}")
    return float(value)


def _build(cls, values: dict, prefix: str):
    names = [f.name for f in fields(cls)]
    missing = [n for n in names if n not in values]
    if missing:
        raise ConfigError(f"{prefix}.{missing[0]}: missing")
    try:
        return cls(**{n: _number(values[n], f"{prefix}.{n}") for n in names})
    except DomainError as exc:
        raise ConfigError(f"{prefix}: {exc}") from exc


def parse_config(doc: dict) -> ScenarioConfig:
    """Validate a config dict and fill in defaults."""
    unknown = sorted(k for k in doc if k not in _TOP_LEVEL and not k.startswith("_"))
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key")

    form = doc.get("model_form")
    if form not in MODEL_FORMS:
        raise ConfigError(f"model_form: must be one of {MODEL_FORMS}, got {form!r}")

    param_cls = DimensionalParams if form == "dimensional" else DimensionlessParams
    if "params" not in doc:
        raise ConfigError("params: missing")
    params = _build(param_cls, _section(doc, "params", [f.name for f in fields(param_cls)]), "params")

    state_keys = _STATE_KEYS[form]
    raw_state = _section(doc, "initial_state", state_keys)
    if not raw_state:
        raise ConfigError("initial_state: missing")
    values = {}
    for key in state_keys:
        if key == "R_h" and key not in raw_state:
            continue
        if key not in raw_state:
            raise ConfigError(f"initial_state.{key}: missing")
        values[key] = _number(raw_state[key], f"initial_state.{key}")
        if values[key] < 0:
            raise ConfigError(f"initial_state.{key}: must be >= 0")
    if form == "dimensional":
        total = params.N_h
        if "R_h" not in values:
            values["R_h"] = total - values["S_h"] - values["I_h"]
            if values["R_h"] < -1e-12 * total:
                raise ConfigError("initial_state.R_h: S_h + I_h exceeds N_h")
            values["R_h"] = max(values["R_h"], 0.0)
        hosts = values["S_h"] + values["I_h"] + values["R_h"]
        if abs(hosts - total) > 1e-9 * total:
            raise ConfigError(f"initial_state: S_h + I_h + R_h = {hosts} must equal params.N_h = {total}")
        state = FullState(**values)
    else:
        state = SystemState(**values)

    if "T" not in doc:
        raise ConfigError("T: missing")
    T = _number(doc["T"], "T")
    if T <= 0:
        raise ConfigError("T: must be > 0")

    w_raw = dict(CostWeights.table1().to_dict())
    w_raw.pop("T")
    w_raw.update(_section(doc, "weights", ("c", "q", "r", "a", "u_max")))
    w_raw["T"] = T
    weights = _build(CostWeights, w_raw, "weights")

    solver_raw = {k: v for k, v in asdict(SolverOptions()).items()}
    solver_raw.update(_section(doc, "solver", solver_raw.keys()))
    try:
        solver = SolverOptions(
            rel_tol=_number(solver_raw["rel_tol"], "solver.rel_tol"),
            abs_tol=_number(solver_raw["abs_tol"], "solver.abs_tol"),
            first_step=None if solver_raw["first_step"] is None else _number(solver_raw["first_step"], "solver.first_step"),
            max_steps=_int(solver_raw["max_steps"], "solver.max_steps"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"solver: {exc}") from exc

    sweep_defaults = {k: v for k, v in SweepOptions().to_dict().items() if k != "solver"}
    sweep_raw = dict(sweep_defaults)
    sweep_raw.update(_section(doc, "sweep", sweep_defaults.keys()))
    n = default_grid_size(T) if sweep_raw["n"] is None else _int(sweep_raw["n"], "sweep.n")
    try:
        sweep = SweepOptions(
            d=_number(sweep_raw["d"], "sweep.d"),
            u0=_number(sweep_raw["u0"], "sweep.u0"),
            n=n,
            tol_abs=_number(sweep_raw["tol_abs"], "sweep.tol_abs"),
            tol_rel=_number(sweep_raw["tol_rel"], "sweep.tol_rel"),
            max_iter=_int(sweep_raw["max_iter"], "sweep.max_iter"),
            solver=solver,
        )
    except DomainError as exc:
        raise ConfigError(f"sweep: {exc}") from exc
    if not 0 <= sweep.u0 <= weights.u_max:
        raise ConfigError(f"sweep.u0: must lie in [0, weights.u_max={weights.u_max}]")

    k0_raw = doc.get("k0", [])
    if not isinstance(k0_raw, list):
        raise ConfigError("k0: expected a list of numbers")
    k0 = tuple(_number(v, f"k0[{i}]") for i, v in enumerate(k0_raw))
    for i, v in enumerate(k0):
        if v > -2:
            raise ConfigError(f"k0[{i}]: must be <= -2, got {v}")

    out = doc.get("output_dir")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output_dir: expected a string or null")

    return ScenarioConfig(
        model_form=form,
        params=params,
        initial_state=state,
        T=T,
        weights=weights,
        sweep=sweep,
        solver=solver,
        k0=k0,
        output_dir=out,
    )


def _int(value, field_name: str) -> int:
    if (
        isinstance(value, bool)
        or not isinstance(value, (int, float))
        or not math.isfinite(value)
        or value != int(value)
    ):
        raise ConfigError(f"{field_name}: expected an integer, got {value!r}")
    return int(value)


def load_config(path=None, overrides=()) -> ScenarioConfig:
    return parse_config(apply_overrides(load_config_dict(path), overrides))
