"""YAML run configuration.

Precedence, lowest first: built-in defaults, the ``--config`` file, command
line flags. Grid fields accept a scalar or a list; ``seeds`` is either a
count (seeds ``0..N-1``) or an explicit list.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .hamiltonian import MAX_SITES, TfimParams
from .utn import RotationMode
from .vqe import OptimizerConfig, SweepCell, sweep_cells


class ConfigError(ValueError):
    pass


IntOrList = Union[int, list[int]]


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_sites: int = Field(4, ge=2, le=MAX_SITES)
    J: float = 1.0
    g: float = 1.0
    circuit_layers: IntOrList = [1, 2, 3, 4]
    tn_layers: IntOrList = [0, 1, 2, 3]
    rotation_mode: Union[RotationMode, list[RotationMode]] = [RotationMode.ONE_PARAM, RotationMode.THREE_PARAM]
    learning_rate: float = Field(0.1, gt=0)
    max_iterations: int = Field(200, ge=1)
    grad_tolerance: float = Field(1e-8, gt=0)
    seeds: IntOrList = 20
    theta_fd_step: float = Field(1e-6, gt=0)
    variance_samples: int = Field(200, ge=2)
    entangler_range: IntOrList | None = None

    @field_validator("J")
    @classmethod
    def _nonzero_j(cls, v):
        if v == 0:
            raise ValueError("J must be nonzero")
        return v

    @field_validator("circuit_layers", "tn_layers", "rotation_mode")
    @classmethod
    def _nonempty(cls, v):
        if isinstance(v, list) and not v:
            raise ValueError("grid dimension must not be empty")
        return v

    @field_validator("seeds")
    @classmethod
    def _seeds(cls, v):
        if isinstance(v, int):
            if v < 1:
                raise ValueError("seed count must be >= 1")
        elif not v:
            raise ValueError("seed list must not be empty")
        elif any(s < 0 for s in v) or len(set(v)) != len(v):
            raise ValueError("seeds must be distinct non-negative integers")
        return v

    @model_validator(mode="after")
    def _grid(self):
        if any(c < 1 for c in self.circuit_layer_list):
            raise ValueError("circuit_layers must be >= 1")
        if any(t < 0 for t in self.tn_layer_list):
            raise ValueError("tn_layers must be >= 0")
        if self.n_sites % 2 and any(t > 0 for t in self.tn_layer_list):
            raise ValueError("the brick-wall network needs an even n_sites when tn_layers > 0")
        if self.entangler_range is not None:
            ranges = _as_list(self.entangler_range)
            if not ranges or any(not 1 <= r < self.n_sites for r in ranges):
                raise ValueError(f"entangler_range values must lie in [1, {self.n_sites - 1}]")
        return self

    @property
    def circuit_layer_list(self) -> list[int]:
        return _as_list(self.circuit_layers)

    @property
    def tn_layer_list(self) -> list[int]:
        return _as_list(self.tn_layers)

    @property
    def mode_list(self) -> list[RotationMode]:
        return _as_list(self.rotation_mode)

    @property
    def seed_list(self) -> list[int]:
        return list(range(self.seeds)) if isinstance(self.seeds, int) else list(self.seeds)

    @property
    def entangler_ranges(self) -> tuple[int, ...] | None:
        return None if self.entangler_range is None else tuple(_as_list(self.entangler_range))

    def tfim(self) -> TfimParams:
        return TfimParams(self.n_sites, self.J, self.g)

    def optimizer(self, seed: int = 0) -> OptimizerConfig:
        return OptimizerConfig(self.learning_rate, self.max_iterations, self.grad_tolerance,
                               seed, self.theta_fd_step)

    def cells(self) -> list[SweepCell]:
        return sweep_cells(self.circuit_layer_list, self.tn_layer_list, self.mode_list)

    def echo(self) -> dict[str, Any]:
        return self.model_dump(mode="json")


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "config"
        lines.append(f"{loc}: {e['msg']}")
    return "; ".join(lines)


def load_config(path: str | Path | None, overrides: dict[str, Any] | None = None) -> RunConfig:
    data: dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must be a mapping of field names to values")
        data.update(loaded or {})
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return RunConfig(**data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from exc
