"""
Experiment configuration.

A config file is a flat YAML mapping of scalars and lists of scalars. Values
are layered: ``config/defaults.yaml``, then environment defaults (from ``.env``),
then the user file, then command-line overrides.
"""

import hashlib
import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .hamiltonian import Ensemble, ModelKind, ModelParams
from .mc_engine import ChainConfig

logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).parent / "config"
DEFAULTS_PATH = CONFIG_DIR / "defaults.yaml"
ENV_DEFAULTS = {
    "QUANTUM_GRAPHS_THREADS": "threads",
    "QUANTUM_GRAPHS_OUTPUT_DIR": "output_dir",
}
BETA_RANGE_KEYS = ("beta_start", "beta_stop", "beta_count")
# Where and how fast a run executes; results do not depend on these.
RUN_ONLY_FIELDS = frozenset({"output_dir", "threads"})


class ConfigError(ValueError):
    """Invalid or unreadable experiment configuration; ``field`` names the offending key."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.message = message
        self.field = field


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    model: ModelKind
    E0: float = 0.0
    E1: float = 1.0
    J: Optional[float] = Field(default=None, gt=0)
    n: List[int] = Field(min_length=1)
    beta: Optional[List[float]] = None
    beta_start: Optional[float] = None
    beta_stop: Optional[float] = None
    beta_count: Optional[int] = Field(default=None, ge=1)
    ensemble: Literal["labeled", "unlabeled", "both"] = "both"
    seed: int = Field(default=0, ge=0, lt=2**64)
    measurements: int = Field(default=1000, ge=1)
    equilibration_sweeps: Optional[int] = Field(default=None, ge=0)
    max_sweeps: int = Field(default=1_000_000, ge=1)
    start: Literal["hot", "cold", "auto"] = "auto"
    output_dir: str = "output"
    reweight_points: int = Field(default=50, ge=1)
    validate_sigma: float = Field(default=4.0, gt=0)
    validate_mc: bool = True
    threads: int = Field(default=1, ge=1)

    @field_validator("n", "beta", mode="before")
    @classmethod
    def _listify(cls, value):
        if value is None or isinstance(value, list):
            return value
        return [value]

    @field_validator("n")
    @classmethod
    def _sizes(cls, value: List[int]) -> List[int]:
        if any(k < 2 for k in value):
            raise ValueError(f"vertex counts must be >= 2, got {value}")
        return value

    @model_validator(mode="after")
    def _consistent(self):
        if self.model is ModelKind.ISING and any(k < 3 for k in self.n):
            raise ConfigError(f"ising needs n >= 3, got {self.n}", "n")
        ranged = (self.beta_start, self.beta_stop, self.beta_count)
        if self.beta is None and None in ranged:
            raise ConfigError("give either a beta list or beta_start, beta_stop and beta_count", "beta")
        if self.beta is not None and any(x is not None for x in ranged):
            raise ConfigError("beta list and beta range are mutually exclusive", "beta")
        for value in self.betas():
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f"beta values must be finite and >= 0, got {value}", "beta")
        return self

    def betas(self) -> List[float]:
        if self.beta is not None:
            return [float(b) for b in self.beta]
        return [float(b) for b in np.linspace(self.beta_start, self.beta_stop, self.beta_count)]

    def ensembles(self) -> List[Ensemble]:
        if self.ensemble == "both":
            return [Ensemble.UNLABELED, Ensemble.LABELED]
        return [Ensemble(self.ensemble)]

    def grid(self) -> List[Tuple[int, float]]:
        return [(n, beta) for n in self.n for beta in self.betas()]

    def model_params(self, n: int) -> ModelParams:
        return ModelParams(kind=self.model, n=n, E0=self.E0, E1=self.E1, J=self.J)

    def chain_template(self, ensemble: Ensemble) -> ChainConfig:
        n = self.n[0]
        return ChainConfig(
            n=n,
            beta=self.betas()[0],
            params=self.model_params(n),
            ensemble=ensemble,
            seed=self.seed,
            equilibration_sweeps=self.equilibration_sweeps,
            target_measurements=self.measurements,
            max_sweeps=self.max_sweeps,
            start=self.start,
        )

    def canonical_json(self) -> str:
        fields = self.model_dump(mode="json", exclude=set(RUN_ONLY_FIELDS))
        return json.dumps(fields, sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def _read_yaml(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {path}: {e}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a flat key-value mapping")
    for key, value in data.items():
        items = value if isinstance(value, list) else [value]
        if any(isinstance(item, (dict, list)) for item in items):
            raise ConfigError("nested values are not allowed", str(key))
    return data


def _environment_defaults() -> Dict[str, Any]:
    values = {}
    for variable, key in ENV_DEFAULTS.items():
        raw = os.getenv(variable)
        if raw:
            values[key] = raw
    return values


def _overlay(base: Dict[str, Any], layer: Mapping[str, Any]) -> None:
    """Update ``base`` in place; a beta list and a beta range in different layers replace each other."""
    if "beta" in layer:
        for key in BETA_RANGE_KEYS:
            base.pop(key, None)
    if any(key in layer for key in BETA_RANGE_KEYS):
        base.pop("beta", None)
    base.update(layer)


def load_config(path: Optional[Union[str, Path]] = None,
                overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    Build the effective configuration.

    Args:
        path: User config file; omitted means defaults only
        overrides: Command-line values; ``None`` entries are ignored

    Returns:
        Validated ExperimentConfig
    """
    merged: Dict[str, Any] = {}
    if DEFAULTS_PATH.exists():
        merged.update(_read_yaml(DEFAULTS_PATH))
    merged.update(_environment_defaults())
    if path is not None:
        _overlay(merged, _read_yaml(path))
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        config = ExperimentConfig.model_validate(merged)
    except ValidationError as e:
        error = e.errors()[0]
        field = ".".join(str(part) for part in error["loc"]) or None
        cause = error.get("ctx", {}).get("error")
        if isinstance(cause, ConfigError):
            raise ConfigError(cause.message, cause.field)
        raise ConfigError(error["msg"], field)
    logger.debug(f"Effective config {config.sha256()[:12]}: {config.canonical_json()}")
    return config
