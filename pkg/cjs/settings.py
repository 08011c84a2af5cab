import json
import logging
import os
from typing import Any, Dict, Iterable, List, Mapping, Optional, Union

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from cjs.exceptions import ConfigError

logger = logging.getLogger(__name__)

# declared type of every field, used to coerce ``--set name=value`` strings
FIELD_TYPES = {
    "gamma": "Int",
    "N": "Int",
    "sigma": "Sigma",
    "rho": "Float",
    "mu": "Float",
    "tol": "Float",
    "max_iter": "Int",
    "reg_c": "Float",
    "svm_tol": "Float",
    "svm_max_iter": "Int",
    "rank_tol": "Float",
    "runs": "Int",
    "seed": "Int",
    "n_jobs": "Int",
    "label_base": "Int",
    "l2_normalize": "Check",
    "max_kmeans_iters": "Int",
    "output": "Data",
    "sources": "List",
    "targets": "List",
}


def _check(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def _convert_value(value: str, value_type: str) -> Union[float, int, str, bool, List[str]]:
    converters = {
        "Float": float,
        "Int": int,
        "Check": _check,
        "Sigma": lambda v: v if str(v).strip() == "median" else float(v),
        "List": lambda v: [item for item in str(v).split(",") if item],
    }
    return converters.get(value_type, lambda x: x)(value)


class PipelineConfig(BaseModel):
    """Every parameter of one adaptation experiment."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma: int = 20
    N: int = 5
    sigma: Union[float, str] = "median"
    rho: float = 1.0
    mu: float = 1.0
    tol: float = 1e-6
    max_iter: int = 10000
    reg_c: float = 1.0
    svm_tol: float = 1e-6
    svm_max_iter: int = 5000
    rank_tol: float = 1e-10
    runs: int = 20
    seed: int = 0
    n_jobs: int = 1
    label_base: int = 0
    l2_normalize: bool = False
    max_kmeans_iters: int = 300
    output: Optional[str] = None
    sources: List[str] = []
    targets: List[str] = []

    @field_validator("sigma", mode="before")
    @classmethod
    def _parse_sigma(cls, value: Any) -> Union[float, str]:
        if value is None or (isinstance(value, str) and value.strip() == "median"):
            return "median"
        try:
            sigma = float(value)
        except (TypeError, ValueError):
            raise ValueError(f"sigma must be 'median' or a positive number, got {value!r}")
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        return sigma

    @model_validator(mode="after")
    def _check_ranges(self) -> "PipelineConfig":
        if self.N < 2:
            raise ValueError(f"N must be at least 2, got {self.N}")
        if self.gamma < self.N:
            raise ValueError(f"gamma ({self.gamma}) must be at least N ({self.N})")
        if self.runs < 1:
            raise ValueError(f"runs must be at least 1, got {self.runs}")
        if self.mu <= 0 or self.reg_c <= 0:
            raise ValueError("mu and reg_c must be positive")
        if self.rho < 0:
            raise ValueError(f"rho must be nonnegative, got {self.rho}")
        if self.tol <= 0 or self.svm_tol <= 0 or self.rank_tol <= 0:
            raise ValueError("Tolerances must be positive")
        if min(self.max_iter, self.svm_max_iter, self.max_kmeans_iters) < 1:
            raise ValueError("Iteration limits must be positive")
        if self.label_base not in (0, 1):
            raise ValueError(f"label_base must be 0 or 1, got {self.label_base}")
        if self.n_jobs == 0:
            raise ValueError("n_jobs must be nonzero")
        return self

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def build_config(values: Optional[Mapping[str, Any]] = None) -> PipelineConfig:
    try:
        return PipelineConfig(**dict(values or {}))
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def load_config_file(path: str) -> Dict[str, Any]:
    if not os.path.isfile(path):
        raise FileNotFoundError(path)
    with open(path) as file:
        try:
            values = json.load(file)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(values, dict):
        raise ConfigError(f"{path} must hold a JSON object of field -> value")
    return values


def parse_overrides(pairs: Iterable[str]) -> Dict[str, Any]:
    """Turn ``name=value`` strings into typed field values."""
    values = {}
    for pair in pairs:
        name, sep, raw = pair.partition("=")
        name = name.strip()
        if not sep or not name:
            raise ConfigError(f"Override {pair!r} is not of the form name=value")
        if name not in FIELD_TYPES:
            raise ConfigError(f"Unknown configuration field {name!r}")
        try:
            values[name] = _convert_value(raw.strip(), FIELD_TYPES[name])
        except ValueError as e:
            raise ConfigError(f"Bad value for {name}: {e}") from e
    return values


def resolve_config(
    config_path: Optional[str] = None,
    flags: Optional[Mapping[str, Any]] = None,
    overrides: Iterable[str] = (),
) -> PipelineConfig:
    """Defaults, then the config file, then explicit flags and ``--set`` pairs."""
    values: Dict[str, Any] = {}
    if config_path:
        values.update(load_config_file(config_path))
        logger.info(f"Loaded configuration from {config_path}")
    values.update({k: v for k, v in (flags or {}).items() if v is not None})
    values.update(parse_overrides(overrides))
    return build_config(values)


def with_updates(config: PipelineConfig, **updates: Any) -> PipelineConfig:
    return build_config({**config.model_dump(), **updates})
