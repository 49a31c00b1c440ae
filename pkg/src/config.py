import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import tomli

from src.tensors import GeometryError

MODEL_KINDS = ("milnor", "heisenberg", "synthetic")


class ConfigError(GeometryError):
    """Config file could not be parsed or a field failed validation."""

    def __init__(self, field: Optional[str], message: str):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "milnor"
    lambda2: float = 0.0
    lambda3: float = 0.0
    n: int = 1
    kappa: float = 0.0
    mu: float = 0.0
    homothety: Optional[float] = None
    samples: int = 100
    seed: int = 0
    tolerance: float = 1e-7
    tol_algebraic: float = 1e-10
    tol_fd: float = 1e-6
    nullity_acceptance: float = 1e-5
    scale: float = 1.0
    uniqueness_scales: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)
    sweep_values: tuple[float, ...] = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)

    def __post_init__(self):
        validate(self)

    def with_overrides(self, **overrides: Any) -> "ModelConfig":
        changes = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **changes) if changes else self

    def descriptor(self) -> dict:
        """Model identification carried into every run report."""
        described: dict[str, Any] = {"kind": self.kind}
        if self.kind == "milnor":
            described.update(lambda2=self.lambda2, lambda3=self.lambda3)
        elif self.kind == "synthetic":
            described.update(n=self.n, kappa=self.kappa, mu=self.mu)
        if self.homothety is not None:
            described["homothety"] = self.homothety
        described.update(samples=self.samples, seed=self.seed)
        return described

    def to_document(self) -> dict:
        """Nested mapping in config-file layout, suitable for tomli_w or json."""
        model: dict[str, Any] = {"kind": self.kind}
        if self.kind == "milnor":
            model.update(lambda2=self.lambda2, lambda3=self.lambda3)
        elif self.kind == "synthetic":
            model.update(n=self.n, kappa=self.kappa, mu=self.mu)
        if self.homothety is not None:
            model["homothety"] = self.homothety
        return {
            "model": model,
            "sampling": {"samples": self.samples, "seed": self.seed},
            "tolerances": {
                "default": self.tolerance,
                "algebraic": self.tol_algebraic,
                "finite_difference": self.tol_fd,
                "nullity_acceptance": self.nullity_acceptance,
            },
            "descent": {"scale": self.scale, "uniqueness_scales": list(self.uniqueness_scales)},
            "sweep": {"values": list(self.sweep_values)},
        }


def _require(condition: bool, name: str, message: str) -> None:
    if not condition:
        raise ConfigError(name, message)


def validate(config: ModelConfig) -> None:
    _require(config.kind in MODEL_KINDS, "model.kind", f"must be one of {', '.join(MODEL_KINDS)}")
    for name in ("lambda2", "lambda3", "kappa", "mu"):
        value = getattr(config, name)
        _require(math.isfinite(value), f"model.{name}", "must be a finite number")
    _require(config.kappa <= 1, "model.kappa", "κ ≤ 1 required")
    _require(config.n >= 1, "model.n", "must be at least 1")
    if config.homothety is not None:
        _require(config.homothety != 0, "model.homothety", "homothety constant a must be nonzero")
        _require(config.homothety > 0, "model.homothety", "a > 0 required for a Riemannian metric")
    _require(config.samples >= 1, "sampling.samples", "must be at least 1")
    _require(config.seed >= 0, "sampling.seed", "must be a non-negative integer")
    for name, key in (
        ("tolerance", "default"),
        ("tol_algebraic", "algebraic"),
        ("tol_fd", "finite_difference"),
        ("nullity_acceptance", "nullity_acceptance"),
    ):
        _require(getattr(config, name) > 0, f"tolerances.{key}", "must be positive")
    _require(
        math.isfinite(config.scale) and config.scale > 0, "descent.scale", "e^{2f} must be positive"
    )
    _require(
        len(config.uniqueness_scales) > 0 and all(s > 0 for s in config.uniqueness_scales),
        "descent.uniqueness_scales",
        "must be a non-empty list of positive numbers",
    )
    _require(len(config.sweep_values) > 0, "sweep.values", "must be non-empty")


def _read_document(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(None, f"config file {path} does not exist")
    suffix = path.suffix.lower()
    try:
        if suffix == ".toml":
            with open(path, "rb") as f:
                return tomli.load(f)
        if suffix == ".json":
            with open(path, "r", encoding="utf-8") as f:
                document = json.load(f)
            if not isinstance(document, dict):
                raise ConfigError(None, "top level of a JSON config must be an object")
            return document
    except (tomli.TOMLDecodeError, json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ConfigError(None, f"parse error in {path.name}: {e}") from e
    raise ConfigError(None, f"unsupported config suffix '{suffix}' (use .toml or .json)")


def _number(section: dict, section_name: str, key: str, default, kind=float):
    if key not in section:
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section_name}.{key}", f"expected a number, got {value!r}")
    if kind is int and (isinstance(value, float) and not value.is_integer()):
        raise ConfigError(f"{section_name}.{key}", f"expected an integer, got {value!r}")
    return kind(value)


def _numbers(section: dict, section_name: str, key: str, default) -> tuple[float, ...]:
    if key not in section:
        return default
    values = section[key]
    if not isinstance(values, list):
        raise ConfigError(f"{section_name}.{key}", "expected a list of numbers")
    return tuple(_number({key: v}, section_name, key, None) for v in values)


def _section(document: dict, name: str) -> dict:
    section = document.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(name, "expected a table")
    return section


def parse_model_config(document: dict) -> ModelConfig:
    defaults = ModelConfig()
    model = _section(document, "model")
    sampling = _section(document, "sampling")
    tolerances = _section(document, "tolerances")
    descent = _section(document, "descent")
    sweep = _section(document, "sweep")

    kind = model.get("kind", defaults.kind)
    if not isinstance(kind, str):
        raise ConfigError("model.kind", f"expected a string, got {kind!r}")
    return ModelConfig(
        kind=kind.lower(),
        lambda2=_number(model, "model", "lambda2", defaults.lambda2),
        lambda3=_number(model, "model", "lambda3", defaults.lambda3),
        n=_number(model, "model", "n", defaults.n, int),
        kappa=_number(model, "model", "kappa", defaults.kappa),
        mu=_number(model, "model", "mu", defaults.mu),
        homothety=_number(model, "model", "homothety", None),
        samples=_number(sampling, "sampling", "samples", defaults.samples, int),
        seed=_number(sampling, "sampling", "seed", defaults.seed, int),
        tolerance=_number(tolerances, "tolerances", "default", defaults.tolerance),
        tol_algebraic=_number(tolerances, "tolerances", "algebraic", defaults.tol_algebraic),
        tol_fd=_number(tolerances, "tolerances", "finite_difference", defaults.tol_fd),
        nullity_acceptance=_number(
            tolerances, "tolerances", "nullity_acceptance", defaults.nullity_acceptance
        ),
        scale=_number(descent, "descent", "scale", defaults.scale),
        uniqueness_scales=_numbers(descent, "descent", "uniqueness_scales", defaults.uniqueness_scales),
        sweep_values=_numbers(sweep, "sweep", "values", defaults.sweep_values),
    )


def load_model_config(path) -> ModelConfig:
    return parse_model_config(_read_document(Path(path)))
