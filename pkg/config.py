"""
Augmentation settings.

The on-disk form is a flat `key=value` file in dotenv syntax. Keys mirror the
EditConfig field names; adapter command lines use `adapter.<slot>` keys.
"""
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from dotenv import dotenv_values

from graph_editor import DEFAULT_ATTRIBUTE_ROLES, DeletionPolicy

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "AMRAUG_CONFIG"

ADAPTER_SLOTS = ("text_to_amr", "amr_to_text", "expander")
MIX_MODES = ("append", "replace")
SIMILARITY_MODES = ("f1", "raw")

_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


class ConfigError(ValueError):
    """Unreadable, unknown or out-of-range configuration"""


@dataclass(frozen=True)
class EditConfig:
    mu: float = 0.5
    sigma2: float = 0.1
    alpha: float = 0.35
    beta: float = 0.6
    mix_mu: float = 0.5
    mix_sigma2: float = 0.1
    top_k_mix: int = 2
    rounds: int = 5
    tri_k: int = 3
    seed: int = 42
    attribute_roles: Tuple[str, ...] = DEFAULT_ATTRIBUTE_ROLES
    no_mix: bool = False
    mix_mode: str = "append"
    similarity_mode: str = "f1"
    smatch_restarts: int = 4
    exact_bound: int = 8
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    embeddings: Optional[str] = None
    adapters: Dict[str, str] = field(default_factory=dict)
    adapter_timeout: float = 600.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        for name in ("sigma2", "mix_sigma2"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative, got {getattr(self, name)}")
        minimums = {"rounds": 1, "tri_k": 0, "top_k_mix": 0, "smatch_restarts": 1, "exact_bound": 1, "workers": 1}
        for name, minimum in minimums.items():
            if getattr(self, name) < minimum:
                raise ConfigError(f"{name} must be at least {minimum}, got {getattr(self, name)}")
        if self.mix_mode not in MIX_MODES:
            raise ConfigError(f"mix_mode must be one of {', '.join(MIX_MODES)}, got '{self.mix_mode}'")
        if self.similarity_mode not in SIMILARITY_MODES:
            raise ConfigError(
                f"similarity_mode must be one of {', '.join(SIMILARITY_MODES)}, got '{self.similarity_mode}'"
            )
        unknown_slots = set(self.adapters) - set(ADAPTER_SLOTS)
        if unknown_slots:
            raise ConfigError(f"unknown adapter slot(s): {', '.join(sorted(unknown_slots))}")
        if self.adapter_timeout <= 0:
            raise ConfigError(f"adapter.timeout must be positive, got {self.adapter_timeout}")

    def deletion_policy(self) -> DeletionPolicy:
        return DeletionPolicy(self.alpha, self.mu, self.sigma2, self.attribute_roles)

    def with_overrides(self, **overrides) -> "EditConfig":
        """Copy with the non-None overrides applied (command line flags)"""
        changes = {key: value for key, value in overrides.items() if value is not None}
        try:
            return replace(self, **changes)
        except TypeError as e:
            raise ConfigError(str(e)) from e


def _parse_bool(key: str, raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ConfigError(f"{key}: expected a boolean, got '{raw}'")


def _convert(key: str, raw: Optional[str], kind: type):
    if raw is None:
        raise ConfigError(f"{key}: missing value")
    raw = raw.strip()
    try:
        if kind is bool:
            return _parse_bool(key, raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError as e:
        raise ConfigError(f"{key}: {e}") from e
    return raw


def config_from_mapping(values: Dict[str, Optional[str]], source: str = "<mapping>") -> EditConfig:
    """Build an EditConfig from raw string values, rejecting keys it does not know"""
    scalar = {
        "mu": float, "sigma2": float, "alpha": float, "beta": float, "mix_mu": float, "mix_sigma2": float,
        "top_k_mix": int, "rounds": int, "tri_k": int, "seed": int, "smatch_restarts": int,
        "exact_bound": int, "workers": int, "no_mix": bool,
        "mix_mode": str, "similarity_mode": str, "embeddings": str,
    }
    settings = {}
    adapters: Dict[str, str] = {}
    for key, raw in values.items():
        if key == "attribute_roles":
            roles = tuple(r.strip() for r in (raw or "").split(",") if r.strip())
            settings["attribute_roles"] = roles
        elif key == "adapter.timeout":
            settings["adapter_timeout"] = _convert(key, raw, float)
        elif key.startswith("adapter."):
            slot = key.split(".", 1)[1]
            if slot not in ADAPTER_SLOTS:
                raise ConfigError(f"{source}: unknown adapter slot '{slot}'")
            if raw and raw.strip():
                adapters[slot] = raw.strip()
        elif key in scalar:
            settings[key] = _convert(key, raw, scalar[key])
        else:
            raise ConfigError(f"{source}: unknown configuration key '{key}'")
    settings["adapters"] = adapters
    try:
        return EditConfig(**settings)
    except ConfigError as e:
        raise ConfigError(f"{source}: {e}") from e


def resolve_config_path(explicit: Optional[Union[str, Path]] = None) -> Optional[Path]:
    """--config flag first, then the AMRAUG_CONFIG environment variable"""
    if explicit:
        return Path(explicit)
    from_env = os.getenv(CONFIG_ENV_VAR)
    return Path(from_env) if from_env else None


def load_config(path: Optional[Union[str, Path]] = None) -> EditConfig:
    """Read the resolved config file, or return the built-in defaults when there is none"""
    resolved = resolve_config_path(path)
    if resolved is None:
        logger.debug("No config file given, using defaults")
        return EditConfig()
    if not resolved.is_file():
        raise FileNotFoundError(f"config file not found: {resolved}")
    values = dotenv_values(resolved)
    config = config_from_mapping(dict(values), str(resolved))
    logger.info(f"Loaded configuration from {resolved}")
    return config
