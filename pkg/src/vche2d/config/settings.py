"""
vche2d Settings Management

Experiment settings as nested dataclasses, loaded from defaults, config
files, environment variables and command-line overrides.
"""

import json
import math
import os
from dataclasses import dataclass, field, fields, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import yaml

from ..core.lyapunov_perron import MIN_LIPSCHITZ_SAMPLES
from ..utils.exceptions import ConfigurationError, ValidationError
from ..utils.logger import LogLevel, get_logger
from .config_loader import ConfigLoader, ConfigLoaderError


class ConfigFormat(Enum):
    """Configuration file formats."""
    YAML = "yaml"
    JSON = "json"
    FLAT = "flat"


class SettingsError(ConfigurationError):
    """Settings management related errors."""
    pass


@dataclass
class GridConfig:
    """Scaled-frame grid."""
    n_points: int = 256
    half_width: float = 12.0


@dataclass
class PhysicsConfig:
    """Filter length and spatial discretization switches."""
    alpha: float = 0.1
    far_field: bool = True
    dealias: bool = True


@dataclass
class SteppingConfig:
    """Scaled-frame time stepping."""
    dt: float = 0.005
    t_end: float = 8.0
    output_every: int = 20


@dataclass
class DataConfig:
    """Initial data: an off-centre anisotropic Gaussian."""
    initial_norm: float = 0.05
    mass: float = 0.05
    offset1: float = 0.6
    offset2: float = -0.4
    width1: float = 1.1
    width2: float = 0.8


@dataclass
class FitConfig:
    """Fit windows, scaled time tau and physical time t."""
    scaled_start: float = 2.0
    scaled_end: float = 8.0
    physical_start: float = 10.0
    physical_end: float = 100.0


@dataclass
class PhysicalConfig:
    """Physical-frame smoothing run."""
    n_points: int = 256
    half_width: float = 48.0
    dt: float = 0.05
    t_end: float = 100.0
    output_every: int = 10


@dataclass
class InvariantsConfig:
    """Grid and sampling of the property checks."""
    n_points: int = 128
    half_width: float = 12.0
    random_fields: int = 100
    gamma_tau_end: float = 5.0
    picard_n_points: int = 64
    picard_half_width: float = 12.0


@dataclass
class LyapunovConfig:
    """Lyapunov-Perron checks."""
    n_points: int = 64
    half_width: float = 10.0
    dt: float = 0.01
    r0: float = 0.01
    mu: float = 0.25
    mu_second: float = 0.75
    steps: int = 6
    lipschitz_samples: int = 20
    constant_samples: int = 50
    equivalence_tolerance: float = 1e-7


@dataclass
class LoggingConfig:
    """Logging configuration settings."""
    level: str = "INFO"
    file_path: Optional[str] = None
    structured: bool = True


@dataclass
class ExperimentSettings:
    """All tunables of an experiment run."""
    grid: GridConfig = field(default_factory=GridConfig)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    stepping: SteppingConfig = field(default_factory=SteppingConfig)
    data: DataConfig = field(default_factory=DataConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    physical: PhysicalConfig = field(default_factory=PhysicalConfig)
    invariants: InvariantsConfig = field(default_factory=InvariantsConfig)
    lyapunov: LyapunovConfig = field(default_factory=LyapunovConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)
    threads: int = 0
    seed: int = 1234

    def to_dict(self) -> Dict[str, Any]:
        """Nested dictionary of every setting."""
        out: Dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if is_dataclass(value):
                out[f.name] = {sub.name: getattr(value, sub.name) for sub in fields(value)}
            else:
                out[f.name] = value
        return out

    def flat(self) -> Dict[str, Any]:
        """Dotted-key view used for report config echoes."""
        out: Dict[str, Any] = {}
        for key, value in self.to_dict().items():
            if isinstance(value, dict):
                for sub, sub_value in value.items():
                    out[f"{key}.{sub}"] = sub_value
            else:
                out[key] = value
        return out


def _setting_paths() -> Dict[str, Tuple[str, ...]]:
    """Dotted path -> attribute path for every leaf setting."""
    paths: Dict[str, Tuple[str, ...]] = {}
    defaults = ExperimentSettings()
    for f in fields(defaults):
        value = getattr(defaults, f.name)
        if is_dataclass(value):
            for sub in fields(value):
                paths[f"{f.name}.{sub.name}"] = (f.name, sub.name)
        else:
            paths[f.name] = (f.name,)
    return paths


SETTING_PATHS = _setting_paths()


def resolve_key(key: str) -> Tuple[str, ...]:
    """Map a dotted or bare key to its attribute path.

    A bare key resolves when exactly one section defines it.
    """
    key = key.strip().replace("-", "_")
    if key in SETTING_PATHS:
        return SETTING_PATHS[key]
    matches = [path for dotted, path in SETTING_PATHS.items() if dotted.split(".")[-1] == key]
    if len(matches) == 1:
        return matches[0]
    if not matches:
        raise ValidationError(f"Unknown setting '{key}'", {key: "unknown setting"})
    options = sorted(".".join(p) for p in matches)
    raise ValidationError(f"Ambiguous setting '{key}'",
                          {key: f"ambiguous, use one of {options}"})


def _convert(value: Any, default: Any, key: str) -> Any:
    """Coerce a parsed value to the type of the field default."""
    if isinstance(value, str):
        parsed = yaml.safe_load(value) if value.strip() else None
    else:
        parsed = value
    if default is None:
        return None if parsed in (None, "null", "none") else str(parsed)
    if isinstance(parsed, str) and not isinstance(default, (bool, str)):
        # PyYAML leaves exponent forms such as 1e-3 as strings
        try:
            parsed = float(parsed)
        except ValueError:
            pass
    if isinstance(default, bool):
        if isinstance(parsed, bool):
            return parsed
        if isinstance(parsed, str) and parsed.lower() in ("true", "1", "yes", "on", "false", "0", "no", "off"):
            return parsed.lower() in ("true", "1", "yes", "on")
        raise ValidationError(f"'{key}' expects a boolean", {key: f"not a boolean: {value!r}"})
    if isinstance(default, int):
        if (isinstance(parsed, bool) or not isinstance(parsed, (int, float))
                or not math.isfinite(parsed) or int(parsed) != parsed):
            raise ValidationError(f"'{key}' expects an integer", {key: f"not an integer: {value!r}"})
        return int(parsed)
    if isinstance(default, float):
        if isinstance(parsed, bool) or not isinstance(parsed, (int, float)):
            raise ValidationError(f"'{key}' expects a number", {key: f"not a number: {value!r}"})
        return float(parsed)
    return str(parsed)


class SettingsManager:
    """Manages experiment settings and configuration."""

    ENV_MAPPINGS = {
        "VCHE2D_THREADS": "threads",
        "VCHE2D_LOG_LEVEL": "logging.level",
        "VCHE2D_SEED": "seed",
    }

    def __init__(self, config_dir: str = "config"):
        """Initialize settings manager.

        Args:
            config_dir: Directory holding default.yaml
        """
        self.config_dir = Path(config_dir)
        self.loader = ConfigLoader(search_paths=[str(self.config_dir)])
        self.logger = get_logger(f"{__name__}.SettingsManager")
        self._settings: Optional[ExperimentSettings] = None
        self._config_files_loaded: List[str] = []

    def load_settings(self, config_file: Optional[str] = None,
                      overrides: Optional[Mapping[str, Any]] = None) -> ExperimentSettings:
        """Load settings: defaults, config/default.yaml, config_file, env, overrides.

        Raises:
            ValidationError: Unknown keys or invalid values, with per-field details
            SettingsError: If a configuration file cannot be read
        """
        settings = ExperimentSettings()
        self._config_files_loaded = []
        try:
            for config_path in self._get_config_files(config_file):
                if config_path.exists():
                    self.logger.info("Loading configuration", path=str(config_path))
                    settings = self._merge_settings(settings, self.loader.load_config_file(config_path))
                    self._config_files_loaded.append(str(config_path))
                elif config_file and config_path == Path(config_file):
                    raise SettingsError(f"Configuration file not found: {config_path}")
        except ConfigLoaderError as e:
            self.logger.error("Failed to load configuration", error=str(e))
            raise SettingsError(f"Failed to load settings: {e}") from e

        settings = self._apply_env_overrides(settings)
        if overrides:
            settings = self._merge_settings(settings, dict(overrides))
        self._validate_settings(settings)

        self._settings = settings
        self.logger.debug("Settings loaded", files=self._config_files_loaded)
        return settings

    def get_settings(self) -> ExperimentSettings:
        if self._settings is None:
            raise SettingsError("Settings not loaded. Call load_settings() first.")
        return self._settings

    def save_settings(self, settings: ExperimentSettings, file_path: Union[str, Path],
                      format: ConfigFormat = ConfigFormat.YAML) -> None:
        """Save settings to a configuration file."""
        config_path = Path(file_path)
        try:
            if format == ConfigFormat.FLAT:
                self.loader.save_config_file(settings.flat(), config_path, "flat")
            else:
                self.loader.save_config_file(settings.to_dict(), config_path, format.value)
            self.logger.info("Settings saved", path=str(config_path))
        except ConfigLoaderError as e:
            raise SettingsError(f"Failed to save settings to {file_path}: {e}") from e

    def _get_config_files(self, config_file: Optional[str]) -> List[Path]:
        files = [self.config_dir / "default.yaml"]
        if config_file:
            files.append(Path(config_file))
        return files

    def _merge_settings(self, settings: ExperimentSettings,
                        override: Mapping[str, Any]) -> ExperimentSettings:
        """Apply a nested or flat mapping, collecting every bad key."""
        errors: Dict[str, str] = {}
        for key, value in self._flatten(override).items():
            try:
                self._set_nested_setting(settings, resolve_key(key), value, key)
            except ValidationError as e:
                errors.update(e.details or {key: e.message})
        if errors:
            raise ValidationError("Settings validation failed: " + "; ".join(
                f"{k}: {v}" for k, v in errors.items()), errors)
        return settings

    @staticmethod
    def _flatten(mapping: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        for key, value in mapping.items():
            dotted = f"{prefix}{key}"
            if isinstance(value, Mapping):
                out.update(SettingsManager._flatten(value, dotted + "."))
            else:
                out[dotted] = value
        return out

    def _apply_env_overrides(self, settings: ExperimentSettings) -> ExperimentSettings:
        for env_var, setting_path in self.ENV_MAPPINGS.items():
            env_value = os.getenv(env_var)
            if env_value is None:
                continue
            try:
                self._set_nested_setting(settings, SETTING_PATHS[setting_path], env_value, env_var)
                self.logger.debug("Applied environment override", variable=env_var,
                                  setting=setting_path)
            except ValidationError as e:
                self.logger.warning("Invalid environment variable", variable=env_var,
                                    value=env_value, error=e.message)
        return settings

    def _set_nested_setting(self, settings: ExperimentSettings, path: Tuple[str, ...],
                            value: Any, key: str) -> None:
        obj: Any = settings
        for part in path[:-1]:
            obj = getattr(obj, part)
        default = getattr(type(obj)(), path[-1])
        setattr(obj, path[-1], _convert(value, default, key))

    def _validate_settings(self, settings: ExperimentSettings) -> None:
        """Check value ranges; raises ValidationError listing every bad field."""
        errors: Dict[str, str] = {}

        def require(condition: bool, key: str, message: str) -> None:
            if not condition:
                errors[key] = message

        for section in ("grid", "physical", "invariants", "lyapunov"):
            n = getattr(settings, section).n_points
            require(n >= 16 and n & (n - 1) == 0, f"{section}.n_points",
                    "must be a power of two >= 16")
            require(getattr(settings, section).half_width > 0, f"{section}.half_width",
                    "must be positive")
        picard_n = settings.invariants.picard_n_points
        require(picard_n >= 16 and picard_n & (picard_n - 1) == 0,
                "invariants.picard_n_points", "must be a power of two >= 16")
        require(settings.physics.alpha >= 0, "physics.alpha", "must be nonnegative")
        for section in ("stepping", "physical", "lyapunov"):
            require(getattr(settings, section).dt > 0, f"{section}.dt", "must be positive")
        require(settings.stepping.t_end >= 0, "stepping.t_end", "must be nonnegative")
        require(settings.physical.t_end >= 0, "physical.t_end", "must be nonnegative")
        require(settings.stepping.output_every >= 1, "stepping.output_every", "must be >= 1")
        require(settings.physical.output_every >= 1, "physical.output_every", "must be >= 1")
        require(settings.data.initial_norm > 0, "data.initial_norm", "must be positive")
        require(settings.data.mass > 0, "data.mass", "must be positive")
        require(settings.data.width1 > 0 and settings.data.width2 > 0, "data.width",
                "widths must be positive")
        require(settings.fit.scaled_start < settings.fit.scaled_end, "fit.scaled_start",
                "must be below fit.scaled_end")
        require(settings.fit.physical_start < settings.fit.physical_end, "fit.physical_start",
                "must be below fit.physical_end")
        require(0 < settings.lyapunov.mu < 0.5, "lyapunov.mu", "must lie in (0, 0.5)")
        require(0.5 < settings.lyapunov.mu_second < 1.0, "lyapunov.mu_second",
                "must lie in (0.5, 1)")
        require(settings.lyapunov.r0 > 0, "lyapunov.r0", "must be positive")
        require(settings.lyapunov.equivalence_tolerance > 0, "lyapunov.equivalence_tolerance",
                "must be positive")
        require(settings.lyapunov.steps >= 2, "lyapunov.steps", "must be >= 2")
        require(settings.lyapunov.lipschitz_samples >= MIN_LIPSCHITZ_SAMPLES,
                "lyapunov.lipschitz_samples", f"must be >= {MIN_LIPSCHITZ_SAMPLES}")
        require(settings.invariants.random_fields >= 1, "invariants.random_fields", "must be >= 1")
        require(settings.threads >= 0, "threads", "must be nonnegative")
        try:
            LogLevel.parse(settings.logging.level)
        except ValueError:
            errors["logging.level"] = f"unknown level '{settings.logging.level}'"

        if errors:
            raise ValidationError("Settings validation failed: " + "; ".join(
                f"{k}: {v}" for k, v in errors.items()), errors)

    def get_loaded_config_files(self) -> List[str]:
        return self._config_files_loaded.copy()


def parse_override(text: str) -> Tuple[str, str]:
    """Split a ``key=value`` command-line override."""
    key, sep, value = text.lstrip("-").partition("=")
    if not sep or not key.strip():
        raise ValidationError(f"Override '{text}' is not of the form key=value",
                              {text: "expected key=value"})
    return key.strip(), value.strip()


def settings_summary(settings: ExperimentSettings) -> str:
    """JSON rendering used by ``vche2d list --settings``."""
    return json.dumps(settings.to_dict(), indent=2, sort_keys=True)
