"""
vche2d Configuration Loader

Reads and writes configuration files: YAML, JSON and flat ``key = value``
text files.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from ..utils.exceptions import ConfigurationError
from ..utils.logger import get_logger

YAML_SUFFIXES = (".yaml", ".yml")
FLAT_SUFFIXES = (".conf", ".cfg", ".txt")


class ConfigLoaderError(ConfigurationError):
    """Configuration loader related errors."""
    pass


class ConfigLoader:
    """Loads configuration from various sources and formats."""

    def __init__(self, search_paths: Optional[List[str]] = None):
        """Initialize configuration loader.

        Args:
            search_paths: List of directories to search for config files
        """
        self.search_paths = search_paths or ["config", "."]
        self.logger = get_logger(f"{__name__}.ConfigLoader")

    def load_config(self, config_name: str, required: bool = False) -> Dict[str, Any]:
        """Load a named configuration from the search paths.

        Raises:
            ConfigLoaderError: If a required file is missing or any file is invalid
        """
        config_file = self.find_config_file(config_name)
        if not config_file:
            if required:
                raise ConfigLoaderError(
                    f"Required configuration file '{config_name}' not found in search paths: "
                    f"{self.search_paths}")
            self.logger.debug("Optional configuration file not found", name=config_name)
            return {}
        return self.load_config_file(config_file)

    def find_config_file(self, config_name: str) -> Optional[Path]:
        """First existing ``<dir>/<config_name><ext>`` over the search paths."""
        extensions = list(YAML_SUFFIXES) + [".json"] + list(FLAT_SUFFIXES)
        for search_path in self.search_paths:
            search_dir = Path(search_path)
            if not search_dir.exists():
                continue
            for ext in extensions:
                config_file = search_dir / f"{config_name}{ext}"
                if config_file.is_file():
                    self.logger.debug("Found configuration file", path=str(config_file))
                    return config_file
        return None

    def parse_flat(self, text: str, source: str = "<string>") -> Dict[str, Any]:
        """Parse ``key = value`` lines; ``#`` starts a comment, values are YAML scalars."""
        config: Dict[str, Any] = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ConfigLoaderError(f"Line {number} of {source} is not 'key = value': {raw!r}")
            try:
                config[key.strip()] = yaml.safe_load(value.strip()) if value.strip() else None
            except yaml.YAMLError as e:
                raise ConfigLoaderError(f"Invalid value on line {number} of {source}: {e}")
        return config

    def load_config_file(self, config_path: Union[str, Path]) -> Dict[str, Any]:
        """Load configuration from a specific file.

        Raises:
            ConfigLoaderError: If the file cannot be read or parsed
        """
        config_path = Path(config_path)
        if not config_path.exists():
            raise ConfigLoaderError(f"Configuration file not found: {config_path}")

        suffix = config_path.suffix.lower()
        try:
            text = config_path.read_text(encoding="utf-8")
            if suffix in YAML_SUFFIXES:
                config = yaml.safe_load(text)
            elif suffix == ".json":
                config = json.loads(text)
            elif suffix in FLAT_SUFFIXES:
                config = self.parse_flat(text, str(config_path))
            else:
                raise ConfigLoaderError(f"Unsupported configuration file format: {suffix}")
        except yaml.YAMLError as e:
            raise ConfigLoaderError(f"Invalid YAML in {config_path}: {e}")
        except json.JSONDecodeError as e:
            raise ConfigLoaderError(f"Invalid JSON in {config_path}: {e}")
        except OSError as e:
            raise ConfigLoaderError(f"Failed to load configuration from {config_path}: {e}")

        if config is None:
            config = {}
        if not isinstance(config, dict):
            raise ConfigLoaderError(f"Configuration in {config_path} is not a mapping")
        self.logger.debug("Loaded configuration", path=str(config_path), keys=len(config))
        return config

    def save_config_file(self, config: Dict[str, Any], config_path: Union[str, Path],
                         format: str = "yaml") -> None:
        """Save configuration as 'yaml', 'json' or 'flat'."""
        config_path = Path(config_path)
        try:
            config_path.parent.mkdir(parents=True, exist_ok=True)
            fmt = format.lower()
            if fmt in ("yaml", "yml"):
                text = yaml.safe_dump(config, default_flow_style=False, indent=2, sort_keys=False)
            elif fmt == "json":
                text = json.dumps(config, indent=2, sort_keys=False)
            elif fmt == "flat":
                lines = []
                for key, value in config.items():
                    rendered = yaml.safe_dump(value, default_flow_style=True).strip()
                    if rendered.endswith("\n..."):
                        rendered = rendered[:-4].strip()
                    lines.append(f"{key} = {rendered}")
                text = "\n".join(lines) + "\n"
            else:
                raise ConfigLoaderError(f"Unsupported format: {format}")
            config_path.write_text(text, encoding="utf-8")
        except OSError as e:
            raise ConfigLoaderError(f"Failed to save configuration to {config_path}: {e}")
        self.logger.info("Saved configuration", path=str(config_path))

    def merge_configs(self, *configs: Dict[str, Any]) -> Dict[str, Any]:
        """Deep-merge configuration dictionaries, later ones winning."""
        merged: Dict[str, Any] = {}
        for config in configs:
            if config:
                merged = self._deep_merge(merged, config)
        return merged

    def _deep_merge(self, base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
        result = base.copy()
        for key, value in override.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self._deep_merge(result[key], value)
            else:
                result[key] = value
        return result
