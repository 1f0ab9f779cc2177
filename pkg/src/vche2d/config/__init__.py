"""Configuration management."""

from .config_loader import ConfigLoader, ConfigLoaderError
from .settings import ExperimentSettings, SettingsError, SettingsManager

__all__ = ["ConfigLoader", "ConfigLoaderError", "ExperimentSettings", "SettingsError",
           "SettingsManager"]
