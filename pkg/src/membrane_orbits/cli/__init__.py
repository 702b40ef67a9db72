"""Scenario files, the command-line runner and figure reproductions."""
from .config import Config, ConfigError, load_config, parse_config, scenario_from

__all__ = ["Config", "ConfigError", "load_config", "parse_config", "scenario_from"]
