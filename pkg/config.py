#!/usr/bin/env python3
"""
Configuration management for the kriging validation toolkit.
Handles loading configuration from base config, user config, environment variables, and defaults.

Configuration Priority (highest to lowest):
1. Command line arguments
2. Environment variables (KRIGING_*)
3. User configuration file (config.user.yaml) - git ignored
4. Base configuration file (config.base.yaml) - git tracked defaults
5. Hardcoded defaults
"""

import copy
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import yaml

from errors import ConfigurationError

logger = logging.getLogger(__name__)

SCALES = ("paper", "smoke")
SUITES = ("gp", "covsel", "function", "resample", "prior-sens", "estimation", "phi-posterior", "map")


class Config:
    """Configuration manager for kriging fits, validation and benchmarks."""

    def __init__(self, config_file: Optional[str] = None, ignore_user_config: bool = False, test_mode: bool = False):
        """
        Initialize configuration.

        Args:
            config_file: Optional path to config file. If None, uses default locations.
            ignore_user_config: If True, skips loading user configuration (useful for tests)
            test_mode: If True, only loads the specified config file and defaults (for isolated testing)
        """
        self.config_data = {}
        self.ignore_user_config = ignore_user_config
        self.test_mode = test_mode
        self.loaded_files = []
        self.load_config(config_file)

    def load_config(self, config_file: Optional[str] = None):
        """
        Load configuration from base config, user config, environment variables, and defaults.
        Priority: Environment vars > User config > Base config > Hardcoded defaults
        """
        self.config_data = self._get_defaults()
        self.loaded_files = []

        # In test mode, only load the specified config file
        if self.test_mode:
            if config_file and Path(config_file).exists():
                self._load_file(Path(config_file), "test")
            return

        base_config_path = self._find_base_config()
        if base_config_path and base_config_path.exists():
            self._load_file(base_config_path, "base")

        if not self.ignore_user_config:
            user_config_path = self._find_user_config(config_file)
            if user_config_path and user_config_path.exists():
                self._load_file(user_config_path, "user")
            elif config_file:
                raise ConfigurationError(f"config file not found: {config_file}")

        self._load_env_vars()

    def _load_file(self, path: Path, layer: str):
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigurationError(f"could not load {layer} config file {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigurationError(f"{layer} config file {path} must contain a mapping")
        self._merge_config(self.config_data, data)
        self.loaded_files.append(str(path))
        logger.info("Loaded %s configuration from: %s", layer, path)

    def _find_base_config(self) -> Optional[Path]:
        """Find base configuration file, next to the working directory or this module."""
        possible_locations = [
            Path("config.base.yaml"),
            Path("config.base.yml"),
            Path(__file__).resolve().parent / "config.base.yaml",
        ]

        for location in possible_locations:
            if location.exists():
                return location

        return None

    def _find_user_config(self, config_file: Optional[str] = None) -> Optional[Path]:
        """Find user configuration file."""
        if config_file:
            return Path(config_file)

        possible_locations = [
            Path("config.user.yaml"),
            Path("config.user.yml"),
            Path.home() / ".config" / "kriging-validation" / "config.yaml",
        ]

        for location in possible_locations:
            if location.exists():
                return location

        return None

    def _get_defaults(self) -> Dict[str, Any]:
        """Get default configuration values."""
        simulated = {"rect": [0.0, 10.0, 0.0, 10.0], "beta": 0.5, "sigma2": 0.1, "phi": 4.5, "covariances": ["matern:1/2"]}
        return {
            "model": {
                "family": "matern",
                "nu": 0.5,
                "nugget_ratio": 0.0,
                "gaussian_nugget_ratio": 1e-6,
            },
            "mle": {
                "bracket_low_factor": 0.5,
                "bracket_high_factor": 2.0,
                "xtol_factor": 1e-6,
            },
            "bayes": {
                "M": 1000,
                "phi_grid_size": 51,
                "phi_grid_low_fraction": 0.01,
            },
            "validation": {
                "loo_mode": "fixed",
                "alpha_levels": 99,
                "quantiles": [0.025, 0.31, 0.5, 0.69, 0.975],
            },
            "scales": {
                "paper": {"replicates": 100, "M": 1000},
                "smoke": {"replicates": 10, "M": 200, "parent_grid": 41},
            },
            "experiments": {
                "gp": {**simulated, "sizes": [16, 25, 36, 49, 64, 81], "loo_mode": "refit"},
                "covsel": {
                    "rect": [-1.0, 1.0, -1.0, 1.0],
                    "grid": 12,
                    "replicates": 1,
                    "covariances": ["matern:1/2", "matern:3/2", "matern:5/2", "gaussian"],
                    "loo_mode": "fixed",
                },
                "function": {
                    "rect": [-1.0, 1.0, -1.0, 1.0],
                    "sizes": [20, 30, 40, 50, 60, 80, 100, 150],
                    "covariances": ["gaussian"],
                    "loo_mode": "refit",
                },
                "resample": {"sizes": [20, 30, 40, 50, 60, 70], "covariances": ["matern:1/2"], "loo_mode": "refit"},
                "prior-sens": {
                    **simulated,
                    "sizes": [20, 50],
                    "methods": ["bayesian"],
                    "parent_grid": 129,
                    "init_fit_max": 2000,
                    "cases": [1, 2, 3, 4, 5],
                    "loo_mode": "refit",
                },
                "estimation": {**simulated, "sizes": [16, 25, 36, 49, 64, 81]},
                "phi-posterior": {**simulated, "sizes": [25, 50, 100], "density_grid": 512},
                "map": {"map_size": 20, "map_grid": 50, "covariances": ["matern:1/2"]},
            },
            "runtime": {
                "jobs": 1,
                "seed": 0,
                "output_dir": "outputs",
                "log_level": "WARNING",
            },
        }

    def _merge_config(self, base: Dict, override: Dict):
        """Recursively merge configuration dictionaries."""
        for key, value in override.items():
            if key in base and isinstance(base[key], dict) and isinstance(value, dict):
                self._merge_config(base[key], value)
            else:
                base[key] = value

    def _load_env_vars(self):
        """Load configuration from environment variables."""
        if env_jobs := os.getenv("KRIGING_JOBS"):
            self.config_data["runtime"]["jobs"] = self._env_int("KRIGING_JOBS", env_jobs)

        if env_seed := os.getenv("KRIGING_SEED"):
            self.config_data["runtime"]["seed"] = self._env_int("KRIGING_SEED", env_seed)

        if env_output_dir := os.getenv("KRIGING_OUTPUT_DIR"):
            self.config_data["runtime"]["output_dir"] = env_output_dir

        if env_log_level := os.getenv("KRIGING_LOG_LEVEL"):
            self.config_data["runtime"]["log_level"] = env_log_level.upper()

    @staticmethod
    def _env_int(name: str, value: str) -> int:
        try:
            return int(value)
        except ValueError as e:
            raise ConfigurationError(f"{name} must be an integer, got '{value}'") from e

    def get(self, key_path: str, default=None):
        """
        Get configuration value by dot-separated key path.

        Args:
            key_path: Dot-separated path like "bayes.M"
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        keys = key_path.split(".")
        value = self.config_data

        for key in keys:
            if isinstance(value, dict) and key in value:
                value = value[key]
            else:
                return default

        return value

    def get_scale(self, name: str) -> Dict[str, Any]:
        """Replicate count, M and other overrides of a scale profile."""
        scales = self.get("scales", {})
        if name not in scales:
            raise ConfigurationError(f"unknown scale '{name}' (expected one of {', '.join(scales)})")
        return copy.deepcopy(scales[name])

    def get_experiment(self, suite: str) -> Dict[str, Any]:
        """Suite settings as configured, without scale or runtime overrides."""
        experiments = self.get("experiments", {})
        if suite not in experiments:
            raise ConfigurationError(f"unknown suite '{suite}' (expected one of {', '.join(experiments)})")
        return copy.deepcopy(experiments[suite])

    def experiment_settings(self, suite: str, scale: str) -> Dict[str, Any]:
        """
        Flat settings for one suite: library defaults, then the suite block,
        then the scale profile. A suite that sets its own replicate count
        keeps it under every scale.
        """
        settings = {
            "seed": self.get_seed(),
            "jobs": self.get_jobs(),
            "M": self.get_M(),
            "phi_grid_size": self.get_phi_grid_size(),
            "phi_low_fraction": self.get("bayes.phi_grid_low_fraction", 0.01),
            "loo_mode": self.get("validation.loo_mode", "fixed"),
            "alpha_count": int(self.get("validation.alpha_levels", 99)),
            "nugget_ratio": self.get("model.nugget_ratio", 0.0),
            "gaussian_nugget_ratio": self.get("model.gaussian_nugget_ratio", 1e-6),
        }
        suite_settings = self.get_experiment(suite)
        scale_settings = self.get_scale(scale)
        if "replicates" in suite_settings:
            scale_settings.pop("replicates", None)
        if suite != "prior-sens":
            scale_settings.pop("parent_grid", None)
        settings.update(suite_settings)
        settings.update(scale_settings)
        return settings

    def get_jobs(self) -> int:
        return int(self.get("runtime.jobs", 1))

    def get_seed(self) -> int:
        return int(self.get("runtime.seed", 0))

    def get_output_dir(self) -> str:
        return self.get("runtime.output_dir", "outputs")

    def get_log_level(self) -> str:
        return str(self.get("runtime.log_level", "WARNING")).upper()

    def get_M(self) -> int:
        return int(self.get("bayes.M", 1000))

    def get_phi_grid_size(self) -> int:
        return int(self.get("bayes.phi_grid_size", 51))

    def get_alpha_levels(self, count: Optional[int] = None) -> np.ndarray:
        """
        Equally spaced levels inside (0, 1); 99 levels give 0.01 .. 0.99.

        `count` overrides validation.alpha_levels.
        """
        count = int(self.get("validation.alpha_levels", 99)) if count is None else int(count)
        if count < 1:
            raise ConfigurationError(f"number of alpha levels must be >= 1, got {count}")
        return np.arange(1, count + 1) / (count + 1.0)

    def get_quantiles(self) -> list:
        return [float(q) for q in self.get("validation.quantiles", [0.025, 0.31, 0.5, 0.69, 0.975])]

    def get_mle_bracket_factors(self) -> tuple:
        return float(self.get("mle.bracket_low_factor", 0.5)), float(self.get("mle.bracket_high_factor", 2.0))


# Global config instance
_config_instance = None


def get_config(config_file: Optional[str] = None) -> Config:
    """Get global configuration instance."""
    global _config_instance
    if _config_instance is None or config_file is not None:
        _config_instance = Config(config_file)
    return _config_instance
