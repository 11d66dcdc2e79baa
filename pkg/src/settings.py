"""
Runtime settings for RainbowRadar, read from config.yaml.
"""

import logging
import os
from typing import Optional

import yaml
from pydantic import BaseModel, Field, ValidationError

from errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = os.path.join(
    os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "config.yaml"
)


class SimulationSettings(BaseModel):
    workers: Optional[int] = Field(default=None, ge=1)
    memory_budget_bytes: int = Field(default=2 * 1024 ** 3, ge=1)
    scratch_bytes: int = Field(default=64 * 1024 ** 2, ge=1)
    bit_rows_max_n: int = Field(default=2 ** 16, ge=0)

    def resolved_workers(self) -> int:
        return self.workers or os.cpu_count() or 1


class OutputSettings(BaseModel):
    directory: str = "results"
    float_format: str = "%.17g"


class LoggingSettings(BaseModel):
    level: str = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class StorageSettings(BaseModel):
    ledger_enabled: bool = False
    ledger_url: str = "sqlite:///{output_dir}/runs.db"


class Settings(BaseModel):
    simulation: SimulationSettings = SimulationSettings()
    output: OutputSettings = OutputSettings()
    logging: LoggingSettings = LoggingSettings()
    storage: StorageSettings = StorageSettings()


def load_config(config_path: Optional[str] = None) -> Settings:
    """Load settings from YAML, falling back to defaults when the file is missing."""
    config_path = config_path or DEFAULT_CONFIG_PATH
    if not os.path.exists(config_path):
        logger.warning(f"Config file {config_path} not found, using defaults")
        return Settings()

    with open(config_path, "r") as f:
        raw = yaml.safe_load(f) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{config_path}: expected a mapping at the top level")
    try:
        return Settings.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"{config_path}: {e}") from e


# Global settings instance
settings = load_config()


def reload_settings(config_path: Optional[str] = None) -> Settings:
    """Re-read config.yaml into the shared settings object, in place."""
    fresh = load_config(config_path)
    for name in Settings.model_fields:
        setattr(settings, name, getattr(fresh, name))
    return settings
