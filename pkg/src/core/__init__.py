"""
Application Configuration

Centralized configuration management using Pydantic Settings.
Every field can be overridden through an ``MCOPT_``-prefixed environment
variable or a ``.env`` file.
"""

import json
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings and configuration."""

    model_config = SettingsConfigDict(
        env_prefix="MCOPT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = "Multiconic PTS Solver"
    app_version: str = "0.1.0"
    environment: str = "development"

    # Logging
    log_level: str = "INFO"
    log_json: bool = False

    # Defaults file shipped with the repository
    config_file: str = "config/solver_config.json"

    # Solver defaults (beta2 is derived from beta1 when left unset)
    beta1: float = 0.25
    beta2: Optional[float] = None
    eps: float = 1e-6
    max_corrector_steps: int = 200
    max_outer_iters: int = 5000
    ls_tol: float = 1e-3
    bisection_tol: float = 1e-10

    # Numerical tolerances
    pd_tol: float = 1e-13

    # Verification harness
    seed: int = 20240101
    verify_samples: int = 1000


@lru_cache()
def get_settings() -> Settings:
    """
    Get application settings.

    Returns:
        Settings: Application configuration
    """
    return Settings()


def load_config_file(path: Optional[str] = None) -> Dict[str, Any]:
    """
    Read a JSON defaults file.

    Args:
        path: File to read; the configured ``config_file`` when omitted.

    Returns:
        Parsed mapping, empty when the file does not exist.
    """
    target = Path(path or get_settings().config_file)
    if not target.exists():
        return {}
    with open(target, "r", encoding="utf-8") as f:
        return json.load(f)


# Global settings instance
settings = get_settings()
