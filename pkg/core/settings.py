"""
Runtime configuration for rdelab.

Values come from environment variables prefixed with ``RDE_LAB_`` (or a
local ``.env`` file). Model inputs such as A, m and the initial block are
not settings; they arrive through run configs or CLI flags.
"""

import logging
import os
from functools import lru_cache
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Process-wide knobs for execution and logging."""

    model_config = SettingsConfigDict(
        env_prefix="RDE_LAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    threads: int = Field(default=0, ge=0, description="Sweep workers; 0 = auto")
    executor: Literal["process", "thread"] = Field(
        default="process", description="Pool flavour used by sweeps"
    )
    cap: float = Field(default=1e100, gt=0, description="Overflow guard")
    classify_horizon: int = Field(default=10_000, ge=1)
    divergence_horizon: int = Field(default=1_000_000, ge=1)
    log_level: str = Field(default="WARNING")

    def resolved_threads(self) -> int:
        """Worker count with the 0 = auto convention applied."""
        if self.threads > 0:
            return self.threads
        return os.cpu_count() or 1


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return the cached settings instance."""
    settings = Settings()
    logger.debug(f"Loaded settings: {settings.model_dump()}")
    return settings


def reset_settings() -> None:
    """Drop the cached settings so the environment is read again."""
    get_settings.cache_clear()
