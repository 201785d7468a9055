"""Application settings and configuration."""

from functools import lru_cache
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables (prefix ``QKDLAB_``)."""

    # Application
    app_name: str = Field(default="QKD Lab")
    app_version: str = Field(default="0.1.0")
    debug: bool = Field(default=False)
    log_level: str = Field(default="INFO")

    # Execution
    threads: Optional[int] = Field(default=None, description="Worker cap; unset means CPU count")

    # Numerics
    lambda_min: float = Field(default=1e-12, description="Clamp for the phase-error argument of gamma_upper")
    binomial_exact_max_n: int = Field(default=1_000_000)
    scan_points: int = Field(default=60, description="Optimizer grid points per axis")
    rel_tol: float = Field(default=1e-4)
    placement_grid: int = Field(default=101)
    placement_tol: float = Field(default=1e-4)

    # Time tags
    jitter_ps: float = Field(default=350.0)
    hist_bin_ps: int = Field(default=100)
    generator_chunk: int = Field(default=1 << 22, description="Pulses drawn per generator chunk")

    # Presets
    presets_path: Optional[str] = Field(default=None)

    model_config = SettingsConfigDict(
        env_prefix="QKDLAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("threads")
    @classmethod
    def _positive_threads(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError("threads must be at least 1")
        return v

    @field_validator("scan_points")
    @classmethod
    def _enough_scan_points(cls, v: int) -> int:
        if v < 50:
            raise ValueError("scan_points must be at least 50")
        return v


@lru_cache()
def get_settings() -> Settings:
    """Get cached application settings."""
    return Settings()
