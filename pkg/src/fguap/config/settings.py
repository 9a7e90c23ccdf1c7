"""Environment settings for the FG-UAP toolkit."""

from pathlib import Path
from typing import Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

VALID_LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL")


class Settings(BaseSettings):
    """Application settings loaded from ``FGUAP_*`` environment variables or ``.env``."""

    model_config = SettingsConfigDict(
        env_prefix="FGUAP_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Output
    output_dir: Path = Field(
        default=Path("./runs"),
        description="Default directory for experiment outputs",
    )

    # Logging
    log_level: str = Field(
        default="INFO",
        description="Logging level",
    )
    log_file: Optional[Path] = Field(
        default=None,
        description="Optional log file (in addition to stderr)",
    )

    # Attack behaviour
    debug_invariants: bool = Field(
        default=False,
        description="Check the L-inf budget after every attack step",
    )

    # Reproducibility
    default_seed: int = Field(
        default=0,
        ge=0,
        description="Seed used when a command is given none",
    )

    @field_validator("log_level", mode="before")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        level = str(v).strip().upper()
        if level not in VALID_LOG_LEVELS:
            raise ValueError(f"log_level must be one of: {', '.join(VALID_LOG_LEVELS)}")
        return level


def get_settings() -> Settings:
    """Get application settings instance.

    Returns:
        Settings instance loaded from environment
    """
    return Settings()
