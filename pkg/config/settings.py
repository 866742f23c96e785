"""
Settings for the Cantor-set analysis toolkit.
Defaults can be overridden from a .env file or the environment.
"""

from functools import lru_cache
from pathlib import Path

from pydantic_settings import BaseSettings

BASE_DIR = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    """
    Toolkit settings loaded from .env file.
    Every field has a working default, so the .env file is optional.
    """

    # Numerics
    PRECISION_DIGITS: int = 30
    DIGIT_SCAN_LIMIT: int = 1_000_001  # long-division steps before truncating

    # Resource guards
    LEVEL_CAP: int = 20
    MAX_INTERVALS: int = 2**20

    # Measure covers
    MEASURE_WORKERS: int = 1

    # Output / logging
    OUTPUT_FORMAT: str = "csv"
    LOG_LEVEL: str = "WARNING"
    LOG_TO_FILE: bool = False
    LOG_DIR: str = str(BASE_DIR / "logs")

    model_config = {
        "env_file": str(BASE_DIR / ".env"),
        "env_file_encoding": "utf-8",
        "extra": "ignore",
    }


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return the process-wide Settings instance."""
    return Settings()
