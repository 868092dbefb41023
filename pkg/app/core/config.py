import json
from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.core.exceptions import ConfigurationError
from app.models.schemas import RswrConfig


class Settings(BaseSettings):
    PROJECT_NAME: str = "RSWR Solver"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = "logs/rswr.log"

    # Runtime
    RSWR_THREADS: Optional[int] = None  # informational, never changes results

    # Output
    DEFAULT_OUTPUT_DIR: str = "results"
    CSV_SIGNIFICANT_DIGITS: int = 17

    model_config = SettingsConfigDict(case_sensitive=True, env_file=".env", extra="ignore")


@lru_cache()
def get_settings() -> Settings:
    return Settings()


settings = get_settings()


def load_config(path: Union[str, Path]) -> RswrConfig:
    """
    Load and validate a run configuration from a JSON file.

    Args:
        path: Location of the JSON document

    Returns:
        RswrConfig with derived quantities (dx, dt, total_steps) available

    Raises:
        ConfigurationError naming the offending field
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}", field="path", kind="missing")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"invalid JSON: {e}", field="path", kind="parse") from e
    return validate_config(raw)


def validate_config(raw: dict) -> RswrConfig:
    """Validate a decoded config document, mapping the first schema error to ConfigurationError."""
    try:
        return RswrConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or None
        kind = first["type"]
        if kind == "extra_forbidden":
            kind = "unknown_key"
        raise ConfigurationError(first["msg"], field=field, kind=kind) from e
