"""Runtime knobs shared across modules."""

import os

from pydantic import BaseModel, ConfigDict, field_validator
from pydantic import Field as PydanticField

_ENV_PREFIX = "ARCULA_"


class ArculaConfig(BaseModel):
    """Tunable settings. Every function that needs one takes ``config=None`` and
    falls back to :data:`DEFAULT_CONFIG`."""

    model_config = ConfigDict(frozen=True)

    pbkdf2_iterations: int = PydanticField(default=600_000, ge=1)
    keygen_max_attempts: int = PydanticField(default=1000, ge=1)
    log_level: str = "INFO"

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, value: str) -> str:
        level = value.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level {value!r}")
        return level

    @classmethod
    def from_env(cls, environ: dict[str, str] | None = None) -> "ArculaConfig":
        """Build a config from ``ARCULA_*`` environment variables."""
        env = os.environ if environ is None else environ
        values: dict[str, str] = {}
        for name in cls.model_fields:
            raw = env.get(f"{_ENV_PREFIX}{name.upper()}")
            if raw is not None:
                values[name] = raw
        return cls.model_validate(values)


DEFAULT_CONFIG = ArculaConfig()


def resolve(config: ArculaConfig | None) -> ArculaConfig:
    return DEFAULT_CONFIG if config is None else config
