import logging
import sys

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    APP_NAME: str = "amcm"
    DEBUG: bool = False
    LOG_LEVEL: str = "WARNING"

    # Tope de pasos de la máquina. El lenguaje no tiene bucles, así que
    # un programa compilado nunca debería alcanzarlo.
    MAX_STEPS: int = 1_000_000

    # Valor por defecto de --strict cuando no se pasa el flag
    STRICT_DEFAULT: bool = False

    model_config = SettingsConfigDict(env_file=".env", env_prefix="AMCM_", extra="ignore")

    @field_validator("MAX_STEPS")
    @classmethod
    def _positive_steps(cls, value: int) -> int:
        if value < 1:
            raise ValueError("MAX_STEPS must be at least 1")
        return value


settings = Settings()

# Único handler del paquete; configure_logging lo instala una sola vez
_handler = logging.StreamHandler(sys.stderr)
_handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))


def configure_logging(level: str | None = None) -> None:
    """Installs a stderr handler on the package logger. stdout is left alone."""
    name = "DEBUG" if settings.DEBUG else (level or settings.LOG_LEVEL)
    root = logging.getLogger("src")
    if _handler not in root.handlers:
        root.addHandler(_handler)
    root.setLevel(getattr(logging, name.upper(), logging.WARNING))
