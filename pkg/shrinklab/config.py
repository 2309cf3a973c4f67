"""Configuración de la aplicación utilizando python-decouple."""
import logging
from pathlib import Path

from decouple import config

# Directorio de salida por defecto
OUTPUT_DIR = Path(config("SHRINKLAB_OUTPUT_DIR", default="out"))


class Settings:
    """Clase de configuración para el laboratorio."""
    SEED: int = config("SHRINKLAB_SEED", default=42, cast=int)
    THREADS: int = config("SHRINKLAB_THREADS", default=1, cast=int)
    LOG_LEVEL: str = config("SHRINKLAB_LOG_LEVEL", default="WARNING")

    # Tolerancias relativas a la diagonal de la caja envolvente
    SIMPLICITY_TOL: float = config("SHRINKLAB_SIMPLICITY_TOL", default=1e-7, cast=float)
    ON_CURVE_TOL: float = config("SHRINKLAB_ON_CURVE_TOL", default=1e-6, cast=float)

    # Búsqueda del supremo de la entropía
    SEARCH_BUDGET: int = config("SHRINKLAB_SEARCH_BUDGET", default=10_000, cast=int)
    SEARCH_STARTS: int = config("SHRINKLAB_SEARCH_STARTS", default=5, cast=int)

    # Muestras de entropía por traza de flujo
    ENTROPY_SAMPLES: int = config("SHRINKLAB_ENTROPY_SAMPLES", default=50, cast=int)
    # Reintentos para la posición de Milnor
    MILNOR_RETRIES: int = config("SHRINKLAB_MILNOR_RETRIES", default=1000, cast=int)

    class Config:
        """Configuración adicional."""
        case_sensitive = True


settings = Settings()


def configure_logging(level: str | None = None) -> None:
    """Configurar logging una sola vez para el proceso"""
    logging.basicConfig(
        level=(level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
