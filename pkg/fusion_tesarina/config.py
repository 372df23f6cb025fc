"""
Configuración de la aplicación.
Maneja diferentes entornos: desarrollo, pruebas y producción, y las
tolerancias numéricas compartidas por el filtro y los experimentos.
"""

import logging
from functools import lru_cache

from pydantic_settings import BaseSettings


LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


class Settings(BaseSettings):
    """
    Configuración de la aplicación usando Pydantic Settings.
    Lee las variables de entorno desde el archivo .env
    """

    # Configuración básica de la aplicación
    app_name: str = "API de Fusión Tesarina"
    app_version: str = "1.0.0"

    # Configuración del entorno
    environment: str = "development"

    # Configuración del servidor
    host: str = "0.0.0.0"
    port: int = 8000
    debug: bool = True

    # Configuración de CORS
    cors_origins: list[str] = ["*"]

    # Configuración de logging
    log_level: str = "INFO"
    log_file: str = "fusion_tesarina.log"

    # Tolerancias numéricas
    algebra_tol: float = 1e-12
    properness_rtol: float = 1e-9
    pinv_rtol: float = 1e-10
    psd_clip: float = 1e-10

    # Experimentos
    mc_runs: int = 2000
    seed: int = 20240521
    output_dir: str = "resultados"
    timing_repeats: int = 5
    example1_horizon: int = 50
    example2_horizon: int = 100

    # Límites de la API (los experimentos se ejecutan dentro de la petición)
    max_api_horizon: int = 200
    max_api_mc: int = 500

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": False
    }


# Crear una instancia global de Settings
settings = Settings()


# Crear diferentes configuraciones para cada entorno
class DevelopmentSettings(Settings):
    """Configuración para el entorno de desarrollo."""

    debug: bool = True


class TestingSettings(Settings):
    """Configuración para el entorno de pruebas."""

    output_dir: str = "resultados_test"
    mc_runs: int = 200


class ProductionSettings(Settings):
    """Configuración para el entorno de producción."""

    debug: bool = False


# Función para obtener la configuración según el entorno
@lru_cache
def get_settings() -> Settings:
    """
    Retorna la configuración apropiada según el entorno (una sola instancia por proceso).
    """
    env = settings.environment.lower()

    if env == "testing":
        return TestingSettings()
    elif env == "production":
        return ProductionSettings()
    else:
        return DevelopmentSettings()


def configurar_logging(config: Settings | None = None) -> None:
    """
    Configura el logging raíz con salida a consola y a archivo.

    Args:
        config: Configuración a usar (por defecto la del entorno actual)
    """
    config = config or get_settings()
    logging.basicConfig(
        level=getattr(logging, config.log_level.upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(), logging.FileHandler(config.log_file)],
    )
