"""
Jerarquía de errores del paquete.
Todas las operaciones de la librería lanzan subclases de FusionError.
"""

from typing import Any, Optional


class FusionError(Exception):
    """Error base de fusion_tesarina."""


class DimensionError(FusionError, ValueError):
    """Dimensiones incompatibles entre matrices, vectores u observaciones."""


class ProbabilityError(FusionError, ValueError):
    """Probabilidad de llegada fuera del intervalo [0, 1]."""


class CovarianceError(FusionError):
    """Matriz de covarianza no simétrica o no semidefinida positiva."""

    def __init__(self, mensaje: str, bloque: Optional[str] = None):
        super().__init__(mensaje)
        self.bloque = bloque


class PropernessError(FusionError):
    """El sistema no satisface las condiciones de propiedad pedidas."""

    def __init__(self, mensaje: str, reporte: Any = None):
        super().__init__(mensaje)
        self.reporte = reporte


class OmegaSingularError(FusionError):
    """Covarianza de innovaciones indefinida o no finita."""

    def __init__(self, mensaje: str, t: int, condicion: float):
        super().__init__(f"{mensaje} (t={t}, condición≈{condicion:.3e})")
        self.t = t
        self.condicion = condicion


class ConfigError(FusionError):
    """Archivo o parámetros de configuración inválidos."""


class OutputError(FusionError):
    """No se pudo escribir un archivo de resultados."""
