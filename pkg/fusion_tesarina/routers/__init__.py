"""
Inicialización de routers.
Exporta todos los routers de la aplicación.
"""

from fusion_tesarina.routers import experimentos, sistemas

__all__ = ["sistemas", "experimentos"]
