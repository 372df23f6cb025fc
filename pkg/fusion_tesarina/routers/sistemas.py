"""
Router para consultar Sistemas.
Endpoints para listar los sistemas de ejemplo y verificar la propiedad T_k.
"""

import logging
from typing import List, Optional

from fastapi import APIRouter, HTTPException, Query, status

from fusion_tesarina.errores import FusionError
from fusion_tesarina.experiments import PRESETS, casos_de_preset, obtener_preset
from fusion_tesarina.model import validate_properness
from fusion_tesarina.schemas import PresetResumen, ReporteRead, SistemaRead, ValidarRequest

logger = logging.getLogger(__name__)

router = APIRouter()


def _preset_o_404(nombre: str, k: Optional[int] = None):
    if nombre not in PRESETS:
        raise HTTPException(
            status_code=status.HTTP_404_NOT_FOUND,
            detail=f"Preset '{nombre}' no encontrado",
        )
    return obtener_preset(nombre, k=k)


# ENDPOINTS: PRESETS


@router.get("/presets", response_model=List[PresetResumen], summary="Listar sistemas de ejemplo")
def listar_presets():
    """
    Lista los sistemas de ejemplo y los casos de probabilidad que admite cada uno.
    """
    resumenes = []
    for nombre in PRESETS:
        spec = obtener_preset(nombre)
        casos = {k: casos_de_preset(nombre, k) for k in (1, 2)}
        resumenes.append(
            PresetResumen(
                nombre=nombre,
                n=spec.n,
                R=spec.R,
                casos={k: ids for k, ids in casos.items() if ids},
            )
        )
    return resumenes


@router.get("/presets/{nombre}", response_model=SistemaRead, summary="Obtener un sistema de ejemplo")
def obtener_sistema(
    nombre: str,
    k: int = Query(1, ge=1, le=2, description="Escenario de propiedad"),
):
    """
    Retorna el sistema de ejemplo en coordenadas reales.

    - **nombre**: example1-t1, example1-t2 o example2
    - **k**: Escenario de propiedad (solo afecta a example2)
    """
    spec = _preset_o_404(nombre, k)
    return SistemaRead.from_spec(spec)


# ENDPOINTS: VALIDACIÓN


@router.post("/sistemas/validar", response_model=ReporteRead, summary="Verificar propiedad T_k")
def validar_sistema(peticion: ValidarRequest):
    """
    Verifica las condiciones de T_k-propiedad de un sistema de ejemplo o explícito.

    - **preset**: Nombre del sistema de ejemplo
    - **sistema**: Sistema completo en coordenadas reales
    - **k**: Orden de propiedad (1 o 2)
    """
    try:
        if peticion.preset is not None:
            spec = _preset_o_404(peticion.preset, peticion.k)
        else:
            spec = peticion.sistema.to_spec()
        reporte = validate_properness(spec, peticion.k)
    except FusionError as exc:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_CONTENT, detail=str(exc))

    logger.info("Validación T%d de '%s': %s", peticion.k, spec.name,
                "aprobado" if reporte.passed else ", ".join(reporte.reasons))
    return ReporteRead.from_report(reporte)
