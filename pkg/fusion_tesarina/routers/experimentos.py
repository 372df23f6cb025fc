"""
Router para ejecutar Experimentos.
Corre un barrido de casos dentro de la petición y devuelve las filas del CSV.
"""

import logging

from fastapi import APIRouter, Depends, HTTPException, status

from fusion_tesarina.config import Settings, get_settings
from fusion_tesarina.errores import FusionError
from fusion_tesarina.experiments import ExperimentConfig, run_case_sweep
from fusion_tesarina.schemas import EjecutarRequest, EjecutarResponse

logger = logging.getLogger(__name__)

router = APIRouter()


# ENDPOINTS: EXPERIMENTOS


@router.post("/ejecutar", response_model=EjecutarResponse, summary="Ejecutar un barrido de casos")
def ejecutar_experimento(
    peticion: EjecutarRequest,
    ajustes: Settings = Depends(get_settings),
):
    """
    Ejecuta el filtro T_k (y opcionalmente Monte Carlo y la comparación
    cuaterniónica) para los casos pedidos.

    - **preset**: Sistema de ejemplo
    - **casos**: Casos de probabilidad
    - **sensores**: Números de sensores a estudiar
    - **horizonte**: Último instante (limitado por la configuración)
    - **mc**: Corridas Monte Carlo (limitado por la configuración)
    """
    if peticion.horizonte > ajustes.max_api_horizon:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_CONTENT,
            detail=f"El horizonte máximo es {ajustes.max_api_horizon}",
        )
    if peticion.mc > ajustes.max_api_mc:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_CONTENT,
            detail=f"El número máximo de corridas Monte Carlo es {ajustes.max_api_mc}",
        )

    try:
        config = ExperimentConfig(
            nombre=f"api-{peticion.preset}",
            preset=peticion.preset,
            k=peticion.k,
            casos=tuple(peticion.casos),
            sensores=tuple(peticion.sensores),
            mc=peticion.mc,
            horizonte=peticion.horizonte,
            semilla=ajustes.seed if peticion.semilla is None else peticion.semilla,
            cuaternion=peticion.cuaternion,
        )
        resultado = run_case_sweep(config)
    except FusionError as exc:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_CONTENT, detail=str(exc))

    frame = resultado.to_frame()
    # NaN no es JSON válido
    filas = frame.astype(object).where(frame.notna(), None).to_dict(orient="records")
    md = {f"{r.caso}-R{r.R}": r.mean_diff for r in resultado.resultados}
    return EjecutarResponse(filas=filas, md=md)
