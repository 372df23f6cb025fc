"""
Esquemas de validación usando Pydantic.
Define los archivos de configuración TOML y los esquemas de request y
response de la API.
"""

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from fusion_tesarina.errores import ConfigError, FusionError
from fusion_tesarina.experiments import PRESETS, ExperimentConfig, casos_de_preset
from fusion_tesarina.model import PropernessReport, SystemSpec, correlated_noise_from_gain

Matriz = list[list[float]]


def _es_cuadrada(m: Matriz, lado: int, nombre: str) -> None:
    a = np.asarray(m, dtype=float)
    if a.shape != (lado, lado):
        raise ValueError(f"{nombre} debe ser {lado}×{lado}, no {a.shape}")


# ESQUEMAS: SISTEMA


class SistemaConfig(BaseModel):
    """Sección [sistema]: modelo en coordenadas reales."""

    nombre: str = Field(default="sistema", description="Nombre del sistema")
    n: int = Field(ge=1, description="Dimensión del estado")
    R: int = Field(ge=1, description="Número de sensores")
    horizonte: int = Field(ge=2, description="Último instante a filtrar")
    F1: list[Matriz] = Field(description="Componentes (r, η, η′, η″) de F1, 4×n×n")
    F2: Optional[list[Matriz]] = Field(None, description="Componentes de F2 (cero si falta)")
    F3: Optional[list[Matriz]] = Field(None, description="Componentes de F3 (cero si falta)")
    F4: Optional[list[Matriz]] = Field(None, description="Componentes de F4 (cero si falta)")
    Q: Matriz = Field(description="Covarianza real de u^r, 4n×4n")
    R_ruido: Optional[list[Matriz]] = Field(None, description="Covarianzas reales de v^(i)r")
    alpha: Optional[list[float]] = Field(None, description="Ganancias α_i de v = α·u + w")
    beta: Optional[list[float]] = Field(None, description="Varianzas β_i de w")
    S: Optional[list[Matriz]] = Field(None, description="Covarianzas cruzadas de u^r y v^(i)r")
    P0: Matriz = Field(description="Covarianza real de x^r(0)")
    probabilidades: Union[float, list] = Field(description="Escalar o arreglo R×4×n")

    @field_validator("probabilidades")
    @classmethod
    def validar_probabilidades(cls, v):
        """Valida que todas las probabilidades estén en [0, 1]."""
        p = np.asarray(v, dtype=float)
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("Las probabilidades deben estar en [0, 1]")
        return v

    @model_validator(mode="after")
    def validar_dimensiones(self):
        """Comprueba formas de matrices y número de sensores."""
        d = 4 * self.n
        for nombre in ("F1", "F2", "F3", "F4"):
            valor = getattr(self, nombre)
            if valor is not None and np.asarray(valor, dtype=float).shape != (4, self.n, self.n):
                raise ValueError(f"{nombre} debe tener forma (4, {self.n}, {self.n})")
        _es_cuadrada(self.Q, d, "Q")
        _es_cuadrada(self.P0, d, "P0")
        if self.R_ruido is None and (self.alpha is None or self.beta is None):
            raise ValueError("Indique R_ruido o el par alpha/beta")
        if self.R_ruido is not None:
            if len(self.R_ruido) != self.R:
                raise ValueError(f"R_ruido debe tener {self.R} matrices")
            for i, m in enumerate(self.R_ruido):
                _es_cuadrada(m, d, f"R_ruido[{i}]")
        else:
            if len(self.alpha) != self.R or len(self.beta) != self.R:
                raise ValueError(f"alpha y beta deben tener {self.R} valores")
        if self.S is not None:
            if len(self.S) != self.R:
                raise ValueError(f"S debe tener {self.R} matrices")
            for i, m in enumerate(self.S):
                _es_cuadrada(m, d, f"S[{i}]")
        p = np.asarray(self.probabilidades, dtype=float)
        if p.ndim and p.shape != (self.R, 4, self.n):
            raise ValueError(f"probabilidades debe ser un escalar o un arreglo ({self.R}, 4, {self.n})")
        return self

    def to_spec(self) -> SystemSpec:
        """
        Construye el SystemSpec equivalente.

        Raises:
            ConfigError: Si el sistema resultante es inválido
        """
        Q = np.asarray(self.Q, dtype=float)
        if self.R_ruido is not None:
            R_ruido = [np.asarray(m, dtype=float) for m in self.R_ruido]
            S = None if self.S is None else [np.asarray(m, dtype=float) for m in self.S]
        else:
            S_ganancia, R_ruido = correlated_noise_from_gain(Q, self.alpha, self.beta)
            S = S_ganancia if self.S is None else [np.asarray(m, dtype=float) for m in self.S]
        try:
            return SystemSpec(
                n=self.n,
                R=self.R,
                horizon=self.horizonte,
                F1=np.asarray(self.F1, dtype=float),
                F2=None if self.F2 is None else np.asarray(self.F2, dtype=float),
                F3=None if self.F3 is None else np.asarray(self.F3, dtype=float),
                F4=None if self.F4 is None else np.asarray(self.F4, dtype=float),
                Q=Q,
                Rvv=R_ruido,
                Suv=S,
                P0=np.asarray(self.P0, dtype=float),
                dropout_probs=np.asarray(self.probabilidades, dtype=float),
                name=self.nombre,
            )
        except FusionError as exc:
            raise ConfigError(f"Sistema inválido: {exc}") from exc


class SistemaRead(BaseModel):
    """Esquema para leer un sistema (response)."""

    nombre: str
    n: int
    R: int
    horizonte: int
    F1: list[Matriz]
    F2: list[Matriz]
    F3: list[Matriz]
    F4: list[Matriz]
    Q: Matriz
    R_ruido: list[Matriz]
    S: list[Matriz]
    P0: Matriz
    probabilidades: list

    @classmethod
    def from_spec(cls, spec: SystemSpec) -> "SistemaRead":
        """
        Raises:
            ConfigError: Si el sistema tiene parámetros variantes en el tiempo
        """
        if spec.is_time_varying:
            raise ConfigError("Los sistemas variantes en el tiempo no se pueden serializar")
        return cls(
            nombre=spec.name,
            n=spec.n,
            R=spec.R,
            horizonte=spec.horizon,
            F1=spec.F_at(1, 0).components.tolist(),
            F2=spec.F_at(2, 0).components.tolist(),
            F3=spec.F_at(3, 0).components.tolist(),
            F4=spec.F_at(4, 0).components.tolist(),
            Q=spec.Q_at(0).tolist(),
            R_ruido=[m.tolist() for m in spec.R_at(0)],
            S=[m.tolist() for m in spec.S_at(0)],
            P0=spec.P0.tolist(),
            probabilidades=spec.probs_at(2).tolist(),
        )


# ESQUEMAS: EXPERIMENTO


class ExperimentoConfig(BaseModel):
    """Sección [experimento]."""

    nombre: str = Field(default="experimento", description="Nombre del experimento")
    preset: Optional[str] = Field(default="example1-t1", description="Sistema de ejemplo")
    k: int = Field(default=1, ge=1, le=2, description="Orden de propiedad")
    casos: Optional[list[int]] = Field(default=None, description="Casos de probabilidad (todos los del preset si falta)")
    sensores: list[int] = Field(default_factory=lambda: [5], description="Números de sensores")
    mc: int = Field(default=0, ge=0, description="Corridas Monte Carlo (0 = solo teórico)")
    semilla: Optional[int] = Field(default=None, ge=0, description="Semilla maestra")
    horizonte: Optional[int] = Field(default=None, ge=2, description="Último instante")
    cuaternion: Optional[str] = Field(default="auto", description="auto, QSL, QSWL o vacío")

    @field_validator("preset")
    @classmethod
    def validar_preset(cls, v: Optional[str]) -> Optional[str]:
        """Valida que el preset exista."""
        if v is not None and v not in PRESETS:
            raise ValueError(f"Preset desconocido '{v}'. Use uno de {list(PRESETS)}")
        return v

    @field_validator("sensores")
    @classmethod
    def validar_sensores(cls, v: list[int]) -> list[int]:
        if not v or any(r < 1 for r in v):
            raise ValueError("Los números de sensores deben ser positivos")
        return v

    @field_validator("cuaternion")
    @classmethod
    def validar_cuaternion(cls, v: Optional[str]) -> Optional[str]:
        if v in (None, "", "none"):
            return None
        if v not in ("auto", "QSL", "QSWL"):
            raise ValueError("cuaternion debe ser auto, QSL o QSWL")
        return v

    def _casos(self) -> tuple:
        if self.casos:
            return tuple(self.casos)
        return tuple(casos_de_preset(self.preset, self.k))

    def to_config(self, spec: Optional[SystemSpec] = None, timing: bool = False) -> ExperimentConfig:
        """
        Raises:
            ConfigError: Si preset y casos no son compatibles
        """
        extra = {} if self.semilla is None else {"semilla": self.semilla}
        return ExperimentConfig(
            nombre=self.nombre,
            preset=None if spec is not None else self.preset,
            k=self.k,
            casos=self._casos() if spec is None else tuple(self.casos or ()),
            sensores=tuple(self.sensores) if spec is None else (spec.R,),
            mc=self.mc,
            horizonte=self.horizonte,
            cuaternion=self.cuaternion,
            timing=timing,
            spec=spec,
            **extra,
        )


class ConfiguracionArchivo(BaseModel):
    """Archivo TOML completo."""

    sistema: Optional[SistemaConfig] = None
    experimento: ExperimentoConfig = Field(default_factory=ExperimentoConfig)


def cargar_configuracion(path) -> ConfiguracionArchivo:
    """
    Lee y valida un archivo de configuración TOML.

    Raises:
        ConfigError: Si el archivo no existe, no es TOML válido o no cumple el esquema
    """
    ruta = Path(path)
    try:
        with ruta.open("rb") as f:
            datos = tomllib.load(f)
    except OSError as exc:
        raise ConfigError(f"No se pudo leer '{ruta}': {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML inválido en '{ruta}': {exc}") from exc
    try:
        return ConfiguracionArchivo.model_validate(datos)
    except ValidationError as exc:
        raise ConfigError(f"Configuración inválida en '{ruta}': {exc}") from exc


# ESQUEMAS: API


class ValidarRequest(BaseModel):
    """Esquema para la validación de propiedad de un sistema."""

    preset: Optional[str] = Field(None, description="Nombre del sistema de ejemplo")
    sistema: Optional[SistemaConfig] = Field(None, description="Sistema explícito")
    k: int = Field(ge=1, le=2, description="Orden de propiedad a verificar")

    @model_validator(mode="after")
    def validar_origen(self):
        if (self.preset is None) == (self.sistema is None):
            raise ValueError("Indique exactamente uno de preset o sistema")
        return self


class CondicionRead(BaseModel):
    nombre: str
    aprobado: bool
    motivo: str
    detalle: str


class ReporteRead(BaseModel):
    """Esquema de respuesta del reporte de propiedad."""

    k: int
    aprobado: bool
    condiciones: list[CondicionRead]

    @classmethod
    def from_report(cls, reporte: PropernessReport) -> "ReporteRead":
        return cls(
            k=reporte.k,
            aprobado=reporte.passed,
            condiciones=[
                CondicionRead(nombre=c.nombre, aprobado=c.aprobado, motivo=c.motivo, detalle=c.detalle)
                for c in reporte.condiciones
            ],
        )


class PresetResumen(BaseModel):
    nombre: str
    n: int
    R: int
    casos: dict[int, list[int]] = Field(description="Casos disponibles por orden k")


class EjecutarRequest(BaseModel):
    """Esquema para ejecutar un barrido de casos."""

    preset: str = Field(description="Sistema de ejemplo")
    k: int = Field(default=1, ge=1, le=2)
    casos: list[int] = Field(min_length=1)
    sensores: list[int] = Field(default_factory=lambda: [5])
    horizonte: int = Field(default=20, ge=2)
    mc: int = Field(default=0, ge=0)
    semilla: Optional[int] = Field(default=None, ge=0)
    cuaternion: Optional[str] = Field(default="auto")

    @field_validator("preset")
    @classmethod
    def validar_preset(cls, v: str) -> str:
        if v not in PRESETS:
            raise ValueError(f"Preset desconocido '{v}'")
        return v


class EjecutarResponse(BaseModel):
    filas: list[dict]
    md: dict[str, Optional[float]]
