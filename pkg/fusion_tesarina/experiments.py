"""
Experimentos numéricos: sistemas de ejemplo, barridos de casos de
probabilidad, Monte Carlo, comparación con el procesamiento cuaterniónico,
barrido del parámetro c, estudio de tiempos y salida CSV.
"""

import logging
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from fusion_tesarina.config import get_settings
from fusion_tesarina.errores import ConfigError, OutputError
from fusion_tesarina.filter import run_filter
from fusion_tesarina.model import (
    SystemSpec,
    block_pattern,
    correlated_noise_from_gain,
    simulate_batch,
    simulate_trajectory,
)
from fusion_tesarina.oracles import moment_table, quaternion_counterpart, real_valued_filter
from fusion_tesarina.tessarine_core import TessarineMatrix

logger = logging.getLogger(__name__)


# CONSTANTES DE LOS EJEMPLOS

ALPHAS = (0.5, 0.3, 0.9, 0.6, 0.2)
BETAS = (95.0, 125.0, 87.0, 83.0, 73.0)

# (a, b, c) de Q y (d, e, f) de P0 por orden de propiedad
PARAMETROS_EJEMPLO1 = {
    1: {"Q": (1.0, 1.0, -0.5), "P0": (4.0, 4.0, 1.5)},
    2: {"Q": (1.0, 2.0, -0.5), "P0": (4.0, 3.0, 1.5)},
}

C_BARRIDO = (-0.8, -0.5, -0.2, 0.0)

CUATERNION_POR_K = {1: "QSL", 2: "QSWL"}

COLUMNAS_CSV = [
    "t", "case", "R", "analytic_var", "mc_var", "mc_stderr",
    "quaternion_var", "diff", "runtime_s",
]


@dataclass(frozen=True)
class CaseDefinition:
    """Un caso de probabilidades de llegada."""

    id: int
    preset: str
    k: int
    valores: tuple
    descripcion: str

    def probabilidades(self, R: int, n: int) -> np.ndarray:
        """Arreglo (R, 4, n) de probabilidades por sensor, parte y componente."""
        p = np.zeros((R, 4, n))
        if self.preset.startswith("example1"):
            if self.k == 1:
                p[:] = self.valores[0]
            else:
                primero, segundo = self.valores
                p[:, [0, 2], :] = primero
                p[:, [1, 3], :] = segundo
            return p
        if self.k == 1:
            for j, valor in enumerate(self.valores[:n]):
                p[:, :, j] = valor
            return p
        # Componente 1: (p_{1,r}, p_{1,η′}); componente 2: (p_{2,r}, p_{2,η′})
        p1r, comun, p2e = self.valores
        pares = [(p1r, comun), (comun, p2e)]
        for j, (primero, segundo) in enumerate(pares[:n]):
            p[:, [0, 2], j] = primero
            p[:, [1, 3], j] = segundo
        return p


def _tabla_casos() -> dict:
    casos = {}
    for i, p in enumerate((0.1, 0.3, 0.5, 0.7, 0.9), start=1):
        casos[i] = CaseDefinition(i, "example1-t1", 1, (p,), f"p={p}")
    for i, par in enumerate(((0.1, 0.2), (0.3, 0.4), (0.5, 0.6), (0.7, 0.8), (0.9, 1.0)), start=6):
        casos[i] = CaseDefinition(i, "example1-t2", 2, par, f"p_r=p_η′={par[0]}, p_η=p_η″={par[1]}")
    for i, par in enumerate(((0.1, 0.2), (0.3, 0.4), (0.5, 0.6), (0.7, 0.8), (0.9, 1.0)), start=11):
        casos[i] = CaseDefinition(i, "example2", 1, par, f"p1={par[0]}, p2={par[1]}")
    trios = ((0.1, 0.2, 0.3), (0.3, 0.4, 0.5), (0.5, 0.6, 0.7), (0.7, 0.8, 0.9), (0.9, 0.95, 1.0))
    for i, trio in enumerate(trios, start=16):
        casos[i] = CaseDefinition(
            i, "example2", 2, trio, f"p1r={trio[0]}, p1η′=p2r={trio[1]}, p2η′={trio[2]}"
        )
    return casos


CASOS = _tabla_casos()


# SISTEMAS DE EJEMPLO


def preset_example1(k: int, R: int = 5, c: Optional[float] = None,
                    horizon: Optional[int] = None, simplificado: bool = False) -> SystemSpec:
    """
    Sistema escalar con cinco sensores y ruidos correlacionados v = α·u + w.

    Args:
        k: Escenario T1 (1) o T2 (2)
        R: Número de sensores (1 a 5)
        c: Sustituye el término cruzado de Q
        simplificado: F1 = 0.3 + 0.3η, c = f = 0 y d = e; todas las matrices
            quedan en span{1, η}, común a tesarinas y cuaterniones

    Raises:
        ConfigError: Si k no es 1 o 2 o R está fuera de rango
    """
    if k not in PARAMETROS_EJEMPLO1:
        raise ConfigError(f"El ejemplo 1 admite k=1 o k=2, no k={k}")
    if not 1 <= R <= len(ALPHAS):
        raise ConfigError(f"El ejemplo 1 admite de 1 a {len(ALPHAS)} sensores, no R={R}")
    a, b, c_q = PARAMETROS_EJEMPLO1[k]["Q"]
    d, e, f = PARAMETROS_EJEMPLO1[k]["P0"]
    F1 = TessarineMatrix(np.array([0.3, 0.3, 0.1, 0.2]).reshape(4, 1, 1))
    if c is not None:
        c_q = c
    if simplificado:
        F1 = TessarineMatrix(np.array([0.3, 0.3, 0.0, 0.0]).reshape(4, 1, 1))
        c_q, f, e = 0.0, 0.0, d
    Q = block_pattern(a, b, c_q)
    S, Rvv = correlated_noise_from_gain(Q, ALPHAS[:R], BETAS[:R])
    caso = CASOS[3] if k == 1 else CASOS[8]
    horizonte = get_settings().example1_horizon if horizon is None else horizon
    return SystemSpec(
        n=1,
        R=R,
        horizon=horizonte,
        F1=F1,
        Q=Q,
        Rvv=Rvv,
        Suv=S,
        P0=block_pattern(d, e, f),
        dropout_probs=caso.probabilidades(R, 1),
        name=f"example1-t{k}" + ("-simplificado" if simplificado else ""),
    )


def preset_example2(k: int = 1, horizon: Optional[int] = None) -> SystemSpec:
    """Seguimiento posición-velocidad (n=2) con un sensor y x(0) = 0."""
    G = np.array([0.0008, 0.04])
    cov_ruido = block_pattern(3.0, 3.0, 2.0)
    cov_obs = block_pattern(6.5, 6.5, 0.1)
    F1 = TessarineMatrix.from_real(np.array([[1.0, 0.04], [0.0, 1.0]]))
    caso = CASOS[13] if k == 1 else CASOS[18]
    horizonte = get_settings().example2_horizon if horizon is None else horizon
    return SystemSpec(
        n=2,
        R=1,
        horizon=horizonte,
        F1=F1,
        Q=np.kron(cov_ruido, np.outer(G, G)),
        Rvv=(np.kron(cov_obs, np.eye(2)),),
        P0=np.zeros((8, 8)),
        dropout_probs=caso.probabilidades(1, 2),
        name="example2",
    )


PRESETS = ("example1-t1", "example1-t2", "example2")


def obtener_preset(nombre: str, k: Optional[int] = None, R: Optional[int] = None,
                   horizon: Optional[int] = None) -> SystemSpec:
    """
    Raises:
        ConfigError: Si el preset no existe
    """
    if nombre == "example1-t1":
        return preset_example1(1, R=R or 5, horizon=horizon)
    if nombre == "example1-t2":
        return preset_example1(2, R=R or 5, horizon=horizon)
    if nombre == "example2":
        return preset_example2(k or 1, horizon=horizon)
    raise ConfigError(f"Preset desconocido '{nombre}'. Use uno de {list(PRESETS)}")


def casos_de_preset(nombre: str, k: Optional[int] = None) -> list:
    return [c.id for c in CASOS.values() if c.preset == nombre and (k is None or c.k == k)]


# TIPOS: EXPERIMENTO


@dataclass(frozen=True)
class ExperimentConfig:
    nombre: str = "experimento"
    preset: Optional[str] = "example1-t1"
    k: int = 1
    casos: tuple = (1, 2, 3, 4, 5)
    sensores: tuple = (5,)
    mc: int = 0
    horizonte: Optional[int] = None
    semilla: int = field(default_factory=lambda: get_settings().seed)
    cuaternion: Optional[str] = "auto"
    timing: bool = False
    spec: Optional[SystemSpec] = None

    def __post_init__(self):
        if self.mc < 0:
            raise ConfigError("El número de corridas Monte Carlo no puede ser negativo")
        if self.horizonte is not None and self.horizonte < 2:
            raise ConfigError("El horizonte debe ser al menos 2")
        if self.k not in (1, 2):
            raise ConfigError(f"k debe ser 1 o 2, no {self.k}")
        if self.spec is None:
            if self.preset not in PRESETS:
                raise ConfigError(f"Preset desconocido '{self.preset}'")
            for caso in self.casos:
                definicion = CASOS.get(caso)
                if definicion is None:
                    raise ConfigError(f"Caso desconocido {caso}")
                if definicion.preset != self.preset or definicion.k != self.k:
                    raise ConfigError(
                        f"El caso {caso} ({definicion.preset}, k={definicion.k}) no corresponde "
                        f"al preset '{self.preset}' con k={self.k}"
                    )

    @property
    def modo_cuaternion(self) -> Optional[str]:
        if self.cuaternion == "auto":
            return CUATERNION_POR_K[self.k]
        return self.cuaternion

    def sistema(self, caso: Optional[int], R: int) -> SystemSpec:
        """Sistema del caso con R sensores."""
        if self.spec is not None:
            base = self.spec if R == self.spec.R else self.spec.with_sensors(R)
            if self.horizonte is not None and base.horizon != self.horizonte:
                base = replace(base, horizon=self.horizonte)
        else:
            base = obtener_preset(self.preset, k=self.k, R=R, horizon=self.horizonte)
        if caso is not None:
            base = base.with_probabilities(CASOS[caso].probabilidades(R, base.n))
        return base


@dataclass
class CaseResult:
    """Varianzas de error por instante (índice 0 sin usar) de un caso y un R."""

    caso: Optional[int]
    R: int
    analytic_var: np.ndarray
    analytic_components: np.ndarray
    mc_var: Optional[np.ndarray] = None
    mc_stderr: Optional[np.ndarray] = None
    quaternion_var: Optional[np.ndarray] = None
    quaternion_components: Optional[np.ndarray] = None
    runtime_s: Optional[float] = None

    @property
    def diff(self) -> Optional[np.ndarray]:
        """D(t|t) = varianza cuaterniónica − varianza tesarina."""
        if self.quaternion_var is None:
            return None
        return self.quaternion_var - self.analytic_var

    @property
    def mean_diff(self) -> Optional[float]:
        """MD: media de D(t|t) en t = 1..T."""
        if self.quaternion_var is None:
            return None
        return float(np.mean(self.diff[1:]))


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    resultados: list

    @property
    def horizon(self) -> int:
        return len(self.resultados[0].analytic_var) - 1

    def to_frame(self) -> pd.DataFrame:
        """Tabla en orden t-mayor: una fila por (t, caso, R)."""
        filas = []
        n = self.resultados[0].analytic_components.shape[1]
        for t in range(1, self.horizon + 1):
            for r in self.resultados:
                fila = {
                    "t": t,
                    "case": r.caso if r.caso is not None else 0,
                    "R": r.R,
                    "analytic_var": r.analytic_var[t],
                    "mc_var": np.nan if r.mc_var is None else r.mc_var[t],
                    "mc_stderr": np.nan if r.mc_stderr is None else r.mc_stderr[t],
                    "quaternion_var": np.nan if r.quaternion_var is None else r.quaternion_var[t],
                    "diff": np.nan if r.diff is None else r.diff[t],
                    "runtime_s": np.nan if r.runtime_s is None else r.runtime_s,
                }
                if n > 1:
                    for j in range(n):
                        fila[f"analytic_var_c{j + 1}"] = r.analytic_components[t, j]
                        fila[f"quaternion_var_c{j + 1}"] = (
                            np.nan if r.quaternion_components is None else r.quaternion_components[t, j]
                        )
                        fila[f"diff_c{j + 1}"] = (
                            np.nan if r.quaternion_components is None
                            else r.quaternion_components[t, j] - r.analytic_components[t, j]
                        )
                filas.append(fila)
        columnas = list(COLUMNAS_CSV)
        if n > 1:
            for j in range(n):
                columnas += [f"analytic_var_c{j + 1}", f"quaternion_var_c{j + 1}", f"diff_c{j + 1}"]
        frame = pd.DataFrame(filas, columns=columnas)
        return frame.sort_values(["t", "case", "R"], kind="stable").reset_index(drop=True)


# EJECUCIÓN


def monte_carlo_error(spec: SystemSpec, k: int, runs: int, seed) -> tuple:
    """
    Varianza empírica del error de filtrado total por instante y su error estándar.

    Returns:
        (mc_var, mc_stderr) con forma (T+1,)
    """
    lote = simulate_batch(spec, runs, seed)
    corrida = run_filter(spec, k, lote.observations)
    error = lote.states - corrida.estimates
    cuadrado = np.sum(error ** 2, axis=(-2, -1))
    media = cuadrado.mean(axis=0)
    stderr = cuadrado.std(axis=0, ddof=1) / np.sqrt(runs) if runs > 1 else np.full_like(media, np.nan)
    media[0] = stderr[0] = np.nan
    return media, stderr


def _medir_filtro(spec: SystemSpec, k: int, repeticiones: int, seed) -> float:
    observaciones = simulate_trajectory(spec, seed).observations
    run_filter(spec, k, observaciones)
    return statistics.median(run_filter(spec, k, observaciones).runtime_s for _ in range(repeticiones))


def run_case_sweep(config: ExperimentConfig) -> ExperimentResult:
    """
    Para cada R y cada caso: varianza teórica del filtro T_k, varianza del
    procesamiento cuaterniónico equivalente y, si mc > 0, varianza empírica.
    """
    ajustes = get_settings()
    casos = list(config.casos) if config.spec is None else (list(config.casos) or [None])
    logger.info("Experimento '%s': casos %s, sensores %s, mc=%d",
                config.nombre, casos, list(config.sensores), config.mc)
    resultados = []
    for R in config.sensores:
        for caso in casos:
            spec = config.sistema(caso, R)
            logger.info("Caso %s con R=%d (%s)", caso, R, spec.name)
            analitico = run_filter(spec, config.k)
            resultado = CaseResult(
                caso=caso,
                R=R,
                analytic_var=analitico.mse,
                analytic_components=analitico.component_variances,
            )
            modo = config.modo_cuaternion
            if modo:
                cuaternion = quaternion_counterpart(spec, modo, moments=moment_table(spec))
                resultado.quaternion_var = cuaternion.mse
                resultado.quaternion_components = cuaternion.component_variances
            if config.mc > 0:
                semilla = (config.semilla, caso or 0)
                resultado.mc_var, resultado.mc_stderr = monte_carlo_error(spec, config.k, config.mc, semilla)
                desvio = np.abs(resultado.mc_var[1:] - resultado.analytic_var[1:])
                fuera = desvio > 4.0 * resultado.mc_stderr[1:]
                if np.any(fuera):
                    logger.warning("Caso %s, R=%d: Monte Carlo a más de 4 errores estándar en t=%s",
                                   caso, R, (np.flatnonzero(fuera) + 1).tolist())
            if config.timing:
                resultado.runtime_s = _medir_filtro(spec, config.k, ajustes.timing_repeats,
                                                    (config.semilla, caso or 0))
            resultados.append(resultado)
    logger.info("Experimento '%s' terminado (%d resultados)", config.nombre, len(resultados))
    return ExperimentResult(config=config, resultados=resultados)


def run_c_sweep(c_values: Sequence[float] = C_BARRIDO, cases: Sequence[int] = (1, 2, 3, 4, 5),
                horizon: Optional[int] = None, simplificado: bool = False) -> pd.DataFrame:
    """
    MD entre QSL y T1 para distintos valores de c en Q (ejemplo 1, escenario T1).

    Returns:
        DataFrame con columnas c, case, MD, min_diff
    """
    filas = []
    for c in c_values:
        for caso in cases:
            base = preset_example1(1, c=c, horizon=horizon, simplificado=simplificado)
            spec = base.with_probabilities(CASOS[caso].probabilidades(base.R, base.n))
            tesarina = run_filter(spec, 1)
            cuaternion = quaternion_counterpart(spec, "QSL")
            diferencia = cuaternion.mse[1:] - tesarina.mse[1:]
            filas.append({
                "c": c,
                "case": caso,
                "MD": float(np.mean(diferencia)),
                "min_diff": float(np.min(diferencia)),
            })
            logger.info("Barrido c=%.2f, caso %d: MD=%.6e", c, caso, filas[-1]["MD"])
    return pd.DataFrame(filas, columns=["c", "case", "MD", "min_diff"])


def step_flop_estimate(n: int, R: int, order: int) -> int:
    """Coste dominante de un paso: inversión de Ω de tamaño (order·n·R)²."""
    return (order * n * R) ** 3


def run_timing_benchmark(sensores: Sequence[int] = (2, 3, 4, 5), k: int = 1, horizon: int = 200,
                         repeticiones: Optional[int] = None, seed: Optional[int] = None) -> pd.DataFrame:
    """
    Tiempo del filtro T_k frente al filtro real 4nR sobre los mismos datos
    (mediana de varias repeticiones, sin contar una ejecución de calentamiento).
    """
    ajustes = get_settings()
    repeticiones = ajustes.timing_repeats if repeticiones is None else repeticiones
    seed = ajustes.seed if seed is None else seed
    filas = []
    for R in sensores:
        spec = preset_example1(k, R=R, horizon=horizon)
        observaciones = simulate_trajectory(spec, (seed, R)).observations
        run_filter(spec, k, observaciones)
        real_valued_filter(spec, observaciones)
        tiempos_tk, tiempos_real = [], []
        for _ in range(repeticiones):
            tk = run_filter(spec, k, observaciones)
            real = real_valued_filter(spec, observaciones)
            tiempos_tk.append(tk.runtime_s)
            tiempos_real.append(real.runtime_s)
        diferencia = float(np.max(np.abs(tk.estimates[1:] - real.estimates[1:])))
        fila = {
            "R": R,
            "k": k,
            "tk_time_s": statistics.median(tiempos_tk),
            "real_time_s": statistics.median(tiempos_real),
            "flops_tk": step_flop_estimate(spec.n, R, k),
            "flops_real": step_flop_estimate(spec.n, R, 4),
            "max_estimate_diff": diferencia,
        }
        fila["ratio"] = fila["real_time_s"] / fila["tk_time_s"]
        fila["flop_ratio"] = fila["flops_real"] / fila["flops_tk"]
        logger.info("Tiempos R=%d: T%d %.4f s, real %.4f s (razón %.2f)",
                    R, k, fila["tk_time_s"], fila["real_time_s"], fila["ratio"])
        filas.append(fila)
    tabla = pd.DataFrame(filas, columns=[
        "R", "k", "tk_time_s", "real_time_s", "ratio", "flops_tk", "flops_real", "flop_ratio",
        "max_estimate_diff",
    ])
    if np.any(tabla["ratio"] <= 1.0):
        logger.warning("El filtro T%d no fue más rápido que el filtro real para R=%s",
                       k, tabla.loc[tabla["ratio"] <= 1.0, "R"].tolist())
    if len(tabla) > 1 and tabla["ratio"].iloc[-1] < tabla["ratio"].iloc[0]:
        logger.warning("El ahorro de tiempo no crece con el número de sensores")
    return tabla


# SALIDA


def emit_csv(resultado, path) -> Path:
    """
    Escribe un ExperimentResult (o un DataFrame) como CSV UTF-8 con fin de
    línea LF y flotantes en formato %.12e. Los valores ausentes quedan vacíos.

    Raises:
        OutputError: Si no se puede escribir el archivo
    """
    frame = resultado.to_frame() if isinstance(resultado, ExperimentResult) else resultado
    destino = Path(path)
    try:
        destino.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(destino, index=False, float_format="%.12e", lineterminator="\n",
                     encoding="utf-8", na_rep="")
    except OSError as exc:
        raise OutputError(f"No se pudo escribir '{destino}': {exc}") from exc
    logger.info("Resultados escritos en %s (%d filas)", destino, len(frame))
    return destino


def resumen_texto(resultado: ExperimentResult) -> str:
    """Resumen legible: varianza final, MD y concordancia Monte Carlo por caso."""
    lineas = [f"Experimento: {resultado.config.nombre} (k={resultado.config.k})"]
    for r in resultado.resultados:
        linea = f"  caso {r.caso if r.caso is not None else '-'}, R={r.R}: " \
                f"varianza final {r.analytic_var[-1]:.6e}"
        if r.mean_diff is not None:
            linea += f", MD={r.mean_diff:.6e}"
        if r.mc_var is not None:
            z = np.abs(r.mc_var[1:] - r.analytic_var[1:]) / r.mc_stderr[1:]
            linea += f", Monte Carlo max|z|={np.nanmax(z):.2f}"
        if r.runtime_s is not None:
            linea += f", tiempo {r.runtime_s:.4f} s"
        lineas.append(linea)
    return "\n".join(lineas)
