"""
Filtro LLMS T_k-propio centralizado para sistemas tesarinos multisensor con
pérdidas aleatorias de paquetes, y su versión amplio-lineal (WL, k=4).

El filtro trabaja sobre el vector reducido x_k (kn componentes). Los
segundos momentos que necesita la covarianza de las innovaciones (estado,
estado-observación y observación) se propagan en coordenadas reales, donde
las máscaras de Bernoulli actúan entrada a entrada; solo P_k, las ganancias
y Ω viven en el álgebra de tesarinas, en la representación de par.
Las estimaciones admiten lotes: con observaciones (N, …) las ganancias se
calculan una vez y se aplican a todas las corridas.
"""

import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from fusion_tesarina.config import get_settings
from fusion_tesarina.errores import CovarianceError, DimensionError, OmegaSingularError
from fusion_tesarina.model import (
    SystemSpec,
    check_covariances,
    observation_vector,
    pi_matrices,
    real_transition,
    reduced_phi,
    require_properness,
)
from fusion_tesarina.tessarine_core import (
    StructuralMatrices,
    TessarineMatrix,
    augmented_covariance,
    build_structural,
    hermitian_pinv,
    real_error_covariance,
)

logger = logging.getLogger(__name__)


def _h(par: np.ndarray) -> np.ndarray:
    """Traspuesta hermítica en la representación de par."""
    return np.conj(np.swapaxes(par, -1, -2))


def _hermitizar(par: np.ndarray) -> np.ndarray:
    return 0.5 * (par + _h(par))


# TIPOS: MODELO REDUCIDO


@dataclass(frozen=True)
class StepStatistics:
    """
    Matrices de un instante t. Las reales están en coordenadas apiladas
    (4n o 4nR); phi_k, q_k y s_pi son pares (2, filas, columnas).
    """

    t: int
    A: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    R_second: np.ndarray
    S_p: np.ndarray
    p: np.ndarray
    gamma_cov: np.ndarray
    gamma_second: np.ndarray
    gamma_cross_oneminus: np.ndarray
    oneminus_second: np.ndarray
    Pi: np.ndarray
    complemento: np.ndarray
    phi_k: np.ndarray
    phi_kh: np.ndarray
    q_k: np.ndarray
    s_pi: np.ndarray


class ReducedModel:
    """
    Modelo T_k-propio listo para filtrar.

    Verifica la propiedad al construirse (salvo k=4) y guarda las matrices
    de cada instante; en sistemas invariantes todos los t ≥ 2 comparten
    las mismas matrices.
    """

    def __init__(self, spec: SystemSpec, k: int, rtol: Optional[float] = None):
        if k in (1, 2):
            self.reporte = require_properness(spec, k)
        elif k == 4:
            self.reporte = None
        else:
            raise ValueError(f"Orden k={k} inválido; use 1, 2 o 4")
        self.spec = spec
        self.k = k
        self.rtol = get_settings().pinv_rtol if rtol is None else rtol
        self.estructura: StructuralMatrices = build_structural(spec.n, spec.R, k)
        e = self.estructura
        # 2Υ_k y 2𝒯_k: Ω = (2Υ_k)·X·(2Υ_k)ᴴ para momentos reales X
        self.U = 2.0 * e.UpsilonK.pair
        self.Uh = _h(self.U)
        self.T2k = 2.0 * e.Tk.pair
        self.T2kh = _h(self.T2k)
        self._cache: dict = {}

    @property
    def kn(self) -> int:
        return self.k * self.spec.n

    def estadisticos(self, t: int) -> StepStatistics:
        clave = t if self.spec.is_time_varying else min(t, 2)
        if clave not in self._cache:
            self._cache[clave] = self._calcular(t)
        return self._cache[clave]

    def _calcular(self, t: int) -> StepStatistics:
        spec, e, kn = self.spec, self.estructura, self.kn
        pis = pi_matrices(spec, t, self.k)
        p = pis.gamma_mean
        R_real = spec.stacked_R(t)
        S_real = spec.stacked_S(t)
        Q_real = spec.Q_at(t)
        svec = augmented_covariance(S_real, e.T, e.Upsilon)
        s_k = svec[:kn, :] @ e.DeltaK.T
        phi_k = reduced_phi(spec, t, self.k).pair
        Pi = pis.pi_k_stacked
        return StepStatistics(
            t=t,
            A=real_transition(spec, t),
            Q=Q_real,
            R=R_real,
            R_second=R_real * pis.gamma_second,
            S_p=S_real * p,
            p=p,
            gamma_cov=pis.gamma_cov,
            gamma_second=pis.gamma_second,
            gamma_cross_oneminus=pis.gamma_cross_oneminus,
            oneminus_second=pis.oneminus_second,
            Pi=Pi,
            complemento=np.eye(Pi.shape[0]) - Pi,
            phi_k=phi_k,
            phi_kh=_h(phi_k),
            q_k=augmented_covariance(Q_real, e.Tk, e.Tk).pair,
            s_pi=(s_k @ Pi).pair,
        )


# TIPOS: ESTADO DEL FILTRO


@dataclass(frozen=True)
class FilterState:
    """
    Estado tras procesar el instante t (t=0 antes de la primera observación).

    sigma_x es E[x^r(t+1)·x^r(t+1)ᵀ]; cruzada y gamma_y son E[x^r(t)·y^r(t)ᵀ]
    y E[y^r(t)·y^r(t)ᵀ], con y^r las partes reales apiladas de los R sensores.
    Las magnitudes x_* e y_prev son None en modo solo-covarianzas.
    """

    modelo: ReducedModel
    t: int
    x_pred: Optional[TessarineMatrix]
    P_pred: TessarineMatrix
    sigma_x: np.ndarray
    x_filt: Optional[TessarineMatrix] = None
    P_filt: Optional[TessarineMatrix] = None
    cruzada: Optional[np.ndarray] = None
    gamma_y: Optional[np.ndarray] = None
    y_prev: Optional[TessarineMatrix] = None


@dataclass(frozen=True)
class StepOutput:
    t: int
    estimate: Optional[TessarineMatrix]
    P: TessarineMatrix
    mse: float
    component_variances: np.ndarray
    innovation: Optional[TessarineMatrix]
    omega: TessarineMatrix
    theta: TessarineMatrix
    gain: TessarineMatrix
    noise_gain: TessarineMatrix


def init_filter(spec: SystemSpec, k: int, *, batch: Optional[int] = None,
                covariance_only: bool = False, rtol: Optional[float] = None) -> FilterState:
    """
    Estado inicial: x̂_k(1|0) = 0 y P_k(1|0) = bloque kn×kn de Γ_x̄(1).

    Args:
        spec: Sistema
        k: 1 o 2 (T_k-propio) o 4 (amplio-lineal)
        batch: Número de corridas simultáneas (None = una sola)
        covariance_only: Propaga solo las covarianzas

    Raises:
        PropernessError: Si el sistema no es T_k-propio
        CovarianceError: Si P0 o la covarianza de los ruidos no es semidefinida positiva
    """
    check_covariances(spec)
    modelo = ReducedModel(spec, k, rtol=rtol)
    inicio = modelo.estadisticos(0)
    sigma_1 = inicio.A @ spec.P0 @ inicio.A.T + inicio.Q
    kn = modelo.kn
    x_pred = None
    if not covariance_only:
        forma = (4,) + (() if batch is None else (batch,)) + (kn, 1)
        x_pred = TessarineMatrix(np.zeros(forma))
    logger.debug("Filtro T%d inicializado para '%s' (n=%d, R=%d)", k, spec.name, spec.n, spec.R)
    return FilterState(
        modelo=modelo,
        t=0,
        x_pred=x_pred,
        P_pred=TessarineMatrix(pair=_hermitizar(modelo.T2k @ sigma_1 @ modelo.T2kh)),
        sigma_x=sigma_1,
    )


def init_wl_filter(spec: SystemSpec, **kwargs) -> FilterState:
    """Filtro amplio-lineal sobre el vector aumentado completo (sin requisitos de propiedad)."""
    return init_filter(spec, 4, **kwargs)


def _pinv_innovaciones(omega: TessarineMatrix, t: int, rtol: float) -> TessarineMatrix:
    try:
        pinv, _ = hermitian_pinv(omega, rtol)
    except CovarianceError as exc:
        par = omega.pair
        if np.all(np.isfinite(par)):
            w = np.linalg.eigvalsh(_hermitizar(par))
            positivos = w[w > 0.0]
            condicion = float(np.max(np.abs(w)) / np.min(positivos)) if positivos.size else np.inf
        else:
            condicion = np.inf
        raise OmegaSingularError(str(exc), t, condicion) from exc
    return pinv


def _reducir_observacion(modelo: ReducedModel, y) -> TessarineMatrix:
    if isinstance(y, TessarineMatrix):
        esperado = modelo.kn * modelo.spec.R
        if y.rows != esperado or y.cols != 1:
            raise DimensionError(f"La observación reducida debe tener {esperado} filas, no {y.shape}")
        return y
    y = np.asarray(y, dtype=float)
    if y.shape[-3:] != (modelo.spec.R, 4, modelo.spec.n):
        raise DimensionError(
            f"Las observaciones deben tener forma (..., {modelo.spec.R}, 4, {modelo.spec.n}), no {y.shape}"
        )
    return observation_vector(y, modelo.k)


def filter_step(state: FilterState, y=None):
    """
    Procesa la observación del instante t = state.t + 1.

    Args:
        state: Estado tras el instante t−1
        y: Observaciones reales (..., R, 4, n), y_k ya reducido, o None en
            modo solo-covarianzas

    Returns:
        (nuevo estado, StepOutput)

    Raises:
        OmegaSingularError: Si la covarianza de las innovaciones es indefinida
    """
    modelo = state.modelo
    R, n = modelo.spec.R, modelo.spec.n
    t = state.t + 1
    actual = modelo.estadisticos(t)
    P = state.P_pred.pair
    sigma = state.sigma_x
    # 𝒞Σ𝒞ᵀ y Σ𝒞ᵀ
    CsC = np.tile(sigma, (R, R))
    sC = np.tile(sigma, (1, R))

    if t == 1:
        gamma_y = CsC + actual.R
        cruzada = sC
        omega = modelo.U @ gamma_y @ modelo.Uh
        theta = np.tile(P, (1, 1, R))
    else:
        previo = modelo.estadisticos(t - 1)
        # M = E[x^r(t)·y^r(t−1)ᵀ]
        M = previo.A @ state.cruzada + previo.S_p
        CM = np.tile(M, (R, 1))
        salto = (CsC - CM - CM.T + state.gamma_y) * actual.gamma_cov + actual.R_second
        Pi = actual.Pi
        # Π_k·𝒞_k·P·𝒞_kᵀ·Π_k
        omega = modelo.U @ salto @ modelo.Uh + Pi @ np.tile(P, (1, R, R)) @ Pi
        theta = np.tile(P, (1, 1, R)) @ Pi
        cruzada = sC * actual.p + M * (1.0 - actual.p)
        cruce = CM * actual.gamma_cross_oneminus
        gamma_y = (
            CsC * actual.gamma_second
            + actual.R_second
            + cruce
            + cruce.T
            + state.gamma_y * actual.oneminus_second
        )

    omega = _hermitizar(omega)
    omega_pinv = _pinv_innovaciones(TessarineMatrix(pair=omega), t, modelo.rtol).pair
    L = theta @ omega_pinv
    H = actual.s_pi @ omega_pinv

    P_filt = _hermitizar(P - L @ _h(theta))
    phi, phih = actual.phi_k, actual.phi_kh
    cruce_ruido = phi @ theta @ _h(H)
    P_next = _hermitizar(
        phi @ P_filt @ phih - cruce_ruido - _h(cruce_ruido) - H @ omega @ _h(H) + actual.q_k
    )
    sigma_next = actual.A @ sigma @ actual.A.T + actual.Q

    L_t = TessarineMatrix(pair=L)
    H_t = TessarineMatrix(pair=H)
    x_filt = x_next = innovacion = y_k = None
    if y is not None:
        if state.x_pred is None:
            raise DimensionError("El estado se creó en modo solo-covarianzas")
        y_k = _reducir_observacion(modelo, y)
        Ck = modelo.estructura.Ck
        if t == 1:
            innovacion = y_k - Ck @ state.x_pred
        else:
            innovacion = y_k - actual.Pi @ (Ck @ state.x_pred) - actual.complemento @ state.y_prev
        x_filt = state.x_pred + L_t @ innovacion
        x_next = TessarineMatrix(pair=phi) @ x_filt + H_t @ innovacion

    P_filt_t = TessarineMatrix(pair=P_filt)
    nuevo = FilterState(
        modelo=modelo,
        t=t,
        x_pred=x_next,
        P_pred=TessarineMatrix(pair=P_next),
        sigma_x=sigma_next,
        x_filt=x_filt,
        P_filt=P_filt_t,
        cruzada=cruzada,
        gamma_y=gamma_y,
        y_prev=y_k,
    )
    # Parte real de la diagonal: ½(par₊ + par₋)
    varianzas = 0.5 * (np.diagonal(P_filt[0]) + np.diagonal(P_filt[1])).real[:n]
    salida = StepOutput(
        t=t,
        estimate=None if x_filt is None else x_filt[:n, :],
        P=P_filt_t[:n, :n],
        mse=float(np.sum(varianzas)),
        component_variances=varianzas,
        innovation=innovacion,
        omega=TessarineMatrix(pair=omega),
        theta=TessarineMatrix(pair=theta),
        gain=L_t,
        noise_gain=H_t,
    )
    return nuevo, salida


def wl_filter_step(state: FilterState, y=None):
    """Paso del filtro amplio-lineal; idéntico al T_k-propio con k=4."""
    if state.modelo.k != 4:
        raise ValueError("wl_filter_step requiere un estado creado con init_wl_filter")
    return filter_step(state, y)


def extract_estimate(state: FilterState):
    """
    Estimación de x(t) y su matriz de error n×n a partir del estado tras el instante t.

    Returns:
        (x̂(t|t) o None en modo solo-covarianzas, P(t|t))
    """
    if state.P_filt is None:
        raise ValueError("El filtro aún no procesó ninguna observación")
    n = state.modelo.spec.n
    estimacion = None if state.x_filt is None else state.x_filt[:n, :]
    return estimacion, state.P_filt[:n, :n]


# EJECUCIÓN COMPLETA


@dataclass(frozen=True)
class FilterRun:
    """
    Resultado de filtrar t = 1..horizon. Los arreglos se indexan por t
    (la entrada 0 es NaN o cero).
    """

    k: int
    mse: np.ndarray
    component_variances: np.ndarray
    error_covariances: np.ndarray
    estimates: Optional[np.ndarray]
    runtime_s: float

    @property
    def horizon(self) -> int:
        return len(self.mse) - 1


def run_filter(spec: SystemSpec, k: int, observations: Optional[np.ndarray] = None,
               horizon: Optional[int] = None, rtol: Optional[float] = None) -> FilterRun:
    """
    Filtra una trayectoria, un lote o solo las covarianzas.

    Args:
        spec: Sistema
        k: 1, 2 o 4
        observations: Arreglo (T+1, R, 4, n) o (N, T+1, R, 4, n); None para
            calcular solo el error teórico
        horizon: Último instante a procesar (por defecto spec.horizon)

    Returns:
        FilterRun con MSE total, varianzas por componente, covarianzas de
        error reales (4n×4n) y estimaciones (…, T+1, 4, n)
    """
    horizon = spec.horizon if horizon is None else horizon
    n = spec.n
    lote = None
    if observations is not None:
        observations = np.asarray(observations, dtype=float)
        if observations.ndim == 5:
            lote = observations.shape[0]
        elif observations.ndim != 4:
            raise DimensionError(
                f"Se esperaban observaciones (T+1, R, 4, n) o (N, T+1, R, 4, n), no {observations.shape}"
            )
        if observations.shape[-4] < horizon + 1:
            raise DimensionError(f"Faltan observaciones para el horizonte {horizon}")
        if observations.shape[-3:] != (spec.R, 4, n):
            raise DimensionError(
                f"Las observaciones deben terminar en ({spec.R}, 4, {n}), no {observations.shape}"
            )

    inicio = time.perf_counter()
    estado = init_filter(spec, k, batch=lote, covariance_only=observations is None, rtol=rtol)
    kn = k * n
    mse = np.full(horizon + 1, np.nan)
    varianzas = np.full((horizon + 1, n), np.nan)
    pares_P = np.zeros((2, horizon + 1, kn, kn), dtype=complex)
    reducidas = pares_x = None
    if observations is not None:
        # y_k(t) de todos los instantes, con forma de par (2, …, T+1, knR, 1)
        reducidas = observation_vector(observations[..., : horizon + 1, :, :, :], k).pair
        pares_x = np.zeros((2,) + observations.shape[:-4] + (horizon + 1, n, 1), dtype=complex)

    for t in range(1, horizon + 1):
        y_t = None if reducidas is None else TessarineMatrix(pair=reducidas[:, ..., t, :, :])
        estado, salida = filter_step(estado, y_t)
        mse[t] = salida.mse
        varianzas[t] = salida.component_variances
        pares_P[:, t] = estado.P_filt.pair
        if salida.estimate is not None:
            pares_x[:, ..., t, :, :] = salida.estimate.pair
    sigmas = np.zeros((horizon + 1, 4 * n, 4 * n))
    sigmas[1:] = real_error_covariance(TessarineMatrix(pair=pares_P[:, 1:]), k)
    estimaciones = None if pares_x is None else TessarineMatrix(pair=pares_x).to_real_components()
    duracion = time.perf_counter() - inicio
    logger.info("Filtro T%d sobre '%s': %d pasos en %.3f s", k, spec.name, horizon, duracion)
    return FilterRun(
        k=k,
        mse=mse,
        component_variances=varianzas,
        error_covariances=sigmas,
        estimates=estimaciones,
        runtime_s=duracion,
    )


def run_wl_filter(spec: SystemSpec, observations: Optional[np.ndarray] = None,
                  horizon: Optional[int] = None) -> FilterRun:
    return run_filter(spec, 4, observations, horizon)

