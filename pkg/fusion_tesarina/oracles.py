"""
Caminos de verificación independientes del filtro recursivo.

- moment_table: momentos de segundo orden exactos en coordenadas reales.
- batch_llms: proyección LLMS en bloque por ecuaciones normales, sin
  restricciones (k=4, amplio-lineal) o restringida a estimadores
  T_k-lineales (k=1, 2).
- quaternion_counterpart: proyecciones QSL / QSWL con las mismas
  componentes reales interpretadas como cuaterniones.
- real_valued_filter: recursión amplio-lineal en coordenadas reales
  4nR, usada como referencia de tiempos.
- standard_kalman_filter: Kalman clásico que ignora pérdidas y
  correlación de ruidos.
"""

import logging
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve, solve_triangular

from fusion_tesarina.config import get_settings
from fusion_tesarina.errores import CovarianceError, DimensionError, OmegaSingularError
from fusion_tesarina.filter import FilterRun
from fusion_tesarina.model import (
    SystemSpec,
    bernoulli_moments,
    check_covariances,
    dropout_probabilities,
    real_transition,
)
from fusion_tesarina.tessarine_core import SIGNOS_CONJUGACION, UNIDADES_IZQUIERDA, psd_pinv

logger = logging.getLogger(__name__)


def quaternion_left_matrix(q: Sequence[float]) -> np.ndarray:
    """Matriz real 4×4 de la multiplicación por la izquierda del cuaternión q."""
    q0, q1, q2, q3 = (float(v) for v in q)
    return np.array(
        [
            [q0, -q1, -q2, -q3],
            [q1, q0, -q3, q2],
            [q2, q3, q0, -q1],
            [q3, -q2, q1, q0],
        ]
    )


# L(1), L(i), L(j), L(k)
UNIDADES_CUATERNION = np.stack([quaternion_left_matrix(e) for e in np.eye(4)])

# Involución q^j = −j·q·j: cambia el signo de las partes i y k
SIGNOS_INVOLUCION_J = np.array([1.0, -1.0, 1.0, -1.0])

INVOLUCIONES_TESARINA = {
    1: (SIGNOS_CONJUGACION["identity"],),
    2: (SIGNOS_CONJUGACION["identity"], SIGNOS_CONJUGACION["star"]),
}

INVOLUCIONES_CUATERNION = {
    "QSL": (np.ones(4),),
    "QSWL": (np.ones(4), SIGNOS_INVOLUCION_J),
}


# TIPOS: MOMENTOS


@dataclass(frozen=True)
class MomentTable:
    """
    Momentos reales exactos hasta el horizonte T.

    sigma[t] = E[x^r(t) x^r(t)ᵀ]; X[t, s] = E[x^r(t) y^r(s)ᵀ];
    Y[t, s] = E[y^r(t) y^r(s)ᵀ], con y^r(s) el vector real apilado de los R
    sensores (índice i·4n + ν·n + j). Las entradas con índice 0 de X e Y
    no se usan.
    """

    n: int
    R: int
    horizon: int
    sigma: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    probabilities: np.ndarray

    def observation_gram(self, t: int) -> np.ndarray:
        """Cov(Y_{1:t}) con los instantes en orden creciente."""
        m = 4 * self.n * self.R
        bloque = self.Y[1: t + 1, 1: t + 1]
        return bloque.transpose(0, 2, 1, 3).reshape(t * m, t * m)

    def state_observation_cross(self, t: int, hasta: Optional[int] = None) -> np.ndarray:
        """Cov(x^r(t), Y_{1:hasta}) (por defecto hasta = t)."""
        hasta = t if hasta is None else hasta
        m = 4 * self.n * self.R
        bloque = self.X[t, 1: hasta + 1]
        return bloque.transpose(1, 0, 2).reshape(4 * self.n, hasta * m)


def moment_table(spec: SystemSpec, horizon: Optional[int] = None) -> MomentTable:
    """
    Calcula los momentos de estado y observaciones, incluidos los cruzados
    entre instantes distintos (también observaciones posteriores a t).
    """
    T = spec.horizon if horizon is None else horizon
    n, R = spec.n, spec.R
    d = 4 * n
    m = d * R
    C = np.kron(np.ones((R, 1)), np.eye(d))

    A = [real_transition(spec, t) for t in range(T + 1)]
    p = np.stack([dropout_probabilities(spec, t).reshape(-1) for t in range(T + 1)])
    sigma = np.zeros((T + 1, d, d))
    sigma[0] = spec.P0
    K = np.zeros((T + 1, d, m))
    X = np.zeros((T + 1, T + 1, d, m))
    Y = np.zeros((T + 1, T + 1, m, m))

    for t in range(1, T + 1):
        sigma[t] = A[t - 1] @ sigma[t - 1] @ A[t - 1].T + spec.Q_at(t - 1)
        Ezz = C @ sigma[t] @ C.T + spec.stacked_R(t)
        if t == 1:
            K[t] = sigma[t] @ C.T
            Y[t, t] = Ezz
        else:
            M = A[t - 1] @ K[t - 1] + spec.stacked_S(t - 1) * p[t - 1]
            CM = C @ M
            mom = bernoulli_moments(p[t])
            K[t] = sigma[t] @ C.T * p[t] + M * (1.0 - p[t])
            Y[t, t] = (
                mom["gamma_second"] * Ezz
                + mom["gamma_cross_oneminus"] * CM
                + mom["gamma_cross_oneminus"].T * CM.T
                + mom["oneminus_second"] * Y[t - 1, t - 1]
            )
        X[t, t] = K[t]

    # Observaciones anteriores al estado
    for s in range(1, T):
        B = A[s] @ K[s] + spec.stacked_S(s) * p[s]
        for t in range(s + 1, T + 1):
            X[t, s] = B
            Y[t, s] = p[t][:, None] * (C @ B) + (1.0 - p[t])[:, None] * Y[t - 1, s]
            Y[s, t] = Y[t, s].T
            B = A[t] @ B

    # Observaciones posteriores al estado
    for t in range(1, T):
        F = sigma[t]
        for s in range(t + 1, T + 1):
            F = F @ A[s - 1].T
            X[t, s] = F @ C.T * p[s] + X[t, s - 1] * (1.0 - p[s])

    return MomentTable(n=n, R=R, horizon=T, sigma=sigma, X=X, Y=Y, probabilities=p)


# PROYECCIONES EN BLOQUE


@dataclass(frozen=True)
class ProjectionResult:
    """Errores (y estimaciones, si hay datos) de una proyección LLMS por instante."""

    metodo: str
    mse: np.ndarray
    component_variances: np.ndarray
    estimates: Optional[np.ndarray] = None
    error_covariances: Optional[np.ndarray] = None


class _SolverPrefijos:
    """
    Resuelve las ecuaciones normales para todos los prefijos de una matriz
    de Gram ordenada por tiempo con un único factor de Cholesky. Si la
    matriz es deficiente en rango se usa la pseudo-inversa por prefijo.
    """

    def __init__(self, G: np.ndarray, rtol: float):
        self.G = 0.5 * (G + G.T)
        self.rtol = rtol
        self.L = None
        self.validos = 0
        escala = float(np.max(np.diag(self.G))) if self.G.size else 0.0
        try:
            L = cholesky(self.G, lower=True)
        except LinAlgError:
            logger.debug("Gram no definida positiva (%d×%d): pseudo-inversa por prefijo", *self.G.shape)
            return
        pivotes = np.diag(L) ** 2
        pequenos = np.flatnonzero(pivotes <= rtol * escala)
        self.validos = int(pequenos[0]) if pequenos.size else self.G.shape[0]
        self.L = L
        logger.debug("Cholesky de la Gram %d×%d válida para prefijos de hasta %d",
                     self.G.shape[0], self.G.shape[1], self.validos)

    def reducir(self, c: np.ndarray, d: int, con_ganancia: bool = False):
        """
        Returns:
            (c·G_d⁺·cᵀ, c·G_d⁺ o None)
        """
        c = c[:, :d]
        if self.L is not None and d <= self.validos:
            Ld = self.L[:d, :d]
            Z = solve_triangular(Ld, c.T, lower=True)
            ganancia = solve_triangular(Ld.T, Z, lower=False).T if con_ganancia else None
            return Z.T @ Z, ganancia
        Gp = psd_pinv(self.G[:d, :d], self.rtol)
        ganancia = c @ Gp
        return ganancia @ c.T, (ganancia if con_ganancia else None)


def _validar_observaciones(spec: SystemSpec, observaciones, T: int) -> Optional[np.ndarray]:
    if observaciones is None:
        return None
    obs = np.asarray(observaciones, dtype=float)
    if obs.ndim not in (4, 5) or obs.shape[-3:] != (spec.R, 4, spec.n) or obs.shape[-4] < T + 1:
        raise DimensionError(
            f"Se esperaban observaciones (…, ≥{T + 1}, {spec.R}, 4, {spec.n}), no {obs.shape}"
        )
    return obs


def _proyeccion_real(spec: SystemSpec, momentos: MomentTable, T: int,
                     obs: Optional[np.ndarray], rtol: float) -> ProjectionResult:
    n = spec.n
    d = 4 * n
    m = d * spec.R
    solver = _SolverPrefijos(momentos.observation_gram(T), rtol)
    mse = np.full(T + 1, np.nan)
    varianzas = np.full((T + 1, n), np.nan)
    sigmas = np.zeros((T + 1, d, d))
    estimaciones = None if obs is None else np.zeros(obs.shape[:-3] + (4, n))
    for t in range(1, T + 1):
        c = momentos.state_observation_cross(t)
        reduccion, ganancia = solver.reducir(c, t * m, con_ganancia=obs is not None)
        error = momentos.sigma[t] - reduccion
        error = 0.5 * (error + error.T)
        sigmas[t] = error
        varianzas[t] = np.diag(error).reshape(4, n).sum(axis=0)
        mse[t] = varianzas[t].sum()
        if obs is not None:
            y = obs[..., 1: t + 1, :, :, :].reshape(obs.shape[:-4] + (t * m,))
            estimaciones[..., t, :, :] = (y @ ganancia.T).reshape(obs.shape[:-4] + (4, n))
    return ProjectionResult("WL", mse, varianzas, estimaciones, sigmas)


def _proyeccion_estructurada(spec: SystemSpec, momentos: MomentTable, T: int,
                             obs: Optional[np.ndarray], unidades: np.ndarray,
                             involuciones: Sequence[np.ndarray], metodo: str,
                             rtol: float) -> ProjectionResult:
    """
    Mejor estimador x̂ = Σ_g Σ_s H_g(s)·y^g(s) con H_g(s) matrices del álgebra
    cuya multiplicación por la izquierda generan `unidades`.

    En coordenadas reales, la parte a de x̂ es Σ_ν H_ν·U_{a,ν} con
    U_{a,ν} = Σ_b L_ν[a, b]·w_b, de modo que [H_0 … H_3] resuelve
    [H_ν] · Σ_a E[U_a U_aᵀ] = Σ_a E[x_a U_aᵀ].
    """
    n, R = spec.n, spec.R
    signos = np.stack(involuciones)
    g = len(signos)
    bloque = 4 * g * n * R
    D = T * bloque
    # Kc[ν, g, b, a] = L_ν[a, b]·σ_g[b]
    Kc = np.einsum("nab,gb->ngba", unidades, signos)

    Yt = momentos.Y[1: T + 1, 1: T + 1].reshape(T, T, R, 4, n, R, 4, n)
    gram = np.einsum("ngba,mhca,stibjkcl->sngijtmhkl", Kc, Kc, Yt, optimize=True)
    solver = _SolverPrefijos(gram.reshape(D, D), rtol)

    U = None
    if obs is not None:
        datos = obs[..., 1: T + 1, :, :, :]
        U = np.einsum("ngba,...sibj->...asngij", Kc, datos, optimize=True)
        U = U.reshape(U.shape[:-6] + (4, D))

    mse = np.full(T + 1, np.nan)
    varianzas = np.full((T + 1, n), np.nan)
    estimaciones = None if obs is None else np.zeros(obs.shape[:-4] + (T + 1, 4, n))
    for t in range(1, T + 1):
        Xt = momentos.X[t, 1: t + 1].reshape(t, 4, n, R, 4, n)
        c = np.einsum("ngba,saqibj->qsngij", Kc, Xt, optimize=True).reshape(n, t * bloque)
        reduccion, ganancia = solver.reducir(c, t * bloque, con_ganancia=obs is not None)
        total = np.diag(momentos.sigma[t]).reshape(4, n).sum(axis=0)
        varianzas[t] = total - np.diag(reduccion)
        mse[t] = varianzas[t].sum()
        if obs is not None:
            estimaciones[..., t, :, :] = U[..., :, : t * bloque] @ ganancia.T
    return ProjectionResult(metodo, mse, varianzas, estimaciones)


def batch_llms(spec: SystemSpec, k: int, horizon: Optional[int] = None,
               observations: Optional[np.ndarray] = None,
               moments: Optional[MomentTable] = None) -> ProjectionResult:
    """
    Proyección LLMS en bloque x̂(t|t) = Cov(x(t), Y_{1:t})·Cov(Y_{1:t})⁺·Y_{1:t}.

    Args:
        spec: Sistema
        k: 4 para el estimador amplio-lineal (proyección real sin
            restricciones); 1 o 2 para el mejor estimador T_k-lineal
        horizon: Último instante (por defecto spec.horizon)
        observations: Datos (T+1, R, 4, n) o lote (N, T+1, R, 4, n)
        moments: Tabla de momentos ya calculada

    Returns:
        ProjectionResult con errores por instante y estimaciones si hay datos
    """
    T = spec.horizon if horizon is None else horizon
    obs = _validar_observaciones(spec, observations, T)
    momentos = moments if moments is not None else moment_table(spec, T)
    rtol = get_settings().pinv_rtol
    logger.debug("Proyección en bloque k=%d para '%s' hasta t=%d", k, spec.name, T)
    if k == 4:
        return _proyeccion_real(spec, momentos, T, obs, rtol)
    if k not in INVOLUCIONES_TESARINA:
        raise ValueError(f"Orden k={k} inválido; use 1, 2 o 4")
    return _proyeccion_estructurada(
        spec, momentos, T, obs, UNIDADES_IZQUIERDA, INVOLUCIONES_TESARINA[k], f"T{k}", rtol
    )


def quaternion_counterpart(spec: SystemSpec, mode: str, horizon: Optional[int] = None,
                           observations: Optional[np.ndarray] = None,
                           moments: Optional[MomentTable] = None) -> ProjectionResult:
    """
    Estimador cuaterniónico estrictamente lineal (QSL) o semi-amplio-lineal
    (QSWL, sobre {y, y^j}) con las mismas componentes reales del sistema.
    """
    modo = mode.upper()
    if modo not in INVOLUCIONES_CUATERNION:
        raise ValueError(f"Modo '{mode}' desconocido; use QSL o QSWL")
    T = spec.horizon if horizon is None else horizon
    obs = _validar_observaciones(spec, observations, T)
    momentos = moments if moments is not None else moment_table(spec, T)
    return _proyeccion_estructurada(
        spec, momentos, T, obs, UNIDADES_CUATERNION, INVOLUCIONES_CUATERNION[modo], modo,
        get_settings().pinv_rtol,
    )


# FILTROS EN COORDENADAS REALES


def real_valued_filter(spec: SystemSpec, observations: Optional[np.ndarray] = None,
                       horizon: Optional[int] = None) -> FilterRun:
    """
    Filtro LLMS amplio-lineal en coordenadas reales 4nR: misma recursión que
    el filtro aumentado, sin álgebra de tesarinas.
    """
    T = spec.horizon if horizon is None else horizon
    obs = _validar_observaciones(spec, observations, T)
    n, R = spec.n, spec.R
    d = 4 * n
    m = d * R
    C = np.kron(np.ones((R, 1)), np.eye(d))
    rtol = get_settings().pinv_rtol
    check_covariances(spec)

    inicio = time.perf_counter()
    A = real_transition(spec, 0)
    sigma = A @ spec.P0 @ A.T + spec.Q_at(0)
    P = sigma.copy()
    x_pred = None if obs is None else np.zeros(obs.shape[:-4] + (d,))
    y_prev = K_prev = Gy_prev = p_prev = None

    mse = np.full(T + 1, np.nan)
    varianzas = np.full((T + 1, n), np.nan)
    sigmas = np.zeros((T + 1, d, d))
    estimaciones = None if obs is None else np.zeros(obs.shape[:-3] + (4, n))

    for t in range(1, T + 1):
        A_prev = A
        A = real_transition(spec, t)
        p = dropout_probabilities(spec, t).reshape(-1)
        R_t = spec.stacked_R(t)
        Ezz = C @ sigma @ C.T + R_t
        if t == 1:
            theta = P @ C.T
            omega = Ezz
            K = sigma @ C.T
            Gy = Ezz
        else:
            M = A_prev @ K_prev + spec.stacked_S(t - 1) * p_prev
            CM = C @ M
            mom = bernoulli_moments(p)
            salto = Ezz - CM - CM.T + Gy_prev
            omega = mom["gamma_cov"] * salto + p[:, None] * (C @ P @ C.T + R_t) * p
            theta = P @ C.T * p
            K = sigma @ C.T * p + M * (1.0 - p)
            Gy = (
                mom["gamma_second"] * Ezz
                + mom["gamma_cross_oneminus"] * CM
                + mom["gamma_cross_oneminus"].T * CM.T
                + mom["oneminus_second"] * Gy_prev
            )
        omega = 0.5 * (omega + omega.T)
        try:
            omega_pinv = psd_pinv(omega, rtol)
        except CovarianceError as exc:
            raise OmegaSingularError(str(exc), t, float(np.linalg.cond(omega))) from exc
        L = theta @ omega_pinv
        H = spec.stacked_S(t) * p @ omega_pinv

        P_filt = P - L @ theta.T
        P_filt = 0.5 * (P_filt + P_filt.T)
        P = A @ P_filt @ A.T - A @ theta @ H.T - H @ theta.T @ A.T - H @ omega @ H.T + spec.Q_at(t)
        P = 0.5 * (P + P.T)

        if obs is not None:
            y = obs[..., t, :, :, :].reshape(obs.shape[:-4] + (m,))
            if t == 1:
                innovacion = y - x_pred @ C.T
            else:
                innovacion = y - (x_pred @ C.T) * p - y_prev * (1.0 - p)
            x_filt = x_pred + innovacion @ L.T
            x_pred = x_filt @ A.T + innovacion @ H.T
            y_prev = y
            estimaciones[..., t, :, :] = x_filt.reshape(x_filt.shape[:-1] + (4, n))

        sigmas[t] = P_filt
        varianzas[t] = np.diag(P_filt).reshape(4, n).sum(axis=0)
        mse[t] = varianzas[t].sum()
        sigma = A @ sigma @ A.T + spec.Q_at(t)
        K_prev, Gy_prev, p_prev = K, Gy, p

    duracion = time.perf_counter() - inicio
    logger.debug("Filtro real %d×%d sobre '%s': %.3f s", m, m, spec.name, duracion)
    return FilterRun(
        k=4,
        mse=mse,
        component_variances=varianzas,
        error_covariances=sigmas,
        estimates=estimaciones,
        runtime_s=duracion,
    )


def standard_kalman_filter(spec: SystemSpec, observations: np.ndarray,
                           horizon: Optional[int] = None) -> FilterRun:
    """
    Filtro de Kalman clásico en coordenadas reales: trata y(t) como medida
    siempre recibida y supone ruidos de estado y observación incorrelados.
    """
    T = spec.horizon if horizon is None else horizon
    obs = _validar_observaciones(spec, observations, T)
    n, R = spec.n, spec.R
    d = 4 * n
    m = d * R
    C = np.kron(np.ones((R, 1)), np.eye(d))

    inicio = time.perf_counter()
    A = real_transition(spec, 0)
    P = A @ spec.P0 @ A.T + spec.Q_at(0)
    x = np.zeros(obs.shape[:-4] + (d,))
    mse = np.full(T + 1, np.nan)
    varianzas = np.full((T + 1, n), np.nan)
    sigmas = np.zeros((T + 1, d, d))
    estimaciones = np.zeros(obs.shape[:-3] + (4, n))

    for t in range(1, T + 1):
        # Actualización
        S_inn = C @ P @ C.T + spec.stacked_R(t)
        ganancia = solve(S_inn, C @ P, assume_a="pos").T
        y = obs[..., t, :, :, :].reshape(obs.shape[:-4] + (m,))
        x = x + (y - x @ C.T) @ ganancia.T
        P = (np.eye(d) - ganancia @ C) @ P
        P = 0.5 * (P + P.T)
        estimaciones[..., t, :, :] = x.reshape(x.shape[:-1] + (4, n))
        sigmas[t] = P
        varianzas[t] = np.diag(P).reshape(4, n).sum(axis=0)
        mse[t] = varianzas[t].sum()

        # Predicción
        A = real_transition(spec, t)
        x = x @ A.T
        P = A @ P @ A.T + spec.Q_at(t)

    return FilterRun(
        k=4,
        mse=mse,
        component_variances=varianzas,
        error_covariances=sigmas,
        estimates=estimaciones,
        runtime_s=time.perf_counter() - inicio,
    )
