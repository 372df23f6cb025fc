"""
Modelo de espacio de estados tesarino multisensor con pérdidas de paquetes.

Especificación declarativa del sistema, verificación de propiedad T_k,
matrices de probabilidad Π, momentos de Bernoulli y simulación de
trayectorias (estado, sensores y canales con pérdidas).
"""

import logging
from dataclasses import dataclass, replace
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np
from scipy.linalg import block_diag as block_diag_real

from fusion_tesarina.config import get_settings
from fusion_tesarina.errores import (
    CovarianceError,
    DimensionError,
    ProbabilityError,
    PropernessError,
)
from fusion_tesarina.tessarine_core import (
    ORDEN_AUMENTADO,
    SIGNOS_CONJUGACION,
    TessarineMatrix,
    block,
    build_structural,
    matrix_T,
)

logger = logging.getLogger(__name__)

Variable = Union[Any, Callable[[int], Any]]


def _en(valor: Variable, t: int):
    """Evalúa un parámetro que puede ser constante o función del tiempo."""
    return valor(t) if callable(valor) else valor


def _como_tesarina(valor, n: int, nombre: str) -> TessarineMatrix:
    if valor is None:
        return TessarineMatrix.zeros(n, n)
    if not isinstance(valor, TessarineMatrix):
        valor = TessarineMatrix(np.asarray(valor, dtype=float).reshape(4, n, n))
    if valor.shape != (n, n):
        raise DimensionError(f"{nombre} debe ser {n}×{n}, no {valor.shape}")
    return valor


def _como_matriz(valor, filas: int, columnas: int, nombre: str) -> np.ndarray:
    m = np.asarray(valor, dtype=float)
    if m.shape != (filas, columnas):
        raise DimensionError(f"{nombre} debe ser {filas}×{columnas}, no {m.shape}")
    return m


def _como_probabilidades(valor, R: int, n: int) -> np.ndarray:
    p = np.asarray(valor, dtype=float)
    try:
        p = np.broadcast_to(p, (R, 4, n)).copy()
    except ValueError:
        raise DimensionError(
            f"Las probabilidades deben poder expandirse a ({R}, 4, {n}), no {p.shape}"
        ) from None
    if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise ProbabilityError("Las probabilidades de llegada deben estar en [0, 1]")
    return p


# TIPOS: SISTEMA


@dataclass(frozen=True)
class SystemSpec:
    """
    Sistema multisensor:

        x(t+1) = F1 x + F2 x* + F3 x^η + F4 x^η″ + u(t)
        z⁽ⁱ⁾(t) = x(t) + v⁽ⁱ⁾(t)
        y⁽ⁱ⁾(t) = γ⁽ⁱ⁾(t) ⋆ z⁽ⁱ⁾(t) + (1 − γ⁽ⁱ⁾(t)) ⋆ y⁽ⁱ⁾(t−1),  y⁽ⁱ⁾(1) = z⁽ⁱ⁾(1)

    Las covarianzas se dan en coordenadas reales (4n×4n). Cualquier campo
    puede ser una función de t para sistemas variantes en el tiempo.
    """

    n: int
    R: int
    horizon: int
    F1: Variable
    Q: Variable
    Rvv: Variable
    P0: Any
    dropout_probs: Variable
    F2: Variable = None
    F3: Variable = None
    F4: Variable = None
    Suv: Variable = None
    name: str = "sistema"

    def __post_init__(self):
        if self.n < 1 or self.R < 1:
            raise DimensionError(f"n y R deben ser positivos (n={self.n}, R={self.R})")
        if self.horizon < 1:
            raise DimensionError(f"El horizonte debe ser positivo (horizon={self.horizon})")
        d = 4 * self.n
        for j in (1, 2, 3, 4):
            nombre = f"F{j}"
            valor = getattr(self, nombre)
            if not callable(valor):
                object.__setattr__(self, nombre, _como_tesarina(valor, self.n, nombre))
        if not callable(self.Q):
            object.__setattr__(self, "Q", _como_matriz(self.Q, d, d, "Q"))
        object.__setattr__(self, "P0", _como_matriz(self.P0, d, d, "P0"))
        if not callable(self.Rvv):
            object.__setattr__(self, "Rvv", self._lista_sensores(self.Rvv, "Rvv"))
        if self.Suv is None:
            object.__setattr__(self, "Suv", tuple(np.zeros((d, d)) for _ in range(self.R)))
        elif not callable(self.Suv):
            object.__setattr__(self, "Suv", self._lista_sensores(self.Suv, "Suv"))
        if not callable(self.dropout_probs):
            object.__setattr__(
                self, "dropout_probs", _como_probabilidades(self.dropout_probs, self.R, self.n)
            )

    def _lista_sensores(self, valores, nombre: str) -> tuple:
        d = 4 * self.n
        valores = list(valores)
        if len(valores) != self.R:
            raise DimensionError(f"{nombre} debe tener {self.R} matrices, tiene {len(valores)}")
        return tuple(_como_matriz(m, d, d, f"{nombre}[{i}]") for i, m in enumerate(valores))

    # Accesores dependientes del tiempo

    @property
    def is_time_varying(self) -> bool:
        campos = (self.F1, self.F2, self.F3, self.F4, self.Q, self.Rvv, self.Suv, self.dropout_probs)
        return any(callable(c) for c in campos)

    def F_at(self, j: int, t: int) -> TessarineMatrix:
        return _como_tesarina(_en(getattr(self, f"F{j}"), t), self.n, f"F{j}")

    def Q_at(self, t: int) -> np.ndarray:
        d = 4 * self.n
        return _como_matriz(_en(self.Q, t), d, d, "Q")

    def R_at(self, t: int) -> tuple:
        valor = _en(self.Rvv, t)
        return valor if not callable(self.Rvv) else self._lista_sensores(valor, "Rvv")

    def S_at(self, t: int) -> tuple:
        valor = _en(self.Suv, t)
        return valor if not callable(self.Suv) else self._lista_sensores(valor, "Suv")

    def probs_at(self, t: int) -> np.ndarray:
        valor = _en(self.dropout_probs, t)
        return valor if not callable(self.dropout_probs) else _como_probabilidades(valor, self.R, self.n)

    def stacked_R(self, t: int) -> np.ndarray:
        """Covarianza real del ruido de observación apilado (4nR×4nR, bloque diagonal)."""
        return block_diag_real(*self.R_at(t))

    def stacked_S(self, t: int) -> np.ndarray:
        """Covarianza cruzada real E[u^r v⃗^rᵀ] (4n×4nR)."""
        return np.hstack(self.S_at(t))

    def with_probabilities(self, probabilidades) -> "SystemSpec":
        return replace(self, dropout_probs=probabilidades)

    def with_sensors(self, R: int) -> "SystemSpec":
        """Conserva los primeros R sensores (solo para parámetros constantes)."""
        if R < 1 or R > self.R:
            raise DimensionError(f"R debe estar entre 1 y {self.R}")
        if callable(self.Rvv) or callable(self.Suv) or callable(self.dropout_probs):
            raise DimensionError("with_sensors requiere parámetros de sensores constantes")
        return replace(
            self,
            R=R,
            Rvv=self.Rvv[:R],
            Suv=self.Suv[:R],
            dropout_probs=self.dropout_probs[:R],
        )


def dropout_probabilities(spec: SystemSpec, t: int) -> np.ndarray:
    """
    Probabilidades de llegada (R, 4, n) en el instante t.
    En t=1 el primer paquete siempre se recibe: p=1.
    """
    if t <= 1:
        return np.ones((spec.R, 4, spec.n))
    return spec.probs_at(t)


# TIPOS: PROPIEDAD


@dataclass(frozen=True)
class PropernessClass:
    """Clase de propiedad: k ∈ {1, 2} o None si no es T_k-propio para ningún k."""

    k: Optional[int]


@dataclass(frozen=True)
class PropernessCondition:
    nombre: str
    aprobado: bool
    motivo: str
    detalle: str = ""


@dataclass(frozen=True)
class PropernessReport:
    k: int
    condiciones: tuple

    @property
    def passed(self) -> bool:
        return all(c.aprobado for c in self.condiciones)

    @property
    def reasons(self) -> list:
        return [c.motivo for c in self.condiciones if not c.aprobado]

    def __bool__(self) -> bool:
        return self.passed


def _bloque_pseudo(real: np.ndarray, T: TessarineMatrix, k: int) -> tuple:
    """
    Norma de las pseudo-correlaciones que deben anularse para T_k-propiedad
    y escala de referencia, a partir de una covarianza real 4n×4n.
    """
    n = T.rows // 4
    aumentada = (T @ real @ T.H) * 4.0
    fuera = aumentada[: k * n, k * n:]
    return fuera.max_abs(), aumentada.max_abs()


def _tiempos_verificacion(spec: SystemSpec) -> range:
    return range(0, spec.horizon + 1) if spec.is_time_varying else range(0, 1)


def validate_properness(spec: SystemSpec, k: int) -> PropernessReport:
    """
    Comprueba las condiciones suficientes de T_k-propiedad conjunta.

    Args:
        spec: Sistema a verificar
        k: Orden de propiedad (1 o 2)

    Returns:
        PropernessReport con una condición por requisito
    """
    if k not in (1, 2):
        raise ValueError(f"Orden de propiedad k={k} inválido; use 1 o 2")
    rtol = get_settings().properness_rtol
    T = matrix_T(spec.n)
    etiqueta = f"T{k}"
    condiciones = []

    def agregar(nombre, motivo, fallos):
        condiciones.append(
            PropernessCondition(
                nombre=nombre,
                aprobado=not fallos,
                motivo=motivo,
                detalle="; ".join(fallos[:3]),
            )
        )

    # Matrices de transición
    for j in ((2, 3, 4) if k == 1 else (3, 4)):
        fallos = []
        for t in _tiempos_verificacion(spec):
            Fj = spec.F_at(j, t)
            escala = max(1.0, spec.F_at(1, t).max_abs())
            if Fj.max_abs() > rtol * escala:
                fallos.append(f"t={t}: max|F{j}|={Fj.max_abs():.3e}")
        agregar(f"F{j} = 0", f"F{j} nonzero", fallos)

    # Covarianzas
    def verificar_covarianza(nombre, motivo, obtener, tiempos):
        fallos = []
        for t in tiempos:
            fuera, escala = _bloque_pseudo(obtener(t), T, k)
            if fuera > rtol * max(escala, np.finfo(float).tiny):
                fallos.append(f"t={t}: pseudo-correlación {fuera:.3e}")
        agregar(nombre, motivo, fallos)

    verificar_covarianza(f"x(0) {etiqueta}-propio", f"P0 not {etiqueta}-proper",
                         lambda t: spec.P0, [0])
    verificar_covarianza(f"u {etiqueta}-propio", f"Q not {etiqueta}-proper",
                         spec.Q_at, _tiempos_verificacion(spec))
    for i in range(spec.R):
        verificar_covarianza(f"v{i + 1} {etiqueta}-propio", f"R[{i + 1}] not {etiqueta}-proper",
                             lambda t, i=i: spec.R_at(t)[i], _tiempos_verificacion(spec))
        verificar_covarianza(f"(u, v{i + 1}) {etiqueta}-propios conjuntamente",
                             f"S[{i + 1}] not cross-{etiqueta}-proper",
                             lambda t, i=i: spec.S_at(t)[i], _tiempos_verificacion(spec))

    # Probabilidades de llegada
    fallos = []
    for t in _tiempos_verificacion(spec):
        if spec.is_time_varying and t < 2:
            continue
        p = spec.probs_at(max(t, 2))
        if k == 1:
            malos = np.ptp(p, axis=1) > 0.0
        else:
            malos = (p[:, 0] != p[:, 2]) | (p[:, 1] != p[:, 3])
        if np.any(malos):
            sensor, j = np.argwhere(malos)[0]
            fallos.append(f"t={t}: sensor {sensor + 1}, componente {j + 1}")
    agregar(
        f"probabilidades {etiqueta}-compatibles",
        f"dropout probabilities not {etiqueta}-compatible",
        fallos,
    )

    reporte = PropernessReport(k=k, condiciones=tuple(condiciones))
    logger.debug("Propiedad %s de '%s': %s", etiqueta, spec.name, "sí" if reporte else reporte.reasons)
    return reporte


def properness_class(spec: SystemSpec) -> PropernessClass:
    """El menor k para el que el sistema es T_k-propio."""
    for k in (1, 2):
        if validate_properness(spec, k).passed:
            return PropernessClass(k)
    return PropernessClass(None)


def require_properness(spec: SystemSpec, k: int) -> PropernessReport:
    reporte = validate_properness(spec, k)
    if not reporte.passed:
        raise PropernessError(
            f"El sistema '{spec.name}' no es T{k}-propio: {', '.join(reporte.reasons)}",
            reporte,
        )
    return reporte


# MATRICES DE TRANSICIÓN


def build_stacked_phi(spec: SystemSpec, t: int) -> TessarineMatrix:
    """Φ̄(t): transición del vector aumentado [x, x*, x^η, x^η″]."""
    F1, F2, F3, F4 = (spec.F_at(j, t) for j in (1, 2, 3, 4))

    def c(M, kind):
        return M.conjugate(kind)

    return block(
        [
            [F1, F2, F3, F4],
            [c(F2, "star"), c(F1, "star"), c(F4, "star"), c(F3, "star")],
            [c(F3, "eta"), c(F4, "eta"), c(F1, "eta"), c(F2, "eta")],
            [c(F4, "eta_pp"), c(F3, "eta_pp"), c(F2, "eta_pp"), c(F1, "eta_pp")],
        ]
    )


def real_transition(spec: SystemSpec, t: int) -> np.ndarray:
    """Matriz real 4n×4n con x^r(t+1) = A(t)·x^r(t) + u^r(t)."""
    n = spec.n
    A = np.zeros((4 * n, 4 * n))
    for j, kind in zip((1, 2, 3, 4), ORDEN_AUMENTADO):
        signos = np.kron(np.diag(SIGNOS_CONJUGACION[kind]), np.eye(n))
        A += spec.F_at(j, t).real_representation() @ signos
    return A


def reduced_phi(spec: SystemSpec, t: int, k: int) -> TessarineMatrix:
    """
    Φ_k(t): F1 para k=1, [[F1, F2], [F2*, F1*]] para k=2 y Φ̄ para k=4.

    Raises:
        PropernessError: Si las F que deben anularse no son nulas
    """
    if k == 4:
        return build_stacked_phi(spec, t)
    rtol = get_settings().properness_rtol
    F1, F2, F3, F4 = (spec.F_at(j, t) for j in (1, 2, 3, 4))
    escala = max(1.0, F1.max_abs())
    nulas = (F2, F3, F4) if k == 1 else (F3, F4)
    for j, Fj in zip(range(5 - len(nulas), 5), nulas):
        if Fj.max_abs() > rtol * escala:
            raise PropernessError(f"F{j} nonzero en t={t}: Φ_{k} no está definida")
    if k == 1:
        return F1
    if k == 2:
        return block([[F1, F2], [F2.conjugate("star"), F1.conjugate("star")]])
    raise ValueError(f"Orden de propiedad k={k} inválido")


# TIPOS: PROBABILIDADES


@dataclass(frozen=True)
class PiMatrices:
    """
    Matrices de probabilidad y momentos de Bernoulli en el instante t.

    Los vectores γ⃗^r se ordenan por sensor, luego por parte y luego por
    componente (índice i·4n + ν·n + j).
    """

    t: int
    k: int
    probabilities: np.ndarray
    pi_k: tuple
    pi_k_stacked: np.ndarray
    pibar: TessarineMatrix
    pibar_gamma: TessarineMatrix
    pibar_oneminus: TessarineMatrix
    gamma_mean: np.ndarray
    gamma_cov: np.ndarray
    gamma_second: np.ndarray
    gamma_cross_oneminus: np.ndarray
    oneminus_second: np.ndarray


def _pi_sensor(p: np.ndarray, k: int, T: TessarineMatrix) -> np.ndarray:
    if k == 1:
        return np.diag(p[0])
    if k == 2:
        Pa = np.diag(p[0] + p[1])
        Pb = np.diag(p[0] - p[1])
        return 0.5 * np.block([[Pa, Pb], [Pb, Pa]])
    return (T @ np.diag(p.reshape(-1)) @ T.H).r


def bernoulli_moments(p: np.ndarray) -> dict:
    """E[γγᵀ], Cov(γ), E[γ(1−γ)ᵀ] y E[(1−γ)(1−γ)ᵀ] para partes independientes."""
    q = 1.0 - p
    var = p * q
    cruzado = np.outer(p, q)
    np.fill_diagonal(cruzado, 0.0)
    return {
        "gamma_cov": np.diag(var),
        "gamma_second": np.outer(p, p) + np.diag(p - p * p),
        "gamma_cross_oneminus": cruzado,
        "oneminus_second": np.outer(q, q) + np.diag(var),
    }


def pi_matrices(spec: SystemSpec, t: int, k: int) -> PiMatrices:
    """
    Π_k(t), Π̄(t) y los momentos de γ⃗^r(t).

    Raises:
        ProbabilityError: Si alguna probabilidad está fuera de [0, 1]
        PropernessError: Si las probabilidades no son compatibles con k
    """
    p = dropout_probabilities(spec, t)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ProbabilityError(f"Probabilidades fuera de [0, 1] en t={t}")
    if k == 1 and np.any(np.ptp(p, axis=1) > 0.0):
        raise PropernessError(f"Probabilidades no compatibles con T1 en t={t}")
    if k == 2 and (np.any(p[:, 0] != p[:, 2]) or np.any(p[:, 1] != p[:, 3])):
        raise PropernessError(f"Probabilidades no compatibles con T2 en t={t}")

    estructura = build_structural(spec.n, spec.R, k)
    T = estructura.T
    pi_k = tuple(_pi_sensor(p[i], k, T) for i in range(spec.R))
    p_vec = p.reshape(-1)
    Upsilon = estructura.Upsilon
    pibar = Upsilon @ np.diag(p_vec) @ Upsilon.H
    pibar_oneminus = Upsilon @ np.diag(1.0 - p_vec) @ Upsilon.H
    filas = _filas_reducidas(spec.n, spec.R, k)
    return PiMatrices(
        t=t,
        k=k,
        probabilities=p,
        pi_k=pi_k,
        pi_k_stacked=block_diag_real(*pi_k),
        pibar=pibar,
        pibar_gamma=pibar[filas, :],
        pibar_oneminus=pibar_oneminus[filas, :],
        gamma_mean=p_vec,
        **bernoulli_moments(p_vec),
    )


# COVARIANZAS CONJUNTAS Y SIMULACIÓN


def psd_factor(M: np.ndarray, bloque: str, clip: Optional[float] = None) -> np.ndarray:
    """
    Factor F con F·Fᵀ = M para una matriz simétrica semidefinida positiva,
    recortando autovalores negativos de redondeo.

    Raises:
        CovarianceError: Si M no es simétrica o tiene un autovalor
            claramente negativo
    """
    clip = get_settings().psd_clip if clip is None else clip
    M = np.asarray(M, dtype=float)
    escala = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * escala):
        raise CovarianceError(f"La covarianza {bloque} no es simétrica", bloque)
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    if w.size and float(np.min(w)) < -clip * escala:
        raise CovarianceError(
            f"La covarianza {bloque} no es semidefinida positiva (autovalor {np.min(w):.3e})",
            bloque,
        )
    return V * np.sqrt(np.clip(w, 0.0, None))


def joint_noise_covariance(spec: SystemSpec, t: int) -> np.ndarray:
    """Covarianza real de (u^r(t), v^{(1)r}(t), …, v^{(R)r}(t))."""
    Q = spec.Q_at(t)
    S = spec.stacked_S(t)
    return np.block([[Q, S], [S.T, spec.stacked_R(t)]])


def _factor_ruido(spec: SystemSpec, t: int) -> np.ndarray:
    try:
        return psd_factor(joint_noise_covariance(spec, t), "(u, v)")
    except CovarianceError:
        # Localizar el bloque responsable
        Q = spec.Q_at(t)
        psd_factor(Q, "Q")
        for i, (Ri, Si) in enumerate(zip(spec.R_at(t), spec.S_at(t))):
            psd_factor(Ri, f"R[{i + 1}]")
            psd_factor(np.block([[Q, Si], [Si.T, Ri]]), f"(u, v{i + 1})")
        raise


def check_covariances(spec: SystemSpec) -> None:
    """Verifica P0 y la covarianza conjunta de ruidos en los instantes relevantes."""
    psd_factor(spec.P0, "P0")
    for t in (range(0, spec.horizon + 1) if spec.is_time_varying else [0]):
        _factor_ruido(spec, t)


@dataclass(frozen=True)
class Trajectory:
    """
    Una realización (o un lote, con un eje inicial de corridas).

    Todos los arreglos se indexan por t = 0..horizon con las partes reales en
    el penúltimo eje: states (T+1, 4, n), measurements (T+1, R, 4, n), etc.
    Las entradas de t=0 de las magnitudes de sensor no se usan (ceros).
    """

    states: np.ndarray
    measurements: np.ndarray
    u: np.ndarray
    v: np.ndarray
    gammas: np.ndarray
    observations: np.ndarray

    def state(self, t: int) -> TessarineMatrix:
        return TessarineMatrix.from_real_components(self.states[..., t, :, :])

    def observation(self, t: int, i: int) -> TessarineMatrix:
        return TessarineMatrix.from_real_components(self.observations[..., t, i, :, :])


def simulate_trajectory(spec: SystemSpec, seed) -> Trajectory:
    """
    Simula estado, medidas y observaciones disponibles.

    (u(t), v⁽¹⁾(t), …, v⁽ᴿ⁾(t)) es gaussiano conjunto y blanco en el tiempo;
    las partes de γ⁽ⁱ⁾(t) son Bernoulli independientes.

    Args:
        spec: Sistema a simular
        seed: Semilla (entero o secuencia de enteros) del generador

    Raises:
        CovarianceError: Si la covarianza conjunta no es semidefinida positiva
    """
    rng = np.random.default_rng(seed)
    n, R, T = spec.n, spec.R, spec.horizon
    d = 4 * n
    fijo = not spec.is_time_varying

    x = np.zeros((T + 1, d))
    u = np.zeros((T + 1, d))
    v = np.zeros((T + 1, R, d))
    z = np.zeros((T + 1, R, d))
    y = np.zeros((T + 1, R, d))
    gam = np.zeros((T + 1, R, d))

    x[0] = psd_factor(spec.P0, "P0") @ rng.standard_normal(d)
    u[0] = psd_factor(spec.Q_at(0), "Q") @ rng.standard_normal(d)

    factor = _factor_ruido(spec, 1) if fijo else None
    A = real_transition(spec, 0) if fijo else None
    for t in range(1, T + 1):
        F_t = factor if fijo else _factor_ruido(spec, t)
        ruido = F_t @ rng.standard_normal(d * (1 + R))
        u[t] = ruido[:d]
        v[t] = ruido[d:].reshape(R, d)
        A_t = A if fijo else real_transition(spec, t - 1)
        x[t] = A_t @ x[t - 1] + u[t - 1]
        z[t] = x[t] + v[t]
        if t == 1:
            gam[t] = 1.0
            y[t] = z[t]
        else:
            p = dropout_probabilities(spec, t).reshape(R, d)
            gam[t] = (rng.random((R, d)) < p).astype(float)
            y[t] = gam[t] * z[t] + (1.0 - gam[t]) * y[t - 1]

    def partes(a):
        return a.reshape(a.shape[:-1] + (4, n))

    return Trajectory(
        states=partes(x),
        measurements=partes(z),
        u=partes(u),
        v=partes(v),
        gammas=partes(gam),
        observations=partes(y),
    )


def simulate_batch(spec: SystemSpec, runs: int, seed) -> Trajectory:
    """
    Lote de trayectorias independientes; la corrida r usa la semilla (seed, r).
    """
    if runs < 1:
        raise ValueError("El número de corridas debe ser al menos 1")
    base = tuple(np.atleast_1d(seed).tolist())
    corridas = [simulate_trajectory(spec, base + (r,)) for r in range(runs)]
    return Trajectory(
        **{
            nombre: np.stack([getattr(c, nombre) for c in corridas])
            for nombre in ("states", "measurements", "u", "v", "gammas", "observations")
        }
    )


# OBSERVACIONES


def _filas_reducidas(n: int, R: int, k: int) -> np.ndarray:
    """Índices de las primeras kn componentes aumentadas de cada sensor."""
    return np.concatenate([i * 4 * n + np.arange(k * n) for i in range(R)])


def stacked_augmented(observaciones: np.ndarray, kinds: Sequence[str] = ORDEN_AUMENTADO) -> TessarineMatrix:
    """
    Observación aumentada apilada y⃗ (4nR) a partir de partes reales
    (..., R, 4, n). Con kinds parcial se obtiene directamente Δ_k·y⃗.
    """
    obs = np.asarray(observaciones, dtype=float)
    if obs.ndim < 3 or obs.shape[-2] != 4:
        raise DimensionError(f"Se esperaban observaciones (..., R, 4, n), no {obs.shape}")
    comp = np.moveaxis(obs, -2, 0)
    forma = (4,) + (1,) * (comp.ndim - 1)
    aumentada = np.stack(
        [comp * SIGNOS_CONJUGACION[kind].reshape(forma) for kind in kinds], axis=-2
    )
    return TessarineMatrix(aumentada.reshape(aumentada.shape[:-3] + (-1, 1)))


def reduce_observation(y_full: TessarineMatrix, k: int, *, n: int) -> TessarineMatrix:
    """
    y_k = Δ_k·y⃗: primeras kn componentes aumentadas de cada sensor.

    Raises:
        DimensionError: Si la longitud de y_full no es múltiplo de 4n
    """
    if y_full.cols != 1 or y_full.rows % (4 * n) != 0:
        raise DimensionError(
            f"La observación apilada debe ser un vector de longitud 4nR (n={n}), no {y_full.shape}"
        )
    if k == 4:
        return y_full
    R = y_full.rows // (4 * n)
    return y_full[_filas_reducidas(n, R, k), :]


def observation_vector(observaciones: np.ndarray, k: int) -> TessarineMatrix:
    """y_k(t) a partir de las partes reales (..., R, 4, n) de las observaciones."""
    if k not in (1, 2, 4):
        raise ValueError(f"Orden k={k} inválido")
    return stacked_augmented(observaciones, ORDEN_AUMENTADO[:k])


# CONSTRUCTORES AUXILIARES


def block_pattern(a: float, b: float, c: float) -> np.ndarray:
    """Covarianza real 4×4 [[a,0,c,0],[0,b,0,c],[c,0,a,0],[0,c,0,b]]."""
    return np.array(
        [
            [a, 0.0, c, 0.0],
            [0.0, b, 0.0, c],
            [c, 0.0, a, 0.0],
            [0.0, c, 0.0, b],
        ]
    )


def correlated_noise_from_gain(Q: np.ndarray, alphas: Sequence[float], betas: Sequence[float]):
    """
    Covarianzas implicadas por v⁽ⁱ⁾ = α_i·u + w⁽ⁱ⁾ con Cov(w⁽ⁱ⁾) = β_i·I:
    S⁽ⁱ⁾ = α_i·Q y R⁽ⁱ⁾ = α_i²·Q + β_i·I.
    """
    if len(alphas) != len(betas):
        raise DimensionError("alphas y betas deben tener la misma longitud")
    Q = np.asarray(Q, dtype=float)
    identidad = np.eye(Q.shape[0])
    S = tuple(a * Q for a in alphas)
    R = tuple(a * a * Q + b * identidad for a, b in zip(alphas, betas))
    return S, R
