"""
Álgebra de tesarinas.

Escalares, matrices densas, conjugaciones, vector aumentado y las matrices
estructurales (𝒯, 𝒜, ℬ_k, Υ, Υ_k, Δ_k, 𝒞, 𝒞_k) que usa el filtro.

Convenciones:
    - Un vector real asociado x^r apila las partes (x_r, x_η, x_η′, x_η″),
      cada una de longitud n (orden "componente mayor").
    - Las matrices guardan sus cuatro componentes reales con forma
      (4, ..., filas, columnas); los ejes intermedios permiten lotes.
    - El producto se calcula en la representación idempotente: con
      z1 = x_r + i·x_η y z2 = x_η′ + i·x_η″, la tesarina equivale al par
      complejo (z1 + z2, z1 − z2) y el producto es componente a componente.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from fusion_tesarina.errores import CovarianceError, DimensionError

logger = logging.getLogger(__name__)


# Patrones de signo sobre (r, η, η′, η″)
SIGNOS_CONJUGACION = {
    "identity": np.array([1.0, 1.0, 1.0, 1.0]),
    "star": np.array([1.0, -1.0, 1.0, -1.0]),
    "eta": np.array([1.0, 1.0, -1.0, -1.0]),
    "eta_pp": np.array([1.0, -1.0, -1.0, 1.0]),
}

# Orden de los bloques del vector aumentado: x, x*, x^η, x^η″
ORDEN_AUMENTADO = ("identity", "star", "eta", "eta_pp")

ORDENES_VALIDOS = (1, 2, 4)


def left_matrix(a: Sequence[float]) -> np.ndarray:
    """
    Matriz real 4×4 de la multiplicación por la izquierda de la tesarina a.

    Cumple real(a·b) = left_matrix(a) @ real(b).
    """
    a0, a1, a2, a3 = (float(v) for v in a)
    return np.array(
        [
            [a0, -a1, a2, -a3],
            [a1, a0, a3, a2],
            [a2, -a3, a0, -a1],
            [a3, a2, a1, a0],
        ]
    )


# L(1), L(η), L(η′), L(η″)
UNIDADES_IZQUIERDA = np.stack([left_matrix(e) for e in np.eye(4)])


def _producto_componentes(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tabla de multiplicación aplicada a arreglos con las partes en el eje 0."""
    a0, a1, a2, a3 = a
    b0, b1, b2, b3 = b
    return np.stack(
        [
            a0 * b0 - a1 * b1 + a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 + a3 * b2,
            a0 * b2 + a2 * b0 - a1 * b3 - a3 * b1,
            a0 * b3 + a3 * b0 + a1 * b2 + a2 * b1,
        ]
    )


def _alinear_lotes(a: np.ndarray, b: np.ndarray):
    """Inserta ejes de lote unitarios tras el eje 0 del operando con menos ejes."""
    if a.ndim < b.ndim:
        a = a.reshape(a.shape[:1] + (1,) * (b.ndim - a.ndim) + a.shape[1:])
    elif b.ndim < a.ndim:
        b = b.reshape(b.shape[:1] + (1,) * (a.ndim - b.ndim) + b.shape[1:])
    return a, b


def _signos(kind: str) -> np.ndarray:
    try:
        return SIGNOS_CONJUGACION[kind]
    except KeyError:
        raise ValueError(
            f"Conjugación desconocida '{kind}'. Use una de {list(SIGNOS_CONJUGACION)}"
        ) from None


# TIPOS: ESCALAR


@dataclass(frozen=True)
class Tessarine:
    """Tesarina r + η·e + η′·ep + η″·epp con partes reales."""

    r: float = 0.0
    e: float = 0.0
    ep: float = 0.0
    epp: float = 0.0

    @classmethod
    def from_array(cls, valores: Iterable[float]) -> "Tessarine":
        r, e, ep, epp = (float(v) for v in valores)
        return cls(r, e, ep, epp)

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.e, self.ep, self.epp])

    def __add__(self, other: "Tessarine") -> "Tessarine":
        return Tessarine.from_array(self.as_array() + other.as_array())

    def __sub__(self, other: "Tessarine") -> "Tessarine":
        return Tessarine.from_array(self.as_array() - other.as_array())

    def __neg__(self) -> "Tessarine":
        return Tessarine.from_array(-self.as_array())

    def __mul__(self, other):
        if isinstance(other, Tessarine):
            return tess_mul(self, other)
        return Tessarine.from_array(self.as_array() * float(other))

    __rmul__ = __mul__

    def conjugate(self, kind: str = "star") -> "Tessarine":
        return Tessarine.from_array(self.as_array() * _signos(kind))

    def isclose(self, other: "Tessarine", atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.as_array(), other.as_array(), rtol=0.0, atol=atol))


def tess_mul(a: Tessarine, b: Tessarine) -> Tessarine:
    """
    Producto de dos tesarinas según la tabla η·η′ = η″, η′·η″ = η,
    η″·η = −η′, η² = η″² = −1, η′² = 1. Es conmutativo.
    """
    return Tessarine.from_array(_producto_componentes(a.as_array(), b.as_array()))


# TIPOS: MATRIZ


class TessarineMatrix:
    """
    Matriz densa de tesarinas, inmutable.

    Se construye a partir de las cuatro componentes reales o del par
    idempotente; la otra representación se calcula al pedirla y se guarda.
    Las operaciones lineales conservan la representación de origen, así que
    ida y vuelta por componentes es exacta.
    """

    __slots__ = ("_comp", "_par")
    # ndarray @ TessarineMatrix delega en __rmatmul__
    __array_ufunc__ = None

    def __init__(self, components=None, *, pair=None):
        self._comp = None
        self._par = None
        if components is not None:
            comp = np.asarray(components, dtype=float)
            if comp.ndim < 3 or comp.shape[0] != 4:
                raise DimensionError(
                    f"Se esperaban componentes con forma (4, ..., filas, columnas), no {comp.shape}"
                )
            self._comp = comp
        elif pair is not None:
            par = np.asarray(pair, dtype=complex)
            if par.ndim < 3 or par.shape[0] != 2:
                raise DimensionError(
                    f"Se esperaba un par con forma (2, ..., filas, columnas), no {par.shape}"
                )
            self._par = par
        else:
            raise DimensionError("Debe indicarse components o pair")

    # Constructores

    @classmethod
    def from_pair(cls, pair) -> "TessarineMatrix":
        return cls(pair=pair)

    @classmethod
    def from_real(cls, matriz) -> "TessarineMatrix":
        """Matriz real vista como tesarina (partes imaginarias nulas)."""
        m = np.asarray(matriz, dtype=float)
        if m.ndim == 1:
            m = m[:, None]
        comp = np.zeros((4,) + m.shape)
        comp[0] = m
        return cls(comp)

    @classmethod
    def zeros(cls, filas: int, columnas: int) -> "TessarineMatrix":
        return cls(np.zeros((4, filas, columnas)))

    @classmethod
    def identity(cls, n: int) -> "TessarineMatrix":
        return cls.from_real(np.eye(n))

    @classmethod
    def from_tessarines(cls, filas: Sequence[Sequence[Tessarine]]) -> "TessarineMatrix":
        """Construye la matriz a partir de sus entradas por filas."""
        datos = np.array([[t.as_array() for t in fila] for fila in filas], dtype=float)
        if datos.ndim != 3:
            raise DimensionError("Todas las filas deben tener la misma longitud")
        return cls(np.moveaxis(datos, -1, 0))

    @classmethod
    def from_real_components(cls, arreglo) -> "TessarineMatrix":
        """
        Vector columna (o lote de vectores) desde un arreglo real (..., 4, n).
        """
        a = np.asarray(arreglo, dtype=float)
        if a.ndim < 2 or a.shape[-2] != 4:
            raise DimensionError(f"Se esperaba un arreglo (..., 4, n), no {a.shape}")
        return cls(np.moveaxis(a, -2, 0)[..., None])

    # Representaciones

    @property
    def components(self) -> np.ndarray:
        if self._comp is None:
            mas, menos = self._par[0], self._par[1]
            z1 = 0.5 * (mas + menos)
            z2 = 0.5 * (mas - menos)
            self._comp = np.stack([z1.real, z1.imag, z2.real, z2.imag])
        return self._comp

    @property
    def pair(self) -> np.ndarray:
        if self._par is None:
            c = self._comp
            z1 = c[0] + 1j * c[1]
            z2 = c[2] + 1j * c[3]
            self._par = np.stack([z1 + z2, z1 - z2])
        return self._par

    @property
    def shape(self) -> tuple:
        base = self._comp if self._comp is not None else self._par
        return base.shape[1:]

    @property
    def rows(self) -> int:
        return self.shape[-2]

    @property
    def cols(self) -> int:
        return self.shape[-1]

    @property
    def r(self) -> np.ndarray:
        return self.components[0]

    @property
    def e(self) -> np.ndarray:
        return self.components[1]

    @property
    def ep(self) -> np.ndarray:
        return self.components[2]

    @property
    def epp(self) -> np.ndarray:
        return self.components[3]

    def entry(self, i: int, j: int) -> Tessarine:
        return Tessarine.from_array(self.components[:, i, j])

    def to_real_components(self) -> np.ndarray:
        """Para vectores columna: arreglo real (..., 4, n)."""
        if self.cols != 1:
            raise DimensionError("to_real_components requiere un vector columna")
        return np.moveaxis(self.components[..., 0], 0, -2)

    # Operaciones lineales

    def _mapear(self, funcion) -> "TessarineMatrix":
        if self._comp is not None:
            return TessarineMatrix(funcion(self._comp))
        return TessarineMatrix(pair=funcion(self._par))

    def _combinar(self, other: "TessarineMatrix", funcion) -> "TessarineMatrix":
        if self._comp is not None and other._comp is not None:
            return TessarineMatrix(funcion(*_alinear_lotes(self._comp, other._comp)))
        return TessarineMatrix(pair=funcion(*_alinear_lotes(self.pair, other.pair)))

    @staticmethod
    def _como_tesarina(other) -> "TessarineMatrix":
        if isinstance(other, TessarineMatrix):
            return other
        return TessarineMatrix.from_real(other)

    def _verificar_forma(self, other: "TessarineMatrix", operacion: str) -> None:
        if self.shape[-2:] != other.shape[-2:]:
            raise DimensionError(
                f"{operacion}: formas incompatibles {self.shape} y {other.shape}"
            )

    def __add__(self, other) -> "TessarineMatrix":
        other = self._como_tesarina(other)
        self._verificar_forma(other, "suma")
        return self._combinar(other, np.add)

    __radd__ = __add__

    def __sub__(self, other) -> "TessarineMatrix":
        other = self._como_tesarina(other)
        self._verificar_forma(other, "resta")
        return self._combinar(other, np.subtract)

    def __rsub__(self, other) -> "TessarineMatrix":
        return self._como_tesarina(other) - self

    def __neg__(self) -> "TessarineMatrix":
        return self._mapear(np.negative)

    def __mul__(self, other) -> "TessarineMatrix":
        """Escala por un real, por una tesarina o entrada a entrada por una máscara real."""
        if isinstance(other, Tessarine):
            escalar = TessarineMatrix(other.as_array().reshape(4, 1, 1))
            return TessarineMatrix(pair=self.pair * escalar.pair)
        if isinstance(other, TessarineMatrix):
            raise TypeError("Use @ para el producto matricial o star_product para el producto ⋆")
        return self._mapear(lambda a: a * np.asarray(other, dtype=float))

    __rmul__ = __mul__

    def hadamard(self, mascara) -> "TessarineMatrix":
        """Producto entrada a entrada con una matriz real."""
        mascara = np.asarray(mascara, dtype=float)
        if mascara.shape[-2:] != self.shape[-2:]:
            raise DimensionError(
                f"Hadamard: máscara {mascara.shape} y matriz {self.shape} incompatibles"
            )
        return self._mapear(lambda a: a * mascara)

    def __matmul__(self, other) -> "TessarineMatrix":
        izquierdo = self.pair
        if isinstance(other, TessarineMatrix):
            izquierdo, derecho = _alinear_lotes(izquierdo, other.pair)
        else:
            derecho = np.asarray(other, dtype=float)
        if self.cols != derecho.shape[-2]:
            raise DimensionError(
                f"Producto: {self.shape} por {derecho.shape[-2:]} no es compatible"
            )
        return TessarineMatrix(pair=izquierdo @ derecho)

    def __rmatmul__(self, other) -> "TessarineMatrix":
        izquierdo = np.asarray(other, dtype=float)
        if izquierdo.shape[-1] != self.rows:
            raise DimensionError(
                f"Producto: {izquierdo.shape} por {self.shape} no es compatible"
            )
        if self._comp is not None:
            return TessarineMatrix(izquierdo @ self._comp)
        return TessarineMatrix(pair=izquierdo @ self._par)

    def __getitem__(self, clave) -> "TessarineMatrix":
        """Indexa los dos ejes matriciales, p. ej. M[:n, :n]."""
        if not isinstance(clave, tuple):
            clave = (clave,)
        if len(clave) == 1:
            clave = clave + (slice(None),)
        indice = (slice(None), Ellipsis) + clave
        return self._mapear(lambda a: a[indice])

    @property
    def T(self) -> "TessarineMatrix":
        return self._mapear(lambda a: np.swapaxes(a, -1, -2))

    @property
    def H(self) -> "TessarineMatrix":
        """Traspuesta hermítica: traspuesta con la conjugación *."""
        return self.conjugate("star").T

    def conjugate(self, kind: str = "star") -> "TessarineMatrix":
        """Conjugación entrada a entrada ('star', 'eta' o 'eta_pp')."""
        signos = _signos(kind)
        if self._comp is not None or kind == "identity":
            forma = (4,) + (1,) * (self.components.ndim - 1)
            return TessarineMatrix(self.components * signos.reshape(forma))
        mas, menos = self._par[0], self._par[1]
        if kind == "star":
            return TessarineMatrix(pair=np.stack([np.conj(mas), np.conj(menos)]))
        if kind == "eta":
            return TessarineMatrix(pair=np.stack([menos, mas]))
        return TessarineMatrix(pair=np.stack([np.conj(menos), np.conj(mas)]))

    def hermitize(self) -> "TessarineMatrix":
        """(M + Mᴴ)/2."""
        return (self + self.H) * 0.5

    def real_representation(self) -> np.ndarray:
        """
        Matriz real χ(M) de tamaño 4·filas × 4·columnas tal que
        real_vector(M·x) = χ(M)·real_vector(x).
        """
        if self.components.ndim != 3:
            raise DimensionError("real_representation no admite lotes")
        return sum(np.kron(UNIDADES_IZQUIERDA[nu], self.components[nu]) for nu in range(4))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.components))) if self.components.size else 0.0

    def allclose(self, other, atol: float = 1e-12) -> bool:
        other = self._como_tesarina(other)
        if self.shape != other.shape:
            return False
        return bool(np.allclose(self.components, other.components, rtol=0.0, atol=atol))

    def is_hermitian(self, atol: float = 1e-9) -> bool:
        return self.allclose(self.H, atol=atol)

    def __repr__(self) -> str:
        return f"TessarineMatrix(shape={self.shape})"


# UTILIDADES DE BLOQUES


def _concatenar(matrices: Sequence[TessarineMatrix], eje: int) -> TessarineMatrix:
    if all(m._comp is not None for m in matrices):
        return TessarineMatrix(np.concatenate([m._comp for m in matrices], axis=eje))
    return TessarineMatrix(pair=np.concatenate([m.pair for m in matrices], axis=eje))


def vstack(matrices: Sequence[TessarineMatrix]) -> TessarineMatrix:
    return _concatenar(matrices, -2)


def hstack(matrices: Sequence[TessarineMatrix]) -> TessarineMatrix:
    return _concatenar(matrices, -1)


def block(filas: Sequence[Sequence[TessarineMatrix]]) -> TessarineMatrix:
    return vstack([hstack(fila) for fila in filas])


def block_diag(matrices: Sequence[TessarineMatrix]) -> TessarineMatrix:
    filas = []
    for i, m in enumerate(matrices):
        fila = []
        for j, otra in enumerate(matrices):
            fila.append(m if i == j else TessarineMatrix.zeros(m.rows, otra.cols))
        filas.append(fila)
    return block(filas)


def kron(a, b) -> TessarineMatrix:
    """Producto de Kronecker entre una matriz real y una tesarina (en cualquier orden)."""
    if isinstance(a, TessarineMatrix) and isinstance(b, TessarineMatrix):
        raise TypeError("kron entre dos matrices tesarinas no está soportado")
    if isinstance(a, TessarineMatrix):
        real = np.asarray(b, dtype=float)
        return a._mapear(lambda c: np.stack([np.kron(parte, real) for parte in c]))
    real = np.asarray(a, dtype=float)
    return b._mapear(lambda c: np.stack([np.kron(real, parte) for parte in c]))


# OPERACIONES SOBRE VECTORES


def conjugate(x: TessarineMatrix, kind: str = "star") -> TessarineMatrix:
    """Conjugación con patrón de signos star (+,−,+,−), eta (+,+,−,−) o eta_pp (+,−,−,+)."""
    return x.conjugate(kind)


def star_product(x: TessarineMatrix, y: TessarineMatrix) -> TessarineMatrix:
    """
    Producto ⋆: Hadamard dentro de cada una de las cuatro partes reales,
    sin mezclar partes.
    """
    if x.shape != y.shape:
        raise DimensionError(f"star_product: longitudes distintas {x.shape} y {y.shape}")
    return TessarineMatrix(x.components * y.components)


def augment(x: TessarineMatrix) -> TessarineMatrix:
    """Vector aumentado [x, x*, x^η, x^η″]."""
    return vstack([x.conjugate(kind) for kind in ORDEN_AUMENTADO])


def real_vector(x: TessarineMatrix) -> np.ndarray:
    """Vector real asociado (x_r, x_η, x_η′, x_η″) de longitud 4n."""
    comp = x.to_real_components()
    return comp.reshape(comp.shape[:-2] + (-1,))


def from_real_vector(v, n: int) -> TessarineMatrix:
    """Inversa de real_vector."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 4 * n:
        raise DimensionError(f"Se esperaba un vector real de longitud {4 * n}")
    return TessarineMatrix.from_real_components(v.reshape(v.shape[:-1] + (4, n)))


# MATRICES ESTRUCTURALES


def matrix_A() -> TessarineMatrix:
    """𝒜: filas (1,η,η′,η″), (1,−η,η′,−η″), (1,η,−η′,−η″), (1,−η,−η′,η″)."""
    comp = np.zeros((4, 4, 4))
    for a, kind in enumerate(ORDEN_AUMENTADO):
        for nu in range(4):
            comp[nu, a, nu] = SIGNOS_CONJUGACION[kind][nu]
    return TessarineMatrix(comp)


def matrix_T(n: int) -> TessarineMatrix:
    """𝒯 = ½ 𝒜 ⊗ I_n, de modo que augment(x) = 2𝒯·real_vector(x)."""
    return kron(matrix_A(), np.eye(n)) * 0.5


@dataclass(frozen=True)
class StructuralMatrices:
    """Matrices fijas que dependen solo de (n, R, k)."""

    n: int
    R: int
    k: int
    T: TessarineMatrix
    A: TessarineMatrix
    Bk: TessarineMatrix
    Tk: TessarineMatrix
    Upsilon: TessarineMatrix
    UpsilonK: TessarineMatrix
    DeltaK: np.ndarray
    C: np.ndarray
    Ck: np.ndarray


def build_structural(n: int, R: int, k: int) -> StructuralMatrices:
    """
    Construye 𝒯, 𝒜, ℬ_k, 𝒯_k, Υ, Υ_k, Δ_k, 𝒞 y 𝒞_k.

    k=4 corresponde al procesamiento amplio-lineal completo (Δ = I).

    Raises:
        DimensionError: Si n o R no son positivos
        ValueError: Si k no es 1, 2 o 4
    """
    if n < 1 or R < 1:
        raise DimensionError(f"n y R deben ser positivos (n={n}, R={R})")
    if k not in ORDENES_VALIDOS:
        raise ValueError(f"Orden de propiedad k={k} inválido; use 1 o 2")

    A = matrix_A()
    T = matrix_T(n)
    kn = k * n
    Tk = T[:kn, :]
    selector = np.hstack([np.eye(kn), np.zeros((kn, (4 - k) * n))])
    return StructuralMatrices(
        n=n,
        R=R,
        k=k,
        T=T,
        A=A,
        Bk=A[:k, :],
        Tk=Tk,
        Upsilon=kron(np.eye(R), T),
        UpsilonK=kron(np.eye(R), Tk),
        DeltaK=np.kron(np.eye(R), selector),
        C=np.kron(np.ones((R, 1)), np.eye(4 * n)),
        Ck=np.kron(np.ones((R, 1)), np.eye(kn)),
    )


# PUENTE CON LA REPRESENTACIÓN REAL


def augmented_covariance(real, izquierda: TessarineMatrix, derecha: TessarineMatrix) -> TessarineMatrix:
    """
    Pseudo-covarianza aumentada 4·L·M·Rᴴ a partir de una covarianza real M
    (p. ej. Γ_x̄ = 4𝒯Σ𝒯ᴴ o S⃗ = 4𝒯SΥᴴ).
    """
    return (izquierda @ np.asarray(real, dtype=float) @ derecha.H) * 4.0


def real_covariance(aumentada: TessarineMatrix, izquierda: TessarineMatrix,
                    derecha: TessarineMatrix) -> np.ndarray:
    """Inversa de augmented_covariance: ¼·Lᴴ·Γ·R, parte real."""
    return ((izquierda.H @ aumentada @ derecha) * 0.25).r


def expand_proper(P: TessarineMatrix, k: int) -> TessarineMatrix:
    """
    Reconstruye la pseudo-covarianza aumentada 4n×4n a partir del bloque
    reducido kn×kn, suponiendo T_k-propiedad.
    """
    if k == 1:
        return block_diag([P, P.conjugate("star"), P.conjugate("eta"), P.conjugate("eta_pp")])
    if k == 2:
        return block_diag([P, P.conjugate("eta")])
    if k == 4:
        return P
    raise ValueError(f"Orden de propiedad k={k} inválido")


def real_error_covariance(P: TessarineMatrix, k: int) -> np.ndarray:
    """
    Covarianza real 4n×4n equivalente a una pseudo-covarianza reducida
    T_k-propia. Admite lotes (p. ej. todos los instantes de una corrida).
    """
    if k not in ORDENES_VALIDOS:
        raise ValueError(f"Orden de propiedad k={k} inválido")
    a, b = P.pair
    # Partes del par de P, P*, P^η y P^η″ en el orden de expand_proper
    if k == 1:
        bloques = ((a, b), (np.conj(a), np.conj(b)), (b, a), (np.conj(b), np.conj(a)))
    elif k == 2:
        bloques = ((a, b), (b, a))
    else:
        bloques = ((a, b),)
    kn = P.rows
    d = kn * len(bloques)
    aumentada = np.zeros((2,) + a.shape[:-2] + (d, d), dtype=complex)
    for j, (mas, menos) in enumerate(bloques):
        sl = slice(j * kn, (j + 1) * kn)
        aumentada[0, ..., sl, sl] = mas
        aumentada[1, ..., sl, sl] = menos
    T, aumentada = _alinear_lotes(matrix_T(d // 4).pair, aumentada)
    producto = np.conj(np.swapaxes(T, -1, -2)) @ aumentada @ T
    sigma = 0.125 * (producto[0] + producto[1]).real
    return 0.5 * (sigma + np.swapaxes(sigma, -1, -2))


# PSEUDO-INVERSAS


def hermitian_pinv(M: TessarineMatrix, rtol: float = 1e-10):
    """
    Pseudo-inversa de una matriz tesarina hermítica semidefinida positiva.

    Se descompone cada parte idempotente; los autovalores por debajo de
    rtol·max|λ| cuentan como ceros exactos.

    Returns:
        (pseudo-inversa, autovalores con forma (2, filas))

    Raises:
        CovarianceError: Si hay entradas no finitas o un autovalor < −rtol·max|λ|
    """
    par = M.pair
    herm = 0.5 * (par + np.conj(np.swapaxes(par, -1, -2)))
    if not np.all(np.isfinite(herm)):
        raise CovarianceError("La matriz contiene valores no finitos")
    w, V = np.linalg.eigh(herm)
    escala = float(np.max(np.abs(w))) if w.size else 0.0
    if escala == 0.0:
        return TessarineMatrix(pair=np.zeros_like(herm)), w
    corte = rtol * escala
    if float(np.min(w)) < -corte:
        raise CovarianceError(
            f"La matriz no es semidefinida positiva (autovalor mínimo {np.min(w):.3e})"
        )
    inversos = np.zeros_like(w)
    retenidos = w > corte
    inversos[retenidos] = 1.0 / w[retenidos]
    if not np.all(retenidos):
        logger.debug("Pseudo-inversa con rango deficiente: %d de %d autovalores nulos",
                     int(np.sum(~retenidos)), w.size)
    pinv = (V * inversos[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))
    return TessarineMatrix(pair=pinv), w


def psd_pinv(M, rtol: float = 1e-10) -> np.ndarray:
    """Pseudo-inversa de una matriz real simétrica semidefinida positiva."""
    M = np.asarray(M, dtype=float)
    sim = 0.5 * (M + M.T)
    if not np.all(np.isfinite(sim)):
        raise CovarianceError("La matriz contiene valores no finitos")
    w, V = np.linalg.eigh(sim)
    escala = float(np.max(np.abs(w))) if w.size else 0.0
    if escala == 0.0:
        return np.zeros_like(sim)
    corte = rtol * escala
    if float(np.min(w)) < -corte:
        raise CovarianceError(
            f"La matriz no es semidefinida positiva (autovalor mínimo {np.min(w):.3e})"
        )
    inversos = np.zeros_like(w)
    retenidos = w > corte
    inversos[retenidos] = 1.0 / w[retenidos]
    return (V * inversos) @ V.T
