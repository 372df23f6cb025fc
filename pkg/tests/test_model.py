"""
Tests del modelo: especificación del sistema, propiedad T_k, matrices Π,
momentos de Bernoulli y simulación.
"""

import sys
from dataclasses import replace
from pathlib import Path

# Agregar el directorio raíz al path para imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

from fusion_tesarina.errores import CovarianceError, DimensionError, ProbabilityError, PropernessError
from fusion_tesarina.experiments import preset_example1, preset_example2
from fusion_tesarina.model import (
    SystemSpec,
    bernoulli_moments,
    block_pattern,
    build_stacked_phi,
    check_covariances,
    correlated_noise_from_gain,
    dropout_probabilities,
    observation_vector,
    pi_matrices,
    properness_class,
    real_transition,
    reduce_observation,
    reduced_phi,
    require_properness,
    simulate_batch,
    simulate_trajectory,
    stacked_augmented,
    validate_properness,
)
from fusion_tesarina.tessarine_core import TessarineMatrix, augment, real_vector


def _sistema_simple(**cambios) -> SystemSpec:
    base = dict(
        n=1,
        R=1,
        horizon=5,
        F1=TessarineMatrix(np.array([0.5, 0.0, 0.0, 0.0]).reshape(4, 1, 1)),
        Q=np.eye(4),
        Rvv=[np.eye(4)],
        P0=np.eye(4),
        dropout_probs=0.8,
    )
    base.update(cambios)
    return SystemSpec(**base)


@pytest.fixture(name="spec_t1")
def spec_t1_fixture():
    return preset_example1(1, R=3, horizon=6)


@pytest.fixture(name="spec_t2")
def spec_t2_fixture():
    return preset_example1(2, R=3, horizon=6)


# TESTS DE ESPECIFICACIÓN


class TestSystemSpec:
    """Tests de validación de SystemSpec."""

    def test_normaliza_probabilidades(self, spec_t1: SystemSpec):
        """Un escalar se expande a (R, 4, n)"""
        spec = spec_t1.with_probabilities(0.4)
        assert spec.probs_at(3).shape == (3, 4, 1)
        assert np.all(spec.probs_at(3) == 0.4)

    def test_Q_con_forma_incorrecta(self):
        """Q que no es 4n×4n lanza DimensionError"""
        with pytest.raises(DimensionError):
            _sistema_simple(Q=np.eye(3))

    def test_numero_de_sensores(self):
        """Rvv debe tener una matriz por sensor"""
        with pytest.raises(DimensionError):
            _sistema_simple(R=2)

    def test_probabilidad_fuera_de_rango(self):
        """Probabilidades fuera de [0, 1] lanzan ProbabilityError"""
        with pytest.raises(ProbabilityError):
            _sistema_simple(dropout_probs=1.5)
        with pytest.raises(ProbabilityError):
            _sistema_simple(dropout_probs=-0.1)

    def test_S_por_defecto_nula(self):
        spec = _sistema_simple()
        assert len(spec.S_at(0)) == 1
        assert not np.any(spec.S_at(0)[0])

    def test_variante_en_el_tiempo(self):
        """Los parámetros pueden ser funciones de t"""
        spec = _sistema_simple(dropout_probs=lambda t: 0.5 + 0.05 * t)
        assert spec.is_time_varying
        np.testing.assert_allclose(spec.probs_at(4), 0.7)

    def test_menos_sensores(self, spec_t1: SystemSpec):
        """with_sensors conserva los primeros R sensores"""
        spec = spec_t1.with_sensors(2)
        assert spec.R == 2
        np.testing.assert_array_equal(spec.R_at(0)[1], spec_t1.R_at(0)[1])
        with pytest.raises(DimensionError):
            spec_t1.with_sensors(4)

    def test_primer_instante_siempre_recibido(self, spec_t1: SystemSpec):
        """En t=1 las probabilidades de llegada son 1"""
        assert np.all(dropout_probabilities(spec_t1, 1) == 1.0)
        assert np.all(dropout_probabilities(spec_t1, 2) == 0.5)


# TESTS DE PROPIEDAD


class TestPropiedad:
    """Tests de validate_properness."""

    def test_ejemplo1_t1(self, spec_t1: SystemSpec):
        """El escenario T1 es T1 y T2-propio"""
        assert validate_properness(spec_t1, 1).passed
        assert validate_properness(spec_t1, 2).passed
        assert properness_class(spec_t1).k == 1

    def test_ejemplo1_t2(self, spec_t2: SystemSpec):
        """El escenario T2 es T2-propio pero no T1-propio"""
        assert validate_properness(spec_t2, 2)
        reporte = validate_properness(spec_t2, 1)
        assert not reporte
        motivos = reporte.reasons
        assert "Q not T1-proper" in motivos
        assert "P0 not T1-proper" in motivos
        assert "R[1] not T1-proper" in motivos
        assert "S[1] not cross-T1-proper" in motivos
        assert "dropout probabilities not T1-compatible" in motivos
        assert properness_class(spec_t2).k == 2

    @pytest.mark.parametrize("k", [1, 2])
    def test_ejemplo2(self, k: int):
        assert validate_properness(preset_example2(k), k).passed

    def test_F2_no_nula(self):
        """F2 ≠ 0 impide T1 pero no T2"""
        F2 = TessarineMatrix(np.array([0.1, 0.0, 0.0, 0.0]).reshape(4, 1, 1))
        spec = _sistema_simple(F2=F2)
        assert "F2 nonzero" in validate_properness(spec, 1).reasons
        assert validate_properness(spec, 2).passed

    def test_F3_no_nula(self):
        F3 = TessarineMatrix(np.array([0.1, 0.0, 0.0, 0.0]).reshape(4, 1, 1))
        spec = _sistema_simple(F3=F3)
        assert "F3 nonzero" in validate_properness(spec, 2).reasons
        assert properness_class(spec).k is None

    def test_probabilidades_t2_con_par_incorrecto(self, spec_t2: SystemSpec):
        """p_r = p_η, p_η′ = p_η″ no es compatible con T2"""
        p = np.zeros((3, 4, 1))
        p[:, [0, 1]] = 0.3
        p[:, [2, 3]] = 0.6
        reporte = validate_properness(spec_t2.with_probabilities(p), 2)
        assert reporte.reasons == ["dropout probabilities not T2-compatible"]

    def test_require_properness(self, spec_t2: SystemSpec):
        """require_properness lanza PropernessError con el reporte"""
        with pytest.raises(PropernessError) as info:
            require_properness(spec_t2, 1)
        assert not info.value.reporte.passed

    def test_orden_invalido(self, spec_t1: SystemSpec):
        with pytest.raises(ValueError):
            validate_properness(spec_t1, 3)


# TESTS DE TRANSICIÓN


class TestTransicion:
    """Tests de Φ̄, Φ_k y la transición real."""

    @pytest.fixture(name="spec_general")
    def spec_general_fixture(self):
        rng = np.random.default_rng(7)
        F = [TessarineMatrix(0.3 * rng.standard_normal((4, 2, 2))) for _ in range(4)]
        return SystemSpec(
            n=2, R=1, horizon=3, F1=F[0], F2=F[1], F3=F[2], F4=F[3],
            Q=np.eye(8), Rvv=[np.eye(8)], P0=np.eye(8), dropout_probs=1.0,
        )

    def test_transicion_real(self, spec_general: SystemSpec):
        """χ de la ecuación de estado coincide con real_transition"""
        x = TessarineMatrix(np.random.default_rng(3).standard_normal((4, 2, 1)))
        siguiente = (
            spec_general.F_at(1, 0) @ x
            + spec_general.F_at(2, 0) @ x.conjugate("star")
            + spec_general.F_at(3, 0) @ x.conjugate("eta")
            + spec_general.F_at(4, 0) @ x.conjugate("eta_pp")
        )
        np.testing.assert_allclose(
            real_vector(siguiente), real_transition(spec_general, 0) @ real_vector(x), atol=1e-12
        )
        assert (build_stacked_phi(spec_general, 0) @ augment(x)).allclose(augment(siguiente), atol=1e-12)

    def test_phi_reducida(self, spec_t1: SystemSpec, spec_general: SystemSpec):
        """Φ_1 = F1 y F2 ≠ 0 impide Φ_1"""
        assert reduced_phi(spec_t1, 0, 1).allclose(spec_t1.F_at(1, 0))
        with pytest.raises(PropernessError):
            reduced_phi(spec_general, 0, 1)


# TESTS DE PROBABILIDADES


class TestMatricesPi:
    """Tests de pi_matrices y bernoulli_moments."""

    def test_t1_identidad(self, spec_t1: SystemSpec):
        """En t=1 Π_k = I"""
        pis = pi_matrices(spec_t1, 1, 1)
        np.testing.assert_allclose(pis.pi_k_stacked, np.eye(3))
        assert not np.any(pis.gamma_cov)

    def test_t1_escalar(self, spec_t1: SystemSpec):
        """Bajo T1, Π_1 = p·I"""
        pis = pi_matrices(spec_t1, 3, 1)
        np.testing.assert_allclose(pis.pi_k_stacked, 0.5 * np.eye(3))

    def test_t2_bloques(self, spec_t2: SystemSpec):
        """Π_2 = ½[[Pa, Pb], [Pb, Pa]] con Pa = p_r + p_η y Pb = p_r − p_η"""
        pis = pi_matrices(spec_t2, 2, 2)
        esperado = 0.5 * np.array([[1.1, -0.1], [-0.1, 1.1]])
        np.testing.assert_allclose(pis.pi_k[0], esperado, atol=1e-12)
        bloque = pis.pibar[:2, :2]
        np.testing.assert_allclose(bloque.r, esperado, atol=1e-12)
        np.testing.assert_allclose(bloque.components[1:], 0.0, atol=1e-12)

    def test_incompatible(self, spec_t2: SystemSpec):
        """Probabilidades T2 con k=1 lanzan PropernessError"""
        with pytest.raises(PropernessError):
            pi_matrices(spec_t2, 2, 1)

    def test_momentos_analiticos(self):
        """Identidades de los momentos de Bernoulli"""
        p = np.array([0.2, 0.7, 1.0])
        mom = bernoulli_moments(p)
        np.testing.assert_allclose(np.diag(mom["gamma_second"]), p)
        np.testing.assert_allclose(mom["gamma_second"][0, 1], 0.14)
        np.testing.assert_allclose(np.diag(mom["gamma_cross_oneminus"]), 0.0)
        np.testing.assert_allclose(mom["gamma_cross_oneminus"][0, 1], 0.2 * 0.3)
        np.testing.assert_allclose(np.diag(mom["oneminus_second"]), 1.0 - p)

    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_momentos_empiricos(self, p: float):
        """Los momentos analíticos coinciden con 10⁶ muestras dentro de 4 errores estándar"""
        rng = np.random.default_rng(int(p * 100))
        N = 1_000_000
        probs = np.array([p, p])
        gamma = (rng.random((N, 2)) < probs).astype(float)
        uno_menos = 1.0 - gamma
        mom = bernoulli_moments(probs)
        pares = {
            "gamma_second": (gamma, gamma),
            "gamma_cross_oneminus": (gamma, uno_menos),
            "oneminus_second": (uno_menos, uno_menos),
        }
        for nombre, (a, b) in pares.items():
            for i in range(2):
                for j in range(2):
                    productos = a[:, i] * b[:, j]
                    error_std = productos.std(ddof=1) / np.sqrt(N)
                    assert abs(productos.mean() - mom[nombre][i, j]) <= 4.0 * error_std + 1e-12
        varianza = gamma.var(axis=0, ddof=1)
        error_var = np.sqrt(2.0 / N) * p * (1.0 - p) + np.sqrt(p * (1 - p) / N)
        assert np.all(np.abs(varianza - np.diag(mom["gamma_cov"])) <= 4.0 * error_var)


# TESTS DE COVARIANZAS


class TestCovarianzas:
    """Tests de check_covariances."""

    def test_Q_no_semidefinida(self):
        """El bloque responsable se informa en CovarianceError"""
        with pytest.raises(CovarianceError) as info:
            check_covariances(_sistema_simple(Q=-np.eye(4)))
        assert info.value.bloque == "Q"

    def test_correlacion_imposible(self):
        """S incompatible con Q y R se detecta en el par (u, v)"""
        with pytest.raises(CovarianceError) as info:
            check_covariances(_sistema_simple(Suv=[2.0 * np.eye(4)]))
        assert info.value.bloque == "(u, v1)"

    def test_P0_no_simetrica(self):
        P0 = np.eye(4)
        P0[0, 1] = 0.5
        with pytest.raises(CovarianceError) as info:
            check_covariances(_sistema_simple(P0=P0))
        assert info.value.bloque == "P0"

    def test_ganancia_correlada(self):
        """v = α·u + w implica S = α·Q y R = α²·Q + β·I"""
        Q = block_pattern(1.0, 1.0, -0.5)
        S, R = correlated_noise_from_gain(Q, [0.5, 0.3], [95.0, 125.0])
        np.testing.assert_allclose(S[1], 0.3 * Q)
        np.testing.assert_allclose(R[0], 0.25 * Q + 95.0 * np.eye(4))
        with pytest.raises(DimensionError):
            correlated_noise_from_gain(Q, [0.5], [95.0, 125.0])


# TESTS DE SIMULACIÓN


class TestSimulacion:
    """Tests de simulate_trajectory y simulate_batch."""

    def test_determinista(self, spec_t1: SystemSpec):
        """La misma semilla reproduce la trayectoria"""
        a = simulate_trajectory(spec_t1, 11)
        b = simulate_trajectory(spec_t1, 11)
        c = simulate_trajectory(spec_t1, 12)
        np.testing.assert_array_equal(a.observations, b.observations)
        assert not np.array_equal(a.observations, c.observations)

    def test_formas(self, spec_t1: SystemSpec):
        tray = simulate_trajectory(spec_t1, 1)
        assert tray.states.shape == (7, 4, 1)
        assert tray.observations.shape == (7, 3, 4, 1)
        assert tray.state(2).shape == (1, 1)
        assert tray.observation(2, 0).shape == (1, 1)

    def test_modelo_de_perdidas(self, spec_t1: SystemSpec):
        """Cada parte llega o repite el último valor recibido"""
        tray = simulate_trajectory(spec_t1, 5)
        np.testing.assert_array_equal(tray.observations[1], tray.measurements[1])
        assert set(np.unique(tray.gammas[2:])) <= {0.0, 1.0}
        for t in range(2, 7):
            g = tray.gammas[t]
            esperado = g * tray.measurements[t] + (1.0 - g) * tray.observations[t - 1]
            np.testing.assert_array_equal(tray.observations[t], esperado)

    def test_sin_perdidas(self, spec_t1: SystemSpec):
        """Con p=1 las observaciones son las medidas"""
        tray = simulate_trajectory(spec_t1.with_probabilities(1.0), 2)
        np.testing.assert_array_equal(tray.observations, tray.measurements)

    def test_todo_perdido(self, spec_t1: SystemSpec):
        """Con p=0 la observación queda congelada en y(1)"""
        tray = simulate_trajectory(spec_t1.with_probabilities(0.0), 2)
        for t in range(2, 7):
            np.testing.assert_array_equal(tray.observations[t], tray.observations[1])

    def test_lote(self, spec_t1: SystemSpec):
        """La corrida r del lote usa la semilla (seed, r)"""
        lote = simulate_batch(spec_t1, 3, 9)
        assert lote.observations.shape == (3, 7, 3, 4, 1)
        sola = simulate_trajectory(spec_t1, (9, 2))
        np.testing.assert_array_equal(lote.observations[2], sola.observations)


# TESTS DE OBSERVACIONES


class TestObservaciones:
    """Tests de los vectores de observación reducidos."""

    @pytest.mark.parametrize("k", [1, 2])
    def test_reduccion(self, k: int):
        """Δ_k·y⃗ coincide con la construcción directa de y_k"""
        obs = np.random.default_rng(4).standard_normal((2, 4, 3))
        completa = stacked_augmented(obs)
        assert completa.shape == (24, 1)
        reducida = reduce_observation(completa, k, n=3)
        assert reducida.allclose(observation_vector(obs, k), atol=1e-12)

    def test_longitud_invalida(self):
        with pytest.raises(DimensionError):
            reduce_observation(TessarineMatrix.zeros(5, 1), 1, n=2)

    def test_orden_invalido(self):
        with pytest.raises(ValueError):
            observation_vector(np.zeros((1, 4, 1)), 3)

    def test_formato_invalido(self):
        with pytest.raises(DimensionError):
            stacked_augmented(np.zeros((2, 3, 1)))


def test_sistema_con_cambios():
    """replace vuelve a validar el sistema"""
    spec = replace(_sistema_simple(), Suv=None, dropout_probs=1.0)
    assert np.all(spec.probs_at(2) == 1.0)
