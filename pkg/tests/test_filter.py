"""
Tests del filtro T_k-propio.
Se compara con la proyección en bloque, con el filtro amplio-lineal y con
Kalman estándar en los casos degenerados.
"""

import sys
from dataclasses import replace
from pathlib import Path

# Agregar el directorio raíz al path para imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pytest

from fusion_tesarina.errores import DimensionError, OmegaSingularError, PropernessError
from fusion_tesarina.experiments import preset_example1, preset_example2
from fusion_tesarina.filter import (
    _pinv_innovaciones,
    extract_estimate,
    filter_step,
    init_filter,
    init_wl_filter,
    run_filter,
    run_wl_filter,
    wl_filter_step,
)
from fusion_tesarina.model import simulate_batch, simulate_trajectory
from fusion_tesarina.oracles import batch_llms, real_valued_filter, standard_kalman_filter
from fusion_tesarina.tessarine_core import TessarineMatrix, real_error_covariance


@pytest.fixture(name="spec_t1")
def spec_t1_fixture():
    return preset_example1(1, R=2, horizon=8)


@pytest.fixture(name="spec_t2")
def spec_t2_fixture():
    return preset_example1(2, R=2, horizon=8)


# TESTS CONTRA LA PROYECCIÓN EN BLOQUE


class TestProyeccionEnBloque:
    """El filtro recursivo coincide con las ecuaciones normales."""

    @pytest.mark.parametrize("k, R", [(1, 2), (1, 3), (2, 2), (2, 3)])
    def test_error_teorico(self, k: int, R: int):
        """MSE del filtro = MSE de la proyección T_k = MSE de la proyección WL"""
        spec = preset_example1(k, R=R, horizon=5)
        filtro = run_filter(spec, k)
        tk = batch_llms(spec, k)
        wl = batch_llms(spec, 4)
        np.testing.assert_allclose(filtro.mse[1:], tk.mse[1:], rtol=1e-8)
        np.testing.assert_allclose(filtro.mse[1:], wl.mse[1:], rtol=1e-8)

    @pytest.mark.parametrize("k", [1, 2])
    def test_estimaciones(self, k: int):
        """Las estimaciones recursivas coinciden con las de la proyección T_k y la WL"""
        spec = preset_example1(k, R=2, horizon=5)
        obs = simulate_trajectory(spec, 3).observations
        filtro = run_filter(spec, k, obs)
        tk = batch_llms(spec, k, observations=obs)
        wl = batch_llms(spec, 4, observations=obs)
        np.testing.assert_allclose(filtro.estimates[1:], tk.estimates[1:], rtol=1e-8, atol=1e-8)
        np.testing.assert_allclose(filtro.estimates[1:], wl.estimates[1:], rtol=1e-8, atol=1e-8)

    def test_sin_llegadas(self, spec_t1):
        """Con p=0 solo se usa y(1) y la Gram deficiente se trata con pseudo-inversa"""
        spec = replace(spec_t1, horizon=5).with_probabilities(0.0)
        filtro = run_filter(spec, 1)
        wl = batch_llms(spec, 4)
        np.testing.assert_allclose(filtro.mse[1:], wl.mse[1:], rtol=1e-8)


# TESTS CONTRA EL FILTRO AMPLIO-LINEAL


class TestFiltroAmplioLineal:
    """Bajo T_k-propiedad el filtro reducido no pierde nada frente al WL."""

    @pytest.mark.parametrize("k", [1, 2])
    def test_ejemplo1(self, k: int):
        spec = preset_example1(k, horizon=50)
        np.testing.assert_allclose(run_filter(spec, k).mse[1:], run_wl_filter(spec).mse[1:], rtol=1e-8)

    @pytest.mark.parametrize("k", [1, 2])
    def test_ejemplo2(self, k: int):
        spec = preset_example2(k, horizon=50)
        np.testing.assert_allclose(run_filter(spec, k).mse[1:], run_wl_filter(spec).mse[1:], rtol=1e-8)

    def test_t1_tambien_es_t2(self, spec_t1):
        """Un sistema T1-propio puede filtrarse también con k=2"""
        np.testing.assert_allclose(run_filter(spec_t1, 2).mse[1:], run_filter(spec_t1, 1).mse[1:], rtol=1e-8)

    @pytest.mark.parametrize("k", [1, 2])
    def test_estimaciones(self, k: int):
        spec = preset_example1(k, R=3, horizon=20)
        obs = simulate_trajectory(spec, 17).observations
        tk = run_filter(spec, k, obs)
        wl = run_wl_filter(spec, obs)
        np.testing.assert_allclose(tk.estimates[1:], wl.estimates[1:], rtol=1e-8, atol=1e-8)

    def test_filtro_real(self, spec_t2):
        """La recursión en coordenadas reales 4nR reproduce el filtro aumentado"""
        obs = simulate_trajectory(spec_t2, 8).observations
        wl = run_wl_filter(spec_t2, obs)
        real = real_valued_filter(spec_t2, obs)
        np.testing.assert_allclose(real.mse[1:], wl.mse[1:], rtol=1e-8)
        np.testing.assert_allclose(real.estimates[1:], wl.estimates[1:], rtol=1e-8, atol=1e-8)

    def test_covarianzas_reales(self, spec_t1):
        """La covarianza de error real tiene la traza de las componentes"""
        corrida = run_filter(spec_t1, 1)
        trazas = np.trace(corrida.error_covariances[1:], axis1=1, axis2=2)
        np.testing.assert_allclose(trazas, corrida.mse[1:], rtol=1e-9)
        assert corrida.horizon == 8


# TESTS DE CASOS DEGENERADOS


class TestCasosDegenerados:
    """Casos en que el problema se reduce a filtros conocidos."""

    def test_kalman_estandar(self, spec_t1):
        """Sin pérdidas ni correlación el filtro es Kalman estándar"""
        spec = replace(spec_t1, Suv=None, dropout_probs=1.0)
        obs = simulate_trajectory(spec, 21).observations
        filtro = run_filter(spec, 1, obs)
        kalman = standard_kalman_filter(spec, obs)
        np.testing.assert_allclose(filtro.mse[1:], kalman.mse[1:], rtol=1e-9)
        np.testing.assert_allclose(filtro.estimates[1:], kalman.estimates[1:], atol=1e-9)


# TESTS DE LA API DEL FILTRO


class TestPasos:
    """Tests de init_filter, filter_step y extract_estimate."""

    def test_solo_covarianzas(self, spec_t1):
        """El MSE no depende de las observaciones"""
        obs = simulate_trajectory(spec_t1, 4).observations
        con_datos = run_filter(spec_t1, 1, obs)
        sin_datos = run_filter(spec_t1, 1)
        np.testing.assert_allclose(con_datos.mse[1:], sin_datos.mse[1:], rtol=1e-12)
        assert sin_datos.estimates is None

    def test_lote_igual_a_corridas(self, spec_t1):
        """Las ganancias compartidas dan lo mismo que filtrar cada corrida"""
        lote = simulate_batch(spec_t1, 3, 5)
        conjunto = run_filter(spec_t1, 1, lote.observations)
        assert conjunto.estimates.shape == (3, 9, 4, 1)
        individual = run_filter(spec_t1, 1, lote.observations[1])
        np.testing.assert_allclose(conjunto.estimates[1], individual.estimates, atol=1e-10)

    def test_paso_a_paso(self, spec_t1):
        """filter_step reproduce run_filter"""
        obs = simulate_trajectory(spec_t1, 6).observations
        estado = init_filter(spec_t1, 1)
        for t in range(1, 4):
            estado, salida = filter_step(estado, obs[t])
        corrida = run_filter(spec_t1, 1, obs, horizon=3)
        assert salida.t == 3
        assert corrida.estimates.shape == (4, 4, 1)
        np.testing.assert_allclose(salida.mse, corrida.mse[3], rtol=1e-12)
        estimacion, P = extract_estimate(estado)
        np.testing.assert_allclose(estimacion.to_real_components(), corrida.estimates[3], atol=1e-12)
        assert P.shape == (1, 1)
        assert salida.innovation.shape == (2, 1)

    def test_solo_covarianzas_con_datos(self, spec_t1):
        """Un estado sin estimaciones no acepta observaciones"""
        estado = init_filter(spec_t1, 1, covariance_only=True)
        obs = simulate_trajectory(spec_t1, 1).observations
        with pytest.raises(DimensionError):
            filter_step(estado, obs[1])

    def test_extraer_sin_pasos(self, spec_t1):
        with pytest.raises(ValueError):
            extract_estimate(init_filter(spec_t1, 1))

    def test_paso_wl(self, spec_t1):
        """wl_filter_step requiere un estado amplio-lineal"""
        with pytest.raises(ValueError):
            wl_filter_step(init_filter(spec_t1, 1))
        estado, salida = wl_filter_step(init_wl_filter(spec_t1))
        assert estado.t == 1
        assert salida.omega.shape == (8, 8)

    def test_observacion_reducida(self, spec_t1):
        """filter_step acepta y_k ya reducido y comprueba su longitud"""
        estado = init_filter(spec_t1, 1)
        with pytest.raises(DimensionError):
            filter_step(estado, TessarineMatrix.zeros(3, 1))
        nuevo, _ = filter_step(estado, TessarineMatrix.zeros(2, 1))
        assert nuevo.t == 1

    def test_observaciones_con_forma_incorrecta(self, spec_t1):
        with pytest.raises(DimensionError):
            run_filter(spec_t1, 1, np.zeros((9, 2, 4)))
        with pytest.raises(DimensionError):
            run_filter(spec_t1, 1, np.zeros((4, 2, 4, 1)))
        with pytest.raises(DimensionError):
            run_filter(spec_t1, 1, np.zeros((9, 3, 4, 1)))


# TESTS DE ERRORES


class TestErrores:
    """Tests de condiciones de error."""

    def test_sistema_no_propio(self, spec_t2):
        """El escenario T2 no se puede filtrar con k=1"""
        with pytest.raises(PropernessError) as info:
            run_filter(spec_t2, 1)
        assert "Q not T1-proper" in info.value.reporte.reasons

    def test_orden_invalido(self, spec_t1):
        with pytest.raises(ValueError):
            run_filter(spec_t1, 3)

    def test_omega_indefinida(self):
        """Una covarianza de innovaciones indefinida lanza OmegaSingularError"""
        with pytest.raises(OmegaSingularError) as info:
            _pinv_innovaciones(TessarineMatrix.from_real(-np.eye(2)), 3, 1e-10)
        assert info.value.t == 3


# TESTS DE PROPIEDADES ESTADÍSTICAS


class TestPropiedades:
    """Orden de las covarianzas y propiedades Monte Carlo del filtro."""

    @pytest.mark.parametrize("k", [1, 2])
    def test_actualizacion_no_aumenta_error(self, k: int):
        """P_k(t|t) ⪯ P_k(t|t−1) en el orden semidefinido de la representación real"""
        spec = preset_example1(k, R=3, horizon=15)
        estado = init_filter(spec, k, covariance_only=True)
        for _ in range(spec.horizon):
            prediccion = real_error_covariance(estado.P_pred, k)
            estado, _ = filter_step(estado)
            diferencia = prediccion - real_error_covariance(estado.P_filt, k)
            escala = np.max(np.abs(prediccion))
            assert np.min(np.linalg.eigvalsh(diferencia)) >= -1e-10 * escala

    @pytest.mark.parametrize("k", [1, 2])
    def test_innovaciones_blancas(self, k: int):
        """
        Las innovaciones de instantes distintos están incorreladas: la media
        de ⟨1, ε(t)⟩·⟨1, ε(s)⟩ con s < t queda a menos de 3 errores estándar
        de cero (4000 corridas).
        """
        spec = preset_example1(k, R=2, horizon=6)
        N = 4000
        lote = simulate_batch(spec, N, 31 + k)
        estado = init_filter(spec, k, batch=N)
        sumas = {}
        for t in range(1, 6):
            estado, salida = filter_step(estado, lote.observations[:, t])
            # Suma de las cuatro partes reales de todas las entradas de ε_k(t)
            sumas[t] = salida.innovation.components[..., 0].sum(axis=(0, -1))
        for t, s in ((3, 2), (5, 3)):
            productos = sumas[t] * sumas[s]
            error_std = productos.std(ddof=1) / np.sqrt(N)
            assert abs(productos.mean()) <= 3.0 * error_std

    def test_insesgado(self):
        """La media del error de filtrado queda a menos de 3 errores estándar de cero"""
        spec = preset_example1(1, R=5, horizon=20)
        N = 4000
        lote = simulate_batch(spec, N, 2024)
        corrida = run_filter(spec, 1, lote.observations)
        # Error medio de cada corrida sobre t = 1..20, por parte real
        error = (lote.states - corrida.estimates)[:, 1:].mean(axis=1)
        media = error.mean(axis=0)
        error_std = error.std(axis=0, ddof=1) / np.sqrt(N)
        assert np.all(np.abs(media) <= 3.0 * error_std)
