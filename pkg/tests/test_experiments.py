"""
Tests de los experimentos: casos de probabilidad, barridos, Monte Carlo,
tiempos y salida CSV.
"""

import sys
from pathlib import Path

# Agregar el directorio raíz al path para imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np
import pandas as pd
import pytest

from fusion_tesarina.errores import ConfigError, OutputError
from fusion_tesarina.experiments import (
    CASOS,
    COLUMNAS_CSV,
    ExperimentConfig,
    casos_de_preset,
    emit_csv,
    monte_carlo_error,
    obtener_preset,
    preset_example1,
    preset_example2,
    resumen_texto,
    run_c_sweep,
    run_case_sweep,
    run_timing_benchmark,
    step_flop_estimate,
)
from fusion_tesarina.filter import run_filter
from fusion_tesarina.model import simulate_batch, validate_properness


@pytest.fixture(name="barrido")
def barrido_fixture():
    """Casos 1 y 5 del escenario T1 con 2 y 3 sensores."""
    config = ExperimentConfig(
        nombre="prueba", preset="example1-t1", k=1, casos=(1, 5), sensores=(2, 3), horizonte=6
    )
    return run_case_sweep(config)


# TESTS DE CASOS Y SISTEMAS


class TestCasos:
    """Tests de la tabla de casos y los sistemas de ejemplo."""

    def test_caso_t2(self):
        """Caso 8: p_r = p_η′ = 0.5 y p_η = p_η″ = 0.6"""
        p = CASOS[8].probabilidades(2, 1)
        assert p.shape == (2, 4, 1)
        np.testing.assert_array_equal(p[:, :, 0], [[0.5, 0.6, 0.5, 0.6]] * 2)

    def test_caso_ejemplo2_t2(self):
        """Caso 18: la componente 1 usa (0.5, 0.6) y la componente 2 (0.6, 0.7)"""
        p = CASOS[18].probabilidades(1, 2)
        np.testing.assert_array_equal(p[0, :, 0], [0.5, 0.6, 0.5, 0.6])
        np.testing.assert_array_equal(p[0, :, 1], [0.6, 0.7, 0.6, 0.7])

    def test_caso_ejemplo2_t1(self):
        p = CASOS[13].probabilidades(1, 2)
        assert np.all(p[0, :, 0] == 0.5)
        assert np.all(p[0, :, 1] == 0.6)

    def test_casos_de_preset(self):
        assert casos_de_preset("example1-t1") == [1, 2, 3, 4, 5]
        assert casos_de_preset("example1-t2") == [6, 7, 8, 9, 10]
        assert casos_de_preset("example2", 1) == [11, 12, 13, 14, 15]
        assert casos_de_preset("example2", 2) == [16, 17, 18, 19, 20]

    @pytest.mark.parametrize("caso", list(range(1, 21)))
    def test_casos_propios(self, caso: int):
        """Cada caso es compatible con el orden de su preset"""
        definicion = CASOS[caso]
        spec = obtener_preset(definicion.preset, k=definicion.k, horizon=5)
        spec = spec.with_probabilities(definicion.probabilidades(spec.R, spec.n))
        assert validate_properness(spec, definicion.k).passed

    def test_preset_desconocido(self):
        with pytest.raises(ConfigError):
            obtener_preset("example3")

    def test_parametros_invalidos(self):
        with pytest.raises(ConfigError):
            preset_example1(3)
        with pytest.raises(ConfigError):
            preset_example1(1, R=6)

    def test_ejemplo2(self):
        spec = preset_example2(2)
        assert (spec.n, spec.R, spec.horizon) == (2, 1, 100)
        assert not np.any(spec.P0)


# TESTS DE CONFIGURACIÓN


class TestExperimentConfig:
    """Tests de validación de ExperimentConfig."""

    def test_mc_negativo(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(mc=-1)

    def test_caso_de_otro_preset(self):
        """El caso 6 pertenece al escenario T2"""
        with pytest.raises(ConfigError):
            ExperimentConfig(preset="example1-t1", k=1, casos=(6,))

    def test_caso_desconocido(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(casos=(99,))

    def test_horizonte_corto(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(horizonte=1)

    def test_orden_invalido(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(k=4)

    def test_modo_cuaternion(self):
        assert ExperimentConfig().modo_cuaternion == "QSL"
        assert ExperimentConfig(preset="example1-t2", k=2, casos=(8,)).modo_cuaternion == "QSWL"
        assert ExperimentConfig(cuaternion=None).modo_cuaternion is None

    def test_sistema_explicito(self):
        """Con un sistema explícito el horizonte de la configuración manda"""
        config = ExperimentConfig(
            preset=None, casos=(), sensores=(1,), horizonte=4, spec=preset_example2(1, horizon=10)
        )
        assert config.sistema(None, 1).horizon == 4
        assert config.sistema(13, 1).probs_at(2)[0, 0, 1] == 0.6


# TESTS DE BARRIDOS


class TestBarridoCasos:
    """Tests de run_case_sweep."""

    def test_filas_y_columnas(self, barrido):
        """Una fila por (t, caso, R) en orden t-mayor"""
        frame = barrido.to_frame()
        assert list(frame.columns) == COLUMNAS_CSV
        assert len(frame) == 6 * 2 * 2
        assert frame["t"].is_monotonic_increasing
        assert frame["mc_var"].isna().all()
        assert frame["runtime_s"].isna().all()
        assert list(frame.loc[frame["t"] == 1, "case"]) == [1, 1, 5, 5]

    def test_mas_llegadas_menos_error(self, barrido):
        """p = 0.9 mejora a p = 0.1 a partir de t = 2"""
        por_clave = {(r.caso, r.R): r for r in barrido.resultados}
        for R in (2, 3):
            assert np.all(por_clave[(5, R)].analytic_var[2:] < por_clave[(1, R)].analytic_var[2:])

    def test_mas_sensores_menos_error(self, barrido):
        por_clave = {(r.caso, r.R): r for r in barrido.resultados}
        for caso in (1, 5):
            assert np.all(por_clave[(caso, 3)].analytic_var[1:] < por_clave[(caso, 2)].analytic_var[1:])

    @pytest.mark.parametrize("k, caso", [(1, 1), (1, 5), (2, 6), (2, 10)])
    def test_orden_estricto_en_sensores(self, k: int, caso: int):
        """P(R=2) > P(R=3) > P(R=4) > P(R=5) en todo t ≥ 2"""
        varianzas = []
        for R in (2, 3, 4, 5):
            spec = preset_example1(k, R=R, horizon=30)
            spec = spec.with_probabilities(CASOS[caso].probabilidades(R, 1))
            varianzas.append(run_filter(spec, k).mse)
        for menos, mas in zip(varianzas, varianzas[1:]):
            assert np.all(mas[2:] < menos[2:])

    def test_ventaja_sobre_cuaternion(self, barrido):
        """D(t|t) ≥ 0 y MD se calcula sobre t = 1..T"""
        for r in barrido.resultados:
            assert np.all(r.diff[1:] >= -1e-9)
            assert r.mean_diff == pytest.approx(float(np.mean(r.diff[1:])))

    @pytest.mark.parametrize("k, casos", [(1, (1, 2, 3, 4, 5)), (2, (6, 7, 8, 9, 10))])
    def test_ventaja_crece_con_p(self, k: int, casos: tuple):
        """Con R=5 y horizonte 50 el MD frente al cuaternión crece con la probabilidad de llegada"""
        config = ExperimentConfig(
            nombre="tendencia", preset=f"example1-t{k}", k=k, casos=casos, sensores=(5,), horizonte=50
        )
        md = [r.mean_diff for r in run_case_sweep(config).resultados]
        assert md[0] > 0.0
        assert np.all(np.diff(md) > 0.0)

    def test_componentes(self):
        """Con n = 2 se agregan columnas por componente"""
        config = ExperimentConfig(preset="example2", k=2, casos=(18,), sensores=(1,), horizonte=4)
        frame = run_case_sweep(config).to_frame()
        assert "analytic_var_c2" in frame.columns
        assert "diff_c1" in frame.columns
        np.testing.assert_allclose(
            frame["analytic_var_c1"] + frame["analytic_var_c2"], frame["analytic_var"], rtol=1e-12
        )

    def test_resumen(self, barrido):
        texto = resumen_texto(barrido)
        assert "prueba" in texto
        assert "caso 5, R=3" in texto
        assert "MD=" in texto


class TestMonteCarlo:
    """La varianza empírica concuerda con la teórica."""

    def test_consistencia(self):
        """
        Ejemplo 1, caso 3, R=5, 5000 corridas: la varianza media sobre t = 1..20
        queda a menos de 3 errores estándar de la teórica, y cada instante a
        menos de un 10 %
        """
        spec = preset_example1(1, R=5, horizon=20)
        N = 5000
        lote = simulate_batch(spec, N, 20240521)
        analitico = run_filter(spec, 1).mse
        corrida = run_filter(spec, 1, lote.observations)
        cuadrado = np.sum((lote.states - corrida.estimates) ** 2, axis=(-2, -1))[:, 1:]
        promedio = cuadrado.mean(axis=1)
        error_std = promedio.std(ddof=1) / np.sqrt(N)
        assert abs(promedio.mean() - analitico[1:].mean()) <= 3.0 * error_std
        np.testing.assert_allclose(cuadrado.mean(axis=0), analitico[1:], rtol=0.1)

    def test_monte_carlo_error(self):
        """monte_carlo_error deja t = 0 vacío y reporta errores estándar positivos"""
        spec = preset_example1(1, R=2, horizon=5)
        mc_var, mc_stderr = monte_carlo_error(spec, 1, 200, 3)
        assert np.isnan(mc_var[0]) and np.isnan(mc_stderr[0])
        assert np.all(mc_stderr[1:] > 0.0)

    def test_barrido_determinista(self):
        """La misma semilla reproduce las columnas Monte Carlo"""
        config = ExperimentConfig(preset="example1-t1", casos=(3,), sensores=(2,), horizonte=5,
                                  mc=50, semilla=7)
        a = run_case_sweep(config).to_frame()
        b = run_case_sweep(config).to_frame()
        pd.testing.assert_frame_equal(a, b)
        assert a["mc_stderr"].notna().all()


class TestBarridoC:
    """Tests de run_c_sweep."""

    def test_variante_simplificada(self):
        """Con todas las matrices en span{1, η} QSL y T1 coinciden"""
        tabla = run_c_sweep((0.0,), cases=(1, 3), horizon=6, simplificado=True)
        assert np.all(np.abs(tabla["MD"]) <= 1e-6)

    def test_barrido(self):
        tabla = run_c_sweep((-0.8, 0.0), cases=(1, 5), horizon=6)
        assert list(tabla.columns) == ["c", "case", "MD", "min_diff"]
        assert len(tabla) == 4
        assert np.all(tabla["min_diff"] >= -1e-9)


# TESTS DE TIEMPOS


class TestTiempos:
    """Tests del estudio de tiempos."""

    @pytest.mark.parametrize("k, razon", [(1, 64), (2, 8)])
    def test_razon_de_flops(self, k: int, razon: int):
        assert step_flop_estimate(1, 5, 4) // step_flop_estimate(1, 5, k) == razon

    def test_mas_rapido_que_filtro_real(self):
        """Con R=5 y horizonte 200 el filtro T1 tarda menos que el filtro real 4nR"""
        tabla = run_timing_benchmark([5], k=1, horizon=200, repeticiones=3, seed=3)
        assert tabla["ratio"].iloc[0] > 1.0

    def test_benchmark(self):
        tabla = run_timing_benchmark([2, 3], k=1, horizon=10, repeticiones=1, seed=3)
        assert list(tabla["R"]) == [2, 3]
        assert np.all(tabla["flop_ratio"] == 64.0)
        assert np.all(tabla["max_estimate_diff"] < 1e-7)
        assert np.all(tabla["tk_time_s"] > 0.0)


# TESTS DE SALIDA


class TestCSV:
    """Tests de emit_csv."""

    def test_formato(self, barrido, tmp_path):
        destino = emit_csv(barrido, tmp_path / "salida" / "prueba.csv")
        contenido = destino.read_bytes()
        assert b"\r\n" not in contenido
        primera = contenido.decode("utf-8").splitlines()[0]
        assert primera == ",".join(COLUMNAS_CSV)
        leido = pd.read_csv(destino)
        assert len(leido) == 24
        assert leido["mc_var"].isna().all()
        np.testing.assert_allclose(leido["analytic_var"], barrido.to_frame()["analytic_var"], rtol=1e-11)

    def test_determinista(self, barrido, tmp_path):
        """Dos escrituras del mismo resultado son idénticas byte a byte"""
        a = emit_csv(barrido, tmp_path / "a.csv")
        b = emit_csv(barrido, tmp_path / "b.csv")
        assert a.read_bytes() == b.read_bytes()

    def test_error_de_escritura(self, barrido, tmp_path):
        """Un directorio de salida que es un archivo lanza OutputError"""
        bloqueo = tmp_path / "archivo"
        bloqueo.write_text("x")
        with pytest.raises(OutputError):
            emit_csv(barrido, bloqueo / "prueba.csv")
