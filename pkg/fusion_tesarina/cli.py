"""
Interfaz de línea de comandos.

    python -m fusion_tesarina run --preset example1-t1 --case all --mc 2000
    python -m fusion_tesarina bench -k 1 --sensors 2,3,4,5
    python -m fusion_tesarina validate --config configs/example2.toml -k 2
    python -m fusion_tesarina csweep --cases 1,3,5
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from fusion_tesarina.config import configurar_logging, get_settings
from fusion_tesarina.errores import ConfigError, FusionError
from fusion_tesarina.experiments import (
    C_BARRIDO,
    PRESETS,
    emit_csv,
    obtener_preset,
    resumen_texto,
    run_c_sweep,
    run_case_sweep,
    run_timing_benchmark,
)
from fusion_tesarina.model import validate_properness
from fusion_tesarina.schemas import ConfiguracionArchivo, ExperimentoConfig, cargar_configuracion

logger = logging.getLogger(__name__)


def _lista_enteros(texto: str) -> list:
    try:
        return [int(v) for v in texto.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Lista de enteros inválida: '{texto}'") from None


def _lista_reales(texto: str) -> list:
    try:
        return [float(v) for v in texto.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"Lista de reales inválida: '{texto}'") from None


def _casos(texto: str):
    return None if texto == "all" else _lista_enteros(texto)


def construir_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusion_tesarina",
        description="Filtro de fusión T_k-propio para sistemas tesarinos con pérdidas de paquetes.",
    )
    sub = parser.add_subparsers(dest="comando", required=True)

    run = sub.add_parser("run", help="Barrido de casos con Monte Carlo y comparación cuaterniónica")
    run.add_argument("--config", type=Path, help="Archivo TOML con [sistema] y/o [experimento]")
    run.add_argument("--preset", choices=PRESETS)
    run.add_argument("-k", type=int, choices=(1, 2))
    run.add_argument("--case", type=_casos, dest="casos", default=argparse.SUPPRESS,
                     help="Id, lista separada por comas o 'all'")
    run.add_argument("--sensors", type=_lista_enteros, dest="sensores")
    run.add_argument("--mc", type=int)
    run.add_argument("--seed", type=int, dest="semilla")
    run.add_argument("--horizon", type=int, dest="horizonte")
    run.add_argument("--quaternion", dest="cuaternion", help="auto, QSL, QSWL o none")
    run.add_argument("--timing", action="store_true", help="Medir el tiempo del filtro por caso")
    run.add_argument("--out", type=Path, help="Directorio de salida")

    bench = sub.add_parser("bench", help="Tiempo del filtro T_k frente al filtro real")
    bench.add_argument("-k", type=int, choices=(1, 2), default=1)
    bench.add_argument("--sensors", type=_lista_enteros, default=[2, 3, 4, 5])
    bench.add_argument("--horizon", type=int, default=200)
    bench.add_argument("--repeats", type=int)
    bench.add_argument("--seed", type=int)
    bench.add_argument("--out", type=Path)

    validate = sub.add_parser("validate", help="Reporte de propiedad T_k de un sistema")
    validate.add_argument("--config", type=Path)
    validate.add_argument("--preset", choices=PRESETS)
    validate.add_argument("-k", type=int, choices=(1, 2), default=1)

    csweep = sub.add_parser("csweep", help="MD entre QSL y T1 en función de c (ejemplo 1)")
    csweep.add_argument("--values", type=_lista_reales, default=list(C_BARRIDO))
    csweep.add_argument("--cases", type=_lista_enteros, default=[1, 2, 3, 4, 5])
    csweep.add_argument("--horizon", type=int)
    csweep.add_argument("--simplified", action="store_true",
                        help="Variante con todas las matrices en span{1, η}")
    csweep.add_argument("--out", type=Path)
    return parser


def _experimento(args) -> tuple:
    """Combina el archivo de configuración con las opciones de la línea de comandos."""
    archivo = cargar_configuracion(args.config) if args.config else ConfiguracionArchivo()
    valores = archivo.experimento.model_dump()
    for campo in ("k", "sensores", "mc", "semilla", "horizonte", "cuaternion"):
        valor = getattr(args, campo)
        if valor is not None:
            valores[campo] = valor
    if args.preset is not None:
        valores["preset"] = args.preset
        valores["nombre"] = args.preset
        if args.k is None and args.preset.startswith("example1-t"):
            valores["k"] = int(args.preset[-1])
    if hasattr(args, "casos"):
        valores["casos"] = args.casos
    try:
        experimento = ExperimentoConfig(**valores)
    except ValidationError as exc:
        raise ConfigError(f"Opciones inválidas: {exc}") from exc
    spec = archivo.sistema.to_spec() if archivo.sistema is not None else None
    return experimento, spec


def _cmd_run(args) -> int:
    experimento, spec = _experimento(args)
    config = experimento.to_config(spec=spec, timing=args.timing)
    resultado = run_case_sweep(config)
    destino = (args.out or Path(get_settings().output_dir)) / f"{config.nombre}.csv"
    emit_csv(resultado, destino)
    print(resumen_texto(resultado))
    print(f"CSV: {destino}")
    return 0


def _cmd_bench(args) -> int:
    tabla = run_timing_benchmark(args.sensors, k=args.k, horizon=args.horizon,
                                 repeticiones=args.repeats, seed=args.seed)
    destino = (args.out or Path(get_settings().output_dir)) / f"bench_t{args.k}.csv"
    emit_csv(tabla, destino)
    print(tabla.to_string(index=False))
    return 0


def _cmd_validate(args) -> int:
    if (args.config is None) == (args.preset is None):
        raise ConfigError("Indique exactamente uno de --config o --preset")
    if args.config is not None:
        archivo = cargar_configuracion(args.config)
        if archivo.sistema is None:
            raise ConfigError(f"'{args.config}' no tiene sección [sistema]")
        spec = archivo.sistema.to_spec()
    else:
        spec = obtener_preset(args.preset, k=args.k)
    reporte = validate_properness(spec, args.k)
    print(f"Sistema '{spec.name}', T{args.k}-propiedad: {'sí' if reporte.passed else 'no'}")
    for c in reporte.condiciones:
        marca = "ok" if c.aprobado else "FALLA"
        print(f"  [{marca}] {c.nombre}" + (f" ({c.detalle})" if c.detalle else ""))
    return 0 if reporte.passed else 1


def _cmd_csweep(args) -> int:
    tabla = run_c_sweep(args.values, args.cases, horizon=args.horizon, simplificado=args.simplified)
    nombre = "csweep_simplificado.csv" if args.simplified else "csweep.csv"
    destino = (args.out or Path(get_settings().output_dir)) / nombre
    emit_csv(tabla, destino)
    print(tabla.to_string(index=False))
    return 0


COMANDOS = {
    "run": _cmd_run,
    "bench": _cmd_bench,
    "validate": _cmd_validate,
    "csweep": _cmd_csweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = construir_parser().parse_args(argv)
    configurar_logging()
    try:
        return COMANDOS[args.comando](args)
    except FusionError as exc:
        print(f"error: {' '.join(str(exc).split())}", file=sys.stderr)
        return 2
