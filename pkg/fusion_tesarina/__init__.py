"""
Paquete principal de fusión tesarina.
Filtro de fusión centralizado T_k-propio para sistemas tesarinos
multisensor con pérdidas múltiples de paquetes.
"""

from fusion_tesarina.config import get_settings, settings
from fusion_tesarina.errores import (
    ConfigError,
    CovarianceError,
    DimensionError,
    FusionError,
    OmegaSingularError,
    OutputError,
    ProbabilityError,
    PropernessError,
)
from fusion_tesarina.tessarine_core import Tessarine, TessarineMatrix, augment, build_structural
from fusion_tesarina.model import (
    SystemSpec,
    pi_matrices,
    simulate_batch,
    simulate_trajectory,
    validate_properness,
)
from fusion_tesarina.filter import filter_step, init_filter, run_filter, run_wl_filter
from fusion_tesarina.oracles import batch_llms, moment_table, quaternion_counterpart, standard_kalman_filter
from fusion_tesarina.experiments import (
    ExperimentConfig,
    emit_csv,
    preset_example1,
    preset_example2,
    run_case_sweep,
)

__all__ = [
    "settings",
    "get_settings",
    "FusionError",
    "DimensionError",
    "ProbabilityError",
    "CovarianceError",
    "PropernessError",
    "OmegaSingularError",
    "ConfigError",
    "OutputError",
    "Tessarine",
    "TessarineMatrix",
    "augment",
    "build_structural",
    "SystemSpec",
    "validate_properness",
    "pi_matrices",
    "simulate_trajectory",
    "simulate_batch",
    "init_filter",
    "filter_step",
    "run_filter",
    "run_wl_filter",
    "batch_llms",
    "moment_table",
    "quaternion_counterpart",
    "standard_kalman_filter",
    "ExperimentConfig",
    "preset_example1",
    "preset_example2",
    "run_case_sweep",
    "emit_csv",
]
