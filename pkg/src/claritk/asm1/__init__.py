"""ASM1 biokinetics: stoichiometry, source terms, idealized reactors and
transport-configuration export."""

from .export import DEFAULT_SCHMIDT, TransportConfig, export_transport_config
from .matrix import (
    ALK_INDEX,
    COMPONENTS,
    IDX,
    PROCESS_LABELS,
    ContinuityReport,
    composition_vectors,
    continuity_check,
    dinitrogen_source,
    petersen_matrix,
    process_rates,
    source_terms,
)
from .params import Asm1Params, load_params, override
from .reactor import (
    Asm1State,
    ReactorTrajectory,
    cstr_simulate,
    export_trajectory_csv,
    tanks_in_series_simulate,
)

__all__ = [
    "ALK_INDEX", "COMPONENTS", "IDX", "PROCESS_LABELS", "DEFAULT_SCHMIDT",
    "Asm1Params", "Asm1State", "ContinuityReport", "ReactorTrajectory",
    "TransportConfig", "composition_vectors", "continuity_check",
    "cstr_simulate", "dinitrogen_source", "export_trajectory_csv",
    "export_transport_config", "load_params", "override", "petersen_matrix",
    "process_rates", "source_terms", "tanks_in_series_simulate",
]
