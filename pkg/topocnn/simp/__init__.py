from .fem import (
    DensityField,
    FeState,
    assemble_and_solve,
    compliance_and_sensitivity,
    element_dofs,
    element_stiffness,
    evaluate_compliance,
)
from .filters import filter_sensitivities
from .oc import OcState, find_multiplier, oc_update
from .optimizer import IterationRecord, OptimizeResult, optimize
from .problems import PRESET_ASSUMPTIONS, Preset, ProblemSpec, node_id, preset

__all__ = [
    "DensityField",
    "FeState",
    "OcState",
    "IterationRecord",
    "OptimizeResult",
    "Preset",
    "PRESET_ASSUMPTIONS",
    "ProblemSpec",
    "assemble_and_solve",
    "compliance_and_sensitivity",
    "element_dofs",
    "element_stiffness",
    "evaluate_compliance",
    "filter_sensitivities",
    "find_multiplier",
    "node_id",
    "oc_update",
    "optimize",
    "preset",
]
