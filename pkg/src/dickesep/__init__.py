"""Combinatorial k-separability criteria for multi-qubit Dicke-type states."""

from .criteria import (
    CriterionContext,
    CriterionValue,
    NkWitness,
    SwapTermSpec,
    Theorem3Basis,
    build_k_alpha,
    detect,
    nk_theorem1,
    nk_theorem2,
    nk_theorem3,
    theorem1_value,
    theorem1_value_n4_expanded,
    theorem2_value,
    theorem3_value,
)
from .qstate import (
    BasisState,
    DensityMatrix,
    ExcitationPattern,
    NoiseFamily,
    PureState,
    dicke_state,
    element,
    parse_state_file,
    pattern_to_basis,
    white_noise_mix,
)

__version__ = "0.1.0"
