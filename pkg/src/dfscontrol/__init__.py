"""Controllability analysis for decoherence-free subsystem codes in Lindbladian models."""

__version__ = "0.1.0"

from .model import (
    IonModelParams,
    LindbladModel,
    ModelError,
    attach_controls,
    build_ion_model,
    enumerate_control_pool,
    parse_model,
    pauli_string_to_operator,
    pool_size_formula,
    q_signature,
    validate_resource_set,
)
from .paulis import PauliString
from .cvs import (
    GModel,
    HermitianBasis,
    h_to_g,
    liouvillian_to_g,
    make_basis,
    rho_to_v,
    v_to_rho,
)
from .commutant import (
    CommutantStructure,
    DegenerateClusteringError,
    MatrixAlgebra,
    commutant_structure,
    drift_block_split,
    interaction_algebra,
    nc_projection_check,
)
from .codes import SubsystemCode, derive_code, max_code_order, search_codes
from .pstatic import (
    DIFSResult,
    NotInvariantError,
    PStaticScheme,
    SchemeContext,
    canonical_frame,
    check_sufficient_invariance,
    compute_difs,
    effective_hamiltonians,
    k_sector_decoupling_check,
    sector_projection,
)
from .liealg import (
    LieBasis,
    lie_closure,
    p_erasure,
    test_esc,
    test_lesc,
    test_loc,
    test_oc,
)
from .sim import ControlField, Trajectory, channel_matrix, propagate

__all__ = [
    "IonModelParams",
    "LindbladModel",
    "ModelError",
    "PauliString",
    "attach_controls",
    "build_ion_model",
    "enumerate_control_pool",
    "parse_model",
    "pauli_string_to_operator",
    "pool_size_formula",
    "q_signature",
    "validate_resource_set",
    "GModel",
    "HermitianBasis",
    "h_to_g",
    "liouvillian_to_g",
    "make_basis",
    "rho_to_v",
    "v_to_rho",
    "CommutantStructure",
    "DegenerateClusteringError",
    "MatrixAlgebra",
    "commutant_structure",
    "drift_block_split",
    "interaction_algebra",
    "nc_projection_check",
    "SubsystemCode",
    "derive_code",
    "max_code_order",
    "search_codes",
    "DIFSResult",
    "NotInvariantError",
    "PStaticScheme",
    "SchemeContext",
    "canonical_frame",
    "check_sufficient_invariance",
    "compute_difs",
    "effective_hamiltonians",
    "k_sector_decoupling_check",
    "sector_projection",
    "LieBasis",
    "lie_closure",
    "p_erasure",
    "test_esc",
    "test_lesc",
    "test_loc",
    "test_oc",
    "ControlField",
    "Trajectory",
    "channel_matrix",
    "propagate",
]
