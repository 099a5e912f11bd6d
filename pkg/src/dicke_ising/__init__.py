"""Zero-temperature phase diagram of the Dicke-Ising chain.

The cavity is folded into a self-consistent transverse field acting on
the spin chain; finite clusters are solved with two-site DMRG, the
thermodynamic limit is reached through a linked-cluster telescope, and
the coupled (m_x, m_s) self-consistency is iterated with Anderson
acceleration.  A mean-field reference layer and phase-boundary detection
sit on top, all driven by the ``dicke-ising`` command-line tool.
"""

__version__ = "0.1.0"

from .model import ModelParams, SelfFields, phase_label
from .linalg import TruncatedSVD, svd_truncated, lanczos_ground, eigh_dense
from .mps import MPS, product_state, measure_profiles
from .mpo import MPO, build_mpo
from .dmrg import DmrgSettings, ClusterSolution, dmrg_ground, PROFILES
from .ed import dense_hamiltonian, exact_diag_ground
from .nlce import (
    ClusterPair,
    BulkEstimate,
    bulk_energy,
    bulk_observable,
    reduced_contributions,
    convergence_scan,
)
from .selfconsist import (
    FixedPointConfig,
    ConvergedPoint,
    SweepBranch,
    WarmStates,
    CycleError,
    effective_field,
    photon_density,
    fixed_point_map,
    total_energy,
    anderson_solve,
    hellmann_feynman_residual,
    landscape_scan,
    adiabatic_sweep,
    solve_pair,
    set_workers,
)
from .meanfield import (
    MeanFieldState,
    mf_energy,
    mf_minimize,
    mf_phase_at,
    mf_boundary,
    g_crit_ferro,
    weak_energy_ferro,
    classical_af_boundary,
    renormalize_A2,
    trk_min_D,
)
from .phase_analysis import (
    PhaseBoundary,
    DeltaEResult,
    detect_first_order,
    detect_continuous,
    delta_e_at_mf_critical,
    multicritical_bisect,
)

__all__ = [
    "ModelParams",
    "SelfFields",
    "phase_label",
    "TruncatedSVD",
    "svd_truncated",
    "lanczos_ground",
    "eigh_dense",
    "MPS",
    "product_state",
    "measure_profiles",
    "MPO",
    "build_mpo",
    "DmrgSettings",
    "ClusterSolution",
    "dmrg_ground",
    "PROFILES",
    "dense_hamiltonian",
    "exact_diag_ground",
    "ClusterPair",
    "BulkEstimate",
    "bulk_energy",
    "bulk_observable",
    "reduced_contributions",
    "convergence_scan",
    "FixedPointConfig",
    "ConvergedPoint",
    "SweepBranch",
    "WarmStates",
    "CycleError",
    "effective_field",
    "photon_density",
    "fixed_point_map",
    "total_energy",
    "anderson_solve",
    "hellmann_feynman_residual",
    "landscape_scan",
    "adiabatic_sweep",
    "solve_pair",
    "set_workers",
    "MeanFieldState",
    "mf_energy",
    "mf_minimize",
    "mf_phase_at",
    "mf_boundary",
    "g_crit_ferro",
    "weak_energy_ferro",
    "classical_af_boundary",
    "renormalize_A2",
    "trk_min_D",
    "PhaseBoundary",
    "DeltaEResult",
    "detect_first_order",
    "detect_continuous",
    "delta_e_at_mf_critical",
    "multicritical_bisect",
]
