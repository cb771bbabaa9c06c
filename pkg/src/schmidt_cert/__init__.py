"""Schmidt-number certification with witnesses, Bell games and semiquantum games."""

from .certify import (
    CertificationReport,
    SrSampler,
    certify_schmidt_number,
    payoff_nonnegativity_sweep,
    sample_sr_state,
)
from .decompose import GammaDecomposition, ProductEnsemble, canonical_qutrit_ensemble, reconstruct, solve_gamma
from .games import (
    BellGame,
    CorrelationTable,
    SemiquantumGame,
    average_payoff,
    bell_correlation,
    bell_projector_measurement,
    chsh_counterexample_game,
    game_from_witness,
    semiquantum_correlation,
)
from .qlinalg import kron, max_entangled, partial_trace, transpose_op
from .schmidt import (
    WitnessOperator,
    counterexample_state,
    isotropic_lhv_threshold_projective,
    isotropic_sn_threshold,
    isotropic_state,
    optimal_witness,
    schmidt_decompose,
    schmidt_rank,
    witness_expectation,
)

__version__ = "0.1.0"
