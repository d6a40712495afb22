"""Online memorization of random firing sequences by a recurrent threshold network."""

from seqmem.bounds import (
    BoundParams,
    BoundResult,
    binary_entropy,
    binomial_tail_bound,
    capacity_summary,
    exact_binomial_cdf,
    figure1_sweep,
    kl_bernoulli,
    mgf_bound,
    min_L_for_target,
    sufficient_N,
    theorem_bound,
)
from seqmem.experiments import (
    ExperimentConfig,
    ExperimentReport,
    estimate_mgf,
    exhaustive_exact,
    monte_carlo,
    run_trial,
    sample_bernoulli_matrix,
)
from seqmem.multi_pass import (
    DenseNetwork,
    ShiftedSystem,
    TrainConfig,
    build_shifted_system,
    gradient_descent,
    max_eigenvalue,
    rank_is_full,
    sgd_train,
)
from seqmem.network import (
    FiringMatrix,
    NetworkParams,
    VerificationReport,
    margins,
    network_step,
    neuron_activation,
    run_sequence,
    verify_memorization,
)
from seqmem.single_pass import (
    SinglePassNetwork,
    StreamState,
    exact_inner_product,
    stream_update,
    train_single_pass,
    verify_single_pass_fast,
)

__version__ = "0.1.0"
