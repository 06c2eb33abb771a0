"""Distributed adaptive learning of nonlinear functions over diffusion networks.

Multikernel adaptive filters with metric-aware hyperslab projections,
diffusion-based baselines, consensus-operator validation, and a
simulation harness for spatial field reconstruction benchmarks.
"""

from .dictionary import Dictionary, build_coherence, select_top_s
from .fields import (
    GridField,
    MultiGaussField,
    TimeVaryingField,
    breathing_field,
    load_grid,
    measure,
    save_grid,
    synthetic_altitude_field,
    two_bump_field,
)
from .harness import (
    ComplexityRow,
    NmseCurve,
    SimConfig,
    SweepPoint,
    average_trials,
    complexity_table,
    hyperslab_sweep,
    nmse,
    run_trial,
    steady_state_nmse,
)
from .kernels import (
    GramFactorizationError,
    GramMatrix,
    KernelBank,
    KernelSpec,
    build_gram,
    eval_kernel,
    filter_output,
    k_inner,
    kernel_vector,
    solve_k,
)
from .learners import (
    HyperslabParams,
    NodeState,
    RffModel,
    Sample,
    apsm_local,
    central_chypass_step,
    dchypass_step,
    diffuse,
    dmklms_step,
    fatc_klms_step,
    local_cost,
    local_only_step,
    project_hyperslab,
    project_hyperslab_selective,
    rff_dklms_step,
    zero_states,
)
from .network import (
    ConsensusReport,
    Graph,
    GraphConnectivityError,
    MixingMatrix,
    consensus_basis,
    disagreement,
    metropolis_hastings,
    random_geometric,
    validate_consensus,
)
from .presets import full_scale, preset

__version__ = "0.1.0"
