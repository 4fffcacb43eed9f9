"""banditix: adversarial bandits with graph-structured side observations.

Simulation library and experiment harness for Exp3-IX and FPL-IX — bandit
algorithms that exploit side observations through implicit exploration —
together with classical baselines (Exp3, Exp3-DOM, Hedge, full-information
FPL) and numerical verifiers for their stability and regret guarantees.
"""

from .backend import resolve_backend, using_numba
from .bounds import (
    BoundReport,
    best_fixed_loss,
    corollary1_bound,
    empirical_regret,
    lemma2_bound,
    lemma4_bound,
    qtilde_diagnostic,
    theorem2_explicit_bound,
)
from .environments import (
    EnvironmentTrace,
    LossRow,
    ProtocolViolationError,
    RoundLog,
    build_trace,
    gen_graph,
    gen_losses,
    run_protocol,
)
from .exp3ix import (
    Exp3DOMState,
    Exp3IXState,
    Exp3State,
    HedgeState,
    RoundObservation,
    exp3_round,
    exp3_weights,
    exp3dom_round,
    exp3ix_init,
    exp3ix_rate,
    exp3ix_round,
    hedge_round,
    ix_estimate,
    q_value,
)
from .fplix import (
    DecisionSet,
    FPLIXState,
    ResampleOutcome,
    fpl_full_round,
    fplix_estimate,
    fplix_init,
    fplix_rate,
    fplix_round,
    geometric_resample,
    perturb_and_lead,
    perturbed_leader,
)
from .graphs import (
    EXACT_ALPHA_LIMIT,
    GraphSizeError,
    GraphStats,
    ObservabilityGraph,
    graph_stats,
    greedy_dominating_set,
    in_neighborhood,
    independence_number_exact,
    independence_number_greedy,
    lemma1_sides,
    load_graph,
    observation_indicators,
    observation_probabilities,
    save_graph,
)
from .harness import (
    BoundViolationError,
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    checkpoint_rounds,
    emit_csv,
    emit_summary,
    read_csv_rows,
    run_experiment,
    run_replication,
    summarize,
)
from .rng import env_stream, make_stream, policy_stream, stream_key

__version__ = "0.1.0"
