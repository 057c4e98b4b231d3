"""Leader-follower consensus for multi-agent systems with a switching set of active followers."""

from .dynamics import (
    GainBoundError,
    GainConfig,
    closed_loop_matrix,
    consensus_input,
    max_gain,
    quantize_input,
    step_closed_loop,
    step_followers,
    step_leader,
)
from .engine import (
    ConfigError,
    LimitCycleReport,
    ScenarioConfig,
    ScheduleEntry,
    TraceRecord,
    builtin_scenario,
    check_practical_consensus_rate,
    consensus_error_series,
    detect_limit_cycle,
    run_scenario,
)
from .graph import (
    DirectedGraph,
    adjacency_matrix,
    build_ring_subgraph,
    degree_matrix,
    has_spanning_tree,
    laplacian,
    union_graphs,
)
from .switching import GraphFamily, SwitchState, advance, build_family, enumerate_active_sets
from .verify import cycle_products, is_primitive, is_row_stochastic, rank_one_limit, theorem1_certificate

__version__ = "0.1.0"
