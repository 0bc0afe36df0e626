"""Discrete-event fabric simulator and graph-resilience toolkit.

Builds lattice/Clos fabrics, counts their spanning trees exactly and
spectrally, packs edge-disjoint trees, bounds and measures disconnection
probability, and simulates two link disciplines - slot-reconciled links
with local tree healing versus fire-and-forget links with timeout
detection - to measure which faults applications actually observe.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .analytics import (
    ChainSpec,
    CheckRow,
    chain_success,
    chain_with_bad_link,
    cross_check_report,
    retry_success,
    triangle_success,
)
from .config import ConfigError, FaultEvent, ScenarioConfig, load_config, parse_config
from .graphs import (
    FabricGraph,
    add_triangle_detour,
    build_chain,
    build_clos,
    build_complete,
    build_grid,
    build_octavalent_mesh,
    from_edge_list_text,
    laplacian,
    to_edge_list_text,
)
from .healing import (
    Arborescence,
    HardPartitionError,
    TreeProtocol,
    build_rooted_tree,
    diameter,
    heal_time_bound,
    local_heal,
    validate_arborescence,
)
from .linkmodel import (
    ConventionalLink,
    DelayModel,
    FlappingModel,
    KnowledgeState,
    LinkEndpointPair,
    SlotOutcome,
    conventional_send,
    effective_failure_prob,
    knowledge_state,
    slot_reconcile,
    stationary_bad_fraction,
    timeout_failure_detector,
)
from .metrics import MetricsReport, PartitionRecord, apparent_latency_histogram
from .resilience import (
    DisconnectionEstimate,
    DisjointTreePacking,
    disconnection_bound,
    disconnection_prob_exact,
    disconnection_prob_mc,
    edge_connectivity,
    greedy_disjoint_trees,
    nash_williams_exact,
    surviving_tree_exists,
)
from .sim import classify_fault, clos_reconverge, replicated_register_workload, run_scenario
from .spanning import (
    SizeLimitError,
    TreeCount,
    count_rooted_spanning_trees,
    count_spanning_trees_exact,
    count_spanning_trees_grid_spectral,
    grid_laplacian_eigenvalue,
    log_tau_density,
)

__version__ = "0.1.0"
