"""Expander overlays from random spanning trees: construction, verification,
routing simulation and monitoring metrics."""

from .graph import (
    CutSet,
    EdgeStatistics,
    ExpansionResult,
    GraphError,
    NotConnectedError,
    NumericalError,
    ParseError,
    SizeCapError,
    WeightedGraph,
    edge_boundary,
    edge_statistics,
    enumerate_spanning_trees,
    expansion_bruteforce,
    parse_graph,
    spanning_tree_total_weight,
)
from .trees import (
    OverlayGraph,
    SpanningTree,
    WalkTimeoutError,
    build_overlay,
    overlay_from_text,
    overlay_to_text,
    random_spanning_tree,
    read_overlay,
    write_overlay,
)
from .verify import (
    CorrelationReport,
    CoverReport,
    CutReport,
    SpectralReport,
    cut_approximation_check,
    mixing_cover_test,
    negative_correlation_test,
    parallel_cover_test,
    spectral_approximation_check,
)
from .distbuild import (
    BuildOrchestration,
    RoundResult,
    VerificationPolicy,
    orchestrate_build,
    worker_generate_trees,
)
from .routing import (
    MonitorSet,
    RoutePlan,
    TrafficTrace,
    plan_route,
    position_distribution,
    segment_length,
    simulate_traffic,
    visit_rates,
    wilson_interval,
)
from .metrics import (
    AnonymityReport,
    AttackCostReport,
    ChernoffBound,
    HiddenStateResult,
    RbcTable,
    SystemObservation,
    UnmonitoredBound,
    anonymity_degree,
    attack_cost_report,
    chernoff_tail_bound,
    confinement_bound,
    hidden_state_probability,
    max_unmonitored_bound,
    monitor_count_estimate,
    path_probability,
    prob_route_monitored,
    rbc_aggregate,
    rbc_table,
    uniform_kernel,
)

__version__ = "0.1.0"


def __getattr__(name):
    # lazy: keeps sklearn off the import path for library and CLI use
    if name == "ExpanderOverlaySparsifier":
        from .estimator import ExpanderOverlaySparsifier

        return ExpanderOverlaySparsifier
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
