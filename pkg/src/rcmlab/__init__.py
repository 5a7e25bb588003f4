"""Random-cluster model laboratory.

Exact enumeration, planar duality, medial-lattice exploration observables,
and Monte Carlo estimation for the random-cluster measure on small planar
lattices and truncated covers.
"""

__version__ = "0.1.0"

from .errors import (
    RCMError,
    ValidationError,
    TooLargeError,
    UnsupportedDomainError,
    ConstructionBugError,
)
from .lattice import (
    Graph,
    BoundarySpec,
    Domain,
    build_box,
    build_rect,
    build_slit_box,
    build_strip_rect,
    build_universal_cover_box,
    induced_subdomain,
    edge_boundary,
    ambient_edge_boundary,
)
from .exact import (
    ModelParams,
    EventSpec,
    cluster_count,
    weight,
    partition_function,
    prob,
    event_prob,
    connection_prob,
    dual_parameter,
    self_dual_point,
)
from .dual import DualGraph, dual_graph
from .medial import MedialGraph, ExplorationPath, medial_graph, explore
from .observable import (
    sigma_hat,
    observable_exact,
    observable_field,
    contour_spec,
    contour_sum,
    contour_report,
    observable_mc,
)
from .sampler import (
    ChainState,
    Estimate,
    init_chain,
    sweep,
    run_chain,
    chayes_machta_step,
    estimate_event,
    estimate_events,
    merge_estimates,
)
from .experiments import (
    PhiReport,
    ScanResult,
    CrossingSpec,
    LeftmostDualPath,
    StripCrossing,
    PcScan,
    phi_fn,
    lemma_C,
    lemma_q3_scan,
    phi_bar_fn,
    crossing_prob,
    rect_crossing_prob,
    crossing_duality_gap,
    leftmost_dual_path,
    strip_dual_crossing,
    q4_boundary_sum,
    select_k,
    uk_decay,
    pc_estimate,
)

__all__ = [
    "RCMError",
    "ValidationError",
    "TooLargeError",
    "UnsupportedDomainError",
    "ConstructionBugError",
    "Graph",
    "BoundarySpec",
    "Domain",
    "build_box",
    "build_rect",
    "build_slit_box",
    "build_strip_rect",
    "build_universal_cover_box",
    "induced_subdomain",
    "edge_boundary",
    "ambient_edge_boundary",
    "ModelParams",
    "EventSpec",
    "cluster_count",
    "weight",
    "partition_function",
    "prob",
    "event_prob",
    "connection_prob",
    "dual_parameter",
    "self_dual_point",
    "DualGraph",
    "dual_graph",
    "MedialGraph",
    "ExplorationPath",
    "medial_graph",
    "explore",
    "sigma_hat",
    "observable_exact",
    "observable_field",
    "contour_spec",
    "contour_sum",
    "contour_report",
    "observable_mc",
    "ChainState",
    "Estimate",
    "init_chain",
    "sweep",
    "run_chain",
    "chayes_machta_step",
    "estimate_event",
    "estimate_events",
    "merge_estimates",
    "PhiReport",
    "ScanResult",
    "CrossingSpec",
    "LeftmostDualPath",
    "StripCrossing",
    "PcScan",
    "phi_fn",
    "lemma_C",
    "lemma_q3_scan",
    "phi_bar_fn",
    "crossing_prob",
    "rect_crossing_prob",
    "crossing_duality_gap",
    "leftmost_dual_path",
    "strip_dual_crossing",
    "q4_boundary_sum",
    "select_k",
    "uk_decay",
    "pc_estimate",
]
