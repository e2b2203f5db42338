"""Congested optimal transport and Wardrop equilibria on planar grids."""

from ._backend import backend_name
from .congestion import CongestionModel, Mode, h_conj, h_eval, h_prime
from .errors import (
    ConfigError,
    CongestedTransportError,
    DisconnectedDomain,
    EmptyDomain,
    InconsistentMarginals,
    InfiniteCost,
    InvalidPath,
    NegativeDensity,
    NegativeMetric,
    OutsideDomain,
    TooLarge,
    UnbalancedMarginals,
    ZeroMass,
)
from .geodesics import (
    CostTable,
    extract_geodesic,
    holder_diagnostic,
    shortest_costs,
    shortest_costs_from_weights,
)
from .grid import (
    DIAG_WIDTH_FACTOR,
    GridDomain,
    build_graph_domain,
    build_grid,
    node_at,
)
from .measures import (
    DiscreteMeasure,
    TransportPlan,
    gaussian_measure,
    marginals,
    normalize,
    points_measure,
    segment_measure,
    uniform_measure,
)
from .mk import MKSolution, solve_mk
from .oracle import OracleResult, brute_force_solve
from .pathflow import (
    GridPath,
    IntensityField,
    PathFlow,
    cell_density,
    compose,
    decompose,
    intensity_from_paths,
    l_xi,
    metric_edge_weights,
)
from .solver import (
    Problem,
    SolverConfig,
    SolverReport,
    edge_metric_from_intensity,
    fw_solve,
    line_search,
    linearized_oracle,
    primal_objective,
    wardrop_check,
    xi_from_intensity,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
