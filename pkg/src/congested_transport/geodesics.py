"""Congested shortest-path costs and geodesic extraction.

The congested cost between nodes is the minimum, over connecting paths, of
the path cost under a nonnegative metric; on the grid this is an exact
weighted shortest-path computation.  Ties between equal labels settle in
favor of the lower node id, which makes extracted geodesics deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._dijkstra import multi_source_shortest
from .errors import CongestedTransportError, NegativeMetric
from .grid import GridDomain
from .pathflow import GridPath, metric_edge_weights


@dataclass(frozen=True)
class CostTable:
    """Shortest-path costs and predecessors from a set of source nodes."""

    sources: np.ndarray          # (S,) node ids
    cost: np.ndarray             # (S, N)
    pred: np.ndarray             # (S, N) predecessor node, -1 at sources

    def __post_init__(self):
        object.__setattr__(
            self,
            "_row_of",
            {int(s): i for i, s in enumerate(self.sources)},
        )

    def row(self, source: int) -> int:
        return self._row_of[int(source)]

    def cost_between(self, source: int, target: int) -> float:
        return float(self.cost[self.row(source), int(target)])


def shortest_costs_from_weights(
    domain: GridDomain, edge_weights: np.ndarray, sources
) -> CostTable:
    """Label-setting shortest paths under explicit per-edge weights >= 0."""
    w = np.asarray(edge_weights, dtype=np.float64)
    if w.shape != (domain.n_edges,):
        raise ValueError("edge_weights must have one entry per edge")
    if (w < 0).any():
        raise NegativeMetric("edge weights must be nonnegative")
    src = np.asarray(sources, dtype=np.int64).reshape(-1)
    if src.size == 0:
        raise ValueError("need at least one source")
    dist, pred = multi_source_shortest(
        domain.adj_indptr, domain.adj_node, domain.adj_edge, w, src
    )
    if not np.isfinite(dist).all():
        raise CongestedTransportError(
            "unreachable node found; the domain should be connected"
        )
    return CostTable(src, dist, pred)


def shortest_costs(domain: GridDomain, xi_nodes: np.ndarray, sources) -> CostTable:
    """Congested costs from each source under a node metric xi >= 0."""
    return shortest_costs_from_weights(
        domain, metric_edge_weights(domain, xi_nodes), sources
    )


def extract_geodesic(
    domain: GridDomain, table: CostTable, source: int, target: int
) -> GridPath:
    """Cost-minimizing path realizing ``table.cost_between(source, target)``.

    Walking the predecessor chain reproduces, edge by edge, the additions
    that produced the label, so the path cost equals the table cost exactly.
    """
    row = table.row(source)
    pred = table.pred[row]
    chain = [int(target)]
    node = int(target)
    while node != int(source):
        node = int(pred[node])
        if node < 0:
            raise CongestedTransportError(
                f"broken predecessor chain from {source} to {target}"
            )
        chain.append(node)
    chain.reverse()
    return GridPath.on(domain, np.array(chain, dtype=np.int32))


def holder_diagnostic(
    domain: GridDomain,
    xi_nodes: np.ndarray,
    q: float,
    rng: np.random.Generator,
    n_sources: int = 4,
    n_pairs: int = 32,
) -> float | None:
    """Empirical Hoelder ratio of the congested cost (diagnostic only).

    For random anchor nodes ``x`` and random pairs ``(y1, y2)``, reports the
    largest ``|c(x, y1) - c(x, y2)| / (||xi||_{q*} |y1 - y2|**alpha)`` with
    ``alpha = 1 - 2/q*``.  Only meaningful for ``q < 2`` (returns None
    otherwise); the comparison constant is unknown, so callers must log, not
    assert, this number.
    """
    if q >= 2 or domain.n_nodes < 3:
        return None
    q_conj = q / (q - 1.0)
    alpha = 1.0 - 2.0 / q_conj
    norm = float(
        np.power((domain.node_area * np.power(xi_nodes, q_conj)).sum(), 1.0 / q_conj)
    )
    if norm <= 0:
        return None
    sources = rng.choice(domain.n_nodes, size=min(n_sources, domain.n_nodes), replace=False)
    table = shortest_costs(domain, xi_nodes, sources)
    worst = 0.0
    for i in range(table.sources.size):
        ys = rng.integers(0, domain.n_nodes, size=(n_pairs, 2))
        for y1, y2 in ys:
            if y1 == y2:
                continue
            gap = abs(table.cost[i, y1] - table.cost[i, y2])
            sep = float(np.linalg.norm(domain.node_xy[y1] - domain.node_xy[y2]))
            worst = max(worst, gap / (norm * sep**alpha))
    return worst
