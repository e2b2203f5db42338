"""Weighted path collections, traffic intensity, and path cost functionals.

A ``PathFlow`` is a finite set of grid paths with positive masses; it stands
for the path measure of a transportation strategy.  Its ``IntensityField``
aggregates, per edge, the mass-weighted traversal count (flow) and the flow
divided by corridor width (density, mass per unit length).

Path costs under a node metric ``xi`` use the trapezoid edge value
``(xi(u) + xi(v)) / 2``; all cost accumulation is sequential from the path
start so that extracted geodesics reproduce shortest-path labels bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidPath, NegativeMetric
from .grid import GridDomain
from .measures import DiscreteMeasure, TransportPlan


@dataclass(frozen=True)
class GridPath:
    """Node sequence whose consecutive pairs are edges of a domain."""

    nodes: np.ndarray
    edge_ids: np.ndarray

    @classmethod
    def on(cls, domain: GridDomain, nodes) -> "GridPath":
        arr = np.asarray(nodes, dtype=np.int32).reshape(-1)
        if arr.size < 1:
            raise InvalidPath("path needs at least one node")
        if (arr < 0).any() or (arr >= domain.n_nodes).any():
            raise InvalidPath("path references nodes outside the domain")
        lut = domain.edge_of_pair
        eids = np.empty(arr.size - 1, dtype=np.int32)
        for k in range(arr.size - 1):
            e = lut.get((int(arr[k]), int(arr[k + 1])))
            if e is None:
                raise InvalidPath(
                    f"consecutive nodes {int(arr[k])}->{int(arr[k + 1])} are not an edge"
                )
            eids[k] = e
        arr.setflags(write=False)
        eids.setflags(write=False)
        return cls(arr, eids)

    @property
    def start(self) -> int:
        return int(self.nodes[0])

    @property
    def end(self) -> int:
        return int(self.nodes[-1])

    def __len__(self) -> int:
        return int(self.nodes.size)

    def key(self) -> tuple:
        return tuple(int(n) for n in self.nodes)

    def length(self, domain: GridDomain) -> float:
        """Euclidean length l(sigma), accumulated in traversal order."""
        total = 0.0
        for e in self.edge_ids:
            total += float(domain.edge_len[e])
        return total


class PathFlow:
    """Immutable list of (path, mass > 0) entries on one domain."""

    def __init__(self, domain: GridDomain, paths: list[GridPath], masses):
        m = np.asarray(masses, dtype=np.float64).reshape(-1)
        if len(paths) != m.size:
            raise ValueError("paths and masses must align")
        if (m <= 0).any():
            raise ValueError("path masses must be positive")
        self.domain = domain
        self.paths = list(paths)
        self.masses = m
        m.setflags(write=False)

    @classmethod
    def from_entries(cls, domain: GridDomain, entries) -> "PathFlow":
        paths, masses = [], []
        for nodes, mass in entries:
            path = nodes if isinstance(nodes, GridPath) else GridPath.on(domain, nodes)
            paths.append(path)
            masses.append(float(mass))
        return cls(domain, paths, masses)

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return zip(self.paths, self.masses)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def endpoint_measures(self) -> tuple[DiscreteMeasure, DiscreteMeasure]:
        """Pushforwards of the flow by start and end of each path."""
        n = self.domain.n_nodes
        left = np.zeros(n)
        right = np.zeros(n)
        for path, mass in self:
            left[path.start] += mass
            right[path.end] += mass
        return DiscreteMeasure(left), DiscreteMeasure(right)

    def merged(self) -> "PathFlow":
        """Merge duplicate node sequences, preserving first-seen order."""
        seen: dict[tuple, int] = {}
        paths: list[GridPath] = []
        masses: list[float] = []
        for path, mass in self:
            key = path.key()
            if key in seen:
                masses[seen[key]] += mass
            else:
                seen[key] = len(paths)
                paths.append(path)
                masses.append(mass)
        return PathFlow(self.domain, paths, masses)


@dataclass(frozen=True)
class IntensityField:
    """Per-edge flow (mass) and density (mass per unit length)."""

    edge_flow: np.ndarray
    edge_density: np.ndarray

    @classmethod
    def from_flow(cls, domain: GridDomain, edge_flow: np.ndarray) -> "IntensityField":
        f = np.asarray(edge_flow, dtype=np.float64)
        if f.shape != (domain.n_edges,):
            raise ValueError("edge_flow must have one entry per edge")
        if (f < 0).any():
            raise ValueError("edge flows must be nonnegative")
        dens = np.where(domain.edge_width > 0, f / domain.edge_width, 0.0)
        f.setflags(write=False)
        dens.setflags(write=False)
        return cls(f, dens)

    @classmethod
    def zero(cls, domain: GridDomain) -> "IntensityField":
        return cls.from_flow(domain, np.zeros(domain.n_edges))

    def mass_length(self, domain: GridDomain) -> float:
        """Total mass of the intensity: sum_e l_e f_e (average path length)."""
        return float(domain.edge_len @ self.edge_flow)


def paths_to_edge_flow(domain: GridDomain, flow: PathFlow) -> np.ndarray:
    """Edge flows with traversal multiplicity (a path crossing twice counts twice)."""
    f = np.zeros(domain.n_edges)
    for path, mass in flow:
        if path.edge_ids.size:
            f += mass * np.bincount(path.edge_ids, minlength=domain.n_edges)
    return f


def intensity_from_paths(domain: GridDomain, flow: PathFlow) -> IntensityField:
    """Traffic intensity of a path flow."""
    if flow.domain is not domain:
        for path, _ in flow:  # re-validate against this domain
            GridPath.on(domain, path.nodes)
    return IntensityField.from_flow(domain, paths_to_edge_flow(domain, flow))


def metric_edge_values(domain: GridDomain, xi_nodes: np.ndarray) -> np.ndarray:
    """Trapezoid edge values (xi(u) + xi(v)) / 2 of a node metric."""
    xi = np.asarray(xi_nodes, dtype=np.float64)
    if xi.shape != (domain.n_nodes,):
        raise ValueError("xi must have one value per node")
    if (xi < 0).any():
        raise NegativeMetric(f"negative metric value: min = {xi.min()}")
    return 0.5 * (xi[domain.edges_u] + xi[domain.edges_v])


def metric_edge_weights(domain: GridDomain, xi_nodes: np.ndarray) -> np.ndarray:
    """Per-edge path-cost weights l_e * (xi(u) + xi(v)) / 2."""
    return domain.edge_len * metric_edge_values(domain, xi_nodes)


def path_cost_from_weights(path: GridPath, edge_weights: np.ndarray) -> float:
    """Sequential accumulation of edge weights along a path.

    Matches the label-setting arithmetic of the shortest-path kernels, so a
    freshly extracted geodesic reproduces its label exactly.
    """
    total = 0.0
    for e in path.edge_ids:
        total += float(edge_weights[e])
    return total


def l_xi(domain: GridDomain, path: GridPath, xi_nodes: np.ndarray) -> float:
    """Cost of a path under a node metric (discrete line integral of xi)."""
    return path_cost_from_weights(path, metric_edge_weights(domain, xi_nodes))


def decompose(flow: PathFlow):
    """Split a flow into its endpoint plan and per-pair path distributions.

    Returns ``(plan, table)`` where ``table[(s, t)]`` lists ``(path, prob)``
    with probabilities summing to 1 per pair.  ``compose`` reverses this up
    to path order.
    """
    if len(flow) == 0:
        raise ValueError("cannot decompose an empty flow")
    groups: dict[tuple[int, int], list[tuple[GridPath, float]]] = {}
    for path, mass in flow:
        groups.setdefault((path.start, path.end), []).append((path, mass))
    entries = []
    table: dict[tuple[int, int], list[tuple[GridPath, float]]] = {}
    for (s, t), members in groups.items():
        total = sum(m for _, m in members)
        entries.append((s, t, total))
        table[(s, t)] = [(p, m / total) for p, m in members]
    return TransportPlan.from_entries(entries), table


def compose(domain: GridDomain, plan: TransportPlan, table) -> PathFlow:
    """Rebuild a path flow from a plan and per-pair path distributions."""
    paths, masses = [], []
    for s, t, mass in zip(plan.sources, plan.targets, plan.masses):
        for path, prob in table[(int(s), int(t))]:
            paths.append(path)
            masses.append(float(mass) * prob)
    return PathFlow(domain, paths, masses)


def cell_density(domain: GridDomain, field: IntensityField) -> np.ndarray:
    """Project an intensity onto cells (indexed by node id).

    Each edge splits its mass-length ``l_e * f_e`` evenly between its two
    endpoint cells; the cell value is the accumulated mass-length divided by
    the cell area (per-node area on explicit graph domains).
    """
    acc = np.zeros(domain.n_nodes)
    half = 0.5 * domain.edge_len * field.edge_flow
    np.add.at(acc, domain.edges_u, half)
    np.add.at(acc, domain.edges_v, half)
    return acc / domain.node_area
