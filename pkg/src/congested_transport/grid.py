"""Planar grid discretization of the transport domain.

The closed domain is approximated by the active cells of a regular square
grid.  Nodes sit at active cell centers; undirected edges join 8-neighbor
active nodes.  Axis edges have euclidean length ``h``, diagonal edges
``h*sqrt(2)``.  Every edge carries a corridor width ``w_e`` that converts
edge flow (mass) into an intensity density (mass per unit length); the
congestion objective weights each edge by its corridor area ``l_e * w_e``.

Diagonal corridors overlap the axis corridors geometrically, so giving them
full width ``h`` over-counts transverse capacity and lets solved flows spread
onto diagonals far beyond the continuum solution (uniform-flow benchmarks
come out ~20% too dense).  Diagonal widths are therefore reduced by
``DIAG_WIDTH_FACTOR``, calibrated so the uniform-flux benchmark reproduces
interior density 1 within a few percent at desk resolutions.
"""

from __future__ import annotations

from collections import deque
from typing import Callable, Sequence

import numpy as np

from .errors import DisconnectedDomain, EmptyDomain, OutsideDomain

DIAG_WIDTH_FACTOR = 0.0625

_SQRT2 = np.sqrt(2.0)


class GridDomain:
    """Immutable discretized domain: nodes, weighted edges, adjacency.

    Instances are produced by :func:`build_grid` (lattice domains) or
    :func:`build_graph_domain` (explicit graphs for synthetic fixtures).
    All arrays are read-only; the object is safe to share across threads.
    """

    def __init__(
        self,
        *,
        kind: str,
        bounds: tuple[float, float, float, float],
        h: float,
        nx: int,
        ny: int,
        active_mask: np.ndarray,
        node_xy: np.ndarray,
        cell_ix: np.ndarray,
        cell_iy: np.ndarray,
        node_of_cell: np.ndarray,
        edges_u: np.ndarray,
        edges_v: np.ndarray,
        edge_len: np.ndarray,
        edge_width: np.ndarray,
        edge_is_diag: np.ndarray,
        node_area: np.ndarray,
    ):
        self.kind = kind
        self.bounds = bounds
        self.h = float(h)
        self.nx = int(nx)
        self.ny = int(ny)
        self.active_mask = active_mask
        self.node_xy = node_xy
        self.cell_ix = cell_ix
        self.cell_iy = cell_iy
        self.node_of_cell = node_of_cell
        self.edges_u = edges_u
        self.edges_v = edges_v
        self.edge_len = edge_len
        self.edge_width = edge_width
        self.edge_is_diag = edge_is_diag
        self.node_area = node_area
        self.n_nodes = int(node_xy.shape[0])
        self.n_edges = int(edges_u.shape[0])
        self.cell_area = self.h * self.h if kind == "grid" else float("nan")
        self._build_adjacency()
        self._edge_of_pair: dict[tuple[int, int], int] | None = None
        for arr in (
            active_mask, node_xy, cell_ix, cell_iy, node_of_cell,
            edges_u, edges_v, edge_len, edge_width, edge_is_diag, node_area,
        ):
            arr.setflags(write=False)

    def _build_adjacency(self) -> None:
        n, m = self.n_nodes, self.n_edges
        deg = np.zeros(n, dtype=np.int64)
        np.add.at(deg, self.edges_u, 1)
        np.add.at(deg, self.edges_v, 1)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        adj_node = np.empty(2 * m, dtype=np.int32)
        adj_edge = np.empty(2 * m, dtype=np.int32)
        cursor = indptr[:-1].copy()
        for e in range(m):
            u = int(self.edges_u[e])
            v = int(self.edges_v[e])
            adj_node[cursor[u]] = v
            adj_edge[cursor[u]] = e
            cursor[u] += 1
            adj_node[cursor[v]] = u
            adj_edge[cursor[v]] = e
            cursor[v] += 1
        self.adj_indptr = indptr
        self.adj_node = adj_node
        self.adj_edge = adj_edge
        self.adj_indptr.setflags(write=False)
        self.adj_node.setflags(write=False)
        self.adj_edge.setflags(write=False)

    @property
    def edge_of_pair(self) -> dict[tuple[int, int], int]:
        """Lookup (u, v) -> edge id, both orientations."""
        if self._edge_of_pair is None:
            lut: dict[tuple[int, int], int] = {}
            for e in range(self.n_edges):
                u = int(self.edges_u[e])
                v = int(self.edges_v[e])
                lut[(u, v)] = e
                lut[(v, u)] = e
            self._edge_of_pair = lut
        return self._edge_of_pair

    @property
    def total_active_area(self) -> float:
        return self.n_nodes * self.cell_area

    def node_point(self, node: int) -> tuple[float, float]:
        x, y = self.node_xy[node]
        return float(x), float(y)


def build_grid(
    bounds: tuple[float, float, float, float],
    resolution: int,
    mask: Callable[[float, float], bool] | None = None,
    diag_width_factor: float = DIAG_WIDTH_FACTOR,
) -> GridDomain:
    """Build a grid domain over ``bounds = (x0, y0, x1, y1)``.

    ``resolution`` is the cell count along x; the spacing ``h`` is
    ``(x1-x0)/resolution`` and the y cell count follows from it, so for a
    1x1 box ``resolution`` is the cell count per side.  ``mask`` is a
    predicate on cell-center points selecting the active cells.

    Raises ``EmptyDomain`` when no cell is active and ``DisconnectedDomain``
    when the active 8-neighbor subgraph is not connected.
    """
    x0, y0, x1, y1 = (float(c) for c in bounds)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("bounds must describe a nonempty rectangle")
    resolution = int(resolution)
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    h = (x1 - x0) / resolution
    nx = resolution
    ny = max(1, round((y1 - y0) / h))

    xs = x0 + (np.arange(nx) + 0.5) * h
    ys = y0 + (np.arange(ny) + 0.5) * h
    if mask is None:
        active = np.ones((ny, nx), dtype=bool)
    else:
        active = np.zeros((ny, nx), dtype=bool)
        for iy in range(ny):
            for ix in range(nx):
                active[iy, ix] = bool(mask(float(xs[ix]), float(ys[iy])))
    n_active = int(active.sum())
    if n_active == 0:
        raise EmptyDomain("mask leaves no active cell")

    node_of_cell = np.full((ny, nx), -1, dtype=np.int64)
    iys, ixs = np.nonzero(active)
    order = np.lexsort((ixs, iys))  # row-major ids: iy major, ix minor
    iys, ixs = iys[order], ixs[order]
    node_of_cell[iys, ixs] = np.arange(n_active)
    node_xy = np.column_stack([xs[ixs], ys[iys]]).astype(np.float64)

    eu, ev, elen, ediag = [], [], [], []
    # offsets chosen so the far endpoint always has the larger node id
    for dx, dy, diag in ((1, 0, False), (0, 1, False), (1, 1, True), (-1, 1, True)):
        jx, jy = ixs + dx, iys + dy
        ok = (jx >= 0) & (jx < nx) & (jy >= 0) & (jy < ny)
        src = np.nonzero(ok)[0]
        dst = node_of_cell[jy[ok], jx[ok]]
        keep = dst >= 0
        eu.append(src[keep])
        ev.append(dst[keep])
        n_e = int(keep.sum())
        elen.append(np.full(n_e, h * _SQRT2 if diag else h))
        ediag.append(np.full(n_e, diag, dtype=bool))
    edges_u = np.concatenate(eu).astype(np.int32)
    edges_v = np.concatenate(ev).astype(np.int32)
    edge_len = np.concatenate(elen).astype(np.float64)
    edge_is_diag = np.concatenate(ediag)
    edge_width = np.where(edge_is_diag, diag_width_factor * h, h).astype(np.float64)

    domain = GridDomain(
        kind="grid",
        bounds=(x0, y0, x1, y1),
        h=h,
        nx=nx,
        ny=ny,
        active_mask=active,
        node_xy=node_xy,
        cell_ix=ixs.astype(np.int32),
        cell_iy=iys.astype(np.int32),
        node_of_cell=node_of_cell,
        edges_u=edges_u,
        edges_v=edges_v,
        edge_len=edge_len,
        edge_width=edge_width,
        edge_is_diag=edge_is_diag,
        node_area=np.full(n_active, h * h),
    )
    _check_connected(domain)
    return domain


def build_graph_domain(
    node_xy: Sequence[tuple[float, float]],
    edges: Sequence[tuple[int, int, float, float]],
    node_area: Sequence[float] | None = None,
) -> GridDomain:
    """Explicit graph domain for synthetic fixtures (e.g. Pigou networks).

    ``edges`` rows are ``(u, v, length, width)``.  Such domains bypass the
    lattice invariants; per-node areas (default 1) stand in for cell areas
    when projecting intensities onto nodes.
    """
    xy = np.asarray(node_xy, dtype=np.float64).reshape(-1, 2)
    n = xy.shape[0]
    if n == 0:
        raise EmptyDomain("graph domain needs at least one node")
    eu = np.array([int(e[0]) for e in edges], dtype=np.int32)
    ev = np.array([int(e[1]) for e in edges], dtype=np.int32)
    elen = np.array([float(e[2]) for e in edges], dtype=np.float64)
    ew = np.array([float(e[3]) for e in edges], dtype=np.float64)
    if eu.size and (elen <= 0).any():
        raise ValueError("edge lengths must be positive")
    if eu.size and (ew <= 0).any():
        raise ValueError("edge widths must be positive")
    if eu.size and ((eu < 0) | (eu >= n) | (ev < 0) | (ev >= n) | (eu == ev)).any():
        raise ValueError("edge endpoints out of range or degenerate")
    pairs = {(min(int(a), int(b)), max(int(a), int(b))) for a, b in zip(eu, ev)}
    if len(pairs) != eu.size:
        raise ValueError("parallel edges are not supported; insert a midpoint node")
    areas = (
        np.full(n, 1.0)
        if node_area is None
        else np.asarray(node_area, dtype=np.float64).copy()
    )
    lo = xy.min(axis=0)
    hi = xy.max(axis=0)
    domain = GridDomain(
        kind="graph",
        bounds=(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])),
        h=0.0,
        nx=0,
        ny=0,
        active_mask=np.zeros((0, 0), dtype=bool),
        node_xy=xy,
        cell_ix=np.full(n, -1, dtype=np.int32),
        cell_iy=np.full(n, -1, dtype=np.int32),
        node_of_cell=np.zeros((0, 0), dtype=np.int64),
        edges_u=eu,
        edges_v=ev,
        edge_len=elen,
        edge_width=ew,
        edge_is_diag=np.zeros(eu.shape[0], dtype=bool),
        node_area=areas,
    )
    _check_connected(domain)
    return domain


def _check_connected(domain: GridDomain) -> None:
    n = domain.n_nodes
    if n == 1:
        return
    seen = np.zeros(n, dtype=bool)
    queue = deque([0])
    seen[0] = True
    count = 1
    indptr, adj = domain.adj_indptr, domain.adj_node
    while queue:
        u = queue.popleft()
        for k in range(indptr[u], indptr[u + 1]):
            v = int(adj[k])
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    if count != n:
        raise DisconnectedDomain(
            f"active subgraph splits: reached {count} of {n} nodes"
        )


def node_at(domain: GridDomain, point: tuple[float, float]) -> int:
    """Id of the active node nearest to ``point``; lowest id wins exact ties.

    Raises ``OutsideDomain`` when the point lies outside the bounding box or
    the nearest active node is farther than ``h`` (graph domains only check
    the nearest-node rule against the smallest edge length).
    """
    x, y = float(point[0]), float(point[1])
    x0, y0, x1, y1 = domain.bounds
    if not (x0 <= x <= x1 and y0 <= y <= y1):
        raise OutsideDomain(f"point ({x}, {y}) outside bounds {domain.bounds}")
    d2 = (domain.node_xy[:, 0] - x) ** 2 + (domain.node_xy[:, 1] - y) ** 2
    node = int(np.argmin(d2))  # argmin returns the first (lowest) id on ties
    limit = domain.h if domain.kind == "grid" else (
        float(domain.edge_len.min()) if domain.n_edges else np.inf
    )
    if np.sqrt(d2[node]) > limit:
        raise OutsideDomain(
            f"nearest active node is {np.sqrt(d2[node]):.3g} away (> {limit:.3g})"
        )
    return node
