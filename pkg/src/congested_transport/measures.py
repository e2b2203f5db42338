"""Discrete measures on grid nodes and transport plans between them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OutsideDomain, UnbalancedMarginals, ZeroMass
from .grid import GridDomain, node_at

#: plan/marginal balance tolerance (relative mass error)
BALANCE_RTOL = 1e-9

#: atoms below this absolute mass are dropped before transport solves
SUPPORT_TRUNCATION = 1e-12


@dataclass(frozen=True)
class DiscreteMeasure:
    """Nonnegative masses indexed by node id (dense array of length n_nodes)."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValueError("weights must be a 1-d array")
        if (w < 0).any():
            raise ValueError("measure weights must be nonnegative")
        object.__setattr__(self, "weights", w)
        w.setflags(write=False)

    @classmethod
    def from_dict(cls, weights: dict[int, float], n_nodes: int) -> "DiscreteMeasure":
        w = np.zeros(n_nodes)
        for node, mass in weights.items():
            w[node] += mass
        return cls(w)

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def support(self) -> np.ndarray:
        return np.nonzero(self.weights > SUPPORT_TRUNCATION)[0]

    def mass_at(self, node: int) -> float:
        return float(self.weights[node])


def normalize(measure: DiscreteMeasure) -> DiscreteMeasure:
    """Scale to total mass 1.  Raises ``ZeroMass`` when nothing to scale."""
    total = measure.total
    if total <= 0.0:
        raise ZeroMass("cannot normalize a measure with zero total mass")
    return DiscreteMeasure(measure.weights / total)


@dataclass(frozen=True)
class TransportPlan:
    """Sparse coupling: parallel arrays of (source, target, mass > 0)."""

    sources: np.ndarray
    targets: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.sources, dtype=np.int64)
        t = np.asarray(self.targets, dtype=np.int64)
        m = np.asarray(self.masses, dtype=np.float64)
        if not (s.shape == t.shape == m.shape) or s.ndim != 1:
            raise ValueError("plan arrays must be 1-d and equally sized")
        if (m <= 0).any():
            raise ValueError("plan masses must be positive")
        if len({(int(a), int(b)) for a, b in zip(s, t)}) != s.size:
            raise ValueError("duplicate (source, target) keys in plan")
        for name, arr in (("sources", s), ("targets", t), ("masses", m)):
            object.__setattr__(self, name, arr)
            arr.setflags(write=False)

    @classmethod
    def from_entries(
        cls, entries: list[tuple[int, int, float]]
    ) -> "TransportPlan":
        merged: dict[tuple[int, int], float] = {}
        for s, t, m in entries:
            key = (int(s), int(t))
            merged[key] = merged.get(key, 0.0) + float(m)
        keys = sorted(merged)
        return cls(
            np.array([k[0] for k in keys], dtype=np.int64),
            np.array([k[1] for k in keys], dtype=np.int64),
            np.array([merged[k] for k in keys]),
        )

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    def __len__(self) -> int:
        return int(self.sources.size)


def marginals(
    plan: TransportPlan, n_nodes: int | None = None
) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Left/right marginals by summing masses per source/target node."""
    if n_nodes is None:
        n_nodes = int(max(plan.sources.max(), plan.targets.max())) + 1
    left = np.zeros(n_nodes)
    right = np.zeros(n_nodes)
    np.add.at(left, plan.sources, plan.masses)
    np.add.at(right, plan.targets, plan.masses)
    return DiscreteMeasure(left), DiscreteMeasure(right)


def check_plan_marginals(
    plan: TransportPlan,
    mu0: DiscreteMeasure,
    mu1: DiscreteMeasure,
    rtol: float = BALANCE_RTOL,
) -> None:
    """Verify plan marginals against (mu0, mu1); raise rather than renormalize."""
    n = mu0.weights.size
    left, right = marginals(plan, n)
    scale = max(mu0.total, mu1.total, 1e-300)
    err_l = np.abs(left.weights - mu0.weights).max() / scale
    err_r = np.abs(right.weights - mu1.weights).max() / scale
    if err_l > rtol or err_r > rtol:
        raise UnbalancedMarginals(
            f"plan marginals deviate (left {err_l:.3e}, right {err_r:.3e}, rtol {rtol:.1e})"
        )


def segment_measure(
    domain: GridDomain,
    a: tuple[float, float],
    b: tuple[float, float],
) -> DiscreteMeasure:
    """Normalized 1-d Hausdorff measure of segment [a, b] projected to nodes.

    Each active cell receives mass proportional to the length of the segment
    inside its closed box; a degenerate segment (a == b) becomes a Dirac at
    the nearest node.  Cell boxes are closed, so a segment running exactly
    along a shared cell face splits its mass between both adjacent columns.
    """
    if domain.kind != "grid":
        raise OutsideDomain("segment measures require a lattice domain")
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    if ax == bx and ay == by:
        node = node_at(domain, (ax, ay))
        w = np.zeros(domain.n_nodes)
        w[node] = 1.0
        return DiscreteMeasure(w)

    x0, y0, _, _ = domain.bounds
    h = domain.h
    dx, dy = bx - ax, by - ay
    seg_len = float(np.hypot(dx, dy))
    w = np.zeros(domain.n_nodes)

    ix_lo = max(0, int(np.floor((min(ax, bx) - x0) / h)) - 1)
    ix_hi = min(domain.nx - 1, int(np.floor((max(ax, bx) - x0) / h)) + 1)
    iy_lo = max(0, int(np.floor((min(ay, by) - y0) / h)) - 1)
    iy_hi = min(domain.ny - 1, int(np.floor((max(ay, by) - y0) / h)) + 1)

    def axis_interval(p0: float, d: float, lo: float, hi: float):
        if d == 0.0:
            return (0.0, 1.0) if lo <= p0 <= hi else None
        t0, t1 = (lo - p0) / d, (hi - p0) / d
        return (min(t0, t1), max(t0, t1))

    for iy in range(iy_lo, iy_hi + 1):
        for ix in range(ix_lo, ix_hi + 1):
            node = int(domain.node_of_cell[iy, ix])
            if node < 0:
                continue
            tx = axis_interval(ax, dx, x0 + ix * h, x0 + (ix + 1) * h)
            ty = axis_interval(ay, dy, y0 + iy * h, y0 + (iy + 1) * h)
            if tx is None or ty is None:
                continue
            t_lo = max(tx[0], ty[0], 0.0)
            t_hi = min(tx[1], ty[1], 1.0)
            if t_hi > t_lo:
                w[node] += (t_hi - t_lo) * seg_len
    total = w.sum()
    if total <= 0.0:
        raise OutsideDomain("segment does not cross any active cell")
    return DiscreteMeasure(w / total)


def uniform_measure(domain: GridDomain) -> DiscreteMeasure:
    """Uniform probability over the active cells."""
    return DiscreteMeasure(np.full(domain.n_nodes, 1.0 / domain.n_nodes))


def gaussian_measure(
    domain: GridDomain, center: tuple[float, float], sigma: float
) -> DiscreteMeasure:
    """Gaussian density sampled at cell centers, normalized to mass 1."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    d2 = ((domain.node_xy - np.asarray(center, dtype=np.float64)) ** 2).sum(axis=1)
    w = np.exp(-0.5 * d2 / (sigma * sigma))
    total = w.sum()
    if total <= 0:
        raise ZeroMass("gaussian mass underflowed to zero on the active cells")
    return DiscreteMeasure(w / total)


def points_measure(
    domain: GridDomain, points: list[tuple[float, float, float]]
) -> DiscreteMeasure:
    """Weighted Diracs snapped to nearest nodes, normalized to mass 1."""
    w = np.zeros(domain.n_nodes)
    for x, y, mass in points:
        if mass < 0:
            raise ValueError("point masses must be nonnegative")
        w[node_at(domain, (x, y))] += mass
    total = w.sum()
    if total <= 0:
        raise ZeroMass("point list carries no mass")
    return DiscreteMeasure(w / total)
