"""Exact discrete Monge-Kantorovich solver with certificate potentials.

Given a cost table on the product of two finite supports and balanced
marginals, finds a coupling minimizing the total cost together with dual
potentials (u, v) certifying optimality: u + v <= c everywhere on the
support product, with equality on the support of the optimal plan, and
strong duality.  The LP is solved by the HiGHS simplex (basic solutions,
exact-ish reduced costs at ~1e-10), which at desk scale plays the role of a
transportation simplex; 1 x K and K x 1 instances short-circuit to the
forced coupling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import InfiniteCost, UnbalancedMarginals
from .measures import BALANCE_RTOL, DiscreteMeasure, TransportPlan

#: entries below this mass are dropped from returned plans
PLAN_MASS_FLOOR = 1e-15


@dataclass(frozen=True)
class MKSolution:
    plan: TransportPlan
    value: float
    potential_source: dict[int, float]
    potential_target: dict[int, float]


_constraint_cache: dict[tuple[int, int], sparse.csr_matrix] = {}


def _constraints(n0: int, n1: int) -> sparse.csr_matrix:
    key = (n0, n1)
    mat = _constraint_cache.get(key)
    if mat is None:
        cols = np.arange(n0 * n1)
        rows_src = cols // n1
        rows_dst = n0 + cols % n1
        data = np.ones(2 * n0 * n1)
        mat = sparse.csr_matrix(
            (
                data,
                (np.concatenate([rows_src, rows_dst]), np.concatenate([cols, cols])),
            ),
            shape=(n0 + n1, n0 * n1),
        )
        _constraint_cache[key] = mat
    return mat


def solve_mk(
    costs,
    mu0: DiscreteMeasure,
    mu1: DiscreteMeasure,
) -> MKSolution:
    """Minimize the average cost over couplings of (mu0, mu1).

    ``costs`` is either a dict ``(source, target) -> cost`` or a dense
    matrix aligned with the truncated supports of the marginals in
    increasing node order.  Raises ``UnbalancedMarginals`` when totals
    disagree beyond tolerance and ``InfiniteCost`` on non-finite costs.
    """
    total0, total1 = mu0.total, mu1.total
    scale = max(total0, total1)
    if scale <= 0:
        raise UnbalancedMarginals("marginals carry no mass")
    if abs(total0 - total1) > BALANCE_RTOL * scale:
        raise UnbalancedMarginals(
            f"marginal totals differ: {total0!r} vs {total1!r}"
        )
    src = mu0.support
    dst = mu1.support
    m0 = mu0.weights[src]
    m1 = mu1.weights[dst]
    # equalize totals exactly (drift from truncation is far below tolerance)
    m1 = m1 * (m0.sum() / m1.sum())

    if isinstance(costs, dict):
        C = np.empty((src.size, dst.size))
        for i, s in enumerate(src):
            for j, t in enumerate(dst):
                try:
                    C[i, j] = costs[(int(s), int(t))]
                except KeyError:
                    raise InfiniteCost(f"no cost for pair ({int(s)}, {int(t)})")
    else:
        C = np.asarray(costs, dtype=np.float64)
        if C.shape != (src.size, dst.size):
            raise ValueError(
                f"cost matrix shape {C.shape} does not match supports "
                f"({src.size}, {dst.size})"
            )
    if not np.isfinite(C).all():
        raise InfiniteCost("cost table contains non-finite values")

    return _solve_on_supports(C, src, dst, m0, m1)


def _solve_on_supports(C, src, dst, m0, m1) -> MKSolution:
    n0, n1 = src.size, dst.size
    if n0 == 1:
        plan = _plan(np.full(n1, src[0], dtype=np.int64), dst, m1)
        value = float(np.dot(C[0], m1))
        return MKSolution(plan, value, {int(src[0]): 0.0},
                          {int(t): float(C[0, j]) for j, t in enumerate(dst)})
    if n1 == 1:
        plan = _plan(src, np.full(n0, dst[0], dtype=np.int64), m0)
        value = float(np.dot(C[:, 0], m0))
        return MKSolution(plan, value, {int(s): float(C[i, 0]) for i, s in enumerate(src)},
                          {int(dst[0]): 0.0})

    res = linprog(
        C.ravel(),
        A_eq=_constraints(n0, n1),
        b_eq=np.concatenate([m0, m1]),
        bounds=(0, None),
        method="highs",
    )
    if res.status != 0:
        raise UnbalancedMarginals(f"transport LP failed: {res.message}")
    x = res.x.reshape(n0, n1)
    y = res.eqlin.marginals
    u = {int(s): float(y[i]) for i, s in enumerate(src)}
    v = {int(t): float(y[n0 + j]) for j, t in enumerate(dst)}
    ii, jj = np.nonzero(x > PLAN_MASS_FLOOR)
    plan = _plan(src[ii], dst[jj], x[ii, jj])
    value = float(np.dot(C[ii, jj], x[ii, jj]))
    return MKSolution(plan, value, u, v)


def _plan(sources, targets, masses) -> TransportPlan:
    keep = masses > PLAN_MASS_FLOOR
    return TransportPlan(
        np.asarray(sources)[keep].astype(np.int64),
        np.asarray(targets)[keep].astype(np.int64),
        np.asarray(masses, dtype=np.float64)[keep],
    )


def plan_cost(plan: TransportPlan, costs) -> float:
    """Total cost of a plan under a dict or callable cost accessor."""
    get = costs.__getitem__ if isinstance(costs, dict) else costs
    per_entry = np.array(
        [get((int(s), int(t))) for s, t in zip(plan.sources, plan.targets)]
    )
    return float(np.dot(plan.masses, per_entry))
