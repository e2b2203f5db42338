"""Brute-force reference solver for tiny instances.

Enumerates every simple path between support atoms and minimizes the
edge-separable congestion objective over path-mass distributions by
projected gradient with Armijo backtracking, entirely independently of the
Frank-Wolfe machinery.  A linear-minimization certificate bounds the
remaining suboptimality, so the returned value is trustworthy to the
reported gap.  Hard size limits keep the enumeration honest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .congestion import h_eval, h_prime
from .errors import TooLarge
from .mk import solve_mk
from .solver import Problem

MAX_NODES = 12
MAX_SUPPORT = 6
MAX_PATHS = 200_000


@dataclass(frozen=True)
class OracleResult:
    value: float
    certificate_gap: float
    iterations: int
    n_paths: int


def enumerate_simple_paths(domain, source: int, target: int, cap: int) -> list[tuple]:
    """All simple node sequences from source to target, DFS order."""
    indptr, adj = domain.adj_indptr, domain.adj_node
    out: list[tuple] = []
    if source == target:
        return [(source,)]
    visited = [False] * domain.n_nodes
    stack = [source]
    visited[source] = True

    def dfs(u: int):
        neighbors = sorted(int(adj[k]) for k in range(indptr[u], indptr[u + 1]))
        for v in neighbors:
            if v == target:
                out.append(tuple(stack) + (v,))
                if len(out) > cap:
                    raise TooLarge(f"more than {cap} simple paths")
            elif not visited[v]:
                visited[v] = True
                stack.append(v)
                dfs(v)
                stack.pop()
                visited[v] = False

    dfs(source)
    return out


def brute_force_solve(
    problem: Problem,
    tol: float = 1e-10,
    max_iters: int = 100_000,
) -> OracleResult:
    """Reference optimal value of the congestion problem by enumeration."""
    domain, model = problem.domain, problem.model
    if domain.n_nodes > MAX_NODES:
        raise TooLarge(f"domain has {domain.n_nodes} nodes (limit {MAX_NODES})")
    supp0 = problem.mu0.support
    supp1 = problem.mu1.support
    if supp0.size > MAX_SUPPORT or supp1.size > MAX_SUPPORT:
        raise TooLarge(
            f"supports {supp0.size} x {supp1.size} exceed limit {MAX_SUPPORT}"
        )

    if problem.fixed_plan is not None:
        pairs = [
            (int(s), int(t), float(m))
            for s, t, m in zip(
                problem.fixed_plan.sources,
                problem.fixed_plan.targets,
                problem.fixed_plan.masses,
            )
        ]
        forced = True
    elif supp0.size == 1:
        pairs = [(int(supp0[0]), int(t), float(problem.mu1.weights[t])) for t in supp1]
        forced = True
    elif supp1.size == 1:
        pairs = [(int(s), int(supp1[0]), float(problem.mu0.weights[s])) for s in supp0]
        forced = True
    else:
        pairs = [(int(s), int(t), 0.0) for s in supp0 for t in supp1]
        forced = False

    # usage matrix rows: edge traversal counts of each enumerated path,
    # deduplicated per pair (paths with equal usage are interchangeable)
    usage_rows: list[np.ndarray] = []
    pair_slices: list[slice] = []
    for s, t, _ in pairs:
        rows = []
        seen = set()
        for nodes in enumerate_simple_paths(domain, s, t, MAX_PATHS):
            counts = np.zeros(domain.n_edges)
            for a, b in zip(nodes[:-1], nodes[1:]):
                counts[domain.edge_of_pair[(a, b)]] += 1.0
            key = counts.tobytes()
            if key not in seen:
                seen.add(key)
                rows.append(counts)
        if not rows:
            raise TooLarge(f"no path between {s} and {t}")
        start = len(usage_rows)
        usage_rows.extend(rows)
        pair_slices.append(slice(start, len(usage_rows)))
        if len(usage_rows) > MAX_PATHS:
            raise TooLarge(f"more than {MAX_PATHS} enumerated paths")
    A = np.asarray(usage_rows)

    lengths, widths = domain.edge_len, domain.edge_width
    lw = lengths * widths

    def objective(m: np.ndarray) -> float:
        f = A.T @ m
        return float(lw @ h_eval(model, f / widths))

    def gradient(m: np.ndarray) -> np.ndarray:
        f = A.T @ m
        return A @ (lengths * h_prime(model, f / widths))

    if forced:
        project = _make_forced_projection(pair_slices, [m for _, _, m in pairs])
        lin_min = _make_forced_linmin(pair_slices, [m for _, _, m in pairs])
    else:
        project, lin_min = _make_coupled_ops(
            problem, pairs, pair_slices, supp0, supp1
        )

    m = project(np.ones(A.shape[0]))
    value = objective(m)
    step = 1.0
    gap = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        g = gradient(m)
        gap = float(g @ m - lin_min(g))
        if gap <= tol * max(1.0, abs(value)):
            break
        # projected gradient with Armijo backtracking
        for _ in range(60):
            cand = project(m - step * g)
            cand_val = objective(cand)
            if cand_val <= value + 1e-4 * float(g @ (cand - m)):
                break
            step *= 0.5
        if np.allclose(cand, m, rtol=0.0, atol=1e-18):
            break
        m, value = cand, cand_val
        step *= 1.3
    return OracleResult(value, gap, it, A.shape[0])


def _project_scaled_simplex(v: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = total}."""
    if total <= 0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    rho = np.nonzero(u - css / (np.arange(v.size) + 1) > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _make_forced_projection(slices, totals):
    def project(v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        for sl, total in zip(slices, totals):
            out[sl] = _project_scaled_simplex(v[sl], total)
        return out

    return project


def _make_forced_linmin(slices, totals):
    def lin_min(g: np.ndarray) -> float:
        return float(sum(t * g[sl].min() for sl, t in zip(slices, totals)))

    return lin_min


def _make_coupled_ops(problem, pairs, slices, supp0, supp1):
    """Projection and linear minimization when the coupling is free.

    The feasible set couples per-pair path masses through the marginal
    equalities; projection uses Dykstra's alternating scheme between the
    affine marginal constraints and the nonnegative orthant, linear
    minimization routes each pair on its cheapest path and solves a tiny
    transport problem over the pair costs.
    """
    n_paths = slices[-1].stop
    idx0 = {int(s): i for i, s in enumerate(supp0)}
    idx1 = {int(t): j for j, t in enumerate(supp1)}
    M = np.zeros((supp0.size + supp1.size, n_paths))
    for (s, t, _), sl in zip(pairs, slices):
        M[idx0[s], sl] = 1.0
        M[supp0.size + idx1[t], sl] = 1.0
    b = np.concatenate(
        [problem.mu0.weights[supp0], problem.mu1.weights[supp1]]
    )
    pinv = np.linalg.pinv(M @ M.T)

    def proj_affine(v):
        return v - M.T @ (pinv @ (M @ v - b))

    def project(v: np.ndarray) -> np.ndarray:
        x = v.copy()
        p = np.zeros_like(v)
        q = np.zeros_like(v)
        for _ in range(400):
            y = proj_affine(x + p)
            p = x + p - y
            x_new = np.maximum(y + q, 0.0)
            q = y + q - x_new
            if np.max(np.abs(x_new - x)) < 1e-14:
                x = x_new
                break
            x = x_new
        return x

    def lin_min(g: np.ndarray) -> float:
        costs = np.array([g[sl].min() for sl in slices]).reshape(
            supp0.size, supp1.size
        )
        return solve_mk(costs, problem.mu0, problem.mu1).value

    return project, lin_min
