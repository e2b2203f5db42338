"""Command-line driver: solve, check, and oracle subcommands.

Exit codes: 0 success/converged, 1 configuration or I/O error, 2 solver ran
out of iterations, 3 a checked flow fails the equilibrium tolerances.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import io_formats as iof
from .config import RunConfig, load_config
from .errors import CongestedTransportError, ConfigError
from .geodesics import shortest_costs_from_weights
from .oracle import brute_force_solve
from .pathflow import cell_density, decompose, intensity_from_paths
from .solver import (
    edge_metric_from_intensity,
    fw_solve,
    primal_objective,
    wardrop_check,
)
from .svg import render_heatmap


def run_solve(config: RunConfig) -> int:
    """Solve the configured problem and write all requested artifacts."""
    problem = config.problem()
    report = fw_solve(problem, config.solver)
    out = iof.ensure_dir(config.output_dir)

    with open(out / "convergence.jsonl", "w") as fp:
        for rec in report.history:
            fp.write(
                json.dumps(
                    {
                        "iter": rec.iter,
                        "primal": rec.primal,
                        "dual": rec.dual,
                        "gap": rec.gap,
                        "theta": rec.theta,
                        "mk_value": rec.mk_value,
                    }
                )
                + "\n"
            )

    summary = {
        "primal": report.primal,
        "dual": report.dual,
        "gap": report.gap,
        "wardrop_gap": report.wardrop_gap,
        "iterations": report.iterations,
        "converged": report.converged,
        "max_edge_density": report.max_edge_density,
    }
    if report.mk_gap is not None:
        summary["mk_gap"] = report.mk_gap
    if report.holder_ratio is not None:
        summary["holder_ratio"] = report.holder_ratio
    if report.warnings:
        summary["warnings"] = report.warnings
    with open(out / "summary.json", "w") as fp:
        json.dump(summary, fp, indent=2)

    domain = config.domain
    if config.emit.get("flow_csv", True):
        iof.write_edge_flow_csv(out / "edge_flow.csv", domain, report.intensity)
    if config.emit.get("intensity_csv", True) and domain.kind == "grid":
        iof.write_cell_density_csv(
            out / "cell_density.csv",
            domain,
            cell_density(domain, report.intensity),
        )
    if config.emit.get("paths", True):
        iof.write_paths(out / "paths.txt", domain, report.flow)
    iof.write_plan_csv(out / "plan.csv", domain, report.plan)
    if config.emit.get("cost_table", False):
        sources = problem.mu0.support
        table = shortest_costs_from_weights(
            domain, domain.edge_len * report.edge_metric, sources
        )
        iof.write_cost_table_csv(out / "cost_table.csv", table)
    if config.emit.get("svg", False) and domain.kind == "grid":
        render_heatmap(
            domain,
            cell_density(domain, report.intensity),
            out / "density.svg",
            flow=report.flow,
        )
    print(json.dumps(summary))
    return 0 if report.converged else 2


def run_check(config: RunConfig, flow_file: str, plan_file: str | None) -> int:
    """Verify a stored flow (and optionally plan) against the equilibrium
    conditions; exit 0 when all computed gaps pass ``check.tol``."""
    problem = config.problem()
    domain = config.domain
    flow = iof.read_paths(flow_file, domain).merged()

    left, right = flow.endpoint_measures()
    _require_marginal(left.weights, problem.mu0.weights, "mu0")
    _require_marginal(right.weights, problem.mu1.weights, "mu1")
    if plan_file:
        plan = iof.read_plan_csv(plan_file, domain)
        flow_plan, _ = decompose(flow)
        got = {
            (int(s), int(t)): m
            for s, t, m in zip(flow_plan.sources, flow_plan.targets, flow_plan.masses)
        }
        for s, t, m in zip(plan.sources, plan.targets, plan.masses):
            if abs(got.get((int(s), int(t)), 0.0) - m) > 1e-9:
                from .errors import InconsistentMarginals

                raise InconsistentMarginals(
                    f"plan entry ({int(s)}, {int(t)}) mass mismatch"
                )

    intensity = intensity_from_paths(domain, flow)
    edge_metric = edge_metric_from_intensity(problem, intensity)
    include_mk = config.fixed_plan is None
    wardrop_gap, mk_gap = wardrop_check(
        problem, flow, edge_metric, include_mk=include_mk, metric_kind="edge"
    )
    result = {
        "wardrop_gap": wardrop_gap,
        "primal": primal_objective(problem, intensity),
    }
    if mk_gap is not None:
        result["mk_gap"] = mk_gap
    out = iof.ensure_dir(config.output_dir)
    with open(out / "check.json", "w") as fp:
        json.dump(result, fp, indent=2)
    print(json.dumps(result))
    ok = wardrop_gap <= config.check_tol and (
        mk_gap is None or mk_gap <= config.check_tol
    )
    return 0 if ok else 3


def _require_marginal(got, expected, name) -> None:
    import numpy as np

    from .errors import InconsistentMarginals

    err = float(np.abs(got - expected).max())
    if err > 1e-9 * max(float(expected.sum()), 1e-300):
        raise InconsistentMarginals(
            f"flow endpoints deviate from {name} by {err:.3e}"
        )


def run_oracle(config: RunConfig) -> int:
    """Brute-force optimal value for comparison with the main solver."""
    problem = config.problem()
    result = brute_force_solve(problem)
    payload = dataclasses.asdict(result)
    payload["oracle_value"] = payload.pop("value")
    out = iof.ensure_dir(config.output_dir)
    with open(out / "oracle.json", "w") as fp:
        json.dump(payload, fp, indent=2)
    print(json.dumps(payload))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="congested-transport",
        description="Congested optimal transport solver on grid domains",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the Frank-Wolfe solver")
    p_solve.add_argument("config")

    p_check = sub.add_parser("check", help="verify a stored flow/plan")
    p_check.add_argument("config")
    p_check.add_argument("--flow", required=True)
    p_check.add_argument("--plan")

    p_oracle = sub.add_parser("oracle", help="brute-force value on tiny instances")
    p_oracle.add_argument("config")

    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if args.command == "solve":
            return run_solve(config)
        if args.command == "check":
            return run_check(config, args.flow, args.plan)
        return run_oracle(config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CongestedTransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
