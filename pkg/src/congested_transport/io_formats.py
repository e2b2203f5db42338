"""CSV and text artifact formats.

Numbers are written with ``repr`` (shortest round-trip decimal), so every
emitted file re-parses to bit-identical values.  Node references travel as
coordinates and are snapped back with the nearest-node rule.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .geodesics import CostTable
from .grid import GridDomain, node_at
from .measures import DiscreteMeasure, TransportPlan
from .pathflow import GridPath, IntensityField, PathFlow


def _fmt(x: float) -> str:
    return repr(float(x))


def write_edge_flow_csv(path, domain: GridDomain, field: IntensityField) -> None:
    with open(path, "w", newline="") as fp:
        out = csv.writer(fp)
        out.writerow(["u_x", "u_y", "v_x", "v_y", "flow"])
        for e in range(domain.n_edges):
            ux, uy = domain.node_xy[domain.edges_u[e]]
            vx, vy = domain.node_xy[domain.edges_v[e]]
            out.writerow(
                [_fmt(ux), _fmt(uy), _fmt(vx), _fmt(vy), _fmt(field.edge_flow[e])]
            )


def read_edge_flow_csv(path, domain: GridDomain) -> IntensityField:
    flow = np.zeros(domain.n_edges)
    with open(path, newline="") as fp:
        rows = csv.reader(fp)
        header = next(rows)
        if header[:5] != ["u_x", "u_y", "v_x", "v_y", "flow"]:
            raise ValueError(f"unexpected edge-flow header: {header}")
        for row in rows:
            u = node_at(domain, (float(row[0]), float(row[1])))
            v = node_at(domain, (float(row[2]), float(row[3])))
            e = domain.edge_of_pair.get((u, v))
            if e is None:
                raise ValueError(f"row references a non-edge: {row}")
            flow[e] += float(row[4])
    return IntensityField.from_flow(domain, flow)


def write_cell_density_csv(path, domain: GridDomain, density: np.ndarray) -> None:
    with open(path, "w", newline="") as fp:
        out = csv.writer(fp)
        out.writerow(["cell_i", "cell_j", "density"])
        for node in range(domain.n_nodes):
            out.writerow(
                [
                    int(domain.cell_ix[node]),
                    int(domain.cell_iy[node]),
                    _fmt(density[node]),
                ]
            )


def write_paths(path, domain: GridDomain, flow: PathFlow) -> None:
    """One line per path: ``mass; x0,y0; x1,y1; ...``."""
    with open(path, "w") as fp:
        for grid_path, mass in flow:
            coords = "; ".join(
                f"{_fmt(domain.node_xy[n][0])},{_fmt(domain.node_xy[n][1])}"
                for n in grid_path.nodes
            )
            fp.write(f"{_fmt(mass)}; {coords}\n")


def read_paths(path, domain: GridDomain) -> PathFlow:
    entries = []
    with open(path) as fp:
        for line in fp:
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(";")]
            mass = float(parts[0])
            nodes = [
                node_at(domain, tuple(float(c) for c in part.split(",")))
                for part in parts[1:]
            ]
            entries.append((np.array(nodes, dtype=np.int32), mass))
    return PathFlow.from_entries(domain, entries)


def write_plan_csv(path, domain: GridDomain, plan: TransportPlan) -> None:
    with open(path, "w", newline="") as fp:
        out = csv.writer(fp)
        out.writerow(["sx", "sy", "tx", "ty", "mass"])
        for s, t, m in zip(plan.sources, plan.targets, plan.masses):
            sx, sy = domain.node_xy[s]
            tx, ty = domain.node_xy[t]
            out.writerow([_fmt(sx), _fmt(sy), _fmt(tx), _fmt(ty), _fmt(m)])


def read_plan_csv(path, domain: GridDomain) -> TransportPlan:
    entries = []
    with open(path, newline="") as fp:
        rows = csv.reader(fp)
        header = next(rows)
        if header[:5] != ["sx", "sy", "tx", "ty", "mass"]:
            raise ValueError(f"unexpected plan header: {header}")
        for row in rows:
            s = node_at(domain, (float(row[0]), float(row[1])))
            t = node_at(domain, (float(row[2]), float(row[3])))
            entries.append((s, t, float(row[4])))
    return TransportPlan.from_entries(entries)


def write_cost_table_csv(path, table: CostTable) -> None:
    with open(path, "w", newline="") as fp:
        out = csv.writer(fp)
        out.writerow(["source_id", "node_id", "cost"])
        for i, s in enumerate(table.sources):
            for node in range(table.cost.shape[1]):
                out.writerow([int(s), node, _fmt(table.cost[i, node])])


def read_measure_csv(path, domain: GridDomain) -> DiscreteMeasure:
    """Rows ``node_x,node_y,mass`` snapped to nearest nodes (not normalized)."""
    w = np.zeros(domain.n_nodes)
    with open(path, newline="") as fp:
        rows = csv.reader(fp)
        first = next(rows)
        if not _looks_numeric(first):
            pass  # header row
        else:
            w[node_at(domain, (float(first[0]), float(first[1])))] += float(first[2])
        for row in rows:
            if not row:
                continue
            w[node_at(domain, (float(row[0]), float(row[1])))] += float(row[2])
    return DiscreteMeasure(w)


def _looks_numeric(row) -> bool:
    try:
        [float(c) for c in row[:3]]
        return True
    except (ValueError, IndexError):
        return False


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
