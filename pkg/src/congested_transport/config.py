"""Run configuration: flat dotted-section key-values, JSON or INI flavored.

A config file is either a JSON object with nested sections or an INI file
with the same section/key names::

    [domain]
    bounds = 0,0,1,1
    resolution = 64

    [mu0]
    generator = segment
    a = 0,0
    b = 0,1

    [congestion]
    q = 1.5
    a = 1.0
    c0 = 0.05
    mode = equilibrium

Validation failures raise ``ConfigError`` naming the offending key.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .congestion import CongestionModel, Mode
from .errors import ConfigError
from .grid import DIAG_WIDTH_FACTOR, GridDomain, build_graph_domain, build_grid
from .io_formats import read_measure_csv, read_plan_csv
from .measures import (
    DiscreteMeasure,
    TransportPlan,
    gaussian_measure,
    normalize,
    points_measure,
    segment_measure,
    uniform_measure,
)
from .solver import Problem, SolverConfig


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path
    domain: GridDomain
    mu0: DiscreteMeasure
    mu1: DiscreteMeasure
    model: CongestionModel
    solver: SolverConfig
    fixed_plan: TransportPlan | None
    check_tol: float
    output_dir: Path
    emit: dict = field(default_factory=dict)

    def problem(self) -> Problem:
        return Problem(self.domain, self.mu0, self.mu1, self.model, self.fixed_plan)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    text = path.read_text()
    if text.lstrip().startswith("{"):
        raw = json.loads(text)
    else:
        parser = configparser.ConfigParser()
        parser.read_string(text)
        raw = {s: dict(parser.items(s)) for s in parser.sections()}
    return build_run_config(raw, base_dir=path.parent)


def build_run_config(raw: dict, base_dir=".") -> RunConfig:
    base_dir = Path(base_dir)
    domain = _build_domain(raw.get("domain", {}))
    model = _build_model(raw.get("congestion", {}))
    mu0 = _build_measure("mu0", raw.get("mu0", {}), domain, base_dir)
    mu1 = _build_measure("mu1", raw.get("mu1", {}), domain, base_dir)
    solver = _build_solver(raw.get("solver", {}))

    fixed_plan = None
    fp = raw.get("fixed_plan", {})
    if fp.get("csv"):
        plan_path = base_dir / str(fp["csv"])
        if not plan_path.exists():
            raise ConfigError(f"fixed_plan.csv file {plan_path} does not exist")
        fixed_plan = read_plan_csv(plan_path, domain)

    check_tol = _get_float(raw.get("check", {}), "check", "tol", 1e-2)
    if check_tol <= 0:
        raise ConfigError("check.tol must be positive")

    out = raw.get("output", {})
    output_dir = base_dir / str(out.get("directory", "out"))
    emit = {
        "intensity_csv": _get_bool(out, "output", "emit_intensity_csv", True),
        "flow_csv": _get_bool(out, "output", "emit_flow_csv", True),
        "paths": _get_bool(out, "output", "emit_paths", True),
        "svg": _get_bool(out, "output", "emit_svg", False),
        "cost_table": _get_bool(out, "output", "emit_cost_table", False),
    }
    return RunConfig(
        raw=raw,
        base_dir=base_dir,
        domain=domain,
        mu0=mu0,
        mu1=mu1,
        model=model,
        solver=solver,
        fixed_plan=fixed_plan,
        check_tol=check_tol,
        output_dir=output_dir,
        emit=emit,
    )


def _build_domain(section: dict) -> GridDomain:
    kind = str(section.get("kind", "grid")).lower()
    if kind == "graph":
        try:
            nodes = _parse_tuples(section["nodes"], 2)
            edges_raw = _parse_tuples(section["edges"], 4)
        except KeyError as missing:
            raise ConfigError(f"domain.{missing.args[0]} is required for kind=graph")
        edges = [(int(u), int(v), l, w) for u, v, l, w in edges_raw]
        return build_graph_domain(nodes, edges)
    if kind != "grid":
        raise ConfigError(f"domain.kind must be 'grid' or 'graph' (got {kind!r})")
    bounds = _parse_floats(section.get("bounds", "0,0,1,1"))
    if len(bounds) != 4:
        raise ConfigError("domain.bounds must have four entries x0,y0,x1,y1")
    resolution = int(_get_float(section, "domain", "resolution", 0))
    if resolution < 2:
        raise ConfigError(f"domain.resolution must be >= 2 (got {resolution})")
    factor = _get_float(section, "domain", "diag_width_factor", DIAG_WIDTH_FACTOR)
    if factor <= 0:
        raise ConfigError("domain.diag_width_factor must be positive")
    mask = None
    polygon = section.get("polygon")
    if polygon:
        vertices = _parse_tuples(polygon, 2)
        if len(vertices) < 3:
            raise ConfigError("domain.polygon needs at least three vertices")
        mask = _polygon_mask(vertices)
    return build_grid(tuple(bounds), resolution, mask, diag_width_factor=factor)


def _polygon_mask(vertices):
    vx = np.array([v[0] for v in vertices])
    vy = np.array([v[1] for v in vertices])

    def inside(x: float, y: float) -> bool:
        j = len(vx) - 1
        hit = False
        for i in range(len(vx)):
            if (vy[i] > y) != (vy[j] > y):
                x_cross = vx[i] + (y - vy[i]) * (vx[j] - vx[i]) / (vy[j] - vy[i])
                if x < x_cross:
                    hit = not hit
            j = i
        return hit

    return inside


def _build_model(section: dict) -> CongestionModel:
    q = _get_float(section, "congestion", "q", 1.5)
    a = _get_float(section, "congestion", "a", 1.0)
    c0 = _get_float(section, "congestion", "c0", 0.05)
    mode_name = str(section.get("mode", "equilibrium")).lower()
    if not q > 1:
        raise ConfigError(f"congestion.q must exceed 1 (got {q})")
    if not a > 0:
        raise ConfigError(f"congestion.a must be positive (got {a})")
    if c0 < 0:
        raise ConfigError(f"congestion.c0 must be nonnegative (got {c0})")
    try:
        mode = Mode(mode_name)
    except ValueError:
        raise ConfigError(
            f"congestion.mode must be 'equilibrium' or 'social_cost' (got {mode_name!r})"
        )
    return CongestionModel(q=q, a=a, c0=c0, mode=mode)


def _build_measure(name, section: dict, domain, base_dir: Path) -> DiscreteMeasure:
    if section.get("csv"):
        csv_path = base_dir / str(section["csv"])
        if not csv_path.exists():
            raise ConfigError(f"{name}.csv file {csv_path} does not exist")
        return normalize(read_measure_csv(csv_path, domain))
    generator = str(section.get("generator", "")).lower()
    if not generator:
        raise ConfigError(f"{name}.generator (or {name}.csv) is required")
    if generator == "segment":
        a = _parse_floats(section.get("a", ""))
        b = _parse_floats(section.get("b", ""))
        if len(a) != 2 or len(b) != 2:
            raise ConfigError(f"{name}.a and {name}.b must be points 'x,y'")
        return segment_measure(domain, tuple(a), tuple(b))
    if generator == "uniform":
        return uniform_measure(domain)
    if generator == "gaussian":
        center = _parse_floats(section.get("center", ""))
        sigma = _get_float(section, name, "sigma", 0.0)
        if len(center) != 2:
            raise ConfigError(f"{name}.center must be a point 'x,y'")
        if sigma <= 0:
            raise ConfigError(f"{name}.sigma must be positive")
        return gaussian_measure(domain, tuple(center), sigma)
    if generator == "points":
        pts = _parse_tuples(section.get("points", ""), 3)
        if not pts:
            raise ConfigError(f"{name}.points must list 'x,y,mass; ...' entries")
        return points_measure(domain, pts)
    raise ConfigError(
        f"{name}.generator must be one of segment|uniform|gaussian|points (got {generator!r})"
    )


def _build_solver(section: dict) -> SolverConfig:
    seed_raw = section.get("seed", "")
    seed = None
    if seed_raw not in ("", None):
        seed = int(seed_raw)
    cfg = dict(
        max_iters=int(_get_float(section, "solver", "max_iters", 500)),
        gap_tol=_get_float(section, "solver", "gap_tol", 1e-3),
        line_search_tol=_get_float(section, "solver", "line_search_tol", 1e-10),
        path_prune_mass=_get_float(section, "solver", "path_prune_mass", 1e-12),
        seed=seed,
    )
    try:
        return SolverConfig(**cfg)
    except ValueError as exc:
        raise ConfigError(f"solver config invalid: {exc}")


def _get_float(section: dict, sec_name: str, key: str, default: float) -> float:
    value = section.get(key, default)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{sec_name}.{key} must be a number (got {value!r})")


def _get_bool(section: dict, sec_name: str, key: str, default: bool) -> bool:
    value = section.get(key, default)
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{sec_name}.{key} must be a boolean (got {value!r})")


def _parse_floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    text = str(text).strip()
    if not text:
        return []
    return [float(part) for part in text.replace(";", ",").split(",") if part.strip()]


def _parse_tuples(text, arity: int) -> list[tuple]:
    if isinstance(text, (list, tuple)):
        return [tuple(float(c) for c in row) for row in text]
    out = []
    for chunk in str(text).split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [float(c) for c in chunk.split(",")]
        if len(parts) != arity:
            raise ConfigError(
                f"expected {arity} comma-separated values per entry, got {chunk!r}"
            )
        out.append(tuple(parts))
    return out
