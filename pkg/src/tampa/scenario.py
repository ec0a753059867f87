"""Scenario definition and JSON (de)serialisation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .graph import Edge, GraphError, PatrolGraph, edge_key, parse_edge_key

DATA_DIR = Path(__file__).parent / "data"


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class TrafficParams:
    base: Dict[Edge, float]
    diurnal_amplitude: float = 0.2
    diurnal_period: float = 1440.0
    noise_std: float = 0.05


@dataclass(frozen=True)
class ComplaintParams:
    weights: Dict[Edge, float]
    shifts: Tuple[Tuple[int, Dict[Edge, float]], ...] = ()
    noise_mean: float = 0.5
    noise_std: float = 0.2
    cap: int = 30

    def weights_at(self, t: int) -> Dict[Edge, float]:
        w = self.weights
        for (ts, ws) in self.shifts:
            if ts <= t:
                w = ws
        return w

    @property
    def shift_times(self) -> List[int]:
        return [ts for ts, _ in self.shifts]


@dataclass(frozen=True)
class Scenario:
    name: str
    graph: PatrolGraph
    mtt: Dict[Edge, float]
    start_node: int
    horizon: int
    tau: int
    traffic: TrafficParams
    complaints: ComplaintParams
    hotspots: Tuple[Tuple[int, int], ...] = ()
    extra: dict = field(default_factory=dict)

    @property
    def edges(self) -> List[Edge]:
        return self.graph.edges


def _edge_map(raw: dict, edges: List[Edge], what: str, default: Optional[float] = None) -> Dict[Edge, float]:
    out: Dict[Edge, float] = {}
    for key, value in raw.items():
        try:
            i, j = parse_edge_key(key)
        except ValueError:
            raise ScenarioError(f"{what}: bad edge key {key!r}") from None
        if (i, j) not in edges:
            raise ScenarioError(f"{what}: edge {key} is not in the graph")
        out[(i, j)] = float(value)
        out[(j, i)] = float(value)
    for e in edges:
        if e not in out:
            if default is None:
                raise ScenarioError(f"{what}: missing value for edge {edge_key(*e)}")
            out[e] = float(default)
    return out


def scenario_from_dict(d: dict) -> Scenario:
    try:
        coords = {int(n["id"]): (float(n["x"]), float(n["y"])) for n in d["nodes"]}
        lengths: Dict[Edge, float] = {}
        mtt: Dict[Edge, float] = {}
        for e in d["edges"]:
            i, j = int(e["from"]), int(e["to"])
            length = float(e["length"])
            if (i, j) in lengths and not math.isclose(lengths[(i, j)], length, rel_tol=1e-9):
                raise ScenarioError(f"asymmetric length on edge ({j},{i}): {lengths[(i, j)]} vs {length}")
            lengths[(i, j)] = length
            mtt[(i, j)] = float(e["mtt"])
            if (j, i) not in lengths:
                lengths[(j, i)] = length
                mtt[(j, i)] = float(e["mtt"])
        graph = PatrolGraph(coords, lengths)
        graph.validate()
    except GraphError as exc:
        raise ScenarioError(str(exc)) from None
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"malformed graph section: {exc!r}") from None

    edges = graph.edges
    for e, v in mtt.items():
        if not v > 0:
            raise ScenarioError(f"edge {edge_key(*e)}: mtt must be positive")

    horizon = int(d.get("horizon", 700))
    tau = int(d.get("tau", 8))
    start = int(d.get("start_node", min(coords)))
    if horizon < 1:
        raise ScenarioError("horizon must be >= 1")
    if tau < 1:
        raise ScenarioError("tau must be >= 1 minute")
    if start not in coords:
        raise ScenarioError(f"start_node {start} is not a node")

    tr = d.get("traffic", {})
    base_raw = tr.get("base", 1.0)
    if isinstance(base_raw, dict):
        base = _edge_map(base_raw, edges, "traffic.base")
    else:
        base = {e: float(base_raw) * mtt[e] for e in edges}
    for e, b in base.items():
        if not b > 0:
            raise ScenarioError(f"traffic.base: edge {edge_key(*e)} must be positive")
    traffic = TrafficParams(
        base=base,
        diurnal_amplitude=float(tr.get("diurnal_amplitude", 0.2)),
        diurnal_period=float(tr.get("diurnal_period", 1440.0)),
        noise_std=float(tr.get("noise_std", 0.05)),
    )

    cp = d.get("complaints", {})
    default_w = cp.get("default_weight")
    weights = _edge_map(cp.get("weights", {}), edges, "complaints.weights", default_w)
    shifts = []
    last = -1
    for s in cp.get("shifts", []):
        ts = int(s["t"])
        if ts <= last:
            raise ScenarioError("complaints.shifts: times must be strictly increasing")
        if not 0 <= ts <= horizon:
            raise ScenarioError(f"complaints.shifts: time {ts} outside [0, {horizon}]")
        last = ts
        shifts.append((ts, _edge_map(s["weights"], edges, f"complaints.shifts[t={ts}]", s.get("default_weight", default_w))))
    for (what, ws) in [("weights", weights)] + [(f"shift@{ts}", ws) for ts, ws in shifts]:
        for e, v in ws.items():
            if v < 0:
                raise ScenarioError(f"complaints.{what}: negative weight on edge {edge_key(*e)}")
    complaints = ComplaintParams(
        weights=weights,
        shifts=tuple(shifts),
        noise_mean=float(cp.get("noise_mean", 0.5)),
        noise_std=float(cp.get("noise_std", 0.2)),
        cap=int(cp.get("cap", 30)),
    )
    hotspots = tuple((int(h["t"]), int(h["node"])) for h in d.get("hotspots", []))
    for _, node in hotspots:
        if node not in coords:
            raise ScenarioError(f"hotspot node {node} is not a node")
    return Scenario(
        name=str(d.get("name", "scenario")),
        graph=graph,
        mtt=mtt,
        start_node=start,
        horizon=horizon,
        tau=tau,
        traffic=traffic,
        complaints=complaints,
        hotspots=hotspots,
    )


def _undirected(values: Dict[Edge, float]) -> Dict[str, float]:
    return {edge_key(i, j): v for (i, j), v in sorted(values.items()) if i < j}


def scenario_to_dict(s: Scenario) -> dict:
    g = s.graph
    return {
        "name": s.name,
        "horizon": s.horizon,
        "tau": s.tau,
        "start_node": s.start_node,
        "nodes": [{"id": v, "x": g.coords[v][0], "y": g.coords[v][1]} for v in g.nodes],
        "edges": [
            {"from": i, "to": j, "length": g.lengths[(i, j)], "mtt": s.mtt[(i, j)]}
            for (i, j) in g.edges
            if i < j
        ],
        "traffic": {
            "base": _undirected(s.traffic.base),
            "diurnal_amplitude": s.traffic.diurnal_amplitude,
            "diurnal_period": s.traffic.diurnal_period,
            "noise_std": s.traffic.noise_std,
        },
        "complaints": {
            "weights": _undirected(s.complaints.weights),
            "shifts": [{"t": ts, "weights": _undirected(ws)} for ts, ws in s.complaints.shifts],
            "noise_mean": s.complaints.noise_mean,
            "noise_std": s.complaints.noise_std,
            "cap": s.complaints.cap,
        },
        "hotspots": [{"t": t, "node": v} for t, v in s.hotspots],
    }


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file; bare names resolve to the bundled data."""
    p = Path(path)
    if not p.exists() and (DATA_DIR / p.name).exists():
        p = DATA_DIR / p.name
    elif not p.exists() and (DATA_DIR / f"{p.name}.json").exists():
        p = DATA_DIR / f"{p.name}.json"
    try:
        raw = json.loads(p.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario {path} is not valid JSON: {exc}") from None
    return scenario_from_dict(raw)


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2) + "\n")
