"""Patrol graph, time-weighted shortest paths and edge splitting.

A ``PatrolGraph`` is treated as an immutable snapshot: every mutation returns a
new graph. Edges always come in reciprocal pairs with symmetric lengths.

Each edge also remembers which scenario edge it was cut from (``segments``),
as ``(original_edge, start_fraction, end_fraction)`` measured from the
original edge's origin. Travel times and complaints of split edges are derived
from that provenance.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

Edge = Tuple[int, int]
Segment = Tuple[Edge, float, float]

# splits closer than this to an endpoint would create a (near) zero-length edge
SPLIT_EPS = 1e-6


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class PatrolGraph:
    coords: Dict[int, Tuple[float, float]]
    lengths: Dict[Edge, float]
    segments: Dict[Edge, Segment] = field(default_factory=dict)

    def __post_init__(self):
        if not self.segments:
            object.__setattr__(self, "segments", {e: (e, 0.0, 1.0) for e in self.lengths})
        adj: Dict[int, List[int]] = {v: [] for v in self.coords}
        for (i, j) in self.lengths:
            adj[i].append(j)
        for v in adj:
            adj[v].sort()
        object.__setattr__(self, "_adj", adj)

    @property
    def nodes(self) -> List[int]:
        return sorted(self.coords)

    @property
    def edges(self) -> List[Edge]:
        return sorted(self.lengths)

    def successors(self, v: int) -> List[int]:
        return self._adj[v]

    def has_edge(self, i: int, j: int) -> bool:
        return (i, j) in self.lengths

    def next_node_id(self) -> int:
        return max(self.coords) + 1 if self.coords else 1

    def original_edge(self, e: Edge) -> Edge:
        return self.segments[e][0]

    def fraction(self, e: Edge) -> float:
        _, a, b = self.segments[e]
        return b - a

    def validate(self) -> None:
        for (i, j), length in self.lengths.items():
            if i == j:
                raise GraphError(f"self-loop on node {i}")
            if i not in self.coords or j not in self.coords:
                raise GraphError(f"edge ({i},{j}) references an unknown node")
            if not length > 0:
                raise GraphError(f"edge ({i},{j}) has non-positive length {length}")
            if (j, i) not in self.lengths:
                raise GraphError(f"edge ({i},{j}) has no reciprocal ({j},{i})")
            if not math.isclose(length, self.lengths[(j, i)], rel_tol=1e-9):
                raise GraphError(
                    f"asymmetric length on edge ({i},{j}): {length} vs {self.lengths[(j, i)]}"
                )


def build_graph(coords: Mapping[int, Tuple[float, float]], lengths: Mapping[Edge, float]) -> PatrolGraph:
    """Build and validate a graph; missing reciprocal edges are filled in."""
    full = dict(lengths)
    for (i, j), length in lengths.items():
        if (j, i) not in full:
            full[(j, i)] = length
    g = PatrolGraph(coords={int(v): (float(x), float(y)) for v, (x, y) in coords.items()}, lengths=full)
    g.validate()
    return g


def neighbors(g: PatrolGraph, v: int) -> set:
    """N(v): out-neighbours of ``v`` plus ``v`` itself."""
    if v not in g.coords:
        raise GraphError(f"unknown node {v}")
    return set(g.successors(v)) | {v}


def shortest_path(
    g: PatrolGraph, weights: Mapping[Edge, float], i: int, j: int
) -> Tuple[Optional[List[Edge]], float]:
    """Travel-time shortest path from ``i`` to ``j``.

    Returns ``(path, dist)``; an unreachable target gives ``(None, inf)``.
    Among equal-weight paths the lexicographically smallest node sequence wins.
    """
    for v in (i, j):
        if v not in g.coords:
            raise GraphError(f"unknown node {v}")
    dist, paths = shortest_paths_from(g, weights, i)
    if j not in dist:
        return None, math.inf
    return _as_edges(paths[j]), dist[j]


def shortest_paths_from(
    g: PatrolGraph, weights: Mapping[Edge, float], source: int, cutoff: float = math.inf
) -> Tuple[Dict[int, float], Dict[int, Tuple[int, ...]]]:
    """Single-source Dijkstra with lexicographic tie-break on node sequences.

    Labels are ``(dist, node_sequence)`` pairs, so among shortest paths the
    smallest sequence is settled first; prefixes of such paths are themselves
    lexicographically smallest, which keeps label-setting valid. Nodes farther
    than ``cutoff`` are not reported.
    """
    dist: Dict[int, float] = {}
    paths: Dict[int, Tuple[int, ...]] = {}
    heap = [(0.0, (source,))]
    best = {source: (0.0, (source,))}
    while heap:
        d, seq = heapq.heappop(heap)
        v = seq[-1]
        if v in dist:
            continue
        if d > cutoff:
            break
        dist[v] = d
        paths[v] = seq
        for u in g.successors(v):
            if u in dist:
                continue
            w = weights[(v, u)]
            if not w > 0:
                raise GraphError(f"non-positive weight {w} on edge ({v},{u})")
            label = (d + w, seq + (u,))
            if u not in best or label < best[u]:
                best[u] = label
                heapq.heappush(heap, label)
    return dist, paths


def _as_edges(seq: Iterable[int]) -> List[Edge]:
    seq = list(seq)
    return list(zip(seq[:-1], seq[1:]))


@dataclass(frozen=True)
class Split:
    """One directed edge ``(o, d)`` replaced by ``(o, node)`` and ``(node, d)``.

    ``gamma`` is the fraction of the edge that lies before ``node``.
    """

    o: int
    d: int
    node: int
    gamma: float


@dataclass(frozen=True)
class SplitResult:
    graph: PatrolGraph
    node: int
    splits: Tuple[Split, ...]
    weights: Optional[Dict[Edge, float]] = None


def split_edge(
    g: PatrolGraph,
    o: int,
    d: int,
    gamma: float,
    weights: Optional[Mapping[Edge, float]] = None,
) -> SplitResult:
    """Insert a node on ``(o, d)`` at fraction ``gamma`` from ``o``.

    Both directions are cut at the same physical point, so the reciprocal pair
    and length symmetry survive and the new node allows a U-turn. Lengths and
    (optional) travel-time weights are divided in proportion ``gamma``.
    """
    if (o, d) not in g.lengths:
        raise GraphError(f"edge ({o},{d}) not in graph")
    if not 0.0 <= gamma <= 1.0:
        raise GraphError(f"split ratio {gamma} outside [0, 1]")
    if gamma <= SPLIT_EPS or gamma >= 1.0 - SPLIT_EPS:
        raise GraphError(f"split ratio {gamma} would create a degenerate edge")

    new = g.next_node_id()
    (xo, yo), (xd, yd) = g.coords[o], g.coords[d]
    coords = dict(g.coords)
    coords[new] = ((1 - gamma) * xo + gamma * xd, (1 - gamma) * yo + gamma * yd)

    lengths = dict(g.lengths)
    segments = dict(g.segments)
    splits = (Split(o, d, new, gamma), Split(d, o, new, 1.0 - gamma))
    for s in splits:
        length = lengths.pop((s.o, s.d))
        lengths[(s.o, s.node)] = length * s.gamma
        lengths[(s.node, s.d)] = length * (1.0 - s.gamma)
        orig, a, b = segments.pop((s.o, s.d))
        cut = a + s.gamma * (b - a)
        segments[(s.o, s.node)] = (orig, a, cut)
        segments[(s.node, s.d)] = (orig, cut, b)
    # keep the reciprocal lengths bit-identical
    lengths[(new, o)] = lengths[(o, new)]
    lengths[(d, new)] = lengths[(new, d)]

    new_weights = None
    if weights is not None:
        new_weights = apply_splits(weights, splits, lambda w, frac: w * frac)
    return SplitResult(PatrolGraph(coords, lengths, segments), new, splits, new_weights)


def apply_splits(values: Mapping[Edge, object], splits: Iterable[Split], divide) -> dict:
    """Carry a per-edge mapping through ``splits``.

    ``divide(value, fraction)`` produces the value of a sub-edge covering
    ``fraction`` of its parent.
    """
    out = dict(values)
    for s in splits:
        if (s.o, s.d) not in out:
            continue
        v = out.pop((s.o, s.d))
        out[(s.o, s.node)] = divide(v, s.gamma)
        out[(s.node, s.d)] = divide(v, 1.0 - s.gamma)
    return out


@dataclass(frozen=True)
class AdaptResult:
    graph: PatrolGraph
    node: int
    splits: Tuple[Split, ...]
    new_nodes: Tuple[int, ...]
    weights: Optional[Dict[Edge, float]] = None


def commute_ratio(t: int, depart: int, arrive: int) -> float:
    """Fraction of the commute already completed at minute ``t``."""
    return (t - depart) / (arrive - depart)


def adapt_graph_on_commute(
    g: PatrolGraph,
    weights: Mapping[Edge, float],
    origin: int,
    dest: int,
    t: float,
    depart: float,
    arrive: float,
    tau: float,
) -> AdaptResult:
    """Re-shape the graph around a patroller interrupted on ``(origin, dest)``.

    The commuting edge is split at the patroller's position, which becomes its
    current node. Neighbour edges of ``origin`` are split at
    ``(tau - (t - depart)) / mu`` and those of ``dest`` at
    ``(tau - (arrive - t)) / mu``; ratios outside the open unit interval are
    skipped.
    """
    if (origin, dest) not in g.lengths:
        raise GraphError(f"patroller is not commuting on an existing edge ({origin},{dest})")
    if not depart < t < arrive:
        raise GraphError(f"minute {t} is not strictly inside the commute [{depart}, {arrive}]")

    gamma = commute_ratio(t, depart, arrive)
    if gamma <= SPLIT_EPS or gamma >= 1.0 - SPLIT_EPS:
        raise GraphError(f"commute ratio {gamma} too close to an endpoint")

    # neighbour ratios use the pre-split graph and weights
    pending = []
    for u in sorted(neighbors(g, origin) - {origin, dest}):
        pending.append((origin, u, (tau - (t - depart)) / weights[(origin, u)]))
    for u in sorted(neighbors(g, dest) - {origin, dest}):
        pending.append((dest, u, (tau - (arrive - t)) / weights[(dest, u)]))

    res = split_edge(g, origin, dest, gamma, weights)
    graph, w = res.graph, res.weights
    splits = list(res.splits)
    new_nodes = [res.node]
    for (a, b, ratio) in pending:
        if not SPLIT_EPS < ratio < 1.0 - SPLIT_EPS:
            continue
        if (a, b) not in graph.lengths:
            continue
        r = split_edge(graph, a, b, ratio, w)
        graph, w = r.graph, r.weights
        splits.extend(r.splits)
        new_nodes.append(r.node)
    return AdaptResult(graph, res.node, tuple(splits), tuple(new_nodes), w)


def edge_key(i: int, j: int) -> str:
    """Undirected key ``"min-max"`` used in scenario files."""
    a, b = sorted((i, j))
    return f"{a}-{b}"


def parse_edge_key(key: str) -> Edge:
    a, b = key.split("-")
    return int(a), int(b)


def node_origin(g: PatrolGraph, v: int) -> Optional[Edge]:
    """The scenario edge a split node was inserted on, or ``None`` for original nodes."""
    for u in g.successors(v):
        orig, a, b = g.segments[(v, u)]
        if v not in orig:
            return orig
    return None
