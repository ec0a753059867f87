"""Planning-window MDP: action sets, costs and exact backward induction."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .complaints import ComplaintPmf, mean
from .graph import Edge, PatrolGraph, shortest_paths_from

# slack on the d* <= tau feasibility test for accumulated float sums
FEASIBILITY_TOL = 1e-9


class InfeasibleAction(ValueError):
    pass


@dataclass(frozen=True)
class PlanningWindow:
    start: int
    tau: int
    num_slots: int

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError("tau must be a positive integer")
        if self.num_slots < 1:
            raise ValueError("a window needs at least one slot")

    @property
    def horizon(self) -> int:
        return self.num_slots * self.tau

    @property
    def decision_times(self) -> List[int]:
        return [self.start + k * self.tau for k in range(self.num_slots)]

    @classmethod
    def within(cls, start: int, tau: int, num_slots: int, T: int) -> Optional["PlanningWindow"]:
        """Window truncated so that start + H <= T; ``None`` if not even one slot fits."""
        k = min(num_slots, (T - start) // tau)
        return cls(start, tau, k) if k >= 1 else None


@dataclass
class MdpInstance:
    graph: PatrolGraph
    start: int
    travel_times: Sequence[Mapping[Edge, float]]
    pmfs: Mapping[Edge, ComplaintPmf]
    lam: float = 0.5
    zeta: float = 1.0
    tau: float = 8
    _means: Dict[Edge, float] = field(default=None, init=False, repr=False)
    _reach: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.start not in self.graph.coords:
            raise ValueError(f"start node {self.start} not in graph")
        missing = [e for e in self.graph.lengths if e not in self.pmfs]
        if missing:
            raise ValueError(f"no complaint pmf for edges {missing[:5]}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        if not self.zeta > 0:
            raise ValueError("zeta must be positive")
        self._means = {e: mean(p) for e, p in self.pmfs.items()}

    @property
    def num_slots(self) -> int:
        return len(self.travel_times)

    def reach(self, s: int, k: int) -> Tuple[Dict[int, float], Dict[int, tuple]]:
        key = (s, k)
        if key not in self._reach:
            self._reach[key] = shortest_paths_from(
                self.graph, self.travel_times[k], s, cutoff=self.tau + FEASIBILITY_TOL
            )
        return self._reach[key]

    def slot_complaint(self, e: Edge, k: int) -> float:
        """Expected cumulative complaints on ``e`` from window start through slot ``k``."""
        return (k + 1) * self.tau * self._means[e]


def action_set(inst: MdpInstance, s: int, k: int) -> List[int]:
    """Nodes reachable from ``s`` within one slot under slot-``k`` predicted times."""
    dist, _ = inst.reach(s, k)
    return sorted(v for v, d in dist.items() if d <= inst.tau + FEASIBILITY_TOL)


def path_to(inst: MdpInstance, s: int, a: int, k: int) -> List[Edge]:
    dist, paths = inst.reach(s, k)
    if a not in dist or dist[a] > inst.tau + FEASIBILITY_TOL:
        raise InfeasibleAction(f"node {a} is not reachable from {s} within tau in slot {k}")
    seq = paths[a]
    return list(zip(seq[:-1], seq[1:]))


def routing_cost(inst: MdpInstance, s: int, a: int, k: int) -> float:
    if s == a:
        return 0.0
    path_to(inst, s, a, k)
    return inst.reach(s, k)[0][a]


def complaint_cost(inst: MdpInstance, s: int, a: int, k: int) -> float:
    g = inst.graph
    if s == a:
        total = 0.0
        for u in g.successors(s):
            total += inst.slot_complaint((s, u), k) * min(1.0, inst.zeta / g.lengths[(s, u)])
        return total
    return sum(inst.slot_complaint(e, k) for e in path_to(inst, s, a, k))


def reward(inst: MdpInstance, s: int, a: int, k: int) -> float:
    return -inst.lam * routing_cost(inst, s, a, k) + (1.0 - inst.lam) * complaint_cost(inst, s, a, k)


@dataclass(frozen=True)
class Plan:
    actions: Tuple[int, ...]
    value: float
    first_path: Tuple[Edge, ...] = ()

    @property
    def first_action(self) -> int:
        return self.actions[0]


def solve_window(inst: MdpInstance, window: Optional[PlanningWindow] = None) -> Plan:
    """Backward induction over the window's slots.

    Transitions are deterministic (the next state is the chosen node), so the
    optimal value is the best total reward over feasible action sequences.
    Ties go to the smallest node id at every step.
    """
    K = inst.num_slots if window is None else window.num_slots
    if K < 1 or K > inst.num_slots:
        raise ValueError(f"window has {K} slots but {inst.num_slots} slots of travel times were given")
    nodes = inst.graph.nodes
    value = {v: 0.0 for v in nodes}
    policy: List[Dict[int, int]] = [None] * K
    for k in range(K - 1, -1, -1):
        new_value, pol = {}, {}
        for s in nodes:
            best_a, best_q = None, None
            for a in action_set(inst, s, k):
                q = reward(inst, s, a, k) + value[a]
                if best_q is None or q > best_q:
                    best_a, best_q = a, q
            new_value[s], pol[s] = best_q, best_a
        value, policy[k] = new_value, pol
    actions, s = [], inst.start
    for k in range(K):
        s = policy[k][s]
        actions.append(s)
    first = actions[0]
    first_path = tuple(path_to(inst, inst.start, first, 0)) if first != inst.start else ()
    return Plan(tuple(actions), value[inst.start], first_path)


def next_window_start(t: int, v: int, action: int, hop_minutes: Sequence[int], tau: int) -> int:
    """Start of the following window once ``action`` has been carried out.

    Moves take the realised integer-minute hop times along the path; an
    inspect holds the node for one slot.
    """
    if action == v:
        return t + tau
    return t + max(1, int(sum(hop_minutes)))
