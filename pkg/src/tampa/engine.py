"""Closed-loop patrol simulation: TAMPA, the stationary ablation and the random baseline.

The environment is shared across strategies: for a given seed every strategy
sees the same travel-time field and the same per-minute complaint draws on the
scenario edges. Complaints on split sub-edges are allocated from their parent's
draw, so the underlying realisation never depends on the strategy.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .complaints import ComplaintPmf, EmpiricalEstimator, thin, update
from .detector import ShiftConfig, ShiftMonitor
from .graph import Edge, PatrolGraph, adapt_graph_on_commute, apply_splits, neighbors, node_origin, shortest_paths_from
from .planner import FEASIBILITY_TOL, MdpInstance, PlanningWindow, solve_window
from .scenario import Scenario
from .traffic import (
    TravelTimeField,
    complaint_rng,
    draw_complaints,
    generate_travel_times,
    hop_minutes,
    oracle_predictor,
    persistence_predictor,
    true_pmfs,
)

log = logging.getLogger(__name__)

ALLOCATION_STREAM = 3
RANDOM_STREAM = 4
STRATEGIES = ("tampa", "stationary", "random")


@dataclass(frozen=True)
class PlannerConfig:
    lam: float = 0.5
    zeta: Optional[float] = None  # None: median edge length of the scenario graph
    tau: Optional[int] = None  # None: the scenario's slot length
    num_slots: int = 6

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda={self.lam} outside [0, 1]")
        if self.zeta is not None and not self.zeta > 0:
            raise ValueError("zeta must be positive")
        if self.tau is not None and self.tau < 1:
            raise ValueError("tau must be >= 1 minute")
        if self.num_slots < 1:
            raise ValueError("num_slots must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    detector: ShiftConfig = field(default_factory=ShiftConfig)
    prior_weight: int = 50
    predictor: str = "oracle"

    def __post_init__(self):
        if self.prior_weight < 1:
            raise ValueError("prior_weight must be >= 1")
        if self.predictor not in ("oracle", "persistence"):
            raise ValueError(f"unknown predictor {self.predictor!r}")

    def to_dict(self) -> dict:
        return {
            "planner": asdict(self.planner),
            "detector": self.detector.to_dict(),
            "prior_weight": self.prior_weight,
            "predictor": self.predictor,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(
            planner=PlannerConfig(**d.get("planner", {})),
            detector=ShiftConfig.from_dict(d.get("detector", {})),
            prior_weight=int(d.get("prior_weight", 50)),
            predictor=d.get("predictor", "oracle"),
        )


@dataclass(frozen=True)
class Record:
    t: int
    node: int
    status: str  # start | inspect | commute | interrupted
    action: int
    r: float  # utility of the transition that ends at this record
    trigger: bool = False


@dataclass
class Trajectory:
    records: List[Record] = field(default_factory=list)

    @property
    def times(self) -> List[int]:
        return [r.t for r in self.records]

    @property
    def nodes(self) -> List[int]:
        return [r.node for r in self.records]

    @property
    def utilities(self) -> List[float]:
        """r_g for each consecutive pair of records."""
        return [r.r for r in self.records[1:]]


def global_cost(traj: Trajectory) -> float:
    """Q: total realised utility over the trajectory's transitions."""
    if not traj.records:
        raise ValueError("empty trajectory")
    return float(sum(traj.utilities))


def inspect_utility(graph: PatrolGraph, v: int, complaints: Mapping[Edge, float], lam: float, zeta: float) -> float:
    total = 0.0
    for u in graph.successors(v):
        total += complaints[(v, u)] * min(1.0, zeta / graph.lengths[(v, u)])
    return (1.0 - lam) * total


def commute_utility(mu: float, c: float, lam: float) -> float:
    return -lam * mu + (1.0 - lam) * c


def realized_utility(
    graph: PatrolGraph,
    v: int,
    nxt: int,
    complaints: Mapping[Edge, float],
    mu: Mapping[Edge, float],
    lam: float,
    zeta: float,
) -> float:
    """Utility of one transition: an inspect (v == nxt) or a single-edge traverse."""
    if v == nxt:
        return inspect_utility(graph, v, complaints, lam, zeta)
    if not graph.has_edge(v, nxt):
        raise ValueError(f"({v},{nxt}) is not an edge; multi-hop moves are credited edge by edge")
    return commute_utility(mu[(v, nxt)], complaints[(v, nxt)], lam)


@dataclass
class RunMetrics:
    strategy: str
    seed: int
    Q: float
    cumulative_q: List[float]
    periods: List[Tuple[int, int]]
    visit_fractions: List[Dict[int, float]]
    hotspot_fractions: List[Optional[float]]
    triggers: int
    trigger_times: List[int]
    split_nodes: int
    detector_calls: int
    windows: int
    final_nodes: int
    plans: List[dict] = field(default_factory=list)
    detector_log: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["visit_fractions"] = [{str(k): v for k, v in sorted(vf.items())} for vf in self.visit_fractions]
        d["periods"] = [list(p) for p in self.periods]
        return d


@dataclass
class RunResult:
    trajectory: Trajectory
    metrics: RunMetrics
    graph: PatrolGraph


def median_edge_length(g: PatrolGraph) -> float:
    if not g.lengths:
        return 1.0  # edgeless graph: zeta never enters a cost
    return float(np.median([g.lengths[e] for e in g.edges]))


def hotspot_region(final: PatrolGraph, original: PatrolGraph, hotspot: int) -> set:
    """Nodes within one hop of ``hotspot`` in the scenario graph, plus split nodes between them."""
    region = neighbors(original, hotspot)
    out = set(region)
    for v in final.nodes:
        if v in original.coords:
            continue
        orig = node_origin(final, v)
        if orig is not None and orig[0] in region and orig[1] in region:
            out.add(v)
    return out


class Environment:
    """Ground truth for one seed: travel times and complaint draws on scenario edges."""

    def __init__(self, scenario: Scenario, seed: int, field_: Optional[TravelTimeField] = None):
        self.scenario = scenario
        self.seed = seed
        self.field = field_ if field_ is not None else generate_travel_times(scenario, seed)
        self.orig_edges = sorted(scenario.graph.lengths)
        self._cache: Dict[int, Dict[Edge, int]] = {}

    def original_complaints(self, t: int) -> Dict[Edge, int]:
        if t not in self._cache:
            cp = self.scenario.complaints
            w = cp.weights_at(t)
            F = np.array([w[e] for e in self.orig_edges], dtype=float)
            c = draw_complaints(F, complaint_rng(self.seed, t), cp.noise_mean, cp.noise_std, cp.cap)
            self._cache[t] = dict(zip(self.orig_edges, c.tolist()))
        return self._cache[t]

    def complaints(self, graph: PatrolGraph, t: int) -> Dict[Edge, int]:
        base = self.original_complaints(t)
        groups: Dict[Edge, List[Edge]] = {}
        for e, (orig, _, _) in graph.segments.items():
            groups.setdefault(orig, []).append(e)
        out: Dict[Edge, int] = {}
        for orig, subs in groups.items():
            if len(subs) == 1 and graph.fraction(subs[0]) == 1.0:
                out[subs[0]] = base[orig]
                continue
            subs.sort(key=lambda e: graph.segments[e][1])
            fracs = np.array([graph.fraction(e) for e in subs])
            rng = np.random.default_rng([self.seed, ALLOCATION_STREAM, t, orig[0], orig[1]])
            alloc = rng.multinomial(base[orig], fracs / fracs.sum())
            out.update(zip(subs, alloc.tolist()))
        return out

    def travel_times(self, graph: PatrolGraph, t: int) -> Dict[Edge, float]:
        col = self.field.mu[:, t]
        idx = self.field._index
        return {e: float(col[idx[orig]]) * (b - a) for e, (orig, a, b) in graph.segments.items()}


class _Run:
    def __init__(self, scenario: Scenario, config: RunConfig, seed: int, strategy: str, env: Optional[Environment]):
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}")
        self.sc = scenario
        self.cfg = config
        self.seed = seed
        self.strategy = strategy
        self.env = env if env is not None else Environment(scenario, seed)
        self.T = scenario.horizon
        pc = config.planner
        self.tau = pc.tau if pc.tau is not None else scenario.tau
        self.K = pc.num_slots
        self.lam = pc.lam
        self.zeta = pc.zeta if pc.zeta is not None else median_edge_length(scenario.graph)

        self.graph = scenario.graph
        self.node = scenario.start_node
        self.t = 0
        cp = scenario.complaints
        self.c_max = cp.cap
        prior = true_pmfs(cp, 0)
        self.belief: Dict[Edge, ComplaintPmf] = dict(prior)
        self.estimators = {e: EmpiricalEstimator(p, config.prior_weight) for e, p in prior.items()}
        self.adopted = False
        if config.predictor == "oracle":
            self.predictor = oracle_predictor(self.env.field)
        else:
            self.predictor = persistence_predictor(scenario.mtt)
        self.monitor = ShiftMonitor(config.detector, self.c_max) if strategy == "tampa" else None
        self.rng = np.random.default_rng([seed, RANDOM_STREAM])

        self.traj = Trajectory([Record(0, self.node, "start", self.node, 0.0)])
        self.loc = np.full(self.T, -1, dtype=int)
        self.plans: List[dict] = []
        self.detector_log: List[dict] = []
        self.trigger_times: List[int] = []
        self.split_nodes = 0
        self.windows = 0

    # -- environment bookkeeping ------------------------------------------------

    def observe(self, m: int) -> Tuple[Dict[Edge, int], Dict[Edge, float]]:
        c = self.env.complaints(self.graph, m)
        mu = self.env.travel_times(self.graph, m)
        if self.strategy == "tampa":
            self.estimators = {e: update(est, c[e]) for e, est in self.estimators.items()}
            self.monitor.observe(c)
        if self.cfg.predictor == "persistence":
            self.predictor.observe(self.env.field.row(m))
        return c, mu

    def detect(self, m: int) -> bool:
        if self.monitor is None:
            return False
        d = self.monitor.test(m)
        if d.fired:
            self.detector_log.append(
                {"t": m, "q": d.q, "fired": True, "distances": {f"{i}->{j}": v for (i, j), v in sorted(d.distances.items())}}
            )
        return d.fired

    def window_reset(self, t: int) -> None:
        if self.strategy != "tampa":
            return
        estimates = {e: est.pmf for e, est in self.estimators.items()}
        self.monitor.reset(estimates, t)
        if self.adopted:
            self.belief = estimates

    def on_shift(self, m: int) -> None:
        """Re-base every estimator on the post-reset samples that triggered the shift."""
        log.debug("%s seed %d: shift detected at t=%d", self.strategy, self.seed, m)
        self.trigger_times.append(m)
        self.adopted = True
        n = self.monitor.n
        recent = self.monitor.recent()
        self.estimators = {e: EmpiricalEstimator(recent[e], prior_weight=n) for e in self.estimators}

    def add_record(self, t: int, node: int, status: str, action: int, r: float, trigger=False) -> None:
        self.traj.records.append(Record(t, node, status, action, r, trigger))

    def mark_trigger(self) -> None:
        last = self.traj.records[-1]
        self.traj.records[-1] = Record(last.t, last.node, last.status, last.action, last.r, True)

    # -- decisions --------------------------------------------------------------

    def choose(self, window: PlanningWindow) -> Tuple[int, List[Edge]]:
        weights = self.predictor.predict(window, self.graph)
        if self.strategy == "random":
            dist, paths = shortest_paths_from(self.graph, weights[0], self.node, cutoff=self.tau + FEASIBILITY_TOL)
            options = sorted(v for v, d in dist.items() if d <= self.tau + FEASIBILITY_TOL)
            a = options[int(self.rng.integers(len(options)))]
            seq = paths[a]
            self.plans.append({"t": window.start, "state": self.node, "action": a, "J": None})
            return a, list(zip(seq[:-1], seq[1:]))
        inst = MdpInstance(self.graph, self.node, weights, self.belief, self.lam, self.zeta, self.tau)
        plan = solve_window(inst, window)
        self.plans.append({"t": window.start, "state": self.node, "action": plan.first_action, "J": plan.value})
        return plan.first_action, list(plan.first_path)

    # -- main loop --------------------------------------------------------------

    def run(self) -> RunResult:
        while True:
            window = PlanningWindow.within(self.t, self.tau, self.K, self.T)
            if window is None:
                break
            self.windows += 1
            self.window_reset(self.t)
            a, path = self.choose(window)
            if a == self.node:
                self.inspect(a)
            else:
                if not self.commute(a, path):
                    break
        last = self.traj.records[-1].node
        self.loc[self.loc < 0] = last
        return RunResult(self.traj, self.metrics(), self.graph)

    def inspect(self, a: int) -> None:
        start, v = self.t, self.node
        end = start + self.tau
        r = 0.0
        for m in range(start, end):
            c, mu = self.observe(m)
            if m == start:
                r = inspect_utility(self.graph, v, c, self.lam, self.zeta)
            self.loc[m] = v
            if self.detect(m):
                self.on_shift(m)
                self.add_record(m + 1, v, "inspect", a, r, trigger=True)
                self.t = m + 1
                return
        self.add_record(end, v, "inspect", a, r)
        self.t = end

    def commute(self, a: int, path: List[Edge]) -> bool:
        m = self.t
        for (o, d) in path:
            dep = m
            c, mu = self.observe(dep)
            hop = hop_minutes(mu[(o, d)])
            arr = dep + hop
            if arr > self.T:
                self.t = self.T
                return False
            r = commute_utility(mu[(o, d)], c[(o, d)], self.lam)
            self.loc[dep] = d
            if self.detect(dep):
                # still standing on node o
                self.loc[dep] = o
                self.on_shift(dep)
                self.mark_trigger()
                self.t = dep + 1
                return True
            for m in range(dep + 1, arr):
                self.observe(m)
                self.loc[m] = d
                if self.detect(m):
                    self.on_shift(m)
                    self.interrupt(o, d, dep, arr, m, r, a, mu)
                    return True
            self.add_record(arr, d, "commute", a, r)
            self.node = d
            m = arr
        self.t = m
        return True

    def interrupt(self, o: int, d: int, dep: int, arr: int, m: int, r: float, a: int, mu_dep) -> None:
        res = adapt_graph_on_commute(self.graph, mu_dep, o, d, m, dep, arr, self.tau)
        gamma = (m - dep) / (arr - dep)
        self.graph = res.graph
        self.split_nodes += len(res.new_nodes)
        self.estimators = apply_splits(
            self.estimators, res.splits, lambda est, g: EmpiricalEstimator(thin(est.pmf, g), est.prior_weight, est.samples_seen)
        )
        self.belief = apply_splits(self.belief, res.splits, thin)
        self.monitor.apply_splits(res.splits, thin)
        self.node = res.node
        self.loc[m] = res.node
        # only the traversed share of the hop is credited
        self.add_record(m, res.node, "interrupted", a, gamma * r, trigger=True)
        self.t = m + 1

    # -- metrics ----------------------------------------------------------------

    def metrics(self) -> RunMetrics:
        T = self.T
        cum = np.zeros(T + 1)
        for rec in self.traj.records[1:]:
            cum[rec.t] += rec.r
        cum = np.cumsum(cum)
        bounds = [0] + [s for s in self.sc.complaints.shift_times if 0 < s < T] + [T]
        periods = list(zip(bounds[:-1], bounds[1:]))
        fractions = []
        for lo, hi in periods:
            vals, counts = np.unique(self.loc[lo:hi], return_counts=True)
            fractions.append({int(v): float(n) / (hi - lo) for v, n in zip(vals, counts)})
        hot = []
        for lo, hi in periods:
            node = None
            for (ts, v) in self.sc.hotspots:
                if ts <= lo:
                    node = v
            if node is None:
                hot.append(None)
                continue
            region = hotspot_region(self.graph, self.sc.graph, node)
            hot.append(float(np.isin(self.loc[lo:hi], list(region)).mean()))
        Q = global_cost(self.traj)
        return RunMetrics(
            strategy=self.strategy,
            seed=self.seed,
            Q=Q,
            cumulative_q=cum.tolist(),
            periods=periods,
            visit_fractions=fractions,
            hotspot_fractions=hot,
            triggers=len(self.trigger_times),
            trigger_times=list(self.trigger_times),
            split_nodes=self.split_nodes,
            detector_calls=self.monitor.calls if self.monitor else 0,
            windows=self.windows,
            final_nodes=len(self.graph.coords),
            plans=self.plans,
            detector_log=self.detector_log,
        )


def run_strategy(scenario: Scenario, config: RunConfig, seed: int, strategy: str, env: Optional[Environment] = None) -> RunResult:
    return _Run(scenario, config, seed, strategy, env).run()


def run_tampa(scenario: Scenario, config: RunConfig, seed: int, env: Optional[Environment] = None) -> RunResult:
    return run_strategy(scenario, config, seed, "tampa", env)


def run_stationary(scenario: Scenario, config: RunConfig, seed: int, env: Optional[Environment] = None) -> RunResult:
    return run_strategy(scenario, config, seed, "stationary", env)


def run_random(scenario: Scenario, config: RunConfig, seed: int, env: Optional[Environment] = None) -> RunResult:
    return run_strategy(scenario, config, seed, "random", env)


def improvement(qa: float, qb: float) -> float:
    """Percentage improvement of A over B: 100 (Q_A - Q_B) / |Q_B|."""
    if qb == 0:
        return 0.0 if qa == 0 else float("inf") * np.sign(qa)
    return 100.0 * (qa - qb) / abs(qb)


def compare_strategies(
    scenario: Scenario,
    config: RunConfig,
    seeds: Sequence[int],
    strategies: Sequence[str] = STRATEGIES,
    workers: int = 1,
) -> dict:
    """Run every strategy on every seed and summarise.

    Seeds share one environment across strategies so the pairwise comparisons
    are paired.
    """
    from scipy.stats import ttest_rel

    def one_seed(seed):
        env = Environment(scenario, seed)
        return [run_strategy(scenario, config, seed, s, env) for s in strategies]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_seed = list(pool.map(one_seed, seeds))
    else:
        per_seed = [one_seed(seed) for seed in seeds]
    runs: Dict[str, List[RunResult]] = {s: [r[i] for r in per_seed] for i, s in enumerate(strategies)}
    report: dict = {"seeds": list(seeds), "strategies": {}, "improvements": {}, "paired_tests": {}}
    for s, results in runs.items():
        Qs = [r.metrics.Q for r in results]
        cum = np.mean([r.metrics.cumulative_q for r in results], axis=0)
        periods = results[0].metrics.periods
        vf = []
        for p in range(len(periods)):
            acc: Dict[int, float] = {}
            for r in results:
                for node, f in r.metrics.visit_fractions[p].items():
                    acc[node] = acc.get(node, 0.0) + f / len(results)
            vf.append({str(k): v for k, v in sorted(acc.items())})
        hot = []
        for p in range(len(periods)):
            vals = [r.metrics.hotspot_fractions[p] for r in results]
            hot.append(None if vals[0] is None else float(np.mean(vals)))
        report["strategies"][s] = {
            "Q": Qs,
            "mean_Q": float(np.mean(Qs)),
            "std_Q": float(np.std(Qs, ddof=1)) if len(Qs) > 1 else 0.0,
            "mean_cumulative_q": cum.tolist(),
            "periods": [list(p) for p in periods],
            "visit_fractions": vf,
            "hotspot_fractions": hot,
            "mean_triggers": float(np.mean([r.metrics.triggers for r in results])),
            "mean_split_nodes": float(np.mean([r.metrics.split_nodes for r in results])),
        }
    names = list(strategies)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            qa = report["strategies"][a]["mean_Q"]
            qb = report["strategies"][b]["mean_Q"]
            report["improvements"][f"{a}_vs_{b}"] = improvement(qa, qb)
            xa, xb = report["strategies"][a]["Q"], report["strategies"][b]["Q"]
            if len(seeds) > 1 and not np.allclose(xa, xb):
                res = ttest_rel(xa, xb)
                report["paired_tests"][f"{a}_vs_{b}"] = {"t": float(res.statistic), "p": float(res.pvalue)}
            else:
                report["paired_tests"][f"{a}_vs_{b}"] = {"t": 0.0, "p": 1.0}
    report["_runs"] = runs
    return report
