"""Acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line; the lines are also collected into
an "acceptance" section of the pytest terminal summary.
"""

import time

import numpy as np
import pytest
from scipy.stats import ttest_rel

from helpers import random_instance
from oracles import brute_plan, floyd_warshall
from tampa.cli import main
from tampa.complaints import (
    C_MAX,
    ComplaintPmf,
    EmpiricalEstimator,
    kolmogorov_distance,
    mean,
    sample,
    tv_distance,
    update,
)
from tampa.detector import dkw_event, dkw_threshold
from tampa.engine import RunConfig, compare_strategies
from tampa.graph import build_graph, split_edge
from tampa.planner import MdpInstance, action_set, path_to, solve_window
from tampa.scenario import load_scenario
from tampa.traffic import complaint_pmf

SHIFT = 360
SEEDS = list(range(20))


# -- 1. DP exactness -----------------------------------------------------------------------


def test_criterion_1_dp_exact(verdict):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    mismatches = 0
    for i in range(200):
        inst = random_instance(rng, integer=bool(i % 2))
        plan = solve_window(inst)
        means = {e: mean(p) for e, p in inst.pmfs.items()}
        J, acts = brute_plan(
            inst.graph.nodes, inst.graph.lengths, inst.travel_times, means, inst.start, inst.lam, inst.zeta, inst.tau
        )
        mismatches += plan.value != J or plan.actions != acts
    elapsed = time.perf_counter() - start
    verdict(1, mismatches == 0 and elapsed < 10, f"{200 - mismatches}/200 instances match enumeration in {elapsed:.1f}s")


# -- 2. value perturbation bound -------------------------------------------------------------


def e_max(inst):
    out = 0
    for k in range(inst.num_slots):
        for s in inst.graph.nodes:
            for a in action_set(inst, s, k):
                n = len(inst.graph.successors(s)) if a == s else len(path_to(inst, s, a, k))
                out = max(out, n)
    return out


def test_criterion_2_tv_bound(verdict):
    rng = np.random.default_rng(77)
    start = time.perf_counter()
    violations = pairs = 0
    worst = 0.0
    for i in range(1000):
        P = random_instance(rng)
        if i % 2:
            # true pmfs against the running estimates built from their samples
            other = {}
            for e, p in P.pmfs.items():
                est = EmpiricalEstimator(ComplaintPmf.uniform(0, C_MAX), prior_weight=int(rng.integers(1, 51)))
                for c in sample(p, rng, int(rng.integers(0, 200))):
                    est = update(est, int(c))
                other[e] = est.pmf
        else:
            eps = float(rng.random())
            other = {}
            for e, p in P.pmfs.items():
                w = rng.random(C_MAX + 1) ** 3
                other[e] = ComplaintPmf((1 - eps) * p.probs + eps * w / w.sum())
        Q = MdpInstance(P.graph, P.start, P.travel_times, other, P.lam, P.zeta, P.tau)
        gap = abs(solve_window(P).value - solve_window(Q).value)
        tv = sum(tv_distance(P.pmfs[e], other[e]) for e in P.pmfs)
        bound = (1 - P.lam) * C_MAX * P.num_slots**2 * P.tau * e_max(P) * tv
        violations += gap > bound + 1e-9
        if bound > 0:
            worst = max(worst, gap / bound)
        pairs += 1
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 60
    verdict(2, ok, f"{pairs} pairs, {violations} violations, max gap/bound {worst:.3f}, {elapsed:.1f}s")


# -- 3. DKW calibration ----------------------------------------------------------------------


def test_criterion_3_dkw_calibration(verdict):
    start = time.perf_counter()
    rates = {}
    for weight in (2.0, 6.0, 12.0):
        truth = complaint_pmf(weight)
        for t in (200, 500, 2000):
            q = dkw_threshold(t)
            fired = 0
            for trial in range(500):
                x = sample(truth, np.random.default_rng([31, int(weight), t, trial]), t)
                fired += dkw_event(truth, ComplaintPmf.from_samples(x), q)
            rates[(weight, t)] = fired / 500
    elapsed = time.perf_counter() - start
    worst = max(rates.values())
    verdict(3, worst <= 0.12 and elapsed < 60, f"worst per-edge false-positive rate {worst:.3f} over {len(rates)} cells, {elapsed:.1f}s")


# -- 4. estimator convergence ----------------------------------------------------------------------


def test_criterion_4_estimator_convergence(verdict):
    ok = 0
    for trial in range(100):
        rng = np.random.default_rng([41, trial])
        truth = complaint_pmf(float(rng.uniform(1, 20)))
        M = int(rng.integers(1, 51))
        est = EmpiricalEstimator(ComplaintPmf.uniform(0, C_MAX), prior_weight=M)
        for c in sample(truth, rng, 2000):
            est = update(est, int(c))
        ok += kolmogorov_distance(est.pmf, truth) <= 0.05
    verdict(4, ok >= 95, f"{ok}/100 trials within 0.05 after 2000 updates")


# -- 5. split conservation --------------------------------------------------------------------------


def random_graph(rng):
    n = int(rng.integers(2, 7))
    coords = {v: (float(rng.uniform(-10, 10)), float(rng.uniform(-10, 10))) for v in range(1, n + 1)}
    lengths = {}
    for v in range(2, n + 1):
        lengths[(int(rng.integers(1, v)), v)] = float(rng.uniform(0.1, 20))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if (i, j) not in lengths and rng.random() < 0.4:
                lengths[(i, j)] = float(rng.uniform(0.1, 20))
    g = build_graph(coords, lengths)
    w = {e: float(rng.uniform(0.5, 30)) for e in g.edges}
    return g, w


def test_criterion_5_split_conservation(verdict):
    rng = np.random.default_rng(55)
    bad = 0
    for _ in range(1000):
        g, w = random_graph(rng)
        o, d = g.edges[int(rng.integers(len(g.edges)))]
        gamma = float(rng.uniform(0.001, 0.999))
        res = split_edge(g, o, d, gamma, w)
        g2, n = res.graph, res.node
        L = g.lengths[(o, d)]
        ok = abs(g2.lengths[(o, n)] + g2.lengths[(n, d)] - L) <= 1e-9 * L
        for a, b in ((o, d), (d, o)):
            ok &= abs(res.weights[(a, n)] + res.weights[(n, b)] - w[(a, b)]) <= 1e-9 * w[(a, b)]
        p, a, b = map(np.array, (g2.coords[n], g.coords[o], g.coords[d]))
        cross = (b - a)[0] * (p - a)[1] - (b - a)[1] * (p - a)[0]
        ok &= abs(cross) <= 1e-9 * (1 + np.abs(b - a).sum() ** 2)
        before, after = floyd_warshall(g.nodes, w), floyd_warshall(g2.nodes, res.weights)
        for i in g.nodes:
            for j in g.nodes:
                ok &= abs(after[(i, j)] - before[(i, j)]) <= 1e-9 * max(1.0, before[(i, j)])
        bad += not ok
    verdict(5, bad == 0, f"{1000 - bad}/1000 random splits conserve length, travel time, collinearity and distances")


# -- 6-8. the corridor experiment ------------------------------------------------------------------


@pytest.fixture(scope="module")
def corridor():
    sc = load_scenario("flatbush12")
    start = time.perf_counter()
    rep = compare_strategies(sc, RunConfig(), SEEDS)
    return sc, rep, time.perf_counter() - start


def test_criterion_6_strategy_ordering(corridor, verdict):
    _, rep, elapsed = corridor
    Q = {s: np.array(v["Q"]) for s, v in rep["strategies"].items()}
    mq = {s: float(q.mean()) for s, q in Q.items()}
    pvals = {
        pair: float(ttest_rel(Q[a], Q[b]).pvalue)
        for pair, (a, b) in {"t-s": ("tampa", "stationary"), "s-r": ("stationary", "random"), "t-r": ("tampa", "random")}.items()
    }
    imp_s = rep["improvements"]["tampa_vs_stationary"]
    imp_r = rep["improvements"]["tampa_vs_random"]
    ok = (
        mq["tampa"] > mq["stationary"] > mq["random"]
        and all(p < 0.05 for p in pvals.values())
        and imp_s >= 30
        and imp_r >= 50
        and elapsed < 300
    )
    detail = (
        f"mean Q tampa {mq['tampa']:.1f} > stationary {mq['stationary']:.1f} > random {mq['random']:.1f}; "
        f"max paired p {max(pvals.values()):.2g}; improvement {imp_s:.1f}% / {imp_r:.1f}%; {elapsed:.0f}s"
    )
    verdict(6, ok, detail)


def test_criterion_7_pre_shift_coincidence(corridor, verdict):
    _, rep, _ = corridor
    runs = rep["_runs"]
    checked = diverged = 0
    for a, b in zip(runs["tampa"], runs["stationary"]):
        if any(t < SHIFT for t in a.metrics.trigger_times):
            continue
        checked += 1
        ra = [(r.t, r.node, r.status, r.action, r.r) for r in a.trajectory.records if r.t < SHIFT]
        rb = [(r.t, r.node, r.status, r.action, r.r) for r in b.trajectory.records if r.t < SHIFT]
        diverged += ra != rb
    verdict(7, checked > 0 and diverged == 0, f"{checked - diverged}/{checked} seeds without a pre-shift trigger coincide before t={SHIFT}")


def test_criterion_8_hotspot_tracking(corridor, verdict):
    _, rep, _ = corridor
    post = {s: v["hotspot_fractions"][-1] for s, v in rep["strategies"].items()}
    ok = post["tampa"] >= 0.8 and post["stationary"] < 0.5 and post["random"] < 0.5
    detail = ", ".join(f"{s} {f:.3f}" for s, f in post.items())
    verdict(8, ok, f"post-shift time near node 4: {detail}")


# -- 9. determinism ----------------------------------------------------------------------------------


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_9_cli_determinism(tmp_path, verdict):
    commands = {
        "simulate": ["simulate", "--scenario", "flatbush12", "--strategy", "tampa", "--seeds", "7"],
        "compare": ["compare", "--scenario", "flatbush12", "--seeds", "0-1"],
        "sweep": ["sweep", "--scenario", "flatbush12", "--seeds", "3", "--param", "lambda", "--values", "0.2,0.8", "--strategy", "tampa,stationary"],
    }
    same = []
    for name, argv in commands.items():
        outs = []
        for run in ("a", "b"):
            out = tmp_path / name / run
            assert main(argv + ["--out", str(out)]) == 0
            outs.append(tree(out))
        same.append(name if outs[0] == outs[1] and outs[0] else None)
    ok = all(same)
    verdict(9, ok, f"byte-identical re-runs: {', '.join(n for n in same if n) or 'none'}")
