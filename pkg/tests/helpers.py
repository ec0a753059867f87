"""Small scenario builders shared by the tests."""

import copy

from tampa.scenario import scenario_from_dict


def line_scenario(n=3, horizon=200, tau=8, weight=5.0, shifts=(), noise_std=0.0, amplitude=0.0, **extra):
    d = {
        "name": "line",
        "horizon": horizon,
        "tau": tau,
        "start_node": 1,
        "nodes": [{"id": v, "x": 10.0 * v, "y": 0.0} for v in range(1, n + 1)],
        "edges": [{"from": v, "to": v + 1, "length": 10.0, "mtt": 3.0} for v in range(1, n)],
        "traffic": {"base": 1.5, "diurnal_amplitude": amplitude, "noise_std": noise_std},
        "complaints": {"default_weight": weight, "weights": {}, "shifts": [dict(s) for s in shifts]},
    }
    d.update(copy.deepcopy(extra))
    return scenario_from_dict(d)


def grid_scenario(horizon=300, weights=None, shifts=(), hotspots=()):
    """3x2 grid, start at node 1."""
    coords = {1: (0, 0), 2: (10, 0), 3: (20, 0), 4: (0, 10), 5: (10, 10), 6: (20, 10)}
    edges = [(1, 2), (2, 3), (4, 5), (5, 6), (1, 4), (2, 5), (3, 6)]
    return scenario_from_dict(
        {
            "name": "grid",
            "horizon": horizon,
            "tau": 8,
            "start_node": 1,
            "nodes": [{"id": v, "x": x, "y": y} for v, (x, y) in coords.items()],
            "edges": [{"from": i, "to": j, "length": 10.0, "mtt": 4.0} for i, j in edges],
            "traffic": {"base": 1.25, "diurnal_amplitude": 0.2, "noise_std": 0.05},
            "complaints": {"default_weight": 4.0, "weights": weights or {}, "shifts": list(shifts)},
            "hotspots": [dict(h) for h in hotspots],
        }
    )


def random_instance(rng, max_nodes=5, max_slots=4, integer=False, lam=None, tau=8):
    """A connected random planning instance with at most ``max_nodes`` nodes.

    ``integer`` draws integer weights and point-mass pmfs so that ties are
    exact and the tie-break is exercised.
    """
    import numpy as np

    from tampa.complaints import ComplaintPmf
    from tampa.graph import build_graph
    from tampa.planner import MdpInstance

    n = int(rng.integers(1, max_nodes + 1))
    K = int(rng.integers(1, max_slots + 1))
    coords = {v: (float(rng.uniform(0, 10)), float(rng.uniform(0, 10))) for v in range(1, n + 1)}
    lengths = {}
    for v in range(2, n + 1):  # spanning tree
        lengths[(int(rng.integers(1, v)), v)] = float(rng.integers(1, 12)) if integer else float(rng.uniform(0.5, 12))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if (i, j) not in lengths and rng.random() < 0.3:
                lengths[(i, j)] = float(rng.integers(1, 12)) if integer else float(rng.uniform(0.5, 12))
    g = build_graph(coords, lengths) if n > 1 else build_graph(coords, {})
    slots = []
    for _ in range(K):
        if integer:
            slots.append({e: float(rng.integers(1, 9)) for e in g.edges})
        else:
            slots.append({e: float(rng.uniform(0.5, 9)) for e in g.edges})
    pmfs = {}
    for e in g.edges:
        if integer:
            pmfs[e] = ComplaintPmf.delta(int(rng.integers(0, 4)))
        else:
            w = rng.random(31) ** 4
            pmfs[e] = ComplaintPmf(w / w.sum())
    if lam is None:
        lam = 0.5 if integer else float(rng.uniform(0, 1))
    zeta = float(rng.integers(1, 12)) if integer else float(rng.uniform(0.5, 12))
    start = int(rng.integers(1, n + 1))
    return MdpInstance(g, start, slots, pmfs, lam=lam, zeta=zeta, tau=tau)


def relabel(inst, perm):
    """The same instance with node ``v`` renamed ``perm[v]``."""
    from tampa.graph import PatrolGraph
    from tampa.planner import MdpInstance

    g = inst.graph
    m = lambda e: (perm[e[0]], perm[e[1]])  # noqa: E731
    g2 = PatrolGraph({perm[v]: c for v, c in g.coords.items()}, {m(e): l for e, l in g.lengths.items()})
    slots = [{m(e): w for e, w in s.items()} for s in inst.travel_times]
    pmfs = {m(e): p for e, p in inst.pmfs.items()}
    return MdpInstance(g2, perm[inst.start], slots, pmfs, inst.lam, inst.zeta, inst.tau)
