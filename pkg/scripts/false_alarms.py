"""Count spurious triggers on a shift-free network for each aggregator.

The per-edge DKW test is calibrated for one test at one sample size; the
detector applies it every minute on every edge, so "any" compounds the error
while "all" stays quiet. This script measures how often each rule fires on
the flatbush12 graph with its pre-event complaint weights held fixed.

    python scripts/false_alarms.py [num_seeds]
"""

import sys

from tampa.detector import ShiftConfig
from tampa.engine import RunConfig, run_tampa
from tampa.scenario import load_scenario, scenario_from_dict, scenario_to_dict

AGGREGATORS = ["all", ("fraction", 0.5), ("fraction", 0.2), "any"]


def stationary_corridor():
    d = scenario_to_dict(load_scenario("flatbush12"))
    d["complaints"]["shifts"] = []
    d["hotspots"] = d["hotspots"][:1]
    return scenario_from_dict(d)


if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 20
    sc = stationary_corridor()
    for agg in AGGREGATORS:
        cfg = RunConfig(detector=ShiftConfig(aggregator=agg))
        fired = [run_tampa(sc, cfg, seed).metrics.triggers for seed in range(n)]
        runs = sum(f > 0 for f in fired)
        print(f"{str(agg):<18} runs with a trigger {runs:>3}/{n}   mean triggers {sum(fired) / n:.2f}")
