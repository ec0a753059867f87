"""Reproduce the corridor experiment: three strategies on flatbush12 over 20 seeds.

Writes the report and mean cumulative-Q series through the CLI, then prints
a summary table.

    python scripts/run_compare.py [out_dir] [--workers N]
"""

import argparse
import json
from pathlib import Path

from tampa.cli import main


def summarise(report: dict) -> None:
    print(f"{'strategy':<12}{'mean Q':>10}{'std Q':>10}{'hotspot pre':>13}{'hotspot post':>14}{'triggers':>10}")
    for name, s in report["strategies"].items():
        pre, post = s["hotspot_fractions"]
        print(f"{name:<12}{s['mean_Q']:>10.1f}{s['std_Q']:>10.1f}{pre:>13.3f}{post:>14.3f}{s['mean_triggers']:>10.2f}")
    for pair, imp in report["improvements"].items():
        p = report["paired_tests"].get(pair, {}).get("p")
        print(f"{pair:<24} {imp:8.1f}%   paired p = {p:.2g}" if p is not None else f"{pair:<24} {imp:8.1f}%")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("out", nargs="?", default="results/flatbush12")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    code = main(["compare", "--scenario", "flatbush12", "--seeds", "0-19", "--out", args.out, "--workers", str(args.workers)])
    if code == 0:
        summarise(json.loads((Path(args.out) / "report.json").read_text()))
    raise SystemExit(code)
