"""Command-line front end.

    tampa simulate --scenario flatbush12 --strategy tampa --seeds 7 --out runs/
    tampa compare  --scenario flatbush12 --seeds 0-19 --out runs/
    tampa sweep    --scenario flatbush12 --seeds 0-4 --param lambda --values 0,0.5,1 --out runs/
    tampa validate --scenario my_scenario.json

Exit codes: 0 success, 1 validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional

from .detector import ShiftConfig
from .engine import STRATEGIES, PlannerConfig, RunConfig, compare_strategies, run_strategy
from .scenario import Scenario, ScenarioError, load_scenario

log = logging.getLogger("tampa")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
SWEEP_PARAMS = ("lambda", "zeta", "tau", "num_slots", "q_policy", "aggregator", "distance", "prior_weight", "predictor")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "flatbush12"
    strategies: tuple = STRATEGIES
    seeds: tuple = (0,)
    run: RunConfig = field(default_factory=RunConfig)
    out: str = "results"
    formats: tuple = ("csv", "json")

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seed list is empty")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ConfigError(f"unknown strategy {s!r} (choose from {', '.join(STRATEGIES)})")
        for f in self.formats:
            if f not in ("csv", "json"):
                raise ConfigError(f"unknown output format {f!r}")

    def to_dict(self) -> dict:
        """Resolved settings for provenance; the output directory is left out so runs compare byte for byte."""
        run = self.run.to_dict()
        planner = run.pop("planner")
        planner["lambda"] = planner.pop("lam")
        return {
            "scenario": self.scenario,
            "strategies": list(self.strategies),
            "seeds": list(self.seeds),
            "planner": planner,
            **run,
            "formats": list(self.formats),
        }


def parse_seeds(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(s) for s in text)
    seeds: List[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return tuple(seeds)


def config_from_dict(d: dict) -> ExperimentConfig:
    """Build a config from a file's contents; result files are accepted via their ``config`` key."""
    if "config" in d and isinstance(d["config"], dict):
        d = d["config"]
    try:
        planner = dict(d.get("planner", {}))
        if "lambda" in planner:
            planner["lam"] = planner.pop("lambda")
        run = RunConfig(
            planner=PlannerConfig(**planner),
            detector=ShiftConfig.from_dict(d.get("detector", {})),
            prior_weight=int(d.get("prior_weight", 50)),
            predictor=d.get("predictor", "oracle"),
        )
        return ExperimentConfig(
            scenario=str(d.get("scenario", "flatbush12")),
            strategies=tuple(d.get("strategies", STRATEGIES)),
            seeds=parse_seeds(d.get("seeds", [0])),
            run=run,
            out=str(d.get("out", "results")),
            formats=tuple(d.get("formats", ("csv", "json"))),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None


def resolve_config(args) -> ExperimentConfig:
    """Defaults < config file < command-line flags."""
    base = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    cfg = config_from_dict(base)
    try:
        changes = {}
        if args.scenario:
            changes["scenario"] = args.scenario
        if args.seeds is not None:
            changes["seeds"] = parse_seeds(args.seeds)
        if args.strategy:
            changes["strategies"] = tuple(s.strip() for s in args.strategy.split(",") if s.strip())
        if args.out:
            changes["out"] = args.out
        if args.format:
            changes["formats"] = tuple(f.strip() for f in args.format.split(",") if f.strip())
        cfg = replace(cfg, **changes)
        planner, run = cfg.run.planner, cfg.run
        if args.lam is not None:
            planner = replace(planner, lam=args.lam)
        if args.zeta is not None:
            planner = replace(planner, zeta=args.zeta)
        if args.tau is not None:
            planner = replace(planner, tau=args.tau)
        if args.num_slots is not None:
            planner = replace(planner, num_slots=args.num_slots)
        det = run.detector
        if args.aggregator:
            det = ShiftConfig(det.q_policy, _parse_aggregator(args.aggregator), det.distance)
        if args.q_policy:
            det = ShiftConfig(_parse_q(args.q_policy), det.aggregator, det.distance)
        if args.distance:
            det = ShiftConfig(det.q_policy, det.aggregator, args.distance)
        run = replace(run, planner=planner, detector=det)
        if args.prior_weight is not None:
            run = replace(run, prior_weight=args.prior_weight)
        if args.predictor:
            run = replace(run, predictor=args.predictor)
        return replace(cfg, run=run)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _parse_aggregator(text):
    text = str(text)
    if text.startswith("fraction"):
        _, _, theta = text.partition(":")
        return ("fraction", float(theta or 0.5))
    return text


def _parse_q(text):
    return "dkw" if text == "dkw" else float(text)


def with_param(cfg: ExperimentConfig, param: str, value: str) -> ExperimentConfig:
    run, planner, det = cfg.run, cfg.run.planner, cfg.run.detector
    if param == "lambda":
        planner = replace(planner, lam=float(value))
    elif param == "zeta":
        planner = replace(planner, zeta=float(value))
    elif param == "tau":
        planner = replace(planner, tau=int(value))
    elif param == "num_slots":
        planner = replace(planner, num_slots=int(value))
    elif param == "q_policy":
        det = ShiftConfig(_parse_q(value), det.aggregator, det.distance)
    elif param == "aggregator":
        det = ShiftConfig(det.q_policy, _parse_aggregator(value), det.distance)
    elif param == "distance":
        det = ShiftConfig(det.q_policy, det.aggregator, value)
    elif param == "prior_weight":
        run = replace(run, prior_weight=int(value))
    elif param == "predictor":
        run = replace(run, predictor=value)
    else:
        raise ConfigError(f"cannot sweep {param!r} (choose from {', '.join(SWEEP_PARAMS)})")
    return replace(cfg, run=replace(run, planner=planner, detector=det))


# -- output -------------------------------------------------------------------


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trajectory_csv(result, header: dict) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "node", "status", "action", "r_g", "cumulative_Q", "trigger_fired"])
    cum = 0.0
    for rec in result.trajectory.records:
        cum += rec.r
        w.writerow([rec.t, rec.node, rec.status, rec.action, repr(rec.r), repr(cum), int(rec.trigger)])
    return buf.getvalue()


def series_csv(report: dict, strategy: str, header: dict) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "mean_cumulative_Q"])
    for t, q in enumerate(report["strategies"][strategy]["mean_cumulative_q"]):
        w.writerow([t, repr(q)])
    return buf.getvalue()


def simulate_outputs(cfg: ExperimentConfig, scenario: Scenario) -> dict:
    strategy, seed = cfg.strategies[0], cfg.seeds[0]
    res = run_strategy(scenario, cfg.run, seed, strategy)
    header = {"config": cfg.to_dict(), "seed": seed, "strategy": strategy}
    out = Path(cfg.out)
    files = {}
    stem = f"{strategy}_seed{seed}"
    if "csv" in cfg.formats:
        files[out / f"trajectory_{stem}.csv"] = trajectory_csv(res, header)
    if "json" in cfg.formats:
        files[out / f"metrics_{stem}.json"] = _dumps({**header, "metrics": res.metrics.to_dict()})
    return files


def compare_outputs(
    cfg: ExperimentConfig, scenario: Scenario, out: Optional[Path] = None, name: str = "report", workers: int = 1
) -> dict:
    report = compare_strategies(scenario, cfg.run, cfg.seeds, cfg.strategies, workers=workers)
    report.pop("_runs")
    out = Path(cfg.out) if out is None else out
    header = {"config": cfg.to_dict()}
    files = {}
    if "json" in cfg.formats:
        files[out / f"{name}.json"] = _dumps({**header, **report})
    if "csv" in cfg.formats:
        for s in cfg.strategies:
            files[out / f"{name}_series_{s}.csv"] = series_csv(report, s, {**header, "strategy": s})
    return files


def write_all(files: dict) -> None:
    for path, text in files.items():
        write_atomic(Path(path), text)
        log.info("wrote %s", path)


# -- commands -------------------------------------------------------------------


def cmd_validate(cfg: ExperimentConfig) -> int:
    sc = load_scenario(cfg.scenario)
    n_edges = len(sc.graph.edges) // 2
    print(
        f"{sc.name}: {len(sc.graph.nodes)} nodes, {n_edges} edge pairs, start node {sc.start_node}, "
        f"|T|={sc.horizon}, tau={sc.tau}, shifts at {sc.complaints.shift_times}"
    )
    return EXIT_OK


def cmd_simulate(cfg: ExperimentConfig) -> int:
    if len(cfg.strategies) != 1 or len(cfg.seeds) != 1:
        raise ConfigError("simulate runs exactly one strategy and one seed (use compare for more)")
    sc = load_scenario(cfg.scenario)
    write_all(simulate_outputs(cfg, sc))
    return EXIT_OK


def cmd_compare(cfg: ExperimentConfig, workers: int = 1) -> int:
    sc = load_scenario(cfg.scenario)
    files = compare_outputs(cfg, sc, workers=workers)
    write_all(files)
    report = json.loads(next(t for p, t in files.items() if str(p).endswith(".json"))) if "json" in cfg.formats else None
    if report:
        for s, v in report["strategies"].items():
            print(f"{s:>10}: mean Q = {v['mean_Q']:.1f}")
        for k, v in report["improvements"].items():
            print(f"{k}: {v:+.1f}%")
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, param: str, values: List[str], workers: int = 1) -> int:
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"cannot sweep {param!r} (choose from {', '.join(SWEEP_PARAMS)})")
    if not values:
        raise ConfigError("sweep needs at least one value")
    try:
        cells = [(v, with_param(cfg, param, v)) for v in values]
    except ValueError as exc:
        raise ConfigError(f"bad {param} value: {exc}") from exc
    sc = load_scenario(cfg.scenario)
    files = {}
    for value, cell in cells:
        files.update(compare_outputs(cell, sc, Path(cfg.out), name=f"report_{param}={value}", workers=workers))
    write_all(files)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tampa", description="Adaptive moving-window patrol simulator")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "compare", "sweep", "validate"):
        sp = sub.add_parser(name)
        sp.add_argument("--scenario", help="scenario JSON (or a bundled name such as flatbush12)")
        sp.add_argument("--config", help="experiment config JSON (a previous output file also works)")
        sp.add_argument("--seeds", help="e.g. 7, 0-19 or 1,3,5")
        sp.add_argument("--strategy", help="tampa, stationary, random (comma separated)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--format", help="csv,json")
        sp.add_argument("--lambda", dest="lam", type=float)
        sp.add_argument("--zeta", type=float)
        sp.add_argument("--tau", type=int)
        sp.add_argument("--num-slots", type=int)
        sp.add_argument("--aggregator", help="all, any or fraction:THETA")
        sp.add_argument("--q-policy", help="dkw or a fixed threshold")
        sp.add_argument("--distance", choices=("cdf", "pmf"))
        sp.add_argument("--prior-weight", type=int)
        sp.add_argument("--predictor", choices=("oracle", "persistence"))
        sp.add_argument("--workers", type=int, default=1, help="worker threads for multi-seed runs")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "sweep":
            sp.add_argument("--param", required=True, choices=SWEEP_PARAMS)
            sp.add_argument("--values", required=True, help="comma separated grid")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "compare":
            return cmd_compare(cfg, args.workers)
        values = [v.strip() for v in args.values.split(",") if v.strip()]
        return cmd_sweep(cfg, args.param, values, args.workers)
    except (ConfigError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
