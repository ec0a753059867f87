"""DKW shift tests per edge and the network-wide trigger."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Union

import numpy as np

from .complaints import ComplaintPmf, SupportMismatch, kolmogorov_distance, pmf_sup_distance
from .graph import Edge, apply_splits


@dataclass(frozen=True)
class ShiftConfig:
    """``q_policy`` is ``"dkw"`` (q = sqrt(3 / 2t)) or a fixed threshold.

    ``aggregator`` is ``"all"``, ``"any"`` or ``("fraction", theta)``;
    ``distance`` is ``"cdf"`` (Kolmogorov) or ``"pmf"`` (mass-wise sup).
    """

    q_policy: Union[str, float] = "dkw"
    aggregator: Union[str, tuple] = "all"
    distance: str = "cdf"

    def __post_init__(self):
        if self.q_policy != "dkw":
            q = float(self.q_policy)
            if not 0.0 < q <= 1.0:
                raise ValueError(f"fixed threshold q={q} outside (0, 1]")
        agg = self.aggregator
        if isinstance(agg, (tuple, list)):
            if len(agg) != 2 or agg[0] != "fraction" or not 0.0 < float(agg[1]) <= 1.0:
                raise ValueError(f"bad aggregator {agg!r}")
            object.__setattr__(self, "aggregator", ("fraction", float(agg[1])))
        elif agg not in ("all", "any"):
            raise ValueError(f"bad aggregator {agg!r}")
        if self.distance not in ("cdf", "pmf"):
            raise ValueError(f"bad distance form {self.distance!r}")

    def threshold(self, t_samples: int) -> float:
        if self.q_policy == "dkw":
            return dkw_threshold(t_samples)
        return float(self.q_policy)

    def to_dict(self) -> dict:
        agg = self.aggregator
        return {
            "q_policy": self.q_policy,
            "aggregator": {"fraction": agg[1]} if isinstance(agg, tuple) else agg,
            "distance": self.distance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ShiftConfig":
        agg = d.get("aggregator", "all")
        if isinstance(agg, dict):
            agg = ("fraction", float(agg["fraction"]))
        q = d.get("q_policy", "dkw")
        return cls(q if q == "dkw" else float(q), agg, d.get("distance", "cdf"))


def dkw_threshold(t_samples: int) -> float:
    """q = sqrt(3 / (2 t)); makes the DKW false-alarm bound 2 exp(-2 t q^2) = 2 e^-3."""
    if t_samples < 1:
        raise ValueError("the DKW threshold needs at least one sample")
    return math.sqrt(3.0 / (2.0 * t_samples))


def distance(prior: ComplaintPmf, current: ComplaintPmf, form: str = "cdf") -> float:
    if form == "cdf":
        return kolmogorov_distance(prior, current)
    return pmf_sup_distance(prior, current)


def dkw_event(prior: ComplaintPmf, current: ComplaintPmf, q: float, form: str = "cdf") -> bool:
    return distance(prior, current, form) >= q


def aggregate(fired: Mapping[Edge, bool], mode) -> bool:
    n = len(fired)
    hits = sum(bool(v) for v in fired.values())
    if n == 0:
        return False
    if mode == "all":
        return hits == n
    if mode == "any":
        return hits >= 1
    _, theta = mode
    return hits >= theta * n


def network_divergence(
    prior: Mapping[Edge, ComplaintPmf],
    current: Mapping[Edge, ComplaintPmf],
    q: float,
    mode="all",
    form: str = "cdf",
) -> bool:
    """Network trigger: aggregate the per-edge DKW events under ``mode``."""
    if set(prior) != set(current):
        raise ValueError("prior snapshot and estimates cover different edge sets")
    fired = {e: dkw_event(prior[e], current[e], q, form) for e in prior}
    return aggregate(fired, mode)


@dataclass(frozen=True)
class PriorSnapshot:
    pmfs: Dict[Edge, ComplaintPmf]
    time: int


def reset_prior(estimates: Mapping[Edge, ComplaintPmf], time: int) -> PriorSnapshot:
    return PriorSnapshot(dict(estimates), time)


@dataclass
class Decision:
    t: int
    q: float
    distances: Dict[Edge, float]
    fired: bool


class ShiftMonitor:
    """Prior snapshot plus the complaint counts observed since it was taken.

    The per-edge test compares the snapshot against the empirical distribution
    of those samples, which is the quantity the DKW inequality controls; the
    sample count behind ``q(t)`` restarts at every reset.
    """

    def __init__(self, config: ShiftConfig, c_max: int):
        self.config = config
        self.c_max = c_max
        self.snapshot: Optional[PriorSnapshot] = None
        self.edges: list = []
        self.ref_cdf: Optional[np.ndarray] = None
        self.ref_pmf: Optional[np.ndarray] = None
        self.counts: Optional[np.ndarray] = None
        self.n = 0
        self.calls = 0

    def reset(self, estimates: Mapping[Edge, ComplaintPmf], time: int) -> PriorSnapshot:
        self.snapshot = reset_prior(estimates, time)
        self.edges = sorted(self.snapshot.pmfs)
        ref = np.array([self.snapshot.pmfs[e].probs for e in self.edges])
        if ref.shape[1] != self.c_max + 1:
            raise SupportMismatch("snapshot support does not match the monitor")
        self.ref_pmf = ref
        self.ref_cdf = np.cumsum(ref, axis=1)
        self.counts = np.zeros_like(ref)
        self.n = 0
        return self.snapshot

    def observe(self, obs: Mapping[Edge, int]) -> None:
        rows = np.arange(len(self.edges))
        cols = np.array([min(max(int(obs[e]), 0), self.c_max) for e in self.edges])
        self.counts[rows, cols] += 1.0
        self.n += 1

    def recent(self) -> Dict[Edge, ComplaintPmf]:
        """Empirical pmf of the samples seen since the last reset."""
        return {e: ComplaintPmf.from_counts(self.counts[i], self.c_max) for i, e in enumerate(self.edges)}

    def distances(self) -> np.ndarray:
        emp = self.counts / self.n
        if self.config.distance == "cdf":
            return np.max(np.abs(self.ref_cdf - np.cumsum(emp, axis=1)), axis=1)
        return np.max(np.abs(self.ref_pmf - emp), axis=1)

    def test(self, t: int) -> Decision:
        self.calls += 1
        if self.n == 0:
            return Decision(t, math.inf, {}, False)
        q = self.config.threshold(self.n)
        d = self.distances()
        fired = aggregate({e: d[i] >= q for i, e in enumerate(self.edges)}, self.config.aggregator)
        return Decision(t, q, {e: float(d[i]) for i, e in enumerate(self.edges)}, fired)

    def apply_splits(self, splits, thin_fn) -> None:
        """Carry the snapshot across graph splits (the caller resets right after)."""
        pmfs = apply_splits(self.snapshot.pmfs, splits, thin_fn)
        self.reset(pmfs, self.snapshot.time)
