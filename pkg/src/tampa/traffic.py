"""Synthetic travel times, travel-time predictors and the complaint generator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Protocol, Sequence

import numpy as np
from scipy import integrate
from scipy.stats import norm

from .complaints import ComplaintPmf
from .graph import Edge, PatrolGraph
from .scenario import ComplaintParams, Scenario

TRAFFIC_STREAM = 1
COMPLAINT_STREAM = 2


@dataclass(frozen=True)
class TravelTimeField:
    """mu[e, t] for every scenario edge and minute 0..horizon."""

    edges: tuple
    mu: np.ndarray
    mtt: Dict[Edge, float]

    def __post_init__(self):
        object.__setattr__(self, "_index", {e: i for i, e in enumerate(self.edges)})

    @property
    def horizon(self) -> int:
        return self.mu.shape[1] - 1

    def at(self, e: Edge, t: int) -> float:
        return float(self.mu[self._index[e], t])

    def row(self, t: int) -> Dict[Edge, float]:
        col = self.mu[:, t]
        return {e: float(col[i]) for i, e in enumerate(self.edges)}


def diurnal(t, amplitude: float, period: float):
    return amplitude * np.sin(2.0 * np.pi * np.asarray(t, dtype=float) / period)


def generate_travel_times(scenario: Scenario, seed: int) -> TravelTimeField:
    """mu = max(mtt, base * (1 + diurnal(t) + eps_t)), one RNG stream per edge."""
    tp = scenario.traffic
    edges = tuple(scenario.edges)
    t = np.arange(scenario.horizon + 1)
    profile = diurnal(t, tp.diurnal_amplitude, tp.diurnal_period)
    mu = np.empty((len(edges), t.size))
    for k, (i, j) in enumerate(edges):
        rng = np.random.default_rng([seed, TRAFFIC_STREAM, i, j])
        eps = rng.normal(0.0, tp.noise_std, t.size) if tp.noise_std > 0 else np.zeros(t.size)
        mu[k] = np.maximum(scenario.mtt[(i, j)], tp.base[(i, j)] * (1.0 + profile + eps))
    return TravelTimeField(edges, mu, dict(scenario.mtt))


def draw_complaints(weights: np.ndarray, rng: np.random.Generator, noise_mean=0.5, noise_std=0.2, cap=30) -> np.ndarray:
    """c = min(max(round(F * U(0,1) * (1 + n)), 0), cap) with n ~ N(noise_mean, noise_std)."""
    u = rng.random(weights.shape)
    n = rng.normal(noise_mean, noise_std, weights.shape)
    return np.clip(np.rint(weights * u * (1.0 + n)), 0, cap).astype(int)


def generate_complaints(params: ComplaintParams, t: int, rng: np.random.Generator) -> Dict[Edge, int]:
    """One minute of complaint counts for every scenario edge, under the weights in force at ``t``."""
    weights = params.weights_at(t)
    edges = sorted(weights)
    F = np.array([weights[e] for e in edges], dtype=float)
    c = draw_complaints(F, rng, params.noise_mean, params.noise_std, params.cap)
    return dict(zip(edges, c.tolist()))


def complaint_rng(seed: int, t: int) -> np.random.Generator:
    return np.random.default_rng([seed, COMPLAINT_STREAM, t])


@lru_cache(maxsize=4096)
def _generator_cdf(weight: float, noise_mean: float, noise_std: float, cap: int) -> tuple:
    # P(c <= m) = P(s <= 0) + E[min(1, (m + 1/2) / s); s > 0],  s = F (1 + n)
    if weight <= 0:
        return (1.0,) * (cap + 1)
    lo = (-1.0 - noise_mean) / noise_std
    p_nonpos = norm.cdf(lo)
    out = []
    for m in range(cap):
        a = (m + 0.5) / weight
        z = (a - 1.0 - noise_mean) / noise_std
        full = norm.cdf(z) - p_nonpos
        tail, _ = integrate.quad(
            lambda n: a / (1.0 + n) * norm.pdf(n, noise_mean, noise_std),
            a - 1.0,
            np.inf,
            epsabs=1e-13,
            epsrel=1e-11,
            limit=200,
        )
        out.append(min(1.0, p_nonpos + full + tail))
    out.append(1.0)
    return tuple(out)


def complaint_pmf(weight: float, noise_mean: float = 0.5, noise_std: float = 0.2, cap: int = 30) -> ComplaintPmf:
    """Exact pmf of the generator's per-minute count for edge weight ``weight``."""
    cdf = np.maximum.accumulate(np.array(_generator_cdf(float(weight), noise_mean, noise_std, cap)))
    p = np.diff(np.concatenate([[0.0], cdf]))
    p = np.clip(p, 0.0, None)
    return ComplaintPmf(p / p.sum())


def true_pmfs(params: ComplaintParams, t: int) -> Dict[Edge, ComplaintPmf]:
    return {
        e: complaint_pmf(w, params.noise_mean, params.noise_std, params.cap)
        for e, w in params.weights_at(t).items()
    }


class Predictor(Protocol):
    def predict(self, window, graph: PatrolGraph) -> List[Dict[Edge, float]]:
        """Per-slot predicted travel time for every edge of ``graph``."""


def _scaled(graph: PatrolGraph, per_original: Mapping[Edge, float], mtt: Mapping[Edge, float]) -> Dict[Edge, float]:
    out = {}
    for e, (orig, a, b) in graph.segments.items():
        frac = b - a
        out[e] = max(per_original[orig], mtt[orig]) * frac
    return out


class OraclePredictor:
    """Returns the true field value at each slot's start minute."""

    def __init__(self, field: TravelTimeField):
        self.field = field

    def predict(self, window, graph: PatrolGraph) -> List[Dict[Edge, float]]:
        end = window.start + window.tau * window.num_slots
        if window.start < 0 or end > self.field.horizon:
            raise ValueError(f"window [{window.start}, {end}] extends past the field horizon {self.field.horizon}")
        return [
            _scaled(graph, self.field.row(window.start + k * window.tau), self.field.mtt)
            for k in range(window.num_slots)
        ]


class PersistencePredictor:
    """Predicts the last observed travel time for every slot."""

    def __init__(self, mtt: Mapping[Edge, float], history: Optional[Mapping[Edge, Sequence[float]]] = None):
        self.mtt = dict(mtt)
        self.last: Dict[Edge, float] = {}
        for e, series in (history or {}).items():
            if len(series):
                self.last[e] = float(series[-1])

    def observe(self, mu: Mapping[Edge, float]) -> None:
        self.last.update(mu)

    def predict(self, window, graph: PatrolGraph) -> List[Dict[Edge, float]]:
        base = {e: self.last.get(e, self.mtt[e]) for e in self.mtt}
        row = _scaled(graph, base, self.mtt)
        return [dict(row) for _ in range(window.num_slots)]


def oracle_predictor(field: TravelTimeField) -> OraclePredictor:
    return OraclePredictor(field)


def persistence_predictor(mtt: Mapping[Edge, float], history=None) -> PersistencePredictor:
    return PersistencePredictor(mtt, history)


def hop_minutes(mu: float) -> int:
    """Integer-minute clock duration of a traversal."""
    return max(1, int(math.floor(mu + 0.5)))
