"""Complaint-count distributions on a truncated support {0, ..., c_max}."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import binom

C_MAX = 30
DEFAULT_PRIOR_WEIGHT = 50


class SupportMismatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ComplaintPmf:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("pmf must be a non-empty 1-d array")
        if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"not a pmf (sum={p.sum()!r}, min={p.min()!r})")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def c_max(self) -> int:
        return self.probs.size - 1

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    def __eq__(self, other):
        return isinstance(other, ComplaintPmf) and np.array_equal(self.probs, other.probs)

    def __repr__(self):
        nz = {int(n): round(float(p), 6) for n, p in enumerate(self.probs) if p > 0}
        return f"ComplaintPmf({nz})"

    @classmethod
    def delta(cls, n: int, c_max: int = C_MAX) -> "ComplaintPmf":
        p = np.zeros(c_max + 1)
        p[min(max(int(n), 0), c_max)] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls, lo: int, hi: int, c_max: int = C_MAX) -> "ComplaintPmf":
        p = np.zeros(c_max + 1)
        p[lo : hi + 1] = 1.0 / (hi - lo + 1)
        return cls(p)

    @classmethod
    def from_counts(cls, counts, c_max: int = C_MAX) -> "ComplaintPmf":
        counts = np.asarray(counts, dtype=float)
        if counts.sum() <= 0:
            raise ValueError("no counts")
        return cls(counts / counts.sum())

    @classmethod
    def from_samples(cls, samples, c_max: int = C_MAX) -> "ComplaintPmf":
        s = np.clip(np.asarray(samples, dtype=int), 0, c_max)
        return cls.from_counts(np.bincount(s, minlength=c_max + 1), c_max)


def _check(P: ComplaintPmf, Q: ComplaintPmf):
    if P.c_max != Q.c_max:
        raise SupportMismatch(f"support mismatch: c_max {P.c_max} vs {Q.c_max}")


def kolmogorov_distance(P: ComplaintPmf, Q: ComplaintPmf) -> float:
    """sup_n |F_P(n) - F_Q(n)| over the CDFs."""
    _check(P, Q)
    return float(np.max(np.abs(np.cumsum(P.probs - Q.probs))))


def pmf_sup_distance(P: ComplaintPmf, Q: ComplaintPmf) -> float:
    """sup_n |P(n) - Q(n)|, the mass-wise variant."""
    _check(P, Q)
    return float(np.max(np.abs(P.probs - Q.probs)))


def tv_distance(P: ComplaintPmf, Q: ComplaintPmf) -> float:
    _check(P, Q)
    return 0.5 * float(np.sum(np.abs(P.probs - Q.probs)))


def mean(P: ComplaintPmf) -> float:
    return float(np.dot(np.arange(P.probs.size), P.probs))


def sample(P: ComplaintPmf, rng: np.random.Generator, size=None):
    """Inverse-CDF draws from ``P``."""
    cdf = P.cdf()
    u = rng.random(size)
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, P.c_max)
    return int(idx) if size is None else idx


def thinning_matrix(gamma: float, c_max: int = C_MAX) -> np.ndarray:
    """B[n, m] = P(m of n complaints kept) under Binomial(n, gamma)."""
    n = np.arange(c_max + 1)
    return binom.pmf(n[None, :], n[:, None], gamma)


def thin(P: ComplaintPmf, gamma: float) -> ComplaintPmf:
    """Binomial thinning: each complaint survives independently with prob ``gamma``.

    Used to give a sub-edge covering a ``gamma`` share of its parent edge its
    own complaint distribution; the mean scales by exactly ``gamma``.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"thinning ratio {gamma} outside [0, 1]")
    out = P.probs @ thinning_matrix(gamma, P.c_max)
    return ComplaintPmf(out / out.sum())


@dataclass(frozen=True)
class EmpiricalEstimator:
    """Online pmf estimate where the prior counts as ``prior_weight`` samples."""

    pmf: ComplaintPmf
    prior_weight: int = DEFAULT_PRIOR_WEIGHT
    samples_seen: int = 0

    def __post_init__(self):
        if self.prior_weight < 0:
            raise ValueError("prior weight must be non-negative")
        if self.prior_weight == 0 and self.samples_seen == 0:
            raise ValueError("an estimator needs a positive prior weight or samples")

    def to_dict(self) -> dict:
        return {
            "pmf": self.pmf.probs.tolist(),
            "prior_weight": self.prior_weight,
            "samples_seen": self.samples_seen,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EmpiricalEstimator":
        return cls(ComplaintPmf(np.array(d["pmf"])), int(d["prior_weight"]), int(d["samples_seen"]))


def update(est: EmpiricalEstimator, obs: int) -> EmpiricalEstimator:
    """Absorb one observation (clamped to c_max) into the running estimate."""
    n = est.prior_weight + est.samples_seen
    p = est.pmf.probs * (n / (n + 1.0))
    p[min(max(int(obs), 0), est.pmf.c_max)] += 1.0 / (n + 1.0)
    return replace(est, pmf=ComplaintPmf(p), samples_seen=est.samples_seen + 1)


def closed_form_estimate(prior: ComplaintPmf, M: int, observations) -> ComplaintPmf:
    """The unrolled estimator: (M * prior + sum of deltas) / (M + n)."""
    obs = np.clip(np.asarray(observations, dtype=int), 0, prior.c_max)
    counts = np.bincount(obs, minlength=prior.c_max + 1).astype(float)
    return ComplaintPmf((M * prior.probs + counts) / (M + obs.size))
