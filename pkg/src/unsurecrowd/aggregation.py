"""Majority voting and exact/interval accuracy evaluation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError

MAX_ENUM_WORKERS = 22  # 2^m enumeration cap

_Z95 = 1.959963984540054


@dataclass(frozen=True)
class LabelRecord:
    """One worker response: +/-1 label, or 0 for the unsure option."""
    value: int
    worker_ability: float
    payment: float = 0.0

    def __post_init__(self):
        if self.value not in (-1, 0, 1):
            raise ConfigError(f"label value must be in {{-1,0,1}}, got {self.value}")


def majority_vote(labels: Iterable) -> int:
    """Sign of the label sum; unsure (0) responses never contribute; ties and empty go to +1."""
    total = 0
    for rec in labels:
        total += rec.value if isinstance(rec, LabelRecord) else int(rec)
    return 1 if total >= 0 else -1


@dataclass(frozen=True)
class ErrorProb:
    """Truth-conditional majority-vote error probabilities.

    The +1 tie rule makes the vote asymmetric, so the error under truth=+1 and
    truth=-1 can differ (they coincide for odd vote counts).
    """
    truth_plus: float
    truth_minus: float

    @property
    def average(self) -> float:
        return 0.5 * (self.truth_plus + self.truth_minus)


def exact_error_prob(abilities: Sequence[float], m: int | None = None) -> ErrorProb:
    """Exact vote-error probabilities by enumerating all 2^m correctness patterns.

    Worker i is correct with probability abilities[i], independently. Bruteforce
    oracle; refuses m > MAX_ENUM_WORKERS.
    """
    a = np.asarray(abilities, dtype=float)
    if m is None:
        m = len(a)
    if m != len(a):
        raise ConfigError(f"m={m} does not match {len(a)} abilities")
    if m > MAX_ENUM_WORKERS:
        raise ConfigError(f"m={m} exceeds enumeration cap {MAX_ENUM_WORKERS} (2^m patterns)")
    if m == 0:
        # empty vote defaults to +1: always right for truth=+1, wrong for -1
        return ErrorProb(truth_plus=0.0, truth_minus=1.0)

    idx = np.arange(1 << m, dtype=np.uint32)
    prob = np.ones(1 << m)
    n_correct = np.zeros(1 << m, dtype=np.int64)
    for i in range(m):
        bit = (idx >> i) & 1
        prob *= np.where(bit, a[i], 1.0 - a[i])
        n_correct += bit
    signed_sum = 2 * n_correct - m
    # truth=+1: correct labels are +1, vote errs iff sum < 0
    err_plus = float(prob[signed_sum < 0].sum())
    # truth=-1: correct labels are -1, vote is +1 (an error) iff -sum >= 0
    err_minus = float(prob[signed_sum <= 0].sum())
    return ErrorProb(truth_plus=err_plus, truth_minus=err_minus)


def wilson_interval(successes: int, total: int, z: float = _Z95) -> tuple[float, float]:
    if total <= 0:
        raise ConfigError("Wilson interval needs a positive trial count")
    p = successes / total
    denom = 1.0 + z * z / total
    center = (p + z * z / (2 * total)) / denom
    half = (z / denom) * np.sqrt(p * (1 - p) / total + z * z / (4 * total * total))
    # guard against rounding pushing the interval off the point estimate
    return (min(max(0.0, center - half), p), max(min(1.0, center + half), p))


@dataclass(frozen=True)
class AccuracyEstimate:
    accuracy: float
    ci_low: float
    ci_high: float
    n_tasks: int


def accuracy_eval(results: Sequence) -> AccuracyEstimate:
    """Fraction of tasks whose estimate matches the truth, with a Wilson 95% interval."""
    if len(results) == 0:
        raise ConfigError("accuracy_eval needs at least one task result")
    hits = sum(1 for r in results if r.estimate == r.truth)
    lo, hi = wilson_interval(hits, len(results))
    return AccuracyEstimate(accuracy=hits / len(results), ci_low=lo, ci_high=hi,
                            n_tasks=len(results))
