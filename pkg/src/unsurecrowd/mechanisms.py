"""Label-collection mechanisms, stopping rules, and both payment schemes."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

from . import crowd
from .aggregation import LabelRecord, majority_vote
from .errors import ConfigError

# consumed-worker cap so an unreachable FixedReturnedLabels rule fails loudly
_STALL_FACTOR = 10_000


class Action(enum.Enum):
    RETURN_LABEL = "return_label"
    UNSURE = "unsure"
    REJECT = "reject"


def _check_threshold(t: float) -> None:
    if not 0.5 < t <= 1.0:
        raise ConfigError(f"threshold must lie in (1/2, 1], got {t}")


@dataclass(frozen=True)
class Simple:
    """Every drawn worker labels; no gating."""


@dataclass(frozen=True)
class QualityEnsured:
    """Idealized mechanism: accepts the label only when true ability >= T."""
    T: float

    def __post_init__(self):
        _check_threshold(self.T)


@dataclass(frozen=True)
class UnsureFixed:
    """Practical surrogate: the worker labels iff confidence >= T, else answers unsure."""
    T: float

    def __post_init__(self):
        _check_threshold(self.T)


@dataclass(frozen=True)
class UnsureOnline:
    """Threshold chosen per-worker by the bandit; handled by the olu module."""
    candidates: tuple

    def __post_init__(self):
        if len(self.candidates) == 0:
            raise ConfigError("candidate threshold set must be non-empty")
        for t in self.candidates:
            _check_threshold(t)
        if any(b <= a for a, b in zip(self.candidates, self.candidates[1:])):
            raise ConfigError("candidate thresholds must be strictly ascending")


MechanismConfig = Union[Simple, QualityEnsured, UnsureFixed, UnsureOnline]


@dataclass(frozen=True)
class Flat:
    """Every label and every unsure response pays `unit`; rejections pay nothing."""
    unit: float = 1.0

    def __post_init__(self):
        if self.unit <= 0:
            raise ConfigError(f"unit payment must be positive, got {self.unit}")


@dataclass(frozen=True)
class IncentiveCompatible:
    """Unsure pays T; a label pays 1 when it agrees with the aggregate, else 0."""
    T: float

    def __post_init__(self):
        _check_threshold(self.T)


PaymentScheme = Union[Flat, IncentiveCompatible]


@dataclass(frozen=True)
class FixedWorkers:
    n: int

    def __post_init__(self):
        if self.n <= 0:
            raise ConfigError(f"worker count must be positive, got {self.n}")


@dataclass(frozen=True)
class FixedReturnedLabels:
    n: int

    def __post_init__(self):
        if self.n <= 0:
            raise ConfigError(f"label count must be positive, got {self.n}")


@dataclass(frozen=True)
class FixedBudget:
    b: float

    def __post_init__(self):
        if self.b <= 0:
            raise ConfigError(f"budget must be positive, got {self.b}")


StoppingRule = Union[FixedWorkers, FixedReturnedLabels, FixedBudget]


@dataclass(frozen=True)
class TaskResult:
    truth: int
    estimate: int
    labels: tuple  # LabelRecord with value != 0, payments settled
    unsure_count: int
    rejected_count: int
    workers_consumed: int
    total_payment: float


def decide_action(mech: MechanismConfig, draw: crowd.WorkerDraw) -> Action:
    """Route one drawn worker. Boundary is inclusive: c >= T (or ability >= T) labels."""
    if isinstance(mech, Simple):
        return Action.RETURN_LABEL
    if isinstance(mech, QualityEnsured):
        return Action.RETURN_LABEL if draw.ability >= mech.T else Action.REJECT
    if isinstance(mech, UnsureFixed):
        return Action.RETURN_LABEL if draw.confidence >= mech.T else Action.UNSURE
    if isinstance(mech, UnsureOnline):
        raise ConfigError("UnsureOnline thresholds are chosen by the bandit; use the olu module")
    raise TypeError(f"unknown mechanism {mech!r}")


@dataclass(frozen=True)
class SettledPayments:
    label_payments: tuple
    unsure_payment: float  # per unsure response
    total: float


def settle_payments(pay: PaymentScheme, labels: Sequence[LabelRecord], unsure_count: int,
                    aggregate: int) -> SettledPayments:
    if isinstance(pay, Flat):
        lp = tuple(pay.unit for _ in labels)
        return SettledPayments(lp, pay.unit, pay.unit * (len(labels) + unsure_count))
    if isinstance(pay, IncentiveCompatible):
        lp = tuple(1.0 if rec.value == aggregate else 0.0 for rec in labels)
        return SettledPayments(lp, pay.T, sum(lp) + pay.T * unsure_count)
    raise TypeError(f"unknown payment scheme {pay!r}")


def _nominal_price(pay: PaymentScheme, action: Action) -> float:
    """Price charged against a fixed budget before the aggregate is known."""
    if action is Action.REJECT:
        return 0.0
    if isinstance(pay, Flat):
        return pay.unit
    # incentive-compatible: labels cost at most 1, unsure exactly T
    return 1.0 if action is Action.RETURN_LABEL else pay.T


def run_task(mech: MechanismConfig, pay: PaymentScheme, spec: crowd.AbilitySpec,
             link: crowd.ConfidenceLink, test: crowd.GoldenTestConfig, stop: StoppingRule,
             truth: int, rng: np.random.Generator) -> TaskResult:
    """Collect responses for one task until the stopping rule fires, then vote and settle."""
    crowd.require_capable_mean(spec)
    if isinstance(mech, UnsureOnline):
        raise ConfigError("UnsureOnline tasks run through the olu module")
    if isinstance(stop, FixedBudget) and stop.b < _nominal_price(pay, Action.RETURN_LABEL):
        raise ConfigError(f"budget {stop.b} cannot cover a single label payment")

    labels: list[LabelRecord] = []
    unsure = 0
    rejected = 0
    spent = 0.0

    def consumed() -> int:
        return len(labels) + unsure + rejected

    while True:
        if isinstance(stop, FixedWorkers) and consumed() >= stop.n:
            break
        if isinstance(stop, FixedReturnedLabels):
            if len(labels) >= stop.n:
                break
            if consumed() >= _STALL_FACTOR * stop.n:
                raise ConfigError(
                    f"stopping rule unreachable: {consumed()} workers yielded "
                    f"{len(labels)}/{stop.n} labels"
                )
        draw = crowd.post_test_sampler(spec, link, test, rng)
        action = decide_action(mech, draw)
        if isinstance(stop, FixedBudget):
            price = _nominal_price(pay, action)
            if spent + price > stop.b:
                break
            spent += price
        if action is Action.RETURN_LABEL:
            value = crowd.generate_label(draw, truth, rng)
            labels.append(LabelRecord(value=value, worker_ability=draw.ability))
        elif action is Action.UNSURE:
            unsure += 1
        else:
            rejected += 1

    estimate = majority_vote(labels)
    settled = settle_payments(pay, labels, unsure, estimate)
    paid_labels = tuple(replace(rec, payment=p) for rec, p in zip(labels, settled.label_payments))
    return TaskResult(
        truth=truth,
        estimate=estimate,
        labels=paid_labels,
        unsure_count=unsure,
        rejected_count=rejected,
        workers_consumed=consumed(),
        total_payment=settled.total,
    )


@dataclass(frozen=True)
class IncentiveReport:
    action: Action
    expected_label_payment: float
    unsure_payment: float


def incentive_best_action(c: float, T: float) -> IncentiveReport:
    """Payment-maximizing action under the incentive-compatible scheme.

    Idealization: the aggregate equals the truth, so a returned label is paid
    with probability c. Tie at c = T goes to returning the label.
    """
    if not 0.5 <= c <= 1.0:
        raise ConfigError(f"confidence must lie in [1/2,1], got {c}")
    _check_threshold(T)
    action = Action.RETURN_LABEL if c >= T else Action.UNSURE
    return IncentiveReport(action=action, expected_label_payment=c, unsure_payment=T)
