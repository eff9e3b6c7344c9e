"""Analytic cost bounds, tail lower bound, optimal thresholds, and effectiveness verdicts.

Costs come in three flavors: the no-mechanism majority-voting bound, the
quality-ensured (ability-gated) bound, and the unsure (confidence-gated) bound
with its worker-testing corrections. Effectiveness compares a mechanism's
main-order cost term against 1/(2*mu-1)^alpha.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from . import crowd
from .errors import AssumptionViolation, DomainError

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class CrowdStats:
    """Mean/variance summary of an ability distribution, with the tail-asymmetry ratio."""
    mu: float
    sigma2: float
    gamma: float = 0.0

    def __post_init__(self):
        if not 0.5 < self.mu <= 1.0:
            raise DomainError(f"mean must lie in (1/2, 1], got {self.mu}")
        if self.sigma2 < 0:
            raise DomainError(f"variance must be nonnegative, got {self.sigma2}")
        # max variance on [0,1] given mean mu > 1/2 is (1-mu)^2
        if self.sigma2 > (1.0 - self.mu) ** 2 + 1e-12:
            raise DomainError(
                f"variance {self.sigma2} exceeds (1-mu)^2 = {(1 - self.mu) ** 2:.6g}"
            )
        if self.gamma < 0:
            raise DomainError(f"gamma must be nonnegative, got {self.gamma}")

    @classmethod
    def from_spec(cls, spec: crowd.AbilitySpec) -> "CrowdStats":
        mu = crowd.dist_mean(spec)
        sigma2 = crowd.dist_variance(spec)
        if not 0.5 < mu <= 1.0:
            raise DomainError(f"spec mean {mu:.4f} not in (1/2, 1]")
        r = threshold_shift(sigma2)
        return cls(mu=mu, sigma2=sigma2, gamma=tail_asymmetry(spec, mu, r))


@dataclass(frozen=True)
class UnsureStats:
    """Inputs to the unsure-mechanism bound: pre/post-test moments and tails at T.

    Index 0 = before the worker testing stage, 1 = after; theta = ability,
    c = confidence. k is the golden-task count; k0/k1 are the task-dependent
    confidence-ability correlation exponents, supplied by the user.
    """
    mu_theta0: float
    sigma2_theta0: float
    mu_c1: float
    sigma2_c1: float
    eta_theta0: float
    eta_theta1: float
    eta_c1: float
    k: int
    k0: float
    k1: float
    moment_k: float  # E[theta^k] under the pre-test distribution
    mu_theta1: float

    def __post_init__(self):
        for name in ("eta_theta0", "eta_theta1", "eta_c1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must be a probability, got {v}")
        if self.k < 0:
            raise DomainError(f"k must be nonnegative, got {self.k}")
        if self.k0 <= 0:
            raise DomainError(f"k0 must be positive, got {self.k0}")
        if self.k1 < 0:
            raise DomainError(f"k1 must be nonnegative, got {self.k1}")
        if not 0.0 < self.moment_k <= 1.0:
            raise DomainError(f"E[theta^k] must lie in (0, 1], got {self.moment_k}")

    @property
    def case_a(self) -> bool:
        """Case A: post-test confident workers are at least as common as able ones."""
        return self.eta_c1 >= self.eta_theta1

    def check_assumptions(self) -> None:
        """Moment conditions keeping the transformed threshold above 1/2."""
        if self.case_a:
            lhs = self.mu_theta0 ** (self.k + 1) / self.moment_k ** (1.0 - self.k0)
            if lhs < 0.5:
                raise AssumptionViolation(
                    f"mu_theta0^(k+1)/E[theta^k]^(1-k0) = {lhs:.4f} < 1/2"
                )
        else:
            lhs = self.mu_c1 ** (self.k1 + 1)
            if lhs < 0.5:
                raise AssumptionViolation(f"mu_c1^(k1+1) = {lhs:.4f} < 1/2")


@dataclass(frozen=True)
class BoundReport:
    required_cost: float
    threshold: Optional[float]
    case_tag: str  # simple | quality | unsure-A | unsure-B
    main_order_term: float
    alpha_achieved: Optional[float] = None
    term_breakdown: tuple = field(default_factory=tuple)
    effective: Optional[bool] = None

    @property
    def required_cost_ceil(self) -> int:
        return math.ceil(self.required_cost)

    def as_dict(self) -> dict:
        return {
            "required_cost": self.required_cost,
            "required_cost_ceil": self.required_cost_ceil,
            "threshold": self.threshold,
            "case_tag": self.case_tag,
            "main_order_term": self.main_order_term,
            "alpha_achieved": self.alpha_achieved,
            "term_breakdown": list(self.term_breakdown),
            "effective": self.effective,
        }


def _check_delta(delta: float) -> None:
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"delta must lie in (0, 1], got {delta}")


def simple_cost_bound(mu: float, delta: float) -> BoundReport:
    """Workers needed for majority voting alone to be correct w.p. >= 1 - delta."""
    if not 0.5 < mu <= 1.0:
        raise DomainError(f"majority voting does not converge for mean {mu} <= 1/2")
    _check_delta(delta)
    edge = 2.0 * mu - 1.0
    m = 2.0 * (1.0 + (2.0 / 3.0) * edge) * math.log(1.0 / delta) / edge**2
    return BoundReport(
        required_cost=m,
        threshold=None,
        case_tag="simple",
        main_order_term=1.0 / edge**2,
        term_breakdown=(("total", m),),
    )


def quality_cost_bound(T: float, eta: float, delta: float) -> BoundReport:
    """Workers needed under the ability-gated mechanism with threshold T and tail eta."""
    if not 0.5 < T <= 1.0:
        raise DomainError(f"threshold must lie in (1/2, 1], got {T}")
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"eta must lie in (0, 1]; eta = {eta} means no capable workers")
    _check_delta(delta)
    log_term = math.log(2.0 / delta)
    t1 = 2.0 * (1.0 - eta) * log_term / eta
    t2 = 4.0 * log_term / ((2.0 * T - 1.0) ** 2 * eta)
    t3 = 2.0 / (3.0 * eta)
    return BoundReport(
        required_cost=t1 + t2 + t3,
        threshold=T,
        case_tag="quality",
        main_order_term=1.0 / ((2.0 * T - 1.0) ** 2 * eta),
        term_breakdown=(("confident_supply", t1), ("vote_accuracy", t2), ("slack", t3)),
    )


def tail_lower_bound(sigma2: float, r: float) -> float:
    """Lower bound on Pr(|x - mu| >= r) for x in [0,1]: 2*sqrt(3)*(sigma2 - r^2)/(1 - 4 r^2)."""
    if sigma2 <= 0:
        raise DomainError(f"variance must be positive, got {sigma2}")
    if not 0.0 < r < math.sqrt(sigma2):
        raise DomainError(f"need 0 < r < sigma; got r={r}, sigma={math.sqrt(sigma2):.4g}")
    if r >= 0.5:
        raise DomainError(f"r must be below 1/2, got {r}")
    val = 2.0 * SQRT3 * (sigma2 - r * r) / (1.0 - 4.0 * r * r)
    return min(max(val, 0.0), 1.0)


def threshold_shift(sigma2: float) -> float:
    """Offset above the mean for the variance-optimal threshold: (1/2)*sqrt(1 - sqrt(1 - 4*sigma2))."""
    if sigma2 < 0 or 4.0 * sigma2 > 1.0:
        raise DomainError(f"need 0 <= 4*sigma2 <= 1, got sigma2 = {sigma2}")
    return 0.5 * math.sqrt(1.0 - math.sqrt(1.0 - 4.0 * sigma2))


def tail_asymmetry(spec: crowd.AbilitySpec, mu: float, r: float) -> float:
    """gamma = Pr(theta <= mu - r) / Pr(theta >= mu + r) from the spec's numeric tails."""
    upper = crowd.upper_tail(spec, min(mu + r, 1.0))
    if upper <= 0.0:
        raise DomainError(f"upper tail at {mu + r:.4f} is zero; gamma undefined")
    return crowd.lower_tail(spec, max(mu - r, 0.0)) / upper


def _alpha_achieved(m: float, edge: float) -> Optional[float]:
    # edge = 2*mu - 1 in (0, 1); solve m = (1/edge)^alpha
    if m <= 0 or edge >= 1.0:
        return None
    return math.log(m) / math.log(1.0 / edge)


def theorem1_report(mu: float, sigma2: float, gamma: float, alpha: float) -> BoundReport:
    """Variance-optimal quality-ensured plan from raw moments plus a tail-asymmetry ratio."""
    if not 0.5 < mu <= 1.0:
        raise DomainError(f"mean must lie in (1/2, 1], got {mu}")
    if sigma2 <= 0:
        raise DomainError("zero variance: threshold collapses to the mean; mechanism cannot help")
    r = threshold_shift(sigma2)
    T = mu + r
    if T > 1.0 + 1e-12:
        raise DomainError(f"optimal threshold {T:.4f} exceeds 1; variance too large for this mean")
    edge = 2.0 * mu - 1.0
    root = math.sqrt(1.0 - 4.0 * sigma2)
    m = (1.0 + gamma) * (1.0 + root) ** 2 / (SQRT3 * sigma2 * (2.0 * sigma2 + edge) ** 2)
    return BoundReport(
        required_cost=m,
        threshold=min(T, 1.0),
        case_tag="quality",
        main_order_term=m,
        alpha_achieved=_alpha_achieved(m, edge),
        term_breakdown=(("gamma", gamma), ("cost", m)),
        effective=m <= (1.0 / edge) ** alpha,
    )


def theorem1_plan(spec: crowd.AbilitySpec, alpha: float) -> BoundReport:
    """Variance-optimal plan for a concrete ability spec; gamma comes from its numeric tails."""
    mu = crowd.dist_mean(spec)
    sigma2 = crowd.dist_variance(spec)
    if sigma2 <= 0:
        raise DomainError("zero variance: threshold collapses to the mean; mechanism cannot help")
    r = threshold_shift(sigma2)
    return theorem1_report(mu, sigma2, tail_asymmetry(spec, mu, r), alpha)


def _unsure_transform(stats: UnsureStats, T: float) -> tuple[float, float, str]:
    """Effective tail eta and transformed threshold T' for the unsure bound."""
    stats.check_assumptions()
    if stats.case_a:
        if T < stats.mu_theta0:
            raise AssumptionViolation(
                f"case A needs T >= mu_theta0; got T={T}, mu_theta0={stats.mu_theta0}"
            )
        scale = T**stats.k / stats.moment_k
        eta = scale * stats.eta_theta0
        t_prime = (T**stats.k / stats.moment_k ** (1.0 - stats.k0)) * T
        tag = "unsure-A"
    else:
        if T < stats.mu_c1:
            raise AssumptionViolation(f"case B needs T >= mu_c1; got T={T}, mu_c1={stats.mu_c1}")
        eta = stats.eta_c1
        t_prime = stats.mu_c1**stats.k1 * T
        tag = "unsure-B"
    if t_prime <= 0.5:
        raise AssumptionViolation(f"transformed threshold {t_prime:.4f} <= 1/2")
    return eta, t_prime, tag


def unsure_cost_bound(stats: UnsureStats, T: float, delta: float) -> BoundReport:
    """Workers needed under the confidence-gated mechanism with testing stage."""
    if not 0.5 < T <= 1.0:
        raise DomainError(f"threshold must lie in (1/2, 1], got {T}")
    _check_delta(delta)
    eta, t_prime, tag = _unsure_transform(stats, T)
    if eta <= 0.0:
        raise DomainError("effective tail eta is zero; no workers would return labels")
    log_term = math.log(2.0 / delta)
    t1 = 2.0 * (1.0 - eta) * log_term / eta
    t2 = 8.0 * log_term / ((2.0 * t_prime - 1.0) ** 2 * eta)
    t3 = 2.0 / (3.0 * eta)
    return BoundReport(
        required_cost=t1 + t2 + t3,
        threshold=T,
        case_tag=tag,
        main_order_term=1.0 / ((2.0 * t_prime - 1.0) ** 2 * eta),
        term_breakdown=(("confident_supply", t1), ("vote_accuracy", t2), ("slack", t3)),
    )


def unsure_effectiveness_plan(stats: UnsureStats, alpha: float,
                              spec: crowd.AbilitySpec | None = None,
                              gamma: float | None = None) -> BoundReport:
    """Variance-optimal unsure-mechanism plan; verdict is against the post-test mean ability.

    gamma is taken from the pre-test ability spec's tails when one is supplied
    (case A); otherwise a scalar gamma must be provided. Unlike the cost bound,
    the moment conditions are not enforced here: the plan formula is evaluated
    as printed even for weakly correlated inputs.
    """
    if stats.mu_theta1 <= 0.5:
        raise DomainError(f"post-test mean ability {stats.mu_theta1} <= 1/2")
    if stats.case_a:
        mu, sigma2 = stats.mu_theta0, stats.sigma2_theta0
        tag = "unsure-A"
    else:
        mu, sigma2 = stats.mu_c1, stats.sigma2_c1
        tag = "unsure-B"
    if sigma2 <= 0:
        raise DomainError("zero variance: threshold collapses to the mean; mechanism cannot help")
    r = threshold_shift(sigma2)
    T = mu + r
    if T > 1.0 + 1e-12:
        raise DomainError(f"optimal threshold {T:.4f} exceeds 1")
    if gamma is None:
        if spec is None or not stats.case_a:
            raise DomainError("gamma must be supplied when no pre-test ability spec applies")
        gamma = tail_asymmetry(spec, mu, r)
    root = math.sqrt(1.0 - 4.0 * sigma2)
    if stats.case_a:
        # worst-case correlation factor replacing T^k in the transformed threshold
        b1 = stats.mu_theta0**stats.k / stats.moment_k ** (1.0 - stats.k0)
        bracket = 2.0 * b1 * sigma2 + (2.0 * b1 * mu - 1.0)
    else:
        conf_pow = stats.mu_c1**stats.k1
        bracket = 2.0 * conf_pow * sigma2 + (2.0 * conf_pow * mu - 1.0)
    if bracket == 0.0:
        raise DomainError("main-order bracket is zero; plan cost undefined")
    m = (1.0 + gamma) * (1.0 + root) ** 2 / (SQRT3 * sigma2 * bracket**2)
    edge = 2.0 * stats.mu_theta1 - 1.0
    return BoundReport(
        required_cost=m,
        threshold=min(T, 1.0),
        case_tag=tag,
        main_order_term=m,
        alpha_achieved=_alpha_achieved(m, edge),
        term_breakdown=(("gamma", gamma), ("cost", m)),
        effective=m <= (1.0 / edge) ** alpha,
    )
