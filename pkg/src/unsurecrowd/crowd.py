"""Crowd ability/confidence distributions, worker sampling, and the golden-task test stage.

Abilities live in [0,1]; confidences in [1/2,1]. A worker's confidence is a
deterministic (or noisy) function of ability, chosen by a ConfidenceLink.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate, stats

from .errors import ConfigError, DomainError

_MIN_TRUNC_ACCEPT = 1e-6


@dataclass(frozen=True)
class Beta:
    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ConfigError(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")


@dataclass(frozen=True)
class TruncatedBeta:
    """Beta(alpha, beta) conditioned on ability >= floor."""
    alpha: float
    beta: float
    floor: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ConfigError(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")
        if not 0.0 <= self.floor <= 1.0:
            raise ConfigError(f"floor must lie in [0,1], got {self.floor}")
        # rejection sampler would stall if almost no mass survives the cut
        accept = stats.beta.sf(self.floor, self.alpha, self.beta)
        if accept < _MIN_TRUNC_ACCEPT:
            raise ConfigError(
                f"TruncatedBeta acceptance probability {accept:.3g} below {_MIN_TRUNC_ACCEPT}"
            )


@dataclass(frozen=True)
class PointMass:
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigError(f"PointMass ability must lie in [0,1], got {self.theta}")


@dataclass(frozen=True)
class Empirical:
    samples: tuple

    def __post_init__(self):
        if len(self.samples) == 0:
            raise ConfigError("Empirical spec needs at least one sample")
        arr = np.asarray(self.samples, dtype=float)
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ConfigError("Empirical samples must lie in [0,1]")


AbilitySpec = Union[Beta, TruncatedBeta, PointMass, Empirical]


def ability_floor(mu: float) -> float:
    """Floor realizing the no-very-low-ability truncation: mass below mu - 1/2 is cut."""
    return max(mu - 0.5, 0.0)


def _beta_raw_moment(alpha: float, beta: float, order: int) -> float:
    value = 1.0
    for i in range(order):
        value *= (alpha + i) / (alpha + beta + i)
    return value


def _trunc_quad(spec: TruncatedBeta, f) -> float:
    tail = stats.beta.sf(spec.floor, spec.alpha, spec.beta)
    val, _ = integrate.quad(
        lambda x: f(x) * stats.beta.pdf(x, spec.alpha, spec.beta),
        spec.floor, 1.0, epsabs=1e-10, epsrel=1e-12, limit=200,
    )
    return val / tail


def dist_moment(spec: AbilitySpec, order: int) -> float:
    """Raw moment E[theta^order] of an ability spec."""
    if order < 1:
        raise DomainError(f"moment order must be >= 1, got {order}")
    if isinstance(spec, Beta):
        return _beta_raw_moment(spec.alpha, spec.beta, order)
    if isinstance(spec, TruncatedBeta):
        return _trunc_quad(spec, lambda x: x**order)
    if isinstance(spec, PointMass):
        return spec.theta**order
    if isinstance(spec, Empirical):
        return float(np.mean(np.asarray(spec.samples, dtype=float) ** order))
    raise TypeError(f"unknown ability spec {spec!r}")


def dist_mean(spec: AbilitySpec) -> float:
    return dist_moment(spec, 1)


def dist_variance(spec: AbilitySpec) -> float:
    m1 = dist_moment(spec, 1)
    return dist_moment(spec, 2) - m1 * m1


def upper_tail(spec: AbilitySpec, threshold: float) -> float:
    """Pr(theta >= threshold); inclusive, which matters for the discrete specs."""
    if not 0.0 <= threshold <= 1.0:
        raise DomainError(f"threshold must lie in [0,1], got {threshold}")
    if isinstance(spec, Beta):
        return float(stats.beta.sf(threshold, spec.alpha, spec.beta))
    if isinstance(spec, TruncatedBeta):
        if threshold <= spec.floor:
            return 1.0
        hi = stats.beta.sf(threshold, spec.alpha, spec.beta)
        return float(hi / stats.beta.sf(spec.floor, spec.alpha, spec.beta))
    if isinstance(spec, PointMass):
        return 1.0 if spec.theta >= threshold else 0.0
    if isinstance(spec, Empirical):
        return float(np.mean(np.asarray(spec.samples, dtype=float) >= threshold))
    raise TypeError(f"unknown ability spec {spec!r}")


def lower_tail(spec: AbilitySpec, threshold: float) -> float:
    """Pr(theta <= threshold); inclusive for the discrete specs."""
    if not 0.0 <= threshold <= 1.0:
        raise DomainError(f"threshold must lie in [0,1], got {threshold}")
    if isinstance(spec, Beta):
        return float(stats.beta.cdf(threshold, spec.alpha, spec.beta))
    if isinstance(spec, TruncatedBeta):
        if threshold < spec.floor:
            return 0.0
        lo = stats.beta.cdf(threshold, spec.alpha, spec.beta) - stats.beta.cdf(spec.floor, spec.alpha, spec.beta)
        return float(lo / stats.beta.sf(spec.floor, spec.alpha, spec.beta))
    if isinstance(spec, PointMass):
        return 1.0 if spec.theta <= threshold else 0.0
    if isinstance(spec, Empirical):
        return float(np.mean(np.asarray(spec.samples, dtype=float) <= threshold))
    raise TypeError(f"unknown ability spec {spec!r}")


def ability_pdf(spec: AbilitySpec, x: float) -> float:
    """Density at x for the continuous specs; used by quadrature-based oracles."""
    if isinstance(spec, Beta):
        return float(stats.beta.pdf(x, spec.alpha, spec.beta))
    if isinstance(spec, TruncatedBeta):
        if x < spec.floor:
            return 0.0
        tail = stats.beta.sf(spec.floor, spec.alpha, spec.beta)
        return float(stats.beta.pdf(x, spec.alpha, spec.beta) / tail)
    raise DomainError(f"{type(spec).__name__} has no density")


def sample_ability(spec: AbilitySpec, rng: np.random.Generator) -> float:
    if isinstance(spec, Beta):
        return float(rng.beta(spec.alpha, spec.beta))
    if isinstance(spec, TruncatedBeta):
        while True:
            x = rng.beta(spec.alpha, spec.beta)
            if x >= spec.floor:
                return float(x)
    if isinstance(spec, PointMass):
        return spec.theta
    if isinstance(spec, Empirical):
        return float(spec.samples[rng.integers(len(spec.samples))])
    raise TypeError(f"unknown ability spec {spec!r}")


def sample_abilities(spec: AbilitySpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized i.i.d. ability draws; same distribution as sample_ability."""
    if isinstance(spec, Beta):
        return rng.beta(spec.alpha, spec.beta, size=n)
    if isinstance(spec, TruncatedBeta):
        out = np.empty(0)
        accept = stats.beta.sf(spec.floor, spec.alpha, spec.beta)
        while len(out) < n:
            batch = rng.beta(spec.alpha, spec.beta, size=max(64, int(1.5 * (n - len(out)) / accept)))
            out = np.concatenate([out, batch[batch >= spec.floor]])
        return out[:n]
    if isinstance(spec, PointMass):
        return np.full(n, spec.theta)
    if isinstance(spec, Empirical):
        return np.asarray(spec.samples, dtype=float)[rng.integers(len(spec.samples), size=n)]
    raise TypeError(f"unknown ability spec {spec!r}")


def require_capable_mean(spec: AbilitySpec) -> None:
    """Mechanism runs require mean ability above 1/2; majority voting diverges otherwise."""
    mu = dist_mean(spec)
    if mu <= 0.5:
        raise DomainError(f"crowd mean ability {mu:.4f} <= 1/2; majority voting does not converge")


@dataclass(frozen=True)
class Folded:
    """Confidence is distance from a coin flip: c = max(theta, 1 - theta)."""

    def confidence(self, theta: float, rng=None) -> float:
        return max(theta, 1.0 - theta)


@dataclass(frozen=True)
class IdentityClamped:
    """Confidence equals ability, clamped up to the honest minimum 1/2."""

    def confidence(self, theta: float, rng=None) -> float:
        return max(theta, 0.5)


@dataclass(frozen=True)
class NoisyFolded:
    """Folded confidence plus uniform noise in [-kappa, kappa], clamped to [1/2, 1]."""
    kappa: float

    def __post_init__(self):
        if self.kappa < 0:
            raise ConfigError(f"kappa must be nonnegative, got {self.kappa}")

    def confidence(self, theta: float, rng: np.random.Generator = None) -> float:
        if rng is None:
            raise ConfigError("NoisyFolded needs an RNG")
        c = max(theta, 1.0 - theta) + rng.uniform(-self.kappa, self.kappa)
        return min(max(c, 0.5), 1.0)


ConfidenceLink = Union[Folded, IdentityClamped, NoisyFolded]


@dataclass(frozen=True)
class WorkerDraw:
    ability: float
    confidence: float


@dataclass(frozen=True)
class GoldenTestConfig:
    """k golden standard tasks a worker must all answer correctly; k = 0 disables the stage."""
    k: int = 0

    def __post_init__(self):
        if self.k < 0:
            raise ConfigError(f"k must be nonnegative, got {self.k}")


def sample_worker(spec: AbilitySpec, link: ConfidenceLink, rng: np.random.Generator) -> WorkerDraw:
    theta = sample_ability(spec, rng)
    return WorkerDraw(ability=theta, confidence=link.confidence(theta, rng))


def run_worker_test(draw: WorkerDraw, cfg: GoldenTestConfig, rng: np.random.Generator) -> bool:
    """True iff the worker answers all k golden tasks correctly. No payment accrues here."""
    for _ in range(cfg.k):
        if rng.random() >= draw.ability:
            return False
    return True


def post_test_moment(spec: AbilitySpec, k: int, j: int) -> float:
    """E[theta^j] over the crowd surviving a k-task test: E[theta^(k+j)] / E[theta^k]."""
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    if j < 1:
        raise DomainError(f"j must be >= 1, got {j}")
    if k == 0:
        return dist_moment(spec, j)
    return dist_moment(spec, k + j) / dist_moment(spec, k)


def generate_label(draw: WorkerDraw, truth: int, rng: np.random.Generator) -> int:
    """Return truth with probability equal to the worker's ability, its negation otherwise."""
    if truth not in (-1, 1):
        raise DomainError(f"truth must be -1 or +1, got {truth}")
    return truth if rng.random() < draw.ability else -truth


def post_test_sampler(spec: AbilitySpec, link: ConfidenceLink, cfg: GoldenTestConfig,
                      rng: np.random.Generator) -> WorkerDraw:
    """Draw workers until one passes the test stage; failures consume neither cost nor count."""
    while True:
        draw = sample_worker(spec, link, rng)
        if run_worker_test(draw, cfg, rng):
            return draw
