"""Online confidence-threshold selection: UCB-1 over a candidate threshold grid.

Arm k offers threshold t_k; the reward for a round is (2*T-1)^2 when the worker
returns a label (confidence >= T) and 0 when they answer unsure, so the bandit
maximizes the inverse of the main-order cost term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import crowd
from .errors import ConfigError

QUAD_TOL = 1e-10


def reward(T: float, returned: bool) -> float:
    if not 0.5 < T <= 1.0:
        raise ConfigError(f"threshold must lie in (1/2, 1], got {T}")
    return (2.0 * T - 1.0) ** 2 if returned else 0.0


@dataclass
class BanditState:
    candidates: tuple
    counts: list = field(default_factory=list)
    means: list = field(default_factory=list)
    round: int = 0

    def __post_init__(self):
        if len(self.candidates) == 0:
            raise ConfigError("candidate threshold set must be non-empty")
        if len(set(self.candidates)) != len(self.candidates):
            raise ConfigError("candidate thresholds must be distinct")
        for t in self.candidates:
            if not 0.5 < t <= 1.0:
                raise ConfigError(f"threshold must lie in (1/2, 1], got {t}")
        if not self.counts:
            self.counts = [0] * len(self.candidates)
            self.means = [0.0] * len(self.candidates)

    def select_arm(self) -> int:
        """Unpulled arms first (lowest index); then UCB-1, ties to the smallest threshold."""
        for k, n in enumerate(self.counts):
            if n == 0:
                return k
        best, best_idx = -math.inf, 0
        for k, (n, r_hat) in enumerate(zip(self.counts, self.means)):
            idx = r_hat + math.sqrt(2.0 * math.log(self.round) / n)
            if idx > best or (idx == best and self.candidates[k] < self.candidates[best_idx]):
                best, best_idx = idx, k
        return best_idx

    def update(self, arm: int, r: float) -> "BanditState":
        if not 0 <= arm < len(self.candidates):
            raise ConfigError(f"arm {arm} out of range for {len(self.candidates)} candidates")
        if not 0.0 <= r <= 1.0:
            raise ConfigError(f"reward must lie in [0,1], got {r}")
        n = self.counts[arm] + 1
        self.counts[arm] = n
        self.means[arm] = ((n - 1) * self.means[arm] + r) / n
        self.round += 1
        return self


@dataclass(frozen=True)
class OluTraceRow:
    round: int
    arm: int
    threshold: float
    reward: float


def run_olu(spec: crowd.AbilitySpec, link: crowd.ConfidenceLink, test: crowd.GoldenTestConfig,
            rounds: int, candidates, rng: np.random.Generator) -> tuple[list[OluTraceRow], BanditState]:
    """Run the bandit for `rounds` post-test workers and return the trace plus final state."""
    state = BanditState(candidates=tuple(candidates))
    if rounds < len(state.candidates):
        raise ConfigError(f"need at least {len(state.candidates)} rounds to pull every arm once")
    crowd.require_capable_mean(spec)
    trace = []
    for i in range(1, rounds + 1):
        arm = state.select_arm()
        t = state.candidates[arm]
        draw = crowd.post_test_sampler(spec, link, test, rng)
        r = reward(t, draw.confidence >= t)
        state.update(arm, r)
        trace.append(OluTraceRow(round=i, arm=arm, threshold=t, reward=r))
    return trace, state


def _return_prob_given_ability(link: crowd.ConfidenceLink, theta: float, t: float) -> float:
    """Pr(confidence >= t | ability = theta)."""
    if isinstance(link, crowd.NoisyFolded):
        base = max(theta, 1.0 - theta)
        if link.kappa == 0.0:
            return 1.0 if base >= t else 0.0
        # uniform noise, then clamp; clamp cannot pull a value across t <= 1
        return float(np.clip((link.kappa - (t - base)) / (2.0 * link.kappa), 0.0, 1.0))
    return 1.0 if link.confidence(theta) >= t else 0.0


def expected_arm_reward(spec: crowd.AbilitySpec, link: crowd.ConfidenceLink, t: float,
                        k: int = 0) -> float:
    """(2t-1)^2 * Pr(c >= t) for a post-test worker (k golden tasks; k=0 for no stage)."""
    if not 0.5 < t <= 1.0:
        raise ConfigError(f"threshold must lie in (1/2, 1], got {t}")
    scale = (2.0 * t - 1.0) ** 2
    if isinstance(spec, crowd.PointMass):
        return scale * _return_prob_given_ability(link, spec.theta, t)
    if isinstance(spec, crowd.Empirical):
        arr = np.asarray(spec.samples, dtype=float)
        w = arr**k
        probs = np.array([_return_prob_given_ability(link, x, t) for x in arr])
        return scale * float(np.sum(w * probs) / np.sum(w))
    lo = spec.floor if isinstance(spec, crowd.TruncatedBeta) else 0.0
    # split at the fold points where the return indicator jumps
    breaks = sorted({lo, 1.0} | {x for x in (1.0 - t, t) if lo < x < 1.0})
    num = 0.0
    den = 0.0
    for a, b in zip(breaks, breaks[1:]):
        f_num = lambda x: _return_prob_given_ability(link, x, t) * x**k * crowd.ability_pdf(spec, x)
        piece, _ = integrate.quad(f_num, a, b, epsabs=QUAD_TOL, epsrel=1e-12, limit=200)
        num += piece
        if k > 0:
            piece_d, _ = integrate.quad(lambda x: x**k * crowd.ability_pdf(spec, x), a, b,
                                        epsabs=QUAD_TOL, epsrel=1e-12, limit=200)
            den += piece_d
    if k == 0:
        den = 1.0
    return scale * num / den


def best_candidate(spec: crowd.AbilitySpec, link: crowd.ConfidenceLink, candidates,
                   k: int = 0) -> tuple[int, float]:
    """Oracle argmax over the grid: (index, expected reward)."""
    rewards = [expected_arm_reward(spec, link, t, k) for t in candidates]
    idx = int(np.argmax(rewards))
    return idx, rewards[idx]
