"""Entropy-regularized learning core: softmax policies over masked Q-values,
soft state values, one-step regression targets, warm-up (ignition) targets,
the exploration floor, and the temperature schedule.

Everything here is a pure function; policy math runs in float64 regardless of
the network precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AnnealSchedule:
    alpha_start: float
    alpha_end: float
    horizon_steps: int
    support_sampling: bool = False

    def __post_init__(self):
        if self.alpha_start <= 0 or self.alpha_end <= 0:
            raise ValueError("annealed temperatures must stay positive")
        if self.horizon_steps < 1:
            raise ValueError("horizon_steps must be >= 1")


@dataclass(frozen=True)
class SoftQConfig:
    alpha: float = 0.081
    gamma: float = 1.0
    min_action_prob: float = 3e-5
    anneal: AnnealSchedule | None = None
    # Experimental: drop the -alpha*log(pi) term from the soft state value and
    # back up with the expected Q alone. Off by default; no claims attached.
    entropy_cancellation: bool = False

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive during training")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if self.min_action_prob < 0:
            raise ValueError("min_action_prob must be >= 0")


@dataclass
class PolicyDistribution:
    probs: np.ndarray  # float64, zero exactly off support
    support: np.ndarray  # the legal mask the distribution was computed under


def _masked_q(q, mask):
    q = np.asarray(q, dtype=np.float64).ravel()
    mask = np.asarray(mask).ravel().astype(bool)
    if q.shape != mask.shape:
        raise ValueError("q and mask must have equal length")
    if not mask.any():
        raise ValueError("empty legal mask")
    return q, mask


def policy_from_q(q, mask, alpha: float) -> PolicyDistribution:
    """Softmax of Q/alpha over the legal actions; illegal entries are exact 0."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    q, legal = _masked_q(q, mask)
    z = (q - q[legal].max()) / alpha
    ex = np.where(legal, np.exp(np.where(legal, z, 0.0)), 0.0)
    probs = ex / ex.sum()
    return PolicyDistribution(probs=probs, support=legal.astype(np.uint8))


def soft_state_value(q, mask, alpha: float) -> float:
    """alpha * log sum_legal exp(Q/alpha), the entropy-augmented state value.

    Numerically equals the expected Q under the softmax policy plus alpha
    times its entropy; computed as a max-subtracted log-sum-exp.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    q, legal = _masked_q(q, mask)
    m = q[legal].max()
    return float(m + alpha * np.log(np.exp((q[legal] - m) / alpha).sum()))


def expected_q(q, mask, alpha: float) -> float:
    """Expected Q under the softmax policy, without the entropy term."""
    pi = policy_from_q(q, mask, alpha)
    q = np.asarray(q, dtype=np.float64).ravel()
    return float(np.dot(pi.probs, q))


def soft_state_value_batch(q: np.ndarray, masks: np.ndarray, alpha: float) -> np.ndarray:
    """Row-wise soft state values; every row must have at least one legal entry."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    q = np.asarray(q, dtype=np.float64)
    legal = np.asarray(masks).astype(bool)
    if not legal.any(axis=1).all():
        raise ValueError("a row has an empty legal mask")
    neg = np.where(legal, q, -np.inf)
    m = neg.max(axis=1)
    ex = np.where(legal, np.exp((q - m[:, None]) / alpha), 0.0)
    return m + alpha * np.log(ex.sum(axis=1))


def expected_q_batch(q: np.ndarray, masks: np.ndarray, alpha: float) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    legal = np.asarray(masks).astype(bool)
    neg = np.where(legal, q, -np.inf)
    m = neg.max(axis=1)
    ex = np.where(legal, np.exp((q - m[:, None]) / alpha), 0.0)
    probs = ex / ex.sum(axis=1, keepdims=True)
    return (probs * np.where(legal, q, 0.0)).sum(axis=1)


def q_target(r, done, y_v_next, gamma: float):
    """y_q = r - gamma * (1 - d) * y_v(s').

    The minus sign is the zero-sum alternating-turn backup: the next state is
    valued by the opponent, so its value counts against the current mover.
    Accepts scalars or aligned arrays.
    """
    r = np.asarray(r, dtype=np.float64)
    done = np.asarray(done, dtype=np.float64)
    y_v_next = np.asarray(y_v_next, dtype=np.float64)
    out = r - gamma * (1.0 - done) * y_v_next
    return float(out) if out.ndim == 0 else out


def ignition_target(record) -> float:
    """The +-5 episode outcome used as the warm-up regression target."""
    outcome = record.ignition_outcome
    if outcome is None:
        raise ValueError("transition carries no episode outcome")
    if outcome not in (5.0, -5.0):
        raise ValueError(f"episode outcome must be +-5, got {outcome}")
    return float(outcome)


def exploration_mix(policy: PolicyDistribution, epsilon: float) -> PolicyDistribution:
    """Raise every legal action's probability to at least epsilon, renormalized.

    Actor-side only; never applied to regression targets.
    """
    legal = policy.support.astype(bool)
    n_legal = int(legal.sum())
    if epsilon * n_legal >= 1.0:
        raise ValueError("epsilon too large for the number of legal actions")
    if epsilon <= 0.0:
        return policy
    probs = np.where(legal, np.maximum(policy.probs, epsilon), 0.0)
    probs /= probs.sum()
    return PolicyDistribution(probs=probs, support=policy.support)


def entropy(policy: PolicyDistribution) -> float:
    """Shannon entropy over the support; log(0) is never evaluated."""
    p = policy.probs[policy.probs > 0]
    return float(-(p * np.log(p)).sum())


def alpha_at(step: int, config: SoftQConfig) -> float:
    """Learner-side temperature at an update step (deterministic)."""
    sched = config.anneal
    if sched is None:
        return config.alpha
    t = min(max(step, 0), sched.horizon_steps) / sched.horizon_steps
    return sched.alpha_start + t * (sched.alpha_end - sched.alpha_start)


def actor_alpha(step: int, config: SoftQConfig, rng: np.random.Generator) -> float:
    """Per-episode acting temperature.

    With support sampling enabled, draws uniformly between the current
    annealed temperature and the schedule's start, so self-play keeps
    visiting states the earlier (hotter) policies produced.
    """
    current = alpha_at(step, config)
    sched = config.anneal
    if sched is None or not sched.support_sampling:
        return current
    lo, hi = sorted((current, sched.alpha_start))
    return float(rng.uniform(lo, hi))


def sample_action(policy: PolicyDistribution, rng: np.random.Generator) -> int:
    return int(rng.choice(policy.probs.shape[0], p=policy.probs))


def argmax_action(q, mask) -> int:
    """Highest-Q legal action; ties break to the lowest index."""
    q, legal = _masked_q(q, mask)
    masked = np.where(legal, q, -np.inf)
    return int(np.argmax(masked))
