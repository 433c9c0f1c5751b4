"""Context sources and oblivious cost adversaries.

Cost schedules are materialized in full before a run starts, so they are
structurally independent of the learner's actions.  Context universes stay
small so exhaustive policy tables remain tractable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SIMPLEX_ATOL, Context, sample_index
from .policies import PolicyClass

ADVERSARY_TYPES = ("stochastic-gap", "drifting", "policy-targeted")


@dataclass(frozen=True)
class ContextDistribution:
    """Distribution over a finite universe of context ids ``0..U-1``."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty 1-d vector")
        if np.any(probs < -SIMPLEX_ATOL) or not np.all(np.isfinite(probs)):
            raise ValueError("probs must be finite and non-negative")
        total = float(probs.sum())
        if abs(total - 1.0) > SIMPLEX_ATOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 within {SIMPLEX_ATOL}")
        probs = np.clip(probs, 0.0, None)
        probs = probs / probs.sum()
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def num_contexts(self) -> int:
        return int(self.probs.size)

    @classmethod
    def uniform(cls, num_contexts: int) -> "ContextDistribution":
        return cls(np.full(num_contexts, 1.0 / num_contexts))

    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Draw context ids by inverse-CDF lookup, one uniform per draw."""
        if size is None:
            return sample_index(self.probs, rng)
        u = rng.random(size)
        cdf = np.cumsum(self.probs)
        idx = np.searchsorted(cdf, u, side="right")
        return np.minimum(idx, self.num_contexts - 1).astype(np.int64)


def sample_context(dist: ContextDistribution, rng: np.random.Generator) -> Context:
    """Draw one context id from the distribution."""
    return dist.sample(rng)


@dataclass(frozen=True)
class CostSchedule:
    """A full horizon of cost vectors, fixed before the run (oblivious)."""

    costs: np.ndarray  # (T, K), entries in [0, 1]

    def __post_init__(self) -> None:
        costs = np.asarray(self.costs, dtype=float)
        if costs.ndim != 2 or costs.shape[0] < 1:
            raise ValueError(f"costs must be a (T, K) matrix, got shape {costs.shape}")
        if not np.all(np.isfinite(costs)) or costs.min() < 0.0 or costs.max() > 1.0:
            raise ValueError("cost entries must lie in [0, 1]")
        costs.flags.writeable = False
        object.__setattr__(self, "costs", costs)

    @property
    def horizon(self) -> int:
        return int(self.costs.shape[0])

    @property
    def num_actions(self) -> int:
        return int(self.costs.shape[1])

    def vector(self, t: int) -> np.ndarray:
        """Cost vector of (1-based) round ``t``."""
        return self.costs[t - 1]

    def cost(self, t: int, action: int) -> float:
        return float(self.costs[t - 1, action - 1])


def make_adversary(
    spec: dict,
    policy_class: PolicyClass,
    horizon: int,
    rng: np.random.Generator,
) -> CostSchedule:
    """Materialize an oblivious cost schedule.

    Supported ``spec["type"]`` values:

    * ``stochastic-gap`` -- one hidden action's costs are uniform on
      ``[0, 1-delta]``, all others uniform on ``[delta, 1]``, i.i.d. per
      round, so the hidden action is better by ``delta`` in expectation.
    * ``drifting`` -- the cheap action (cost 0.25 vs 0.75) rotates through
      the actions, advancing one step every ``period`` rounds.
    * ``policy-targeted`` -- a hidden action costs ``(1-delta)/2`` every
      round while each other action alternates, phase by phase, between
      ``(1+delta)/2`` and a higher clamped level; any policy playing the
      hidden action everywhere is best by at least ``delta`` per round.
    """
    kind = spec.get("type")
    k = policy_class.num_actions
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if kind == "stochastic-gap":
        delta = _get_delta(spec)
        target = int(rng.integers(1, k + 1))
        raw = rng.random((horizon, k))
        costs = delta + raw * (1.0 - delta)
        costs[:, target - 1] = raw[:, target - 1] * (1.0 - delta)
        return CostSchedule(costs)
    if kind == "drifting":
        period = _get_period(spec)
        costs = np.full((horizon, k), 0.75)
        rounds = np.arange(horizon)
        cheap = (rounds // period) % k
        costs[rounds, cheap] = 0.25
        return CostSchedule(costs)
    if kind == "policy-targeted":
        delta = _get_delta(spec)
        period = _get_period(spec)
        target = int(rng.integers(1, k + 1))
        base = (1.0 - delta) / 2.0
        costs = np.empty((horizon, k))
        costs[:, target - 1] = base
        phases = np.arange(horizon) // period
        for a in range(1, k + 1):
            if a == target:
                continue
            # Decoy level flips with the phase parity so which non-target
            # actions look second-best keeps changing.
            high = (phases + a) % 2 == 0
            costs[:, a - 1] = np.where(high, min(1.0, base + delta + 0.25), base + delta)
        return CostSchedule(costs)
    raise ValueError(f"unknown adversary type {kind!r}, expected one of {ADVERSARY_TYPES}")


def _get_delta(spec: dict) -> float:
    delta = spec.get("delta")
    if delta is None or not 0.0 <= float(delta) <= 1.0:
        raise ValueError(f"adversary delta must lie in [0, 1], got {delta!r}")
    return float(delta)


def _get_period(spec: dict) -> int:
    period = spec.get("period")
    if period is None or int(period) < 1:
        raise ValueError(f"adversary period must be a positive integer, got {period!r}")
    return int(period)
