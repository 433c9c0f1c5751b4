"""Shared domain types and the discretized cost-estimate construction.

Conventions used throughout the package:

* Actions are 1-based integers in ``1..K``.  Coordinate 0 is reserved for
  the all-zeros element of the estimate domain (see :class:`EstimatedCost`).
* Contexts are opaque integer ids in ``0..U-1`` over a finite universe;
  policies act on these ids only.
* Every stochastic operation takes an explicit :class:`numpy.random.Generator`
  and consumes a documented number of draws, so runs are bit-reproducible
  given a seed.  Generators are never shared between threads.
* Probability vectors are validated against a fixed simplex tolerance and
  renormalized at construction only; downstream code never renormalizes
  silently and fails loudly on invalid input instead.

All types here are immutable value objects, safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Context = int
ActionIndex = int

#: Absolute tolerance for sum-to-one checks on probability vectors.
SIMPLEX_ATOL = 1e-9

#: Slack allowed when checking a probability against the 1/scale floor.
FLOOR_ATOL = 1e-12


def sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Draw a 0-based index by inverse-CDF lookup, consuming exactly one uniform."""
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    return min(idx, len(probs) - 1)


@dataclass(frozen=True)
class ActionDistribution:
    """Probability vector over the K actions.

    Construction accepts vectors whose sum deviates from 1 by at most
    ``SIMPLEX_ATOL`` and renormalizes them; anything worse is rejected.
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty 1-d vector")
        if not np.all(np.isfinite(probs)):
            raise ValueError("probs must be finite")
        if np.any(probs < -SIMPLEX_ATOL):
            raise ValueError(f"negative probability entry: {probs.min()!r}")
        total = float(probs.sum())
        if abs(total - 1.0) > SIMPLEX_ATOL:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 within {SIMPLEX_ATOL}")
        probs = np.clip(probs, 0.0, None)
        probs = probs / probs.sum()
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def num_actions(self) -> int:
        return int(self.probs.size)

    @classmethod
    def uniform(cls, num_actions: int) -> "ActionDistribution":
        return cls(np.full(num_actions, 1.0 / num_actions))

    def sample(self, rng: np.random.Generator) -> ActionIndex:
        """Draw a 1-based action, consuming one uniform."""
        return sample_index(self.probs, rng) + 1

    def expected_cost(self, costs: np.ndarray) -> float:
        return float(self.probs @ np.asarray(costs, dtype=float))


def check_cost_vector(values, num_actions: int) -> np.ndarray:
    """Validate a per-action cost vector: length K, entries in [0, 1]."""
    c = np.asarray(values, dtype=float)
    if c.shape != (num_actions,):
        raise ValueError(f"cost vector has shape {c.shape}, expected ({num_actions},)")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost vector must be finite")
    if c.min() < 0.0 or c.max() > 1.0:
        raise ValueError(f"cost entries must lie in [0, 1], got range [{c.min()}, {c.max()}]")
    return c


@dataclass(frozen=True)
class EstimatedCost:
    """Discretized importance-weighted cost estimate.

    A realized estimate is either the zero vector (``coordinate == 0``) or
    equal to ``scale`` at exactly one action's coordinate; no other values
    occur.  Keeping (scale, coordinate) instead of a dense vector makes the
    invariant structural.
    """

    scale: float
    coordinate: int  # 0 for the zero vector, else the 1-based action

    def __post_init__(self) -> None:
        if not self.scale > 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if self.coordinate < 0:
            raise ValueError(f"coordinate must be >= 0, got {self.coordinate}")

    @property
    def is_zero(self) -> bool:
        return self.coordinate == 0

    def to_vector(self, num_actions: int) -> np.ndarray:
        if self.coordinate > num_actions:
            raise ValueError(f"coordinate {self.coordinate} exceeds {num_actions} actions")
        v = np.zeros(num_actions)
        if self.coordinate:
            v[self.coordinate - 1] = self.scale
        return v

    def value_at(self, action: ActionIndex) -> float:
        return self.scale if action == self.coordinate else 0.0


@dataclass(frozen=True)
class FutureDraw:
    """Sampled randomness for the remaining rounds of the game.

    Holds, for each remaining round, a context id, a sign vector in
    ``{-1, +1}^K`` and a magnitude in ``{0, scale}``.  Together these drive
    the randomized potential the learner optimizes against.
    """

    contexts: np.ndarray    # (n,) int ids
    signs: np.ndarray       # (n, K) entries in {-1, +1}
    magnitudes: np.ndarray  # (n,) entries in {0, scale}

    def __post_init__(self) -> None:
        contexts = np.asarray(self.contexts, dtype=np.int64)
        signs = np.asarray(self.signs, dtype=float)
        magnitudes = np.asarray(self.magnitudes, dtype=float)
        n = contexts.size
        if signs.ndim != 2 or signs.shape[0] != n or magnitudes.shape != (n,):
            raise ValueError("contexts, signs and magnitudes must have matching lengths")
        if n and not np.all(np.abs(signs) == 1.0):
            raise ValueError("sign entries must be -1 or +1")
        if n and magnitudes.min() < 0.0:
            raise ValueError("magnitudes must be non-negative")
        nonzero = np.unique(magnitudes[magnitudes > 0.0])
        if nonzero.size > 1:
            raise ValueError(f"magnitudes must share a single nonzero value, got {nonzero}")
        for name, arr in (("contexts", contexts), ("signs", signs), ("magnitudes", magnitudes)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return int(self.contexts.size)


@dataclass(frozen=True)
class HistoryRecord:
    """One completed round: what was seen, played, observed and estimated."""

    context: Context
    played_dist: ActionDistribution
    played_action: ActionIndex
    observed_cost: float
    estimate: EstimatedCost

    def __post_init__(self) -> None:
        k = self.played_dist.num_actions
        if not 1 <= self.played_action <= k:
            raise ValueError(f"played action {self.played_action} outside 1..{k}")
        if not 0.0 <= self.observed_cost <= 1.0:
            raise ValueError(f"observed cost {self.observed_cost} outside [0, 1]")
        if self.estimate.coordinate not in (0, self.played_action):
            raise ValueError("estimate coordinate must be 0 or the played action")


def draw_estimator_coin(cost: float, prob: float, scale: float, rng: np.random.Generator) -> int:
    """Draw the Bernoulli coin behind a discretized cost estimate.

    Returns 1 with probability ``cost / (scale * prob)``, where ``prob`` is
    the probability with which the played action was drawn.  The play
    distribution keeps ``prob >= 1/scale``, so the success probability never
    exceeds 1 (a float-epsilon excess is clamped).  Consumes one uniform.
    """
    if not 0.0 <= cost <= 1.0:
        raise ValueError(f"cost {cost} outside [0, 1]")
    if prob < 1.0 / scale - FLOOR_ATOL:
        raise ValueError(f"action probability {prob} below the 1/scale floor {1.0 / scale}")
    p = min(cost / (scale * prob), 1.0)
    return int(rng.random() < p)


def build_estimate(played: ActionIndex, coin: int, scale: float) -> EstimatedCost:
    """Assemble the estimate for one round from the played action and its coin."""
    if played < 1:
        raise ValueError(f"played action must be >= 1, got {played}")
    if coin not in (0, 1):
        raise ValueError(f"coin must be 0 or 1, got {coin}")
    return EstimatedCost(scale=scale, coordinate=played if coin else 0)
