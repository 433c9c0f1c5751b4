"""Finite policy classes and the offline cumulative-loss optimization oracle.

Policies are deterministic maps from context ids to actions, stored as an
explicit ``(num_policies, num_contexts)`` lookup table.  The oracle answers
one query: the minimum cumulative loss any single policy attains on a
weighted example sequence.  It is exact enumeration (vectorized over the
table) and every invocation is counted, because the learner's efficiency
claim is measured in oracle calls.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import Context


@dataclass(frozen=True)
class PolicyClass:
    """Deterministic policies as an explicit action lookup table.

    ``table[p, x]`` is the 1-based action policy ``p`` plays on context ``x``.
    """

    table: np.ndarray
    num_actions: int

    def __post_init__(self) -> None:
        table = np.asarray(self.table, dtype=np.int64)
        if table.ndim != 2 or table.shape[0] < 1 or table.shape[1] < 1:
            raise ValueError(f"policy table must be 2-d and non-empty, got shape {table.shape}")
        if self.num_actions < 1:
            raise ValueError("num_actions must be >= 1")
        if table.min() < 1 or table.max() > self.num_actions:
            raise ValueError(f"table entries must lie in 1..{self.num_actions}")
        table.flags.writeable = False
        object.__setattr__(self, "table", table)

    @property
    def num_policies(self) -> int:
        return int(self.table.shape[0])

    @property
    def num_contexts(self) -> int:
        return int(self.table.shape[1])

    def actions_for(self, context: Context) -> np.ndarray:
        """Every policy's action on one context, as an (N,) vector."""
        return self.table[:, context]

    def action_of(self, policy: int, context: Context) -> int:
        return int(self.table[policy, context])


def random_policy_class(
    num_policies: int,
    num_contexts: int,
    num_actions: int,
    rng: np.random.Generator,
    max_tries: int = 100,
) -> PolicyClass:
    """Draw a uniformly random policy table.

    Resamples until every action is played by some policy on some context,
    so comparators are never degenerate.
    """
    if num_policies * num_contexts < num_actions:
        raise ValueError("table too small to cover every action")
    for _ in range(max_tries):
        table = rng.integers(1, num_actions + 1, size=(num_policies, num_contexts))
        if np.unique(table).size == num_actions:
            return PolicyClass(table=table, num_actions=num_actions)
    raise RuntimeError(f"no action-covering table found in {max_tries} tries")


@dataclass(frozen=True)
class WeightedExample:
    """One (context, per-action loss vector) pair fed to the oracle."""

    context: Context
    loss: np.ndarray

    def __post_init__(self) -> None:
        loss = np.asarray(self.loss, dtype=float)
        if loss.ndim != 1 or not np.all(np.isfinite(loss)):
            raise ValueError("loss must be a finite 1-d vector")
        loss.flags.writeable = False
        object.__setattr__(self, "loss", loss)


class OracleStats:
    """Thread-safe count of oracle invocations (monotone non-decreasing)."""

    def __init__(self) -> None:
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        return self._calls

    def increment(self) -> None:
        with self._lock:
            self._calls += 1


class ValueOracle:
    """Offline optimization oracle over a finite policy class.

    Exposes only the *value* of the best policy on a weighted example
    sequence, never the policy itself.  Each call increments ``stats.calls``
    by exactly one.
    """

    def __init__(self, policy_class: PolicyClass, stats: OracleStats | None = None) -> None:
        self.policy_class = policy_class
        self.stats = stats if stats is not None else OracleStats()
        self._table0 = policy_class.table - 1                    # (N, U) 0-based actions
        self._cols = np.arange(policy_class.num_contexts)[None, :]

    def value(self, examples: Sequence[WeightedExample] | Iterable[WeightedExample]) -> float:
        """Minimum cumulative loss over the class on an example sequence."""
        examples = list(examples)
        k = self.policy_class.num_actions
        if not examples:
            return self.value_arrays(np.zeros(0, dtype=np.int64), np.zeros((0, k)))
        contexts = np.fromiter((ex.context for ex in examples), dtype=np.int64, count=len(examples))
        losses = np.stack([ex.loss for ex in examples])
        return self.value_arrays(contexts, losses)

    def value_arrays(self, contexts: np.ndarray, losses: np.ndarray) -> float:
        """Array fast path: ``contexts`` is (m,) ids, ``losses`` is (m, K)."""
        self.stats.increment()
        m = len(contexts)
        if m == 0:
            return 0.0
        num_contexts = self.policy_class.num_contexts
        num_actions = self.policy_class.num_actions
        if losses.shape != (m, num_actions):
            raise ValueError(f"losses has shape {losses.shape}, expected ({m}, {num_actions})")
        if contexts.min() < 0 or contexts.max() >= num_contexts:
            raise ValueError("context id outside the policy class universe")
        # Sum losses of repeated contexts first: policies depend on the
        # context id only, so this is exact and keeps the gather at (N, U).
        per_context = np.empty((num_contexts, num_actions))
        for a in range(num_actions):
            per_context[:, a] = np.bincount(contexts, weights=losses[:, a], minlength=num_contexts)
        per_policy = per_context[self._cols, self._table0].sum(axis=1)
        return float(per_policy.min())


def best_policy_loss(policy_class: PolicyClass, contexts, costs) -> float:
    """Exact hindsight comparator: the best policy's cumulative true cost.

    Computed by full enumeration over the class; this is the ground truth
    regret is reported against.
    """
    contexts = np.asarray(contexts, dtype=np.int64)
    costs = np.asarray(costs, dtype=float)
    if contexts.ndim != 1:
        raise ValueError("contexts must be a 1-d sequence of ids")
    if len(contexts) != len(costs):
        raise ValueError(f"{len(contexts)} contexts but {len(costs)} cost vectors")
    if len(contexts) == 0:
        return 0.0
    if costs.ndim != 2 or costs.shape[1] != policy_class.num_actions:
        raise ValueError(f"costs has shape {costs.shape}, expected (T, {policy_class.num_actions})")
    num_contexts = policy_class.num_contexts
    per_context = np.empty((num_contexts, policy_class.num_actions))
    for a in range(policy_class.num_actions):
        per_context[:, a] = np.bincount(contexts, weights=costs[:, a], minlength=num_contexts)
    table0 = policy_class.table - 1
    per_policy = per_context[np.arange(num_contexts)[None, :], table0].sum(axis=1)
    return float(per_policy.min())
