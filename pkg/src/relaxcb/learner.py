"""The relaxation-based contextual bandit learner.

Each round the learner draws fresh randomness for the remaining rounds (a
``FutureDraw``), asks the value oracle K+1 questions about the history
extended by that randomness, turns the answers into a distribution by
water-filling, mixes with the uniform distribution for exploration, plays,
and finally records a discretized importance-weighted estimate of the
observed cost.  The oracle budget is exactly K+1 calls per round.

Randomness contract (one round consumes, in order):

1. future contexts -- one uniform per remaining round, inverse-CDF sampled
   (none in transductive mode, where the true future sequence is copied);
2. future sign vectors -- ``rng.integers(0, 2, size=(n, K))``;
3. future magnitudes -- one uniform per remaining round;
4. the played action -- one uniform;
5. the estimator coin -- one uniform.

This fixed order makes full traces reproducible by hand from the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .core import (
    ActionDistribution,
    ActionIndex,
    Context,
    FutureDraw,
    HistoryRecord,
    build_estimate,
    draw_estimator_coin,
)
from .environments import ContextDistribution
from .policies import ValueOracle

MODES = ("iid-sampler", "transductive")

#: A source of future contexts: a distribution to sample from, or (in
#: transductive mode) the full realized context sequence for rounds 1..T.
ContextSource = Union[ContextDistribution, np.ndarray]


@dataclass(frozen=True)
class LearnerConfig:
    """Game dimensions plus the estimate scale.

    ``scale`` is the magnitude of the discretized cost estimates (each
    estimate is 0 or ``scale`` per coordinate) and simultaneously sets the
    exploration floor ``1/scale``.  It must be at least K or the minimax
    step is infeasible.
    """

    K: int
    T: int
    scale: float
    mode: str = "iid-sampler"

    def __post_init__(self) -> None:
        if self.K < 2:
            raise ValueError(f"need at least 2 actions, got K={self.K}")
        if self.T < 1:
            raise ValueError(f"horizon must be >= 1, got T={self.T}")
        if not self.scale >= self.K:
            raise ValueError(f"scale must be >= K, got scale={self.scale}, K={self.K}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


def tune_scale(num_actions: int, horizon: int, num_policies: int) -> float:
    """Cube-root tuning of the estimate scale, clamped to its K floor.

    Returns ``max(K, (K*T / ln N)**(1/3))`` as a real number (no rounding).
    The clamp engages exactly when ``T < K**2 * ln N``; callers should flag
    such runs as outside the tuned regime (see ``in_tuning_regime``).
    """
    if num_policies < 2:
        raise ValueError(f"need at least 2 policies to tune, got {num_policies}")
    if num_actions < 1 or horizon < 1:
        raise ValueError("num_actions and horizon must be positive")
    raw = (num_actions * horizon / math.log(num_policies)) ** (1.0 / 3.0)
    return max(float(num_actions), raw)


def in_tuning_regime(num_actions: int, horizon: int, num_policies: int) -> bool:
    """Whether the horizon is long enough for cube-root tuning to bind."""
    return horizon >= num_actions**2 * math.log(num_policies)


@dataclass(frozen=True)
class OracleScores:
    """The K+1 oracle answers for one round and their normalized gaps.

    ``minima[i]`` is the best cumulative loss over the class when an extra
    ``scale``-sized charge on action ``i`` at the current context is added
    to the sequence (``minima[0]``: no charge).  ``gaps[i-1]`` is
    ``(minima[i] - minima[0]) / scale``, the normalized price of action
    ``i`` this round.
    """

    minima: np.ndarray  # (K+1,)
    gaps: np.ndarray    # (K,)

    def __post_init__(self) -> None:
        minima = np.asarray(self.minima, dtype=float)
        gaps = np.asarray(self.gaps, dtype=float)
        if minima.ndim != 1 or minima.size < 2 or gaps.shape != (minima.size - 1,):
            raise ValueError("scores need K+1 minima and K gaps")
        if not (np.all(np.isfinite(minima)) and np.all(np.isfinite(gaps))):
            raise ValueError("scores must be finite")
        minima.flags.writeable = False
        gaps.flags.writeable = False
        object.__setattr__(self, "minima", minima)
        object.__setattr__(self, "gaps", gaps)

    @property
    def num_actions(self) -> int:
        return int(self.gaps.size)

    @classmethod
    def from_minima(cls, minima: np.ndarray, scale: float) -> "OracleScores":
        minima = np.asarray(minima, dtype=float)
        return cls(minima=minima, gaps=(minima[1:] - minima[0]) / scale)


def sample_future(
    t: int,
    config: LearnerConfig,
    context_source: ContextSource,
    rng: np.random.Generator,
) -> FutureDraw:
    """Draw the randomness for rounds ``t+1 .. T``.

    Contexts come i.i.d. from the sampler (or verbatim from the known
    sequence in transductive mode); each sign entry is uniform on
    ``{-1, +1}``; each magnitude is ``scale`` with probability ``K/scale``
    and 0 otherwise.
    """
    if t > config.T:
        raise ValueError(f"round {t} beyond horizon {config.T}")
    if t < 0:
        raise ValueError(f"round must be >= 0, got {t}")
    n = config.T - t
    if config.mode == "transductive":
        seq = np.asarray(context_source, dtype=np.int64)
        if seq.shape != (config.T,):
            raise ValueError(f"transductive context sequence must have length {config.T}")
        contexts = seq[t:].copy()
    else:
        if not isinstance(context_source, ContextDistribution):
            raise TypeError("iid-sampler mode needs a ContextDistribution source")
        contexts = context_source.sample(rng, size=n)
    signs = rng.integers(0, 2, size=(n, config.K)) * 2 - 1
    hit = rng.random(n) < config.K / config.scale
    magnitudes = np.where(hit, config.scale, 0.0)
    return FutureDraw(contexts=contexts, signs=signs, magnitudes=magnitudes)


def past_loss_matrix(history: Sequence, num_contexts: int, num_actions: int) -> np.ndarray:
    """Sum recorded estimates into a (U, K) per-context loss matrix.

    Accepts ``HistoryRecord`` entries or raw ``(context, estimate)`` pairs.
    Estimates are sparse, so this walks the nonzero ones directly.
    """
    mat = np.zeros((num_contexts, num_actions))
    for item in history:
        if isinstance(item, HistoryRecord):
            context, estimate = item.context, item.estimate
        else:
            context, estimate = item
        if estimate.coordinate:
            mat[context, estimate.coordinate - 1] += estimate.scale
    return mat


def future_loss_matrix(rho: FutureDraw, num_contexts: int, num_actions: int) -> np.ndarray:
    """Sum the perturbation terms ``2 * sign * magnitude`` into a (U, K) matrix."""
    mat = np.zeros((num_contexts, num_actions))
    nz = rho.magnitudes > 0.0
    if np.any(nz):
        contexts = rho.contexts[nz]
        weighted = rho.signs[nz] * (2.0 * rho.magnitudes[nz])[:, None]
        for a in range(num_actions):
            mat[:, a] = np.bincount(contexts, weights=weighted[:, a], minlength=num_contexts)
    return mat


def _scores_from_matrix(
    base: np.ndarray,
    x_t: Context,
    config: LearnerConfig,
    oracle: ValueOracle,
) -> OracleScores:
    """Run the K+1 oracle queries against an aggregated (U, K) loss matrix."""
    num_contexts = oracle.policy_class.num_contexts
    contexts = np.arange(num_contexts)
    minima = np.empty(config.K + 1)
    minima[0] = oracle.value_arrays(contexts, base)
    for a in range(1, config.K + 1):
        charged = base.copy()
        charged[x_t, a - 1] += config.scale
        minima[a] = oracle.value_arrays(contexts, charged)
    return OracleScores.from_minima(minima, config.scale)


def oracle_scores(
    history: Sequence[HistoryRecord],
    x_t: Context,
    rho: FutureDraw,
    config: LearnerConfig,
    oracle: ValueOracle,
) -> OracleScores:
    """Compute the round's K+1 oracle answers.

    Each answer is one oracle call on the sequence made of the recorded
    estimates, the single charge at the current context (absent for index
    0), and the perturbation terms from ``rho``; exactly K+1 calls total.
    """
    num_contexts = oracle.policy_class.num_contexts
    base = past_loss_matrix(history, num_contexts, config.K)
    base += future_loss_matrix(rho, num_contexts, config.K)
    return _scores_from_matrix(base, x_t, config, oracle)


REMAINDER_RULES = ("largest-gap", "lowest-index")


def water_fill(gaps, remainder_rule: str = "largest-gap") -> ActionDistribution:
    """Sequentially fill coordinates up to their (positive) gaps.

    Walks coordinates in order 1..K, assigning ``min(max(gap, 0), m)`` to
    each while mass ``m`` (initially 1) lasts.  Any remaining mass goes to
    one coordinate chosen by ``remainder_rule``: the largest gap with ties
    to the lowest index (default), or plainly the lowest index.  Any real
    gap vector is acceptable.
    """
    gaps = np.asarray(gaps, dtype=float)
    if gaps.ndim != 1 or gaps.size == 0 or not np.all(np.isfinite(gaps)):
        raise ValueError("gaps must be a finite 1-d vector")
    if remainder_rule not in REMAINDER_RULES:
        raise ValueError(f"remainder_rule must be one of {REMAINDER_RULES}")
    q = np.zeros(gaps.size)
    m = 1.0
    for i in range(gaps.size):
        fill = min(max(gaps[i], 0.0), m)
        q[i] = fill
        m -= fill
    if m > 0.0:
        j = int(np.argmax(gaps)) if remainder_rule == "largest-gap" else 0
        q[j] += m
    return ActionDistribution(q)


def inner_sup_value(dist: ActionDistribution | np.ndarray, scores: OracleScores, scale: float) -> float:
    """Adversary's best response value against a play distribution, in closed form.

    The adversary picks a distribution over the discretized estimate domain
    (zero vector plus ``scale``-spiked coordinates, each spike capped at
    probability ``1/scale``) to maximize the expected charge net of the
    oracle minima.  Capping makes the optimum a capped fill from the top
    coordinate down, which collapses to
    ``sum_i max(z_i - z_0, 0)/scale + z_0`` with ``z_i = scale*q_i -
    minima[i]`` and ``z_0 = -minima[0]``.  Requires ``scale >= K`` so the
    fill never runs out of room.
    """
    probs = dist.probs if isinstance(dist, ActionDistribution) else np.asarray(dist, dtype=float)
    return float(inner_sup_values(probs[None, :], scores, scale)[0])


def inner_sup_values(prob_rows: np.ndarray, scores: OracleScores, scale: float) -> np.ndarray:
    """Vectorized :func:`inner_sup_value` over rows of play distributions."""
    prob_rows = np.asarray(prob_rows, dtype=float)
    if prob_rows.ndim != 2:
        raise ValueError(f"prob_rows must be 2-d, got shape {prob_rows.shape}")
    k = prob_rows.shape[1]
    if k != scores.num_actions:
        raise ValueError(f"got {k}-action rows for {scores.num_actions}-action scores")
    if scale < k:
        raise ValueError(f"scale must be >= K, got scale={scale}, K={k}")
    z = scale * prob_rows - scores.minima[1:]
    z0 = -scores.minima[0]
    return np.maximum(z - z0, 0.0).sum(axis=1) / scale + z0


def play_distribution(scores: OracleScores, config: LearnerConfig) -> ActionDistribution:
    """Water-fill the gaps, then mix with uniform for the exploration floor.

    Returns ``(1 - K/scale) * water_fill(gaps) + (1/scale) * ones``; every
    coordinate ends up at least ``1/scale``.
    """
    filled = water_fill(scores.gaps)
    mix = 1.0 - config.K / config.scale
    return ActionDistribution(mix * filled.probs + 1.0 / config.scale)


def relaxation_value(
    history: Sequence,
    rho: FutureDraw,
    config: LearnerConfig,
    oracle: ValueOracle,
) -> float:
    """Single-draw potential of the game after ``len(history)`` rounds.

    Minus the oracle value on (recorded estimates + perturbation terms from
    ``rho``), plus the exploration budget ``(T - t) * K / scale`` for the
    remaining rounds.  One oracle call.  ``history`` may hold
    ``HistoryRecord`` entries or raw ``(context, estimate)`` pairs.
    """
    t = len(history)
    if len(rho) != config.T - t:
        raise ValueError(f"draw covers {len(rho)} rounds, expected {config.T - t}")
    num_contexts = oracle.policy_class.num_contexts
    base = past_loss_matrix(history, num_contexts, config.K)
    base += future_loss_matrix(rho, num_contexts, config.K)
    value = oracle.value_arrays(np.arange(num_contexts), base)
    return -value + (config.T - t) * config.K / config.scale


def step(
    t: int,
    history: list[HistoryRecord],
    x_t: Context,
    cost_of: Callable[[ActionIndex], float],
    config: LearnerConfig,
    oracle: ValueOracle,
    context_source: ContextSource,
    rng: np.random.Generator,
) -> tuple[ActionIndex, list[HistoryRecord]]:
    """Play round ``t``: sample, score, play, estimate, append.

    ``cost_of`` reveals just the played action's cost, preserving bandit
    feedback.  The estimator coin uses the realized play distribution of
    this round (the one actually sampled from), so its success probability
    stays at most 1.  Returns the played action and the extended history.
    """
    if t != len(history) + 1:
        raise ValueError(f"round {t} does not follow a history of {len(history)} rounds")
    if t > config.T:
        raise ValueError(f"round {t} beyond horizon {config.T}")
    rho = sample_future(t, config, context_source, rng)
    scores = oracle_scores(history, x_t, rho, config, oracle)
    dist = play_distribution(scores, config)
    action = dist.sample(rng)
    cost = float(cost_of(action))
    coin = draw_estimator_coin(cost, float(dist.probs[action - 1]), config.scale, rng)
    record = HistoryRecord(
        context=x_t,
        played_dist=dist,
        played_action=action,
        observed_cost=cost,
        estimate=build_estimate(action, coin, config.scale),
    )
    return action, history + [record]


class RelaxationLearner:
    """Stateful engine for full runs; one instance per replication.

    Produces exactly the same trace as repeated :func:`step` calls (same
    oracle queries, same rng consumption) but keeps the per-context sum of
    recorded estimates incrementally instead of rebuilding it every round.
    Instances are single-threaded; run replications in parallel with
    independent generators instead of sharing one.
    """

    def __init__(
        self,
        config: LearnerConfig,
        oracle: ValueOracle,
        context_source: ContextSource,
    ) -> None:
        if config.mode == "iid-sampler" and not isinstance(context_source, ContextDistribution):
            raise TypeError("iid-sampler mode needs a ContextDistribution source")
        if config.mode == "transductive":
            seq = np.asarray(context_source, dtype=np.int64)
            if seq.shape != (config.T,):
                raise ValueError(f"transductive context sequence must have length {config.T}")
        self.config = config
        self.oracle = oracle
        self.context_source = context_source
        self.history: list[HistoryRecord] = []
        num_contexts = oracle.policy_class.num_contexts
        self._past = np.zeros((num_contexts, config.K))
        self.min_play_prob = float("inf")
        self.max_coin_prob = 0.0   # clamped Bernoulli parameter actually used
        self.max_raw_coin_prob = 0.0

    @property
    def round(self) -> int:
        """The next round to play (1-based)."""
        return len(self.history) + 1

    def play_round(
        self,
        x_t: Context,
        cost_of: Callable[[ActionIndex], float],
        rng: np.random.Generator,
    ) -> HistoryRecord:
        t = self.round
        if t > self.config.T:
            raise ValueError(f"round {t} beyond horizon {self.config.T}")
        config, oracle = self.config, self.oracle
        rho = sample_future(t, config, self.context_source, rng)
        num_contexts = oracle.policy_class.num_contexts
        base = self._past + future_loss_matrix(rho, num_contexts, config.K)
        scores = _scores_from_matrix(base, x_t, config, oracle)
        dist = play_distribution(scores, config)
        action = dist.sample(rng)
        cost = float(cost_of(action))
        prob = float(dist.probs[action - 1])
        coin = draw_estimator_coin(cost, prob, config.scale, rng)
        raw = cost / (config.scale * prob)
        self.max_raw_coin_prob = max(self.max_raw_coin_prob, raw)
        self.max_coin_prob = max(self.max_coin_prob, min(raw, 1.0))
        self.min_play_prob = min(self.min_play_prob, float(dist.probs.min()))
        record = HistoryRecord(
            context=x_t,
            played_dist=dist,
            played_action=action,
            observed_cost=cost,
            estimate=build_estimate(action, coin, config.scale),
        )
        self.history.append(record)
        if coin:
            self._past[x_t, action - 1] += config.scale
        return record
