"""Independent verification oracles for the learner's moving parts.

Everything here deliberately re-derives quantities by brute force --
simplex grids, polytope vertex enumeration, Monte Carlo -- so the fast
closed forms elsewhere in the package are checked against a second route,
not against themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .core import ActionDistribution, EstimatedCost, build_estimate, draw_estimator_coin, sample_index
from .environments import ContextDistribution
from .learner import (
    LearnerConfig,
    OracleScores,
    inner_sup_values,
    oracle_scores,
    play_distribution,
    relaxation_value,
    sample_future,
)
from .policies import PolicyClass, ValueOracle, random_policy_class


def simplex_grid(num_actions: int, mesh: float) -> np.ndarray:
    """All probability vectors with coordinates on a ``mesh``-spaced grid.

    Supports 2 or 3 actions; the K=3 grid at mesh 1e-3 already has ~5e5
    points, so anything larger is refused.
    """
    n = round(1.0 / mesh)
    if abs(n * mesh - 1.0) > 1e-9:
        raise ValueError(f"mesh {mesh} must divide 1 evenly")
    if num_actions == 2:
        i = np.arange(n + 1)
        grid = np.column_stack([i, n - i]).astype(float) / n
    elif num_actions == 3:
        rows = []
        for i in range(n + 1):
            j = np.arange(n - i + 1)
            block = np.empty((j.size, 3))
            block[:, 0] = i
            block[:, 1] = j
            block[:, 2] = n - i - j
            rows.append(block)
        grid = np.concatenate(rows) / n
    else:
        raise ValueError(f"grid search supports 2 or 3 actions, got {num_actions}")
    return grid


def brute_force_minimax(
    scores: OracleScores, scale: float, mesh: float
) -> tuple[ActionDistribution, float]:
    """Grid-search the play distribution minimizing the adversary's value.

    Evaluates the closed-form best response on every grid point of the
    simplex and returns the minimizing point and its value.  This is the
    reference the water-filling minimizer is compared against.
    """
    grid = simplex_grid(scores.num_actions, mesh)
    values = inner_sup_values(grid, scores, scale)
    best = int(np.argmin(values))
    return ActionDistribution(grid[best]), float(values[best])


def sup_by_vertex_enumeration(probs, scores: OracleScores, scale: float) -> float:
    """Adversary's best response by enumerating polytope vertices.

    The feasible set is the simplex over {zero vector, K spiked vectors}
    with every spike's probability capped at 1/scale.  For K <= scale its
    vertices are exactly the 2^K cap-or-zero patterns on the spikes (the
    zero vector takes the remaining mass), so the supremum of a linear
    objective is the maximum over those patterns.
    """
    probs = np.asarray(probs, dtype=float)
    k = probs.size
    if k != scores.num_actions:
        raise ValueError("probs and scores disagree on K")
    if scale < k:
        raise ValueError(f"scale must be >= K, got scale={scale}, K={k}")
    z = scale * probs - scores.minima[1:]
    z0 = -scores.minima[0]
    best = -math.inf
    for pattern in range(2**k):
        members = [i for i in range(k) if pattern >> i & 1]
        p0 = 1.0 - len(members) / scale
        value = sum(z[i] for i in members) / scale + p0 * z0
        best = max(best, value)
    return best


@dataclass
class UnbiasednessResult:
    """Monte Carlo means of the estimate vs. the true costs, in analytic sigmas."""

    costs: np.ndarray
    means: np.ndarray
    sigmas: np.ndarray  # per-coordinate |mean - cost| / analytic stderr
    draws: int

    @property
    def worst_sigma(self) -> float:
        return float(self.sigmas.max())

    def passed(self, tol_sigmas: float = 3.0) -> bool:
        return bool(self.worst_sigma <= tol_sigmas)


def unbiasedness_check(
    num_actions: int,
    scale: float,
    draws: int,
    rng: np.random.Generator,
    costs: np.ndarray | None = None,
) -> UnbiasednessResult:
    """Empirically verify the estimate averages to the true cost vector.

    Draws a play distribution respecting the 1/scale floor and a cost
    vector (unless given), then repeatedly samples (action, coin) through
    the real code path and compares coordinate means against the analytic
    standard error ``sqrt((scale*c - c^2)/n)``.
    """
    raw = rng.random(num_actions)
    probs = (1.0 - num_actions / scale) * (raw / raw.sum()) + 1.0 / scale
    if costs is None:
        costs = rng.random(num_actions)
    costs = np.asarray(costs, dtype=float)
    sums = np.zeros(num_actions)
    for _ in range(draws):
        action = sample_index(probs, rng) + 1
        coin = draw_estimator_coin(float(costs[action - 1]), float(probs[action - 1]), scale, rng)
        estimate = build_estimate(action, coin, scale)
        if estimate.coordinate:
            sums[estimate.coordinate - 1] += estimate.scale
    means = sums / draws
    stderr = np.sqrt(np.maximum(scale * costs - costs**2, 0.0) / draws)
    with np.errstate(divide="ignore", invalid="ignore"):
        sigmas = np.where(stderr > 0.0, np.abs(means - costs) / stderr, np.abs(means - costs))
    return UnbiasednessResult(costs=costs, means=means, sigmas=sigmas, draws=draws)


class PerturbationCheck(NamedTuple):
    empirical: float
    bound: float
    stderr: float


def rademacher_bound_check(
    horizon: int,
    moment_bound: float,
    num_policies: int,
    scale: float,
    num_actions: int,
    num_contexts: int,
    samples: int,
    rng: np.random.Generator,
    z_prob: float | None = None,
) -> PerturbationCheck:
    """Monte Carlo estimate of the perturbation supremum vs. its analytic cap.

    Estimates ``E[sup over policies of sum_t sign_t(policy(x_t)) * Z_t]``
    for a random table class on a fixed random context sequence, where each
    ``Z_t`` is ``scale`` with probability ``z_prob`` (default
    ``num_actions/scale``) and 0 otherwise.  Requires the second moment
    ``scale**2 * z_prob`` to stay within ``moment_bound``; the returned
    analytic cap is ``sqrt(2 * horizon * moment_bound * ln(num_policies))``.
    """
    if z_prob is None:
        z_prob = num_actions / scale
    if not 0.0 <= z_prob <= 1.0:
        raise ValueError(f"z_prob must lie in [0, 1], got {z_prob}")
    if scale**2 * z_prob > moment_bound + 1e-9:
        raise ValueError(
            f"second moment {scale**2 * z_prob} exceeds the stated bound {moment_bound}"
        )
    policy_class = random_policy_class(num_policies, num_contexts, num_actions, rng)
    xs = rng.integers(0, num_contexts, size=horizon)
    actions0 = policy_class.table[:, xs] - 1  # (N, T) 0-based actions per policy
    cols = np.arange(horizon)

    sups = np.empty(samples)
    block = max(1, min(samples, int(5e6 // (horizon * num_actions)) or 1))
    done = 0
    while done < samples:
        b = min(block, samples - done)
        signs = rng.integers(0, 2, size=(b, horizon, num_actions)) * 2 - 1
        z = np.where(rng.random((b, horizon)) < z_prob, scale, 0.0)
        per_policy = np.empty((b, num_policies))
        for p in range(num_policies):
            per_policy[:, p] = (signs[:, cols, actions0[p]] * z).sum(axis=1)
        sups[done : done + b] = per_policy.max(axis=1)
        done += b
    empirical = float(sups.mean())
    stderr = float(sups.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    bound = math.sqrt(2.0 * horizon * moment_bound * math.log(num_policies))
    return PerturbationCheck(empirical=empirical, bound=bound, stderr=stderr)


@dataclass
class AdmissibilityResult:
    """Both sides of the one-step potential-domination inequality."""

    lhs: float
    rhs: float
    lhs_stderr: float
    rhs_stderr: float
    draws: int
    round_index: int

    @property
    def combined_stderr(self) -> float:
        return math.hypot(self.lhs_stderr, self.rhs_stderr)

    @property
    def margin(self) -> float:
        """How far below the right side the left side sits (positive = good)."""
        return self.rhs - self.lhs

    def passed(self, tol_sigmas: float = 3.0) -> bool:
        return bool(self.lhs <= self.rhs + tol_sigmas * self.combined_stderr)


def cost_grid(num_actions: int, mesh: float = 0.25) -> np.ndarray:
    """All cost vectors with coordinates on a mesh over [0, 1] (corners included)."""
    levels = np.round(np.arange(0.0, 1.0 + mesh / 2, mesh), 12)
    grids = np.meshgrid(*([levels] * num_actions), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def admissibility_check(
    policy_class: PolicyClass,
    config: LearnerConfig,
    context_dist: ContextDistribution,
    history: Sequence,
    draws: int,
    rng: np.random.Generator,
    mesh: float = 0.25,
) -> AdmissibilityResult:
    """One-step check that playing one round cannot raise the potential.

    For the round following ``history``, Monte Carlo estimates of

    * LHS: expectation over the current context of the worst grid cost
      vector's value of (expected observed cost + next potential), with the
      play distribution, the estimate coin and both potentials realized
      exactly as the learner realizes them, and
    * RHS: the current potential

    must satisfy ``LHS <= RHS`` up to Monte Carlo noise.  The cost vector
    ranges over a finite grid and expectations are sampled, so this is a
    necessary-condition test, not a proof.
    """
    t = len(history) + 1
    if t > config.T:
        raise ValueError("history already spans the whole horizon")
    oracle = ValueOracle(policy_class)
    pairs = [
        (rec.context, rec.estimate) if hasattr(rec, "estimate") else tuple(rec) for rec in history
    ]
    k, scale = config.K, config.scale
    num_contexts = context_dist.num_contexts
    grid = cost_grid(k, mesh)

    rhs_samples = np.empty(draws)
    lhs_values = np.empty((draws, num_contexts, grid.shape[0]))
    spikes = [EstimatedCost(scale, a) for a in range(k + 1)]  # index 0 = zero estimate
    for j in range(draws):
        rho_prev = sample_future(t - 1, config, context_dist, rng)
        rhs_samples[j] = relaxation_value(pairs, rho_prev, config, oracle)

        rho_play = sample_future(t, config, context_dist, rng)
        rho_next = sample_future(t, config, context_dist, rng)
        for x in range(num_contexts):
            scores = oracle_scores(pairs, x, rho_play, config, oracle)
            dist = play_distribution(scores, config)
            after = [
                relaxation_value(pairs + [(x, spikes[a])], rho_next, config, oracle)
                for a in range(k + 1)
            ]
            r_zero = after[0]
            r_spike = np.asarray(after[1:])
            # E over (action, coin) given cost vector c collapses to
            # q.c + (c/scale).(r_spike - r_zero) + r_zero: the importance
            # weighting cancels the play probabilities exactly.
            lhs_values[j, x] = grid @ dist.probs + grid @ (r_spike - r_zero) / scale + r_zero

    mean_by_cost = lhs_values.mean(axis=0)               # (U, G)
    worst = mean_by_cost.argmax(axis=1)                  # adversary's grid pick per context
    picked = lhs_values[:, np.arange(num_contexts), worst]  # (draws, U)
    lhs_draws = picked @ context_dist.probs
    lhs = float(lhs_draws.mean())
    lhs_stderr = float(lhs_draws.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    rhs = float(rhs_samples.mean())
    rhs_stderr = float(rhs_samples.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    return AdmissibilityResult(
        lhs=lhs,
        rhs=rhs,
        lhs_stderr=lhs_stderr,
        rhs_stderr=rhs_stderr,
        draws=draws,
        round_index=t,
    )
