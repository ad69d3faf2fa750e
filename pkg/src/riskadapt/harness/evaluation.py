"""Greedy-policy evaluation rollouts with per-episode derived seeds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..distributions import ADAPTIVE, STATIC_CVAR
from ..seeding import derive_seed


@dataclass
class EvalResult:
    mean_return: float
    failure_rate: float
    mean_risk_alpha: float


@dataclass
class RolloutStats:
    """Everything one batch of greedy evaluation rollouts can report."""

    mean_return: float
    failure_rate: float
    mean_risk_alpha: float
    mean_initial_q: float
    max_discounted_return: float
    episode_lengths: list

    @property
    def q_estimation_error(self) -> float:
        return self.mean_initial_q - self.max_discounted_return


def rollout_stats(agent, env, n_episodes: int, seed: int, discount: float,
                  rnd=None, max_steps: int | None = None) -> RolloutStats:
    """Run greedy episodes and collect returns, failures, alphas, Q estimates.

    Episode k reseeds the environment with a seed derived from (seed, k), so
    results are independent of call order.  ``max_steps`` caps episode
    length (on top of any cap the environment enforces itself); episodes cut
    off by either cap count as non-failures.  For the adaptive risk policy,
    ``rnd`` supplies the per-state alpha and is read-only here.
    """
    policy = agent.config.risk_policy
    adaptive = policy.kind == ADAPTIVE
    if adaptive and rnd is None:
        raise ValueError("adaptive risk policy needs the novelty estimator for evaluation")
    returns = []
    discounted = []
    failures = 0
    alphas = []
    initial_qs = []
    lengths = []
    for episode in range(n_episodes):
        obs = env.reset(seed=derive_seed(seed, episode))
        total = 0.0
        total_discounted = 0.0
        gamma_t = 1.0
        steps = 0
        first = True
        while True:
            alpha = None
            if adaptive:
                alpha = float(rnd.risk_level(obs))
                alphas.append(alpha)
            action = agent.select_action(obs, risk_alpha=alpha, explore=False)
            if first:
                q = agent.quantile_values(obs)[action].mean()
                initial_qs.append(float(q))
                first = False
            result = env.step(action)
            total += result.reward
            total_discounted += gamma_t * result.reward
            gamma_t *= discount
            steps += 1
            if result.terminal:
                failures += int(result.failure)
                break
            if env.truncated or (max_steps is not None and steps >= max_steps):
                break
            obs = result.next_observation
        returns.append(total)
        discounted.append(total_discounted)
        lengths.append(steps)
    if adaptive:
        mean_alpha = float(np.mean(alphas)) if alphas else 1.0
    elif policy.kind == STATIC_CVAR:
        mean_alpha = policy.alpha
    else:
        mean_alpha = 1.0
    return RolloutStats(
        mean_return=float(np.mean(returns)),
        failure_rate=failures / n_episodes,
        mean_risk_alpha=mean_alpha,
        mean_initial_q=float(np.mean(initial_qs)),
        max_discounted_return=float(np.max(discounted)),
        episode_lengths=lengths,
    )


def evaluate(agent, env, n_episodes: int, seed: int, rnd=None,
             max_steps: int | None = None) -> EvalResult:
    """Greedy evaluation: (mean_return, failure_rate, mean_risk_alpha)."""
    stats = rollout_stats(agent, env, n_episodes, seed,
                          agent.config.discount, rnd=rnd, max_steps=max_steps)
    return EvalResult(stats.mean_return, stats.failure_rate, stats.mean_risk_alpha)


def q_estimation_error(agent, env, n_episodes: int, discount: float, seed: int = 0,
                       rnd=None, max_steps: int | None = None) -> float:
    """Initial-state optimism: mean estimated Q(s0, a0) minus the maximum
    empirical discounted return over the evaluation episodes.

    The Q estimate is the risk-neutral quantile mean of the action actually
    taken at the initial state; positive values mean overestimation.
    """
    stats = rollout_stats(agent, env, n_episodes, seed, discount,
                          rnd=rnd, max_steps=max_steps)
    return stats.q_estimation_error
