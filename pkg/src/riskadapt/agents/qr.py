"""Discrete-action quantile-regression Q-agent with pluggable risk policy.

The critic outputs n_quantiles values per action; action selection ranks
actions by the risk-distorted value of those quantile sets, and (by
default) the bootstrap argmax in the TD target is distorted the same way,
so caution shapes both behaviour and learning.  For the adaptive risk
policy the per-state alpha comes from a novelty estimator supplied to the
training loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import _kernels as K
from ..distributions import (
    ADAPTIVE,
    NEUTRAL,
    RiskPolicy,
    STATIC_CVAR,
    distorted_expectations,
    midpoint_fractions,
)
from ..networks import Adam, Mlp, load_arrays, polyak_update, save_arrays
from ..seeding import substream
from .replay import Batch, ReplayBuffer


@dataclass(frozen=True)
class EpsilonSchedule:
    """Linear epsilon decay over the first ``fraction`` of training steps."""

    start: float = 1.0
    end: float = 0.05
    fraction: float = 0.1

    def value(self, step: int, total_steps: int) -> float:
        horizon = max(1.0, self.fraction * total_steps)
        frac = min(1.0, step / horizon)
        return self.start + (self.end - self.start) * frac


@dataclass(frozen=True)
class AgentConfig:
    """Quantile-regression agent hyperparameters (desk-scale defaults).

    replay_capacity and min_steps_before_training default to the small
    desk-scale values; larger long-run values (1e6 / 1e4) are plain config
    choices.
    """

    n_quantiles: int = 32
    hidden_sizes: tuple[int, ...] = (64, 64)
    activation: str = "relu"
    huber_kappa: float = 1.0
    discount: float = 0.99
    learning_rate: float = 3e-4
    batch_size: int = 256
    replay_capacity: int = 100_000
    min_steps_before_training: int = 1_000
    target_smoothing: float = 0.005
    update_every: int = 1
    epsilon: EpsilonSchedule = field(default_factory=EpsilonSchedule)
    risk_policy: RiskPolicy = field(default_factory=RiskPolicy)
    distort_bootstrap: bool = True

    def __post_init__(self):
        if self.n_quantiles < 1:
            raise ValueError("n_quantiles must be >= 1")
        if self.huber_kappa <= 0:
            raise ValueError("huber_kappa must be positive")
        if not 0.0 < self.discount < 1.0:
            raise ValueError("discount must lie in (0, 1)")
        if not 0.0 < self.target_smoothing <= 1.0:
            raise ValueError("target_smoothing must lie in (0, 1]")
        if self.batch_size < 1 or self.replay_capacity < self.batch_size:
            raise ValueError("need replay_capacity >= batch_size >= 1")
        if self.update_every < 1:
            raise ValueError("update_every must be >= 1")
        object.__setattr__(self, "hidden_sizes", tuple(self.hidden_sizes))


class QrAgent:
    """Quantile critic + target critic + Adam, with seeded sub-streams."""

    def __init__(self, obs_dim: int, n_actions: int, config: AgentConfig, seed: int = 0):
        self.obs_dim = int(obs_dim)
        self.n_actions = int(n_actions)
        self.config = config
        self.seed = int(seed)
        layer_sizes = (self.obs_dim, *config.hidden_sizes,
                       self.n_actions * config.n_quantiles)
        self.critic = Mlp(layer_sizes, config.activation,
                          rng=substream(seed, "agent_init"))
        self.target = self.critic.copy()
        self.adam = Adam(self.critic.n_params, lr=config.learning_rate)
        self.taus = midpoint_fractions(config.n_quantiles)
        self.explore_rng = substream(seed, "exploration")
        self.replay_rng = substream(seed, "replay")
        self.current_epsilon = float(config.epsilon.start)
        self.updates = 0

    # ----- value queries -------------------------------------------------

    def quantile_values(self, obs: np.ndarray) -> np.ndarray:
        """Critic quantiles for one observation, shape (n_actions, n)."""
        return self.critic.forward(obs).reshape(self.n_actions, self.config.n_quantiles)

    def action_scores(self, obs: np.ndarray, risk_alpha: float | None = None) -> np.ndarray:
        """Risk-scored value per action under the agent's risk policy."""
        dists = self.quantile_values(obs)
        return distorted_expectations(dists, self._effective_alpha(risk_alpha))

    def _effective_alpha(self, risk_alpha: float | None) -> float:
        policy = self.config.risk_policy
        if policy.kind == NEUTRAL:
            return 1.0
        if policy.kind == STATIC_CVAR:
            return policy.alpha
        if risk_alpha is None:
            raise ValueError("adaptive risk policy needs a per-state risk_alpha")
        return float(risk_alpha)

    def select_action(self, obs: np.ndarray, risk_alpha: float | None = None,
                      risk_alpha_provider=None, explore: bool = False) -> int:
        """Greedy action by distorted value; ties go to the lowest index.

        For the adaptive risk policy pass either the current per-state
        ``risk_alpha`` or a ``risk_alpha_provider`` callable (observation ->
        alpha).  With explore=True an epsilon draw (current_epsilon) may
        replace the greedy choice with a uniform action.
        """
        if explore and self.explore_rng.random() < self.current_epsilon:
            return int(self.explore_rng.integers(self.n_actions))
        if risk_alpha is None and risk_alpha_provider is not None \
                and self.config.risk_policy.kind == ADAPTIVE:
            risk_alpha = float(risk_alpha_provider(obs))
        return int(np.argmax(self.action_scores(obs, risk_alpha)))

    # ----- learning -------------------------------------------------------

    def _bootstrap_alphas(self, batch_size: int, next_alphas) -> np.ndarray:
        policy = self.config.risk_policy
        if not self.config.distort_bootstrap or policy.kind == NEUTRAL:
            return np.ones(batch_size)
        if policy.kind == STATIC_CVAR:
            return np.full(batch_size, policy.alpha)
        if next_alphas is None:
            raise ValueError("adaptive bootstrap needs per-state next_alphas")
        return np.asarray(next_alphas, dtype=np.float64)

    def qr_update(self, batch: Batch, next_alphas=None) -> float:
        """One quantile-regression TD step; returns the scalar loss.

        Target: y_j = r + discount * (1 - terminal) * Z_target(s', a*)_j
        with a* the argmax of the risk-distorted target quantile sets.  The
        loss is the mean quantile Huber loss over all (i, j) pairs; one Adam
        step on the critic, then a Polyak target update.
        """
        n = self.config.n_quantiles
        batch_size = batch.obs.shape[0]
        target_out = self.target.forward(batch.next_obs).reshape(
            batch_size, self.n_actions, n)
        alphas = self._bootstrap_alphas(batch_size, next_alphas)
        scores = distorted_expectations(
            target_out.reshape(batch_size * self.n_actions, n),
            np.repeat(alphas, self.n_actions)).reshape(batch_size, self.n_actions)
        best = np.argmax(scores, axis=1)
        boot = target_out[np.arange(batch_size), best]
        y = batch.rewards[:, None] + self.config.discount \
            * (1.0 - batch.terminals[:, None]) * boot

        out, cache = self.critic.forward_cached(batch.obs)
        idx = batch.actions[:, None] * n + np.arange(n)[None, :]
        pred = np.ascontiguousarray(np.take_along_axis(out, idx, axis=1))
        loss, grad_pred = K.quantile_huber(pred, np.ascontiguousarray(y),
                                           self.taus, self.config.huber_kappa)
        if not np.isfinite(loss):
            raise RuntimeError(f"quantile regression loss is not finite: {loss}")
        grad_out = np.zeros_like(out)
        np.put_along_axis(grad_out, idx, grad_pred, axis=1)
        grads = self.critic.backward(cache, grad_out)
        self.adam.update(self.critic.params, grads)
        polyak_update(self.target.params, self.critic.params,
                      self.config.target_smoothing)
        self.updates += 1
        return loss

    # ----- persistence ----------------------------------------------------

    def save(self, path, extra_meta: dict | None = None) -> None:
        meta = {
            "obs_dim": self.obs_dim, "n_actions": self.n_actions, "seed": self.seed,
            "n_quantiles": self.config.n_quantiles,
            "hidden_sizes": list(self.config.hidden_sizes),
            "activation": self.config.activation,
            "huber_kappa": self.config.huber_kappa,
            "discount": self.config.discount,
            "learning_rate": self.config.learning_rate,
            "batch_size": self.config.batch_size,
            "replay_capacity": self.config.replay_capacity,
            "min_steps_before_training": self.config.min_steps_before_training,
            "target_smoothing": self.config.target_smoothing,
            "update_every": self.config.update_every,
            "epsilon": [self.config.epsilon.start, self.config.epsilon.end,
                        self.config.epsilon.fraction],
            "risk_policy_kind": self.config.risk_policy.kind,
            "risk_alpha": self.config.risk_policy.alpha,
            "mapping_kind": (self.config.risk_policy.mapping.kind
                             if self.config.risk_policy.mapping else None),
            "alpha_min": (self.config.risk_policy.mapping.alpha_min
                          if self.config.risk_policy.mapping else None),
            "distort_bootstrap": self.config.distort_bootstrap,
        }
        if extra_meta:
            meta.update(extra_meta)
        arrays = {"critic": self.critic.params, "target": self.target.params,
                  "updates": np.array([self.updates], dtype=np.int64)}
        arrays.update(self.adam.state_arrays())
        save_arrays(path, arrays, meta)

    @classmethod
    def load(cls, path) -> "QrAgent":
        from ..distributions import RiskMapping
        arrays, meta = load_arrays(path)
        mapping = None
        if meta.get("mapping_kind"):
            mapping = RiskMapping(meta["mapping_kind"], meta["alpha_min"])
        config = AgentConfig(
            n_quantiles=meta["n_quantiles"],
            hidden_sizes=tuple(meta["hidden_sizes"]),
            activation=meta["activation"],
            huber_kappa=meta["huber_kappa"],
            discount=meta["discount"],
            learning_rate=meta["learning_rate"],
            batch_size=meta["batch_size"],
            replay_capacity=meta["replay_capacity"],
            min_steps_before_training=meta["min_steps_before_training"],
            target_smoothing=meta["target_smoothing"],
            update_every=meta["update_every"],
            epsilon=EpsilonSchedule(*meta["epsilon"]),
            risk_policy=RiskPolicy(meta["risk_policy_kind"], meta["risk_alpha"], mapping),
            distort_bootstrap=meta["distort_bootstrap"],
        )
        agent = cls(meta["obs_dim"], meta["n_actions"], config, meta["seed"])
        agent.critic.params[:] = arrays["critic"]
        agent.target.params[:] = arrays["target"]
        agent.updates = int(arrays["updates"][0])
        agent.adam.load_state(arrays)
        return agent


@dataclass
class TrainResult:
    """Training artifacts: the agent, per-step alpha trace, and metrics."""

    agent: QrAgent
    alpha_trace: np.ndarray
    episodes: int
    metrics: list


def train(agent: QrAgent, env, total_steps: int, rnd_estimator=None,
          metrics_sink=None, eval_interval: int = 0, evaluator=None,
          step_callbacks=()) -> TrainResult:
    """Interleave environment steps, replay updates, and novelty updates.

    Per step: (adaptive only) query the novelty estimator for the state's
    risk alpha, act epsilon-greedily, store the transition, then every
    ``update_every`` steps past the warmup run one qr_update (and one
    novelty-estimator update on the same batch's observations).  Episode
    terminations (including failures) trigger a reset and training
    continues.  ``evaluator(agent, rnd_estimator, step)`` runs every
    ``eval_interval`` steps and its record is appended to the metrics (and
    passed to ``metrics_sink`` when given).  ``step_callbacks`` is a
    sequence of (step, callable) executed just before that step's action,
    e.g. to shift environment dynamics mid-training.  Deterministic given
    the agent/env seeds.
    """
    config = agent.config
    adaptive = config.risk_policy.kind == ADAPTIVE
    if adaptive and rnd_estimator is None:
        raise ValueError("adaptive risk policy needs an rnd_estimator")
    replay = ReplayBuffer(config.replay_capacity, agent.obs_dim)
    alpha_trace = np.empty(total_steps)
    metrics: list = []
    callbacks = sorted(((int(s), fn) for s, fn in step_callbacks),
                       key=lambda pair: pair[0])
    cb_pos = 0
    episodes = 0
    obs = None
    for step in range(1, total_steps + 1):
        while cb_pos < len(callbacks) and callbacks[cb_pos][0] == step:
            callbacks[cb_pos][1]()
            cb_pos += 1
        if obs is None:
            obs = env.reset()
            episodes += 1
        agent.current_epsilon = config.epsilon.value(step, total_steps)
        if adaptive:
            alpha = float(rnd_estimator.risk_level(obs))
        elif config.risk_policy.kind == STATIC_CVAR:
            alpha = config.risk_policy.alpha
        else:
            alpha = 1.0
        alpha_trace[step - 1] = alpha
        action = agent.select_action(obs, risk_alpha=alpha if adaptive else None,
                                     explore=True)
        result = env.step(action)
        replay.add(obs, action, result.reward, result.next_observation, result.terminal)
        if result.terminal or env.truncated:
            obs = None
        else:
            obs = result.next_observation
        if (step >= config.min_steps_before_training
                and replay.size >= config.batch_size
                and step % config.update_every == 0):
            batch = replay.sample(config.batch_size, agent.replay_rng)
            next_alphas = None
            if adaptive and config.distort_bootstrap:
                next_alphas = rnd_estimator.risk_levels(batch.next_obs)
            agent.qr_update(batch, next_alphas)
            if rnd_estimator is not None:
                rnd_estimator.update(batch.obs)
        if eval_interval and evaluator is not None and step % eval_interval == 0:
            record = evaluator(agent, rnd_estimator, step)
            metrics.append(record)
            if metrics_sink is not None:
                metrics_sink(record)
    return TrainResult(agent, alpha_trace, episodes, metrics)
