"""State-novelty estimation by random network distillation.

A fixed randomly initialised target network defines arbitrary features of
the observation; a trainable predictor is regressed onto those features over
the states the agent actually visits.  The squared feature error
u(s) = ||target(s) - predictor(s)||^2 shrinks on familiar states and stays
large on unfamiliar ones, giving a per-state novelty signal.  Errors are
normalized by a bias-corrected running average so that familiar states sit
near 1 regardless of feature scale, and a ``RiskMapping`` turns the
normalized signal into a risk level alpha.
"""

from __future__ import annotations

import numpy as np

from .distributions import RiskMapping
from .networks import Adam, Mlp, load_arrays, save_arrays


class RndEstimator:
    """Trainable novelty estimator with a frozen random target network.

    The predictor is two dense layers deeper than the target, so it has the
    capacity to fit the target's features on the visited-state distribution.
    During the first ``warmup_updates`` updates the normalization baseline is
    still settling, so ``normalized_error`` reports exactly 1.
    """

    def __init__(self, obs_dim: int, mapping: RiskMapping | None = None,
                 lr: float = 3e-4, ema_decay: float = 0.99,
                 warmup_updates: int = 100, hidden: int = 64,
                 feature_dim: int = 32, rng=None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.mapping = mapping if mapping is not None else RiskMapping()
        self.ema_decay = float(ema_decay)
        self.warmup_updates = int(warmup_updates)
        self.target = Mlp((obs_dim, hidden, hidden, feature_dim), "relu", rng=rng)
        self.predictor = Mlp((obs_dim, hidden, hidden, hidden, hidden, feature_dim),
                             "relu", rng=rng)
        self.adam = Adam(self.predictor.n_params, lr=lr)
        self.error_ema = 0.0
        self.update_count = 0

    def raw_error(self, obs: np.ndarray) -> float:
        """Squared feature error of a single observation."""
        diff = self.target.forward(obs) - self.predictor.forward(obs)
        return float(diff @ diff)

    def raw_errors(self, obs_batch: np.ndarray) -> np.ndarray:
        """Squared feature errors of a batch, shape (batch,)."""
        diff = self.target.forward(obs_batch) - self.predictor.forward(obs_batch)
        return np.einsum("ij,ij->i", diff, diff)

    def _baseline(self) -> float:
        # Bias-corrected exponential moving average of batch-mean raw errors.
        correction = 1.0 - self.ema_decay ** self.update_count
        return self.error_ema / correction if correction > 0.0 else 0.0

    def normalized_error(self, obs: np.ndarray) -> float:
        """Raw error divided by the running baseline; 1 during warmup."""
        if self.update_count < self.warmup_updates:
            return 1.0
        baseline = self._baseline()
        if baseline <= 0.0:
            return 1.0
        return self.raw_error(obs) / baseline

    def normalized_errors(self, obs_batch: np.ndarray) -> np.ndarray:
        if self.update_count < self.warmup_updates:
            return np.ones(np.asarray(obs_batch).shape[0])
        baseline = self._baseline()
        if baseline <= 0.0:
            return np.ones(np.asarray(obs_batch).shape[0])
        return self.raw_errors(obs_batch) / baseline

    def risk_level(self, obs: np.ndarray) -> float:
        """Risk level alpha for one observation, in [alpha_min, 1]."""
        return self.mapping.risk_level(self.normalized_error(obs))

    def risk_levels(self, obs_batch: np.ndarray) -> np.ndarray:
        return self.mapping.risk_levels(self.normalized_errors(obs_batch))

    def update(self, obs_batch: np.ndarray) -> float:
        """One predictor regression step on a batch; returns the batch loss.

        Loss: mean over the batch of the squared feature error.  Also folds
        the batch-mean raw error into the normalization baseline.
        """
        obs_batch = np.ascontiguousarray(obs_batch, dtype=np.float64)
        if obs_batch.ndim != 2 or obs_batch.shape[0] == 0:
            raise ValueError("update needs a non-empty (batch, obs_dim) array")
        features = self.target.forward(obs_batch)
        pred, cache = self.predictor.forward_cached(obs_batch)
        diff = pred - features
        batch = obs_batch.shape[0]
        loss = float(np.einsum("ij,ij->", diff, diff)) / batch
        grads = self.predictor.backward(cache, (2.0 / batch) * diff)
        self.adam.update(self.predictor.params, grads)
        self.update_count += 1
        self.error_ema = self.ema_decay * self.error_ema + (1.0 - self.ema_decay) * loss
        return loss

    def state_arrays(self) -> dict[str, np.ndarray]:
        state = {"rnd_target": self.target.params, "rnd_predictor": self.predictor.params,
                 "rnd_ema": np.array([self.error_ema]),
                 "rnd_updates": np.array([self.update_count], dtype=np.int64)}
        state.update({f"rnd_{k}": v for k, v in self.adam.state_arrays().items()})
        return state

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        self.target.params[:] = arrays["rnd_target"]
        self.predictor.params[:] = arrays["rnd_predictor"]
        self.error_ema = float(arrays["rnd_ema"][0])
        self.update_count = int(arrays["rnd_updates"][0])
        self.adam.load_state({k[len("rnd_"):]: v for k, v in arrays.items()
                              if k.startswith("rnd_adam_")})

    def save(self, path) -> None:
        meta = {"obs_dim": self.target.in_dim, "mapping_kind": self.mapping.kind,
                "alpha_min": self.mapping.alpha_min, "lr": self.adam.lr,
                "ema_decay": self.ema_decay, "warmup_updates": self.warmup_updates,
                "hidden": self.target.layer_sizes[1],
                "feature_dim": self.target.out_dim}
        save_arrays(path, self.state_arrays(), meta)

    @classmethod
    def load(cls, path) -> "RndEstimator":
        arrays, meta = load_arrays(path)
        est = cls(meta["obs_dim"],
                  RiskMapping(meta["mapping_kind"], meta["alpha_min"]),
                  lr=meta["lr"], ema_decay=meta["ema_decay"],
                  warmup_updates=meta["warmup_updates"], hidden=meta["hidden"],
                  feature_dim=meta["feature_dim"])
        est.load_state(arrays)
        return est
