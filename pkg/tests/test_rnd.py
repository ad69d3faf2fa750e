"""Novelty estimator: error arithmetic, normalization, training dynamics."""

import numpy as np
import pytest

from riskadapt.distributions import RiskMapping
from riskadapt.rnd import RndEstimator


def make_est(seed=0, **kwargs):
    kwargs.setdefault("hidden", 16)
    kwargs.setdefault("feature_dim", 8)
    return RndEstimator(3, RiskMapping("exponential"),
                        rng=np.random.default_rng(seed), **kwargs)


def match_predictor_to_target(est):
    """Overwrite the predictor so it computes exactly the target function.

    The predictor is two relu layers deeper; its middle layers are set to
    the identity, which relu preserves on the non-negative activations they
    receive, and the outer layers copy the target's.
    """
    h = est.target.layer_sizes[1]
    tw, tb = est.target._weights, est.target._biases
    pw, pb = est.predictor._weights, est.predictor._biases
    pw[0][:], pb[0][:] = tw[0], tb[0]
    pw[1][:], pb[1][:] = tw[1], tb[1]
    for k in (2, 3):
        pw[k][:] = np.eye(h)
        pb[k][:] = 0.0
    pw[4][:], pb[4][:] = tw[2], tb[2]


# ----------------------------------------------------------------- errors


def test_matched_predictor_has_zero_error():
    est = make_est()
    match_predictor_to_target(est)
    rng = np.random.default_rng(1)
    for _ in range(5):
        assert est.raw_error(rng.normal(size=3)) == 0.0


def test_fresh_estimator_has_positive_error():
    est = make_est()
    assert est.raw_error(np.array([0.3, -0.7, 1.1])) > 0.0


def test_hand_perturbed_feature_gives_squared_error():
    est = make_est()
    match_predictor_to_target(est)
    est.predictor._biases[-1][0] += 0.5
    obs = np.array([0.2, 0.4, -0.1])
    assert est.raw_error(obs) == pytest.approx(0.25)
    est.predictor._biases[-1][1] -= 0.5
    assert est.raw_error(obs) == pytest.approx(0.5)


def test_raw_errors_batch_matches_scalar():
    est = make_est()
    rng = np.random.default_rng(2)
    batch = rng.normal(size=(6, 3))
    errs = est.raw_errors(batch)
    for i in range(6):
        assert errs[i] == pytest.approx(est.raw_error(batch[i]), abs=1e-12)


# -------------------------------------------------------------- normalize


def test_normalized_error_is_one_during_warmup():
    est = make_est(warmup_updates=5)
    obs = np.array([1.0, 2.0, 3.0])
    batch = np.tile(obs, (4, 1))
    for _ in range(4):
        est.update(batch)
        assert est.normalized_error(obs) == 1.0
        np.testing.assert_array_equal(est.normalized_errors(batch), np.ones(4))
    est.update(batch)
    assert est.normalized_error(obs) != 1.0


def test_normalized_error_divides_by_baseline():
    est = make_est(warmup_updates=0)
    est.update_count = 10 ** 6  # decay^count underflows, correction is exact
    obs = np.array([0.5, -0.5, 0.25])
    raw = est.raw_error(obs)
    est.error_ema = raw / 4.0
    assert est.normalized_error(obs) == pytest.approx(4.0, rel=1e-12)


def test_ema_closed_form_under_frozen_predictor():
    # lr 0 freezes the predictor, so every update sees the same loss c and
    # the EMA is exactly c * (1 - decay^k)
    est = make_est(lr=0.0, ema_decay=0.99, warmup_updates=0)
    obs = np.array([[0.3, 0.1, -0.2]])
    c = est.raw_error(obs[0])
    for k in range(1, 20):
        est.update(obs)
        assert est.error_ema == pytest.approx(c * (1.0 - 0.99 ** k), rel=1e-12)
        # bias correction cancels the (1 - decay^k) factor
        assert est.normalized_error(obs[0]) == pytest.approx(1.0, rel=1e-12)


def test_update_returns_batch_mean_loss():
    est = make_est()
    rng = np.random.default_rng(3)
    batch = rng.normal(size=(5, 3))
    want = est.raw_errors(batch).mean()
    assert est.update(batch) == pytest.approx(want, rel=1e-12)


def test_update_rejects_empty_or_flat_batch():
    est = make_est()
    with pytest.raises(ValueError):
        est.update(np.empty((0, 3)))
    with pytest.raises(ValueError):
        est.update(np.array([1.0, 2.0, 3.0]))


# --------------------------------------------------------------- training


def test_predictor_learns_fixed_observations():
    est = make_est(lr=1e-3)
    rng = np.random.default_rng(4)
    batch = rng.uniform(-1.0, 1.0, size=(32, 3))
    initial = est.raw_errors(batch).mean()
    for _ in range(2000):
        est.update(batch)
    final = est.raw_errors(batch).mean()
    assert final < 0.1 * initial


def test_trained_estimator_flags_unseen_region():
    rng = np.random.default_rng(5)
    est = RndEstimator(3, RiskMapping("exponential"), lr=1e-3,
                       rng=np.random.default_rng(5))
    seen = rng.uniform(0.0, 0.4, size=(2000, 3))
    for i in range(0, 2000, 64):
        est.update(seen[i:i + 64])
    held = rng.uniform(0.0, 0.4, size=(200, 3))
    unseen = rng.uniform(0.6, 1.0, size=(200, 3))
    assert est.raw_errors(unseen).mean() >= 2.0 * est.raw_errors(held).mean()


# ------------------------------------------------------------- risk level


def test_risk_level_composes_mapping_with_normalized_error():
    est = make_est(warmup_updates=0)
    est.update_count = 10 ** 6
    obs = np.array([0.1, 0.2, 0.3])
    est.error_ema = est.raw_error(obs)  # normalized error 1
    assert est.risk_level(obs) == pytest.approx(np.exp(-1.0))


def test_warmup_risk_level_reflects_unit_novelty():
    est = make_est(warmup_updates=100)
    obs = np.array([3.0, -2.0, 1.0])
    assert est.normalized_error(obs) == 1.0
    assert est.risk_level(obs) == pytest.approx(np.exp(-1.0))


def test_risk_levels_always_within_mapping_range():
    for kind in ("exponential", "linear", "logarithmic"):
        est = RndEstimator(3, RiskMapping(kind, alpha_min=0.02), hidden=16,
                           feature_dim=8, warmup_updates=0,
                           rng=np.random.default_rng(6))
        rng = np.random.default_rng(7)
        for _ in range(10):
            est.update(rng.normal(size=(8, 3)))
        levels = est.risk_levels(rng.normal(size=(50, 3)) * 5.0)
        assert np.all(levels >= 0.02) and np.all(levels <= 1.0)


# ------------------------------------------------------------ persistence


def test_save_load_round_trip(tmp_path):
    est = make_est(lr=1e-3, ema_decay=0.95, warmup_updates=3)
    rng = np.random.default_rng(8)
    for _ in range(10):
        est.update(rng.normal(size=(16, 3)))
    path = tmp_path / "rnd.npz"
    est.save(path)
    loaded = RndEstimator.load(path)
    probe = rng.normal(size=(20, 3))
    np.testing.assert_array_equal(loaded.raw_errors(probe), est.raw_errors(probe))
    np.testing.assert_array_equal(loaded.risk_levels(probe), est.risk_levels(probe))
    assert loaded.update_count == est.update_count
    assert loaded.mapping == est.mapping
    # training continues identically after reload
    batch = rng.normal(size=(16, 3))
    assert loaded.update(batch) == pytest.approx(est.update(batch), abs=1e-15)
