"""Acceptance gate: one test per shipped guarantee, at the stated tolerances.

The corridor training runs behind criteria 5, 7, and 8 share one
module-scoped fixture; everything else is self-contained.  All workloads
are seeded, so every verdict here is reproducible bit for bit.
"""

import time

import numpy as np
import pytest

from oracles import (
    chain_closed_form_values,
    discounted_chain_values,
    quantile_huber_reference,
)
from riskadapt._kernels import quantile_huber
from riskadapt.agents.tabular import (
    TabularMdp,
    bellman_residual,
    distributional_policy_evaluation,
    extract_grid_mdp,
    greedy_policy,
    value_iteration,
)
from riskadapt.distributions import (
    RiskMapping,
    distorted_expectations,
    midpoint_fractions,
)
from riskadapt.harness.config import ExperimentConfig
from riskadapt.harness.experiments import run_experiment
from riskadapt.harness.sweep import run_default_study, study_grid_config
from riskadapt.rnd import RndEstimator

ENV = {"kind": "corridor", "variation_fraction": 0.2, "goal_zone": 0.1}
AGENT = {"n_quantiles": 32, "hidden_sizes": [32, 32], "batch_size": 64,
         "update_every": 2, "learning_rate": 1e-3, "discount": 0.95}
SEEDS = [0, 1, 2, 3, 4]


def test_criterion_1_distortion_matches_bruteforce_integrator():
    # Oracle: evaluate the step inverse-CDF at each distorted midpoint
    # fraction with integer bin indices (2i+1)*k // 40, which is exact for
    # every alpha = k/20 on the grid; the library goes through floats.
    start = time.monotonic()
    rng = np.random.default_rng(20260816)
    worst = 0.0
    for n in range(1, 65):
        values = rng.normal(size=(1000, n))
        svals = np.sort(values, axis=1)
        odd = 2 * np.arange(n) + 1
        for k in range(21):
            got = distorted_expectations(values, k / 20.0)
            idx = np.minimum(odd * k // 40, n - 1)
            want = svals[:, idx].mean(axis=1)
            worst = max(worst, float(np.max(np.abs(got - want))))
    elapsed = time.monotonic() - start
    assert worst <= 1e-12, f"worst |diff| {worst}"
    assert elapsed < 30.0, f"took {elapsed:.1f}s"


def test_criterion_2_analytic_gradients_match_finite_differences():
    start = time.monotonic()
    rng = np.random.default_rng(7)
    h = 1e-5
    checked = 0
    worst = 0.0

    for n in (1, 8, 32):
        taus = midpoint_fractions(n)
        for _ in range(20):
            pred = rng.normal(size=(2, n))
            target = rng.normal(size=(2, n))
            _, grad = quantile_huber(pred, target, taus, 1.0)
            fd = np.zeros(pred.size)
            flat = pred.ravel()
            for j in range(flat.size):
                saved = flat[j]
                flat[j] = saved + h
                up = quantile_huber_reference(pred, target, taus, 1.0)
                flat[j] = saved - h
                down = quantile_huber_reference(pred, target, taus, 1.0)
                flat[j] = saved
                fd[j] = (up - down) / (2.0 * h)
            rel = np.linalg.norm(grad.ravel() - fd) / max(np.linalg.norm(fd), 1e-12)
            worst = max(worst, rel)
            checked += 1

    def kink_margin(mlp, x):
        # smallest |preactivation| of the hidden relu layers on x
        a = x
        margin = np.inf
        for k, (w, b) in enumerate(zip(mlp._weights, mlp._biases)):
            z = a @ w + b
            if k == len(mlp._weights) - 1:
                break
            margin = min(margin, float(np.min(np.abs(z))))
            a = np.maximum(z, 0.0)
        return margin

    for i in range(45):
        est = RndEstimator(3, RiskMapping("exponential"), hidden=8,
                           feature_dim=4, rng=np.random.default_rng(100 + i))
        data_rng = np.random.default_rng(500 + i)
        x = data_rng.normal(size=(3, 3))
        # central differences are invalid across a relu kink; redraw inputs
        # that leave any predictor preactivation within the step's reach
        while kink_margin(est.predictor, x) < 1e-3:
            x = data_rng.normal(size=(3, 3))
        captured = []
        est.adam.update = lambda params, grads: captured.append(np.array(grads))
        est.update(x)
        grad = captured[0]
        params = est.predictor.params
        fd = np.zeros(params.size)
        for j in range(params.size):
            saved = params[j]
            params[j] = saved + h
            up = float(est.raw_errors(x).mean())
            params[j] = saved - h
            down = float(est.raw_errors(x).mean())
            params[j] = saved
            fd[j] = (up - down) / (2.0 * h)
        rel = np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12)
        worst = max(worst, rel)
        checked += 1

    elapsed = time.monotonic() - start
    assert checked >= 100
    assert worst <= 1e-4, f"worst relative error {worst}"
    assert elapsed < 60.0, f"took {elapsed:.1f}s"


def chain_mdp(length):
    outcomes = []
    for s in range(length):
        nxt = s + 1
        row = [(1.0, -1, 1.0)] if nxt == length else [(1.0, nxt, 0.0)]
        outcomes.append([row])
    return TabularMdp(length, 1, outcomes)


def test_criterion_3_tabular_solvers_are_exact():
    grid = extract_grid_mdp(study_grid_config())
    q = value_iteration(grid.mdp, 0.9, 1e-10)
    assert bellman_residual(grid.mdp, q, 0.9) <= 1e-10

    # independent residual: plain-loop one-step optimality backup
    mdp = grid.mdp
    v = q.max(axis=1)
    worst = 0.0
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            total = 0.0
            for p, nxt, r in zip(mdp.probs[s, a], mdp.next_states[s, a],
                                 mdp.rewards[s, a]):
                total += p * (r + (0.9 * v[nxt] if nxt >= 0 else 0.0))
            worst = max(worst, abs(total - q[s, a]))
    assert worst <= 1e-10

    gamma = 0.95
    q_chain = value_iteration(chain_mdp(8), gamma, 1e-12)
    want = chain_closed_form_values(8, gamma)[::-1]
    assert np.array_equal(q_chain[:, 0], want)
    np.testing.assert_allclose(want, discounted_chain_values(8, gamma)[::-1],
                               rtol=0.0, atol=1e-12)

    policy = greedy_policy(q)
    table = distributional_policy_evaluation(grid.mdp, policy, n_quantiles=50,
                                             discount=0.9, tolerance=1e-6)
    assert np.max(np.abs(table.means() - q)) <= 1e-4


def test_criterion_4_risk_sweep_shows_wind_dependent_optimum():
    start = time.monotonic()
    grid, q, table, sweep = run_default_study()
    base = sweep.row_index("light-south")
    assert np.all(sweep.failure_rates[base] <= 0.02)
    base_spread = sweep.spread(base)
    for name in sweep.setting_names:
        if name != "light-south":
            assert sweep.spread(sweep.row_index(name)) > base_spread, name
    best = {sweep.best_alpha(i) for i in range(len(sweep.setting_names))}
    assert len(best) >= 2, f"best alphas {sorted(best)}"
    elapsed = time.monotonic() - start
    assert elapsed < 300.0, f"took {elapsed:.1f}s"


@pytest.fixture(scope="module")
def corridor_study(tmp_path_factory):
    root = tmp_path_factory.mktemp("corridor")
    outputs = {}
    seconds = {}

    def launch(tag, risk, steps=100_000, shift=None):
        data = {"name": tag, "environment": ENV, "agent": AGENT, "risk": risk,
                "seeds": SEEDS, "total_steps": steps, "eval_interval": 20_000,
                "eval_episodes": 100, "output_dir": str(root / tag)}
        if shift:
            data["shift"] = shift
            data["eval_interval"] = 10_000
        begin = time.monotonic()
        outputs[tag] = run_experiment(ExperimentConfig.from_dict(data))
        seconds[tag] = time.monotonic() - begin

    launch("neutral", {"policy": "neutral"})
    launch("cvar25", {"policy": "static-cvar", "alpha": 0.25})
    launch("cvar50", {"policy": "static-cvar", "alpha": 0.5})
    launch("cvar75", {"policy": "static-cvar", "alpha": 0.75})
    launch("ara", {"policy": "adaptive", "mapping": "exponential"})
    launch("linear", {"policy": "adaptive", "mapping": "linear"})
    launch("shift", {"policy": "adaptive", "mapping": "exponential"},
           steps=60_000, shift={"at_step": 30_000, "variation_fraction": 0.4})
    return outputs, seconds


def test_criterion_5_adaptive_risk_beats_static_cvar_frontier(corridor_study):
    outputs, seconds = corridor_study
    statics = ("cvar25", "cvar50", "cvar75")
    ara = [outputs["ara"].run_for(s).final_record for s in SEEDS]
    ara_fail = float(np.mean([r.failure_rate for r in ara]))
    static_fail = float(np.mean([outputs[k].run_for(s).final_record.failure_rate
                                 for k in statics for s in SEEDS]))
    assert ara_fail <= static_fail, f"{ara_fail} > {static_fail}"

    ara_return = float(np.mean([r.mean_return for r in ara]))
    best_static = max(float(np.mean([outputs[k].run_for(s).final_record.mean_return
                                     for s in SEEDS])) for k in statics)
    assert ara_return >= 0.9 * best_static, f"{ara_return} < 0.9*{best_static}"

    training = sum(seconds[tag] for tag in ("neutral",) + statics + ("ara",))
    assert training < 3600.0, f"took {training:.0f}s"


def test_criterion_6_rnd_error_separates_unvisited_region():
    start = time.monotonic()
    for seed in (0, 1, 2):
        rng = np.random.default_rng(seed + 1000)
        est = RndEstimator(4, RiskMapping("exponential"), lr=1e-3, rng=rng)
        train_a = rng.uniform(0.0, 0.4, size=(3000, 4))
        held_a = rng.uniform(0.0, 0.4, size=(500, 4))
        region_b = rng.uniform(0.6, 1.0, size=(500, 4))
        for i in range(0, train_a.shape[0], 64):
            est.update(train_a[i:i + 64])
        ratio = est.raw_errors(region_b).mean() / est.raw_errors(held_a).mean()
        assert ratio >= 2.0, f"seed {seed}: ratio {ratio:.2f}"
    elapsed = time.monotonic() - start
    assert elapsed < 120.0, f"took {elapsed:.1f}s"


def test_criterion_7_risk_level_drops_after_dynamics_shift(corridor_study):
    outputs, _ = corridor_study
    at = 30_000
    drops = 0
    for seed in SEEDS:
        trace = outputs["shift"].run_for(seed).alpha_trace
        before = float(trace[at - 1000:at].mean())
        after = float(trace[at:at + 1000].mean())
        drops += after < before
    assert drops >= 4, f"alpha dropped on only {drops}/5 seeds"


def test_criterion_8_exponential_mapping_dominates_linear(corridor_study):
    outputs, _ = corridor_study
    wins = sum(outputs["ara"].run_for(s).final_record.mean_return
               >= outputs["linear"].run_for(s).final_record.mean_return
               for s in SEEDS)
    assert wins >= 4, f"exponential won on only {wins}/5 seeds"

    for tag in ("ara", "linear", "shift"):
        for run in outputs[tag].runs:
            assert np.all(run.alpha_trace >= 0.01)
            assert np.all(run.alpha_trace <= 1.0)
    u = np.concatenate([np.linspace(0.0, 50.0, 2001),
                        np.random.default_rng(3).uniform(0.0, 1000.0, 2000)])
    for kind in ("exponential", "linear", "logarithmic"):
        mapping = RiskMapping(kind)
        alphas = mapping.risk_levels(u)
        assert np.all(alphas >= mapping.alpha_min), kind
        assert np.all(alphas <= 1.0), kind


def test_criterion_9_same_seed_runs_write_identical_csv_bytes(tmp_path):
    def launch(where):
        data = {"name": "determinism", "environment": ENV, "agent": AGENT,
                "risk": {"policy": "adaptive", "mapping": "exponential"},
                "seeds": [0], "total_steps": 10_000, "eval_interval": 2_500,
                "eval_episodes": 20, "output_dir": str(tmp_path / where)}
        return run_experiment(ExperimentConfig.from_dict(data))

    first = launch("first")
    second = launch("second")
    for name in ("metrics.csv", "metrics_seed0.csv"):
        assert ((first.output_dir / name).read_bytes()
                == (second.output_dir / name).read_bytes()), name
