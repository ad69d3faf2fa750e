"""Manual-backprop network: pinned forward values, gradient oracles, Adam."""

import numpy as np
import pytest

from oracles import adam_step_reference, finite_difference_gradient
from riskadapt.networks import Adam, Mlp, load_arrays, polyak_update, save_arrays


def flat_params(weights_and_biases):
    """Pack [(w, b), ...] into the Mlp flat layout (row-major w, then b)."""
    return np.concatenate([np.concatenate([np.asarray(w, dtype=np.float64).ravel(),
                                           np.asarray(b, dtype=np.float64).ravel()])
                           for w, b in weights_and_biases])


# ---------------------------------------------------------------- forward


def test_zero_weights_give_zero_output():
    net = Mlp((3, 4, 2), "relu", params=np.zeros(3 * 4 + 4 + 4 * 2 + 2))
    np.testing.assert_array_equal(net.forward(np.array([1.0, -2.0, 3.0])), [0.0, 0.0])


def test_identity_layer_passes_input_through():
    net = Mlp((3, 3), params=flat_params([(np.eye(3), np.zeros(3))]))
    x = np.array([0.5, -1.5, 2.0])
    np.testing.assert_array_equal(net.forward(x), x)


def test_hand_computed_2_2_1_relu():
    w1 = np.array([[1.0, -1.0], [2.0, 0.5]])
    b1 = np.array([0.0, 1.0])
    w2 = np.array([[1.0], [-2.0]])
    b2 = np.array([0.5])
    net = Mlp((2, 2, 1), "relu", params=flat_params([(w1, b1), (w2, b2)]))
    x = np.array([1.0, 2.0])
    # hidden pre-act: [1*1+2*2, -1*1+0.5*2+1] = [5, 1]; relu keeps both
    # output: 5*1 + 1*(-2) + 0.5 = 3.5
    assert net.forward(x)[0] == pytest.approx(3.5)
    # negative pre-activation is clipped
    x2 = np.array([-1.0, 0.0])
    # hidden pre-act: [-1, 2]; relu -> [0, 2]; output: 0 - 4 + 0.5 = -3.5
    assert net.forward(x2)[0] == pytest.approx(-3.5)


def test_forward_batch_matches_single():
    rng = np.random.default_rng(0)
    net = Mlp((4, 8, 3), "tanh", rng=rng)
    xs = rng.normal(size=(6, 4))
    batch_out = net.forward(xs)
    for i in range(6):
        np.testing.assert_allclose(batch_out[i], net.forward(xs[i]), atol=1e-15)


def test_constructor_validation():
    with pytest.raises(ValueError):
        Mlp((3,))
    with pytest.raises(ValueError):
        Mlp((3, 0, 2))
    with pytest.raises(ValueError):
        Mlp((3, 2), activation="sigmoid")
    with pytest.raises(ValueError):
        Mlp((3, 2), params=np.zeros(5))


# --------------------------------------------------------------- backward


def test_zero_output_gradient_gives_zero_param_gradient():
    rng = np.random.default_rng(1)
    net = Mlp((3, 5, 2), rng=rng)
    x = rng.normal(size=(4, 3))
    _, cache = net.forward_cached(x)
    grads = net.backward(cache, np.zeros((4, 2)))
    np.testing.assert_array_equal(grads, np.zeros(net.n_params))


def test_single_linear_layer_gradient_is_outer_product():
    net = Mlp((3, 2), params=np.zeros(8))
    x = np.array([[1.0, 2.0, 3.0]])
    _, cache = net.forward_cached(x)
    gout = np.array([[0.5, -1.0]])
    grads = net.backward(cache, gout)
    # grad w[i, j] = x[i] * gout[j], grad b[j] = gout[j]
    want_w = np.outer(x[0], gout[0])
    np.testing.assert_allclose(grads[:6].reshape(3, 2), want_w)
    np.testing.assert_allclose(grads[6:], gout[0])


@pytest.mark.parametrize("activation", ["relu", "tanh"])
def test_gradient_matches_finite_differences(activation):
    rng = np.random.default_rng(2)
    net = Mlp((3, 8, 8, 2), activation, rng=rng)
    x = rng.normal(size=(5, 3))
    gout = rng.normal(size=(5, 2))

    def loss_of(theta):
        probe = Mlp(net.layer_sizes, activation, params=theta)
        return float(np.sum(probe.forward(x) * gout))

    _, cache = net.forward_cached(x)
    grads = net.backward(cache, gout)
    fd = finite_difference_gradient(loss_of, net.params)
    denom = np.maximum(np.abs(fd), 1e-8)
    assert np.max(np.abs(grads - fd) / denom) <= 1e-4


def test_copy_is_detached():
    net = Mlp((2, 3, 1), rng=np.random.default_rng(3))
    twin = net.copy()
    net.params[:] = 0.0
    assert not np.array_equal(twin.params, net.params)


# ------------------------------------------------------------ persistence


def test_save_load_round_trip(tmp_path):
    net = Mlp((4, 6, 3), "tanh", rng=np.random.default_rng(4))
    path = tmp_path / "net.npz"
    net.save(path, meta={"note": "round-trip"})
    loaded = Mlp.load(path)
    assert loaded.layer_sizes == net.layer_sizes
    assert loaded.activation == net.activation
    np.testing.assert_array_equal(loaded.params, net.params)


def test_save_arrays_preserves_meta(tmp_path):
    path = tmp_path / "blob.npz"
    save_arrays(path, {"a": np.arange(3.0)}, {"k": 2, "name": "x"})
    arrays, meta = load_arrays(path)
    np.testing.assert_array_equal(arrays["a"], np.arange(3.0))
    assert meta["k"] == 2 and meta["name"] == "x"


# ------------------------------------------------------------------- Adam


def test_adam_zero_gradient_leaves_params_unchanged():
    opt = Adam(5, lr=0.1)
    params = np.arange(5.0)
    before = params.copy()
    opt.update(params, np.zeros(5))
    np.testing.assert_array_equal(params, before)
    assert opt.step_count == 1


def test_adam_first_step_closed_form():
    # with m = (1-b1)g and v = (1-b2)g^2, bias correction makes the first
    # step exactly lr * sign(g) / (1 + eps/|g_hat|) ~= lr * sign(g)
    opt = Adam(3, lr=0.01, eps=1e-8)
    params = np.zeros(3)
    g = np.array([2.0, -0.5, 1e3])
    opt.update(params, g)
    np.testing.assert_allclose(params, -0.01 * np.sign(g), rtol=1e-6)


def test_adam_matches_reference_over_many_steps():
    rng = np.random.default_rng(5)
    opt = Adam(7, lr=3e-3)
    params = rng.normal(size=7)
    ref_p = params.copy()
    ref_m = np.zeros(7)
    ref_v = np.zeros(7)
    for t in range(1, 51):
        g = rng.normal(size=7)
        opt.update(params, g)
        ref_p, ref_m, ref_v = adam_step_reference(
            ref_p, g, ref_m, ref_v, t, lr=3e-3, beta1=0.9, beta2=0.999, eps=1e-8)
    np.testing.assert_allclose(params, ref_p, atol=1e-12)
    assert opt.step_count == 50


def test_adam_rejects_nonfinite_gradients():
    opt = Adam(2)
    params = np.zeros(2)
    with pytest.raises(ValueError):
        opt.update(params, np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        opt.update(params, np.array([np.inf, 0.0]))
    assert opt.step_count == 0


def test_adam_deterministic_repeat():
    def run():
        opt = Adam(4, lr=1e-2)
        params = np.ones(4)
        for t in range(10):
            opt.update(params, np.full(4, 0.1 * (t + 1)))
        return params

    np.testing.assert_array_equal(run(), run())


def test_adam_state_round_trip():
    opt = Adam(3, lr=1e-2)
    params = np.ones(3)
    opt.update(params, np.array([1.0, -1.0, 0.5]))
    state = opt.state_arrays()
    twin = Adam(3, lr=1e-2)
    twin.load_state(state)
    p1, p2 = params.copy(), params.copy()
    opt.update(p1, np.ones(3))
    twin.update(p2, np.ones(3))
    np.testing.assert_array_equal(p1, p2)


# ----------------------------------------------------------------- polyak


def test_polyak_zero_tau_is_identity():
    target = np.arange(4.0)
    polyak_update(target, np.zeros(4), 0.0)
    np.testing.assert_array_equal(target, np.arange(4.0))


def test_polyak_full_tau_copies_online():
    target = np.arange(4.0)
    online = np.full(4, 9.0)
    polyak_update(target, online, 1.0)
    np.testing.assert_array_equal(target, online)


def test_polyak_converges_geometrically():
    target = np.zeros(1)
    online = np.ones(1)
    tau = 0.25
    for k in range(1, 11):
        polyak_update(target, online, tau)
        assert target[0] == pytest.approx(1.0 - (1.0 - tau) ** k)
