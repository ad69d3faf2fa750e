"""Pure-numpy implementations of the numeric kernels.

The four loop-bound kernels (adam_step, quantile_huber,
distorted_expectation_rows, project_quantiles) have compiled twins in
``_speedups.pyx`` with the same semantics; parity between the two is pinned
by tests, so keep both files in sync when changing anything here.  The
dense-layer forward/backward live only here: they are matrix-multiply bound
and run on BLAS through numpy in both backends.

Activation codes: 0 = linear, 1 = relu, 2 = tanh.
Projection modes: 0 = bin mean (mass-preserving), 1 = bin midpoint.
"""

from __future__ import annotations

import numpy as np

ACT_LINEAR = 0
ACT_RELU = 1
ACT_TANH = 2

PROJECT_BIN_MEAN = 0
PROJECT_MIDPOINT = 1


def dense_act(x, w, b, act):
    """Affine layer followed by an activation: ``act(x @ w + b)``.

    x: (batch, n_in), w: (n_in, n_out), b: (n_out,).  Returns (batch, n_out).
    """
    out = x @ w
    out += b
    if act == ACT_RELU:
        np.maximum(out, 0.0, out=out)
    elif act == ACT_TANH:
        np.tanh(out, out=out)
    return out


def dense_act_backward(grad_out, act_out, x, w, act, need_grad_x):
    """Backward pass of ``dense_act``.

    grad_out: gradient w.r.t. the layer output, (batch, n_out).
    act_out: the forward output (both relu and tanh gradients are functions
    of the post-activation value, so no pre-activations are cached).
    Returns (grad_x, grad_w, grad_b); grad_x is None when not requested.
    """
    if act == ACT_RELU:
        gz = grad_out * (act_out > 0.0)
    elif act == ACT_TANH:
        gz = grad_out * (1.0 - act_out * act_out)
    else:
        gz = grad_out
    grad_w = x.T @ gz
    grad_b = gz.sum(axis=0)
    grad_x = gz @ w.T if need_grad_x else None
    return grad_x, grad_w, grad_b


def adam_step(p, g, m, v, t, lr, beta1, beta2, eps):
    """One Adam update, in place on ``p``, ``m``, ``v``.

    t is the 1-based step count after incrementing.  Uses the standard
    bias-corrected form: p -= lr * m_hat / (sqrt(v_hat) + eps).
    """
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * (g * g)
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


def quantile_huber(pred, target, taus, kappa):
    """Quantile Huber loss between predicted and target quantile sets.

    pred: (batch, n_pred) quantile values at fractions ``taus``.
    target: (batch, n_target) sample values (fixed, no gradient).
    Per pair (i, j): rho = |tau_i - 1{delta<0}| * huber_kappa(delta) / kappa
    with delta = target_j - pred_i.  Returns the mean over all
    (batch, i, j) triples and the gradient w.r.t. ``pred`` of that mean.
    """
    delta = target[:, None, :] - pred[:, :, None]
    abs_delta = np.abs(delta)
    quadratic = abs_delta <= kappa
    huber = np.where(quadratic, 0.5 * delta * delta, kappa * (abs_delta - 0.5 * kappa))
    dhuber = np.where(quadratic, delta, kappa * np.sign(delta))
    weight = np.abs(taus[None, :, None] - (delta < 0.0))
    scale = 1.0 / (delta.shape[0] * delta.shape[1] * delta.shape[2] * kappa)
    loss = float(np.sum(weight * huber) * scale)
    grad_pred = -np.sum(weight * dhuber, axis=2) * scale
    return loss, grad_pred


def distorted_expectation_rows(values, alphas):
    """Risk-distorted expectation of each row of quantile values.

    values: (rows, n) unsorted quantile values; alphas: (rows,) risk levels
    in [0, 1].  Each row is sorted and read through the distorted midpoint
    fractions: tau_i = (2i+1)/(2n), phi_i = tau_i * alpha,
    index_i = min(floor(phi_i * n), n - 1).  alpha == 1 reduces to the plain
    mean and alpha == 0 to the minimum, computed directly so those identities
    hold exactly.
    """
    values = np.asarray(values, dtype=np.float64)
    alphas = np.asarray(alphas, dtype=np.float64)
    rows, n = values.shape
    out = np.empty(rows)
    is_mean = alphas == 1.0
    is_min = alphas == 0.0
    general = ~(is_mean | is_min)
    if np.any(is_mean):
        out[is_mean] = _sequential_row_mean(values[is_mean])
    if np.any(is_min):
        out[is_min] = values[is_min].min(axis=1)
    if np.any(general):
        sub = np.sort(values[general], axis=1)
        taus = (2.0 * np.arange(n) + 1.0) / (2.0 * n)
        phis = taus[None, :] * alphas[general][:, None]
        # Exact bin boundaries own the upper bin; the 1e-9 snap keeps that
        # true when floating point lands a boundary a few ulp low.
        idx = np.minimum(np.floor(phis * n + 1e-9).astype(np.int64), n - 1)
        out[general] = _sequential_row_mean(np.take_along_axis(sub, idx, axis=1))
    return out


def _sequential_row_mean(values: np.ndarray) -> np.ndarray:
    # Left-to-right accumulation per row, matching the compiled twin's loop
    # order bit for bit (np.mean would sum pairwise).
    acc = np.zeros(values.shape[0])
    for j in range(values.shape[1]):
        acc += values[:, j]
    return acc / values.shape[1]


def project_quantiles(atoms, weights, n_out, mode):
    """Project a weighted discrete distribution onto n_out uniform quantiles.

    atoms: (k,) support values (any order); weights: (k,) nonnegative,
    summing to 1.  Bin-mean mode returns the exact mean of each equal-mass
    bin of the step-function inverse CDF, so the projection preserves the
    overall mean.  Midpoint mode samples the inverse CDF at the bin midpoint
    fractions (2i+1)/(2 n_out), right-continuous at jump points.
    """
    atoms = np.asarray(atoms, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    order = np.argsort(atoms, kind="stable")
    atoms = atoms[order]
    weights = weights[order]
    cum = np.minimum(np.cumsum(weights), 1.0)
    cum[-1] = 1.0
    if mode == PROJECT_MIDPOINT:
        levels = (2.0 * np.arange(n_out) + 1.0) / (2.0 * n_out)
        idx = np.minimum(np.searchsorted(cum, levels, side="right"), len(atoms) - 1)
        return atoms[idx]
    # Bin mean via the integral of the inverse CDF, which is piecewise linear
    # in cumulative mass with knots at the atom boundaries.
    knots_p = np.concatenate(([0.0], cum))
    knots_int = np.concatenate(([0.0], np.cumsum(weights * atoms)))
    edges = np.arange(n_out + 1) / n_out
    integral = np.interp(edges, knots_p, knots_int)
    return np.diff(integral) * n_out
