"""Independent reference implementations used to check the package.

Everything here is deliberately written from first principles with exact
rational arithmetic or plain loops, sharing no code with riskadapt, so that
agreement between the two is evidence rather than tautology.
"""

from fractions import Fraction

import numpy as np


def exact_distorted_expectation(values, alpha: float) -> float:
    """Brute-force risk-distorted expectation via an exact step-CDF walk.

    The distribution places mass 1/n on each value.  For each midpoint
    fraction tau_i = (2i+1)/(2n) the distorted fraction is phi = tau_i*alpha
    and the inverse CDF is read off the sorted values by exact Fraction
    comparison against the cumulative bin edges k/n, with a boundary fraction
    belonging to the upper bin.  All arithmetic before the final division is
    rational, using the exact binary values of the float inputs.
    """
    sorted_vals = sorted(float(v) for v in values)
    n = len(sorted_vals)
    fa = Fraction(alpha)
    if not 0 <= fa <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    total = Fraction(0)
    for i in range(n):
        phi = Fraction(2 * i + 1, 2 * n) * fa
        # walk the step CDF: find the smallest k with phi < (k+1)/n,
        # except that phi == k/n exactly belongs to bin k
        k = 0
        while k < n - 1 and phi >= Fraction(k + 1, n):
            k += 1
        total += Fraction(sorted_vals[k])
    return float(total / n)


def finite_difference_gradient(f, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function, one coordinate at a time."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        forward = x.copy()
        backward = x.copy()
        forward[i] += step
        backward[i] -= step
        grad[i] = (f(forward) - f(backward)) / (2.0 * step)
    return grad


def quantile_huber_reference(pred, target, taus, kappa: float):
    """Loop-based quantile Huber loss, normalized like the package kernel."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    batch, n_pred = pred.shape
    n_tgt = target.shape[1]
    loss = 0.0
    for b in range(batch):
        for i in range(n_pred):
            for j in range(n_tgt):
                delta = target[b, j] - pred[b, i]
                if abs(delta) <= kappa:
                    huber = 0.5 * delta * delta
                else:
                    huber = kappa * (abs(delta) - 0.5 * kappa)
                weight = abs(taus[i] - (1.0 if delta < 0.0 else 0.0))
                loss += weight * huber
    return loss / (batch * n_pred * n_tgt * kappa)


def adam_step_reference(p, g, m, v, t, lr, beta1, beta2, eps):
    """Textbook Adam update returning fresh arrays."""
    p = np.asarray(p, dtype=np.float64).copy()
    m = beta1 * np.asarray(m) + (1 - beta1) * np.asarray(g)
    v = beta2 * np.asarray(v) + (1 - beta2) * np.asarray(g) ** 2
    m_hat = m / (1 - beta1 ** t)
    v_hat = v / (1 - beta2 ** t)
    p -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return p, m, v


def discounted_chain_values(distance: int, gamma: float) -> list:
    """State values of a deterministic chain with reward 1 on goal entry.

    Positions are steps-to-goal; entering the goal pays 1, so the value at
    distance d (d >= 1) is gamma**(d-1).
    """
    return [gamma ** (d - 1) for d in range(1, distance + 1)]


def chain_closed_form_values(distance: int, gamma: float) -> np.ndarray:
    """Same closed form as discounted_chain_values, built by the recurrence.

    Accumulating value *= gamma mirrors how a one-sweep-per-distance solver
    forms the products, so exact float equality is a fair expectation here
    while gamma ** (d - 1) may differ by an ulp.
    """
    out = np.empty(distance)
    value = 1.0
    for d in range(distance):
        out[d] = value
        value *= gamma
    return out
