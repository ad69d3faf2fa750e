# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the loop-bound kernels in ``pure.py``.

Covers adam_step, quantile_huber, distorted_expectation_rows, and
project_quantiles: the kernels whose numpy fallbacks burn time on
temporaries and broadcasting.  The dense-layer forward/backward stay
numpy-only in both backends; those are matrix-multiply bound and BLAS
already wins there.  Same function names, same semantics; parity between
the backends is pinned by tests.
"""

import numpy as np

from libc.math cimport fabs, floor, sqrt
from libc.stdlib cimport malloc, free

PROJECT_BIN_MEAN = 0
PROJECT_MIDPOINT = 1


def adam_step(double[::1] p, const double[::1] g, double[::1] m, double[::1] v,
              long t, double lr, double beta1, double beta2, double eps):
    """One Adam update, in place on p, m, v; t is the 1-based step count."""
    cdef Py_ssize_t n = p.shape[0]
    cdef double c1 = 1.0 - beta1 ** t
    cdef double c2 = 1.0 - beta2 ** t
    cdef Py_ssize_t i
    cdef double gi
    for i in range(n):
        gi = g[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi
        v[i] = beta2 * v[i] + (1.0 - beta2) * (gi * gi)
        p[i] -= lr * (m[i] / c1) / (sqrt(v[i] / c2) + eps)


def quantile_huber(const double[:, ::1] pred, const double[:, ::1] target,
                   const double[::1] taus, double kappa):
    """Quantile Huber loss and gradient; see the pure twin for the contract."""
    cdef Py_ssize_t batch = pred.shape[0]
    cdef Py_ssize_t n_pred = pred.shape[1]
    cdef Py_ssize_t n_tgt = target.shape[1]
    grad_arr = np.zeros((batch, n_pred))
    cdef double[:, ::1] grad = grad_arr
    cdef Py_ssize_t i, a, j
    cdef double loss = 0.0
    cdef double pv, tau, delta, ad, hl, dh, wgt
    cdef double scale = 1.0 / (batch * n_pred * n_tgt * kappa)
    for i in range(batch):
        for a in range(n_pred):
            pv = pred[i, a]
            tau = taus[a]
            for j in range(n_tgt):
                delta = target[i, j] - pv
                ad = fabs(delta)
                if ad <= kappa:
                    hl = 0.5 * delta * delta
                    dh = delta
                else:
                    hl = kappa * (ad - 0.5 * kappa)
                    dh = kappa if delta > 0.0 else -kappa
                wgt = tau - 1.0 if delta < 0.0 else tau
                wgt = fabs(wgt)
                loss += wgt * hl
                grad[i, a] -= wgt * dh
    loss *= scale
    cdef Py_ssize_t r, c
    for r in range(batch):
        for c in range(n_pred):
            grad[r, c] *= scale
    return loss, grad_arr


cdef inline void _insertion_sort(double* buf, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double key
    for i in range(1, n):
        key = buf[i]
        j = i - 1
        while j >= 0 and buf[j] > key:
            buf[j + 1] = buf[j]
            j -= 1
        buf[j + 1] = key


def distorted_expectation_rows(const double[:, ::1] values,
                               const double[::1] alphas):
    """Risk-distorted expectation of each row; see the pure twin."""
    cdef Py_ssize_t rows = values.shape[0]
    cdef Py_ssize_t n = values.shape[1]
    out_arr = np.empty(rows)
    cdef double[::1] out = out_arr
    cdef double* buf = <double*> malloc(n * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t r, i, idx
    cdef double alpha, acc, tau, phi, fidx, mn
    try:
        for r in range(rows):
            alpha = alphas[r]
            if alpha == 1.0:
                acc = 0.0
                for i in range(n):
                    acc += values[r, i]
                out[r] = acc / n
            elif alpha == 0.0:
                mn = values[r, 0]
                for i in range(1, n):
                    if values[r, i] < mn:
                        mn = values[r, i]
                out[r] = mn
            else:
                for i in range(n):
                    buf[i] = values[r, i]
                _insertion_sort(buf, n)
                acc = 0.0
                for i in range(n):
                    tau = (2.0 * i + 1.0) / (2.0 * n)
                    phi = tau * alpha
                    # boundary snap: exact phi*n = k can land a few ulp low
                    fidx = floor(phi * n + 1e-9)
                    idx = <Py_ssize_t> fidx
                    if idx > n - 1:
                        idx = n - 1
                    acc += buf[idx]
                out[r] = acc / n
    finally:
        free(buf)
    return out_arr


def project_quantiles(atoms, weights, Py_ssize_t n_out, int mode):
    """Project a weighted discrete distribution onto uniform quantiles.

    Sorting and cumulative handling are delegated to numpy (projection only
    runs inside tabular dynamic-programming sweeps, not per-step hot loops);
    the per-bin accumulation below is the compiled part.
    """
    atoms = np.asarray(atoms, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    order = np.argsort(atoms, kind="stable")
    cdef double[::1] at = np.ascontiguousarray(atoms[order])
    cdef double[::1] cum = np.minimum(np.cumsum(weights[order]), 1.0)
    cdef Py_ssize_t k = at.shape[0]
    cum[k - 1] = 1.0
    out_arr = np.empty(n_out)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double level, lo, hi, acc, prev
    if mode == PROJECT_MIDPOINT:
        j = 0
        for i in range(n_out):
            level = (2.0 * i + 1.0) / (2.0 * n_out)
            while j < k - 1 and cum[j] <= level:
                j += 1
            out[i] = at[j]
        return out_arr
    # Bin mean: integrate the step inverse CDF over each equal-mass bin.
    j = 0
    prev = 0.0
    for i in range(n_out):
        hi = (i + 1.0) / n_out
        acc = 0.0
        lo = prev
        while cum[j] < hi and j < k - 1:
            acc += (cum[j] - lo) * at[j]
            lo = cum[j]
            j += 1
        acc += (hi - lo) * at[j]
        prev = hi
        out[i] = acc * n_out
    return out_arr
