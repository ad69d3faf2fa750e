"""Numeric kernel backend selection.

Four loop-bound kernels (adam_step, quantile_huber,
distorted_expectation_rows, project_quantiles) have a compiled extension
twin that is preferred when present; the pure-numpy fallback keeps
everything working from a source tree without a C toolchain.  The
dense-layer forward/backward are matrix-multiply bound, so both backends
share the numpy (BLAS) implementation.

Set ``RISKADAPT_KERNELS`` to ``cython`` (require the extension, raise if it
is missing), ``python`` (force the fallback), or ``auto`` (the default).
"""

from __future__ import annotations

import os

from . import pure

_requested = os.environ.get("RISKADAPT_KERNELS", "auto").lower()
if _requested not in ("auto", "cython", "python"):
    raise ValueError(f"RISKADAPT_KERNELS must be auto, cython, or python, got {_requested!r}")

_impl = None
if _requested in ("auto", "cython"):
    try:
        from . import _speedups as _impl
    except ImportError:
        if _requested == "cython":
            raise
        _impl = None
if _impl is None:
    _impl = pure

BACKEND = "python" if _impl is pure else "cython"

ACT_LINEAR = pure.ACT_LINEAR
ACT_RELU = pure.ACT_RELU
ACT_TANH = pure.ACT_TANH
PROJECT_BIN_MEAN = pure.PROJECT_BIN_MEAN
PROJECT_MIDPOINT = pure.PROJECT_MIDPOINT

dense_act = pure.dense_act
dense_act_backward = pure.dense_act_backward
adam_step = _impl.adam_step
quantile_huber = _impl.quantile_huber
distorted_expectation_rows = _impl.distorted_expectation_rows
project_quantiles = _impl.project_quantiles
