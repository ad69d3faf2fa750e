"""Small dense networks with manual gradients, Adam, and checkpoint IO.

Parameters live in one flat float64 buffer per network; per-layer weight and
bias views share that memory.  The flat layout keeps the optimizer a single
vector update and makes checkpoints trivially byte-stable.

Checkpoint format: one JSON header line (format tag, metadata, array table
with names/shapes/dtypes) followed by the raw little-endian bytes of each
array, C order, in table order.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from . import _kernels as K

_ACT_CODES = {"linear": K.ACT_LINEAR, "relu": K.ACT_RELU, "tanh": K.ACT_TANH}
_FORMAT_TAG = "riskadapt-arrays-v1"
_DTYPES = {"<f8": np.dtype("<f8"), "<i8": np.dtype("<i8")}


def save_arrays(path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    """Write named arrays plus a JSON metadata dict to ``path`` atomically."""
    table = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        dtype = "<i8" if arr.dtype.kind in "iu" else "<f8"
        arr = np.ascontiguousarray(arr, dtype=_DTYPES[dtype])
        table.append({"name": name, "shape": list(arr.shape), "dtype": dtype})
        blobs.append(arr.tobytes())
    header = json.dumps({"format": _FORMAT_TAG, "meta": meta or {}, "arrays": table})
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header.encode("utf-8"))
            fh.write(b"\n")
            for blob in blobs:
                fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_arrays(path) -> tuple[dict[str, np.ndarray], dict]:
    """Read back a file written by ``save_arrays``: (arrays, meta)."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format") != _FORMAT_TAG:
            raise ValueError(f"{path}: not a {_FORMAT_TAG} file")
        arrays = {}
        for entry in header["arrays"]:
            dtype = _DTYPES[entry["dtype"]]
            count = int(np.prod(entry["shape"], dtype=np.int64)) if entry["shape"] else 1
            raw = fh.read(count * dtype.itemsize)
            if len(raw) != count * dtype.itemsize:
                raise ValueError(f"{path}: truncated array {entry['name']!r}")
            arrays[entry["name"]] = np.frombuffer(raw, dtype=dtype).reshape(entry["shape"]).copy()
    return arrays, header["meta"]


class Mlp:
    """Fully connected network: hidden activations, linear output layer."""

    def __init__(self, layer_sizes, activation: str = "relu", rng=None, params=None):
        layer_sizes = tuple(int(s) for s in layer_sizes)
        if len(layer_sizes) < 2 or any(s < 1 for s in layer_sizes):
            raise ValueError("layer_sizes needs >= 2 positive entries")
        if activation not in ("relu", "tanh"):
            raise ValueError(f"unsupported hidden activation {activation!r}")
        self.layer_sizes = layer_sizes
        self.activation = activation
        self.n_layers = len(layer_sizes) - 1
        self._act_codes = [_ACT_CODES[activation]] * (self.n_layers - 1) + [K.ACT_LINEAR]

        self._slots = []
        offset = 0
        for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            self._slots.append((offset, n_in, n_out))
            offset += n_in * n_out + n_out
        self.n_params = offset

        if params is not None:
            params = np.asarray(params, dtype=np.float64)
            if params.shape != (self.n_params,):
                raise ValueError("params has the wrong length for these layer sizes")
            self.params = params.copy()
        else:
            self.params = np.empty(self.n_params)
            rng = rng if rng is not None else np.random.default_rng(0)
            for offset, n_in, n_out in self._slots:
                bound = 1.0 / np.sqrt(n_in)
                size = n_in * n_out + n_out
                self.params[offset:offset + size] = rng.uniform(-bound, bound, size)

        self._weights = []
        self._biases = []
        for offset, n_in, n_out in self._slots:
            w_end = offset + n_in * n_out
            self._weights.append(self.params[offset:w_end].reshape(n_in, n_out))
            self._biases.append(self.params[w_end:w_end + n_out])

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the network; accepts (in_dim,) or (batch, in_dim)."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        for w, b, code in zip(self._weights, self._biases, self._act_codes):
            x = K.dense_act(x, w, b, code)
        return x[0] if single else x

    def forward_cached(self, x: np.ndarray):
        """Batched forward keeping per-layer inputs/outputs for ``backward``."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        inputs = []
        for w, b, code in zip(self._weights, self._biases, self._act_codes):
            inputs.append(x)
            x = K.dense_act(x, w, b, code)
        return x, (inputs, x)

    def backward(self, cache, grad_out: np.ndarray) -> np.ndarray:
        """Gradient of sum(grad_out * output) w.r.t. the flat parameters."""
        inputs, final_out = cache
        grads = np.empty(self.n_params)
        grad = np.ascontiguousarray(grad_out, dtype=np.float64)
        act_out = final_out
        for layer in range(self.n_layers - 1, -1, -1):
            offset, n_in, n_out = self._slots[layer]
            grad_x, grad_w, grad_b = K.dense_act_backward(
                grad, act_out, inputs[layer], self._weights[layer],
                self._act_codes[layer], layer > 0)
            w_end = offset + n_in * n_out
            grads[offset:w_end] = grad_w.ravel()
            grads[w_end:w_end + n_out] = grad_b
            grad = grad_x
            act_out = inputs[layer]
        return grads

    def copy(self) -> "Mlp":
        return Mlp(self.layer_sizes, self.activation, params=self.params)

    def save(self, path, meta: dict | None = None) -> None:
        merged = {"layer_sizes": list(self.layer_sizes), "activation": self.activation}
        if meta:
            merged.update(meta)
        save_arrays(path, {"params": self.params}, merged)

    @classmethod
    def load(cls, path) -> "Mlp":
        arrays, meta = load_arrays(path)
        return cls(meta["layer_sizes"], meta["activation"], params=arrays["params"])


class Adam:
    """Adam on a flat parameter vector; rejects non-finite gradients."""

    def __init__(self, n_params: int, lr: float = 3e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.step_count = 0

    def update(self, params: np.ndarray, grads: np.ndarray) -> None:
        if not np.all(np.isfinite(grads)):
            raise ValueError("non-finite gradient passed to Adam")
        self.step_count += 1
        K.adam_step(params, np.ascontiguousarray(grads, dtype=np.float64),
                    self.m, self.v, self.step_count,
                    self.lr, self.beta1, self.beta2, self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {"adam_m": self.m, "adam_v": self.v,
                "adam_step": np.array([self.step_count], dtype=np.int64)}

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        self.m[:] = arrays["adam_m"]
        self.v[:] = arrays["adam_v"]
        self.step_count = int(arrays["adam_step"][0])


def polyak_update(target_params: np.ndarray, online_params: np.ndarray, tau: float) -> None:
    """In-place smoothing: target <- (1 - tau) * target + tau * online."""
    target_params *= 1.0 - tau
    target_params += tau * online_params
