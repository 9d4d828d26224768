"""Layer primitives with hand-written forward and backward passes.

Tensors are plain ndarrays. Convolutions use (batch, channels, height, width)
and kernels (filters, channels, kh, kw); dense weights are (out, in) so that
y = x W^T + b for a batch of row vectors.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


# --------------------------------------------------------------------------
# functional forms

def _as_batch(x: np.ndarray, ndim: int) -> tuple[np.ndarray, bool]:
    if x.ndim == ndim - 1:
        return x[None], True
    if x.ndim != ndim:
        raise ValueError(f"expected a {ndim - 1}-d or batched {ndim}-d tensor, got shape {x.shape}")
    return x, False


def _im2col(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    b, c, h, w = x.shape
    win = sliding_window_view(x, (kh, kw), axis=(2, 3))  # b, c, ho, wo, kh, kw
    ho, wo = h - kh + 1, w - kw + 1
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(b * ho * wo, c * kh * kw)


def conv_forward(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid cross-correlation plus per-map bias.

    ``x`` is (C, H, W) or (B, C, H, W); the output is (F, H-kh+1, W-kw+1)
    with the same batching.
    """
    xb, single = _as_batch(np.asarray(x), 4)
    f, c, kh, kw = kernels.shape
    b, cx, h, w = xb.shape
    if cx != c:
        raise ValueError(f"input has {cx} channels, kernels expect {c}")
    if kh > h or kw > w:
        raise ValueError(f"kernel {kh}x{kw} larger than input {h}x{w}")
    if bias.shape != (f,):
        raise ValueError(f"bias shape {bias.shape} does not match {f} filters")
    ho, wo = h - kh + 1, w - kw + 1
    cols = _im2col(xb, kh, kw)
    out = cols @ kernels.reshape(f, -1).T + bias
    out = out.reshape(b, ho, wo, f).transpose(0, 3, 1, 2)
    out = np.ascontiguousarray(out)
    return out[0] if single else out


def conv_backward(dout: np.ndarray, x: np.ndarray, kernels: np.ndarray):
    """Gradients (dx, dkernels, dbias) of a valid convolution."""
    xb, single = _as_batch(np.asarray(x), 4)
    db_, _ = _as_batch(np.asarray(dout), 4)
    f, c, kh, kw = kernels.shape
    b, _, h, w = xb.shape
    ho, wo = h - kh + 1, w - kw + 1
    if db_.shape != (b, f, ho, wo):
        raise ValueError(f"upstream gradient shape {db_.shape}, expected {(b, f, ho, wo)}")
    dcols_out = db_.transpose(0, 2, 3, 1).reshape(b * ho * wo, f)
    cols = _im2col(xb, kh, kw)
    dk = (dcols_out.T @ cols).reshape(kernels.shape)
    dbias = dcols_out.sum(axis=0)
    dcols = (dcols_out @ kernels.reshape(f, -1)).reshape(b, ho, wo, c, kh, kw)
    dx = np.zeros_like(xb)
    for i in range(kh):
        for j in range(kw):
            dx[:, :, i:i + ho, j:j + wo] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return (dx[0] if single else dx), dk, dbias


def dense_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    if x.shape[-1] != weights.shape[1]:
        raise ValueError(f"input width {x.shape[-1]} does not match weights {weights.shape}")
    return x @ weights.T + bias


def dense_backward(dout: np.ndarray, x: np.ndarray, weights: np.ndarray):
    if dout.shape[-1] != weights.shape[0]:
        raise ValueError(f"upstream gradient width {dout.shape[-1]} does not match weights {weights.shape}")
    d2 = dout.reshape(-1, dout.shape[-1])
    x2 = x.reshape(-1, x.shape[-1])
    return dout @ weights, d2.T @ x2, d2.sum(axis=0)


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(dout: np.ndarray, x: np.ndarray) -> np.ndarray:
    return dout * (x > 0)


def dropout_mask(shape, p: float, rng: np.random.Generator, dtype=np.float64) -> np.ndarray:
    """Inverted-dropout mask: 0 with probability p, else 1/(1-p)."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"drop probability must lie in [0, 1), got {p}")
    keep = rng.random(shape) >= p
    return keep.astype(dtype) / dtype(1.0 - p)


def dropout(x: np.ndarray, p: float, mode: str = "train", seed=None) -> np.ndarray:
    if not 0.0 <= p < 1.0:
        raise ValueError(f"drop probability must lie in [0, 1), got {p}")
    if mode == "eval" or p == 0.0:
        return x
    if mode != "train":
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return x * dropout_mask(x.shape, p, rng, x.dtype.type)


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(x.dtype, copy=False)


def softmax(x: np.ndarray) -> np.ndarray:
    z = np.asarray(x) - np.max(x, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


# --------------------------------------------------------------------------
# layer objects

class Layer:
    kind = "layer"
    params: list[np.ndarray] = []

    def build(self, input_shape: tuple[int, ...]) -> tuple[int, ...]:
        self.input_shape = tuple(input_shape)
        self.output_shape = self.input_shape
        return self.output_shape

    def init_params(self, rng: np.random.Generator, dtype, scheme: str) -> None:
        pass

    def forward(self, x: np.ndarray, train: bool = False, rng=None) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def grads(self) -> list[np.ndarray]:
        return []

    def spec(self) -> dict:
        return {"kind": self.kind}


def _uniform_init(rng, shape, fan_in, fan_out, scheme, dtype):
    if scheme == "he":
        limit = np.sqrt(6.0 / fan_in)
    elif scheme == "glorot":
        limit = np.sqrt(6.0 / (fan_in + fan_out))
    else:
        raise ValueError(f"unknown init scheme {scheme!r}")
    return rng.uniform(-limit, limit, shape).astype(dtype)


class Conv2D(Layer):
    kind = "conv"

    def __init__(self, filters: int, kernel: tuple[int, int]):
        self.filters = int(filters)
        self.kernel = (int(kernel[0]), int(kernel[1]))
        self.params = [None, None]

    def build(self, input_shape):
        if len(input_shape) != 3:
            raise ValueError(f"conv expects (C, H, W) input, got {input_shape}")
        c, h, w = input_shape
        kh, kw = self.kernel
        if kh > h or kw > w:
            raise ValueError(f"conv kernel {self.kernel} does not fit input {input_shape}")
        self.input_shape = tuple(input_shape)
        self.output_shape = (self.filters, h - kh + 1, w - kw + 1)
        return self.output_shape

    def init_params(self, rng, dtype, scheme):
        c = self.input_shape[0]
        kh, kw = self.kernel
        shape = (self.filters, c, kh, kw)
        self.params = [_uniform_init(rng, shape, c * kh * kw, self.filters * kh * kw, scheme, dtype),
                       np.zeros(self.filters, dtype=dtype)]

    def forward(self, x, train=False, rng=None):
        self._x = x
        return conv_forward(x, self.params[0], self.params[1])

    def backward(self, dout):
        dx, dk, db = conv_backward(dout, self._x, self.params[0])
        self._grads = [dk, db]
        return dx

    @property
    def grads(self):
        return self._grads

    def spec(self):
        return {"kind": self.kind, "filters": self.filters, "kernel": list(self.kernel)}


class Dense(Layer):
    kind = "dense"

    def __init__(self, units: int):
        self.units = int(units)
        self.params = [None, None]

    def build(self, input_shape):
        if len(input_shape) != 1:
            raise ValueError(f"dense expects a flat input, got {input_shape}; add a flatten layer")
        self.input_shape = tuple(input_shape)
        self.output_shape = (self.units,)
        return self.output_shape

    def init_params(self, rng, dtype, scheme):
        n_in = self.input_shape[0]
        self.params = [_uniform_init(rng, (self.units, n_in), n_in, self.units, scheme, dtype),
                       np.zeros(self.units, dtype=dtype)]

    def forward(self, x, train=False, rng=None):
        self._x = x
        return dense_forward(x, self.params[0], self.params[1])

    def backward(self, dout):
        dx, dw, db = dense_backward(dout, self._x, self.params[0])
        self._grads = [dw, db]
        return dx

    @property
    def grads(self):
        return self._grads

    def spec(self):
        return {"kind": self.kind, "units": self.units}


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, train=False, rng=None):
        self._x = x
        return relu_forward(x)

    def backward(self, dout):
        return relu_backward(dout, self._x)


class Dropout(Layer):
    kind = "dropout"

    def __init__(self, p: float):
        if not 0.0 <= p < 1.0:
            raise ValueError(f"drop probability must lie in [0, 1), got {p}")
        self.p = float(p)

    def forward(self, x, train=False, rng=None):
        if not train or self.p == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ValueError("training-mode dropout needs a random generator")
        self._mask = dropout_mask(x.shape, self.p, rng, x.dtype.type)
        return x * self._mask

    def backward(self, dout):
        return dout if self._mask is None else dout * self._mask

    def spec(self):
        return {"kind": self.kind, "p": self.p}


class Flatten(Layer):
    kind = "flatten"

    def build(self, input_shape):
        self.input_shape = tuple(input_shape)
        self.output_shape = (int(np.prod(input_shape)),)
        return self.output_shape

    def forward(self, x, train=False, rng=None):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._shape)


class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, x, train=False, rng=None):
        self._y = sigmoid(x)
        return self._y

    def backward(self, dout):
        return dout * self._y * (1 - self._y)


class Softmax(Layer):
    kind = "softmax"

    def forward(self, x, train=False, rng=None):
        self._y = softmax(x)
        return self._y

    def backward(self, dout):
        y = self._y
        return y * (dout - np.sum(dout * y, axis=-1, keepdims=True))


LAYER_KINDS = {
    "conv": lambda s: Conv2D(s["filters"], s["kernel"]),
    "dense": lambda s: Dense(s["units"]),
    "relu": lambda s: ReLU(),
    "dropout": lambda s: Dropout(s["p"]),
    "flatten": lambda s: Flatten(),
    "sigmoid": lambda s: Sigmoid(),
    "softmax": lambda s: Softmax(),
}


def make_layer(spec: dict) -> Layer:
    try:
        factory = LAYER_KINDS[spec["kind"]]
    except KeyError:
        raise ValueError(f"unknown layer kind in {spec}") from None
    return factory(spec)
