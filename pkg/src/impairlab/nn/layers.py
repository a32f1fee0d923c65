"""Trainable layers. Everything is plain numpy: convolutions lower to an
im2col matrix product, pooling uses reshape + argmax, dropout is inverted.

Layout conventions: dense inputs are (batch, features), 1-d conv inputs are
(batch, channels, length), 2-d conv inputs are (batch, channels, height,
width). Each layer caches what its backward pass needs during forward and
exposes matching params()/grads() dicts.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatchError


def _pair(v) -> tuple[int, int]:
    if isinstance(v, (tuple, list)):
        a, b = v
        return int(a), int(b)
    return int(v), int(v)


def kaiming_uniform(rng: np.random.Generator, shape: tuple, fan_in: int,
                    dtype=np.float32) -> np.ndarray:
    """He-style uniform init for ReLU nets: bound sqrt(6 / fan_in)."""
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Layer:
    """Base: parameter-free identity bookkeeping; subclasses override."""

    def init_params(self, rng: np.random.Generator, dtype) -> None:
        pass

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def grads(self) -> dict[str, np.ndarray]:
        return {}

    def out_shape(self, in_shape: tuple) -> tuple:
        return in_shape

    def flops(self, in_shape: tuple) -> int:
        return 0

    def forward(self, x: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def spec(self) -> dict:
        raise NotImplementedError


class Dense(Layer):
    def __init__(self, in_features: int, out_features: int):
        self.in_features = int(in_features)
        self.out_features = int(out_features)
        self.w = self.b = None
        self.dw = self.db = None
        self._x = None

    def init_params(self, rng, dtype):
        self.w = kaiming_uniform(rng, (self.in_features, self.out_features),
                                 self.in_features, dtype)
        self.b = np.zeros(self.out_features, dtype=dtype)

    def params(self):
        return {"w": self.w, "b": self.b}

    def grads(self):
        return {"w": self.dw, "b": self.db}

    def out_shape(self, in_shape):
        if in_shape != (self.in_features,):
            raise ShapeMismatchError(f"dense expects ({self.in_features},), got {in_shape}")
        return (self.out_features,)

    def flops(self, in_shape):
        return self.out_features * (2 * self.in_features + 1)

    def forward(self, x, train=False, rng=None):
        self._x = x
        return x @ self.w + self.b

    def backward(self, dy):
        self.dw = self._x.T @ dy
        self.db = dy.sum(axis=0)
        return dy @ self.w.T

    def spec(self):
        return {"kind": "dense", "in_features": self.in_features,
                "out_features": self.out_features}


class ReLU(Layer):
    def forward(self, x, train=False, rng=None):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dy):
        return dy * self._mask

    def spec(self):
        return {"kind": "relu"}


class Dropout(Layer):
    """Inverted dropout: active only in train mode, identity otherwise."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = float(rate)
        self._mask = None

    def forward(self, x, train=False, rng=None):
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise ValueError("dropout in train mode needs an rng")
        keep = (rng.random(x.shape) >= self.rate).astype(x.dtype)
        self._mask = keep / (1.0 - self.rate)
        return x * self._mask

    def backward(self, dy):
        if self._mask is None:
            return dy
        return dy * self._mask

    def spec(self):
        return {"kind": "dropout", "rate": self.rate}


class Flatten(Layer):
    def forward(self, x, train=False, rng=None):
        self._shape = x.shape
        return x.reshape(len(x), -1)

    def backward(self, dy):
        return dy.reshape(self._shape)

    def out_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def spec(self):
        return {"kind": "flatten"}


class Conv2D(Layer):
    def __init__(self, in_ch: int, out_ch: int, kernel, stride=1, pad=0):
        self.in_ch, self.out_ch = int(in_ch), int(out_ch)
        self.kernel = _pair(kernel)
        self.stride = _pair(stride)
        self.pad = _pair(pad)
        self.w = self.b = None
        self.dw = self.db = None

    def init_params(self, rng, dtype):
        kh, kw = self.kernel
        fan_in = self.in_ch * kh * kw
        self.w = kaiming_uniform(rng, (self.out_ch, self.in_ch, kh, kw), fan_in, dtype)
        self.b = np.zeros(self.out_ch, dtype=dtype)

    def params(self):
        return {"w": self.w, "b": self.b}

    def grads(self):
        return {"w": self.dw, "b": self.db}

    def out_shape(self, in_shape):
        c, h, w = in_shape
        if c != self.in_ch:
            raise ShapeMismatchError(f"conv2d expects {self.in_ch} channels, got {c}")
        (kh, kw), (sh, sw), (ph, pw) = self.kernel, self.stride, self.pad
        oh = (h + 2 * ph - kh) // sh + 1
        ow = (w + 2 * pw - kw) // sw + 1
        if oh < 1 or ow < 1:
            raise ShapeMismatchError(f"kernel {self.kernel} too large for input {in_shape}")
        return (self.out_ch, oh, ow)

    def flops(self, in_shape):
        _, oh, ow = self.out_shape(in_shape)
        kh, kw = self.kernel
        return self.out_ch * oh * ow * (2 * self.in_ch * kh * kw + 1)

    def forward(self, x, train=False, rng=None):
        (kh, kw), (sh, sw), (ph, pw) = self.kernel, self.stride, self.pad
        if ph or pw:
            x = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
        b = len(x)
        _, oh, ow = self.out_shape((self.in_ch, x.shape[2] - 2 * ph, x.shape[3] - 2 * pw))
        win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
        win = win[:, :, ::sh, ::sw][:, :, :oh, :ow]
        col = win.transpose(0, 2, 3, 1, 4, 5).reshape(b * oh * ow, self.in_ch * kh * kw)
        y = col @ self.w.reshape(self.out_ch, -1).T + self.b
        self._col, self._padded_shape, self._out_hw = col, x.shape, (oh, ow)
        return y.reshape(b, oh, ow, self.out_ch).transpose(0, 3, 1, 2)

    def backward(self, dy):
        (kh, kw), (sh, sw), (ph, pw) = self.kernel, self.stride, self.pad
        b = len(dy)
        oh, ow = self._out_hw
        dout = dy.transpose(0, 2, 3, 1).reshape(-1, self.out_ch)
        self.dw = (dout.T @ self._col).reshape(self.w.shape)
        self.db = dout.sum(axis=0)
        dcol = (dout @ self.w.reshape(self.out_ch, -1))
        dcol = dcol.reshape(b, oh, ow, self.in_ch, kh, kw)
        dxp = np.zeros(self._padded_shape, dtype=dy.dtype)
        for i in range(kh):
            for j in range(kw):
                dxp[:, :, i:i + oh * sh:sh, j:j + ow * sw:sw] += \
                    dcol[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        if ph or pw:
            h, w = self._padded_shape[2] - 2 * ph, self._padded_shape[3] - 2 * pw
            return dxp[:, :, ph:ph + h, pw:pw + w]
        return dxp

    def spec(self):
        return {"kind": "conv2d", "in_ch": self.in_ch, "out_ch": self.out_ch,
                "kernel": list(self.kernel), "stride": list(self.stride),
                "pad": list(self.pad)}


class Conv1D(Layer):
    def __init__(self, in_ch: int, out_ch: int, kernel: int, stride: int = 1, pad: int = 0):
        self.in_ch, self.out_ch = int(in_ch), int(out_ch)
        self.kernel = int(kernel)
        self.stride = int(stride)
        self.pad = int(pad)
        self.w = self.b = None
        self.dw = self.db = None

    def init_params(self, rng, dtype):
        fan_in = self.in_ch * self.kernel
        self.w = kaiming_uniform(rng, (self.out_ch, self.in_ch, self.kernel), fan_in, dtype)
        self.b = np.zeros(self.out_ch, dtype=dtype)

    def params(self):
        return {"w": self.w, "b": self.b}

    def grads(self):
        return {"w": self.dw, "b": self.db}

    def out_shape(self, in_shape):
        c, n = in_shape
        if c != self.in_ch:
            raise ShapeMismatchError(f"conv1d expects {self.in_ch} channels, got {c}")
        ol = (n + 2 * self.pad - self.kernel) // self.stride + 1
        if ol < 1:
            raise ShapeMismatchError(f"kernel {self.kernel} too large for input {in_shape}")
        return (self.out_ch, ol)

    def flops(self, in_shape):
        _, ol = self.out_shape(in_shape)
        return self.out_ch * ol * (2 * self.in_ch * self.kernel + 1)

    def forward(self, x, train=False, rng=None):
        k, s, p = self.kernel, self.stride, self.pad
        if p:
            x = np.pad(x, ((0, 0), (0, 0), (p, p)))
        b = len(x)
        _, ol = self.out_shape((self.in_ch, x.shape[2] - 2 * p))
        win = np.lib.stride_tricks.sliding_window_view(x, k, axis=2)[:, :, ::s][:, :, :ol]
        col = win.transpose(0, 2, 1, 3).reshape(b * ol, self.in_ch * k)
        y = col @ self.w.reshape(self.out_ch, -1).T + self.b
        self._col, self._padded_shape, self._out_len = col, x.shape, ol
        return y.reshape(b, ol, self.out_ch).transpose(0, 2, 1)

    def backward(self, dy):
        k, s, p = self.kernel, self.stride, self.pad
        b, ol = len(dy), self._out_len
        dout = dy.transpose(0, 2, 1).reshape(-1, self.out_ch)
        self.dw = (dout.T @ self._col).reshape(self.w.shape)
        self.db = dout.sum(axis=0)
        dcol = (dout @ self.w.reshape(self.out_ch, -1)).reshape(b, ol, self.in_ch, k)
        dxp = np.zeros(self._padded_shape, dtype=dy.dtype)
        for j in range(k):
            dxp[:, :, j:j + ol * s:s] += dcol[:, :, :, j].transpose(0, 2, 1)
        if p:
            return dxp[:, :, p:self._padded_shape[2] - p]
        return dxp

    def spec(self):
        return {"kind": "conv1d", "in_ch": self.in_ch, "out_ch": self.out_ch,
                "kernel": self.kernel, "stride": self.stride, "pad": self.pad}


class MaxPool2D(Layer):
    """Non-overlapping max pooling; trailing rows/cols that do not fill a
    window are dropped."""

    def __init__(self, pool: int = 2):
        self.pool = int(pool)
        if self.pool < 1:
            raise ValueError(f"pool must be >= 1, got {pool}")

    def out_shape(self, in_shape):
        c, h, w = in_shape
        if h < self.pool or w < self.pool:
            raise ShapeMismatchError(f"pool {self.pool} too large for input {in_shape}")
        return (c, h // self.pool, w // self.pool)

    def forward(self, x, train=False, rng=None):
        p = self.pool
        b, c, h, w = x.shape
        oh, ow = h // p, w // p
        cells = x[:, :, :oh * p, :ow * p].reshape(b, c, oh, p, ow, p)
        cells = cells.transpose(0, 1, 2, 4, 3, 5).reshape(b, c, oh, ow, p * p)
        self._idx = cells.argmax(axis=-1)
        self._in_shape = x.shape
        return np.take_along_axis(cells, self._idx[..., None], axis=-1)[..., 0]

    def backward(self, dy):
        p = self.pool
        b, c, h, w = self._in_shape
        oh, ow = h // p, w // p
        cells = np.zeros((b, c, oh, ow, p * p), dtype=dy.dtype)
        np.put_along_axis(cells, self._idx[..., None], dy[..., None], axis=-1)
        dx = np.zeros(self._in_shape, dtype=dy.dtype)
        dx[:, :, :oh * p, :ow * p] = cells.reshape(b, c, oh, ow, p, p) \
            .transpose(0, 1, 2, 4, 3, 5).reshape(b, c, oh * p, ow * p)
        return dx

    def spec(self):
        return {"kind": "maxpool2d", "pool": self.pool}


class MaxPool1D(Layer):
    def __init__(self, pool: int = 2):
        self.pool = int(pool)
        if self.pool < 1:
            raise ValueError(f"pool must be >= 1, got {pool}")

    def out_shape(self, in_shape):
        c, n = in_shape
        if n < self.pool:
            raise ShapeMismatchError(f"pool {self.pool} too large for input {in_shape}")
        return (c, n // self.pool)

    def forward(self, x, train=False, rng=None):
        p = self.pool
        b, c, n = x.shape
        ol = n // p
        cells = x[:, :, :ol * p].reshape(b, c, ol, p)
        self._idx = cells.argmax(axis=-1)
        self._in_shape = x.shape
        return np.take_along_axis(cells, self._idx[..., None], axis=-1)[..., 0]

    def backward(self, dy):
        p = self.pool
        b, c, n = self._in_shape
        ol = n // p
        cells = np.zeros((b, c, ol, p), dtype=dy.dtype)
        np.put_along_axis(cells, self._idx[..., None], dy[..., None], axis=-1)
        dx = np.zeros(self._in_shape, dtype=dy.dtype)
        dx[:, :, :ol * p] = cells.reshape(b, c, ol * p)
        return dx

    def spec(self):
        return {"kind": "maxpool1d", "pool": self.pool}


_LAYER_KINDS = {
    "dense": lambda d: Dense(d["in_features"], d["out_features"]),
    "relu": lambda d: ReLU(),
    "dropout": lambda d: Dropout(d["rate"]),
    "flatten": lambda d: Flatten(),
    "conv2d": lambda d: Conv2D(d["in_ch"], d["out_ch"], d["kernel"], d["stride"], d["pad"]),
    "conv1d": lambda d: Conv1D(d["in_ch"], d["out_ch"], d["kernel"], d["stride"], d["pad"]),
    "maxpool2d": lambda d: MaxPool2D(d["pool"]),
    "maxpool1d": lambda d: MaxPool1D(d["pool"]),
}


def layer_from_spec(d: dict) -> Layer:
    try:
        factory = _LAYER_KINDS[d["kind"]]
    except KeyError:
        raise ValueError(f"unknown layer kind {d.get('kind')!r}") from None
    return factory(d)
