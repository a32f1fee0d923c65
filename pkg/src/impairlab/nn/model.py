"""Sequential model assembled from layers.py, with softmax cross-entropy,
finite-difference gradient verification, multiply-add FLOP accounting, and a
checksummed binary checkpoint format.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from ..errors import BadLabelError, CorruptModelError, ShapeMismatchError
from .layers import Layer, layer_from_spec


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient w.r.t. the logits.

    Uses the log-sum-exp form, so large logits do not overflow.
    """
    n, k = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ShapeMismatchError(f"expected {n} labels, got shape {labels.shape}")
    if labels.min() < 0 or labels.max() >= k:
        raise BadLabelError(f"labels must lie in [0, {k}), got range "
                            f"[{labels.min()}, {labels.max()}]")
    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.sum(np.exp(z), axis=1, keepdims=True))
    loss = -float(np.mean(log_probs[np.arange(n), labels]))
    grad = np.exp(log_probs)
    grad[np.arange(n), labels] -= 1.0
    return loss, (grad / n).astype(logits.dtype)


class Model:
    """A layer stack with one fixed input shape (excluding the batch axis)."""

    def __init__(self, layers: list[Layer], input_shape: tuple, seed: int = 0,
                 dtype=np.float32):
        self.layers = layers
        self.input_shape = tuple(int(d) for d in input_shape)
        self.dtype = np.dtype(dtype)
        self.seed = int(seed)
        shape = self.input_shape
        for i, layer in enumerate(self.layers):
            layer.init_params(np.random.default_rng((seed, i)), self.dtype)
            shape = layer.out_shape(shape)
        self.output_shape = shape

    # -- forward / backward -------------------------------------------------

    def forward(self, x: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeMismatchError(
                f"model expects {self.input_shape} per example, got {tuple(x.shape[1:])}")
        x = np.ascontiguousarray(x, dtype=self.dtype)
        for layer in self.layers:
            x = layer.forward(x, train=train, rng=rng)
        return x

    def loss_and_grad(self, x: np.ndarray, labels: np.ndarray, train: bool = True,
                      rng: np.random.Generator | None = None) -> tuple[float, np.ndarray]:
        """Full forward + backward pass; leaves gradients on the layers.

        Returns (mean loss, logits).
        """
        logits = self.forward(x, train=train, rng=rng)
        loss, dlogits = cross_entropy(logits, labels)
        grad = dlogits
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return loss, logits

    def predict(self, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
        out = np.empty(len(x), dtype=np.int64)
        for lo in range(0, len(x), batch_size):
            logits = self.forward(x[lo:lo + batch_size])
            out[lo:lo + batch_size] = np.argmax(logits, axis=1)
        return out

    # -- parameter plumbing -------------------------------------------------

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, layer in enumerate(self.layers):
            for name, arr in layer.params().items():
                out.append((f"layer{i}.{name}", arr))
        return out

    def gradients(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, layer in enumerate(self.layers):
            for name, arr in layer.grads().items():
                out.append((f"layer{i}.{name}", arr))
        return out

    def num_params(self) -> int:
        return sum(arr.size for _, arr in self.parameters())

    def set_parameters(self, values: dict[str, np.ndarray]) -> None:
        for i, layer in enumerate(self.layers):
            for name, arr in layer.params().items():
                arr[...] = values[f"layer{i}.{name}"]

    def count_flops(self) -> int:
        """Forward-pass FLOPs per example: two per multiply-add plus bias adds,
        convolution and dense layers only."""
        total = 0
        shape = self.input_shape
        for layer in self.layers:
            total += layer.flops(shape)
            shape = layer.out_shape(shape)
        return total

    def spec(self) -> dict:
        return {"input_shape": list(self.input_shape),
                "layers": [layer.spec() for layer in self.layers]}


def model_from_spec(spec: dict, seed: int = 0, dtype=np.float32) -> Model:
    layers = [layer_from_spec(d) for d in spec["layers"]]
    return Model(layers, tuple(spec["input_shape"]), seed=seed, dtype=dtype)


# ---------------------------------------------------------------------------
# Named architectures

def dense18_spec(n_features: int = 18, n_classes: int = 5) -> dict:
    """Small MLP over the engineered vector: 18 -> 64 -> 64 -> classes, with
    heavy dropout between the fully connected layers."""
    return {"input_shape": [n_features], "layers": [
        {"kind": "dense", "in_features": n_features, "out_features": 64},
        {"kind": "relu"},
        {"kind": "dropout", "rate": 0.5},
        {"kind": "dense", "in_features": 64, "out_features": 64},
        {"kind": "relu"},
        {"kind": "dropout", "rate": 0.5},
        {"kind": "dense", "in_features": 64, "out_features": n_classes},
    ]}


def mel_cnn2d_spec(n_mels: int = 128, n_frames: int = 188, n_classes: int = 5) -> dict:
    """Three small conv blocks over the log-mel image, then two 128-wide
    fully connected layers; ~2.9M FLOPs per example at the default shape."""
    flat = 16 * (n_mels // 16) * (((n_frames + 1) // 2) // 2 // 2 // 2)
    return {"input_shape": [1, n_mels, n_frames], "layers": [
        {"kind": "conv2d", "in_ch": 1, "out_ch": 5, "kernel": [3, 3], "stride": [2, 2],
         "pad": [1, 1]},
        {"kind": "relu"},
        {"kind": "maxpool2d", "pool": 2},
        {"kind": "conv2d", "in_ch": 5, "out_ch": 8, "kernel": [3, 3], "stride": [1, 1],
         "pad": [1, 1]},
        {"kind": "relu"},
        {"kind": "maxpool2d", "pool": 2},
        {"kind": "conv2d", "in_ch": 8, "out_ch": 16, "kernel": [3, 3], "stride": [1, 1],
         "pad": [1, 1]},
        {"kind": "relu"},
        {"kind": "maxpool2d", "pool": 2},
        {"kind": "flatten"},
        {"kind": "dense", "in_features": flat, "out_features": 128},
        {"kind": "relu"},
        {"kind": "dropout", "rate": 0.1},
        {"kind": "dense", "in_features": 128, "out_features": 128},
        {"kind": "relu"},
        {"kind": "dense", "in_features": 128, "out_features": n_classes},
    ]}


def raw_cnn1d_spec(n_samples: int = 32000, n_classes: int = 5) -> dict:
    """Strided 1-d front end over the waveform, two more conv blocks, then two
    128-wide fully connected layers."""
    l1 = (n_samples - 64) // 16 + 1
    l2 = l1 // 4
    l3 = l2 // 4
    flat = 32 * (l3 // 4)
    return {"input_shape": [1, n_samples], "layers": [
        {"kind": "conv1d", "in_ch": 1, "out_ch": 8, "kernel": 64, "stride": 16, "pad": 0},
        {"kind": "relu"},
        {"kind": "maxpool1d", "pool": 4},
        {"kind": "conv1d", "in_ch": 8, "out_ch": 16, "kernel": 9, "stride": 1, "pad": 4},
        {"kind": "relu"},
        {"kind": "maxpool1d", "pool": 4},
        {"kind": "conv1d", "in_ch": 16, "out_ch": 32, "kernel": 9, "stride": 1, "pad": 4},
        {"kind": "relu"},
        {"kind": "maxpool1d", "pool": 4},
        {"kind": "flatten"},
        {"kind": "dense", "in_features": flat, "out_features": 128},
        {"kind": "relu"},
        {"kind": "dropout", "rate": 0.1},
        {"kind": "dense", "in_features": 128, "out_features": 128},
        {"kind": "relu"},
        {"kind": "dense", "in_features": 128, "out_features": n_classes},
    ]}


ARCHITECTURES = {
    "dense18": dense18_spec,
    "mel_cnn2d": mel_cnn2d_spec,
    "raw_cnn1d": raw_cnn1d_spec,
}


def build_architecture(name: str, seed: int = 0, dtype=np.float32, **kwargs) -> Model:
    if name not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {name!r}; know {sorted(ARCHITECTURES)}")
    return model_from_spec(ARCHITECTURES[name](**kwargs), seed=seed, dtype=dtype)


# ---------------------------------------------------------------------------
# Gradient verification

def _decision_signature(model: Model) -> list[np.ndarray]:
    """The piecewise-linear 'branch' the last forward pass took: every ReLU
    sign pattern and pool winner."""
    sigs = []
    for layer in model.layers:
        mask = getattr(layer, "_mask", None)
        if mask is not None:
            sigs.append(np.asarray(mask))
        idx = getattr(layer, "_idx", None)
        if idx is not None:
            sigs.append(np.asarray(idx))
    return sigs


def grad_check(model: Model, x: np.ndarray, labels: np.ndarray, eps: float = 1e-5,
               max_entries_per_param: int = 8, seed: int = 0,
               zero_tol: float = 1e-7) -> float:
    """Compare backprop against central differences on sampled entries.

    Returns the worst relative error across the sampled entries; the model
    should be built with dtype float64 for this to be meaningful. Dropout is
    bypassed (eval-mode forward). Two kinds of entry are excluded: ones whose
    +/-eps evaluations land on different linear pieces (a ReLU flipping sign
    or a pool changing winner — no derivative exists to estimate there), and
    ones where both estimates are below zero_tol (differencing an O(1) loss
    cannot resolve gradients at that scale).
    """
    model.loss_and_grad(x, labels, train=False)
    analytic = {name: arr.copy() for name, arr in model.gradients()}
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, arr in model.parameters():
        flat = arr.reshape(-1)
        n_pick = min(max_entries_per_param, flat.size)
        picks = rng.choice(flat.size, size=n_pick, replace=False)
        for j in picks:
            orig = flat[j]
            flat[j] = orig + eps
            up, _ = cross_entropy(model.forward(x), labels)
            sig_up = [s.copy() for s in _decision_signature(model)]
            flat[j] = orig - eps
            down, _ = cross_entropy(model.forward(x), labels)
            sig_down = _decision_signature(model)
            flat[j] = orig
            if any(not np.array_equal(a, b) for a, b in zip(sig_up, sig_down)):
                continue
            numeric = (up - down) / (2.0 * eps)
            ana = float(analytic[name].reshape(-1)[j])
            if abs(numeric) < zero_tol and abs(ana) < zero_tol:
                continue
            denom = max(abs(numeric) + abs(ana), 1e-8)
            worst = max(worst, abs(numeric - ana) / denom)
    return worst


# ---------------------------------------------------------------------------
# Checkpoints

_MODEL_MAGIC = b"ILMD"
_MODEL_VERSION = 1


def save_model(model: Model, path, extra: dict | None = None) -> None:
    """Binary layout: magic, version, header length, JSON header, f32 parameter
    payloads in declaration order, crc32 of the payload."""
    params = model.parameters()
    header = {
        "version": _MODEL_VERSION,
        "spec": model.spec(),
        "seed": model.seed,
        "params": [{"name": n, "shape": list(a.shape)} for n, a in params],
        "extra": extra or {},
    }
    header_bytes = json.dumps(header).encode()
    payload = b"".join(np.ascontiguousarray(a, dtype="<f4").tobytes() for _, a in params)
    with open(path, "wb") as f:
        f.write(_MODEL_MAGIC)
        f.write(struct.pack("<BI", _MODEL_VERSION, len(header_bytes)))
        f.write(header_bytes)
        f.write(payload)
        f.write(struct.pack("<I", zlib.crc32(payload)))


def load_model(path, dtype=np.float32) -> tuple[Model, dict]:
    """Rebuild a model from a checkpoint; returns (model, extra metadata)."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != _MODEL_MAGIC:
        raise CorruptModelError(f"{path}: bad magic {blob[:4]!r}")
    version, header_len = struct.unpack("<BI", blob[4:9])
    if version != _MODEL_VERSION:
        raise CorruptModelError(f"{path}: unsupported version {version}")
    try:
        header = json.loads(blob[9:9 + header_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptModelError(f"{path}: unreadable header: {exc}") from None
    payload = blob[9 + header_len:-4]
    (crc,) = struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) != crc:
        raise CorruptModelError(f"{path}: checksum mismatch")

    model = model_from_spec(header["spec"], seed=header.get("seed", 0), dtype=dtype)
    values = {}
    offset = 0
    for entry in header["params"]:
        size = int(np.prod(entry["shape"])) if entry["shape"] else 1
        chunk = np.frombuffer(payload, dtype="<f4", count=size, offset=offset)
        values[entry["name"]] = chunk.reshape(entry["shape"])
        offset += 4 * size
    if offset != len(payload):
        raise CorruptModelError(f"{path}: payload size mismatch")
    model.set_parameters(values)
    return model, header.get("extra", {})
