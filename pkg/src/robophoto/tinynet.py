"""A tiny dense/convolutional network engine in numpy.

Sized for three small architectures: a 9-feature MLP, a face-crop CNN and a
layout CNN. Double precision throughout so finite-difference gradient checks
are meaningful. Models are immutable values: forward never mutates, train
returns a new model.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

MAGIC = b"TNET"
FORMAT_VERSION = 1


class ShapeError(ValueError):
    pass


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"loss became non-finite at epoch {epoch}")
        self.epoch = epoch


class ModelFormatError(ValueError):
    pass


class UnsupportedVersionError(ModelFormatError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # dense | conv2d | relu | leaky_relu | sigmoid | flatten
    in_units: int = 0
    out_units: int = 0
    in_channels: int = 0
    out_channels: int = 0
    filter_h: int = 0
    filter_w: int = 0
    stride: int = 1
    padding: str = "valid"  # conv2d only: valid | same

    def __post_init__(self):
        if self.kind == "dense" and (self.in_units <= 0 or self.out_units <= 0):
            raise ShapeError(f"dense layer needs positive unit counts: {self}")
        if self.kind == "conv2d":
            if min(self.in_channels, self.out_channels, self.filter_h, self.filter_w) <= 0:
                raise ShapeError(f"conv2d layer needs positive dims: {self}")
            if self.stride < 1:
                raise ShapeError(f"conv2d stride must be >= 1: {self}")
            if self.padding not in ("valid", "same"):
                raise ShapeError(f"unknown padding {self.padding!r}")


def dense(in_units: int, out_units: int) -> LayerSpec:
    return LayerSpec(kind="dense", in_units=in_units, out_units=out_units)


def conv2d(in_channels, out_channels, filter_h, filter_w, stride=1, padding="valid") -> LayerSpec:
    return LayerSpec(
        kind="conv2d",
        in_channels=in_channels,
        out_channels=out_channels,
        filter_h=filter_h,
        filter_w=filter_w,
        stride=stride,
        padding=padding,
    )


def relu() -> LayerSpec:
    return LayerSpec(kind="relu")


def leaky_relu() -> LayerSpec:
    return LayerSpec(kind="leaky_relu")


def sigmoid() -> LayerSpec:
    return LayerSpec(kind="sigmoid")


def flatten() -> LayerSpec:
    return LayerSpec(kind="flatten")


LEAKY_SLOPE = 0.01


@dataclass(frozen=True)
class NetworkModel:
    layers: tuple[LayerSpec, ...]
    weights: tuple[dict, ...]  # per-layer {"W": ..., "b": ...} or {}
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.layers) != len(self.weights):
            raise ShapeError("one weight dict per layer required")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.05
    optimizer: str = "sgd"  # sgd | momentum
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate < 0:
            raise ValueError(f"invalid training config {self}")


def _init_layer(spec: LayerSpec, rng: np.random.Generator) -> dict:
    if spec.kind == "dense":
        limit = np.sqrt(6.0 / (spec.in_units + spec.out_units))
        return {
            "W": rng.uniform(-limit, limit, size=(spec.in_units, spec.out_units)),
            "b": np.zeros(spec.out_units),
        }
    if spec.kind == "conv2d":
        fan_in = spec.in_channels * spec.filter_h * spec.filter_w
        fan_out = spec.out_channels * spec.filter_h * spec.filter_w
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return {
            "W": rng.uniform(
                -limit,
                limit,
                size=(spec.out_channels, spec.in_channels, spec.filter_h, spec.filter_w),
            ),
            "b": np.zeros(spec.out_channels),
        }
    return {}


def build_model(layers: Sequence[LayerSpec], seed: int = 0, metadata: Optional[dict] = None) -> NetworkModel:
    rng = np.random.default_rng(seed)
    weights = tuple(_init_layer(spec, rng) for spec in layers)
    meta = dict(metadata or {})
    meta.setdefault("init_seed", seed)
    return NetworkModel(layers=tuple(layers), weights=weights, metadata=meta)


def num_parameters(model: NetworkModel) -> int:
    return sum(int(p.size) for w in model.weights for p in w.values())


def _conv_geometry(h: int, w: int, spec: LayerSpec):
    """Output size and (top, bottom, left, right) padding for one conv layer."""
    s, fh, fw = spec.stride, spec.filter_h, spec.filter_w
    if spec.padding == "same":
        out_h = -(-h // s)
        out_w = -(-w // s)
        pad_h = max((out_h - 1) * s + fh - h, 0)
        pad_w = max((out_w - 1) * s + fw - w, 0)
        pads = (pad_h // 2, pad_h - pad_h // 2, pad_w // 2, pad_w - pad_w // 2)
    else:
        if h < fh or w < fw:
            raise ShapeError(f"input {h}x{w} smaller than filter {fh}x{fw}")
        out_h = (h - fh) // s + 1
        out_w = (w - fw) // s + 1
        pads = (0, 0, 0, 0)
    return out_h, out_w, pads


def conv_output_shape(in_shape: tuple[int, int, int], spec: LayerSpec) -> tuple[int, int, int]:
    c, h, w = in_shape
    if c != spec.in_channels:
        raise ShapeError(f"expected {spec.in_channels} channels, got {c}")
    out_h, out_w, _ = _conv_geometry(h, w, spec)
    return (spec.out_channels, out_h, out_w)


def _im2col(x: np.ndarray, spec: LayerSpec):
    n, c, h, w = x.shape
    out_h, out_w, (pt, pb, pl, pr) = _conv_geometry(h, w, spec)
    if pt or pb or pl or pr:
        x = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr)))
    s, fh, fw = spec.stride, spec.filter_h, spec.filter_w
    cols = np.empty((n, c, fh, fw, out_h, out_w), dtype=x.dtype)
    for i in range(fh):
        for j in range(fw):
            cols[:, :, i, j] = x[:, :, i : i + s * out_h : s, j : j + s * out_w : s]
    return cols.reshape(n, c * fh * fw, out_h * out_w), (out_h, out_w, (pt, pb, pl, pr))


def _col2im(dcols: np.ndarray, x_shape, spec: LayerSpec, geom):
    n, c, h, w = x_shape
    out_h, out_w, (pt, pb, pl, pr) = geom
    s, fh, fw = spec.stride, spec.filter_h, spec.filter_w
    dcols = dcols.reshape(n, c, fh, fw, out_h, out_w)
    dx = np.zeros((n, c, h + pt + pb, w + pl + pr))
    for i in range(fh):
        for j in range(fw):
            dx[:, :, i : i + s * out_h : s, j : j + s * out_w : s] += dcols[:, :, i, j]
    return dx[:, :, pt : pt + h, pl : pl + w]


def _layer_forward(idx: int, spec: LayerSpec, params: dict, x: np.ndarray):
    if spec.kind == "dense":
        if x.ndim != 2 or x.shape[1] != spec.in_units:
            raise ShapeError(f"layer {idx} (dense) expected (*, {spec.in_units}), got {x.shape}")
        return x @ params["W"] + params["b"], x
    if spec.kind == "conv2d":
        if x.ndim != 4 or x.shape[1] != spec.in_channels:
            raise ShapeError(
                f"layer {idx} (conv2d) expected (*, {spec.in_channels}, H, W), got {x.shape}"
            )
        cols, geom = _im2col(x, spec)
        wmat = params["W"].reshape(spec.out_channels, -1)
        out = np.einsum("ok,nkp->nop", wmat, cols) + params["b"][None, :, None]
        out_h, out_w, _ = geom
        return out.reshape(x.shape[0], spec.out_channels, out_h, out_w), (x.shape, cols, geom)
    if spec.kind == "relu":
        return np.maximum(x, 0.0), x
    if spec.kind == "leaky_relu":
        return np.where(x > 0, x, LEAKY_SLOPE * x), x
    if spec.kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-x)), None  # cache is the output, filled by caller
    if spec.kind == "flatten":
        return x.reshape(x.shape[0], -1), x.shape
    raise ShapeError(f"layer {idx}: unknown kind {spec.kind!r}")


def _layer_backward(spec: LayerSpec, params: dict, cache, out, dy: np.ndarray):
    if spec.kind == "dense":
        x = cache
        return dy @ params["W"].T, {"W": x.T @ dy, "b": dy.sum(axis=0)}
    if spec.kind == "conv2d":
        x_shape, cols, geom = cache
        n = dy.shape[0]
        dy_mat = dy.reshape(n, spec.out_channels, -1)
        wmat = params["W"].reshape(spec.out_channels, -1)
        dW = np.einsum("nop,nkp->ok", dy_mat, cols).reshape(params["W"].shape)
        db = dy_mat.sum(axis=(0, 2))
        dcols = np.einsum("ok,nop->nkp", wmat, dy_mat)
        return _col2im(dcols, x_shape, spec, geom), {"W": dW, "b": db}
    if spec.kind == "relu":
        return dy * (cache > 0), {}
    if spec.kind == "leaky_relu":
        return dy * np.where(cache > 0, 1.0, LEAKY_SLOPE), {}
    if spec.kind == "sigmoid":
        return dy * out * (1.0 - out), {}
    if spec.kind == "flatten":
        return dy.reshape(cache), {}
    raise ShapeError(f"unknown kind {spec.kind!r}")


def _forward_all(model: NetworkModel, x: np.ndarray):
    """Batched forward through every layer; returns (outputs per layer, caches)."""
    outs, caches = [], []
    for idx, (spec, params) in enumerate(zip(model.layers, model.weights)):
        x, cache = _layer_forward(idx, spec, params, x)
        outs.append(x)
        caches.append(cache)
    return outs, caches


def forward(model: NetworkModel, x: np.ndarray) -> float:
    """Run one input through the network; returns the scalar sigmoid output."""
    x = np.asarray(x, dtype=np.float64)
    outs, _ = _forward_all(model, x[None, ...])
    out = outs[-1]
    if out.shape != (1, 1):
        raise ShapeError(f"expected scalar output, got shape {out.shape}")
    return float(out[0, 0])


def forward_batch(model: NetworkModel, x: np.ndarray) -> np.ndarray:
    outs, _ = _forward_all(model, np.asarray(x, dtype=np.float64))
    return outs[-1][:, 0]


_EPS = 1e-12


def _bce(p: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(p, _EPS, 1.0 - _EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def loss_and_gradients(model: NetworkModel, x: np.ndarray, y: np.ndarray):
    """Mean binary cross-entropy and per-layer weight gradients on a batch.

    When the final layer is a sigmoid, backprop starts from the numerically
    stable (p - y) gradient at its pre-activation.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    outs, caches = _forward_all(model, x)
    p = outs[-1].reshape(-1)
    loss = _bce(p, y)
    n = len(y)

    grads: list[dict] = [{} for _ in model.layers]
    last = len(model.layers) - 1
    if model.layers[last].kind == "sigmoid":
        dy = ((p - y) / n).reshape(outs[-1].shape)
        start = last - 1
    else:
        pc = np.clip(p, _EPS, 1.0 - _EPS)
        dy = ((pc - y) / (pc * (1.0 - pc)) / n).reshape(outs[-1].shape)
        start = last
    for idx in range(start, -1, -1):
        spec, params = model.layers[idx], model.weights[idx]
        dy, g = _layer_backward(spec, params, caches[idx], outs[idx], dy)
        grads[idx] = g
    return loss, grads


def train(model: NetworkModel, samples, config: TrainConfig) -> tuple[NetworkModel, list[float]]:
    """Mini-batch training with BCE loss. Deterministic for a fixed seed."""
    xs = np.stack([np.asarray(x, dtype=np.float64) for x, _ in samples])
    ys = np.array([float(y) for _, y in samples])
    if len(xs) == 0:
        raise ValueError("no training samples")
    if not np.all((ys == 0.0) | (ys == 1.0)):
        raise ValueError("labels must be 0 or 1")

    weights = [{k: v.copy() for k, v in w.items()} for w in model.weights]
    velocity = [{k: np.zeros_like(v) for k, v in w.items()} for w in weights]
    work = NetworkModel(layers=model.layers, weights=tuple(weights), metadata=model.metadata)
    rng = np.random.default_rng(config.seed)
    history: list[float] = []
    n = len(xs)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grads = loss_and_gradients(work, xs[idx], ys[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            total += loss * len(idx)
            for layer_w, layer_v, layer_g in zip(weights, velocity, grads):
                for key, g in layer_g.items():
                    if config.optimizer == "momentum":
                        layer_v[key] = config.momentum * layer_v[key] - config.learning_rate * g
                        layer_w[key] += layer_v[key]
                    else:
                        layer_w[key] -= config.learning_rate * g
        history.append(total / n)
    meta = dict(model.metadata)
    meta["epochs_trained"] = meta.get("epochs_trained", 0) + config.epochs
    meta["train_seed"] = config.seed
    return replace(work, metadata=meta), history


def _loss_only(model: NetworkModel, weights, x: np.ndarray, y: np.ndarray) -> np.floating:
    """Forward pass and BCE using the given weight list, preserving dtype."""
    for idx, (spec, params) in enumerate(zip(model.layers, weights)):
        x, _ = _layer_forward(idx, spec, params, x)
    p = np.clip(x.reshape(-1), _EPS, 1.0 - _EPS)
    return -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))


def gradient_check(model: NetworkModel, sample, epsilon: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    The finite differences run in extended precision so that round-off in the
    loss difference stays below the comparison tolerance even for parameters
    with very small gradients.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError(f"epsilon {epsilon} outside [1e-7, 1e-3]")
    x, y = sample
    x = np.asarray(x, dtype=np.float64)[None, ...]
    y = np.array([float(y)])
    _, grads = loss_and_gradients(model, x, y)

    xl = x.astype(np.longdouble)
    yl = y.astype(np.longdouble)
    eps = np.longdouble(epsilon)
    weights = [
        {k: v.astype(np.longdouble) for k, v in w.items()} for w in model.weights
    ]

    max_err = 0.0
    for layer_idx, layer_w in enumerate(weights):
        for key, arr in layer_w.items():
            flat = arr.reshape(-1)
            g_analytic = grads[layer_idx][key].reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                lp = _loss_only(model, weights, xl, yl)
                flat[i] = orig - eps
                lm = _loss_only(model, weights, xl, yl)
                flat[i] = orig
                g_num = float((lp - lm) / (2.0 * eps))
                denom = max(abs(g_analytic[i]), abs(g_num), 1e-12)
                err = abs(g_analytic[i] - g_num) / denom
                if abs(g_analytic[i]) < 1e-10 and abs(g_num) < 1e-10:
                    err = abs(g_analytic[i] - g_num)  # both ~0: absolute scale
                max_err = max(max_err, err)
    return max_err


def _spec_to_dict(spec: LayerSpec) -> dict:
    return {k: getattr(spec, k) for k in LayerSpec.__dataclass_fields__}


def save_model(model: NetworkModel, path) -> None:
    header = {
        "format_version": FORMAT_VERSION,
        "layers": [_spec_to_dict(s) for s in model.layers],
        "metadata": model.metadata,
        "params": [sorted(w.keys()) for w in model.weights],
        "shapes": [{k: list(w[k].shape) for k in sorted(w.keys())} for w in model.weights],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC + str(FORMAT_VERSION).encode("ascii"))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for w in model.weights:
            for key in sorted(w.keys()):
                fh.write(w[key].astype("<f8").tobytes())


def load_model(path) -> NetworkModel:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC) + 1)
        if magic[: len(MAGIC)] != MAGIC:
            raise ModelFormatError(f"bad magic {magic!r}")
        try:
            version = int(magic[len(MAGIC) :])
        except ValueError:
            raise ModelFormatError(f"bad version marker {magic!r}") from None
        if version != FORMAT_VERSION:
            raise UnsupportedVersionError(f"model format version {version} not supported")
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        layers = tuple(LayerSpec(**d) for d in header["layers"])
        weights = []
        for keys, shapes in zip(header["params"], header["shapes"]):
            w = {}
            for key in keys:
                shape = tuple(shapes[key])
                count = int(np.prod(shape)) if shape else 1
                raw = fh.read(count * 8)
                if len(raw) != count * 8:
                    raise ModelFormatError("truncated weight blob")
                w[key] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
            weights.append(w)
    return NetworkModel(layers=layers, weights=tuple(weights), metadata=header["metadata"])
