"""Face quality classifiers: a 9-feature MLP and a CNN over 40x30 crops."""

from __future__ import annotations

from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from . import tinynet
from .core import Dataset, FaceObservation, Label, MIN_FACE_SIDE
from .tinynet import NetworkModel, TrainConfig

FACE_CROP_W = 40
FACE_CROP_H = 30


class UndersizedFaceError(ValueError):
    pass


class MissingInputError(ValueError):
    pass


def build_face_ann(seed: int = 0) -> NetworkModel:
    """MLP 9 -> 32 -> 64 -> 64 -> 32 -> 16 -> 1 with ReLU hiddens and sigmoid output."""
    layers = [tinynet.dense(9, 32), tinynet.relu()]
    for a, b in ((32, 64), (64, 64), (64, 32), (32, 16)):
        layers += [tinynet.dense(a, b), tinynet.relu()]
    layers += [tinynet.dense(16, 1), tinynet.sigmoid()]
    return tinynet.build_model(layers, seed=seed, metadata={"architecture": "face_ann"})


def build_face_cnn(seed: int = 0) -> NetworkModel:
    """CNN over 1x30x40 crops: five 3x3/stride-2 convs then a deep MLP head.

    Five stride-2 valid convolutions cannot fit a 30x40 input, so the convs
    use "same" zero padding (sizes 15x20 -> 8x10 -> 4x5 -> 2x3 -> 1x2,
    flatten length 192*1*2 = 384).
    """
    layers = []
    channels = [1, 96, 96, 96, 192, 192]
    shape = (1, FACE_CROP_H, FACE_CROP_W)
    for cin, cout in zip(channels, channels[1:]):
        spec = tinynet.conv2d(cin, cout, 3, 3, stride=2, padding="same")
        shape = tinynet.conv_output_shape(shape, spec)
        layers += [spec, tinynet.relu()]
    layers.append(tinynet.flatten())
    flat = int(np.prod(shape))
    widths = [100, 200, 400, 800, 400, 200, 10]
    prev = flat
    for w in widths:
        layers += [tinynet.dense(prev, w), tinynet.relu()]
        prev = w
    layers += [tinynet.dense(prev, 1), tinynet.sigmoid()]
    return tinynet.build_model(
        layers,
        seed=seed,
        metadata={"architecture": "face_cnn", "conv_padding": "same", "flatten_length": flat},
    )


def _resample_bilinear(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Corner-aligned bilinear resample of a 2-D float image."""
    in_h, in_w = image.shape
    ys = np.linspace(0.0, in_h - 1.0, out_h) if out_h > 1 else np.zeros(1)
    xs = np.linspace(0.0, in_w - 1.0, out_w) if out_w > 1 else np.zeros(1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    img = image.astype(np.float64)
    top = img[np.ix_(y0, x0)] * (1 - wx) + img[np.ix_(y0, x1)] * wx
    bot = img[np.ix_(y1, x0)] * (1 - wx) + img[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bot * wy


def preprocess_face(face_image: np.ndarray, bbox=None) -> np.ndarray:
    """Crop to bbox, resample to 40x30 and scale intensities into [0, 1].

    Returns a 1x30x40 tensor. Crops below 30x30 are rejected.
    """
    crop = face_image
    if bbox is not None:
        crop = face_image[bbox.y_tl : bbox.y_br, bbox.x_tl : bbox.x_br]
    h, w = crop.shape
    if h < MIN_FACE_SIDE or w < MIN_FACE_SIDE:
        raise UndersizedFaceError(f"face crop {w}x{h} below {MIN_FACE_SIDE}x{MIN_FACE_SIDE}")
    resized = _resample_bilinear(crop, FACE_CROP_H, FACE_CROP_W)
    return (resized / 255.0)[None, :, :]


def standardize_features(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and std over a training matrix (std floored at 1e-9)."""
    mean = vectors.mean(axis=0)
    std = np.maximum(vectors.std(axis=0), 1e-9)
    return mean, std


def _ann_input(model: NetworkModel, obs: FaceObservation) -> np.ndarray:
    v = obs.features.as_vector()
    mean = model.metadata.get("feature_mean")
    std = model.metadata.get("feature_std")
    if mean is not None and std is not None:
        v = (v - np.asarray(mean)) / np.asarray(std)
    return v


def score_face(model: NetworkModel, obs: FaceObservation) -> float:
    """Quality score in [0, 1] for one observation; picks input by model kind."""
    arch = model.metadata.get("architecture", "")
    if arch == "face_cnn":
        if obs.face_image is None:
            raise MissingInputError("face_cnn scoring needs a face image")
        x = preprocess_face(obs.face_image)
    else:
        x = _ann_input(model, obs)
    return tinynet.forward(model, x)


def score_observation(model: NetworkModel, obs: FaceObservation) -> FaceObservation:
    return obs.with_score(score_face(model, obs))


def train_face_ann(
    faces: Sequence[FaceObservation], config: TrainConfig, seed: int = 0
) -> tuple[NetworkModel, list[float]]:
    """Train the feature MLP on labeled faces; z-scoring constants go into metadata."""
    labeled = [f for f in faces if f.label is not None]
    if not labeled:
        raise ValueError("no labeled faces")
    vectors = np.stack([f.features.as_vector() for f in labeled])
    mean, std = standardize_features(vectors)
    model = build_face_ann(seed=seed)
    model = replace(
        model,
        metadata={**model.metadata, "feature_mean": mean.tolist(), "feature_std": std.tolist()},
    )
    samples = [
        ((v - mean) / std, 1.0 if f.label is Label.GOOD else 0.0)
        for v, f in zip(vectors, labeled)
    ]
    return tinynet.train(model, samples, config)


def train_face_cnn(
    faces: Sequence[FaceObservation], config: TrainConfig, seed: int = 0
) -> tuple[NetworkModel, list[float]]:
    labeled = [f for f in faces if f.label is not None and f.face_image is not None]
    if not labeled:
        raise ValueError("no labeled faces with images")
    samples = [
        (preprocess_face(f.face_image), 1.0 if f.label is Label.GOOD else 0.0) for f in labeled
    ]
    return tinynet.train(build_face_cnn(seed=seed), samples, config)


def evaluate_face_model(model: NetworkModel, faces: Sequence[FaceObservation]) -> float:
    """Fraction of labeled faces where (score >= 0.5) agrees with the label."""
    labeled = [f for f in faces if f.label is not None]
    if not labeled:
        raise ValueError("no labeled faces to evaluate")
    correct = 0
    for f in labeled:
        pred_good = score_face(model, f) >= 0.5
        correct += pred_good == (f.label is Label.GOOD)
    return correct / len(labeled)


def dataset_faces(dataset: Dataset) -> list[FaceObservation]:
    return [f for rec in dataset.records for f in rec.faces]
