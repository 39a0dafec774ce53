"""Domain types and dataset handling shared by the whole pipeline.

All types are immutable after construction; every operation here is a pure
function, so values can be shared freely across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .pgm import read_pgm

MIN_FACE_SIDE = 30

# Discrete likelihood levels arriving from an external feature provider are
# mapped to fixed numeric values at ingest.
LIKELIHOOD_LEVELS = {
    "VERY_UNLIKELY": 0.0,
    "UNLIKELY": 0.25,
    "POSSIBLE": 0.5,
    "LIKELY": 0.75,
    "VERY_LIKELY": 1.0,
}

FEATURE_NAMES = (
    "roll",
    "pitch",
    "yaw",
    "joy",
    "sorrow",
    "anger",
    "surprise",
    "exposure",
    "blur",
)


class DatasetError(ValueError):
    pass


class ParseError(DatasetError):
    pass


class ValidationError(DatasetError):
    pass


class NoFacesError(DatasetError):
    pass


class Label(str, Enum):
    GOOD = "Good"
    BAD = "Bad"

    @classmethod
    def parse(cls, value: str) -> "Label":
        v = value.strip().lower()
        if v == "good":
            return cls.GOOD
        if v == "bad":
            return cls.BAD
        raise ValidationError(f"unknown label {value!r}")


class FaceCountCategory(Enum):
    ONE = "one"
    TWO = "two"
    THREE_PLUS = "three_plus"


@dataclass(frozen=True)
class BoundingBox:
    x_tl: int
    y_tl: int
    x_br: int
    y_br: int

    def __post_init__(self):
        if not (0 <= self.x_tl < self.x_br and 0 <= self.y_tl < self.y_br):
            raise ValidationError(f"degenerate bounding box {self}")

    @property
    def width(self) -> int:
        return self.x_br - self.x_tl

    @property
    def height(self) -> int:
        return self.y_br - self.y_tl

    @property
    def area(self) -> int:
        return self.width * self.height


def _clamp01(v: float) -> float:
    return min(1.0, max(0.0, float(v)))


@dataclass(frozen=True)
class FaceFeatures:
    """The 9 scalar inputs to the face quality network.

    Angles are degrees in [-180, 180]; likelihoods and image scores live in
    [0, 1] (clamped at construction).
    """

    roll: float
    pitch: float
    yaw: float
    joy: float
    sorrow: float
    anger: float
    surprise: float
    exposure: float
    blur: float

    def __post_init__(self):
        for name in ("roll", "pitch", "yaw"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or not -180.0 <= v <= 180.0:
                raise ValidationError(f"{name}={v} outside [-180, 180]")
            object.__setattr__(self, name, v)
        for name in ("joy", "sorrow", "anger", "surprise", "exposure", "blur"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValidationError(f"{name} is not finite")
            object.__setattr__(self, name, _clamp01(v))

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES], dtype=np.float64)


@dataclass(frozen=True)
class FaceObservation:
    bbox: BoundingBox
    features: FaceFeatures
    face_image: Optional[np.ndarray] = None  # 8-bit grayscale, HxW
    label: Optional[Label] = None
    score: Optional[float] = None

    def __post_init__(self):
        if self.face_image is not None:
            h, w = self.face_image.shape
            if h < MIN_FACE_SIDE or w < MIN_FACE_SIDE:
                raise ValidationError(f"face image {w}x{h} below {MIN_FACE_SIDE}x{MIN_FACE_SIDE}")
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"face score {self.score} outside [0, 1]")

    def with_score(self, score: float) -> "FaceObservation":
        return replace(self, score=float(score))


@dataclass(frozen=True)
class PictureRecord:
    picture_id: str
    burst_id: str
    width: int
    height: int
    faces: tuple[FaceObservation, ...]
    label: Optional[Label] = None

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise ValidationError(f"degenerate image size {self.width}x{self.height}")
        if not self.burst_id:
            raise ValidationError("empty burst_id")
        object.__setattr__(self, "faces", tuple(self.faces))
        for f in self.faces:
            b = f.bbox
            if b.x_br > self.width or b.y_br > self.height:
                raise ValidationError(
                    f"face bbox {b} outside {self.width}x{self.height} image"
                )

    @property
    def center(self) -> tuple[float, float]:
        return (self.width / 2.0, self.height / 2.0)


@dataclass(frozen=True)
class Dataset:
    records: tuple[PictureRecord, ...]
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        ids = [r.picture_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate picture_id in dataset")

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class ValidationResult:
    dataset: Dataset
    dropped_faces: int
    dropped_records: int


def face_count_category(picture: PictureRecord) -> FaceCountCategory:
    """Bucket a picture by its face count: 1, 2, or 3+."""
    n = len(picture.faces)
    if n == 0:
        raise NoFacesError(f"picture {picture.picture_id} has no faces")
    if n == 1:
        return FaceCountCategory.ONE
    if n == 2:
        return FaceCountCategory.TWO
    return FaceCountCategory.THREE_PLUS


def _parse_likelihood(value) -> float:
    if isinstance(value, str):
        try:
            return LIKELIHOOD_LEVELS[value]
        except KeyError:
            raise ValidationError(f"unknown likelihood level {value!r}") from None
    return float(value)


def _face_from_dict(d: dict, base_dir: Optional[Path]) -> FaceObservation:
    bbox = BoundingBox(**{k: int(d["bbox"][k]) for k in ("x_tl", "y_tl", "x_br", "y_br")})
    raw = d["features"]
    feats = {}
    for name in FEATURE_NAMES:
        v = raw[name]
        if name in ("joy", "sorrow", "anger", "surprise"):
            feats[name] = _parse_likelihood(v)
        else:
            feats[name] = float(v)
    features = FaceFeatures(**feats)
    image = None
    path = d.get("face_image_path")
    if path:
        p = Path(path)
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        image = read_pgm(p)
    label = Label.parse(d["label"]) if d.get("label") else None
    score = d.get("score")
    return FaceObservation(
        bbox=bbox,
        features=features,
        face_image=image,
        label=label,
        score=None if score is None else float(score),
    )


def _record_from_dict(d: dict, base_dir: Optional[Path]) -> tuple[PictureRecord, int]:
    """Build a record, silently dropping undersized faces. Returns (record, n_dropped)."""
    dropped = 0
    faces = []
    for fd in d.get("faces", []):
        try:
            faces.append(_face_from_dict(fd, base_dir))
        except ValidationError:
            dropped += 1
    rec = PictureRecord(
        picture_id=str(d["picture_id"]),
        burst_id=str(d["burst_id"]),
        width=int(d["width"]),
        height=int(d["height"]),
        faces=tuple(faces),
        label=Label.parse(d["label"]) if d.get("label") else None,
    )
    return rec, dropped


def read_records_jsonl(path) -> list[dict]:
    """Parse a JSON Lines dataset file into raw dicts."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise ParseError(f"{path}:{lineno}: malformed JSON line: {e}") from None
    return records


def validate_dataset(
    raw_records: Sequence[dict],
    *,
    keep_faceless: bool = False,
    provenance: str = "",
    base_dir: Optional[Path] = None,
) -> ValidationResult:
    """Validate raw records into a Dataset.

    Faces violating invariants (undersized images, bad boxes) are dropped and
    counted; records that are irreparably malformed are dropped and counted.
    Faceless pictures survive only with keep_faceless (the score-zero path
    still needs them).
    """
    records: list[PictureRecord] = []
    seen_ids: set[str] = set()
    dropped_faces = 0
    dropped_records = 0
    for d in raw_records:
        if isinstance(d, PictureRecord):
            d = record_to_dict(d)
        pid = str(d.get("picture_id", ""))
        if pid in seen_ids:
            raise ValidationError(f"duplicate picture_id {pid!r}")
        try:
            rec, n_dropped = _record_from_dict(d, base_dir)
        except (ValidationError, KeyError, TypeError, ValueError):
            dropped_records += 1
            continue
        dropped_faces += n_dropped
        if not rec.faces and not keep_faceless:
            dropped_records += 1
            continue
        seen_ids.add(pid)
        records.append(rec)
    return ValidationResult(
        dataset=Dataset(records=tuple(records), provenance=provenance),
        dropped_faces=dropped_faces,
        dropped_records=dropped_records,
    )


def face_to_dict(face: FaceObservation) -> dict:
    d = {
        "bbox": {
            "x_tl": face.bbox.x_tl,
            "y_tl": face.bbox.y_tl,
            "x_br": face.bbox.x_br,
            "y_br": face.bbox.y_br,
        },
        "features": {n: getattr(face.features, n) for n in FEATURE_NAMES},
    }
    if face.label is not None:
        d["label"] = face.label.value
    if face.score is not None:
        d["score"] = face.score
    return d


def record_to_dict(rec: PictureRecord) -> dict:
    d = {
        "picture_id": rec.picture_id,
        "burst_id": rec.burst_id,
        "width": rec.width,
        "height": rec.height,
        "faces": [face_to_dict(f) for f in rec.faces],
    }
    if rec.label is not None:
        d["label"] = rec.label.value
    return d


def write_dataset_jsonl(dataset: Dataset, path) -> None:
    """Emit a dataset as JSON Lines (UTF-8, LF). face_image rasters are not re-emitted."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in dataset.records:
            fh.write(json.dumps(record_to_dict(rec), sort_keys=True))
            fh.write("\n")


def split_dataset(
    dataset: Dataset, ratios: tuple[float, float, float], seed: int
) -> tuple[Dataset, Dataset, Dataset]:
    """Deterministic train/test/validation split, atomic in bursts.

    All pictures of one burst land in the same partition so near-identical
    burst frames never leak across splits.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios {ratios} do not sum to 1")
    bursts: dict[str, list[PictureRecord]] = {}
    order: list[str] = []
    for rec in dataset.records:
        if rec.burst_id not in bursts:
            bursts[rec.burst_id] = []
            order.append(rec.burst_id)
        bursts[rec.burst_id].append(rec)
    rng = np.random.default_rng(np.uint64(seed))
    perm = rng.permutation(len(order))
    shuffled = [order[i] for i in perm]

    n = len(dataset.records)
    target_train = ratios[0] * n
    target_test = ratios[1] * n
    parts: tuple[list[PictureRecord], ...] = ([], [], [])
    for bid in shuffled:
        group = bursts[bid]
        if len(parts[0]) < target_train:
            parts[0].extend(group)
        elif len(parts[1]) < target_test:
            parts[1].extend(group)
        else:
            parts[2].extend(group)
    return tuple(
        Dataset(records=tuple(p), provenance=dataset.provenance) for p in parts
    )  # type: ignore[return-value]
