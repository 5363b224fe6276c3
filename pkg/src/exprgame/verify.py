"""The two matching engines behind the game.

General play verifies one target class against a per-class probability
threshold; customized play matches the frame's feature embedding against
the player's seven registered templates by Euclidean distance. Template
sets are immutable once registered and pinned to the extracting model.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, RecaptureNeeded
from .labels import LABEL_NAMES, N_CLASSES, check_label

DEFAULT_THRESHOLD = 0.40

TEMPLATE_MAGIC = b"EXPT"
TEMPLATE_VERSION = 1


@dataclass(frozen=True)
class ThresholdTable:
    """Per-class acceptance thresholds, each in (0, 1)."""

    values: tuple = (DEFAULT_THRESHOLD,) * N_CLASSES

    def __post_init__(self):
        if len(self.values) != N_CLASSES:
            raise ContractError(f"need {N_CLASSES} thresholds")
        if any(not 0.0 < v < 1.0 for v in self.values):
            raise ContractError("thresholds must lie in (0, 1)")

    def __getitem__(self, label):
        return self.values[check_label(label)]

    @classmethod
    def from_json(cls, path):
        """{"Angry": 0.4, ...}; omitted classes keep the default."""
        with open(path) as fh:
            data = json.load(fh)
        unknown = set(data) - set(LABEL_NAMES)
        if unknown:
            raise ContractError(f"unknown class names in threshold file: {sorted(unknown)}")
        return cls(tuple(float(data.get(name, DEFAULT_THRESHOLD)) for name in LABEL_NAMES))


@dataclass(frozen=True)
class MatchDecision:
    matched: bool
    mode: str                                  # "verification" | "template"
    target_probability: float = None
    distances: tuple = None


@dataclass(frozen=True)
class UserTemplateSet:
    user_id: str
    model_id: str
    vectors: tuple                             # 7 feature vectors in label order

    def __post_init__(self):
        if len(self.vectors) != N_CLASSES:
            raise ContractError(f"template set needs {N_CLASSES} vectors")
        dims = {np.asarray(v).shape for v in self.vectors}
        if len(dims) != 1 or len(next(iter(dims))) != 1:
            raise ContractError("template vectors must share one 1-D shape")

    @property
    def dim(self):
        return np.asarray(self.vectors[0]).shape[0]


def verify_expression(probabilities, target, table: ThresholdTable) -> MatchDecision:
    """Matched iff the target class probability reaches its threshold (inclusive)."""
    p = np.asarray(probabilities, dtype=np.float64)
    if p.shape != (N_CLASSES,):
        raise ContractError(f"probability vector must have {N_CLASSES} entries")
    t = check_label(target)
    prob = float(p[t])
    return MatchDecision(matched=prob >= table[t], mode="verification",
                         target_probability=prob)


def face_valid(image) -> bool:
    """Desk-scale stand-in for a face detector.

    Requires usable dynamic range and the non-background mass to sit near
    the frame center; blank and corner-weighted captures fail.
    """
    img = np.asarray(image, dtype=np.float64)
    gray = img.mean(axis=0)
    if gray.max() - gray.min() < 0.15:
        return False
    border = np.concatenate([gray[0], gray[-1], gray[:, 0], gray[:, -1]])
    fg = np.abs(gray - np.median(border)) > 0.12
    if fg.mean() < 0.03:
        return False
    h, w = gray.shape
    rows, cols = np.nonzero(fg)
    r, c = rows.mean(), cols.mean()
    return (h / 4 <= r <= 3 * h / 4) and (w / 4 <= c <= 3 * w / 4)


def register_templates(user_id, images, model, validity=face_valid) -> UserTemplateSet:
    """Extract one template per class from 7 images in canonical label order.

    All-or-nothing: any image failing the validity predicate aborts the whole
    registration with the failing indices and stores nothing.
    """
    images = list(images)
    if len(images) != N_CLASSES:
        raise ContractError(f"exactly {N_CLASSES} images required, got {len(images)}")
    failed = [i for i, img in enumerate(images) if not validity(img)]
    if failed:
        raise RecaptureNeeded(failed)
    vectors = tuple(np.asarray(model.features_one(img), dtype=np.float32) for img in images)
    return UserTemplateSet(user_id=user_id, model_id=model.model_id_, vectors=vectors)


def classify_by_template(templates: UserTemplateSet, image, model):
    """Nearest template by Euclidean distance; ties go to the lowest class index."""
    if templates.model_id != model.model_id_:
        raise ContractError("template set was extracted with a different model")
    feats = np.asarray(model.features_one(image), dtype=np.float64)
    if feats.shape[0] != templates.dim:
        raise ContractError(
            f"feature dim {feats.shape[0]} != template dim {templates.dim}")
    dists = np.array([np.linalg.norm(feats - np.asarray(v, dtype=np.float64))
                      for v in templates.vectors])
    label = int(np.argmin(dists))          # argmin takes the first minimum
    return label, dists


class TemplateStore:
    """One binary file per user: model id + 7 float32 vectors."""

    def __init__(self, root):
        self.root = str(root)
        os.makedirs(self.root, exist_ok=True)

    def _path(self, user_id):
        return os.path.join(self.root, f"{user_id}.expt")

    def save(self, templates: UserTemplateSet) -> None:
        mid = templates.model_id.encode()
        with open(self._path(templates.user_id), "wb") as fh:
            fh.write(TEMPLATE_MAGIC)
            fh.write(struct.pack("<BH", TEMPLATE_VERSION, len(mid)))
            fh.write(mid)
            for v in templates.vectors:
                arr = np.ascontiguousarray(np.asarray(v, dtype="<f4"))
                fh.write(struct.pack("<I", arr.shape[0]))
                fh.write(arr.tobytes())

    def load(self, user_id) -> UserTemplateSet:
        path = self._path(user_id)
        if not os.path.exists(path):
            raise KeyError(user_id)
        with open(path, "rb") as fh:
            blob = fh.read()
        if blob[:4] != TEMPLATE_MAGIC:
            raise ContractError("not a template file")
        version, mid_len = struct.unpack_from("<BH", blob, 4)
        if version != TEMPLATE_VERSION:
            raise ContractError(f"unsupported template version {version}")
        pos = 7
        model_id = blob[pos:pos + mid_len].decode()
        pos += mid_len
        vectors = []
        for _ in range(N_CLASSES):
            (dim,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            vectors.append(np.frombuffer(blob, dtype="<f4", count=dim, offset=pos).copy())
            pos += 4 * dim
        return UserTemplateSet(user_id=user_id, model_id=model_id, vectors=tuple(vectors))

    def has(self, user_id) -> bool:
        return os.path.exists(self._path(user_id))
