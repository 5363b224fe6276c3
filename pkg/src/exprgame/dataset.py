"""Manifest-based corpus management.

A manifest is an ordered list of labeled sample records plus derived
per-class counts, persisted as JSON:
{"schema": 1, "id": ..., "records": [{"path", "label", "source",
"user_id"?, "confidence"?, "ts"}]}. Image payloads live as PNG files under
a content-addressed store directory; paths are unique within a manifest.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ContractError
from .imgio import load_png, save_png
from .labels import N_CLASSES, check_label

SCHEMA_VERSION = 1
SOURCES = ("seed", "harvest")


@dataclass(frozen=True)
class SampleRecord:
    path: str
    label: int
    source: str = "seed"
    user_id: Optional[str] = None
    confidence: Optional[float] = None
    ts: float = 0.0

    def __post_init__(self):
        check_label(self.label)
        if self.source not in SOURCES:
            raise ContractError(f"source must be one of {SOURCES}")
        if (self.confidence is not None) != (self.source == "harvest"):
            raise ContractError("confidence present iff source == 'harvest'")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ContractError("confidence outside [0, 1]")


@dataclass(frozen=True)
class DatasetManifest:
    dataset_id: str
    records: tuple = ()

    def __post_init__(self):
        paths = [r.path for r in self.records]
        if len(set(paths)) != len(paths):
            raise ContractError("manifest paths must be unique")

    def __len__(self):
        return len(self.records)

    @property
    def class_counts(self):
        counts = [0] * N_CLASSES
        for r in self.records:
            counts[r.label] += 1
        return tuple(counts)

    def with_record(self, record: SampleRecord) -> "DatasetManifest":
        if any(r.path == record.path for r in self.records):
            raise ContractError(f"duplicate path {record.path!r}")
        return replace(self, records=self.records + (record,))


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ContractError("train fraction must lie in (0, 1)")


def class_counts(manifest: DatasetManifest):
    """Per-class record tallies in canonical label order."""
    return manifest.class_counts


def _per_class_indices(manifest):
    by_class = [[] for _ in range(N_CLASSES)]
    for i, r in enumerate(manifest.records):
        by_class[r.label].append(i)
    return by_class


def stratified_split(manifest: DatasetManifest, cfg: SplitConfig):
    """Seeded per-class split; the train side takes round-half-up(fraction * count)."""
    by_class = _per_class_indices(manifest)
    if any(not idx for idx in by_class):
        raise ContractError("every class must be non-empty for a stratified split")
    rng = np.random.default_rng(cfg.seed)
    train_idx, test_idx = [], []
    for idx in by_class:
        order = rng.permutation(len(idx))
        n_train = int(math.floor(cfg.train_fraction * len(idx) + 0.5))
        chosen = [idx[o] for o in order]
        train_idx += chosen[:n_train]
        test_idx += chosen[n_train:]
    train = DatasetManifest(manifest.dataset_id + "-train",
                            tuple(manifest.records[i] for i in sorted(train_idx)))
    test = DatasetManifest(manifest.dataset_id + "-test",
                           tuple(manifest.records[i] for i in sorted(test_idx)))
    return train, test


def balanced_subset(manifest: DatasetManifest, seed: int = 0) -> DatasetManifest:
    """Downsample every class (seeded, without replacement) to the minimum class count."""
    by_class = _per_class_indices(manifest)
    if any(not idx for idx in by_class):
        raise ContractError("every class must be non-empty for a balanced subset")
    m = min(len(idx) for idx in by_class)
    rng = np.random.default_rng(seed)
    keep = []
    for idx in by_class:
        pick = rng.choice(len(idx), size=m, replace=False)
        keep += [idx[p] for p in pick]
    return DatasetManifest(manifest.dataset_id + "-balanced",
                           tuple(manifest.records[i] for i in sorted(keep)))


class ManifestStore:
    """Single-writer store: a manifest plus its content-addressed image directory."""

    def __init__(self, root, dataset_id="harvest"):
        self.root = str(root)
        self.manifest_path = os.path.join(self.root, "manifest.json")
        os.makedirs(os.path.join(self.root, "images"), exist_ok=True)
        if os.path.exists(self.manifest_path):
            self.manifest = load_manifest(self.manifest_path)
        else:
            self.manifest = DatasetManifest(dataset_id)

    def record_harvest(self, image, target: int, confidence: float, user_id, ts: float):
        """Persist a matched frame under its target label; no mutation on failure."""
        label = check_label(target)
        if not 0.0 <= confidence <= 1.0:
            raise ContractError("confidence outside [0, 1]")
        arr = np.asarray(image)
        digest = hashlib.sha256(arr.tobytes()).hexdigest()[:20]
        rel = os.path.join("images", f"{digest}.png")
        record = SampleRecord(path=rel, label=label, source="harvest",
                              user_id=user_id, confidence=float(confidence), ts=float(ts))
        updated = self.manifest.with_record(record)   # raises on duplicates, pre-write
        save_png(arr, os.path.join(self.root, rel))
        self.manifest = updated
        save_manifest(self.manifest, self.manifest_path)
        return record

    def load_arrays(self, manifest=None):
        m = manifest if manifest is not None else self.manifest
        return load_arrays(m, self.root)


def record_harvest(store: ManifestStore, image, target, confidence, user_id, ts):
    return store.record_harvest(image, target, confidence, user_id, ts)


def save_manifest(manifest: DatasetManifest, path) -> None:
    doc = {"schema": SCHEMA_VERSION, "id": manifest.dataset_id, "records": []}
    for r in manifest.records:
        rec = {"path": r.path, "label": int(r.label), "source": r.source, "ts": r.ts}
        if r.user_id is not None:
            rec["user_id"] = r.user_id
        if r.confidence is not None:
            rec["confidence"] = r.confidence
        doc["records"].append(rec)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=1)
    os.replace(tmp, path)


def load_manifest(path) -> DatasetManifest:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("schema") != SCHEMA_VERSION:
        raise ContractError(f"unsupported manifest schema {doc.get('schema')!r}")
    records = tuple(
        SampleRecord(path=r["path"], label=r["label"], source=r.get("source", "seed"),
                     user_id=r.get("user_id"), confidence=r.get("confidence"),
                     ts=r.get("ts", 0.0))
        for r in doc["records"])
    return DatasetManifest(doc["id"], records)


def load_arrays(manifest: DatasetManifest, root):
    """Materialize (X, y) image arrays for training/evaluation."""
    X = np.stack([load_png(os.path.join(root, r.path)) for r in manifest.records])
    y = np.array([r.label for r in manifest.records], dtype=np.intp)
    return X, y


def write_image_corpus(X, y, root, dataset_id, source="seed") -> DatasetManifest:
    """Dump an in-memory corpus as PNGs + manifest (fixture/CLI helper)."""
    os.makedirs(os.path.join(root, "images"), exist_ok=True)
    records = []
    for i, (img, label) in enumerate(zip(X, y)):
        rel = os.path.join("images", f"{dataset_id}-{i:05d}.png")
        save_png(img, os.path.join(root, rel))
        records.append(SampleRecord(path=rel, label=int(label), source=source))
    manifest = DatasetManifest(dataset_id, tuple(records))
    save_manifest(manifest, os.path.join(root, "manifest.json"))
    return manifest
