"""Datasets: loading precomputed-feature benchmarks, a synthetic Gaussian
oracle, and deterministic mini-batch iteration.

A dataset directory is self-describing: ``meta.json`` plus flat binary
matrices (see ``save_dataset``). Class ids must be the integers
``0 .. C_total-1`` so that labels index the attribute matrix directly.

Loading and synthetic generation are pure functions; a batch iterator is
single-consumer (create one per worker).
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import ContractViolation, ValidationError
from .matio import dumps_json, load_json, read_matrix, write_matrix

DATASET_FILES = {
    "train_X": ("train_X.f32", "f32"),
    "train_y": ("train_y.i32", "i32"),
    "test_seen_X": ("test_seen_X.f32", "f32"),
    "test_seen_y": ("test_seen_y.i32", "i32"),
    "test_unseen_X": ("test_unseen_X.f32", "f32"),
    "test_unseen_y": ("test_unseen_y.i32", "i32"),
    "attributes": ("attributes.f32", "f32"),
}


@dataclass
class DatasetBundle:
    """Visual features, labels, per-class attributes and the class split."""

    visual_train: np.ndarray        # [N_s, K]
    labels_train: np.ndarray        # [N_s]
    visual_test_seen: np.ndarray    # [N_ts, K]
    labels_test_seen: np.ndarray    # [N_ts]
    visual_test_unseen: np.ndarray  # [N_tu, K]
    labels_test_unseen: np.ndarray  # [N_tu]
    attributes: np.ndarray          # [C_total, L], row index == class id
    seen_classes: tuple[int, ...]
    unseen_classes: tuple[int, ...]

    @property
    def feature_dim(self) -> int:
        return self.visual_train.shape[1]

    @property
    def attribute_dim(self) -> int:
        return self.attributes.shape[1]

    @property
    def all_classes(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.seen_classes) | set(self.unseen_classes)))


@dataclass
class SyntheticSpec:
    """Parameters of the Gaussian-cluster oracle dataset.

    Class attributes are drawn uniformly in [0,1]^L, a fixed random
    nonnegative linear map sends attributes to cluster means, and features
    are isotropic Gaussians around those means. The map is nonnegative so
    class means live in the same rectified regime as pooled CNN features.
    """

    n_seen_classes: int
    n_unseen_classes: int
    feature_dim: int
    attribute_dim: int
    samples_per_class: int
    cluster_std: float
    projection_seed: int = 0
    noise_seed: int = 0

    def validate(self) -> None:
        if self.attribute_dim < 1 or self.feature_dim < self.attribute_dim:
            raise ValidationError(
                f"need feature_dim >= attribute_dim >= 1, got "
                f"K={self.feature_dim}, L={self.attribute_dim}"
            )
        for field in ("n_seen_classes", "n_unseen_classes", "samples_per_class"):
            if getattr(self, field) < 1:
                raise ValidationError(f"{field} must be >= 1")
        if not self.cluster_std > 0:
            raise ValidationError("cluster_std must be > 0")


@dataclass
class FeatureBatch:
    """One training mini-batch; attribute row i belongs to labels[i]."""

    visual: np.ndarray      # [B, K]
    attributes: np.ndarray  # [B, L]
    labels: np.ndarray      # [B]
    noise: np.ndarray       # [B, L], standard Gaussian

    def __len__(self) -> int:
        return self.visual.shape[0]


def validate_bundle(bundle: DatasetBundle) -> DatasetBundle:
    seen = set(bundle.seen_classes)
    unseen = set(bundle.unseen_classes)
    if seen & unseen:
        raise ValidationError(f"seen/unseen class sets overlap: {sorted(seen & unseen)}")
    c_total = bundle.attributes.shape[0]
    if seen | unseen != set(range(c_total)):
        raise ValidationError(
            "class ids must be exactly 0..C_total-1 so labels index the "
            f"attribute matrix; got {sorted(seen | unseen)} for {c_total} attribute rows"
        )
    checks = [
        ("labels_train", bundle.labels_train, seen),
        ("labels_test_seen", bundle.labels_test_seen, seen),
        ("labels_test_unseen", bundle.labels_test_unseen, unseen),
    ]
    for name, labels, allowed in checks:
        bad = set(np.unique(labels).tolist()) - allowed
        if bad:
            raise ValidationError(f"{name} contains classes outside its partition: {sorted(bad)}")
    pairs = [
        ("visual_train", bundle.visual_train, bundle.labels_train),
        ("visual_test_seen", bundle.visual_test_seen, bundle.labels_test_seen),
        ("visual_test_unseen", bundle.visual_test_unseen, bundle.labels_test_unseen),
    ]
    k = bundle.attributes.shape[1]  # only needs to be consistent
    for name, mat, labels in pairs:
        if mat.ndim != 2 or labels.ndim != 1 or mat.shape[0] != labels.shape[0]:
            raise ValidationError(f"{name}: rows and labels disagree")
        if mat.shape[1] != bundle.visual_train.shape[1]:
            raise ValidationError(f"{name}: feature width differs from the train split")
        if not np.all(np.isfinite(mat)):
            raise ValidationError(f"{name} contains non-finite values")
    if bundle.attributes.ndim != 2 or k < 1:
        raise ValidationError("attributes must be a [C_total, L] matrix")
    if not np.all(np.isfinite(bundle.attributes)):
        raise ValidationError("attributes contain non-finite values")
    return bundle


def make_synthetic_dataset(spec: SyntheticSpec) -> DatasetBundle:
    """Build the Gaussian-cluster oracle bundle.

    Deterministic: the same spec always yields byte-identical matrices.
    Unseen classes get attributes and test features but no training rows.
    """
    spec.validate()
    c_total = spec.n_seen_classes + spec.n_unseen_classes
    k, l = spec.feature_dim, spec.attribute_dim
    s = spec.samples_per_class

    rng_proj = np.random.default_rng(spec.projection_seed)
    attributes = rng_proj.uniform(0.0, 1.0, size=(c_total, l))
    proj = rng_proj.uniform(0.0, 1.0, size=(k, l))  # attribute -> mean map
    means = attributes @ proj.T  # [C_total, K]

    rng_noise = np.random.default_rng(spec.noise_seed)

    def draw(classes: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        feats = np.vstack(
            [means[c] + spec.cluster_std * rng_noise.standard_normal((s, k)) for c in classes]
        )
        labels = np.repeat(np.asarray(classes, dtype=np.int64), s)
        return feats, labels

    seen = tuple(range(spec.n_seen_classes))
    unseen = tuple(range(spec.n_seen_classes, c_total))
    train_x, train_y = draw(seen)
    test_seen_x, test_seen_y = draw(seen)
    test_unseen_x, test_unseen_y = draw(unseen)

    return validate_bundle(
        DatasetBundle(
            visual_train=train_x,
            labels_train=train_y,
            visual_test_seen=test_seen_x,
            labels_test_seen=test_seen_y,
            visual_test_unseen=test_unseen_x,
            labels_test_unseen=test_unseen_y,
            attributes=attributes,
            seen_classes=seen,
            unseen_classes=unseen,
        )
    )


def oracle_class_means(spec: SyntheticSpec) -> np.ndarray:
    """Analytic cluster means of the oracle, for ground-truth checks."""
    spec.validate()
    rng_proj = np.random.default_rng(spec.projection_seed)
    c_total = spec.n_seen_classes + spec.n_unseen_classes
    attributes = rng_proj.uniform(0.0, 1.0, size=(c_total, spec.attribute_dim))
    proj = rng_proj.uniform(0.0, 1.0, size=(spec.feature_dim, spec.attribute_dim))
    return attributes @ proj.T


def save_dataset(bundle: DatasetBundle, root: str, split_name: str = "default") -> None:
    os.makedirs(root, exist_ok=True)
    meta = {
        "format": "gzslgen-dataset",
        "version": 1,
        "split_name": split_name,
        "feature_dim": int(bundle.feature_dim),
        "attribute_dim": int(bundle.attribute_dim),
        "seen_classes": [int(c) for c in bundle.seen_classes],
        "unseen_classes": [int(c) for c in bundle.unseen_classes],
        "n_train": int(bundle.visual_train.shape[0]),
        "n_test_seen": int(bundle.visual_test_seen.shape[0]),
        "n_test_unseen": int(bundle.visual_test_unseen.shape[0]),
    }
    with open(os.path.join(root, "meta.json"), "w", encoding="utf-8") as fh:
        fh.write(dumps_json(meta))
    write_matrix(os.path.join(root, "train_X.f32"), bundle.visual_train, "f32")
    write_matrix(os.path.join(root, "train_y.i32"), bundle.labels_train, "i32")
    write_matrix(os.path.join(root, "test_seen_X.f32"), bundle.visual_test_seen, "f32")
    write_matrix(os.path.join(root, "test_seen_y.i32"), bundle.labels_test_seen, "i32")
    write_matrix(os.path.join(root, "test_unseen_X.f32"), bundle.visual_test_unseen, "f32")
    write_matrix(os.path.join(root, "test_unseen_y.i32"), bundle.labels_test_unseen, "i32")
    write_matrix(os.path.join(root, "attributes.f32"), bundle.attributes, "f32")


def load_dataset(root: str, split_name: str = "default", normalize: bool = False) -> DatasetBundle:
    """Load a dataset directory written in the documented layout.

    ``normalize`` opts into per-feature max-abs scaling fit on the train
    split (features are otherwise used as-is).
    """
    meta = load_json(os.path.join(root, "meta.json"))
    declared = meta.get("split_name", "default")
    if split_name != declared:
        raise ValidationError(
            f"{root}: directory holds split '{declared}', not '{split_name}'"
        )
    for field in ("feature_dim", "attribute_dim", "seen_classes", "unseen_classes",
                  "n_train", "n_test_seen", "n_test_unseen"):
        if field not in meta:
            raise ValidationError(f"{root}/meta.json: missing field '{field}'")

    k, l = int(meta["feature_dim"]), int(meta["attribute_dim"])
    c_total = len(meta["seen_classes"]) + len(meta["unseen_classes"])
    shapes = {
        "train_X": (int(meta["n_train"]), k),
        "train_y": (int(meta["n_train"]),),
        "test_seen_X": (int(meta["n_test_seen"]), k),
        "test_seen_y": (int(meta["n_test_seen"]),),
        "test_unseen_X": (int(meta["n_test_unseen"]), k),
        "test_unseen_y": (int(meta["n_test_unseen"]),),
        "attributes": (c_total, l),
    }
    loaded = {}
    for key, (fname, kind) in DATASET_FILES.items():
        loaded[key] = read_matrix(os.path.join(root, fname), shapes[key], kind)

    bundle = validate_bundle(
        DatasetBundle(
            visual_train=loaded["train_X"],
            labels_train=loaded["train_y"],
            visual_test_seen=loaded["test_seen_X"],
            labels_test_seen=loaded["test_seen_y"],
            visual_test_unseen=loaded["test_unseen_X"],
            labels_test_unseen=loaded["test_unseen_y"],
            attributes=loaded["attributes"],
            seen_classes=tuple(int(c) for c in meta["seen_classes"]),
            unseen_classes=tuple(int(c) for c in meta["unseen_classes"]),
        )
    )
    if normalize:
        scale = np.abs(bundle.visual_train).max(axis=0)
        scale[scale == 0] = 1.0
        bundle.visual_train = bundle.visual_train / scale
        bundle.visual_test_seen = bundle.visual_test_seen / scale
        bundle.visual_test_unseen = bundle.visual_test_unseen / scale
    return bundle


def batch_iterator(
    bundle: DatasetBundle, batch_size: int, epoch_seed: int
) -> Iterator[FeatureBatch]:
    """Yield shuffled mini-batches covering every training row once.

    Each batch carries freshly sampled standard-Gaussian noise of width L.
    Order and noise are fully determined by ``epoch_seed``.
    """
    if batch_size < 1:
        raise ContractViolation(f"batch_size must be >= 1, got {batch_size}")
    n = bundle.visual_train.shape[0]
    if batch_size > n:
        warnings.warn(
            f"batch_size {batch_size} exceeds the {n} training rows; "
            "yielding one truncated batch",
            stacklevel=2,
        )
    rng = np.random.default_rng(epoch_seed)
    perm = rng.permutation(n)
    l = bundle.attribute_dim
    for start in range(0, n, batch_size):
        idx = perm[start : start + batch_size]
        labels = bundle.labels_train[idx]
        yield FeatureBatch(
            visual=bundle.visual_train[idx],
            attributes=bundle.attributes[labels],
            labels=labels,
            noise=rng.standard_normal((idx.size, l)),
        )
