"""Feature synthesis and the final full-label softmax classifier.

After adversarial training, any number of labeled pseudo features can be
generated per class (seen or unseen) by resampling the noise input; an
off-the-shelf softmax classifier fit on them carries out recognition over
the union of seen and unseen labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import DatasetBundle
from .errors import ValidationError
from .losses import softmax_ce_grads
from .networks import LinearParams, ModelParams, classifier_forward, gen_sv_forward


@dataclass
class SynthesisRequest:
    classes: tuple[int, ...]  # ordered, seen and/or unseen
    n_per_class: int
    seed: int = 0

    def validate(self, n_attribute_rows: int) -> None:
        if self.n_per_class < 1:
            raise ValidationError("n_per_class must be >= 1")
        bad = [c for c in self.classes if not 0 <= c < n_attribute_rows]
        if bad:
            raise ValidationError(f"classes without an attribute row: {bad}")


@dataclass
class GzslClassifier:
    """Linear softmax over an explicit, ascending class-id list."""

    params: LinearParams
    class_ids: tuple[int, ...]


def synthesize_features(
    model: ModelParams, bundle: DatasetBundle, request: SynthesisRequest
) -> tuple[np.ndarray, np.ndarray]:
    """Generate n_per_class pseudo features per requested class.

    Returns (features [M, K], labels [M]) with rows grouped by class in
    request order. Deterministic given the request seed.
    """
    request.validate(bundle.attributes.shape[0])
    rng = np.random.default_rng(request.seed)
    l = bundle.attribute_dim
    blocks, labels = [], []
    for c in request.classes:
        attrs = np.tile(bundle.attributes[c], (request.n_per_class, 1))
        noise = rng.standard_normal((request.n_per_class, l))
        blocks.append(gen_sv_forward(model, attrs, noise))
        labels.append(np.full(request.n_per_class, c, dtype=np.int64))
    return np.vstack(blocks), np.concatenate(labels)


def fit_gzsl_classifier(
    features: np.ndarray,
    labels: np.ndarray,
    all_classes: Sequence[int],
    learning_rate: float = 1.0,
    max_steps: int = 1000,
    grad_tol: float = 1e-5,
    seed: int = 0,
) -> GzslClassifier:
    """Fit the final softmax classifier over the full label set.

    Full-batch gradient descent from zero init, so the fit is convex,
    deterministic, and invariant to row order. ``seed`` is accepted for
    interface stability; the zero init leaves nothing random.
    """
    class_ids = tuple(sorted(int(c) for c in all_classes))
    present = set(np.unique(labels).tolist())
    missing = [c for c in class_ids if c not in present]
    if missing:
        raise ValidationError(f"classes with no training rows: {missing}")
    extra = present - set(class_ids)
    if extra:
        raise ValidationError(f"labels outside the declared class set: {sorted(extra)}")

    col_of = {c: i for i, c in enumerate(class_ids)}
    cols = np.asarray([col_of[int(c)] for c in labels])
    cls = LinearParams(
        w=np.zeros((features.shape[1], len(class_ids))), b=np.zeros(len(class_ids))
    )
    for _ in range(max_steps):
        _, dw, db, _ = softmax_ce_grads(cls, features, cols)
        gnorm = np.sqrt(np.sum(dw * dw) + np.sum(db * db))
        if gnorm < grad_tol:
            break
        cls.w -= learning_rate * dw
        cls.b -= learning_rate * db
    return GzslClassifier(params=cls, class_ids=class_ids)


def predict(clf: GzslClassifier, visual: np.ndarray) -> np.ndarray:
    """Most probable class id per row; ties go to the lowest class id."""
    probs = classifier_forward(clf.params, visual)
    ids = np.asarray(clf.class_ids)
    return ids[probs.argmax(axis=1)]
