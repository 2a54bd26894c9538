"""Alternating adversarial training.

Per iteration: the visual critic takes n1 steps, the semantic critic n2
steps, then each generator takes one step, all on the same mini-batch by
default. The seen-class classifier is fit once up front and stays frozen.
The loop is single-threaded over parameter state; inner linear algebra
parallelizes freely.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import losses
from .data import DatasetBundle, FeatureBatch, batch_iterator
from .errors import TrainingDiverged, ValidationError
from .losses import LossWeights
from .networks import (
    LinearParams,
    MLPGrads,
    ModelParams,
    classifier_forward,
    init_params,
    mlp_forward,
)
from .seeds import child_rng, child_seed

VARIANTS = ("full", "no_SC", "no_VC", "dual_only", "baseline_single_gan")


@dataclass
class OptimizerConfig:
    name: str = "adam"
    learning_rate: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    eps: float = 1e-8


@dataclass
class TrainConfig:
    weights: LossWeights = field(default_factory=LossWeights)
    batch_size: int = 64
    n1: int = 5
    n2: int = 5
    epochs: int = 50
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    noise_dim: int | None = None  # defaults to the attribute dimension
    hidden_dim: int = 4096
    negative_slope: float = 0.2
    gvs_output_activation: str = "relu"
    seed: int = 0
    variant: str = "full"
    pair_mode: str = "real"  # second adversarial pairing: "real" | "cycle"
    separate_critic_batches: bool = False
    resample_critic_noise: bool = True  # fresh generator noise per critic step
    baseline_cls_loss: bool = True
    pretrain_lr: float = 1.0
    pretrain_max_steps: int = 1000
    pretrain_grad_tol: float = 1e-5

    def validate(self) -> None:
        self.weights.validate()
        if self.n1 < 1 or self.n2 < 1:
            raise ValidationError("n1 and n2 must be >= 1")
        if self.optimizer.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.variant not in VARIANTS:
            raise ValidationError(f"unknown variant {self.variant!r}; pick one of {VARIANTS}")
        if self.pair_mode not in losses.PAIR_MODES:
            raise ValidationError(f"unknown pair_mode {self.pair_mode!r}")


@dataclass
class TrainLog:
    """Per-optimizer-step records plus run-level context."""

    records: list[dict] = field(default_factory=list)
    pretrain_accuracy: float = 0.0
    seen_class_cols: dict[int, int] = field(default_factory=dict)
    checkpoint_path: str | None = None

    def append(self, record: dict) -> None:
        self.records.append(record)

    def step_kinds(self, iteration: int) -> list[str]:
        return [r["step"] for r in self.records if r["iteration"] == iteration]


def effective_weights(config: TrainConfig) -> LossWeights:
    """Apply the ablation variant's term masking to the configured weights."""
    w = replace(config.weights)
    if config.variant in ("no_SC", "dual_only"):
        w.lambda5 = 0.0
    if config.variant in ("no_VC", "dual_only"):
        w.lambda3 = 0.0
        w.lambda6 = 0.0
    if config.variant == "baseline_single_gan":
        w.lambda3 = 0.0
        w.lambda6 = 0.0
        w.lambda5 = 0.0
        if not config.baseline_cls_loss:
            w.lambda2 = 0.0
    return w


class Adam:
    """Adaptive-moment optimizer over a dict of named parameter arrays."""

    def __init__(self, arrays: dict[str, np.ndarray], cfg: OptimizerConfig):
        self.arrays = arrays
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in arrays.items()}
        self.v = {k: np.zeros_like(v) for k, v in arrays.items()}
        self.t = 0

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c = self.cfg
        bias1 = 1.0 - c.beta1**self.t
        bias2 = 1.0 - c.beta2**self.t
        for key, param in self.arrays.items():
            g = grads[key]
            self.m[key] = c.beta1 * self.m[key] + (1.0 - c.beta1) * g
            self.v[key] = c.beta2 * self.v[key] + (1.0 - c.beta2) * g * g
            m_hat = self.m[key] / bias1
            v_hat = self.v[key] / bias2
            param -= c.learning_rate * m_hat / (np.sqrt(v_hat) + c.eps)


def seen_class_columns(bundle: DatasetBundle) -> tuple[np.ndarray, dict[int, int]]:
    """Lookup from class id to classifier column (seen classes ascending)."""
    seen_sorted = sorted(bundle.seen_classes)
    col_of = {c: i for i, c in enumerate(seen_sorted)}
    lookup = np.full(len(bundle.all_classes), -1, dtype=np.int64)
    for c, i in col_of.items():
        lookup[c] = i
    return lookup, col_of


def classifier_accuracy(cls: LinearParams, x: np.ndarray, cols: np.ndarray) -> float:
    preds = classifier_forward(cls, x).argmax(axis=1)
    return float(np.mean(preds == cols))


def pretrain_classifier(bundle: DatasetBundle, config: TrainConfig) -> LinearParams:
    """Fit the frozen seen-class softmax classifier on real training features.

    Full-batch gradient descent from zero init, stopping at a gradient-norm
    threshold or the step cap.
    """
    lookup, col_of = seen_class_columns(bundle)
    present = set(np.unique(bundle.labels_train).tolist())
    missing = [c for c in bundle.seen_classes if c not in present]
    if missing:
        raise ValidationError(f"seen classes without training rows: {missing}")

    x = bundle.visual_train
    cols = lookup[bundle.labels_train]
    cls = LinearParams(
        w=np.zeros((bundle.feature_dim, len(col_of))), b=np.zeros(len(col_of))
    )
    for _ in range(config.pretrain_max_steps):
        _, dw, db, _ = losses.softmax_ce_grads(cls, x, cols)
        gnorm = np.sqrt(np.sum(dw * dw) + np.sum(db * db))
        if gnorm < config.pretrain_grad_tol:
            break
        cls.w -= config.pretrain_lr * dw
        cls.b -= config.pretrain_lr * db
    return cls


def _check_finite(value: float, terms: dict, name: str, iteration: int) -> None:
    bad = [k for k, v in terms.items() if not np.isfinite(v)]
    if bad or not np.isfinite(value):
        first = bad[0] if bad else "total"
        raise TrainingDiverged(
            f"non-finite loss term '{first}' in {name} at iteration {iteration}"
        )


def _check_params_finite(params: ModelParams, name: str, iteration: int) -> None:
    for arr in params.all_arrays():
        if not np.all(np.isfinite(arr)):
            raise TrainingDiverged(
                f"non-finite parameter after {name} update at iteration {iteration}"
            )


def _random_batch(
    bundle: DatasetBundle, batch_size: int, rng: np.random.Generator
) -> FeatureBatch:
    n = bundle.visual_train.shape[0]
    idx = rng.choice(n, size=min(batch_size, n), replace=False)
    labels = bundle.labels_train[idx]
    return FeatureBatch(
        visual=bundle.visual_train[idx],
        attributes=bundle.attributes[labels],
        labels=labels,
        noise=rng.standard_normal((idx.size, bundle.attribute_dim)),
    )


def train(
    bundle: DatasetBundle,
    config: TrainConfig,
    step_callback: Callable[[str, int, ModelParams], None] | None = None,
) -> tuple[ModelParams, TrainLog]:
    """Run the full alternating optimization; returns trained params and log.

    Deterministic given (bundle, config.seed). Raises TrainingDiverged on
    the first non-finite loss term or parameter, naming it.
    """
    config.validate()
    k, l = bundle.feature_dim, bundle.attribute_dim
    if config.noise_dim is not None and config.noise_dim != l:
        raise ValidationError(
            f"noise_dim must equal the attribute dimension {l}, got {config.noise_dim}"
        )

    weights = effective_weights(config)
    baseline = config.variant == "baseline_single_gan"
    lookup, col_of = seen_class_columns(bundle)

    cls = pretrain_classifier(bundle, config)
    log = TrainLog(seen_class_cols=col_of)
    log.pretrain_accuracy = classifier_accuracy(
        cls, bundle.visual_train, lookup[bundle.labels_train]
    )

    params = init_params(
        k, l, len(col_of),
        seed=child_seed(config.seed, "init"),
        hidden_dim=config.hidden_dim,
        negative_slope=config.negative_slope,
        gvs_output_activation=config.gvs_output_activation,
    )
    params.cls_seen = cls
    theta_snapshot = (cls.w.copy(), cls.b.copy())

    opts = {
        "d_v": Adam(params.d_v.arrays(), config.optimizer),
        "d_s": Adam(params.d_s.arrays(), config.optimizer),
        "g_sv": Adam(params.g_sv.arrays(), config.optimizer),
        "g_vs": Adam(params.g_vs.arrays(), config.optimizer),
    }
    rng = child_rng(config.seed, "noise")

    def record(kind: str, iteration: int, epoch: int, value: float,
               terms: dict[str, float], grads: MLPGrads) -> None:
        log.append({
            "iteration": iteration,
            "epoch": epoch,
            "step": kind,
            "loss": value,
            "terms": dict(terms),
            "grad_norm": grads.norm(),
            "wall_time": time.time(),
        })
        if step_callback is not None:
            step_callback(kind, iteration, params)

    iteration = 0
    for epoch in range(config.epochs):
        epoch_seed = child_seed(config.seed, f"shuffle-{epoch}")
        for batch in batch_iterator(bundle, config.batch_size, epoch_seed):
            iteration += 1
            cols = lookup[batch.labels]

            for _ in range(config.n1):
                cb = _random_batch(bundle, config.batch_size, rng) \
                    if config.separate_critic_batches else batch
                z = rng.standard_normal(cb.noise.shape) \
                    if config.resample_critic_noise else cb.noise
                synth = mlp_forward(params.g_sv, np.hstack([cb.attributes, z]))
                value, terms, grads = losses.disc_v_loss_and_grads(
                    params, cb, synth, weights, rng
                )
                _check_finite(value, terms, "d_v", iteration)
                opts["d_v"].step(grads.arrays())
                _check_params_finite(params, "d_v", iteration)
                record("d_v", iteration, epoch, value, terms, grads)

            if not baseline:
                for _ in range(config.n2):
                    cb = _random_batch(bundle, config.batch_size, rng) \
                        if config.separate_critic_batches else batch
                    z = rng.standard_normal(cb.noise.shape) \
                        if config.resample_critic_noise else cb.noise
                    synth = mlp_forward(params.g_sv, np.hstack([cb.attributes, z]))
                    recon = mlp_forward(params.g_vs, synth)
                    value, terms, grads = losses.disc_s_loss_and_grads(
                        params, cb, recon, weights, rng
                    )
                    _check_finite(value, terms, "d_s", iteration)
                    opts["d_s"].step(grads.arrays())
                    _check_params_finite(params, "d_s", iteration)
                    record("d_s", iteration, epoch, value, terms, grads)

            noise2 = rng.standard_normal(batch.noise.shape)
            value, terms, grads = losses.gen_sv_loss_and_grads(
                params, batch, weights, noise2,
                label_cols=cols,
                pair_mode=config.pair_mode,
                include_pair_term=not baseline,
            )
            _check_finite(value, terms, "g_sv", iteration)
            opts["g_sv"].step(grads.arrays())
            _check_params_finite(params, "g_sv", iteration)
            record("g_sv", iteration, epoch, value, terms, grads)

            if not baseline:
                noise2 = rng.standard_normal(batch.noise.shape)
                value, terms, grads = losses.gen_vs_loss_and_grads(
                    params, batch, weights, noise2
                )
                _check_finite(value, terms, "g_vs", iteration)
                opts["g_vs"].step(grads.arrays())
                _check_params_finite(params, "g_vs", iteration)
                record("g_vs", iteration, epoch, value, terms, grads)

    assert np.array_equal(params.cls_seen.w, theta_snapshot[0])
    assert np.array_equal(params.cls_seen.b, theta_snapshot[1])
    return params, log


def write_train_log(log: TrainLog, path: str, header: dict | None = None) -> None:
    """Line-delimited JSON: one header record, then one record per step."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({
            "type": "header",
            "pretrain_accuracy": log.pretrain_accuracy,
            "seen_class_cols": {str(k): v for k, v in log.seen_class_cols.items()},
            "checkpoint": log.checkpoint_path,
            "config": header or {},
        }, sort_keys=True) + "\n")
        for rec in log.records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
