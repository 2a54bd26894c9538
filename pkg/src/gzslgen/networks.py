"""The four single-hidden-layer networks and the linear softmax classifier.

All forwards are pure numpy; every one has a matching analytic backward so
training never depends on an autodiff framework and gradient tests can
compare against central finite differences. Forwards never mutate
parameters, so concurrent reads of one ModelParams are safe; mutation is
owned by the trainer.

Shapes (K = visual dim, L = attribute dim, H = hidden width):
    visual generator    [a | z] (2L) -> H -> K, rectified output
    semantic generator  x (K) -> H -> L, rectified output (configurable)
    visual critic       [x | a] (K+L) -> H -> 1, linear output
    semantic critic     a (L) -> H -> 1, linear output
    seen classifier     x (K) -> n_seen logits, softmax
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ContractViolation

OUTPUT_ACTIVATIONS = ("relu", "none")


@dataclass
class NetworkShape:
    input_dim: int
    hidden_dim: int
    output_dim: int
    negative_slope: float = 0.2
    output_activation: str = "none"

    def validate(self) -> None:
        if min(self.input_dim, self.hidden_dim, self.output_dim) < 1:
            raise ContractViolation("all network dimensions must be >= 1")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ContractViolation(f"unknown output activation {self.output_activation!r}")


@dataclass
class MLPParams:
    """Weights of one hidden-layer perceptron, x @ w + b convention."""

    w1: np.ndarray  # [input_dim, hidden_dim]
    b1: np.ndarray  # [hidden_dim]
    w2: np.ndarray  # [hidden_dim, output_dim]
    b2: np.ndarray  # [output_dim]
    shape: NetworkShape

    def arrays(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def copy(self) -> "MLPParams":
        return MLPParams(
            self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy(), self.shape
        )


@dataclass
class MLPGrads:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def arrays(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def add_(self, other: "MLPGrads", scale: float = 1.0) -> "MLPGrads":
        self.w1 += scale * other.w1
        self.b1 += scale * other.b1
        self.w2 += scale * other.w2
        self.b2 += scale * other.b2
        return self

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(a * a) for a in self.arrays().values())))

    @staticmethod
    def zeros_like(params: MLPParams) -> "MLPGrads":
        return MLPGrads(
            np.zeros_like(params.w1),
            np.zeros_like(params.b1),
            np.zeros_like(params.w2),
            np.zeros_like(params.b2),
        )


@dataclass
class LinearParams:
    """Linear softmax classifier: logits = x @ w + b."""

    w: np.ndarray  # [K, n_classes]
    b: np.ndarray  # [n_classes]

    def arrays(self) -> dict[str, np.ndarray]:
        return {"w": self.w, "b": self.b}

    def copy(self) -> "LinearParams":
        return LinearParams(self.w.copy(), self.b.copy())


@dataclass
class ModelParams:
    g_sv: MLPParams
    g_vs: MLPParams
    d_v: MLPParams
    d_s: MLPParams
    cls_seen: LinearParams

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.g_sv.copy(), self.g_vs.copy(), self.d_v.copy(),
            self.d_s.copy(), self.cls_seen.copy(),
        )

    def all_arrays(self) -> Iterable[np.ndarray]:
        for net in (self.g_sv, self.g_vs, self.d_v, self.d_s):
            yield from net.arrays().values()
        yield from self.cls_seen.arrays().values()


@dataclass
class MLPCache:
    """Intermediates kept by a cached forward for the backward pass."""

    u: np.ndarray
    h_pre: np.ndarray
    h: np.ndarray
    o_pre: np.ndarray
    out: np.ndarray


def _init_mlp(rng: np.random.Generator, shape: NetworkShape) -> MLPParams:
    shape.validate()
    # Fan-in scaled zero-mean weights, zero biases.
    w1 = rng.standard_normal((shape.input_dim, shape.hidden_dim)) / np.sqrt(shape.input_dim)
    w2 = rng.standard_normal((shape.hidden_dim, shape.output_dim)) / np.sqrt(shape.hidden_dim)
    return MLPParams(
        w1=w1,
        b1=np.zeros(shape.hidden_dim),
        w2=w2,
        b2=np.zeros(shape.output_dim),
        shape=shape,
    )


def init_params(
    feature_dim: int,
    attribute_dim: int,
    n_seen: int,
    seed: int,
    hidden_dim: int = 4096,
    negative_slope: float = 0.2,
    gvs_output_activation: str = "relu",
) -> ModelParams:
    """Deterministically initialize all five parameter sets."""
    if min(feature_dim, attribute_dim, n_seen) < 1:
        raise ContractViolation("dims must be >= 1")
    rng = np.random.default_rng(seed)
    k, l = feature_dim, attribute_dim
    mk = lambda i, o, act: _init_mlp(
        rng, NetworkShape(i, hidden_dim, o, negative_slope, act)
    )
    g_sv = mk(2 * l, k, "relu")
    g_vs = mk(k, l, gvs_output_activation)
    d_v = mk(k + l, 1, "none")
    d_s = mk(l, 1, "none")
    cls_w = rng.standard_normal((k, n_seen)) / np.sqrt(k)
    cls = LinearParams(w=cls_w, b=np.zeros(n_seen))
    return ModelParams(g_sv=g_sv, g_vs=g_vs, d_v=d_v, d_s=d_s, cls_seen=cls)


def _leaky(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x >= 0, x, slope * x)


def _leaky_deriv(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x >= 0, 1.0, slope)


def _check_input(params: MLPParams, u: np.ndarray) -> None:
    if u.ndim != 2 or u.shape[1] != params.shape.input_dim:
        raise ContractViolation(
            f"expected input [B, {params.shape.input_dim}], got {u.shape}"
        )


def mlp_forward(params: MLPParams, u: np.ndarray) -> np.ndarray:
    return mlp_forward_cached(params, u).out


def mlp_forward_cached(params: MLPParams, u: np.ndarray) -> MLPCache:
    _check_input(params, u)
    h_pre = u @ params.w1 + params.b1
    h = _leaky(h_pre, params.shape.negative_slope)
    o_pre = h @ params.w2 + params.b2
    out = np.maximum(o_pre, 0.0) if params.shape.output_activation == "relu" else o_pre
    return MLPCache(u=u, h_pre=h_pre, h=h, o_pre=o_pre, out=out)


def mlp_backward(
    params: MLPParams, cache: MLPCache, d_out: np.ndarray
) -> tuple[MLPGrads, np.ndarray]:
    """Backprop an upstream gradient; returns (parameter grads, input grad)."""
    if params.shape.output_activation == "relu":
        d_opre = d_out * (cache.o_pre > 0)
    else:
        d_opre = d_out
    grads_w2 = cache.h.T @ d_opre
    grads_b2 = d_opre.sum(axis=0)
    d_h = d_opre @ params.w2.T
    d_hpre = d_h * _leaky_deriv(cache.h_pre, params.shape.negative_slope)
    grads_w1 = cache.u.T @ d_hpre
    grads_b1 = d_hpre.sum(axis=0)
    d_u = d_hpre @ params.w1.T
    return MLPGrads(grads_w1, grads_b1, grads_w2, grads_b2), d_u


def critic_input_grads(params: MLPParams, u: np.ndarray) -> np.ndarray:
    """Per-row gradient of the scalar critic score w.r.t. its input, [B, n_in].

    Valid for critics only (output_dim 1, linear output).
    """
    if params.shape.output_dim != 1 or params.shape.output_activation != "none":
        raise ContractViolation("input gradients are defined for scalar linear-output critics")
    _check_input(params, u)
    h_pre = u @ params.w1 + params.b1
    s = _leaky_deriv(h_pre, params.shape.negative_slope) * params.w2[:, 0]  # [B, H]
    return s @ params.w1.T


def gen_sv_forward(model: ModelParams, attributes: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Synthesize visual features from class attributes and Gaussian noise."""
    if attributes.shape != noise.shape:
        raise ContractViolation(
            f"attributes {attributes.shape} and noise {noise.shape} must match"
        )
    return mlp_forward(model.g_sv, np.hstack([attributes, noise]))


def gen_vs_forward(model: ModelParams, visual: np.ndarray) -> np.ndarray:
    """Reconstruct class attributes from visual features."""
    return mlp_forward(model.g_vs, visual)


def disc_v_forward(model: ModelParams, visual: np.ndarray, attributes: np.ndarray) -> np.ndarray:
    """Conditional critic score over (visual, attribute) pairs, [B]."""
    if visual.shape[0] != attributes.shape[0]:
        raise ContractViolation("visual and attribute batches disagree")
    return mlp_forward(model.d_v, np.hstack([visual, attributes]))[:, 0]


def disc_s_forward(model: ModelParams, attributes: np.ndarray) -> np.ndarray:
    """Unconditional critic score over attribute vectors, [B]."""
    return mlp_forward(model.d_s, attributes)[:, 0]


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def classifier_logits(cls: LinearParams, visual: np.ndarray) -> np.ndarray:
    if visual.ndim != 2 or visual.shape[1] != cls.w.shape[0]:
        raise ContractViolation(
            f"expected visual [B, {cls.w.shape[0]}], got {visual.shape}"
        )
    return visual @ cls.w + cls.b


def classifier_forward(cls: LinearParams, visual: np.ndarray) -> np.ndarray:
    """Class-probability rows (each sums to 1)."""
    return softmax(classifier_logits(cls, visual))
