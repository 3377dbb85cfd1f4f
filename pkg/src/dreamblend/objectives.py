"""Loss functions steering the pixel optimizers.

Three objective variants:

* L2Activation: maximize half the squared L2 norm of one layer's
  activation; the layer gradient is the activation itself.
* GuidedDot: maximize, for every spatial column of the canvas activation,
  the dot product with its best-matching guide feature column.
* StyleContent: minimize alpha * content + beta * sum of per-layer style
  terms, where style terms compare Gram matrices and the content term
  compares raw features.

Objectives are built once from reference images, freeze their targets, and
are evaluated many times against changing canvases.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .errors import ObjectiveError, UnknownLayerError
from .netgraph import NetworkSpec, backward_from, forward
from .tensor import flatten_spatial, gram

# --------------------------------------------------------------------------
# Requests (what the caller asks for) and objectives (frozen, ready to run)


@dataclass(frozen=True)
class L2Request:
    layer: str


@dataclass(frozen=True)
class GuidedRequest:
    layer: str


@dataclass(frozen=True)
class StyleContentRequest:
    style_layers: tuple[str, ...]
    content_layer: str
    alpha: float = 1.0
    beta: float = 1000.0
    style_weights: tuple[float, ...] | None = None  # default: equal, summing to 1


@dataclass(frozen=True, eq=False)
class L2Activation:
    direction: ClassVar[str] = "maximize"
    layer: str


@dataclass(frozen=True, eq=False)
class GuidedDot:
    direction: ClassVar[str] = "maximize"
    layer: str
    guide_features: np.ndarray  # (C, Mg), frozen


@dataclass(frozen=True, eq=False)
class StyleTerm:
    layer: str
    target_gram: np.ndarray  # (C, C), frozen
    weight: float


@dataclass(frozen=True, eq=False)
class StyleContent:
    direction: ClassVar[str] = "minimize"
    style_terms: tuple[StyleTerm, ...]
    content_layer: str
    content_target: np.ndarray  # (C, H, W), frozen
    alpha: float
    beta: float


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr)
    out.setflags(write=False)
    return out


def _check_layer(net: NetworkSpec, name: str) -> None:
    if name not in net.by_name:
        raise UnknownLayerError(name, net.layer_names())


def build_objective(net: NetworkSpec, request, style_image=None, content_image=None):
    """Turn a request plus reference images into a frozen objective.

    GuidedRequest needs ``style_image`` (the guide); StyleContentRequest
    needs both ``style_image`` and ``content_image``. Targets are computed
    with one forward pass per reference image and never change afterwards.
    """
    if isinstance(request, L2Request):
        _check_layer(net, request.layer)
        return L2Activation(layer=request.layer)

    if isinstance(request, GuidedRequest):
        _check_layer(net, request.layer)
        if style_image is None:
            raise ObjectiveError("guided objective requires a guide image")
        trace = forward(net, style_image, [request.layer])
        return GuidedDot(
            layer=request.layer,
            guide_features=_freeze(flatten_spatial(trace.entries[request.layer])),
        )

    if isinstance(request, StyleContentRequest):
        style_layers = tuple(request.style_layers)
        if not style_layers:
            raise ObjectiveError("style-content objective needs at least one style layer")
        for name in style_layers:
            _check_layer(net, name)
        _check_layer(net, request.content_layer)
        if style_image is None or content_image is None:
            raise ObjectiveError("style-content objective requires both a style image and a content image")
        weights = request.style_weights
        if weights is None:
            weights = tuple(1.0 / len(style_layers) for _ in style_layers)
        else:
            weights = tuple(float(v) for v in weights)
            if len(weights) != len(style_layers):
                raise ObjectiveError(
                    f"got {len(weights)} style weights for {len(style_layers)} style layers"
                )
            if any(v < 0 for v in weights):
                raise ObjectiveError("style weights must be nonnegative")
            if len(weights) > 1 and abs(sum(weights) - 1.0) > 1e-6:
                raise ObjectiveError(f"style weights must sum to 1, got {sum(weights)}")
        style_trace = forward(net, style_image, style_layers)
        terms = tuple(
            StyleTerm(
                layer=name,
                target_gram=_freeze(gram(flatten_spatial(style_trace.entries[name]))),
                weight=wt,
            )
            for name, wt in zip(style_layers, weights)
        )
        content_trace = forward(net, content_image, [request.content_layer])
        return StyleContent(
            style_terms=terms,
            content_layer=request.content_layer,
            content_target=_freeze(content_trace.entries[request.content_layer]),
            alpha=float(request.alpha),
            beta=float(request.beta),
        )

    raise ObjectiveError(f"unknown objective request {type(request).__name__}")


# --------------------------------------------------------------------------
# Per-term evaluation: each returns (loss, gradient at the layer)


def eval_l2(act: np.ndarray) -> tuple[float, np.ndarray]:
    """loss = 0.5 * sum(act^2); gradient = act."""
    act = np.asarray(act)
    loss = 0.5 * float(np.sum(np.square(act, dtype=np.float64)))
    return loss, act.copy()


def eval_guided(act: np.ndarray, guide_features: np.ndarray) -> tuple[float, np.ndarray]:
    """Best-match dot-product loss against fixed guide feature columns.

    Every spatial column of the canvas activation picks the guide column
    with the largest dot product (ties: lowest index) and contributes that
    product to the loss; its gradient is the chosen guide column.
    """
    act = np.asarray(act)
    guide = np.asarray(guide_features)
    x = flatten_spatial(act)
    if x.shape[0] != guide.shape[0]:
        raise ObjectiveError(
            f"canvas activation has {x.shape[0]} channels but guide features have {guide.shape[0]}"
        )
    scores = x.T @ guide  # (M, Mg)
    best = np.argmax(scores, axis=1)
    loss = float(np.take_along_axis(scores, best[:, None], axis=1).sum(dtype=np.float64))
    grad = guide[:, best].astype(act.dtype, copy=False)
    return loss, grad.reshape(act.shape)


def eval_style(act: np.ndarray, target_gram: np.ndarray, weight: float) -> tuple[float, np.ndarray]:
    """Gram-matrix match: loss = w/(4 C^2 M^2) * sum((G - T)^2)."""
    act = np.asarray(act)
    f = flatten_spatial(act)
    c, m = f.shape
    target = np.asarray(target_gram)
    if target.shape != (c, c):
        raise ObjectiveError(f"style target gram is {target.shape} but activation has {c} channels")
    diff = gram(f) - target
    loss = weight / (4.0 * c * c * m * m) * float(np.sum(np.square(diff, dtype=np.float64)))
    grad = (weight / (c * c * m * m)) * (diff @ f)
    return loss, grad.astype(act.dtype, copy=False).reshape(act.shape)


def eval_content(act: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Feature match: loss = 0.5 * sum((F - P)^2); gradient = F - P."""
    act = np.asarray(act)
    target = np.asarray(target)
    if act.shape != target.shape:
        raise ObjectiveError(f"content activation shape {act.shape} does not match target {target.shape}")
    diff = act - target
    loss = 0.5 * float(np.sum(np.square(diff, dtype=np.float64)))
    return loss, diff


# --------------------------------------------------------------------------
# Whole-objective evaluation against a canvas


def _needed_layers(objective) -> set[str]:
    if isinstance(objective, (L2Activation, GuidedDot)):
        return {objective.layer}
    if isinstance(objective, StyleContent):
        return {t.layer for t in objective.style_terms} | {objective.content_layer}
    raise ObjectiveError(f"unknown objective {type(objective).__name__}")


def evaluate(objective, net: NetworkSpec, canvas: np.ndarray) -> tuple[float, np.ndarray]:
    """Forward the canvas, apply the objective, and backprop to the pixels.

    Returns (loss, d(loss)/d(canvas)). The gradient always points in the
    direction of loss increase; the optimizer decides the sign.
    """
    trace = forward(net, canvas, _needed_layers(objective))
    inject: dict[str, np.ndarray] = {}
    if isinstance(objective, L2Activation):
        total, grad = eval_l2(trace.entries[objective.layer])
        inject[objective.layer] = grad
    elif isinstance(objective, GuidedDot):
        total, grad = eval_guided(trace.entries[objective.layer], objective.guide_features)
        inject[objective.layer] = grad
    else:
        closs, cgrad = eval_content(trace.entries[objective.content_layer], objective.content_target)
        total = objective.alpha * closs
        if objective.alpha != 0:
            inject[objective.content_layer] = objective.alpha * cgrad
        for term in objective.style_terms:
            sloss, sgrad = eval_style(trace.entries[term.layer], term.target_gram, term.weight)
            total += objective.beta * sloss
            if objective.beta != 0:
                prev = inject.get(term.layer)
                contrib = objective.beta * sgrad
                inject[term.layer] = contrib if prev is None else prev + contrib
        if not inject:  # alpha == beta == 0: inject an explicit zero
            inject[objective.content_layer] = np.zeros_like(trace.entries[objective.content_layer])
    pixel_grad = backward_from(net, trace, inject)
    return float(total), pixel_grad


def loss_terms(objective, net: NetworkSpec, canvas: np.ndarray) -> dict[str, float]:
    """Weighted per-term losses plus the total, keyed for reporting."""
    trace = forward(net, canvas, _needed_layers(objective))
    out: dict[str, float] = {}
    if isinstance(objective, (L2Activation, GuidedDot)):
        if isinstance(objective, L2Activation):
            loss, _ = eval_l2(trace.entries[objective.layer])
        else:
            loss, _ = eval_guided(trace.entries[objective.layer], objective.guide_features)
        out["total"] = loss
        return out
    closs, _ = eval_content(trace.entries[objective.content_layer], objective.content_target)
    total = objective.alpha * closs
    out["content"] = objective.alpha * closs
    for term in objective.style_terms:
        sloss, _ = eval_style(trace.entries[term.layer], term.target_gram, term.weight)
        out[f"style[{term.layer}]"] = objective.beta * sloss
        total += objective.beta * sloss
    out["total"] = total
    return out


def feature_distance(net: NetworkSpec, image_a: np.ndarray, image_b: np.ndarray, layer: str) -> float:
    """Size-normalized activation distance: ||A - B||_2 / sqrt(element count)."""
    a = np.asarray(image_a)
    b = np.asarray(image_b)
    if a.shape != b.shape:
        raise ObjectiveError(f"images must share one shape, got {a.shape} and {b.shape}")
    _check_layer(net, layer)
    fa = forward(net, a, [layer]).entries[layer]
    fb = forward(net, b, [layer]).entries[layer]
    diff = (fa - fb).astype(np.float64, copy=False)
    return float(np.linalg.norm(diff.ravel()) / np.sqrt(diff.size))
