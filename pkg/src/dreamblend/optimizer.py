"""Pixel-space optimizers: multi-octave jittered ascent and Adam descent.

``dream`` runs gradient ascent on the canvas across an octave pyramid,
re-injecting lost detail when stepping up a scale, jittering the canvas
with a seeded circular shift before every update, and normalizing each
step by the mean absolute gradient. ``style_transfer`` runs Adam descent
from seeded uniform noise. Both clip the canvas into the valid
preprocessed range every iteration and abort loudly on non-finite
gradients. Identical seeds give identical runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OptimizerError
from .netgraph import NetworkSpec
from .objectives import GuidedDot, L2Activation, StyleContent, evaluate
from .tensor import resize_bilinear

GRAD_NORM_EPS = 1e-8


@dataclass
class RunConfig:
    """Knobs shared by both optimizers; validated on construction.

    ``clip_lo``/``clip_hi`` are scalars or per-channel sequences in
    preprocessed units; None derives the bounds for raw bytes 0..255 from
    the network's preprocessing constants. ``decay1``/``decay2``/``epsilon``
    only matter for style transfer.
    """

    iterations: int = 10
    step_size: float = 1.5
    octaves: int = 4
    octave_scale: float = 1.4
    jitter: int = 32
    clip_lo: object = None
    clip_hi: object = None
    seed: int = 0
    decay1: float = 0.9
    decay2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.iterations < 0:
            raise OptimizerError(f"iterations must be >= 0, got {self.iterations}")
        if not self.step_size > 0:
            raise OptimizerError(f"step_size must be positive, got {self.step_size}")
        if self.octaves < 1:
            raise OptimizerError(f"octaves must be >= 1, got {self.octaves}")
        if not self.octave_scale > 1:
            raise OptimizerError(f"octave_scale must be > 1, got {self.octave_scale}")
        if self.jitter < 0:
            raise OptimizerError(f"jitter must be >= 0, got {self.jitter}")
        if not 0 <= self.seed < 2**64:
            raise OptimizerError(f"seed must fit in unsigned 64 bits, got {self.seed}")
        for name in ("decay1", "decay2"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise OptimizerError(f"{name} must lie in [0, 1), got {v}")
        if not self.epsilon > 0:
            raise OptimizerError(f"epsilon must be positive, got {self.epsilon}")


def default_clip(net: NetworkSpec, channels: int) -> tuple[np.ndarray, np.ndarray]:
    """Preprocessed-space bounds of raw byte values 0..255.

    Per channel for 3-channel inputs; other channel counts (toy nets) get
    the widest range the three means produce.
    """
    mean = np.asarray(net.mean, dtype=np.float64)
    lo = 0.0 * net.pixel_scale - mean
    hi = 255.0 * net.pixel_scale - mean
    if channels == 3:
        return lo, hi
    return np.full(channels, lo.min()), np.full(channels, hi.max())


def _clip_bounds(config: RunConfig, net: NetworkSpec, channels: int, dtype) -> tuple[np.ndarray, np.ndarray]:
    d_lo, d_hi = default_clip(net, channels)
    lo = d_lo if config.clip_lo is None else np.broadcast_to(np.asarray(config.clip_lo, dtype=np.float64), (channels,))
    hi = d_hi if config.clip_hi is None else np.broadcast_to(np.asarray(config.clip_hi, dtype=np.float64), (channels,))
    if not np.all(lo < hi):
        raise OptimizerError(f"clip_lo must be strictly below clip_hi per channel, got {lo} vs {hi}")
    shape = (channels, 1, 1)
    return lo.astype(dtype).reshape(shape), hi.astype(dtype).reshape(shape)


def octave_pyramid(image: np.ndarray, octaves: int, octave_scale: float) -> list[np.ndarray]:
    """Smallest-to-largest rescales of ``image``; the last is a full-size copy.

    Level k measures round(side / octave_scale^(octaves-1-k)), clamped to
    at least one pixel.
    """
    image = np.asarray(image)
    if image.ndim != 3:
        raise OptimizerError(f"octave_pyramid expects a rank-3 image, got shape {image.shape}")
    if octaves < 1:
        raise OptimizerError(f"octaves must be >= 1, got {octaves}")
    if not octave_scale > 1:
        raise OptimizerError(f"octave_scale must be > 1, got {octave_scale}")
    _, h, w = image.shape
    levels = []
    for k in range(octaves):
        factor = octave_scale ** (octaves - 1 - k)
        nh = max(1, round(h / factor))
        nw = max(1, round(w / factor))
        levels.append(resize_bilinear(image, nh, nw))
    return levels


def _finite_or_die(loss: float, grad: np.ndarray, where: str) -> None:
    if not (np.isfinite(loss) and np.isfinite(grad).all()):
        raise OptimizerError(f"non-finite loss or gradient at {where}")


def dream(net: NetworkSpec, objective, source_image: np.ndarray, config: RunConfig, progress=None):
    """Multi-octave gradient ascent starting from the source image.

    Per iteration: circularly shift the canvas by a seeded offset in
    [-jitter, jitter], evaluate the objective, step by
    step_size * grad / (mean |grad| + 1e-8), undo the shift, clip. Octave
    transitions upsample the canvas and re-add the detail the smaller
    octave could not represent. ``progress``, if given, is called as
    progress(octave, iteration, loss, canvas) after every update.
    """
    if not isinstance(objective, (L2Activation, GuidedDot)):
        raise OptimizerError(f"dream requires an activation or guided objective, got {type(objective).__name__}")
    src = np.asarray(source_image)
    if src.ndim != 3:
        raise OptimizerError(f"source image must be rank 3, got shape {src.shape}")
    if not np.issubdtype(src.dtype, np.floating):
        src = src.astype(np.float64)
    rng = np.random.default_rng(config.seed)
    lo, hi = _clip_bounds(config, net, src.shape[0], src.dtype)
    pyramid = octave_pyramid(src, config.octaves, config.octave_scale)
    canvas = pyramid[0].copy()
    for k, base in enumerate(pyramid):
        if k:
            h, w = base.shape[1:]
            detail = resize_bilinear(canvas, h, w) - resize_bilinear(pyramid[k - 1], h, w)
            canvas = base + detail
            np.clip(canvas, lo, hi, out=canvas)
        for it in range(config.iterations):
            oy, ox = (int(v) for v in rng.integers(-config.jitter, config.jitter + 1, size=2))
            shifted = np.roll(canvas, (oy, ox), axis=(1, 2))
            loss, grad = evaluate(objective, net, shifted)
            _finite_or_die(loss, grad, f"octave {k} iteration {it}")
            shifted += (config.step_size / (float(np.mean(np.abs(grad))) + GRAD_NORM_EPS)) * grad
            canvas = np.roll(shifted, (-oy, -ox), axis=(1, 2))
            np.clip(canvas, lo, hi, out=canvas)
            if progress is not None:
                progress(k, it, loss, canvas)
    return canvas


def style_transfer(
    net: NetworkSpec,
    objective,
    content_image: np.ndarray,
    config: RunConfig,
    initial_canvas: np.ndarray | None = None,
    progress=None,
):
    """Adam descent from seeded uniform noise toward the style-content optimum.

    ``content_image`` fixes the output size only; the targets live inside
    the objective. ``initial_canvas`` replaces the noise start (testing
    hook). ``progress``, if given, is called as
    progress(0, iteration, loss, canvas) after every update, where loss was
    measured before the update.
    """
    if not isinstance(objective, StyleContent):
        raise OptimizerError(f"style transfer requires a style-content objective, got {type(objective).__name__}")
    content = np.asarray(content_image)
    if content.ndim != 3:
        raise OptimizerError(f"content image must be rank 3, got shape {content.shape}")
    dtype = content.dtype if np.issubdtype(content.dtype, np.floating) else np.float64
    rng = np.random.default_rng(config.seed)
    lo, hi = _clip_bounds(config, net, content.shape[0], dtype)
    if initial_canvas is not None:
        canvas = np.array(initial_canvas, dtype=dtype)
        if canvas.shape != content.shape:
            raise OptimizerError(f"initial canvas shape {canvas.shape} does not match content shape {content.shape}")
    else:
        canvas = rng.uniform(lo, hi, size=content.shape).astype(dtype)
    m = np.zeros_like(canvas)
    v = np.zeros_like(canvas)
    for t in range(1, config.iterations + 1):
        loss, grad = evaluate(objective, net, canvas)
        _finite_or_die(loss, grad, f"iteration {t}")
        m = config.decay1 * m + (1.0 - config.decay1) * grad
        v = config.decay2 * v + (1.0 - config.decay2) * np.square(grad)
        m_hat = m / (1.0 - config.decay1**t)
        v_hat = v / (1.0 - config.decay2**t)
        canvas = canvas - config.step_size * m_hat / (np.sqrt(v_hat) + config.epsilon)
        np.clip(canvas, lo, hi, out=canvas)
        if progress is not None:
            progress(0, t - 1, loss, canvas)
    return canvas
