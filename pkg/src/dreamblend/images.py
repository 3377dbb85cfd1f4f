"""PNG I/O and the float conversions on either side of the network.

Decoding accepts 8-bit RGB or RGBA PNGs only; RGBA is composited over a
white background at load. Encoding always writes RGB PNG, losslessly, so
decode(encode(x)) round-trips bit-exactly. ``preprocess`` maps bytes to
the network's float input space (channel reorder, scale, mean shift) and
``deprocess`` inverts it with round-half-away-from-zero and clamping.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageError
from .netgraph import NetworkSpec


@dataclass
class ImageBuffer:
    """Decoded raster: uint8 RGB pixels shaped (height, width, 3)."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.width < 1 or self.height < 1:
            raise ImageError(f"image extent must be positive, got {self.width}x{self.height}")
        if self.pixels.dtype != np.uint8 or self.pixels.shape != (self.height, self.width, 3):
            raise ImageError(
                f"pixels must be uint8 with shape ({self.height}, {self.width}, 3), got {self.pixels.dtype} {self.pixels.shape}"
            )


def _composite_over_white(rgba: np.ndarray) -> np.ndarray:
    rgb = rgba[..., :3].astype(np.uint32)
    alpha = rgba[..., 3:].astype(np.uint32)
    out = (rgb * alpha + 255 * (255 - alpha) + 127) // 255
    return out.astype(np.uint8)


def decode(path) -> ImageBuffer:
    """Read one PNG file into an ImageBuffer."""
    path = Path(path)
    try:
        img = Image.open(path)
    except FileNotFoundError as exc:
        raise ImageError(f"cannot read image {path}: file not found") from exc
    except UnidentifiedImageError as exc:
        raise ImageError(f"{path} is not a recognized image file") from exc
    except OSError as exc:
        raise ImageError(f"cannot read image {path}: {exc}") from exc
    with img:
        if img.format != "PNG":
            raise ImageError(f"{path}: unsupported format {img.format} (only PNG is supported)")
        if img.mode not in ("RGB", "RGBA"):
            raise ImageError(f"{path}: unsupported PNG mode {img.mode} (need 8-bit RGB or RGBA)")
        try:
            arr = np.asarray(img)
        except OSError as exc:
            raise ImageError(f"{path}: corrupt PNG data: {exc}") from exc
    if img.mode == "RGBA":
        arr = _composite_over_white(arr)
    else:
        arr = arr.copy()
    h, w = arr.shape[:2]
    return ImageBuffer(width=w, height=h, pixels=arr)


def encode(image: ImageBuffer, path) -> None:
    """Write an ImageBuffer as an RGB PNG file."""
    path = Path(path)
    try:
        Image.fromarray(image.pixels, "RGB").save(path, format="PNG")
    except OSError as exc:
        raise ImageError(f"cannot write image {path}: {exc}") from exc


def _order_perm(net: NetworkSpec) -> list[int]:
    # Output channel c reads source channel perm[c]; 'bgr' reverses RGB.
    return [2, 1, 0] if net.channel_order == "bgr" else [0, 1, 2]


def preprocess(image: ImageBuffer, net: NetworkSpec, dtype=np.float32) -> np.ndarray:
    """Bytes to network floats: t[c] = pixel_scale * raw[perm[c]] - mean[c]."""
    perm = _order_perm(net)
    planes = image.pixels.transpose(2, 0, 1).astype(dtype)[perm]
    mean = np.asarray(net.mean, dtype=dtype).reshape(3, 1, 1)
    scale = np.asarray(net.pixel_scale, dtype=dtype)
    return planes * scale - mean


def deprocess(tensor: np.ndarray, net: NetworkSpec) -> ImageBuffer:
    """Network floats back to bytes, rounding half away from zero, clamping to 0..255."""
    t = np.asarray(tensor)
    if t.ndim != 3 or t.shape[0] != 3:
        raise ImageError(f"deprocess expects a (3, H, W) tensor, got shape {t.shape}")
    perm = _order_perm(net)
    x = t.astype(np.float64)
    raw = (x + net.mean.reshape(3, 1, 1)) / net.pixel_scale
    rgb = np.empty_like(raw)
    rgb[perm] = raw
    rounded = np.copysign(np.floor(np.abs(rgb) + 0.5), rgb)
    clipped = np.clip(rounded, 0, 255).astype(np.uint8)
    pixels = np.ascontiguousarray(clipped.transpose(1, 2, 0))
    return ImageBuffer(width=pixels.shape[1], height=pixels.shape[0], pixels=pixels)
