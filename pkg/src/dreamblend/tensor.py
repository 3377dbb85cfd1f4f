"""Dense tensor helpers shared by the network engine and the optimizers.

Tensors are plain numpy arrays. Images and activations use channels-first
layout (C, H, W); flattened feature matrices are (C, H*W) with spatial
positions scanned row-major. All functions here are pure: arguments are
never written to, and identical inputs give bit-identical outputs.
"""

from __future__ import annotations

import numpy as np

from .errors import TensorError

_ELEMENTWISE_OPS = ("add", "sub", "mul", "scale")


def _ensure_finite(arr: np.ndarray, what: str) -> None:
    if not np.isfinite(arr).all():
        raise TensorError(f"{what} produced non-finite values")


def elementwise(op: str, a, b) -> np.ndarray:
    """Pointwise binary arithmetic.

    ``op`` is one of add, sub, mul, scale. The first three accept a tensor
    or scalar second operand (tensor shapes must match exactly); scale
    multiplies by a scalar only.
    """
    if op not in _ELEMENTWISE_OPS:
        raise TensorError(f"unknown elementwise op '{op}'")
    a = np.asarray(a)
    with np.errstate(over="ignore", invalid="ignore"):
        if op == "scale":
            if np.ndim(b) != 0:
                raise TensorError("scale expects a scalar second operand")
            out = a * b
        else:
            b = np.asarray(b)
            if b.ndim != 0 and b.shape != a.shape:
                raise TensorError(f"shape mismatch: {a.shape} vs {b.shape}")
            if op == "add":
                out = a + b
            elif op == "sub":
                out = a - b
            else:
                out = a * b
    _ensure_finite(out, f"elementwise {op}")
    return out


def flatten_spatial(t: np.ndarray) -> np.ndarray:
    """Reshape (C, H, W) to (C, H*W); column m holds position (m // W, m % W)."""
    t = np.asarray(t)
    if t.ndim != 3:
        raise TensorError(f"flatten_spatial expects rank 3, got shape {t.shape}")
    c, h, w = t.shape
    return t.reshape(c, h * w)


def gram(f: np.ndarray) -> np.ndarray:
    """Channel inner-product matrix G[i, j] = sum_m f[i, m] * f[j, m].

    Unnormalized. The upper triangle is computed once and mirrored onto the
    lower one, so G == G.T holds exactly, not just to rounding error.
    """
    f = np.asarray(f)
    if f.ndim != 2:
        raise TensorError(f"gram expects rank 2, got shape {f.shape}")
    g = f @ f.T
    g = np.triu(g) + np.triu(g, 1).T
    _ensure_finite(g, "gram")
    return g


def _axis_samples(n_in: int, n_out: int):
    # Corner-aligned: output i samples input position i * (n_in-1) / (n_out-1);
    # a single output sample sits at position 0.
    if n_out == 1:
        pos = np.zeros(1)
    else:
        pos = np.arange(n_out) * ((n_in - 1) / (n_out - 1))
    lo = np.minimum(pos.astype(np.intp), n_in - 1)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, pos - lo


def resize_bilinear(t: np.ndarray, new_h: int, new_w: int) -> np.ndarray:
    """Per-channel bilinear resampling with corner-aligned sample positions.

    Interpolation is written in lerp form a + w*(b - a), which keeps
    constant inputs exactly constant; a same-size call returns a copy of
    the input bit-for-bit.
    """
    t = np.asarray(t)
    if t.ndim != 3:
        raise TensorError(f"resize_bilinear expects rank 3, got shape {t.shape}")
    if new_h < 1 or new_w < 1:
        raise TensorError(f"target size must be at least 1x1, got {new_h}x{new_w}")
    if not np.issubdtype(t.dtype, np.floating):
        t = t.astype(np.float64)
    c, h, w = t.shape
    if (new_h, new_w) == (h, w):
        return t.copy()

    ly, hy, fy = _axis_samples(h, new_h)
    lx, hx, fx = _axis_samples(w, new_w)
    wy = fy.astype(t.dtype)[None, :, None]
    wx = fx.astype(t.dtype)[None, None, :]

    tl = t[:, ly][:, :, lx]
    tr = t[:, ly][:, :, hx]
    bl = t[:, hy][:, :, lx]
    br = t[:, hy][:, :, hx]
    top = tl + wx * (tr - tl)
    bot = bl + wx * (br - bl)
    return top + wy * (bot - top)
