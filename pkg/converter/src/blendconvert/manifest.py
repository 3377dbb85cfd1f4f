"""Writer for the engine's manifest + blob model format.

Kept self-contained on purpose: the converter talks to the engine only
through this documented file format (JSON manifest next to a raw
little-endian float32 blob), never through the engine's own code.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


def input_layer(name: str, channels: int) -> dict:
    return {"name": name, "op": "input", "channels": channels}


def conv_layer(
    name: str,
    source: str,
    out_channels: int,
    in_channels: int,
    weight_offset: int,
    bias_offset: int,
) -> dict:
    return {
        "name": name,
        "op": "conv",
        "inputs": [source],
        "out_channels": out_channels,
        "in_channels": in_channels,
        "kernel_h": 3,
        "kernel_w": 3,
        "stride": 1,
        "pad": 1,
        "weight_offset": weight_offset,
        "weight_count": out_channels * in_channels * 9,
        "bias_offset": bias_offset,
        "bias_count": out_channels,
    }


def relu_layer(name: str, source: str) -> dict:
    return {"name": name, "op": "relu", "inputs": [source]}


def maxpool_layer(name: str, source: str) -> dict:
    return {"name": name, "op": "maxpool", "inputs": [source], "window": 2, "stride": 2, "pad": 0}


def write_model(
    manifest_path,
    name: str,
    layers: list[dict],
    mean: tuple[float, float, float],
    channel_order: str,
    pixel_scale: float,
    blob: np.ndarray,
) -> Path:
    """Write the manifest/blob pair; returns the manifest path.

    The blob is emitted as little-endian float32 ('<f4'), the only width
    the format defines; the manifest references it by file name.
    """
    path = Path(manifest_path)
    blob_name = path.stem + ".blob"
    doc = {
        "format_version": FORMAT_VERSION,
        "name": name,
        "blob": blob_name,
        "preprocess": {
            "mean": [float(v) for v in mean],
            "channel_order": channel_order,
            "pixel_scale": float(pixel_scale),
        },
        "layers": layers,
    }
    (path.parent / blob_name).write_bytes(np.ascontiguousarray(blob, dtype="<f4").tobytes())
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return path
