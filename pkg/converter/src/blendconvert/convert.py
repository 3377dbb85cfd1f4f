"""Checkpoint-to-model conversion core."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arch import ARCHITECTURES, CHANNEL_ORDER, IMAGENET_MEAN, IMAGENET_STD, PIXEL_SCALE, ConvStageArch
from . import manifest

SOURCE_FORMAT = "torch-state-dict"

# State-dict suffixes belonging to normalization layers the engine has no
# op for; they are dropped, loudly, rather than silently misread.
_NORMALIZATION_SUFFIXES = (".running_mean", ".running_var", ".num_batches_tracked")


class ConvertError(Exception):
    """Conversion cannot proceed; the message says why."""


@dataclass(frozen=True)
class ConversionReport:
    """What a conversion did, enough to audit it without the files."""

    source_format: str
    architecture: str
    layer_count: int
    parameter_count: int
    mapping: tuple[tuple[str, str, tuple[int, ...]], ...]  # source key, layer, shape
    blob_sha256: str
    dropped: tuple[str, ...]
    warnings: tuple[str, ...]


def load_checkpoint(path) -> dict[str, np.ndarray]:
    """Read a Torch state dict into plain float64 arrays."""
    import torch

    path = Path(path)
    if not path.exists():
        raise ConvertError(f"checkpoint {path} does not exist")
    try:
        obj = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise ConvertError(f"cannot read checkpoint {path}: {exc}") from exc
    if isinstance(obj, dict) and "state_dict" in obj and isinstance(obj["state_dict"], dict):
        obj = obj["state_dict"]
    if not isinstance(obj, dict):
        raise ConvertError(f"checkpoint {path} is not a state dict (got {type(obj).__name__})")
    out = {}
    for key, value in obj.items():
        if not torch.is_tensor(value):
            raise ConvertError(f"checkpoint entry '{key}' is not a tensor")
        out[key] = value.detach().cpu().numpy().astype(np.float64)
    return out


def _partition_keys(state: dict[str, np.ndarray]):
    """Split checkpoint keys into conv parameters, dropped, and warned."""
    params, dropped, warned = {}, [], []
    for key in state:
        if key.startswith("classifier."):
            dropped.append(key)
        elif key.endswith(_NORMALIZATION_SUFFIXES):
            warned.append(key)
        elif key.startswith("features.") and key.endswith((".weight", ".bias")):
            params[key] = state[key]
        else:
            raise ConvertError(f"checkpoint key '{key}' does not fit the selected architecture")
    return params, sorted(dropped), sorted(warned)


def _take(params: dict[str, np.ndarray], key: str, want_shape: tuple[int, ...]) -> np.ndarray:
    if key not in params:
        raise ConvertError(f"checkpoint is missing '{key}' required by the architecture table")
    arr = params.pop(key)
    if arr.shape != want_shape:
        raise ConvertError(f"'{key}' has shape {arr.shape}, architecture table expects {want_shape}")
    return arr


def convert(checkpoint_path, architecture_id: str, manifest_path) -> ConversionReport:
    """Convert a checkpoint into a manifest/blob pair; returns the report.

    The torchvision per-channel std is folded into the first conv's kernels
    (w[:, c] /= std[c]); the manifest then carries only the published means
    and the 1/255 pixel scale, which the engine applies natively. Kernels
    keep the checkpoint's [out][in][kh][kw] layout — no transpose needed.
    """
    if architecture_id not in ARCHITECTURES:
        known = ", ".join(sorted(ARCHITECTURES))
        raise ConvertError(f"unknown architecture '{architecture_id}' (supported: {known})")
    arch: ConvStageArch = ARCHITECTURES[architecture_id]
    params, dropped, warned = _partition_keys(load_checkpoint(checkpoint_path))

    layers = [manifest.input_layer("data", arch.in_channels)]
    chunks: list[np.ndarray] = []
    mapping: list[tuple[str, str, tuple[int, ...]]] = []
    offset = 0
    previous = "data"
    table = arch.conv_table()
    stage_of = {}
    index = 0
    for stage, count in enumerate(arch.blocks, start=1):
        for _ in range(count):
            stage_of[table[index][1]] = stage
            index += 1

    for position, (source, conv_name, out_c, in_c) in enumerate(table):
        weight = _take(params, f"{source}.weight", (out_c, in_c, 3, 3))
        bias = _take(params, f"{source}.bias", (out_c,))
        if position == 0:
            for c, std in enumerate(IMAGENET_STD[: arch.in_channels]):
                weight[:, c] /= std
        layers.append(
            manifest.conv_layer(conv_name, previous, out_c, in_c, offset, offset + weight.size)
        )
        chunks += [weight.ravel(), bias]
        offset += weight.size + bias.size
        mapping.append((f"{source}.weight", conv_name, (out_c, in_c, 3, 3)))
        relu_name = f"relu{conv_name[4:]}"
        layers.append(manifest.relu_layer(relu_name, conv_name))
        previous = relu_name
        stage = stage_of[conv_name]
        last_in_stage = position + 1 == len(table) or stage_of[table[position + 1][1]] != stage
        if last_in_stage:
            pool_name = f"pool{stage}"
            layers.append(manifest.maxpool_layer(pool_name, previous))
            previous = pool_name

    if params:
        extra = ", ".join(sorted(params))
        raise ConvertError(f"checkpoint has feature layers the architecture table does not map: {extra}")

    blob = np.concatenate(chunks).astype("<f4")
    _check_invariants(blob, mapping, arch)
    path = manifest.write_model(
        manifest_path, architecture_id, layers, IMAGENET_MEAN, CHANNEL_ORDER, PIXEL_SCALE, blob
    )
    digest = hashlib.sha256((path.parent / (path.stem + ".blob")).read_bytes()).hexdigest()

    return ConversionReport(
        source_format=SOURCE_FORMAT,
        architecture=architecture_id,
        layer_count=len(layers),
        parameter_count=int(blob.size),
        mapping=tuple(mapping),
        blob_sha256=digest,
        dropped=tuple(dropped),
        warnings=tuple(f"dropped normalization parameter '{k}' (engine has no such op)" for k in warned),
    )


def _check_invariants(blob: np.ndarray, mapping, arch: ConvStageArch) -> None:
    if int(blob.size) != arch.parameter_count():
        raise ConvertError(
            f"internal: blob has {blob.size} values, architecture defines {arch.parameter_count()}"
        )
    mapped = {layer for _, layer, _ in mapping}
    expected = {name for _, name, _, _ in arch.conv_table()}
    if mapped != expected:
        raise ConvertError(f"internal: unmapped conv layers {sorted(expected - mapped)}")


def render_report(report: ConversionReport) -> str:
    lines = [
        f"source_format={report.source_format}",
        f"architecture={report.architecture}",
        f"layers={report.layer_count}",
        f"parameters={report.parameter_count}",
        f"blob_sha256={report.blob_sha256}",
    ]
    for message in report.warnings:
        lines.append(f"warning: {message}")
    if report.dropped:
        lines.append("dropped: " + ", ".join(report.dropped))
    lines.append("mapping:")
    width = max(len(src) for src, _, _ in report.mapping)
    for src, layer, shape in report.mapping:
        lines.append(f"  {src:<{width}}  ->  {layer:<8} {'x'.join(str(d) for d in shape)}")
    return "\n".join(lines)
