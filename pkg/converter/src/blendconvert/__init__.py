"""Checkpoint-to-model converter for the image-blending engine."""

from .arch import ARCHITECTURES, ConvStageArch
from .convert import ConversionReport, ConvertError, convert, load_checkpoint, render_report

__all__ = [
    "ARCHITECTURES",
    "ConvStageArch",
    "ConversionReport",
    "ConvertError",
    "convert",
    "load_checkpoint",
    "render_report",
]
