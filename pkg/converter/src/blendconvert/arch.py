"""Supported architectures and their checkpoint layout.

Each entry describes a VGG-style feature extractor: stages of 3x3
same-padded conv/relu pairs separated by 2x2/stride-2 max pools, stored in
a Torch ``features``-sequential state dict whose conv weights sit at
predictable indices (conv, relu, conv, relu, ..., pool, ...).
"""

from __future__ import annotations

from dataclasses import dataclass

# Published torchvision preprocessing for these checkpoints. The engine's
# model format applies ``pixel_scale * byte - mean`` per channel; the extra
# per-channel std division is folded into the first conv's kernels during
# conversion so the emitted model needs no new op.
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)
PIXEL_SCALE = 1.0 / 255.0
CHANNEL_ORDER = "rgb"


@dataclass(frozen=True)
class ConvStageArch:
    """Stage widths and depths of one sequential conv architecture."""

    arch_id: str
    blocks: tuple[int, ...]  # convs per stage
    widths: tuple[int, ...]  # conv output channels per stage
    in_channels: int = 3

    def conv_table(self) -> list[tuple[str, str, int, int]]:
        """(source key prefix, manifest conv name, out_channels, in_channels)
        for every conv, in checkpoint order."""
        rows = []
        index = 0
        prev = self.in_channels
        for stage, (count, width) in enumerate(zip(self.blocks, self.widths), start=1):
            for conv in range(1, count + 1):
                rows.append((f"features.{index}", f"conv{stage}_{conv}", width, prev))
                index += 2  # the relu after each conv holds no parameters
                prev = width
            index += 1  # stage-closing max pool
        return rows

    def parameter_count(self) -> int:
        return sum(out * cin * 9 + out for _, _, out, cin in self.conv_table())


ARCHITECTURES = {
    "vgg16": ConvStageArch("vgg16", (2, 2, 3, 3, 3), (64, 128, 256, 512, 512)),
    "vgg19": ConvStageArch("vgg19", (2, 2, 4, 4, 4), (64, 128, 256, 512, 512)),
    # Two-stage miniature with the same layout rules; for tests and demos.
    "vgg-tiny": ConvStageArch("vgg-tiny", (1, 1), (4, 8)),
}
