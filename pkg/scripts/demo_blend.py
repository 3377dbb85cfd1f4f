#!/usr/bin/env python3
"""End-to-end demo: dream, guided dream, and style transfer on synthetic images.

Creates a random-weight network and two smooth random PNGs, then runs each
blending mode at a small scale and reports how far every output moved in
feature space. Everything lands in --outdir. Example:

    python3 scripts/demo_blend.py --outdir /tmp/blend-demo
"""

import argparse
from pathlib import Path

import numpy as np

from dreamblend.images import ImageBuffer, deprocess, encode, preprocess
from dreamblend.netgraph import save_network
from dreamblend.objectives import (
    GuidedRequest,
    L2Request,
    StyleContentRequest,
    build_objective,
    feature_distance,
)
from dreamblend.optimizer import RunConfig, dream, style_transfer

from make_random_net import build_random_net


def smooth_noise_png(rng, size, path):
    """Low-frequency random image: 6x6 noise upsampled to size x size."""
    from dreamblend.tensor import resize_bilinear

    coarse = rng.uniform(0.0, 255.0, size=(3, 6, 6))
    fine = resize_bilinear(coarse, size, size)
    pixels = np.clip(np.round(fine), 0, 255).astype(np.uint8).transpose(1, 2, 0)
    image = ImageBuffer(width=size, height=size, pixels=np.ascontiguousarray(pixels))
    encode(image, path)
    return image


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--outdir", required=True, help="directory for the demo artifacts")
    parser.add_argument("--size", type=int, default=64, help="image extent (default 64)")
    parser.add_argument("--seed", type=int, default=0, help="seed for net, images, and runs")
    parser.add_argument("--iters", type=int, default=10, help="dream iterations per octave (default 10)")
    parser.add_argument("--style-iters", type=int, default=120, help="style iterations (default 120)")
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    net = build_random_net("demo-net", 3, 8, 2, args.seed, 1.0)
    save_network(net, outdir / "demo.json")
    content_img = smooth_noise_png(rng, args.size, outdir / "content.png")
    guide_img = smooth_noise_png(rng, args.size, outdir / "guide.png")

    content = preprocess(content_img, net)
    guide = preprocess(guide_img, net)
    report = []

    cfg = RunConfig(iterations=args.iters, octaves=3, jitter=4, seed=args.seed)
    free = dream(net, build_objective(net, L2Request("relu2")), content, cfg)
    encode(deprocess(free, net), outdir / "dream.png")
    report.append(("dream.png", feature_distance(net, content, free, "relu2")))

    guided_obj = build_objective(net, GuidedRequest("relu2"), style_image=guide)
    guided = dream(net, guided_obj, content, cfg)
    encode(deprocess(guided, net), outdir / "guided.png")
    report.append(("guided.png", feature_distance(net, content, guided, "relu2")))

    style_obj = build_objective(
        net,
        StyleContentRequest(style_layers=("conv1", "relu2"), content_layer="relu1"),
        style_image=guide,
        content_image=content,
    )
    styled = style_transfer(
        net, style_obj, content, RunConfig(iterations=args.style_iters, step_size=2.0, seed=args.seed)
    )
    encode(deprocess(styled, net), outdir / "styled.png")
    report.append(("styled.png", feature_distance(net, content, styled, "relu2")))

    print(f"artifacts in {outdir}")
    for name, dist in report:
        print(f"  {name:<12} feature_distance={dist:.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
