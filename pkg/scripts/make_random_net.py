#!/usr/bin/env python3
"""Generate a random-weight model manifest + blob pair.

Handy for smoke tests and demos: the emitted network is a conv/relu chain
with Gaussian weights, ready for the ``dreamblend`` CLI. Example:

    python3 scripts/make_random_net.py --output /tmp/toy.json --depth 3
    dreamblend inspect --model /tmp/toy.json
"""

import argparse

import numpy as np

from dreamblend.netgraph import LayerSpec, build_network, infer_shapes, save_network


def build_random_net(name, channels, width, depth, seed, spread):
    rng = np.random.default_rng(seed)
    layers = [LayerSpec(name="data", op="input", channels=channels)]
    chunks = []
    offset = 0
    prev_name, prev_c = "data", channels
    for i in range(1, depth + 1):
        out_c = width
        kernel = rng.normal(0.0, spread / np.sqrt(prev_c * 9), size=(out_c, prev_c, 3, 3))
        bias = np.zeros(out_c)
        layers.append(
            LayerSpec(
                name=f"conv{i}", op="conv", inputs=(prev_name,),
                out_channels=out_c, in_channels=prev_c,
                kernel_h=3, kernel_w=3, stride=1, pad=1,
                weight_offset=offset, weight_count=kernel.size,
                bias_offset=offset + kernel.size, bias_count=out_c,
            )
        )
        chunks += [kernel.ravel(), bias]
        offset += kernel.size + out_c
        layers.append(LayerSpec(name=f"relu{i}", op="relu", inputs=(f"conv{i}",)))
        prev_name, prev_c = f"relu{i}", out_c
    blob = np.concatenate(chunks)
    return build_network(name, layers, (0.0, 0.0, 0.0), "rgb", 1.0, blob)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--output", required=True, help="manifest path to write (blob lands beside it)")
    parser.add_argument("--channels", type=int, default=3, help="input channels (default 3)")
    parser.add_argument("--width", type=int, default=8, help="feature channels per conv (default 8)")
    parser.add_argument("--depth", type=int, default=2, help="number of conv/relu pairs (default 2)")
    parser.add_argument("--seed", type=int, default=0, help="weight seed (default 0)")
    parser.add_argument("--spread", type=float, default=1.0, help="weight scale multiplier (default 1)")
    args = parser.parse_args()

    net = build_random_net("random-net", args.channels, args.width, args.depth, args.seed, args.spread)
    path = save_network(net, args.output)
    print(f"wrote {path}")
    for name, op, (c, h, w) in infer_shapes(net, 64, 64):
        print(f"  {name:<8} {op:<8} {c}x{h}x{w}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
