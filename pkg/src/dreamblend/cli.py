"""Command-line front end.

Four subcommands: ``dream`` (unguided or guided ascent), ``style``
(style-content descent), ``distance`` (activation-space distance between
two images), ``inspect`` (layer table for a model). Summaries go to
stdout as key=value lines; failures print ``error: ...`` to stderr and
exit 1. The DREAMBLEND_MODEL environment variable supplies a default for
--model.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .errors import EngineError
from .images import decode, deprocess, encode, preprocess
from .netgraph import infer_shapes, load_network
from .objectives import (
    GuidedRequest,
    L2Request,
    StyleContentRequest,
    build_objective,
    evaluate,
    feature_distance,
    loss_terms,
)
from .optimizer import RunConfig, dream, style_transfer

MODEL_ENV = "DREAMBLEND_MODEL"

_DTYPES = {"single": np.float32, "double": np.float64}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dreamblend",
        description="Blend images through a convolutional network: dream, style transfer, and analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--model",
        default=os.environ.get(MODEL_ENV),
        help=f"path to the model manifest (default: ${MODEL_ENV})",
    )
    common.add_argument("--precision", choices=sorted(_DTYPES), default="single", help="float width for the run")

    p = sub.add_parser("dream", parents=[common], help="gradient-ascent hallucination, optionally guided")
    p.add_argument("--input", required=True, help="content source PNG; the canvas starts here")
    p.add_argument("--guide", help="guide PNG; when given, steer textures toward its features")
    p.add_argument("--layer", required=True, help="layer whose activation drives the ascent")
    p.add_argument("--output", required=True, help="where to write the result PNG")
    p.add_argument("--iters", type=int, default=10, help="iterations per octave (default 10)")
    p.add_argument("--octaves", type=int, default=4, help="number of octaves (default 4)")
    p.add_argument("--octave-scale", type=float, default=1.4, help="scale ratio between octaves (default 1.4)")
    p.add_argument("--step", type=float, default=1.5, help="step size (default 1.5)")
    p.add_argument("--jitter", type=int, default=32, help="max circular shift per iteration (default 32)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--clip-lo", type=float, default=None, help="override lower canvas bound (preprocessed units)")
    p.add_argument("--clip-hi", type=float, default=None, help="override upper canvas bound (preprocessed units)")
    p.set_defaults(func=_cmd_dream)

    p = sub.add_parser("style", parents=[common], help="style transfer by Adam descent from noise")
    p.add_argument("--content", required=True, help="content PNG (fixes the output size and content target)")
    p.add_argument("--style", required=True, help="style PNG (source of the Gram targets)")
    p.add_argument("--style-layer", action="append", required=True, help="style layer; repeat for several")
    p.add_argument("--content-layer", required=True, help="layer for the content term")
    p.add_argument(
        "--style-weight",
        action="append",
        type=float,
        help="per-style-layer weight; repeat to match --style-layer (default equal, summing to 1)",
    )
    p.add_argument("--alpha", type=float, default=1.0, help="content term weight (default 1)")
    p.add_argument("--beta", type=float, default=1000.0, help="style term weight (default 1000)")
    p.add_argument("--iters", type=int, default=500, help="iterations (default 500)")
    p.add_argument("--step", type=float, default=1.0, help="Adam step size (default 1)")
    p.add_argument("--seed", type=int, default=0, help="random seed for the noise canvas (default 0)")
    p.add_argument("--output", required=True, help="where to write the result PNG")
    p.set_defaults(func=_cmd_style)

    p = sub.add_parser("distance", parents=[common], help="activation distance between two images")
    p.add_argument("image_a", help="first PNG")
    p.add_argument("image_b", help="second PNG")
    p.add_argument(
        "--layer",
        required=True,
        help="layer to compare at; prints L2 distance normalized by sqrt of the activation element count",
    )
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("inspect", parents=[common], help="print the model's layer table")
    p.add_argument("--input-size", type=int, default=224, help="square input extent for shape inference (default 224)")
    p.set_defaults(func=_cmd_inspect)

    return parser


def _require_model(args) -> str:
    if not args.model:
        raise EngineError(f"no model given: pass --model or set {MODEL_ENV}")
    return args.model


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _cmd_dream(args) -> int:
    net = load_network(_require_model(args))
    dtype = _DTYPES[args.precision]
    source = preprocess(decode(args.input), net, dtype)
    if args.guide is not None:
        guide = preprocess(decode(args.guide), net, dtype)
        objective = build_objective(net, GuidedRequest(args.layer), style_image=guide)
        mode = "guided"
    else:
        objective = build_objective(net, L2Request(args.layer))
        mode = "dream"
    config = RunConfig(
        iterations=args.iters,
        step_size=args.step,
        octaves=args.octaves,
        octave_scale=args.octave_scale,
        jitter=args.jitter,
        clip_lo=args.clip_lo,
        clip_hi=args.clip_hi,
        seed=args.seed,
    )
    loss_initial, _ = evaluate(objective, net, source)
    canvas = dream(net, objective, source, config)
    loss_final, _ = evaluate(objective, net, canvas)
    encode(deprocess(canvas, net), args.output)
    print(f"mode={mode}")
    print(f"layer={args.layer}")
    if args.guide is not None:
        print(f"guide={args.guide}")
    print(f"iterations={args.iters}")
    print(f"octaves={args.octaves}")
    print(f"seed={args.seed}")
    print(f"loss_initial={_fmt(loss_initial)}")
    print(f"loss_final={_fmt(loss_final)}")
    print(f"output={args.output}")
    return 0


def _cmd_style(args) -> int:
    net = load_network(_require_model(args))
    dtype = _DTYPES[args.precision]
    content = preprocess(decode(args.content), net, dtype)
    style = preprocess(decode(args.style), net, dtype)
    request = StyleContentRequest(
        style_layers=tuple(args.style_layer),
        content_layer=args.content_layer,
        alpha=args.alpha,
        beta=args.beta,
        style_weights=tuple(args.style_weight) if args.style_weight else None,
    )
    objective = build_objective(net, request, style_image=style, content_image=content)
    config = RunConfig(
        iterations=args.iters,
        step_size=args.step,
        octaves=1,
        jitter=0,
        seed=args.seed,
    )
    losses: list[float] = []
    canvas = style_transfer(net, objective, content, config, progress=lambda _o, _i, loss, _c: losses.append(loss))
    final_terms = loss_terms(objective, net, canvas)
    encode(deprocess(canvas, net), args.output)
    print("mode=style")
    print(f"alpha={_fmt(args.alpha)}")
    print(f"beta={_fmt(args.beta)}")
    print(f"iterations={args.iters}")
    print(f"seed={args.seed}")
    if losses:
        print(f"loss_initial={_fmt(losses[0])}")
    for key, value in final_terms.items():
        if key == "total":
            continue
        print(f"loss_{key}={_fmt(value)}")
    print(f"loss_final={_fmt(final_terms['total'])}")
    print(f"output={args.output}")
    return 0


def _cmd_distance(args) -> int:
    net = load_network(_require_model(args))
    dtype = _DTYPES[args.precision]
    a = preprocess(decode(args.image_a), net, dtype)
    b = preprocess(decode(args.image_b), net, dtype)
    print(f"{feature_distance(net, a, b, args.layer):.6f}")
    return 0


def _cmd_inspect(args) -> int:
    net = load_network(_require_model(args))
    if args.input_size < 1:
        raise EngineError(f"--input-size must be positive, got {args.input_size}")
    table = infer_shapes(net, args.input_size, args.input_size)
    name_w = max(len(name) for name, _, _ in table)
    op_w = max(len(op) for _, op, _ in table)
    for name, op, (c, h, w) in table:
        print(f"{name:<{name_w}}  {op:<{op_w}}  {c}x{h}x{w}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
