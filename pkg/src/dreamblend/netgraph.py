"""Network graph: manifest loading, forward evaluation, pixel backprop.

A network is a DAG of named layers over channels-first activations. The
on-disk format is a pair of files: a UTF-8 JSON manifest describing the
graph plus preprocessing constants, and a raw little-endian float32 blob
holding conv kernels (out, in, kh, kw row-major) and biases (out). The
manifest's ``blob`` field names the blob file relative to the manifest.

Supported ops: input, conv, relu, maxpool, avgpool, concat. Forward
records requested activations in a trace; backward_from propagates
gradients injected at recorded layers down to the input pixels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GraphError, ManifestError, UnknownLayerError

OPS = ("input", "conv", "relu", "maxpool", "avgpool", "concat")

FORMAT_VERSION = 1


@dataclass(frozen=True)
class LayerSpec:
    """One node of the graph. Fields beyond (name, op, inputs) are op-specific."""

    name: str
    op: str
    inputs: tuple[str, ...] = ()
    channels: int = 0  # input op: channel count fed by the image
    out_channels: int = 0
    in_channels: int = 0
    kernel_h: int = 0
    kernel_w: int = 0
    stride: int = 1
    pad: int = 0
    window: int = 0  # pool ops
    weight_offset: int = 0
    weight_count: int = 0
    bias_offset: int = 0
    bias_count: int = 0


@dataclass
class NetworkSpec:
    """A validated, immutable network plus its weight blob.

    ``mean`` is stored in network channel order and ``channel_order`` says
    how image channels map onto network channels ('rgb' keeps them, 'bgr'
    reverses). ``channel_counts`` maps every layer name to its output
    channel count.
    """

    name: str
    layers: tuple[LayerSpec, ...]
    mean: np.ndarray
    channel_order: str
    pixel_scale: float
    blob: np.ndarray
    channel_counts: dict[str, int] = field(default_factory=dict, repr=False)
    by_name: dict[str, LayerSpec] = field(default_factory=dict, repr=False)

    @property
    def input_layer(self) -> LayerSpec:
        return next(ls for ls in self.layers if ls.op == "input")

    def layer_names(self) -> tuple[str, ...]:
        return tuple(ls.name for ls in self.layers)


def build_network(
    name: str,
    layers,
    mean,
    channel_order: str,
    pixel_scale: float,
    blob: np.ndarray,
) -> NetworkSpec:
    """Assemble and validate a NetworkSpec from in-memory parts.

    Raises ManifestError naming the offending layer and field on any
    violation; a returned spec is fully checked.
    """
    layers = tuple(layers)
    mean = np.asarray(mean, dtype=np.float64)
    blob = np.asarray(blob)
    counts = _validate(layers, mean, channel_order, pixel_scale, blob)
    return NetworkSpec(
        name=str(name),
        layers=layers,
        mean=mean,
        channel_order=str(channel_order),
        pixel_scale=float(pixel_scale),
        blob=blob,
        channel_counts=counts,
        by_name={ls.name: ls for ls in layers},
    )


def _validate(layers, mean, channel_order, pixel_scale, blob) -> dict[str, int]:
    if mean.shape != (3,) or not np.isfinite(mean).all():
        raise ManifestError("preprocess.mean must be 3 finite reals")
    if channel_order not in ("rgb", "bgr"):
        raise ManifestError(f"preprocess.channel_order must be 'rgb' or 'bgr', got '{channel_order}'")
    if not (np.isfinite(pixel_scale) and pixel_scale > 0):
        raise ManifestError(f"preprocess.pixel_scale must be a finite positive real, got {pixel_scale}")
    if blob.ndim != 1:
        raise ManifestError("weight blob must be a flat array")
    if not np.isfinite(blob).all():
        raise ManifestError("weight blob contains non-finite values")
    if not layers:
        raise ManifestError("manifest declares no layers")

    index: dict[str, int] = {}
    for i, ls in enumerate(layers):
        if not ls.name:
            raise ManifestError(f"layer #{i}: empty name")
        if ls.name in index:
            raise ManifestError(f"layer '{ls.name}': duplicate layer name")
        if ls.op not in OPS:
            raise ManifestError(f"layer '{ls.name}': unknown op '{ls.op}'")
        index[ls.name] = i

    inputs = [ls for ls in layers if ls.op == "input"]
    if len(inputs) != 1:
        raise ManifestError(f"manifest must declare exactly one input layer, found {len(inputs)}")
    if inputs[0].inputs:
        raise ManifestError(f"layer '{inputs[0].name}': input layer takes no inputs")

    for ls in layers:
        if ls.op in ("conv", "relu", "maxpool", "avgpool") and len(ls.inputs) != 1:
            raise ManifestError(f"layer '{ls.name}': op '{ls.op}' takes exactly one input, got {len(ls.inputs)}")
        if ls.op == "concat" and len(ls.inputs) < 2:
            raise ManifestError(f"layer '{ls.name}': concat needs at least two inputs, got {len(ls.inputs)}")
        for ref in ls.inputs:
            if ref not in index:
                raise ManifestError(f"layer '{ls.name}': input '{ref}' is not declared anywhere (dangling reference)")

    _check_acyclic(layers, index)

    for i, ls in enumerate(layers):
        for ref in ls.inputs:
            if index[ref] >= i:
                raise ManifestError(
                    f"layer '{ls.name}': input '{ref}' is declared later; layers must be listed producers-first"
                )

    counts: dict[str, int] = {}
    ranges: list[tuple[int, int, str, str]] = []
    for ls in layers:
        if ls.op == "input":
            if ls.channels < 1:
                raise ManifestError(f"layer '{ls.name}': channels must be >= 1, got {ls.channels}")
            counts[ls.name] = ls.channels
        elif ls.op == "conv":
            if ls.out_channels < 1:
                raise ManifestError(f"layer '{ls.name}': out_channels must be >= 1, got {ls.out_channels}")
            if ls.kernel_h < 1 or ls.kernel_w < 1:
                raise ManifestError(f"layer '{ls.name}': kernel_h/kernel_w must be >= 1, got {ls.kernel_h}x{ls.kernel_w}")
            if ls.stride < 1:
                raise ManifestError(f"layer '{ls.name}': stride must be >= 1, got {ls.stride}")
            if ls.pad < 0:
                raise ManifestError(f"layer '{ls.name}': pad must be >= 0, got {ls.pad}")
            produced = counts[ls.inputs[0]]
            if ls.in_channels != produced:
                raise ManifestError(
                    f"layer '{ls.name}': in_channels is {ls.in_channels} but input '{ls.inputs[0]}' produces {produced} channels"
                )
            expected_w = ls.out_channels * ls.in_channels * ls.kernel_h * ls.kernel_w
            if ls.weight_count != expected_w:
                raise ManifestError(
                    f"layer '{ls.name}': weight_count is {ls.weight_count}, expected out*in*kh*kw = {expected_w}"
                )
            if ls.bias_count != ls.out_channels:
                raise ManifestError(
                    f"layer '{ls.name}': bias_count is {ls.bias_count}, expected out_channels = {ls.out_channels}"
                )
            for fname, off, cnt in (("weight", ls.weight_offset, ls.weight_count), ("bias", ls.bias_offset, ls.bias_count)):
                if off < 0:
                    raise ManifestError(f"layer '{ls.name}': {fname}_offset must be >= 0, got {off}")
                if off + cnt > blob.size:
                    raise ManifestError(
                        f"layer '{ls.name}': {fname} range [{off}, {off + cnt}) exceeds blob of {blob.size} values"
                    )
                ranges.append((off, off + cnt, ls.name, fname))
            counts[ls.name] = ls.out_channels
        elif ls.op in ("maxpool", "avgpool"):
            if ls.window < 1:
                raise ManifestError(f"layer '{ls.name}': window must be >= 1, got {ls.window}")
            if ls.stride < 1:
                raise ManifestError(f"layer '{ls.name}': stride must be >= 1, got {ls.stride}")
            if not 0 <= ls.pad < ls.window:
                raise ManifestError(f"layer '{ls.name}': pool pad must satisfy 0 <= pad < window, got {ls.pad}")
            counts[ls.name] = counts[ls.inputs[0]]
        elif ls.op == "relu":
            counts[ls.name] = counts[ls.inputs[0]]
        else:  # concat
            counts[ls.name] = sum(counts[ref] for ref in ls.inputs)

    ranges.sort()
    for (s0, e0, n0, f0), (s1, e1, n1, f1) in zip(ranges, ranges[1:]):
        if s1 < e0:
            raise ManifestError(
                f"layer '{n1}': {f1} range [{s1}, {e1}) overlaps layer '{n0}' {f0} range [{s0}, {e0})"
            )
    return counts


def _check_acyclic(layers, index) -> None:
    indegree = {ls.name: 0 for ls in layers}
    consumers: dict[str, list[str]] = {ls.name: [] for ls in layers}
    for ls in layers:
        for ref in ls.inputs:
            indegree[ls.name] += 1
            consumers[ref].append(ls.name)
    ready = [ls.name for ls in layers if indegree[ls.name] == 0]
    done = 0
    while ready:
        nm = ready.pop()
        done += 1
        for nxt in consumers[nm]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
    if done != len(layers):
        stuck = next(ls.name for ls in layers if indegree[ls.name] > 0)
        raise ManifestError(f"layer '{stuck}': cycle detected through this layer")


# ---------------------------------------------------------------------------
# Manifest I/O

_LAYER_INT_FIELDS = {
    "conv": (
        "out_channels",
        "in_channels",
        "kernel_h",
        "kernel_w",
        "stride",
        "pad",
        "weight_offset",
        "weight_count",
        "bias_offset",
        "bias_count",
    ),
    "maxpool": ("window", "stride", "pad"),
    "avgpool": ("window", "stride", "pad"),
    "input": ("channels",),
    "relu": (),
    "concat": (),
}


def _need(doc: dict, key: str, where: str):
    if key not in doc:
        raise ManifestError(f"{where}: missing field '{key}'")
    return doc[key]


def _int_field(entry: dict, lname: str, key: str) -> int:
    val = _need(entry, key, f"layer '{lname}'")
    if isinstance(val, bool) or not isinstance(val, int):
        raise ManifestError(f"layer '{lname}': field '{key}' must be an integer, got {val!r}")
    return val


def load_network(manifest_path) -> NetworkSpec:
    """Read a manifest + blob pair from disk and return a validated network."""
    path = Path(manifest_path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError(f"manifest {path} must be a JSON object")

    version = _need(doc, "format_version", "manifest")
    if version != FORMAT_VERSION:
        raise ManifestError(f"manifest: unsupported format_version {version!r} (expected {FORMAT_VERSION})")
    name = str(_need(doc, "name", "manifest"))

    blob_name = _need(doc, "blob", "manifest")
    blob_path = path.parent / str(blob_name)
    try:
        raw = blob_path.read_bytes()
    except OSError as exc:
        raise ManifestError(f"cannot read weight blob {blob_path}: {exc}") from exc
    if len(raw) % 4 != 0:
        raise ManifestError(f"weight blob {blob_path} has {len(raw)} bytes, not a multiple of 4")
    blob = np.frombuffer(raw, dtype="<f4")

    pre = _need(doc, "preprocess", "manifest")
    if not isinstance(pre, dict):
        raise ManifestError("manifest: 'preprocess' must be an object")
    mean = _need(pre, "mean", "preprocess")
    if not (isinstance(mean, list) and len(mean) == 3 and all(isinstance(v, (int, float)) for v in mean)):
        raise ManifestError("preprocess: field 'mean' must be a list of 3 numbers")
    order = _need(pre, "channel_order", "preprocess")
    scale = _need(pre, "pixel_scale", "preprocess")
    if not isinstance(scale, (int, float)) or isinstance(scale, bool):
        raise ManifestError("preprocess: field 'pixel_scale' must be a number")

    raw_layers = _need(doc, "layers", "manifest")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ManifestError("manifest: 'layers' must be a non-empty list")
    layers = []
    for i, entry in enumerate(raw_layers):
        if not isinstance(entry, dict):
            raise ManifestError(f"layer #{i}: each layer must be a JSON object")
        lname = str(_need(entry, "name", f"layer #{i}"))
        op = str(_need(entry, "op", f"layer '{lname}'"))
        if op not in OPS:
            raise ManifestError(f"layer '{lname}': unknown op '{op}'")
        if op == "input":
            refs = ()
        else:
            raw_refs = _need(entry, "inputs", f"layer '{lname}'")
            if not isinstance(raw_refs, list) or not all(isinstance(r, str) for r in raw_refs):
                raise ManifestError(f"layer '{lname}': field 'inputs' must be a list of layer names")
            refs = tuple(raw_refs)
        fields = {key: _int_field(entry, lname, key) for key in _LAYER_INT_FIELDS[op]}
        layers.append(LayerSpec(name=lname, op=op, inputs=refs, **fields))

    return build_network(name, layers, mean, order, scale, blob)


def save_network(net: NetworkSpec, manifest_path, blob_name: str | None = None) -> Path:
    """Write the manifest + blob pair for ``net``; returns the manifest path.

    The blob is stored as little-endian float32 regardless of the in-memory
    dtype, which is the only width the on-disk format defines.
    """
    path = Path(manifest_path)
    if blob_name is None:
        blob_name = path.stem + ".blob"
    doc = {
        "format_version": FORMAT_VERSION,
        "name": net.name,
        "blob": blob_name,
        "preprocess": {
            "mean": [float(v) for v in net.mean],
            "channel_order": net.channel_order,
            "pixel_scale": float(net.pixel_scale),
        },
        "layers": [_layer_doc(ls) for ls in net.layers],
    }
    (path.parent / blob_name).write_bytes(np.ascontiguousarray(net.blob, dtype="<f4").tobytes())
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return path


def _layer_doc(ls: LayerSpec) -> dict:
    doc: dict = {"name": ls.name, "op": ls.op}
    if ls.op != "input":
        doc["inputs"] = list(ls.inputs)
    for key in _LAYER_INT_FIELDS[ls.op]:
        doc[key] = getattr(ls, key)
    return doc


# ---------------------------------------------------------------------------
# Layer math

def conv_out_hw(h: int, w: int, ls: LayerSpec) -> tuple[int, int]:
    """Output extent of a conv or pool layer for an input of (h, w)."""
    kh, kw = (ls.kernel_h, ls.kernel_w) if ls.op == "conv" else (ls.window, ls.window)
    oh = (h + 2 * ls.pad - kh) // ls.stride + 1
    ow = (w + 2 * ls.pad - kw) // ls.stride + 1
    return oh, ow


def conv_weights(net: NetworkSpec, ls: LayerSpec, dtype=None) -> tuple[np.ndarray, np.ndarray]:
    """Kernel (out, in, kh, kw) and bias (out,) views for a conv layer."""
    w = net.blob[ls.weight_offset : ls.weight_offset + ls.weight_count]
    w = w.reshape(ls.out_channels, ls.in_channels, ls.kernel_h, ls.kernel_w)
    b = net.blob[ls.bias_offset : ls.bias_offset + ls.bias_count]
    if dtype is not None:
        w = w.astype(dtype, copy=False)
        b = b.astype(dtype, copy=False)
    return w, b


def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int, oh: int, ow: int) -> np.ndarray:
    c = x.shape[0]
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad))) if pad else x
    cols = np.empty((c, kh, kw, oh, ow), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, i, j] = xp[:, i : i + stride * oh : stride, j : j + stride * ow : stride]
    return cols.reshape(c * kh * kw, oh * ow)


def _col2im(gcol: np.ndarray, c: int, h: int, w: int, kh: int, kw: int, stride: int, pad: int, oh: int, ow: int) -> np.ndarray:
    gpad = np.zeros((c, h + 2 * pad, w + 2 * pad), dtype=gcol.dtype)
    g = gcol.reshape(c, kh, kw, oh, ow)
    for i in range(kh):
        for j in range(kw):
            gpad[:, i : i + stride * oh : stride, j : j + stride * ow : stride] += g[:, i, j]
    return gpad[:, pad : pad + h, pad : pad + w] if pad else gpad


def conv_forward(x: np.ndarray, ls: LayerSpec, weights: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    """Zero-padded strided cross-correlation plus bias.

    out[o, oy, ox] = bias[o] + sum over (c, i, j) of
    kernel[o, c, i, j] * x[c, oy*stride - pad + i, ox*stride - pad + j],
    out-of-range input cells contributing zero.
    """
    kernel, bias = weights
    if x.ndim != 3 or x.shape[0] != ls.in_channels:
        raise GraphError(f"layer '{ls.name}': input shape {x.shape} does not provide {ls.in_channels} channels")
    h, w = x.shape[1:]
    oh, ow = conv_out_hw(h, w, ls)
    if oh < 1 or ow < 1:
        raise GraphError(f"layer '{ls.name}': non-positive output extent {oh}x{ow} for input {h}x{w}")
    col = _im2col(x, ls.kernel_h, ls.kernel_w, ls.stride, ls.pad, oh, ow)
    out = kernel.reshape(ls.out_channels, -1) @ col
    out += bias[:, None]
    return out.reshape(ls.out_channels, oh, ow)


def _conv_backward(gout: np.ndarray, ls: LayerSpec, kernel: np.ndarray, h: int, w: int) -> np.ndarray:
    oh, ow = gout.shape[1:]
    gcol = kernel.reshape(ls.out_channels, -1).T @ gout.reshape(ls.out_channels, -1)
    return _col2im(gcol, ls.in_channels, h, w, ls.kernel_h, ls.kernel_w, ls.stride, ls.pad, oh, ow)


def relu_forward(x: np.ndarray) -> np.ndarray:
    """max(x, 0), elementwise."""
    return np.maximum(x, 0)


def _pool_windows(x: np.ndarray, ls: LayerSpec, oh: int, ow: int, fill) -> np.ndarray:
    c, h, w = x.shape
    k, s, p = ls.window, ls.stride, ls.pad
    if p:
        xp = np.full((c, h + 2 * p, w + 2 * p), fill, dtype=x.dtype)
        xp[:, p : p + h, p : p + w] = x
    else:
        xp = x
    cols = np.empty((c, k, k, oh, ow), dtype=x.dtype)
    for i in range(k):
        for j in range(k):
            cols[:, i, j] = xp[:, i : i + s * oh : s, j : j + s * ow : s]
    return cols.reshape(c, k * k, oh * ow)


def _pool_check(x: np.ndarray, ls: LayerSpec) -> tuple[int, int]:
    if x.ndim != 3:
        raise GraphError(f"layer '{ls.name}': pool input must be rank 3, got shape {x.shape}")
    h, w = x.shape[1:]
    oh, ow = conv_out_hw(h, w, ls)
    if oh < 1 or ow < 1:
        raise GraphError(f"layer '{ls.name}': non-positive output extent {oh}x{ow} for input {h}x{w}")
    return oh, ow


def _maxpool_forward(x: np.ndarray, ls: LayerSpec) -> tuple[np.ndarray, np.ndarray]:
    # Padding cells never win the max (filled with -inf); ties go to the
    # first cell in row-major window scan order, matching np.argmax.
    oh, ow = _pool_check(x, ls)
    cols = _pool_windows(x, ls, oh, ow, fill=-np.inf)
    win = cols.argmax(axis=1)
    out = np.take_along_axis(cols, win[:, None, :], axis=1)[:, 0, :]
    c, h, w = x.shape
    m = np.arange(oh * ow)
    iy = (m // ow) * ls.stride - ls.pad + win // ls.window
    ix = (m % ow) * ls.stride - ls.pad + win % ls.window
    flat = iy * w + ix  # (c, oh*ow) source cell of each maximum
    return out.reshape(c, oh, ow), flat


def _maxpool_backward(g: np.ndarray, flat: np.ndarray, in_shape) -> np.ndarray:
    c, h, w = in_shape
    buf = np.zeros(c * h * w, dtype=g.dtype)
    offsets = (np.arange(c)[:, None] * (h * w) + flat).ravel()
    np.add.at(buf, offsets, g.reshape(c, -1).ravel())
    return buf.reshape(c, h, w)


def _avgpool_forward(x: np.ndarray, ls: LayerSpec) -> np.ndarray:
    # Zero padding participates in the mean; divisor is the full window
    # area, which keeps the op linear in the input.
    oh, ow = _pool_check(x, ls)
    cols = _pool_windows(x, ls, oh, ow, fill=0)
    out = cols.sum(axis=1) / (ls.window * ls.window)
    return out.reshape(x.shape[0], oh, ow)


def _avgpool_backward(g: np.ndarray, ls: LayerSpec, h: int, w: int) -> np.ndarray:
    c, oh, ow = g.shape
    share = (g / (ls.window * ls.window)).reshape(c, 1, oh * ow)
    share = np.broadcast_to(share, (c, ls.window * ls.window, oh * ow))
    return _col2im(
        share.reshape(c * ls.window * ls.window, oh * ow),
        c, h, w, ls.window, ls.window, ls.stride, ls.pad, oh, ow,
    )


def pool_forward(x: np.ndarray, ls: LayerSpec) -> np.ndarray:
    """Windowed max or mean depending on ls.op."""
    if ls.op == "maxpool":
        return _maxpool_forward(x, ls)[0]
    if ls.op == "avgpool":
        return _avgpool_forward(x, ls)
    raise GraphError(f"layer '{ls.name}': pool_forward cannot apply op '{ls.op}'")


def concat_forward(xs) -> np.ndarray:
    """Channel-axis concatenation; spatial extents must agree."""
    shapes = {x.shape[1:] for x in xs}
    if len(shapes) != 1:
        raise GraphError(f"concat inputs have differing spatial shapes: {sorted(shapes)}")
    return np.concatenate(list(xs), axis=0)


# ---------------------------------------------------------------------------
# Forward / backward over the whole graph

@dataclass
class ActivationTrace:
    """Activations recorded during one forward pass.

    ``entries`` holds exactly the requested layers. The private fields keep
    every intermediate activation and each maxpool's winner indices, which
    backward_from needs.
    """

    entries: dict[str, np.ndarray]
    input_shape: tuple[int, int, int]
    _net: NetworkSpec = field(repr=False, default=None)
    _acts: dict[str, np.ndarray] = field(repr=False, default_factory=dict)
    _argmax: dict[str, np.ndarray] = field(repr=False, default_factory=dict)


def forward(net: NetworkSpec, image: np.ndarray, record) -> ActivationTrace:
    """Evaluate the graph on a preprocessed image, recording ``record`` layers."""
    x = np.asarray(image)
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(np.float64)
    want_c = net.input_layer.channels
    if x.ndim != 3 or x.shape[0] != want_c:
        raise GraphError(f"input image shape {x.shape} does not match network input ({want_c} channels)")
    wanted = set(record)
    for nm in wanted:
        if nm not in net.by_name:
            raise UnknownLayerError(nm, net.layer_names())

    acts: dict[str, np.ndarray] = {}
    argmax: dict[str, np.ndarray] = {}
    for ls in net.layers:
        if ls.op == "input":
            acts[ls.name] = x
        elif ls.op == "conv":
            acts[ls.name] = conv_forward(acts[ls.inputs[0]], ls, conv_weights(net, ls, x.dtype))
        elif ls.op == "relu":
            acts[ls.name] = relu_forward(acts[ls.inputs[0]])
        elif ls.op == "maxpool":
            acts[ls.name], argmax[ls.name] = _maxpool_forward(acts[ls.inputs[0]], ls)
        elif ls.op == "avgpool":
            acts[ls.name] = _avgpool_forward(acts[ls.inputs[0]], ls)
        else:
            acts[ls.name] = concat_forward([acts[ref] for ref in ls.inputs])

    return ActivationTrace(
        entries={nm: acts[nm] for nm in wanted},
        input_shape=x.shape,
        _net=net,
        _acts=acts,
        _argmax=argmax,
    )


def backward_from(net: NetworkSpec, trace: ActivationTrace, layer_grads: dict) -> np.ndarray:
    """Propagate gradients injected at recorded layers down to the pixels.

    Gradients injected at several layers sum, exactly as if the loss were
    the sum of the per-layer terms. Returns d(loss)/d(input image).
    """
    if trace._net is not net:
        raise GraphError("trace was produced by a different network")
    grads: dict[str, np.ndarray] = {}
    for nm, g in layer_grads.items():
        if nm not in trace.entries:
            raise GraphError(f"gradient injected at unrecorded layer '{nm}'")
        act = trace._acts[nm]
        g = np.asarray(g, dtype=act.dtype)
        if g.shape != act.shape:
            raise GraphError(f"layer '{nm}': gradient shape {g.shape} does not match activation shape {act.shape}")
        grads[nm] = g

    def send(nm: str, g: np.ndarray) -> None:
        grads[nm] = grads[nm] + g if nm in grads else g

    for ls in reversed(net.layers):
        if ls.op == "input" or ls.name not in grads:
            continue
        g = grads.pop(ls.name)
        if ls.op == "conv":
            src = trace._acts[ls.inputs[0]]
            kernel, _ = conv_weights(net, ls, g.dtype)
            send(ls.inputs[0], _conv_backward(g, ls, kernel, src.shape[1], src.shape[2]))
        elif ls.op == "relu":
            send(ls.inputs[0], g * (trace._acts[ls.name] > 0))
        elif ls.op == "maxpool":
            src = trace._acts[ls.inputs[0]]
            send(ls.inputs[0], _maxpool_backward(g, trace._argmax[ls.name], src.shape))
        elif ls.op == "avgpool":
            src = trace._acts[ls.inputs[0]]
            send(ls.inputs[0], _avgpool_backward(g, ls, src.shape[1], src.shape[2]))
        else:  # concat: split channel ranges back to the producers
            lo = 0
            for ref in ls.inputs:
                span = net.channel_counts[ref]
                send(ref, g[lo : lo + span])
                lo += span

    in_name = net.input_layer.name
    if in_name in grads:
        return grads[in_name]
    return np.zeros(trace.input_shape, dtype=trace._acts[in_name].dtype)


def infer_shapes(net: NetworkSpec, h: int, w: int) -> list[tuple[str, str, tuple[int, int, int]]]:
    """Per-layer output shapes for an h-by-w input, without running data."""
    shapes: dict[str, tuple[int, int, int]] = {}
    table = []
    for ls in net.layers:
        if ls.op == "input":
            shape = (ls.channels, h, w)
        elif ls.op in ("conv", "maxpool", "avgpool"):
            c_in, hi, wi = shapes[ls.inputs[0]]
            oh, ow = conv_out_hw(hi, wi, ls)
            if oh < 1 or ow < 1:
                raise GraphError(f"layer '{ls.name}': non-positive output extent {oh}x{ow} for input {hi}x{wi}")
            shape = (ls.out_channels if ls.op == "conv" else c_in, oh, ow)
        elif ls.op == "relu":
            shape = shapes[ls.inputs[0]]
        else:
            parts = [shapes[ref] for ref in ls.inputs]
            spatial = {p[1:] for p in parts}
            if len(spatial) != 1:
                raise GraphError(f"layer '{ls.name}': concat inputs have differing spatial shapes")
            shape = (sum(p[0] for p in parts),) + parts[0][1:]
        shapes[ls.name] = shape
        table.append((ls.name, ls.op, shape))
    return table
