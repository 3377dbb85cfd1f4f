"""Neural image blending: deep-dream style ascent and style-transfer descent.

The package is split by responsibility: ``tensor`` (array helpers),
``netgraph`` (model format + forward/backward), ``objectives`` (losses),
``optimizer`` (pixel updates), ``images`` (PNG + pre/deprocess), ``cli``
(command line). Everything public is re-exported here.
"""

from .errors import (
    EngineError,
    GraphError,
    ImageError,
    ManifestError,
    ObjectiveError,
    OptimizerError,
    TensorError,
    UnknownLayerError,
)
from .images import ImageBuffer, decode, deprocess, encode, preprocess
from .netgraph import (
    ActivationTrace,
    LayerSpec,
    NetworkSpec,
    backward_from,
    build_network,
    concat_forward,
    conv_forward,
    conv_out_hw,
    conv_weights,
    forward,
    infer_shapes,
    load_network,
    pool_forward,
    relu_forward,
    save_network,
)
from .objectives import (
    GuidedDot,
    GuidedRequest,
    L2Activation,
    L2Request,
    StyleContent,
    StyleContentRequest,
    StyleTerm,
    build_objective,
    eval_content,
    eval_guided,
    eval_l2,
    eval_style,
    evaluate,
    feature_distance,
    loss_terms,
)
from .optimizer import RunConfig, default_clip, dream, octave_pyramid, style_transfer
from .tensor import elementwise, flatten_spatial, gram, resize_bilinear

__version__ = "0.1.0"

__all__ = [
    "ActivationTrace",
    "EngineError",
    "GraphError",
    "GuidedDot",
    "GuidedRequest",
    "ImageBuffer",
    "ImageError",
    "L2Activation",
    "L2Request",
    "LayerSpec",
    "ManifestError",
    "NetworkSpec",
    "ObjectiveError",
    "OptimizerError",
    "RunConfig",
    "StyleContent",
    "StyleContentRequest",
    "StyleTerm",
    "TensorError",
    "UnknownLayerError",
    "backward_from",
    "build_network",
    "build_objective",
    "concat_forward",
    "conv_forward",
    "conv_out_hw",
    "conv_weights",
    "decode",
    "default_clip",
    "deprocess",
    "dream",
    "elementwise",
    "encode",
    "eval_content",
    "eval_guided",
    "eval_l2",
    "eval_style",
    "evaluate",
    "feature_distance",
    "flatten_spatial",
    "forward",
    "gram",
    "infer_shapes",
    "load_network",
    "loss_terms",
    "octave_pyramid",
    "pool_forward",
    "preprocess",
    "relu_forward",
    "resize_bilinear",
    "save_network",
    "style_transfer",
]
