from .activations import relu, relu_backward
from .conv import conv2d_backward, conv2d_forward, tconv2d_backward, tconv2d_forward
from .dense import dense_backward, dense_forward, flatten, reshape
from .params import ConvParams, Padding, PaddingMode, PoolParams
from .pool import PoolIndices, maxpool_backward, maxpool_forward
from .shapes import conv_output_size, resolve_padding, tconv_output_size
from .tensor import Tensor, as_tensor

__all__ = [
    "Tensor",
    "as_tensor",
    "ConvParams",
    "Padding",
    "PaddingMode",
    "PoolParams",
    "PoolIndices",
    "conv_output_size",
    "tconv_output_size",
    "resolve_padding",
    "conv2d_forward",
    "conv2d_backward",
    "tconv2d_forward",
    "tconv2d_backward",
    "maxpool_forward",
    "maxpool_backward",
    "dense_forward",
    "dense_backward",
    "flatten",
    "reshape",
    "relu",
    "relu_backward",
]
