"""Output-size arithmetic of convolution and transpose convolution"""

import math

from .params import Padding, PaddingMode


def conv_output_size(I: int, K: int, S: int = 1, P: int = 0) -> int:
    """Computes the output size of a convolution along one axis

    ``O = floor((I - K + 2P) / S) + 1``

    Args:
        I: input size in pixels
        K: kernel size in pixels
        S: stride
        P: padding added on each side

    Returns:
        the output size in pixels

    Raises:
        ValueError: the kernel is larger than the padded input or a size is out of range
    """
    if I < 1 or K < 1 or S < 1 or P < 0:
        raise ValueError(f"invalid convolution sizes I={I}, K={K}, S={S}, P={P}")
    if K > I + 2 * P:
        raise ValueError(f"kernel {K} is larger than the padded input {I + 2 * P}")
    return (I - K + 2 * P) // S + 1


def tconv_output_size(I: int, K: int, S: int = 1, P: int = 0) -> int:
    """Computes the output size of a transpose convolution along one axis

    ``O = (I - 1) S + K - 2P``

    Raises:
        ValueError: the result is not positive or a size is out of range
    """
    if I < 1 or K < 1 or S < 1 or P < 0:
        raise ValueError(f"invalid transpose convolution sizes I={I}, K={K}, S={S}, P={P}")
    size = (I - 1) * S + K - 2 * P
    if size < 1:
        raise ValueError(f"transpose convolution output size {size} is not positive")
    return size


def resolve_padding(
    size: tuple[int, int],
    kernel: tuple[int, int],
    stride: tuple[int, int],
    padding: Padding,
) -> tuple[int, int, int, int]:
    """Resolves a padding policy into (top, bottom, left, right) extents

    'same' pads so that ``O = ceil(I / S)``; when the total is odd the extra
    pixel goes to the bottom/right.

    Args:
        size: the (height, width) of the input
        kernel: the (kh, kw) of the kernel
        stride: the (sv, sh) strides
        padding: the padding policy

    Returns:
        the (top, bottom, left, right) padding in pixels
    """
    if padding.mode == PaddingMode.VALID:
        return 0, 0, 0, 0
    if padding.mode == PaddingMode.EXPLICIT:
        return padding.top, padding.bottom, padding.left, padding.right

    extents = []
    for I, K, S in zip(size, kernel, stride):
        total = max((math.ceil(I / S) - 1) * S + K - I, 0)
        extents.extend((total // 2, total - total // 2))
    return tuple(extents)
