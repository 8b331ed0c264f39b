"""Non-overlapping max pooling"""

from typing import NamedTuple

import numpy as np

from .._errors import ShapeError
from .params import PoolParams
from .tensor import Tensor, as_tensor


class PoolIndices(NamedTuple):
    """Where every pooled maximum came from

    Attributes:
        argmax: (batch, out_h, out_w, channels) row-major position of the
            first maximum inside its window
        window: the (ph, pw) pooling window
        input_shape: the shape of the pooled input
    """

    argmax: np.ndarray
    window: tuple[int, int]
    input_shape: tuple[int, int, int, int]


def maxpool_forward(input: Tensor, p: PoolParams) -> tuple[Tensor, PoolIndices]:
    """Takes the maximum of every non-overlapping window

    Ties resolve to the first maximum in row-major window order.

    Args:
        input: the (batch, height, width, channels) input
        p: the pooling parameters

    Returns:
        the pooled output and the argmax indices needed by the backward pass

    Raises:
        ShapeError: the spatial dimensions are not divisible by the window
    """
    input = as_tensor(input)
    batch, height, width, channels = input.shape
    ph, pw = p.window
    if height % ph or width % pw:
        raise ShapeError(
            f"input of size {height}x{width} is not divisible by the {ph}x{pw} pooling window"
        )

    windows = _to_windows(input, ph, pw)
    argmax = windows.argmax(axis=-1)
    output = np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0]
    return output, PoolIndices(argmax, (ph, pw), input.shape)


def maxpool_backward(grad_out: Tensor, indices: PoolIndices) -> Tensor:
    """Routes every output gradient to the input position of its maximum

    Raises:
        ShapeError: grad_out does not match the recorded indices
        IndexError: an argmax index lies outside its window
    """
    grad_out = as_tensor(grad_out)
    ph, pw = indices.window
    batch, height, width, channels = indices.input_shape
    if grad_out.shape != indices.argmax.shape:
        raise ShapeError(
            f"grad_out shape {grad_out.shape} does not match the pooled shape {indices.argmax.shape}"
        )
    if indices.argmax.size and (
        indices.argmax.min() < 0 or indices.argmax.max() >= ph * pw
    ):
        raise IndexError(f"argmax index outside the {ph}x{pw} window")

    positions = np.arange(ph * pw)
    routed = (positions == indices.argmax[..., None]) * grad_out[..., None]
    routed = routed.reshape(batch, height // ph, width // pw, channels, ph, pw)
    grad_input = routed.transpose(0, 1, 4, 2, 5, 3).reshape(indices.input_shape)
    return np.ascontiguousarray(grad_input)


def _to_windows(input: Tensor, ph: int, pw: int) -> np.ndarray:
    """Rearranges the input to (batch, out_h, out_w, channels, ph * pw)"""
    batch, height, width, channels = input.shape
    blocks = input.reshape(batch, height // ph, ph, width // pw, pw, channels)
    return blocks.transpose(0, 1, 3, 5, 2, 4).reshape(
        batch, height // ph, width // pw, channels, ph * pw
    )
