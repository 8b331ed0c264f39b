"""Rank-4 tensor helpers

Tensors are plain ``numpy`` arrays of 64-bit floats laid out
``(batch, height, width, channels)`` in row-major order.
"""

import numpy as np
import numpy.typing as npt

from .._errors import ShapeError

Tensor = npt.NDArray[np.float64]
"""a dense (batch, height, width, channels) array of float64"""


def as_tensor(data: npt.ArrayLike, ndim: int = 4) -> Tensor:
    """Converts the data to a contiguous float64 array of the given rank

    Args:
        data: anything numpy can turn into an array
        ndim: the expected number of dimensions; default 4

    Returns:
        the data as a C-contiguous float64 array

    Raises:
        ShapeError: the data does not have ``ndim`` dimensions
    """
    array = np.ascontiguousarray(data, dtype=np.float64)
    if array.ndim != ndim:
        raise ShapeError(f"expected a rank-{ndim} tensor, got shape {array.shape}")
    return array


def check_channels(tensor: Tensor, channels: int, name: str = "input"):
    """Raises ShapeError if the last axis of the tensor is not ``channels`` long"""
    if tensor.shape[-1] != channels:
        raise ShapeError(
            f"{name} has {tensor.shape[-1]} channels but {channels} were expected"
        )
