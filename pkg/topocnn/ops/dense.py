"""Fully connected layer, flatten and reshape"""

import numpy as np

from .._errors import ShapeError
from .tensor import Tensor


def dense_forward(input: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Applies ``W x + b`` to every row of the (batch, in) input

    Args:
        input: the (batch, in_features) input
        weights: the (out_features, in_features) matrix
        bias: the (out_features,) bias

    Returns:
        the (batch, out_features) output

    Raises:
        ShapeError: the input width does not match the weights
    """
    _check(input, weights, bias)
    return input @ weights.T + bias


def dense_backward(
    grad_out: np.ndarray, cached_input: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Computes the gradients of the affine map

    Returns:
        the gradients w.r.t. (input, weights, bias)
    """
    if grad_out.shape != (cached_input.shape[0], weights.shape[0]):
        raise ShapeError(
            f"grad_out shape {grad_out.shape} does not match "
            f"({cached_input.shape[0]}, {weights.shape[0]})"
        )
    return grad_out @ weights, grad_out.T @ cached_input, grad_out.sum(axis=0)


def flatten(input: Tensor) -> np.ndarray:
    """Flattens every sample of a (batch, h, w, c) tensor in row-major order"""
    return input.reshape(input.shape[0], -1)


def reshape(vector: np.ndarray, target: tuple[int, int, int]) -> Tensor:
    """Reshapes (batch, h * w * c) rows back into (batch, h, w, c)

    Raises:
        ShapeError: the row length does not equal ``h * w * c``
    """
    if vector.ndim != 2 or vector.shape[1] != int(np.prod(target)):
        raise ShapeError(f"cannot reshape {vector.shape} into (batch, *{tuple(target)})")
    return vector.reshape(vector.shape[0], *target)


def _check(input: np.ndarray, weights: np.ndarray, bias: np.ndarray):
    if input.ndim != 2 or weights.ndim != 2 or input.shape[1] != weights.shape[1]:
        raise ShapeError(
            f"input of shape {input.shape} does not match weights of shape {weights.shape}"
        )
    if bias.shape != (weights.shape[0],):
        raise ShapeError(f"bias of shape {bias.shape} does not match {weights.shape[0]} units")
