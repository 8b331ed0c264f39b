"""The module with the abstract classes for this package"""

import abc
from typing import Any, NamedTuple

import numpy as np

from ._errors import ShapeError
from .ops import relu, relu_backward

Shape = tuple[int, ...]
"""the shape of a single sample, without the batch axis"""


class LayerCache(NamedTuple):
    """What a layer's forward pass keeps for its backward pass

    Attributes:
        input: the input the layer was called with
        pre_activation: the output before the activation, if one was applied
        extra: anything else the kernel needs, e.g. the pooling indices
    """

    input: np.ndarray
    pre_activation: np.ndarray | None = None
    extra: Any = None


class BaseLayer(abc.ABC):
    """Abstract class for a layer of the sequential network

    A layer is stateless: it knows its spec and the shape of its input
    and is handed its parameters on every call.
    """

    __slots__ = ("spec", "input_shape", "name")

    def __init__(self, spec: Any, input_shape: Shape, name: str):
        """
        Args:
            spec: the LayerSpec of this layer
            input_shape: the shape of a single input sample
            name: the unique name of the layer within its model

        Raises:
            ShapeError: the layer cannot accept inputs of this shape
        """
        self.spec = spec
        self.input_shape = tuple(input_shape)
        self.name = name
        self._validate_input_shape()

    @property
    @abc.abstractmethod
    def output_shape(self) -> Shape:
        """The shape of a single output sample"""

    def param_shapes(self) -> tuple[Shape, Shape] | None:
        """The (weights, bias) shapes, or None for parameterless layers"""
        return None

    def fan_in(self) -> int:
        """Number of inputs feeding each output unit"""
        return 0

    def parameter_count(self) -> int:
        shapes = self.param_shapes()
        if shapes is None:
            return 0
        return sum(int(np.prod(shape)) for shape in shapes)

    @property
    def has_params(self) -> bool:
        return self.param_shapes() is not None

    def forward(
        self, input: np.ndarray, weights: np.ndarray | None, bias: np.ndarray | None
    ) -> tuple[np.ndarray, LayerCache]:
        """Applies the layer and its activation to a batch

        Args:
            input: the batch of inputs
            weights: the layer weights, or None for parameterless layers
            bias: the layer bias, or None for parameterless layers

        Returns:
            the batch of outputs and the cache for the backward pass
        """
        if input.shape[1:] != self.input_shape:
            raise ShapeError(
                f"{self.name} expects samples of shape {self.input_shape}, got {input.shape[1:]}"
            )
        output, extra = self._forward(input, weights, bias)
        if self.spec.activation.value == "relu":
            return relu(output), LayerCache(input, output, extra)
        return output, LayerCache(input, None, extra)

    def backward(
        self, grad_out: np.ndarray, cache: LayerCache, weights: np.ndarray | None
    ) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
        """Back-propagates the gradient through the activation and the layer

        Returns:
            the gradients w.r.t. (input, weights, bias); the last two are None
            for parameterless layers
        """
        if cache.pre_activation is not None:
            grad_out = relu_backward(grad_out, cache.pre_activation)
        return self._backward(grad_out, cache, weights)

    def _validate_input_shape(self):
        """Raises ShapeError if the input shape does not suit the layer"""

    @abc.abstractmethod
    def _forward(
        self, input: np.ndarray, weights: np.ndarray | None, bias: np.ndarray | None
    ) -> tuple[np.ndarray, Any]:
        """Applies the layer kernel

        Returns:
            the output before activation and any extra cache entry
        """

    @abc.abstractmethod
    def _backward(
        self, grad_out: np.ndarray, cache: LayerCache, weights: np.ndarray | None
    ) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
        """Applies the layer kernel's backward pass"""
