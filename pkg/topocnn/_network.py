"""Module containing the sequential encoder-decoder model and its builder"""

import logging
import math
from typing import Annotated

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr

from ._base import BaseLayer, LayerCache, Shape
from ._errors import ShapeError
from ._layers import LayerSpec, build_stack
from .ops import as_tensor

_logger = logging.getLogger(__name__)

ActivationCache = list[LayerCache]
"""the per-layer caches of one forward pass, in layer order"""


class Model(BaseModel):
    """A sequential network with its parameters

    The parameters are kept per layer in ``weights`` and ``biases``; entries
    of parameterless layers are None. A model whose lists are empty is not
    materialized: it can report shapes and counts but cannot run.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    layers: list[LayerSpec]
    input_shape: tuple[int, int, int]
    adaptive_n: Annotated[int, Field(ge=0)] = 0
    weights: list[np.ndarray | None] = []
    biases: list[np.ndarray | None] = []
    _stack: list[BaseLayer] = PrivateAttr(default_factory=list)

    def model_post_init(self, __context):
        self._stack = build_stack(self.layers, self.input_shape)
        if not self.weights and not self.biases:
            return
        if len(self.weights) != len(self.layers) or len(self.biases) != len(self.layers):
            raise ShapeError("weights and biases need one entry per layer")
        for layer, weights, bias in zip(self._stack, self.weights, self.biases):
            shapes = layer.param_shapes()
            got = None if weights is None else (weights.shape, bias.shape)
            if got != shapes:
                raise ShapeError(
                    f"{layer.name} expects parameters of shapes {shapes}, got {got}"
                )

    @property
    def stack(self) -> list[BaseLayer]:
        return self._stack

    @property
    def output_shape(self) -> Shape:
        return self._stack[-1].output_shape if self._stack else tuple(self.input_shape)

    @property
    def is_materialized(self) -> bool:
        return bool(self.weights) or not self._stack

    def output_shapes(self) -> list[Shape]:
        """The shape of a single sample after every layer"""
        return [layer.output_shape for layer in self._stack]

    def parameter_count(self) -> int:
        """The analytic number of learnable parameters"""
        return sum(layer.parameter_count() for layer in self._stack)

    def initialize(self, seed: int = 0):
        """Draws fresh He-uniform weights and zero biases

        Every weight is drawn from U(-b, b) with ``b = sqrt(6 / fan_in)``,
        layer by layer from one generator seeded with ``seed``.
        """
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for layer in self._stack:
            shapes = layer.param_shapes()
            if shapes is None:
                weights.append(None)
                biases.append(None)
                continue
            bound = math.sqrt(6.0 / layer.fan_in())
            weights.append(rng.uniform(-bound, bound, size=shapes[0]))
            biases.append(np.zeros(shapes[1]))
        self.weights = weights
        self.biases = biases
        _logger.debug("initialized %d parameters with seed %d", self.parameter_count(), seed)

    def parameters(self) -> list[np.ndarray]:
        """The learnable arrays in layer order, weights before bias"""
        self._require_materialized()
        params = []
        for weights, bias in zip(self.weights, self.biases):
            if weights is not None:
                params.extend((weights, bias))
        return params

    def set_parameters(self, params: list[np.ndarray]):
        """Replaces the learnable arrays, in the order of :meth:`parameters`"""
        it = iter(params)
        for idx, weights in enumerate(self.weights):
            if weights is not None:
                self.weights[idx] = next(it)
                self.biases[idx] = next(it)

    def layer_norms(self) -> dict[str, float]:
        """The L2 norm of every parametric layer's weights"""
        return {
            layer.name: float(np.linalg.norm(weights))
            for layer, weights in zip(self._stack, self.weights)
            if weights is not None
        }

    def forward(self, input: np.ndarray) -> tuple[np.ndarray, ActivationCache]:
        """Applies the layers in order, caching what backward needs

        Args:
            input: a (batch, *input_shape) tensor

        Returns:
            the output batch and the per-layer caches
        """
        self._require_materialized()
        output = self._check_input(input)
        cache = []
        for layer, weights, bias in zip(self._stack, self.weights, self.biases):
            output, layer_cache = layer.forward(output, weights, bias)
            cache.append(layer_cache)
        return output, cache

    def backward(self, grad_out: np.ndarray, cache: ActivationCache) -> list[np.ndarray]:
        """Back-propagates the gradient of the loss w.r.t. the output

        Returns:
            the gradients in the order of :meth:`parameters`
        """
        grads = []
        for layer, layer_cache, weights in zip(
            reversed(self._stack), reversed(cache), reversed(self.weights)
        ):
            grad_out, grad_weights, grad_bias = layer.backward(grad_out, layer_cache, weights)
            if grad_weights is not None:
                grads.extend((grad_bias, grad_weights))
        grads.reverse()
        return grads

    def predict(self, input: np.ndarray) -> np.ndarray:
        """Runs the network and clamps the output to densities in [0, 1]"""
        self._require_materialized()
        output = self._check_input(input)
        for layer, weights, bias in zip(self._stack, self.weights, self.biases):
            output, _ = layer.forward(output, weights, bias)
        return np.clip(output, 0.0, 1.0)

    def summary(self) -> str:
        """Renders the per-layer output shapes and parameter counts as a table"""
        rows = [("Layer (type)", "Output Shape", "Param #")]
        for layer in self._stack:
            rows.append(
                (
                    f"{layer.name} ({layer.spec.kind.value})",
                    str((None, *layer.output_shape)),
                    f"{layer.parameter_count():,}",
                )
            )
        widths = [max(len(row[i]) for row in rows) + 2 for i in range(3)]
        rule = "=" * sum(widths)
        lines = [rule, _format_row(rows[0], widths), rule]
        lines.extend(_format_row(row, widths) for row in rows[1:])
        lines.append(rule)
        lines.append(f"Total params: {self.parameter_count():,}")
        return "\n".join(lines)

    def _check_input(self, input: np.ndarray) -> np.ndarray:
        input = as_tensor(input, ndim=len(self.input_shape) + 1)
        if input.shape[1:] != tuple(self.input_shape):
            raise ShapeError(
                f"model expects samples of shape {tuple(self.input_shape)}, got {input.shape[1:]}"
            )
        return input

    def _require_materialized(self):
        if not self.is_materialized:
            raise ValueError("model parameters have not been initialized; call initialize()")


def build_model(
    adaptive_n: int = 0,
    input_side: int = 100,
    channel_widths: tuple[int, int, int] = (128, 256, 512),
    seed: int = 0,
    materialize: bool = True,
) -> Model:
    """Builds the encoder-decoder network

    The encoder is three same-padded ReLU convolutions (2x2, 2x2, 5x5
    kernels) each followed by max pooling (2, 2, 5); the bottleneck is a
    dense layer as wide as the flattened encoding, preceded by a dense layer
    of ``adaptive_n`` units when ``adaptive_n > 0``; the decoder is three
    strided ReLU transpose convolutions (2x2/2, 5x5/5, 2x2/2) back to one
    channel.

    Args:
        adaptive_n: width of the adaptive dense layer; 0 gives the base network
        input_side: side of the square input image, divisible by 20
        channel_widths: the filters of the three encoder convolutions
        seed: the weight-initialization seed
        materialize: whether to draw the weights; a weightless model still
            reports shapes and parameter counts

    Returns:
        the model

    Raises:
        ValueError: input_side is not a positive multiple of 20, adaptive_n
            is negative or a channel width is below 1
    """
    if input_side < 20 or input_side % 20:
        raise ValueError(f"input_side must be a positive multiple of 20, got {input_side}")
    if adaptive_n < 0:
        raise ValueError(f"adaptive_n must be non-negative, got {adaptive_n}")
    c1, c2, c3 = channel_widths
    if min(channel_widths) < 1:
        raise ValueError(f"channel widths must be positive, got {channel_widths}")

    side = input_side // 20
    encoded = side * side * c3
    layers = [
        LayerSpec.conv(c1, 2),
        LayerSpec.maxpool(2),
        LayerSpec.conv(c2, 2),
        LayerSpec.maxpool(2),
        LayerSpec.conv(c3, 5),
        LayerSpec.maxpool(5),
        LayerSpec.flatten(),
    ]
    if adaptive_n:
        layers.append(LayerSpec.dense(adaptive_n))
    layers += [
        LayerSpec.dense(encoded),
        LayerSpec.reshape((side, side, c3)),
        LayerSpec.tconv(c2, 2, stride=2),
        LayerSpec.tconv(c1, 5, stride=5),
        LayerSpec.tconv(1, 2, stride=2),
    ]

    model = Model(layers=layers, input_shape=(input_side, input_side, 1), adaptive_n=adaptive_n)
    _logger.info(
        "built model with adaptive_n=%d, input_side=%d, %d parameters",
        adaptive_n,
        input_side,
        model.parameter_count(),
    )
    if materialize:
        model.initialize(seed)
    return model


def _format_row(row: tuple[str, str, str], widths: list[int]) -> str:
    return "".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
