"""Module containing the layer specs and the layer implementations"""

import math
from enum import Enum
from typing import Annotated, Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ._base import BaseLayer, LayerCache, Shape
from ._errors import ShapeError
from .ops import (
    ConvParams,
    PaddingMode,
    PoolParams,
    conv2d_backward,
    conv2d_forward,
    conv_output_size,
    dense_backward,
    dense_forward,
    flatten,
    maxpool_backward,
    maxpool_forward,
    reshape,
    resolve_padding,
    tconv2d_backward,
    tconv2d_forward,
    tconv_output_size,
)


class LayerKind(str, Enum):
    CONV = "conv"
    MAXPOOL = "maxpool"
    FLATTEN = "flatten"
    DENSE = "dense"
    RESHAPE = "reshape"
    TCONV = "tconv"


class Activation(str, Enum):
    RELU = "relu"
    NONE = "none"


class DenseParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    units: Annotated[int, Field(ge=1)]


class ReshapeParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    target: tuple[
        Annotated[int, Field(ge=1)],
        Annotated[int, Field(ge=1)],
        Annotated[int, Field(ge=1)],
    ]


_PARAMS_BY_KIND: dict[LayerKind, type[BaseModel] | None] = {
    LayerKind.CONV: ConvParams,
    LayerKind.MAXPOOL: PoolParams,
    LayerKind.FLATTEN: None,
    LayerKind.DENSE: DenseParams,
    LayerKind.RESHAPE: ReshapeParams,
    LayerKind.TCONV: ConvParams,
}


class LayerSpec(BaseModel):
    """The specification of one layer of the sequential network

    ``params`` may be given as a dict; it is parsed into the param record
    matching ``kind``.
    """

    model_config = ConfigDict(frozen=True)

    kind: LayerKind
    params: ConvParams | PoolParams | DenseParams | ReshapeParams | None = None
    activation: Activation = Activation.NONE

    @model_validator(mode="before")
    @classmethod
    def _parse_params(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        try:
            kind = LayerKind(data.get("kind"))
        except ValueError:
            return data
        params = data.get("params")
        params_cls = _PARAMS_BY_KIND[kind]
        if params_cls is not None and isinstance(params, dict):
            data = {**data, "params": params_cls(**params)}
        return data

    @model_validator(mode="after")
    def _params_match_kind(self) -> "LayerSpec":
        params_cls = _PARAMS_BY_KIND[self.kind]
        if params_cls is None:
            if self.params is not None:
                raise ValueError(f"{self.kind.value} layers take no params")
        elif not isinstance(self.params, params_cls):
            raise ValueError(
                f"{self.kind.value} layers take {params_cls.__name__}, got {type(self.params).__name__}"
            )
        if self.kind == LayerKind.TCONV and self.params.padding.mode == PaddingMode.SAME:
            raise ValueError("'same' padding is not supported for transpose convolution")
        return self

    @classmethod
    def conv(
        cls, filters: int, kernel, stride=1, padding="same", activation=Activation.RELU
    ) -> "LayerSpec":
        params = ConvParams(filters=filters, kernel=kernel, stride=stride, padding=padding)
        return cls(kind=LayerKind.CONV, params=params, activation=activation)

    @classmethod
    def maxpool(cls, window) -> "LayerSpec":
        return cls(kind=LayerKind.MAXPOOL, params=PoolParams(window=window))

    @classmethod
    def flatten(cls) -> "LayerSpec":
        return cls(kind=LayerKind.FLATTEN)

    @classmethod
    def dense(cls, units: int, activation=Activation.RELU) -> "LayerSpec":
        return cls(kind=LayerKind.DENSE, params=DenseParams(units=units), activation=activation)

    @classmethod
    def reshape(cls, target: tuple[int, int, int]) -> "LayerSpec":
        return cls(kind=LayerKind.RESHAPE, params=ReshapeParams(target=target))

    @classmethod
    def tconv(
        cls, filters: int, kernel, stride=1, padding="valid", activation=Activation.RELU
    ) -> "LayerSpec":
        params = ConvParams(filters=filters, kernel=kernel, stride=stride, padding=padding)
        return cls(kind=LayerKind.TCONV, params=params, activation=activation)


class ConvLayer(BaseLayer):
    def _validate_input_shape(self):
        _require_rank(self, 3)

    @property
    def output_shape(self) -> Shape:
        p: ConvParams = self.spec.params
        height, width, _ = self.input_shape
        top, bottom, left, right = resolve_padding(
            (height, width), p.kernel, p.stride, p.padding
        )
        try:
            out_h = conv_output_size(height + top + bottom, p.kernel[0], p.stride[0])
            out_w = conv_output_size(width + left + right, p.kernel[1], p.stride[1])
        except ValueError as exp:
            raise ShapeError(f"{self.name}: {exp}") from exp
        return out_h, out_w, p.filters

    def param_shapes(self) -> tuple[Shape, Shape]:
        p: ConvParams = self.spec.params
        return (p.filters, *p.kernel, self.input_shape[2]), (p.filters,)

    def fan_in(self) -> int:
        kh, kw = self.spec.params.kernel
        return kh * kw * self.input_shape[2]

    def _forward(self, input, weights, bias):
        return conv2d_forward(input, weights, bias, self.spec.params), None

    def _backward(self, grad_out, cache: LayerCache, weights):
        return conv2d_backward(grad_out, cache.input, weights, self.spec.params)


class MaxPoolLayer(BaseLayer):
    def _validate_input_shape(self):
        _require_rank(self, 3)
        ph, pw = self.spec.params.window
        if self.input_shape[0] % ph or self.input_shape[1] % pw:
            raise ShapeError(
                f"{self.name}: input {self.input_shape[:2]} is not divisible by the window {(ph, pw)}"
            )

    @property
    def output_shape(self) -> Shape:
        ph, pw = self.spec.params.window
        height, width, channels = self.input_shape
        return height // ph, width // pw, channels

    def _forward(self, input, weights, bias):
        return maxpool_forward(input, self.spec.params)

    def _backward(self, grad_out, cache: LayerCache, weights):
        return maxpool_backward(grad_out, cache.extra), None, None


class FlattenLayer(BaseLayer):
    @property
    def output_shape(self) -> Shape:
        return (math.prod(self.input_shape),)

    def _forward(self, input, weights, bias):
        return flatten(input), None

    def _backward(self, grad_out, cache: LayerCache, weights):
        return grad_out.reshape(cache.input.shape), None, None


class DenseLayer(BaseLayer):
    def _validate_input_shape(self):
        _require_rank(self, 1)

    @property
    def output_shape(self) -> Shape:
        return (self.spec.params.units,)

    def param_shapes(self) -> tuple[Shape, Shape]:
        units = self.spec.params.units
        return (units, self.input_shape[0]), (units,)

    def fan_in(self) -> int:
        return self.input_shape[0]

    def _forward(self, input, weights, bias):
        return dense_forward(input, weights, bias), None

    def _backward(self, grad_out, cache: LayerCache, weights):
        return dense_backward(grad_out, cache.input, weights)


class ReshapeLayer(BaseLayer):
    def _validate_input_shape(self):
        _require_rank(self, 1)
        target = self.spec.params.target
        if math.prod(target) != self.input_shape[0]:
            raise ShapeError(
                f"{self.name}: cannot reshape {self.input_shape[0]} values into {target}"
            )

    @property
    def output_shape(self) -> Shape:
        return tuple(self.spec.params.target)

    def _forward(self, input, weights, bias):
        return reshape(input, self.spec.params.target), None

    def _backward(self, grad_out, cache: LayerCache, weights):
        return flatten(grad_out), None, None


class TConvLayer(BaseLayer):
    def _validate_input_shape(self):
        _require_rank(self, 3)

    @property
    def output_shape(self) -> Shape:
        p: ConvParams = self.spec.params
        height, width, _ = self.input_shape
        crop = p.padding
        try:
            out_h = tconv_output_size(height, p.kernel[0], p.stride[0])
            out_w = tconv_output_size(width, p.kernel[1], p.stride[1])
        except ValueError as exp:
            raise ShapeError(f"{self.name}: {exp}") from exp
        out_h -= crop.top + crop.bottom
        out_w -= crop.left + crop.right
        if out_h < 1 or out_w < 1:
            raise ShapeError(f"{self.name}: padding crops away the whole output")
        return out_h, out_w, p.filters

    def param_shapes(self) -> tuple[Shape, Shape]:
        p: ConvParams = self.spec.params
        return (self.input_shape[2], *p.kernel, p.filters), (p.filters,)

    def fan_in(self) -> int:
        """Number of input pixels reaching each output pixel"""
        p: ConvParams = self.spec.params
        return (
            self.input_shape[2]
            * math.ceil(p.kernel[0] / p.stride[0])
            * math.ceil(p.kernel[1] / p.stride[1])
        )

    def _forward(self, input, weights, bias):
        return tconv2d_forward(input, weights, bias, self.spec.params), None

    def _backward(self, grad_out, cache: LayerCache, weights):
        return tconv2d_backward(grad_out, cache.input, weights, self.spec.params)


_LAYERS: dict[LayerKind, type[BaseLayer]] = {
    LayerKind.CONV: ConvLayer,
    LayerKind.MAXPOOL: MaxPoolLayer,
    LayerKind.FLATTEN: FlattenLayer,
    LayerKind.DENSE: DenseLayer,
    LayerKind.RESHAPE: ReshapeLayer,
    LayerKind.TCONV: TConvLayer,
}


def build_stack(specs: list[LayerSpec], input_shape: Shape) -> list[BaseLayer]:
    """Instantiates the layers of a sequential network, checking the shape chain

    Args:
        specs: the layer specs in order
        input_shape: the shape of a single input sample

    Returns:
        the layers, each named ``<kind>_<k>`` with k counting layers of that kind

    Raises:
        ShapeError: a layer cannot accept the output of its predecessor
    """
    layers = []
    counts: dict[LayerKind, int] = {}
    shape = tuple(input_shape)
    for spec in specs:
        counts[spec.kind] = counts.get(spec.kind, 0) + 1
        layer = _LAYERS[spec.kind](spec, shape, name=f"{spec.kind.value}_{counts[spec.kind]}")
        shape = layer.output_shape
        layers.append(layer)
    return layers


def _require_rank(layer: BaseLayer, rank: int):
    if len(layer.input_shape) != rank:
        raise ShapeError(
            f"{layer.name} expects rank-{rank} samples, got shape {layer.input_shape}"
        )
