"""Module containing the parameter records of the layer kernels"""

from enum import Enum
from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

_Positive = Annotated[int, Field(ge=1)]
_NonNegative = Annotated[int, Field(ge=0)]


class PaddingMode(str, Enum):
    """How a convolution pads its input"""

    SAME = "same"
    VALID = "valid"
    EXPLICIT = "explicit"


class Padding(BaseModel):
    """The padding policy of a convolution

    ``explicit`` padding carries its four extents; ``same`` and ``valid``
    are resolved against the input size by :func:`resolve_padding`.
    """

    model_config = ConfigDict(frozen=True)

    mode: PaddingMode = PaddingMode.VALID
    top: _NonNegative = 0
    bottom: _NonNegative = 0
    left: _NonNegative = 0
    right: _NonNegative = 0

    @model_validator(mode="after")
    def _only_explicit_has_extents(self) -> "Padding":
        extents = (self.top, self.bottom, self.left, self.right)
        if self.mode != PaddingMode.EXPLICIT and any(extents):
            raise ValueError(f"'{self.mode.value}' padding takes no explicit extents")
        return self

    @classmethod
    def same(cls) -> "Padding":
        return cls(mode=PaddingMode.SAME)

    @classmethod
    def valid(cls) -> "Padding":
        return cls(mode=PaddingMode.VALID)

    @classmethod
    def explicit(cls, top: int, bottom: int, left: int, right: int) -> "Padding":
        return cls(
            mode=PaddingMode.EXPLICIT, top=top, bottom=bottom, left=left, right=right
        )


def _as_pair(value: int | tuple[int, int] | list[int]) -> tuple[int, int]:
    """Converts a scalar size into a (vertical, horizontal) pair, as Keras does"""
    if isinstance(value, int):
        return value, value
    return tuple(value)


class ConvParams(BaseModel):
    """Parameters of a (transpose) convolution layer"""

    model_config = ConfigDict(frozen=True)

    filters: _Positive
    kernel: tuple[_Positive, _Positive]
    stride: tuple[_Positive, _Positive] = (1, 1)
    padding: Padding = Padding()

    @field_validator("kernel", "stride", mode="before")
    @classmethod
    def _expand_scalars(cls, value):
        return _as_pair(value)

    @field_validator("padding", mode="before")
    @classmethod
    def _padding_from_name(cls, value):
        if isinstance(value, (str, PaddingMode)):
            return Padding(mode=PaddingMode(value))
        return value


class PoolParams(BaseModel):
    """Parameters of a non-overlapping max-pooling layer"""

    model_config = ConfigDict(frozen=True)

    window: tuple[_Positive, _Positive]
    stride: tuple[_Positive, _Positive]

    @model_validator(mode="before")
    @classmethod
    def _default_stride(cls, data):
        if isinstance(data, dict) and data.get("stride") is None:
            data = {**data, "stride": data.get("window")}
        return data

    @field_validator("window", "stride", mode="before")
    @classmethod
    def _expand_scalars(cls, value):
        return _as_pair(value)

    @model_validator(mode="after")
    def _non_overlapping(self) -> "PoolParams":
        if self.stride != self.window:
            raise ValueError(
                f"only non-overlapping pooling is supported; stride {self.stride} != window {self.window}"
            )
        return self
