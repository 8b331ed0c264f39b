"""Binary checkpoints of a model and, optionally, its Adam state

Layout, all integers little-endian::

    b"PTOC" | u32 version | u32 adaptive_n | u32 layer count
    | 3 x u32 input shape | u64 parameter count | u8 has adam
    | per layer: u8 kind, u8 activation, kind-specific u32 fields
    | per parametric layer: weights then bias as float32
    | if has adam: u64 step, 4 x f64 (lr, beta1, beta2, epsilon),
      m then v as float32 in parameter order
    | u32 CRC32 of everything before it
"""

import logging
import struct
import zlib
from os import PathLike

import numpy as np

from ._errors import CheckpointError
from ._layers import Activation, LayerKind, LayerSpec
from ._network import Model
from ._optim import AdamState
from .ops import ConvParams, Padding, PaddingMode, PoolParams

_logger = logging.getLogger(__name__)

MAGIC = b"PTOC"
VERSION = 1

_HEADER = struct.Struct("<4sIII3IQB")
_KINDS = {
    LayerKind.CONV: 1,
    LayerKind.MAXPOOL: 2,
    LayerKind.FLATTEN: 3,
    LayerKind.DENSE: 4,
    LayerKind.RESHAPE: 5,
    LayerKind.TCONV: 6,
}
_ACTIVATIONS = {Activation.NONE: 0, Activation.RELU: 1}
_PADDINGS = {PaddingMode.VALID: 0, PaddingMode.SAME: 1, PaddingMode.EXPLICIT: 2}
_FLOAT = np.dtype("<f4")


def save_checkpoint(model: Model, path: str | PathLike, adam: AdamState | None = None):
    """Writes the model, and the optimizer state if given, to path

    Parameters are stored as 32-bit floats.

    Args:
        model: the materialized model
        path: the file to write
        adam: the optimizer state to store alongside
    """
    params = model.parameters()
    chunks = [
        _HEADER.pack(
            MAGIC,
            VERSION,
            model.adaptive_n,
            len(model.layers),
            *model.input_shape,
            model.parameter_count(),
            adam is not None,
        )
    ]
    chunks.extend(_pack_layer(spec) for spec in model.layers)
    chunks.extend(_to_bytes(p) for p in params)
    if adam is not None:
        chunks.append(struct.pack("<Q4d", adam.step, adam.lr, adam.beta1, adam.beta2, adam.epsilon))
        chunks.extend(_to_bytes(m) for m in adam.m)
        chunks.extend(_to_bytes(v) for v in adam.v)

    crc = 0
    with open(path, "wb") as file:
        for chunk in chunks:
            crc = zlib.crc32(chunk, crc)
            file.write(chunk)
        file.write(struct.pack("<I", crc))
    _logger.info("saved checkpoint with %d parameters to %s", model.parameter_count(), path)


def load_checkpoint(path: str | PathLike) -> tuple[Model, AdamState | None]:
    """Reads a model, and its optimizer state if stored, from path

    Returns:
        the model with float64 parameters and the optimizer state or None

    Raises:
        CheckpointError: bad magic, unsupported version, truncated file,
            checksum mismatch or inconsistent contents
    """
    with open(path, "rb") as file:
        data = file.read()

    if len(data) < _HEADER.size + 4:
        raise CheckpointError(f"{path}: truncated checkpoint of {len(data)} bytes")
    magic, version, adaptive_n, n_layers, h, w, c, count, has_adam = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    (crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(data[:-4]) != crc:
        raise CheckpointError(f"{path}: checksum mismatch")

    reader = _Reader(data, _HEADER.size, len(data) - 4, path)
    try:
        layers = [_unpack_layer(reader) for _ in range(n_layers)]
        model = Model(layers=layers, input_shape=(h, w, c), adaptive_n=adaptive_n)
    except (KeyError, ValueError) as exp:
        raise CheckpointError(f"{path}: invalid layer header: {exp}") from exp
    if model.parameter_count() != count:
        raise CheckpointError(
            f"{path}: header declares {count} parameters but the layers hold {model.parameter_count()}"
        )

    weights, biases = [], []
    for layer in model.stack:
        shapes = layer.param_shapes()
        if shapes is None:
            weights.append(None)
            biases.append(None)
            continue
        weights.append(reader.floats(shapes[0]))
        biases.append(reader.floats(shapes[1]))
    model.weights = weights
    model.biases = biases

    adam = None
    if has_adam:
        step, lr, beta1, beta2, epsilon = reader.unpack("<Q4d")
        shapes = [p.shape for p in model.parameters()]
        m = [reader.floats(shape) for shape in shapes]
        v = [reader.floats(shape) for shape in shapes]
        adam = AdamState(step=step, m=m, v=v, lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)
    if reader.offset != reader.end:
        raise CheckpointError(f"{path}: {reader.end - reader.offset} unexpected trailing bytes")

    _logger.info("loaded checkpoint with %d parameters from %s", count, path)
    return model, adam


class _Reader:
    """Sequential reader over the checksummed body of a checkpoint"""

    __slots__ = ("data", "offset", "end", "path")

    def __init__(self, data: bytes, offset: int, end: int, path):
        self.data = data
        self.offset = offset
        self.end = end
        self.path = path

    def unpack(self, fmt: str) -> tuple:
        size = struct.calcsize(fmt)
        self._require(size)
        values = struct.unpack_from(fmt, self.data, self.offset)
        self.offset += size
        return values

    def floats(self, shape: tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape))
        self._require(count * _FLOAT.itemsize)
        blob = np.frombuffer(self.data, dtype=_FLOAT, count=count, offset=self.offset)
        self.offset += count * _FLOAT.itemsize
        return blob.astype(np.float64).reshape(shape)

    def _require(self, size: int):
        if self.offset + size > self.end:
            raise CheckpointError(f"{self.path}: truncated checkpoint")


def _pack_layer(spec: LayerSpec) -> bytes:
    head = struct.pack("<BB", _KINDS[spec.kind], _ACTIVATIONS[spec.activation])
    p = spec.params
    if spec.kind in (LayerKind.CONV, LayerKind.TCONV):
        pad = p.padding
        return head + struct.pack(
            "<5IB4I",
            p.filters,
            *p.kernel,
            *p.stride,
            _PADDINGS[pad.mode],
            pad.top,
            pad.bottom,
            pad.left,
            pad.right,
        )
    if spec.kind == LayerKind.MAXPOOL:
        return head + struct.pack("<4I", *p.window, *p.stride)
    if spec.kind == LayerKind.DENSE:
        return head + struct.pack("<I", p.units)
    if spec.kind == LayerKind.RESHAPE:
        return head + struct.pack("<3I", *p.target)
    return head


def _unpack_layer(reader: _Reader) -> LayerSpec:
    code, act = reader.unpack("<BB")
    kind = {v: k for k, v in _KINDS.items()}[code]
    activation = {v: k for k, v in _ACTIVATIONS.items()}[act]
    params = None
    if kind in (LayerKind.CONV, LayerKind.TCONV):
        filters, kh, kw, sv, sh, mode, top, bottom, left, right = reader.unpack("<5IB4I")
        mode = {v: k for k, v in _PADDINGS.items()}[mode]
        padding = Padding(mode=mode, top=top, bottom=bottom, left=left, right=right)
        params = ConvParams(filters=filters, kernel=(kh, kw), stride=(sv, sh), padding=padding)
    elif kind == LayerKind.MAXPOOL:
        ph, pw, sv, sh = reader.unpack("<4I")
        params = PoolParams(window=(ph, pw), stride=(sv, sh))
    elif kind == LayerKind.DENSE:
        (units,) = reader.unpack("<I")
        params = {"units": units}
    elif kind == LayerKind.RESHAPE:
        params = {"target": reader.unpack("<3I")}
    return LayerSpec(kind=kind, params=params, activation=activation)


def _to_bytes(array: np.ndarray) -> bytes:
    return np.ascontiguousarray(array, dtype=_FLOAT).tobytes()
