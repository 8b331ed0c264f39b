"""Reading and writing density images

Densities are stored as 8-bit grayscale with solid as black:
``pixel = floor((1 - d) * 255 + 0.5)`` and ``d = 1 - pixel / 255``.
"""

import re
from os import PathLike
from pathlib import Path

import numpy as np

from ._compat import HAS_PNG, PngReader
from ._errors import ImageFormatError

MAXVAL = 255
_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def density_to_pixels(image: np.ndarray) -> np.ndarray:
    """Quantizes densities in [0, 1] to 8-bit pixels, rounding half up

    Raises:
        ValueError: the image is not 2D or holds values outside [0, 1]
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"expected a 2D image, got shape {image.shape}")
    if not np.all(np.isfinite(image)) or image.min() < 0 or image.max() > 1:
        raise ValueError("densities must lie in [0, 1]")
    return np.floor((1.0 - image) * MAXVAL + 0.5).astype(np.uint8)


def pixels_to_density(pixels: np.ndarray) -> np.ndarray:
    return 1.0 - pixels.astype(np.float64) / MAXVAL


def write_pgm(image: np.ndarray, path: str | PathLike):
    """Writes a density image as a binary (P5) PGM with maxval 255

    Args:
        image: the (height, width) densities in [0, 1]
        path: the file to write
    """
    pixels = density_to_pixels(image)
    height, width = pixels.shape
    with open(path, "wb") as file:
        file.write(f"P5\n{width} {height}\n{MAXVAL}\n".encode("ascii"))
        file.write(pixels.tobytes())


def read_pgm(path: str | PathLike) -> np.ndarray:
    """Reads a binary PGM written with maxval 255 as a density image

    Comments in the header are skipped.

    Returns:
        the (height, width) densities

    Raises:
        ImageFormatError: the header is malformed, maxval is not 255 or the
            pixel data is short
    """
    data = Path(path).read_bytes()
    tokens, offset = [], 0
    for _ in range(4):
        match = _TOKEN.match(data, offset)
        if match is None:
            raise ImageFormatError(f"{path}: truncated PGM header")
        tokens.append(match.group(1))
        offset = match.end()

    magic, width, height, maxval = tokens
    if magic != b"P5":
        raise ImageFormatError(f"{path}: not a binary PGM (magic {magic!r})")
    try:
        width, height, maxval = int(width), int(height), int(maxval)
    except ValueError as exp:
        raise ImageFormatError(f"{path}: malformed PGM header") from exp
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: invalid dimensions {width}x{height}")
    if maxval != MAXVAL:
        raise ImageFormatError(f"{path}: maxval {maxval} is not supported; expected {MAXVAL}")
    if offset >= len(data) or not data[offset : offset + 1].isspace():
        raise ImageFormatError(f"{path}: missing whitespace after the PGM header")

    offset += 1
    count = width * height
    if len(data) - offset < count:
        raise ImageFormatError(f"{path}: expected {count} pixels, found {len(data) - offset}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=count, offset=offset)
    return pixels_to_density(pixels.reshape(height, width))


def read_png(path: str | PathLike) -> np.ndarray:
    """Reads an 8-bit grayscale PNG as a density image

    Requires the optional ``pypng`` package.

    Raises:
        ImportError: pypng is not installed
        ImageFormatError: the PNG is not 8-bit grayscale without alpha
    """
    if not HAS_PNG:
        raise ImportError("reading PNG images requires pypng; install topocnn[png]")
    try:
        width, height, rows, info = PngReader(filename=str(path)).read()
        pixels = np.vstack([np.asarray(row, dtype=np.uint8) for row in rows])
    except Exception as exp:
        raise ImageFormatError(f"{path}: unreadable PNG: {exp}") from exp
    if not info.get("greyscale") or info.get("alpha") or info.get("bitdepth") != 8:
        raise ImageFormatError(f"{path}: only 8-bit grayscale PNG images are supported")
    return pixels_to_density(pixels.reshape(height, width))


def read_image(path: str | PathLike) -> np.ndarray:
    """Reads a PGM or PNG density image, chosen by file suffix"""
    if Path(path).suffix.lower() == ".png":
        return read_png(path)
    return read_pgm(path)
