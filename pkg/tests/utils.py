import importlib.util
import itertools
import json
import math
from os import path
from typing import Any, Callable

import numpy as np

from topocnn import Model
from topocnn.ops import resolve_padding
from topocnn.ops.params import ConvParams

_TESTS_FOLDER = path.dirname(path.abspath(__file__))
_FIXTURES_PATH = path.join(_TESTS_FOLDER, "fixtures")


def load_fixture(fixture_name: str) -> list[dict[str, Any]] | dict[str, Any]:
    """Load fixture and return it as python objects

    Args:
        fixture_name: the name of the fixture file name

    Returns:
        the fixture as python objects
    """
    file_path = path.join(_FIXTURES_PATH, fixture_name)
    with open(file_path, "rb") as file:
        return json.load(file)


def is_lib_installed(lib: str) -> bool:
    """Check if a library is installed.

    Args:
        lib: the library to check

    Returns:
        True if library is installed else False
    """
    return importlib.util.find_spec(lib) is not None


def naive_conv2d(
    x: np.ndarray, weights: np.ndarray, bias: np.ndarray, p: ConvParams
) -> np.ndarray:
    """Reference convolution written as plain loops

    Args:
        x: the (batch, height, width, channels) input
        weights: the (filters, kh, kw, channels) kernels
        bias: the (filters,) bias
        p: the convolution parameters

    Returns:
        the convolution output
    """
    top, bottom, left, right = resolve_padding(x.shape[1:3], p.kernel, p.stride, p.padding)
    padded = np.pad(x, ((0, 0), (top, bottom), (left, right), (0, 0)))
    kh, kw = p.kernel
    sv, sh = p.stride
    out_h = (padded.shape[1] - kh) // sv + 1
    out_w = (padded.shape[2] - kw) // sh + 1
    out = np.zeros((x.shape[0], out_h, out_w, p.filters))
    for n in range(x.shape[0]):
        for i in range(out_h):
            for j in range(out_w):
                for f in range(p.filters):
                    total = bias[f]
                    for di in range(kh):
                        for dj in range(kw):
                            for c in range(x.shape[3]):
                                total += (
                                    padded[n, i * sv + di, j * sh + dj, c]
                                    * weights[f, di, dj, c]
                                )
                    out[n, i, j, f] = total
    return out


def naive_tconv2d(
    x: np.ndarray,
    weights: np.ndarray,
    bias: np.ndarray,
    stride: tuple[int, int],
    crop: tuple[int, int, int, int] = (0, 0, 0, 0),
) -> np.ndarray:
    """Reference transpose convolution scattering one input pixel at a time

    Args:
        x: the (batch, height, width, in_channels) input
        weights: the (in_channels, kh, kw, filters) kernels
        bias: the (filters,) bias
        stride: the (sv, sh) stride
        crop: the (top, bottom, left, right) rows/columns removed from the output

    Returns:
        the transpose convolution output
    """
    batch, height, width, channels = x.shape
    _, kh, kw, filters = weights.shape
    sv, sh = stride
    full = np.zeros((batch, (height - 1) * sv + kh, (width - 1) * sh + kw, filters))
    for n, i, j, c in itertools.product(
        range(batch), range(height), range(width), range(channels)
    ):
        full[n, i * sv : i * sv + kh, j * sh : j * sh + kw, :] += x[n, i, j, c] * weights[c]
    top, bottom, left, right = crop
    return full[:, top : full.shape[1] - bottom, left : full.shape[2] - right, :] + bias


def numerical_gradient(
    func: Callable[[], float], array: np.ndarray, step: float = 1e-6
) -> np.ndarray:
    """Central finite differences of func w.r.t. every entry of array

    The array is perturbed in place and restored.
    """
    grad = np.zeros_like(array)
    for index in np.ndindex(array.shape):
        original = array[index]
        array[index] = original + step
        plus = func()
        array[index] = original - step
        minus = func()
        array[index] = original
        grad[index] = (plus - minus) / (2 * step)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """``|a - b| / (|a| + |b|)`` in the 2-norm; 0 when both vanish"""
    denominator = np.linalg.norm(a) + np.linalg.norm(b)
    if denominator == 0:
        return 0.0
    return float(np.linalg.norm(a - b) / denominator)


def activation_pattern(model: Model, x: np.ndarray) -> list[np.ndarray]:
    """Which ReLUs are active and which pooling cells won, for kink detection"""
    _, cache = model.forward(x)
    pattern = []
    for layer_cache in cache:
        if layer_cache.pre_activation is not None:
            pattern.append(layer_cache.pre_activation > 0)
        if layer_cache.extra is not None:
            pattern.append(layer_cache.extra.argmax)
    return pattern


def same_pattern(a: list[np.ndarray], b: list[np.ndarray]) -> bool:
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def expected_parameter_count(
    side: int, widths: tuple[int, int, int], adaptive_n: int = 0
) -> int:
    """The parameter count of the encoder-decoder from layer arithmetic

    Every layer holds ``weights + bias``, i.e. ``fan_in * units + units``.
    """
    c1, c2, c3 = widths
    encoded = (side // 20) ** 2 * c3
    encoder = (4 * 1 * c1 + c1) + (4 * c1 * c2 + c2) + (25 * c2 * c3 + c3)
    if adaptive_n:
        dense = (encoded * adaptive_n + adaptive_n) + (adaptive_n * encoded + encoded)
    else:
        dense = encoded * encoded + encoded
    decoder = (c3 * 4 * c2 + c2) + (c2 * 25 * c1 + c1) + (c1 * 4 * 1 + 1)
    return encoder + dense + decoder


def gauss_element_stiffness(nu: float) -> np.ndarray:
    """Unit-square bilinear plane-stress stiffness by 2x2 Gauss quadrature

    Nodes ordered bottom-left, bottom-right, top-right, top-left; y points up.
    """
    corners = [(-1, -1), (1, -1), (1, 1), (-1, 1)]
    D = np.array([[1, nu, 0], [nu, 1, 0], [0, 0, (1 - nu) / 2]]) / (1 - nu**2)
    KE = np.zeros((8, 8))
    gauss = (-1 / math.sqrt(3), 1 / math.sqrt(3))
    for xi, eta in itertools.product(gauss, gauss):
        B = np.zeros((3, 8))
        for k, (xk, yk) in enumerate(corners):
            # d/dx = 2 d/dxi on a unit element
            dx = 2 * xk * (1 + eta * yk) / 4
            dy = 2 * yk * (1 + xi * xk) / 4
            B[0, 2 * k] = dx
            B[1, 2 * k + 1] = dy
            B[2, 2 * k] = dy
            B[2, 2 * k + 1] = dx
        KE += B.T @ D @ B / 4
    return KE


def naive_sensitivity_filter(
    dc: np.ndarray, rho: np.ndarray, rmin: float, gamma: float = 1e-3
) -> np.ndarray:
    """Reference sensitivity filter looping over every pair of elements"""
    ny, nx = rho.shape
    out = np.zeros_like(dc)
    for ey, ex in itertools.product(range(ny), range(nx)):
        numerator = total = 0.0
        for jy, jx in itertools.product(range(ny), range(nx)):
            weight = max(0.0, rmin - math.hypot(ex - jx, ey - jy))
            numerator += weight * rho[jy, jx] * dc[jy, jx]
            total += weight
        out[ey, ex] = numerator / (max(gamma, rho[ey, ex]) * total)
    return out
