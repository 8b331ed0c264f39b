"""Convolution and transpose-convolution kernels

Convolution is a cross-correlation (no kernel flip). Weights of
:func:`conv2d_forward` are laid out ``(filters, kh, kw, in_channels)``;
weights of :func:`tconv2d_forward` are laid out ``(in_channels, kh, kw,
out_channels)`` so that the same array makes the two operations adjoint.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .._errors import ShapeError
from .params import ConvParams, PaddingMode
from .shapes import conv_output_size, resolve_padding, tconv_output_size
from .tensor import Tensor, as_tensor, check_channels


def conv2d_forward(
    input: Tensor, weights: Tensor, bias: np.ndarray, p: ConvParams
) -> Tensor:
    """Applies a 2D convolution with per-filter bias

    Args:
        input: the (batch, height, width, in_channels) input
        weights: the (filters, kh, kw, in_channels) kernels
        bias: the (filters,) bias vector
        p: the convolution parameters

    Returns:
        the (batch, out_height, out_width, filters) output

    Raises:
        ShapeError: the input does not match the weights or the parameters
    """
    input = as_tensor(input)
    _check_conv_weights(weights, bias, p)
    check_channels(input, weights.shape[3])
    padded, _ = _pad(input, p)
    windows = _windows(padded, p)
    # (n, h, w, c, i, j) x (f, i, j, c) -> (n, h, w, f)
    return np.tensordot(windows, weights, axes=([3, 4, 5], [3, 1, 2])) + bias


def conv2d_backward(
    grad_out: Tensor, cached_input: Tensor, weights: Tensor, p: ConvParams
) -> tuple[Tensor, Tensor, np.ndarray]:
    """Computes the gradients of a convolution

    Args:
        grad_out: gradient of the loss w.r.t. the convolution output
        cached_input: the input the forward pass was called with
        weights: the (filters, kh, kw, in_channels) kernels
        p: the convolution parameters

    Returns:
        the gradients w.r.t. (input, weights, bias)

    Raises:
        ShapeError: grad_out does not match the forward pass
    """
    cached_input = as_tensor(cached_input)
    grad_out = as_tensor(grad_out)
    check_channels(cached_input, weights.shape[3])
    padded, (top, _, left, _) = _pad(cached_input, p)
    windows = _windows(padded, p)
    if grad_out.shape != windows.shape[:3] + (p.filters,):
        raise ShapeError(
            f"grad_out shape {grad_out.shape} does not match the forward output "
            f"{windows.shape[:3] + (p.filters,)}"
        )

    grad_bias = grad_out.sum(axis=(0, 1, 2))
    # (n, h, w, f) x (n, h, w, c, i, j) -> (f, c, i, j)
    grad_weights = np.tensordot(grad_out, windows, axes=([0, 1, 2], [0, 1, 2]))
    grad_weights = grad_weights.transpose(0, 2, 3, 1)

    _, out_h, out_w, _ = grad_out.shape
    sv, sh = p.stride
    grad_padded = np.zeros_like(padded)
    for i in range(p.kernel[0]):
        for j in range(p.kernel[1]):
            grad_padded[
                :, i : i + sv * (out_h - 1) + 1 : sv, j : j + sh * (out_w - 1) + 1 : sh, :
            ] += grad_out @ weights[:, i, j, :]

    height, width = cached_input.shape[1:3]
    grad_input = grad_padded[:, top : top + height, left : left + width, :]
    return np.ascontiguousarray(grad_input), grad_weights, grad_bias


def tconv2d_forward(
    input: Tensor, weights: Tensor, bias: np.ndarray, p: ConvParams
) -> Tensor:
    """Applies a 2D transpose convolution

    Every input pixel scatters ``pixel * kernel`` into the output at stride
    offsets; overlapping contributions are summed. Explicit padding crops the
    output, so its size follows ``(I - 1) S + K - 2P``.

    Args:
        input: the (batch, height, width, in_channels) input
        weights: the (in_channels, kh, kw, filters) kernels
        bias: the (filters,) bias vector
        p: the transpose convolution parameters

    Returns:
        the (batch, out_height, out_width, filters) output

    Raises:
        ShapeError: the input does not match the weights
        ValueError: 'same' padding was requested
    """
    input = as_tensor(input)
    _check_tconv_weights(weights, bias, p)
    check_channels(input, weights.shape[0])
    full = _tconv_scatter(input, weights, p)
    top, bottom, left, right = _tconv_crop(input.shape[1:3], p)
    cropped = full[:, top : full.shape[1] - bottom, left : full.shape[2] - right, :]
    return np.ascontiguousarray(cropped) + bias


def tconv2d_backward(
    grad_out: Tensor, cached_input: Tensor, weights: Tensor, p: ConvParams
) -> tuple[Tensor, Tensor, np.ndarray]:
    """Computes the gradients of a transpose convolution

    Returns:
        the gradients w.r.t. (input, weights, bias)

    Raises:
        ShapeError: grad_out does not match the forward pass
    """
    cached_input = as_tensor(cached_input)
    grad_out = as_tensor(grad_out)
    check_channels(cached_input, weights.shape[0])
    batch, height, width, _ = cached_input.shape
    top, bottom, left, right = _tconv_crop((height, width), p)
    kh, kw = p.kernel
    sv, sh = p.stride
    full_h = (height - 1) * sv + kh
    full_w = (width - 1) * sh + kw
    expected = (batch, full_h - top - bottom, full_w - left - right, p.filters)
    if grad_out.shape != expected:
        raise ShapeError(
            f"grad_out shape {grad_out.shape} does not match the forward output {expected}"
        )

    grad_full = np.zeros((batch, full_h, full_w, p.filters))
    grad_full[:, top : full_h - bottom, left : full_w - right, :] = grad_out

    grad_bias = grad_out.sum(axis=(0, 1, 2))
    grad_input = np.zeros_like(cached_input)
    grad_weights = np.zeros_like(weights, dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            g = grad_full[
                :, i : i + sv * (height - 1) + 1 : sv, j : j + sh * (width - 1) + 1 : sh, :
            ]
            grad_input += g @ weights[:, i, j, :].T
            grad_weights[:, i, j, :] = np.tensordot(
                cached_input, g, axes=([0, 1, 2], [0, 1, 2])
            )
    return grad_input, grad_weights, grad_bias


def _pad(input: Tensor, p: ConvParams) -> tuple[Tensor, tuple[int, int, int, int]]:
    """Zero-pads the input as the convolution parameters dictate

    Returns:
        the padded input and its (top, bottom, left, right) extents
    """
    extents = resolve_padding(input.shape[1:3], p.kernel, p.stride, p.padding)
    top, bottom, left, right = extents
    for size, k, s, before, after in (
        (input.shape[1], p.kernel[0], p.stride[0], top, bottom),
        (input.shape[2], p.kernel[1], p.stride[1], left, right),
    ):
        # raises when the kernel does not fit the padded input
        conv_output_size(size + before + after, k, s, 0)

    if not any(extents):
        return input, extents
    padded = np.pad(input, ((0, 0), (top, bottom), (left, right), (0, 0)))
    return padded, extents


def _windows(padded: Tensor, p: ConvParams) -> np.ndarray:
    """Gathers every kernel-sized window of the padded input (im2col as a view)

    Returns:
        a (batch, out_h, out_w, channels, kh, kw) read-only view
    """
    view = sliding_window_view(padded, p.kernel, axis=(1, 2))
    return view[:, :: p.stride[0], :: p.stride[1]]


def _tconv_scatter(input: Tensor, weights: Tensor, p: ConvParams) -> Tensor:
    """Scatters every input pixel through the kernel into the uncropped output"""
    batch, height, width, _ = input.shape
    kh, kw = p.kernel
    sv, sh = p.stride
    full = np.zeros(
        (
            batch,
            tconv_output_size(height, kh, sv, 0),
            tconv_output_size(width, kw, sh, 0),
            p.filters,
        )
    )
    for i in range(kh):
        for j in range(kw):
            full[
                :, i : i + sv * (height - 1) + 1 : sv, j : j + sh * (width - 1) + 1 : sh, :
            ] += input @ weights[:, i, j, :]
    return full


def _tconv_crop(
    size: tuple[int, int], p: ConvParams
) -> tuple[int, int, int, int]:
    """Resolves the output cropping of a transpose convolution

    Raises:
        ValueError: 'same' padding was requested or the crop empties the output
    """
    if p.padding.mode == PaddingMode.SAME:
        raise ValueError("'same' padding is not supported for transpose convolution")
    if p.padding.mode == PaddingMode.VALID:
        return 0, 0, 0, 0

    crop = p.padding
    for I, K, S, before, after in (
        (size[0], p.kernel[0], p.stride[0], crop.top, crop.bottom),
        (size[1], p.kernel[1], p.stride[1], crop.left, crop.right),
    ):
        if tconv_output_size(I, K, S, 0) - before - after < 1:
            raise ValueError(f"padding ({before}, {after}) crops away the whole output")
    return crop.top, crop.bottom, crop.left, crop.right


def _check_conv_weights(weights: np.ndarray, bias: np.ndarray, p: ConvParams):
    expected = (p.filters, *p.kernel)
    if weights.ndim != 4 or weights.shape[:3] != expected:
        raise ShapeError(
            f"conv weights of shape {weights.shape} do not match (filters, kh, kw) = {expected}"
        )
    if bias.shape != (p.filters,):
        raise ShapeError(f"bias of shape {bias.shape} does not match {p.filters} filters")


def _check_tconv_weights(weights: np.ndarray, bias: np.ndarray, p: ConvParams):
    if weights.ndim != 4 or weights.shape[1:] != (*p.kernel, p.filters):
        raise ShapeError(
            f"transpose conv weights of shape {weights.shape} do not match "
            f"(in_channels, kh, kw, filters) = (?, {p.kernel[0]}, {p.kernel[1]}, {p.filters})"
        )
    if bias.shape != (p.filters,):
        raise ShapeError(f"bias of shape {bias.shape} does not match {p.filters} filters")
