"""ReLU activation"""

import numpy as np


def relu(input: np.ndarray) -> np.ndarray:
    """Elementwise ``max(0, x)``"""
    return np.maximum(input, 0.0)


def relu_backward(grad_out: np.ndarray, cached_input: np.ndarray) -> np.ndarray:
    """Masks the gradient where the pre-activation is not positive (0 at x = 0)"""
    return np.where(cached_input > 0.0, grad_out, 0.0)
