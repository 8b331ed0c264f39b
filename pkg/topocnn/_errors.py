"""Exceptions raised by topocnn"""


class TopoCnnError(Exception):
    """Base class for all errors raised by this package"""


class ShapeError(TopoCnnError, ValueError):
    """A tensor does not have the shape an operation expects"""


class SolverError(TopoCnnError, RuntimeError):
    """The finite-element solve or the optimality-criteria update failed

    Attributes:
        iteration: the optimization iteration at which the failure occurred, if known
    """

    def __init__(self, message: str, iteration: int | None = None):
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)
        self.iteration = iteration


class TrainingDivergedError(TopoCnnError, RuntimeError):
    """The training loss became non-finite

    Attributes:
        epoch: the 1-based epoch at which the loss became non-finite
        layer_norms: the L2 norm of every layer's weights at that point
    """

    def __init__(self, epoch: int, layer_norms: dict[str, float]):
        norms = ", ".join(f"{k}={v:.4g}" for k, v in layer_norms.items())
        super().__init__(f"non-finite loss at epoch {epoch}; weight norms: {norms}")
        self.epoch = epoch
        self.layer_norms = layer_norms


class CheckpointError(TopoCnnError, ValueError):
    """A checkpoint file is corrupted, truncated or of an unsupported version"""


class DatasetError(TopoCnnError, ValueError):
    """A dataset could not be generated or loaded

    Attributes:
        failures: map of sample name to the error message for every failed sample
    """

    def __init__(self, message: str, failures: dict[str, str] | None = None):
        super().__init__(message)
        self.failures = failures or {}


class ImageFormatError(DatasetError):
    """An image file is malformed or uses an unsupported encoding"""
