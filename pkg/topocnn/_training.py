"""Module containing the loss and the training loop"""

import csv
import logging
from os import PathLike
from typing import Annotated

import numpy as np
from pydantic import BaseModel, Field

from ._dataset import Dataset, pack_tensors
from ._errors import ShapeError, TrainingDivergedError
from ._network import Model
from ._optim import AdamState, adam_step

_logger = logging.getLogger(__name__)


class TrainConfig(BaseModel):
    """Hyperparameters of a training run"""

    epochs: Annotated[int, Field(ge=1)] = 2000
    batch_size: Annotated[int, Field(ge=1)] = 32
    lr: Annotated[float, Field(ge=0)] = 1e-3
    seed: int = 0
    shuffle: bool = True


class TrainingLog(BaseModel):
    """The mean training loss of every epoch, first epoch first"""

    losses: list[float] = []

    @property
    def initial_loss(self) -> float:
        return self.losses[0]

    @property
    def final_loss(self) -> float:
        return self.losses[-1]

    def to_csv(self, path: str | PathLike):
        """Writes the log as ``epoch,loss`` rows with 1-based epochs"""
        with open(path, "w", newline="") as file:
            writer = csv.writer(file)
            writer.writerow(["epoch", "loss"])
            for epoch, loss in enumerate(self.losses, start=1):
                writer.writerow([epoch, repr(loss)])


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Computes the mean squared error and its gradient w.r.t. pred

    Returns:
        the loss ``mean((pred - target)^2)`` and the gradient ``2 (pred - target) / N``

    Raises:
        ShapeError: pred and target differ in shape
    """
    if pred.shape != target.shape:
        raise ShapeError(f"pred shape {pred.shape} does not match target shape {target.shape}")
    diff = pred - target
    return float(np.mean(np.square(diff))), 2.0 * diff / diff.size


def train(
    model: Model,
    data: Dataset | tuple[np.ndarray, np.ndarray],
    cfg: TrainConfig,
    adam: AdamState | None = None,
) -> TrainingLog:
    """Trains the model in place with Adam on the mean squared error

    Every epoch visits the samples in an order drawn from a generator seeded
    with ``cfg.seed`` (or in dataset order when shuffling is off). The loss
    reported for an epoch is the sample-weighted mean of the batch losses,
    each computed before its update.

    Args:
        model: the materialized model to train
        data: a Dataset or its packed (inputs, targets) tensors
        cfg: the training hyperparameters
        adam: an optimizer state to resume from; a fresh one with
            ``lr = cfg.lr`` is created if None

    Returns:
        the per-epoch losses

    Raises:
        ValueError: the data is empty or smaller than one batch
        ShapeError: the data does not fit the model
        TrainingDivergedError: the loss became non-finite
    """
    inputs, targets = _unpack(data)
    size = inputs.shape[0]
    if size == 0:
        raise ValueError("cannot train on an empty dataset")
    if cfg.batch_size > size:
        raise ValueError(f"batch size {cfg.batch_size} exceeds the {size} available samples")
    if inputs.shape[1:] != tuple(model.input_shape):
        raise ShapeError(
            f"inputs of shape {inputs.shape[1:]} do not fit the model input {model.input_shape}"
        )
    if targets.shape[1:] != model.output_shape:
        raise ShapeError(
            f"targets of shape {targets.shape[1:]} do not fit the model output {model.output_shape}"
        )

    params = model.parameters()
    if adam is None:
        adam = AdamState.create(params, lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    log = TrainingLog()

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(size) if cfg.shuffle else np.arange(size)
        total = 0.0
        for start in range(0, size, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            pred, cache = model.forward(inputs[batch])
            loss, grad = mse_loss(pred, targets[batch])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, model.layer_norms())
            grads = model.backward(grad, cache)
            adam_step(adam, params, grads)
            total += loss * len(batch)

        log.losses.append(total / size)
        _logger.debug("epoch %d: loss %.6g", epoch, log.losses[-1])

    _logger.info(
        "trained %d epochs: loss %.6g -> %.6g", cfg.epochs, log.initial_loss, log.final_loss
    )
    return log


def _unpack(data) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(data, tuple):
        inputs, targets = data
    else:
        inputs, targets = pack_tensors(data)
    return np.asarray(inputs, dtype=np.float64), np.asarray(targets, dtype=np.float64)
