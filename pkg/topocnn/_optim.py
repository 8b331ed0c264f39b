"""Adam optimizer"""

from typing import Annotated

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ._errors import ShapeError


class AdamState(BaseModel):
    """The moment estimates and hyperparameters of Adam

    ``m`` and ``v`` hold one array per parameter, mirroring its shape.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    step: Annotated[int, Field(ge=0)] = 0
    m: list[np.ndarray] = []
    v: list[np.ndarray] = []
    lr: Annotated[float, Field(ge=0)] = 1e-3
    beta1: Annotated[float, Field(ge=0, lt=1)] = 0.9
    beta2: Annotated[float, Field(ge=0, lt=1)] = 0.999
    epsilon: Annotated[float, Field(gt=0)] = 1e-7

    @classmethod
    def create(cls, params: list[np.ndarray], **kwargs) -> "AdamState":
        """Creates a fresh state with zero moments for the given parameters

        Args:
            params: the parameters to be optimized
            kwargs: hyperparameters overriding the defaults
        """
        return cls(
            m=[np.zeros_like(p, dtype=np.float64) for p in params],
            v=[np.zeros_like(p, dtype=np.float64) for p in params],
            **kwargs,
        )


def adam_step(
    state: AdamState, params: list[np.ndarray], grads: list[np.ndarray]
) -> tuple[list[np.ndarray], AdamState]:
    """Applies one bias-corrected Adam update

    The parameters and the moments are updated in place.

    Args:
        state: the optimizer state
        params: the parameters, in the order the state was created with
        grads: the gradients of the loss w.r.t. params

    Returns:
        the updated params and state

    Raises:
        ShapeError: the params, grads and moments do not line up
    """
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise ShapeError(
            f"got {len(params)} params and {len(grads)} grads for a state of {len(state.m)} moments"
        )
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"parameter of shape {p.shape} got gradient of shape {g.shape}")

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**state.step
    correction2 = 1.0 - b2**state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        p -= state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
    return params, state
