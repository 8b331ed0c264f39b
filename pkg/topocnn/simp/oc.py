"""Optimality-criteria density update"""

import logging

import numpy as np
from pydantic import BaseModel

from .._errors import SolverError
from .fem import DensityField
from .problems import ProblemSpec

_logger = logging.getLogger(__name__)

LAMBDA_BRACKET = (1e-9, 1e9)
BRACKET_TOL = 1e-3
VOLUME_TOL = 1e-4
MAX_BISECTIONS = 100


class OcState(BaseModel):
    """The bisection on the volume multiplier

    Attributes:
        lambda_mid: the multiplier of the accepted update
        l1: lower end of the final bracket
        l2: upper end of the final bracket
        iterations: the number of bisection steps taken
    """

    lambda_mid: float
    l1: float
    l2: float
    iterations: int


def find_multiplier(
    rho: DensityField,
    dc: DensityField,
    volfrac: float,
    move: float = 0.2,
    eta: float = 0.5,
) -> tuple[DensityField, OcState]:
    """Bisects the volume multiplier of the optimality-criteria update

    Bisection stops once the bracket is relatively tighter than 1e-3 and
    the updated mean density is within 1e-4 of volfrac.

    Returns:
        the updated densities and the final bisection state

    Raises:
        SolverError: no multiplier was found within 100 bisections
    """
    rho = np.asarray(rho, dtype=np.float64)
    lower = np.maximum(0.0, rho - move)
    upper = np.minimum(1.0, rho + move)
    ratio = np.maximum(-np.asarray(dc, dtype=np.float64), 0.0)

    l1, l2 = LAMBDA_BRACKET
    for iteration in range(1, MAX_BISECTIONS + 1):
        lmid = 0.5 * (l1 + l2)
        candidate = np.clip(rho * (ratio / lmid) ** eta, lower, upper)
        volume = candidate.mean()
        if volume > volfrac:
            l1 = lmid
        else:
            l2 = lmid
        if (l2 - l1) / (l1 + l2) < BRACKET_TOL and abs(volume - volfrac) < VOLUME_TOL:
            return candidate, OcState(lambda_mid=lmid, l1=l1, l2=l2, iterations=iteration)

    raise SolverError(
        f"optimality-criteria bisection did not converge in {MAX_BISECTIONS} steps "
        f"(volume {volume:.6f}, target {volfrac:.6f})"
    )


def oc_update(
    rho: DensityField,
    dc: DensityField,
    spec: ProblemSpec,
    move: float | None = None,
    eta: float | None = None,
) -> DensityField:
    """Computes the next densities ``clip(rho (-dc / lambda)^eta)``

    The clip bounds are the move limits ``[max(0, rho - move), min(1, rho + move)]``
    and lambda is bisected so that the mean density equals ``spec.volfrac``.

    Args:
        rho: the (ny, nx) densities
        dc: the (filtered) compliance sensitivities
        spec: the problem, supplying volfrac and the default move and eta
        move: the move limit; defaults to ``spec.move``
        eta: the damping exponent; defaults to ``spec.eta``

    Returns:
        the updated (ny, nx) densities

    Raises:
        SolverError: the bisection did not converge
    """
    move = spec.move if move is None else move
    eta = spec.eta if eta is None else eta
    updated, state = find_multiplier(rho, dc, spec.volfrac, move, eta)
    _logger.debug(
        "OC multiplier %.6g after %d bisections", state.lambda_mid, state.iterations
    )
    return updated
