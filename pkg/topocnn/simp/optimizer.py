"""The SIMP optimization loop"""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from .._errors import SolverError
from .fem import DensityField, assemble_and_solve, compliance_and_sensitivity, evaluate_compliance
from .filters import filter_sensitivities
from .oc import oc_update
from .problems import ProblemSpec

_logger = logging.getLogger(__name__)


class IterationRecord(BaseModel):
    iteration: int
    compliance: float
    volume: float
    change: float


class OptimizeResult(BaseModel):
    """The outcome of an optimization run

    Attributes:
        density: the final (ny, nx) densities
        compliance: the compliance of the final densities
        iterations: the number of design updates performed
        converged: whether the change tolerance was met before maxit
        history: compliance, volume and change of every iteration
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    density: np.ndarray
    compliance: float
    iterations: int
    converged: bool
    history: list[IterationRecord] = []


def optimize(spec: ProblemSpec) -> OptimizeResult:
    """Minimizes compliance subject to the volume constraint

    Starts from the uniform field ``rho = volfrac`` and repeats solve,
    sensitivity analysis, sensitivity filtering and the optimality-criteria
    update until no density changes by more than ``spec.change_tol`` or
    ``spec.maxit`` updates were made. With ``volfrac = 1`` the all-solid
    field is the only feasible design and is returned without updates.

    Args:
        spec: the problem

    Returns:
        the final design and its compliance

    Raises:
        SolverError: the FE solve or the OC bisection failed; carries the iteration
    """
    shape = (spec.ny, spec.nx)
    if spec.volfrac == 1.0:
        density = np.ones(shape)
        return OptimizeResult(
            density=density,
            compliance=_evaluate(density, spec, 0),
            iterations=0,
            converged=True,
        )

    rho = np.full(shape, spec.volfrac)
    history = []
    converged = False
    for iteration in range(1, spec.maxit + 1):
        try:
            state = assemble_and_solve(rho, spec)
            compliance, dc = compliance_and_sensitivity(state, rho, spec)
            dc = filter_sensitivities(dc, rho, spec.rmin)
            updated = oc_update(rho, dc, spec)
        except SolverError as exp:
            raise SolverError(str(exp), iteration=iteration) from exp

        change = float(np.abs(updated - rho).max())
        rho = updated
        history.append(
            IterationRecord(
                iteration=iteration,
                compliance=compliance,
                volume=float(rho.mean()),
                change=change,
            )
        )
        _logger.debug(
            "it %d: compliance %.6g, volume %.4f, change %.4f",
            iteration,
            compliance,
            history[-1].volume,
            change,
        )
        if change < spec.change_tol:
            converged = True
            break

    if not converged:
        _logger.info("%s at volfrac %.4f stopped at maxit=%d", spec.tag, spec.volfrac, spec.maxit)
    return OptimizeResult(
        density=rho,
        compliance=_evaluate(rho, spec, len(history)),
        iterations=len(history),
        converged=converged,
        history=history,
    )


def _evaluate(density: DensityField, spec: ProblemSpec, iteration: int) -> float:
    try:
        return evaluate_compliance(density, spec)
    except SolverError as exp:
        raise SolverError(str(exp), iteration=iteration) from exp
