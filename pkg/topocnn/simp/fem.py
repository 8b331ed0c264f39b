"""Finite-element analysis of the plane-stress design domain"""

import logging
from functools import lru_cache

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict
from scipy.sparse.linalg import splu

from .._errors import SolverError
from .problems import ProblemSpec

_logger = logging.getLogger(__name__)

DensityField = npt.NDArray[np.float64]
"""element densities in [0, 1] as an (ny, nx) image, row 0 at the top"""

RESIDUAL_TOL = 1e-9
_RESIDUAL_LIMIT = 1e-6


class FeState(BaseModel):
    """The solved finite-element system of one density field

    Attributes:
        K: the global stiffness matrix
        u: the global displacements, zero on fixed dofs
        F: the global force vector
        KE: the unit-modulus element stiffness
        E0: Young's modulus of void
        E1: Young's modulus of solid
        nu: Poisson's ratio
        residual: the relative residual of the free-dof solve
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    K: sp.csc_matrix
    u: np.ndarray
    F: np.ndarray
    KE: np.ndarray
    E0: float
    E1: float
    nu: float
    residual: float


def element_stiffness(nu: float = 0.3) -> np.ndarray:
    """The 8x8 stiffness of a unit-square bilinear plane-stress element

    Unit thickness and unit Young's modulus; dofs ordered as in
    :func:`element_dofs`.

    Raises:
        ValueError: nu is outside [0, 0.5)
    """
    if not 0 <= nu < 0.5:
        raise ValueError(f"Poisson's ratio must lie in [0, 0.5), got {nu}")
    k = np.array(
        [
            1 / 2 - nu / 6,
            1 / 8 + nu / 8,
            -1 / 4 - nu / 12,
            -1 / 8 + 3 * nu / 8,
            -1 / 4 + nu / 12,
            -1 / 8 - nu / 8,
            nu / 6,
            1 / 8 - 3 * nu / 8,
        ]
    )
    pattern = np.array(
        [
            [0, 1, 2, 3, 4, 5, 6, 7],
            [1, 0, 7, 6, 5, 4, 3, 2],
            [2, 7, 0, 5, 6, 3, 4, 1],
            [3, 6, 5, 0, 7, 2, 1, 4],
            [4, 5, 6, 7, 0, 1, 2, 3],
            [5, 4, 3, 2, 1, 0, 7, 6],
            [6, 3, 4, 1, 2, 7, 0, 5],
            [7, 2, 1, 4, 3, 6, 5, 0],
        ]
    )
    return k[pattern] / (1 - nu**2)


@lru_cache(maxsize=16)
def element_dofs(nx: int, ny: int) -> np.ndarray:
    """The (nel, 8) dofs of every element, elements numbered column-major

    Each row lists the bottom-left, bottom-right, top-right and top-left
    nodes' (x, y) dofs. The returned array is read-only.
    """
    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    top_left = ((ny + 1) * ix + iy).ravel()
    top_right = ((ny + 1) * (ix + 1) + iy).ravel()
    nodes = np.stack([top_left + 1, top_right + 1, top_right, top_left], axis=1)
    edof = np.empty((nx * ny, 8), dtype=np.int64)
    edof[:, 0::2] = 2 * nodes
    edof[:, 1::2] = 2 * nodes + 1
    edof.flags.writeable = False
    return edof


def as_element_vector(rho: DensityField, spec: ProblemSpec) -> np.ndarray:
    """Flattens an (ny, nx) density image into the column-major element order

    Raises:
        ValueError: the field does not match the mesh or leaves [0, 1]
    """
    rho = np.asarray(rho, dtype=np.float64)
    if rho.shape != (spec.ny, spec.nx):
        raise ValueError(
            f"density field of shape {rho.shape} does not match the {spec.ny}x{spec.nx} mesh"
        )
    if not np.all(np.isfinite(rho)) or rho.min() < 0 or rho.max() > 1:
        raise ValueError("densities must lie in [0, 1]")
    return rho.ravel(order="F")


def young_moduli(rho: np.ndarray, spec: ProblemSpec) -> np.ndarray:
    """Modified SIMP interpolation ``E0 + rho^p (E1 - E0)``"""
    return spec.E0 + rho**spec.penal * (spec.E1 - spec.E0)


def assemble_and_solve(rho: DensityField, spec: ProblemSpec) -> FeState:
    """Assembles the global stiffness of the density field and solves K u = F

    The free-dof system is factorized with a sparse LU; one step of
    iterative refinement is applied if the relative residual exceeds 1e-9.

    Args:
        rho: the (ny, nx) densities
        spec: the problem

    Returns:
        the solved system

    Raises:
        SolverError: the system is singular or the residual cannot be brought
            below 1e-6
    """
    x = as_element_vector(rho, spec)
    KE = element_stiffness(spec.nu)
    edof = element_dofs(spec.nx, spec.ny)
    rows = np.repeat(edof, 8, axis=1).ravel()
    cols = np.tile(edof, (1, 8)).ravel()
    values = (young_moduli(x, spec)[:, None] * KE.ravel()[None, :]).ravel()
    K = sp.coo_matrix((values, (rows, cols)), shape=(spec.ndof, spec.ndof)).tocsc()

    F = spec.force_vector()
    free = spec.free_dofs()
    K_free = K[free, :][:, free].tocsc()
    F_free = F[free]
    try:
        lu = splu(K_free)
    except RuntimeError as exp:
        raise SolverError(f"singular stiffness matrix: {exp}") from exp

    u_free = lu.solve(F_free)
    residual = _relative_residual(K_free, u_free, F_free)
    if residual > RESIDUAL_TOL:
        u_free = u_free + lu.solve(F_free - K_free @ u_free)
        residual = _relative_residual(K_free, u_free, F_free)
    if not np.isfinite(residual) or residual > _RESIDUAL_LIMIT:
        raise SolverError(
            f"linear solve failed with relative residual {residual:.3g}; "
            "are the supports sufficient?"
        )
    if residual > RESIDUAL_TOL:
        _logger.warning(
            "relative residual %.3g exceeds %.0e after refinement", residual, RESIDUAL_TOL
        )

    u = np.zeros(spec.ndof)
    u[free] = u_free
    return FeState(K=K, u=u, F=F, KE=KE, E0=spec.E0, E1=spec.E1, nu=spec.nu, residual=residual)


def element_energies(state: FeState, spec: ProblemSpec) -> np.ndarray:
    """``u_e^T KE u_e`` of every element, in column-major element order"""
    ue = state.u[element_dofs(spec.nx, spec.ny)]
    return np.einsum("ij,jk,ik->i", ue, state.KE, ue)


def compliance_and_sensitivity(
    state: FeState, rho: DensityField, spec: ProblemSpec
) -> tuple[float, DensityField]:
    """Computes the compliance and its derivative w.r.t. every density

    The problem is self-adjoint, so no extra solve is needed.

    Returns:
        the compliance and the (ny, nx) sensitivities
    """
    x = as_element_vector(rho, spec)
    energies = element_energies(state, spec)
    compliance = float(np.sum(young_moduli(x, spec) * energies))
    dc = -spec.penal * x ** (spec.penal - 1) * (spec.E1 - spec.E0) * energies
    return compliance, dc.reshape((spec.ny, spec.nx), order="F")


def evaluate_compliance(rho: DensityField, spec: ProblemSpec) -> float:
    """The compliance of an arbitrary (grayscale) density field"""
    state = assemble_and_solve(rho, spec)
    compliance, _ = compliance_and_sensitivity(state, rho, spec)
    return compliance


def _relative_residual(K: sp.spmatrix, u: np.ndarray, F: np.ndarray) -> float:
    norm = np.linalg.norm(F)
    if norm == 0:
        return float(np.linalg.norm(K @ u))
    return float(np.linalg.norm(K @ u - F) / norm)
