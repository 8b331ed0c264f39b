"""Module containing the problem definitions of the compliance-minimization solver

Mesh conventions follow the classic 88-line code: nodes are numbered
column-wise starting at the top-left corner, node ``(ix, iy)`` has id
``(ny + 1) * ix + iy`` (``iy = 0`` is the top row) and owns the DOFs
``2 * id`` (x) and ``2 * id + 1`` (y).
"""

from enum import Enum
from typing import Annotated

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class Preset(str, Enum):
    MID_LOAD = "mid-load"
    CANTILEVER_CENTER_LOAD = "cantilever-center"
    CANTILEVER_END_LOAD = "cantilever-end"
    CUSTOM = "custom"


PRESET_ASSUMPTIONS: dict[Preset, str] = {
    Preset.MID_LOAD: (
        "simply supported bottom corners: bottom-left node pinned in x and y, "
        "bottom-right node a vertical roller; unit downward load at the top-middle node"
    ),
    Preset.CANTILEVER_CENTER_LOAD: (
        "left edge fully fixed; unit downward load at the middle node of the right edge"
    ),
    Preset.CANTILEVER_END_LOAD: (
        "left edge fully fixed; unit downward load at the bottom-right corner node"
    ),
    Preset.CUSTOM: "user-defined supports and loads",
}


class ProblemSpec(BaseModel):
    """A 2D compliance-minimization problem on an nx x ny grid of unit elements

    Attributes:
        nx: elements along x
        ny: elements along y
        preset: which standard case this is, or custom
        fixed_dofs: the constrained degrees of freedom
        loads: (dof, magnitude) pairs of the point loads
        volfrac: the allowed material fraction V*
        penal: the SIMP penalization exponent
        rmin: the sensitivity filter radius in element units
        maxit: iteration cap of the optimizer
        move: OC move limit
        eta: OC damping exponent
        change_tol: the optimizer stops once no density moves more than this
        E0: Young's modulus of void
        E1: Young's modulus of solid
        nu: Poisson's ratio
    """

    model_config = ConfigDict(frozen=True)

    nx: Annotated[int, Field(ge=1)]
    ny: Annotated[int, Field(ge=1)]
    preset: Preset = Preset.CUSTOM
    fixed_dofs: tuple[Annotated[int, Field(ge=0)], ...]
    loads: tuple[tuple[Annotated[int, Field(ge=0)], float], ...]
    volfrac: Annotated[float, Field(gt=0, le=1)]
    penal: Annotated[float, Field(ge=1)] = 3.0
    rmin: Annotated[float, Field(ge=1)] = 2.4
    maxit: Annotated[int, Field(ge=1)] = 300
    move: Annotated[float, Field(gt=0, le=1)] = 0.2
    eta: Annotated[float, Field(gt=0)] = 0.5
    change_tol: Annotated[float, Field(gt=0)] = 0.01
    E0: Annotated[float, Field(gt=0)] = 1e-9
    E1: Annotated[float, Field(gt=0)] = 1.0
    nu: Annotated[float, Field(ge=0, lt=0.5)] = 0.3

    @model_validator(mode="after")
    def _check_dofs(self) -> "ProblemSpec":
        if not self.fixed_dofs:
            raise ValueError("at least one degree of freedom must be fixed")
        if not self.loads:
            raise ValueError("at least one load is required")
        if self.E1 <= self.E0:
            raise ValueError(f"E1 ({self.E1}) must exceed E0 ({self.E0})")
        dofs = [*self.fixed_dofs, *(dof for dof, _ in self.loads)]
        if max(dofs) >= self.ndof:
            raise ValueError(f"dof {max(dofs)} is outside the {self.ndof} dofs of the mesh")
        return self

    @property
    def nel(self) -> int:
        return self.nx * self.ny

    @property
    def ndof(self) -> int:
        return 2 * (self.nx + 1) * (self.ny + 1)

    @property
    def tag(self) -> str:
        return f"{self.preset.value}-{self.nx}x{self.ny}"

    def force_vector(self) -> np.ndarray:
        """The global force vector"""
        force = np.zeros(self.ndof)
        for dof, magnitude in self.loads:
            force[dof] += magnitude
        return force

    def free_dofs(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.ndof), np.asarray(self.fixed_dofs))

    def with_volfrac(self, volfrac: float) -> "ProblemSpec":
        """A copy of this problem with another volume fraction"""
        return self.model_validate({**self.model_dump(), "volfrac": volfrac})

    def with_load_scale(self, factor: float) -> "ProblemSpec":
        """A copy of this problem with every load multiplied by factor"""
        loads = tuple((dof, magnitude * factor) for dof, magnitude in self.loads)
        return self.model_validate({**self.model_dump(), "loads": loads})


def node_id(ix: int, iy: int, ny: int) -> int:
    """The id of the node in column ix and row iy (row 0 at the top)"""
    return (ny + 1) * ix + iy


def preset(p: Preset | str, nx: int, ny: int, volfrac: float, **kwargs) -> ProblemSpec:
    """Builds one of the standard load cases

    Args:
        p: the preset
        nx: elements along x
        ny: elements along y
        volfrac: the allowed material fraction
        kwargs: solver parameters overriding the ProblemSpec defaults

    Returns:
        the problem

    Raises:
        ValueError: the preset is custom; custom problems are built directly
            with ProblemSpec
    """
    p = Preset(p)
    if p == Preset.MID_LOAD:
        bottom_left = node_id(0, ny, ny)
        bottom_right = node_id(nx, ny, ny)
        fixed = (2 * bottom_left, 2 * bottom_left + 1, 2 * bottom_right + 1)
        load = node_id(nx // 2, 0, ny)
    elif p in (Preset.CANTILEVER_CENTER_LOAD, Preset.CANTILEVER_END_LOAD):
        fixed = tuple(range(2 * (ny + 1)))
        iy = ny // 2 if p == Preset.CANTILEVER_CENTER_LOAD else ny
        load = node_id(nx, iy, ny)
    else:
        raise ValueError("custom problems are built directly with ProblemSpec")

    return ProblemSpec(
        nx=nx,
        ny=ny,
        preset=p,
        fixed_dofs=fixed,
        loads=((2 * load + 1, -1.0),),
        volfrac=volfrac,
        **kwargs,
    )
