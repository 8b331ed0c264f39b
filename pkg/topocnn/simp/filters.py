"""Sensitivity filter"""

import math
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .fem import DensityField

GAMMA = 1e-3
"""lower bound of the density in the filter's denominator"""


@lru_cache(maxsize=16)
def filter_weights(nx: int, ny: int, rmin: float) -> tuple[sp.csr_matrix, np.ndarray]:
    """Builds the weights ``w_ej = max(0, rmin - dist(e, j))`` between elements

    Returns:
        the (nel, nel) weight matrix in column-major element order and its row sums
    """
    reach = math.ceil(rmin) - 1
    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    ix, iy = ix.ravel(), iy.ravel()
    rows, cols, values = [], [], []
    for dx in range(-reach, reach + 1):
        for dy in range(-reach, reach + 1):
            weight = rmin - math.hypot(dx, dy)
            if weight <= 0:
                continue
            jx, jy = ix + dx, iy + dy
            inside = (jx >= 0) & (jx < nx) & (jy >= 0) & (jy < ny)
            rows.append((ix * ny + iy)[inside])
            cols.append((jx * ny + jy)[inside])
            values.append(np.full(inside.sum(), weight))

    nel = nx * ny
    H = sp.coo_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nel, nel),
    ).tocsr()
    return H, np.asarray(H.sum(axis=1)).ravel()


def filter_sensitivities(dc: DensityField, rho: DensityField, rmin: float) -> DensityField:
    """Applies the classic sensitivity filter

    ``dc_e <- sum_j w_ej rho_j dc_j / (max(gamma, rho_e) sum_j w_ej)``

    Args:
        dc: the (ny, nx) compliance sensitivities
        rho: the (ny, nx) densities
        rmin: the filter radius in element units

    Returns:
        the filtered (ny, nx) sensitivities
    """
    dc = np.asarray(dc, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    if dc.shape != rho.shape or dc.ndim != 2:
        raise ValueError(
            f"sensitivities {dc.shape} and densities {rho.shape} must be matching images"
        )
    ny, nx = rho.shape
    H, row_sums = filter_weights(nx, ny, float(rmin))
    x = rho.ravel(order="F")
    filtered = (H @ (x * dc.ravel(order="F"))) / (np.maximum(GAMMA, x) * row_sums)
    return filtered.reshape((ny, nx), order="F")
