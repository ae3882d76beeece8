"""Assembly of weighted stiffness matrices, mass matrices and load
vectors on the structured P1 mesh.

Diffusion k, reaction c, source f and the decomposition weight are all
sampled at triangle barycenters (one-point quadrature, exact for the
constant data used in the experiments).  Gradients of P1 basis functions
are exact.  The reaction term is mass-lumped, i.e. realized as
c(b) * area/3 on each vertex diagonal: a constant reaction c then shifts
the operator by exactly c times the lumped mass, mirroring how the
lumped mass plays the role of the identity throughout the time schemes.

Pass an InteriorMap to eliminate Dirichlet boundary rows and columns;
without it the unreduced all-node objects are returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import sparse

from .decomposition import WeightField, unit_weights
from .linalg import csr_from_arrays
from .mesh import InteriorMap, Mesh


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class Coefficients:
    """Problem data: diffusion k > 0, reaction c >= 0, source f.

    Each entry is either a scalar or a numpy-vectorizable callable;
    k and c take (x1, x2), f takes (x1, x2, t).
    """

    k: float | Callable = 1.0
    c: float | Callable = 0.0
    f: float | Callable = 0.0


def _sample(value, *coords):
    if callable(value):
        out = np.asarray(value(*coords), dtype=float)
        return np.broadcast_to(out, coords[0].shape)
    return np.full(coords[0].shape, float(value))


def _p1_geometry(mesh: Mesh):
    """Per-triangle gradient coefficients and areas.

    For vertices (p0, p1, p2), grad(phi_i) = (b_i, c_i) / (2*area) with
    b_i = y_j - y_k and c_i = x_k - x_j (i, j, k cyclic).
    """
    p = mesh.nodes[mesh.triangles]
    x = p[:, :, 0]
    y = p[:, :, 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]],
                 axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]],
                 axis=1)
    area = 0.5 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    return b, c, area


def _scatter(mesh: Mesh, local: np.ndarray, index_map: InteriorMap | None):
    """Scatter (n_tri, 3, 3) element blocks into a CSR matrix."""
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    vals = local.ravel()
    if index_map is None:
        return csr_from_arrays(mesh.n_nodes, mesh.n_nodes, rows, cols, vals)
    dr = index_map.dense_index[rows]
    dc = index_map.dense_index[cols]
    keep = (dr >= 0) & (dc >= 0)
    n = index_map.n_interior
    return csr_from_arrays(n, n, dr[keep], dc[keep], vals[keep])


def assemble_stiffness(mesh: Mesh, weights: WeightField | None,
                       coeff: Coefficients,
                       index_map: InteriorMap | None = None) -> sparse.csr_array:
    """Weighted stiffness matrix for the form
    integral( w * (k grad(u).grad(v) + c u v) ).

    With unit weights, k=1 and c=0 this is the standard P1 Laplacian
    (five-point stencil on this mesh).
    """
    if weights is None:
        weights = unit_weights(mesh)
    w = np.asarray(weights.values, dtype=float)
    if w.shape != (mesh.n_triangles,):
        raise AssemblyError(
            f"weight field has {w.shape}, expected ({mesh.n_triangles},)")
    if np.any(w < 0.0) or np.any(w > 1.0):
        raise AssemblyError(f"weights outside [0,1] in field '{weights.tag}'")

    bary = mesh.barycenters()
    k_vals = _sample(coeff.k, bary[:, 0], bary[:, 1])
    c_vals = _sample(coeff.c, bary[:, 0], bary[:, 1])
    if np.any(k_vals <= 0.0):
        raise AssemblyError("diffusion coefficient k must be positive")
    if np.any(c_vals < 0.0):
        raise AssemblyError("reaction coefficient c must be nonnegative")

    b, c, area = _p1_geometry(mesh)
    grad_part = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :])
    grad_part *= (w * k_vals / (4.0 * area))[:, None, None]
    local = grad_part
    # Lumped reaction: c(b) * area/3 on each vertex.
    react = (w * c_vals * area / 3.0)[:, None, None] * np.eye(3)[None, :, :]
    local = local + react
    return _scatter(mesh, local, index_map)


def assemble_mass(mesh: Mesh,
                  index_map: InteriorMap | None = None) -> sparse.csr_array:
    """Consistent mass matrix, local block (area/12) * [[2,1,1],[1,2,1],[1,1,2]]."""
    _, _, area = _p1_geometry(mesh)
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = area[:, None, None] * base[None, :, :]
    return _scatter(mesh, local, index_map)


def lump_mass(consistent: sparse.csr_array) -> np.ndarray:
    """Diagonal lumped mass by row sums of the consistent matrix."""
    diag = np.asarray(consistent.sum(axis=1)).ravel()
    if np.any(diag <= 0.0):
        raise AssemblyError("lumped mass has a non-positive entry")
    return diag


def lumped_mass_interior(mesh: Mesh, index_map: InteriorMap) -> np.ndarray:
    """Row-sum lumping of the unreduced mass, restricted to interior nodes.

    Lump first, then eliminate: every node keeps the full measure of its
    basis function, so the interior diagonal is h^2 on this mesh.
    """
    return lump_mass(assemble_mass(mesh))[index_map.interior_nodes]


def assemble_load(mesh: Mesh, coeff: Coefficients, t: float = 0.0,
                  index_map: InteriorMap | None = None) -> np.ndarray:
    """Load vector F_i = integral(f v_i), one-point barycenter quadrature:
    each triangle sends f(barycenter, t) * area/3 to its vertices."""
    bary = mesh.barycenters()
    _, _, area = _p1_geometry(mesh)
    if callable(coeff.f):
        f_vals = np.broadcast_to(
            np.asarray(coeff.f(bary[:, 0], bary[:, 1], t), dtype=float),
            (mesh.n_triangles,))
    else:
        f_vals = np.full(mesh.n_triangles, float(coeff.f))
    contrib = (f_vals * area / 3.0)[:, None].repeat(3, axis=1)
    full = np.zeros(mesh.n_nodes)
    np.add.at(full, mesh.triangles.ravel(), contrib.ravel())
    if index_map is None:
        return full
    return full[index_map.interior_nodes]


def l2_norm(mass_diag: np.ndarray, v: np.ndarray) -> float:
    """Discrete L2 norm sqrt(sum(m_i v_i^2)) with lumped-mass weights."""
    v = np.asarray(v, dtype=float)
    if v.shape != mass_diag.shape:
        raise ValueError(f"shape mismatch: mass {mass_diag.shape}, "
                         f"vector {v.shape}")
    return float(np.sqrt(np.sum(mass_diag * v * v)))
