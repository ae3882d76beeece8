"""Structured P1 triangulation of the unit square.

Every grid cell is split along its lower-left to upper-right diagonal,
giving 2*n**2 congruent right triangles with counterclockwise vertex
ordering.  Nodes are numbered row-major (x2 outer, x1 inner) so that
assembled sparsity patterns are reproducible.  Homogeneous Dirichlet
conditions are imposed by eliminating boundary nodes, which is what the
interior index map is for.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Mesh:
    """Uniform triangulation of [0,1]^2 with (n_intervals+1)^2 nodes."""

    n_intervals: int
    nodes: np.ndarray          # (n_nodes, 2) coordinates
    triangles: np.ndarray      # (n_triangles, 3) node indices, CCW
    boundary_mask: np.ndarray  # (n_nodes,) True on the boundary

    @property
    def h(self) -> float:
        return 1.0 / self.n_intervals

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def barycenters(self) -> np.ndarray:
        """Per-triangle barycenter coordinates, shape (n_triangles, 2)."""
        return self.nodes[self.triangles].mean(axis=1)

    def signed_areas(self) -> np.ndarray:
        """Signed triangle areas (positive for CCW ordering)."""
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass(frozen=True)
class InteriorMap:
    """Bijection between interior (non-Dirichlet) nodes and dense indices."""

    interior_nodes: np.ndarray  # dense index -> node index
    dense_index: np.ndarray     # node index -> dense index, -1 on boundary

    @property
    def n_interior(self) -> int:
        return self.interior_nodes.shape[0]


def build_unit_square_mesh(n_intervals: int) -> Mesh:
    """Build the uniform triangulation with n_intervals cells per axis.

    Rejects n_intervals < 2: a 1x1 grid has no interior node and every
    system assembled on interior unknowns would be empty.
    """
    if n_intervals < 2:
        raise ValueError(f"n_intervals must be >= 2, got {n_intervals}")
    n = n_intervals
    coords_1d = np.linspace(0.0, 1.0, n + 1)
    x1, x2 = np.meshgrid(coords_1d, coords_1d, indexing="xy")
    nodes = np.column_stack([x1.ravel(), x2.ravel()])

    # Cell (i, j) has corners ll, lr, ul, ur; both triangles share the
    # ll-ur diagonal and are ordered counterclockwise.
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    ll = (j * (n + 1) + i).ravel()
    lr = ll + 1
    ul = ll + (n + 1)
    ur = ul + 1
    lower = np.column_stack([ll, lr, ur])
    upper = np.column_stack([ll, ur, ul])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    on_edge_1d = (coords_1d == 0.0) | (coords_1d == 1.0)
    boundary = (on_edge_1d[None, :] | on_edge_1d[:, None]).ravel()

    for arr in (nodes, triangles, boundary):
        arr.flags.writeable = False
    return Mesh(n_intervals=n, nodes=nodes, triangles=triangles,
                boundary_mask=boundary)


def interior_index_map(mesh: Mesh) -> InteriorMap:
    """Assign dense indices 0..n_int-1 to interior nodes, in node order."""
    interior_nodes = np.flatnonzero(~mesh.boundary_mask)
    dense = np.full(mesh.n_nodes, -1, dtype=np.int64)
    dense[interior_nodes] = np.arange(interior_nodes.size)
    for arr in (interior_nodes, dense):
        arr.flags.writeable = False
    return InteriorMap(interior_nodes=interior_nodes, dense_index=dense)


def dump_mesh(mesh: Mesh, path: str | Path) -> None:
    """Plain-text mesh listing for debugging.

    One node per line (index x1 x2), then one triangle per line (three
    node indices).
    """
    path = Path(path)
    with path.open("w", newline="\n") as fh:
        fh.write(f"# nodes {mesh.n_nodes}\n")
        for idx, (a, b) in enumerate(mesh.nodes):
            fh.write(f"{idx} {a:.17g} {b:.17g}\n")
        fh.write(f"# triangles {mesh.n_triangles}\n")
        for tri in mesh.triangles:
            fh.write(f"{tri[0]} {tri[1]} {tri[2]}\n")
