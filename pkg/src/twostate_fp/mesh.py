"""Structured meshes of the unit interval and the unit square.

Nodes are numbered lexicographically: row by row in ``y``, ``x`` fastest.
Every square cell of the 2D grid is split along its (0,0)-(1,1) diagonal,
so refinements by a factor of two are nested.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class Mesh:
    dimension: int
    n: int  # cells per side
    nodes: np.ndarray  # (n_nodes, dimension)
    elements: np.ndarray  # (n_elements, dimension + 1)
    interior_index: np.ndarray  # node -> interior dof, -1 on the boundary
    h: float
    interior_nodes: np.ndarray = field(repr=False)  # dof -> node

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def n_dofs(self) -> int:
        return self.interior_nodes.shape[0]

    def element_measures(self) -> np.ndarray:
        v = self.nodes[self.elements]
        if self.dimension == 1:
            return v[:, 1, 0] - v[:, 0, 0]
        e1 = v[:, 1] - v[:, 0]
        e2 = v[:, 2] - v[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def boundary_mask(self) -> np.ndarray:
        return self.interior_index < 0


def _finish(dimension: int, n: int, nodes: np.ndarray, elements: np.ndarray) -> Mesh:
    on_boundary = np.any((nodes == 0.0) | (nodes == 1.0), axis=1)
    interior_nodes = np.flatnonzero(~on_boundary)
    interior_index = np.full(nodes.shape[0], -1, dtype=np.int64)
    interior_index[interior_nodes] = np.arange(interior_nodes.size)
    h = 1.0 / n if dimension == 1 else np.sqrt(2.0) / n
    for arr in (nodes, elements, interior_index, interior_nodes):
        arr.flags.writeable = False
    return Mesh(dimension, n, nodes, elements, interior_index, h, interior_nodes)


def build_interval_mesh(n_cells: int) -> Mesh:
    """Uniform mesh of (0, 1) with nodes ``i / n_cells``."""
    if int(n_cells) != n_cells or n_cells < 2:
        raise ValueError(f"need an integer n_cells >= 2, got {n_cells!r}")
    n = int(n_cells)
    nodes = (np.arange(n + 1, dtype=float) / n)[:, None]
    elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return _finish(1, n, nodes, elements)


def build_square_mesh(n_cells_per_side: int) -> Mesh:
    """Structured right-triangle mesh of (0, 1)^2 with 2 n^2 triangles."""
    if int(n_cells_per_side) != n_cells_per_side or n_cells_per_side < 2:
        raise ValueError(f"need an integer n_cells_per_side >= 2, got {n_cells_per_side!r}")
    n = int(n_cells_per_side)
    coords = np.arange(n + 1, dtype=float) / n
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    p00 = (j * (n + 1) + i).ravel()
    p10 = p00 + 1
    p01 = p00 + (n + 1)
    p11 = p01 + 1
    # square (i, j) -> elements 2*(j*n + i) (lower-right) and +1 (upper-left)
    elements = np.empty((2 * n * n, 3), dtype=np.int64)
    elements[0::2] = np.column_stack([p00, p10, p11])
    elements[1::2] = np.column_stack([p00, p11, p01])
    return _finish(2, n, nodes, elements)


def locate(mesh: Mesh, points) -> tuple[np.ndarray, np.ndarray]:
    """Find the containing element and barycentric weights of each point.

    ``points`` is a scalar/array of x values in 1D or an ``(m, 2)`` array in
    2D (a single ``(x, y)`` pair is also accepted).  Points on shared element
    boundaries go to the element with the smallest index.  Returns element
    indices and weights ordered like ``mesh.elements[k]``.
    """
    pts = np.asarray(points, dtype=float)
    scalar = False
    if mesh.dimension == 1:
        scalar = pts.ndim == 0
        pts = np.atleast_1d(pts).reshape(-1)
        if np.any(~np.isfinite(pts)) or np.any((pts < 0.0) | (pts > 1.0)):
            raise ValueError("point outside [0, 1]")
        n = mesh.n
        cell = np.clip(np.ceil(pts * n).astype(np.int64) - 1, 0, n - 1)
        s = pts * n - cell
        s = np.clip(s, 0.0, 1.0)
        weights = np.column_stack([1.0 - s, s])
        elem = cell
    else:
        if pts.ndim == 1:
            scalar = True
            pts = pts.reshape(1, 2)
        if pts.shape[-1] != 2:
            raise ValueError("2D points must have shape (m, 2)")
        if np.any(~np.isfinite(pts)) or np.any((pts < 0.0) | (pts > 1.0)):
            raise ValueError("point outside [0, 1]^2")
        n = mesh.n
        ci = np.clip(np.ceil(pts[:, 0] * n).astype(np.int64) - 1, 0, n - 1)
        cj = np.clip(np.ceil(pts[:, 1] * n).astype(np.int64) - 1, 0, n - 1)
        s = np.clip(pts[:, 0] * n - ci, 0.0, 1.0)
        t = np.clip(pts[:, 1] * n - cj, 0.0, 1.0)
        lower = s >= t
        elem = 2 * (cj * n + ci) + (~lower)
        weights = np.where(
            lower[:, None],
            np.column_stack([1.0 - s, s - t, t]),
            np.column_stack([1.0 - t, s, t - s]),
        )
    if scalar:
        return elem[0], weights[0]
    return elem, weights
