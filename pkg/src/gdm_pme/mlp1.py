"""Mass-lumped conforming P1 finite elements as a gradient discretisation."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .gd import GradientDiscretisation
from .mesh import Mesh


def p1_gradients(tri):
    """Gradients (..., 3, 2) of the barycentric coordinates of triangles (..., 3, 2)."""
    x, y = tri[..., 0], tri[..., 1]
    area2 = (x[..., 1] - x[..., 0]) * (y[..., 2] - y[..., 0]) - (x[..., 2] - x[..., 0]) * (y[..., 1] - y[..., 0])
    i1, i2 = [1, 2, 0], [2, 0, 1]
    gx = (y[..., i1] - y[..., i2]) / area2[..., None]
    gy = (x[..., i2] - x[..., i1]) / area2[..., None]
    return np.stack([gx, gy], axis=-1)


def build_mlp1(mesh: Mesh) -> GradientDiscretisation:
    """One dof per vertex; boundary vertices are Dirichlet dofs.

    The region of vertex ``i`` is the union, over the triangles containing
    ``i``, of the quadrilateral (vertex, edge midpoint, centroid, edge
    midpoint), which is one third of each triangle.
    """
    if not mesh.is_triangular():
        raise ValueError("MLP1 requires a triangular mesh")
    cells = np.array([cv for cv in mesh.cell_vertices], dtype=np.int64)
    nc, nv = len(cells), mesh.n_vertices
    tri = mesh.vertices[cells]  # (nc, 3, 2)
    area = mesh.cell_area

    g = p1_gradients(tri)  # (nc, 3, 2)
    rows = (2 * np.arange(nc)[:, None, None] + np.arange(2)[None, None, :]).repeat(3, axis=1)
    cols = np.broadcast_to(cells[:, :, None], (nc, 3, 2))
    grad = sp.csr_matrix((g.ravel(), (rows.ravel(), cols.ravel())), shape=(2 * nc, nv))

    mass = np.zeros(nv)
    np.add.at(mass, cells.ravel(), np.repeat(area / 3.0, 3))

    centroid = tri.mean(axis=1)
    region_tris, region_dof = [], []
    for a in range(3):
        pa = tri[:, a]
        m_next = 0.5 * (pa + tri[:, (a + 1) % 3])
        m_prev = 0.5 * (pa + tri[:, (a + 2) % 3])
        region_tris += [np.stack([pa, m_next, centroid], axis=1), np.stack([pa, centroid, m_prev], axis=1)]
        region_dof += [cells[:, a], cells[:, a]]

    state_weights = sp.csr_matrix(
        (np.full(3 * nc, 1.0 / 3.0), (np.repeat(np.arange(nc), 3), cells.ravel())), shape=(nc, nv)
    )
    return GradientDiscretisation(
        name="mlp1",
        mesh=mesh,
        boundary=mesh.vertex_boundary.copy(),
        points=mesh.vertices.copy(),
        mass=mass,
        region_tris=np.concatenate(region_tris),
        region_dof=np.concatenate(region_dof),
        grad=grad,
        gc_measure=area.copy(),
        gc_center=centroid,
        gc_tris=tri,
        gc_tri_owner=np.arange(nc),
        state_weights=state_weights,
    )
