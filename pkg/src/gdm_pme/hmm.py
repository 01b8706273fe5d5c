"""Hybrid Mimetic Mixed (SUSHI-type) gradient discretisation on polygonal meshes.

Unknowns are one value per cell followed by one value per face. The
gradient on the sub-cell D_{K,s} (triangle with apex x_K and base s) is the
consistent cell gradient plus a stabilisation along the face normal::

    grad_{K,s} v = G_K v + sqrt(2) / d_{K,s} * R_{K,s}(v) n_{K,s}
    G_K v        = 1/|K| sum_s |s| v_s n_{K,s}
    R_{K,s}(v)   = v_s - v_K - G_K v . (xbar_s - x_K)
"""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

from .gd import GradientDiscretisation
from .mesh import Mesh

STAB = math.sqrt(2.0)


def build_hmm(mesh: Mesh) -> GradientDiscretisation:
    nc, nf = mesh.n_cells, mesh.n_faces
    ndof = nc + nf
    V = mesh.vertices
    rows, cols, vals = [], [], []
    gc_measure, gc_center, gc_tris, sw_rows, sw_cols = [], [], [], [], []
    gc = 0
    for k in range(nc):
        fk = mesh.cell_faces[k]
        nk = len(fk)
        normals = mesh.outward_normals(k)
        meas = mesh.face_measure[fk]
        xk = mesh.cell_center[k]
        dist = mesh.face_center[fk] - xk
        d = (dist * normals).sum(axis=1)
        if np.any(d <= 0):
            raise ValueError(f"cell {k} is not star-shaped with respect to its centroid")
        area = mesh.cell_area[k]
        # consistent gradient, columns = local faces
        Gk = (meas[:, None] * normals).T / area  # (2, nk)
        # residuals on local dofs [cell, faces]
        R = np.zeros((nk, nk + 1))
        R[:, 0] = -1.0
        R[:, 1:] = np.eye(nk) - dist @ Gk
        local_dofs = np.concatenate([[k], nc + fk])
        cyc = mesh.cell_vertices[k]
        for j in range(nk):
            Gj = np.zeros((2, nk + 1))
            Gj[:, 1:] = Gk
            Gj += (STAB / d[j]) * np.outer(normals[j], R[j])
            for comp in range(2):
                rows.append(np.full(nk + 1, 2 * gc + comp))
                cols.append(local_dofs)
                vals.append(Gj[comp])
            tri = np.array([xk, V[cyc[j]], V[cyc[(j + 1) % nk]]])
            gc_tris.append(tri)
            gc_measure.append(0.5 * meas[j] * d[j])
            gc_center.append(tri.mean(axis=0))
            sw_rows.append(gc)
            sw_cols.append(k)
            gc += 1
    grad = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(2 * gc, ndof)
    )
    grad.eliminate_zeros()
    gc_tris = np.array(gc_tris)
    sw_cols = np.array(sw_cols)
    boundary = np.concatenate([np.zeros(nc, dtype=bool), mesh.face_boundary])
    mass = np.concatenate([mesh.cell_area, np.zeros(nf)])
    return GradientDiscretisation(
        name="hmm",
        mesh=mesh,
        boundary=boundary,
        points=np.vstack([mesh.cell_center, mesh.face_center]),
        mass=mass,
        region_tris=gc_tris,
        region_dof=sw_cols,
        grad=grad,
        gc_measure=np.array(gc_measure),
        gc_center=np.array(gc_center),
        gc_tris=gc_tris,
        gc_tri_owner=np.arange(gc),
        state_weights=sp.csr_matrix((np.ones(gc), (np.array(sw_rows), sw_cols)), shape=(gc, ndof)),
    )
