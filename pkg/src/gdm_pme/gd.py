"""Gradient discretisations with piecewise constant reconstruction.

A :class:`GradientDiscretisation` bundles

* a dof space (all dofs, with a boolean mask of Dirichlet dofs; the free
  dofs span the homogeneous space),
* the function reconstruction: dof ``i`` is the indicator of a region whose
  measure is ``mass[i]`` (zero for dofs without a region) and whose geometry
  is stored as triangles for quadrature,
* the gradient reconstruction: a sparse matrix mapping a dof vector to one
  constant vector per "gradient cell",
* the interpolation nodes used by :func:`interpolate`.

The backends live in :mod:`gdm_pme.mlp1` and :mod:`gdm_pme.hmm`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh


@dataclass(eq=False)
class GradientDiscretisation:
    name: str
    mesh: Mesh
    boundary: np.ndarray  # (ndof,) bool, Dirichlet dofs
    points: np.ndarray  # (ndof, 2) interpolation nodes
    mass: np.ndarray  # (ndof,) region measures
    region_tris: np.ndarray  # (nrt, 3, 2)
    region_dof: np.ndarray  # (nrt,)
    grad: sp.csr_matrix  # (2 * ngc, ndof), rows 2c and 2c+1 hold the gradient on cell c
    gc_measure: np.ndarray  # (ngc,)
    gc_center: np.ndarray  # (ngc, 2)
    gc_tris: np.ndarray  # (ngt, 3, 2)
    gc_tri_owner: np.ndarray  # (ngt,)
    state_weights: sp.csr_matrix  # (ngc, ndof), share of gradient cell c covered by region i

    @property
    def ndof(self) -> int:
        return len(self.mass)

    @property
    def ngc(self) -> int:
        return len(self.gc_measure)

    @property
    def h(self) -> float:
        return self.mesh.h

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    @property
    def fixed(self) -> np.ndarray:
        return np.flatnonzero(self.boundary)

    @property
    def massed(self) -> np.ndarray:
        return np.flatnonzero(self.mass > 0)

    def gradient(self, v) -> np.ndarray:
        """Cellwise constant gradients, shape (ngc, 2)."""
        return (self.grad @ np.asarray(v, dtype=float)).reshape(-1, 2)

    def extend(self, v_free, boundary_values=0.0) -> np.ndarray:
        """Full dof vector from its free part and the Dirichlet values."""
        v = np.zeros(self.ndof)
        v[self.boundary] = boundary_values
        v[~self.boundary] = v_free
        return v


def _check_len(gd, v):
    v = np.asarray(v, dtype=float)
    if v.shape != (gd.ndof,):
        raise ValueError(f"expected a vector of length {gd.ndof}, got shape {v.shape}")
    return v


# -- quadrature -----------------------------------------------------------

@lru_cache(maxsize=None)
def _reference_rule(levels: int, rule: str):
    """Barycentric points (q, 3) and weights (q,) on the reference triangle, weights sum to 1."""
    N = 2**levels
    subs = []
    for j in range(N):
        for i in range(N - j):
            subs.append([(i, j), (i + 1, j), (i, j + 1)])
            if i + j < N - 1:
                subs.append([(i + 1, j), (i + 1, j + 1), (i, j + 1)])
    subs = np.array(subs, dtype=float) / N  # (ns, 3, 2)
    if rule == "centroid":
        lam = np.array([[1 / 3, 1 / 3, 1 / 3]])
        w = np.array([1.0])
    elif rule == "midpoint":
        lam = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
        w = np.full(3, 1 / 3)
    else:
        raise ValueError(f"unknown rule {rule!r}")
    pts = np.einsum("qa,sad->sqd", lam, subs).reshape(-1, 2)
    bary = np.column_stack([1.0 - pts.sum(axis=1), pts])
    weights = np.tile(w, len(subs)) / len(subs)
    return bary, weights


def triangle_quadrature(tris, levels=2, rule="centroid"):
    """Points (nt, q, 2) and weights (nt, q) of a composite rule on each triangle."""
    tris = np.asarray(tris, dtype=float)
    bary, w = _reference_rule(levels, rule)
    pts = np.einsum("qa,tad->tqd", bary, tris)
    e1, e2 = tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    return pts, area[:, None] * w[None, :]


def _eval(fn, pts):
    shape = pts.shape[:-1]
    return np.asarray(fn(pts.reshape(-1, 2)), dtype=float).reshape(shape + (-1,)).squeeze(-1)


def _eval_vec(fn, pts):
    shape = pts.shape[:-1]
    return np.asarray(fn(pts.reshape(-1, 2)), dtype=float).reshape(shape + (2,))


# -- generic operations ---------------------------------------------------

def reconstruct_function(gd: GradientDiscretisation, v):
    """Piecewise constant field ``Pi_D v`` as a callable of points (n, 2).

    Points outside every region evaluate to 0. Membership is resolved with
    barycentric coordinates of the region triangles, so this is meant for
    tests and plotting rather than inner loops.
    """
    v = _check_len(gd, v)
    tris, owner = gd.region_tris, gd.region_dof
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])

    def field(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(len(x))
        for p, xp in enumerate(x):
            l1 = ((xp[0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (xp[1] - a[:, 1]) * (c[:, 0] - a[:, 0])) / det
            l2 = ((b[:, 0] - a[:, 0]) * (xp[1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (xp[0] - a[:, 0])) / det
            hit = np.flatnonzero((l1 >= -1e-12) & (l2 >= -1e-12) & (l1 + l2 <= 1 + 1e-12))
            if len(hit):
                out[p] = v[owner[hit[0]]]
        return out

    return field


def apply_nonlinearity(v, g):
    """Componentwise ``g(v)``; ``g`` must vanish at 0."""
    v = np.asarray(v, dtype=float)
    if g(np.zeros(1))[0] != 0.0:
        raise ValueError("g(0) must be 0")
    return np.asarray(g(v), dtype=float)


def assemble_lumped_mass(gd: GradientDiscretisation) -> sp.csr_matrix:
    return sp.diags(gd.mass, format="csr")


def identity_tensor(x, s):
    n = len(x)
    out = np.zeros((n, 2, 2))
    out[:, 0, 0] = out[:, 1, 1] = 1.0
    return out


def tensor_field(gd: GradientDiscretisation, lam, state=None) -> np.ndarray:
    """Per-gradient-cell tensor ``Lambda(x, Pi_D state)`` averaged over the regions meeting the cell.

    ``lam(x, s)`` takes points (n, 2) and states (n,) and returns (n, 2, 2).
    """
    if lam is None:
        return np.broadcast_to(np.eye(2), (gd.ngc, 2, 2))
    W = gd.state_weights.tocoo()
    s = np.zeros(gd.ndof) if state is None else np.asarray(state, dtype=float)
    vals = np.asarray(lam(gd.gc_center[W.row], s[W.col]), dtype=float)
    out = np.zeros((gd.ngc, 2, 2))
    np.add.at(out, W.row, W.data[:, None, None] * vals)
    return out


def assemble_diffusion(gd: GradientDiscretisation, lam_cells=None, check_spd=True) -> sp.csr_matrix:
    """Matrix of ``(v, w) -> sum_c |c| (Lambda_c grad_c v) . grad_c w``.

    ``lam_cells`` is an (ngc, 2, 2) array of tensors, identity if omitted.
    """
    G = gd.grad
    if lam_cells is None:
        wts = np.repeat(gd.gc_measure, 2)
        A = G.T @ sp.diags(wts) @ G
    else:
        L = np.asarray(lam_cells, dtype=float)
        if L.shape != (gd.ngc, 2, 2):
            raise ValueError(f"expected tensors of shape {(gd.ngc, 2, 2)}, got {L.shape}")
        if check_spd:
            sym = 0.5 * (L + L.transpose(0, 2, 1))
            det = sym[:, 0, 0] * sym[:, 1, 1] - sym[:, 0, 1] ** 2
            if np.any(sym[:, 0, 0] <= 0) or np.any(det <= 0):
                raise ValueError("diffusion tensor is not positive definite on every cell")
        B = L * gd.gc_measure[:, None, None]
        cols = np.repeat(np.arange(2 * gd.ngc).reshape(-1, 2), 2, axis=0).reshape(-1, 2, 2)
        rows = cols.transpose(0, 2, 1)
        W = sp.csr_matrix((B.ravel(), (rows.ravel(), cols.ravel())), shape=(2 * gd.ngc, 2 * gd.ngc))
        A = G.T @ W @ G
    A = sp.csr_matrix(A)
    A.sum_duplicates()
    A.sort_indices()
    return A


def interpolate(gd: GradientDiscretisation, psi) -> np.ndarray:
    """Nodal interpolant: ``psi`` evaluated at the interpolation nodes of every dof."""
    return np.asarray(psi(gd.points), dtype=float).reshape(gd.ndof)


# -- integrals on reconstructions ----------------------------------------

def region_quadrature(gd: GradientDiscretisation, levels=2, rule="centroid"):
    """Quadrature points (nq, 2), weights (nq,) and owning dof (nq,) over the Pi_D regions."""
    pts, w = triangle_quadrature(gd.region_tris, levels, rule)
    owner = np.repeat(gd.region_dof, pts.shape[1])
    return pts.reshape(-1, 2), w.ravel(), owner


def gradient_quadrature(gd: GradientDiscretisation, levels=2, rule="centroid"):
    """Quadrature points, weights and owning gradient cell over the gradient cells."""
    pts, w = triangle_quadrature(gd.gc_tris, levels, rule)
    owner = np.repeat(gd.gc_tri_owner, pts.shape[1])
    return pts.reshape(-1, 2), w.ravel(), owner


def lp_distance(gd: GradientDiscretisation, v, exact, p=2.0, levels=2):
    """``(||exact - Pi_D v||_Lp, ||exact||_Lp)`` by composite quadrature on the regions.

    Parts of the domain not covered by any region (if any) are ignored.
    """
    v = _check_len(gd, v)
    x, w, owner = region_quadrature(gd, levels)
    ex = np.asarray(exact(x), dtype=float)
    err = (w * np.abs(ex - v[owner]) ** p).sum() ** (1 / p)
    ref = (w * np.abs(ex) ** p).sum() ** (1 / p)
    return err, ref


def nodal_lp_distance(gd: GradientDiscretisation, v, exact, p=2.0):
    """``(||Pi_D I_D exact - Pi_D v||_Lp, ||Pi_D I_D exact||_Lp)``: the exact field sampled at the nodes."""
    v = _check_len(gd, v)
    idx = gd.massed
    w = gd.mass[idx]
    ex = np.asarray(exact(gd.points[idx]), dtype=float)
    err = (w * np.abs(ex - v[idx]) ** p).sum() ** (1 / p)
    ref = (w * np.abs(ex) ** p).sum() ** (1 / p)
    return err, ref


def l2_norm(gd: GradientDiscretisation, v) -> float:
    v = _check_len(gd, v)
    return float(np.sqrt(gd.mass @ v**2))


def grad_l2_norm(gd: GradientDiscretisation, v) -> float:
    g = gd.gradient(_check_len(gd, v))
    return float(np.sqrt((gd.gc_measure * (g**2).sum(axis=1)).sum()))
