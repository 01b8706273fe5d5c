"""Computable quality indicators of a gradient discretisation.

All quantities live on the free dofs (the homogeneous space). ``K`` below
is the identity-tensor diffusion matrix restricted to those dofs, i.e. the
Gram matrix of the discrete gradient.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import linalg
from .gd import GradientDiscretisation, assemble_diffusion, gradient_quadrature, region_quadrature


def gradient_gram(gd: GradientDiscretisation) -> sp.csr_matrix:
    F = gd.free
    return linalg.as_csr(assemble_diffusion(gd)[F][:, F])


def _dual(gd, r):
    """sqrt(r^T K^-1 r) for a functional r on the free dofs."""
    if not np.any(r):
        return 0.0
    x = linalg.solve_spd(gradient_gram(gd), r)
    return float(np.sqrt(max(r @ x, 0.0)))


def dual_norm(gd: GradientDiscretisation, v) -> float:
    """sup of int v Pi_D phi over phi with ||grad_D phi|| = 1, for v = Pi_D of a dof vector.

    ``v`` is a full-length dof vector; only its free, massed entries matter.
    """
    v = np.asarray(v, dtype=float)
    p = (gd.mass * v)[gd.free]
    return _dual(gd, p)


def coercivity_constant(gd: GradientDiscretisation, tol=1e-8, maxiter=1000) -> float:
    """max ||Pi_D v|| / ||grad_D v||, by power iteration on K^-1 M."""
    F = gd.free
    M = gd.mass[F]
    lu = linalg.Factorization(gradient_gram(gd))
    x = np.ones(len(F))
    mu_old = None
    for _ in range(maxiter):
        y = lu.solve(M * x)
        mu = (x @ (M * y)) / (x @ (M * x))  # Rayleigh quotient of the symmetric form M K^-1 M
        if mu_old is not None and abs(mu - mu_old) <= tol * mu:
            return float(np.sqrt(mu))
        mu_old = mu
        x = y / np.abs(y).max()
    raise linalg.ConvergenceError(f"power iteration did not converge in {maxiter} iterations")


def _integrals(gd, fn, levels, rule, vector=False):
    """Integrals of ``fn`` over each Pi_D region dof (vector=False) or each gradient cell (vector=True)."""
    if vector:
        x, w, owner = gradient_quadrature(gd, levels, rule)
        vals = np.asarray(fn(x), dtype=float).reshape(-1, 2)
        out = np.zeros((gd.ngc, 2))
        np.add.at(out, owner, w[:, None] * vals)
        return out
    x, w, owner = region_quadrature(gd, levels, rule)
    vals = np.asarray(fn(x), dtype=float).reshape(-1)
    return np.bincount(owner, weights=w * vals, minlength=gd.ndof)


def consistency_minimizer(gd: GradientDiscretisation, phi, grad_phi, levels=2):
    """Minimiser over the free dofs of ||Pi w - phi||^2 + ||grad w - grad phi||^2 (full-length vector)."""
    F = gd.free
    b = _integrals(gd, phi, levels, "midpoint") + gd.grad.T @ _integrals(gd, grad_phi, levels, "midpoint", True).ravel()
    K = gradient_gram(gd) + sp.diags(gd.mass[F])
    w = np.zeros(gd.ndof)
    w[F] = linalg.solve_spd(K, b[F])
    return w


def consistency_defect(gd: GradientDiscretisation, phi, grad_phi, m=1.0, levels=2) -> float:
    """Upper bound of the consistency defect for ``phi``.

    The L^2 surrogate minimiser is evaluated in the original functional
    ||Pi w - phi||_{L^{1+mhat}} + ||grad w - grad phi||_{L^2}.
    """
    p = 1.0 + max(1.0, 1.0 / m)
    w = consistency_minimizer(gd, phi, grad_phi, levels)
    x, q, owner = region_quadrature(gd, levels)
    first = (q * np.abs(w[owner] - np.asarray(phi(x), dtype=float)) ** p).sum() ** (1 / p)
    xg, qg, og = gradient_quadrature(gd, levels)
    diff = gd.gradient(w)[og] - np.asarray(grad_phi(xg), dtype=float).reshape(-1, 2)
    second = np.sqrt((qg * (diff**2).sum(axis=1)).sum())
    return float(first + second)


def limit_conformity_defect(gd: GradientDiscretisation, phivec, div_phivec, levels=1) -> float:
    """max over v of |int grad_D v . phi + Pi_D v div phi| / ||grad_D v||, in dual-norm form.

    Integrals use the composite edge-midpoint rule (exact for quadratics) on
    ``4**levels`` sub-triangles.
    """
    r = gd.grad.T @ _integrals(gd, phivec, levels, "midpoint", True).ravel()
    r = r + _integrals(gd, div_phivec, levels, "midpoint")
    return _dual(gd, r[gd.free])


# probe catalog used by the CLI and the acceptance tests

def _bubble(x):
    return (0.25 - x[:, 0] ** 2) * (0.25 - x[:, 1] ** 2)


def _bubble_grad(x):
    return np.column_stack([-2 * x[:, 0] * (0.25 - x[:, 1] ** 2), -2 * x[:, 1] * (0.25 - x[:, 0] ** 2)])


def _shear(x):
    return np.column_stack([np.sin(np.pi * x[:, 1]), np.sin(np.pi * x[:, 0])])


def _shear_div(x):
    return np.zeros(len(x))


def _swirl(x):
    return np.column_stack([np.sin(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1]),
                            np.cos(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])])


def _swirl_div(x):
    return 2 * np.pi * np.cos(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1])


SCALAR_PROBES = {"bubble": (_bubble, _bubble_grad)}
VECTOR_PROBES = {"shear": (_shear, _shear_div), "swirl": (_swirl, _swirl_div)}
