"""Sparse linear solvers used by assembly, Newton steps and diagnostics.

Matrices are ``scipy.sparse`` CSR arrays. :func:`solve` is a sparse LU with
up to two steps of iterative refinement and an explicit residual check;
:func:`solve_spd` is a Jacobi-preconditioned conjugate gradient.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class LinearSolverError(RuntimeError):
    pass


class SingularMatrixError(LinearSolverError):
    pass


class ConvergenceError(LinearSolverError):
    pass


def as_csr(A) -> sp.csr_matrix:
    """CSR copy with sorted, duplicate-free column indices."""
    A = sp.csr_matrix(A, dtype=float)
    A.sum_duplicates()
    A.sort_indices()
    return A


def _check_residual(A, x, b, rtol):
    r = b - A @ x
    return np.abs(r).max(initial=0.0) <= rtol * max(1.0, np.abs(b).max(initial=0.0))


class Factorization:
    """Reusable LU factorisation of a square sparse matrix."""

    def __init__(self, A, permc_spec="MMD_AT_PLUS_A"):
        A = sp.csc_matrix(A, dtype=float)
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"matrix must be square, got {A.shape}")
        self.A = A
        try:
            # minimum degree on A^T + A suits the structurally symmetric matrices assembled here
            self._lu = spla.splu(A, permc_spec=permc_spec)
        except RuntimeError as exc:  # SuperLU reports exact singularity this way
            raise SingularMatrixError(str(exc)) from exc

    def solve(self, b, rtol=1e-12, refine=2):
        b = np.asarray(b, dtype=float)
        x = self._lu.solve(b)
        for _ in range(refine):
            if _check_residual(self.A, x, b, rtol):
                break
            x = x + self._lu.solve(b - self.A @ x)
        if not np.all(np.isfinite(x)):
            raise SingularMatrixError("non-finite solution")
        if not _check_residual(self.A, x, b, rtol):
            r = np.abs(b - self.A @ x).max()
            raise SingularMatrixError(f"residual {r:.3e} above tolerance; matrix is numerically singular")
        return x


def solve(A, b, rtol=1e-12):
    """Solve ``A x = b`` for a square nonsingular (possibly nonsymmetric) ``A``.

    The returned ``x`` satisfies ``|A x - b|_inf <= rtol * max(1, |b|_inf)``.
    """
    b = np.asarray(b, dtype=float)
    if b.size == 0:
        return b.copy()
    return Factorization(A).solve(b, rtol=rtol)


def solve_spd(A, b, rtol=1e-12, maxiter=None, x0=None):
    """Conjugate gradient for symmetric positive definite ``A``.

    Stops when ``|r|_2 <= rtol |b|_2``. A non-positive curvature ``p^T A p``
    means ``A`` is not SPD and raises :class:`LinearSolverError`.
    """
    A = as_csr(A)
    b = np.asarray(b, dtype=float)
    n = b.size
    if A.shape != (n, n):
        raise ValueError("dimension mismatch")
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    d = A.diagonal()
    if np.any(d <= 0):
        raise LinearSolverError("non-positive diagonal entry: matrix is not SPD")
    dinv = 1.0 / d
    maxiter = maxiter or 10 * n + 100
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for _ in range(maxiter):
        if np.linalg.norm(r) <= rtol * bnorm:
            return x
        Ap = A @ p
        curv = p @ Ap
        if curv <= 0:
            raise LinearSolverError("CG breakdown: non-positive curvature, matrix is not SPD")
        alpha = rz / curv
        x += alpha * p
        r -= alpha * Ap
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    if np.linalg.norm(r) <= rtol * bnorm:
        return x
    raise ConvergenceError(f"CG did not reach rtol={rtol:g} in {maxiter} iterations")
