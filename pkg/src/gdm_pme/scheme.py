"""Implicit Euler gradient scheme for d_t u - div(Lambda(x, u) grad beta(u)) = f.

Each step solves, on the free dofs,

    M (u^{n+1} - u^n) / dt + A(u^{n+1}) beta(u^{n+1}) = M f^{n+1}

with M the lumped mass, A(w) the diffusion matrix with Lambda evaluated at
Pi_D w, and Dirichlet dofs pinned to prescribed values of beta(u). Newton
measures the residual row by row divided by the region measure, i.e. on
(u^{n+1} - u^n) / dt + M^-1 A beta(u^{n+1}) - f.

Two sets of Newton unknowns are available:

* ``slow`` (default for m >= 1): u on dofs carrying mass, beta(u) on dofs
  without mass (HMM faces), so the Jacobian stays nonsingular where u = 0;
* ``fast`` (default for m < 1): v = beta(u) everywhere, u = beta_inv(v).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from . import linalg
from .gd import GradientDiscretisation, assemble_diffusion, interpolate, tensor_field
from .nonlinearity import PowerLaw


class NewtonError(RuntimeError):
    def __init__(self, msg, step=None, residual=None):
        super().__init__(msg)
        self.step = step
        self.residual = residual


class EnergyInequalityError(AssertionError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or len(t) < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("time grid must start at 0 and be strictly increasing")
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, T, n_steps):
        t = np.linspace(0.0, T, n_steps + 1)
        t[-1] = T
        return cls(t)

    @classmethod
    def from_step(cls, T, dt):
        """Uniform grid with the largest step not exceeding ``dt`` that ends exactly at ``T``."""
        return cls.uniform(T, max(1, math.ceil(T / dt - 1e-9)))

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def dt_max(self) -> float:
        return float(self.steps.max())


@dataclass
class ProblemSpec:
    """Data of the porous medium problem.

    ``u0(x)``, ``f(t, x)`` and ``dirichlet(t, x)`` take points of shape (n, 2);
    ``dirichlet`` returns the prescribed values of beta(u). ``lam(x, s)``
    returns (n, 2, 2) tensors; ``None`` means the identity. Set
    ``lam_depends_on_state=False`` when ``lam`` ignores ``s`` so the diffusion
    matrix is assembled once.
    """

    m: float
    u0: Callable
    grid: TimeGrid
    f: Optional[Callable] = None
    dirichlet: Optional[Callable] = None
    lam: Optional[Callable] = None
    lam_bounds: tuple = (1.0, 1.0)
    lam_depends_on_state: bool = True
    law: PowerLaw = field(init=False, repr=False)

    def __post_init__(self):
        self.law = PowerLaw(self.m)
        lo, hi = self.lam_bounds
        if not 0 < lo <= hi:
            raise ValueError("need 0 < lambda_min <= lambda_max")
        if self.lam is not None:
            self.check_ellipticity()

    def check_ellipticity(self, n=256, seed=0):
        rng = np.random.default_rng(seed)
        x = rng.uniform(-0.5, 0.5, size=(n, 2))
        s = rng.uniform(-2.0, 2.0, size=n)
        L = np.asarray(self.lam(x, s), dtype=float)
        eig = np.linalg.eigvalsh(0.5 * (L + L.transpose(0, 2, 1)))
        lo, hi = self.lam_bounds
        if eig.min() < lo * (1 - 1e-12) or eig.max() > hi * (1 + 1e-12):
            raise ValueError(
                f"sampled eigenvalues [{eig.min():g}, {eig.max():g}] outside bounds [{lo:g}, {hi:g}]"
            )


@dataclass
class DiscreteTrajectory:
    times: np.ndarray
    states: dict  # step index -> full dof vector u
    newton_iterations: list
    residuals: list
    mode: str
    zeta_integral: list  # int zeta(Pi_D u^(k)), k = 0..N
    diffusion_terms: list  # dt <A beta(u), beta(u)> for each step
    source_terms: list  # dt <M f, beta(u)> for each step
    boundary_max: float = 0.0  # largest |Dirichlet value| over all steps

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    @property
    def final(self) -> np.ndarray:
        return self.states[self.n_steps]

    @property
    def homogeneous(self) -> bool:
        return self.boundary_max == 0.0


def newton_solve(residual, jacobian, x0, tol=1e-8, max_iter=50, max_halvings=20, min_iter=0):
    """Damped Newton iteration in the sup norm.

    Returns ``(x, iterations)`` with ``|residual(x)|_inf <= tol`` after at
    least ``min_iter`` updates (none if the residual is exactly zero or no
    update improves an already converged state). A step is halved until it
    reduces the residual; failure to do so, or exceeding ``max_iter``, raises
    :class:`NewtonError`.
    """
    x = np.array(x0, dtype=float)
    r = np.atleast_1d(residual(x))
    rn = np.abs(r).max(initial=0.0)
    it = 0
    while rn > tol or (it < min_iter and rn > 0):
        if it >= max_iter:
            raise NewtonError(f"Newton did not converge in {max_iter} iterations", residual=rn)
        J = jacobian(x)
        try:
            if sp.issparse(J):
                dx = linalg.solve(J, -r)
            else:
                J = np.atleast_2d(J)
                dx = np.linalg.solve(J, -r)
        except (linalg.SingularMatrixError, np.linalg.LinAlgError) as exc:
            raise NewtonError(f"singular Jacobian: {exc}", residual=rn) from exc
        lam = 1.0
        for _ in range(max_halvings + 1):
            xt = x + lam * dx
            rt = np.atleast_1d(residual(xt))
            rtn = np.abs(rt).max(initial=0.0)
            if rtn < rn:
                break
            lam *= 0.5
        else:
            if rn <= tol:  # forced update of a converged state that cannot improve further
                return x, it
            raise NewtonError("damped Newton step failed to reduce the residual", residual=rn)
        x, r, rn = xt, rt, rtn
        it += 1
    return x, it


def _resolve_mode(mode, m):
    if mode == "auto":
        return "fast" if m < 1 else "slow"
    if mode not in ("slow", "fast"):
        raise ValueError(f"unknown mode {mode!r}")
    return mode


class _Stepper:
    """Residual and Jacobian of one implicit step, with cached matrices."""

    def __init__(self, problem: ProblemSpec, gd: GradientDiscretisation, mode: str, guard=1e-12, predictor=0.1):
        self.p, self.gd, self.law = problem, gd, problem.law
        self.predictor = predictor
        self.mode = _resolve_mode(mode, problem.m)
        if self.mode == "fast" and problem.m > 1:
            raise ValueError("the fast formulation needs m <= 1")
        self.guard = guard
        self.F, self.B = gd.free, gd.fixed
        self.MF = gd.mass[self.F]
        self.mf = self.MF > 0
        # rows are divided by the region measure (massless rows by the mean one), so the
        # residual reads (u - u_prev) / dt + M^-1 A beta(u) - f and the tolerance does not
        # shrink with the mesh
        mean_mass = self.MF[self.mf].mean() if self.mf.any() else 1.0
        self.row_scale = 1.0 / np.where(self.mf, self.MF, mean_mass)
        self._A_const = None
        if problem.lam is None or not problem.lam_depends_on_state:
            self._A_const = self._assemble(np.zeros(gd.ndof))

    def _assemble(self, u):
        gd = self.gd
        lam = None if self.p.lam is None else tensor_field(gd, self.p.lam, u)
        A = assemble_diffusion(gd, lam)
        AFF = sp.csc_matrix(A[self.F][:, self.F])
        AFF.sort_indices()
        AFB = A[self.F][:, self.B].tocsr()
        # column index of each stored entry, to scale columns in place
        col = np.repeat(np.arange(AFF.shape[1]), np.diff(AFF.indptr))
        diag_pos = np.empty(AFF.shape[0], dtype=np.int64)
        for j in range(AFF.shape[1]):
            lo, hi = AFF.indptr[j], AFF.indptr[j + 1]
            k = np.searchsorted(AFF.indices[lo:hi], j)
            if k >= hi - lo or AFF.indices[lo + k] != j:
                raise ValueError("diffusion matrix lacks a diagonal entry")
            diag_pos[j] = lo + k
        return A, AFF, AFB, col, diag_pos

    def matrices(self, u_full):
        if self._A_const is not None:
            return self._A_const
        return self._assemble(u_full)

    # unknown <-> (u, beta(u)) on the free dofs
    def decode(self, x):
        law = self.law
        if self.mode == "fast":
            return law.beta_inv(x), x
        u = np.where(self.mf, x, law.beta_inv(x))
        b = np.where(self.mf, law.beta(x), x)
        return u, b

    def encode(self, u_free):
        if self.mode == "fast":
            return self.law.beta(u_free)
        return np.where(self.mf, u_free, self.law.beta(u_free))

    def derivatives(self, x, floor=None):
        """(du/dx, dbeta/dx) on the free dofs; du only matters where mass > 0.

        ``floor`` bounds |u| from below inside beta' (slow mode only).
        """
        law = self.law
        if self.mode == "fast":
            return law.dbeta_inv(x), np.ones_like(x)
        if floor is None:
            floor = self.guard if self.p.m < 1 else 0.0
        db = np.where(self.mf, law.dbeta(x, floor=floor), 1.0)
        return np.ones_like(x), db

    def full_u(self, u_free, b_fixed):
        u = np.empty(self.gd.ndof)
        u[self.F] = u_free
        u[self.B] = self.law.beta_inv(b_fixed)
        return u

    def step(self, u_prev, t_new, dt, f_vals, b_fixed, tol, max_iter):
        """Advance one step; returns (u_new_full, iterations, final residual, beta_full, A)."""
        F = self.F
        uF_prev = u_prev[F]
        MFf = self.MF * f_vals[F] if f_vals is not None else 0.0
        cache = {}

        def mats(x):
            key = x.tobytes() if self._A_const is None else None
            if key not in cache:
                cache.clear()
                uF, _ = self.decode(x)
                cache[key] = self.matrices(self.full_u(uF, b_fixed))
            return cache[key]

        def residual(x):
            uF, bF = self.decode(x)
            _, AFF, AFB, _, _ = mats(x)
            r = self.MF * (uF - uF_prev) / dt + AFF @ bF - MFf
            if len(b_fixed):
                r += AFB @ b_fixed
            return self.row_scale * r

        def jacobian(x, floor=None):
            _, AFF, _, col, diag_pos = mats(x)
            du, db = self.derivatives(x, floor)
            J = AFF.copy()
            J.data = AFF.data * db[col]
            J.data[diag_pos] += self.MF * du / dt
            J.data *= self.row_scale[J.indices]
            return J

        x0 = self.encode(uF_prev)
        if self.predictor > 0 and self.mode == "slow" and self.p.m > 1 and np.any(self.mf):
            # beta'(0) = 0 lets a Newton update spread the support by one layer of dofs only;
            # one solve with beta' floored at a fraction of max|u| moves the guess across
            # the new support, and Newton proper starts from there
            floor = self.predictor * np.abs(uF_prev[self.mf]).max(initial=0.0)
            if floor > 0:
                try:
                    x0 = x0 + linalg.solve(jacobian(x0, floor), -residual(x0))
                except linalg.LinearSolverError:
                    pass
        # at least one update, so that a tiny increment is never skipped
        x, it = newton_solve(residual, jacobian, x0, tol=tol, max_iter=max_iter, min_iter=1)
        res = float(np.abs(residual(x)).max(initial=0.0))
        uF, bF = self.decode(x)
        u_new = self.full_u(uF, b_fixed)
        b_full = np.empty(self.gd.ndof)
        b_full[F] = bF
        b_full[self.B] = b_fixed
        A = mats(x)[0]
        return u_new, it, res, b_full, A


def _boundary_values(problem, gd, t):
    B = gd.fixed
    if problem.dirichlet is None or len(B) == 0:
        return np.zeros(len(B))
    return np.asarray(problem.dirichlet(t, gd.points[B]), dtype=float).reshape(len(B))


def _source(problem, gd, t_mid):
    if problem.f is None:
        return None
    return np.asarray(problem.f(t_mid, gd.points), dtype=float).reshape(gd.ndof)


def run(problem: ProblemSpec, gd: GradientDiscretisation, mode="auto", tol=1e-8, max_iter=50,
        keep=None, callback=None, predictor=0.1) -> DiscreteTrajectory:
    """Solve the gradient scheme over ``problem.grid``.

    ``keep`` is an iterable of step indices whose states are stored (all
    steps if ``None``; the first and last are always stored). ``callback(n,
    t, u)`` is called after every step. ``predictor`` is the relative floor
    of the support-spreading initial guess used for m > 1 (0 disables it);
    it changes the Newton starting point only, not the solution, and its
    linear solve is not counted in ``newton_iterations``.
    """
    stepper = _Stepper(problem, gd, mode, predictor=predictor)
    law = problem.law
    times = problem.grid.times
    N = len(times) - 1
    keep = None if keep is None else set(keep) | {0, N}

    u = interpolate(gd, problem.u0)
    b0 = _boundary_values(problem, gd, 0.0)
    states = {0: u.copy()}
    zeta_int = [float(gd.mass @ law.zeta(u))]
    diff_terms, src_terms, iters, resids = [], [], [], []
    bmax = float(np.abs(b0).max(initial=0.0))
    for n in range(N):
        t_new = times[n + 1]
        dt = t_new - times[n]
        b_fixed = _boundary_values(problem, gd, t_new)
        bmax = max(bmax, float(np.abs(b_fixed).max(initial=0.0)))
        f_vals = _source(problem, gd, 0.5 * (times[n] + t_new))
        try:
            u, it, res, bvec, A = stepper.step(u, t_new, dt, f_vals, b_fixed, tol, max_iter)
        except NewtonError as exc:
            raise NewtonError(f"step {n + 1} (t={t_new:g}): {exc}", step=n + 1, residual=exc.residual) from exc
        iters.append(it)
        resids.append(res)
        zeta_int.append(float(gd.mass @ law.zeta(u)))
        diff_terms.append(float(dt * bvec @ (A @ bvec)))
        src_terms.append(0.0 if f_vals is None else float(dt * (gd.mass * f_vals) @ bvec))
        if keep is None or (n + 1) in keep:
            states[n + 1] = u.copy()
        if callback is not None:
            callback(n + 1, t_new, u)
    return DiscreteTrajectory(
        times=times.copy(),
        states=states,
        newton_iterations=iters,
        residuals=resids,
        mode=stepper.mode,
        zeta_integral=zeta_int,
        diffusion_terms=diff_terms,
        source_terms=src_terms,
        boundary_max=bmax,
    )


def step(u_prev, problem: ProblemSpec, gd: GradientDiscretisation, dt, t_new=None, mode="auto",
         tol=1e-8, max_iter=50, predictor=0.1):
    """One implicit step from the full dof vector ``u_prev``; returns ``(u_new, iterations)``."""
    t_new = dt if t_new is None else t_new
    stepper = _Stepper(problem, gd, mode, predictor=predictor)
    b_fixed = _boundary_values(problem, gd, t_new)
    u, it, _, _, _ = stepper.step(np.asarray(u_prev, dtype=float), t_new, dt,
                                  _source(problem, gd, t_new - 0.5 * dt), b_fixed, tol, max_iter)
    return u, it


def step_fast(u_prev, problem, gd, dt, t_new=None, tol=1e-8, max_iter=50):
    """One step solved on v = beta(u); returns ``(u_new, iterations)``."""
    if problem.m >= 1:
        raise ValueError("step_fast is meant for m < 1")
    return step(u_prev, problem, gd, dt, t_new=t_new, mode="fast", tol=tol, max_iter=max_iter)


@dataclass(frozen=True)
class EnergyRecord:
    step: int
    zeta_integral: float
    diffusion: float  # accumulated
    source: float  # accumulated
    slack: float  # rhs - lhs, >= -eps when the inequality holds


def energy_ledger(traj: DiscreteTrajectory, gd: GradientDiscretisation, problem=None, tol=1e-8,
                  check=True):
    """Accumulated terms of the discrete energy inequality

        int zeta(Pi u^k) + sum_{n<k} dt <A beta, beta> <= int zeta(Pi u^0) + sum_{n<k} dt <f, Pi beta>

    for every k. With ``check`` the inequality is enforced up to
    ``10 * tol * ndof``; it only holds for homogeneous Dirichlet data.
    """
    if check and not traj.homogeneous:
        raise ValueError("the energy inequality is only available for homogeneous Dirichlet data")
    eps = 10.0 * tol * gd.ndof
    z0 = traj.zeta_integral[0]
    records = [EnergyRecord(0, z0, 0.0, 0.0, 0.0)]
    D = S = 0.0
    for k in range(1, traj.n_steps + 1):
        D += traj.diffusion_terms[k - 1]
        S += traj.source_terms[k - 1]
        zk = traj.zeta_integral[k]
        slack = (z0 + S) - (zk + D)
        records.append(EnergyRecord(k, zk, D, S, slack))
        if check and slack < -eps:
            raise EnergyInequalityError(f"energy inequality violated at step {k} by {-slack:.3e}")
    return records
