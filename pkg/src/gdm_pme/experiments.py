"""Barenblatt benchmark runs shared by the CLI, scripts and acceptance tests."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .barenblatt import BarenblattParams, barenblatt, error_beta, error_u, front_distance, front_radius, rate
from .hmm import build_hmm
from .mesh import Mesh, parse_mesh_spec
from .mlp1 import build_mlp1
from .nonlinearity import PowerLaw
from .scheme import ProblemSpec, TimeGrid, run

SLOW_PRESET = {"t0": 0.1, "C_B": 0.005}
FAST_PRESET = {"t0": 0.5, "C_B": 0.1}

BUILDERS = {"mlp1": build_mlp1, "hmm": build_hmm}


def preset(m):
    return dict(FAST_PRESET if m < 1 else SLOW_PRESET)


def build(scheme: str, mesh):
    if isinstance(mesh, str):
        mesh = parse_mesh_spec(mesh)
    try:
        return BUILDERS[scheme](mesh)
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {sorted(BUILDERS)}") from None


def scalar_tensor(c):
    """Lambda = c Id as a tensor callable."""
    if c <= 0:
        raise ValueError("diffusivity must be positive")

    def lam(x, s):
        out = np.zeros((len(x), 2, 2))
        out[:, 0, 0] = out[:, 1, 1] = c
        return out

    return lam


def barenblatt_problem(m, grid: TimeGrid, C_B=None, t0=None, diffusivity=1.0):
    """Problem whose exact solution is ``u_B(t0 + c t)`` for ``Lambda = c Id``.

    Dirichlet values follow beta of the exact solution on the boundary.
    Returns ``(problem, params, t0, exact)`` with ``exact(t, x)`` in elapsed time.
    """
    pre = preset(m)
    C_B = pre["C_B"] if C_B is None else C_B
    t0 = pre["t0"] if t0 is None else t0
    p = BarenblattParams(m, C_B)
    c = float(diffusivity)
    law = PowerLaw(m)

    def exact(t, x):
        return barenblatt(t0 + c * t, x, p)

    def dirichlet(t, x):
        return law.beta(exact(t, x))

    lam = None if c == 1.0 else scalar_tensor(c)
    prob = ProblemSpec(m=m, u0=lambda x: exact(0.0, x), grid=grid, dirichlet=dirichlet, lam=lam,
                       lam_bounds=(c, c), lam_depends_on_state=False)
    return prob, p, t0, exact


@dataclass
class RunResult:
    scheme: str
    m: float
    h: float
    dt: float
    ndof: int
    err_u: float
    err_beta: float
    newton_avg: float
    newton_max: int
    wall: float
    u_final: np.ndarray = field(repr=False)
    gd: object = field(repr=False)
    params: BarenblattParams = field(repr=False)
    t_final: float = 0.0
    trajectory: object = field(default=None, repr=False)
    problem: object = field(default=None, repr=False)


def run_barenblatt(scheme, mesh, m, dt, T=1.0, C_B=None, t0=None, quadrature="nodal", tol=1e-8,
                   diffusivity=1.0, callback=None) -> RunResult:
    """One Barenblatt run; ``dt="h2"`` picks ``dt = h^2``."""
    gd = build(scheme, mesh)
    if dt == "h2":
        dt = gd.h**2
    grid = TimeGrid.from_step(T, dt)
    prob, p, t0, ex = barenblatt_problem(m, grid, C_B=C_B, t0=t0, diffusivity=diffusivity)
    start = time.perf_counter()
    traj = run(prob, gd, keep=(), tol=tol, callback=callback)
    wall = time.perf_counter() - start
    tf = t0 + diffusivity * T
    exact = lambda x: ex(T, x)  # noqa: E731
    u = traj.final
    its = np.array(traj.newton_iterations)
    return RunResult(
        scheme=gd.name, m=m, h=gd.h, dt=grid.dt_max, ndof=len(gd.free),
        err_u=error_u(gd, u, exact, m, quadrature), err_beta=error_beta(gd, u, exact, m, quadrature),
        newton_avg=float(its.mean()), newton_max=int(its.max()), wall=wall,
        u_final=u, gd=gd, params=p, t_final=tf, trajectory=traj, problem=prob,
    )


def add_rates(rows, key_step="h"):
    """Attach ``rate_u`` and ``rate_beta`` between consecutive rows (``None`` on the first)."""
    out = []
    for i, r in enumerate(rows):
        r = dict(r)
        if i == 0:
            r["rate_u"] = r["rate_beta"] = None
        else:
            q = rows[i - 1]
            r["rate_u"] = rate(q["err_u"], r["err_u"], q[key_step], r[key_step])
            r["rate_beta"] = rate(q["err_beta"], r["err_beta"], q[key_step], r[key_step])
        out.append(r)
    return out


def _row(res: RunResult):
    return {"h": res.h, "dt": res.dt, "ndof": res.ndof, "err_u": res.err_u, "err_beta": res.err_beta,
            "newton_avg": res.newton_avg, "newton_max": res.newton_max, "wall": res.wall}


def spatial_sweep(scheme, meshes, m, T=1.0, C_B=None, t0=None, quadrature="nodal", diffusivity=1.0, tol=1e-8):
    """h-sweep with dt = h^2."""
    rows = [_row(run_barenblatt(scheme, mesh, m, "h2", T=T, C_B=C_B, t0=t0, quadrature=quadrature,
                                diffusivity=diffusivity, tol=tol))
            for mesh in meshes]
    return add_rates(rows, "h")


def temporal_sweep(scheme, mesh, m, dts, T=1.0, C_B=None, t0=None, quadrature="nodal", diffusivity=1.0, tol=1e-8):
    """dt-sweep on a fixed mesh."""
    if isinstance(mesh, str):
        mesh = parse_mesh_spec(mesh)
    rows = [_row(run_barenblatt(scheme, mesh, m, dt, T=T, C_B=C_B, t0=t0, quadrature=quadrature,
                                diffusivity=diffusivity, tol=tol))
            for dt in dts]
    return add_rates(rows, "dt")


def front_study(scheme, mesh, ms, dt, T=1.0, C_B=None, t0=None, threshold_rel=1e-6, diffusivity=1.0, tol=1e-8):
    """Front distance of the discrete and exact solutions at the final time, per exponent."""
    if any(m <= 1 for m in ms):
        raise ValueError("front distances need m > 1")
    if isinstance(mesh, str):
        mesh = parse_mesh_spec(mesh)
    rows = []
    for m in ms:
        res = run_barenblatt(scheme, mesh, m, dt, T=T, C_B=C_B, t0=t0, diffusivity=diffusivity, tol=tol)
        d_u = front_distance(res.gd, res.u_final, threshold_rel)
        d_b = front_radius(res.t_final, res.params)
        rows.append({"m": m, "d_u": d_u, "d_uB": d_b, "rel_err": abs(d_u - d_b) / d_b,
                     "newton_avg": res.newton_avg, "newton_max": res.newton_max, "h": res.h, "dt": res.dt})
    return rows
