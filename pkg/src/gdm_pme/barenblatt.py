"""Barenblatt solutions, relative error norms, convergence rates and front distances."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gd import GradientDiscretisation, lp_distance, nodal_lp_distance
from .nonlinearity import PowerLaw


@dataclass(frozen=True)
class BarenblattParams:
    m: float
    C_B: float
    d: int = 2

    def __post_init__(self):
        if self.C_B <= 0:
            raise ValueError("C_B must be positive")
        if self.m <= 0 or self.m == 1.0:
            raise ValueError("the Barenblatt profile needs m > 0 and m != 1")
        if self.d * (self.m - 1) + 2 <= 0:
            raise ValueError("d (m - 1) + 2 must be positive")

    @property
    def alpha(self) -> float:
        return self.d / (self.d * (self.m - 1) + 2)

    @property
    def rho(self) -> float:
        return self.alpha / self.d

    @property
    def gamma(self) -> float:
        return self.alpha * (self.m - 1) / (2 * self.m * self.d)


def barenblatt(t, x, p: BarenblattParams):
    """u_B(t, x) = t^-alpha [C_B - gamma |x|^2 t^(-2 rho)]_+^(1/(m-1)) for points x of shape (n, 2)."""
    if t <= 0:
        raise ValueError("the Barenblatt solution is singular at t <= 0")
    x = np.asarray(x, dtype=float)
    r2 = (x**2).sum(axis=-1)
    bracket = np.maximum(p.C_B - p.gamma * r2 * t ** (-2 * p.rho), 0.0)
    out = np.zeros_like(bracket)
    pos = bracket > 0
    out[pos] = t ** (-p.alpha) * bracket[pos] ** (1.0 / (p.m - 1.0))
    return out


def front_radius(t, p: BarenblattParams) -> float:
    """Radius of the support of u_B(t) in the slow-diffusion case."""
    if p.m <= 1:
        raise ValueError("there is no free boundary for m < 1")
    if t <= 0:
        raise ValueError("t must be positive")
    return math.sqrt(p.C_B / p.gamma) * t**p.rho


def _distance(gd, v, exact, p, quadrature, levels):
    if quadrature == "nodal":
        return nodal_lp_distance(gd, v, exact, p=p)
    if quadrature == "subsampled":
        return lp_distance(gd, v, exact, p=p, levels=levels)
    raise ValueError(f"unknown quadrature {quadrature!r}")


def error_u(gd: GradientDiscretisation, u, exact, m, quadrature="nodal", levels=2) -> float:
    """Relative L^{m+1} error of ``Pi_D u`` against ``exact``.

    ``quadrature="nodal"`` compares with the reconstruction of the nodal
    interpolant of ``exact`` (lumped norm); ``"subsampled"`` integrates the
    exact field itself on ``4**levels`` sub-triangles of each region piece,
    which adds the O(h) piecewise-constant approximation error.
    """
    err, ref = _distance(gd, u, exact, m + 1.0, quadrature, levels)
    if ref == 0:
        raise ZeroDivisionError("exact solution has zero norm")
    return err / ref


def error_beta(gd: GradientDiscretisation, u, exact, m, quadrature="nodal", levels=2) -> float:
    """Relative L^2 error of ``beta(Pi_D u)`` against ``beta(exact)``; see :func:`error_u`."""
    law = PowerLaw(m)
    err, ref = _distance(gd, law.beta(u), lambda x: law.beta(exact(x)), 2.0, quadrature, levels)
    if ref == 0:
        raise ZeroDivisionError("exact solution has zero norm")
    return err / ref


def rate(e1, e2, h1, h2) -> float:
    """Observed order log(e1/e2) / log(h1/h2)."""
    if min(e1, e2, h1, h2) <= 0:
        raise ValueError("errors and steps must be positive")
    if h1 == h2:
        raise ValueError("h1 and h2 must differ")
    return math.log(e1 / e2) / math.log(h1 / h2)


def front_distance(gd: GradientDiscretisation, v, threshold_rel=1e-6) -> float:
    """Largest |x| over region representatives where |v| exceeds ``threshold_rel * max|v|``."""
    v = np.asarray(v, dtype=float)
    idx = gd.massed
    vals = np.abs(v[idx])
    vmax = vals.max(initial=0.0)
    if vmax == 0:
        return 0.0
    sel = idx[vals > threshold_rel * vmax]
    return float(np.hypot(gd.points[sel, 0], gd.points[sel, 1]).max())
