"""Scalar power-law nonlinearities of the porous medium equation.

All functions accept scalars or numpy arrays and are applied elementwise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _signed_power(s, p):
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    out = np.zeros_like(a)
    nz = a > 0
    out[nz] = np.sign(s[nz]) * np.exp(p * np.log(a[nz]))
    return out if out.ndim else float(out)


def _abs_power(s, p):
    a = np.abs(np.asarray(s, dtype=float))
    out = np.zeros_like(a)
    nz = a > 0
    out[nz] = np.exp(p * np.log(a[nz]))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PowerLaw:
    """beta(s) = |s|^(m-1) s and the functions derived from it."""

    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"exponent m must be positive, got {self.m}")

    @property
    def m_hat(self) -> float:
        return max(1.0, 1.0 / self.m)

    @property
    def is_linear(self) -> bool:
        return self.m == 1.0

    def beta(self, s):
        return _signed_power(s, self.m)

    def beta_inv(self, w):
        return _signed_power(w, 1.0 / self.m)

    def dbeta(self, s, floor=0.0):
        """beta'(s) = m |s|^(m-1); for m < 1 pass ``floor`` > 0 to bound it near 0."""
        a = np.abs(np.asarray(s, dtype=float))
        if floor > 0:
            a = np.maximum(a, floor)
        if self.m == 1.0:
            return np.ones_like(a) if a.ndim else 1.0
        return self.m * _abs_power(a, self.m - 1.0)

    def dbeta_inv(self, w):
        """Derivative of beta_inv, (1/m) |w|^(1/m - 1); finite everywhere only for m <= 1."""
        if self.m == 1.0:
            a = np.asarray(w, dtype=float)
            return np.ones_like(a) if a.ndim else 1.0
        return _abs_power(w, 1.0 / self.m - 1.0) / self.m

    def zeta(self, z):
        """Primitive of beta vanishing at 0: |z|^(m+1) / (m+1)."""
        return _abs_power(z, self.m + 1.0) / (self.m + 1.0)

    # cutoffs with global Lipschitz constants

    def cutoff_fast(self, r, k):
        if self.m >= 1:
            raise ValueError("the fast-diffusion cutoff needs m < 1")
        if k <= 0:
            raise ValueError("k must be positive")
        r = np.asarray(r, dtype=float)
        out = np.where(np.abs(r) <= 1.0 / k, k ** (1.0 - self.m) * r, self.beta(r))
        return out if out.ndim else float(out)

    def cutoff_slow(self, r, k):
        if self.m <= 1:
            raise ValueError("the slow-diffusion cutoff needs m > 1")
        if k <= 0:
            raise ValueError("k must be positive")
        r = np.asarray(r, dtype=float)
        out = np.sign(r) * self.beta(np.minimum(np.abs(r), k))
        return out if out.ndim else float(out)

    def lipschitz_fast(self, k) -> float:
        return k ** (1.0 - self.m)

    def lipschitz_slow(self, k) -> float:
        return self.m * k ** (self.m - 1.0)
