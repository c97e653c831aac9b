"""Manufactured solutions u = exp(-t) g(x) psi_l(y) for the linear equation.

Profiles are Gaussians exp(-a (x - c)^2), optionally multiplied by x so that
the inflow trace vanishes identically.  Derivatives come from Hermite
polynomials, so every quantity is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermval

from .transverse import eigensystem

__all__ = ["GaussianProfile", "ManufacturedSolution"]


@dataclass(frozen=True)
class GaussianProfile:
    center: float = 3.0
    rate: float = 1.0
    times_x: bool = False

    def _gauss(self, x, n):
        s = math.sqrt(self.rate)
        z = s * (np.asarray(x, dtype=float) - self.center)
        coef = np.zeros(n + 1)
        coef[n] = 1.0
        return (-s) ** n * hermval(z, coef) * np.exp(-(z**2))

    def __call__(self, x, n: int = 0):
        """n-th derivative of the profile."""
        if not self.times_x:
            return self._gauss(x, n)
        x = np.asarray(x, dtype=float)
        out = x * self._gauss(x, n)
        if n > 0:
            out = out + n * self._gauss(x, n - 1)
        return out


@dataclass(frozen=True)
class ManufacturedSolution:
    profile: GaussianProfile
    case: str
    L: float
    mode: int = 1
    b: float = 0.0
    decay: float = 1.0

    @property
    def lam(self) -> float:
        return eigensystem(self.case, self.L, self.mode)[0]

    def psi(self, y, deriv=0):
        return eigensystem(self.case, self.L, self.mode)[1](y, deriv)

    def exact(self, t, X, Y):
        return math.exp(-self.decay * t) * self.profile(X) * self.psi(Y)

    def initial(self, X, Y):
        return self.exact(0.0, X, Y)

    def forcing(self, t, X, Y):
        """f = u_t + b u_x + u_xxx + u_xyy for the manufactured field."""
        g = self.profile
        lin = -self.decay * g(X) + (self.b - self.lam) * g(X, 1) + g(X, 3)
        return math.exp(-self.decay * t) * lin * self.psi(Y)

    def forcing_time_derivative(self, m: int, X, Y):
        return (-self.decay) ** m * self.forcing(0.0, X, Y)

    def inflow(self, t, y):
        return math.exp(-self.decay * t) * float(self.profile(0.0)) * self.psi(y)
