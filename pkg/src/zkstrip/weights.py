"""Admissible weight functions, the smooth cut-off and weight ladders.

Weights are functions of the axial coordinate only.  Three families are
supported::

    exp:   rho(x) = exp(2 a x) / (2 a)
    pow:   rho(x) = (1 + x)**(2 a) / (2 a)
    const: rho(x) = 1

Derivatives up to third order are available in closed form, which is all the
energy identities need.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit

__all__ = [
    "WeightError",
    "WeightFunction",
    "WeightLadder",
    "AdmissibilityReport",
    "LadderReport",
    "eval_weight",
    "check_admissible",
    "check_ladder",
    "cutoff_eta",
    "cutoff_eta_derivs",
    "eta_x0",
    "eta_x0_derivs",
    "parse_weight",
    "format_weight",
    "power_ladder",
]

MAX_ORDER = 3


class WeightError(ValueError):
    """Raised for invalid weights, orders or domains."""


@dataclass(frozen=True)
class WeightFunction:
    family: str = "const"
    alpha: float = 1.0
    # overrides the family's 1/(2 alpha) normalisation when set
    prefactor: float | None = None

    def __post_init__(self):
        if self.family not in ("exp", "pow", "const"):
            raise WeightError(f"unknown weight family {self.family!r}")
        if self.family != "const" and not self.alpha > 0:
            raise WeightError("weight rate alpha must be positive")

    def __call__(self, x, order: int = 0):
        return eval_weight(self, x, order)

    @classmethod
    def exponential(cls, alpha: float) -> "WeightFunction":
        return cls("exp", float(alpha))

    @classmethod
    def power(cls, alpha: float) -> "WeightFunction":
        return cls("pow", float(alpha))

    @classmethod
    def constant(cls) -> "WeightFunction":
        return cls("const", 1.0)

    def __str__(self):
        return format_weight(self)


def eval_weight(w: WeightFunction, x, order: int = 0):
    """Return the ``order``-th derivative of the weight at ``x`` (scalar or array)."""
    if not 0 <= order <= MAX_ORDER:
        raise WeightError(f"unsupported derivative order {order} (max {MAX_ORDER})")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise WeightError("weights are defined for x >= 0 only")
    a = w.alpha
    if w.family == "const":
        out = np.ones_like(xa) if order == 0 else np.zeros_like(xa)
    elif w.family == "exp":
        out = (2 * a) ** (order - 1) * np.exp(2 * a * xa)
    else:
        # d^j/dx^j (1+x)^p = p (p-1) ... (p-j+1) (1+x)^(p-j)
        p = 2 * a
        coef = 1.0
        for k in range(order):
            coef *= p - k
        out = coef / p * (1.0 + xa) ** (p - order)
    if w.prefactor is not None and w.family != "const":
        out = out * (2 * a * w.prefactor)
    if np.ndim(x) == 0:
        return float(out)
    return out


@dataclass
class AdmissibilityReport:
    max_ratio: dict
    argmax: dict


def check_admissible(w: WeightFunction, x_max: float, n_samples: int) -> AdmissibilityReport:
    """Measure max |rho^(j)| / rho on a uniform sample of [0, x_max] for j = 1..3."""
    if not x_max > 0 or n_samples < 2:
        raise WeightError("need x_max > 0 and n_samples >= 2")
    x = np.linspace(0.0, x_max, n_samples)
    rho = eval_weight(w, x, 0)
    if not np.all(rho > 0) or not np.all(np.isfinite(rho)):
        raise WeightError("admissibility violated: weight is not positive and finite")
    ratios, where = {}, {}
    for j in range(1, MAX_ORDER + 1):
        r = np.abs(eval_weight(w, x, j)) / rho
        k = int(np.argmax(r))
        ratios[j] = float(r[k])
        where[j] = float(x[k])
    return AdmissibilityReport(ratios, where)


# -- cut-off ---------------------------------------------------------------

_ETA_EDGE = 1e-3  # below this distance from 0 or 1 all eta derivatives are < 1e-200


def _eta_exponent(x):
    # eta = expit(p) with p = 1/(1-x) - 1/x on (0, 1)
    return 1.0 / (1.0 - x) - 1.0 / x


def cutoff_eta(x):
    """Smooth non-decreasing ramp: 0 for x <= 0, 1 for x >= 1, eta(x) + eta(1-x) = 1."""
    xa = np.asarray(x, dtype=float)
    out = np.where(xa >= 1.0, 1.0, 0.0)
    inside = (xa > 0.0) & (xa < 1.0)
    if np.any(inside):
        xi = xa[inside]
        out[inside] = expit(_eta_exponent(xi))
    return float(out) if np.ndim(x) == 0 else out


def cutoff_eta_derivs(x) -> np.ndarray:
    """Return an array ``(4, ...)`` holding eta, eta', eta'', eta''' at ``x``."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros((4,) + xa.shape)
    out[0] = cutoff_eta(xa)
    m = (xa > _ETA_EDGE) & (xa < 1.0 - _ETA_EDGE)
    if np.any(m):
        xi = xa[m]
        s = expit(_eta_exponent(xi))
        q = s * (1.0 - s)
        p1 = 1.0 / xi**2 + 1.0 / (1.0 - xi) ** 2
        p2 = -2.0 / xi**3 + 2.0 / (1.0 - xi) ** 3
        p3 = 6.0 / xi**4 + 6.0 / (1.0 - xi) ** 4
        out[1][m] = q * p1
        out[2][m] = q * (1 - 2 * s) * p1**2 + q * p2
        out[3][m] = q * (1 - 6 * s + 6 * s**2) * p1**3 + 3 * q * (1 - 2 * s) * p1 * p2 + q * p3
    if np.ndim(x) == 0:
        return out[:, 0]
    return out


def eta_x0(x, x0: float):
    """Shifted cut-off eta((2x - x0)/x0): 0 for x <= x0/2, 1 for x >= x0."""
    if not x0 > 0:
        raise WeightError("x0 must be positive")
    return cutoff_eta((2.0 * np.asarray(x, dtype=float) - x0) / x0)


def eta_x0_derivs(x, x0: float) -> np.ndarray:
    if not x0 > 0:
        raise WeightError("x0 must be positive")
    d = cutoff_eta_derivs((2.0 * np.asarray(x, dtype=float) - x0) / x0)
    scale = (2.0 / x0) ** np.arange(4)
    return d * scale.reshape((4,) + (1,) * (d.ndim - 1))


# -- ladders ---------------------------------------------------------------


@dataclass
class WeightLadder:
    weights: list = field(default_factory=list)
    c: float = 1.0

    def __post_init__(self):
        if not self.weights:
            raise WeightError("a ladder needs at least one weight")
        if not self.c > 0:
            raise WeightError("ladder slack constant must be positive")


@dataclass
class LadderReport:
    ok: bool
    worst_ratio: float
    worst_step: int
    worst_x: float


def check_ladder(ladder: WeightLadder, x_max: float, n_samples: int) -> LadderReport:
    """Check rho_j <= c sqrt(rho_j' rho_{j-1}') on a uniform sample of [0, x_max]."""
    x = np.linspace(0.0, x_max, n_samples)
    for w in ladder.weights:
        if w.family == "const":
            raise WeightError("ill-posed ladder: constant weight has vanishing derivative")
        check_admissible(w, x_max, n_samples)
    worst, step, wx = 0.0, 0, 0.0
    for j in range(1, len(ladder.weights)):
        num = eval_weight(ladder.weights[j], x)
        den = np.sqrt(eval_weight(ladder.weights[j], x, 1) * eval_weight(ladder.weights[j - 1], x, 1))
        if np.any(den <= 0):
            raise WeightError(f"ill-posed ladder: rho' vanishes at step {j}")
        r = num / den
        k = int(np.argmax(r))
        if r[k] > worst:
            worst, step, wx = float(r[k]), j, float(x[k])
    return LadderReport(worst <= ladder.c, worst, step, wx)


def power_ladder(alpha: float, n: int, c: float) -> WeightLadder:
    """Ladder (1+x)^(2(alpha-j)) / (2 alpha), j = 0..n, as a list of power weights.

    Every rung keeps the base weight's 1/(2 alpha) prefactor.
    """
    if alpha - n <= 0:
        raise WeightError("power ladder needs alpha > n")
    pref = 1.0 / (2.0 * alpha)
    return WeightLadder([WeightFunction("pow", alpha - j, pref) for j in range(n + 1)], c)


# -- config syntax ----------------------------------------------------------


def parse_weight(text: str) -> WeightFunction:
    """Parse ``exp:alpha=0.5``, ``pow:alpha=1.0`` or ``const``."""
    s = text.strip()
    if s == "const":
        return WeightFunction.constant()
    fam, _, rest = s.partition(":")
    if fam not in ("exp", "pow") or not rest.startswith("alpha="):
        raise WeightError(f"bad weight spec {text!r}; expected exp:alpha=A, pow:alpha=A or const")
    try:
        a = float(rest[len("alpha="):])
    except ValueError:
        raise WeightError(f"bad weight rate in {text!r}") from None
    if not math.isfinite(a):
        raise WeightError(f"bad weight rate in {text!r}")
    return WeightFunction(fam, a)


def format_weight(w: WeightFunction) -> str:
    if w.family == "const":
        return "const"
    return f"{w.family}:alpha={w.alpha!r}"


def weight_arrays(w: WeightFunction, x: Sequence[float]) -> np.ndarray:
    """rho and its first three derivatives sampled on ``x``; shape (4, len(x))."""
    x = np.asarray(x, dtype=float)
    return np.stack([eval_weight(w, x, j) for j in range(MAX_ORDER + 1)])
