"""Compatibility stacks linking the initial datum, the forcing and the inflow data.

With L = d_x^3 + d_x d_y^2 + b d_x the stacks are

    Phi_0 = u0,   Phi_m = -L Phi_{m-1} - sum_{l<m} C(m-1, l) Phi_l d_x Phi_{m-1-l}
    Phi~_0 = u0,  Phi~_m = d_t^{m-1} f(0) - L Phi~_{m-1}

i.e. the formal time derivatives d_t^m u at t = 0 of the nonlinear and the
linear problem.  A regular solution needs d_t^m mu(0, y) = Phi_m(0, y).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .operators import GridSpec, apply_linear_zk, fd_weights
from .transverse import BoundaryTrace

__all__ = [
    "CompatibilityError",
    "StackVariant",
    "CompatibilityStack",
    "phi_stack",
    "phi_tilde_stack",
    "phi_tilde_closed_form",
    "check_compatibility",
    "DEFAULT_MAX_ORDER",
]

# each order consumes three x-derivatives; beyond this the stencils degrade
DEFAULT_MAX_ORDER = 2


class CompatibilityError(ValueError):
    pass


class StackVariant(str, Enum):
    NONLINEAR = "Nonlinear"
    LINEAR = "Linear"


@dataclass
class CompatibilityStack:
    """Fields Phi_0..Phi_M on the grid nodes, each of shape (n_x, n_y)."""

    order: int
    fields: list
    variant: StackVariant
    grid: GridSpec

    def __post_init__(self):
        if len(self.fields) != self.order + 1:
            raise CompatibilityError("stack must hold order + 1 fields")
        if not all(np.all(np.isfinite(f)) for f in self.fields):
            raise CompatibilityError("compatibility stack contains non-finite values")

    def __getitem__(self, m: int) -> np.ndarray:
        return self.fields[m]

    def boundary(self, m: int) -> np.ndarray:
        """Trace Phi_m(0, y) at the transverse nodes."""
        return self.fields[m][0]

    def to_csv(self, path) -> None:
        """Write rows ``x, y, m, value``."""
        X, Y = self.grid.mesh()
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "y", "m", "value"])
            for m, f in enumerate(self.fields):
                for xv, yv, v in zip(X.ravel(), Y.ravel(), np.asarray(f).ravel()):
                    wr.writerow([repr(float(xv)), repr(float(yv)), m, repr(float(v))])


def _check_order(M: int, max_order: int):
    if M < 0:
        raise CompatibilityError(f"stack order must be non-negative, got {M}")
    if M > max_order:
        raise CompatibilityError(
            f"order {M} exceeds the cap {max_order}; pass max_order to override"
        )


def _samples(u0, grid: GridSpec) -> np.ndarray:
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (grid.n_x, grid.basis.n_nodes):
        raise CompatibilityError(
            f"field has shape {u0.shape}, grid expects ({grid.n_x}, {grid.basis.n_nodes})"
        )
    return u0


def _linear_part(u, b, grid):
    return apply_linear_zk(u, b, grid)


def phi_stack(
    u0,
    b: float,
    M: int,
    grid: GridSpec,
    quadratic: bool = True,
    max_order: int = DEFAULT_MAX_ORDER,
) -> CompatibilityStack:
    """Nonlinear stack Phi_0..Phi_M of nodal data ``u0``.

    With ``quadratic=False`` the product sum is dropped and the result
    coincides with :func:`phi_tilde_stack` for f = 0.
    """
    _check_order(M, max_order)
    u0 = _samples(u0, grid)
    phis = [u0.copy()]
    dphis = [grid.D1 @ u0] if quadratic else []
    for m in range(1, M + 1):
        nxt = -_linear_part(phis[m - 1], b, grid)
        if quadratic:
            for l in range(m):
                nxt = nxt - math.comb(m - 1, l) * phis[l] * dphis[m - 1 - l]
            dphis.append(grid.D1 @ nxt)
        phis.append(nxt)
    return CompatibilityStack(M, phis, StackVariant.NONLINEAR, grid)


def _f_list(f_derivs, M, grid):
    f_derivs = list(f_derivs or [])
    if len(f_derivs) < M:
        raise CompatibilityError(
            f"order {M} needs time derivatives of f up to order {M - 1}; got {len(f_derivs)}"
        )
    return [_samples(f, grid) for f in f_derivs[:M]]


def phi_tilde_stack(
    u0,
    f_derivs,
    b: float,
    M: int,
    grid: GridSpec,
    max_order: int = DEFAULT_MAX_ORDER,
    closed_form: bool = False,
) -> CompatibilityStack:
    """Linear stack from ``u0`` and ``f_derivs[l]`` = d_t^l f(0, x, y), l < M.

    ``closed_form=True`` evaluates the expanded sum
    Phi~_m = (-1)^m L^m u0 + sum_l (-1)^(m-1-l) L^(m-1-l) d_t^l f(0)
    instead of the recursion (a debugging cross-check).
    """
    _check_order(M, max_order)
    u0 = _samples(u0, grid)
    fs = _f_list(f_derivs, M, grid)
    if closed_form:
        return phi_tilde_closed_form(u0, fs, b, M, grid)
    phis = [u0.copy()]
    for m in range(1, M + 1):
        phis.append(fs[m - 1] - _linear_part(phis[m - 1], b, grid))
    return CompatibilityStack(M, phis, StackVariant.LINEAR, grid)


def _power(u, k, b, grid):
    for _ in range(k):
        u = _linear_part(u, b, grid)
    return u


def phi_tilde_closed_form(u0, f_derivs, b: float, M: int, grid: GridSpec) -> CompatibilityStack:
    u0 = _samples(u0, grid)
    fs = _f_list(f_derivs, M, grid)
    phis = [u0.copy()]
    for m in range(1, M + 1):
        acc = (-1) ** m * _power(u0, m, b, grid)
        for l in range(m):
            acc = acc + (-1) ** (m - 1 - l) * _power(fs[l], m - 1 - l, b, grid)
        phis.append(acc)
    return CompatibilityStack(M, phis, StackVariant.LINEAR, grid)


def trace_time_derivatives(mu: BoundaryTrace, M: int) -> list:
    """d_t^m mu(0, y) for m = 0..M by one-sided differences at t = 0.

    Uses M + 2 samples when available (second-order accurate for m = 1).
    """
    nt = len(mu.t)
    if nt < M + 1:
        raise CompatibilityError(
            f"boundary trace has {nt} time samples; order {M} needs at least {M + 1}"
        )
    out = [mu.values[0].copy()]
    for m in range(1, M + 1):
        width = min(m + 2, nt)
        w = fd_weights(0.0, mu.t[:width] - mu.t[0], m)[m]
        out.append(w @ mu.values[:width])
    return out


def check_compatibility(mu: BoundaryTrace, stack: CompatibilityStack, M: int | None = None) -> np.ndarray:
    """Residuals ||d_t^m mu(0, .) - Phi_m(0, .)||_{L2(0, L)}, m = 0..M."""
    M = stack.order if M is None else M
    if M > stack.order:
        raise CompatibilityError(f"stack holds orders up to {stack.order}, asked for {M}")
    if mu.basis != stack.grid.basis:
        raise CompatibilityError("boundary trace basis does not match the stack grid")
    dmu = trace_time_derivatives(mu, M)
    w = mu.basis.node_weight
    return np.array(
        [math.sqrt(w * float(np.sum((dmu[m] - stack.boundary(m)) ** 2))) for m in range(M + 1)]
    )
