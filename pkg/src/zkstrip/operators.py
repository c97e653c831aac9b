"""Axial finite differences, per-mode ZK operators and banded solves.

The half-strip is truncated to ``[0, x_max]`` with ``n_x`` equispaced nodes.
Derivative matrices are second order: centred stencils in the interior and
shifted stencils of the same order where the centred one does not fit.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lapack

from .transverse import TransverseBasis, forward_transform, inverse_transform
from .weights import cutoff_eta

__all__ = [
    "GridError",
    "SingularMatrixError",
    "GridSpec",
    "BandedMatrix",
    "fd_weights",
    "diff_matrix",
    "d_x",
    "d_x3",
    "assemble_mode_operator",
    "banded_solve",
    "nonlinear_term",
    "apply_linear_zk",
]


class GridError(ValueError):
    pass


class SingularMatrixError(ArithmeticError):
    pass


def fd_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Fornberg's finite-difference weights.

    Returns ``c[k, j]``, the weight of node ``x[j]`` in the ``k``-th
    derivative at ``z`` for ``k = 0..m``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((m + 1, n))
    c1, c4 = 1.0, x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5 = 1.0, c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def _stencil_start(i: int, n: int, width: int) -> int:
    return int(np.clip(i - width // 2, 0, n - width))


def diff_matrix(n: int, h: float, order: int) -> sp.csr_matrix:
    """Second-order accurate ``order``-th derivative matrix on ``n`` equispaced nodes."""
    if order < 1:
        raise GridError("derivative order must be >= 1")
    centred = 2 * ((order + 1) // 2) + 1
    shifted = order + 2
    if n < max(centred, shifted):
        raise GridError(f"need at least {max(centred, shifted)} nodes for d^{order}/dx^{order}")
    rows, cols, vals = [], [], []
    half = centred // 2
    for i in range(n):
        if half <= i < n - half:
            s, w = i - half, centred
        else:
            w = shifted
            s = _stencil_start(i, n, w)
        wts = fd_weights(float(i), np.arange(s, s + w, dtype=float), order)[order]
        rows += [i] * w
        cols += range(s, s + w)
        vals += list(wts / h**order)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


@dataclass(eq=False)
class GridSpec:
    """Truncated half-strip grid: ``n_x`` axial nodes on ``[0, x_max]`` times the transverse basis."""

    x_max: float
    n_x: int
    basis: TransverseBasis
    dt: float = 1e-2
    sponge_start: float | None = None
    sponge_peak: float = 10.0
    # coefficient c of the c h^2 K grid-scale damping in the time stepper
    hyperdiffusion: float = 0.5

    def __post_init__(self):
        if not self.x_max > 0:
            raise GridError("x_max must be positive")
        if self.n_x < 8:
            raise GridError("need n_x >= 8")
        if not self.dt > 0:
            raise GridError("dt must be positive")
        if self.sponge_start is None:
            self.sponge_start = 0.8 * self.x_max
        if not 0 < self.sponge_start < self.x_max:
            raise GridError("sponge must start strictly inside (0, x_max)")
        if self.sponge_peak < 0:
            raise GridError("sponge strength must be non-negative")
        if self.hyperdiffusion < 0:
            raise GridError("hyperdiffusion coefficient must be non-negative")

    @property
    def dx(self) -> float:
        return self.x_max / (self.n_x - 1)

    @property
    def L(self) -> float:
        return self.basis.L

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.x_max, self.n_x)

    @property
    def y(self) -> np.ndarray:
        return self.basis.nodes

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def D1(self) -> sp.csr_matrix:
        return diff_matrix(self.n_x, self.dx, 1)

    @cached_property
    def D2(self) -> sp.csr_matrix:
        return diff_matrix(self.n_x, self.dx, 2)

    @cached_property
    def D3(self) -> sp.csr_matrix:
        return diff_matrix(self.n_x, self.dx, 3)

    @cached_property
    def D4(self) -> sp.csr_matrix:
        return diff_matrix(self.n_x, self.dx, 4)

    def dmat(self, order: int) -> sp.csr_matrix:
        if order == 0:
            return sp.identity(self.n_x, format="csr")
        if 1 <= order <= 4:
            return getattr(self, f"D{order}")
        raise GridError(f"axial derivatives of order {order} are not resolved (max 4)")

    @cached_property
    def E1(self) -> sp.csr_matrix:
        return evolution_d1(self)

    @cached_property
    def E3(self) -> sp.csr_matrix:
        return evolution_d3(self)

    @cached_property
    def K(self) -> sp.csr_matrix:
        return hyperdiffusion_matrix(self)

    @cached_property
    def sponge(self) -> np.ndarray:
        """Damping profile sigma_s(x): a smooth ramp from 0 at sponge_start to the peak at x_max."""
        ramp = cutoff_eta((self.x - self.sponge_start) / (self.x_max - self.sponge_start))
        return self.sponge_peak * ramp

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n_x, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w


def d_x(profile, grid: GridSpec) -> np.ndarray:
    return grid.D1 @ np.asarray(profile, dtype=float)


def d_x3(profile, grid: GridSpec) -> np.ndarray:
    return grid.D3 @ np.asarray(profile, dtype=float)


class BandedMatrix:
    """Square band matrix stored in LAPACK general-band layout.

    ``ab[ku + i - j, j] = A[i, j]`` for ``-kl <= j - i <= ku``.
    """

    def __init__(self, ab: np.ndarray, kl: int, ku: int):
        self.ab = np.asarray(ab, dtype=float)
        self.kl, self.ku = int(kl), int(ku)
        if self.ab.shape[0] != self.kl + self.ku + 1:
            raise ValueError("band storage has the wrong number of rows")
        self.n = self.ab.shape[1]
        self._lu = None
        self._piv = None

    @classmethod
    def from_dense(cls, a: np.ndarray, kl: int, ku: int) -> "BandedMatrix":
        a = np.asarray(a, dtype=float)
        n = a.shape[0]
        ab = np.zeros((kl + ku + 1, n))
        for i in range(n):
            for j in range(max(0, i - kl), min(n, i + ku + 1)):
                ab[ku + i - j, j] = a[i, j]
        return cls(ab, kl, ku)

    @classmethod
    def from_sparse(cls, a, kl: int, ku: int) -> "BandedMatrix":
        a = sp.coo_matrix(a)
        off = a.col - a.row
        if np.any((off < -kl) | (off > ku)):
            raise ValueError("matrix has entries outside the declared band")
        ab = np.zeros((kl + ku + 1, a.shape[0]))
        np.add.at(ab, (ku + a.row - a.col, a.col), a.data)
        return cls(ab, kl, ku)

    @property
    def factorized(self) -> bool:
        return self._lu is not None

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i in range(self.n):
            for j in range(max(0, i - self.kl), min(self.n, i + self.ku + 1)):
                a[i, j] = self.ab[self.ku + i - j, j]
        return a

    def to_sparse(self) -> sp.csr_matrix:
        offsets = list(range(self.ku, -self.kl - 1, -1))
        diags = []
        for r, k in enumerate(offsets):
            row = self.ab[r]
            diags.append(row[k:] if k >= 0 else row[: self.n + k])
        return sp.diags(diags, offsets, shape=(self.n, self.n), format="csr")

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.to_sparse() @ x

    def factorize(self, rtol: float = 1e-13) -> "BandedMatrix":
        lu_in = np.zeros((2 * self.kl + self.ku + 1, self.n))
        lu_in[self.kl:] = self.ab
        lu, piv, info = lapack.dgbtrf(lu_in, self.kl, self.ku)
        if info > 0:
            raise SingularMatrixError(f"zero pivot at row {info - 1}")
        if info < 0:
            raise ValueError(f"dgbtrf: illegal argument {-info}")
        diag = np.abs(lu[self.kl + self.ku])
        scale = np.max(np.abs(self.ab)) if self.ab.size else 0.0
        if scale == 0 or diag.min() <= rtol * scale:
            raise SingularMatrixError("matrix is singular within tolerance")
        self._lu, self._piv = lu, piv
        return self

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._lu is None:
            self.factorize()
        x, info = lapack.dgbtrs(self._lu, self.kl, self.ku, np.asarray(rhs, dtype=float), self._piv)
        if info != 0:
            raise ValueError(f"dgbtrs: illegal argument {-info}")
        return x


def banded_solve(a: BandedMatrix, rhs) -> np.ndarray:
    """Solve ``a @ x = rhs``; ``rhs`` may be a vector or a matrix of right-hand sides."""
    return a.solve(rhs)


# -- per-mode evolution operator ---------------------------------------------
#
# Rows 0 and n-1 are Dirichlet closures (inflow value, u(x_max) = 0).  Rows
# 1..n-2 carry the differential operator with centred stencils closed by ghost
# values: u_{-1} = 2 u_0 - u_1 (odd reflection about the inflow node) and
# u_n = u_{n-2} (centred form of u_x(x_max) = 0).  With these closures the
# third-difference block has a non-negative symmetric part and the first
# difference block is skew, so Crank-Nicolson cannot create L2 energy.

MODE_KL, MODE_KU = 2, 2


def closure_rows(n: int):
    """(inflow Dirichlet, outflow Dirichlet) row indices."""
    return 0, n - 1


def evolution_d1(grid: GridSpec) -> sp.csr_matrix:
    n, h = grid.n_x, grid.dx
    a = sp.diags([-np.ones(n - 1), np.ones(n - 1)], [-1, 1], shape=(n, n), format="lil") / (2 * h)
    a.rows[0], a.data[0] = [], []
    a.rows[n - 1], a.data[n - 1] = [], []
    return a.tocsr()


def evolution_d3(grid: GridSpec) -> sp.csr_matrix:
    n, h = grid.n_x, grid.dx
    a = sp.diags(
        [-0.5 * np.ones(n - 2), np.ones(n - 1), -np.ones(n - 1), 0.5 * np.ones(n - 2)],
        [-2, -1, 1, 2],
        shape=(n, n),
        format="lil",
    )
    a.rows[0], a.data[0] = [], []
    a.rows[n - 1], a.data[n - 1] = [], []
    # row 1, ghost u_{-1} = 2 u_0 - u_1: (u_1 - 2 u_2 + u_3) / 2
    a[1, 0] = 0.0
    a[1, 1] = 0.5
    # row n-2, ghost u_n = u_{n-2}
    a[n - 2, n - 2] = 0.5
    return (a.tocsr() / h**3).tocsr()


def hyperdiffusion_matrix(grid: GridSpec) -> sp.csr_matrix:
    """Square of the Dirichlet second difference on rows 1..n-2, scaled by 1/h^4.

    Symmetric positive semi-definite; multiplied by ``c h^2`` it damps the
    grid-scale waves that centred dispersive stencils propagate backwards.
    """
    n, h = grid.n_x, grid.dx
    d2 = sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], shape=(n, n), format="lil")
    for r in (0, n - 1):
        d2.rows[r], d2.data[r] = [], []
    k = (d2.tocsr() @ d2.tocsr()).tolil()
    for r in (0, n - 1):
        k.rows[r], k.data[r] = [], []
    return (k.tocsr() / h**4).tocsr()


def mode_operator_sparse(lam: float, b: float, grid: GridSpec, sponge: bool = False, damping: bool = True) -> sp.csr_matrix:
    """A_l = D3 + (b - lam) D1 [+ S + c h^2 K] on the differential rows, zero closure rows."""
    a = grid.E3 + (b - lam) * grid.E1
    if sponge:
        s = grid.sponge.copy()
        s[[0, -1]] = 0.0
        a = a + sp.diags(s)
    if damping and grid.hyperdiffusion:
        a = a + grid.hyperdiffusion * grid.dx**2 * grid.K
    return a.tocsr()


def _with_closures(a, grid: GridSpec) -> sp.csr_matrix:
    a = sp.lil_matrix(a)
    r0, r1 = closure_rows(grid.n_x)
    for r in (r0, r1):
        a.rows[r], a.data[r] = [r], [1.0]
    return a.tocsr()


def assemble_mode_operator(l: int, b: float, grid: GridSpec, damping: bool = False) -> BandedMatrix:
    """Band matrix of d^3/dx^3 + (b - lambda_l) d/dx for transverse mode position ``l``.

    Rows 0 and n-1 hold the Dirichlet closures u(0) = g and u(x_max) = 0; the
    outflow condition u_x(x_max) = 0 enters through the ghost value in row
    n-2.  ``damping`` adds the hyperdiffusion used by the time stepper.
    """
    lam = float(grid.basis.eigenvalues[l])
    a = _with_closures(mode_operator_sparse(lam, b, grid, sponge=False, damping=damping), grid)
    return BandedMatrix.from_sparse(a, MODE_KL, MODE_KU)


def implicit_mode_matrix(lam: float, b: float, grid: GridSpec, dt: float, sponge: bool = True) -> BandedMatrix:
    """I + dt/2 (A_l + S + c h^2 K) on differential rows, closure rows unchanged."""
    a = sp.identity(grid.n_x, format="csr") + 0.5 * dt * mode_operator_sparse(lam, b, grid, sponge)
    return BandedMatrix.from_sparse(_with_closures(a, grid), MODE_KL, MODE_KU)


def apply_mode_operators(coeffs: np.ndarray, b: float, grid: GridSpec, sponge: bool = False, damping: bool = True) -> np.ndarray:
    """Evolution operator applied column-wise to ``coeffs[n_x, n_modes]``; closure rows are zero."""
    out = grid.E3 @ coeffs + (grid.E1 @ coeffs) * (b - grid.basis.eigenvalues)[None, :]
    if sponge:
        s = grid.sponge.copy()
        s[[0, -1]] = 0.0
        out = out + s[:, None] * coeffs
    if damping and grid.hyperdiffusion:
        out = out + grid.hyperdiffusion * grid.dx**2 * (grid.K @ coeffs)
    return out


def apply_linear_zk(u: np.ndarray, b: float, grid: GridSpec) -> np.ndarray:
    """(d_x^3 + d_x d_y^2 + b d_x) u for a physical field ``u[n_x, n_y]``."""
    c = forward_transform(u, grid.basis)
    lin = grid.D3 @ c + (grid.D1 @ c) * (b - grid.basis.eigenvalues)[None, :]
    return inverse_transform(lin, grid.basis)


def nonlinear_term(u: np.ndarray, grid: GridSpec) -> np.ndarray:
    """u u_x in the skew-symmetric split form (1/3)[(u^2)_x + u u_x], physical in and out.

    Products are formed at the transverse collocation nodes; in the periodic
    case input and output are filtered with the 2/3 rule.
    """
    u = np.asarray(u, dtype=float)
    mask = grid.basis.dealias_mask()
    dealias = not mask.all()
    if dealias:
        u = inverse_transform(forward_transform(u, grid.basis) * mask, grid.basis)
    n = (grid.D1 @ (u * u) + u * (grid.D1 @ u)) / 3.0
    if dealias:
        n = inverse_transform(forward_transform(n, grid.basis) * mask, grid.basis)
    return n
