"""Transverse eigenfunction systems and collocation transforms.

For each boundary-condition case the orthonormal eigenfunctions of -d^2/dy^2
on (0, L) are trigonometric:

    a  psi(0) = psi(L) = 0          sqrt(2/L) sin(pi l y / L),        l >= 1
    b  psi'(0) = psi'(L) = 0        sqrt(2/L) cos(pi l y / L),        l >= 0
    c  psi(0) = psi'(L) = 0         sqrt(2/L) sin((l - 1/2) pi y / L), l >= 1
    d  L-periodic                   1/sqrt(L), sqrt(2/L) cos / sin(2 pi k y / L)

Collocation nodes are chosen so that the sampled eigenfunctions are exactly
orthonormal under a simple quadrature (DST-I, DCT-II, DST-IV and the
periodic grid respectively).  Transforms are dense matrix products; the
number of transverse modes is small enough that this beats FFT bookkeeping.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "BCCase",
    "TransverseError",
    "TransverseBasis",
    "BoundaryTrace",
    "eigensystem",
    "forward_transform",
    "inverse_transform",
    "boundary_norm",
]


class TransverseError(ValueError):
    pass


class BCCase(str, Enum):
    DIRICHLET_DIRICHLET = "a"
    NEUMANN_NEUMANN = "b"
    DIRICHLET_NEUMANN = "c"
    PERIODIC = "d"

    @classmethod
    def parse(cls, tag) -> "BCCase":
        if isinstance(tag, cls):
            return tag
        try:
            return cls(str(tag).strip())
        except ValueError:
            raise TransverseError(
                f"unknown boundary case {tag!r}; valid tags are a, b, c, d"
            ) from None


def _check_index(case: BCCase, l: int):
    if case in (BCCase.DIRICHLET_DIRICHLET, BCCase.DIRICHLET_NEUMANN):
        if l < 1:
            raise TransverseError(f"case {case.value} modes start at l = 1, got {l}")
    elif case is BCCase.NEUMANN_NEUMANN:
        if l < 0:
            raise TransverseError(f"case b modes start at l = 0, got {l}")


def _mode(case: BCCase, L: float, l: int):
    """(lambda, amplitude, angular frequency, kind) for mode ``l``; kind is 'sin' or 'cos'."""
    _check_index(case, l)
    if case is BCCase.DIRICHLET_DIRICHLET:
        w = math.pi * l / L
        return w * w, math.sqrt(2 / L), w, "sin"
    if case is BCCase.NEUMANN_NEUMANN:
        w = math.pi * l / L
        amp = math.sqrt(1 / L) if l == 0 else math.sqrt(2 / L)
        return w * w, amp, w, "cos"
    if case is BCCase.DIRICHLET_NEUMANN:
        w = (l - 0.5) * math.pi / L
        return w * w, math.sqrt(2 / L), w, "sin"
    # periodic: signed index, k > 0 cosine, k < 0 sine
    w = 2 * math.pi * abs(l) / L
    if l == 0:
        return 0.0, math.sqrt(1 / L), 0.0, "cos"
    return w * w, math.sqrt(2 / L), w, "cos" if l > 0 else "sin"


def _eval_mode(amp, w, kind, y, deriv=0):
    y = np.asarray(y, dtype=float)
    phase = deriv * math.pi / 2
    if kind == "sin":
        return amp * w**deriv * np.sin(w * y + phase)
    if w == 0.0:
        return amp * np.ones_like(y) if deriv == 0 else np.zeros_like(y)
    return amp * w**deriv * np.cos(w * y + phase)


def eigensystem(case, L: float, l: int):
    """Analytic eigenpair ``(lambda_l, psi_l)``; ``psi_l(y, deriv=0)`` is vectorised."""
    case = BCCase.parse(case)
    if not L > 0:
        raise TransverseError("strip width L must be positive")
    lam, amp, w, kind = _mode(case, L, int(l))

    def psi(y, deriv=0):
        return _eval_mode(amp, w, kind, y, deriv)

    return lam, psi


def _mode_indices(case: BCCase, n: int) -> np.ndarray:
    if case in (BCCase.DIRICHLET_DIRICHLET, BCCase.DIRICHLET_NEUMANN):
        return np.arange(1, n + 1)
    if case is BCCase.NEUMANN_NEUMANN:
        return np.arange(n)
    if n % 2 == 0:
        raise TransverseError("periodic basis needs an odd number of modes")
    idx = [0]
    for k in range(1, (n - 1) // 2 + 1):
        idx += [k, -k]
    return np.array(idx)


def _nodes(case: BCCase, L: float, n: int):
    if case is BCCase.DIRICHLET_DIRICHLET:
        return L * np.arange(1, n + 1) / (n + 1), L / (n + 1)
    if case is BCCase.NEUMANN_NEUMANN:
        return L * (np.arange(n) + 0.5) / n, L / n
    if case is BCCase.DIRICHLET_NEUMANN:
        return L * (np.arange(1, n + 1) - 0.5) / n, L / n
    return L * np.arange(n) / n, L / n


@dataclass(frozen=True, eq=False)
class TransverseBasis:
    """Eigenbasis of -d^2/dy^2 truncated to ``n_modes`` modes with its collocation grid."""

    case: BCCase
    L: float
    n_modes: int
    index: np.ndarray = field(init=False, repr=False)
    eigenvalues: np.ndarray = field(init=False, repr=False)
    nodes: np.ndarray = field(init=False, repr=False)
    node_weight: float = field(init=False, repr=False)
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        case = BCCase.parse(self.case)
        object.__setattr__(self, "case", case)
        if not self.L > 0:
            raise TransverseError("strip width L must be positive")
        if self.n_modes < 1:
            raise TransverseError("need at least one transverse mode")
        idx = _mode_indices(case, self.n_modes)
        y, dy = _nodes(case, self.L, self.n_modes)
        modes = [_mode(case, self.L, int(l)) for l in idx]
        object.__setattr__(self, "index", idx)
        object.__setattr__(self, "eigenvalues", np.array([m[0] for m in modes]))
        object.__setattr__(self, "nodes", y)
        object.__setattr__(self, "node_weight", dy)
        object.__setattr__(self, "matrix", self.evaluate(y))
        for a in (self.index, self.eigenvalues, self.nodes, self.matrix):
            a.flags.writeable = False

    def __eq__(self, other):
        return (
            isinstance(other, TransverseBasis)
            and self.case is other.case
            and self.L == other.L
            and self.n_modes == other.n_modes
        )

    def __hash__(self):
        return hash((self.case, self.L, self.n_modes))

    @property
    def n_nodes(self) -> int:
        return self.n_modes

    def evaluate(self, y, deriv: int = 0) -> np.ndarray:
        """Matrix ``[len(y), n_modes]`` of psi_l^(deriv)(y)."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        cols = [
            _eval_mode(*_mode(self.case, self.L, int(l))[1:], y, deriv) for l in self.index
        ]
        return np.stack(cols, axis=-1)

    def norm_index(self) -> np.ndarray:
        """Integer index entering the (|theta|^(2/3) + l^2) boundary-norm weight."""
        return np.abs(self.index)

    def forward(self, samples: np.ndarray) -> np.ndarray:
        return forward_transform(samples, self)

    def inverse(self, coeffs: np.ndarray) -> np.ndarray:
        return inverse_transform(coeffs, self)

    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask in the periodic case, all-true otherwise."""
        if self.case is not BCCase.PERIODIC:
            return np.ones(self.n_modes, dtype=bool)
        kmax = (self.n_modes - 1) // 2
        return np.abs(self.index) <= (2 * kmax) // 3


def forward_transform(samples, basis: TransverseBasis) -> np.ndarray:
    """Mode coefficients of nodal samples; the last axis runs over the nodes."""
    u = np.asarray(samples, dtype=float)
    if u.shape[-1] != basis.n_nodes:
        raise TransverseError(
            f"expected {basis.n_nodes} transverse samples, got {u.shape[-1]}"
        )
    return (u * basis.node_weight) @ basis.matrix


def inverse_transform(coeffs, basis: TransverseBasis) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    if c.shape[-1] != basis.n_modes:
        raise TransverseError(f"expected {basis.n_modes} coefficients, got {c.shape[-1]}")
    return c @ basis.matrix.T


@dataclass
class BoundaryTrace:
    """Inflow data mu(t_i, y_j) on a uniform time grid and the basis nodes."""

    t: np.ndarray
    values: np.ndarray
    basis: TransverseBasis

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.t.ndim != 1 or len(self.t) < 1:
            raise TransverseError("time grid must be a non-empty vector")
        if self.values.shape != (len(self.t), self.basis.n_nodes):
            raise TransverseError(
                f"trace shape {self.values.shape} does not match "
                f"({len(self.t)}, {self.basis.n_nodes})"
            )
        if len(self.t) > 1:
            dt = np.diff(self.t)
            if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
                raise TransverseError("boundary trace needs a uniform time grid")

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    @classmethod
    def from_function(cls, mu, t, basis: TransverseBasis) -> "BoundaryTrace":
        t = np.asarray(t, dtype=float)
        vals = np.array([np.broadcast_to(mu(ti, basis.nodes), basis.nodes.shape) for ti in t])
        return cls(t, vals, basis)

    def at(self, time: float) -> np.ndarray:
        """Linear interpolation in time (constant extension beyond the grid)."""
        if len(self.t) == 1:
            return self.values[0].copy()
        s = (time - self.t[0]) / self.dt
        i = int(np.clip(np.floor(s), 0, len(self.t) - 2))
        th = float(np.clip(s - i, 0.0, 1.0))
        return (1 - th) * self.values[i] + th * self.values[i + 1]

    def coefficients(self) -> np.ndarray:
        return forward_transform(self.values, self.basis)

    def l2_norm(self) -> float:
        """Discrete space-time L2 norm (rectangle rule in t, node quadrature in y)."""
        return math.sqrt(self.dt * float(np.sum(self.coefficients() ** 2)))


def boundary_norm(mu: BoundaryTrace, s: float, pad: int = 2) -> float:
    """Anisotropic H^{s/3,s} norm of a boundary trace.

    The trace is extended by zero outside its time window, transformed in t
    by a zero-padded FFT and in y by the eigenexpansion; the Fourier measure
    is d(theta)/(2 pi), so that ``s = 0`` reproduces the space-time L2 norm.
    Returns ``inf`` when the weight is singular on a non-zero coefficient.
    """
    if len(mu.t) < 2:
        raise TransverseError("boundary norm needs at least two time samples")
    c = mu.coefficients()
    nt = c.shape[0]
    m = pad * nt
    dt = mu.dt
    chat = dt * np.fft.fft(c, n=m, axis=0)
    theta = 2 * np.pi * np.fft.fftfreq(m, d=dt)
    dtheta = 2 * np.pi / (m * dt)
    lsq = mu.basis.norm_index().astype(float) ** 2
    base = np.abs(theta)[:, None] ** (2.0 / 3.0) + lsq[None, :]
    power = np.abs(chat) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        wgt = np.where(base > 0, base**s, 0.0 if s > 0 else (1.0 if s == 0 else np.inf))
    nz = power > 0
    if np.any(np.isinf(wgt) & nz):
        return math.inf
    total = float(np.sum(np.where(nz, wgt * power, 0.0))) * dtheta / (2 * np.pi)
    return math.sqrt(total)
