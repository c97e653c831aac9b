"""Semi-implicit time stepping for the ZK equation on the truncated half-strip.

    u_t + b u_x + u_xxx + u_xyy + u u_x = f,   u(t, 0, y) = mu(t, y)

The field is stored as transverse mode coefficients ``c[i, l]`` at axial node
``x_i``.  Each step treats the dispersive/advective part and the sponge with
Crank-Nicolson (one banded solve per mode) and the nonlinear term with
second-order Adams-Bashforth, started by forward Euler.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .operators import (
    GridSpec,
    SingularMatrixError,
    apply_mode_operators,
    closure_rows,
    implicit_mode_matrix,
    nonlinear_term,
)
from .transverse import BoundaryTrace, forward_transform, inverse_transform

__all__ = [
    "SolverConfig",
    "SolverState",
    "Trajectory",
    "ConfigError",
    "BlowUpError",
    "StabilityError",
    "ProjectionWarning",
    "CompatibilityWarning",
    "init",
    "step",
    "run",
    "l2_norm",
]

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class StabilityError(ConfigError):
    pass


class BlowUpError(FloatingPointError):
    def __init__(self, t, norms):
        super().__init__(f"solution blew up at t = {t:.6g} (last finite norms {norms})")
        self.t = t
        self.norms = norms


class ProjectionWarning(UserWarning):
    pass


class CompatibilityWarning(UserWarning):
    pass


@dataclass(eq=False)
class SolverConfig:
    grid: GridSpec
    b: float = 0.0
    T: float = 1.0
    linear_only: bool = False
    # f(t, X, Y) -> array on the (n_x, n_y) mesh
    forcing: Callable | None = None
    cfl: float = 0.5
    sponge: bool = True
    scheme: str = "cn-ab2"

    def __post_init__(self):
        if self.T < 0:
            raise ConfigError("final time T must be non-negative")
        if self.scheme != "cn-ab2":
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        self._factors = {}

    @property
    def dt(self) -> float:
        return self.grid.dt

    @property
    def basis(self):
        return self.grid.basis

    def mode_matrices(self, dt: float):
        if dt not in self._factors:
            try:
                mats = [
                    implicit_mode_matrix(lam, self.b, self.grid, dt, self.sponge).factorize()
                    for lam in self.grid.basis.eigenvalues
                ]
            except SingularMatrixError as e:
                raise SingularMatrixError(f"implicit mode matrix is singular: {e}") from e
            self._factors[dt] = mats
        return self._factors[dt]

    def forcing_modes(self, t: float) -> np.ndarray | None:
        if self.forcing is None:
            return None
        X, Y = self.grid.mesh()
        return forward_transform(np.asarray(self.forcing(t, X, Y), dtype=float), self.basis)


@dataclass
class SolverState:
    t: float
    coeffs: np.ndarray
    nl_prev: np.ndarray | None = None
    n: int = 0

    def field(self, grid: GridSpec) -> np.ndarray:
        return inverse_transform(self.coeffs, grid.basis)


def l2_norm(coeffs: np.ndarray, grid: GridSpec) -> float:
    """Discrete L2 norm: trapezoid in x, Parseval in y."""
    return math.sqrt(float(grid.trapezoid_weights() @ np.sum(coeffs**2, axis=1)))


def _inflow_modes(mu, t: float, grid: GridSpec) -> np.ndarray:
    if mu is None:
        return np.zeros(grid.basis.n_modes)
    if isinstance(mu, BoundaryTrace):
        if mu.basis != grid.basis:
            raise ConfigError("boundary trace basis does not match the grid basis")
        vals = mu.at(t)
    else:
        vals = np.broadcast_to(mu(t, grid.y), grid.y.shape)
    return forward_transform(np.asarray(vals, dtype=float), grid.basis)


def _project(u0, grid: GridSpec):
    """Nodal samples and mode coefficients of the initial datum.

    Callables are projected by oversampled quadrature, so data that is not
    representable in the basis (e.g. violating the transverse boundary
    conditions) is altered; the nodal change is returned as the residual.
    """
    if callable(u0):
        from .transverse import TransverseBasis

        fine = TransverseBasis(grid.basis.case, grid.L, 4 * grid.basis.n_modes + 1)
        Xf, Yf = np.meshgrid(grid.x, fine.nodes, indexing="ij")
        vals = np.broadcast_to(u0(Xf, Yf), Xf.shape)
        coeffs = (vals * fine.node_weight) @ grid.basis.evaluate(fine.nodes)
        X, Y = grid.mesh()
        samples = np.broadcast_to(u0(X, Y), X.shape).astype(float)
    else:
        samples = np.asarray(u0, dtype=float)
        if samples.shape != (grid.n_x, grid.basis.n_nodes):
            raise ConfigError(
                f"initial field has shape {samples.shape}, grid expects "
                f"({grid.n_x}, {grid.basis.n_nodes})"
            )
        coeffs = forward_transform(samples, grid.basis)
    resid = samples - inverse_transform(coeffs, grid.basis)
    rnorm = math.sqrt(float(grid.trapezoid_weights() @ np.sum(resid**2, axis=1) * grid.basis.node_weight))
    return samples, coeffs, rnorm


def init(config: SolverConfig, u0, mu=None, tol: float = 1e-8) -> SolverState:
    """Initial state: ``u0`` projected onto the transverse basis.

    ``u0`` is an ``(n_x, n_y)`` nodal array or a callable ``u0(X, Y)``.
    """
    grid = config.grid
    samples, coeffs, rnorm = _project(u0, grid)
    scale = max(1.0, float(np.max(np.abs(samples))))
    if rnorm > tol * scale:
        warnings.warn(
            f"initial datum is not representable in the case-{grid.basis.case.value} basis; "
            f"projection residual {rnorm:.3e}",
            ProjectionWarning,
            stacklevel=2,
        )
    g0 = _inflow_modes(mu, 0.0, grid)
    mismatch = float(np.sqrt(np.sum((coeffs[0] - g0) ** 2)))
    if mismatch > tol * scale:
        warnings.warn(
            f"order-0 compatibility u0(0, y) = mu(0, y) violated by {mismatch:.3e}",
            CompatibilityWarning,
            stacklevel=2,
        )
    state = SolverState(0.0, coeffs)
    if not config.linear_only:
        _check_cfl(config, state, startup=True)
    return state


def _check_cfl(config: SolverConfig, state: SolverState, startup: bool = False):
    umax = float(np.max(np.abs(state.field(config.grid)))) if state.coeffs.size else 0.0
    if umax == 0.0:
        return
    limit = config.cfl * config.grid.dx / umax
    if config.dt > limit:
        msg = f"dt = {config.dt:.3g} exceeds the nonlinear stability bound {limit:.3g} at t = {state.t:.4g}"
        if startup:
            raise StabilityError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)


def nonlinear_modes(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    u = inverse_transform(coeffs, grid.basis)
    return forward_transform(nonlinear_term(u, grid), grid.basis)


def step(state: SolverState, config: SolverConfig, mu=None) -> SolverState:
    """Advance one time step of size ``config.dt``."""
    grid = config.grid
    dt = config.dt
    c = state.coeffs
    t1 = state.t + dt
    rhs = c - 0.5 * dt * apply_mode_operators(c, config.b, grid, sponge=config.sponge)
    nl = None
    if not config.linear_only:
        nl = nonlinear_modes(c, grid)
        ext = nl if state.nl_prev is None else 1.5 * nl - 0.5 * state.nl_prev
        rhs -= dt * ext
    if config.forcing is not None:
        rhs += 0.5 * dt * (config.forcing_modes(state.t) + config.forcing_modes(t1))
    r0, r1 = closure_rows(grid.n_x)
    rhs[r0] = _inflow_modes(mu, t1, grid)
    rhs[r1] = 0.0
    mats = config.mode_matrices(dt)
    new = np.empty_like(rhs)
    for l, m in enumerate(mats):
        new[:, l] = m.solve(rhs[:, l])
    if not np.all(np.isfinite(new)):
        raise BlowUpError(t1, {"l2": l2_norm(c, grid)})
    return SolverState(t1, new, nl, state.n + 1)


@dataclass
class Trajectory:
    """Snapshots plus per-step scalar diagnostics of one run."""

    config: SolverConfig
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    step_times: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    mu: object = None

    @property
    def grid(self) -> GridSpec:
        return self.config.grid

    def field(self, k: int) -> np.ndarray:
        return inverse_transform(self.snapshots[k], self.grid.basis)

    def series(self, name: str) -> np.ndarray:
        return np.asarray(self.diagnostics[name])

    def forcing_modes(self, k: int) -> np.ndarray:
        """Right-hand side F = f - u u_x - sigma_s u seen by snapshot ``k``."""
        c = self.snapshots[k]
        cfg = self.config
        out = np.zeros_like(c)
        f = cfg.forcing_modes(self.times[k])
        if f is not None:
            out += f
        if not cfg.linear_only:
            out -= nonlinear_modes(c, self.grid)
        if cfg.sponge:
            out -= self.grid.sponge[:, None] * c
        return out


def run(
    config: SolverConfig,
    u0,
    mu=None,
    snapshot_every: int = 1,
    monitors: dict | None = None,
    check_every: int = 50,
) -> Trajectory:
    """Integrate to ``config.T``, recording snapshots every ``snapshot_every`` steps.

    ``monitors`` maps names to ``fn(state) -> float``; they are evaluated
    after every step alongside the unweighted L2 norm.
    """
    monitors = dict(monitors or {})
    grid = config.grid
    state = init(config, u0, mu)
    n_steps = int(round(config.T / config.dt))
    if n_steps and abs(n_steps * config.dt - config.T) > 1e-9 * max(1.0, config.T):
        raise ConfigError(f"T = {config.T} is not a multiple of dt = {config.dt}")
    traj = Trajectory(config, mu=mu)
    traj.diagnostics = {"l2": [], **{k: [] for k in monitors}}

    def record(st):
        traj.step_times.append(st.t)
        traj.diagnostics["l2"].append(l2_norm(st.coeffs, grid))
        for k, fn in monitors.items():
            traj.diagnostics[k].append(float(fn(st)))

    record(state)
    traj.times.append(state.t)
    traj.snapshots.append(state.coeffs.copy())
    for n in range(1, n_steps + 1):
        try:
            state = step(state, config, mu)
        except BlowUpError:
            raise
        except SingularMatrixError as e:
            raise SingularMatrixError(f"step {n}: {e}") from e
        record(state)
        if n % snapshot_every == 0 or n == n_steps:
            traj.times.append(state.t)
            traj.snapshots.append(state.coeffs.copy())
        if not config.linear_only and check_every and n % check_every == 0:
            _check_cfl(config, state)
    log.debug("run finished: %d steps, final l2 %.6e", n_steps, traj.diagnostics["l2"][-1])
    return traj
