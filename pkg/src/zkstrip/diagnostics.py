"""Weighted norms, energy-identity residuals, Steklov and interpolation checks,
decay constants and decay-rate fits.

Transverse integrals are evaluated in mode space (Parseval), axial integrals
by the trapezoid rule.  Fields are passed as nodal arrays ``u[n_x, n_y]``
together with their :class:`~zkstrip.operators.GridSpec`.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.stats import qmc

from .operators import GridSpec
from .transverse import BCCase, TransverseBasis, forward_transform
from .weights import WeightFunction, eta_x0_derivs, weight_arrays

__all__ = [
    "DiagnosticsError",
    "weighted_norm",
    "weighted_norm_coeffs",
    "EnergyReport",
    "energy_identity_residual",
    "steklov_nodes",
    "steklov_check",
    "random_steklov_family",
    "gaussian_family",
    "interpolation_ratio",
    "interpolation_ratio_monitor",
    "DecayParams",
    "decay_params",
    "DecayFit",
    "fit_decay",
    "interior_norm",
    "interior_monitor",
]

IDENTITIES = ("2.4", "2.5", "2.6", "2.7")


class DiagnosticsError(ValueError):
    pass


def _coeffs(u, grid: GridSpec) -> np.ndarray:
    return forward_transform(np.asarray(u, dtype=float), grid.basis)


def _x_integral(grid: GridSpec, g: np.ndarray) -> float:
    return float(grid.trapezoid_weights() @ g)


# -- weighted norms ---------------------------------------------------------


def _sobolev_density(c: np.ndarray, grid: GridSpec, k: int) -> np.ndarray:
    """Sum over |alpha| <= k of the y-integral of (d^alpha u)^2, per axial node."""
    if k not in (0, 1, 2):
        raise DiagnosticsError("weighted norms support derivative order 0, 1 or 2")
    lam = grid.basis.eigenvalues
    dens = np.sum(c**2, axis=1)
    if k >= 1:
        cx = grid.D1 @ c
        dens = dens + np.sum(cx**2, axis=1) + c**2 @ lam
    if k >= 2:
        cxx = grid.D2 @ c
        dens = dens + np.sum(cxx**2, axis=1) + cx**2 @ lam + c**2 @ lam**2
    return dens


def weighted_norm_coeffs(c: np.ndarray, grid: GridSpec, w: WeightFunction, k: int = 0) -> float:
    rho = w(grid.x)
    return math.sqrt(_x_integral(grid, _sobolev_density(c, grid, k) * rho))


def weighted_norm(u, grid: GridSpec, w: WeightFunction, k: int = 0) -> float:
    """(sum_{|alpha| <= k} iint (d^alpha u)^2 rho dx dy)^(1/2)."""
    return weighted_norm_coeffs(_coeffs(u, grid), grid, w, k)


# -- energy identities --------------------------------------------------------


@dataclass
class EnergyReport:
    """Per-step terms of a discrete energy identity and its residual."""

    identity: str
    weight: str
    x0: float | None
    times: list
    terms: dict
    residual: list
    traces: dict
    notes: list = field(default_factory=list)

    def term_names(self):
        return list(self.terms)

    def scale(self) -> float:
        m = 0.0
        for v in self.terms.values():
            if len(v):
                m = max(m, float(np.max(np.abs(v))))
        return m

    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual))) if self.residual else 0.0

    def relative_residual(self) -> float:
        s = self.scale()
        return self.max_residual() / s if s > 0 else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["max_residual"] = self.max_residual()
        d["relative_residual"] = self.relative_residual()
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(_plain(self.to_dict()), **kw)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def _weight_profile(grid: GridSpec, w: WeightFunction, x0: float | None) -> np.ndarray:
    """rho (times eta_x0 when localized) and its first three derivatives, shape (4, n_x)."""
    r = weight_arrays(w, grid.x)
    if x0 is None:
        return r
    e = eta_x0_derivs(grid.x, x0)
    return np.stack(
        [
            r[0] * e[0],
            r[1] * e[0] + r[0] * e[1],
            r[2] * e[0] + 2 * r[1] * e[1] + r[0] * e[2],
            r[3] * e[0] + 3 * r[2] * e[1] + 3 * r[1] * e[2] + r[0] * e[3],
        ]
    )


def energy_identity_residual(
    snapshots,
    times,
    forcing,
    grid: GridSpec,
    b: float,
    w: WeightFunction,
    identity: str = "2.4",
    x0: float | None = None,
) -> EnergyReport:
    """Evaluate every term of a weighted energy identity along a trajectory.

    ``snapshots`` are mode-coefficient arrays at uniformly spaced ``times``;
    ``forcing`` gives the matching coefficients of F = v_t + b v_x + v_xxx + v_xyy
    (a list of arrays, or ``None`` for F = 0).  Time derivatives of the
    recorded integrals use centred differences, so the report covers the
    interior snapshots only.

    Identities: ``2.4`` (L2, with inflow trace), ``2.5`` (H1, with inflow
    trace), ``2.6`` / ``2.7`` (the same localized by eta_x0, no trace).
    For ``2.4`` the boundary terms that appear when v(t, 0, y) != 0 are
    reported separately as ``inflow``; ``2.5`` assumes a vanishing trace.
    """
    identity = str(identity)
    if identity not in IDENTITIES:
        raise DiagnosticsError(f"unknown identity {identity!r}; choose from {IDENTITIES}")
    localized = identity in ("2.6", "2.7")
    if localized and x0 is None:
        raise DiagnosticsError(f"identity {identity} needs the localization point x0")
    if not localized:
        x0 = None
    snaps = [np.asarray(s, dtype=float) for s in snapshots]
    times = np.asarray(times, dtype=float)
    if len(snaps) != len(times) or len(snaps) < 3:
        raise DiagnosticsError("need at least three snapshots with matching times")
    dts = np.diff(times)
    if not np.allclose(dts, dts[0], rtol=1e-8, atol=1e-14):
        raise DiagnosticsError("energy identities need uniformly spaced snapshots")
    if forcing is None:
        forcing = [np.zeros_like(s) for s in snaps]
    if len(forcing) != len(snaps):
        raise DiagnosticsError("forcing must be given for every snapshot")
    dt = dts[0]
    r = _weight_profile(grid, w, x0)
    lam = grid.basis.eigenvalues
    W = grid.trapezoid_weights()
    first = identity in ("2.4", "2.6")

    def energy(c):
        if first:
            dens = np.sum(c**2, axis=1)
        else:
            cx = grid.D1 @ c
            dens = np.sum(cx**2, axis=1) + c**2 @ lam
        return float(W @ (dens * r[0]))

    E = np.array([energy(c) for c in snaps])
    names = ["d/dt", "trace", "bulk", "rho'''", "inflow", "rhs"]
    if localized:
        names = ["d/dt", "bulk", "rho'''", "rhs"]
    terms = {n: [] for n in names}
    traces = {"v_x^2|x=0": [], "v|x=0": []}
    residual = []
    notes = []
    for k in range(1, len(snaps) - 1):
        c, F = snaps[k], np.asarray(forcing[k], dtype=float)
        cx = grid.D1 @ c
        cxx = grid.D2 @ c
        v2 = np.sum(c**2, axis=1)
        vx2 = np.sum(cx**2, axis=1)
        vy2 = c**2 @ lam
        ddt = (E[k + 1] - E[k - 1]) / (2 * dt)
        if first:
            bulk = W @ ((3 * vx2 + vy2 - b * v2) * r[1])
            third = -(W @ (v2 * r[3]))
            rhs = 2 * (W @ (np.sum(F * c, axis=1) * r[0]))
            trace = r[0][0] * vx2[0]
            inflow = (
                -b * v2[0] * r[0][0]
                - 2 * np.dot(c[0], cxx[0]) * r[0][0]
                + 2 * np.dot(c[0], cx[0]) * r[1][0]
                - v2[0] * r[2][0]
                + vy2[0] * r[0][0]
            )
        else:
            vxx2 = np.sum(cxx**2, axis=1)
            vxy2 = cx**2 @ lam
            vyy2 = c**2 @ lam**2
            bulk = W @ ((3 * vxx2 + 4 * vxy2 + vyy2 - b * vx2 - b * vy2) * r[1])
            third = -(W @ ((vx2 + vy2) * r[3]))
            fvxx = np.sum(F * cxx, axis=1)
            fvx = np.sum(F * cx, axis=1)
            fvyy = -(F * c) @ lam
            rhs = -2 * (W @ (fvxx * r[0] + fvx * r[1] + fvyy * r[0]))
            trace = (
                vxx2[0] * r[0][0]
                + 2 * np.dot(cxx[0], cx[0]) * r[1][0]
                - vx2[0] * r[2][0]
                + b * vx2[0] * r[0][0]
            )
            inflow = 0.0
        if localized:
            vals = {"d/dt": ddt, "bulk": bulk, "rho'''": third, "rhs": rhs}
            res = ddt + bulk + third - rhs
        else:
            vals = {"d/dt": ddt, "trace": trace, "bulk": bulk, "rho'''": third, "inflow": inflow, "rhs": rhs}
            res = ddt + trace + bulk + third + inflow - rhs
        for n, v in vals.items():
            terms[n].append(float(v))
        residual.append(float(res))
        traces["v_x^2|x=0"].append(float(vx2[0]))
        traces["v|x=0"].append(float(math.sqrt(v2[0])))
    if identity == "2.5" and max(traces["v|x=0"], default=0.0) > 0:
        notes.append("v(t,0,y) is not zero; identity 2.5 omits the corresponding boundary terms")
    return EnergyReport(identity, str(w), x0, times[1:-1].tolist(), terms, residual, traces, notes)


def trajectory_energy_report(traj, w: WeightFunction, identity: str = "2.4", x0: float | None = None) -> EnergyReport:
    """:func:`energy_identity_residual` on every snapshot of a solver trajectory."""
    forcing = [traj.forcing_modes(k) for k in range(len(traj.snapshots))]
    return energy_identity_residual(
        traj.snapshots, traj.times, forcing, traj.grid, traj.config.b, w, identity, x0
    )


# -- Steklov ---------------------------------------------------------------


def steklov_nodes(n: int, L: float) -> np.ndarray:
    """Chebyshev-Lobatto nodes on [0, L], the sampling grid for :func:`steklov_check`."""
    k = np.arange(n)
    return 0.5 * L * (1.0 - np.cos(np.pi * k / (n - 1)))


def steklov_check(psi, sigma: int, L: float, tol: float = 1e-10) -> float:
    """Ratio int psi^2 / ((sigma L^2 / pi^2) int psi'^2) for samples on :func:`steklov_nodes`.

    The samples are interpolated by a Chebyshev polynomial; both integrals
    are then exact for that interpolant.
    """
    psi = np.asarray(psi, dtype=float)
    if sigma not in (1, 4):
        raise DiagnosticsError("sigma must be 1 (both ends pinned) or 4 (y = 0 pinned)")
    y = steklov_nodes(len(psi), L)
    p = Chebyshev.fit(y, psi, deg=len(psi) - 1, domain=[0.0, L])
    scale = max(float(np.max(np.abs(psi))), 1e-300)
    if abs(p(0.0)) > tol * scale:
        raise DiagnosticsError(f"psi(0) = {p(0.0):.3e} but the inequality requires psi(0) = 0")
    if sigma == 1 and abs(p(L)) > tol * scale:
        raise DiagnosticsError(f"psi(L) = {p(L):.3e} but sigma = 1 requires psi(L) = 0")
    num = (p * p).integ(lbnd=0.0)(L)
    dp = p.deriv()
    den = sigma * L**2 / math.pi**2 * (dp * dp).integ(lbnd=0.0)(L)
    if den == 0:
        return 0.0
    return float(num / den)


def random_steklov_family(rng: np.random.Generator, count: int, sigma: int, L: float, n_nodes: int = 48):
    """Random admissible test functions sampled on :func:`steklov_nodes`.

    Mixes low trigonometric modes of the matching class with polynomial
    bumps vanishing where the class requires.
    """
    y = steklov_nodes(n_nodes, L)
    out = []
    for _ in range(count):
        k = rng.integers(1, 6, size=3)
        a = rng.normal(size=3)
        if sigma == 1:
            trig = sum(ai * np.sin(ki * math.pi * y / L) for ai, ki in zip(a, k))
            poly = y * (L - y) * np.polynomial.polynomial.polyval(y / L, rng.normal(size=4))
        else:
            trig = sum(ai * np.sin((ki - 0.5) * math.pi * y / L) for ai, ki in zip(a, k))
            trig = trig + rng.normal() * np.sin(int(rng.integers(1, 6)) * math.pi * y / L)
            poly = y * np.polynomial.polynomial.polyval(y / L, rng.normal(size=4))
        out.append(trig * rng.uniform(0, 1) + poly * rng.uniform(0, 1))
    return out


# -- interpolation inequalities --------------------------------------------


def _fine_basis(grid: GridSpec) -> TransverseBasis:
    n = 4 * grid.basis.n_modes + 1
    return TransverseBasis(grid.basis.case, grid.L, n)


def interpolation_ratio(
    c: np.ndarray,
    grid: GridSpec,
    inequality: str,
    rho1: WeightFunction | None = None,
    rho2: WeightFunction | None = None,
) -> float:
    """Observed LHS / RHS of an interpolation inequality with the constant dropped.

    ``1.10``: ||phi rho1^{1/4} rho2^{1/4}||_4 against
    ||Dphi rho1^{1/2}||^{1/2} ||phi rho2^{1/2}||^{1/2} + ||phi rho2^{1/2}||;
    ``1.11``: int phi^2|_{x=0} dy against
    (iint phi_x^2 rho')^{1/2} (iint phi^2 rho)^{1/2} + iint phi^2 rho  (rho = rho1);
    ``1.12``: ||phi rho^{1/2}||_inf against ||phi rho^{1/2}||_{H^2}  (rho = rho1).
    A vanishing field gives 0.
    """
    rho1 = rho1 or WeightFunction.constant()
    rho2 = rho2 or rho1
    c = np.asarray(c, dtype=float)
    if not np.any(c):
        return 0.0
    x = grid.x
    lam = grid.basis.eigenvalues
    if inequality == "1.10":
        fine = _fine_basis(grid)
        phi = c @ grid.basis.evaluate(fine.nodes).T
        lhs = (_x_integral(grid, np.sum(phi**4, axis=1) * fine.node_weight * np.sqrt(rho1(x) * rho2(x)))) ** 0.25
        cx = grid.D1 @ c
        a = math.sqrt(_x_integral(grid, (np.sum(cx**2, axis=1) + c**2 @ lam) * rho1(x)))
        bn = math.sqrt(_x_integral(grid, np.sum(c**2, axis=1) * rho2(x)))
        rhs = math.sqrt(a * bn) + bn
    elif inequality == "1.11":
        lhs = float(np.sum(c[0] ** 2))
        cx = grid.D1 @ c
        a = _x_integral(grid, np.sum(cx**2, axis=1) * rho1(x, 1))
        bn = _x_integral(grid, np.sum(c**2, axis=1) * rho1(x))
        rhs = math.sqrt(a * bn) + bn
    elif inequality == "1.12":
        g = c * np.sqrt(rho1(x))[:, None]
        fine = _fine_basis(grid)
        lhs = float(np.max(np.abs(g @ grid.basis.evaluate(fine.nodes).T)))
        rhs = weighted_norm_coeffs(g, grid, WeightFunction.constant(), 2)
    else:
        raise DiagnosticsError(f"unknown inequality {inequality!r}")
    return float(lhs / rhs) if rhs > 0 else 0.0


def gaussian_family(grid: GridSpec, count: int, seed: int = 0):
    """Smooth decaying test fields g(x) (cos(th) psi_1(y) + sin(th) psi_2(y)) in mode space.

    g is a Gaussian exp(-((x - c)/w)^2) with centre c in [-1, 6] and width w
    in [0.75, 1.5], so that part of the family has a sizeable trace at x = 0.
    Parameters come from a scrambled Halton sequence, so a family of
    ``2 count`` fields contains the first ``count``.
    """
    sampler = qmc.Halton(d=3, seed=seed)
    pts = sampler.random(count)
    x = grid.x
    m = min(2, grid.basis.n_modes)
    out = []
    for p in pts:
        centre = -1.0 + 7.0 * p[0]
        width = 0.75 + 0.75 * p[1]
        th = 0.5 * math.pi * p[2]
        prof = np.exp(-(((x - centre) / width) ** 2))
        c = np.zeros((grid.n_x, grid.basis.n_modes))
        c[:, :m] = prof[:, None] * np.array([math.cos(th), math.sin(th)])[None, :m]
        out.append(c)
    return out


def interpolation_ratio_monitor(family, grid: GridSpec, inequality: str, rho1=None, rho2=None) -> float:
    """Largest observed ratio over a family of mode-coefficient fields."""
    return max((interpolation_ratio(c, grid, inequality, rho1, rho2) for c in family), default=0.0)


# -- decay constants ------------------------------------------------------------


@dataclass
class DecayParams:
    case: str
    L: float
    b: float
    alpha: float
    sigma: int
    c0: float
    L0: float
    alpha0: float
    beta: float
    admissible: bool
    eps0_policy: str = (
        "smallness threshold depends on an unspecified constant; runs report the observed margin"
    )

    @property
    def rate(self) -> float:
        """Predicted decay exponent alpha * beta of the weighted L2 norm squared."""
        return self.alpha * self.beta

    def predicted_bound(self, t):
        return np.exp(-self.rate * np.asarray(t, dtype=float))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rate"] = self.rate
        return _plain(d)


def decay_params(case, L: float, b: float, alpha: float) -> DecayParams:
    """Thresholds L0, alpha0 and rate beta of the weighted decay estimate."""
    case = BCCase.parse(case)
    if case not in (BCCase.DIRICHLET_DIRICHLET, BCCase.DIRICHLET_NEUMANN):
        raise DiagnosticsError(f"decay constants exist for cases a and c only, not {case.value}")
    if not L > 0 or not alpha > 0:
        raise DiagnosticsError("need L > 0 and alpha > 0")
    sigma = 1 if case is BCCase.DIRICHLET_DIRICHLET else 4
    c0 = math.pi**2 / (2 * sigma)
    L0 = math.inf if b <= 0 else 0.5 * math.sqrt(c0 / b)
    alpha0 = math.sqrt(c0) / (8 * L)
    beta = c0 / (4 * L**2)
    return DecayParams(case.value, L, b, alpha, sigma, c0, L0, alpha0, beta, alpha <= alpha0 and L < L0)


@dataclass
class DecayFit:
    gamma: float
    log_amplitude: float
    n_points: int
    bound_ok: bool | None = None
    worst_ratio: float | None = None


def fit_decay(t, E, window=None, rate: float | None = None, tol: float = 0.05) -> DecayFit:
    """Least-squares fit log E = log A - gamma t, plus the bound E <= E0 exp(-rate t) (1 + tol).

    ``window`` is an optional ``(t_start, t_end)``; the bound check always
    uses every sample.
    """
    t = np.asarray(t, dtype=float)
    E = np.asarray(E, dtype=float)
    if t.shape != E.shape or len(t) < 2:
        raise DiagnosticsError("need at least two matching samples")
    sel = np.ones_like(t, dtype=bool)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
    if sel.sum() < 2:
        raise DiagnosticsError("fit window holds fewer than two samples")
    if np.any(E[sel] <= 0) or not np.all(np.isfinite(E[sel])):
        raise DiagnosticsError("decay fit needs positive finite values")
    slope, icept = np.polyfit(t[sel], np.log(E[sel]), 1)
    fit = DecayFit(float(-slope), float(icept), int(sel.sum()))
    if rate is not None:
        ratio = E / (E[0] * np.exp(-rate * (t - t[0])))
        fit.worst_ratio = float(np.max(ratio))
        fit.bound_ok = bool(fit.worst_ratio <= 1 + tol)
    return fit


# -- interior norms ------------------------------------------------------------


def _integral_from(x: np.ndarray, f: np.ndarray, x0: float) -> float:
    """Trapezoid integral of samples ``f`` over [x0, x[-1]] with linear interpolation at x0."""
    if x0 <= x[0]:
        return float(np.trapezoid(f, x))
    i = int(np.searchsorted(x, x0, side="right"))
    if i >= len(x):
        return 0.0
    th = (x0 - x[i - 1]) / (x[i] - x[i - 1])
    f0 = (1 - th) * f[i - 1] + th * f[i]
    head = 0.5 * (f0 + f[i]) * (x[i] - x0)
    return float(head + np.trapezoid(f[i:], x[i:]))


def interior_norm(u, grid: GridSpec, x0: float, y0: float, w: WeightFunction, alpha=(0, 0), n_quad: int | None = None) -> float:
    """Weighted L2 norm of d_x^a d_y^b u over (x0, x_max) x (y0, L - y0)."""
    ax, ay = (int(a) for a in alpha)
    if ax < 0 or ay < 0 or ax + ay > 4:
        raise DiagnosticsError("interior norms support derivatives of total order <= 4")
    if not 0 <= y0 < grid.L / 2:
        raise DiagnosticsError("need 0 <= y0 < L/2")
    if not 0 <= x0 < grid.x_max:
        raise DiagnosticsError("x0 must lie inside the grid")
    c = _coeffs(u, grid)
    cd = grid.dmat(ax) @ c
    if y0 == 0.0:
        dens = cd**2 @ (grid.basis.eigenvalues ** ay)
    else:
        nq = n_quad or 2 * grid.basis.n_modes + 16
        z, wq = np.polynomial.legendre.leggauss(nq)
        half = 0.5 * (grid.L - 2 * y0)
        yq = y0 + half * (z + 1)
        vals = cd @ grid.basis.evaluate(yq, ay).T
        dens = (vals**2) @ (wq * half)
    return math.sqrt(max(_integral_from(grid.x, dens * w(grid.x), x0), 0.0))


def interior_monitor(traj, x0: float, y0: float, w: WeightFunction, n_max: int = 2) -> dict:
    """Interior weighted norms of d_x^n u, n = 0..n_max, at every snapshot."""
    out = {n: [] for n in range(n_max + 1)}
    for k in range(len(traj.snapshots)):
        u = traj.field(k)
        for n in out:
            out[n].append(interior_norm(u, traj.grid, x0, y0, w, (n, 0)))
    return {n: np.asarray(v) for n, v in out.items()}
