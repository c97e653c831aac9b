import csv

import numpy as np
import pytest

from zkstrip.compatibility import (
    CompatibilityError,
    StackVariant,
    check_compatibility,
    phi_stack,
    phi_tilde_closed_form,
    phi_tilde_stack,
    trace_time_derivatives,
)
from zkstrip.manufactured import GaussianProfile, ManufacturedSolution
from zkstrip.operators import GridSpec
from zkstrip.solver import SolverConfig, init, l2_norm, step
from zkstrip.transverse import BoundaryTrace, TransverseBasis, forward_transform


def grid(n_x=101, x_max=10.0, case="b", n_modes=4, dt=0.01):
    return GridSpec(x_max, n_x, TransverseBasis(case, 1.0, n_modes), dt=dt)


def _rel_err(a, b, g):
    return l2_norm(forward_transform(a - b, g.basis), g) / l2_norm(forward_transform(b, g.basis), g)


class TestPhiStack:
    def test_order_zero_is_datum(self):
        g = grid()
        X, _ = g.mesh()
        st = phi_stack(np.exp(-X), 0.0, 0, g)
        np.testing.assert_array_equal(st[0], np.exp(-X))
        assert st.variant is StackVariant.NONLINEAR

    def test_first_order_exponential(self):
        errs = []
        for n in (51, 101, 201):
            g = grid(n_x=n)
            X, _ = g.mesh()
            st = phi_stack(np.exp(-X), 0.0, 1, g)
            errs.append(_rel_err(st[1], np.exp(-X) + np.exp(-2 * X), g))
        assert errs[0] <= 0.02
        assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5

    def test_boundary_trace_of_first_order(self):
        g = grid(n_x=401)
        X, _ = g.mesh()
        st = phi_stack(np.exp(-X), 0.0, 1, g)
        np.testing.assert_allclose(st.boundary(1), 2.0, rtol=1e-3)

    def test_linear_variant_matches_tilde_without_forcing(self):
        g = grid(case="a")
        X, Y = g.mesh()
        u0 = np.exp(-((X - 4) ** 2)) * np.sin(np.pi * Y)
        a = phi_stack(u0, 0.5, 2, g, quadratic=False)
        zeros = [np.zeros_like(u0)] * 2
        b = phi_tilde_stack(u0, zeros, 0.5, 2, g)
        for m in range(3):
            np.testing.assert_allclose(a[m], b[m], atol=1e-12)

    def test_order_cap(self):
        g = grid()
        u0 = np.zeros((101, 4))
        with pytest.raises(CompatibilityError, match="cap"):
            phi_stack(u0, 0.0, 3, g)
        assert phi_stack(u0, 0.0, 3, g, max_order=3).order == 3
        with pytest.raises(CompatibilityError):
            phi_stack(u0, 0.0, -1, g)

    def test_shape_checked(self):
        with pytest.raises(CompatibilityError, match="shape"):
            phi_stack(np.zeros((10, 4)), 0.0, 1, grid())

    def test_non_finite_rejected(self):
        u0 = np.zeros((101, 4))
        u0[3, 1] = np.nan
        with pytest.raises(CompatibilityError, match="non-finite"):
            phi_stack(u0, 0.0, 1, grid())

    def test_to_csv(self, tmp_path):
        g = grid(n_x=11, n_modes=2)
        X, _ = g.mesh()
        phi_stack(np.exp(-X), 0.0, 1, g).to_csv(tmp_path / "stack.csv")
        with open(tmp_path / "stack.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x", "y", "m", "value"]
        assert len(rows) == 1 + 2 * 11 * 2


class TestPhiTilde:
    def setup_method(self):
        self.g = grid(case="a", n_modes=6)
        X, Y = self.g.mesh()
        self.u0 = np.exp(-((X - 4) ** 2)) * np.sin(np.pi * Y) * (1 + 0.3 * np.cos(X))
        self.f = [
            np.exp(-((X - 5) ** 2)) * np.sin(2 * np.pi * Y),
            np.exp(-((X - 3) ** 2) / 2) * np.sin(3 * np.pi * Y),
        ]

    def test_recursion_matches_closed_form(self):
        a = phi_tilde_stack(self.u0, self.f, 0.7, 2, self.g)
        b = phi_tilde_closed_form(self.u0, self.f, 0.7, 2, self.g)
        c = phi_tilde_stack(self.u0, self.f, 0.7, 2, self.g, closed_form=True)
        for m in range(3):
            scale = np.max(np.abs(a[m]))
            assert np.max(np.abs(a[m] - b[m])) <= 1e-10 * scale
            np.testing.assert_array_equal(b[m], c[m])

    def test_missing_forcing_derivatives(self):
        with pytest.raises(CompatibilityError, match="time derivatives"):
            phi_tilde_stack(self.u0, self.f[:1], 0.0, 2, self.g)

    def test_linear_variant(self):
        assert phi_tilde_stack(self.u0, self.f, 0.0, 1, self.g).variant is StackVariant.LINEAR


class TestTraces:
    def test_polynomial_trace_derivatives(self):
        basis = TransverseBasis("a", 1.0, 3)
        t = np.linspace(0, 0.5, 11)
        mu = BoundaryTrace.from_function(lambda tt, y: (1 + 2 * tt + 3 * tt**2) * np.sin(np.pi * y), t, basis)
        d = trace_time_derivatives(mu, 2)
        s = np.sin(np.pi * basis.nodes)
        np.testing.assert_allclose(d[0], s, atol=1e-14)
        np.testing.assert_allclose(d[1], 2 * s, atol=1e-10)
        np.testing.assert_allclose(d[2], 6 * s, atol=1e-8)

    def test_too_few_samples(self):
        basis = TransverseBasis("a", 1.0, 3)
        mu = BoundaryTrace(np.array([0.0, 0.1]), np.zeros((2, 3)), basis)
        with pytest.raises(CompatibilityError):
            trace_time_derivatives(mu, 2)

    def test_manufactured_data_is_compatible(self):
        ms = ManufacturedSolution(GaussianProfile(1.0, 1.0), "a", 1.0)
        res = []
        for n_x, dt in ((101, 1e-3), (201, 2.5e-4)):
            g = GridSpec(10.0, n_x, TransverseBasis("a", 1.0, 4))
            X, Y = g.mesh()
            st = phi_tilde_stack(ms.initial(X, Y), [ms.forcing(0.0, X, Y)], 0.0, 1, g)
            mu = BoundaryTrace.from_function(ms.inflow, dt * np.arange(4), g.basis)
            res.append(check_compatibility(mu, st))
        assert res[1][0] <= 1e-12
        assert res[1][1] < res[0][1] / 3

    def test_basis_mismatch(self):
        g = grid(case="a")
        st = phi_stack(np.zeros((101, 4)), 0.0, 1, g)
        mu = BoundaryTrace(np.array([0.0, 0.1, 0.2]), np.zeros((3, 4)), TransverseBasis("c", 1.0, 4))
        with pytest.raises(CompatibilityError, match="basis"):
            check_compatibility(mu, st)

    def test_order_beyond_stack(self):
        g = grid(case="a")
        st = phi_stack(np.zeros((101, 4)), 0.0, 1, g)
        mu = BoundaryTrace(np.array([0.0, 0.1, 0.2]), np.zeros((3, 4)), g.basis)
        with pytest.raises(CompatibilityError):
            check_compatibility(mu, st, 2)


class TestSolverConsistency:
    def test_first_step_matches_first_order_stack(self):
        ms = ManufacturedSolution(GaussianProfile(5.0, 1.0), "a", 1.0)
        res = []
        for n_x, dt in ((101, 4e-3), (201, 1e-3)):
            g = GridSpec(20.0, n_x, TransverseBasis("a", 1.0, 4), dt=dt)
            X, Y = g.mesh()
            cfg = SolverConfig(g, T=dt, linear_only=True, forcing=ms.forcing)
            s0 = init(cfg, ms.initial, ms.inflow)
            s1 = step(s0, cfg, ms.inflow)
            st = phi_tilde_stack(s0.field(g), [ms.forcing(0.0, X, Y)], 0.0, 1, g)
            res.append(l2_norm((s1.coeffs - s0.coeffs) / dt - forward_transform(st[1], g.basis), g))
        assert res[0] / res[1] > 2.5
