import numpy as np
import pytest
import scipy.sparse as sp

from zkstrip.operators import (
    MODE_KL,
    MODE_KU,
    BandedMatrix,
    GridError,
    GridSpec,
    SingularMatrixError,
    apply_linear_zk,
    assemble_mode_operator,
    banded_solve,
    diff_matrix,
    fd_weights,
    d_x,
    d_x3,
    implicit_mode_matrix,
    mode_operator_sparse,
    nonlinear_term,
)
from zkstrip.transverse import TransverseBasis


def grid(n_x=101, x_max=10.0, case="a", n_modes=4, **kw):
    return GridSpec(x_max, n_x, TransverseBasis(case, 1.0, n_modes), **kw)


class TestStencils:
    def test_fornberg_centred(self):
        c = fd_weights(0.0, np.array([-1.0, 0.0, 1.0]), 2)
        np.testing.assert_allclose(c[1], [-0.5, 0.0, 0.5])
        np.testing.assert_allclose(c[2], [1.0, -2.0, 1.0])

    def test_fornberg_third_derivative(self):
        c = fd_weights(0.0, np.array([-2.0, -1.0, 0.0, 1.0, 2.0]), 3)
        np.testing.assert_allclose(c[3], [-0.5, 1.0, 0.0, -1.0, 0.5], atol=1e-14)

    def test_d_x_of_x_is_one(self):
        g = grid()
        np.testing.assert_allclose(d_x(g.x, g), 1.0, atol=1e-11)

    def test_d_x3_of_cubic(self):
        g = grid()
        np.testing.assert_allclose(d_x3(g.x**3, g), 6.0, rtol=1e-8)

    @pytest.mark.parametrize("order", [1, 2, 3, 4])
    def test_constants_annihilated(self, order):
        g = grid(n_x=41)
        assert np.max(np.abs(g.dmat(order) @ np.full(41, 3.0))) <= 1e-9

    @pytest.mark.parametrize("order", [1, 2, 3, 4])
    def test_second_order_convergence(self, order):
        errs = []
        for n in (101, 201, 401):
            D = diff_matrix(n, 2 * np.pi / (n - 1), order)
            x = np.linspace(0, 2 * np.pi, n)
            # phase shift keeps the boundary stencils out of a symmetric special case
            exact = np.sin(x + 0.7 + order * np.pi / 2)
            errs.append(np.max(np.abs(D @ np.sin(x + 0.7) - exact)))
        rates = np.log2(np.array(errs[:-1]) / errs[1:])
        assert np.all((rates > 1.8) & (rates < 2.3))

    def test_dmat_order_limit(self):
        with pytest.raises(GridError):
            grid().dmat(5)


class TestGridSpec:
    def test_defaults(self):
        g = grid(x_max=20.0)
        assert g.sponge_start == pytest.approx(16.0)
        assert g.dx == pytest.approx(0.2)
        X, Y = g.mesh()
        assert X.shape == (101, 4) and Y.shape == (101, 4)

    def test_sponge_profile(self):
        g = grid(x_max=20.0)
        s = g.sponge
        assert np.all(s[g.x <= 16.0] == 0.0)
        assert s[-1] == pytest.approx(10.0)
        assert np.all(np.diff(s) >= 0)

    def test_trapezoid_weights(self):
        g = grid()
        assert g.trapezoid_weights().sum() == pytest.approx(10.0)

    @pytest.mark.parametrize("kw", [dict(x_max=-1.0), dict(n_x=4), dict(dt=0.0), dict(sponge_start=12.0)])
    def test_validation(self, kw):
        with pytest.raises(GridError):
            grid(**kw)


class TestModeOperator:
    def test_cubic_interior_rows(self):
        # lambda_l = b makes the first-derivative part vanish
        g = grid(n_x=51)
        lam = float(g.basis.eigenvalues[0])
        A = assemble_mode_operator(0, lam, g).to_dense()
        out = A @ g.x**3
        np.testing.assert_allclose(out[2:-2], 6.0, rtol=1e-9)
        assert out[0] == 0.0
        assert out[-1] == pytest.approx(g.x_max**3)

    def test_linear_profile(self):
        g = grid(n_x=51)
        b = 2.0
        lam = float(g.basis.eigenvalues[1])
        out = assemble_mode_operator(1, b, g).to_dense() @ g.x
        np.testing.assert_allclose(out[2:-2], b - lam, rtol=1e-10)

    def test_bandwidth(self):
        g = grid(n_x=31)
        dense = assemble_mode_operator(0, 0.0, g, damping=True).to_dense()
        i, j = np.nonzero(dense)
        assert np.max(j - i) <= MODE_KU and np.max(i - j) <= MODE_KL

    def test_energy_skew_part(self):
        # with zero closure rows, the differential block has non-negative symmetric part
        g = grid(n_x=41)
        A = mode_operator_sparse(float(g.basis.eigenvalues[0]), 0.5, g, damping=False).toarray()
        inner = A[1:-1, 1:-1]
        sym = 0.5 * (inner + inner.T)
        assert np.linalg.eigvalsh(sym).min() >= -1e-8 * np.abs(sym).max()

    def test_implicit_form(self):
        g = grid(n_x=41)
        lam, b, dt = float(g.basis.eigenvalues[2]), 0.3, 0.01
        M = implicit_mode_matrix(lam, b, g, dt).to_dense()
        A = mode_operator_sparse(lam, b, g, sponge=True).toarray()
        ref = np.eye(41) + 0.5 * dt * A
        ref[0] = 0.0
        ref[-1] = 0.0
        ref[0, 0] = ref[-1, -1] = 1.0
        np.testing.assert_allclose(M, ref, atol=1e-12)


class TestBanded:
    def test_round_trip_storage(self):
        rng = np.random.default_rng(0)
        a = np.triu(np.tril(rng.normal(size=(9, 9)), 2), -2)
        bm = BandedMatrix.from_dense(a, 2, 2)
        np.testing.assert_array_equal(bm.to_dense(), a)
        np.testing.assert_array_equal(bm.to_sparse().toarray(), a)
        np.testing.assert_array_equal(BandedMatrix.from_sparse(sp.csr_matrix(a), 2, 2).to_dense(), a)
        x = rng.normal(size=9)
        np.testing.assert_allclose(bm.matvec(x), a @ x)

    def test_random_systems_against_dense(self):
        rng = np.random.default_rng(42)
        worst = 0.0
        for _ in range(200):
            n = int(rng.integers(5, 60))
            a = rng.normal(size=(n, n))
            a = np.triu(np.tril(a, 2), -2) + 6 * np.eye(n)
            rhs = rng.normal(size=(n, 3))
            x = banded_solve(BandedMatrix.from_dense(a, 2, 2), rhs)
            ref = np.linalg.solve(a, rhs)
            worst = max(worst, np.max(np.abs(x - ref)) / np.max(np.abs(ref)))
        assert worst <= 1e-12

    def test_pivoting_needed(self):
        a = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
        x = banded_solve(BandedMatrix.from_dense(a, 1, 1), np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(a @ x, [1.0, 2.0, 3.0])

    def test_singular(self):
        a = np.diag([1.0, 0.0, 2.0])
        with pytest.raises(SingularMatrixError):
            BandedMatrix.from_dense(a, 1, 1).factorize()

    def test_out_of_band_rejected(self):
        with pytest.raises(ValueError):
            BandedMatrix.from_sparse(sp.csr_matrix(np.ones((4, 4))), 1, 1)

    def test_factor_reuse(self):
        a = np.diag([2.0, 3.0, 4.0])
        bm = BandedMatrix.from_dense(a, 0, 0).factorize()
        assert bm.factorized
        np.testing.assert_allclose(bm.solve(np.array([2.0, 3.0, 4.0])), 1.0)
        np.testing.assert_allclose(bm.solve(np.array([4.0, 6.0, 8.0])), 2.0)


class TestPhysicalOperators:
    def test_linear_zk_on_separable_field(self):
        g = grid(n_x=401, x_max=10.0)
        X, Y = g.mesh()
        u = np.exp(-((X - 5) ** 2)) * np.sqrt(2) * np.sin(np.pi * Y)
        b = 1.5
        p = X - 5
        gx = np.exp(-(p**2))
        g1 = -2 * p * gx
        g3 = (-8 * p**3 + 12 * p) * gx
        exact = (g3 + (b - np.pi**2) * g1) * np.sqrt(2) * np.sin(np.pi * Y)
        err = np.max(np.abs(apply_linear_zk(u, b, g) - exact))
        assert err <= 5e-3 * np.max(np.abs(exact))

    def test_nonlinear_term_example(self):
        g = grid(n_x=801, x_max=10.0, n_modes=1)
        X, _ = g.mesh()
        u = np.exp(-((X - 5) ** 2))
        exact = u * (-2 * (X - 5)) * u
        np.testing.assert_allclose(nonlinear_term(u, g), exact, atol=2e-4)

    def test_nonlinear_skew_telescoping(self):
        g = grid(n_x=201, x_max=10.0, n_modes=4)
        X, Y = g.mesh()
        u = np.exp(-4 * (X - 5) ** 2) * (np.sin(np.pi * Y) + 0.5 * np.sin(2 * np.pi * Y))
        s = np.sum(u * nonlinear_term(u, g))
        assert abs(s) <= 1e-12 * np.sum(np.abs(u * nonlinear_term(u, g)))

    def test_nonlinear_zero_and_constant(self):
        g = grid(n_x=51)
        assert np.all(nonlinear_term(np.zeros((51, 4)), g) == 0.0)
        assert np.max(np.abs(nonlinear_term(np.full((51, 4), 2.0), g))) <= 1e-12

    def test_periodic_dealiasing_removes_high_modes(self):
        g = grid(n_x=51, case="d", n_modes=9)
        X, Y = g.mesh()
        u = np.exp(-((X - 5) ** 2)) * np.cos(2 * np.pi * 2 * Y)
        n = nonlinear_term(u, g)
        c = g.basis.forward(n)
        assert np.max(np.abs(c[:, ~g.basis.dealias_mask()])) <= 1e-12
