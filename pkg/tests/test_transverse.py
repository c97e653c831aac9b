import math

import numpy as np
import pytest

from zkstrip.transverse import (
    BCCase,
    BoundaryTrace,
    TransverseBasis,
    TransverseError,
    boundary_norm,
    eigensystem,
    forward_transform,
    inverse_transform,
)

CASES = ["a", "b", "c", "d"]
WIDTHS = [0.5, 1.0, math.pi]


def _n(case, n=32):
    return n + 1 if case == "d" else n


def _fine_quadrature(L, n=4001):
    y = np.linspace(0, L, n)
    w = np.full(n, L / (n - 1))
    w[[0, -1]] *= 0.5
    return y, w


class TestEigensystem:
    @pytest.mark.parametrize("case", CASES)
    @pytest.mark.parametrize("L", WIDTHS)
    def test_gram_matrix_discrete(self, case, L):
        basis = TransverseBasis(case, L, _n(case))
        gram = basis.node_weight * basis.matrix.T @ basis.matrix
        assert np.max(np.abs(gram - np.eye(basis.n_modes))) <= 1e-10

    @pytest.mark.parametrize("case", CASES)
    def test_gram_matrix_continuous(self, case):
        # independent check against a fine trapezoid rule (exact for trig polynomials
        # on the periodic grid, O(h^2) otherwise)
        L = 1.3
        basis = TransverseBasis(case, L, _n(case, 8))
        y, w = _fine_quadrature(L)
        P = basis.evaluate(y)
        gram = P.T @ (w[:, None] * P)
        assert np.max(np.abs(gram - np.eye(basis.n_modes))) <= 1e-5

    @pytest.mark.parametrize("case", CASES)
    @pytest.mark.parametrize("L", WIDTHS)
    def test_eigen_relation(self, case, L):
        basis = TransverseBasis(case, L, _n(case))
        y = np.linspace(0, L, 57)
        P0 = basis.evaluate(y)
        P2 = basis.evaluate(y, 2)
        res = -P2 - P0 * basis.eigenvalues[None, :]
        assert np.max(np.abs(res)) <= 1e-10 * max(1.0, basis.eigenvalues.max())

    @pytest.mark.parametrize("L", WIDTHS)
    def test_boundary_conditions(self, L):
        a = TransverseBasis("a", L, 32).evaluate([0.0, L])
        b = TransverseBasis("b", L, 32).evaluate([0.0, L], 1)
        c0 = TransverseBasis("c", L, 32).evaluate([0.0])
        c1 = TransverseBasis("c", L, 32).evaluate([L], 1)
        tol = 1e-12
        assert np.max(np.abs(a)) <= tol * 32
        assert np.max(np.abs(b)) <= tol * 32 * 32 * math.pi / L
        assert np.max(np.abs(c0)) == 0.0
        assert np.max(np.abs(c1)) <= tol * 32 * 32 * math.pi / L
        d = TransverseBasis("d", L, 33)
        for k in (0, 1):
            np.testing.assert_allclose(d.evaluate([0.0], k), d.evaluate([L], k), atol=1e-9)

    def test_eigenvalue_examples(self):
        assert eigensystem("a", 1.0, 1)[0] == pytest.approx(math.pi**2)
        assert eigensystem("b", 1.0, 0)[0] == 0.0
        assert eigensystem("c", 1.0, 1)[0] == pytest.approx(math.pi**2 / 4)
        assert eigensystem("d", 2.0, -1)[0] == pytest.approx(math.pi**2)

    def test_first_mode_value(self):
        _, psi = eigensystem("a", 1.0, 1)
        assert psi(0.5) == pytest.approx(math.sqrt(2))

    def test_index_sets(self):
        assert list(TransverseBasis("a", 1, 3).index) == [1, 2, 3]
        assert list(TransverseBasis("b", 1, 3).index) == [0, 1, 2]
        assert list(TransverseBasis("d", 1, 5).index) == [0, 1, -1, 2, -2]

    def test_bad_inputs(self):
        with pytest.raises(TransverseError, match="valid tags are a, b, c, d"):
            BCCase.parse("e")
        with pytest.raises(TransverseError):
            TransverseBasis("d", 1.0, 4)
        with pytest.raises(TransverseError):
            TransverseBasis("a", 0.0, 4)
        with pytest.raises(TransverseError):
            eigensystem("a", 1.0, 0)

    def test_dealias_mask(self):
        m = TransverseBasis("d", 1.0, 13).dealias_mask()  # kmax = 6 -> keep |k| <= 4
        assert m.sum() == 9
        assert TransverseBasis("a", 1.0, 8).dealias_mask().all()


class TestTransforms:
    @pytest.mark.parametrize("case", CASES)
    def test_round_trip(self, case):
        basis = TransverseBasis(case, 1.7, _n(case, 16))
        c = np.random.default_rng(3).normal(size=(5, basis.n_modes))
        np.testing.assert_allclose(forward_transform(inverse_transform(c, basis), basis), c, atol=1e-12)
        u = np.random.default_rng(4).normal(size=(5, basis.n_nodes))
        np.testing.assert_allclose(inverse_transform(forward_transform(u, basis), basis), u, atol=1e-12)

    def test_single_mode_coefficient(self):
        basis = TransverseBasis("a", 1.0, 8)
        _, psi = eigensystem("a", 1.0, 3)
        c = forward_transform(psi(basis.nodes), basis)
        expected = np.zeros(8)
        expected[2] = 1.0
        np.testing.assert_allclose(c, expected, atol=1e-13)

    @pytest.mark.parametrize("case", CASES)
    def test_parseval(self, case):
        basis = TransverseBasis(case, 2.0, _n(case, 12))
        u = np.random.default_rng(5).normal(size=basis.n_nodes)
        c = basis.forward(u)
        assert np.sum(c**2) == pytest.approx(basis.node_weight * np.sum(u**2), rel=1e-12)

    def test_shape_mismatch(self):
        basis = TransverseBasis("a", 1.0, 8)
        with pytest.raises(TransverseError):
            forward_transform(np.zeros(7), basis)
        with pytest.raises(TransverseError):
            inverse_transform(np.zeros(9), basis)


def _trace(fn, n_t=64, T=2.0, case="a", L=1.0, n_modes=4):
    basis = TransverseBasis(case, L, n_modes)
    t = np.linspace(0, T, n_t)
    return BoundaryTrace.from_function(fn, t, basis)


def _oracle(mu: BoundaryTrace, s, pad=2):
    """Explicit double sum over padded frequencies and transverse modes."""
    t, dt = mu.t, mu.dt
    m = pad * len(t)
    coeffs = mu.values @ (mu.basis.matrix * mu.basis.node_weight)
    total = 0.0
    for k in range(m):
        kk = k if k < (m + 1) // 2 else k - m
        theta = 2 * math.pi * kk / (m * dt)
        ghat = dt * (np.exp(-1j * theta * t) @ coeffs)
        for j, l in enumerate(np.abs(mu.basis.index)):
            total += (abs(theta) ** (2 / 3) + l * l) ** s * abs(ghat[j]) ** 2
    return math.sqrt(total / (m * dt))


class TestBoundaryNorm:
    def test_zero_trace(self):
        mu = _trace(lambda t, y: 0 * y)
        for s in (0, 1, 4):
            assert boundary_norm(mu, s) == 0.0

    def test_homogeneity(self):
        f = lambda t, y: np.sin(t) * np.sin(math.pi * y) + 0.3 * t * np.sin(2 * math.pi * y)
        mu = _trace(f)
        mu3 = _trace(lambda t, y: -3 * f(t, y))
        assert boundary_norm(mu3, 1.5) == pytest.approx(3 * boundary_norm(mu, 1.5), rel=1e-12)

    def test_s0_equals_l2(self):
        mu = _trace(lambda t, y: np.exp(-t) * np.sin(math.pi * y) + np.cos(3 * t) * np.sin(3 * math.pi * y))
        assert boundary_norm(mu, 0.0) == pytest.approx(mu.l2_norm(), rel=1e-12)

    @pytest.mark.parametrize("s", [0.0, 1.0, 4.0, -0.5])
    @pytest.mark.parametrize("case", ["a", "c"])
    def test_matches_oracle(self, s, case):
        mu = _trace(
            lambda t, y: np.sin(2 * t) * np.sin(1.3 * y) + t**2 * np.cos(2.1 * y) * y,
            n_t=40,
            case=case,
        )
        ref = _oracle(mu, s)
        assert boundary_norm(mu, s) == pytest.approx(ref, rel=1e-10)

    def test_monotone_in_s(self):
        mu = _trace(lambda t, y: np.sin(t) * np.sin(math.pi * y))
        vals = [boundary_norm(mu, s) for s in (0, 0.5, 1, 2)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_negative_s_with_zero_frequency_mode_is_infinite(self):
        mu = _trace(lambda t, y: 1.0 + 0 * y, case="b")
        assert boundary_norm(mu, -1.0) == math.inf
        assert math.isfinite(boundary_norm(mu, 1.0))

    def test_needs_two_samples(self):
        basis = TransverseBasis("a", 1.0, 4)
        with pytest.raises(TransverseError):
            boundary_norm(BoundaryTrace(np.zeros(1), np.zeros((1, 4)), basis), 1.0)


class TestBoundaryTrace:
    def test_interpolation(self):
        mu = _trace(lambda t, y: t + 0 * y, n_t=5, T=1.0)
        np.testing.assert_allclose(mu.at(0.3), 0.3)
        np.testing.assert_allclose(mu.at(5.0), 1.0)

    def test_uniform_grid_required(self):
        basis = TransverseBasis("a", 1.0, 2)
        with pytest.raises(TransverseError, match="uniform"):
            BoundaryTrace(np.array([0, 0.1, 0.3]), np.zeros((3, 2)), basis)

    def test_shape_checked(self):
        basis = TransverseBasis("a", 1.0, 2)
        with pytest.raises(TransverseError):
            BoundaryTrace(np.array([0, 0.1]), np.zeros((2, 3)), basis)
