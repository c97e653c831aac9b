import math

import numpy as np
import pytest

from zkstrip.weights import (
    WeightError,
    WeightFunction,
    WeightLadder,
    check_admissible,
    check_ladder,
    cutoff_eta,
    cutoff_eta_derivs,
    eta_x0,
    eta_x0_derivs,
    eval_weight,
    format_weight,
    parse_weight,
    power_ladder,
    weight_arrays,
)

FAMILIES = [
    WeightFunction.exponential(0.5),
    WeightFunction.exponential(0.25),
    WeightFunction.power(1.0),
    WeightFunction.power(2.5),
    WeightFunction.constant(),
]


class TestEvalWeight:
    def test_exponential_at_origin(self):
        assert eval_weight(WeightFunction.exponential(0.5), 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_constant_derivative_vanishes(self):
        w = WeightFunction.constant()
        assert eval_weight(w, 3.7, 1) == 0.0
        assert eval_weight(w, 3.7, 0) == 1.0

    def test_power_first_derivative(self):
        # rho = (1+x)^2 / 2, rho' = 1 + x
        assert eval_weight(WeightFunction.power(1.0), 1.0, 1) == pytest.approx(2.0, rel=1e-15)

    def test_closed_forms(self):
        x = np.linspace(0, 4, 9)
        a = 0.3
        np.testing.assert_allclose(eval_weight(WeightFunction.exponential(a), x), np.exp(2 * a * x) / (2 * a))
        np.testing.assert_allclose(eval_weight(WeightFunction.power(a), x), (1 + x) ** (2 * a) / (2 * a))

    def test_order_too_high(self):
        with pytest.raises(WeightError, match="order"):
            eval_weight(WeightFunction.exponential(1.0), 1.0, 4)

    def test_negative_x(self):
        with pytest.raises(WeightError, match="x >= 0"):
            eval_weight(WeightFunction.power(1.0), -0.1)

    @pytest.mark.parametrize("alpha", [0.0, -1.0])
    def test_nonpositive_rate_rejected(self, alpha):
        with pytest.raises(WeightError):
            WeightFunction.exponential(alpha)

    def test_exponential_identity_machine_precision(self):
        a = 0.37
        w = WeightFunction.exponential(a)
        x = np.linspace(0, 20, 401)
        np.testing.assert_allclose(w(x, 1), 2 * a * w(x), rtol=1e-14)

    @pytest.mark.parametrize(
        "w",
        [WeightFunction.exponential(0.5), WeightFunction.power(2.5), WeightFunction.power(0.75)],
        ids=str,
    )
    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_derivative_consistency_second_order(self, w, order):
        x = np.linspace(0.5, 3.0, 11)
        errs = []
        for h in (1e-2, 5e-3, 2.5e-3):
            fd = (w(x + h, order - 1) - w(x - h, order - 1)) / (2 * h)
            errs.append(np.max(np.abs(fd - w(x, order)) / np.abs(w(x, order))))
        orders = np.log2(np.array(errs[:-1]) / errs[1:])
        assert np.all((orders > 1.8) & (orders < 2.2))

    def test_positive_everywhere(self):
        x = np.linspace(0, 50, 101)
        for w in FAMILIES:
            assert np.all(w(x) > 0)

    def test_quadratic_power_weight_exact_differences(self):
        w = WeightFunction.power(1.0)
        x = np.linspace(0.5, 3.0, 11)
        h = 0.1
        np.testing.assert_allclose((w(x + h) - w(x - h)) / (2 * h), w(x, 1), rtol=1e-12)
        assert np.all(w(x, 3) == 0.0)

    def test_weight_arrays_shape(self):
        out = weight_arrays(WeightFunction.power(1.0), np.linspace(0, 1, 5))
        assert out.shape == (4, 5)
        np.testing.assert_allclose(out[2], 1.0)  # rho'' = 1 for (1+x)^2 / 2


class TestAdmissibility:
    def test_exponential_ratio(self):
        rep = check_admissible(WeightFunction.exponential(0.5), 10.0, 101)
        assert rep.max_ratio[1] == pytest.approx(1.0, rel=1e-14)
        assert rep.max_ratio[3] == pytest.approx(1.0, rel=1e-14)

    def test_power_ratio_at_origin(self):
        rep = check_admissible(WeightFunction.power(1.0), 10.0, 101)
        assert rep.max_ratio[1] == pytest.approx(2.0, rel=1e-14)
        assert rep.argmax[1] == 0.0

    def test_constant_ratios_zero(self):
        rep = check_admissible(WeightFunction.constant(), 10.0, 11)
        assert all(v == 0.0 for v in rep.max_ratio.values())

    @pytest.mark.parametrize("w", FAMILIES[:4], ids=str)
    def test_independent_of_x_max(self, w):
        a = check_admissible(w, 10.0, 101).max_ratio[1]
        b = check_admissible(w, 100.0, 1001).max_ratio[1]
        assert a == pytest.approx(b, abs=1e-12)

    def test_bad_arguments(self):
        with pytest.raises(WeightError):
            check_admissible(WeightFunction.constant(), 0.0, 10)
        with pytest.raises(WeightError):
            check_admissible(WeightFunction.constant(), 1.0, 1)


class TestCutoff:
    def test_plateaus(self):
        assert cutoff_eta(-1.0) == 0.0
        assert cutoff_eta(2.0) == 1.0
        assert cutoff_eta(0.0) == 0.0
        assert cutoff_eta(1.0) == 1.0

    def test_midpoint(self):
        assert cutoff_eta(0.5) == pytest.approx(0.5, abs=1e-15)

    def test_partition_identity(self):
        x = np.random.default_rng(1).uniform(-1, 2, 1000)
        np.testing.assert_allclose(cutoff_eta(x) + cutoff_eta(1 - x), 1.0, atol=1e-15)

    def test_monotone(self):
        x = np.linspace(-0.5, 1.5, 2001)
        assert np.all(np.diff(cutoff_eta(x)) >= 0)

    def test_shifted_cutoff(self):
        assert eta_x0(2.0, 2.0) == 1.0
        assert eta_x0(1.0, 2.0) == 0.0
        assert eta_x0(1.5, 2.0) == pytest.approx(0.5, abs=1e-15)

    def test_shift_requires_positive_x0(self):
        with pytest.raises(WeightError):
            eta_x0(1.0, 0.0)
        with pytest.raises(WeightError):
            eta_x0_derivs(1.0, -1.0)

    def test_derivatives_match_differences(self):
        x = np.linspace(0.05, 0.95, 19)
        d = cutoff_eta_derivs(x)
        h = 1e-5
        for k in (1, 2, 3):
            fd = (cutoff_eta_derivs(x + h)[k - 1] - cutoff_eta_derivs(x - h)[k - 1]) / (2 * h)
            assert np.max(np.abs(d[k] - fd)) <= 1e-6 * np.max(np.abs(d[k]))

    def test_shifted_derivatives_chain_rule(self):
        x0 = 3.0
        x = np.linspace(1.6, 2.9, 14)
        h = 1e-5
        d = eta_x0_derivs(x, x0)
        fd = (eta_x0(x + h, x0) - eta_x0(x - h, x0)) / (2 * h)
        np.testing.assert_allclose(d[1], fd, rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(d[0], eta_x0(x, x0))


class TestLadder:
    def test_identical_exponential_rungs(self):
        w = WeightFunction.exponential(1.0)
        rep = check_ladder(WeightLadder([w, w, w], c=1.0), 10.0, 101)
        assert rep.ok
        assert rep.worst_ratio == pytest.approx(0.5, rel=1e-14)

    def test_power_ladder(self):
        lad = power_ladder(3.0, 2, c=1.0)
        rep = check_ladder(lad, 10.0, 101)
        assert rep.ok
        # rho_1 / sqrt(rho_1' rho_0') = 1/sqrt(24), rho_2 / sqrt(rho_2' rho_1') = 1/sqrt(8)
        assert rep.worst_ratio == pytest.approx(1 / math.sqrt(8), rel=1e-12)
        assert rep.worst_step == 2

    def test_power_ladder_keeps_base_weight(self):
        lad = power_ladder(3.0, 2, c=1.0)
        x = np.linspace(0, 5, 11)
        np.testing.assert_allclose(lad.weights[0](x), WeightFunction.power(3.0)(x))
        np.testing.assert_allclose(lad.weights[2](x), (1 + x) ** 2 / 6.0)

    def test_tight_constant_fails(self):
        rep = check_ladder(power_ladder(3.0, 2, c=0.3), 10.0, 101)
        assert not rep.ok

    def test_constant_entry_is_ill_posed(self):
        with pytest.raises(WeightError, match="ill-posed"):
            check_ladder(WeightLadder([WeightFunction.exponential(1.0), WeightFunction.constant()]), 10.0, 11)


class TestWeightSpec:
    @pytest.mark.parametrize("text", ["exp:alpha=0.5", "pow:alpha=1.0", "const"])
    def test_round_trip(self, text):
        assert format_weight(parse_weight(text)) == text

    def test_parse_values(self):
        w = parse_weight("exp:alpha=0.25")
        assert (w.family, w.alpha) == ("exp", 0.25)

    @pytest.mark.parametrize("text", ["gauss:alpha=1", "exp:beta=1", "exp:alpha=x", "exp:alpha=nan", ""])
    def test_rejects_bad_specs(self, text):
        with pytest.raises(WeightError):
            parse_weight(text)
