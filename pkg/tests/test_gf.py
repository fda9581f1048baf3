import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gammaincc

from tricklelab import gf
from tricklelab.analytics import transition_matrix
from tricklelab.series import TruncatedSeries


def holding_density(x, j, eta):
    """Density of eta + (1 - eta) * Beta(1, j) on [eta, 1]."""
    y = (x - eta) / (1.0 - eta)
    return j * (1.0 - y) ** (j - 1) / (1.0 - eta)


def quad_moment(j, eta, r):
    val, _ = quad(lambda x: x**r * holding_density(x, j, eta), eta, 1.0)
    return val


def quad_mgf(j, eta, s):
    val, _ = quad(lambda x: math.exp(s * x) * holding_density(x, j, eta), eta, 1.0)
    return val


class TestStepMoments:
    @pytest.mark.parametrize("j", [1, 2, 5])
    @pytest.mark.parametrize("eta", [0.0, 0.25, 0.5])
    def test_against_quadrature(self, j, eta):
        for r in range(5):
            assert gf.step_moment(j, eta, r) == pytest.approx(
                quad_moment(j, eta, r), rel=1e-10)

    def test_first_two_moments_closed(self):
        # mean eta + (1 - eta) / (j + 1)
        assert gf.step_moment(3, 0.2, 1) == pytest.approx(0.2 + 0.8 / 4)
        assert gf.step_moment(1, 0.0, 2) == pytest.approx(1 / 3)


class TestStepMGF:
    def test_uniform_closed_form(self):
        s = 1.7
        assert gf.step_mgf(1, 0.0, s) == pytest.approx((math.exp(s) - 1) / s, rel=1e-14)

    def test_second_state_closed_value(self):
        assert gf.step_mgf(2, 0.0, 1.0) == pytest.approx(2 * (math.e - 2), rel=1e-14)

    def test_zero_argument(self):
        for j in (1, 4):
            assert gf.step_mgf(j, 0.3, 0.0) == 1.0

    @pytest.mark.parametrize("j", [1, 3, 6])
    @pytest.mark.parametrize("eta", [0.0, 0.4])
    @pytest.mark.parametrize("s", [-4.0, -0.01, 0.3, 3.0])
    def test_against_quadrature(self, j, eta, s):
        assert gf.step_mgf(j, eta, s) == pytest.approx(quad_mgf(j, eta, s), rel=1e-11)

    @pytest.mark.parametrize("j", [1, 2, 5])
    @pytest.mark.parametrize("s", [0.5, 2.0])
    def test_incomplete_gamma_form(self, j, s):
        eta = 0.25
        lam = s * (1.0 - eta)
        closed = math.factorial(j) * math.exp(s) * (1.0 / lam) ** j * (
            1.0 - gammaincc(j, lam))
        assert gf.step_mgf(j, eta, s) == pytest.approx(closed, rel=1e-12)

    def test_series_coefficients_are_scaled_moments(self):
        c = gf.StepTimeMGF(3, 0.25, 4).series_coeffs()
        for r in range(5):
            assert c[r] == pytest.approx(
                gf.step_moment(3, 0.25, r) / math.factorial(r), rel=1e-12)
        assert c[0] == 1.0


class TestHopSystem:
    def test_single_state_solution(self):
        [fp] = gf.solve_hop_system(1, 4, 4)
        expected = TruncatedSeries.monomial((gf.NODE_VAR, gf.HOP_VAR), (4, 4), (1, 1))
        assert np.allclose(fp.table[0].coeffs, expected.coeffs)

    def test_forced_jump_to_top_state(self):
        fps = gf.solve_hop_system(2, 5, 5)
        to_top = fps[1]  # target state 2
        assert to_top.table[0].coefficient((2, 1)) == 1.0
        assert np.count_nonzero(to_top.table[0].coeffs) == 1

    @pytest.mark.parametrize("R", [2, 3, 5])
    def test_residual_of_defining_equations(self, R):
        node_deg, step_deg = 10, 10
        P = transition_matrix(R)
        fps = gf.solve_hop_system(R, node_deg, step_deg)
        for fp in fps:
            j = fp.target
            for i in range(1, R + 1):
                rhs = TruncatedSeries.monomial(
                    (gf.NODE_VAR, gf.HOP_VAR), (node_deg, step_deg), (j, 1),
                    P[i - 1, j - 1])
                for k in range(1, R + 1):
                    if k == j or P[i - 1, k - 1] == 0.0:
                        continue
                    rhs = rhs + P[i - 1, k - 1] * fp.table[k - 1].shifted((k, 1))
                residual = np.max(np.abs(fp.table[i - 1].coeffs - rhs.coeffs))
                assert residual < 1e-12

    def test_first_passage_needs_at_least_one_step(self):
        for fp in gf.solve_hop_system(3, 6, 6):
            for entry in fp.table:
                assert not entry.coeffs[:, 0].any()  # zero step-degree-0 layer

    def test_step_marginal_is_a_pmf(self):
        # setting the node variable to 1 leaves the step-count pgf; the
        # first-return tail decays like (5/6)^steps for R = 3, and paths of
        # s steps update at most 3 s nodes, so node degree 360 loses nothing
        fps = gf.solve_hop_system(3, 360, 120)
        return_to_1 = fps[0].table[0].eliminate(gf.NODE_VAR)
        total = return_to_1.coeffs.sum()
        assert total == pytest.approx(1.0, abs=1e-8)
        assert np.all(return_to_1.coeffs >= -1e-15)


class TestHopLaw:
    def test_point_mass_single_range(self):
        pmf = gf.hop_pmf_gf(1, 5)
        assert np.allclose(pmf, [0, 0, 0, 0, 0, 1.0])

    def test_two_path_case(self):
        pmf = gf.hop_pmf_gf(2, 4)
        assert pmf[2] == pytest.approx(0.5, abs=1e-12)
        assert pmf[3] == pytest.approx(0.5, abs=1e-12)

    def test_first_broadcast_covers_range(self):
        for R in (3, 6):
            for n in range(1, R + 1):
                pmf = gf.hop_pmf_gf(R, n)
                assert pmf[1] == pytest.approx(1.0, abs=1e-12)

    def test_matches_dp_oracle(self):
        for R in (2, 3, 4):
            table = gf.hop_pmf_table(R, 25)
            for n in range(1, 26):
                dp = gf.hop_pmf_dp(R, n)
                width = max(len(dp), table.shape[0])
                a = np.pad(table[:, n], (0, width - table.shape[0]))
                b = np.pad(dp, (0, width - len(dp)))
                assert np.max(np.abs(a - b)) < 1e-9

    def test_setting_hop_variable_to_one_gives_normalization(self):
        master = gf.hop_master_series(3, 20, 20)
        norm = master.eliminate(gf.HOP_VAR)
        assert np.allclose(norm.coeffs, np.ones(21), atol=1e-9)

    def test_insufficient_explicit_truncation_raises(self):
        with pytest.raises(gf.TruncationInsufficientError):
            gf.hop_pmf_gf(2, 10, m_max=3)

    def test_dp_pmf_sums_to_one(self):
        for R, n in [(1, 7), (2, 13), (5, 40)]:
            assert gf.hop_pmf_dp(R, n).sum() == pytest.approx(1.0, abs=1e-12)


class TestDelayLaw:
    def test_single_hop_sizes_are_one_uniform_draw(self):
        for eta in (0.0, 0.5):
            for n in (1, 3):  # n <= R = 3
                moments = gf.delay_moments_gf(3, eta, n)
                mean, second = moments[0], moments[1]
                assert mean == pytest.approx((1 + eta) / 2, rel=1e-12)
                assert second - mean**2 == pytest.approx((1 - eta) ** 2 / 12, rel=1e-9)

    def test_hand_path_sum(self):
        moments = gf.delay_moments_gf(2, 0.0, 4)
        assert moments[0] == pytest.approx(13 / 12, rel=1e-12)

    def test_uniform_sum_chain(self):
        mean, var = gf.delay_moments_dp(1, 0.3, 7)
        assert mean == pytest.approx(7 * 1.3 / 2, rel=1e-12)
        assert var == pytest.approx(7 * 0.49 / 12, rel=1e-10)

    def test_matches_dp_oracle(self):
        for R in (2, 4, 6):
            for eta in (0.0, 0.25, 0.5):
                for n in (5, 17, 30):
                    m = gf.delay_moments_gf(R, eta, n)
                    mean, var = m[0], m[1] - m[0] ** 2
                    dp_mean, dp_var = gf.delay_moments_dp(R, eta, n)
                    assert abs(mean - dp_mean) / dp_mean < 1e-9
                    assert abs(var - dp_var) / dp_var < 1e-9

    def test_transform_normalizes_at_zero(self):
        master = gf.delay_master_series(3, 0.25, 15, order=2)
        assert np.allclose(master.coeffs[:, 0], np.ones(16), atol=1e-12)

    def test_third_moment_of_uniform_sum(self):
        # sum of 3 iid U(0,1): E[S^3] = 3 m3 + 18 m2 m1 + 6 m1^3 = 4.5
        moments = gf.delay_moments_gf(1, 0.0, 3, order=3)
        assert moments[2] == pytest.approx(4.5, rel=1e-12)

    def test_order_validation(self):
        with pytest.raises(ValueError):
            gf.delay_moments_gf(2, 0.0, 4, order=0)
