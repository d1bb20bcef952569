import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from tcmcap.lifted_rdt import (
    C3_BRACKET,
    capacity_lifted,
    i_q,
    i_sph,
    inner_min,
    inner_objective,
    lifted_terms,
    phibar0,
    phibar1,
    phibar1_all,
    phibar2,
    saddle_grid,
)
from tcmcap.plain_rdt import Method, capacity_plain, plain_sum

# frozen from scipy quad / dblquad over the chi-square order-statistic densities
PHIBAR1_ORACLE = {
    (1, 3, 1.0, 1.0): 0.9211619987565951,
    (1, 3, 2.0, 0.5): 0.7698003589195023,
    (1, 3, 0.3, 2.0): 0.9866836348366446,
    (1, 5, 1.0, 1.0): 0.9557129905517544,
    (1, 5, 2.0, 0.5): 0.8559701211143843,
    (1, 5, 0.3, 2.0): 0.9928660422627364,
    (2, 3, 1.0, 1.0): 0.819331058795903,
    (2, 3, 2.0, 0.5): 0.5398930876744323,
    (2, 3, 0.3, 2.0): 0.9675359092338637,
}


class TestPhibar1:
    @pytest.mark.parametrize("key", sorted(PHIBAR1_ORACLE))
    def test_oracle_values(self, key):
        assert abs(phibar1(*key) - PHIBAR1_ORACLE[key]) < 1e-10

    @pytest.mark.parametrize("c3,gamma", [(0.1, 1.0), (1.0, 1.0), (2.0, 0.5), (5.0, 0.2), (50.0, 3.0)])
    def test_single_normal_closed_form(self, c3, gamma):
        assert abs(phibar1(1, 1, c3, gamma) - (1 + c3 / (2 * gamma)) ** -0.5) < 1e-9

    @pytest.mark.parametrize("l,d", [(1, 3), (2, 3), (2, 5)])
    def test_untilted_limit(self, l, d):
        assert abs(phibar1(l, d, 1e-10, 1.0) - 1.0) < 1e-6

    def test_first_order_in_c3(self):
        # phibar1 = 1 - c3/(4 gamma) phi1 + O(c3^2)
        from tcmcap.plain_rdt import phi1

        t = 1e-5
        val = phibar1(2, 5, 4 * t, 1.0)
        assert abs((1 - val) / t - phi1(2, 5)) < 1e-4

    def test_vectorized_matches_scalar(self):
        a = np.array([1.1, 3.0, 40.0])
        tab = phibar1_all(5, a)
        for i, ai in enumerate(a):
            for j, l in enumerate((1, 2, 3)):
                assert abs(tab[i, j] - phibar1(l, 5, 2 * (ai - 1), 1.0)) < 1e-13

    def test_phibar2(self):
        assert phibar2(2, 5) == pytest.approx(2 * math.comb(4, 2), rel=1e-14)

    def test_domain(self):
        with pytest.raises(ValueError):
            phibar1(1, 3, -1.0, 1.0)
        with pytest.raises(ValueError):
            phibar1_all(3, [0.5])

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from([(1, 3), (2, 3), (2, 5), (3, 7)]), st.floats(1e-3, 50), st.floats(1e-2, 50), st.floats(1.01, 4))
    def test_in_unit_interval_and_monotone(self, ld, c3, gamma, factor):
        l, d = ld
        v = phibar1(l, d, c3, gamma)
        assert 0 < v <= 1
        assert phibar1(l, d, c3 * factor, gamma) < v + 1e-14
        assert phibar1(l, d, c3, gamma * factor) > v - 1e-14


class TestSphereTerm:
    @pytest.mark.parametrize("c3", [0.1, 1.0, 5.0])
    def test_stationarity(self, c3):
        f = lambda g: g - math.log1p(-c3 / (2 * g)) / (2 * c3)
        res = optimize.minimize_scalar(f, bounds=(c3 / 2 * (1 + 1e-12), 50.0), method="bounded", options={"xatol": 1e-12})
        val, g_sph = i_sph(c3)
        assert abs(g_sph - res.x) < 1e-6
        assert abs(val - res.fun) < 1e-10

    def test_large_c3_stable(self):
        val, g = i_sph(1e6)
        assert math.isfinite(val) and g > 5e5 * 0.999

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            i_sph(0.0)


class TestDataTerm:
    def test_iq_range(self):
        for c3, g in [(0.5, 1.0), (10.0, 0.01), (100.0, 1e-6)]:
            assert 0.5 < i_q(5, c3, g) < 1.0

    def test_iq_formula(self):
        # direct weighted sum with binomial weights
        d, c3, g = 5, 1.0, 0.7
        terms = lifted_terms(d, c3, g)
        manual = 0.5 + sum(math.comb(d, 3 - l) / 2**d * v for l, v in terms.phibar1_values.items())
        assert abs(terms.i_q - manual) < 1e-14

    def test_small_c3_branch_is_continuous(self):
        # just below and above the switch to the first-order expansion
        a = inner_objective(3.0, 3, 0.99e-4, 0.5)
        b = inner_objective(3.0, 3, 1.01e-4, 0.5)
        assert abs(a - b) < 1e-3

    def test_vectorized_gamma(self):
        g = np.array([0.01, 0.3, 2.0])
        vec = inner_objective(2.5, 3, 1.5, g)
        np.testing.assert_allclose(vec, [inner_objective(2.5, 3, 1.5, x) for x in g], rtol=1e-13)

    def test_grid_shape(self):
        grid = saddle_grid(3.0, 3, [0.1, 1.0], [0.1, 1.0, 10.0])
        assert grid.shape == (2, 3)
        assert grid[1, 2] == pytest.approx(inner_objective(3.0, 3, 1.0, 10.0), rel=1e-13)


class TestSaddle:
    @pytest.mark.parametrize("alpha", [2.0, 3.0, 4.0])
    def test_plain_recovery_at_small_c3(self, alpha):
        s, _ = plain_sum(3)
        edge = inner_min(alpha, 3, C3_BRACKET.lo).fun
        assert abs(edge - (math.sqrt(alpha * s) - 1)) < 1e-3

    def test_dominates_edge_value(self):
        sp = phibar0(3.0, 3)
        assert sp.value >= inner_min(3.0, 3, C3_BRACKET.lo).fun - 1e-9

    def test_increasing_in_alpha(self):
        vals = [phibar0(a, 3).value for a in (2.0, 3.0, 4.0)]
        assert vals[0] < vals[1] < vals[2]

    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            phibar0(-1.0, 3)


@pytest.fixture(scope="module")
def lifted3():
    return capacity_lifted(3)


class TestCapacityLifted:
    def test_frozen_d3(self, lifted3):
        # regression value from the first full run; cross-checked on a dense (c3, gamma) grid
        assert abs(lifted3.alpha_bound - 3.454565) < 1e-4

    def test_below_plain(self, lifted3):
        assert lifted3.alpha_bound < capacity_plain(3).alpha_bound

    def test_root_sign_change(self, lifted3):
        a = lifted3.alpha_bound
        assert phibar0(a - 1e-3, 3).value < 0 < phibar0(a + 1e-3, 3).value

    def test_diagnostics(self, lifted3):
        diag = lifted3.diagnostics
        assert lifted3.method is Method.LIFTED
        for key in ("c3_star", "gamma_star", "saddle_value", "plain_bound", "tol"):
            assert key in diag
        assert diag["c3_star"] > 0 and diag["gamma_star"] > 0
        assert abs(diag["saddle_value"]) < 1e-6

    def test_d1(self):
        assert abs(capacity_lifted(1).alpha_bound - 2.0) < 1e-3

    def test_even_rejected(self):
        with pytest.raises(ValueError):
            capacity_lifted(2)
