import math

import pytest

from tcmcap.asymptotics import (
    asymptotic_constant,
    binom_approx,
    capacity_ratio_sweep,
    lagrangian_capacity_bound,
    nu_star,
    phi1_lower_bound,
)
from tcmcap.plain_rdt import capacity_plain
from tcmcap.special_math import log_binomial


def test_constant():
    assert abs(asymptotic_constant() - 4.787307364817194) < 1e-12


def test_lower_bound_value():
    assert abs(phi1_lower_bound(1, 3) - math.pi / 24) < 1e-15


def test_nu_star_is_stationary():
    # nu^* is the stationary point of nu*l - (2/3) sqrt(2/pi) p nu^(3/2)
    l, d = 3, 11
    p = d // 2 + l
    c = 2.0 / math.sqrt(2.0 * math.pi)
    f = lambda nu: nu * l - c * p * (2.0 / 3.0) * nu**1.5
    nu = nu_star(l, d)
    h = 1e-6
    assert abs((f(nu + h) - f(nu - h)) / (2 * h)) < 1e-6


class TestBinomApprox:
    def test_near_center(self):
        n = 100001
        for r in (n // 2, n // 2 + 3, n // 2 + 50):
            assert abs(binom_approx(n, r) - log_binomial(n, r)) < 1e-3

    def test_domain(self):
        with pytest.raises(ValueError):
            binom_approx(10, 11)


class TestSweep:
    def test_ratio_sequence(self):
        pts = capacity_ratio_sweep([101, 1001, 10001])
        gaps = [abs(p.limit_gap) for p in pts]
        assert gaps[0] > gaps[1] > gaps[2]
        for p in pts:
            assert p.ratio < asymptotic_constant()
            assert abs(p.ratio - p.c_hat / math.sqrt(p.d)) < 1e-12

    def test_frozen_values(self):
        # frozen from the first sweep
        pts = capacity_ratio_sweep([101, 1001])
        assert abs(pts[0].ratio - 4.01870) < 1e-4
        assert abs(pts[1].ratio - 4.51675) < 1e-4

    def test_requires_ascending(self):
        with pytest.raises(ValueError):
            capacity_ratio_sweep([11, 11])


def test_lagrangian_estimate_above_and_converging():
    ratios = [lagrangian_capacity_bound(d) / capacity_plain(d).alpha_bound for d in (11, 201, 2001, 20001)]
    assert all(r > 1 for r in ratios)
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < 1.05
