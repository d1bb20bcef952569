"""Large-d behaviour of the plain bound.

``c_hat(d) / sqrt(d)`` tends to ``6 * sqrt(2/pi)``.  The pieces used to get
there are a Lagrangian lower bound on the order-statistic sum and the
Gaussian approximation of central binomial coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .plain_rdt import CapacityError, capacity_plain, check_odd, check_range
from .special_math import DEFAULT_QUAD, QuadratureSpec

__all__ = [
    "AsymptoticPoint",
    "phi1_lower_bound",
    "nu_star",
    "binom_approx",
    "asymptotic_constant",
    "lagrangian_capacity_bound",
    "capacity_ratio_sweep",
]


@dataclass(frozen=True)
class AsymptoticPoint:
    d: int
    c_hat: float
    ratio: float
    limit_gap: float

    def __post_init__(self):
        if not self.ratio > 0:
            raise ValueError("ratio must be positive")


def phi1_lower_bound(l: int, d: int) -> float:
    """``(pi/6) l^3 / (d//2 + l)^2``, a lower bound on ``phi1(l; d)``."""
    check_range(l, d)
    return math.pi / 6.0 * l**3 / (d // 2 + l) ** 2


def nu_star(l: int, d: int) -> float:
    """Stationary Lagrange multiplier of the small-nu expansion."""
    check_range(l, d)
    root = l / ((d // 2 + l) * 2.0 / math.sqrt(2.0 * math.pi))
    return root * root


def binom_approx(n: int, r: int) -> float:
    """Log of ``2^n / sqrt(n pi / 2) * exp(-(n - 2r)^2 / (2n))``.

    Only meaningful while ``|n - 2r|`` is small against ``sqrt(n)``.
    """
    if n < 1 or not 0 <= r <= n:
        raise ValueError(f"need n >= 1 and 0 <= r <= n, got n={n}, r={r}")
    return n * math.log(2.0) - 0.5 * math.log(n * math.pi / 2.0) - (n - 2 * r) ** 2 / (2.0 * n)


def asymptotic_constant() -> float:
    return 6.0 * math.sqrt(2.0 / math.pi)


def lagrangian_capacity_bound(d: int) -> float:
    """Closed-form upper estimate of ``c_hat(d)``.

    Replaces every ``phi1`` by its Lagrangian lower bound and the binomial
    weights by their Gaussian approximation.  Divided by ``sqrt(d)`` it
    tends to the same constant as the exact bound.
    """
    check_odd(d)
    h = (d + 1) // 2
    total = 0.0
    for l in range(1, h + 1):
        w = math.exp(binom_approx(d, d // 2 + l) - d * math.log(2.0))
        total += w * phi1_lower_bound(l, d)
    return 1.0 / total


def capacity_ratio_sweep(d_list: Sequence[int], spec: QuadratureSpec = DEFAULT_QUAD) -> list[AsymptoticPoint]:
    ds = list(d_list)
    if any(b <= a for a, b in zip(ds, ds[1:])):
        raise ValueError(f"d_list must be strictly ascending, got {ds}")
    limit = asymptotic_constant()
    points = []
    for d in ds:
        try:
            c = capacity_plain(d, spec).alpha_bound
        except (ArithmeticError, ValueError) as exc:
            raise CapacityError(d, exc) from exc
        ratio = c / math.sqrt(d)
        points.append(AsymptoticPoint(d=d, c_hat=c, ratio=ratio, limit_gap=ratio - limit))
    return points
