"""Plain random-duality capacity bound for the treelike committee machine.

The bound is ``c_hat(d) = 1 / S(d)`` with

    S(d) = 2^-d * sum_{l=1}^{ceil(d/2)} C(d, ceil(d/2) - l) * phi1(l; d)

and ``phi1(l; d)`` the expected sum of the ``l`` smallest squared entries
of a standard normal vector of length ``p = floor(d/2) + l``.
"""
from __future__ import annotations

import enum
import functools
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .special_math import DEFAULT_QUAD, QuadratureSpec, binomial_cdf, erf, integrate_halfline, log_binomial

__all__ = [
    "Method",
    "CapacityResult",
    "CapacityError",
    "check_odd",
    "check_range",
    "phi1",
    "plain_sum",
    "capacity_plain",
    "capacity_plain_sweep",
]

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_LOG2 = math.log(2.0)
# relative size below which the remaining l-terms are dropped
TRUNCATION = 1e-14


class Method(str, enum.Enum):
    PLAIN = "plain"
    LIFTED = "lifted"


class CapacityError(RuntimeError):
    """A capacity evaluation failed for a specific neuron count."""

    def __init__(self, d: int, cause: Exception):
        self.d = d
        self.cause = cause
        super().__init__(f"d={d}: {cause}")


@dataclass
class CapacityResult:
    d: int
    method: Method
    alpha_bound: float
    diagnostics: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        self.method = Method(self.method)
        if not (math.isfinite(self.alpha_bound) and self.alpha_bound > 0):
            raise ValueError(f"alpha_bound must be finite and positive, got {self.alpha_bound}")

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "method": self.method.value,
            "alpha_bound": self.alpha_bound,
            "diagnostics": dict(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CapacityResult":
        return cls(
            d=int(data["d"]),
            method=Method(data["method"]),
            alpha_bound=float(data["alpha_bound"]),
            diagnostics={k: float(v) for k, v in data.get("diagnostics", {}).items()},
        )


def check_odd(d: int) -> None:
    if isinstance(d, bool) or int(d) != d or d < 1 or d % 2 == 0:
        raise ValueError(f"d must be an odd positive integer, got {d!r}")


def check_range(l: int, d: int) -> None:
    check_odd(d)
    if int(l) != l or not 1 <= l <= (d + 1) // 2:
        raise ValueError(f"l must lie in [1, {(d + 1) // 2}] for d={d}, got {l!r}")


def phi1(l: int, d: int, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Expected sum of the ``l`` smallest of ``p = d//2 + l`` squared standard normals.

    Uses the rank-selection identity

        E[sum of l smallest] = p * E[g^2 * P(Bin(p-1, F(g^2)) <= l-1)]

    where ``g`` is half-normal and ``F(g^2) = erf(g/sqrt 2)`` is the chance
    that another squared normal is smaller.
    """
    check_range(l, d)
    p = d // 2 + l

    def integrand(g):
        w = binomial_cdf(l - 1, p - 1, erf(g / math.sqrt(2.0)))
        return p * _SQRT_2_OVER_PI * g * g * np.exp(-0.5 * g * g) * w

    # the selection weight switches off near erf(g/sqrt2) ~ l/p
    g0 = math.sqrt(math.pi / 2.0) * l / p
    points = [g0 * 2.0**j for j in range(-4, 8) if g0 * 2.0**j < 8.0] if g0 < 0.5 else None
    return integrate_halfline(integrand, spec, points=points)


@functools.lru_cache(maxsize=512)
def _plain_sum(d: int, spec: QuadratureSpec) -> tuple[float, int]:
    h = (d + 1) // 2
    log_total = -math.inf
    last = 0
    for l in range(1, h + 1):
        term = log_binomial(d, h - l) - d * _LOG2 + math.log(phi1(l, d, spec))
        log_total = float(np.logaddexp(log_total, term))
        last = l
        if term < log_total + math.log(TRUNCATION):
            break
    return math.exp(log_total), last


def plain_sum(d: int, spec: QuadratureSpec = DEFAULT_QUAD, naive: bool = False) -> tuple[float, int]:
    """``(S(d), last l included)``.

    The default accumulates in log domain and stops once a term drops below
    1e-14 of the running total.  ``naive=True`` adds every term with exact
    integer binomials and is meant for cross-checks at small ``d``.
    """
    check_odd(d)
    if not naive:
        return _plain_sum(d, spec)
    h = (d + 1) // 2
    total = sum(math.comb(d, h - l) * phi1(l, d, spec) for l in range(1, h + 1)) / 2.0**d
    return total, h


def capacity_plain(d: int, spec: QuadratureSpec = DEFAULT_QUAD) -> CapacityResult:
    check_odd(d)
    t0 = time.perf_counter()
    s, last = plain_sum(d, spec)
    return CapacityResult(
        d=d,
        method=Method.PLAIN,
        alpha_bound=1.0 / s,
        diagnostics={
            "plain_sum": s,
            "truncation_index": float(last),
            "tol": spec.rel_tol,
            "runtime_ms": 1e3 * (time.perf_counter() - t0),
        },
    )


def capacity_plain_sweep(d_list: Sequence[int], spec: QuadratureSpec = DEFAULT_QUAD) -> list[CapacityResult]:
    ds = list(d_list)
    if any(b <= a for a, b in zip(ds, ds[1:])):
        raise ValueError(f"d_list must be strictly ascending, got {ds}")
    out = []
    for d in ds:
        try:
            out.append(capacity_plain(d, spec))
        except CapacityError:
            raise
        except (ArithmeticError, ValueError) as exc:
            raise CapacityError(d, exc) from exc
    return out
