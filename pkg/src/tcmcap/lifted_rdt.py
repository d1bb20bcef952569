"""Partially lifted duality bound.

For a load ``alpha`` and odd ``d`` the lifted dual value is

    phibar0(alpha) = max_{c3 > 0} min_{gamma > 0}
        c3/2 + gamma - (alpha/c3) log I_Q(c3, gamma) - I_sph(c3)

and the capacity bound ``c_bar(d)`` is its root in ``alpha``.  ``I_Q``
depends on ``(c3, gamma)`` only through ``a = 1 + c3/(2 gamma)``, which is
what makes the scan tables below reusable across loads.

The objective tends to ``0`` from below as ``c3 -> inf`` for every load
(``gamma -> 0`` and ``I_Q -> 1/2`` there), so the outer maximum is taken on
a bounded ``c3`` window.  That limit never changes the sign of ``phibar0``
and the root is always attained at an interior local maximum (or at the
small-``c3`` edge, which reproduces the plain bound).
"""
from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass

import numpy as np

from .plain_rdt import CapacityError, CapacityResult, Method, capacity_plain, check_odd, check_range, plain_sum
from .special_math import (
    DEFAULT_QUAD,
    ROOT_TOL,
    Bracket,
    QuadratureSpec,
    RootBracketError,
    ScalarMinimum,
    erf,
    erfc,
    find_root_increasing,
    integrate_halfline,
    log_binomial,
    maximize_scalar,
    minimize_scalar,
)

__all__ = [
    "SaddlePoint",
    "LiftedTerms",
    "C3_BRACKET",
    "GAMMA_BRACKET",
    "SCAN_POINTS",
    "phibar2",
    "phibar1",
    "phibar1_all",
    "i_q",
    "i_sph",
    "lifted_terms",
    "inner_objective",
    "inner_min",
    "phibar0",
    "capacity_lifted",
    "saddle_grid",
]

C3_BRACKET = Bracket(1e-4, 1e2)
GAMMA_BRACKET = Bracket(1e-6, 1e2)
SCAN_POINTS = 64
# below this c3 the (alpha/c3) log I_Q term is replaced by its first-order expansion
SMALL_C3 = 1e-4
_TRUNCATION = 1e-14
_HALF_LOG_2_OVER_PI = 0.5 * math.log(2.0 / math.pi)


@dataclass(frozen=True)
class SaddlePoint:
    c3: float
    gamma: float
    value: float
    c3_at_edge: bool = False
    gamma_at_edge: bool = False
    multimodal: bool = False

    def __post_init__(self):
        if not (self.c3 > 0 and self.gamma > 0):
            raise ValueError("saddle coordinates must be positive")


@dataclass(frozen=True)
class LiftedTerms:
    phibar1_values: dict[int, float]
    i_q: float
    i_sph: float
    gamma_sph: float


def phibar2(l: int, d: int) -> float:
    """``l * C(d//2 + l, l)``."""
    check_range(l, d)
    return math.exp(math.log(l) + log_binomial(d // 2 + l, l))


@functools.lru_cache(maxsize=256)
def _l_terms(d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Retained l values, their log phibar2 and their I_Q weights C(d, h-l)/2^d."""
    h = (d + 1) // 2
    ls = np.arange(1, h + 1)
    log_w = log_binomial(d, h - ls) - d * math.log(2.0)
    keep = log_w >= log_w[0] + math.log(_TRUNCATION)
    ls = ls[keep]
    log_p2 = np.log(ls) + log_binomial(d // 2 + ls, ls)
    return ls, log_p2, np.exp(log_w[keep])


def phibar1_all(d: int, a, spec: QuadratureSpec = DEFAULT_QUAD, ls=None) -> np.ndarray:
    """``phibar1(l; d)`` for every retained ``l`` and every tilt ``a = 1 + c3/(2 gamma)``.

    Returns shape ``(len(a), len(ls))``.  After the substitution ``u = g sqrt(a)``
    the integrand reads

        phibar2 a^(-l/2) sqrt(2/pi) exp(-u^2/2) erf(u/sqrt2)^(l-1) erfc(u/sqrt(2a))^(d//2)

    whose Gaussian factor no longer depends on ``a``.
    """
    check_odd(d)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if np.any(a < 1):
        raise ValueError("tilt a = 1 + c3/(2 gamma) must be >= 1")
    all_ls, all_lp2, _ = _l_terms(d)
    if ls is None:
        ls, log_p2 = all_ls, all_lp2
    else:
        ls = np.atleast_1d(np.asarray(ls))
        log_p2 = np.log(ls) + log_binomial(d // 2 + ls, ls)
    k = d // 2
    pre = log_p2[None, :] - 0.5 * ls[None, :] * np.log(a)[:, None] + _HALF_LOG_2_OVER_PI
    inv_sqrt_2a = 1.0 / np.sqrt(2.0 * a)
    lm1 = (ls - 1).astype(float)

    def integrand(u):
        with np.errstate(divide="ignore"):
            log_erf = np.log(erf(u / math.sqrt(2.0)))
            log_tail = np.log(erfc(u[None, :] * inv_sqrt_2a[:, None])) if k else np.zeros((a.size, u.size))
        expo = pre[:, :, None] - 0.5 * u * u
        expo = expo + np.where(lm1[:, None] > 0, lm1[:, None] * log_erf[None, :], 0.0)[None, :, :]
        expo = expo + k * log_tail[:, None, :]
        return np.exp(expo)

    return np.atleast_2d(integrate_halfline(integrand, spec))


def _tilt(c3, gamma):
    return 1.0 + np.asarray(c3, dtype=float) / (2.0 * np.asarray(gamma, dtype=float))


def phibar1(l: int, d: int, c3: float, gamma: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Tilted order-statistic mean ``E exp(-c3/(4 gamma) * S_l)``; lies in ``(0, 1]``."""
    check_range(l, d)
    if not (c3 > 0 and gamma > 0):
        raise ValueError(f"c3 and gamma must be positive, got c3={c3}, gamma={gamma}")
    return float(phibar1_all(d, _tilt(c3, gamma), spec, ls=[l])[0, 0])


def _iq_minus_one(d: int, a, spec: QuadratureSpec) -> np.ndarray:
    # the weights sum to 1/2 for odd d, hence I_Q - 1 = sum_l w_l (phibar1 - 1)
    _, _, w = _l_terms(d)
    return (phibar1_all(d, a, spec) - 1.0) @ w


def i_q(d: int, c3: float, gamma: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    if not (c3 > 0 and gamma > 0):
        raise ValueError(f"c3 and gamma must be positive, got c3={c3}, gamma={gamma}")
    return 1.0 + float(_iq_minus_one(d, _tilt(c3, gamma), spec)[0])


def _log_iq(d: int, a, spec: QuadratureSpec) -> np.ndarray:
    return np.log1p(_iq_minus_one(d, a, spec))


def i_sph(c3: float) -> tuple[float, float]:
    """Sphere term and its optimal squaring parameter, ``(I_sph, gamma_sph)``."""
    if not c3 > 0:
        raise ValueError("c3 must be positive")
    root = math.sqrt(c3 * c3 + 4.0)
    g_sph = (c3 + root) / 4.0
    x = c3 / (2.0 * g_sph)
    if x < 0.5:
        log_arg = math.log1p(-x)
    else:
        # 1 - c3/(2 g_sph) = (2 g_sph - c3)/(2 g_sph) with 2 g_sph - c3 = 2/(root + c3)
        log_arg = math.log(2.0 / (root + c3)) - math.log(2.0 * g_sph)
    return g_sph - log_arg / (2.0 * c3), g_sph


def lifted_terms(d: int, c3: float, gamma: float, spec: QuadratureSpec = DEFAULT_QUAD) -> LiftedTerms:
    ls, _, _ = _l_terms(d)
    vals = phibar1_all(d, _tilt(c3, gamma), spec)[0]
    sph, g_sph = i_sph(c3)
    return LiftedTerms(
        phibar1_values={int(l): float(v) for l, v in zip(ls, vals)},
        i_q=i_q(d, c3, gamma, spec),
        i_sph=sph,
        gamma_sph=g_sph,
    )


def _data_term(alpha: float, d: int, c3: float, gamma, spec: QuadratureSpec) -> np.ndarray:
    """``-(alpha/c3) log I_Q`` evaluated elementwise in ``gamma``."""
    gamma = np.asarray(gamma, dtype=float)
    if c3 < SMALL_C3:
        s, _ = plain_sum(d, spec)
        return alpha * s / (4.0 * gamma)
    return -(alpha / c3) * _log_iq(d, _tilt(c3, gamma), spec)


def inner_objective(alpha: float, d: int, c3: float, gamma, spec: QuadratureSpec = DEFAULT_QUAD):
    """``c3/2 + gamma - (alpha/c3) log I_Q - I_sph``, vectorized in ``gamma``."""
    sph, _ = i_sph(c3)
    out = c3 / 2.0 + np.asarray(gamma, dtype=float) + _data_term(alpha, d, c3, gamma, spec) - sph
    return float(np.ravel(out)[0]) if np.ndim(gamma) == 0 else out


def inner_min(alpha: float, d: int, c3: float, spec: QuadratureSpec = DEFAULT_QUAD) -> ScalarMinimum:
    """Minimum over ``gamma`` of the inner objective at fixed ``c3``."""
    return minimize_scalar(
        lambda g: inner_objective(alpha, d, c3, g, spec),
        GAMMA_BRACKET,
        tol=1e-10,
        scan_points=SCAN_POINTS,
        vectorized=True,
    )


@functools.lru_cache(maxsize=64)
def _scan_table(d: int, spec: QuadratureSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``log I_Q`` on the fixed (c3 x gamma) scan grids; independent of the load."""
    c3s = np.geomspace(C3_BRACKET.lo, C3_BRACKET.hi, SCAN_POINTS)
    gammas = np.geomspace(GAMMA_BRACKET.lo, GAMMA_BRACKET.hi, SCAN_POINTS)
    table = np.stack([_log_iq(d, _tilt(c3, gammas), spec) for c3 in c3s])
    return c3s, gammas, table


def _approx_inner_mins(alpha: float, d: int, spec: QuadratureSpec) -> np.ndarray:
    """Grid minimum over gamma, sharpened by a parabola through its neighbours."""
    c3s, gammas, table = _scan_table(d, spec)
    sph = np.array([i_sph(c3)[0] for c3 in c3s])
    vals = c3s[:, None] / 2.0 + gammas[None, :] - (alpha / c3s[:, None]) * table - sph[:, None]
    out = vals.min(axis=1)
    j = vals.argmin(axis=1)
    inner = (j > 0) & (j < gammas.size - 1)
    rows = np.nonzero(inner)[0]
    f0, f1, f2 = vals[rows, j[rows] - 1], vals[rows, j[rows]], vals[rows, j[rows] + 1]
    curv = f0 - 2.0 * f1 + f2
    # equally spaced in log(gamma): vertex value of the interpolating parabola
    safe = curv > 0
    out[rows[safe]] = f1[safe] - (f2[safe] - f0[safe]) ** 2 / (8.0 * curv[safe])
    return out


def phibar0(alpha: float, d: int, spec: QuadratureSpec = DEFAULT_QUAD) -> SaddlePoint:
    """Lifted dual value at load ``alpha`` with its saddle ``(c3, gamma)``."""
    check_odd(d)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    c3s, _, _ = _scan_table(d, spec)
    outer = maximize_scalar(
        lambda c3: inner_min(alpha, d, c3, spec).fun,
        C3_BRACKET,
        tol=1e-8,
        prescan=(c3s, _approx_inner_mins(alpha, d, spec)),
    )
    best = inner_min(alpha, d, outer.x, spec)
    return SaddlePoint(
        c3=outer.x,
        gamma=best.x,
        value=best.fun,
        c3_at_edge=outer.at_edge,
        gamma_at_edge=best.at_edge,
        multimodal=outer.multimodal or best.multimodal,
    )


def capacity_lifted(d: int, spec: QuadratureSpec = DEFAULT_QUAD, tol: float = ROOT_TOL) -> CapacityResult:
    """Root in ``alpha`` of :func:`phibar0`, bracketed by ``[1, c_hat(d)]``.

    Both bracket ends are checked; the lower end is halved and the upper
    end stretched by 1% until the signs are right.
    """
    check_odd(d)
    t0 = time.perf_counter()
    plain = capacity_plain(d, spec).alpha_bound
    f = lambda a: phibar0(a, d, spec).value
    lo, hi = 1.0, plain
    try:
        f_lo = f(lo)
        for _ in range(30):
            if f_lo < 0:
                break
            lo /= 2.0
            f_lo = f(lo)
        f_hi = f(hi)
        for _ in range(50):
            if f_hi > 0:
                break
            hi *= 1.01
            f_hi = f(hi)
        if not f_lo < 0 < f_hi:
            raise RootBracketError(lo, hi, f_lo, f_hi)
        root = find_root_increasing(f, Bracket(lo, hi), tol)
        saddle = phibar0(root, d, spec)
    except (ArithmeticError, ValueError) as exc:
        raise CapacityError(d, exc) from exc
    return CapacityResult(
        d=d,
        method=Method.LIFTED,
        alpha_bound=root,
        diagnostics={
            "c3_star": saddle.c3,
            "gamma_star": saddle.gamma,
            "saddle_value": saddle.value,
            "c3_at_edge": float(saddle.c3_at_edge),
            "gamma_at_edge": float(saddle.gamma_at_edge),
            "multimodal": float(saddle.multimodal),
            "plain_bound": plain,
            "bracket_lo": lo,
            "bracket_hi": hi,
            "tol": tol,
            "runtime_ms": 1e3 * (time.perf_counter() - t0),
        },
    )


def saddle_grid(alpha: float, d: int, c3_values, gamma_values, spec: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """Inner objective on a ``(c3, gamma)`` grid, shape ``(len(c3), len(gamma))``."""
    gamma_values = np.asarray(gamma_values, dtype=float)
    return np.stack([np.atleast_1d(inner_objective(alpha, d, c3, gamma_values, spec)) for c3 in c3_values])
