"""Numerical kernels shared by the capacity modules.

Everything here is a pure function of its arguments.  Integrands passed to
:func:`integrate_halfline` are expected to be vectorized: called with a 1-D
array of abscissae of shape ``(N,)`` they return an array of shape
``(..., N)``, which lets one call integrate a whole family of related
integrands on a shared set of nodes.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import optimize, special

log = logging.getLogger(__name__)

__all__ = [
    "QuadratureSpec",
    "Bracket",
    "ScalarMinimum",
    "QuadratureError",
    "RootBracketError",
    "DEFAULT_QUAD",
    "ROOT_TOL",
    "erf",
    "erfc",
    "log_binomial",
    "binomial_cdf",
    "integrate_halfline",
    "minimize_scalar",
    "maximize_scalar",
    "find_root_increasing",
]


class QuadratureError(ArithmeticError):
    """Adaptive quadrature ran out of refinements before meeting tolerance."""


class RootBracketError(ValueError):
    """The bracket handed to a root finder does not straddle a sign change."""

    def __init__(self, lo: float, hi: float, f_lo: float, f_hi: float):
        self.lo, self.hi, self.f_lo, self.f_hi = lo, hi, f_lo, f_hi
        super().__init__(
            f"no sign change on [{lo:.6g}, {hi:.6g}]: f(lo)={f_lo:.6g}, f(hi)={f_hi:.6g}"
        )


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_refinements: int = 40
    # the half-line is truncated once the last doubling segment contributes
    # less than tail_cutoff times the running estimate
    tail_cutoff: float = 1e-13

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.tail_cutoff > 0):
            raise ValueError(f"tolerances must be positive: {self}")
        if self.max_refinements < 1:
            raise ValueError("max_refinements must be >= 1")


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bracket needs lo < hi, got [{self.lo}, {self.hi}]")


DEFAULT_QUAD = QuadratureSpec()
ROOT_TOL = 1e-9


# ---------------------------------------------------------------------------
# special functions and combinatorics


def erf(x):
    """Error function, scalar or elementwise.

    Backed by the Cephes rational approximations in :mod:`scipy.special`,
    which are accurate to a few ulp (absolute error below 1e-16) on the
    whole real line.
    """
    if np.ndim(x) == 0:
        return float(special.erf(x))
    return special.erf(x)


def erfc(x):
    """Complementary error function ``1 - erf(x)`` without cancellation."""
    if np.ndim(x) == 0:
        return float(special.erfc(x))
    return special.erfc(x)


def log_binomial(n, k):
    """Natural log of ``C(n, k)`` through log-gamma.

    Accepts integers or integer arrays.  Raises ``ValueError`` when
    ``k > n`` or when either argument is negative.
    """
    n_arr = np.asarray(n)
    k_arr = np.asarray(k)
    if np.any(k_arr < 0) or np.any(n_arr < 0):
        raise ValueError("log_binomial needs nonnegative arguments")
    if np.any(k_arr > n_arr):
        raise ValueError(f"log_binomial needs k <= n, got n={n}, k={k}")
    if n_arr.ndim == 0 and k_arr.ndim == 0:
        n_i, k_i = int(n_arr), int(k_arr)
        return math.lgamma(n_i + 1) - math.lgamma(k_i + 1) - math.lgamma(n_i - k_i + 1)
    n_f = n_arr.astype(float)
    k_f = k_arr.astype(float)
    return special.gammaln(n_f + 1) - special.gammaln(k_f + 1) - special.gammaln(n_f - k_f + 1)


def binomial_cdf(k, n, t):
    """``P(Bin(n, t) <= k)`` elementwise, via the regularized incomplete beta."""
    return special.bdtr(k, n, t)


# ---------------------------------------------------------------------------
# quadrature

_GL_ORDER = 16
_GL_X, _GL_W = leggauss(_GL_ORDER)


def _panel_rules(f, lo: np.ndarray, hi: np.ndarray):
    """Whole-panel and two-half Gauss-Legendre estimates for every panel."""
    mid = 0.5 * (lo + hi)
    # one evaluation batch: whole panel, left half, right half
    ends = np.stack([lo, lo, mid])
    widths = np.stack([hi - lo, mid - lo, hi - mid])
    x = ends[..., None] + 0.5 * widths[..., None] * (_GL_X + 1.0)
    vals = np.asarray(f(x.ravel()), dtype=float)
    vals = vals.reshape(vals.shape[:-1] + x.shape)
    rules = 0.5 * widths * np.tensordot(vals, _GL_W, axes=([-1], [0]))
    coarse = rules[..., 0, :]
    fine = rules[..., 1, :] + rules[..., 2, :]
    return coarse, fine


def _adaptive(f, edges: np.ndarray, spec: QuadratureSpec, scale=None):
    """Adaptive composite Gauss-Legendre over consecutive panels."""
    lo, hi = edges[:-1].astype(float), edges[1:].astype(float)
    span = edges[-1] - edges[0]
    accepted = None
    for _ in range(spec.max_refinements):
        coarse, fine = _panel_rules(f, lo, hi)
        err = np.abs(fine - coarse)
        pending = fine.sum(axis=-1)
        total = pending if accepted is None else accepted + pending
        ref = np.abs(total) if scale is None else np.maximum(np.abs(total), np.abs(scale))
        tol = np.maximum(spec.abs_tol, spec.rel_tol * ref)
        share = (hi - lo) / span
        ok = np.all(err <= tol[..., None] * share, axis=tuple(range(err.ndim - 1)))
        done = (fine[..., ok]).sum(axis=-1)
        accepted = done if accepted is None else accepted + done
        if ok.all():
            return accepted
        lo, hi = lo[~ok], hi[~ok]
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        order = np.argsort(lo)
        lo, hi = lo[order], hi[order]
    raise QuadratureError(
        f"quadrature did not converge after {spec.max_refinements} refinements "
        f"({lo.size} unresolved panels near x={lo[0]:.4g})"
    )


def integrate_halfline(
    f: Callable[[np.ndarray], np.ndarray],
    spec: QuadratureSpec = DEFAULT_QUAD,
    points: Sequence[float] | None = None,
):
    """Integrate a vectorized integrand over ``[0, inf)``.

    The integrand must be continuous and eventually monotone with at least
    exponential decay.  The domain is grown by doubling until the last
    added segment ``[U/2, U]`` holds less than ``spec.tail_cutoff`` of the
    running total; for such integrands that segment dominates everything
    beyond ``U``.

    ``points`` are optional interior breakpoints used to seed the panels;
    give them when the integrand is concentrated on a scale much smaller
    than one.
    """
    upper = 8.0
    pts = sorted(p for p in (points or ()) if p > 0)
    if pts:
        upper = max(upper, 2.0 * pts[-1])
    edges = np.unique(np.concatenate([[0.0], pts, np.arange(1.0, upper + 0.5)]))
    edges = edges[edges <= upper]
    total = _adaptive(f, edges, spec)
    for _ in range(64):
        seg = _adaptive(f, np.array([upper, 2.0 * upper]), spec, scale=total)
        total = total + seg
        upper *= 2.0
        big = np.abs(seg) > spec.tail_cutoff * np.abs(total)
        if not np.any(big):
            break
    else:
        raise QuadratureError("integrand tail does not decay on [0, 2^64]")
    if np.ndim(total) == 0:
        return float(total)
    return total


# ---------------------------------------------------------------------------
# scalar optimization and root finding


@dataclass(frozen=True)
class ScalarMinimum:
    x: float
    fun: float
    # local minima seen in the pre-scan; more than one means the caller's
    # unimodality assumption is in doubt
    basins: int
    at_edge: bool

    @property
    def multimodal(self) -> bool:
        return self.basins > 1

    def __iter__(self):
        # (x_star, f_star) unpacking
        return iter((self.x, self.fun))


def _count_basins(v: np.ndarray) -> int:
    n = v.size
    count = 0
    for i in range(n):
        left = v[i - 1] if i > 0 else np.inf
        right = v[i + 1] if i < n - 1 else np.inf
        if v[i] < left and v[i] <= right:
            count += 1
    return max(count, 1)


def minimize_scalar(
    f: Callable,
    bracket: Bracket,
    tol: float = ROOT_TOL,
    scan_points: int = 64,
    log_scale: bool | None = None,
    vectorized: bool = False,
    prescan: tuple[np.ndarray, np.ndarray] | None = None,
) -> ScalarMinimum:
    """Minimize ``f`` on ``bracket`` by a coarse scan followed by Brent refinement.

    The scan (log-spaced when ``lo > 0``) picks the best grid point and
    counts descent basins.  Brent's bounded method then refines inside the
    two neighbouring grid cells.  With ``vectorized=True`` the scan calls
    ``f`` once on the whole grid.  ``prescan=(grid, values)`` supplies an
    already evaluated (possibly approximate) scan instead.
    """
    if log_scale is None:
        log_scale = bracket.lo > 0
    if prescan is not None:
        grid, vals = (np.asarray(a, dtype=float) for a in prescan)
    elif log_scale:
        if bracket.lo <= 0:
            raise ValueError("log-spaced scan needs a positive bracket")
        grid = np.geomspace(bracket.lo, bracket.hi, scan_points)
    else:
        grid = np.linspace(bracket.lo, bracket.hi, scan_points)
    if prescan is not None:
        pass
    elif vectorized:
        vals = np.asarray(f(grid), dtype=float)
    else:
        vals = np.array([f(x) for x in grid], dtype=float)
    vals = np.where(np.isnan(vals), np.inf, vals)
    i = int(np.argmin(vals))
    basins = _count_basins(vals)
    if basins > 1:
        log.debug("pre-scan found %d basins on [%g, %g]", basins, bracket.lo, bracket.hi)
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    scalar = (lambda x: float(f(np.array([x]))[0])) if vectorized else f
    res = optimize.minimize_scalar(
        scalar, bounds=(lo, hi), method="bounded", options={"xatol": tol, "maxiter": 500}
    )
    x, fx = float(res.x), float(res.fun)
    if prescan is None and vals[i] < fx:
        x, fx = float(grid[i]), float(vals[i])
    edge = (i == 0 and x - bracket.lo <= 2 * tol + 1e-8 * abs(x)) or (
        i == grid.size - 1 and bracket.hi - x <= 2 * tol + 1e-8 * abs(x)
    )
    return ScalarMinimum(x=x, fun=fx, basins=basins, at_edge=bool(edge))


def maximize_scalar(f: Callable, bracket: Bracket, tol: float = ROOT_TOL, **kwargs) -> ScalarMinimum:
    """Maximize ``f``; the returned ``fun`` is the maximum itself."""
    if kwargs.get("vectorized"):
        neg = lambda x: -np.asarray(f(x))
    else:
        neg = lambda x: -f(x)
    if kwargs.get("prescan") is not None:
        grid, vals = kwargs["prescan"]
        kwargs["prescan"] = (grid, -np.asarray(vals, dtype=float))
    res = minimize_scalar(neg, bracket, tol, **kwargs)
    return ScalarMinimum(x=res.x, fun=-res.fun, basins=res.basins, at_edge=res.at_edge)


def find_root_increasing(
    f: Callable[[float], float],
    bracket: Bracket,
    tol: float = ROOT_TOL,
    max_iter: int = 200,
) -> float:
    """Bisection for a nondecreasing ``f`` with ``f(lo) < 0 < f(hi)``."""
    lo, hi = bracket.lo, bracket.hi
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if not (f_lo < 0 < f_hi):
        raise RootBracketError(lo, hi, f_lo, f_hi)
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid < 0:
            lo = mid
        elif f_mid > 0:
            hi = mid
        else:
            return mid
    return 0.5 * (lo + hi)
