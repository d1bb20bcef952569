"""Exact memorization feasibility for tiny treelike committee machines.

A machine with ``d`` hidden sign neurons sees ``d`` disjoint input blocks
of width ``delta``; with zero thresholds and all-ones output labels it
memorizes ``X`` iff one can pick, for every block, a realizable sign
pattern of that block's samples so that every sample gets a strict
majority of ``+1`` hidden outputs.  Only desk-scale problems are handled
(``m <= 16`` samples).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .oracle import make_stream
from .plain_rdt import check_odd

__all__ = [
    "MAX_SAMPLES",
    "MARGIN_TOL",
    "DegenerateDataError",
    "NetworkShape",
    "SimTrial",
    "DichotomySet",
    "CurvePoint",
    "SuccessCurve",
    "is_realizable",
    "realizable_dichotomies",
    "sweep_dichotomies",
    "dichotomy_count",
    "is_memorizable",
    "run_trial",
    "wendel_probability",
    "wilson_interval",
    "empirical_capacity",
]

MAX_SAMPLES = 16
MARGIN_TOL = 1e-9
DEFAULT_WORK_BUDGET = 10**6


class DegenerateDataError(ValueError):
    """Points are not in general position (zero, parallel or rank-deficient)."""


@dataclass(frozen=True)
class NetworkShape:
    n: int
    d: int
    delta: int

    def __post_init__(self):
        check_odd(self.d)
        if self.delta < 1 or self.n != self.d * self.delta:
            raise ValueError(f"need n = d * delta with delta >= 1, got {self}")

    @classmethod
    def from_blocks(cls, d: int, delta: int) -> "NetworkShape":
        return cls(n=d * delta, d=d, delta=delta)

    def block(self, j: int) -> slice:
        return slice(j * self.delta, (j + 1) * self.delta)


@dataclass
class SimTrial:
    m: int
    data: np.ndarray
    memorizable: bool
    work_units: int
    timed_out: bool


@dataclass(frozen=True)
class DichotomySet:
    block_index: int
    patterns: frozenset

    def __len__(self) -> int:
        return len(self.patterns)

    def as_array(self) -> np.ndarray:
        return np.array(sorted(self.patterns), dtype=np.int8).reshape(len(self.patterns), -1)


def _normalize(points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim != 2:
        raise ValueError("points must be a 2-D array (samples x width)")
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise DegenerateDataError("zero or non-finite point")
    return x / norms[:, None]


def _check_general_position(x: np.ndarray, eps: float = 1e-10) -> None:
    m, width = x.shape
    if m < width:
        if np.linalg.matrix_rank(x, tol=eps) < m:
            raise DegenerateDataError("points are linearly dependent")
        return
    idx = np.array(list(itertools.combinations(range(m), width)))
    dets = np.linalg.det(x[idx])
    if np.any(np.abs(dets) <= eps):
        raise DegenerateDataError(f"{width} of the points are linearly dependent")


def _lp_margin(x_hat: np.ndarray, signs: np.ndarray) -> tuple[float, np.ndarray]:
    """max t s.t. s_k <w, x_k> >= t, |w|_inf <= 1."""
    m, width = x_hat.shape
    a_ub = np.hstack([-(signs[:, None] * x_hat), np.ones((m, 1))])
    c = np.zeros(width + 1)
    c[-1] = -1.0
    res = linprog(
        c, A_ub=a_ub, b_ub=np.zeros(m), bounds=[(-1.0, 1.0)] * width + [(None, 1.0)], method="highs"
    )
    if res.status != 0:
        raise ArithmeticError(f"realizability LP failed: {res.message}")
    return float(res.x[-1]), res.x[:-1]


def is_realizable(points, signs) -> bool:
    """Whether some homogeneous separator puts ``points`` on the sides given by ``signs``."""
    x_hat = _normalize(points)
    t, _ = _lp_margin(x_hat, np.asarray(signs, dtype=float))
    return t > MARGIN_TOL


def _lp_dichotomies(x_hat: np.ndarray) -> set[tuple[int, ...]]:
    m = x_hat.shape[0]
    out: set[tuple[int, ...]] = set()
    # each node: (sign prefix, a witness separating that prefix strictly)
    stack = [((1,), x_hat[0]), ((-1,), -x_hat[0])]
    while stack:
        prefix, w = stack.pop()
        k = len(prefix)
        if k == m:
            out.add(prefix)
            continue
        proj = float(w @ x_hat[k])
        free = 1 if proj > 0 else -1
        if abs(proj) > MARGIN_TOL:
            stack.append((prefix + (free,), w))
            other = [-free]
        else:
            other = [1, -1]
        for s in other:
            cand = np.array(prefix + (s,), dtype=float)
            t, w_new = _lp_margin(x_hat[: k + 1], cand)
            if t > MARGIN_TOL:
                stack.append((prefix + (s,), w_new))
    return out


def sweep_dichotomies(points) -> set[tuple[int, ...]]:
    """Exact dichotomy enumeration for widths 1 and 2 by rotating the separator."""
    x_hat = _normalize(points)
    m, width = x_hat.shape
    if width == 1:
        s = tuple(int(v) for v in np.sign(x_hat[:, 0]))
        return {s, tuple(-v for v in s)}
    if width != 2:
        raise ValueError("angular sweep handles widths 1 and 2 only")
    theta = np.arctan2(x_hat[:, 1], x_hat[:, 0])
    crit = np.sort(np.mod(np.concatenate([theta + np.pi / 2, theta - np.pi / 2]), 2 * np.pi))
    mids = 0.5 * (crit + np.roll(crit, -1))
    mids[-1] += np.pi  # wrap-around cell
    dirs = np.stack([np.cos(mids), np.sin(mids)], axis=1)
    signs = np.sign(dirs @ x_hat.T).astype(int)
    return {tuple(row) for row in signs}


def realizable_dichotomies(block_points, block_index: int = 0, method: str = "lp") -> DichotomySet:
    """All sign patterns of the block's samples realizable by a homogeneous separator.

    ``method="lp"`` grows patterns sample by sample, solving a margin LP
    only for the branch the current witness does not already cover.
    ``method="sweep"`` is the exact angular enumeration for widths 1 and 2;
    ``"auto"`` picks the sweep when it applies.
    """
    x_hat = _normalize(block_points)
    m, width = x_hat.shape
    if m > MAX_SAMPLES:
        raise ValueError(f"at most {MAX_SAMPLES} samples are enumerable, got {m}")
    _check_general_position(x_hat)
    if method == "auto":
        method = "sweep" if width <= 2 else "lp"
    if method == "sweep":
        pats = sweep_dichotomies(x_hat)
    elif method == "lp":
        pats = _lp_dichotomies(x_hat)
    else:
        raise ValueError(f"unknown method {method!r}")
    return DichotomySet(block_index=block_index, patterns=frozenset(pats))


def dichotomy_count(m: int, width: int) -> int:
    """Homogeneous dichotomies of ``m`` points in general position in ``R^width``."""
    return 2 * sum(math.comb(m - 1, k) for k in range(width))


def _all_plus(x_hat: np.ndarray) -> bool:
    m, width = x_hat.shape
    if width == 1:
        return bool(np.all(x_hat[:, 0] > 0) or np.all(x_hat[:, 0] < 0))
    if width == 2:
        theta = np.sort(np.arctan2(x_hat[:, 1], x_hat[:, 0]))
        gaps = np.diff(np.concatenate([theta, [theta[0] + 2 * np.pi]]))
        return bool(gaps.max() > np.pi)
    t, _ = _lp_margin(x_hat, np.ones(m))
    return t > MARGIN_TOL


def _cover_search(sets: list[np.ndarray], m: int, budget: int) -> tuple[bool, bool, int]:
    """DFS for one pattern per block with every column sum >= 1."""
    order = sorted(range(len(sets)), key=lambda j: len(sets[j]))
    pats = []
    for j in order:
        p = sets[j]
        pats.append(p[np.argsort(-p.sum(axis=1), kind="stable")].astype(np.int32))
    work = 0

    def dfs(level: int, partial: np.ndarray) -> bool | None:
        nonlocal work
        remaining = len(pats) - level - 1
        cand = partial[None, :] + pats[level]
        work += cand.shape[0]
        if work > budget:
            return None
        ok = np.all(cand + remaining >= 1, axis=1)
        for row in cand[ok]:
            if remaining == 0:
                return True
            found = dfs(level + 1, row)
            if found is None or found:
                return found
        return False

    found = dfs(0, np.zeros(m, dtype=np.int32))
    if found is None:
        return False, True, work
    return bool(found), False, work


def _decide(data, shape: NetworkShape, work_budget: int, method: str = "auto") -> tuple[bool, bool, int]:
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[1] != shape.n:
        raise ValueError(f"data must be m x {shape.n}, got {x.shape}")
    m = x.shape[0]
    if not 1 <= m <= MAX_SAMPLES:
        raise ValueError(f"need 1 <= m <= {MAX_SAMPLES}, got {m}")
    if shape.d == 1 and method == "auto":
        x_hat = _normalize(x)
        _check_general_position(x_hat)
        return _all_plus(x_hat), False, 1
    sets = [
        realizable_dichotomies(x[:, shape.block(j)], j, method=method).as_array() for j in range(shape.d)
    ]
    return _cover_search(sets, m, work_budget)


def is_memorizable(trial_data, shape: NetworkShape, work_budget: int = DEFAULT_WORK_BUDGET) -> tuple[bool, bool]:
    """``(memorizable, timed_out)`` for data ``X`` with all-ones labels.

    A timed-out search reports ``memorizable=False``.
    """
    ok, timed_out, _ = _decide(trial_data, shape, work_budget)
    return ok, timed_out


def run_trial(data, shape: NetworkShape, work_budget: int = DEFAULT_WORK_BUDGET) -> SimTrial:
    ok, timed_out, work = _decide(data, shape, work_budget)
    return SimTrial(m=data.shape[0], data=data, memorizable=ok, work_units=work, timed_out=timed_out)


def wendel_probability(m: int, n: int) -> float:
    """Chance that ``m`` symmetric points in general position in ``R^n`` fit in an open half-space."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    if m <= n:
        return 1.0
    return sum(math.comb(m - 1, k) for k in range(n)) / 2 ** (m - 1)


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    # the exact endpoints at k = 0 and k = n are 0 and 1; avoid round-off there
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class CurvePoint:
    alpha: float
    m: int
    trials: int
    successes: int
    timeouts: int
    ci_lo: float
    ci_hi: float

    @property
    def success_frac(self) -> float:
        return self.successes / self.trials

    @property
    def timeout_frac(self) -> float:
        return self.timeouts / self.trials


@dataclass
class SuccessCurve:
    shape: NetworkShape
    seed: int
    points: list[CurvePoint] = field(default_factory=list)
    resamples: int = 0  # degenerate draws replaced


def samples_for(alpha: float, n: int) -> int:
    return int(math.floor(alpha * n + 0.5))


def empirical_capacity(
    shape: NetworkShape,
    alpha_grid: Sequence[float],
    trials: int,
    seed: int,
    work_budget: int = DEFAULT_WORK_BUDGET,
) -> SuccessCurve:
    """Memorization success rate per load ``alpha = m/n`` over seeded Gaussian trials.

    Trial ``t`` at grid index ``i`` draws from the stream ``(seed, i, t)``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    ms = [samples_for(a, shape.n) for a in alpha_grid]
    for a, m in zip(alpha_grid, ms):
        if not 1 <= m <= MAX_SAMPLES:
            raise ValueError(f"alpha={a} gives m={m}, outside [1, {MAX_SAMPLES}]")
    curve = SuccessCurve(shape=shape, seed=seed)
    for i, (alpha, m) in enumerate(zip(alpha_grid, ms)):
        wins = timeouts = 0
        for t in range(trials):
            rng = make_stream(seed, i, t)
            while True:
                data = rng.standard_normal((m, shape.n))
                try:
                    ok, timed_out, _ = _decide(data, shape, work_budget)
                    break
                except DegenerateDataError:
                    curve.resamples += 1
            wins += ok
            timeouts += timed_out
        lo, hi = wilson_interval(wins, trials)
        curve.points.append(
            CurvePoint(alpha=float(alpha), m=m, trials=trials, successes=wins, timeouts=timeouts, ci_lo=lo, ci_hi=hi)
        )
    return curve
