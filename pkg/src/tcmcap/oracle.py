"""Seeded Monte-Carlo estimators for the Gaussian order-statistic sums.

Random streams come from numpy's Philox4x64 counter-based bit generator.
A stream is identified by ``(seed, shard)`` through ``SeedSequence`` spawn
keys, so shards are independent and reproducible on any platform.  Normals
are drawn with numpy's ziggurat sampler (``Generator.standard_normal``).

Each estimator splits ``samples`` into ``shards`` contiguous pieces, runs
each on its own stream and merges the per-shard moments in shard order, so
the result depends only on ``(seed, samples, shards)`` and never on how
many worker threads were used.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .plain_rdt import check_range

__all__ = [
    "SortedSqMagnitudes",
    "OracleEstimate",
    "make_stream",
    "sample_sorted_sq_magnitudes",
    "mc_phi1",
    "mc_phibar1",
    "DEFAULT_SAMPLES",
]

DEFAULT_SAMPLES = 10**6
DEFAULT_SHARDS = 8
_CHUNK = 1 << 16


@dataclass(frozen=True)
class SortedSqMagnitudes:
    p: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.p,):
            raise ValueError("values must have length p")


@dataclass(frozen=True)
class OracleEstimate:
    mean: float
    stderr: float
    samples: int
    seed: int

    def z_score(self, reference: float) -> float:
        if self.stderr == 0:
            return 0.0 if reference == self.mean else float("inf")
        return (self.mean - reference) / self.stderr


def make_stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent Philox stream for ``(seed, *keys)``; no keys means shard 0."""
    spawn_key = tuple(int(k) for k in keys) or (0,)
    ss = np.random.SeedSequence(int(seed) & 0xFFFF_FFFF_FFFF_FFFF, spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(ss))


def _sorted_sq(p: int, n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, p))
    return np.sort(g * g, axis=1)


def sample_sorted_sq_magnitudes(p: int, rng: np.random.Generator) -> SortedSqMagnitudes:
    if p < 1:
        raise ValueError("p must be >= 1")
    return SortedSqMagnitudes(p=p, values=_sorted_sq(p, 1, rng)[0])


def _shard_moments(stat: Callable[[np.ndarray], np.ndarray], p, n, seed, shard):
    rng = make_stream(seed, shard)
    count, mean, m2 = 0, 0.0, 0.0
    left = n
    while left > 0:
        k = min(left, _CHUNK)
        x = stat(_sorted_sq(p, k, rng))
        mu = float(x.mean())
        c2 = float(((x - mu) ** 2).sum())
        # Chan et al. pairwise merge of (count, mean, M2)
        delta = mu - mean
        tot = count + k
        mean += delta * k / tot
        m2 += c2 + delta * delta * count * k / tot
        count = tot
        left -= k
    return count, mean, m2


def _estimate(stat, p, samples, seed, shards, workers) -> OracleEstimate:
    if samples < 2:
        raise ValueError("need at least two samples for a standard error")
    shards = max(1, min(shards, samples))
    sizes = [samples // shards + (1 if i < samples % shards else 0) for i in range(shards)]
    jobs = [(stat, p, n, seed, i) for i, n in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _shard_moments(*a), jobs))
    else:
        parts = [_shard_moments(*a) for a in jobs]
    count, mean, m2 = 0, 0.0, 0.0
    for k, mu, c2 in parts:
        delta = mu - mean
        tot = count + k
        mean += delta * k / tot
        m2 += c2 + delta * delta * count * k / tot
        count = tot
    var = m2 / (count - 1)
    return OracleEstimate(mean=mean, stderr=float(np.sqrt(var / count)), samples=count, seed=seed)


def mc_phi1(
    l: int,
    d: int,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    shards: int = DEFAULT_SHARDS,
    workers: int = 1,
) -> OracleEstimate:
    """MC estimate of the mean sum of the ``l`` smallest of ``d//2 + l`` squared normals."""
    check_range(l, d)
    return _estimate(lambda v: v[:, :l].sum(axis=1), d // 2 + l, samples, seed, shards, workers)


def mc_phibar1(
    l: int,
    d: int,
    c3: float,
    gamma: float,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    shards: int = DEFAULT_SHARDS,
    workers: int = 1,
) -> OracleEstimate:
    """MC estimate of ``E exp(-c3/(4 gamma) * S)`` with ``S`` the same order-statistic sum."""
    check_range(l, d)
    if not (c3 > 0 and gamma > 0):
        raise ValueError(f"c3 and gamma must be positive, got c3={c3}, gamma={gamma}")
    rate = c3 / (4.0 * gamma)
    return _estimate(
        lambda v: np.exp(-rate * v[:, :l].sum(axis=1)), d // 2 + l, samples, seed, shards, workers
    )
