"""Chunked Monte Carlo driver with reproducible seeding.

Estimators split their sample budget into fixed-size chunks, each owning an
independent RNG stream spawned from the master seed.  Chunk results are
reduced in chunk order, so a given seed produces bit-identical output for
any worker count.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

CHUNK_SIZE = 1 << 15

WORKERS_ENV = "ERGOLAT_WORKERS"


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean with its sampling uncertainty."""

    mean: float
    std_error: float
    samples: int

    @property
    def ci95_halfwidth(self) -> float:
        return 1.96 * self.std_error

    @classmethod
    def from_sums(cls, total: float, total_sq: float, n: int) -> "McEstimate":
        mean = total / n
        var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
        return cls(mean=mean, std_error=np.sqrt(var / n), samples=n)


def resolve_workers(workers=None):
    """Worker count: explicit arg, else ERGOLAT_WORKERS, else serial."""
    if workers is not None:
        return max(int(workers), 1)
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(int(env), 1)
    return 1


def default_workers_from_env():
    """CLI policy: env var wins, otherwise all logical cores."""
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(int(env), 1)
    return os.cpu_count() or 1


def _run_one(args):
    kernel, seed, n, params = args
    rng = np.random.default_rng(seed)
    return kernel(rng, n, params)


def chunk_sizes(samples: int, chunk: int = CHUNK_SIZE):
    sizes = [chunk] * (samples // chunk)
    if samples % chunk:
        sizes.append(samples % chunk)
    return sizes


def run_chunked(kernel, params, samples: int, seed: int, workers=None, chunk: int = CHUNK_SIZE):
    """Map ``kernel(rng, n, params)`` over seeded chunks, reduce in order.

    The kernel returns a tuple of accumulators (floats or arrays) that are
    summed elementwise across chunks.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    sizes = chunk_sizes(samples, chunk)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(kernel, s, n, params) for s, n in zip(seeds, sizes)]
    nworkers = resolve_workers(workers)
    if nworkers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]
    out = list(results[0])
    for res in results[1:]:
        for i, acc in enumerate(res):
            out[i] = out[i] + acc
    return tuple(out)


def scalar_estimate(kernel, params, samples, seed, workers=None) -> McEstimate:
    """Run a kernel returning (sum, sum_of_squares) and wrap as McEstimate."""
    total, total_sq = run_chunked(kernel, params, samples, seed, workers=workers)
    return McEstimate.from_sums(float(total), float(total_sq), samples)
