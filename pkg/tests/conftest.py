"""Shared brute-force oracles, independent of the library's search paths.

All oracles enumerate candidates as (codeword + p * shift) grids with numpy,
never touching the package's sphere enumeration.
"""
import itertools

import numpy as np
import pytest


def all_codewords(gen, p):
    gen = np.asarray(gen, dtype=np.int64)
    k = gen.shape[0]
    return np.array([(np.array(m) @ gen) % p
                     for m in itertools.product(range(p), repeat=k)])


def _candidates(gen, p, scale, s, guard):
    """All lattice points c + p(z + dz) near s, shape (ncand, n)."""
    s = np.asarray(s, dtype=float)
    n = s.shape[0]
    cws = all_codewords(gen, p)
    deltas = np.array(list(itertools.product(range(-guard, guard + 1), repeat=n)))
    z = np.round((s / scale - cws) / p)  # (ncw, n)
    cand = (cws[:, None, :] + p * (z[:, None, :] + deltas[None, :, :])) * scale
    return cand.reshape(-1, n)


def brute_nearest(gen, p, scale, s, guard=1):
    """Exhaustive closest point of scale*(C + pZ^n): all cosets, guarded shifts."""
    cand = _candidates(gen, p, scale, s, guard)
    d = np.sum((np.asarray(s, dtype=float) - cand) ** 2, axis=1)
    i = int(np.argmin(d))
    return cand[i], float(d[i])


def brute_count_within(gen, p, scale, center, radius, guard=2):
    """Exhaustive count of lattice points inside the closed ball."""
    cand = np.unique(_candidates(gen, p, scale, center, guard), axis=0)
    d = np.sum((np.asarray(center, dtype=float) - cand) ** 2, axis=1)
    mask = d <= radius ** 2 + 1e-9
    return int(mask.sum()), cand[mask]


def rejection_second_moment(gen, p, scale, box_halfwidth, samples, seed):
    """Voronoi second moment by rejection from a box known to contain V."""
    rng = np.random.default_rng(seed)
    gen = np.asarray(gen, dtype=np.int64)
    n = gen.shape[1]
    draws = rng.uniform(-box_halfwidth, box_halfwidth, size=(samples, n))
    cws = all_codewords(gen, p)
    deltas = np.array(list(itertools.product((-1, 0, 1), repeat=n)))
    best = np.full(samples, np.inf)
    best_norm = np.zeros(samples)
    for c in cws:
        z = np.round((draws / scale - c) / p)
        for dz in deltas:
            pts = (c + p * (z + dz)) * scale
            d = np.sum((draws - pts) ** 2, axis=1)
            better = d < best - 1e-12
            best[better] = d[better]
            best_norm[better] = np.sum(pts[better] ** 2, axis=1)
    kept = np.sum(draws ** 2, axis=1)[best_norm < 1e-12] / n
    return kept.mean(), kept.std(ddof=1) / np.sqrt(len(kept)), len(kept)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260809)
