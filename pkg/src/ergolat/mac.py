"""K-user MAC via virtual-user decomposition and successive cancellation.

Every transmit antenna is an independently encoded virtual user, so a
K-user MIMO MAC with N_t antennas each becomes an L = K N_t user SIMO MAC.
Corner points of the rate region come from the L! successive-cancellation
decoding orders; the region is their convex hull (plus axis intercepts).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import channel as ch
from .channel import COMPLEX, FadingModel
from .lattices import NestedPair, mod_lattice
from .mc import McEstimate, run_chunked, scalar_estimate
from .transceiver import (AMBIGUOUS, AMBIGUITY_SPHERE, OUTSIDE, UNIQUE,
                          DecodeResult, ambiguity_decode, encode, euclidean_decode)

LOG2E = np.log2(np.e)

REGION_CSV_FIELDS = ["order_id", "sum_rate_bits", "ci_halfwidth_bits"]


class MacError(ValueError):
    pass


@dataclass(frozen=True)
class MacConfig:
    """Symmetric-antenna K-user MAC; virtual powers default to a uniform split."""

    users: int
    n_t: int
    n_r: int
    rho_star: tuple          # per-user per-antenna SNR, length K
    block_len: int = 1
    mode: str = COMPLEX
    virtual_powers: tuple = field(default=None)

    def __post_init__(self):
        rho = self.rho_star
        if np.isscalar(rho):
            rho = (float(rho),) * self.users
        object.__setattr__(self, "rho_star", tuple(float(r) for r in rho))
        if len(self.rho_star) != self.users:
            raise MacError("need one rho_star per user")
        if self.virtual_powers is None:
            powers = tuple(r for r in self.rho_star for _ in range(self.n_t))
            object.__setattr__(self, "virtual_powers", powers)
        else:
            object.__setattr__(self, "virtual_powers",
                               tuple(float(p) for p in self.virtual_powers))
        if len(self.virtual_powers) != self.L:
            raise MacError("need one virtual power per virtual user")
        for k in range(self.users):
            section = self.virtual_powers[k * self.n_t:(k + 1) * self.n_t]
            if abs(sum(section) - self.n_t * self.rho_star[k]) > 1e-9:
                raise MacError("virtual powers must sum to N_t * rho_star per user")

    @property
    def L(self) -> int:
        return self.users * self.n_t

    @property
    def expand(self) -> int:
        return 2 if self.mode == COMPLEX else 1

    @property
    def lattice_dim(self) -> int:
        """Real codeword dimension of each virtual user."""
        return self.expand * self.block_len


def check_order(order, L):
    if sorted(order) != list(range(L)):
        raise MacError(f"order {order} is not a permutation of 0..{L - 1}")
    return tuple(order)


@dataclass(frozen=True)
class CornerPoint:
    rates: tuple          # bits per channel use, indexed by virtual user
    ci_halfwidths: tuple
    order: tuple

    @property
    def sum_rate(self) -> float:
        return float(sum(self.rates))


@dataclass(frozen=True)
class RateRegion:
    corners: tuple
    hull_vertices: np.ndarray = None   # 2-D only
    gammas: tuple = None               # (g1, g2, g3, g4), two-user SISO only
    gamma_ses: tuple = None

    def contains(self, r1: float, r2: float, slack: float = 0.0) -> bool:
        g1, g2, g3, g4 = self.gammas
        return (r1 < -g1 + slack and r2 < -g2 + slack
                and (g4 - g2) * r1 + (g3 - g1) * r2 < g1 * g2 - g3 * g4 + slack)


def mac_interference_matrix(order, stage, columns, virtual_powers) -> np.ndarray:
    """F_{pi(stage)} = I + sum_{j > stage} rho_{pi(j)} h_{pi(j)} h_{pi(j)}^H.

    ``stage`` is 1-based; ``columns`` has one channel column per virtual user.
    """
    columns = np.asarray(columns)
    L, n_r = columns.shape
    order = check_order(order, L)
    if not 1 <= stage <= L:
        raise MacError(f"stage must be in 1..{L}")
    f = np.eye(n_r, dtype=columns.dtype)
    for j in range(stage, L):
        h = columns[order[j]][:, None]
        f = f + virtual_powers[order[j]] * (h @ h.conj().T)
    return f


def _draw_columns(model, n, L, n_r, rng):
    cols = np.empty((n, L, n_r), dtype=complex)
    for ell in range(L):
        cols[:, ell, :] = ch.sample_channels(model, n, n_r, 1, rng)[:, :, 0]
    return cols


def _kernel_stage_stats(rng, n, params):
    """Per-stage sums of 1/(1+rho q), its square, and log2(1+rho q)."""
    model, n_r, powers, order = params
    L = len(powers)
    cols = _draw_columns(model, n, L, n_r, rng)
    inv_sum = np.zeros(L)
    inv_sq = np.zeros(L)
    log_sum = np.zeros(L)
    log_sq = np.zeros(L)
    for stage in range(L):
        ell = order[stage]
        f = np.broadcast_to(np.eye(n_r, dtype=complex), (n, n_r, n_r)).copy()
        for j in range(stage + 1, L):
            hj = cols[:, order[j], :]
            f += powers[order[j]] * (hj[:, :, None] @ hj[:, None, :].conj())
        h = cols[:, ell, :]
        q = np.einsum("ni,ni->n", h.conj(), np.linalg.solve(f, h[:, :, None])[:, :, 0]).real
        val = 1.0 / (1.0 + powers[ell] * q)
        logv = np.log1p(powers[ell] * q) * LOG2E
        inv_sum[ell] = val.sum()
        inv_sq[ell] = (val * val).sum()
        log_sum[ell] = logv.sum()
        log_sq[ell] = (logv * logv).sum()
    return (inv_sum, inv_sq, log_sum, log_sq)


def stage_statistics(config: MacConfig, model, order, samples=100_000, seed=0, workers=None):
    """Per-virtual-user E[1/(1 + rho q)] and E[log2(1 + rho q)] with ses."""
    order = check_order(order, config.L)
    sums = run_chunked(_kernel_stage_stats, (model, config.n_r, config.virtual_powers, order),
                       samples, seed, workers=workers)
    inv_sum, inv_sq, log_sum, log_sq = sums
    n = samples
    inv_mean = inv_sum / n
    inv_se = np.sqrt(np.maximum(inv_sq / n - inv_mean ** 2, 0.0) / n)
    log_mean = log_sum / n
    log_se = np.sqrt(np.maximum(log_sq / n - log_mean ** 2, 0.0) / n)
    return inv_mean, inv_se, log_mean, log_se


def corner_rates_mc(config: MacConfig, model, order, samples=100_000, seed=0,
                    max_ci=None, workers=None) -> CornerPoint:
    """Corner point R_{pi(l)} = -log2 E[1/(1 + rho_{pi(l)} h^H F^{-1} h)]."""
    inv_mean, inv_se, _, _ = stage_statistics(config, model, order, samples, seed, workers)
    rates = -np.log2(inv_mean)
    cis = 1.96 * inv_se / (inv_mean * math.log(2.0))
    if max_ci is not None and np.any(cis > max_ci):
        raise MacError(f"corner-rate CI {cis.max():.3g} exceeds requested {max_ci:.3g}")
    return CornerPoint(rates=tuple(float(r) for r in rates),
                       ci_halfwidths=tuple(float(c) for c in cis),
                       order=tuple(order))


def stage_noise_scales(config: MacConfig, model, order, samples=100_000, seed=0):
    """Per-real-dimension equivalent-noise second moments rho_l E[1/(1+rho_l q_l)]."""
    inv_mean, _, _, _ = stage_statistics(config, model, order, samples, seed)
    return np.asarray(config.virtual_powers) * inv_mean


def all_corner_points(config: MacConfig, model, samples=100_000, seed=0, max_orders=720):
    """Corner points for every decoding order (L! capped at 6! = 720)."""
    if math.factorial(config.L) > max_orders:
        raise MacError("too many decoding orders; L capped at 6")
    corners = []
    for i, order in enumerate(itertools.permutations(range(config.L))):
        corners.append(corner_rates_mc(config, model, order, samples, seed + i))
    return corners


def _kernel_sum_capacity(rng, n, params):
    model, n_r, powers = params
    L = len(powers)
    cols = _draw_columns(model, n, L, n_r, rng)
    g = np.broadcast_to(np.eye(n_r, dtype=complex), (n, n_r, n_r)).copy()
    for ell in range(L):
        h = cols[:, ell, :]
        g += powers[ell] * (h[:, :, None] @ h[:, None, :].conj())
    sign, logdet = np.linalg.slogdet(g)
    vals = logdet / math.log(2.0)
    return (vals.sum(), (vals * vals).sum())


def sum_capacity_mc(config: MacConfig, model, samples=100_000, seed=0,
                    workers=None) -> McEstimate:
    """E[log2 det(I + sum_k rho H_k H_k^H)] over the virtual-user columns."""
    return scalar_estimate(_kernel_sum_capacity,
                           (model, config.n_r, config.virtual_powers),
                           samples, seed, workers=workers)


def two_user_region(config: MacConfig, model, samples=100_000, seed=0) -> RateRegion:
    """Two-user SISO region via gamma_1..gamma_4 plus both corner points."""
    if config.L != 2 or config.n_r != 1:
        raise MacError("two_user_region needs K=2, N_t=N_r=1")
    c01 = corner_rates_mc(config, model, (0, 1), samples, seed)
    c10 = corner_rates_mc(config, model, (1, 0), samples, seed + 1)
    # order (0,1): user 0 decoded first through interference -> R0 = -g3, R1 = -g2
    g3 = -c01.rates[0]
    g2 = -c01.rates[1]
    g1 = -c10.rates[0]
    g4 = -c10.rates[1]
    ses = (c10.ci_halfwidths[0], c01.ci_halfwidths[1],
           c01.ci_halfwidths[0], c10.ci_halfwidths[1])
    pts = [(0.0, 0.0), (-g1, 0.0), (0.0, -g2),
           (c01.rates[0], c01.rates[1]), (c10.rates[0], c10.rates[1])]
    hull = _hull_2d(np.array(pts))
    return RateRegion(corners=(c01, c10), hull_vertices=hull,
                      gammas=(g1, g2, g3, g4), gamma_ses=ses)


def _hull_2d(points: np.ndarray) -> np.ndarray:
    from scipy.spatial import ConvexHull

    uniq = np.unique(np.round(points, 12), axis=0)
    if len(uniq) < 3:
        return uniq
    try:
        hull = ConvexHull(uniq)
    except Exception:
        return uniq  # degenerate (collinear) region
    return uniq[hull.vertices]


# -- coded successive-cancellation trials ------------------------------------

def run_mac_trial(config: MacConfig, models, pairs, order, rng, radii,
                  message_indices=None) -> list:
    """One genie-free SIC trial; returns one record per decoding stage.

    ``models`` is one FadingModel shared by all virtual users or a sequence
    of per-user models.  Cancellation always subtracts the Euclidean
    decoder's codeword estimate (the ambiguity decoder may not emit one);
    errors therefore propagate exactly as decoded.
    """
    rng = np.random.default_rng(rng)
    L = config.L
    order = check_order(order, L)
    if isinstance(models, FadingModel):
        models = [models] * L
    uses, expand, n_r = config.block_len, config.expand, config.n_r
    rx_dim = expand * n_r

    cws = []
    for ell in range(L):
        idx = message_indices[ell] if message_indices else int(rng.integers(pairs[ell].codebook_size()))
        cws.append(encode(pairs[ell], idx, rng))

    h_seq = np.empty((L, uses, rx_dim, expand))
    for ell in range(L):
        cols = ch.sample_channels(models[ell], uses, n_r, 1, rng)
        h_seq[ell] = ch.realify(cols) if config.mode == COMPLEX else cols.real

    y = rng.standard_normal((uses, rx_dim))
    for ell in range(L):
        x_seq = cws[ell].x.reshape(uses, expand)
        y = y + np.einsum("urt,ut->ur", h_seq[ell], x_seq)

    records = []
    residual = y
    for stage in range(L):
        ell = order[stage]
        g = np.broadcast_to(np.eye(rx_dim), (uses, rx_dim, rx_dim)).copy()
        for j in range(stage, L):
            hj = h_seq[order[j]]
            g += config.virtual_powers[order[j]] * (hj @ np.swapaxes(hj, 1, 2))
        u = config.virtual_powers[ell] * np.linalg.solve(g, h_seq[ell])
        y_prime = np.einsum("urt,ur->ut", u, residual).ravel() + cws[ell].dither
        amb = ambiguity_decode(y_prime, pairs[ell], radii[ell])
        euc = euclidean_decode(y_prime, pairs[ell])
        ok_amb = amb.ambiguity_outcome == UNIQUE and np.max(np.abs(amb.t_hat - cws[ell].t)) < 1e-6
        ok_euc = np.max(np.abs(euc.t_hat - cws[ell].t)) < 1e-6
        x_hat = mod_lattice(pairs[ell].coarse, euc.t_hat - cws[ell].dither)
        residual = residual - np.einsum("urt,ut->ur", h_seq[ell], x_hat.reshape(uses, expand))
        records.append({
            "stage": stage + 1,
            "virtual_user": ell,
            "ambiguity_outcome": amb.ambiguity_outcome,
            "decoded_ok_ambiguity": bool(ok_amb),
            "decoded_ok_euclidean": bool(ok_euc),
        })
    return records


def run_mac_batch(config: MacConfig, models, pairs, order, trials, seed,
                  epsilon=0.1, noise_samples=50_000) -> list:
    """Aggregate per-stage SIC statistics; decision radii fixed from statistics."""
    order = check_order(order, config.L)
    if isinstance(models, FadingModel):
        scale_model = models
    else:
        scale_model = models[0]
    scales = stage_noise_scales(config, scale_model, order, samples=noise_samples, seed=seed)
    dim = config.lattice_dim
    radii = np.empty(config.L)
    for stage in range(config.L):
        radii[order[stage]] = math.sqrt((1.0 + epsilon) * dim * scales[order[stage]])
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    totals = [dict(err_ambiguity=0, err_euclidean=0, ambiguous=0, outside=0)
              for _ in range(config.L)]
    for _ in range(trials):
        for rec in run_mac_trial(config, models, pairs, order, rng, radii):
            t = totals[rec["stage"] - 1]
            t["err_ambiguity"] += not rec["decoded_ok_ambiguity"]
            t["err_euclidean"] += not rec["decoded_ok_euclidean"]
            t["ambiguous"] += rec["ambiguity_outcome"] == AMBIGUOUS
            t["outside"] += rec["ambiguity_outcome"] == OUTSIDE
    rows = []
    for stage in range(config.L):
        rows.append({
            "stage": stage + 1,
            "virtual_user": order[stage],
            "rho": config.virtual_powers[order[stage]],
            "n": dim,
            "rate_bits_per_dim": pairs[order[stage]].rate_bits_per_dim,
            "trials": trials,
            **totals[stage],
        })
    return rows
