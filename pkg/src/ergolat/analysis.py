"""Monte Carlo evaluation of the rate, capacity, and gap expressions,
the corollary bound evaluators, and the appendix-lemma verification checks.

All outputs are in bits (log base 2).  Every estimator is deterministic
given its seed: sampling is chunked with spawned substreams and reduced in
fixed order (see mc.py).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import channel as ch
from .channel import COMPLEX, REAL, FadingModel, LinkConfig
from .mc import McEstimate, run_chunked, scalar_estimate

LOG2E = np.log2(np.e)
EULER_GAMMA = 0.5772156649015328606065


class EstimatorError(RuntimeError):
    pass


@dataclass(frozen=True)
class BoundValue:
    name: str
    value: float
    applicable: bool


@dataclass(frozen=True)
class GapReport:
    capacity: McEstimate
    rate: McEstimate
    gap: float
    gap_std_error: float
    applicable_bounds: tuple

    def bounds_hold(self) -> bool:
        """Every applicable bound >= gap minus the combined 95% CI."""
        slack = self.gap - 1.96 * self.gap_std_error
        return all(b.value >= slack for b in self.applicable_bounds if b.applicable)


@dataclass(frozen=True)
class MatrixMcEstimate:
    mean: np.ndarray
    std_error: np.ndarray
    samples: int


# -- fading power draws -------------------------------------------------------

def _power_draws(rng, n, model: FadingModel, n_r: int = 1):
    """n draws of ||h||^2 for an n_r x 1 channel column."""
    if model.kind == "rayleigh":
        return rng.gamma(float(n_r), 1.0, size=n)
    if model.kind == "nakagami":
        return rng.gamma(model.m * n_r, 1.0 / model.m, size=n)
    h = model.fixed_matrix()
    return np.full(n, float(np.sum(np.abs(h) ** 2)))


# -- MC kernels (top-level for picklability) ----------------------------------

def _kernel_siso_pair(rng, n, params):
    model, rho = params
    x = _power_draws(rng, n, model)
    inv = 1.0 / (1.0 + rho * x)
    log = np.log1p(rho * x) * LOG2E
    return (inv.sum(), (inv * inv).sum(), log.sum(), (log * log).sum(), (inv * log).sum())


def _kernel_alpha(rng, n, params):
    model, rho = params
    x = _power_draws(rng, n, model)
    b = 1.0 / (1.0 + rho * x)
    a = x * b
    return (a.sum(), (a * a).sum(), b.sum(), (b * b).sum(), (a * b).sum())


def _kernel_matrix_inverse(rng, n, params):
    model, n_t, n_r, rho, mode = params
    if mode == COMPLEX:
        h = ch.sample_channels(model, n, n_r, n_t, rng)
        gram = np.swapaxes(h.conj(), 1, 2) @ h
        eye = np.eye(n_t)
        half = 1.0
    else:
        h = _real_channels(rng, n, model, n_r, n_t)
        gram = np.swapaxes(h, 1, 2) @ h
        eye = np.eye(n_t)
        half = 0.5
    inv = np.linalg.inv(eye + rho * gram)
    mean_c = inv.mean(axis=0)
    sign, logdet = np.linalg.slogdet(mean_c)
    rate_c = -half * logdet / math.log(2.0)
    return (inv.sum(axis=0), rate_c, rate_c * rate_c, 1.0)


def _kernel_capacity(rng, n, params):
    model, n_t, n_r, rho, mode = params
    if mode == COMPLEX:
        h = ch.sample_channels(model, n, n_r, n_t, rng)
        gram = np.swapaxes(h.conj(), 1, 2) @ h
        half = 1.0
    else:
        h = _real_channels(rng, n, model, n_r, n_t)
        gram = np.swapaxes(h, 1, 2) @ h
        half = 0.5
    sign, logdet = np.linalg.slogdet(np.eye(n_t) + rho * gram)
    vals = half * logdet / math.log(2.0)
    return (vals.sum(), (vals * vals).sum())


def _real_channels(rng, n, model, n_r, n_t):
    cfg = LinkConfig(n_t=n_t, n_r=n_r, rho=1.0, block_len=n, mode=REAL)
    return ch.channel_uses(cfg, model, rng)


def _kernel_mean_inv_gram(rng, n, params):
    model, n_t, n_r, rho, mode = params
    cfg = LinkConfig(n_t=n_t, n_r=n_r, rho=rho, block_len=n, mode=mode)
    h = ch.channel_uses(cfg, model, rng)
    gram = np.swapaxes(h, 1, 2) @ h
    inv = np.linalg.inv(np.eye(cfg.tx_dim) + rho * gram)
    return (inv.sum(axis=0),)


def _kernel_wishart_inv(rng, n, params):
    m_rows, n_cols = params
    g = (rng.standard_normal((n, m_rows, n_cols)) + 1j * rng.standard_normal((n, m_rows, n_cols))) / np.sqrt(2.0)
    w = np.swapaxes(g.conj(), 1, 2) @ g
    inv = np.linalg.inv(w)
    return (inv.sum(axis=0), (np.abs(inv) ** 2).sum(axis=0))


def _kernel_mac_pair(rng, n, params):
    model, rho = params
    x1 = _power_draws(rng, n, model)
    x2 = _power_draws(rng, n, model)
    cap = np.log1p(rho * (x1 + x2)) * LOG2E
    frac = (1.0 + rho * x1) / (1.0 + rho * x1 + rho * x2)
    inv = 1.0 / (1.0 + rho * x1)
    return (
        cap.sum(), (cap * cap).sum(),
        frac.sum(), (frac * frac).sum(),
        inv.sum(), (inv * inv).sum(),
        (cap * frac).sum(), (cap * inv).sum(), (frac * inv).sum(),
    )


# -- rate / capacity ----------------------------------------------------------

def achievable_rate_mimo(model, n_t, n_r, rho, samples=100_000, seed=0,
                         mode=COMPLEX, workers=None) -> McEstimate:
    """Scheme rate: -log2 det E[(I + rho H^H H)^{-1}] (halved in real mode).

    The matrix expectation is the mean of per-draw inverses; the standard
    error comes from batch means over the sampling chunks.
    """
    sums = run_chunked(_kernel_matrix_inverse, (model, n_t, n_r, rho, mode),
                       samples, seed, workers=workers)
    mat_sum, rate_sum, rate_sq, n_chunks = sums
    mean = mat_sum / samples
    sign, logdet = np.linalg.slogdet(mean)
    if sign <= 0 or not np.isfinite(logdet):
        raise EstimatorError("mean inverse matrix is numerically singular; increase samples")
    half = 1.0 if mode == COMPLEX else 0.5
    rate = -half * logdet / math.log(2.0)
    if n_chunks > 1:
        cm = rate_sum / n_chunks
        cvar = max(rate_sq / n_chunks - cm * cm, 0.0) * n_chunks / (n_chunks - 1)
        se = math.sqrt(cvar / n_chunks)
    else:
        se = 0.0
    return McEstimate(mean=float(rate), std_error=float(se), samples=samples)


def ergodic_capacity(model, n_t, n_r, rho, samples=100_000, seed=0,
                     mode=COMPLEX, workers=None) -> McEstimate:
    """E[log2 det(I + rho H^H H)] (halved in real mode)."""
    return scalar_estimate(_kernel_capacity, (model, n_t, n_r, rho, mode),
                           samples, seed, workers=workers)


def mean_inverse_gram(model, n_t, n_r, rho, samples=20000, seed=0,
                      mode=COMPLEX, workers=None) -> np.ndarray:
    """E[(I + rho H^T H)^{-1}] for the per-use real (realified) channel."""
    (mat_sum,) = run_chunked(_kernel_mean_inv_gram, (model, n_t, n_r, rho, mode),
                             samples, seed, workers=workers)
    return mat_sum / samples


def sigma_bar_trace_per_dim(model, n_t, n_r, rho, samples=20000, seed=0, mode=COMPLEX) -> float:
    """tr(Sigma_bar) per real codeword dimension: rho tr E[(I+rho H^T H)^{-1}] / tx_dim."""
    mean = mean_inverse_gram(model, n_t, n_r, rho, samples=samples, seed=seed, mode=mode)
    return float(rho * np.trace(mean) / mean.shape[0])


# -- SISO gap and bounds -------------------------------------------------------

def fading_power_sq(model: FadingModel) -> float:
    """E[|h|^4] for scalar fading."""
    if model.kind == "rayleigh":
        return 2.0
    if model.kind == "nakagami":
        return 1.0 + 1.0 / model.m
    return float(np.abs(model.fixed_matrix()[0, 0]) ** 4)


def fading_inv_power(model: FadingModel) -> float:
    """E[1/|h|^2] for scalar fading (inf when the moment diverges)."""
    if model.kind == "rayleigh":
        return np.inf
    if model.kind == "nakagami":
        return 1.0 + 1.0 / (model.m - 1.0) if model.m > 1.0 else np.inf
    return float(1.0 / np.abs(model.fixed_matrix()[0, 0]) ** 2)


def gap_bounds_cor2(model: FadingModel, rho: float):
    """Single-antenna gap bounds with their applicability predicates."""
    e4 = fading_power_sq(model)
    einv = fading_inv_power(model)
    bounds = [
        BoundValue("low_snr", 1.45 * e4 * rho ** 2, rho < 1.0 and np.isfinite(e4)),
        BoundValue("general", 1.0 + np.log2(einv) if np.isfinite(einv) else np.inf,
                   rho >= 1.0 and np.isfinite(einv)),
    ]
    if model.kind == "nakagami":
        val = 1.0 + np.log2(1.0 + 1.0 / (model.m - 1.0)) if model.m > 1.0 else np.inf
        bounds.append(BoundValue("nakagami", val, rho >= 1.0 and model.m > 1.0))
    if model.kind == "rayleigh":
        bounds.append(BoundValue("rayleigh", 0.48 + np.log2(np.log2(1.0 + rho)), rho >= 1.0))
    return bounds


def siso_gap(model, rho, samples=1_000_000, seed=0, workers=None) -> GapReport:
    """Gap = E[log2(1+rho X)] + log2 E[1/(1+rho X)], with Corollary-2 bounds."""
    s_inv, s_inv2, s_log, s_log2, s_cross = run_chunked(
        _kernel_siso_pair, (model, rho), samples, seed, workers=workers)
    n = samples
    m_inv, m_log = s_inv / n, s_log / n
    v_inv = max(s_inv2 / n - m_inv ** 2, 0.0)
    v_log = max(s_log2 / n - m_log ** 2, 0.0)
    cov = s_cross / n - m_inv * m_log
    rate = -np.log2(m_inv)
    rate_se = math.sqrt(v_inv / n) / (m_inv * math.log(2.0))
    cap = m_log
    cap_se = math.sqrt(v_log / n)
    gap = cap + np.log2(m_inv)
    # delta method: d gap = d cap + d m_inv / (m_inv ln 2)
    gap_var = v_log / n + v_inv / (n * (m_inv * math.log(2.0)) ** 2) \
        + 2.0 * cov / (n * m_inv * math.log(2.0))
    gap_se = math.sqrt(max(gap_var, 0.0))
    return GapReport(
        capacity=McEstimate(float(cap), float(cap_se), n),
        rate=McEstimate(float(rate), float(rate_se), n),
        gap=float(gap), gap_std_error=float(gap_se),
        applicable_bounds=tuple(gap_bounds_cor2(model, rho)),
    )


# -- Corollary 1 (MIMO) ---------------------------------------------------------

@dataclass(frozen=True)
class ModelMoments:
    """Channel moment matrices feeding the Corollary-1 bound evaluators."""

    mean_gram: np.ndarray        # E[H^H H], n_t x n_t
    inv_gram: np.ndarray | None  # E[(H^H H)^{-1}] or None when divergent/unknown
    h2: float                    # E[||h||^2]  (n_t = 1)
    h4: float                    # E[||h||^4]  (n_t = 1)
    iid_gaussian: bool = False


def rayleigh_moments(n_t: int, n_r: int) -> ModelMoments:
    """Closed-form moments for i.i.d. CN(0,1) entries (inverse via Lemma 5)."""
    inv = np.eye(n_t) / (n_r - n_t) if n_r > n_t else None
    return ModelMoments(mean_gram=n_r * np.eye(n_t), inv_gram=inv,
                        h2=float(n_r), h4=float(n_r * (n_r + 1)), iid_gaussian=True)


def cor1_wishart_bound(n_t: int, n_r: int) -> float:
    """N_t log2(1 + (N_t+1)/(N_r-N_t)); refuses N_r <= N_t (Lemma 5 diverges)."""
    if n_r <= n_t:
        raise ValueError("Wishart-case bound needs N_r > N_t")
    return n_t * np.log2(1.0 + (n_t + 1.0) / (n_r - n_t))


def gap_bounds_cor1(moments: ModelMoments, n_t: int, n_r: int, rho: float):
    bounds = []
    if moments.inv_gram is not None:
        val = np.log2(np.linalg.det(
            (np.eye(n_t) + moments.mean_gram) @ moments.inv_gram).real)
        bounds.append(BoundValue("general_moment", float(val), n_r >= n_t and rho >= 1.0))
    if moments.iid_gaussian and n_r > n_t:
        bounds.append(BoundValue("rayleigh_wishart", float(cor1_wishart_bound(n_t, n_r)),
                                 rho >= 1.0))
    if n_t == 1 and np.isfinite(moments.h4):
        bounds.append(BoundValue("low_snr_simo", 1.45 * moments.h4 * rho ** 2,
                                 rho < 1.0 / moments.h2))
    return bounds


# -- SNR penalty ----------------------------------------------------------------

def snr_penalty_alpha(model, rho, samples=1_000_000, seed=0, workers=None) -> McEstimate:
    """alpha = E[X/(rho X + 1)] / E[1/(rho X + 1)], the equivalent-SNR factor."""
    s_a, s_a2, s_b, s_b2, s_ab = run_chunked(_kernel_alpha, (model, rho),
                                             samples, seed, workers=workers)
    n = samples
    ma, mb = s_a / n, s_b / n
    va = max(s_a2 / n - ma ** 2, 0.0)
    vb = max(s_b2 / n - mb ** 2, 0.0)
    cab = s_ab / n - ma * mb
    alpha = ma / mb
    var = (va / mb ** 2 + vb * ma ** 2 / mb ** 4 - 2.0 * cab * ma / mb ** 3) / n
    return McEstimate(mean=float(alpha), std_error=math.sqrt(max(var, 0.0)), samples=n)


# -- MAC gap bounds ---------------------------------------------------------------

def mac_gap_bound_cor3(K: int, n_t: int, n_r: int) -> float:
    """Sum over virtual users of log2(1 + (l+1)/(N_r-l)); needs N_r > K N_t."""
    if n_r <= K * n_t:
        raise ValueError("Corollary-3 bound needs N_r > K*N_t")
    return float(sum(np.log2(1.0 + (l + 1.0) / (n_r - l)) for l in range(1, n_t * K + 1)))


def mac_gap_bounds_cor4(model: FadingModel, rho: float):
    e4 = fading_power_sq(model)
    einv = fading_inv_power(model)
    bounds = [
        BoundValue("low_snr", 1.45 * (1.0 + 2.0 * e4) * rho ** 2,
                   rho < 0.5 and np.isfinite(e4)),
        BoundValue("general", 2.0 + np.log2(einv) if np.isfinite(einv) else np.inf,
                   rho >= 0.5 and np.isfinite(einv)),
    ]
    if model.kind == "nakagami":
        val = 2.0 + np.log2(1.0 + 1.0 / (model.m - 1.0)) if model.m > 1.0 else np.inf
        bounds.append(BoundValue("nakagami", val, rho >= 0.5 and model.m > 1.0))
    if model.kind == "rayleigh":
        bounds.append(BoundValue("rayleigh", 1.48 + np.log2(np.log2(1.0 + rho)), rho >= 0.5))
    return bounds


def mac_gap_two_user(model, rho, samples=1_000_000, seed=0, workers=None) -> GapReport:
    """Symmetric two-user SISO sum-rate gap with Corollary-4 bounds.

    gap = E[log2(1+rho X1+rho X2)]
          + log2( E[(1+rho X1)/(1+rho X1+rho X2)] * E[1/(1+rho X1)] ).
    """
    sums = run_chunked(_kernel_mac_pair, (model, rho), samples, seed, workers=workers)
    (s_c, s_c2, s_f, s_f2, s_i, s_i2, s_cf, s_ci, s_fi) = sums
    n = samples
    mc_, mf, mi = s_c / n, s_f / n, s_i / n
    vc = max(s_c2 / n - mc_ ** 2, 0.0)
    vf = max(s_f2 / n - mf ** 2, 0.0)
    vi = max(s_i2 / n - mi ** 2, 0.0)
    c_cf = s_cf / n - mc_ * mf
    c_ci = s_ci / n - mc_ * mi
    c_fi = s_fi / n - mf * mi
    gap = mc_ + np.log2(mf * mi)
    ln2 = math.log(2.0)
    grad = np.array([1.0, 1.0 / (mf * ln2), 1.0 / (mi * ln2)])
    cov = np.array([[vc, c_cf, c_ci], [c_cf, vf, c_fi], [c_ci, c_fi, vi]]) / n
    gap_se = math.sqrt(max(grad @ cov @ grad, 0.0))
    rate = -np.log2(mf) - np.log2(mi)
    rate_se = math.sqrt(max(vf / (mf * ln2) ** 2 + vi / (mi * ln2) ** 2
                            + 2 * c_fi / (mf * mi * ln2 ** 2), 0.0) / n)
    return GapReport(
        capacity=McEstimate(float(mc_), math.sqrt(vc / n), n),
        rate=McEstimate(float(rate), float(rate_se), n),
        gap=float(gap), gap_std_error=float(gap_se),
        applicable_bounds=tuple(mac_gap_bounds_cor4(model, rho)),
    )


# -- Lemma 5: Wishart inverse ------------------------------------------------------

def wishart_inverse_mean(m_rows: int, n_cols: int, samples=100_000, seed=0,
                         workers=None) -> MatrixMcEstimate:
    """MC mean of (G^H G)^{-1} for i.i.d. CN(0,1) G; expect I/(M-N)."""
    if m_rows <= n_cols:
        raise ValueError("Wishart inverse mean needs M > N")
    mat_sum, sq_sum = run_chunked(_kernel_wishart_inv, (m_rows, n_cols),
                                  samples, seed, workers=workers)
    mean = mat_sum / samples
    var = np.maximum(sq_sum / samples - np.abs(mean) ** 2, 0.0)
    return MatrixMcEstimate(mean=mean, std_error=np.sqrt(var / samples), samples=samples)


# -- Lemma 6: exponential integral --------------------------------------------------

def exp_integral_e1(z: float) -> float:
    """E1(z) by power series (z <= 1) or continued fraction (z > 1)."""
    if z <= 0:
        raise ValueError("E1 defined for z > 0")
    if z <= 1.0:
        total = -EULER_GAMMA - math.log(z)
        term = 1.0
        for k in range(1, 60):
            term *= -z / k
            contrib = -term / k
            total += contrib
            if abs(contrib) < 1e-18 * max(abs(total), 1e-300):
                break
        return total
    # modified Lentz continued fraction: E1(z) = e^-z / (z + 1 - 1/(z + 3 - 4/(...)))
    tiny = 1e-300
    b = z + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 200):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-z)


def e1_bound_check(z: float) -> bool:
    """Lemma-6 bound: E1(z) < e^{-z} ln(1 + 1/z)."""
    return exp_integral_e1(z) < math.exp(-z) * math.log1p(1.0 / z)


# -- Lemma 7: PSD dominance -----------------------------------------------------------

def psd_dominance_stat(r: int, m: int, q: int, c: float, samples=1000, seed=0):
    """(all_psd, worst_min_eigenvalue) for A^H (cI + BB^H)^{-1} A - (1/c) Abar^H Abar.

    Abar stacks the rows of V^H A lying in the null eigenspace of B B^H,
    following the eigen-decomposition construction of the proof.
    """
    if r < q + 1:
        raise ValueError("PSD dominance needs r >= q + 1")
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(samples):
        a = (rng.standard_normal((r, m)) + 1j * rng.standard_normal((r, m))) / np.sqrt(2)
        if q == 0:
            lhs = a.conj().T @ a / c
            abar = a
        else:
            b = (rng.standard_normal((r, q)) + 1j * rng.standard_normal((r, q))) / np.sqrt(2)
            bbh = b @ b.conj().T
            lhs = a.conj().T @ np.linalg.solve(c * np.eye(r) + bbh, a)
            evals, vecs = np.linalg.eigh(bbh)
            null_vecs = vecs[:, : r - q]  # ascending order: zero eigenvalues first
            abar = null_vecs.conj().T @ a
        diff = lhs - abar.conj().T @ abar / c
        min_eig = float(np.linalg.eigvalsh((diff + diff.conj().T) / 2.0)[0])
        worst = min(worst, min_eig)
    return worst >= -1e-9, worst


def psd_dominance_check(r: int, m: int, q: int, c: float, samples=1000, seed=0) -> bool:
    ok, _ = psd_dominance_stat(r, m, q, c, samples=samples, seed=seed)
    return ok


# -- Lemma 3: equivalent-noise concentration ------------------------------------------

def noise_concentration_report(model, config: LinkConfig, epsilon, n_list,
                               trials=1000, seed=0, sigma_samples=20000):
    """Fraction of trials with ||z||^2 > (1+eps) tr(Sigma_bar), per total dimension n.

    Uses a zero-rate pipeline (encode, fade, equalize; no decoding).  Returns
    {n: (fraction, binomial_se)}.
    """
    from . import transceiver as trx

    per_dim = sigma_bar_trace_per_dim(model, config.n_t, config.n_r, config.rho,
                                      samples=sigma_samples, seed=seed, mode=config.mode)
    out = {}
    ss = np.random.SeedSequence(seed)
    seeds = ss.spawn(len(n_list))
    for n_total, sd in zip(n_list, seeds):
        uses = n_total // (config.expand * config.n_t)
        if uses * config.expand * config.n_t != n_total:
            raise ValueError(f"dimension {n_total} not a multiple of per-use dimension")
        cfg = LinkConfig(n_t=config.n_t, n_r=config.n_r, rho=config.rho,
                         block_len=uses, mode=config.mode)
        threshold = (1.0 + epsilon) * per_dim * n_total
        rng = np.random.default_rng(sd)
        exceed = 0
        for _ in range(trials):
            z2 = trx.equivalent_noise_norm2(cfg, model, rng)
            if z2 > threshold:
                exceed += 1
        frac = exceed / trials
        out[n_total] = (frac, math.sqrt(max(frac * (1 - frac), 1e-12) / trials))
    return out
