"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Statistical criteria run at their stated sample sizes with fixed seeds;
pre-build oracle thresholds live in fixtures/pre_build_oracles.json.
"""
import json
import time
from pathlib import Path

import numpy as np
import pytest

from ergolat import analysis
from ergolat import channel as ch
from ergolat import lattices as lat
from ergolat import mac
from ergolat import quadrature as q
from ergolat import transceiver as trx
from ergolat.cli import DEFAULT_CODES, main

RAY = ch.rayleigh()
FIXTURES = json.loads((Path(__file__).parent / "fixtures" / "pre_build_oracles.json").read_text())


def report(num, ok, detail):
    print(f"\n[ACCEPTANCE {num:02d}] {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def test_acceptance_01_siso_rayleigh_formula_suite():
    t0 = time.perf_counter()
    worst = 0.0
    details = []
    for rho in (0.25, 1.0, 4.0, 16.0):
        rep = analysis.siso_gap(RAY, rho, samples=1_000_000, seed=101)
        rate_oracle = q.siso_rate(RAY, rho)
        cap_oracle = q.siso_capacity(RAY, rho)
        tol_rate = max(3 * rep.rate.std_error, 0.01)
        tol_cap = max(3 * rep.capacity.std_error, 0.01)
        worst = max(worst, abs(rep.rate.mean - rate_oracle) / tol_rate,
                    abs(rep.capacity.mean - cap_oracle) / tol_cap)
        details.append(f"rho={rho:g}: rate {rep.rate.mean:.4f}/{rate_oracle:.4f} "
                       f"cap {rep.capacity.mean:.4f}/{cap_oracle:.4f}")
    # spot-check the quoted reference values at rho = 1 to the 0.01-bit tolerance
    rep1 = analysis.siso_gap(RAY, 1.0, samples=1_000_000, seed=102)
    quoted = (abs(rep1.rate.mean - 0.7460) < 0.01 and abs(rep1.capacity.mean - 0.8604) < 0.01
              and abs(rep1.gap - 0.1145) < 0.01)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1.0 and quoted and elapsed < 60.0
    report(1, ok, f"max |MC-oracle|/tol = {worst:.3f}, quoted-value check {quoted}, "
                  f"{elapsed:.1f} s at 1e6 samples ({'; '.join(details)})")


def test_acceptance_02_corollary2_soundness():
    models = [("rayleigh", RAY)] + [(f"nakagami m={m}", ch.nakagami(m)) for m in (1.5, 2.0, 4.0)]
    rhos = (0.1, 0.25, 1.0, 4.0, 16.0, 100.0)
    violations = []
    ray_gap_at_1 = None
    for name, model in models:
        for i, rho in enumerate(rhos):
            rep = analysis.siso_gap(model, rho, samples=200_000, seed=210 + i)
            if not rep.bounds_hold():
                violations.append(f"{name} rho={rho}")
            if model is RAY and rho == 1.0:
                ray_gap_at_1 = rep.gap
    ok = not violations and ray_gap_at_1 <= 0.48
    report(2, ok, f"violations={violations or 'none'}; Rayleigh rho=1 gap "
                  f"{ray_gap_at_1:.4f} <= 0.48 over 4 models x 6 SNRs")


def test_acceptance_03_corollary1_wishart_case():
    nrs = (2, 4, 8, 16)
    bounds = [analysis.cor1_wishart_bound(1, nr) for nr in nrs]
    decreasing = all(b1 > b2 for b1, b2 in zip(bounds, bounds[1:]))
    anchored = abs(bounds[0] - 1.5850) < 1e-4
    worst = -np.inf
    for nr in nrs:
        for rho in (1.0, 10.0):
            rate = analysis.achievable_rate_mimo(RAY, 1, nr, rho, samples=400_000, seed=31)
            cap = analysis.ergodic_capacity(RAY, 1, nr, rho, samples=400_000, seed=32)
            gap = cap.mean - rate.mean
            worst = max(worst, gap - analysis.cor1_wishart_bound(1, nr))
    ok = decreasing and anchored and worst <= 0
    report(3, ok, f"bound(N_r=2)={bounds[0]:.4f} (1.5850), decreasing={decreasing}, "
                  f"max(gap - bound)={worst:.4f} over N_r in {nrs} x rho in (1, 10)")


def test_acceptance_04_2x2_gap_saturation_property():
    fix = FIXTURES["saturation_2x2"]
    threshold = fix["threshold"]
    gaps = {}
    for db, seed in ((20, 41), (40, 42)):
        rho = 10.0 ** (db / 10)
        rate = analysis.achievable_rate_mimo(RAY, 2, 2, rho, samples=100_000, seed=seed)
        cap = analysis.ergodic_capacity(RAY, 2, 2, rho, samples=100_000, seed=seed + 10)
        gaps[db] = cap.mean - rate.mean
    diff = gaps[40] - gaps[20]
    ok = diff < threshold
    report(4, ok, f"gap(40dB)-gap(20dB) = {diff:.3f} < {threshold} "
                  f"(pre-build oracle runs {fix['oracle_runs_1e5']}, 1e5 samples)")


def test_acceptance_05_wishart_inverse_mean():
    worst = 0.0
    for m, n in ((2, 1), (3, 1), (4, 2)):
        est = analysis.wishart_inverse_mean(m, n, samples=100_000, seed=51)
        target = np.eye(n) / (m - n)
        rel = np.max(np.abs(est.mean - target)) * (m - n)
        worst = max(worst, float(rel))
    ok = worst < 0.02
    report(5, ok, f"max relative deviation from I/(M-N) = {worst:.4f} < 0.02 at 1e5 samples")


def test_acceptance_06_exp_integral_bound_and_precision():
    zs = np.logspace(np.log10(0.01), np.log10(10.0), 100)
    bound_ok = all(analysis.e1_bound_check(z) for z in zs)
    worst = max(abs(analysis.exp_integral_e1(z) - q.e1_integral(z)) / q.e1_integral(z)
                for z in zs)
    ok = bound_ok and worst < 1e-10
    report(6, ok, f"bound holds at 100 log-spaced z, max rel err vs quadrature {worst:.2e}")


def test_acceptance_07_psd_dominance():
    worst = np.inf
    for (r, m, qq) in ((3, 2, 1), (4, 3, 2)):
        ok_i, stat = analysis.psd_dominance_stat(r, m, qq, 1.0, samples=1000, seed=71)
        worst = min(worst, stat)
    ok = worst >= -1e-9
    report(7, ok, f"min eigenvalue over 2x1000 draws = {worst:.2e} >= -1e-9")


def test_acceptance_08_decoder_dominance_paired_trials():
    results = []
    ok = True
    for dim in (8, 16):
        gen = DEFAULT_CODES[(dim, 3 if dim == 8 else 5)]
        for rho in (1.0, 4.0):
            config = ch.LinkConfig(n_t=1, n_r=1, rho=rho, block_len=dim // 2)
            pair = lat.construction_a_pair(2, gen, rho)
            out = trx.run_ptp_batch(config, RAY, pair, trials=10_000, seed=81)
            ok = ok and out["err_euclidean"] <= out["err_ambiguity"]
            results.append(f"n={dim},rho={rho:g}: LD {out['err_euclidean']} "
                           f"<= SD {out['err_ambiguity']}")
    report(8, ok, "; ".join(results) + " (10^4 paired trials each)")


def test_acceptance_09_noise_concentration():
    fix = FIXTURES["concentration_rayleigh_siso_rho1_eps0p1"]
    config = ch.LinkConfig(n_t=1, n_r=1, rho=1.0, block_len=1)
    rep = analysis.noise_concentration_report(RAY, config, 0.1, [64, 256, 1024],
                                              trials=1500, seed=91)
    f = {n: rep[n][0] for n in (64, 256, 1024)}
    s = {n: rep[n][1] for n in (64, 256, 1024)}
    mono = (f[256] <= f[64] + 1.96 * (s[64] + s[256])
            and f[1024] <= f[256] + 1.96 * (s[256] + s[1024]))
    ok = mono and f[1024] < fix["threshold_n1024"]
    report(9, ok, f"exceedance {f[64]:.3f} -> {f[256]:.3f} -> {f[1024]:.4f}, "
                  f"monotone within CI, final < {fix['threshold_n1024']} "
                  f"(oracle {fix['oracle_exceedance']})")


def test_acceptance_10_crypto_lemma():
    from scipy import stats
    pair = lat.zn_pair(1, 1.0, 2)
    rng = np.random.default_rng(1001)
    bins, per_msg = 20, 25_000
    table = np.zeros((4, bins))
    for msg in range(4):
        t = pair.codeword(msg)
        for _ in range(per_msg):
            x = lat.mod_lattice(pair.coarse, t - lat.sample_dither(pair, rng))[0]
            table[msg, min(int((x + 0.5) * bins), bins - 1)] += 1
    p_unif = stats.chisquare(table.sum(axis=0)).pvalue
    p_indep = stats.chi2_contingency(table).pvalue
    ok = p_unif > 0.01 and p_indep > 0.01
    report(10, ok, f"uniformity p={p_unif:.3f}, independence p={p_indep:.3f} "
                   f"(> 0.01, 1e5 samples over 4 messages)")


def test_acceptance_11_mac_suite():
    # (a) corner points at rho = 0.25 (-6 dB) vs the 2-D quadrature oracle
    cfg = mac.MacConfig(users=2, n_t=1, n_r=1, rho_star=(0.25, 0.25))
    region = mac.two_user_region(cfg, RAY, samples=600_000, seed=111)
    g1q, g2q, g3q, g4q = q.gamma_coefficients(RAY, 0.25, 0.25)
    c01, c10 = region.corners
    corner_err = max(abs(c01.rates[0] + g3q), abs(c01.rates[1] + g2q),
                     abs(c10.rates[0] + g1q), abs(c10.rates[1] + g4q))
    corners_ok = corner_err < 0.01
    # (b) sum-rate gap under the Corollary-4 bounds
    gap_ok = True
    ray_bound_at_1 = None
    for i, rho in enumerate((0.5, 1.0, 4.0, 16.0)):
        rep = analysis.mac_gap_two_user(RAY, rho, samples=300_000, seed=112 + i)
        gap_ok = gap_ok and rep.bounds_hold()
        if rho == 1.0:
            ray_bound_at_1 = {b.name: b.value for b in rep.applicable_bounds}["rayleigh"]
    bound_value_ok = abs(ray_bound_at_1 - 1.48) < 1e-9
    # (c) Corollary-3 bound vs MC sum-rate gap, K=2, N_t=1, rho=1
    cor3_ok = True
    bound_at_4 = analysis.mac_gap_bound_cor3(2, 1, 4)
    for nr in range(3, 17):
        c = mac.MacConfig(users=2, n_t=1, n_r=nr, rho_star=(1.0, 1.0))
        corner = mac.corner_rates_mc(c, RAY, (0, 1), samples=60_000, seed=113)
        cap = mac.sum_capacity_mc(c, RAY, samples=60_000, seed=114)
        gap = cap.mean - corner.sum_rate
        ci = cap.ci95_halfwidth + sum(corner.ci_halfwidths)
        cor3_ok = cor3_ok and gap - ci <= analysis.mac_gap_bound_cor3(2, 1, nr)
    anchored = abs(bound_at_4 - 2.059) < 1e-3
    ok = corners_ok and gap_ok and bound_value_ok and cor3_ok and anchored
    report(11, ok, f"corner max err {corner_err:.4f} < 0.01; cor4 bounds hold "
                   f"(rho=1 bound {ray_bound_at_1:.2f}); cor3 holds for N_r 3..16, "
                   f"bound(N_r=4) = {bound_at_4:.3f}")


def test_acceptance_12_deterministic_csv(tmp_path):
    commands = [
        ["rate-mimo", "--model", "rayleigh", "--nt", "1", "--nr", "2",
         "--snr-db", "0..6:6", "--samples", "20000"],
        ["gap-bounds", "--nt", "1", "--nr", "2..6", "--snr-db", "3", "--samples", "20000"],
        ["siso-curves", "--model", "nakagami:m=2", "--snr-db", "0..4:4", "--samples", "20000"],
        ["mac-region", "--users", "2", "--snr-db=-6", "--samples", "20000"],
        ["mac-gap", "--users", "2", "--nt", "1", "--nr", "4", "--snr-db", "0",
         "--samples", "20000"],
        ["simulate-ptp", "--model", "rayleigh", "--snr-db", "6", "--block-len", "4",
         "--trials", "300"],
        ["simulate-mac", "--users", "2", "--snr-db", "6", "--block-len", "4",
         "--trials", "120"],
        ["verify-lemmas", "--lemma", "6"],
    ]
    all_ok = True
    for i, cmd in enumerate(commands):
        outs = []
        for run in ("x", "y"):
            out = tmp_path / f"{i}{run}"
            rc = main(cmd + ["--seed", "9", "--out", str(out)])
            assert rc == 0, f"command {cmd[0]} failed"
            csvs = sorted(out.glob("*.csv"))
            outs.append(b"".join(p.read_bytes() for p in csvs))
        same = outs[0] == outs[1]
        all_ok = all_ok and same
        if not same:
            print(f"nondeterministic: {cmd[0]}")
    report(12, all_ok, f"{len(commands)} commands re-run with identical seeds "
                       f"produce byte-identical CSV")
