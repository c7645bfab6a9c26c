"""Acceptance suite: every criterion at its stated tolerance, one
pass/fail line each.

The heavy fixtures (critical-point estimates, the d = 7 size histogram,
the windowed profile runs) are session-scoped and shared between
criteria.  Everything is seeded; reruns reproduce identical numbers.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from percolab import cluster_stats as cs
from percolab import compare, diagrams, genfunc, ise, tree_oracle

SEED = 20260810

pytestmark = pytest.mark.acceptance


def _report(num, ok, detail):
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {num}: {detail}")
    assert ok, detail


# -- shared heavy fixtures ---------------------------------------------------


@pytest.fixture(scope="session")
def pc7():
    t0 = time.time()
    est = diagrams.estimate_pc_detailed(7, seed=SEED)
    print(f"\n[fixture] p_c(7) = {est.p_hat:.6f} "
          f"(series {est.series:.6f}) in {time.time() - t0:.0f}s")
    return est


@pytest.fixture(scope="session")
def hist7(pc7):
    t0 = time.time()
    h = cs.estimate_size_pmf(pc7.p_hat, 7, 10**6, 10**5, seed=SEED + 1)
    print(f"\n[fixture] d=7 histogram: 1e6 clusters, cap 1e5, "
          f"truncated {h.truncated_count}, in {time.time() - t0:.0f}s")
    return h


@pytest.fixture(scope="session")
def qn1024(pc7):
    t0 = time.time()
    run = cs.run_windowed(pc7.p_hat, 7, 1024, 0.1, 60_000_000,
                          seed=SEED + 2, target_accepted=20_000)
    ks = np.sqrt(np.linspace(0.0, 9.0, 19))
    rep = compare.compare_qn_to_ise(run, 1024, ks, nboot=200, seed=SEED + 3)
    print(f"\n[fixture] qn n=1024: accepted {run.accepted} of "
          f"{run.attempts} attempts in {time.time() - t0:.0f}s")
    return run, rep


# -- criteria ----------------------------------------------------------------


def test_c01_ise_normalization():
    t0 = time.time()
    a2 = ise.a2_fourier(0.0)
    a3 = ise.a3_fourier(0.0, 0.0, 0.0)
    dt = time.time() - t0
    ok = abs(a2 - 1) < 1e-8 and abs(a3 - 1) < 1e-8
    _report(1, ok, f"a2(0)={a2:.12f}, a3(0,0)={a3:.12f} "
                   f"(tol 1e-8, {dt:.2f}s)")


def test_c02_ise_closed_form():
    t0 = time.time()
    worst = max(abs(ise.a2_fourier(k2) - ise.a2_fourier_closed(k2))
                for k2 in (0.01, 0.1, 1.0, 10.0, 100.0))
    dt = time.time() - t0
    _report(2, worst < 1e-9,
            f"max |quadrature - erfc closed form| = {worst:.2e} "
            f"(tol 1e-9, {dt:.2f}s)")


def test_c03_coefficient_machinery():
    t0 = time.time()
    # dual-route agreement (main_term_coeff raises beyond 1e-8 relative)
    worst_rel = 0.0
    for n in (10, 100, 1000, 10_000):
        b = genfunc.BranchMainTerm(C=1.3, D=0.9, k2=0.4)
        contour = genfunc.main_term_coeff_contour(b, n)
        series = float(genfunc.main_term_series(b, n)[n])
        genfunc.main_term_coeff(b, n)
        worst_rel = max(worst_rel, abs(contour - series) / abs(series))
    # normalized asymptotics against the ISE transform
    C, n = 1.7, 10_000
    worst_dev = 0.0
    for k2 in (0.0, 1.0, 4.0):
        b = genfunc.BranchMainTerm(C=C, D=1.0, k2=k2 / math.sqrt(n))
        ratio = genfunc.main_term_coeff(b, n) * math.sqrt(8 * math.pi * n) / C
        worst_dev = max(worst_dev, abs(ratio / ise.a2_fourier(k2) - 1.0))
    dt = time.time() - t0
    ok = worst_rel <= 1e-8 and worst_dev <= 0.02
    _report(3, ok, f"route agreement {worst_rel:.2e} (tol 1e-8); "
                   f"normalized vs ISE dev {worst_dev:.2e} (tol 2e-2) "
                   f"[{dt:.1f}s]")


def test_c04_lemma_harnesses():
    t0 = time.time()
    tay = genfunc.verify_taylor_eps_random(100_000, seed=SEED)
    bb = genfunc.branch_lower_bound_check(100_000, seed=SEED)
    dt = time.time() - t0
    ok = tay.max_ratio <= 1.0 + 1e-9 and bb.min_slack >= -1e-12
    _report(4, ok, f"taylor max ratio {tay.max_ratio:.6f} (<= 1), "
                   f"branch min slack {bb.min_slack:.2e} (>= -1e-12), "
                   f"1e5 instances each [{dt:.1f}s]")


def test_c05_tree_oracle_delta_two():
    t0 = time.time()
    rb = tree_oracle.verify_delta_two(
        tree_oracle.OffspringLaw.binomial(2, Fraction(1, 2)), (64, 4096))
    rp = tree_oracle.verify_delta_two(
        tree_oracle.OffspringLaw.poisson(1.0), (64, 4096))
    dt = time.time() - t0
    c_b, c_p = 1 / math.sqrt(math.pi), 1 / math.sqrt(2 * math.pi)
    ok = (abs(rb.fit.exponent + 1.5) <= 0.02
          and abs(rp.fit.exponent + 1.5) <= 0.02
          and abs(rb.limit_constant / c_b - 1) <= 0.01
          and abs(rp.limit_constant / c_p - 1) <= 0.01)
    _report(5, ok,
            f"binomial: slope {rb.fit.exponent:.4f}, const "
            f"{rb.limit_constant:.4f} (vs {c_b:.4f}); poisson: slope "
            f"{rp.fit.exponent:.4f}, const {rp.limit_constant:.4f} "
            f"(vs {c_p:.4f}) [{dt:.1f}s]")


def test_c06_d1_exact_law_chi2():
    t0 = time.time()
    p, N = 0.3, 10**6
    h = cs.estimate_size_pmf(p, 1, N, cap=10_000, seed=SEED + 4)
    # per-n bins while the expected count stays >= 10, remainder pooled
    expected, observed = [], []
    n = 1
    while True:
        e = N * n * p ** (n - 1) * (1 - p) ** 2
        if e < 10:
            break
        expected.append(e)
        observed.append(float(h.counts[n]))
        n += 1
    expected.append(N - sum(expected))
    observed.append(h.total - h.truncated_count - sum(observed))
    chi2, pval = stats.chisquare(np.array(observed), np.array(expected))
    dt = time.time() - t0
    _report(6, pval > 0.01,
            f"d=1 p=0.3, 1e6 samples: chi2={chi2:.1f} over {len(expected)} "
            f"bins (pooled tail), p-value={pval:.3f} (> 0.01) [{dt:.0f}s]")


def test_c07_d7_delta_two(hist7):
    t0 = time.time()
    fit = cs.fit_power_law(hist7, 32, 2048)
    dt = time.time() - t0
    ok = abs(fit.exponent + 1.5) <= 0.15
    _report(7, ok, f"d=7 size exponent {fit.exponent:.4f} +- "
                   f"{fit.stderr:.4f} over dyadic bins in [32, 2048] "
                   f"(tol -1.5 +- 0.15) [{dt:.1f}s + fixture]")


def test_c08_two_point_profile(qn1024):
    run, rep = qn1024
    ok = run.accepted >= 20_000 and rep.sup_distance <= 0.05
    lines = "; ".join(f"k2={r.k ** 2:.1f}: {r.empirical:.4f}+-{r.stderr:.4f} "
                      f"vs {r.target:.4f}"
                      for r in rep.rows[::6])
    _report(8, ok,
            f"n=1024 profile: accepted {run.accepted}, D={rep.D:.4f}, "
            f"sup|qn - A2| = {rep.sup_distance:.4f} +- {rep.sup_stderr:.4f} "
            f"(tol 0.05); sample rows: {lines}")


def test_c09_three_point(pc7, qn1024):
    _, rep2 = qn1024
    D = rep2.D
    t0 = time.time()
    ks = [0.0, 0.75, 1.5, 2.25, 3.0]
    kapp = np.unique(np.array(ks) / (D * 512 ** 0.25))
    run = cs.run_windowed(pc7.p_hat, 7, 512, 0.1, 40_000_000,
                          seed=SEED + 5, target_accepted=15_000,
                          kappas=kapp, want_cloud=False)
    rep = compare.compare_q3_to_ise(run, D, ks, nboot=200, seed=SEED + 6)
    # pair-measure route: q3hat(0,0) and the statistical k<->l asymmetry
    m3 = cs.three_point_measure(run, max_total_pairs=2_000_000)
    at00 = m3.fourier(np.zeros(14)).real
    kraw = np.array(ks) / (D * 512 ** 0.25)
    kv, kw = np.zeros(14), np.zeros(14)
    kv[0], kv[7 + 1] = kraw[2] / run.scale, kraw[4] / run.scale
    kw[0], kw[7 + 1] = kraw[4] / run.scale, kraw[2] / run.scale
    own = m3.owner
    per = np.zeros(run.accepted)
    np.add.at(per, own, np.cos(m3.points @ kv) - np.cos(m3.points @ kw))
    cnt = np.bincount(own, minlength=run.accepted).astype(float)
    per_mean = per / np.maximum(cnt, 1)
    asym_stat = abs(per_mean.mean())
    asym_se = per_mean.std(ddof=1) / math.sqrt(run.accepted)
    dt = time.time() - t0
    ok = (abs(at00 - 1.0) <= 1e-10 and rep.max_asymmetry <= 1e-12
          and asym_stat <= 4 * max(asym_se, 1e-12)
          and rep.sup_distance <= 0.08)
    _report(9, ok,
            f"n=512: q3(0,0)={at00:.2e}-close to 1 "
            f"(|diff|={abs(at00 - 1):.1e}, tol 1e-10); factorized "
            f"asymmetry {rep.max_asymmetry:.1e}; pair-route asymmetry "
            f"{asym_stat:.2e} vs noise {asym_se:.2e}; grid sup "
            f"{rep.sup_distance:.4f} +- {rep.sup_stderr:.4f} (tol 0.08) "
            f"[accepted {run.accepted}, {dt:.0f}s]")


def test_c10_square_diagram_scaling(hist7):
    t0 = time.time()
    js = list(range(4, 13))
    zs = [1 - 2.0 ** -j for j in js]
    rows7 = diagrams.square_scaling(7, zs, samples=500_000, seed=SEED + 7)
    slope, sse = diagrams.fit_loglog_slope([1 - z for z, _ in rows7],
                                           [e.value for _, e in rows7])
    prod = [(1 - z, cs.magnetization(hist7, z) * e.value) for z, e in rows7]
    pslope, pse = diagrams.fit_loglog_slope([x for x, _ in prod],
                                            [y for _, y in prod])
    rows9 = diagrams.square_scaling(9, zs, samples=500_000, seed=SEED + 8)
    v9 = [e.value for _, e in rows9]
    inc = np.diff(v9)
    bounded = inc[-1] < inc[0] and v9[-1] < 1.3 * v9[4]
    dt = time.time() - t0
    ok = (abs(slope + 0.25) <= 0.05 and abs(pslope - 0.25) <= 0.07
          and bounded)
    _report(10, ok,
            f"d=7 integral slope {slope:.4f}+-{sse:.4f} (tol -0.25+-0.05); "
            f"magnetization-weighted slope {pslope:.4f}+-{pse:.4f} "
            f"(tol +0.25+-0.07); d=9 bounded: increments "
            f"{inc[0]:.2e}->{inc[-1]:.2e}, v(z->1)/v(mid)="
            f"{v9[-1] / v9[4]:.3f} [{dt:.0f}s]")


def test_c11_triangle(pc7):
    t0 = time.time()
    est0 = diagrams.triangle_mc(0.0, 7, 1000, seed=SEED)
    exact1 = diagrams.triangle_d1_exact(0.3)
    est1 = diagrams.triangle_mc(0.3, 1, 150_000, seed=SEED + 9)
    p7 = 0.8 * pc7.p_hat
    est7 = diagrams.triangle_mc(p7, 7, 150_000, seed=SEED + 10)
    dt = time.time() - t0
    ok = (est0.value == 1.0
          and abs(est1.value - exact1) <= 3 * est1.stderr
          and math.isfinite(est7.value)
          and est7.stderr / est7.value <= 0.02)
    _report(11, ok,
            f"triangle(0)={est0.value} (exact 1); d=1: "
            f"{est1.value:.4f}+-{est1.stderr:.4f} vs exact {exact1:.4f} "
            f"({abs(est1.value - exact1) / est1.stderr:.1f} sigma); d=7 at "
            f"0.8 p_c: {est7.value:.4f}+-{est7.stderr:.4f} (rel "
            f"{est7.stderr / est7.value:.3%}, tol 2%) [{dt:.0f}s]")


def test_c12_pc_sanity(pc7):
    t0 = time.time()
    results = {7: pc7}
    for d in (10, 14):
        results[d] = diagrams.estimate_pc_detailed(d, seed=SEED)
    dt = time.time() - t0
    lines = []
    ok = True
    for d, est in results.items():
        two_dp = 2 * d * est.p_hat
        rel = abs(est.p_hat / est.series - 1)
        ok = ok and 1.0 <= two_dp <= 1.5 and rel <= 0.10
        lines.append(f"d={d}: p_hat={est.p_hat:.6f}, 2d p={two_dp:.3f}, "
                     f"|dev from series|={rel:.2%}")
    _report(12, ok, "; ".join(lines) + f" (2dp in [1,1.5], dev <= 10%) "
                                       f"[{dt:.0f}s]")
