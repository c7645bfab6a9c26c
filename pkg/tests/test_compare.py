import numpy as np
import pytest

from percolab import cluster_stats as cs
from percolab import compare, ise
from percolab.errors import InvalidArgumentError


def test_fit_scale_d():
    assert compare.fit_scale_d(compare.ISE_SECOND_MOMENT) == pytest.approx(1.0)
    assert compare.fit_scale_d(4 * compare.ISE_SECOND_MOMENT) == pytest.approx(2.0)
    with pytest.raises(InvalidArgumentError):
        compare.fit_scale_d(-1.0)


def _synthetic_ise_measure(nclusters=3000, per=100, d=3, seed=4):
    """Points drawn exactly from the two-point ISE density: T has density
    t exp(-t^2/2) (inverse CDF sqrt(-2 ln U)), then x ~ N(0, T I_d)."""
    g = np.random.default_rng(seed)
    own = np.repeat(np.arange(nclusters), per)
    T = np.sqrt(-2.0 * np.log(g.random(own.size)))
    pts = g.normal(size=(own.size, d)) * np.sqrt(T)[:, None]
    w = np.full(own.size, 1.0 / own.size)
    return cs.EmpiricalMeasure(points=pts, weights=w, dim=d,
                               owner=own.astype(np.int32),
                               batch=(own % 32).astype(np.int32),
                               meta={"n": 64})


def test_compare_qn_synthetic_self_consistency():
    q = _synthetic_ise_measure()
    ks = np.sqrt(np.linspace(0.0, 9.0, 13))
    rep = compare.compare_qn_to_ise(q, 64, ks, nboot=200, seed=9)
    # generator's scale is exactly 1
    assert rep.D == pytest.approx(1.0, abs=0.02)
    assert rep.rows[0].empirical == pytest.approx(1.0)
    # sup distance within a few bootstrap sigmas of zero
    assert rep.sup_distance < 4 * max(r.stderr for r in rep.rows)


def test_compare_qn_k0_row_is_exact():
    q = _synthetic_ise_measure(nclusters=200, per=20)
    rep = compare.compare_qn_to_ise(q, 64, [0.0, 1.0], nboot=50, seed=1)
    assert rep.rows[0].empirical == pytest.approx(1.0, abs=1e-12)
    assert rep.rows[0].target == pytest.approx(1.0, abs=1e-10)
    assert rep.rows[0].distance < 1e-9


def test_compare_qn_rejects_mismatched_n():
    q = _synthetic_ise_measure(nclusters=50, per=10)
    with pytest.raises(InvalidArgumentError):
        compare.compare_qn_to_ise(q, 128, [0.0, 1.0], nboot=10)


def test_three_point_grid_modes():
    grid = compare.three_point_grid([0.0, 1.0])
    assert (0.0, 0.0, "same+") in grid
    assert (1.0, 1.0, "same-") in grid
    assert (0.0, 1.0, "same+") in grid
    assert compare._mode_args(1.0, 2.0, "same+") == (9.0, 1.0, 4.0)
    assert compare._mode_args(1.0, 2.0, "same-") == (1.0, 1.0, 4.0)
    assert compare._mode_args(1.0, 2.0, "cross") == (5.0, 1.0, 4.0)


def _windowed_with_transforms(n=48, ks=(0.0, 1.0, 2.0), seed=21):
    p, d = 0.35, 2
    run0 = cs.run_windowed(p, d, n, 0.2, 300_000, seed=seed, want_cloud=True)
    D = compare.fit_scale_d(run0.second_moment_scaled())
    kapp = np.unique(np.array(ks) / (D * n ** 0.25))
    run = cs.run_windowed(p, d, n, 0.2, 300_000, seed=seed, kappas=kapp,
                          want_cloud=False)
    return run0, run, D


def test_compare_q3_structure_and_normalization():
    run0, run, Dfit = _windowed_with_transforms()
    rep = compare.compare_q3_to_ise(run, Dfit, [0.0, 1.0, 2.0], nboot=60,
                                    seed=2)
    by_key = {(r.k, r.l, r.mode): r for r in rep.rows}
    # (0,0) entry is the total pair mass: exactly 1 both sides
    r00 = by_key[(0.0, 0.0, "same+")]
    assert r00.empirical == pytest.approx(1.0, abs=1e-12)
    assert r00.target == pytest.approx(1.0, abs=1e-8)
    # factorized estimator is symmetric under k <-> l by construction
    assert rep.max_asymmetry <= 1e-12
    # transforms agree with the (slower) pair-measure estimate
    m3 = cs.three_point_measure(run, pair_rate_budget=600,
                                max_total_pairs=2_000_000)
    k, l = 1.0, 2.0
    # cross mode: k on x-axis 0, l on y-axis 1; measure points are pairs
    # rescaled by n^(-1/4), so divide the raw wavenumbers back out
    kv = np.zeros(4)
    kv[0] = k / (Dfit * run.n ** 0.25) / run.scale
    kv[3] = l / (Dfit * run.n ** 0.25) / run.scale
    pair_est = m3.fourier(kv).real
    tf_est = by_key[(k, l, "cross")].empirical
    # same quantity estimated two ways; pair route has extra sampling noise
    assert pair_est == pytest.approx(tf_est, abs=0.02)


def test_compare_q3_requires_matching_grid():
    _, run, Dfit = _windowed_with_transforms(ks=(0.0, 1.0))
    with pytest.raises(InvalidArgumentError):
        compare.compare_q3_to_ise(run, Dfit, [0.0, 1.7], nboot=10)
