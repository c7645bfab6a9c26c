"""Monte Carlo estimators over cluster samples: the cluster-size pmf,
size-conditioned two- and three-point measures on rescaled space,
susceptibility and magnetization, and power-law exponent fits.

Size conditioning uses a rejection window [n(1-w), n(1+w)]; accepted
clusters contribute equal mass, each site (or site pair) carrying weight
1/(size * accepted) (resp. 1/(pairs * accepted)), positions rescaled by
n^(-1/4).  Subsampling of sites/pairs keeps memory linear and is unbiased
(inverse-probability weights).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels, rng
from .errors import InsufficientDataError, InvalidArgumentError

NBATCHES = 32
NDYAD = 24


@dataclass
class SizeHistogram:
    """Histogram of |C(0)| over independent samples.

    counts[n] is the number of samples of size exactly n (n <= cap);
    samples stopped at the cap are tallied in truncated_count only, so
    counts.sum() + truncated_count == total.
    """

    counts: np.ndarray
    total: int
    cap: int
    truncated_count: int
    p: float
    d: int
    seed: int
    batch_dyadic: Optional[np.ndarray] = field(default=None, repr=False)
    batch_totals: Optional[np.ndarray] = field(default=None, repr=False)

    def pmf(self, n: int) -> float:
        return self.counts[n] / self.total

    @property
    def sizes(self) -> np.ndarray:
        return np.nonzero(self.counts)[0]

    def as_mapping(self) -> dict:
        return {int(n): int(self.counts[n]) for n in self.sizes}


@dataclass
class ExponentFit:
    exponent: float
    stderr: float
    n_range: tuple
    nbins: int = 0
    intercept: float = 0.0


@dataclass
class EmpiricalMeasure:
    """Weighted point masses on R^dim with total mass 1.

    points rows are rescaled positions; owner[i] tags the sample (cluster)
    a point came from and batch[i] its seed batch, for resampling error
    bars.
    """

    points: np.ndarray
    weights: np.ndarray
    dim: int
    owner: Optional[np.ndarray] = field(default=None, repr=False)
    batch: Optional[np.ndarray] = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        total = float(self.weights.sum())
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise InvalidArgumentError(f"weights must sum to 1, got {total}")
        # renormalize exactly so fourier(0) == 1 to machine precision
        self.weights = self.weights / total

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def fourier(self, k) -> complex:
        """sum_i w_i exp(i k . x_i); equals 1 at k = 0."""
        k = np.asarray(k, dtype=float)
        if k.shape != (self.dim,):
            raise InvalidArgumentError(
                f"wavevector dimension {k.shape} != measure dimension {self.dim}")
        phase = self.points @ k
        return complex(np.sum(self.weights * np.cos(phase)),
                       np.sum(self.weights * np.sin(phase)))

    def second_moment(self) -> np.ndarray:
        """Per-axis weighted second moments E[x_j^2]."""
        return np.asarray((self.weights[:, None] * self.points**2).sum(axis=0))


@dataclass
class WindowedRun:
    """Raw outputs of a window-conditioned sampling run (internal rich
    result backing the public measures)."""

    p: float
    d: int
    n: int
    window: float
    lo: int
    hi: int
    scale: float
    seed: int
    attempts: int
    accepted: int
    attempt_ids: np.ndarray
    sizes: np.ndarray
    batches: np.ndarray
    cloud: np.ndarray          # (sum cloud_len, d) int32, site subsamples
    cloud_len: np.ndarray
    keep: int
    mom1: np.ndarray           # (acc, d) exact sums of x_j over all sites
    mom2: np.ndarray           # (acc, d) exact sums of x_j^2 over all sites
    kappas: np.ndarray         # raw lattice wavenumbers of tf
    tf: np.ndarray             # (acc, d, G) complex, sum_x exp(i kappa x_j)

    def second_moment_scaled(self) -> float:
        """Axis-averaged E_q[x_j^2] with positions rescaled by n^(-1/4),
        computed from the exact per-cluster sums (no subsampling noise)."""
        per_cluster = (self.mom2 / self.sizes[:, None]).mean(axis=1)
        return float(per_cluster.mean() * self.scale**2)


def estimate_size_pmf(p: float, d: int, samples: int, cap: int,
                      seed: int) -> SizeHistogram:
    """Histogram of grow_cluster sizes over `samples` independent seeds."""
    if samples < 1:
        raise InvalidArgumentError("samples must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"p must be in [0,1], got {p}")
    if cap < 1:
        raise InvalidArgumentError("cap must be >= 1")
    base = rng.split_seed(seed, "sizes")
    counts, trunc, bd, bt, btr = _kernels.size_histogram(
        np.uint64(base), int(samples), float(p), int(d), int(cap),
        NBATCHES, NDYAD)
    return SizeHistogram(counts=counts, total=int(samples), cap=int(cap),
                         truncated_count=int(trunc), p=p, d=d, seed=seed,
                         batch_dyadic=bd, batch_totals=bt)


def susceptibility(h: SizeHistogram, z: float) -> float:
    """chi_z = sum_n n pmf(n) z^n, the expected green-free cluster size.

    For z = 1 with truncated samples present this is a lower bound (each
    truncated sample would add at least cap/total).
    """
    if not 0.0 <= z <= 1.0:
        raise InvalidArgumentError(f"z must be in [0,1], got {z}")
    ns = h.sizes
    if z == 0.0 or ns.size == 0:
        return 0.0
    w = h.counts[ns] / h.total
    return float(np.sum(ns * w * np.power(float(z), ns.astype(float))))


def magnetization(h: SizeHistogram, z: float) -> float:
    """M_z = 1 - sum_n pmf(n) z^n = P(cluster touches a green site).

    Truncated samples contribute 1 exactly; the neglected z^n with
    n > cap biases M upward by at most z^cap.
    """
    if not 0.0 <= z <= 1.0:
        raise InvalidArgumentError(f"z must be in [0,1], got {z}")
    ns = h.sizes
    if ns.size == 0:
        return 1.0
    w = h.counts[ns] / h.total
    return float(1.0 - np.sum(w * np.power(float(z), ns.astype(float))))


def magnetization_stderr(h: SizeHistogram, z: float) -> float:
    """Exact iid standard error of the M_z estimate from the histogram."""
    ns = h.sizes
    w = h.counts[ns] / h.total
    zn = np.power(float(z), ns.astype(float))
    m1 = float(np.sum(w * zn))
    m2 = float(np.sum(w * zn * zn))
    var = max(m2 - m1 * m1, 0.0)
    return math.sqrt(var / h.total)


def dyadic_bins(h: SizeHistogram, n_min: int, n_max: int):
    """Counts per dyadic bin [2^j, 2^(j+1)) fully inside [n_min, n_max]."""
    rows = []
    j = 0
    while 2 ** (j + 1) <= n_max + 1:
        lo, hi = 2 ** j, 2 ** (j + 1)
        if lo >= n_min and hi - 1 <= n_max:
            cnt = int(h.counts[lo:min(hi, h.cap + 1)].sum())
            rows.append((lo, hi, cnt))
        j += 1
    return rows


def fit_power_law(h: SizeHistogram, n_min: int, n_max: int,
                  min_count: int = 10) -> ExponentFit:
    """Weighted least squares of log pmf-density vs log n over dyadic bins.

    Bin j covers [2^j, 2^(j+1)); the density estimate count/(total*width)
    is attached to the geometric bin midpoint; weights are the counts
    (Poisson log-variance ~ 1/count).  At p_c the slope estimates
    -(1 + 1/delta) = -3/2.
    """
    rows = [r for r in dyadic_bins(h, n_min, n_max) if r[2] >= min_count]
    if len(rows) < 3:
        raise InsufficientDataError(
            f"need >= 3 dyadic bins with >= {min_count} counts in "
            f"[{n_min}, {n_max}], got {len(rows)}")
    x = np.array([math.sqrt(lo * hi) for lo, hi, _ in rows])
    width = np.array([hi - lo for lo, hi, _ in rows], dtype=float)
    cnt = np.array([c for _, _, c in rows], dtype=float)
    y = np.log(cnt / (h.total * width))
    lx = np.log(x)
    w = cnt  # var(log density) ~ 1/count
    X = np.vstack([lx, np.ones_like(lx)]).T
    WX = X * w[:, None]
    cov = np.linalg.inv(X.T @ WX)
    beta = cov @ (WX.T @ y)
    slope, intercept = float(beta[0]), float(beta[1])
    stderr = float(math.sqrt(cov[0, 0]))
    return ExponentFit(exponent=slope, stderr=stderr, n_range=(n_min, n_max),
                       nbins=len(rows), intercept=intercept)


# ---------------------------------------------------------------------------
# window-conditioned sampling
# ---------------------------------------------------------------------------


def window_bounds(n: int, window: float) -> tuple:
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    if not 0.0 <= window < 1.0:
        raise InvalidArgumentError(f"window must be in [0,1), got {window}")
    lo = max(1, int(math.ceil(n * (1.0 - window))))
    hi = max(lo, int(math.floor(n * (1.0 + window))))
    return lo, hi


DEFAULT_ACCEPT_CAP = 20_000


def run_windowed(p: float, d: int, n: int, window: float, samples: int,
                 seed: int, *, target_accepted: Optional[int] = None,
                 max_sites_per_cluster: int = 256,
                 kappas: Sequence[float] = (),
                 want_cloud: bool = True) -> WindowedRun:
    """Grow up to `samples` clusters, keeping those with size in the
    window; see WindowedRun for what is recorded per accepted cluster.

    Collection stops at target_accepted clusters (default
    DEFAULT_ACCEPT_CAP; the per-cluster buffers are preallocated at that
    size, so pass it explicitly for bigger runs).
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"p must be in [0,1], got {p}")
    if samples < 1:
        raise InvalidArgumentError("samples must be >= 1")
    lo, hi = window_bounds(n, window)
    base = rng.split_seed(seed, "windowed", n)
    kap = np.asarray(list(kappas), dtype=float)
    target = int(target_accepted) if target_accepted \
        else min(int(samples), DEFAULT_ACCEPT_CAP)
    (attempts, accepted, ids, sizes, batches, cloud, cloud_len, mom1, mom2,
     tf_re, tf_im) = _kernels.windowed_sample(
        np.uint64(base), 0, float(p), int(d), int(lo), int(hi), int(samples),
        target, int(max_sites_per_cluster), NBATCHES, kap,
        bool(want_cloud), bool(kap.size > 0))
    if accepted == 0:
        raise InsufficientDataError(
            f"no cluster of size in [{lo},{hi}] among {attempts} samples")
    return WindowedRun(
        p=p, d=d, n=n, window=window, lo=lo, hi=hi, scale=float(n) ** -0.25,
        seed=seed, attempts=int(attempts), accepted=int(accepted),
        attempt_ids=ids, sizes=sizes, batches=batches, cloud=cloud,
        cloud_len=cloud_len, keep=min(int(max_sites_per_cluster), hi),
        mom1=mom1, mom2=mom2, kappas=kap,
        tf=(tf_re + 1j * tf_im) if kap.size else np.zeros((accepted, d, 0)))


def two_point_measure(run: WindowedRun) -> EmpiricalMeasure:
    """Rescaled site measure: each accepted cluster carries equal mass,
    spread uniformly over its (sub)sampled sites."""
    acc = run.accepted
    lens = run.cloud_len.astype(np.int64)
    total_pts = int(lens.sum())
    pts = np.empty((total_pts, run.d), dtype=float)
    w = np.empty(total_pts, dtype=float)
    owner = np.empty(total_pts, dtype=np.int32)
    batch = np.empty(total_pts, dtype=np.int32)
    pos = 0
    for a in range(acc):
        m = int(lens[a])
        block = run.cloud[a * run.keep: a * run.keep + m]
        pts[pos:pos + m] = block * run.scale
        w[pos:pos + m] = 1.0 / (m * acc)
        owner[pos:pos + m] = a
        batch[pos:pos + m] = run.batches[a]
        pos += m
    return EmpiricalMeasure(points=pts, weights=w, dim=run.d, owner=owner,
                            batch=batch,
                            meta={"n": run.n, "window": run.window,
                                  "scale": run.scale, "accepted": acc,
                                  "attempts": run.attempts,
                                  "subsampled": bool((lens < run.sizes).any())})


def conditional_two_point(p: float, d: int, n: int, window: float,
                          samples: int, seed: int, **kw) -> EmpiricalMeasure:
    """Estimate the size-conditioned single-site measure q_n on rescaled
    points x * n^(-1/4); normalized to total mass 1."""
    run = run_windowed(p, d, n, window, samples, seed, **kw)
    return two_point_measure(run)


def three_point_measure(run: WindowedRun, pair_rate_budget: int = 10_000,
                        max_total_pairs: int = 5_000_000) -> EmpiricalMeasure:
    """Rescaled site-pair measure: per accepted cluster,
    min(size^2, pair_rate_budget) uniform pairs with compensating weights."""
    acc = run.accepted
    per = np.minimum(run.sizes.astype(np.int64) ** 2, pair_rate_budget)
    total = int(per.sum())
    if total > max_total_pairs:
        # shrink the per-cluster budget proportionally; weights compensate
        shrink = max_total_pairs / total
        per = np.maximum(1, (per * shrink).astype(np.int64))
    base = rng.split_seed(run.seed, "windowed", run.n)
    pairs, owner = _kernels.windowed_pairs(
        np.uint64(base), run.attempt_ids, float(run.p), run.d, run.hi,
        per.astype(np.int64))
    w = 1.0 / (per[owner] * acc)
    return EmpiricalMeasure(points=pairs.astype(float) * run.scale,
                            weights=w, dim=2 * run.d,
                            owner=owner.astype(np.int32),
                            batch=run.batches[owner],
                            meta={"n": run.n, "window": run.window,
                                  "scale": run.scale, "accepted": acc,
                                  "attempts": run.attempts,
                                  "pairs": int(per.sum())})


def conditional_three_point(p: float, d: int, n: int, window: float,
                            samples: int, seed: int,
                            pair_rate_budget: int = 10_000,
                            **kw) -> EmpiricalMeasure:
    """Estimate the size-conditioned pair measure q_n^(3) on rescaled pairs
    (x, y) * n^(-1/4) in R^(2d); normalized, so its transform at (0,0) is 1."""
    run = run_windowed(p, d, n, window, samples, seed, want_cloud=False, **kw)
    return three_point_measure(run, pair_rate_budget=pair_rate_budget)


def fourier(m: EmpiricalMeasure, k) -> complex:
    """Fourier transform of an empirical measure at wavevector k."""
    return m.fourier(k)
