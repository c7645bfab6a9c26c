"""Exact mean-field ground truth: critical Galton-Watson total-progeny
laws, which realize the n^(-3/2) cluster-size behaviour the lattice
estimators are validated against.

The pmf comes from the total-progeny identity
P(|T| = n) = (1/n) P(S_n = n - 1), with S_n a sum of n independent
offspring draws: the binomial(m, q) case is an exact rational (big-integer
binomials), the Poisson case is the Borel law n^(n-1) e^(-n) / n!
evaluated in high precision, with log-space floats past the exact-mode
cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

import mpmath
import numpy as np

from . import _kernels, rng
from .cluster_stats import ExponentFit
from .errors import InvalidArgumentError

EXACT_NMAX = 2 ** 14


@dataclass(frozen=True)
class OffspringLaw:
    kind: str                      # "binomial" | "poisson"
    m: int = 0                     # binomial trials
    q: Fraction = Fraction(0)      # binomial success probability
    lam: float = 0.0               # poisson mean

    @classmethod
    def binomial(cls, m: int, q) -> "OffspringLaw":
        q = Fraction(q)
        if m < 1 or not 0 < q <= 1:
            raise InvalidArgumentError("need m >= 1 and 0 < q <= 1")
        return cls(kind="binomial", m=m, q=q)

    @classmethod
    def poisson(cls, lam: float) -> "OffspringLaw":
        if lam <= 0:
            raise InvalidArgumentError("need lam > 0")
        return cls(kind="poisson", lam=float(lam))

    @property
    def mean(self) -> float:
        return float(self.m * self.q) if self.kind == "binomial" else self.lam

    def is_critical(self) -> bool:
        if self.kind == "binomial":
            return self.m * self.q == 1
        return self.lam == 1.0


def total_progeny_pmf(law: OffspringLaw, n: int,
                      exact: bool = None) -> Union[Fraction, float]:
    """P(total progeny = n) via P(|T|=n) = (1/n) P(S_n = n-1).

    Binomial offspring in exact mode returns a Fraction; otherwise a float
    computed in log space (loses nothing at double precision).
    Supercritical laws are rejected (the identity still holds but the
    oracle is meant for the critical/subcritical regime).
    """
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    if law.mean > 1:
        raise InvalidArgumentError("law must be critical or subcritical")
    if exact is None:
        exact = n <= EXACT_NMAX
    if law.kind == "binomial":
        total, hits = law.m * n, n - 1
        if hits > total:
            return Fraction(0) if exact else 0.0
        if exact:
            return (Fraction(math.comb(total, hits))
                    * law.q ** hits * (1 - law.q) ** (total - hits)
                    / n)
        logp = (_log_comb(total, hits)
                + hits * math.log(float(law.q))
                + (total - hits) * math.log1p(-float(law.q))
                - math.log(n))
        return math.exp(logp)
    # Poisson(lam): S_n ~ Poisson(n lam); Borel-Tanner pmf
    if exact:
        with mpmath.workdps(50):
            lam = mpmath.mpf(law.lam)
            v = (mpmath.power(n * lam, n - 1) * mpmath.e ** (-n * lam)
                 / mpmath.factorial(n - 1) / n)
            return float(v)
    logp = ((n - 1) * math.log(n * law.lam) - n * law.lam
            - math.lgamma(n) - math.log(n))
    return math.exp(logp)


def _log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def pmf_table(law: OffspringLaw, ns: Iterable[int]) -> np.ndarray:
    return np.array([float(total_progeny_pmf(law, int(n))) for n in ns])


def brute_force_pmf(law: OffspringLaw, nmax: int):
    """Independent recursive oracle: convolution over root offspring and
    child subtree sizes, P_n = sum_k P(off=k) sum_{n1+..+nk=n-1} prod P_ni.

    Exact Fractions for binomial offspring; floats for Poisson.  O(nmax^3);
    only meant for small nmax cross-checks.
    """
    if law.kind == "binomial":
        off = [Fraction(math.comb(law.m, k)) * law.q ** k
               * (1 - law.q) ** (law.m - k) for k in range(law.m + 1)]
        zero = Fraction(0)
    else:
        kmax = nmax + 1
        off = [math.exp(-law.lam) * law.lam ** k / math.factorial(k)
               for k in range(kmax)]
        zero = 0.0
    p = [zero] * (nmax + 1)  # p[n] = P(|T| = n)
    # conv[k][s]: P(k independent subtrees have total size s), built up in n
    for n in range(1, nmax + 1):
        total = zero
        # subtree sizes are all < n, so p[1..n-1] suffices: dynamic conv
        for k in range(len(off)):
            if k == 0:
                total += off[0] if n == 1 else zero
                continue
            if n - 1 < k:
                break
            total += off[k] * _kfold(p, k, n - 1)
        p[n] = total
    return p


def _kfold(p, k, s):
    """P(sum of k iid subtree sizes = s), each >= 1, via recursion."""
    if k == 1:
        return p[s]
    acc = p[1] * 0
    for t in range(1, s - k + 2):
        acc += p[t] * _kfold(p, k - 1, s - t)
    return acc


@dataclass
class DeltaTwoReport:
    fit: ExponentFit
    limit_constant: float
    law: str


def verify_delta_two(law: OffspringLaw, n_range: tuple,
                     npoints: int = 40) -> DeltaTwoReport:
    """Fit log pmf vs log n over geometrically spaced n in n_range on the
    exact pmf; for a critical law the slope estimates -3/2 and
    n^(3/2) pmf(n) converges to the tree constant (1/sqrt(pi) for
    binomial(2,1/2), 1/sqrt(2 pi) for Poisson(1))."""
    if not law.is_critical():
        raise InvalidArgumentError("delta = 2 check needs a critical law")
    lo, hi = n_range
    ns = np.unique(np.geomspace(lo, hi, npoints).astype(int))
    pm = pmf_table(law, ns)
    slope, intercept = np.polyfit(np.log(ns), np.log(pm), 1)
    resid = np.log(pm) - (slope * np.log(ns) + intercept)
    se = float(np.sqrt(resid.var(ddof=2) / np.var(np.log(ns)) / len(ns)))
    # Richardson in 1/n on the two largest points kills the O(1/n) term
    c_hi = float(ns[-1] ** 1.5 * pm[-1])
    c_lo = float(ns[-2] ** 1.5 * pm[-2])
    w = ns[-2] / (ns[-1] - ns[-2])
    limit = c_hi + (c_hi - c_lo) * w / (1 + w) if ns[-1] > ns[-2] else c_hi
    fit = ExponentFit(exponent=float(slope), stderr=se,
                      n_range=(int(lo), int(hi)), nbins=len(ns),
                      intercept=float(intercept))
    return DeltaTwoReport(fit=fit, limit_constant=limit, law=law.kind)


def sample_total_progeny(law: OffspringLaw, trees: int, seed: int,
                         cap: int = 10**5) -> np.ndarray:
    """Simulate total progeny directly (independent of the pmf identity);
    sizes that exceed cap come back as cap + 1."""
    kind = 0 if law.kind == "binomial" else 1
    base = rng.split_seed(seed, "gw")
    return _kernels.gw_progeny(np.uint64(base), int(trees), int(cap), kind,
                               int(law.m), float(law.q) if kind == 0 else law.lam)
