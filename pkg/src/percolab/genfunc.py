"""Power-series machinery: series norms, fractional derivatives, Cauchy
coefficient extraction, branch-cut main-term coefficients, and numerical
harnesses for the transfer inequalities used to convert disk bounds on a
generating function into coefficient bounds.

The harnesses are assertion suites, not proofs: the inequalities they
check are theorems, so a violation signals a bug in the norm or branch
conventions here (principal square root, (1-z)^(1/2) > 0 on (-inf, 1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numba import njit

from . import rng
from .errors import (HypothesisNotMetError, InvalidArgumentError,
                     LemmaViolationError, NumericInconsistencyError)

SQRT8 = 2.0 ** 1.5
CONTOUR_M_MAX = 2 ** 20


@dataclass
class PowerSeries:
    """Truncated power series sum a_n z^n, n = 0..N."""

    coeffs: np.ndarray
    radius_hint: Optional[float] = None

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs)
        if self.coeffs.ndim != 1 or self.coeffs.size < 1:
            raise InvalidArgumentError("coeffs must be a nonempty 1-d array")
        if not np.all(np.isfinite(self.coeffs)):
            raise InvalidArgumentError("coefficients must be finite")

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, z):
        """Evaluate by Horner's rule (works on complex arrays)."""
        z = np.asarray(z)
        out = np.zeros_like(z, dtype=np.result_type(z, self.coeffs))
        for a in self.coeffs[::-1]:
            out = out * z + a
        return out

    def derivative(self) -> "PowerSeries":
        if self.coeffs.size == 1:
            return PowerSeries(np.zeros(1, dtype=self.coeffs.dtype),
                               self.radius_hint)
        n = np.arange(1, self.coeffs.size)
        return PowerSeries(self.coeffs[1:] * n, self.radius_hint)


def series_norm(f: PowerSeries, r: float) -> float:
    """sum |a_n| r^n over the stored coefficients."""
    if r < 0:
        raise InvalidArgumentError("r must be >= 0")
    n = np.arange(f.coeffs.size, dtype=float)
    with np.errstate(divide="ignore"):
        return float(np.sum(np.abs(f.coeffs) * np.power(float(r), n)))


def fractional_derivative(f: PowerSeries, eps: float) -> PowerSeries:
    """Coefficient-wise n^eps scaling (the n = 0 term is dropped); for
    integer eps this is (z d/dz)^eps, not the usual derivative."""
    if eps <= 0:
        raise InvalidArgumentError("eps must be > 0")
    n = np.arange(f.coeffs.size, dtype=float)
    out = f.coeffs.astype(np.result_type(f.coeffs, float)).copy()
    out[0] = 0
    out[1:] = out[1:] * n[1:] ** eps
    return PowerSeries(out, f.radius_hint)


def coeff_by_contour(f: Callable, n: int, r: float,
                     m: Optional[int] = None) -> complex:
    """(1/2 pi i) oint f(z) z^(-n-1) dz on |z| = r by the M-point trapezoid
    rule: spectrally accurate, and exact (up to rounding) for polynomials
    whose degree is below n + M.

    The caller is responsible for r being inside f's region of analyticity.
    """
    if n < 0:
        raise InvalidArgumentError("n must be >= 0")
    if r <= 0:
        raise InvalidArgumentError("r must be > 0")
    if m is None:
        m = max(4096, 16 * (n + 1))
    theta = 2.0 * np.pi * np.arange(m) / m
    z = r * np.exp(1j * theta)
    vals = np.asarray(f(z), dtype=complex)
    return complex(np.sum(vals * np.exp(-1j * n * theta)) / (m * r ** n))


# ---------------------------------------------------------------------------
# branch main term C / (D^2 k^2 + 2^(3/2) (1-z)^(1/2))
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BranchMainTerm:
    """Parameters of C / (D^2 k2 + 2^(3/2) (1-z)^(1/2)), principal branch
    (so the square root is positive on (-inf, 1))."""

    C: float
    D: float
    k2: float = 0.0

    def __post_init__(self):
        if not (self.C > 0 and self.D > 0 and self.k2 >= 0):
            raise InvalidArgumentError("need C > 0, D > 0, k2 >= 0")

    @property
    def a(self) -> float:
        return self.D * self.D * self.k2

    def __call__(self, z):
        return self.C / (self.a + SQRT8 * np.sqrt(1.0 - np.asarray(z, complex)))


@njit(cache=True)
def _inv_sqrt_series(s, nmax):
    """t = s^(-1/2) as power series: classical J.C.P. Miller recurrence
    n s_0 t_n = sum_{j=1..n} (j/2 ... ) with beta = -1/2."""
    beta = -0.5
    t = np.zeros(nmax + 1)
    t[0] = s[0] ** beta
    for n in range(1, nmax + 1):
        acc = 0.0
        jmax = min(n, s.shape[0] - 1)
        for j in range(1, jmax + 1):
            acc += (j * (beta + 1.0) - n) * s[j] * t[n - j]
        t[n] = acc / (n * s[0])
    return t


def binomial_sqrt_coeffs(nmax: int, alpha: float = 0.5) -> np.ndarray:
    """Coefficients of (1-z)^alpha: b_0 = 1, b_n = b_{n-1} (n-1-alpha)/n."""
    b = np.empty(nmax + 1)
    b[0] = 1.0
    for n in range(1, nmax + 1):
        b[n] = b[n - 1] * (n - 1 - alpha) / n
    return b


def main_term_series(b: BranchMainTerm, nmax: int) -> np.ndarray:
    """Exact coefficient recurrence route: with w = (1-z)^(1/2) and
    A = D^2 k2, B = 2^(3/2),

        1/f(z)^2 = (A^2 + B^2 (1-z) + 2 A B w) / C^2

    is a degree-1 polynomial plus a multiple of the binomial series of w,
    so f is the inverse square root of an explicitly known series.
    """
    A, B, C = b.a, SQRT8, b.C
    s = 2.0 * A * B / (C * C) * binomial_sqrt_coeffs(nmax)
    s[0] += (A * A + B * B) / (C * C)
    if nmax >= 1:
        s[1] += -(B * B) / (C * C)
    return _inv_sqrt_series(s, nmax)


def main_term_coeff_contour(b: BranchMainTerm, n: int) -> float:
    """Contour route: trapezoid rule at radius just inside the branch
    point, with node count and radius set so aliasing is below 1e-10."""
    m = min(CONTOUR_M_MAX, max(4096, 16 * n))
    r = min(1.0 - 1.0 / (n + 1), math.exp(-25.0 / m))
    return float(coeff_by_contour(b, n, r, m).real)


def main_term_coeff(b: BranchMainTerm, n: int, rtol: float = 1e-8) -> float:
    """Coefficient of z^n of the branch main term, computed by the contour
    route and the exact series recurrence; the routes must agree to rtol
    (relative), else the branch handling is buggy."""
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    v_contour = main_term_coeff_contour(b, n)
    v_series = float(main_term_series(b, n)[n])
    scale = max(abs(v_series), abs(v_contour))
    if scale > 0 and abs(v_series - v_contour) > rtol * scale:
        raise NumericInconsistencyError(
            f"main-term coefficient routes disagree at n={n}: "
            f"contour={v_contour!r} series={v_series!r}")
    return v_series


def main_term_coeff_branchcut(b: BranchMainTerm, n: int) -> float:
    """Third, independent route (used as a test oracle): deform the contour
    to the branch cut [1, inf); the jump of the square root across the cut
    gives

        a_n = (B C / pi) int_0^inf sqrt(u) / (A^2 + B^2 u) (1+u)^(-n-1) du.
    """
    from scipy import integrate
    A, B, C = b.a, SQRT8, b.C

    def g(u):
        return math.sqrt(u) / (A * A + B * B * u) * math.exp(
            -(n + 1) * math.log1p(u))

    v1, _ = integrate.quad(g, 0.0, 40.0 / (n + 1), limit=200,
                           epsabs=1e-16, epsrel=1e-12)
    v2, _ = integrate.quad(g, 40.0 / (n + 1), np.inf, limit=200,
                           epsabs=1e-16, epsrel=1e-12)
    return B * C / math.pi * (v1 + v2)


# ---------------------------------------------------------------------------
# inequality harnesses
# ---------------------------------------------------------------------------


@dataclass
class TransferReport:
    """Empirical constants for the disk-bound -> coefficient-bound transfer."""
    b: float
    R: float
    c_disk: float          # sup |f(z)| |1 - z/R|^b over the disk mesh
    c_prime: float         # min constant with |a_n| <= c' R^-n n^(b-1) (log n if b=1)
    empirical_exponent: float  # slope of log(|a_n| R^n) vs log n
    in_lemma_range: bool


def _disk_mesh(R: float, nrad: int = 24, nang: int = 96) -> np.ndarray:
    radii = R * (1.0 - 2.0 ** -np.arange(1, nrad + 1))
    ang = np.exp(2j * np.pi * np.arange(nang) / nang)
    return (radii[:, None] * ang[None, :]).ravel()


def verify_transfer(f: PowerSeries, R: float, b: float) -> TransferReport:
    """Report-only harness: measures the constant in
    |f(z)| <= c |1-z/R|^(-b) on a disk mesh and the smallest c' with
    |a_n| <= c' R^(-n) n^(b-1) (log n for b = 1) over the stored
    coefficients.  b < 1 is outside the transfer lemma's range; the report
    still carries the empirical coefficient exponent.
    """
    if R <= 0:
        raise InvalidArgumentError("R must be > 0")
    zs = _disk_mesh(R)
    c_disk = float(np.max(np.abs(f(zs)) * np.abs(1.0 - zs / R) ** b))
    n = np.arange(2, f.coeffs.size, dtype=float)
    scaled = np.abs(f.coeffs[2:]) * R ** n
    if b == 1.0:
        envelope = np.log(n)
    else:
        envelope = n ** (b - 1.0)
    c_prime = float(np.max(scaled / envelope)) if n.size else 0.0
    nz = scaled > 0
    if nz.sum() >= 2:
        slope = float(np.polyfit(np.log(n[nz]), np.log(scaled[nz]), 1)[0])
    else:
        slope = float("nan")
    return TransferReport(b=b, R=R, c_disk=c_disk, c_prime=c_prime,
                          empirical_exponent=slope, in_lemma_range=b >= 1.0)


@dataclass
class TaylorEpsReport:
    eps: float
    R: float
    norm_frac: float
    max_ratio: float
    points: int


def verify_taylor_eps(f: PowerSeries, R: float, eps: float,
                      mesh: int = 2048, tol: float = 1e-9) -> TaylorEpsReport:
    """Check |f(z) - f(R)| <= 2^(1-eps) ||delta^eps f(R)|| |1-z/R|^eps on a
    mesh of |z| <= R.  The inequality is a theorem whenever the fractional
    norm is finite, so any violation beyond rounding slack raises."""
    if not 0.0 < eps < 1.0:
        raise InvalidArgumentError("eps must be in (0,1)")
    nf = series_norm(fractional_derivative(f, eps), R)
    if not math.isfinite(nf):
        raise HypothesisNotMetError("||delta^eps f(R)|| is not finite")
    nang = max(8, int(math.sqrt(mesh)))
    nrad = max(4, mesh // nang)
    radii = R * np.linspace(0.0, 1.0, nrad)
    ang = np.exp(2j * np.pi * np.arange(nang) / nang)
    zs = np.concatenate([(radii[:, None] * ang[None, :]).ravel(),
                         [-R, R, 0.0, 1j * R]])
    fR = complex(f(np.array([R], dtype=complex))[0])
    lhs = np.abs(f(zs) - fR)
    rhs = 2.0 ** (1.0 - eps) * nf * np.abs(1.0 - zs / R) ** eps
    ratio = np.where(lhs <= tol * max(nf, 1.0), 0.0,
                     lhs / np.maximum(rhs, 1e-300))
    max_ratio = float(ratio.max())
    if max_ratio > 1.0 + 1e-9:
        raise LemmaViolationError(
            f"fractional Taylor bound violated: ratio {max_ratio} at "
            f"z={zs[int(ratio.argmax())]}")
    return TaylorEpsReport(eps=eps, R=R, norm_frac=nf, max_ratio=max_ratio,
                           points=zs.size)


def verify_taylor_eps_random(instances: int, seed: int, max_degree: int = 50
                             ) -> TaylorEpsReport:
    """Vectorized randomized suite for the fractional Taylor bound: random
    polynomials, random eps in (0.1, 0.9), random z in the closed disk
    |z| <= R; returns the worst ratio over all instances."""
    g = rng.generator(seed, "taylor-eps")
    deg = max_degree
    coef = g.normal(size=(instances, deg + 1)) * (g.random((instances, 1)) * 2)
    eps = 0.1 + 0.8 * g.random(instances)
    R = 0.25 + 1.5 * g.random(instances)
    rho = np.sqrt(g.random(instances))  # area-uniform in the disk
    phi = 2.0 * np.pi * g.random(instances)
    z = R * rho * np.exp(1j * phi)
    # boundary-tight family: push a fraction of the z onto the circle |z|=R
    onb = g.random(instances) < 0.25
    z[onb] = R[onb] * np.exp(1j * phi[onb])

    n = np.arange(deg + 1, dtype=float)
    fz = np.zeros(instances, dtype=complex)
    fR = np.zeros(instances)
    for j in range(deg, -1, -1):
        fz = fz * z + coef[:, j]
        fR = fR * R + coef[:, j]
    neps = np.where(n[None, :] > 0, n[None, :] ** eps[:, None], 0.0)
    norm_frac = np.sum(np.abs(coef) * neps * R[:, None] ** n[None, :], axis=1)
    lhs = np.abs(fz - fR)
    rhs = 2.0 ** (1.0 - eps) * norm_frac * np.abs(1.0 - z / R) ** eps
    ratio = np.where(lhs <= 1e-9 * np.maximum(norm_frac, 1.0), 0.0,
                     lhs / np.maximum(rhs, 1e-300))
    max_ratio = float(ratio.max())
    if max_ratio > 1.0 + 1e-9:
        i = int(ratio.argmax())
        raise LemmaViolationError(
            f"fractional Taylor bound violated on instance {i}: "
            f"ratio={max_ratio}")
    return TaylorEpsReport(eps=float("nan"), R=float("nan"),
                           norm_frac=float("nan"), max_ratio=max_ratio,
                           points=int(instances))


@dataclass
class Fd2StepReport:
    eps: float
    alpha: float
    R: float
    m1: float
    m2: float


def verify_fd2step(f: PowerSeries, R: float, eps: float, alpha: float,
                   mesh: int = 2048, m1_cap: Optional[float] = None
                   ) -> Fd2StepReport:
    """Two-step transfer: measure M1 = sup ||f'(z)|| (1-z/R)^(1-eps) on a
    positive-axis mesh (hypothesis; must stay below m1_cap if given), then
    report the empirical M2 = sup |f(z)-f(R)| / (R |1-z/R|^alpha) over a
    disk mesh.  Finiteness of M2 is the conclusion being checked."""
    if not 0.0 < eps < 1.0:
        raise InvalidArgumentError("eps must be in (0,1)")
    if not 0.0 < alpha < eps:
        raise InvalidArgumentError("alpha must be in (0, eps)")
    fp = f.derivative()
    xs = R * (1.0 - 2.0 ** -np.arange(1, 40))
    norms = np.array([series_norm(fp, x) for x in xs])
    m1 = float(np.max(norms * (1.0 - xs / R) ** (1.0 - eps)))
    if m1_cap is not None and m1 > m1_cap:
        raise HypothesisNotMetError(
            f"positive-axis hypothesis fails: M1={m1} > {m1_cap}")
    zs = _disk_mesh(R)
    fR = complex(f(np.array([R], dtype=complex))[0])
    m2 = float(np.max(np.abs(f(zs) - fR) /
                      (R * np.abs(1.0 - zs / R) ** alpha)))
    return Fd2StepReport(eps=eps, alpha=alpha, R=R, m1=m1, m2=m2)


@dataclass
class BranchBoundReport:
    samples: int
    min_slack: float


def branch_lower_bound_check(samples: int, seed: int = 0,
                             tol: float = 1e-12) -> BranchBoundReport:
    """Randomized check of the branch lower bound: for Re(1-z) >= 0,

        |B1 k^2/(2d) + B2 (1-z)^(1/2)| >= B1 k^2/(2d) + B2 |1-z|^(1/2)/sqrt(2)

    with the principal square root.  Proven; min slack must be >= -tol."""
    g = rng.generator(seed, "branch-bound")
    b1 = 10.0 ** g.uniform(-3, 3, samples)
    b2 = 10.0 ** g.uniform(-3, 3, samples)
    k2 = 10.0 ** g.uniform(-6, 2, samples) * (g.random(samples) < 0.95)
    d = g.integers(1, 32, samples)
    # 1 - z = rho e^{i phi}, phi in [-pi/2, pi/2] <=> Re(1-z) >= 0
    rho = 10.0 ** g.uniform(-8, 1, samples)
    phi = g.uniform(-np.pi / 2, np.pi / 2, samples)
    ix = g.random(samples) < 0.1
    phi[ix] = np.sign(phi[ix]) * np.pi / 2  # boundary cases
    rho[g.random(samples) < 0.05] = 0.0     # z = 1 exactly
    one_minus_z = rho * np.exp(1j * phi)
    a = b1 * k2 / (2.0 * d)
    lhs = np.abs(a + b2 * np.sqrt(one_minus_z))
    rhs = a + b2 * np.sqrt(np.abs(one_minus_z)) / math.sqrt(2.0)
    slack = lhs - rhs
    min_slack = float(slack.min())
    if min_slack < -tol * float(np.max(rhs)):
        i = int(slack.argmin())
        raise LemmaViolationError(
            f"branch lower bound violated: slack={min_slack} at "
            f"1-z={one_minus_z[i]}, a={a[i]}, B2={b2[i]}")
    return BranchBoundReport(samples=samples, min_slack=min_slack)
