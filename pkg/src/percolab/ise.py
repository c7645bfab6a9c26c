"""Numerical evaluation of the ISE mean-mass densities and their Fourier
transforms.

Two-point:
    A2hat(k^2) = int_0^inf t exp(-t^2/2) exp(-k^2 t/2) dt
    A2(x)      = int_0^inf t exp(-t^2/2) (2 pi t)^(-d/2) exp(-x^2/(2t)) dt

Three-point (branch point integrated out; a = (k+l)^2, b = k^2, c = l^2):
    A3hat(a,b,c) = int (sum t_j) exp(-(sum t_j)^2/2)
                       exp(-(a t_1 + b t_2 + c t_3)/2) dt1 dt2 dt3
    A3(x,y)      = same with heat kernels p_{t1}(u) p_{t2}(x-u) p_{t3}(y-u),
                   u integrated out analytically as a Gaussian convolution.

The t integrals use the substitution u = t^2/2 (Gaussian tail becomes
exp(-u)) with adaptive Gauss-Kronrod panels; the triple integral reduces
to s = t1+t2+t3 times a fixed tensorized Gauss-Legendre rule over the
barycentric simplex, with a doubled-order Richardson check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import InvalidArgumentError, OutOfDomainError


@dataclass(frozen=True)
class IseParams:
    abs_tol: float = 1e-10
    simplex_order: int = 24

    @property
    def t_max(self) -> float:
        # exp(-t_max^2/2) * poly safely below abs_tol/10
        return math.sqrt(2.0 * math.log(1.0 / self.abs_tol)) + 5.0


DEFAULT = IseParams()


def a2_fourier(k2: float, params: IseParams = DEFAULT) -> float:
    """Two-point transform at squared wavenumber k2 >= 0; in (0, 1]."""
    if k2 < 0:
        raise InvalidArgumentError(f"k2 must be >= 0, got {k2}")
    a = 0.5 * k2
    # integrand is entire in t; the truncation at t_max bounds the tail by
    # exp(-t_max^2/2).  Break points flag the exp(-a t) scale to quad.
    pts = sorted({min(1.0, 1.0 / (a + 1.0)), min(4.0, 40.0 / (a + 1.0)), 1.0})
    val, _ = integrate.quad(lambda t: t * math.exp(-0.5 * t * t - a * t),
                            0.0, params.t_max, epsabs=params.abs_tol * 0.1,
                            epsrel=1e-13, limit=200,
                            points=[p for p in pts if p < params.t_max])
    return val


def a2_fourier_closed(k2: float) -> float:
    """erfc closed form of a2_fourier (independent cross-check route):
    1 - a e^(a^2/2) sqrt(pi/2) erfc(a/sqrt(2)) with a = k2/2."""
    a = 0.5 * k2
    if a == 0.0:
        return 1.0
    # erfcx(x) = exp(x^2) erfc(x) avoids overflow for large a
    return 1.0 - a * math.sqrt(math.pi / 2.0) * special.erfcx(a / math.sqrt(2.0))


def a2_density(x, params: IseParams = DEFAULT) -> float:
    """Mean mass density of ISE at x in R^d (d = len(x)).

    The integrand behaves like t^(1-d/2) at small t: integrable at x = 0
    only for d < 4; for x != 0 the factor exp(-x^2/2t) regularizes every d.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise InvalidArgumentError("x must be a nonempty vector")
    d = x.size
    x2 = float(x @ x)
    if x2 == 0.0 and d >= 4:
        raise OutOfDomainError(
            f"A2 density diverges at x = 0 for d = {d} >= 4")

    def integrand(t):
        return (t * math.exp(-0.5 * t * t) * (2.0 * math.pi * t) ** (-0.5 * d)
                * math.exp(-0.5 * x2 / t))

    pts = [t for t in (math.sqrt(x2) if x2 > 0 else 0.1, 1.0) if 0 < t < params.t_max]
    val, _ = integrate.quad(integrand, 0.0, params.t_max,
                            epsabs=params.abs_tol * 0.1, epsrel=1e-12,
                            limit=400, points=pts)
    return val


def _simplex_rule(order: int):
    """Tensorized Gauss-Legendre rule on the 2-simplex {u1+u2 <= 1},
    via the Duffy map (u1, u2) = (a, (1-a) b)."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    a = 0.5 * (nodes + 1.0)
    wa = 0.5 * weights
    u1 = np.repeat(a, order)
    b = np.tile(a, order)
    u2 = (1.0 - u1) * b
    w = np.repeat(wa, order) * np.tile(wa, order) * (1.0 - u1)
    return u1, u2, w


def _a3_over_simplex(f, params: IseParams):
    """int_0^inf s^3 e^(-s^2/2) int_simplex f(s, u1, u2, u3) du ds, with a
    doubled-order simplex rule as Richardson check."""

    def outer(order):
        u1, u2, w = _simplex_rule(order)
        u3 = 1.0 - u1 - u2

        def g(s):
            return s**3 * math.exp(-0.5 * s * s) * float(
                np.sum(w * f(s, u1, u2, u3)))

        val, _ = integrate.quad(g, 0.0, params.t_max,
                                epsabs=params.abs_tol * 0.1, epsrel=1e-12,
                                limit=200)
        return val

    order = params.simplex_order
    v1 = outer(order)
    v2 = outer(2 * order)
    # escalate the simplex order until the doubled rule confirms it
    while abs(v2 - v1) > max(1e3 * params.abs_tol, 1e-6 * abs(v2)):
        if order >= 256:
            raise InvalidArgumentError(
                f"simplex quadrature failed its refinement check: {v1} vs {v2}")
        order *= 2
        v1, v2 = v2, outer(2 * order)
    return v2


def a3_fourier(kl2: float, k2: float, l2: float,
               params: IseParams = DEFAULT) -> float:
    """Three-point transform given the three scalars (k+l)^2, k^2, l^2.

    Equals 1 at (0,0,0), symmetric under swapping k2 and l2, and strictly
    decreasing in each argument.
    """
    for name, v in (("(k+l)^2", kl2), ("k^2", k2), ("l^2", l2)):
        if v < 0:
            raise InvalidArgumentError(f"{name} must be >= 0, got {v}")

    def f(s, u1, u2, u3):
        return np.exp(-0.5 * s * (kl2 * u1 + k2 * u2 + l2 * u3))

    return _a3_over_simplex(f, params)


def a3_fourier_vec(k, l, params: IseParams = DEFAULT) -> float:
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    kl = k + l
    return a3_fourier(float(kl @ kl), float(k @ k), float(l @ l), params)


def a3_density(x, y, params: IseParams = DEFAULT) -> float:
    """Joint mean mass density of ISE at (x, y), each in R^d.

    The branch-point integral over u is a Gaussian convolution done in
    closed form: p_{t1}(u) p_{t2}(x-u) = p_{t1+t2}(x) p_{nu}(u - mu) with
    nu = t1 t2/(t1+t2), mu = t1 x/(t1+t2), and the remaining u-integral
    against p_{t3}(y-u) gives p_{nu+t3}(y - mu).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 1:
        raise InvalidArgumentError("x and y must be vectors of equal length")
    d = x.size
    x2 = float(x @ x)

    def f(s, u1, u2, u3):
        t1 = s * np.maximum(u1, 1e-300)
        t2 = s * np.maximum(u2, 1e-300)
        t3 = s * np.maximum(u3, 1e-300)
        t12 = t1 + t2
        p12 = (2.0 * math.pi * t12) ** (-0.5 * d) * np.exp(-0.5 * x2 / t12)
        nu = t1 * t2 / t12 + t3
        dvec = y[None, :] - (t1 / t12)[:, None] * x[None, :]
        d2 = (dvec * dvec).sum(axis=1)
        return p12 * (2.0 * math.pi * nu) ** (-0.5 * d) * np.exp(-0.5 * d2 / nu)

    return _a3_over_simplex(f, params)
