"""Z^d geometry: sites, nearest-neighbour bonds, norms and the simple
random-walk transform D̂(k) = (1/d) Σ_j cos k_j.

Sites are plain tuples of Python ints (coordinates in lattice units).
Coordinates are kept within 32-bit range; desk-scale clusters never come
near that, so only a debug assertion guards it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError

Site = tuple  # tuple[int, ...], length d

COORD_LIMIT = 2**31 - 1


def origin(d: int) -> Site:
    if d < 1:
        raise InvalidArgumentError(f"dimension must be >= 1, got {d}")
    return (0,) * d


def norm1(x: Sequence[int]) -> int:
    """l1 norm ||x||_1 = sum |x_j|."""
    return sum(abs(int(c)) for c in x)


def sq(x: Sequence[int]) -> int:
    """Euclidean square x^2 = sum x_j^2."""
    return sum(int(c) * int(c) for c in x)


def neighbors(x: Sequence[int]) -> list[Site]:
    """The 2d nearest neighbours of x, axis index ascending, minus before plus."""
    x = tuple(int(c) for c in x)
    if __debug__:
        assert all(abs(c) < COORD_LIMIT for c in x)
    out = []
    for j in range(len(x)):
        for step in (-1, 1):
            out.append(x[:j] + (x[j] + step,) + x[j + 1:])
    return out


@dataclass(frozen=True)
class Bond:
    """Unordered nearest-neighbour bond, stored with the lexicographically
    smaller endpoint first."""

    a: Site
    b: Site

    def __post_init__(self):
        a = tuple(int(c) for c in self.a)
        b = tuple(int(c) for c in self.b)
        if len(a) != len(b) or norm1(tuple(u - v for u, v in zip(a, b))) != 1:
            raise InvalidArgumentError(f"not a nearest-neighbour pair: {a}, {b}")
        if b < a:
            a, b = b, a
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def axis(self) -> int:
        for j, (u, v) in enumerate(zip(self.a, self.b)):
            if u != v:
                return j
        raise AssertionError("degenerate bond")


def dhat(k: Iterable[float]) -> float:
    """Random-walk transform (1/d) Σ cos k_j; always in [-1, 1]."""
    k = np.asarray(list(k) if not isinstance(k, np.ndarray) else k, dtype=float)
    if k.ndim != 1 or k.size < 1:
        raise InvalidArgumentError("wavevector must be a nonempty 1-d array")
    return float(np.mean(np.cos(k)))
