"""Counter-based randomness: every random decision is a pure function of
(master seed, purpose, counter key).

Bond occupation marks are keyed by the bond's canonical coordinates, so a
cluster realization is independent of the order in which the growth
algorithm touches bonds, and identical seeds reproduce identical clusters
bit-for-bit on any machine.  The mixing function is splitmix64; site
hashing is fixed and seedless so hash tables are reproducible too.

Bulk (vectorized) sampling uses numpy's Philox counter generator, keyed by
a child seed derived from the master seed and a purpose string.
"""

from __future__ import annotations

import numpy as np

U64 = 0xFFFFFFFFFFFFFFFF

# purpose tags keep independent decision streams independent
STREAM_BONDS = 0x42F0E1EBA9EA3693
STREAM_GREEN = 0x6B43A9B5E4F0A1D7
STREAM_SUBSAMPLE = 0x9216D5D98979FB1B
STREAM_PAIRS = 0x3C79AC492BA7B653


def mix64(x: int) -> int:
    """splitmix64 finalizer: a fixed 64-bit bijective mixer."""
    x &= U64
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & U64
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & U64
    return x ^ (x >> 31)


def site_hash(coords) -> int:
    """Fixed, seedless mixing of integer coordinates (reproducible site keys)."""
    h = 0x9E3779B97F4A7C15
    for c in coords:
        h = mix64(h ^ (int(c) & U64))
    return h


def bond_key(low_coords, axis: int) -> int:
    """Key of the bond {low, low + e_axis}, identified by its canonical
    (lexicographically smaller) endpoint and its axis."""
    return mix64(site_hash(low_coords) ^ ((axis + 1) * 0xA0761D6478BD642F & U64))


def bond_uniform(seed: int, key: int) -> float:
    """Uniform [0,1) mark of a bond under the given master seed."""
    u = mix64(key ^ mix64((seed & U64) ^ STREAM_BONDS))
    return (u >> 11) * (1.0 / (1 << 53))


def keyed_uniform(seed: int, stream: int, key: int) -> float:
    """Uniform [0,1) for an arbitrary (stream, key) decision."""
    u = mix64(key ^ mix64((seed & U64) ^ (stream & U64)))
    return (u >> 11) * (1.0 / (1 << 53))


def split_seed(master: int, *path) -> int:
    """Derive a child 64-bit seed from a master seed and a path of labels.

    String labels are hashed bytewise; integers are mixed directly.  The
    derivation is associative-friendly: disjoint paths give independent
    streams, and the same path always gives the same child.
    """
    h = mix64((master & U64) ^ 0x8E2B_4D1F_9A6C_3E57)
    for part in path:
        if isinstance(part, str):
            for b in part.encode():
                h = mix64(h ^ b)
        else:
            h = mix64(h ^ (int(part) & U64))
    return h


def generator(master: int, *path) -> np.random.Generator:
    """numpy Generator (Philox, counter-based) for a derived stream."""
    return np.random.Generator(np.random.Philox(key=split_seed(master, *path)))


def keyed_uniform_array(seed: int, stream: int, keys: np.ndarray) -> np.ndarray:
    """Vectorized counter-based uniforms in [0,1): one value per uint64 key.

    The same (seed, stream, key) always gives the same value, so draws
    keyed by (sample index, axis) are shared across runs that differ only
    in dimension -- exact common-random-numbers coupling.  Dense counter
    keys are spread by the golden gamma before the finalizer (a bare
    finalizer on consecutive integers is a known-weak stream).
    """
    keys = keys.astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15)
    x = keys ^ np.uint64(mix64((seed & U64) ^ (stream & U64)))
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    x = x ^ (x >> np.uint64(31))
    return (x >> np.uint64(11)) * (1.0 / (1 << 53))
