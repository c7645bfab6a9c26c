"""Bernoulli bond percolation: lazy cluster growth from the origin, plus
the combinatorial structure of a grown cluster (double connections,
pivotal bonds, sausages, backbone, green sites).

Growth reveals each incident bond at most once, with a Bernoulli(p) mark
keyed by (seed, canonical bond), so a realization is a pure function of
(seed, p, d) independent of exploration order, and memory is O(|C|).

Conditioning on an exact size n is replaced elsewhere by a size window
[n(1-w), n(1+w)] via rejection; exact-size rejection is exponentially
wasteful and the window bias is second order at the n used here.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import _kernels, rng
from .errors import InvalidArgumentError
from .lattice import Bond, Site, origin

SERIAL_SCHEMA = "percolab.cluster.v1"


@dataclass
class Cluster:
    """The origin's connected component under one bond realization.

    sites are in BFS revelation order (origin first); occupied_bonds holds
    every revealed occupied bond with both endpoints in the cluster.
    """

    origin: Site
    d: int
    p: float
    seed: int
    cap: int
    sites: list
    occupied_bonds: frozenset
    truncated: bool
    _site_set: frozenset = field(default=None, repr=False)
    _adj: Optional[dict] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.sites)

    @property
    def site_set(self) -> frozenset:
        if self._site_set is None:
            self._site_set = frozenset(self.sites)
        return self._site_set

    def adjacency(self) -> dict:
        """site -> list of neighbouring sites through occupied bonds."""
        if self._adj is None:
            adj = {s: [] for s in self.sites}
            for b in self.occupied_bonds:
                adj[b.a].append(b.b)
                adj[b.b].append(b.a)
            self._adj = adj
        return self._adj


@dataclass(frozen=True)
class GreenAssignment:
    """Sites marked green independently with probability 1 - z."""

    green: frozenset
    z: float


@dataclass
class PivotalDecomposition:
    """Ordered directed pivotal bonds for x -> y and the sausages they
    carve: sausage j is the piece between pivots j-1 and j (dangling ends
    attached), so there is always one more sausage than pivots."""

    pivots: list  # list[(Site, Site)], directed
    sausages: list  # list[frozenset[Site]]


def grow_cluster(p: float, d: int, seed: int, cap: int = 10**6,
                 collect_bonds: bool = True) -> Cluster:
    """Grow the origin's cluster at bond density p in Z^d.

    Identical (seed, p, d, cap) give identical clusters; increasing cap
    never changes the already-revealed portion.  Growth stops with
    truncated=True when one more site would exceed cap.
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"p must be in [0,1], got {p}")
    if d < 1:
        raise InvalidArgumentError(f"d must be >= 1, got {d}")
    if cap < 1:
        raise InvalidArgumentError(f"cap must be >= 1, got {cap}")
    coords, bonds_idx, truncated = _kernels.grow_single(
        np.uint64(seed & rng.U64), float(p), int(d), int(cap), collect_bonds)
    sites = [tuple(int(c) for c in row) for row in coords]
    bonds = frozenset(Bond(sites[i], sites[j]) for i, j in bonds_idx)
    return Cluster(origin=origin(d), d=d, p=p, seed=seed, cap=cap,
                   sites=sites, occupied_bonds=bonds, truncated=truncated)


def connected(c: Cluster, x: Iterable[int]) -> bool:
    """Is x in the cluster (i.e. connected to the origin)?"""
    return tuple(int(v) for v in x) in c.site_set


def assign_green(c: Cluster, z: float, seed: int) -> GreenAssignment:
    """Mark each cluster site green independently with probability 1 - z."""
    if not 0.0 <= z <= 1.0:
        raise InvalidArgumentError(f"z must be in [0,1], got {z}")
    green = frozenset(
        s for s in c.sites
        if rng.keyed_uniform(seed, rng.STREAM_GREEN, rng.site_hash(s)) < 1.0 - z)
    return GreenAssignment(green=green, z=z)


# ---------------------------------------------------------------------------
# connectivity structure: max-flow (value capped at 2) and bridge machinery
# ---------------------------------------------------------------------------


def _require_site(c: Cluster, x) -> Site:
    x = tuple(int(v) for v in x)
    if x not in c.site_set:
        raise InvalidArgumentError(f"site {x} not in cluster")
    return x


def _augment(adj: dict, residual: dict, s, t) -> bool:
    """One BFS augmenting path s -> t over unit-capacity arcs; updates
    residual in place.  residual[(u,v)] is the remaining capacity."""
    prev = {s: None}
    dq = deque([s])
    while dq:
        u = dq.popleft()
        if u == t:
            break
        for v in adj[u]:
            if v not in prev and residual.get((u, v), 0) > 0:
                prev[v] = u
                dq.append(v)
    if t not in prev:
        return False
    v = t
    while prev[v] is not None:
        u = prev[v]
        residual[(u, v)] -= 1
        residual[(v, u)] = residual.get((v, u), 0) + 1
        v = u
    return True


def _flow_at_least_two(c: Cluster, s: Site, t: Site) -> bool:
    """Max-flow >= 2 from s to t over occupied bonds (unit capacity per
    bond, modelled as antiparallel unit arcs); two augmenting rounds."""
    adj = c.adjacency()
    residual = {}
    for b in c.occupied_bonds:
        residual[(b.a, b.b)] = 1
        residual[(b.b, b.a)] = 1
    return _augment(adj, residual, s, t) and _augment(adj, residual, s, t)


def doubly_connected(c: Cluster, x, y) -> bool:
    """Two bond-disjoint occupied paths x -> y (or x == y)."""
    x = _require_site(c, x)
    y = _require_site(c, y)
    if x == y:
        return True
    return _flow_at_least_two(c, x, y)


def backbone(c: Cluster, x, y) -> set:
    """Sites u with bond-disjoint occupied paths x -> u and u -> y.

    Computed, per the contract, by a max-flow with an auxiliary source
    attached to x and y by unit edges and sink u: value >= 2 iff u is a
    backbone site.  Equals the x-y string of sausages with dangling ends
    removed.
    """
    x = _require_site(c, x)
    y = _require_site(c, y)
    adj = c.adjacency()
    src = ("src",)
    out = set()
    for u in c.sites:
        if u == x or u == y:
            # one unit arrives directly from the source; the other needs a
            # path from the other terminal, which exists (cluster connected)
            out.add(u)
            continue
        residual = {}
        for b in c.occupied_bonds:
            residual[(b.a, b.b)] = 1
            residual[(b.b, b.a)] = 1
        residual[(src, x)] = 1
        residual[(src, y)] = 1
        aug_adj = dict(adj)
        aug_adj[src] = [x, y]
        if _augment(aug_adj, residual, src, u) and _augment(aug_adj, residual, src, u):
            out.add(u)
    return out


def _bridges(c: Cluster) -> set:
    """All bridges of (sites, occupied_bonds), iterative Tarjan."""
    adj = c.adjacency()
    index = {}
    low = {}
    bridges = set()
    counter = 0
    for root in c.sites:
        if root in index:
            continue
        stack = [(root, None, iter(adj[root]))]
        index[root] = low[root] = counter
        counter += 1
        while stack:
            u, parent_edge, it = stack[-1]
            advanced = False
            for v in it:
                eid = Bond(u, v)
                if eid == parent_edge:
                    # skip one traversal of the tree edge; parallel edges
                    # cannot occur on Z^d
                    parent_edge = None
                    stack[-1] = (u, None, it)
                    continue
                if v in index:
                    low[u] = min(low[u], index[v])
                else:
                    index[v] = low[v] = counter
                    counter += 1
                    stack.append((v, eid, iter(adj[v])))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                if stack:
                    w = stack[-1][0]
                    low[w] = min(low[w], low[u])
                    if low[u] > index[w]:
                        bridges.add(Bond(w, u))
    return bridges


def pivotal_bonds(c: Cluster, x, y) -> PivotalDecomposition:
    """Ordered directed pivotal bonds for the connection x -> y.

    A bond is pivotal iff it is a bridge separating x from y; ordering and
    direction follow the walk from x to y.  Sausages are the connected
    pieces left after removing the pivotal bonds, listed from x's side.
    """
    x = _require_site(c, x)
    y = _require_site(c, y)
    if x == y:
        raise InvalidArgumentError("pivotal bonds need x != y")
    bridges = _bridges(c)
    adj = c.adjacency()

    # walk a path x -> y, keeping the bridges it crosses (a bridge on one
    # x-y path separating x from y is on every x-y path, in the same order)
    prev = {x: None}
    dq = deque([x])
    while dq:
        u = dq.popleft()
        if u == y:
            break
        for v in adj[u]:
            if v not in prev:
                prev[v] = u
                dq.append(v)
    path = []
    v = y
    while v is not None:
        path.append(v)
        v = prev[v]
    path.reverse()

    # a bridge lying on a simple x-y path separates x from y, and every
    # bridge separating x from y lies on every x-y path
    pivots = [(u, v) for u, v in zip(path, path[1:]) if Bond(u, v) in bridges]

    # components after deleting the pivotal bonds = sausages, from x's side
    removed = {Bond(u, v) for u, v in pivots}
    comp = {}
    for s in c.sites:
        if s in comp:
            continue
        members = [s]
        comp[s] = s
        dq = deque([s])
        while dq:
            u = dq.popleft()
            for v in adj[u]:
                if v not in comp and Bond(u, v) not in removed:
                    comp[v] = s
                    members.append(v)
                    dq.append(v)
        comp[s] = frozenset(members)
        for m in members:
            comp[m] = comp[s]
    sausages = [comp[x]]
    for _, v in pivots:
        sausages.append(comp[v])
    return PivotalDecomposition(pivots=pivots, sausages=sausages)


# ---------------------------------------------------------------------------
# serialization: one JSON record per sample line
# ---------------------------------------------------------------------------


def cluster_record(c: Cluster, include_sites: bool = False) -> str:
    rec = {"schema": SERIAL_SCHEMA, "seed": int(c.seed), "p": c.p, "d": c.d,
           "cap": c.cap, "size": c.size, "truncated": bool(c.truncated)}
    if include_sites:
        rec["sites"] = [list(s) for s in c.sites]
    return json.dumps(rec, separators=(",", ":"))


def write_samples(path, clusters: Iterable[Cluster], include_sites=False):
    with open(path, "w") as fh:
        for c in clusters:
            fh.write(cluster_record(c, include_sites) + "\n")


def read_samples(path) -> list:
    """Parse serialized sample records (dicts, not re-grown clusters)."""
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
