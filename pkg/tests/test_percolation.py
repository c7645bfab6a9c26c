import json
import math
from collections import deque

import numpy as np
import pytest

from percolab import percolation as perc
from percolab import rng
from percolab.errors import InvalidArgumentError
from percolab.lattice import Bond


def test_p0_singleton():
    c = perc.grow_cluster(0.0, 4, seed=1)
    assert c.size == 1 and not c.truncated
    assert c.occupied_bonds == frozenset()
    assert c.sites == [(0, 0, 0, 0)]


def test_p1_truncates_at_cap():
    c = perc.grow_cluster(1.0, 2, seed=3, cap=10)
    assert c.truncated and c.size == 10


def test_cap_validation():
    with pytest.raises(InvalidArgumentError):
        perc.grow_cluster(0.5, 2, seed=1, cap=0)
    with pytest.raises(InvalidArgumentError):
        perc.grow_cluster(1.5, 2, seed=1)


def test_seed_determinism():
    a = perc.grow_cluster(0.4, 3, seed=11, cap=2000)
    b = perc.grow_cluster(0.4, 3, seed=11, cap=2000)
    assert a.sites == b.sites and a.occupied_bonds == b.occupied_bonds
    c = perc.grow_cluster(0.4, 3, seed=12, cap=2000)
    assert c.sites != a.sites or c.occupied_bonds != a.occupied_bonds


def test_cap_monotone_prefix():
    # growing with a larger cap never changes the already-revealed portion
    for seed in range(30):
        small = perc.grow_cluster(0.55, 2, seed=seed, cap=50)
        big = perc.grow_cluster(0.55, 2, seed=seed, cap=400)
        assert big.sites[:small.size] == small.sites


def _reference_sites(p, d, seed, cap, order="dfs"):
    """Independent pure-python grower revealing bonds in a different
    exploration order; the keyed RNG must make the cluster identical."""
    origin = (0,) * d
    sites = {origin}
    frontier = deque([origin])
    while frontier:
        x = frontier.pop() if order == "dfs" else frontier.popleft()
        for j in reversed(range(d)):
            for step in (1, -1):
                y = x[:j] + (x[j] + step,) + x[j + 1:]
                low = min(x, y)
                u = rng.bond_uniform(seed, rng.bond_key(low, j))
                if u < p and y not in sites:
                    if len(sites) >= cap:
                        return sites
                    sites.add(y)
                    frontier.append(y)
    return sites


def test_exploration_order_invariance():
    # bond marks are keyed by the bond, not by the order of revelation
    checked = 0
    for seed in range(20):
        c = perc.grow_cluster(0.45, 2, seed=seed, cap=20_000)
        if c.truncated:
            continue
        ref = _reference_sites(0.45, 2, seed, 20_000, order="dfs")
        assert set(c.sites) == ref
        checked += 1
    assert checked >= 15


def test_d1_exact_law_quick():
    # P(|C| = n) = n p^(n-1) (1-p)^2
    from percolab import cluster_stats as cs
    p, N = 0.3, 200_000
    h = cs.estimate_size_pmf(p, 1, N, cap=5000, seed=42)
    assert h.truncated_count == 0
    for n in range(1, 8):
        exact = n * p ** (n - 1) * (1 - p) ** 2
        se = math.sqrt(exact * (1 - exact) / N)
        assert abs(h.pmf(n) - exact) < 4 * se


def test_connected():
    c = perc.grow_cluster(0.0, 3, seed=5)
    assert perc.connected(c, (0, 0, 0))
    assert not perc.connected(c, (1, 0, 0))
    c = perc.grow_cluster(1.0, 1, seed=5, cap=7)
    for s in c.sites:
        assert perc.connected(c, s)


# -- structural fixtures ----------------------------------------------------


def _cluster_from_bonds(bonds, d):
    """Build a Cluster by hand for structural tests."""
    bonds = [Bond(a, b) for a, b in bonds]
    sites = []
    seen = set()
    for b in bonds:
        for s in (b.a, b.b):
            if s not in seen:
                seen.add(s)
                sites.append(s)
    return perc.Cluster(origin=(0,) * d, d=d, p=0.5, seed=0, cap=10**6,
                        sites=sites, occupied_bonds=frozenset(bonds),
                        truncated=False)


def _segment(k):
    return _cluster_from_bonds([((i, 0), (i + 1, 0)) for i in range(k)], 2)


def _unit_square():
    return _cluster_from_bonds(
        [((0, 0), (1, 0)), ((0, 0), (0, 1)), ((1, 0), (1, 1)),
         ((0, 1), (1, 1))], 2)


def test_doubly_connected_examples():
    sq = _unit_square()
    assert perc.doubly_connected(sq, (0, 0), (0, 0))  # x == y
    assert perc.doubly_connected(sq, (0, 0), (1, 1))
    one = _cluster_from_bonds([((0, 0), (1, 0))], 2)
    assert not perc.doubly_connected(one, (0, 0), (1, 0))
    with pytest.raises(InvalidArgumentError):
        perc.doubly_connected(one, (0, 0), (5, 5))


def test_pivotal_segment():
    c = _segment(2)
    dec = perc.pivotal_bonds(c, (0, 0), (2, 0))
    assert dec.pivots == [((0, 0), (1, 0)), ((1, 0), (2, 0))]
    assert len(dec.sausages) == 3
    assert dec.sausages[0] == frozenset({(0, 0)})
    assert dec.sausages[2] == frozenset({(2, 0)})


def test_pivotal_square_empty():
    dec = perc.pivotal_bonds(_unit_square(), (0, 0), (1, 1))
    assert dec.pivots == []
    assert len(dec.sausages) == 1


def test_pivotal_square_with_pendant():
    bonds = [((0, 0), (1, 0)), ((0, 0), (0, 1)), ((1, 0), (1, 1)),
             ((0, 1), (1, 1)), ((1, 1), (2, 1))]
    c = _cluster_from_bonds(bonds, 2)
    dec = perc.pivotal_bonds(c, (0, 0), (2, 1))
    assert dec.pivots == [((1, 1), (2, 1))]
    assert dec.sausages[0] == frozenset({(0, 0), (1, 0), (0, 1), (1, 1)})
    assert dec.sausages[1] == frozenset({(2, 1)})


def _is_connected_without(c, x, y, removed_bond):
    adj = c.adjacency()
    seen = {x}
    dq = deque([x])
    while dq:
        u = dq.popleft()
        if u == y:
            return True
        for v in adj[u]:
            if v not in seen and Bond(u, v) != removed_bond:
                seen.add(v)
                dq.append(v)
    return False


def test_pivotal_random_clusters_bridge_property():
    # removing a listed pivot disconnects x from y; removing any other
    # occupied bond does not; pivots empty <=> doubly connected
    checked = 0
    for seed in range(60):
        c = perc.grow_cluster(0.45, 2, seed=seed, cap=200)
        if c.truncated or c.size < 3:
            continue
        x = c.sites[0]
        y = c.sites[-1]
        if x == y:
            continue
        dec = perc.pivotal_bonds(c, x, y)
        assert (len(dec.pivots) == 0) == perc.doubly_connected(c, x, y)
        for u, v in dec.pivots:
            assert not _is_connected_without(c, x, y, Bond(u, v))
        pivset = {Bond(u, v) for u, v in dec.pivots}
        for b in list(c.occupied_bonds)[:40]:
            if b not in pivset:
                assert _is_connected_without(c, x, y, b)
        # sausages partition the cluster, one more sausage than pivots
        assert len(dec.sausages) == len(dec.pivots) + 1
        allsites = set()
        for s in dec.sausages:
            assert not (allsites & s)
            allsites |= s
        assert allsites == set(c.sites)
        checked += 1
    assert checked >= 20


def test_backbone_segment_and_dangler():
    seg = _segment(3)
    bb = perc.backbone(seg, (0, 0), (3, 0))
    assert bb == {(0, 0), (1, 0), (2, 0), (3, 0)}
    withdangler = _cluster_from_bonds(
        [((0, 0), (1, 0)), ((1, 0), (2, 0)), ((1, 0), (1, 1))], 2)
    bb = perc.backbone(withdangler, (0, 0), (2, 0))
    assert bb == {(0, 0), (1, 0), (2, 0)}  # branch site excluded


def test_backbone_square():
    bb = perc.backbone(_unit_square(), (0, 0), (1, 1))
    assert bb == {(0, 0), (1, 0), (0, 1), (1, 1)}


def _backbone_bridge_chain_oracle(c, x, y):
    """Independent route: union of the 2-edge-connected pieces along the
    pivotal chain; equivalently sites that stay with the chain when every
    pivotal bond and every other bridge is considered."""
    if x == y:
        # sites with two bond-disjoint paths to x
        return {u for u in c.sites
                if u == x or perc.doubly_connected(c, x, u)}
    dec = perc.pivotal_bonds(c, x, y)
    adj = c.adjacency()
    # remove all bridges of the graph; chain components through the pivots
    bridges = perc._bridges(c)
    comp = {}
    for s in c.sites:
        if s in comp:
            continue
        members = {s}
        dq = deque([s])
        comp[s] = members
        while dq:
            u = dq.popleft()
            for v in adj[u]:
                if v not in comp and Bond(u, v) not in bridges:
                    comp[v] = members
                    members.add(v)
                    dq.append(v)
    out = set(comp[x]) | set(comp[y])
    for u, v in dec.pivots:
        out |= comp[u] | comp[v]
    return out


def test_backbone_vs_bridge_chain_oracle():
    checked = 0
    for seed in range(40):
        c = perc.grow_cluster(0.45, 2, seed=seed, cap=60)
        if c.truncated or c.size < 3:
            continue
        x, y = c.sites[0], c.sites[-1]
        if x == y:
            continue
        bb = perc.backbone(c, x, y)
        assert bb == _backbone_bridge_chain_oracle(c, x, y)
        # contains every pivot endpoint, x and y; connected set
        dec = perc.pivotal_bonds(c, x, y)
        for u, v in dec.pivots:
            assert u in bb and v in bb
        assert x in bb and y in bb
        adj = c.adjacency()
        seen = {x}
        dq = deque([x])
        while dq:
            u = dq.popleft()
            for v in adj[u]:
                if v in bb and v not in seen:
                    seen.add(v)
                    dq.append(v)
        assert seen == bb  # backbone is connected within the cluster
        checked += 1
    assert checked >= 15


def test_green_assignment():
    c = perc.grow_cluster(1.0, 2, seed=9, cap=20)
    assert perc.assign_green(c, 1.0, seed=4).green == frozenset()
    assert perc.assign_green(c, 0.0, seed=4).green == frozenset(c.sites)
    with pytest.raises(InvalidArgumentError):
        perc.assign_green(c, 1.5, seed=4)
    # mean count ~ Binomial(size, 1-z)
    counts = [len(perc.assign_green(c, 0.5, seed=s).green)
              for s in range(4000)]
    mean = np.mean(counts)
    se = math.sqrt(20 * 0.25 / 4000)
    assert abs(mean - 10.0) < 4 * se


def test_serialization_roundtrip(tmp_path):
    cs = [perc.grow_cluster(0.4, 2, seed=s, cap=100) for s in range(5)]
    path = tmp_path / "samples.jsonl"
    perc.write_samples(path, cs, include_sites=True)
    recs = perc.read_samples(path)
    assert len(recs) == 5
    for c, r in zip(cs, recs):
        assert r["size"] == c.size
        assert r["truncated"] == c.truncated
        assert r["seed"] == c.seed
        assert [tuple(s) for s in r["sites"]] == c.sites
        json.dumps(r)  # records are plain JSON
