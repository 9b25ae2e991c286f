import numpy as np
import pytest

from ossprim import merge, prng
from ossprim.errors import InvariantViolation, RangeError, UnsupportedBackend
from ossprim.prng import NodeId


def key(n0, n1, tag=0, **kw):
    return merge.make_merge_key(bytes([tag % 256]) * 32, n0, n1, **kw)


def flat_forward(k, e):
    b = 1 if e >= k.n0 else 0
    return merge.merge_forward(k, b, e - k.n0 if b else e)


def full_table(k):
    return [flat_forward(k, e) for e in range(k.n)]


def materialize_leaves(k):
    return [merge.merge_inverse(k, z)[0] for z in range(k.n)]


def test_root_tally_is_n1():
    for (n0, n1) in [(4, 4), (3, 5), (7, 0), (0, 2)]:
        assert merge.tally(key(n0, n1), prng.ROOT) == n1


def test_no_right_pile_is_identity():
    k = key(6, 0)
    for node_z in range(6):
        assert merge.merge_inverse(k, node_z) == (0, node_z)
        assert merge.merge_forward(k, 0, node_z) == node_z
    assert all(merge.tally(k, NodeId(1, b)) == 0 for b in (0, 1))


def test_no_left_pile_is_identity_on_right():
    k = key(0, 5)
    for z in range(5):
        assert merge.merge_inverse(k, z) == (1, z)
        assert merge.merge_forward(k, 1, z) == z


def test_two_leaf_enumeration():
    # one PRF draw decides between the two possible (1,1)-merges
    seen = set()
    for tag in range(40):
        k = key(1, 1, tag)
        leaves = (merge.tally(k, NodeId(1, 0)), merge.tally(k, NodeId(1, 1)))
        assert leaves in {(0, 1), (1, 0)}
        seen.add(leaves)
    assert seen == {(0, 1), (1, 0)}


def test_inverse_matches_bruteforce_reconstruction():
    for tag in range(5):
        k = key(4, 4, tag)
        leaves = materialize_leaves(k)
        assert sum(leaves) == 4
        for z in range(8):
            b = leaves[z]
            rank = sum(1 for zz in range(z) if leaves[zz] == b)
            assert merge.merge_inverse(k, z) == (b, rank)


def test_round_trip_and_order_sweep():
    for n in range(1, 65):
        k = key(n // 3, n - n // 3, tag=n)
        table = full_table(k)
        assert sorted(table) == list(range(n))
        piles = [table[: k.n0], table[k.n0 :]]
        for pile in piles:
            assert pile == sorted(pile)
        for z in range(n):
            b, x = merge.merge_inverse(k, z)
            assert merge.merge_forward(k, b, x) == z


def test_forward_matches_binary_search():
    k = key(9, 7, tag=3)
    for b in (0, 1):
        for x in range(k.n1 if b else k.n0):
            assert merge.merge_forward(k, b, x) == merge.merge_forward_bsearch(k, b, x)


def test_range_errors():
    k = key(3, 3)
    with pytest.raises(RangeError):
        merge.merge_inverse(k, 6)
    with pytest.raises(RangeError):
        merge.merge_forward(k, 0, 3)


def test_parent_consistency_exact():
    k = key(9, 11, tag=5)
    for depth in range(1, 4):
        for path in range(1 << (depth - 1)):
            parent = NodeId(depth - 1, path)
            try:
                merge.node_size(k, parent.child(0))
            except RangeError:
                continue
            assert merge.tally(k, parent) == (
                merge.tally(k, parent.child(0)) + merge.tally(k, parent.child(1)))


# -- key permutation ------------------------------------------------------------

def test_permute_legality_matches_piles():
    for tag in range(4):
        k = key(5, 6, tag)
        for z in range(k.n - 1):
            same = merge.merge_inverse(k, z)[0] == merge.merge_inverse(k, z + 1)[0]
            assert (merge.merge_permute(k, z, 0) is None) == same


def test_permuted_eval_c0_and_c1_exhaustive():
    for tag in range(3):
        for (n0, n1) in [(4, 4), (3, 5), (6, 2)]:
            k = key(n0, n1, tag + 9)
            base = full_table(k)
            for z in range(k.n - 1):
                for c in (0, 1):
                    pmk = merge.merge_permute(k, z, c)
                    if pmk is None:
                        continue
                    got = []
                    for e in range(k.n):
                        b = 1 if e >= n0 else 0
                        got.append(merge.permuted_merge_eval(pmk, b, e - n0 if b else e))
                    want = [merge._tau_swap(z, w) for w in base] if c else base
                    assert got == want
                    for zz in range(k.n):
                        b, x = merge.permuted_merge_inverse(pmk, zz)
                        assert got[x + (n0 if b else 0)] == zz


def test_hardcoded_set_is_paths_plus_siblings():
    k = key(8, 8, tag=2)
    z = next(z for z in range(15)
             if merge.merge_inverse(k, z)[0] != merge.merge_inverse(k, z + 1)[0])
    pmk = merge.merge_permute(k, z, 0)
    path_nodes = set(merge._path_nodes(16, z)) | set(merge._path_nodes(16, z + 1))
    expected = set(path_nodes)
    for nd in path_nodes:
        sib = merge._sibling(nd)
        if sib is not None:
            expected.add(sib)
    assert set(pmk.hardcoded) == expected
    punctured = set(pmk.punctured.punctured)
    leaves = {merge._path_nodes(16, z)[-1], merge._path_nodes(16, z + 1)[-1]}
    assert punctured == path_nodes - leaves


def test_c_flip_changes_exactly_leaves_and_disjoint_chains():
    k = key(8, 8, tag=4)
    z = next(z for z in range(15)
             if merge.merge_inverse(k, z)[0] != merge.merge_inverse(k, z + 1)[0])
    p0 = merge.merge_permute(k, z, 0)
    p1 = merge.merge_permute(k, z, 1)
    changed = {nd for nd in p0.hardcoded if p0.hardcoded[nd] != p1.hardcoded[nd]}
    leaf0 = merge._path_nodes(16, z)[-1]
    leaf1 = merge._path_nodes(16, z + 1)[-1]
    assert leaf0 in changed and leaf1 in changed
    # the changed set splits into the two disjoint ancestor chains below the
    # common ancestor; each chain's values move by exactly +-1
    for nd in changed:
        assert nd.is_ancestor_of(leaf0) != nd.is_ancestor_of(leaf1)
        assert abs(p0.hardcoded[nd] - p1.hardcoded[nd]) == 1


def test_permuted_parent_consistency():
    k = key(8, 8, tag=6)
    z = next(z for z in range(15)
             if merge.merge_inverse(k, z)[0] != merge.merge_inverse(k, z + 1)[0])
    for c in (0, 1):
        pmk = merge.merge_permute(k, z, c)
        hard = pmk.hardcoded
        for nd, v in hard.items():
            c0, c1 = nd.child(0), nd.child(1)
            if c0 in hard and c1 in hard:
                assert v == hard[c0] + hard[c1]


def test_permuted_key_never_consults_punctured_nodes():
    k = key(8, 8, tag=7)
    z = next(z for z in range(15)
             if merge.merge_inverse(k, z)[0] != merge.merge_inverse(k, z + 1)[0])
    pmk = merge.merge_permute(k, z, 1)
    for zz in range(16):
        merge.permuted_merge_inverse(pmk, zz)  # must not raise
    # corrupting the hard-coded table exposes the invariant violation
    broken = dict(pmk.hardcoded)
    victim = next(nd for nd in broken if nd.depth == 1)
    del broken[victim]
    bad = merge.PermutedMergeKey(pmk.punctured, broken, pmk.z, pmk.c,
                                 pmk.n0, pmk.n1, pmk.kappa)
    with pytest.raises(InvariantViolation):
        for zz in range(16):
            merge.permuted_merge_inverse(bad, zz)


def test_permuted_serialization_round_trip():
    k = key(4, 4, tag=8)
    z = next(z for z in range(7)
             if merge.merge_inverse(k, z)[0] != merge.merge_inverse(k, z + 1)[0])
    pmk = merge.merge_permute(k, z, 1)
    back = merge.deserialize_permuted(merge.serialize_permuted(pmk))
    for e in range(8):
        b = 1 if e >= 4 else 0
        assert (merge.permuted_merge_eval(back, b, e - 4 if b else e)
                == merge.permuted_merge_eval(pmk, b, e - 4 if b else e))


def test_permute_requires_exact_sampler():
    k = merge.make_merge_key(b"\x01" * 32, 8, 8, sampler=merge.SAMPLER_GAUSS,
                             backend=prng.BACKEND_FASTMIX)
    with pytest.raises(UnsupportedBackend):
        merge.merge_permute(k, 0, 0)


# -- decomposition ----------------------------------------------------------------

def test_decompose_identity_when_no_right_pile():
    assert list(merge.merge_decompose(key(5, 0))) == []


def test_decompose_composes_and_intermediates_order_preserving():
    for tag, (n0, n1) in enumerate([(2, 2), (4, 4), (3, 5), (5, 3)]):
        k = key(n0, n1, tag + 20)
        n = n0 + n1
        cur = list(range(n))
        steps = 0
        for st in merge.merge_decompose(k):
            cur = [merge._tau_swap(st.z, v) for v in cur]
            steps += 1
            got = [st.forward(e) for e in range(n)]
            assert got == cur
            for zz in range(n):
                b, x = st.inverse(zz)
                assert cur[x + (n0 if b else 0)] == zz
            # order preservation of the intermediate within each pile
            assert got[:n0] == sorted(got[:n0])
            assert got[n0:] == sorted(got[n0:])
        assert cur == full_table(k)
        assert steps <= n1 * n


def test_decompose_small_schedule_bound():
    k = key(2, 2, tag=30)
    assert sum(1 for _ in merge.merge_decompose(k)) <= 4


# -- gauss scale path ----------------------------------------------------------------

def test_merge_key_serialization_round_trip():
    k = key(9, 7, tag=31)
    back = merge.deserialize_key(merge.serialize_key(k))
    assert [merge.merge_inverse(back, z) for z in range(16)] == \
        [merge.merge_inverse(k, z) for z in range(16)]


def test_gauss_scalar_agrees_with_batch_merge():
    import numpy as np

    from ossprim import fastpath

    k = merge.make_merge_key(b"\x23" * 32, 1 << 15, 1 << 15,
                             sampler=merge.SAMPLER_GAUSS, backend=prng.BACKEND_FASTMIX)
    k0w = k.prf_key.fast_words()[0]
    zs = np.array([0, 1, 12345, 65535, 40000], dtype=np.uint64)
    mctx = np.full_like(zs, np.uint64(k.fast_ctx))
    bs, xs = fastpath.merge_inverse_batch(mctx, np.uint64(k0w), 16, zs)
    for i, z in enumerate(zs):
        assert merge.merge_inverse(k, int(z)) == (int(bs[i]), int(xs[i]))


def test_gauss_large_domain_batch_throughput():
    # 10^4 merge round trips at N = 2^64 against the 1s-per-10^3 budget
    import time

    import numpy as np

    from ossprim import fastpath

    k = merge.make_merge_key(b"\x24" * 32, 1 << 63, 1 << 63,
                             sampler=merge.SAMPLER_GAUSS, backend=prng.BACKEND_FASTMIX)
    k0w = np.uint64(k.prf_key.fast_words()[0])
    rng = np.random.default_rng(8)
    zs = rng.integers(0, 1 << 63, size=10_000, dtype=np.uint64)
    mctx = np.full_like(zs, np.uint64(k.fast_ctx))
    fastpath.merge_inverse_batch(mctx[:4], k0w, 64, zs[:4])  # warm dispatch
    t0 = time.monotonic()
    bs, xs = fastpath.merge_inverse_batch(mctx, k0w, 64, zs)
    back = fastpath.merge_forward_batch(mctx, k0w, 64, bs, xs)
    dt = time.monotonic() - t0
    assert (back == zs).all()
    assert dt < 10.0  # < 1 s per 10^3 points
    # spot agreement with the scalar key route
    for i in (0, 17, 6000):
        assert merge.merge_inverse(k, int(zs[i])) == (int(bs[i]), int(xs[i]))


def test_gauss_round_trip_large_domain():
    k = merge.make_merge_key(b"\x21" * 32, 1 << 39, 1 << 39,
                             sampler=merge.SAMPLER_GAUSS, backend=prng.BACKEND_FASTMIX)
    rng = np.random.default_rng(5)
    for z in rng.integers(0, 1 << 40, size=50):
        b, x = merge.merge_inverse(k, int(z))
        assert merge.merge_forward(k, b, x) == int(z)


def test_gauss_parent_consistency_at_2_40():
    k = merge.make_merge_key(b"\x22" * 32, 1 << 39, 1 << 39,
                             sampler=merge.SAMPLER_GAUSS, backend=prng.BACKEND_FASTMIX)
    rng = np.random.default_rng(6)
    for _ in range(25):
        depth = int(rng.integers(0, 39))
        path = int(rng.integers(0, 1 << depth)) if depth else 0
        parent = NodeId(depth, path)
        v = merge.tally(k, parent)
        assert v == merge.tally(k, parent.child(0)) + merge.tally(k, parent.child(1))
        assert 0 <= v <= merge.node_size(k, parent)
