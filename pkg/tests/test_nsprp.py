import numpy as np
import pytest

from ossprim import merge, nsprp, prng
from ossprim.errors import RangeError, UnsupportedBackend


def key(n, tag=0):
    return nsprp.make_prp_key(bytes([tag % 256]) * 32, n)


def table(k):
    return [nsprp.prp_forward(k, x) for x in range(k.n)]


def test_singleton_is_identity():
    assert nsprp.prp_forward(key(1), 0) == 0
    assert nsprp.prp_inverse(key(1), 0) == 0


def test_base_case_is_xor_with_key_bit():
    seen = set()
    for tag in range(24):
        k = key(2, tag)
        bit = nsprp.prp_forward(k, 0)
        assert nsprp.prp_forward(k, 1) == 1 - bit
        assert nsprp.prp_inverse(k, bit) == 0
        seen.add(bit)
    assert seen == {0, 1}


def test_bijection_exhaustive():
    for n in range(1, 65):
        t = table(key(n, n))
        assert sorted(t) == list(range(n))


def test_inverse_round_trip_sweep():
    for n in (1, 2, 3, 7, 31, 64, 100):
        k = key(n, n + 1)
        for x in range(n):
            assert nsprp.prp_inverse(k, nsprp.prp_forward(k, x)) == x


def test_range_errors():
    with pytest.raises(RangeError):
        nsprp.prp_forward(key(5), 5)
    with pytest.raises(RangeError):
        nsprp.prp_inverse(key(5), -1)


def test_permute_totality_and_correctness():
    for n in range(2, 33):
        k = key(n, n + 50)
        base = table(k)
        for z in range(n - 1):
            for c in (0, 1):
                pk = nsprp.prp_permute(k, z, c)  # never illegal
                got = [nsprp.permuted_prp_forward(pk, x) for x in range(n)]
                want = [merge._tau_swap(z, w) for w in base] if c else base
                assert got == want
                for zz in range(n):
                    assert got[nsprp.permuted_prp_inverse(pk, zz)] == zz


def test_permute_base_case_flips_key_bit():
    k = key(2, 3)
    bit = nsprp.prp_forward(k, 0)
    pk = nsprp.prp_permute(k, 0, 1)
    assert nsprp.permuted_prp_forward(pk, 0) == 1 - bit


def test_decompose_composes_exhaustively():
    for n in (1, 2, 3, 4, 5, 8):
        k = key(n, n + 80)
        cur = list(range(n))
        for st in nsprp.prp_decompose(k):
            cur = [merge._tau_swap(st.z, v) for v in cur]
            got = [st.forward(e) for e in range(n)]
            assert got == cur
            assert sorted(got) == list(range(n))  # every prefix is a bijection
            assert [st.inverse(z) for z in got] == list(range(n))
        assert cur == table(k)


def test_node_touches_polylog_bound():
    # visited tally nodes per evaluation, counted through the per-key caches
    bits = 10
    k = nsprp.make_prp_key(b"\x2b" * 32, 1 << bits)
    nsprp.prp_forward(k, 777)

    def count_nodes(pk) -> int:
        total = 0
        mk = pk._cache.get("merge")
        if mk is not None:
            total += len(mk._values)
        for b in (0, 1):
            child = pk._cache.get(("child", b))
            if child is not None:
                total += count_nodes(child)
        return total

    touches = count_nodes(k)
    assert touches <= 4 * bits * bits


def test_scale_key_round_trip_2_64():
    k = nsprp.make_scale_prp_key(b"\x2c" * 32, 64)
    rng = np.random.default_rng(11)
    xs = rng.integers(0, 1 << 62, size=1000, dtype=np.uint64)
    ys = nsprp.prp_forward_batch(k, xs)
    assert (nsprp.prp_inverse_batch(k, ys) == xs).all()


def test_scale_batch_matches_scalar():
    k = nsprp.make_scale_prp_key(b"\x2d" * 32, 12)
    xs = np.arange(1 << 12, dtype=np.uint64)
    ys = nsprp.prp_forward_batch(k, xs)
    assert sorted(ys.tolist()) == list(range(1 << 12))
    for x in (0, 1, 77, 4095, 2048):
        assert nsprp.prp_forward(k, x) == int(ys[x])
        assert nsprp.prp_inverse(k, int(ys[x])) == x


def test_batch_requires_fast_power_of_two():
    with pytest.raises(UnsupportedBackend):
        nsprp.prp_forward_batch(key(16), np.arange(4, dtype=np.uint64))


def test_fastmix_key_requires_gauss():
    with pytest.raises(UnsupportedBackend):
        nsprp.make_prp_key(b"\x2e" * 32, 8, sampler=nsprp.SAMPLER_EXACT,
                           backend=prng.BACKEND_FASTMIX)


def test_key_serialization_round_trip():
    for k in (key(20, 5), nsprp.make_scale_prp_key(b"\x2f" * 32, 16)):
        k2 = nsprp.deserialize_key(nsprp.serialize_key(k))
        for x in (0, 1, 7, k.n - 1):
            assert nsprp.prp_forward(k2, x) == nsprp.prp_forward(k, x)


def test_permuted_key_serialization_round_trip():
    k = key(20, 6)
    for z in (0, 7, 18):
        for c in (0, 1):
            pk = nsprp.prp_permute(k, z, c)
            back = nsprp.deserialize_permuted_key(nsprp.serialize_permuted_key(pk))
            for x in range(20):
                assert nsprp.permuted_prp_forward(back, x) == nsprp.permuted_prp_forward(pk, x)
                assert nsprp.permuted_prp_inverse(back, x) == nsprp.permuted_prp_inverse(pk, x)
