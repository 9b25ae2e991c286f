"""The recursive neighbor-swappable PRP over [N].

Reverse merge-sort: split [N] into piles of floor(N/2) and the rest, permute
each pile with an independent recursive key, then interleave with a merge.
The base cases are N=2 (XOR with a key bit) and N=1 (identity).  Every
permutation the key defines corresponds to exactly one (merge, left perm,
right perm) triple, which is why a random key simulates a random permutation.

``prp_permute`` composes a chosen neighbor swap onto the output: when the two
preimages straddle the piles the merge key is swapped, otherwise the merge's
order preservation makes the preimages adjacent inside one pile and the swap
recurses there.  The result is always a working key, never the merge layer's
illegal bottom.

Large power-of-two domains with fastmix keys ride the vectorized path in
``fastpath``; see there for why exact sampling cannot scale.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

import numpy as np

from . import fastpath, merge as merge_mod, prng
from .errors import RangeError, UnsupportedBackend
from .hypergeom import DEFAULT_KAPPA
from .merge import (
    MergeKey,
    PermutedMergeKey,
    SAMPLER_EXACT,
    SAMPLER_GAUSS,
)
from .prng import PrfKey


@dataclass(frozen=True)
class PrpKey:
    prf_key: PrfKey
    n: int
    kappa: int = DEFAULT_KAPPA
    sampler: str = SAMPLER_EXACT
    fast_ctx: Optional[int] = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise RangeError("domain size must be >= 1")

    @property
    def n0(self) -> int:
        return self.n // 2

    @property
    def n1(self) -> int:
        return self.n - self.n // 2

    def is_fast(self) -> bool:
        return self.fast_ctx is not None


def make_prp_key(seed: bytes, n: int, kappa: int = DEFAULT_KAPPA,
                 sampler: str = SAMPLER_EXACT,
                 backend: int = prng.BACKEND_SHA256) -> PrpKey:
    key = PrfKey(seed, b"prp", backend)
    ctx = None
    if backend == prng.BACKEND_FASTMIX:
        if sampler != SAMPLER_GAUSS:
            raise UnsupportedBackend("fastmix keys require the gauss sampler")
        k0, k1 = key.fast_words()
        ctx = int(fastpath.mix64_np(np.uint64(k0), np.uint64(k1), fastpath.TAG_ROOT))
    return PrpKey(key, n, kappa, sampler, ctx)


def make_scale_prp_key(seed: bytes, bits: int, kappa: int = DEFAULT_KAPPA) -> PrpKey:
    """INSECURE-DEMO key for {0,1}^bits: fastmix PRF + gauss sampler."""
    return make_prp_key(seed, 1 << bits, kappa, SAMPLER_GAUSS, prng.BACKEND_FASTMIX)


# -- level key derivation --------------------------------------------------------

def _child_key(k: PrpKey, b: int) -> PrpKey:
    nb = k.n1 if b else k.n0
    cached = k._cache.get(("child", b))
    if cached is not None:
        return cached
    if k.is_fast():
        k0w, k1w = k.prf_key.fast_words()
        ctx = int(fastpath.mix64_np(np.uint64(k.fast_ctx),
                                    np.uint64(k1w) ^ np.uint64(b),
                                    fastpath.TAG_CHILD))
        child = PrpKey(k.prf_key, nb, k.kappa, k.sampler, ctx)
    else:
        sub = prng.derive_key(k.prf_key, b"half%d" % b)
        child = PrpKey(sub, nb, k.kappa, k.sampler, None)
    k._cache[("child", b)] = child
    return child


def _merge_key(k: PrpKey) -> MergeKey:
    cached = k._cache.get("merge")
    if cached is not None:
        return cached
    if k.is_fast():
        k0w, k1w = k.prf_key.fast_words()
        mctx = int(fastpath.mix64_np(np.uint64(k.fast_ctx), np.uint64(k1w),
                                     fastpath.TAG_MERGE))
        mk = MergeKey(k.prf_key, k.n0, k.n1, k.kappa, k.sampler, mctx)
    else:
        sub = prng.derive_key(k.prf_key, b"merge")
        mk = MergeKey(sub, k.n0, k.n1, k.kappa, k.sampler, None)
    k._cache["merge"] = mk
    return mk


def _xor_bit(k: PrpKey) -> int:
    if k.is_fast():
        k0w, k1w = k.prf_key.fast_words()
        return int(fastpath.mix64_np(np.uint64(k.fast_ctx), np.uint64(k1w),
                                     fastpath.TAG_XOR)) & 1
    return prng.prf_eval(k.prf_key, b"\x02xorbit", 1)[0] & 1


def _decode(k: PrpKey, e: int) -> tuple[int, int]:
    return (1, e - k.n0) if e >= k.n0 else (0, e)


# -- evaluation ------------------------------------------------------------------

def prp_forward(k: PrpKey, x: int) -> int:
    """The keyed permutation on [N]."""
    if not 0 <= x < k.n:
        raise RangeError(f"input {x} outside [0, {k.n})")
    if k.n == 1:
        return x
    if k.n == 2:
        return x ^ _xor_bit(k)
    b, sub = _decode(k, x)
    y = prp_forward(_child_key(k, b), sub)
    return merge_mod.merge_forward(_merge_key(k), b, y)


def prp_inverse(k: PrpKey, z: int) -> int:
    """Exact inverse of prp_forward."""
    if not 0 <= z < k.n:
        raise RangeError(f"output {z} outside [0, {k.n})")
    if k.n == 1:
        return z
    if k.n == 2:
        return z ^ _xor_bit(k)
    b, y = merge_mod.merge_inverse(_merge_key(k), z)
    x = prp_inverse(_child_key(k, b), y)
    return x + (k.n0 if b else 0)


def prp_forward_batch(k: PrpKey, xs: np.ndarray) -> np.ndarray:
    """Lockstep forward sweep; fastmix power-of-two keys only."""
    if not (k.is_fast() and k.n & (k.n - 1) == 0):
        raise UnsupportedBackend("batch path needs a fastmix power-of-two key")
    k0w, k1w = k.prf_key.fast_words()
    return fastpath.prp_forward_batch(k0w, k1w, k.n.bit_length() - 1, xs)


def prp_inverse_batch(k: PrpKey, zs: np.ndarray) -> np.ndarray:
    if not (k.is_fast() and k.n & (k.n - 1) == 0):
        raise UnsupportedBackend("batch path needs a fastmix power-of-two key")
    k0w, k1w = k.prf_key.fast_words()
    return fastpath.prp_inverse_batch(k0w, k1w, k.n.bit_length() - 1, zs)


# -- key permutation -------------------------------------------------------------

@dataclass(frozen=True)
class XorLevel:
    """Base case payload: the (already c-adjusted) key bit for N=2."""

    bit: int


@dataclass(frozen=True)
class MergeLevel:
    """Terminal payload when the swap lands in this level's merge."""

    k0: PrpKey
    k1: PrpKey
    pmk: PermutedMergeKey


@dataclass(frozen=True)
class RecurseLevel:
    """Pass-through level: the swap lives inside pile ``b``."""

    b: int
    child: Union["XorLevel", "MergeLevel", "RecurseLevel"]
    k_other: PrpKey
    mk: MergeKey
    n: int


@dataclass(frozen=True)
class PermutedPrpKey:
    n: int
    kappa: int
    z: int
    c: int
    spine: Union[XorLevel, MergeLevel, RecurseLevel]


def prp_permute(k: PrpKey, z: int, c: int) -> PermutedPrpKey:
    """Key whose evaluation equals (z z+1)^c composed after the permutation.

    Total for every z in [N-1]: a cross-pile pair permutes the merge, a
    same-pile pair is adjacent inside its pile (order preservation) and the
    swap recurses there.
    """
    if not 0 <= z < k.n - 1:
        raise RangeError("need 0 <= z < N-1")
    if c not in (0, 1):
        raise RangeError("c is a bit")
    return PermutedPrpKey(k.n, k.kappa, z, c, _permute_node(k, z, c))


def _permute_node(k: PrpKey, z: int, c: int) -> Union[XorLevel, MergeLevel, RecurseLevel]:
    if k.n == 2:
        return XorLevel(_xor_bit(k) ^ (c & (z == 0)))
    mk = _merge_key(k)
    b0, y0 = merge_mod.merge_inverse(mk, z)
    b1, y1 = merge_mod.merge_inverse(mk, z + 1)
    if b0 != b1:
        pmk = merge_mod.merge_permute(mk, z, c)
        assert pmk is not None  # cross-pile swaps are exactly the legal ones
        return MergeLevel(_child_key(k, 0), _child_key(k, 1), pmk)
    # same pile: order preservation forces y1 == y0 + 1
    assert y1 == y0 + 1, "merge order preservation violated"
    child = _permute_node(_child_key(k, b0), y0, c)
    return RecurseLevel(b0, child, _child_key(k, 1 - b0), mk, k.n)


def _node_forward(node, n: int, x: int) -> int:
    if isinstance(node, XorLevel):
        return x ^ node.bit
    if isinstance(node, MergeLevel):
        n0 = n // 2
        b, sub = (1, x - n0) if x >= n0 else (0, x)
        y = prp_forward(node.k1 if b else node.k0, sub)
        return merge_mod.permuted_merge_eval(node.pmk, b, y)
    n0 = node.n // 2
    b, sub = (1, x - n0) if x >= n0 else (0, x)
    if b == node.b:
        y = _node_forward(node.child, (node.n - n0) if b else n0, sub)
    else:
        y = prp_forward(node.k_other, sub)
    return merge_mod.merge_forward(node.mk, b, y)


def _node_inverse(node, n: int, z: int) -> int:
    if isinstance(node, XorLevel):
        return z ^ node.bit
    if isinstance(node, MergeLevel):
        n0 = n // 2
        b, y = merge_mod.permuted_merge_inverse(node.pmk, z)
        x = prp_inverse(node.k1 if b else node.k0, y)
        return x + (n0 if b else 0)
    n0 = node.n // 2
    b, y = merge_mod.merge_inverse(node.mk, z)
    if b == node.b:
        x = _node_inverse(node.child, (node.n - n0) if b else n0, y)
    else:
        x = prp_inverse(node.k_other, y)
    return x + (n0 if b else 0)


def permuted_prp_forward(pk: PermutedPrpKey, x: int) -> int:
    if not 0 <= x < pk.n:
        raise RangeError("input outside domain")
    return _node_forward(pk.spine, pk.n, x)


def permuted_prp_inverse(pk: PermutedPrpKey, z: int) -> int:
    if not 0 <= z < pk.n:
        raise RangeError("output outside domain")
    return _node_inverse(pk.spine, pk.n, z)


# -- decomposition ----------------------------------------------------------------

@dataclass(frozen=True)
class PermStep:
    """One neighbor swap in application order with evaluators for the
    permutation of [N] reached after applying it."""

    z: int
    forward: "callable"
    inverse: "callable"


def prp_decompose(k: PrpKey) -> Iterator[PermStep]:
    """Neighbor swaps building the permutation, streamed in application order.

    The two pile permutations are decomposed first (their swaps act inside
    disjoint blocks of [N]), then the merge layer's schedule is composed on
    top; intermediate evaluators stay efficient because each one composes the
    already-built pile evaluators with a partial merge.
    """
    if k.n == 1:
        return
    if k.n == 2:
        if _xor_bit(k):
            swap01 = lambda e: 1 - e
            yield PermStep(z=0, forward=swap01, inverse=swap01)
        return
    n0 = k.n0
    k0, k1 = _child_key(k, 0), _child_key(k, 1)
    mk = _merge_key(k)

    # stage 1: left pile swaps act on [0, n0)
    for st in prp_decompose(k0):
        yield PermStep(
            z=st.z,
            forward=lambda e, f=st.forward: f(e) if e < n0 else e,
            inverse=lambda z, g=st.inverse: g(z) if z < n0 else z,
        )

    # stage 2: right pile swaps act on [n0, N) with the left pile finished
    left_fwd = lambda e: prp_forward(k0, e)
    left_inv = lambda z: prp_inverse(k0, z)
    for st in prp_decompose(k1):
        yield PermStep(
            z=st.z + n0,
            forward=lambda e, f=st.forward: left_fwd(e) if e < n0 else f(e - n0) + n0,
            inverse=lambda z, g=st.inverse: left_inv(z) if z < n0 else g(z - n0) + n0,
        )

    # stage 3: the merge layer over the finished piles
    right_fwd = lambda e: prp_forward(k1, e)
    for st in merge_mod.merge_decompose(mk):
        def fwd(e, f=st.forward_pile):
            b = 1 if e >= n0 else 0
            y = right_fwd(e - n0) if b else left_fwd(e)
            return f(b, y)

        def inv(z, g=st.inverse):
            b, y = g(z)
            return prp_inverse(k1 if b else k0, y) + (n0 if b else 0)

        yield PermStep(z=st.z, forward=fwd, inverse=inv)


def prp_schedule_length(k: PrpKey) -> int:
    """Number of swaps prp_decompose will emit (materializes the schedule)."""
    return sum(1 for _ in prp_decompose(k))


# -- serialization ------------------------------------------------------------------
# Mirrors the merge module's framing; permuted keys carry a level-count
# header followed by one record per spine level.

def serialize_key(k: PrpKey) -> bytes:
    blob = prng.serialize_key(k.prf_key)
    mode = 1 if k.sampler == SAMPLER_GAUSS else 0
    return struct.pack("<QIB", k.n - 1, k.kappa, mode) + blob


def deserialize_key(data: bytes) -> PrpKey:
    n_minus_1, kappa, mode = struct.unpack_from("<QIB", data, 0)
    prf_key = prng.deserialize_key(data[struct.calcsize("<QIB"):])
    sampler = SAMPLER_GAUSS if mode else SAMPLER_EXACT
    ctx = None
    if prf_key.backend == prng.BACKEND_FASTMIX:
        k0, k1 = prf_key.fast_words()
        ctx = int(fastpath.mix64_np(np.uint64(k0), np.uint64(k1), fastpath.TAG_ROOT))
    return PrpKey(prf_key, n_minus_1 + 1, kappa, sampler, ctx)


def _node_records(node) -> list[tuple]:
    if isinstance(node, XorLevel):
        return [(0, node.bit, b"", b"", b"")]
    if isinstance(node, MergeLevel):
        return [(1, 0, serialize_key(node.k0), serialize_key(node.k1),
                 merge_mod.serialize_permuted(node.pmk))]
    rec = (2, node.b, serialize_key(node.k_other),
           merge_mod.serialize_key(node.mk), b"")
    return [rec] + _node_records(node.child)


def serialize_permuted_key(pk: PermutedPrpKey) -> bytes:
    records = _node_records(pk.spine)
    out = [struct.pack("<QIQBH", pk.n - 1, pk.kappa, pk.z, pk.c, len(records))]
    for kind, flag, b1, b2, b3 in records:
        out.append(struct.pack("<BB", kind, flag))
        for blob in (b1, b2, b3):
            out.append(struct.pack("<I", len(blob)))
            out.append(blob)
    return b"".join(out)


def deserialize_permuted_key(data: bytes) -> PermutedPrpKey:
    n_minus_1, kappa, z, c, count = struct.unpack_from("<QIQBH", data, 0)
    off = struct.calcsize("<QIQBH")
    records = []
    for _ in range(count):
        kind, flag = struct.unpack_from("<BB", data, off)
        off += 2
        blobs = []
        for _ in range(3):
            (ln,) = struct.unpack_from("<I", data, off)
            off += 4
            blobs.append(data[off : off + ln])
            off += ln
        records.append((kind, flag, *blobs))
    node = None
    for kind, flag, b1, b2, b3 in reversed(records):
        if kind == 0:
            node = XorLevel(flag & 1)
        elif kind == 1:
            node = MergeLevel(deserialize_key(b1), deserialize_key(b2),
                              merge_mod.deserialize_permuted(b3))
        else:
            mk = merge_mod.deserialize_key(b2)
            node = RecurseLevel(flag & 1, node, deserialize_key(b1), mk, mk.n)
    return PermutedPrpKey(n_minus_1 + 1, kappa, z, c, node)
