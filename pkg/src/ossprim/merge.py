"""Order-preserving pseudorandom merges evaluated through lazy tally trees.

A merge key describes a permutation of [N0+N1] that keeps the relative order
of the first pile [N0] and of the second pile [N1] while pseudorandomly
interleaving them.  The permutation is determined by a tally tree: leaves are
outputs, each leaf holds the pile bit of its preimage, and every internal
node holds the count of 1-leaves below it.  Values are never materialized up
front; the left child of any node is drawn from the hypergeometric induced by
its parent (the paper-facing draw is the exact kappa-bit inverse CDF; scale
keys substitute the gaussian stand-in from ``fastpath``), and the right child
is derived, never sampled.

Key permutation ("swap outputs z and z+1") punctures the tree PRF on the two
root-to-leaf paths and hard-codes the values of the paths and their siblings,
with the c=1 variant adjusting the two disjoint ancestor chains by +-1.

Keys are immutable and evaluation is pure; the per-key node-value and seed
memo dicts are written under the GIL with idempotent deterministic values,
so concurrent readers at worst recompute a node.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np

from . import fastpath, prng
from .errors import InvariantViolation, PunctureError, RangeError, UnsupportedBackend
from .hypergeom import DEFAULT_KAPPA, HypergeomParams, sample
from .prng import NodeId, PrfKey, PuncturedPrfKey

TallyNodeId = NodeId  # tally-tree positions are GGM tree positions

SAMPLER_EXACT = "exact"
SAMPLER_GAUSS = "gauss"


@dataclass(frozen=True)
class MergeKey:
    prf_key: PrfKey
    n0: int
    n1: int
    kappa: int = DEFAULT_KAPPA
    sampler: str = SAMPLER_EXACT
    fast_ctx: Optional[int] = None  # pre-mixed context word for fastmix keys
    # node values and GGM seeds, keyed by the int (1 << depth) | path
    _values: dict = field(default_factory=dict, compare=False, repr=False)
    _seeds: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.n0 < 0 or self.n1 < 0 or self.n0 + self.n1 < 1:
            raise RangeError("need N = n0 + n1 >= 1")
        if self.sampler not in (SAMPLER_EXACT, SAMPLER_GAUSS):
            raise RangeError(f"unknown sampler {self.sampler!r}")
        if self.sampler == SAMPLER_EXACT and self.prf_key.backend != prng.BACKEND_SHA256:
            raise UnsupportedBackend("exact sampling expects the sha256 GGM backend")

    @property
    def n(self) -> int:
        return self.n0 + self.n1


def make_merge_key(seed: bytes, n0: int, n1: int, kappa: int = DEFAULT_KAPPA,
                   sampler: str = SAMPLER_EXACT,
                   backend: int = prng.BACKEND_SHA256) -> MergeKey:
    key = PrfKey(seed, b"merge", backend)
    ctx = None
    if backend == prng.BACKEND_FASTMIX:
        k0, k1 = key.fast_words()
        ctx = int(fastpath.mix64_np(np.uint64(k0), np.uint64(k1), fastpath.TAG_MERGE))
    return MergeKey(key, n0, n1, kappa, sampler, ctx)


# -- tree geometry -------------------------------------------------------------

def left_size(s: int) -> int:
    return (s + 1) // 2


def node_size(k: MergeKey, node: NodeId) -> int:
    s = k.n
    for lvl in range(node.depth):
        sl = left_size(s)
        s = sl if node.bit(lvl) == 0 else s - sl
    if s < 1:
        raise RangeError("node outside the tree")
    return s


def tree_depth(n: int) -> int:
    return (n - 1).bit_length()


def leaf_node(k: MergeKey, z: int) -> NodeId:
    """The leaf covering output z (leaves sit at varying depth for odd N)."""
    if not 0 <= z < k.n:
        raise RangeError(f"output {z} outside [0, {k.n})")
    node = prng.ROOT
    s, lo = k.n, 0
    while s > 1:
        sl = left_size(s)
        if z < lo + sl:
            node, s = node.child(0), sl
        else:
            node, s, lo = node.child(1), s - sl, lo + sl
    return node


# -- node values ---------------------------------------------------------------
#
# Hot paths address tree nodes by the int key (1 << depth) | path; NodeId
# objects only appear at the public surface and on cache misses.

def _node_seed(k: MergeKey, nodekey: int) -> bytes:
    seed = k._seeds.get(nodekey)
    if seed is None:
        if nodekey == 1:
            seed = k.prf_key.root_seed()
        else:
            seed = prng._expand(_node_seed(k, nodekey >> 1), nodekey & 1)
        k._seeds[nodekey] = seed
    return seed


def _prf_r_exact(k: MergeKey, parent_key: int) -> int:
    nbytes = (k.kappa + 7) // 8
    raw = prng._finalize(_node_seed(k, parent_key), nbytes)
    return int.from_bytes(raw, "big") >> (8 * nbytes - k.kappa)


_MASK64 = (1 << 64) - 1
_GOLD = 0x9E3779B97F4A7C15


def _gauss_r64(k: MergeKey, parent_key: int) -> int:
    depth = parent_key.bit_length() - 1
    path = parent_key - (1 << depth)
    if k.fast_ctx is not None:
        # identical to fastpath._tree_r for paths below 2^64; wider trees
        # fold the overflow bits into the key word
        return prng.mix64(k.fast_ctx ^ (depth * _GOLD & _MASK64),
                          k.prf_key.fast_words()[0] ^ (path >> 64),
                          path & _MASK64)
    raw = prng._finalize(_node_seed(k, parent_key), 8)
    return int.from_bytes(raw, "big")


def _draw_left(k: MergeKey, parent_key: int, s: int, t: int) -> int:
    """Tally of the left child of a node of size s and tally t."""
    sl = left_size(s)
    if k.sampler == SAMPLER_EXACT:
        return sample(HypergeomParams(s, t, sl), _prf_r_exact(k, parent_key), k.kappa)
    if s & (s - 1) == 0 and s <= (1 << 64):
        arr = fastpath.gauss_draw_even(sl, np.array([t], dtype=np.uint64),
                                       np.array([_gauss_r64(k, parent_key)], dtype=np.uint64))
        return int(arr[0])
    return _gauss_draw_general(s, sl, t, _gauss_r64(k, parent_key))


def _left_value(k: MergeKey, parent_key: int, s: int, t: int) -> int:
    ck = parent_key << 1
    vl = k._values.get(ck)
    if vl is None:
        vl = _draw_left(k, parent_key, s, t)
        k._values[ck] = vl
    return vl


def _gauss_draw_general(s: int, sl: int, t: int, r64: int) -> int:
    """Gaussian stand-in draw for an uneven split (non-power-of-two sizes)."""
    from scipy.special import ndtri

    lo = max(0, t - (s - sl))
    hi = min(sl, t)
    if lo == hi:
        return lo
    u = (r64 >> 11) * (2.0 ** -53)
    mu = sl * t / s
    var = sl * t * (s - t) * (s - sl) / (s * s * max(s - 1, 1))
    val = mu + (var ** 0.5) * float(ndtri(u))
    if val != val:  # nan from 0 * inf
        val = mu
    v = int(np.rint(max(val, 0.0)))
    return max(lo, min(hi, v))


def _value(k: MergeKey, node: NodeId,
           lookup: Callable[[NodeId], Optional[int]] = None,
           draw: Callable = None) -> int:
    """v(node) under a hard-coded override table (permuted-key path)."""
    hv = lookup(node)
    if hv is not None:
        return hv
    if node.depth == 0:
        return k.n1
    parent = NodeId(node.depth - 1, node.path >> 1)
    s = node_size(k, parent)
    t = _value(k, parent, lookup, draw)
    vl = draw(k, parent, s, t)
    return t - vl if node.path & 1 else vl


def tally(k: MergeKey, node: NodeId) -> int:
    """The tally-tree value v(node): count of pile-1 leaves below it."""
    s, t = k.n, k.n1
    nodekey = 1
    for lvl in range(node.depth):
        sl = left_size(s)
        vl = _left_value(k, nodekey, s, t)
        if node.bit(lvl) == 0:
            nodekey, s, t = nodekey << 1, sl, vl
        else:
            nodekey, s, t = (nodekey << 1) | 1, s - sl, t - vl
        if s < 1:
            raise RangeError("node outside the tree")
    if not 0 <= t <= s:
        raise InvariantViolation("tally outside [0, subtree size]")
    return t


# -- evaluation ----------------------------------------------------------------

def _descend_inverse(k: MergeKey, z: int, lookup, draw) -> tuple[int, int]:
    node = prng.ROOT
    s, lo = k.n, 0
    t = _value(k, node, lookup, draw)
    ones = zeros = 0
    while s > 1:
        sl = left_size(s)
        vl = _value(k, node.child(0), lookup, draw)
        if z < lo + sl:
            node, s, t = node.child(0), sl, vl
        else:
            ones += vl
            zeros += sl - vl
            node, s, t, lo = node.child(1), s - sl, t - vl, lo + sl
    b = t
    return b, (ones if b else zeros)


def _descend_forward(k: MergeKey, b: int, x: int, lookup, draw) -> int:
    node = prng.ROOT
    s, pos = k.n, 0
    t = _value(k, node, lookup, draw)
    cur = x
    while s > 1:
        sl = left_size(s)
        vl = _value(k, node.child(0), lookup, draw)
        cnt_left = vl if b else sl - vl
        if cur < cnt_left:
            node, s, t = node.child(0), sl, vl
        else:
            cur -= cnt_left
            pos += sl
            node, s, t = node.child(1), s - sl, t - vl
    return pos


def merge_inverse(k: MergeKey, z: int) -> tuple[int, int]:
    """(pile bit b, index x within the pile) of the preimage of output z."""
    if not 0 <= z < k.n:
        raise RangeError(f"output {z} outside [0, {k.n})")
    values = k._values
    s, lo, t = k.n, 0, k.n1
    ones = zeros = 0
    nodekey = 1
    while s > 1:
        sl = (s + 1) >> 1
        ck = nodekey << 1
        vl = values.get(ck)
        if vl is None:
            vl = _draw_left(k, nodekey, s, t)
            values[ck] = vl
        if z < lo + sl:
            nodekey, s, t = ck, sl, vl
        else:
            ones += vl
            zeros += sl - vl
            nodekey, s, t, lo = ck | 1, s - sl, t - vl, lo + sl
    return t, (ones if t else zeros)


def merge_forward(k: MergeKey, b: int, x: int) -> int:
    """Output position of element x of pile b; order-preserving per pile."""
    nb = k.n1 if b else k.n0
    if not 0 <= x < nb:
        raise RangeError(f"index {x} outside pile of size {nb}")
    values = k._values
    s, pos, t = k.n, 0, k.n1
    nodekey = 1
    while s > 1:
        sl = (s + 1) >> 1
        ck = nodekey << 1
        vl = values.get(ck)
        if vl is None:
            vl = _draw_left(k, nodekey, s, t)
            values[ck] = vl
        cnt_left = vl if b else sl - vl
        if x < cnt_left:
            nodekey, s, t = ck, sl, vl
        else:
            x -= cnt_left
            pos += sl
            nodekey, s, t = ck | 1, s - sl, t - vl
    return pos


def merge_forward_bsearch(k: MergeKey, b: int, x: int) -> int:
    """Forward evaluation by binary search over the inverse (cross-check)."""
    nb = k.n1 if b else k.n0
    if not 0 <= x < nb:
        raise RangeError("index outside pile")
    lo, hi = 0, k.n - 1
    while lo < hi:
        mid = (lo + hi) // 2
        bm, xm = merge_inverse(k, mid)
        # count of pile-b elements at outputs <= mid
        cnt = xm + 1 if bm == b else mid - xm
        if cnt > x:
            hi = mid
        else:
            lo = mid + 1
    return lo


def ones_before(k: MergeKey, z: int) -> int:
    """Count of pile-1 leaves strictly left of output z."""
    s, lo, t, acc = k.n, 0, k.n1, 0
    nodekey = 1
    while s > 1:
        sl = (s + 1) >> 1
        vl = _left_value(k, nodekey, s, t)
        if z < lo + sl:
            nodekey, s, t = nodekey << 1, sl, vl
        else:
            acc += vl
            nodekey, s, t, lo = (nodekey << 1) | 1, s - sl, t - vl, lo + sl
    return acc


# -- key permutation -----------------------------------------------------------

@dataclass(frozen=True)
class PermutedMergeKey:
    punctured: PuncturedPrfKey
    hardcoded: dict  # NodeId -> int, both paths plus all their siblings
    z: int
    c: int
    n0: int
    n1: int
    kappa: int
    sampler: str = SAMPLER_EXACT

    @property
    def n(self) -> int:
        return self.n0 + self.n1


def _tau_swap(z: int, w: int) -> int:
    """The neighbor swap (z z+1) applied to w."""
    if w == z:
        return z + 1
    if w == z + 1:
        return z
    return w


def _path_nodes(n: int, z: int) -> list[NodeId]:
    """Root-to-leaf path of output z in the size-n tree, root first."""
    node = prng.ROOT
    out = [node]
    s, lo = n, 0
    while s > 1:
        sl = left_size(s)
        if z < lo + sl:
            node, s = node.child(0), sl
        else:
            node, s, lo = node.child(1), s - sl, lo + sl
        out.append(node)
    return out


def _sibling(node: NodeId) -> Optional[NodeId]:
    if node.depth == 0:
        return None
    return NodeId(node.depth, node.path ^ 1)


def merge_permute(k: MergeKey, z: int, c: int) -> Optional[PermutedMergeKey]:
    """Swapped key for outputs (z, z+1), or None when the swap is illegal.

    The swap is illegal exactly when both preimages come from the same pile
    (the order-preserving property would be violated).
    """
    if not 0 <= z < k.n - 1:
        raise RangeError("need 0 <= z < N-1")
    if c not in (0, 1):
        raise RangeError("c is a bit")
    if k.sampler != SAMPLER_EXACT:
        raise UnsupportedBackend("key permutation needs exact-sampler GGM keys")
    path0 = _path_nodes(k.n, z)
    path1 = _path_nodes(k.n, z + 1)
    leaf0, leaf1 = path0[-1], path1[-1]
    v0 = tally(k, leaf0)
    v1 = tally(k, leaf1)
    if v0 == v1:
        return None  # both preimages share a pile: the paper's bottom
    # H: both paths plus all siblings of path nodes.
    hset: set[NodeId] = set(path0) | set(path1)
    for nd in list(hset):
        sib = _sibling(nd)
        if sib is not None:
            hset.add(sib)
    hard = {nd: tally(k, nd) for nd in sorted(hset, key=NodeId.sort_key)}
    if c == 1:
        zero_leaf, one_leaf = (leaf0, leaf1) if v0 == 0 else (leaf1, leaf0)
        anc0 = {NodeId(d, zero_leaf.path >> (zero_leaf.depth - d)) for d in range(zero_leaf.depth + 1)}
        anc1 = {NodeId(d, one_leaf.path >> (one_leaf.depth - d)) for d in range(one_leaf.depth + 1)}
        for nd in hard:
            if nd in anc0 and nd not in anc1:
                hard[nd] += 1
            elif nd in anc1 and nd not in anc0:
                hard[nd] -= 1
    punct_set = (set(path0) | set(path1)) - {leaf0, leaf1}
    punct = prng.puncture_nodes(k.prf_key, punct_set)
    return PermutedMergeKey(punct, hard, z, c, k.n0, k.n1, k.kappa, k.sampler)


def _permuted_shadow(pk: PermutedMergeKey) -> tuple[MergeKey, Callable, Callable]:
    """A MergeKey-shaped view over the punctured key plus hard-coded table."""
    shadow = MergeKey(PrfKey(b"\x00" * 32, b"shadow"), pk.n0, pk.n1, pk.kappa, pk.sampler)

    def lookup(node: NodeId) -> Optional[int]:
        return pk.hardcoded.get(node)

    def draw(_k: MergeKey, parent: NodeId, s: int, t: int) -> int:
        sl = left_size(s)
        nbytes = (pk.kappa + 7) // 8
        try:
            raw = prng.punctured_tree_eval(pk.punctured, parent, nbytes)
        except PunctureError as e:
            raise InvariantViolation(
                "punctured, non-hardcoded tally node consulted") from e
        r = int.from_bytes(raw, "big") >> (8 * nbytes - pk.kappa)
        return sample(HypergeomParams(s, t, sl), r, pk.kappa)

    return shadow, lookup, draw


def permuted_merge_inverse(pk: PermutedMergeKey, z: int) -> tuple[int, int]:
    if not 0 <= z < pk.n:
        raise RangeError("output outside domain")
    shadow, lookup, draw = _permuted_shadow(pk)
    return _descend_inverse(shadow, z, lookup, draw)


def permuted_merge_eval(pk: PermutedMergeKey, b: int, x: int) -> int:
    nb = pk.n1 if b else pk.n0
    if not 0 <= x < nb:
        raise RangeError("index outside pile")
    shadow, lookup, draw = _permuted_shadow(pk)
    return _descend_forward(shadow, b, x, lookup, draw)


# -- decomposition into neighbor swaps ------------------------------------------

@dataclass(frozen=True)
class DecompStep:
    """One neighbor swap in application order, plus evaluators for the
    intermediate permutation reached after applying it."""

    z: int
    n0: int
    forward_pile: Callable[[int, int], int]  # (b, x) -> output position
    inverse: Callable[[int], tuple[int, int]]  # output -> (b, x)

    def forward(self, e: int) -> int:
        """Flat-encoded forward: inputs [0, n0) are pile 0, the rest pile 1."""
        return self.forward_pile(1, e - self.n0) if e >= self.n0 else self.forward_pile(0, e)


def _intermediate_evals(k: MergeKey, r: int, mover: int):
    """Evaluators for the stage-(r, mover) intermediate merge.

    Ones sit at the final positions of the first r-1 pile-1 elements, at
    ``mover``, and in the packed block [N - (n1 - r), N).
    """
    n, n1 = k.n, k.n1
    block = n - (n1 - r)

    def leaf(z: int) -> int:
        if z == mover:
            return 1
        if z >= block:
            return 1
        return 1 if (ones_before(k, z) < r - 1 and merge_inverse(k, z)[0] == 1) else 0

    def cnt1(z: int) -> int:
        # ones strictly before z in the intermediate arrangement
        c = min(ones_before(k, z), r - 1)
        if mover < z:
            c += 1
        c += max(0, z - block)
        return c

    def inverse(z: int) -> tuple[int, int]:
        b = leaf(z)
        return (b, cnt1(z)) if b else (0, z - cnt1(z))

    def forward(b: int, x: int) -> int:
        if b == 1:
            if x < r - 1:
                return merge_forward(k, 1, x)
            if x == r - 1:
                return mover
            return block + (x - r)
        lo, hi = 0, n - 1  # x-th zero by bisection over the monotone zero-count
        while lo < hi:
            mid = (lo + hi) // 2
            if mid - cnt1(mid) + (1 - leaf(mid)) > x:
                hi = mid
            else:
                lo = mid + 1
        return lo

    return forward, inverse


def merge_decompose(k: MergeKey) -> Iterator[DecompStep]:
    """Neighbor swaps transforming the identity merge into M(k, .).

    Streamed lazily in application order: folding ``swap z`` onto the current
    permutation (tau_z after it) through the whole schedule reproduces the
    merge exactly.  At most n1 * N steps; each step's evaluators run in
    O(log^2 N) via the original key's prefix counts.
    """
    n, n1 = k.n, k.n1
    for r in range(1, n1 + 1):
        target = merge_forward(k, 1, r - 1)
        start = n - n1 + r - 1
        for q in range(start, target, -1):
            fwd, inv = _intermediate_evals(k, r, q - 1)
            yield DecompStep(z=q - 1, n0=k.n0, forward_pile=fwd, inverse=inv)


# -- serialization ---------------------------------------------------------------

def serialize_key(k: MergeKey) -> bytes:
    blob = prng.serialize_key(k.prf_key)
    mode = 1 if k.sampler == SAMPLER_GAUSS else 0
    return struct.pack("<QQIB", k.n0, k.n1, k.kappa, mode) + blob


def deserialize_key(data: bytes) -> MergeKey:
    n0, n1, kappa, mode = struct.unpack_from("<QQIB", data, 0)
    prf_key = prng.deserialize_key(data[struct.calcsize("<QQIB"):])
    sampler = SAMPLER_GAUSS if mode else SAMPLER_EXACT
    ctx = None
    if prf_key.backend == prng.BACKEND_FASTMIX:
        k0, k1 = prf_key.fast_words()
        ctx = int(fastpath.mix64_np(np.uint64(k0), np.uint64(k1), fastpath.TAG_MERGE))
    return MergeKey(prf_key, n0, n1, kappa, sampler, ctx)


def serialize_permuted(pk: PermutedMergeKey) -> bytes:
    """Punctured-PRF blob + sorted (path, value) list, values length-prefixed."""
    blob = prng.serialize_punctured(pk.punctured)
    head = struct.pack("<QQIBQ", pk.n0, pk.n1, pk.kappa, pk.c, pk.z)
    items = sorted(pk.hardcoded.items(), key=lambda t: t[0].sort_key())
    out = [struct.pack("<I", len(blob)), blob, head, struct.pack("<I", len(items))]
    for node, value in items:
        enc = value.to_bytes((value.bit_length() + 7) // 8 or 1, "big")
        out.append(struct.pack("<HQ", node.depth, node.path))
        out.append(struct.pack("<H", len(enc)))
        out.append(enc)
    return b"".join(out)


def deserialize_permuted(data: bytes) -> PermutedMergeKey:
    (bloblen,) = struct.unpack_from("<I", data, 0)
    off = 4
    punct = prng.deserialize_punctured(data[off : off + bloblen])
    off += bloblen
    n0, n1, kappa, c, z = struct.unpack_from("<QQIBQ", data, off)
    off += struct.calcsize("<QQIBQ")
    (count,) = struct.unpack_from("<I", data, off)
    off += 4
    hard = {}
    for _ in range(count):
        depth, path = struct.unpack_from("<HQ", data, off)
        off += 10
        (vlen,) = struct.unpack_from("<H", data, off)
        off += 2
        hard[NodeId(depth, path)] = int.from_bytes(data[off : off + vlen], "big")
        off += vlen
    return PermutedMergeKey(punct, hard, z, c, n0, n1, kappa)
