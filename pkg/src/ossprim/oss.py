"""The coset hash oracle triple and its reduction simulators.

An instance holds a permutation Pi of {0,1}^n and, for every hash value y, a
coset of Z2^k described by a full-column-rank matrix A(y) and shift b(y).
The oracles are

    P(x)       = (y, A(y).J(x) + b(y))      with y = H(x),
    P^-1(y, u) = the unique preimage, or the first-class bottom value None,
    D(y, v)    = 1  iff  v^T A(y) = 0,

where H(x) / J(x) are the first r / remaining n-r output bits of Pi(x).  In
standard mode y is widened to d bits by routing H(x) || 0^(d-r) through the
inverse of a second permutation.

Vector/bit conventions: component i of a vector is bit (dim-1-i) of its
integer packing, so "first components" always means high bits and
concatenation reads left to right.

The reduction simulators mirror the proof machinery as running code: the
random self-reduction (fresh instance plus a collision back-map), dual
bloating (accept the kernel of the last n-r-s columns only), dual simulation
from a smaller instance, and coset-partition-function embedding.  Structural
``realize`` helpers reconstruct explicit instances certifying that simulated
triples live in the honest support.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

from . import gf2, nsprp, prng
from .errors import ContractError, DimensionError, RangeError
from .gf2 import AffineCoset, BitMatrix, BitVector
from .hypergeom import DEFAULT_KAPPA
from .opprp import MOCK_LABEL, MockObfuscation
from .prng import BitStream, PrfKey

MODE_ORACLE = "oracle"
MODE_STANDARD = "standard"


def int_to_vec(val: int, dim: int) -> BitVector:
    """Component i = bit (dim-1-i): component 0 is the most significant bit."""
    bits = 0
    for i in range(dim):
        bits |= ((val >> (dim - 1 - i)) & 1) << i
    return BitVector(bits, dim)


def vec_to_int(v: BitVector) -> int:
    out = 0
    for i in range(v.dim):
        out |= ((v.bits >> i) & 1) << (v.dim - 1 - i)
    return out


@dataclass(frozen=True)
class OssParams:
    lam: int
    s: int
    r: int
    n: int
    k: int
    d: Optional[int] = None
    mode: str = MODE_ORACLE

    def __post_init__(self):
        if not (0 <= self.r < self.n <= self.k):
            raise ContractError("need r < n <= k")
        if self.mode == MODE_STANDARD:
            if self.d is None or self.d < max(self.n, self.r):
                raise ContractError("standard mode needs d >= n")

    @classmethod
    def paper_preset(cls, lam: int, mode: str = MODE_ORACLE, d: Optional[int] = None) -> "OssParams":
        s = 16 * lam
        r = s * (lam - 1)
        n = r + (3 * s) // 2
        k = n
        if mode == MODE_STANDARD and d is None:
            d = standard_d(n, r, 0)
        return cls(lam, s, r, n, k, d, mode)

    @classmethod
    def tiny(cls, n: int, r: int, k: int, mode: str = MODE_ORACLE, d: Optional[int] = None) -> "OssParams":
        if mode == MODE_STANDARD and d is None:
            d = standard_d(n, r, 0)
        return cls(0, n - r, r, n, k, d, mode)


def standard_d(n: int, r: int, slice_out_bits: int) -> int:
    """Smallest d covering the input plus (n-r) output slices of the
    configured coset-partition stage."""
    return n + (n - r) * slice_out_bits


# -- permutation backends ---------------------------------------------------------

class PermBackend(Protocol):
    n_bits: int

    def forward(self, x: int) -> int: ...

    def inverse(self, z: int) -> int: ...


@dataclass(frozen=True)
class TablePerm:
    """Explicit permutation table (tiny domains, ground-truth randomness)."""

    table: tuple[int, ...]
    n_bits: int
    inverse_table: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        if len(self.table) != 1 << self.n_bits:
            raise DimensionError("table length != 2^n")
        if self.inverse_table is None:
            inv = [0] * len(self.table)
            for i, v in enumerate(self.table):
                inv[v] = i
            object.__setattr__(self, "inverse_table", tuple(inv))

    def forward(self, x: int) -> int:
        return self.table[x]

    def inverse(self, z: int) -> int:
        return self.inverse_table[z]


@dataclass(frozen=True)
class PrpPerm:
    """Lazy permutation backed by the recursive merge PRP."""

    key: nsprp.PrpKey
    n_bits: int

    def forward(self, x: int) -> int:
        return nsprp.prp_forward(self.key, x)

    def inverse(self, z: int) -> int:
        return nsprp.prp_inverse(self.key, z)


@dataclass(frozen=True)
class ComposedPerm:
    """outer o inner (inner applied first)."""

    inner: "PermBackend"
    outer: "PermBackend"
    n_bits: int

    def forward(self, x: int) -> int:
        return self.outer.forward(self.inner.forward(x))

    def inverse(self, z: int) -> int:
        return self.inner.inverse(self.outer.inverse(z))


def random_table_perm(n_bits: int, stream: BitStream) -> TablePerm:
    n = 1 << n_bits
    table = list(range(n))
    for i in range(n - 1, 0, -1):  # Fisher-Yates on the stream
        j = stream.randbelow(i + 1)
        table[i], table[j] = table[j], table[i]
    return TablePerm(tuple(table), n_bits)


# -- coset sources ----------------------------------------------------------------

class CosetSource(Protocol):
    def __call__(self, y: int) -> tuple[BitMatrix, BitVector]: ...


@dataclass(frozen=True)
class PrfCosetSource:
    """(A(y), b(y)) from an unbounded per-y derived bit stream.

    The rejection sampler consumes however many bits it needs; the fixed
    output budget a truly random F would have is replaced by the stream.
    """

    prf_key: PrfKey
    k: int
    cols: int
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __call__(self, y: int) -> tuple[BitMatrix, BitVector]:
        got = self._cache.get(y)
        if got is None:
            stream = prng.bit_stream(self.prf_key, b"coset:%d" % y)
            a = gf2.random_full_column_rank(self.k, self.cols, stream)
            b = gf2.random_vector(self.k, stream)
            got = (a, b)
            self._cache[y] = got
        return got


@dataclass(frozen=True)
class DictCosetSource:
    entries: dict

    def __call__(self, y: int) -> tuple[BitMatrix, BitVector]:
        return self.entries[y]


@dataclass(frozen=True)
class TransformedCosetSource:
    """A'(y) = C(y).A(y), b'(y) = C(y).b(y) + d(y): the self-reduction's
    per-y affine output rerandomization."""

    base: CosetSource
    cd_source: Callable[[int], tuple[BitMatrix, BitVector]]

    def __call__(self, y: int) -> tuple[BitMatrix, BitVector]:
        a, b = self.base(y)
        c, d = self.cd_source(y)
        return gf2.mat_mul(c, a), gf2.mat_mul_vec(c, b) ^ d


@dataclass(frozen=True)
class PrfSquareSource:
    """(C(y), d(y)) with C a random invertible k x k matrix."""

    prf_key: PrfKey
    k: int
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __call__(self, y: int) -> tuple[BitMatrix, BitVector]:
        got = self._cache.get(y)
        if got is None:
            stream = prng.bit_stream(self.prf_key, b"cd:%d" % y)
            c = gf2.random_invertible(self.k, stream)
            d = gf2.random_vector(self.k, stream)
            got = (c, d)
            self._cache[y] = got
        return got


# -- the instance -----------------------------------------------------------------

@dataclass(frozen=True)
class OssInstance:
    params: OssParams
    pi: PermBackend
    coset_source: CosetSource
    out_perm: Optional[PermBackend] = None  # standard mode only
    _solve_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.pi.n_bits != self.params.n:
            raise DimensionError("permutation width != n")
        if self.params.mode == MODE_STANDARD and self.out_perm is None:
            raise ContractError("standard mode needs the outer permutation")

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def r(self) -> int:
        return self.params.r

    @property
    def k(self) -> int:
        return self.params.k

    def coset(self, y: int) -> AffineCoset:
        got = self._solve_cache.get(y)
        if got is None:
            a, b = self.coset_source(y)
            got = AffineCoset(a, b)
            self._solve_cache[y] = got
        return got


def oss_gen(params: OssParams, seed: bytes, backend: str = "auto",
            kappa: int = DEFAULT_KAPPA) -> OssInstance:
    """Deterministic instance from a seed.

    backend "table" materializes the permutation(s) (tiny n only); "prp" uses
    lazy keys (n must make 2^n a power-of-two domain, which it is).
    """
    root = PrfKey(seed, b"oss")
    if backend == "auto":
        backend = "table" if params.n <= 12 else "prp"
    if backend == "table":
        if params.n > 16:
            raise RangeError("table backend above 2^16 refused")
        pi = random_table_perm(params.n, prng.bit_stream(root, b"pi"))
        out = None
        if params.mode == MODE_STANDARD:
            out = random_table_perm(params.d, prng.bit_stream(root, b"pi-out"))
    else:
        # exact-sampler keys stay feasible to about 2^20; paper-scale widths
        # ride the INSECURE-DEMO gauss path
        def prp_key(tag: bytes, bits: int) -> nsprp.PrpKey:
            if bits > 20:
                return nsprp.make_scale_prp_key(prng.derive_key(root, tag).seed, bits, kappa)
            return nsprp.PrpKey(prng.derive_key(root, tag), 1 << bits, kappa)

        pi = PrpPerm(prp_key(b"pi", params.n), params.n)
        out = None
        if params.mode == MODE_STANDARD:
            out = PrpPerm(prp_key(b"pi-out", params.d), params.d)
    cols = params.n - params.r
    src = PrfCosetSource(prng.derive_key(root, b"cosets"), params.k, cols)
    return OssInstance(params, pi, src, out)


# -- the oracles ------------------------------------------------------------------

def _hash_parts(inst: OssInstance, x: int) -> tuple[int, int]:
    """(y, j_int): the hash value y and the raw coset coordinates of x."""
    p = inst.params
    w = inst.pi.forward(x)
    h = w >> (p.n - p.r)
    j = w & ((1 << (p.n - p.r)) - 1)
    if p.mode == MODE_STANDARD:
        y = inst.out_perm.inverse(h << (p.d - p.r))
    else:
        y = h
    return y, j


def oss_p(inst: OssInstance, x: int) -> tuple[int, BitVector]:
    p = inst.params
    if not 0 <= x < (1 << p.n):
        raise RangeError("input outside {0,1}^n")
    y, j = _hash_parts(inst, x)
    coset = inst.coset(y)
    u = coset.point(int_to_vec(j, p.n - p.r))
    return y, u


def oss_hash(inst: OssInstance, x: int) -> int:
    return oss_p(inst, x)[0]


def oss_p_inv(inst: OssInstance, y: int, u: BitVector) -> Optional[int]:
    """The unique x with P(x) = (y, u), or None off the image."""
    p = inst.params
    y_bits = p.d if p.mode == MODE_STANDARD else p.r
    if not 0 <= y < (1 << y_bits):
        raise RangeError("y outside its range")
    if u.dim != p.k:
        raise DimensionError("u must live in Z2^k")
    if p.mode == MODE_STANDARD:
        w_out = inst.out_perm.forward(y)
        if w_out & ((1 << (p.d - p.r)) - 1):
            return None
        h = w_out >> (p.d - p.r)
    else:
        h = y
    z = gf2.solve_coordinates(inst.coset(y), u)
    if z is None:
        return None
    j = vec_to_int(z)
    return inst.pi.inverse((h << (p.n - p.r)) | j)


def oss_d(inst: OssInstance, y: int, v: BitVector) -> int:
    """1 iff v^T A(y) = 0, i.e. v is orthogonal to the coset's direction."""
    p = inst.params
    if v.dim != p.k:
        raise DimensionError("v must live in Z2^k")
    a, _ = inst.coset_source(y)
    for col in a.cols:
        if (col & v.bits).bit_count() & 1:
            return 0
    return 1


def seal_instance(inst: OssInstance) -> tuple[MockObfuscation, Callable, bytes]:
    """Mock-obfuscation wrapping of (P, P^-1) plus D, with the warning label.

    Returns (sealed P/P^-1 pair, sealed D, label).  Packed encoding: P maps x
    to (y << k) | u; P^-1 of a packed pair returns x or None.
    """
    p = inst.params
    y_bits = p.d if p.mode == MODE_STANDARD else p.r

    def fwd(x: int) -> int:
        y, u = oss_p(inst, x)
        return (y << p.k) | vec_to_int(u)

    def inv(packed: int) -> Optional[int]:
        return oss_p_inv(inst, packed >> p.k, int_to_vec(packed & ((1 << p.k) - 1), p.k))

    def dual(packed: int) -> int:
        return oss_d(inst, packed >> p.k, int_to_vec(packed & ((1 << p.k) - 1), p.k))

    sealed = MockObfuscation(fwd, inv, 1 << p.n, payload=b"oss-instance")
    return sealed, dual, MOCK_LABEL


# -- random self-reduction ----------------------------------------------------------

@dataclass(frozen=True)
class SelfReduction:
    instance: OssInstance
    back_map: Callable[[int], int]  # collisions of the new H to the old H


def self_reduce(inst: OssInstance, seed: bytes, table_gamma: Optional[bool] = None) -> SelfReduction:
    """Fresh-looking instance: Pi' = Pi o Gamma, A' = C_y A, b' = C_y b + d_y.

    Gamma is a seeded random permutation of the inputs (explicit table at
    tiny n, a PRP key otherwise); any collision (x0, x1) of the new hash maps
    through Gamma to a collision of the source instance.
    """
    p = inst.params
    root = PrfKey(seed, b"selfreduce")
    if table_gamma is None:
        table_gamma = p.n <= 12
    if table_gamma:
        gamma: PermBackend = random_table_perm(p.n, prng.bit_stream(root, b"gamma"))
    else:
        gamma = PrpPerm(nsprp.PrpKey(prng.derive_key(root, b"gamma"), 1 << p.n), p.n)
    cd = PrfSquareSource(prng.derive_key(root, b"cd"), p.k)
    new_pi = ComposedPerm(inner=gamma, outer=inst.pi, n_bits=p.n)
    new_src = TransformedCosetSource(inst.coset_source, cd)
    inst2 = OssInstance(p, new_pi, new_src, inst.out_perm)
    return SelfReduction(inst2, gamma.forward)


# -- dual bloating ------------------------------------------------------------------

def bloat_dual(inst: OssInstance, s: int) -> Callable[[int, BitVector], int]:
    """D': accept v iff v^T A^(1)(y) = 0 for the last n-r-s columns of A(y).

    Every point D accepts stays accepted; per y the acceptance count grows by
    exactly 2^s (s constraints dropped from a full-column-rank system).
    """
    p = inst.params
    if not 0 <= s <= p.n - p.r:
        raise RangeError("need 0 <= s <= n-r")

    def d_prime(y: int, v: BitVector) -> int:
        if v.dim != p.k:
            raise DimensionError("v must live in Z2^k")
        a, _ = inst.coset_source(y)
        for col in a.cols[s:]:
            if (col & v.bits).bit_count() & 1:
                return 0
        return 1

    return d_prime


# -- simulating the dual from a smaller instance --------------------------------------

@dataclass(frozen=True)
class SimulatedTriple:
    """P, P^-1, D' built from a smaller dual-free instance.

    The triple sits in the support of the bloated distribution: realize()
    reconstructs an explicit instance (permutation plus block cosets) whose
    oracles agree pointwise, with the bloated dual checking exactly the
    last-block-zero vectors.
    """

    n: int
    r: int
    k: int
    s: int
    small: OssInstance
    p: Callable[[int], tuple[int, BitVector]]
    p_inv: Callable[[int, BitVector], Optional[int]]
    d_prime: Callable[[int, BitVector], int]
    back_map: Callable[[int], int]  # x -> the small-instance input part


def simulate_from_smaller(small: OssInstance, n: int, k: int) -> SimulatedTriple:
    """Expand an (r+s, r, k-(n-r-s)) instance to full size without its dual.

    The input grows by extra = n-r-s clear bits riding along in u; the
    bloated dual accepts exactly the vectors whose trailing block is zero.  A
    collision of the simulated hash with differing leading parts maps to a
    collision of the small instance.
    """
    sp = small.params
    if sp.mode != MODE_ORACLE:
        raise ContractError("dual simulation starts from an oracle-mode instance")
    r = sp.r
    s = sp.n - r
    extra = n - r - s
    if extra < 0 or k != sp.k + extra:
        raise DimensionError("need n >= r+s and k = k_small + (n-r-s)")
    mask = (1 << extra) - 1

    def p(x: int) -> tuple[int, BitVector]:
        if not 0 <= x < (1 << n):
            raise RangeError("input outside {0,1}^n")
        x_bar, x_til = x >> extra, x & mask
        y, u_bar = oss_p(small, x_bar)
        return y, int_to_vec((vec_to_int(u_bar) << extra) | x_til, k)

    def p_inv(y: int, u: BitVector) -> Optional[int]:
        if u.dim != k:
            raise DimensionError("u must live in Z2^k")
        u_int = vec_to_int(u)
        x_bar = oss_p_inv(small, y, int_to_vec(u_int >> extra, sp.k))
        if x_bar is None:
            return None
        return (x_bar << extra) | (u_int & mask)

    def d_prime(y: int, v: BitVector) -> int:
        if v.dim != k:
            raise DimensionError("v must live in Z2^k")
        return 1 if vec_to_int(v) & mask == 0 else 0

    return SimulatedTriple(n, r, k, s, small, p, p_inv, d_prime,
                           back_map=lambda x: x >> extra)


def realize_simulated(sim: SimulatedTriple) -> OssInstance:
    """Explicit instance whose honest oracles equal the simulated triple."""
    sp = sim.small.params
    extra = sim.n - sim.r - sim.s
    mask = (1 << extra) - 1

    class _Pi:
        n_bits = sim.n

        def forward(self, x: int) -> int:
            return (sim.small.pi.forward(x >> extra) << extra) | (x & mask)

        def inverse(self, w: int) -> int:
            return (sim.small.pi.inverse(w >> extra) << extra) | (w & mask)

    def src(y: int) -> tuple[BitMatrix, BitVector]:
        # column ints index components directly, so the small-instance block
        # keeps its bits and the clear block gets unit columns above it
        a_bar, b_bar = sim.small.coset_source(y)
        k_small = sim.small.params.k
        cols = list(a_bar.cols)
        cols += [1 << (k_small + j) for j in range(extra)]
        return BitMatrix(sim.k, tuple(cols)), BitVector(b_bar.bits, sim.k)

    params = OssParams(0, sim.s, sim.r, sim.n, sim.k, None, MODE_ORACLE)
    return OssInstance(params, _Pi(), src)


# -- coset partition functions ---------------------------------------------------------

@dataclass(frozen=True)
class CosetPartitionFunction:
    """Q: {0,1}^n -> {0,1}^m whose preimage sets are 2^ell-point cosets.

    ``preimage_coset`` is a test oracle (None when unavailable); vectors use
    the instance-wide MSB-first component convention.
    """

    n_bits: int
    m_bits: int
    ell: int
    evaluate: Callable[[int], int]
    preimage_coset: Optional[Callable[[int], Optional[AffineCoset]]] = None


def random_two_to_one(n_bits: int, stream: BitStream) -> Callable[[int], int]:
    """Drop the last output bit of a seeded random permutation: exactly 2-to-1."""
    perm = random_table_perm(n_bits, stream)
    return lambda x: perm.forward(x) >> 1


def cpf_from_two_to_one(h: Callable[[int], int], n_bits: int, ell: int) -> CosetPartitionFunction:
    """The ell-wise parallel application of a 2-to-1 function.

    Preimage sets are direct sums of the per-slice preimage pairs, and a pair
    {x0, x1} is the coset x0 + {0, x0^x1}; direct sums of cosets are cosets.
    ell = 1 is the base function itself.
    """
    if ell < 1:
        raise RangeError("ell >= 1")
    out_bits = n_bits - 1
    n_total = n_bits * ell

    def evaluate(x: int) -> int:
        acc = 0
        for i in range(ell):
            xi = (x >> ((ell - 1 - i) * n_bits)) & ((1 << n_bits) - 1)
            acc = (acc << out_bits) | h(xi)
        return acc

    # exhaustive preimage index, built on demand (test oracle only)
    cache: dict = {}

    def preimage_coset(y: int) -> Optional[AffineCoset]:
        if "idx" not in cache:
            idx: dict = {}
            for xi in range(1 << n_bits):
                idx.setdefault(h(xi), []).append(xi)
            cache["idx"] = idx
        idx = cache["idx"]
        slices = []
        for i in range(ell):
            yi = (y >> ((ell - 1 - i) * out_bits)) & ((1 << out_bits) - 1)
            pre = idx.get(yi)
            if not pre:
                return None
            slices.append((i, pre))
        shift = 0
        cols = []
        for i, pre in slices:
            off = (ell - 1 - i) * n_bits
            shift |= pre[0] << off
            if len(pre) == 2:
                cols.append((pre[0] ^ pre[1]) << off)
            else:
                return None  # not a full 2^ell coset
        basis = BitMatrix(n_total, tuple(vec_to_int_col(c, n_total) for c in cols))
        return AffineCoset(basis, int_to_vec(shift, n_total))

    return CosetPartitionFunction(n_total, out_bits * ell, ell, evaluate, preimage_coset)


def vec_to_int_col(int_bits: int, dim: int) -> int:
    """Column packing of an MSB-first integer into component bit order."""
    return int_to_vec(int_bits, dim).bits


def validate_cpf(q: CosetPartitionFunction) -> bool:
    """Exhaustively confirm every preimage set is a coset of dimension ell."""
    if q.n_bits > 16:
        raise RangeError("exhaustive validation above 2^16 refused")
    groups: dict = {}
    for x in range(1 << q.n_bits):
        groups.setdefault(q.evaluate(x), []).append(x)
    for y, members in groups.items():
        if len(members) != 1 << q.ell:
            return False
        x0 = members[0]
        diffs = BitMatrix(q.n_bits, tuple(vec_to_int_col(x ^ x0, q.n_bits) for x in members[1:]))
        if gf2.rank(diffs) != q.ell:
            return False
    return True


@dataclass(frozen=True)
class EmbeddedTriple:
    """(P, P^-1) pair embedding a coset partition function.

    P(x) = (Q(Gamma(x)), C_y.Gamma(x) + d_y); any hash collision maps through
    Gamma to a Q-collision.  realize() reconstructs the implicit instance
    from the CPF's preimage cosets (test oracle only).
    """

    n: int
    r: int
    k: int
    q: CosetPartitionFunction
    gamma: PermBackend
    cd_source: Callable[[int], tuple[BitMatrix, BitVector]]
    p: Callable[[int], tuple[int, BitVector]]
    p_inv: Callable[[int, BitVector], Optional[int]]
    back_map: Callable[[int], int]


@dataclass(frozen=True)
class PrfTallSource:
    """(C(y), d(y)) with C a random full-column-rank k x n matrix."""

    prf_key: PrfKey
    k: int
    n: int
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __call__(self, y: int) -> tuple[BitMatrix, BitVector]:
        got = self._cache.get(y)
        if got is None:
            stream = prng.bit_stream(self.prf_key, b"cd:%d" % y)
            c = gf2.random_full_column_rank(self.k, self.n, stream)
            d = gf2.random_vector(self.k, stream)
            got = (c, d)
            self._cache[y] = got
        return got


def embed_cpf(q: CosetPartitionFunction, k: int, seed: bytes,
              validate: bool = False) -> EmbeddedTriple:
    """Simulate (P, P^-1) from forward queries to a coset partition function."""
    n = q.n_bits
    r = q.m_bits
    if k < n:
        raise DimensionError("need k >= n for a full-column-rank embedding")
    if q.ell != n - r:
        raise ContractError("need an (n, r, n-r) coset partition function")
    if validate and not validate_cpf(q):
        raise ContractError("supplied function is not a coset partition function")
    root = PrfKey(seed, b"embed")
    gamma = random_table_perm(n, prng.bit_stream(root, b"gamma"))
    cd = PrfTallSource(prng.derive_key(root, b"cd"), k, n)

    def p(x: int) -> tuple[int, BitVector]:
        if not 0 <= x < (1 << n):
            raise RangeError("input outside {0,1}^n")
        w = gamma.forward(x)
        y = q.evaluate(w)
        c, d = cd(y)
        return y, gf2.mat_mul_vec(c, int_to_vec(w, n)) ^ d

    def p_inv(y: int, u: BitVector) -> Optional[int]:
        if u.dim != k:
            raise DimensionError("u must live in Z2^k")
        c, d = cd(y)
        w_vec = gf2.solve_coordinates(AffineCoset(c, d), u)
        if w_vec is None:
            return None
        w = vec_to_int(w_vec)
        if q.evaluate(w) != y:
            return None
        return gamma.inverse(w)

    return EmbeddedTriple(n, r, k, q, gamma, cd, p, p_inv, back_map=gamma.forward)


# -- instance files ------------------------------------------------------------------

_OSS_MAGIC = b"OSS1"


def materialize(inst: OssInstance) -> OssInstance:
    """Explicit-table copy of a (tiny) instance: permutation tables plus a
    dictionary coset source, suitable for serialization."""
    p = inst.params
    if p.n > 14 or (p.mode == MODE_STANDARD and p.d > 14):
        raise RangeError("materializing above 2^14 refused")
    pi = TablePerm(tuple(inst.pi.forward(x) for x in range(1 << p.n)), p.n)
    out = None
    if p.mode == MODE_STANDARD:
        out = TablePerm(tuple(inst.out_perm.forward(y) for y in range(1 << p.d)), p.d)
    y_bits = p.d if p.mode == MODE_STANDARD else p.r
    entries = {y: inst.coset_source(y) for y in range(1 << y_bits)}
    return OssInstance(p, pi, DictCosetSource(entries), out)


def serialize_instance(inst: OssInstance) -> bytes:
    """Binary instance file: params header, permutation tables, coset table.

    Lazy (PRF-backed) instances are materialized first, so this is a
    tiny-parameter format.
    """
    inst = materialize(inst)
    p = inst.params
    if p.k > 64:
        raise RangeError("instance files carry shifts as u64 (k <= 64)")
    mode = 1 if p.mode == MODE_STANDARD else 0
    head = _OSS_MAGIC + struct.pack("<BHHHH", mode, p.n, p.r, p.k, p.d or 0)
    body = [head]
    body.append(struct.pack(f"<{1 << p.n}I", *inst.pi.table))
    if mode:
        body.append(struct.pack(f"<{1 << p.d}I", *inst.out_perm.table))
    entries = inst.coset_source.entries
    body.append(struct.pack("<I", len(entries)))
    for y in sorted(entries):
        a, b = entries[y]
        mat = gf2.serialize_matrix(a)
        body.append(struct.pack("<QI", y, len(mat)))
        body.append(mat)
        body.append(struct.pack("<Q", b.bits))
    return b"".join(body)


def deserialize_instance(data: bytes) -> OssInstance:
    if data[:4] != _OSS_MAGIC:
        raise ContractError("not an instance file")
    mode, n, r, k, d = struct.unpack_from("<BHHHH", data, 4)
    off = 4 + struct.calcsize("<BHHHH")
    table = struct.unpack_from(f"<{1 << n}I", data, off)
    off += 4 << n
    pi = TablePerm(tuple(table), n)
    out = None
    if mode:
        out_table = struct.unpack_from(f"<{1 << d}I", data, off)
        off += 4 << d
        out = TablePerm(tuple(out_table), d)
    (count,) = struct.unpack_from("<I", data, off)
    off += 4
    entries = {}
    for _ in range(count):
        y, mlen = struct.unpack_from("<QI", data, off)
        off += 12
        a = gf2.deserialize_matrix(data[off : off + mlen])
        off += mlen
        (bbits,) = struct.unpack_from("<Q", data, off)
        off += 8
        entries[y] = (a, BitVector(bbits, k))
    params = OssParams(0, n - r, r, n, k, d if mode else None,
                       MODE_STANDARD if mode else MODE_ORACLE)
    return OssInstance(params, pi, DictCosetSource(entries), out)


def realize_embedded(emb: EmbeddedTriple) -> OssInstance:
    """Explicit instance equal to the embedded pair, from the CPF's cosets."""
    if emb.q.preimage_coset is None:
        raise ContractError("the CPF does not expose preimage cosets")
    q = emb.q
    n, r, k = emb.n, emb.r, emb.k

    class _Pi:
        n_bits = n

        def forward(self, x: int) -> int:
            w = emb.gamma.forward(x)
            y = q.evaluate(w)
            coset = q.preimage_coset(y)
            j = gf2.solve_coordinates(coset, int_to_vec(w, n))
            return (y << (n - r)) | vec_to_int(j)

        def inverse(self, val: int) -> int:
            y, j = val >> (n - r), val & ((1 << (n - r)) - 1)
            coset = q.preimage_coset(y)
            w = coset.point(int_to_vec(j, n - r))
            return emb.gamma.inverse(vec_to_int(w))

    def src(y: int) -> tuple[BitMatrix, BitVector]:
        coset = q.preimage_coset(y)
        c, d = emb.cd_source(y)
        return gf2.mat_mul(c, coset.basis), gf2.mat_mul_vec(c, coset.shift) ^ d

    params = OssParams(0, n - r, r, n, k, None, MODE_ORACLE)
    return OssInstance(params, _Pi(), src)
