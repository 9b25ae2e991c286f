"""LWE-based approximate 2-to-1 trapdoor hash and its parallel repetition.

hashL(pk, (t, f), b) = B.t + f + b.c mod q over Z_q^v, with f confined to the
centered box (-B, B]^v and c = B.s + e for a short e.  Almost every image has
exactly two preimages, whose difference reveals s; the exceptions are points
whose f +- e falls off the box, and their measure is controlled by Bbar/B.

hashQ applies (n-r) independent hashL instances to the slices of an n-bit
input; its preimage sets are direct sums of the per-slice preimage pairs, so
proper images pull back to cosets of dimension n-r whose descriptions the
trapdoor extracts.

All shipped parameter sets are INSECURE-DEMO desk-scale toys.  Trapdoor
inversion enumerates the box residues of an invertible row subset (the
published constructions use lattice trapdoor machinery instead); it is exact
and complete at these sizes, and nothing here claims concrete security.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import gf2
from .errors import ContractError, DimensionError, RangeError
from .prng import BitStream

INSECURE_DEMO_MAGIC = b"INSECURE-DEMO"


def _is_pow2(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0


@dataclass(frozen=True)
class LweParams:
    u: int       # secret dimension
    v: int       # sample count
    q: int       # modulus, power of two
    B: int       # noise-box bound, power of two
    Bbar: int    # gaussian tail bound
    sigma: float # gaussian width

    def __post_init__(self):
        if not (_is_pow2(self.q) and _is_pow2(self.B)):
            raise ContractError("q and B must be powers of two")
        if not (self.sigma <= self.Bbar <= self.B <= self.q):
            raise ContractError("need sigma <= Bbar <= B <= q")
        if self.u < 1 or self.v < 1:
            raise RangeError("u, v must be positive")

    @property
    def lq(self) -> int:
        return self.q.bit_length() - 1

    @property
    def l2b(self) -> int:
        return (2 * self.B).bit_length() - 1

    @property
    def domain_bits(self) -> int:
        """Bits of one (t, f, b) input: u*log2(q) + v*log2(2B) + 1."""
        return self.u * self.lq + self.v * self.l2b + 1

    @property
    def range_bits(self) -> int:
        return self.v * self.lq

    def ratio_report(self, c_samples: float = 1.0) -> dict:
        """The asymptotic ratio checks, reported rather than enforced."""
        return {
            "Bbar_over_sigma": self.Bbar / max(self.sigma, 1e-12),
            "B_over_Bbar": self.B / self.Bbar,
            "q_over_B": self.q / self.B,
            "v_min_recommended": int(np.ceil(c_samples * self.u * self.lq)),
            "v": self.v,
            "v_ok": self.v >= int(np.ceil(c_samples * self.u * self.lq)),
        }


INSECURE_DEMO = LweParams(u=2, v=24, q=1 << 12, B=1 << 6, Bbar=1 << 3, sigma=2.0)
# micro preset: a 7-bit slice domain, small enough for exhaustive sweeps;
# most seeds give honestly disjoint lattice cosets at this scale
MICRO = LweParams(u=1, v=3, q=8, B=1, Bbar=1, sigma=0.5)


def centered_mod(x, modulus: int):
    """Centered residue in (-modulus/2, modulus/2]; works on ints and arrays."""
    half = modulus // 2
    return (x + half - 1) % modulus - half + 1


@dataclass(frozen=True)
class LweKey:
    params: LweParams
    b_mat: np.ndarray  # v x u, int64 in [0,q)
    c_vec: np.ndarray  # v, int64 in [0,q)
    _cache: dict = field(default_factory=dict, compare=False, repr=False)


@dataclass(frozen=True)
class LweTrapdoor:
    s: np.ndarray  # u, int64 in [0,q)
    e: np.ndarray  # v, int64 in (-Bbar, Bbar]


def _binomial_tail_sample(p: LweParams, stream: BitStream) -> int:
    """Centered binomial of variance ~ sigma^2 with exact tail truncation."""
    eta = max(1, round(2 * p.sigma * p.sigma))
    while True:
        acc = 0
        for _ in range(eta):
            acc += stream.bits(1) - stream.bits(1)
        if -p.Bbar < acc <= p.Bbar:
            return acc


def hashl_keygen(p: LweParams, stream: BitStream) -> tuple[LweKey, LweTrapdoor]:
    """pk = (B, c = B.s + e), td = (s, e); deterministic in the stream."""
    b_mat = np.array([[stream.bits(p.lq) for _ in range(p.u)] for _ in range(p.v)],
                     dtype=np.int64)
    s = np.array([stream.bits(p.lq) for _ in range(p.u)], dtype=np.int64)
    e = np.array([_binomial_tail_sample(p, stream) for _ in range(p.v)], dtype=np.int64)
    c = (b_mat @ s + e) % p.q
    return LweKey(p, b_mat, c), LweTrapdoor(s, e)


def hashl_eval(pk: LweKey, t: np.ndarray, f: np.ndarray, b: int) -> np.ndarray:
    """B.t + f + b.c mod q; f must sit in the centered box (-B, B]^v."""
    p = pk.params
    t = np.asarray(t, dtype=np.int64)
    f = np.asarray(f, dtype=np.int64)
    if t.shape != (p.u,) or f.shape != (p.v,):
        raise DimensionError("operand shapes do not match parameters")
    if ((f <= -p.B) | (f > p.B)).any():
        raise RangeError("f outside the centered box (-B, B]")
    return (pk.b_mat @ t + f + b * pk.c_vec) % p.q


def _invertible_rows(p: LweParams, b_mat: np.ndarray) -> Optional[np.ndarray]:
    """Indices of u rows forming a matrix invertible mod q (odd determinant)."""
    rows: list[int] = []
    basis: list[int] = []
    for i in range(p.v):
        vec = 0
        for j in range(p.u):
            vec |= (int(b_mat[i, j]) & 1) << j
        red = vec
        for bvec in basis:
            if red ^ bvec < red:
                red ^= bvec
        if red:
            rows.append(i)
            basis.append(red)
            basis.sort(reverse=True)
            if len(rows) == p.u:
                return np.array(rows)
    return None


def _inv_mod_q(mat: np.ndarray, q: int) -> np.ndarray:
    """Inverse of an odd-determinant matrix mod a power of two (Gauss)."""
    u = mat.shape[0]
    work = mat.astype(object) % q
    aug = np.eye(u, dtype=object)
    for col in range(u):
        piv = next(i for i in range(col, u) if work[i, col] % 2 == 1)
        work[[col, piv]] = work[[piv, col]]
        aug[[col, piv]] = aug[[piv, col]]
        inv_p = pow(int(work[col, col]), -1, q)
        work[col] = (work[col] * inv_p) % q
        aug[col] = (aug[col] * inv_p) % q
        for i in range(u):
            if i != col and work[i, col] % q:
                m = int(work[i, col])
                work[i] = (work[i] - m * work[col]) % q
                aug[i] = (aug[i] - m * aug[col]) % q
    return aug.astype(np.int64)


def _invert_tables(pk: LweKey):
    """(rows, inverse mod q, box-residue grid, screening rows) for inversion."""
    cached = pk._cache.get("invert")
    if cached is not None:
        return cached
    p = pk.params
    rows = _invertible_rows(p, pk.b_mat)
    if rows is None:
        tables = None
    else:
        binv = _inv_mod_q(pk.b_mat[rows][:, :], p.q)
        grid = np.stack(np.meshgrid(*[np.arange(-p.B + 1, p.B + 1)] * p.u,
                                    indexing="ij")).reshape(p.u, -1)
        extra = np.array([i for i in range(p.v) if i not in set(rows.tolist())][:4])
        tables = (rows, binv, grid, extra)
    pk._cache["invert"] = tables
    return tables


def hashl_invert(pk: LweKey, td: LweTrapdoor, y: np.ndarray) -> list[tuple[np.ndarray, np.ndarray, int]]:
    """The full preimage set of y (size 0, 1, or 2 for honest keys).

    Solves z = B.t + f by enumerating the (2B)^u box residues on an
    invertible row subset; every candidate t is then screened against the
    remaining rows.  Complete because a true preimage's residues appear in
    the grid; sound because every hit is re-verified.
    """
    p = pk.params
    y = np.asarray(y, dtype=np.int64) % p.q
    if p.u > 3:
        raise RangeError("toy inversion supports u <= 3")
    tables = _invert_tables(pk)
    if tables is None:
        return []
    rows, binv, grid, extra = tables
    out = []
    seen = set()
    half = p.q // 2
    for b in (0, 1):
        z = (y - b * pk.c_vec) % p.q
        t_cands = (binv @ ((z[rows][:, None] - grid) % p.q)) % p.q
        resid = (z[extra][:, None] - pk.b_mat[extra] @ t_cands + half - 1) % p.q - half + 1
        alive = ((resid > -p.B) & (resid <= p.B)).all(axis=0)
        for idx in np.nonzero(alive)[0]:
            t = t_cands[:, idx]
            key = (b, tuple(int(x) for x in t))
            if key in seen:
                continue
            seen.add(key)
            f = centered_mod((z - pk.b_mat @ t) % p.q, p.q)
            if ((f > -p.B) & (f <= p.B)).all():
                if (hashl_eval(pk, t, f, b) == y).all():
                    out.append((t.copy(), f, b))
    return out


# -- bit packing ----------------------------------------------------------------

def pack_domain(p: LweParams, t: np.ndarray, f: np.ndarray, b: int) -> int:
    """(t, f, b) to a domain_bits-wide integer; b is the last (lowest) bit."""
    acc = 0
    for j in range(p.u):
        acc = (acc << p.lq) | (int(t[j]) % p.q)
    for i in range(p.v):
        acc = (acc << p.l2b) | (int(f[i]) + p.B - 1)
    return (acc << 1) | (b & 1)


def unpack_domain(p: LweParams, val: int) -> tuple[np.ndarray, np.ndarray, int]:
    b = val & 1
    val >>= 1
    f = np.zeros(p.v, dtype=np.int64)
    for i in reversed(range(p.v)):
        f[i] = (val & ((1 << p.l2b) - 1)) - p.B + 1
        val >>= p.l2b
    t = np.zeros(p.u, dtype=np.int64)
    for j in reversed(range(p.u)):
        t[j] = val & ((1 << p.lq) - 1)
        val >>= p.lq
    return t, f, b


def pack_range(p: LweParams, y: np.ndarray) -> int:
    acc = 0
    for i in range(p.v):
        acc = (acc << p.lq) | (int(y[i]) % p.q)
    return acc


def unpack_range(p: LweParams, val: int) -> np.ndarray:
    y = np.zeros(p.v, dtype=np.int64)
    for i in reversed(range(p.v)):
        y[i] = val & ((1 << p.lq) - 1)
        val >>= p.lq
    return y


def hashl_eval_packed(pk: LweKey, x: int) -> int:
    t, f, b = unpack_domain(pk.params, x)
    return pack_range(pk.params, hashl_eval(pk, t, f, b))


def is_two_to_one_point(pk: LweKey, td: LweTrapdoor, t: np.ndarray, f: np.ndarray, b: int) -> bool:
    """Whether the claw partner of (t, f, b) stays inside the box."""
    g = np.asarray(f, dtype=np.int64) + (td.e if b else -td.e)
    return bool(((g > -pk.params.B) & (g <= pk.params.B)).all())


# -- parallel repetition -----------------------------------------------------------

@dataclass(frozen=True)
class QKey:
    params: LweParams
    pks: tuple[LweKey, ...]

    @property
    def slices(self) -> int:
        return len(self.pks)

    @property
    def n_bits(self) -> int:
        return self.params.domain_bits * self.slices

    @property
    def r_bits(self) -> int:
        return (self.params.domain_bits - 1) * self.slices

    @property
    def out_bits(self) -> int:
        return self.params.range_bits * self.slices


@dataclass(frozen=True)
class QTrapdoor:
    tds: tuple[LweTrapdoor, ...]


def hashq_keygen(p: LweParams, slices: int, stream: BitStream) -> tuple[QKey, QTrapdoor]:
    pairs = [hashl_keygen(p, stream) for _ in range(slices)]
    return QKey(p, tuple(k for k, _ in pairs)), QTrapdoor(tuple(t for _, t in pairs))


def _split_input(qk: QKey, w: int) -> list[int]:
    """Per-slice (t||f||b) inputs from the n-bit w.

    Layout: packets of the first r bits carry each slice's t||f part; the
    last (slices) bits are the per-slice coordinate bits b_i.
    """
    slices = qk.slices
    pb = qk.params.domain_bits - 1  # packet width
    if w < 0 or w >> qk.n_bits:
        raise RangeError("input outside {0,1}^n")
    coords = w & ((1 << slices) - 1)
    vec = w >> slices
    out = []
    for i in range(slices):
        packet = (vec >> ((slices - 1 - i) * pb)) & ((1 << pb) - 1)
        b_i = (coords >> (slices - 1 - i)) & 1
        out.append((packet << 1) | b_i)
    return out


def _join_input(qk: QKey, slice_inputs: list[int]) -> int:
    pb = qk.params.domain_bits - 1
    vec = 0
    coords = 0
    for i, si in enumerate(slice_inputs):
        vec = (vec << pb) | (si >> 1)
        coords = (coords << 1) | (si & 1)
    return (vec << qk.slices) | coords


def hashq_eval(qk: QKey, w: int) -> int:
    """Parallel application; slice outputs concatenate, first slice highest."""
    acc = 0
    for pk, si in zip(qk.pks, _split_input(qk, w)):
        acc = (acc << qk.params.range_bits) | hashl_eval_packed(pk, si)
    return acc


def _split_output(qk: QKey, a: int) -> list[int]:
    rb = qk.params.range_bits
    return [(a >> ((qk.slices - 1 - i) * rb)) & ((1 << rb) - 1) for i in range(qk.slices)]


def hashq_coords(qk: QKey, w: int) -> gf2.BitVector:
    """The last (n-r) bits of w as the coordinates vector z; component i is
    slice i's coordinate bit."""
    coords = w & ((1 << qk.slices) - 1)
    bits = 0
    for i in range(qk.slices):
        bits |= ((coords >> (qk.slices - 1 - i)) & 1) << i
    return gf2.BitVector(bits, qk.slices)


def _lift_slice_preimage(qk: QKey, i: int, slice_input: int) -> int:
    """Embed slice i's (t||f||b) string into Z2^n: the t||f part lands in
    packet i, the final bit in coordinate bit i, everything else zero."""
    pb = qk.params.domain_bits - 1
    packet = slice_input >> 1
    b = slice_input & 1
    vec = packet << ((qk.slices - 1 - i) * pb)
    coords = b << (qk.slices - 1 - i)
    return (vec << qk.slices) | coords


def _as_bitvector(qk: QKey, w: int) -> gf2.BitVector:
    """n-bit string to a BitVector (component j = bit j counting from MSB)."""
    n = qk.n_bits
    bits = 0
    for j in range(n):
        bits |= ((w >> (n - 1 - j)) & 1) << j
    return gf2.BitVector(bits, n)


def hashq_preimage_sets(qk: QKey, td: QTrapdoor, a: int) -> list[list[int]]:
    """Per-slice preimage lists (as packed slice inputs) of output a."""
    outs = _split_output(qk, a)
    result = []
    for pk, tdi, yi in zip(qk.pks, td.tds, outs):
        pre = hashl_invert(pk, tdi, unpack_range(qk.params, yi))
        result.append([pack_domain(qk.params, t, f, b) for (t, f, b) in pre])
    return result


def hashq_coset(qk: QKey, td: QTrapdoor, a: int) -> gf2.AffineCoset:
    """Coset description of the preimage set of a proper image a.

    Shift: the sum of the lifted b=0 slice preimages (b=1 stands in when a
    slice has no b=0 preimage); basis column i: the sum of slice i's two
    lifted preimages.  Raises when a slice has no preimage or the image is
    deficient (some slice 1-to-1), since no full-dimension coset exists then.
    """
    per_slice = hashq_preimage_sets(qk, td, a)
    n = qk.n_bits
    shift_bits = 0
    cols = []
    deficient = []
    for i, pres in enumerate(per_slice):
        if not pres:
            raise ContractError(f"slice {i}: output not in the image")
        zero_side = [p for p in pres if (p & 1) == 0]
        one_side = [p for p in pres if (p & 1) == 1]
        w0 = _as_bitvector(qk, _lift_slice_preimage(qk, i, zero_side[0])).bits if zero_side else 0
        w1 = _as_bitvector(qk, _lift_slice_preimage(qk, i, one_side[0])).bits if one_side else 0
        shift_bits ^= w0
        col = w0 ^ w1
        if not (zero_side and one_side):
            deficient.append(i)
        cols.append(col)
    if deficient:
        raise ContractError(f"deficient (1-to-1) slices {deficient}: preimage set is not a full coset")
    basis = gf2.BitMatrix(n, tuple(cols))
    return gf2.AffineCoset(basis, gf2.BitVector(shift_bits, n))


def hashq_coords_of(qk: QKey, w: int) -> gf2.BitVector:
    return hashq_coords(qk, w)


def reconstruct_from_coset(qk: QKey, coset: gf2.AffineCoset, z: gf2.BitVector) -> int:
    """w = basis.z + shift, re-packed into the n-bit integer layout."""
    w_vec = coset.point(z)
    n = qk.n_bits
    w = 0
    for j in range(n):
        w |= ((w_vec.bits >> j) & 1) << (n - 1 - j)
    return w


def measure_two_to_one_fraction(qk_or_pk, td, samples: int, stream: BitStream) -> float:
    """Fraction of random domain points whose image has two preimages,
    measured honestly through trapdoor inversion."""
    pk = qk_or_pk
    p = pk.params
    hits = 0
    for _ in range(samples):
        x = stream.bits(p.domain_bits)
        t, f, b = unpack_domain(p, x)
        y = hashl_eval(pk, t, f, b)
        if len(hashl_invert(pk, td, y)) == 2:
            hits += 1
    return hits / samples


# -- serialization ------------------------------------------------------------------

def serialize_params(p: LweParams) -> str:
    """Text key=value parameter description."""
    return "".join(f"{k}={v}\n" for k, v in
                   [("u", p.u), ("v", p.v), ("q", p.q), ("B", p.B),
                    ("Bbar", p.Bbar), ("sigma", p.sigma)])


def parse_params(text: str) -> LweParams:
    kv = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        kv[key.strip()] = val.strip()
    return LweParams(u=int(kv["u"]), v=int(kv["v"]), q=int(kv["q"]),
                     B=int(kv["B"]), Bbar=int(kv["Bbar"]), sigma=float(kv["sigma"]))


def serialize_key(pk: LweKey, insecure: bool = True) -> bytes:
    head = (INSECURE_DEMO_MAGIC if insecure else b"LWE-KEY------") + b"\x00"
    params = serialize_params(pk.params).encode()
    body = struct.pack("<H", len(params)) + params
    flat = np.concatenate([pk.b_mat.reshape(-1), pk.c_vec])
    body += struct.pack("<I", flat.size) + flat.astype("<i8").tobytes()
    return head + body


def deserialize_key(data: bytes) -> LweKey:
    head, data = data[:14], data[14:]
    (plen,) = struct.unpack_from("<H", data, 0)
    p = parse_params(data[2 : 2 + plen].decode())
    off = 2 + plen
    (size,) = struct.unpack_from("<I", data, off)
    flat = np.frombuffer(data[off + 4 : off + 4 + 8 * size], dtype="<i8").astype(np.int64)
    b_mat = flat[: p.v * p.u].reshape(p.v, p.u)
    c_vec = flat[p.v * p.u :]
    return LweKey(p, b_mat, c_vec)


def serialize_trapdoor(p: LweParams, td: LweTrapdoor, insecure: bool = True) -> bytes:
    head = (INSECURE_DEMO_MAGIC if insecure else b"LWE-TD-------") + b"\x01"
    flat = np.concatenate([td.s, td.e])
    return head + struct.pack("<HH", p.u, p.v) + flat.astype("<i8").tobytes()


def deserialize_trapdoor(data: bytes) -> LweTrapdoor:
    u, v = struct.unpack_from("<HH", data, 14)
    flat = np.frombuffer(data[18 : 18 + 8 * (u + v)], dtype="<i8").astype(np.int64)
    return LweTrapdoor(flat[:u], flat[u:])
