"""Output-permutable PRP over the neighbor-swap PRP, mock obfuscation, the
trapdoor one-way permutation, and the fixed-sparse-trigger program template.

The obfuscator here is a MOCK: a sealed evaluator pair whose serialized form
embeds the key material verbatim next to a warning label.  It provides the
API shape and correctness of obfuscated programs and intentionally no hiding;
nothing in this package claims security from it.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Optional

from . import nsprp, prng
from .errors import ContractError, DimensionError, RangeError
from .hypergeom import DEFAULT_KAPPA
from .nsprp import PrpKey, make_prp_key, make_scale_prp_key, prp_forward, prp_inverse
from .permdecomp import DecomposablePermutation

MOCK_LABEL = b"MOCK-IO: FUNCTIONAL ONLY, NO HIDING"
_OWP_MAGIC = b"OWPK"


@dataclass(frozen=True)
class MockObfuscation:
    """Correctness-only stand-in for program obfuscation.

    ``payload`` is whatever reconstructs the program (for key-backed programs,
    the key itself, verbatim); the label rides along in every serialization.
    """

    forward: Callable[[int], int]
    inverse: Callable[[int], int]
    n: int
    payload: bytes = b""
    label: bytes = MOCK_LABEL

    def serialize(self) -> bytes:
        # the domain size is stored as n-1 so 2^64 fits in the u64 field
        return (
            struct.pack("<H", len(self.label)) + self.label
            + struct.pack("<QI", self.n - 1, len(self.payload)) + self.payload
        )


@dataclass(frozen=True)
class OpPrpPermutedKey:
    """Sealed forward/inverse pair computing Gamma^c o Pi(k, .) and its
    inverse Pi^-1(k, Gamma^-c(.)).

    ``pad_size`` records the circuit-size padding a real obfuscator would be
    called with; the mock has no circuits to pad, so it is carried, never
    used.
    """

    sealed: MockObfuscation
    c: int
    pad_size: int = 0

    @property
    def n(self) -> int:
        return self.sealed.n


def op_permute(k: PrpKey, g: DecomposablePermutation, c: int,
               pad_size: int = 0) -> OpPrpPermutedKey:
    """Deterministic permuted key: evaluation composes g on the output iff c=1."""
    if g.n != k.n:
        raise DimensionError("permutation domain != PRP domain")
    if c not in (0, 1):
        raise RangeError("c is a bit")
    if c == 0:
        fwd = lambda x: prp_forward(k, x)
        inv = lambda z: prp_inverse(k, z)
    else:
        fwd = lambda x: g.forward(prp_forward(k, x))
        inv = lambda z: prp_inverse(k, g.inverse(z))
    payload = prng.serialize_key(k.prf_key) + struct.pack("<QB", k.n - 1, c)
    return OpPrpPermutedKey(MockObfuscation(fwd, inv, k.n, payload), c, pad_size)


def hybrid_walk(k: PrpKey, g: DecomposablePermutation, t: int) -> tuple[Callable, Callable]:
    """Functional content of intermediate hybrid t: Gamma_t o Pi and its
    inverse.  Walking t from 0 to g.length moves between the c=0 and c=1
    permuted keys one neighbor swap at a time.  Test surface only; this is
    not part of any security story.
    """
    if not 0 <= t <= g.length:
        raise RangeError("hybrid index outside [0, length]")
    fwd = lambda x: g.gamma(t, prp_forward(k, x))
    inv = lambda z: prp_inverse(k, g.gamma_inv(t, z))
    return fwd, inv


# -- trapdoor one-way permutation ------------------------------------------------

@dataclass(frozen=True)
class TrapdoorOwpKeys:
    pk: MockObfuscation
    sk: PrpKey
    bits: int


def owp_gen(seed: bytes, bits: int, kappa: int = DEFAULT_KAPPA,
            scale: Optional[bool] = None) -> TrapdoorOwpKeys:
    """Key pair for the full-domain permutation on {0,1}^bits.

    ``scale`` selects the INSECURE-DEMO fastmix/gauss key (default for
    bits > 20, where exact sampling is infeasible).
    """
    if bits < 1:
        raise RangeError("bits must be >= 1")
    if scale is None:
        scale = bits > 20
    sk = make_scale_prp_key(seed, bits, kappa) if scale else make_prp_key(seed, 1 << bits, kappa)
    payload = prng.serialize_key(sk.prf_key) + struct.pack("<QB", sk.n - 1, 0)
    pk = MockObfuscation(lambda x: prp_forward(sk, x), lambda z: prp_inverse(sk, z),
                         sk.n, payload)
    return TrapdoorOwpKeys(pk, sk, bits)


def owp_forward(pk: MockObfuscation, x: int) -> int:
    if not 0 <= x < pk.n:
        raise RangeError("input outside domain")
    return pk.forward(x)


def owp_invert(sk: PrpKey, y: int) -> int:
    if not 0 <= y < sk.n:
        raise RangeError("output outside domain")
    return prp_inverse(sk, y)


def serialize_owp_public(keys: TrapdoorOwpKeys) -> bytes:
    return _OWP_MAGIC + struct.pack("<H", keys.bits) + keys.pk.serialize()


def serialize_owp_secret(keys: TrapdoorOwpKeys) -> bytes:
    return _OWP_MAGIC + b"S" + struct.pack("<HI", keys.bits, keys.sk.kappa) \
        + bytes([1 if keys.sk.sampler == nsprp.SAMPLER_GAUSS else 0]) \
        + prng.serialize_key(keys.sk.prf_key)


def deserialize_owp_public(data: bytes) -> MockObfuscation:
    if data[:4] != _OWP_MAGIC:
        raise ContractError("not an OWP public key file")
    (bits,) = struct.unpack_from("<H", data, 4)
    off = 6
    (lab_len,) = struct.unpack_from("<H", data, off)
    off += 2
    label = data[off : off + lab_len]
    if MOCK_LABEL not in label:
        raise ContractError("missing mock-obfuscation warning label")
    off += lab_len
    n_minus_1, payload_len = struct.unpack_from("<QI", data, off)
    off += 12
    payload = data[off : off + payload_len]
    prf_key = prng.deserialize_key(payload[: len(payload) - 9])
    pn_minus_1, c = struct.unpack_from("<QB", payload, len(payload) - 9)
    pn = pn_minus_1 + 1
    sampler = nsprp.SAMPLER_GAUSS if prf_key.backend == prng.BACKEND_FASTMIX else nsprp.SAMPLER_EXACT
    ctx = None
    if prf_key.backend == prng.BACKEND_FASTMIX:
        import numpy as np

        from . import fastpath

        k0, k1 = prf_key.fast_words()
        ctx = int(fastpath.mix64_np(np.uint64(k0), np.uint64(k1), fastpath.TAG_ROOT))
    sk = PrpKey(prf_key, pn, DEFAULT_KAPPA, sampler, ctx)
    return MockObfuscation(lambda x: prp_forward(sk, x), lambda z: prp_inverse(sk, z),
                           pn, payload, label)


def deserialize_owp_secret(data: bytes) -> TrapdoorOwpKeys:
    if data[:5] != _OWP_MAGIC + b"S":
        raise ContractError("not an OWP secret key file")
    bits, kappa = struct.unpack_from("<HI", data, 5)
    gauss = data[11]
    prf_key = prng.deserialize_key(data[12:])
    backend = prf_key.backend
    sk = make_prp_key(prf_key.seed, 1 << bits, kappa,
                      nsprp.SAMPLER_GAUSS if gauss else nsprp.SAMPLER_EXACT, backend)
    payload = prng.serialize_key(sk.prf_key) + struct.pack("<QB", sk.n - 1, 0)
    pk = MockObfuscation(lambda x: prp_forward(sk, x), lambda z: prp_inverse(sk, z),
                         sk.n, payload)
    return TrapdoorOwpKeys(pk, sk, bits)


# -- fixed sparse trigger template -------------------------------------------------

@dataclass(frozen=True)
class TriggerWidths:
    """Bit widths wiring the trigger template.

    in_bits: width of x; the pipeline is
    x -> P0 -> (x1: k0_bits, w1: w1_bits) -> Pi(k0, x1) -> (x2: t_bits, w2)
      -> [R(x2)? P1' : P1](w1, w2) -> (w3: k1_bits - t_bits, w4: w4_bits)
      -> Pi^-1(k1, x2 || w3) -> x3 -> P2(x3, w4) -> out.
    x2 is the top t_bits of Pi(k0, .)'s output, handed to Pi^-1(k1, .)
    unmodified; that structural property is what the template guarantees.
    """

    in_bits: int
    k0_bits: int
    w1_bits: int
    t_bits: int
    k1_bits: int
    w4_bits: int

    def validate(self) -> None:
        if not (0 < self.t_bits <= self.k0_bits and self.t_bits <= self.k1_bits):
            raise DimensionError("trigger slice wider than a permutation block")


def triggered_program(
    k0: PrpKey,
    k1: PrpKey,
    widths: TriggerWidths,
    p0: Callable[[int], tuple[int, int]],
    p1: Callable[[int, int], tuple[int, int]],
    p1_alt: Callable[[int, int], tuple[int, int]],
    p2: Callable[[int, int], int],
    interval: tuple[int, int],
) -> Callable[[int], int]:
    """The template program with trigger R(x2) = [a <= x2 < b).

    With an empty interval the output equals the untriggered template
    pointwise; with the full interval it equals the P1' variant everywhere.
    """
    widths.validate()
    if k0.n != 1 << widths.k0_bits or k1.n != 1 << widths.k1_bits:
        raise DimensionError("permutation domains do not match declared widths")
    a, b = interval
    if not (0 <= a <= b <= 1 << widths.t_bits):
        raise RangeError("interval outside [0, 2^t_bits]")
    w2_bits = widths.k0_bits - widths.t_bits
    w3_bits = widths.k1_bits - widths.t_bits

    def run(x: int) -> int:
        x1, w1 = p0(x)
        out01 = prp_forward(k0, x1)
        x2 = out01 >> w2_bits
        w2 = out01 & ((1 << w2_bits) - 1)
        w3, w4 = (p1_alt if a <= x2 < b else p1)(w1, w2)
        if w3 >> w3_bits:
            raise DimensionError("P1 emitted w3 wider than declared")
        x3 = prp_inverse(k1, (x2 << w3_bits) | w3)
        return p2(x3, w4)

    return run


def trigger_preimage_count(k0: PrpKey, widths: TriggerWidths,
                           interval: tuple[int, int]) -> int:
    """Exact count of Pi(k0, .) outputs whose x2 slice lands in the interval
    (the permutation is a bijection, so images count preimages)."""
    a, b = interval
    return (b - a) * (1 << (widths.k0_bits - widths.t_bits))
