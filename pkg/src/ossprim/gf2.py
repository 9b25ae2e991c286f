"""Dense bit-packed linear algebra over GF(2).

Vectors and matrix columns are stored as Python integers (bit ``i`` is row
``i``), which packs 64 bits per machine word under the hood; matrices are
column-major tuples of such integers because column XOR dominates coset
evaluation.  All types are immutable after construction and safe for
concurrent reads.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import ContractError, DimensionError, InvariantViolation


@dataclass(frozen=True)
class BitVector:
    """A vector in Z2^k; addition is XOR."""

    bits: int
    dim: int

    def __post_init__(self):
        if self.dim < 0 or self.bits < 0 or self.bits >> self.dim:
            raise DimensionError(f"bits do not fit in {self.dim} dimensions")

    @classmethod
    def from_bits(cls, seq: Iterable[int]) -> "BitVector":
        bits = 0
        n = 0
        for i, b in enumerate(seq):
            bits |= (b & 1) << i
            n = i + 1
        return cls(bits, n)

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.dim:
            raise IndexError(i)
        return (self.bits >> i) & 1

    def __xor__(self, other: "BitVector") -> "BitVector":
        if self.dim != other.dim:
            raise DimensionError("xor of vectors with different dims")
        return BitVector(self.bits ^ other.bits, self.dim)

    def to_list(self) -> list[int]:
        return [(self.bits >> i) & 1 for i in range(self.dim)]

    def is_zero(self) -> bool:
        return self.bits == 0


def zero_vector(dim: int) -> BitVector:
    return BitVector(0, dim)


@dataclass(frozen=True)
class BitMatrix:
    """A k x m matrix over Z2, column-major.

    ``cols[j]`` holds column j with bit i = entry (i, j).
    """

    rows: int
    cols: tuple[int, ...]

    def __post_init__(self):
        for c in self.cols:
            if c < 0 or c >> self.rows:
                raise DimensionError("column does not fit in row count")

    @property
    def ncols(self) -> int:
        return len(self.cols)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "BitMatrix":
        nrows = len(rows)
        ncols = len(rows[0]) if nrows else 0
        cols = [0] * ncols
        for i, r in enumerate(rows):
            if len(r) != ncols:
                raise DimensionError("ragged rows")
            for j, b in enumerate(r):
                cols[j] |= (b & 1) << i
        return cls(nrows, tuple(cols))

    @classmethod
    def from_cols(cls, rows: int, cols: Sequence[int]) -> "BitMatrix":
        return cls(rows, tuple(cols))

    def entry(self, i: int, j: int) -> int:
        return (self.cols[j] >> i) & 1

    def column(self, j: int) -> BitVector:
        return BitVector(self.cols[j], self.rows)

    def to_rows(self) -> list[list[int]]:
        return [[self.entry(i, j) for j in range(self.ncols)] for i in range(self.rows)]

    def transpose(self) -> "BitMatrix":
        new_cols = [0] * self.rows
        for j, c in enumerate(self.cols):
            while c:
                low = c & -c
                i = low.bit_length() - 1
                new_cols[i] |= 1 << j
                c ^= low
        return BitMatrix(self.ncols, tuple(new_cols))


def identity(n: int) -> BitMatrix:
    return BitMatrix(n, tuple(1 << i for i in range(n)))


def zero_matrix(rows: int, cols: int) -> BitMatrix:
    return BitMatrix(rows, (0,) * cols)


def mat_mul_vec(m: BitMatrix, v: BitVector) -> BitVector:
    """Matrix-vector product over GF(2): XOR of the columns selected by v."""
    if v.dim != m.ncols:
        raise DimensionError(f"vector dim {v.dim} != matrix cols {m.ncols}")
    acc = 0
    bits = v.bits
    j = 0
    while bits:
        if bits & 1:
            acc ^= m.cols[j]
        bits >>= 1
        j += 1
    return BitVector(acc, m.rows)


def mat_mul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    """Matrix product a . b over GF(2)."""
    if a.ncols != b.rows:
        raise DimensionError("inner dimensions differ")
    cols = tuple(mat_mul_vec(a, b.column(j)).bits for j in range(b.ncols))
    return BitMatrix(a.rows, cols)


def rank(m: BitMatrix) -> int:
    """Rank by Gaussian elimination on a copy of the columns."""
    basis: list[int] = []
    for c in m.cols:
        c = _reduce(c, basis)
        if c:
            _insert(c, basis)
    return len(basis)


def _reduce(vec: int, basis: list[int]) -> int:
    # basis is kept with strictly decreasing leading-bit positions
    for b in basis:
        if vec ^ b < vec:
            vec ^= b
    return vec


def _insert(vec: int, basis: list[int]) -> None:
    basis.append(vec)
    basis.sort(key=int.bit_length, reverse=True)


def is_full_column_rank(m: BitMatrix) -> bool:
    return rank(m) == m.ncols


def is_invertible(m: BitMatrix) -> bool:
    return m.rows == m.ncols and rank(m) == m.rows


def invert(m: BitMatrix) -> BitMatrix:
    """Inverse of a square invertible matrix (row-major Gauss-Jordan)."""
    if m.rows != m.ncols:
        raise DimensionError("inverse of non-square matrix")
    n = m.rows
    rows = [sum(m.entry(i, j) << j for j in range(n)) for i in range(n)]
    aug = [1 << i for i in range(n)]
    for col in range(n):
        piv = next((i for i in range(col, n) if (rows[i] >> col) & 1), None)
        if piv is None:
            raise InvariantViolation("matrix is singular")
        rows[col], rows[piv] = rows[piv], rows[col]
        aug[col], aug[piv] = aug[piv], aug[col]
        for i in range(n):
            if i != col and (rows[i] >> col) & 1:
                rows[i] ^= rows[col]
                aug[i] ^= aug[col]
    # aug is row-major; repack column-major
    cols = [sum(((aug[i] >> j) & 1) << i for i in range(n)) for j in range(n)]
    return BitMatrix(n, tuple(cols))


def kernel_basis(m: BitMatrix) -> BitMatrix:
    """Basis (columns) of {v in Z2^rows : v^T . m = 0}.

    Column count equals rows(m) - rank(m); every returned column v satisfies
    v^T m = 0, i.e. v is orthogonal to each column of m.
    """
    k = m.rows
    # Equations: for each column c of m, sum_i v_i c_i = 0.  Eliminate over the
    # k unknowns; each equation is an int over v-bit positions.
    eqs: list[int] = []
    for c in m.cols:
        c = _reduce(c, eqs)
        if c:
            _insert(c, eqs)
    pivot_pos = [e.bit_length() - 1 for e in eqs]
    free = [i for i in range(k) if i not in pivot_pos]
    basis_cols = []
    for f in free:
        v = 1 << f
        # back-substitute pivot variables: process equations by ascending pivot
        for e in sorted(eqs, key=int.bit_length):
            p = e.bit_length() - 1
            # parity of e & v over non-pivot part decides bit p
            if (e & v).bit_count() & 1:
                v |= 1 << p
        basis_cols.append(v)
    return BitMatrix(k, tuple(basis_cols))


@dataclass(frozen=True)
class AffineCoset:
    """The coset {basis . z + shift : z in Z2^d} of Z2^k.

    ``basis`` must have full column rank, so coordinates are unique and the
    coset has exactly 2^d points.
    """

    basis: BitMatrix
    shift: BitVector

    def __post_init__(self):
        if self.shift.dim != self.basis.rows:
            raise DimensionError("shift dim != basis rows")
        if not is_full_column_rank(self.basis):
            raise InvariantViolation("coset basis is not full column rank")

    @property
    def dim(self) -> int:
        return self.basis.ncols

    def point(self, z: BitVector) -> BitVector:
        return mat_mul_vec(self.basis, z) ^ self.shift

    def points(self) -> list[BitVector]:
        d = self.dim
        return [self.point(BitVector(z, d)) for z in range(1 << d)]

    def __contains__(self, u: BitVector) -> bool:
        return solve_coordinates(self, u) is not None


def solve_coordinates(c: AffineCoset, u: BitVector) -> Optional[BitVector]:
    """The unique z with basis.z + shift = u, or None when u is off the coset."""
    if u.dim != c.basis.rows:
        raise DimensionError("target dim != basis rows")
    target = u.bits ^ c.shift.bits
    # Eliminate basis columns, tracking the coordinate combination of each.
    cols = list(c.basis.cols)
    combo = [1 << j for j in range(len(cols))]
    reduced: list[tuple[int, int]] = []  # (reduced column, combo)
    for j in range(len(cols)):
        col, cmb = cols[j], combo[j]
        for rc, rcmb in reduced:
            if col ^ rc < col:
                col ^= rc
                cmb ^= rcmb
        reduced.append((col, cmb))
        reduced.sort(key=lambda t: t[0].bit_length(), reverse=True)
    z = 0
    for rc, rcmb in reduced:
        if rc and target ^ rc < target:
            target ^= rc
            z ^= rcmb
    if target:
        return None
    return BitVector(z, c.basis.ncols)


def random_vector(dim: int, stream) -> BitVector:
    return BitVector(stream.bits(dim), dim) if dim else BitVector(0, 0)


def random_full_column_rank(rows: int, cols: int, stream) -> BitMatrix:
    """Sample a uniformly random full-column-rank rows x cols matrix.

    Columns are drawn from ``stream``; a column that falls in the span of the
    previous ones is resampled alone, so the result is a deterministic
    function of the stream with bounded expected retries.
    """
    if cols > rows:
        raise DimensionError("cols > rows cannot be full column rank")
    basis: list[int] = []
    out = []
    for _ in range(cols):
        while True:
            c = stream.bits(rows)
            if _reduce(c, basis):
                break
        out.append(c)
        _insert(_reduce(c, basis), basis)
    return BitMatrix(rows, tuple(out))


def random_invertible(n: int, stream) -> BitMatrix:
    return random_full_column_rank(n, n, stream)


# -- elementary decomposition -------------------------------------------------

def elementary_factors(m: BitMatrix) -> list[tuple[str, int, int]]:
    """Decompose an invertible matrix into elementary row operations.

    Returns ops so that applying them left to right to the identity produces
    ``m``; each op is ("swap", i, j) exchanging rows i and j, or
    ("add", i, j) adding row j into row i.  Over GF(2) both are involutions.
    """
    if not is_invertible(m):
        raise ContractError("matrix is singular")
    n = m.rows
    rows = [sum(m.entry(i, j) << j for j in range(n)) for i in range(n)]
    inverse_ops: list[tuple[str, int, int]] = []
    for col in range(n):
        piv = next(i for i in range(col, n) if (rows[i] >> col) & 1)
        if piv != col:
            rows[col], rows[piv] = rows[piv], rows[col]
            inverse_ops.append(("swap", col, piv))
        for i in range(n):
            if i != col and (rows[i] >> col) & 1:
                rows[i] ^= rows[col]
                inverse_ops.append(("add", i, col))
    # inverse_ops reduce m to I; factors of m are the inverses in reverse
    # order, and every elementary GF(2) op is its own inverse.
    return list(reversed(inverse_ops))


def apply_row_op(op: tuple[str, int, int], v: int) -> int:
    """Apply an elementary row op to a packed vector (bit i = entry i)."""
    kind, i, j = op
    if kind == "swap":
        bi, bj = (v >> i) & 1, (v >> j) & 1
        if bi != bj:
            v ^= (1 << i) | (1 << j)
        return v
    # row-add: entry i += entry j
    if (v >> j) & 1:
        v ^= 1 << i
    return v


# -- canonical serialization --------------------------------------------------

def serialize_matrix(m: BitMatrix) -> bytes:
    """Header (rows u16, cols u16, little-endian) + packed column words.

    Each column is ceil(rows/64) 64-bit little-endian words, low word first.
    """
    if m.rows > 0xFFFF or m.ncols > 0xFFFF:
        raise DimensionError("matrix too large for u16 header")
    nwords = (m.rows + 63) // 64
    out = [struct.pack("<HH", m.rows, m.ncols)]
    for c in m.cols:
        for w in range(nwords):
            out.append(struct.pack("<Q", (c >> (64 * w)) & 0xFFFFFFFFFFFFFFFF))
    return b"".join(out)


def deserialize_matrix(data: bytes) -> BitMatrix:
    rows, ncols = struct.unpack_from("<HH", data, 0)
    nwords = (rows + 63) // 64
    off = 4
    cols = []
    for _ in range(ncols):
        c = 0
        for w in range(nwords):
            (word,) = struct.unpack_from("<Q", data, off)
            c |= word << (64 * w)
            off += 8
        cols.append(c)
    return BitMatrix(rows, tuple(cols))
