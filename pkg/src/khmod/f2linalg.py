"""Exact linear algebra over GF(2) on bit-packed vectors.

Vectors are stored as Python integers used as bitsets: bit ``k`` of the
integer is coordinate ``k``.  Addition is XOR, so every operation here is
exact.  Elimination always pivots on the lowest set bit, which keeps
echelon forms (and hence homology representatives) reproducible.
"""

from __future__ import annotations

import bisect
import heapq
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class ChainComplexError(ValueError):
    """A composable pair of maps does not compose to zero."""


def lowbit(v: int) -> int:
    """Index of the lowest set bit of a nonzero vector."""
    return (v & -v).bit_length() - 1


def iter_bits(v: int) -> Iterator[int]:
    while v:
        low = v & -v
        yield low.bit_length() - 1
        v ^= low


def popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class BitVector:
    length: int
    bits: int = 0

    def __post_init__(self):
        if self.length < 0:
            raise DimensionError("negative length")
        if self.bits < 0 or self.bits >> self.length:
            raise DimensionError("bits set beyond the vector length")

    @classmethod
    def from_list(cls, values: Sequence[int]) -> "BitVector":
        bits = 0
        for k, x in enumerate(values):
            if x & 1:
                bits |= 1 << k
        return cls(len(values), bits)

    @classmethod
    def unit(cls, length: int, k: int) -> "BitVector":
        return cls(length, 1 << k)

    def to_list(self) -> list[int]:
        return [(self.bits >> k) & 1 for k in range(self.length)]

    def support(self) -> list[int]:
        return list(iter_bits(self.bits))

    def __getitem__(self, k: int) -> int:
        if not 0 <= k < self.length:
            raise IndexError(k)
        return (self.bits >> k) & 1

    def __add__(self, other: "BitVector") -> "BitVector":
        if other.length != self.length:
            raise DimensionError("length mismatch")
        return BitVector(self.length, self.bits ^ other.bits)

    def __bool__(self) -> bool:
        return self.bits != 0

    def weight(self) -> int:
        return popcount(self.bits)


class BitMatrix:
    """Immutable ``rows x cols`` matrix over GF(2).

    Each row is an int bitset over the columns.  The transpose is cached on
    first use, since matrix-vector products and image computations are
    column oriented.
    """

    __slots__ = ("rows", "cols", "row_data", "_columns")

    def __init__(self, rows: int, cols: int, row_data: Sequence[int] | None = None):
        if rows < 0 or cols < 0:
            raise DimensionError("negative shape")
        data = tuple(row_data) if row_data is not None else (0,) * rows
        if len(data) != rows:
            raise DimensionError(f"expected {rows} rows, got {len(data)}")
        for r in data:
            if r < 0 or r >> cols:
                raise DimensionError("row has bits beyond the column count")
        self.rows = rows
        self.cols = cols
        self.row_data = data
        self._columns = None

    # construction

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, [1 << k for k in range(n)])

    @classmethod
    def from_columns(cls, rows: int, columns: Sequence[int]) -> "BitMatrix":
        cols = len(columns)
        row_data = [0] * rows
        for j, col in enumerate(columns):
            bit = 1 << j
            for i in iter_bits(col):
                row_data[i] |= bit
        m = cls(rows, cols, row_data)
        m._columns = tuple(columns)
        return m

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries: Iterable[tuple[int, int]]) -> "BitMatrix":
        """Build from (row, col) pairs; repeated pairs cancel mod 2."""
        row_data = [0] * rows
        for i, j in entries:
            row_data[i] ^= 1 << j
        return cls(rows, cols, row_data)

    @classmethod
    def from_dense(cls, dense) -> "BitMatrix":
        dense = [list(r) for r in dense]
        rows = len(dense)
        cols = len(dense[0]) if rows else 0
        return cls(rows, cols, [BitVector.from_list(r).bits for r in dense])

    def to_dense(self) -> list[list[int]]:
        return [[(r >> j) & 1 for j in range(self.cols)] for r in self.row_data]

    # access

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def columns(self) -> tuple[int, ...]:
        if self._columns is None:
            cols = [0] * self.cols
            for i, r in enumerate(self.row_data):
                bit = 1 << i
                for j in iter_bits(r):
                    cols[j] |= bit
            self._columns = tuple(cols)
        return self._columns

    def row(self, i: int) -> BitVector:
        return BitVector(self.cols, self.row_data[i])

    def column(self, j: int) -> BitVector:
        return BitVector(self.rows, self.columns[j])

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return (self.row_data[i] >> j) & 1

    def nnz(self) -> int:
        return sum(popcount(r) for r in self.row_data)

    def is_zero(self) -> bool:
        return not any(self.row_data)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and self.row_data == other.row_data

    def __hash__(self):
        return hash((self.rows, self.cols, self.row_data))

    def __repr__(self):
        return f"BitMatrix({self.rows}x{self.cols}, nnz={self.nnz()})"

    # arithmetic

    @property
    def T(self) -> "BitMatrix":
        return BitMatrix.from_columns(self.cols, self.row_data)

    def __add__(self, other: "BitMatrix") -> "BitMatrix":
        if self.shape != other.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape}")
        return BitMatrix(self.rows, self.cols, [a ^ b for a, b in zip(self.row_data, other.row_data)])

    def apply(self, v: int) -> int:
        """Product with a raw bitset vector of length ``cols``."""
        cols = self.columns
        out = 0
        for j in iter_bits(v):
            out ^= cols[j]
        return out

    def __matmul__(self, other):
        if isinstance(other, BitVector):
            if other.length != self.cols:
                raise DimensionError(f"cannot apply {self.shape} matrix to vector of length {other.length}")
            return BitVector(self.rows, self.apply(other.bits))
        if isinstance(other, BitMatrix):
            if other.rows != self.cols:
                raise DimensionError(f"cannot compose {self.shape} with {other.shape}")
            return BitMatrix.from_columns(self.rows, [self.apply(c) for c in other.columns])
        return NotImplemented

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "BitMatrix":
        cols = list(cols)
        out = []
        for i in rows:
            r = self.row_data[i]
            packed = 0
            for k, j in enumerate(cols):
                if (r >> j) & 1:
                    packed |= 1 << k
            out.append(packed)
        return BitMatrix(len(out), len(cols), out)


class Echelon:
    """Incremental row-echelon basis keyed by lowest set bit.

    Each stored vector may carry a ``tag`` bitset recording which inserted
    vectors it is a combination of; reductions accumulate tags so callers
    can read off coordinates.
    """

    __slots__ = ("pivots",)

    def __init__(self):
        self.pivots: dict[int, tuple[int, int]] = {}

    def __len__(self):
        return len(self.pivots)

    def reduce(self, v: int, tag: int = 0) -> tuple[int, int]:
        pivots = self.pivots
        while v:
            p = lowbit(v)
            hit = pivots.get(p)
            if hit is None:
                break
            v ^= hit[0]
            tag ^= hit[1]
        return v, tag

    def insert(self, v: int, tag: int = 0) -> bool:
        """Add ``v``; return False if it was already in the span."""
        v, tag = self.reduce(v, tag)
        if not v:
            return False
        self.pivots[lowbit(v)] = (v, tag)
        return True

    def contains(self, v: int) -> bool:
        return self.reduce(v)[0] == 0


@dataclass
class _ColumnReduction:
    reduced: list[int]
    combos: list[int]
    pivot_cols: list[int] = field(default_factory=list)


def _reduce_columns(m: BitMatrix) -> _ColumnReduction:
    # Persistence-style column reduction: combos[j] records which original
    # columns were summed into reduced[j].
    owner: dict[int, int] = {}
    reduced, combos, pivot_cols = [], [], []
    for j, col in enumerate(m.columns):
        combo = 1 << j
        while col:
            p = lowbit(col)
            k = owner.get(p)
            if k is None:
                owner[p] = j
                pivot_cols.append(j)
                break
            col ^= reduced[k]
            combo ^= combos[k]
        reduced.append(col)
        combos.append(combo)
    return _ColumnReduction(reduced, combos, pivot_cols)


def rank(m: BitMatrix) -> int:
    e = Echelon()
    return sum(1 for r in m.row_data if e.insert(r))


def kernel_basis(m: BitMatrix) -> list[BitVector]:
    red = _reduce_columns(m)
    return [BitVector(m.cols, c) for col, c in zip(red.reduced, red.combos) if not col]


def image_basis(m: BitMatrix) -> list[BitVector]:
    """Independent columns of ``m`` spanning its column space."""
    red = _reduce_columns(m)
    return [BitVector(m.rows, m.columns[j]) for j in red.pivot_cols]


def solve(m: BitMatrix, b: BitVector) -> BitVector | None:
    """Return some ``v`` with ``m @ v == b``, or None if inconsistent."""
    if b.length != m.rows:
        raise DimensionError(f"right-hand side has length {b.length}, matrix has {m.rows} rows")
    e = Echelon()
    for j, col in enumerate(m.columns):
        e.insert(col, 1 << j)
    rest, combo = e.reduce(b.bits)
    if rest:
        return None
    return BitVector(m.cols, combo)


@dataclass
class Homology:
    """Homology of ``A --d_in--> B --d_out--> C`` at ``B``.

    ``representatives`` are cycles whose classes form a basis.
    ``coordinates`` expresses any cycle in that basis.
    """

    dim: int
    representatives: list[int]
    _echelon: Echelon

    @property
    def rank(self) -> int:
        return len(self.representatives)

    def coordinates(self, z: int) -> int:
        rest, tag = self._echelon.reduce(z)
        if rest:
            raise ChainComplexError("vector is not a cycle")
        return tag

    def is_boundary(self, z: int) -> bool:
        rest, tag = self._echelon.reduce(z)
        return rest == 0 and tag == 0


def check_composable(d_in: BitMatrix, d_out: BitMatrix) -> None:
    if d_in.rows != d_out.cols:
        raise DimensionError(f"d_in is {d_in.shape} but d_out is {d_out.shape}")
    for c in d_in.columns:
        if c and d_out.apply(c):
            raise ChainComplexError("d_out . d_in != 0")


def homology(d_in: BitMatrix, d_out: BitMatrix, check: bool = True) -> Homology:
    if check:
        check_composable(d_in, d_out)
    elif d_in.rows != d_out.cols:
        raise DimensionError(f"d_in is {d_in.shape} but d_out is {d_out.shape}")
    e = Echelon()
    for c in d_in.columns:
        e.insert(c)
    reps = []
    for z in kernel_basis(d_out):
        v, tag = e.reduce(z.bits)
        if v:
            # v = z + (boundaries) + (earlier reps named by tag)
            e.pivots[lowbit(v)] = (v, tag ^ (1 << len(reps)))
            reps.append(z.bits)
    return Homology(d_out.cols, reps, e)


class SparseComplex:
    """A chain complex over GF(2) held as adjacency sets and simplified by
    cancelling pairs.

    ``cols[x]`` is the set of generators in ``d(x)`` and ``rows[y]`` the set
    of generators whose differential contains ``y``.  Cancelling ``(k, l)``
    with ``l in d(x_k)`` replaces the complex by the homotopy equivalent one

        d'(a) = pi(d(a) + d(a)_l d(x_k))

    on the remaining generators.  With ``track=True`` every cancellation is
    logged, and the chain maps ``f`` (old -> new) and ``g`` (new -> old)
    composed over any prefix of the log can be evaluated by replay.
    """

    def __init__(self, n: int, columns: Iterable[Iterable[int]] = (), track: bool = False):
        self.n = n
        self.cols: list[set[int]] = [set() for _ in range(n)]
        self.rows: list[set[int]] = [set() for _ in range(n)]
        for x, col in enumerate(columns):
            self.cols[x] = set(col)
        for x, col in enumerate(self.cols):
            for y in col:
                self.rows[y].add(x)
        self.alive = [True] * n
        self.track = track
        self.steps: list[tuple[int, int, tuple[int, ...], tuple[int, ...]]] = []
        self.step_of: dict[int, int] = {}
        self._row_index: dict[int, list[int]] | None = None

    @classmethod
    def from_edges(cls, n: int, src: Iterable[int], tgt: Iterable[int], track: bool = False) -> "SparseComplex":
        """Build from parallel source/target lists; repeated edges cancel."""
        c = cls(n, track=track)
        cols, rows = c.cols, c.rows
        for x, y in zip(src, tgt):
            if y in cols[x]:
                cols[x].discard(y)
                rows[y].discard(x)
            else:
                cols[x].add(y)
                rows[y].add(x)
        return c

    def survivors(self) -> list[int]:
        return [x for x in range(self.n) if self.alive[x]]

    def edge_count(self) -> int:
        return sum(len(c) for c in self.cols)

    def _drop(self, x: int) -> None:
        cols, rows = self.cols, self.rows
        for y in cols[x]:
            rows[y].discard(x)
        for a in rows[x]:
            cols[a].discard(x)
        cols[x] = set()
        rows[x] = set()
        self.alive[x] = False

    def cancel(self, k: int, l: int) -> None:
        cols, rows = self.cols, self.rows
        if k == l or l not in cols[k]:
            raise ValueError(f"d({k}) has no {l} component")
        colk = tuple(y for y in cols[k] if y != l and y != k)
        rowl = tuple(a for a in rows[l] if a != k and a != l)
        if self.track:
            t = len(self.steps)
            self.steps.append((k, l, colk, rowl))
            self.step_of[k] = t
            self.step_of[l] = t
            self._row_index = None
        self._drop(k)
        self._drop(l)
        for a in rowl:
            ca = cols[a]
            for y in colk:
                if y in ca:
                    ca.discard(y)
                    rows[y].discard(a)
                else:
                    ca.add(y)
                    rows[y].add(a)

    def reduce(self, order: Iterable[int] | None = None) -> None:
        """Cancel until the differential vanishes.

        Sources are visited in ``order``; the target with the fewest other
        incoming edges is chosen to limit fill-in.
        """
        order = list(range(self.n)) if order is None else list(order)
        cols, rows = self.cols, self.rows
        busy = True
        while busy:
            busy = False
            for k in order:
                col = cols[k]
                if col and (len(col) > 1 or k not in col):
                    l = min((y for y in col if y != k), key=lambda y: (len(rows[y]), y))
                    self.cancel(k, l)
                    busy = True

    def release(self) -> None:
        """Free the adjacency sets once the differential is no longer needed."""
        self.cols = self.rows = None

    # replay of the logged maps

    def forward(self, y: Iterable[int], upto: int | None = None) -> set[int]:
        """Image of ``y`` under f composed over the first ``upto`` steps."""
        upto = len(self.steps) if upto is None else upto
        steps, step_of = self.steps, self.step_of
        out = set()
        for b in y:
            out ^= {b}
        heap = [(step_of[b], b) for b in out if step_of.get(b, upto) < upto]
        heapq.heapify(heap)
        while heap:
            t, b = heapq.heappop(heap)
            if b not in out:
                continue
            k, l, colk, _ = steps[t]
            if b == l:
                out.discard(l)
                for c in colk:
                    if c in out:
                        out.discard(c)
                    else:
                        out.add(c)
                        s = step_of.get(c, upto)
                        if s < upto:
                            heapq.heappush(heap, (s, c))
            out.discard(k)
        return out

    def _rows_by_generator(self) -> dict[int, list[int]]:
        if self._row_index is None:
            index: dict[int, list[int]] = {}
            for t, (_, _, _, rowl) in enumerate(self.steps):
                for a in rowl:
                    index.setdefault(a, []).append(t)
            self._row_index = index
        return self._row_index

    def backward(self, v: Iterable[int], upto: int | None = None, start: int = 0) -> set[int]:
        """Image of ``v`` (alive after ``upto`` steps) under g composed back to step ``start``."""
        upto = len(self.steps) if upto is None else upto
        steps = self.steps
        index = self._rows_by_generator()
        out = set()
        for b in v:
            out ^= {b}
        heap: list[int] = []

        def push(b: int, bound: int) -> None:
            ts = index.get(b)
            if ts:
                for t in ts[bisect.bisect_left(ts, start):bisect.bisect_left(ts, bound)]:
                    heapq.heappush(heap, -t)

        for b in out:
            push(b, upto)
        last = upto
        while heap:
            t = -heapq.heappop(heap)
            if t >= last:
                continue
            last = t
            k, _, _, rowl = steps[t]
            if sum(1 for a in rowl if a in out) & 1:
                out.add(k)
                push(k, t)
        return out


def homology_rank(d_in: BitMatrix, d_out: BitMatrix) -> int:
    """Rank of ``ker(d_out) / im(d_in)``."""
    check_composable(d_in, d_out)
    return (d_out.cols - rank(d_out)) - rank(d_in)


def span_rank(vectors: Iterable[int]) -> int:
    e = Echelon()
    return sum(1 for v in vectors if e.insert(v))
