"""The cube of resolutions and the Khovanov chain complex over F2.

A generator is a pair ``(state, mask)``.  ``state`` is an int whose bit
``c - 1 - k`` is the resolution of crossing ``k``, so integer order is
lexicographic order of the resolution word.  ``mask`` has bit ``r - 1 - t``
set when circle ``t`` carries ``X`` (circles are ordered by lowest arc
label).  Within each (i, j) block generators are sorted by ``(state, mask)``.

Gradings: ``i = |I| - n_minus`` and
``j = (#ONE - #X) + |I| + n_plus - 2 n_minus``.

The differential is stored as sparse edge lists; per-block ``BitMatrix``
views are built on request.  Homology is computed by cancellation, one
quantum grading at a time, and keeps a replay log so that any cycle can be
expressed in the homology basis.
"""

from __future__ import annotations

import logging
import os
from collections.abc import Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np
import scipy.sparse as sp

from .f2linalg import BitMatrix, ChainComplexError, SparseComplex
from .linkdiag import PDCode, _UnionFind, crossing_signs

log = logging.getLogger(__name__)

ONE, X = 0, 1

DEFAULT_MEMORY_CAP = 2 * 1024**3
# peak bytes per generator during build + reduction, measured on 12-crossing
# diagrams with a safety margin
BYTES_PER_GENERATOR = 1500


class ResourceLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class ResolutionState:
    bits: tuple[int, ...]

    @property
    def weight(self) -> int:
        return sum(self.bits)

    @classmethod
    def from_int(cls, state: int, c: int) -> "ResolutionState":
        return cls(tuple((state >> (c - 1 - k)) & 1 for k in range(c)))

    def to_int(self) -> int:
        v = 0
        for b in self.bits:
            v = (v << 1) | b
        return v


@dataclass(frozen=True)
class CircleDiagram:
    circles: tuple[tuple[int, ...], ...]
    edge_to_circle: dict[int, int]

    def __len__(self):
        return len(self.circles)


@dataclass(frozen=True)
class Generator:
    resolution: ResolutionState
    labels: tuple[int, ...]

    @classmethod
    def from_ints(cls, state: int, mask: int, c: int, r: int) -> "Generator":
        return cls(ResolutionState.from_int(state, c), tuple((mask >> (r - 1 - t)) & 1 for t in range(r)))


def resolve(pd: PDCode, state: ResolutionState | int) -> CircleDiagram:
    """Circles of a complete resolution.

    The 0-resolution of ``X(a,b,c,d)`` joins a~b and c~d; the 1-resolution
    joins a~d and b~c.  Free loops come last.
    """
    c = pd.n_crossings
    if isinstance(state, ResolutionState):
        if len(state.bits) != c:
            raise ValueError(f"resolution has {len(state.bits)} bits for {c} crossings")
        state = state.to_int()
    uf = _UnionFind()
    for e in pd.edges:
        uf.find(e)
    for k, (a, b, cc, d) in enumerate(pd.crossings):
        if (state >> (c - 1 - k)) & 1:
            uf.union(a, d)
            uf.union(b, cc)
        else:
            uf.union(a, b)
            uf.union(cc, d)
    groups: dict[int, list[int]] = {}
    for e in pd.edges:
        groups.setdefault(uf.find(e), []).append(e)
    circles = sorted(groups.values(), key=min) + [[e] for e in pd.loop_labels]
    edge_to_circle = {e: t for t, circ in enumerate(circles) for e in circ}
    return CircleDiagram(tuple(tuple(x) for x in circles), edge_to_circle)


def merge_matrix() -> BitMatrix:
    """m : A (x) A -> A, with A (x) A ordered 11, 1X, X1, XX."""
    return BitMatrix.from_dense([[1, 0, 0, 0], [0, 1, 1, 0]])


def split_matrix() -> BitMatrix:
    """Delta : A -> A (x) A."""
    return BitMatrix.from_dense([[0, 0], [1, 0], [1, 0], [0, 1]])


def saddle(src: CircleDiagram, dst: CircleDiagram, masks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Elementary cobordism between resolutions differing at one crossing.

    Returns parallel arrays ``(k, target_mask)``: generator ``masks[k]`` maps
    to the sum of its target masks.  Merges apply ``m``, splits apply
    ``Delta``, other circles keep their labels.
    """
    r_src, r_dst = len(src), len(dst)
    mapped: dict[int, list[int]] = {}
    split = None
    for t, circ in enumerate(src.circles):
        targets = sorted({dst.edge_to_circle[e] for e in circ})
        if len(targets) == 2:
            split = (t, targets)
        else:
            mapped.setdefault(targets[0], []).append(t)
    base = np.zeros_like(masks)
    merge = None
    for u, ts in mapped.items():
        if len(ts) == 2:
            merge = (ts, u)
        else:
            base |= ((masks >> (r_src - 1 - ts[0])) & 1) << (r_dst - 1 - u)
    idx = np.arange(len(masks))
    if merge is not None:
        (ta, tb), u = merge
        la = (masks >> (r_src - 1 - ta)) & 1
        lb = (masks >> (r_src - 1 - tb)) & 1
        keep = (la & lb) == 0
        return idx[keep], (base | ((la | lb) << (r_dst - 1 - u)))[keep]
    if split is None:
        raise ValueError("resolutions do not differ by a saddle")
    t, (u, v) = split
    lab = (masks >> (r_src - 1 - t)) & 1
    bu, bv = 1 << (r_dst - 1 - u), 1 << (r_dst - 1 - v)
    xx = lab == 1
    return (np.concatenate([idx[xx], idx[~xx], idx[~xx]]),
            np.concatenate([base[xx] | bu | bv, base[~xx] | bv, base[~xx] | bu]))


def edge_map(pd: PDCode, src: ResolutionState, dst: ResolutionState) -> BitMatrix:
    """Matrix of the cube edge map C(src) -> C(dst), generators in mask order."""
    diff = [k for k, (a, b) in enumerate(zip(src.bits, dst.bits)) if a != b]
    if len(src.bits) != len(dst.bits) or len(diff) != 1 or src.bits[diff[0]] != 0:
        raise ValueError("destination is not an immediate successor")
    d0, d1 = resolve(pd, src), resolve(pd, dst)
    k, tgt = saddle(d0, d1, np.arange(2 ** len(d0), dtype=np.int64))
    return BitMatrix.from_entries(2 ** len(d1), 2 ** len(d0), zip(tgt.tolist(), k.tolist()))


_TABLES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _mask_tables(r: int) -> tuple[np.ndarray, np.ndarray]:
    """Popcount of every r-bit mask, and its rank among masks of that popcount."""
    if r not in _TABLES:
        pc = np.zeros(2**r, dtype=np.int64)
        masks = np.arange(2**r, dtype=np.int64)
        for t in range(r):
            pc += (masks >> t) & 1
        rank = np.zeros(2**r, dtype=np.int64)
        seen = [0] * (r + 1)
        for m, p in enumerate(pc.tolist()):
            rank[m] = seen[p]
            seen[p] += 1
        _TABLES[r] = (pc, rank)
    return _TABLES[r]


def _binomials(r: int) -> list[int]:
    row = [1]
    for k in range(r):
        row.append(row[-1] * (r - k) // (k + 1))
    return row


def estimate_generators(pd: PDCode) -> int:
    return sum(2 ** len(resolve(pd, s)) for s in range(2**pd.n_crossings))


class _Blocks(Mapping):
    """Read-only view (i, j) -> BitMatrix of the differential out of (i, j)."""

    def __init__(self, C: "KhChainComplex"):
        self._C = C

    def __getitem__(self, key):
        if key not in self._C.sizes:
            raise KeyError(key)
        return self._C.differential(key)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self._C.keys)

    def __len__(self):
        return len(self._C.keys)


class _Basis(Mapping):
    def __init__(self, C: "KhChainComplex"):
        self._C = C

    def __getitem__(self, key):
        C = self._C
        if key not in C.sizes:
            raise KeyError(key)
        lo = C.base[key]
        return [C.generator(g) for g in range(lo, lo + C.sizes[key])]

    def __iter__(self):
        return iter(self._C.keys)

    def __len__(self):
        return len(self._C.keys)


class KhChainComplex:
    """Bigraded Khovanov complex.

    Generators carry global ids: blocks are laid out contiguously in
    ``(j, i)`` order, so each quantum grading is an id interval.
    ``edge_src``/``edge_tgt`` list the nonzero entries of the differential
    sorted by source.
    """

    def __init__(self, pd: PDCode, diagrams: list[CircleDiagram], sizes: dict[tuple[int, int], int],
                 offsets: list[list[int]], edge_src: np.ndarray, edge_tgt: np.ndarray):
        self.pd = pd
        self.n_plus, self.n_minus = crossing_signs(pd)
        self.n_components = pd.n_components
        self.diagrams = diagrams
        self.sizes = sizes
        self.keys = sorted(sizes, key=lambda k: (k[1], k[0]))
        self.base: dict[tuple[int, int], int] = {}
        total = 0
        for key in self.keys:
            self.base[key] = total
            total += sizes[key]
        self.n_generators = total
        self._offsets = offsets
        self.edge_src = edge_src
        self.edge_tgt = edge_tgt
        self.basis = _Basis(self)
        self.blocks = _Blocks(self)

    @property
    def c(self) -> int:
        return self.pd.n_crossings

    @property
    def total_rank(self) -> int:
        return self.n_generators

    def dim(self, key: tuple[int, int]) -> int:
        return self.sizes.get(key, 0)

    @cached_property
    def _key_starts(self) -> np.ndarray:
        return np.array([self.base[k] for k in self.keys], dtype=np.int64)

    def key_of(self, g: int) -> tuple[int, int]:
        return self.keys[int(np.searchsorted(self._key_starts, g, side="right")) - 1]

    def grading(self, state: int, mask: int) -> tuple[int, int]:
        w = bin(state).count("1")
        r = len(self.diagrams[state])
        return (w - self.n_minus, r - 2 * bin(mask).count("1") + w + self.n_plus - 2 * self.n_minus)

    def gid(self, state: int, mask: int) -> int:
        """Global id of generator ``(state, mask)``."""
        r = len(self.diagrams[state])
        if not 0 <= mask < 2**r:
            raise ValueError(f"mask {mask} out of range for {r} circles")
        pc, rank = _mask_tables(r)
        p = int(pc[mask])
        return self.base[self.grading(state, mask)] + self._offsets[state][p] + int(rank[mask])

    def gid_array(self, state: int) -> np.ndarray:
        """Global ids of all masks of one state, indexed by mask."""
        r = len(self.diagrams[state])
        pc, rank = _mask_tables(r)
        w = bin(state).count("1")
        i = w - self.n_minus
        starts = np.array([self.base[(i, r - 2 * p + w + self.n_plus - 2 * self.n_minus)] + self._offsets[state][p]
                           for p in range(r + 1)], dtype=np.int64)
        return starts[pc] + rank

    @cached_property
    def _decode(self) -> tuple[np.ndarray, np.ndarray]:
        states = np.empty(self.n_generators, dtype=np.int64)
        masks = np.empty(self.n_generators, dtype=np.int64)
        for s, diag in enumerate(self.diagrams):
            ids = self.gid_array(s)
            states[ids] = s
            masks[ids] = np.arange(2 ** len(diag), dtype=np.int64)
        return states, masks

    def state_mask(self, g: int) -> tuple[int, int]:
        states, masks = self._decode
        return int(states[g]), int(masks[g])

    def generator(self, g: int) -> Generator:
        s, m = self.state_mask(g)
        return Generator.from_ints(s, m, self.c, len(self.diagrams[s]))

    def position(self, g: int) -> tuple[tuple[int, int], int]:
        key = self.key_of(g)
        return key, g - self.base[key]

    def _edge_slice(self, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = np.searchsorted(self.edge_src, [lo, hi])
        return self.edge_src[a:b], self.edge_tgt[a:b]

    def differential(self, key: tuple[int, int]) -> BitMatrix:
        """Block of the differential (i, j) -> (i + 1, j)."""
        i, j = key
        n_src = self.dim(key)
        n_tgt = self.dim((i + 1, j))
        if n_src == 0 or n_tgt == 0:
            return BitMatrix.zeros(n_tgt, n_src)
        lo = self.base[key]
        src, tgt = self._edge_slice(lo, lo + n_src)
        t0 = self.base[(i + 1, j)]
        return BitMatrix.from_entries(n_tgt, n_src, zip((tgt - t0).tolist(), (src - lo).tolist()))

    def d(self, vec: Iterable[int]) -> set[int]:
        """Differential of a chain given as a set of global ids."""
        out: set[int] = set()
        for g in vec:
            _, tgt = self._edge_slice(g, g + 1)
            for t in tgt.tolist():
                out ^= {t}
        return out

    def j_range(self, j: int) -> tuple[int, int]:
        ks = [k for k in self.keys if k[1] == j]
        return self.base[ks[0]], self.base[ks[-1]] + self.sizes[ks[-1]]

    @cached_property
    def j_values(self) -> list[int]:
        return sorted({j for _, j in self.keys})

    def sparse_matrix(self, lo: int = 0, hi: int | None = None) -> sp.csr_matrix:
        """The differential restricted to ids in [lo, hi) as an integer matrix."""
        hi = self.n_generators if hi is None else hi
        src, tgt = self._edge_slice(lo, hi)
        n = hi - lo
        return sp.csr_matrix((np.ones(len(src), dtype=np.int32), (tgt - lo, src - lo)), shape=(n, n))

    def check_d_squared(self) -> None:
        for j in self.j_values:
            lo, hi = self.j_range(j)
            D = self.sparse_matrix(lo, hi)
            if np.any((D @ D).data & 1):
                raise ChainComplexError(f"d.d != 0 in quantum grading {j}")


def build_complex(pd: PDCode, memory_cap: int | None = DEFAULT_MEMORY_CAP, check: bool = True) -> KhChainComplex:
    c = pd.n_crossings
    diagrams = [resolve(pd, s) for s in range(2**c)]
    if memory_cap is not None:
        est = sum(2 ** len(d) for d in diagrams) * BYTES_PER_GENERATOR
        if est > memory_cap:
            raise ResourceLimitError(
                f"estimated {est / 2**20:.0f} MiB exceeds the memory cap of {memory_cap / 2**20:.0f} MiB")
    n_plus, n_minus = crossing_signs(pd)
    sizes: dict[tuple[int, int], int] = {}
    offsets = []
    for s, diag in enumerate(diagrams):
        w = bin(s).count("1")
        r = len(diag)
        row = []
        for p, count in enumerate(_binomials(r)):
            key = (w - n_minus, r - 2 * p + w + n_plus - 2 * n_minus)
            row.append(sizes.get(key, 0))
            sizes[key] = sizes.get(key, 0) + count
        offsets.append(row)
    C = KhChainComplex(pd, diagrams, sizes, offsets, np.zeros(0, np.int64), np.zeros(0, np.int64))
    ids = [C.gid_array(s) for s in range(2**c)]
    srcs, tgts = [], []
    for s in range(2**c):
        masks = np.arange(2 ** len(diagrams[s]), dtype=np.int64)
        for k in range(c):
            bit = 1 << (c - 1 - k)
            if s & bit:
                continue
            pos, tgt_masks = saddle(diagrams[s], diagrams[s | bit], masks)
            srcs.append(ids[s][pos])
            tgts.append(ids[s | bit][tgt_masks])
    if srcs:
        src = np.concatenate(srcs)
        tgt = np.concatenate(tgts)
        order = np.lexsort((tgt, src))
        C.edge_src, C.edge_tgt = src[order], tgt[order]
    if check:
        C.check_d_squared()
    return C


def _reduce_slice(args) -> tuple[list[int], list]:
    n, src, tgt = args
    S = SparseComplex.from_edges(n, src.tolist(), tgt.tolist(), track=True)
    S.reduce()
    return S.survivors(), S.steps


@dataclass
class _Slice:
    """One quantum grading: local index ``x`` is global id ``ids[x]``."""

    ids: np.ndarray
    complex: SparseComplex

    def local(self, gs: Iterable[int]) -> list[int]:
        gs = np.fromiter(gs, dtype=np.int64)
        pos = np.searchsorted(self.ids, gs)
        if np.any(pos >= len(self.ids)) or np.any(self.ids[np.minimum(pos, len(self.ids) - 1)] != gs):
            raise ChainComplexError("vector leaves the complex")
        return pos.tolist()

    def glob(self, xs: Iterable[int]) -> list[int]:
        return self.ids[np.fromiter(xs, dtype=np.int64)].tolist()


class KhHomology:
    """Khovanov homology (of the complex or of a subcomplex) with a basis of
    classes in each bigrading.

    Classes are indexed by ``(key, t)``: the ``t``-th surviving generator of
    block ``key``.  ``representative`` returns a cycle and ``coordinates``
    writes a cycle in the class basis.
    """

    def __init__(self, C: KhChainComplex, slices: dict[int, _Slice], survivors: dict[int, list[int]]):
        self.complex = C
        self._slices = slices
        by_key: dict[tuple[int, int], list[int]] = {}
        for j, surv in survivors.items():
            for g in slices[j].glob(surv):
                by_key.setdefault(C.key_of(g), []).append(g)
        self._survivors = {k: sorted(v) for k, v in sorted(by_key.items())}
        self._index: dict[int, tuple[tuple[int, int], int]] = {}
        for key, gs in self._survivors.items():
            for t, g in enumerate(gs):
                self._index[g] = (key, t)
        self._reps: dict[tuple[tuple[int, int], int], frozenset[int]] = {}

    def ranks(self) -> dict[tuple[int, int], int]:
        return {k: len(v) for k, v in self._survivors.items()}

    def rank(self, key: tuple[int, int]) -> int:
        return len(self._survivors.get(key, ()))

    @property
    def total_rank(self) -> int:
        return sum(len(v) for v in self._survivors.values())

    def classes(self) -> list[tuple[tuple[int, int], int]]:
        return [(k, t) for k, v in self._survivors.items() for t in range(len(v))]

    def representative(self, key: tuple[int, int], t: int) -> frozenset[int]:
        """A cycle (set of global generator ids) representing class ``t`` at ``key``."""
        if (key, t) not in self._reps:
            sl = self._slices[key[1]]
            g = self._survivors[key][t]
            self._reps[(key, t)] = frozenset(sl.glob(sl.complex.backward(sl.local([g]))))
        return self._reps[(key, t)]

    def coordinates(self, vec: Iterable[int], check: bool = True) -> list[tuple[tuple[int, int], int]]:
        """Classes whose sum is the class of the cycle ``vec`` (global ids)."""
        vec = set(vec)
        if check and self.complex.d(vec):
            raise ChainComplexError("vector is not a cycle")
        by_j: dict[int, list[int]] = {}
        for g in vec:
            by_j.setdefault(self.complex.key_of(g)[1], []).append(g)
        out = []
        for j, gs in by_j.items():
            if j not in self._slices:
                raise ChainComplexError("vector leaves the complex")
            sl = self._slices[j]
            img = sl.complex.forward(sl.local(gs))
            out.extend(self._index[g] for g in sl.glob(img))
        return sorted(out)


def homology(C: KhChainComplex, workers: int = 1, subset: np.ndarray | None = None) -> KhHomology:
    """Homology of ``C``, or of the subcomplex spanned by the generators
    where the boolean array ``subset`` is true."""
    jobs, id_arrays, js = [], [], []
    for j in C.j_values:
        lo, hi = C.j_range(j)
        src, tgt = C._edge_slice(lo, hi)
        if subset is None:
            ids = np.arange(lo, hi, dtype=np.int64)
            jobs.append((hi - lo, src - lo, tgt - lo))
        else:
            ids = np.flatnonzero(subset[lo:hi]) + lo
            if len(ids) == 0:
                continue
            local = np.full(hi - lo, -1, dtype=np.int64)
            local[ids - lo] = np.arange(len(ids))
            keep = subset[src]
            lsrc, ltgt = local[src[keep] - lo], local[tgt[keep] - lo]
            if np.any(ltgt < 0):
                raise ChainComplexError("generator subset is not closed under the differential")
            jobs.append((len(ids), lsrc, ltgt))
        id_arrays.append(ids)
        js.append(j)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_reduce_slice, jobs))
    else:
        results = [_reduce_slice(job) for job in jobs]
    slices, survivors = {}, {}
    for j, ids, (n, _, _), (surv, steps) in zip(js, id_arrays, jobs, results):
        S = SparseComplex(0, track=True)
        S.n = n
        S.steps = steps
        S.step_of = {x: t for t, (k, l, _, _) in enumerate(steps) for x in (k, l)}
        S.release()
        slices[j] = _Slice(ids, S)
        survivors[j] = surv
    return KhHomology(C, slices, survivors)


def relative(ranks: dict[tuple[int, int], int]) -> dict[tuple[int, int], int]:
    """Shift bigraded ranks so the minimal occupied i and j are zero."""
    ranks = {k: v for k, v in ranks.items() if v}
    if not ranks:
        return {}
    i0 = min(i for i, _ in ranks)
    j0 = min(j for _, j in ranks)
    return {(i - i0, j - j0): v for (i, j), v in sorted(ranks.items())}


def default_workers() -> int:
    return os.cpu_count() or 1
