"""Basepoint actions, the Khovanov module and the unlink-module test.

A basepoint ``p`` on edge ``e`` acts on the cube by multiplying the label
of the circle through ``e`` by ``X``.  On homology these give commuting
square-zero operators ``X_0, ..., X_{n-1}``, one per component.
"""

from __future__ import annotations

import itertools
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .f2linalg import BitMatrix, ChainComplexError, Echelon, iter_bits, lowbit, rank
from .khcube import (
    DEFAULT_MEMORY_CAP,
    KhChainComplex,
    KhHomology,
    ResourceLimitError,
    build_complex,
    homology,
    saddle,
)
from .linkdiag import Basepoint, PDCode, PDSemanticError, split_parts

Grading = tuple[int, int]


class BasepointError(ValueError):
    pass


# chain level


class _ActionBlocks(Mapping):
    def __init__(self, action: "BasepointAction"):
        self._a = action

    def __getitem__(self, key):
        C = self._a.complex
        if key not in C.sizes:
            raise KeyError(key)
        i, j = key
        tgt_key = (i, j - 2)
        lo, n_src = C.base[key], C.sizes[key]
        n_tgt = C.dim(tgt_key)
        if n_tgt == 0:
            return BitMatrix.zeros(0, n_src)
        img = self._a.image[lo:lo + n_src]
        hit = np.flatnonzero(img >= 0)
        t0 = C.base[tgt_key]
        return BitMatrix.from_entries(n_tgt, n_src, zip((img[hit] - t0).tolist(), hit.tolist()))

    def __iter__(self):
        return iter(self._a.complex.keys)

    def __len__(self):
        return len(self._a.complex.keys)


@dataclass
class BasepointAction:
    """The chain map x_p.  ``image[g]`` is the id that ``g`` maps to, or -1."""

    basepoint: Basepoint
    complex: KhChainComplex
    image: np.ndarray

    @property
    def matrix_per_block(self) -> Mapping:
        return _ActionBlocks(self)

    def apply(self, vec) -> set[int]:
        img = self.image
        out: set[int] = set()
        for g in vec:
            t = int(img[g])
            if t >= 0:
                out ^= {t}
        return out

    def sparse(self) -> sp.csr_matrix:
        n = self.complex.n_generators
        src = np.flatnonzero(self.image >= 0)
        return sp.csr_matrix((np.ones(len(src), dtype=np.int32), (self.image[src], src)), shape=(n, n))

    def matrix(self) -> BitMatrix:
        n = self.complex.n_generators
        src = np.flatnonzero(self.image >= 0)
        return BitMatrix.from_entries(n, n, zip(self.image[src].tolist(), src.tolist()))


def _resolve_basepoint(pd: PDCode, p: Basepoint | int) -> Basepoint:
    edge = p.edge if isinstance(p, Basepoint) else int(p)
    try:
        return pd.basepoint(edge)
    except PDSemanticError as exc:
        raise BasepointError(str(exc)) from None


def basepoint_map(pd: PDCode, p: Basepoint | int, C: KhChainComplex) -> BasepointAction:
    p = _resolve_basepoint(pd, p)
    image = np.full(C.n_generators, -1, dtype=np.int64)
    for s, diag in enumerate(C.diagrams):
        r = len(diag)
        bit = 1 << (r - 1 - diag.edge_to_circle[p.edge])
        ids = C.gid_array(s)
        masks = np.arange(2**r, dtype=np.int64)
        free = (masks & bit) == 0
        image[ids[free]] = ids[masks[free] | bit]
    return BasepointAction(p, C, image)


def sliding_homotopy(pd: PDCode, crossing: int, p: Basepoint | int, q: Basepoint | int,
                     C: KhChainComplex) -> BitMatrix:
    """Chain homotopy H with x_p + x_q = dH + Hd for basepoints on either
    side of ``crossing``.

    H vanishes on resolutions with a 0 at the crossing and is the saddle back
    to the 0-resolution on those with a 1.
    """
    src, tgt = _sliding_edges(pd, crossing, p, q, C)
    n = C.n_generators
    return BitMatrix.from_entries(n, n, zip(tgt.tolist(), src.tolist()))


def _sliding_edges(pd: PDCode, crossing: int, p, q, C: KhChainComplex) -> tuple[np.ndarray, np.ndarray]:
    p, q = _resolve_basepoint(pd, p), _resolve_basepoint(pd, q)
    if not 0 <= crossing < pd.n_crossings:
        raise BasepointError(f"no crossing {crossing}")
    if p.edge == q.edge:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    a, b, c, d = pd.crossings[crossing]
    if {p.edge, q.edge} not in ({a, c}, {b, d}):
        raise BasepointError(f"edges {p.edge} and {q.edge} are not separated by crossing {crossing}")
    bit = 1 << (pd.n_crossings - 1 - crossing)
    srcs, tgts = [], []
    for s in range(2**pd.n_crossings):
        if not s & bit:
            continue
        masks = np.arange(2 ** len(C.diagrams[s]), dtype=np.int64)
        pos, tgt_masks = saddle(C.diagrams[s], C.diagrams[s ^ bit], masks)
        srcs.append(C.gid_array(s)[pos])
        tgts.append(C.gid_array(s ^ bit)[tgt_masks])
    if not srcs:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return np.concatenate(srcs), np.concatenate(tgts)


def check_sliding_identity(pd: PDCode, crossing: int, p, q, C: KhChainComplex) -> bool:
    """Exact check of x_p + x_q = dH + Hd on the whole complex."""
    n = C.n_generators
    src, tgt = _sliding_edges(pd, crossing, p, q, C)
    H = sp.csr_matrix((np.ones(len(src), dtype=np.int32), (tgt, src)), shape=(n, n))
    D = C.sparse_matrix()
    lhs = basepoint_map(pd, p, C).sparse() + basepoint_map(pd, q, C).sparse()
    diff = (lhs + D @ H + H @ D).tocsr()
    diff.data &= 1
    diff.eliminate_zeros()
    return diff.nnz == 0


def check_action(action: BasepointAction) -> None:
    """x_p is a chain map that squares to zero."""
    C = action.complex
    X = action.sparse()
    D = C.sparse_matrix()
    comm = (D @ X + X @ D).tocsr()
    if np.any(comm.data & 1):
        raise ChainComplexError("basepoint action does not commute with d")
    img = action.image
    if np.any(img[img[img >= 0]] >= 0):
        raise ChainComplexError("basepoint action does not square to zero")


# modules over F[X_0..X_{n-1}]/(X_i^2)


@dataclass
class GradedModule:
    """A finite F2 vector space with a bigrading per basis vector and a
    family of commuting square-zero operators.

    ``labels[k]`` names the component that ``actions[k]`` belongs to.
    A module built as a tensor product keeps its ``factors``; rank tables
    are then computed from the factors, which is much cheaper.
    """

    gradings: list[Grading]
    actions: list[BitMatrix]
    labels: list[int]
    factors: list["GradedModule"] = field(default_factory=list, repr=False, compare=False, kw_only=True)

    @property
    def dim(self) -> int:
        return len(self.gradings)

    def ranks(self) -> dict[Grading, int]:
        out: dict[Grading, int] = {}
        for g in self.gradings:
            out[g] = out.get(g, 0) + 1
        return dict(sorted(out.items()))

    def action(self, component: int) -> BitMatrix:
        try:
            return self.actions[self.labels.index(component)]
        except ValueError:
            raise KeyError(f"no action for component {component}") from None

    def indices_at(self, g: Grading) -> list[int]:
        return [k for k, h in enumerate(self.gradings) if h == g]


@dataclass
class KhovanovModule(GradedModule):
    homology: KhHomology | None = None
    basepoints: list[Basepoint] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.basepoints)


@dataclass
class ReducedModule(GradedModule):
    homology: KhHomology | None = None
    p0: Basepoint | None = None
    basepoints: list[Basepoint] = field(default_factory=list)


def _induced_actions(H: KhHomology, actions: Sequence[BasepointAction]) -> tuple[list[Grading], list[BitMatrix]]:
    classes = H.classes()
    where = {c: k for k, c in enumerate(classes)}
    N = len(classes)
    mats = []
    for act in actions:
        cols = []
        for key, t in classes:
            img = act.apply(H.representative(key, t))
            v = 0
            for cls in H.coordinates(img, check=False):
                v ^= 1 << where[cls]
            cols.append(v)
        mats.append(BitMatrix.from_columns(N, cols))
    return [key for key, _ in classes], mats


def _basepoints_for(pd: PDCode, basepoints: Sequence[Basepoint | int] | None) -> list[Basepoint]:
    if basepoints is None:
        return pd.default_basepoints()
    bps = [_resolve_basepoint(pd, p) for p in basepoints]
    if len(bps) != pd.n_components:
        raise BasepointError(f"expected {pd.n_components} basepoints, got {len(bps)}")
    if sorted(p.component for p in bps) != list(range(pd.n_components)):
        raise BasepointError("need exactly one basepoint on each component")
    return sorted(bps, key=lambda p: p.component)


def induced_module(pd: PDCode, basepoints: Sequence[Basepoint | int] | None = None,
                   C: KhChainComplex | None = None, H: KhHomology | None = None,
                   memory_cap: int | None = DEFAULT_MEMORY_CAP, workers: int = 1) -> KhovanovModule:
    bps = _basepoints_for(pd, basepoints)
    C = build_complex(pd, memory_cap) if C is None else C
    H = homology(C, workers) if H is None else H
    gradings, mats = _induced_actions(H, [basepoint_map(pd, p, C) for p in bps])
    return KhovanovModule(gradings, mats, [p.component for p in bps], H, bps)


def reduced(pd: PDCode, p0: Basepoint | int | None = None, basepoints: Sequence[Basepoint | int] | None = None,
            C: KhChainComplex | None = None, M: KhovanovModule | None = None,
            memory_cap: int | None = DEFAULT_MEMORY_CAP, workers: int = 1, check: bool = True) -> ReducedModule:
    """Homology of the subcomplex ker x_{p0} with the remaining actions.

    With ``check`` the bigraded ranks are compared with those of the kernel
    of X_0 on the unreduced module.
    """
    bps = _basepoints_for(pd, basepoints)
    if p0 is not None:
        p0 = _resolve_basepoint(pd, p0)
        bps = [p0 if p.component == p0.component else p for p in bps]
    else:
        p0 = min(bps, key=lambda p: p.edge)
    C = build_complex(pd, memory_cap) if C is None else C
    x0 = basepoint_map(pd, p0, C)
    sub = x0.image < 0
    Hr = homology(C, workers, subset=sub)
    others = [p for p in bps if p.component != p0.component]
    gradings, mats = _induced_actions(Hr, [basepoint_map(pd, p, C) for p in others])
    R = ReducedModule(gradings, mats, [p.component for p in others], Hr, p0, bps)
    if check:
        M = induced_module(pd, bps, C, memory_cap=memory_cap, workers=workers) if M is None else M
        expected = kernel_ranks(M, p0.component)
        if expected != {k: v for k, v in R.ranks().items() if v}:
            raise ChainComplexError("reduced homology ranks differ from ker X_0 on Kh")
    return R


def tensor(M: GradedModule, N: GradedModule) -> GradedModule:
    """M (x) N with basis pairs (a, b) in lexicographic order."""
    m, n = M.dim, N.dim
    gradings = [(a[0] + b[0], a[1] + b[1]) for a in M.gradings for b in N.gradings]
    actions = []
    for A in M.actions:
        cols = []
        for x in range(m):
            rows = list(iter_bits(A.columns[x]))
            cols.extend(sum(1 << (r * n + y) for r in rows) for y in range(n))
        actions.append(BitMatrix.from_columns(m * n, cols))
    for B in N.actions:
        actions.append(BitMatrix.from_columns(m * n, [B.columns[y] << (x * n) for x in range(m) for y in range(n)]))
    return GradedModule(gradings, actions, list(M.labels) + list(N.labels))


def _globalize(M: GradedModule, part_bps: Sequence[Basepoint], emap: dict[int, int], pd: PDCode) -> GradedModule:
    comp = {p.component: pd.basepoint(emap[p.edge]).component for p in part_bps}
    return GradedModule(M.gradings, M.actions, [comp[c] for c in M.labels])


def _sorted_labels(M: GradedModule) -> tuple[list[BitMatrix], list[int]]:
    order = sorted(range(len(M.labels)), key=M.labels.__getitem__)
    return [M.actions[k] for k in order], [M.labels[k] for k in order]


def _local(bps: Sequence[Basepoint], emap: dict[int, int]) -> list[int]:
    inv = {g: e for e, g in emap.items()}
    return [inv[p.edge] for p in bps if p.edge in inv]


def _check_size(parts_dims: Sequence[int], n: int, memory_cap: int | None) -> None:
    dim = 1
    for d in parts_dims:
        dim *= d
    # n + 1 dense-ish F2 matrices of side dim, as python ints
    est = (n + 1) * dim * (dim // 8 + 64)
    if memory_cap is not None and est > memory_cap:
        raise ResourceLimitError(
            f"module of dimension {dim} needs about {est / 2**20:.0f} MiB, over the memory cap of {memory_cap / 2**20:.0f} MiB")


def _tensor_all(pieces: Sequence[GradedModule], n: int, memory_cap: int | None) -> tuple[GradedModule, list[BitMatrix], list[int]]:
    _check_size([P.dim for P in pieces], n, memory_cap)
    M = pieces[0]
    for P in pieces[1:]:
        M = tensor(M, P)
    actions, labels = _sorted_labels(M)
    return M, actions, labels


def khovanov_module(pd: PDCode, basepoints: Sequence[Basepoint | int] | None = None,
                    memory_cap: int | None = DEFAULT_MEMORY_CAP, workers: int = 1) -> KhovanovModule:
    """The Khovanov module, computed piece by piece on a split diagram.

    The cube complex of a split diagram is the tensor product of the cubes
    of its pieces, so the pieces' modules are tensored together.  The result
    carries no chain-level homology data when the diagram splits.
    """
    bps = _basepoints_for(pd, basepoints)
    parts = split_parts(pd)
    if len(parts) == 1:
        return induced_module(pd, bps, memory_cap=memory_cap, workers=workers)
    pieces = []
    for part, emap in parts:
        Mp = induced_module(part, _local(bps, emap), memory_cap=memory_cap, workers=workers)
        pieces.append(_globalize(Mp, Mp.basepoints, emap, pd))
    M, actions, labels = _tensor_all(pieces, len(bps), memory_cap)
    return KhovanovModule(M.gradings, actions, labels, None, bps, factors=pieces)


def reduced_module(pd: PDCode, p0: Basepoint | int | None = None,
                   basepoints: Sequence[Basepoint | int] | None = None,
                   memory_cap: int | None = DEFAULT_MEMORY_CAP, workers: int = 1) -> ReducedModule:
    """Reduced homology, piece by piece on a split diagram."""
    bps = _basepoints_for(pd, basepoints)
    if p0 is not None:
        p0 = _resolve_basepoint(pd, p0)
        bps = [p0 if p.component == p0.component else p for p in bps]
    else:
        p0 = min(bps, key=lambda p: p.edge)
    parts = split_parts(pd)
    if len(parts) == 1:
        return reduced(pd, p0, bps, memory_cap=memory_cap, workers=workers)
    pieces = []
    for part, emap in parts:
        local = _local(bps, emap)
        if p0.edge in emap.values():
            R = reduced(part, _local([p0], emap)[0], local, memory_cap=memory_cap, workers=workers)
            pieces.append(_globalize(R, R.basepoints, emap, pd))
        else:
            Mi = induced_module(part, local, memory_cap=memory_cap, workers=workers)
            pieces.append(_globalize(Mi, Mi.basepoints, emap, pd))
    M, actions, labels = _tensor_all(pieces, len(bps) - 1, memory_cap)
    return ReducedModule(M.gradings, actions, labels, None, p0, bps, factors=pieces)


def kernel_ranks(M: GradedModule, component: int) -> dict[Grading, int]:
    A = M.action(component)
    out = {}
    for g in sorted(set(M.gradings)):
        idx = M.indices_at(g)
        k = len(idx) - rank(A.submatrix(range(A.rows), idx))
        if k:
            out[g] = k
    return out


def _convolve(r1: dict, r2: dict) -> dict:
    out: dict = {}
    for (i1, j1), a in r1.items():
        for (i2, j2), b in r2.items():
            k = (i1 + i2, j1 + j2)
            out[k] = out.get(k, 0) + a * b
    return out


def action_homology(M: GradedModule, component: int) -> dict[Grading, int]:
    """Bigraded ranks of ker X_i / im X_i."""
    if M.factors:
        # X_i acts on one factor only: Kunneth over a field
        out = {(0, 0): 1}
        for P in M.factors:
            out = _convolve(out, action_homology(P, component) if component in P.labels else P.ranks())
        return {g: r for g, r in sorted(out.items()) if r}
    A = M.action(component)
    out = {}
    for g in sorted(set(M.gradings)):
        i, j = g
        here = M.indices_at(g)
        below = M.indices_at((i, j - 2))
        above = M.indices_at((i, j + 2))
        ker = len(here) - rank(A.submatrix(below, here)) if below else len(here)
        im = rank(A.submatrix(here, above)) if above else 0
        if ker - im:
            out[g] = ker - im
    return out


# the free cyclic test


@dataclass
class UnlinkVerdict:
    is_unlink_module: bool
    n: int
    generator_certificate: int | None = None
    failure_reason: str | None = None
    certificate_grading: Grading | None = None

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "is_unlink_module": self.is_unlink_module,
            "certificate": None if self.generator_certificate is None
            else list(iter_bits(self.generator_certificate)),
            "failure_reason": self.failure_reason,
        }


def monomial(actions: Sequence[BitMatrix], S: Sequence[int], dim: int) -> BitMatrix:
    out = BitMatrix.identity(dim)
    for k in S:
        out = actions[k] @ out
    return out


def free_cyclic(actions: Sequence[BitMatrix], dim: int) -> tuple[bool, int | None, str | None]:
    """Decide whether the module is free of rank one over F[X_0..X_{n-1}]/(X_i^2).

    Returns ``(verdict, v, reason)`` with ``v`` a generator as a bitset.
    """
    n = len(actions)
    if dim != 2**n:
        return False, None, "rank_mismatch"
    top = monomial(actions, range(n), dim)
    nonzero = [k for k, col in enumerate(top.columns) if col]
    if not nonzero:
        return False, None, "monomial_vanishes"
    v = 1 << nonzero[0]
    e = Echelon()
    for S in itertools.chain.from_iterable(itertools.combinations(range(n), k) for k in range(n + 1)):
        w = v
        for k in S:
            w = actions[k].apply(w)
        if not e.insert(w):
            raise ChainComplexError("monomial images are dependent: actions do not commute or square to zero")
    return True, v, None


def is_free_cyclic(M: GradedModule) -> UnlinkVerdict:
    ok, v, reason = free_cyclic(M.actions, M.dim)
    grading = M.gradings[lowbit(v)] if v is not None else None
    return UnlinkVerdict(ok, len(M.actions), v, reason, grading)


def detect_unlink(pd: PDCode, basepoints=None, memory_cap: int | None = DEFAULT_MEMORY_CAP,
                  workers: int = 1) -> UnlinkVerdict:
    return is_free_cyclic(khovanov_module(pd, basepoints, memory_cap=memory_cap, workers=workers))


# fingerprints


def monomial_ranks(M: GradedModule) -> dict[tuple[int, ...], dict[Grading, int]]:
    """For each subset S of actions, the rank of X_S out of each grading,
    with gradings relative to the lowest occupied (i, j)."""
    if not M.gradings:
        return {}
    if M.factors:
        return _monomial_ranks_of_factors(M)
    i0 = min(i for i, _ in M.gradings)
    j0 = min(j for _, j in M.gradings)
    n = len(M.actions)
    blocks = {g: M.indices_at(g) for g in sorted(set(M.gradings))}
    mono = {(): BitMatrix.identity(M.dim)}
    out = {}
    for size in range(n + 1):
        for S in itertools.combinations(range(n), size):
            if S:
                mono[S] = M.actions[S[-1]] @ mono[S[:-1]]
            A = mono[S]
            per = {}
            for (i, j), here in blocks.items():
                there = blocks.get((i, j - 2 * size))
                r = rank(A.submatrix(there, here)) if there else 0
                if r:
                    per[(i - i0, j - j0)] = r
            out[S] = per
        # only the previous size is needed to extend
        for S in [S for S in mono if len(S) < size]:
            del mono[S]
    return out


def _monomial_ranks_of_factors(M: GradedModule) -> dict[tuple[int, ...], dict[Grading, int]]:
    # X_S on a tensor product is the tensor of the factors' monomials, and
    # its rank out of each grading convolves; relative gradings add up
    pos = {c: k for k, c in enumerate(M.labels)}
    table: dict[frozenset, dict] = {frozenset(): {(0, 0): 1}}
    for P in M.factors:
        local = monomial_ranks(P)
        table = {S | frozenset(pos[P.labels[k]] for k in T): _convolve(per, r)
                 for S, per in table.items() for T, r in local.items()}
    n = len(M.labels)
    out = {}
    for size in range(n + 1):
        for S in itertools.combinations(range(n), size):
            out[S] = {g: r for g, r in sorted(table[frozenset(S)].items()) if r}
    return out


# exact minimisation over relabellings up to this many components
FINGERPRINT_MAX_PERMUTED = 7


def fingerprint(M: GradedModule) -> tuple:
    """Isomorphism invariant of the module: monomial ranks, minimised over
    relabellings of the components.

    Past ``FINGERPRINT_MAX_PERMUTED`` components the subsets are recorded by
    size only, which is still invariant but coarser.
    """
    ranks = monomial_ranks(M)
    n = len(M.actions)
    if n > FINGERPRINT_MAX_PERMUTED:
        return ("by_size",) + tuple(sorted((len(S), tuple(sorted(per.items()))) for S, per in ranks.items()))
    best = None
    for perm in itertools.permutations(range(n)):
        rows = []
        for S, per in ranks.items():
            rows.append((tuple(sorted(perm[k] for k in S)), tuple(sorted(per.items()))))
        key = tuple(sorted(rows))
        if best is None or key < best:
            best = key
    return best
