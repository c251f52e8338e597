"""Spectral sequences of filtered complexes by iterated cancellation.

A filtered complex has generators ``x_0..x_{n-1}`` with levels
``filt[x] >= 0`` and a differential that never lowers the level; ``d^(m)``
is the part raising the level by exactly ``m``.  Page ``r`` is obtained
from page ``r - 1`` by cancelling every pair ``(k, l)`` with
``filt[l] - filt[k] = r - 1``.  The chain maps produced by the
cancellations are logged, so the maps between the complex and any page,
and the morphisms of pages induced by a filtered map, are read off by
replay.

Matrices act on column vectors: ``d[y, x] = 1`` when ``y`` occurs in
``d(x)``.  The JSON form is
``{"gens": [{"id": .., "filt": ..}, ...], "d": [[0/1 ...], ...]}`` with
``d`` given row by row in that same orientation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

from .f2linalg import (
    BitMatrix,
    ChainComplexError,
    SparseComplex,
    iter_bits,
    kernel_basis,
    span_rank,
)
from .khcube import build_complex
from .linkdiag import PDCode


class FiltrationError(ValueError):
    pass


class CancellationError(ValueError):
    pass


@dataclass
class FilteredComplex:
    filt: list[int]
    d: BitMatrix
    ids: list = field(default_factory=list)
    gradings: list[tuple[int, int]] | None = None

    def __post_init__(self):
        n = len(self.filt)
        if self.d.shape != (n, n):
            raise FiltrationError(f"differential is {self.d.shape} for {n} generators")
        if any(f < 0 for f in self.filt):
            raise FiltrationError("filtration levels must be non-negative")
        if not self.ids:
            self.ids = list(range(n))

    @property
    def n(self) -> int:
        return len(self.filt)

    def validate(self) -> None:
        d = self.d
        for x, col in enumerate(d.columns):
            for y in iter_bits(col):
                if self.filt[y] < self.filt[x]:
                    raise FiltrationError(f"d({self.ids[x]}) lowers the filtration")
            if col and d.apply(col):
                raise ChainComplexError("d.d != 0")

    def component(self, m: int) -> BitMatrix:
        """d^(m): the part of d raising the level by exactly m."""
        f = self.filt
        return BitMatrix.from_entries(self.n, self.n, ((y, x) for x, col in enumerate(self.d.columns)
                                                       for y in iter_bits(col) if f[y] - f[x] == m))

    @property
    def levels(self) -> list[int]:
        return sorted(set(self.filt))

    def level_ranks(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for f in self.filt:
            out[f] = out.get(f, 0) + 1
        return dict(sorted(out.items()))

    # JSON

    def to_json(self) -> dict:
        return {"gens": [{"id": i, "filt": f} for i, f in zip(self.ids, self.filt)], "d": self.d.to_dense()}

    @classmethod
    def from_json(cls, data: dict | str) -> "FilteredComplex":
        if isinstance(data, str):
            data = json.loads(data)
        gens = data["gens"]
        rows = data["d"]
        n = len(gens)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise FiltrationError("d must be a square matrix matching the generator list")
        d = BitMatrix.from_dense(rows) if n else BitMatrix.zeros(0, 0)
        C = cls([int(g["filt"]) for g in gens], d, [g.get("id", k) for k, g in enumerate(gens)])
        C.validate()
        return C


@dataclass
class Transition:
    """Maps produced by one cancellation: f: C -> C', g: C' -> C, h: C -> C."""

    f: BitMatrix
    g: BitMatrix
    h: BitMatrix


def cancel_pair(C: FilteredComplex, k: int, l: int) -> tuple[FilteredComplex, Transition]:
    """Cancel ``x_k -> x_l``; returns the reduced complex and its maps."""
    if not (0 <= k < C.n and 0 <= l < C.n) or k == l or not C.d[l, k]:
        raise CancellationError(f"d(x_{k}) has no x_{l} component")
    low = min(C.filt[y] for y in iter_bits(C.d.columns[k]))
    if low < C.filt[l]:
        raise CancellationError(f"x_{l} is not of lowest filtration in d(x_{k})")
    keep = [x for x in range(C.n) if x not in (k, l)]
    pos = {x: t for t, x in enumerate(keep)}
    dk = C.d.columns[k]

    def project(v: int) -> int:
        out = 0
        for y in iter_bits(v):
            if y in pos:
                out |= 1 << pos[y]
        return out

    new_cols, g_cols = [], []
    for a in keep:
        da = C.d.columns[a]
        hit = (da >> l) & 1
        new_cols.append(project(da ^ (dk if hit else 0)))
        g_cols.append((1 << a) | ((1 << k) if hit else 0))
    f_cols = []
    for y in range(C.n):
        v = 1 << y
        if y == l:
            v ^= dk
        f_cols.append(project(v))
    m = len(keep)
    D = BitMatrix.from_columns(m, new_cols)
    h = BitMatrix.from_entries(C.n, C.n, [(k, l)])
    grads = [C.gradings[x] for x in keep] if C.gradings else None
    out = FilteredComplex([C.filt[x] for x in keep], D, [C.ids[x] for x in keep], grads)
    return out, Transition(BitMatrix.from_columns(m, f_cols), BitMatrix.from_columns(C.n, g_cols), h)


@dataclass
class Page:
    """Page ``r``: the complex E_r (surviving generators of the original
    complex, in index order) and its differential delta_r of degree r.

    ``start``/``stop`` delimit the cancellations that turn E_r into E_{r+1}.
    """

    r: int
    basis: list[int]
    filt: list[int]
    delta: BitMatrix
    start: int
    stop: int
    engine: "_Engine" = field(repr=False)

    @property
    def rank(self) -> int:
        return len(self.basis)

    def level_ranks(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for f in self.filt:
            out[f] = out.get(f, 0) + 1
        return dict(sorted(out.items()))

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(k, l) for k, l, _, _ in self.engine.S.steps[self.start:self.stop]]

    def to_page(self, vec) -> int:
        """Coordinates on this page of a set of surviving generator indices."""
        where = self.engine.where(self)
        out = 0
        for x in vec:
            out ^= 1 << where[x]
        return out

    @cached_property
    def F(self) -> BitMatrix:
        """Accumulated map C -> E_r."""
        S = self.engine.S
        return BitMatrix.from_columns(self.rank, [self.to_page(S.forward([x], self.start))
                                                  for x in range(self.engine.n)])

    @cached_property
    def G(self) -> BitMatrix:
        """Accumulated map E_r -> C."""
        S = self.engine.S
        cols = []
        for x in self.basis:
            cols.append(sum(1 << y for y in S.backward([x], self.start)))
        return BitMatrix.from_columns(self.engine.n, cols)

    @property
    def transition(self) -> tuple[BitMatrix, BitMatrix]:
        return self.F, self.G


class _Engine:
    def __init__(self, C: FilteredComplex):
        self.C = C
        self.n = C.n
        self.S = SparseComplex(C.n, [list(iter_bits(c)) for c in C.d.columns], track=True)
        self._where: dict[int, dict[int, int]] = {}

    def where(self, page: Page) -> dict[int, int]:
        if page.r not in self._where:
            self._where[page.r] = {x: t for t, x in enumerate(page.basis)}
        return self._where[page.r]

    def snapshot(self, r: int) -> tuple[list[int], BitMatrix]:
        f = self.C.filt
        basis = self.S.survivors()
        where = {x: t for t, x in enumerate(basis)}
        entries = [(where[y], where[x]) for x in basis for y in self.S.cols[x] if f[y] - f[x] == r]
        return basis, BitMatrix.from_entries(len(basis), len(basis), entries)

    def cancel_degree(self, r: int) -> None:
        """Cancel every pair of filtration shift exactly r, visiting sources
        by (level, index) and taking the smallest admissible target."""
        f = self.C.filt
        cols = self.S.cols
        order = sorted(range(self.n), key=lambda x: (f[x], x))
        busy = True
        while busy:
            busy = False
            for k in order:
                while True:
                    targets = [y for y in cols[k] if y != k and f[y] - f[k] == r]
                    if not targets:
                        break
                    self.S.cancel(k, min(targets))
                    busy = True

    def has_edges(self) -> bool:
        return any(self.S.cols[x] for x in range(self.n))


def pages(C: FilteredComplex, validate: bool = True) -> list[Page]:
    """All pages E_0, E_1, ... up to the first one with zero differential."""
    if validate:
        C.validate()
    eng = _Engine(C)
    out = []
    r = 0
    while True:
        basis, delta = eng.snapshot(r)
        start = len(eng.S.steps)
        if not eng.has_edges():
            out.append(Page(r, basis, [C.filt[x] for x in basis], delta, start, start, eng))
            return out
        eng.cancel_degree(r)
        out.append(Page(r, basis, [C.filt[x] for x in basis], delta, start, len(eng.S.steps), eng))
        r += 1


def page_ranks(ps: Sequence[Page]) -> list[dict[int, int]]:
    return [p.level_ranks() for p in ps]


def _cycles_to(C: FilteredComplex, lo: int, hi: int) -> list[int]:
    """{x in F^lo : dx in F^hi}, as bitsets over the generators."""
    f = C.filt
    gens = [x for x in range(C.n) if f[x] >= lo]
    low = [y for y in range(C.n) if f[y] < hi]
    if not low:
        return [1 << x for x in gens]
    out = []
    for v in kernel_basis(C.d.submatrix(low, gens)):
        w = 0
        for t in v.support():
            w |= 1 << gens[t]
        out.append(w)
    return out


def standard_page_oracle(C: FilteredComplex, r: int) -> dict[int, int]:
    """Ranks of E_r per level, as Z_r^p / (Z_{r-1}^{p+1} + d Z_{r-1}^{p-r+1})
    with Z_r^p = {x in F^p : dx in F^{p+r}}."""
    out = {}
    for p in C.levels:
        Z = _cycles_to(C, p, p + r)
        below = _cycles_to(C, p + 1, p + r)
        bd = [C.d.apply(z) for z in _cycles_to(C, max(p - r + 1, 0), p)]
        k = span_rank(Z) - span_rank(below + bd)
        if k:
            out[p] = k
    return out


@dataclass
class FilteredMap:
    a: BitMatrix
    source: FilteredComplex
    target: FilteredComplex

    def validate(self) -> None:
        S, T = self.source, self.target
        if self.a.shape != (T.n, S.n):
            raise FiltrationError(f"map is {self.a.shape}, expected {(T.n, S.n)}")
        if T.d @ self.a != self.a @ S.d:
            raise ChainComplexError("map does not commute with the differentials")
        for x, col in enumerate(self.a.columns):
            if any(T.filt[y] < S.filt[x] for y in iter_bits(col)):
                raise FiltrationError(f"map lowers the filtration of generator {S.ids[x]}")


def induce_morphism(a: FilteredMap, pages_src: Sequence[Page], pages_tgt: Sequence[Page],
                    validate: bool = True) -> list[BitMatrix]:
    """alpha_r: the degree-0 part of F'_r . a . G_r on every page."""
    if validate:
        a.validate()
    n_pages = max(len(pages_src), len(pages_tgt))
    out = []
    for r in range(n_pages):
        P = pages_src[min(r, len(pages_src) - 1)]
        Q = pages_tgt[min(r, len(pages_tgt) - 1)]
        fs, ft = a.source.filt, a.target.filt
        S, T = P.engine.S, Q.engine.S
        cols = []
        for x in P.basis:
            chain = S.backward([x], P.start)
            img = 0
            for y in chain:
                img ^= a.a.columns[y]
            on_page = T.forward(iter_bits(img), Q.start)
            cols.append(Q.to_page(y for y in on_page if ft[y] == fs[x]))
        out.append(BitMatrix.from_columns(Q.rank, cols))
    return out


def step_maps(P: Page, Q: Page) -> tuple[BitMatrix, BitMatrix]:
    """Degree-0 parts of the maps E_r -> E_{r+1} and E_{r+1} -> E_r given
    by the cancellations between consecutive pages."""
    S = P.engine.S
    f = P.engine.C.filt
    fwd = [Q.to_page(y for y in S.forward([x], Q.start) if f[y] == f[x]) for x in P.basis]
    bwd = [P.to_page(y for y in S.backward([x], Q.start, P.start) if f[y] == f[x]) for x in Q.basis]
    return BitMatrix.from_columns(Q.rank, fwd), BitMatrix.from_columns(P.rank, bwd)


@dataclass
class CollapseCertificate:
    page: int
    level: int | None
    rank: int


def collapse_check(ps: Sequence[Page]) -> CollapseCertificate | None:
    """First page concentrated in one level with vanishing delta, if any.

    From there on every delta_m shifts the level and so vanishes; the
    certificate asserts that the final page has the same rank.
    """
    for P in ps:
        levels = set(P.filt)
        if len(levels) <= 1 and P.delta.is_zero():
            later = ps[P.r:]
            if any(not Q.delta.is_zero() for Q in later) or later[-1].rank != P.rank:
                raise ChainComplexError("page concentrated in one level did not persist")
            return CollapseCertificate(P.r, next(iter(levels)) if levels else None, P.rank)
    return None


def khovanov_filtration(pd: PDCode, memory_cap: int | None = None) -> FilteredComplex:
    """The cube complex filtered by resolution weight |I|."""
    C = build_complex(pd, memory_cap)
    states, masks = C._decode
    n = C.n_generators
    filt = [bin(s).count("1") for s in states.tolist()]
    cols = [0] * n
    for x, y in zip(C.edge_src.tolist(), C.edge_tgt.tolist()):
        cols[x] ^= 1 << y
    grads = [C.key_of(g) for g in range(n)]
    return FilteredComplex(filt, BitMatrix.from_columns(n, cols), list(range(n)), grads)


def page_gradings(C: FilteredComplex, P: Page) -> dict[tuple[int, int], int]:
    """Bigraded ranks of a page of the Khovanov filtration."""
    out: dict[tuple[int, int], int] = {}
    for x in P.basis:
        g = C.gradings[x]
        out[g] = out.get(g, 0) + 1
    return dict(sorted(out.items()))


# synthetic complexes


def _filtered_automorphism(rng, filt: list[int], density: float = 0.3) -> tuple[BitMatrix, BitMatrix]:
    """A random filtered automorphism B and its inverse.  B is unitriangular
    for the order (level, index), so it never lowers the level."""
    n = len(filt)
    key = [(f, x) for x, f in enumerate(filt)]
    cols = [(1 << x) | sum(1 << y for y in range(n) if key[y] > key[x] and rng.random() < density)
            for x in range(n)]
    B = BitMatrix.from_columns(n, cols)
    inv = [0] * n
    # solve B v = e_x by back substitution along the triangular order
    order = sorted(range(n), key=lambda x: key[x])
    for x in range(n):
        target, v = 1 << x, 0
        for y in order:
            if (target >> y) & 1:
                v |= 1 << y
                target ^= cols[y]
        inv[x] = v
    return B, BitMatrix.from_columns(n, inv)


def _conjugate(rng, filt: list[int], pairs: list[tuple[int, int]]) -> FilteredComplex:
    n = len(filt)
    d0 = [0] * n
    for x, y in pairs:
        d0[x] = 1 << y
    B, Binv = _filtered_automorphism(rng, filt)
    return FilteredComplex(list(filt), B @ BitMatrix.from_columns(n, d0) @ Binv)


def random_filtered_complex(rng, n: int, levels: int, pair_prob: float = 0.7) -> FilteredComplex:
    """d = B d0 B^-1 with d0 a random matching of pairs that do not lower
    the level and B a random filtered automorphism."""
    filt = [rng.randrange(levels) for _ in range(n)]
    order = list(range(n))
    rng.shuffle(order)
    used: set[int] = set()
    pairs = []
    for x in order:
        if x in used:
            continue
        cands = [y for y in order if y not in used and y != x and filt[y] >= filt[x]]
        if cands and rng.random() < pair_prob:
            y = rng.choice(cands)
            pairs.append((x, y))
            used |= {x, y}
    return _conjugate(rng, filt, pairs)


def concentrated_complex(rng, n_pairs: int, n_free: int, level: int, levels: int) -> FilteredComplex:
    """Random complex whose homology sits at a single level."""
    filt, pairs = [], []
    for _ in range(n_pairs):
        a = rng.randrange(levels)
        b = rng.randrange(a, levels)
        pairs.append((len(filt), len(filt) + 1))
        filt += [a, b]
    filt += [level] * n_free
    return _conjugate(rng, filt, pairs)


def delta2_complex(rng, n_extra_pairs: int = 2) -> FilteredComplex:
    """Random complex with a surviving differential of order exactly 2:
    x at level 0, y at level 2, d x = y, and nothing else touching them
    at lower order."""
    filt = [0, 2]
    pairs = [(0, 1)]
    for _ in range(n_extra_pairs):
        a = rng.randrange(3)
        pairs.append((len(filt), len(filt) + 1))
        filt += [a, a]
    filt.append(1)
    return _conjugate(rng, filt, pairs)
