"""Property checks over a corpus of diagrams, shared by ``kh verify`` and the
acceptance tests."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .corpus import Corpus, CorpusEntry
from .f2linalg import BitMatrix, ChainComplexError, rank
from .khcube import KhChainComplex, build_complex, homology, relative
from .khmodule import (
    action_homology,
    basepoint_map,
    check_action,
    check_sliding_identity,
    fingerprint,
    induced_module,
    is_free_cyclic,
    reduced,
)
from .linkdiag import Basepoint, apply_move, disjoint_union
from .specseq import (
    FilteredMap,
    collapse_check,
    concentrated_complex,
    delta2_complex,
    induce_morphism,
    khovanov_filtration,
    page_gradings,
    pages,
    random_filtered_complex,
    standard_page_oracle,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    count: int = 0
    failures: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"check": self.name, "passed": self.passed, "count": self.count, "failures": self.failures}


class _Run:
    def __init__(self, name: str):
        self.result = CheckResult(name, True)

    def ok(self, cond: bool, what: str) -> None:
        self.result.count += 1
        if not cond:
            self.result.passed = False
            self.result.failures.append(what)


def corrupt(C: KhChainComplex) -> bool:
    """Drop one entry x -> y of the differential with d(y) != 0, which
    changes d(d(x)) by d(y) (negative control).  False if there is none."""
    has_out = np.zeros(C.n_generators, dtype=bool)
    has_out[C.edge_src] = True
    hits = np.nonzero(has_out[C.edge_tgt])[0]
    if not len(hits):
        return False
    keep = np.ones(len(C.edge_src), dtype=bool)
    keep[hits[len(hits) // 2]] = False
    C.edge_src, C.edge_tgt = C.edge_src[keep], C.edge_tgt[keep]
    return True


def check_dd(corpus: Corpus, do_corrupt: bool = False) -> CheckResult:
    run = _Run("dd")
    corrupted = False
    for e in corpus.diagrams:
        C = build_complex(e.pd, check=False)
        if do_corrupt and not corrupted:
            corrupted = corrupt(C)
        try:
            C.check_d_squared()
            good = True
        except ChainComplexError:
            good = False
        run.ok(good, e.name)
    return run.result


def check_actions(corpus: Corpus) -> CheckResult:
    """x_p is a square-zero chain map and any two basepoint maps commute."""
    run = _Run("actions")
    for e in corpus.diagrams:
        C = build_complex(e.pd)
        edges = list(e.pd.edges) + list(e.pd.loop_labels)
        acts = [basepoint_map(e.pd, p, C) for p in edges]
        for a in acts:
            try:
                check_action(a)
                good = True
            except ChainComplexError:
                good = False
            run.ok(good, f"{e.name} x_{a.basepoint.edge}")
        for a, b in itertools.combinations(acts, 2):
            ab = b.image[np.where(a.image >= 0, a.image, 0)]
            ab = np.where(a.image >= 0, ab, -1)
            ba = a.image[np.where(b.image >= 0, b.image, 0)]
            ba = np.where(b.image >= 0, ba, -1)
            run.ok(bool(np.array_equal(ab, ba)), f"{e.name} x_{a.basepoint.edge} x_{b.basepoint.edge}")
    return run.result


def check_sliding(corpus: Corpus) -> CheckResult:
    """x_p + x_q = dH + Hd across every crossing, for both strands."""
    run = _Run("sliding")
    for e in corpus.diagrams:
        C = build_complex(e.pd)
        for k, (a, b, c, d) in enumerate(e.pd.crossings):
            for p, q in ((a, c), (b, d)):
                run.ok(check_sliding_identity(e.pd, k, p, q, C), f"{e.name} crossing {k} edges {p},{q}")
    return run.result


def check_vanishing(corpus: Corpus) -> CheckResult:
    """Homology of Kh with respect to each X_i vanishes."""
    run = _Run("vanishing")
    for e in corpus.diagrams:
        M = induced_module(e.pd)
        for k in M.labels:
            run.ok(action_homology(M, k) == {}, f"{e.name} X_{k}")
    return run.result


def check_reduced(corpus: Corpus) -> CheckResult:
    """H(ker x_p0) has the bigraded ranks of ker X_0 on Kh."""
    run = _Run("reduced")
    for e in corpus.diagrams:
        C = build_complex(e.pd)
        M = induced_module(e.pd, C=C)
        try:
            reduced(e.pd, C=C, M=M, check=True)
            good = True
        except ChainComplexError:
            good = False
        run.ok(good, e.name)
    return run.result


def _summary(pd):
    M = induced_module(pd)
    return relative(M.ranks()), fingerprint(M), is_free_cyclic(M).is_unlink_module


def check_invariance(corpus: Corpus) -> CheckResult:
    run = _Run("invariance")
    for name, a, b, script in corpus.pairs:
        if script:
            run.ok(apply_move(a, script) == b, f"{name}: script does not reproduce the stored diagram")
        run.ok(_summary(a) == _summary(b), f"{name}: invariants differ")
    return run.result


def check_basepoints(corpus: Corpus) -> CheckResult:
    """Fingerprint and verdict do not depend on where on each component the
    basepoint sits."""
    run = _Run("basepoints")
    for e in corpus.diagrams:
        pd = e.pd
        C = build_complex(pd)
        H = homology(C)
        cm = pd.components()
        M0 = induced_module(pd, C=C, H=H)
        ref = (fingerprint(M0), is_free_cyclic(M0).is_unlink_module)
        for choice in (max, lambda es: sorted(es)[len(es) // 2]):
            bps = [Basepoint(choice(edges), k) for k, edges in enumerate(cm.component_edges)]
            M = induced_module(pd, bps, C=C, H=H)
            run.ok((fingerprint(M), is_free_cyclic(M).is_unlink_module) == ref, e.name)
    return run.result


def convolve(r1: dict, r2: dict) -> dict:
    out: dict = {}
    for (i1, j1), a in r1.items():
        for (i2, j2), b in r2.items():
            k = (i1 + i2, j1 + j2)
            out[k] = out.get(k, 0) + a * b
    return {k: v for k, v in sorted(out.items()) if v}


def check_kunneth(corpus: Corpus) -> CheckResult:
    run = _Run("kunneth")
    for a, b in corpus.unions:
        ra = homology(build_complex(a)).ranks()
        rb = homology(build_complex(b)).ranks()
        ru = homology(build_complex(disjoint_union(a, b))).ranks()
        run.ok(ru == convolve(ra, rb), f"{a} + {b}")
    return run.result


def check_specseq(n_instances: int = 100, seed: int = 11) -> CheckResult:
    """Engine pages against the classical page formula on random complexes."""
    run = _Run("specseq")
    rng = random.Random(seed)
    for t in range(n_instances):
        C = random_filtered_complex(rng, rng.randint(1, 20), rng.randint(1, 4))
        ps = pages(C)
        good = all(P.level_ranks() == standard_page_oracle(C, P.r) for P in ps)
        good &= ps[-1].level_ranks() == standard_page_oracle(C, len(ps))
        good &= ps[-1].rank == C.n - 2 * rank(C.d)
        run.ok(good, f"instance {t}")
    return run.result


def check_collapse(corpus: Corpus, seed: int = 5) -> CheckResult:
    run = _Run("collapse")
    rng = random.Random(seed)
    for e in corpus.diagrams:
        if e.pd.n_crossings == 0:
            ps = pages(khovanov_filtration(e.pd))
            cert = collapse_check(ps)
            run.ok(cert is not None and cert.rank == 2 ** e.pd.free_loops, e.name)
    for t in range(10):
        C = concentrated_complex(rng, rng.randint(1, 6), rng.randint(1, 4), rng.randrange(4), 4)
        ps = pages(C)
        cert = collapse_check(ps)
        run.ok(cert is not None and cert.rank == ps[-1].rank, f"concentrated {t}")
    for t in range(5):
        ps = pages(delta2_complex(rng, rng.randint(0, 4)))
        cert = collapse_check(ps)
        run.ok(not ps[2].delta.is_zero() and (cert is None or cert.page >= 3), f"delta2 {t}")
    return run.result


def check_morphism(corpus: Corpus) -> CheckResult:
    """The basepoint map pushed through the pages agrees with X_i on Kh."""
    run = _Run("morphism")
    for e in corpus.diagrams:
        pd = e.pd
        FC = khovanov_filtration(pd)
        ps = pages(FC)
        C = build_complex(pd)
        M = induced_module(pd, C=C)
        H = M.homology
        run.ok(page_gradings(FC, ps[min(2, len(ps) - 1)]) == H.ranks(), f"{e.name}: E_2 ranks")
        where = {c: k for k, c in enumerate(H.classes())}
        last = ps[-1]
        cols = []
        for x in last.basis:
            v = 0
            for c in H.coordinates(last.engine.S.backward([x], last.start)):
                v ^= 1 << where[c]
            cols.append(v)
        phi = BitMatrix.from_columns(M.dim, cols)
        for k, p in enumerate(M.basepoints):
            a = FilteredMap(basepoint_map(pd, p, C).matrix(), FC, FC)
            alpha = induce_morphism(a, ps, ps)
            run.ok(phi @ alpha[-1] == M.actions[k] @ phi, f"{e.name} X_{k}")
    return run.result


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "dd": check_dd,
    "actions": check_actions,
    "sliding": check_sliding,
    "vanishing": check_vanishing,
    "reduced": check_reduced,
    "invariance": check_invariance,
    "basepoints": check_basepoints,
    "kunneth": check_kunneth,
    "specseq": lambda corpus: check_specseq(),
    "collapse": check_collapse,
    "morphism": check_morphism,
}


def run_checks(corpus: Corpus, only: list[str] | None = None, corrupt: bool = False) -> list[CheckResult]:
    names = list(CHECKS) if not only else only
    out = []
    for name in names:
        if name not in CHECKS:
            raise KeyError(f"unknown check {name!r}; choose from {', '.join(CHECKS)}")
        if name == "dd":
            out.append(check_dd(corpus, corrupt))
        else:
            out.append(CHECKS[name](corpus))
    return out


def single(entry: CorpusEntry) -> Corpus:
    return Corpus([entry], [], [])
