"""The acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are collected and repeated in the pytest terminal summary.
"""

import json
import random
import subprocess
import sys
import time
from contextlib import contextmanager

from khmod.cli import compute_report
from khmod.corpus import braid_closure, scrambled_unknot, standard, twisted_unknot
from khmod.f2linalg import BitMatrix
from khmod.khcube import relative
from khmod.khmodule import (
    action_homology,
    detect_unlink,
    free_cyclic,
    is_free_cyclic,
    khovanov_module,
    reduced_module,
)
from khmod.linkdiag import R1, apply_move, disjoint_union, format_pd, parse_pd
from khmod.specseq import collapse_check, concentrated_complex, delta2_complex, khovanov_filtration, pages
from khmod.verify import (
    check_sliding,
    check_invariance,
    check_kunneth,
    check_morphism,
    check_specseq,
    check_vanishing,
)
from oracles import brute_force_free_cyclic, commuting_square_zero_pairs, random_module

RESULTS: list[str] = []


@contextmanager
def criterion(n: int, title: str):
    t0 = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        line = f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {title} ({time.perf_counter() - t0:.2f} s)"
        RESULTS.append(line)
        print(line)


def total(ranks: dict) -> int:
    return sum(ranks.values())


def test_01_unknot_baselines():
    with criterion(1, "unknot baselines"):
        t0 = time.perf_counter()
        diagrams = [parse_pd("U"), twisted_unknot(1), twisted_unknot(-1), scrambled_unknot()]
        assert [d.n_crossings for d in diagrams] == [0, 1, 1, 3]
        for pd in diagrams:
            M = khovanov_module(pd)
            js = [j for _, j in M.gradings]
            assert M.dim == 2 and max(js) - min(js) == 2
            assert detect_unlink(pd).is_unlink_module
        assert time.perf_counter() - t0 < 1.0


UNLINK_PANEL = {(0, 0): 1, (0, 2): 2, (0, 4): 1}
HOPF_PANEL = {(0, 0): 1, (0, 2): 1, (2, 4): 1, (2, 6): 1}


def test_02_unlink_versus_hopf():
    with criterion(2, "unlink vs Hopf golden data"):
        t0 = time.perf_counter()
        U = khovanov_module(standard("unlink2"))
        assert U.dim == 4 and relative(U.ranks()) == UNLINK_PANEL
        v = is_free_cyclic(U)
        assert v.is_unlink_module and v.n == 2
        assert U.actions[0] != U.actions[1]
        R = reduced_module(standard("unlink2"))
        (k,) = R.labels
        assert R.dim == 2 and total(action_homology(R, k)) == 0
        assert time.perf_counter() - t0 < 1.0

        t0 = time.perf_counter()
        H = khovanov_module(standard("hopf"))
        assert H.dim == 4 and relative(H.ranks()) == HOPF_PANEL
        assert H.actions[0] == H.actions[1]
        v = is_free_cyclic(H)
        assert not v.is_unlink_module
        R = reduced_module(standard("hopf"))
        (k,) = R.labels
        assert R.action(k).is_zero()
        assert relative(R.ranks()) == {(0, 0): 1, (2, 4): 1}
        assert total(action_homology(R, k)) == 2
        assert time.perf_counter() - t0 < 1.0


def test_03_sliding_identity(corpus):
    with criterion(3, "x_p + x_q = dH + Hd across every crossing"):
        names = {e.name for e in corpus.diagrams}
        assert {"twist+", "twist-", "hopf", "trefoil", "figure8", "torus5"} <= names
        assert sum(n.startswith("variant") for n in names) == 20
        res = check_sliding(corpus)
        assert res.count == 2 * sum(e.pd.n_crossings for e in corpus.diagrams)
        assert res.passed, res.failures


def test_04_action_homology_vanishes(corpus):
    with criterion(4, "H(Kh, X_i) = 0"):
        res = check_vanishing(corpus)
        assert res.count == sum(max(e.pd.n_components, 1) for e in corpus.diagrams)
        assert res.passed, res.failures


def test_05_invariance(corpus):
    with criterion(5, "invariance over move pairs"):
        assert len(corpus.pairs) == 25
        assert all(b.n_components <= 7 for _, _, b, _ in corpus.pairs)  # exact fingerprints
        res = check_invariance(corpus)
        assert res.passed, res.failures


def test_06_kunneth(corpus):
    with criterion(6, "Kunneth ranks for disjoint unions"):
        assert len(corpus.unions) == 10
        res = check_kunneth(corpus)
        assert res.count == 10 and res.passed, res.failures


def test_07_spectral_sequence_oracle():
    with criterion(7, "pages against the page oracle"):
        t0 = time.perf_counter()
        res = check_specseq(100)
        assert res.count == 100 and res.passed, res.failures
        assert time.perf_counter() - t0 < 10.0


def test_08_collapse():
    with criterion(8, "collapse certificates"):
        ps = pages(khovanov_filtration(parse_pd("U U")))
        cert = collapse_check(ps)
        assert cert is not None and cert.rank == 4
        rng = random.Random(8)
        for _ in range(10):
            level = rng.randrange(4)
            ps = pages(concentrated_complex(rng, rng.randint(1, 6), rng.randint(1, 4), level, 4))
            cert = collapse_check(ps)
            assert cert is not None and cert.rank == ps[-1].rank
        for _ in range(5):
            ps = pages(delta2_complex(rng, rng.randint(0, 4)))
            assert not ps[2].delta.is_zero()
            cert = collapse_check(ps)
            assert cert is None or cert.page >= 3


def test_09_morphism_consistency(corpus):
    with criterion(9, "induced morphisms match X_i"):
        res = check_morphism(corpus)
        assert res.passed, res.failures


def _verdict(A, B, dim):
    acts = [BitMatrix.from_dense(A), BitMatrix.from_dense(B)]
    return free_cyclic(acts, dim)[0]


def test_10_free_cyclic_oracle():
    with criterion(10, "free-cyclic verdicts against brute force"):
        seen = {}
        free = 0
        for dim in range(1, 5):
            for A, B in commuting_square_zero_pairs(dim):
                got = _verdict(A, B, dim)
                assert got == brute_force_free_cyclic([A, B], dim), (dim, A, B)
                seen[dim] = seen.get(dim, 0) + 1
                free += got
        assert seen == {1: 1, 2: 10, 3: 148, 4: 10816}
        assert free > 0
        rng = random.Random(10)
        for _ in range(200):
            (A, B), dim = random_module(rng, 8)
            assert _verdict(A, B, dim) == brute_force_free_cyclic([A, B], dim)


# performance

def _chain(n: int):
    # closure of s_1^2 s_2^2 ... : n rings, each linked with the next
    return braid_closure([k for k in range(1, n) for _ in range(2)], n)


def _kinks(n: int):
    pd = parse_pd("U")
    for _ in range(n):
        pd = apply_move(pd, [R1(1, 1)])
    return pd


def _union(pd, n):
    out = pd
    for _ in range(n - 1):
        out = disjoint_union(out, pd)
    return out


ENVELOPE = {
    "torus(2,12)": lambda: braid_closure([1] * 12, 2),
    "kinked unknot": lambda: _kinks(12),
    "braid 3": lambda: braid_closure([1, -2] * 6, 3),
    "braid 4": lambda: braid_closure([1, -2, 3] * 4, 4),
    "chain of 7": lambda: _chain(7),
    "6 hopf": lambda: _union(standard("hopf"), 6),
    "4 trefoils": lambda: _union(standard("trefoil"), 4),
    "12 circles": lambda: parse_pd(" ".join(["U"] * 12)),
    "torus(2,12) + 4 circles": lambda: disjoint_union(braid_closure([1] * 12, 2), parse_pd("U U U U")),
}

MEASURE = """
import resource, subprocess, sys, time
t = time.perf_counter()
p = subprocess.run([sys.executable, "-m", "khmod.cli", "compute", sys.argv[1], "--format", "json", "--threads", "1"],
                   capture_output=True, text=True)
dt = time.perf_counter() - t
print(p.returncode, dt, resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss)
sys.stdout.write(p.stdout)
"""

GiB = 1024**3


def test_11_performance(tmp_path):
    with criterion(11, "performance envelope"):
        t0 = time.perf_counter()
        for name in ("hopf", "trefoil"):
            rep = compute_report(standard(name), with_reduced=True)
            assert rep["total_rank"] == {"hopf": 4, "trefoil": 6}[name]
        assert time.perf_counter() - t0 < 1.0

        for name, make in ENVELOPE.items():
            pd = make()
            assert pd.n_crossings <= 12, name
            f = tmp_path / f"{name.replace(' ', '_')}.pd"
            f.write_text(format_pd(pd) + "\n")
            p = subprocess.run([sys.executable, "-c", MEASURE, str(f)], capture_output=True, text=True)
            head, _, body = p.stdout.partition("\n")
            code, secs, kib = head.split()
            line = f"  {name}: {float(secs):.1f} s, {int(kib) / 1024:.0f} MiB"
            RESULTS.append(line)
            print(line)
            assert int(code) == 0, p.stderr
            assert float(secs) < 60 and int(kib) * 1024 < GiB, line
            assert json.loads(body)["total_rank"] > 0

