import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from khmod.corpus import STANDARD, random_moves, standard, twisted_unknot
from khmod.f2linalg import BitMatrix, ChainComplexError
from khmod.khcube import (
    ResolutionState,
    ResourceLimitError,
    build_complex,
    edge_map,
    estimate_generators,
    homology,
    merge_matrix,
    relative,
    resolve,
    split_matrix,
)
from khmod.linkdiag import MoveError, disjoint_union, mirror, parse_pd
from khmod.verify import convolve, corrupt
from oracles import NaiveCube

HOPF = parse_pd("X(1,3,2,4) X(3,1,4,2)")


def state(bits):
    return ResolutionState(tuple(bits))


def test_resolution_state_weight():
    s = ResolutionState.from_int(0b1011, 4)
    assert s.bits == (1, 0, 1, 1) and s.weight == 3 and s.to_int() == 0b1011


def test_resolve_examples():
    assert len(resolve(parse_pd("U U"), state(()))) == 2
    assert [len(resolve(HOPF, state(b))) for b in ((0, 0), (1, 1), (0, 1), (1, 0))] == [2, 2, 1, 1]
    tw = twisted_unknot(1)
    assert sorted(len(resolve(tw, state((b,)))) for b in (0, 1)) == [1, 2]


def test_resolve_covers_every_arc():
    pd = standard("figure8")
    for s in range(16):
        D = resolve(pd, s)
        assert sorted(D.edge_to_circle) == list(pd.edges)
        assert sorted(e for c in D.circles for e in c) == list(pd.edges)


def test_frobenius_identities():
    m, delta = merge_matrix(), split_matrix()
    assert (m @ delta).is_zero()
    # X (x) 1 + 1 (x) X on A (x) A, basis 11, 1X, X1, XX
    x_left = BitMatrix.from_dense([[0, 0, 0, 0], [0, 0, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0]])
    x_right = BitMatrix.from_dense([[0, 0, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 1, 0]])
    assert delta @ m == x_left + x_right


def test_edge_map_merge_and_split():
    # Hopf: 00 has two circles, 01 one circle, so 00 -> 01 merges and 01 -> 11 splits
    M = edge_map(HOPF, state((0, 0)), state((0, 1)))
    assert M.shape == (2, 4)
    assert M.to_dense() == merge_matrix().to_dense()
    assert M.column(3).weight() == 0          # X (x) X -> 0
    S = edge_map(HOPF, state((0, 1)), state((1, 1)))
    assert S.shape == (4, 2)
    assert S.column(0).support() == [1, 2]    # 1 -> 1 (x) X + X (x) 1
    assert S.column(1).support() == [3]       # X -> X (x) X


def test_edge_map_rejects_non_successor():
    with pytest.raises(ValueError):
        edge_map(HOPF, state((0, 0)), state((1, 1)))
    with pytest.raises(ValueError):
        edge_map(HOPF, state((1, 0)), state((0, 0)))


def test_unknot_complex():
    C = build_complex(parse_pd("U"))
    assert C.n_generators == 2 and sorted(C.keys) == [(0, -1), (0, 1)]
    assert len(C.edge_src) == 0


def test_unlink_complex():
    C = build_complex(parse_pd("U U"))
    assert sorted(C.key_of(g)[1] for g in range(C.n_generators)) == [-2, 0, 0, 2]
    assert len(C.edge_src) == 0


def test_hopf_complex_and_homology():
    C = build_complex(HOPF)
    per_level = {}
    for g in range(C.n_generators):
        s, _ = C.state_mask(g)
        w = bin(s).count("1")
        per_level[w] = per_level.get(w, 0) + 1
    assert per_level == {0: 4, 1: 4, 2: 4}
    H = homology(C)
    assert H.total_rank == 4
    assert relative(H.ranks()) == {(0, 0): 1, (0, 2): 1, (2, 4): 1, (2, 6): 1}


def test_unknot_homology():
    H = homology(build_complex(parse_pd("U")))
    assert relative(H.ranks()) == {(0, 0): 1, (0, 2): 1}


@pytest.mark.parametrize("name", sorted(STANDARD))
def test_against_naive_cube(name):
    pd = standard(name)
    assert homology(build_complex(pd)).ranks() == NaiveCube.of(pd).ranks()


@pytest.mark.parametrize("name", ["hopf", "trefoil", "figure8"])
def test_mirror_against_naive_cube(name):
    pd = mirror(standard(name))
    assert homology(build_complex(pd)).ranks() == NaiveCube.of(pd).ranks()


def test_full_differential_matches_naive_matrix():
    # same diagram, two independent encodings: compare d as a matrix after
    # translating generators through (state, labels)
    pd = standard("trefoil")
    C = build_complex(pd)
    N = NaiveCube.of(pd)
    perm = []
    for g in range(C.n_generators):
        s, mask = C.state_mask(g)
        gen = C.generator(g)
        naive_state = sum(b << k for k, b in enumerate(gen.resolution.bits))
        perm.append(N.index[(naive_state, gen.labels)])
    D = C.sparse_matrix().toarray() % 2
    Dn = N.d[np.ix_(perm, perm)]
    assert np.array_equal(D.astype(np.uint8), Dn)


def test_blocks_shift_gradings():
    pd = standard("figure8")
    C = build_complex(pd)
    for x, y in zip(C.edge_src.tolist(), C.edge_tgt.tolist()):
        (i, j), (i2, j2) = C.key_of(x), C.key_of(y)
        assert (i2, j2) == (i + 1, j)
    for key in C.keys:
        dk = C.differential(key)
        assert dk.cols == C.dim(key) and dk.rows == C.dim((key[0] + 1, key[1]))


def test_gradings_formula():
    pd = standard("trefoil")
    C = build_complex(pd)
    for g in range(C.n_generators):
        gen = C.generator(g)
        w = gen.resolution.weight
        x = sum(gen.labels)
        r = len(gen.labels)
        assert C.key_of(g) == (w - C.n_minus, (r - 2 * x) + w + C.n_plus - 2 * C.n_minus)


def test_d_squared_zero_on_corpus(corpus):
    for e in corpus.diagrams:
        build_complex(e.pd).check_d_squared()


def test_d_squared_detects_corruption():
    C = build_complex(standard("figure8"), check=False)
    assert corrupt(C)
    with pytest.raises(ChainComplexError):
        C.check_d_squared()


def test_representatives_are_cycles_and_coordinates_invert():
    C = build_complex(standard("figure8"))
    H = homology(C)
    for n, (key, t) in enumerate(H.classes()):
        rep = H.representative(key, t)
        assert not C.d(rep)
        assert H.coordinates(rep) == [(key, t)]
    # a boundary has zero coordinates
    g = next(iter(range(C.n_generators)))
    assert H.coordinates(C.d([g])) == []


def test_coordinates_reject_non_cycles():
    C = build_complex(standard("trefoil"))
    H = homology(C)
    g = next(x for x in range(C.n_generators) if C.d([x]))
    with pytest.raises(ChainComplexError):
        H.coordinates([g])


def test_workers_do_not_change_results():
    C = build_complex(standard("torus5"))
    a, b = homology(C, workers=1), homology(C, workers=2)
    assert a.ranks() == b.ranks()
    assert [a.representative(*k) for k in a.classes()] == [b.representative(*k) for k in b.classes()]


def test_memory_cap():
    pd = standard("torus5")
    with pytest.raises(ResourceLimitError):
        build_complex(pd, memory_cap=1000)
    assert estimate_generators(pd) == build_complex(pd).n_generators


def test_kunneth_on_small_pairs():
    for a, b in [("hopf", "trefoil"), ("unknot", "figure8"), ("trefoil", "trefoil")]:
        pa, pb = standard(a), standard(b)
        u = homology(build_complex(disjoint_union(pa, pb))).ranks()
        assert u == convolve(homology(build_complex(pa)).ranks(), homology(build_complex(pb)).ranks())


@given(st.sampled_from(["unknot", "hopf", "trefoil", "unlink2"]), st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_random_diagrams_against_naive_cube(name, seed, n):
    try:
        pd, _ = random_moves(standard(name), n, random.Random(seed))
    except MoveError:
        return
    if pd.n_crossings > 6:
        return
    H = homology(build_complex(pd))
    assert H.ranks() == NaiveCube.of(pd).ranks()
    assert relative(H.ranks()) == relative(homology(build_complex(standard(name))).ranks())
