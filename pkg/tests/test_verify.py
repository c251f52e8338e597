import pytest

from khmod.corpus import base_diagrams, corpus as generated, load_corpus, move_pairs, union_pairs
from khmod.linkdiag import apply_move, format_pd
from khmod.verify import CHECKS, check_dd, convolve, run_checks, single


def test_corpus_shape(corpus):
    assert len(corpus.diagrams) == 35
    assert len(corpus.pairs) == 25
    assert len(corpus.unions) == 10
    assert max(e.pd.n_crossings for e in corpus.diagrams) <= 8


def test_stored_corpus_matches_generators(corpus):
    # the on-disk files are what the generators produce
    assert sorted(format_pd(e.pd) for e in corpus.diagrams) == sorted(format_pd(e.pd) for e in generated())
    for (n1, a1, b1, s1), (n2, a2, b2, s2) in zip(corpus.pairs, move_pairs()):
        assert (n1, a1, b1, s1) == (n2, a2, b2, s2)
    assert corpus.unions == union_pairs()


def test_pair_scripts_replay(corpus):
    for name, a, b, script in corpus.pairs:
        assert script and apply_move(a, script) == b


def test_pairs_cover_every_move_kind(corpus):
    kinds = {type(m).__name__ for _, _, _, s in corpus.pairs for m in s}
    assert {"R1", "R2", "R3"} <= kinds


def test_base_diagrams_present(corpus):
    names = {e.name for e in corpus.diagrams}
    assert {e.name for e in base_diagrams()} <= names


@pytest.mark.parametrize("name", list(CHECKS))
def test_check_passes(corpus, name):
    (res,) = run_checks(corpus, [name])
    assert res.passed, res.failures[:5]
    assert res.count > 0


def test_corrupt_control_fails(corpus):
    res = check_dd(corpus, do_corrupt=True)
    assert not res.passed and len(res.failures) == 1


def test_unknown_check(corpus):
    with pytest.raises(KeyError):
        run_checks(corpus, ["bogus"])


def test_single(corpus):
    sub = single(corpus.diagrams[0])
    assert len(sub.diagrams) == 1 and not sub.pairs and not sub.unions


def test_convolve():
    assert convolve({(0, 1): 1, (0, -1): 1}, {(0, 1): 1, (0, -1): 1}) == {(0, -2): 1, (0, 0): 2, (0, 2): 1}
    assert convolve({}, {(0, 0): 1}) == {}


def test_load_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_corpus(tmp_path)
