"""Named diagrams and the scripted invariance corpus.

Everything here is deterministic: the move scripts are written out by hand
or generated by a seeded ``random.Random``, so the corpus is reproducible.
"""

from __future__ import annotations

import json
import random
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from .linkdiag import (
    R1,
    R2,
    R3,
    MoveError,
    R1Inverse,
    R2Inverse,
    PDCode,
    _finish,
    _Work,
    apply_move,
    faces,
    format_pd,
    mirror,
    parse_pd,
)

STANDARD = {
    "unknot": "U",
    "unlink2": "U U",
    "unlink3": "U U U",
    "hopf": "X(1,3,2,4) X(3,1,4,2)",
    "trefoil": "X(1,4,2,5) X(3,6,4,1) X(5,2,6,3)",
    "figure8": "X(4,2,5,1) X(8,6,1,5) X(6,3,7,4) X(2,7,3,8)",
    "torus5": "X(1,6,2,7) X(3,8,4,9) X(5,10,6,1) X(7,2,8,3) X(9,4,10,5)",
    "solomon": "X(6,1,7,2) X(8,3,5,4) X(2,5,3,6) X(4,7,1,8)",
}


def standard(name: str) -> PDCode:
    return parse_pd(STANDARD[name])


def braid_closure(word: Sequence[int], strands: int) -> PDCode:
    """Closure of a braid word; ``k`` is sigma_k (1-based), ``-k`` its inverse.

    Strands that no generator touches close up into free loops.
    """
    labels = list(range(1, strands + 1))
    fresh = strands + 1
    crossings, over_db = [], []
    for g in word:
        k = abs(g) - 1
        if not 0 <= k < strands - 1:
            raise ValueError(f"generator {g} out of range for {strands} strands")
        a, b = labels[k], labels[k + 1]
        c, d = fresh, fresh + 1
        fresh += 2
        # a, b enter at the bottom; c, d leave at the top; a runs to d
        if g > 0:
            crossings.append([b, d, c, a])
            over_db.append(False)
        else:
            crossings.append([a, b, d, c])
            over_db.append(True)
        labels[k], labels[k + 1] = c, d
    close = {end: start for start, end in zip(range(1, strands + 1), labels) if end != start}
    loops = sum(1 for start, end in zip(range(1, strands + 1), labels) if end == start)
    crossings = [[close.get(e, e) for e in x] for x in crossings]
    return _finish(_Work(crossings, over_db, [0] * loops), relabel=True)


def twisted_unknot(sign: int = 1, over_first: bool = False) -> PDCode:
    return apply_move(parse_pd("U"), [R1(1, sign, over_first)])


def random_moves(pd: PDCode, n_moves: int, rng: random.Random, kinds: str = "123") -> tuple[PDCode, list]:
    """Apply ``n_moves`` randomly chosen valid moves; return the result and the script."""
    script = []
    tries = 0
    while len(script) < n_moves:
        tries += 1
        if tries > 200 * (n_moves + 1):
            raise MoveError("could not find enough applicable moves")
        kind = rng.choice(kinds)
        edges = list(pd.edges) + list(pd.loop_labels)
        try:
            if kind == "1":
                mv = R1(rng.choice(edges), rng.choice((1, -1)), rng.random() < 0.5)
            elif kind == "2":
                e1, e2 = rng.choice(edges), rng.choice(edges)
                if e1 == e2:
                    continue
                mv = R2(e1, e2, rng.random() < 0.5)
            else:
                fs = [k for k, f in enumerate(faces(pd)) if len(f) == 3]
                if not fs:
                    continue
                mv = R3(rng.choice(fs))
            new = apply_move(pd, [mv])
        except MoveError:
            continue
        pd = new
        script.append(mv)
    return pd, script


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    pd: PDCode


def base_diagrams() -> list[CorpusEntry]:
    out = [CorpusEntry(k, standard(k)) for k in STANDARD]
    out.append(CorpusEntry("twist+", twisted_unknot(1)))
    out.append(CorpusEntry("twist-", twisted_unknot(-1)))
    out.append(CorpusEntry("twist+o", twisted_unknot(1, True)))
    out.append(CorpusEntry("mirror_trefoil", mirror(standard("trefoil"))))
    out.append(CorpusEntry("mirror_hopf", mirror(standard("hopf"))))
    return out


def scrambled_unknot() -> PDCode:
    """A 3-crossing diagram of the unknot built from one R1 and one R2."""
    pd = apply_move(parse_pd("U"), [R1(1, 1)])
    return apply_move(pd, [R2(1, 2, True)])


def scrambled_unlink2() -> PDCode:
    """A 6-crossing diagram of the 2-component unlink."""
    pd = apply_move(parse_pd("U U"), [R2(1, 2, True)])
    pd = apply_move(pd, [R2(1, 3, False)])
    return apply_move(pd, [R2(2, 5, True)])


def variants(count: int = 20, seed: int = 2024, max_crossings: int = 7) -> list[CorpusEntry]:
    """Script-generated diagrams obtained from the standard ones by moves."""
    rng = random.Random(seed)
    sources = [standard(k) for k in ("unknot", "unlink2", "hopf", "trefoil", "figure8")]
    out = []
    while len(out) < count:
        src = rng.choice(sources)
        budget = max_crossings - src.n_crossings
        if budget < 1:
            continue
        n = rng.randint(1, min(3, budget))
        try:
            pd, _ = random_moves(src, n, rng)
        except MoveError:
            continue
        if pd.n_crossings > max_crossings:
            continue
        out.append(CorpusEntry(f"variant{len(out):02d}", pd))
    return out


def corpus() -> list[CorpusEntry]:
    return base_diagrams() + [
        CorpusEntry("scrambled_unknot", scrambled_unknot()),
        CorpusEntry("scrambled_unlink2", scrambled_unlink2()),
    ] + variants()


def move_pairs(count: int = 25, seed: int = 7, max_crossings: int = 8, kinds: str = "1223333") -> list[tuple[str, PDCode, PDCode, list]]:
    """Pairs (D, D') where D' is D after a random move script."""
    rng = random.Random(seed)
    sources = base_diagrams()
    out = []
    while len(out) < count:
        entry = sources[len(out) % len(sources)]
        budget = max_crossings - entry.pd.n_crossings
        if budget < 1:
            entry = sources[0]
            budget = max_crossings
        try:
            pd2, script = random_moves(entry.pd, rng.randint(1, min(4, budget)), rng, kinds)
        except MoveError:
            continue
        if pd2.n_crossings > max_crossings:
            continue
        out.append((entry.name, entry.pd, pd2, script))
    return out


def union_pairs() -> list[tuple[PDCode, PDCode]]:
    names = [("unknot", "unknot"), ("unknot", "hopf"), ("hopf", "hopf"), ("trefoil", "unknot"),
             ("trefoil", "hopf"), ("figure8", "unknot"), ("trefoil", "trefoil"), ("solomon", "unknot"),
             ("figure8", "hopf"), ("torus5", "unknot")]
    return [(standard(a), standard(b)) for a, b in names]


# on-disk corpus: diagrams/*.pd, pairs.json, unions.json

_MOVES = {cls.__name__: cls for cls in (R1, R1Inverse, R2, R2Inverse, R3)}

DEFAULT_DIR = Path(__file__).parent / "data" / "corpus"


def move_to_json(mv) -> dict:
    return {"move": type(mv).__name__, **asdict(mv)}


def move_from_json(data: dict):
    data = dict(data)
    return _MOVES[data.pop("move")](**data)


def write_corpus(directory: Path) -> None:
    directory = Path(directory)
    (directory / "diagrams").mkdir(parents=True, exist_ok=True)
    for entry in corpus():
        (directory / "diagrams" / f"{entry.name}.pd").write_text(format_pd(entry.pd) + "\n")
    pairs = [{"name": name, "before": format_pd(a), "after": format_pd(b),
              "script": [move_to_json(m) for m in script]} for name, a, b, script in move_pairs()]
    (directory / "pairs.json").write_text(json.dumps(pairs, indent=1) + "\n")
    unions = [[format_pd(a), format_pd(b)] for a, b in union_pairs()]
    (directory / "unions.json").write_text(json.dumps(unions, indent=1) + "\n")


@dataclass
class Corpus:
    diagrams: list[CorpusEntry]
    pairs: list[tuple[str, PDCode, PDCode, list]]
    unions: list[tuple[PDCode, PDCode]]


def load_corpus(directory: Path | None = None) -> Corpus:
    directory = DEFAULT_DIR if directory is None else Path(directory)
    if not (directory / "diagrams").is_dir():
        raise FileNotFoundError(f"no corpus at {directory}")
    diagrams = [CorpusEntry(p.stem, parse_pd(p.read_text()))
                for p in sorted((directory / "diagrams").glob("*.pd"))]
    pairs = []
    if (directory / "pairs.json").exists():
        for item in json.loads((directory / "pairs.json").read_text()):
            script = [move_from_json(m) for m in item.get("script", [])]
            pairs.append((item["name"], parse_pd(item["before"]), parse_pd(item["after"]), script))
    unions = []
    if (directory / "unions.json").exists():
        unions = [(parse_pd(a), parse_pd(b)) for a, b in json.loads((directory / "unions.json").read_text())]
    return Corpus(diagrams, pairs, unions)


if __name__ == "__main__":
    write_corpus(Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_DIR)
