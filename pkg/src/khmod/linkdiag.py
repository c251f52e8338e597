"""Planar diagram (PD) codes: parsing, component tracing, signs, mirrors and
scripted Reidemeister moves.

Convention: ``X(a,b,c,d)`` lists the four edge labels around a crossing
counterclockwise, starting from the incoming under-strand.  The under-strand
runs ``a -> c``; the over-strand is ``b, d``.  Crossingless components are
written ``U``.  A component index list followed by ``!`` (for example
``0,2!``) reverses the orientation of those components.

Components are indexed by their lowest edge label; free loops come after all
components that carry crossings.  Free loop ``k`` is addressed by the
pseudo-label ``max_label + 1 + k`` wherever an edge label is expected
(basepoints, move sites).
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union


class PDError(ValueError):
    pass


class PDSyntaxError(PDError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class PDSemanticError(PDError):
    pass


class MoveError(ValueError):
    def __init__(self, message: str, index: int):
        super().__init__(f"move {index}: {message}")
        self.index = index


Slot = tuple[int, int]  # (crossing index, position 0..3)


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        parent = self.parent
        parent.setdefault(x, x)
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            self.parent[max(rx, ry)] = min(rx, ry)


@dataclass(frozen=True)
class ComponentMap:
    n: int
    edge_to_component: dict[int, int]
    component_edges: tuple[tuple[int, ...], ...]

    def component_of(self, edge: int) -> int:
        return self.edge_to_component[edge]


@dataclass(frozen=True)
class Basepoint:
    edge: int
    component: int


@dataclass(frozen=True)
class PDCode:
    crossings: tuple[tuple[int, int, int, int], ...] = ()
    free_loops: int = 0
    reversed: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "crossings", tuple(tuple(int(e) for e in x) for x in self.crossings))
        object.__setattr__(self, "reversed", frozenset(self.reversed))
        if self.free_loops < 0:
            raise PDSemanticError("free_loops must be non-negative")
        counts: dict[int, int] = {}
        for x in self.crossings:
            if len(x) != 4:
                raise PDSemanticError(f"crossing {x} does not have four edges")
            for e in x:
                if e <= 0:
                    raise PDSemanticError(f"edge label {e} is not a positive integer")
                counts[e] = counts.get(e, 0) + 1
        bad = sorted(e for e, k in counts.items() if k != 2)
        if bad:
            raise PDSemanticError(f"edge label count != 2 for labels {bad}")
        for k in self.reversed:
            if not 0 <= k < self.n_components:
                raise PDSemanticError(f"cannot reverse component {k}: only {self.n_components} components")
        self._heads  # orientation consistency is part of validity

    # basic shape

    @property
    def n_crossings(self) -> int:
        return len(self.crossings)

    @cached_property
    def edges(self) -> tuple[int, ...]:
        return tuple(sorted({e for x in self.crossings for e in x}))

    @property
    def max_label(self) -> int:
        return self.edges[-1] if self.edges else 0

    @property
    def loop_labels(self) -> tuple[int, ...]:
        m = self.max_label
        return tuple(m + 1 + k for k in range(self.free_loops))

    @cached_property
    def slots(self) -> dict[int, tuple[Slot, Slot]]:
        found: dict[int, list[Slot]] = {}
        for i, x in enumerate(self.crossings):
            for pos, e in enumerate(x):
                found.setdefault(e, []).append((i, pos))
        return {e: (s[0], s[1]) for e, s in found.items()}

    def other_slot(self, edge: int, slot: Slot) -> Slot:
        s0, s1 = self.slots[edge]
        return s1 if s0 == slot else s0

    # components

    @cached_property
    def _component_map(self) -> ComponentMap:
        uf = _UnionFind()
        for a, b, c, d in self.crossings:
            uf.union(a, c)
            uf.union(b, d)
        groups: dict[int, list[int]] = {}
        for e in self.edges:
            groups.setdefault(uf.find(e), []).append(e)
        parts = sorted(groups.values(), key=min)
        parts += [[label] for label in self.loop_labels]
        edge_to_component = {e: k for k, part in enumerate(parts) for e in part}
        return ComponentMap(len(parts), edge_to_component, tuple(tuple(p) for p in parts))

    @property
    def n_components(self) -> int:
        return len(self.components_with_crossings()) + self.free_loops

    def components_with_crossings(self) -> list[list[int]]:
        uf = _UnionFind()
        for a, b, c, d in self.crossings:
            uf.union(a, c)
            uf.union(b, d)
        groups: dict[int, list[int]] = {}
        for e in self.edges:
            groups.setdefault(uf.find(e), []).append(e)
        return sorted(groups.values(), key=min)

    # orientation

    def _walk(self, edge: int, head: Slot) -> list[tuple[int, Slot]]:
        """Follow a component from ``edge`` entering at ``head``."""
        out = []
        e, h = edge, head
        while True:
            out.append((e, h))
            x, pos = h
            nxt_pos = (pos + 2) % 4
            e2 = self.crossings[x][nxt_pos]
            h = self.other_slot(e2, (x, nxt_pos))
            e = e2
            if (e, h) == (edge, head):
                return out

    @cached_property
    def _heads(self) -> dict[int, Slot]:
        """Slot where each edge enters a crossing, following the orientation."""
        heads: dict[int, Slot] = {}
        for k, comp in enumerate(self.components_with_crossings()):
            comp_set = set(comp)
            start = None
            for i, x in enumerate(self.crossings):
                if x[0] in comp_set:
                    start = (x[0], (i, 0))
                    break
            if start is not None:
                walk = self._walk(*start)
                for e, (x, pos) in walk:
                    if pos == 2:
                        raise PDSemanticError(
                            f"inconsistent orientation: edge {e} enters crossing {x} at the outgoing under slot")
            else:
                walk = self._pure_over_walk(comp)
            if k in self.reversed:
                walk = [(e, self.other_slot(e, h)) for e, h in walk]
            for e, h in walk:
                heads[e] = h
        return heads

    def _pure_over_walk(self, comp: list[int]) -> list[tuple[int, Slot]]:
        # Orientation by increasing labels along the strand; for a two-edge
        # component both directions agree, so the lower head slot wins.
        e0 = min(comp)
        best = None
        for head in sorted(self.slots[e0]):
            walk = self._walk(e0, head)
            nxt = walk[1][0] if len(walk) > 1 else e0
            if best is None or nxt < best[0]:
                best = (nxt, walk)
        return best[1]

    def head(self, edge: int) -> Slot:
        return self._heads[edge]

    def tail(self, edge: int) -> Slot:
        return self.other_slot(edge, self._heads[edge])

    def under_forward(self, i: int) -> bool:
        """True when the under-strand of crossing ``i`` runs a -> c."""
        return self._heads[self.crossings[i][0]] == (i, 0)

    def over_d_to_b(self, i: int) -> bool:
        return self._heads[self.crossings[i][3]] == (i, 3)

    def crossing_sign(self, i: int) -> int:
        s = 1 if self.over_d_to_b(i) else -1
        return s if self.under_forward(i) else -s

    # derived structures

    def components(self) -> ComponentMap:
        return self._component_map

    def default_basepoints(self) -> list[Basepoint]:
        cm = self._component_map
        return [Basepoint(min(edges), k) for k, edges in enumerate(cm.component_edges)]

    def basepoint(self, edge: int) -> Basepoint:
        cm = self._component_map
        if edge not in cm.edge_to_component:
            raise PDSemanticError(f"basepoint edge {edge} is not in the diagram")
        return Basepoint(edge, cm.edge_to_component[edge])

    def __str__(self) -> str:
        return format_pd(self)


Move = Union["R1", "R1Inverse", "R2", "R2Inverse", "R3"]


@dataclass(frozen=True)
class R1:
    """Add a kink on ``edge``; ``over_first`` picks which pass is on top first."""

    edge: int
    sign: int = 1
    over_first: bool = False


@dataclass(frozen=True)
class R1Inverse:
    crossing: int


@dataclass(frozen=True)
class R2:
    """Push ``edge1`` across ``edge2`` (over it when ``over`` is true)."""

    edge1: int
    edge2: int
    over: bool = True
    face: int | None = None


@dataclass(frozen=True)
class R2Inverse:
    face: int


@dataclass(frozen=True)
class R3:
    face: int


@dataclass(frozen=True)
class MoveScript:
    moves: tuple = ()

    def __iter__(self):
        return iter(self.moves)

    def __len__(self):
        return len(self.moves)


# parsing and printing

_INT = re.compile(r"\s*(\d+)\s*")
_REVERSAL = re.compile(r"(\d+(?:,\d+)*)!")


def parse_pd(text: str) -> PDCode:
    """Parse the PD text grammar or its JSON form."""
    stripped = text.strip()
    if stripped.startswith("{"):
        return _parse_json(stripped)
    crossings: list[tuple[int, ...]] = []
    loops = 0
    rev: set[int] = set()
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace() or ch == ",":
            i += 1
            continue
        if ch == "X":
            start = i
            i += 1
            if i >= n or text[i] != "(":
                raise PDSyntaxError("expected '(' after X", i)
            i += 1
            labels = []
            while True:
                m = _INT.match(text, i)
                if not m:
                    raise PDSyntaxError("expected a positive integer edge label", i)
                labels.append(int(m.group(1)))
                i = m.end()
                if i < n and text[i] == ",":
                    i += 1
                    continue
                if i < n and text[i] == ")":
                    i += 1
                    break
                raise PDSyntaxError("expected ',' or ')'", i)
            if len(labels) != 4:
                raise PDSyntaxError(f"crossing has {len(labels)} labels, expected 4", start)
            crossings.append(tuple(labels))
        elif ch == "U":
            i += 1
            loops += 1
        elif ch.isdigit():
            m = _REVERSAL.match(text, i)
            if not m:
                raise PDSyntaxError("component list must end with '!'", i)
            rev.update(int(k) for k in m.group(1).split(","))
            i = m.end()
        else:
            raise PDSyntaxError(f"unexpected character {ch!r}", i)
        if i < n and not (text[i].isspace() or text[i] == ","):
            raise PDSyntaxError("tokens must be separated by whitespace", i)
    return PDCode(tuple(crossings), loops, frozenset(rev))


def _parse_json(text: str) -> PDCode:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PDSyntaxError(f"invalid JSON: {exc.msg}", exc.pos) from None
    try:
        crossings = [tuple(int(e) for e in x) for x in obj.get("crossings", [])]
    except (TypeError, ValueError):
        raise PDSyntaxError("crossings must be lists of integers", 0) from None
    for x in crossings:
        if len(x) != 4:
            raise PDSyntaxError(f"crossing {list(x)} does not have 4 labels", 0)
    return PDCode(tuple(crossings), int(obj.get("free_loops", 0)), frozenset(obj.get("reversed", [])))


def format_pd(pd: PDCode) -> str:
    tokens = ["X(%d,%d,%d,%d)" % x for x in pd.crossings]
    tokens += ["U"] * pd.free_loops
    if pd.reversed:
        tokens.append(",".join(str(k) for k in sorted(pd.reversed)) + "!")
    return " ".join(tokens)


def pd_to_json(pd: PDCode) -> dict:
    out = {"crossings": [list(x) for x in pd.crossings], "free_loops": pd.free_loops}
    if pd.reversed:
        out["reversed"] = sorted(pd.reversed)
    return out


# the operations


def components(pd: PDCode) -> ComponentMap:
    return pd.components()


def crossing_signs(pd: PDCode) -> tuple[int, int]:
    signs = [pd.crossing_sign(i) for i in range(pd.n_crossings)]
    n_plus = signs.count(1)
    return n_plus, len(signs) - n_plus


# An oriented working form used by mirror and the moves: every crossing is
# rotated so that position 0 is the actual incoming under-edge, and
# ``over_db[i]`` records whether the over-strand runs b -> d.


@dataclass
class _Work:
    crossings: list[list[int]]
    over_db: list[bool]
    loops: list[int]

    def fresh(self) -> int:
        labels = [e for x in self.crossings for e in x] + self.loops
        return max(labels, default=0) + 1


def _work(pd: PDCode) -> _Work:
    crossings, over_db = [], []
    for i, x in enumerate(pd.crossings):
        rot = 0 if pd.under_forward(i) else 2
        crossings.append([x[(k + rot) % 4] for k in range(4)])
        pos_b = (1 + rot) % 4
        over_db.append(pd._heads[x[pos_b]] == (i, pos_b))
    return _Work(crossings, over_db, list(pd.loop_labels))


def _finish(w: _Work, relabel: bool) -> PDCode:
    """Turn a working form back into a PDCode, recording orientation flags."""
    crossings = [list(x) for x in w.crossings]
    entering: set[Slot] = set()
    for i, x in enumerate(crossings):
        entering.add((i, 0))
        entering.add((i, 1 if w.over_db[i] else 3))
    slots: dict[int, list[Slot]] = {}
    for i, x in enumerate(crossings):
        for pos, e in enumerate(x):
            slots.setdefault(e, []).append((i, pos))
    for e, ss in slots.items():
        if len(ss) != 2 or sum(s in entering for s in ss) != 1:
            raise PDSemanticError(f"edge {e} is not traversed consistently")
    if relabel:
        mapping: dict[tuple[int, Slot], int] = {}
        next_label = 1
        seen: set[int] = set()
        for e0 in sorted(slots):
            if e0 in seen:
                continue
            head = next(s for s in slots[e0] if s in entering)
            e, h = e0, head
            while True:
                seen.add(e)
                mapping[(e, h)] = next_label
                next_label += 1
                x, pos = h
                out = (x, (pos + 2) % 4)
                e = crossings[x][out[1]]
                s0, s1 = slots[e]
                h = s1 if s0 == out else s0
                if e == e0 and h == head:
                    break
        new = [[0] * 4 for _ in crossings]
        for e, ss in slots.items():
            h = next(s for s in ss if s in entering)
            label = mapping[(e, h)]
            for x, pos in ss:
                new[x][pos] = label
        crossings = new
    base = PDCode(tuple(tuple(x) for x in crossings), len(w.loops))
    rev = set()
    for k, comp in enumerate(base.components_with_crossings()):
        e = comp[0]
        heads = [s for s in base.slots[e] if s in entering]
        if base._heads[e] != heads[0]:
            rev.add(k)
    return PDCode(base.crossings, base.free_loops, frozenset(rev))


def normalize(pd: PDCode) -> PDCode:
    """Relabel edges 1..E along each component's orientation."""
    return _finish(_work(pd), relabel=True)


def mirror(pd: PDCode) -> PDCode:
    w = _work(pd)
    crossings, over_db = [], []
    for x, db in zip(w.crossings, w.over_db):
        a, b, c, d = x
        if db:
            crossings.append([b, c, d, a])
            over_db.append(False)
        else:
            crossings.append([d, a, b, c])
            over_db.append(True)
    return _finish(_Work(crossings, over_db, w.loops), relabel=False)


def disjoint_union(pd1: PDCode, pd2: PDCode) -> PDCode:
    w1, w2 = _work(pd1), _work(pd2)
    shift = pd1.max_label
    w = _Work(w1.crossings + [[e + shift for e in x] for x in w2.crossings],
              w1.over_db + w2.over_db, [0] * (pd1.free_loops + pd2.free_loops))
    return _finish(w, relabel=False)


def split_parts(pd: PDCode) -> list[tuple[PDCode, dict[int, int]]]:
    """The split pieces of a diagram (crossing-connected parts, then one
    piece per free loop) with maps from each piece's edge labels to ``pd``'s.

    Crossing pieces keep the original labels.
    """
    w = _work(pd)
    roots = _parts(w.crossings)
    groups: dict[int, list[int]] = {}
    for i, r in enumerate(roots):
        groups.setdefault(r, []).append(i)
    out = []
    for idx in sorted(groups.values(), key=lambda ix: min(e for i in ix for e in w.crossings[i])):
        part = _finish(_Work([w.crossings[i] for i in idx], [w.over_db[i] for i in idx], []), relabel=False)
        out.append((part, {e: e for e in part.edges}))
    for label in pd.loop_labels:
        out.append((PDCode((), 1), {1: label}))
    return out


# faces


def faces(pd: PDCode) -> list[list[tuple[int, Slot, Slot]]]:
    """Faces of the planar diagram as cycles of darts ``(edge, from, to)``.

    Each face is traversed with the face on the left.  Components without
    crossings contribute nothing.
    """
    return _faces_of(pd.crossings)


def _faces_of(crossings) -> list[list[tuple[int, Slot, Slot]]]:
    slots: dict[int, list[Slot]] = {}
    for i, x in enumerate(crossings):
        for pos, e in enumerate(x):
            slots.setdefault(e, []).append((i, pos))
    darts = []
    for e in sorted(slots):
        s0, s1 = sorted(slots[e])
        darts.append((e, s0, s1))
        darts.append((e, s1, s0))
    used = set()
    out = []
    for dart in darts:
        if dart in used:
            continue
        face = []
        cur = dart
        while cur not in used:
            used.add(cur)
            face.append(cur)
            _, _, (x, t) = cur
            pos = (t - 1) % 4
            e = crossings[x][pos]
            s0, s1 = slots[e]
            nxt_to = s1 if s0 == (x, pos) else s0
            cur = (e, (x, pos), nxt_to)
        out.append(face)
    return out


def _parts(crossings) -> list[int]:
    uf = _UnionFind()
    for i in range(len(crossings)):
        uf.find(i)
    first: dict[int, int] = {}
    for i, x in enumerate(crossings):
        for e in x:
            if e in first:
                uf.union(first[e], i)
            else:
                first[e] = i
    return [uf.find(i) for i in range(len(crossings))]


def _check_planar(crossings, index: int) -> None:
    # Euler characteristic of each connected part must be 2 (a sphere).
    if not crossings:
        return
    part = _parts(crossings)
    n_faces: dict[int, int] = {}
    for face in _faces_of(crossings):
        x = face[0][1][0]
        n_faces[part[x]] = n_faces.get(part[x], 0) + 1
    for p in set(part):
        v = part.count(p)
        if v - 2 * v + n_faces[p] != 2:
            raise MoveError("result is not a planar diagram", index)


# moves


def _place(slots: Sequence[tuple[float, int]], under_in: int, under_out: int, over_in: int):
    """Crossing tuple and over direction from slot directions in degrees."""
    base = slots[under_in][0]
    order = sorted(range(4), key=lambda k: (slots[k][0] - base) % 360.0)
    if order[0] != under_in or order[2] != under_out:
        raise AssertionError("under-strand slots are not opposite")
    return [slots[k][1] for k in order], order[1] == over_in


def _remove_crossings(w: _Work, doomed: Sequence[int]) -> _Work:
    # Delete crossings by joining edges straight through them.
    uf = _UnionFind()
    for i in doomed:
        a, b, c, d = w.crossings[i]
        uf.union(a, c)
        uf.union(b, d)
    keep = [i for i in range(len(w.crossings)) if i not in set(doomed)]
    crossings = [[uf.find(e) for e in w.crossings[i]] for i in keep]
    over_db = [w.over_db[i] for i in keep]
    present = {e for x in crossings for e in x}
    removed_labels = {e for i in doomed for e in w.crossings[i]}
    new_loops = sorted({uf.find(e) for e in removed_labels} - present)
    return _Work(crossings, over_db, w.loops + new_loops)


def _apply_r1(w: _Work, pd: PDCode, mv: R1, index: int) -> _Work:
    if mv.sign not in (1, -1):
        raise MoveError("R1 sign must be +1 or -1", index)
    loops = list(w.loops)
    ell = w.fresh()
    if mv.edge in loops:
        loops.remove(mv.edge)
        e1 = e2 = mv.edge
        crossings = [list(x) for x in w.crossings]
    elif mv.edge in pd.slots:
        e1, e2 = mv.edge, ell + 1
        x, pos = _work_head(w, mv.edge)
        crossings = [list(c) for c in w.crossings]
        crossings[x][pos] = e2
    else:
        raise MoveError(f"edge {mv.edge} is not in the diagram", index)
    if not mv.over_first:
        new, db = ([e1, ell, ell, e2], True) if mv.sign < 0 else ([e1, e2, ell, ell], False)
    else:
        new, db = ([ell, e1, e2, ell], True) if mv.sign < 0 else ([ell, ell, e2, e1], False)
    return _Work(crossings + [new], w.over_db + [db], loops)


def _work_head(w: _Work, edge: int) -> Slot:
    for i, x in enumerate(w.crossings):
        if x[0] == edge:
            return (i, 0)
        if w.over_db[i] and x[1] == edge:
            return (i, 1)
        if not w.over_db[i] and x[3] == edge:
            return (i, 3)
    raise KeyError(edge)


def _work_slots(w: _Work) -> dict[int, list[Slot]]:
    slots: dict[int, list[Slot]] = {}
    for i, x in enumerate(w.crossings):
        for pos, e in enumerate(x):
            slots.setdefault(e, []).append((i, pos))
    return slots


def _apply_r1_inverse(w: _Work, mv: R1Inverse, index: int) -> _Work:
    if not 0 <= mv.crossing < len(w.crossings):
        raise MoveError(f"no crossing {mv.crossing}", index)
    x = w.crossings[mv.crossing]
    if not any(x[k] == x[(k + 1) % 4] for k in range(4)):
        raise MoveError(f"crossing {mv.crossing} is not a kink", index)
    return _remove_crossings(w, [mv.crossing])


def _apply_r2(w: _Work, mv: R2, index: int) -> _Work:
    e1, e2 = mv.edge1, mv.edge2
    if e1 == e2:
        raise MoveError("R2 needs two distinct edges", index)
    slots = _work_slots(w)
    for e in (e1, e2):
        if e not in slots and e not in w.loops:
            raise MoveError(f"edge {e} is not in the diagram", index)
    part = _parts(w.crossings)
    same_part = e1 in slots and e2 in slots and part[slots[e1][0][0]] == part[slots[e2][0][0]]
    heads = {}
    for e in (e1, e2):
        if e in slots:
            heads[e] = _work_head(w, e)
    if same_part:
        fs = _faces_of(w.crossings)
        common = [k for k, f in enumerate(fs)
                  if any(d[0] == e1 for d in f) and any(d[0] == e2 for d in f)]
        if mv.face is not None:
            if mv.face not in common:
                raise MoveError(f"edges {e1}, {e2} do not share face {mv.face}", index)
            k = mv.face
        elif common:
            k = common[0]
        else:
            raise MoveError(f"edges {e1}, {e2} share no face", index)
        d1 = next(d for d in fs[k] if d[0] == e1)
        d2 = next(d for d in fs[k] if d[0] == e2)
    else:
        def dart(e):
            if e not in slots:
                return None
            h = heads[e]
            s0, s1 = slots[e]
            return (e, s1 if s0 == h else s0, h)
        d1, d2 = dart(e1), dart(e2)
    fwd1 = d1 is None or d1[2] == heads[e1]
    fwd2 = d2 is None or d2[2] == heads[e2]

    crossings = [list(x) for x in w.crossings]
    loops = [e for e in w.loops if e not in (e1, e2)]
    fresh = w.fresh()
    e1m, e2m = fresh, fresh + 1
    e1a = e1
    e2a = e2
    e1b = e1 if d1 is None else fresh + 2
    e2b = e2 if d2 is None else fresh + 3
    if d1 is not None:
        x, pos = d1[2]
        crossings[x][pos] = e1b
    if d2 is not None:
        x, pos = d2[2]
        crossings[x][pos] = e2b

    # Local picture: e1 runs east with the face to the north; e2 lies above
    # and runs west.  e1 pushes a finger north across e2 at P then Q.
    p_slots = [(270.0, e1a), (90.0, e1m), (0.0, e2m), (180.0, e2b)]
    q_slots = [(90.0, e1m), (270.0, e1b), (0.0, e2a), (180.0, e2m)]
    # strand travel (in, out) by slot index in the forward face direction
    p1, p2 = (0, 1), (2, 3)
    q1, q2 = (0, 1), (2, 3)
    if not fwd1:
        p1, q1 = p1[::-1], q1[::-1]
    if not fwd2:
        p2, q2 = p2[::-1], q2[::-1]
    new = []
    for sl, s1, s2 in ((p_slots, p1, p2), (q_slots, q1, q2)):
        under, over = (s2, s1) if mv.over else (s1, s2)
        new.append(_place(sl, under[0], under[1], over[0]))
    return _Work(crossings + [c for c, _ in new], w.over_db + [db for _, db in new], loops)


def _apply_r2_inverse(w: _Work, mv: R2Inverse, index: int) -> _Work:
    fs = _faces_of(w.crossings)
    if not 0 <= mv.face < len(fs):
        raise MoveError(f"no face {mv.face}", index)
    f = fs[mv.face]
    if len(f) != 2:
        raise MoveError(f"face {mv.face} is not a bigon", index)
    (ea, sa, ta), (eb, sb, tb) = f
    p, q = sa[0], ta[0]
    if p == q:
        raise MoveError(f"face {mv.face} is a single-crossing loop", index)
    # ea runs p -> q; it is over at both ends or under at both ends.
    if sa[1] % 2 != ta[1] % 2:
        raise MoveError(f"face {mv.face} is a clasp, not an R2 bigon", index)
    return _remove_crossings(w, sorted((p, q)))


_ANG_S1 = math.degrees(math.atan2(1.0, -0.5))   # up-left, ~116.57
_ANG_S2 = math.degrees(math.atan2(1.0, 0.5))    # up-right, ~63.43


def _apply_r3(w: _Work, mv: R3, index: int) -> _Work:
    fs = _faces_of(w.crossings)
    if not 0 <= mv.face < len(fs):
        raise MoveError(f"no face {mv.face}", index)
    f = fs[mv.face]
    if len(f) != 3:
        raise MoveError(f"face {mv.face} is not a triangle", index)
    (t0, (c0, s0), (c1, r0)), (t1, (_, s1), (c2, r1)), (t2, (_, s2), (_, r2)) = f
    if len({c0, c1, c2}) != 3:
        raise MoveError(f"face {mv.face} does not have three distinct crossings", index)
    over0 = (s0 % 2 == 1, r0 % 2 == 1)   # strand 0 over at c0, c1
    over1 = (s1 % 2 == 1, r1 % 2 == 1)   # strand 1 over at c1, c2
    over2 = (s2 % 2 == 1, r2 % 2 == 1)   # strand 2 over at c2, c0
    if not (all(over0) or all(over1) or all(over2)):
        raise MoveError(f"face {mv.face} is an alternating triangle", index)
    X = w.crossings
    o0L, o2D = X[c0][(s0 + 2) % 4], X[c0][(r2 + 2) % 4]
    o0R, o1D = X[c1][(r0 + 2) % 4], X[c1][(s1 + 2) % 4]
    o1U, o2U = X[c2][(r1 + 2) % 4], X[c2][(s2 + 2) % 4]
    heads = {c: set() for c in (c0, c1, c2)}
    for c in (c0, c1, c2):
        heads[c] = {0, 1 if w.over_db[c] else 3}
    fwd0 = r0 in heads[c1]
    fwd1 = r1 in heads[c2]
    fwd2 = r2 not in heads[c0]
    s0_over_s2 = over0[0]
    s0_over_s1 = over0[1]
    s1_over_s2 = not over2[0]
    m0, m1, m2 = t0, t1, t2

    def travel(pair, fwd):
        return pair if fwd else pair[::-1]

    # new crossing between strands 0 and 1 (replaces c1)
    sl = [(180.0, o0L), (0.0, m0), (_ANG_S1 + 180.0, m1), (_ANG_S1, o1U)]
    a, b = travel((0, 1), fwd0), travel((2, 3), fwd1)
    under, over = (b, a) if s0_over_s1 else (a, b)
    new_c1 = _place(sl, under[0], under[1], over[0])
    # strands 0 and 2 (replaces c0)
    sl = [(180.0, m0), (0.0, o0R), (_ANG_S2 + 180.0, m2), (_ANG_S2, o2U)]
    a, b = travel((0, 1), fwd0), travel((2, 3), fwd2)
    under, over = (b, a) if s0_over_s2 else (a, b)
    new_c0 = _place(sl, under[0], under[1], over[0])
    # strands 1 and 2 (replaces c2)
    sl = [(_ANG_S1 + 180.0, o1D), (_ANG_S1, m1), (_ANG_S2 + 180.0, o2D), (_ANG_S2, m2)]
    a, b = travel((0, 1), fwd1), travel((2, 3), fwd2)
    under, over = (b, a) if s1_over_s2 else (a, b)
    new_c2 = _place(sl, under[0], under[1], over[0])

    crossings = [list(x) for x in X]
    over_db = list(w.over_db)
    for c, (tup, db) in ((c0, new_c0), (c1, new_c1), (c2, new_c2)):
        crossings[c] = tup
        over_db[c] = db
    return _Work(crossings, over_db, list(w.loops))


_APPLY = {
    R1Inverse: _apply_r1_inverse,
    R2: _apply_r2,
    R2Inverse: _apply_r2_inverse,
    R3: _apply_r3,
}


def apply_move(pd: PDCode, script: MoveScript | Sequence[Move]) -> PDCode:
    """Apply moves in order; labels are renormalized after every move.

    Each move's sites (edge labels, crossing indices, face ids) refer to the
    diagram produced by the previous move.
    """
    moves = script.moves if isinstance(script, MoveScript) else tuple(script)
    for index, mv in enumerate(moves):
        w = _work(pd)
        if isinstance(mv, R1):
            w = _apply_r1(w, pd, mv, index)
        elif type(mv) in _APPLY:
            w = _APPLY[type(mv)](w, mv, index)
        else:
            raise MoveError(f"unknown move {mv!r}", index)
        _check_planar(w.crossings, index)
        try:
            pd = _finish(w, relabel=True)
        except PDError as exc:
            raise MoveError(f"produced an invalid diagram ({exc})", index) from None
    return pd
