"""Independent reference implementations used as test oracles.

Nothing here imports the cube or module code: the naive cube below builds
one dense numpy matrix for the whole differential and computes ranks by
plain Gaussian elimination mod 2.
"""

from __future__ import annotations

import itertools

import numpy as np


def gf2_rank(M) -> int:
    M = np.array(M, dtype=np.uint8) & 1
    if M.size == 0:
        return 0
    M = M.copy()
    rows, cols = M.shape
    r = 0
    for c in range(cols):
        piv = np.nonzero(M[r:, c])[0]
        if not len(piv):
            continue
        p = r + piv[0]
        if p != r:
            M[[r, p]] = M[[p, r]]
        mask = M[:, c].astype(bool)
        mask[r] = False
        M[mask] ^= M[r]
        r += 1
        if r == rows:
            break
    return r


def gf2_nullspace(M) -> np.ndarray:
    """Columns spanning the kernel of M (shape cols x k)."""
    M = np.array(M, dtype=np.uint8) & 1
    rows, cols = M.shape
    A = M.copy()
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        piv = np.nonzero(A[r:, c])[0]
        if not len(piv):
            continue
        p = r + piv[0]
        A[[r, p]] = A[[p, r]]
        mask = A[:, c].astype(bool)
        mask[r] = False
        A[mask] ^= A[r]
        pivots.append(c)
        r += 1
    free = [c for c in range(cols) if c not in pivots]
    out = np.zeros((cols, len(free)), dtype=np.uint8)
    for k, f in enumerate(free):
        out[f, k] = 1
        for row, pc in enumerate(pivots):
            out[pc, k] = A[row, f]
    return out


def gf2_mul(A, B) -> np.ndarray:
    return (np.asarray(A, dtype=np.int64) @ np.asarray(B, dtype=np.int64) % 2).astype(np.uint8)


class NaiveCube:
    """The whole Khovanov complex as one dense matrix.

    Crossing k is bit k of the state; a label is 0 for 1 and 1 for X.
    """

    def __init__(self, crossings, free_loops: int, n_plus: int, n_minus: int):
        self.crossings = [tuple(x) for x in crossings]
        self.loops = free_loops
        self.n_plus, self.n_minus = n_plus, n_minus
        self.edges = sorted({e for x in self.crossings for e in x})
        c = len(self.crossings)
        self.gens = []
        self.circ = {}
        for s in range(2**c):
            circles = self.circles(s)
            self.circ[s] = circles
            for labels in itertools.product((0, 1), repeat=len(circles) + free_loops):
                self.gens.append((s, labels))
        self.index = {g: k for k, g in enumerate(self.gens)}
        N = len(self.gens)
        self.d = np.zeros((N, N), dtype=np.uint8)
        for col, (s, labels) in enumerate(self.gens):
            for k in range(c):
                if (s >> k) & 1:
                    continue
                for tl in self.edge_image(s, labels, k):
                    self.d[self.index[(s | 1 << k, tl)], col] ^= 1

    @classmethod
    def of(cls, pd):
        signs = [pd.crossing_sign(i) for i in range(pd.n_crossings)]
        return cls(pd.crossings, pd.free_loops, signs.count(1), signs.count(-1))

    def circles(self, s: int) -> list[frozenset]:
        parent = {e: e for e in self.edges}

        def find(e):
            while parent[e] != e:
                parent[e] = parent[parent[e]]
                e = parent[e]
            return e

        for k, (a, b, c, d) in enumerate(self.crossings):
            pairs = ((a, d), (b, c)) if (s >> k) & 1 else ((a, b), (c, d))
            for u, v in pairs:
                parent[find(u)] = find(v)
        groups = {}
        for e in self.edges:
            groups.setdefault(find(e), set()).add(e)
        return sorted((frozenset(g) for g in groups.values()), key=min)

    def edge_image(self, s: int, labels, k: int) -> list[tuple]:
        t = s | 1 << k
        src, dst = self.circ[s], self.circ[t]
        at = set(self.crossings[k])
        touched_s = [i for i, C in enumerate(src) if C & at]
        touched_t = [i for i, C in enumerate(dst) if C & at]
        base = [None] * len(dst)
        for i, C in enumerate(dst):
            if i in touched_t:
                continue
            base[i] = labels[src.index(C)]
        loops = tuple(labels[len(src):])
        out = []
        if len(touched_s) == 2:
            a, b = (labels[i] for i in touched_s)
            if a + b == 2:
                return []
            base[touched_t[0]] = a + b
            out.append(tuple(base) + loops)
        else:
            a = labels[touched_s[0]]
            u, v = touched_t
            choices = [(0, 1), (1, 0)] if a == 0 else [(1, 1)]
            for x, y in choices:
                lab = list(base)
                lab[u], lab[v] = x, y
                out.append(tuple(lab) + loops)
        return out

    def grading(self, g) -> tuple[int, int]:
        s, labels = g
        w = bin(s).count("1")
        x = sum(labels)
        return w - self.n_minus, (len(labels) - 2 * x) + w + self.n_plus - 2 * self.n_minus

    def ranks(self) -> dict:
        out = {}
        keys = sorted({self.grading(g) for g in self.gens})
        for key in keys:
            cols = [k for k, g in enumerate(self.gens) if self.grading(g) == key]
            prev = [k for k, g in enumerate(self.gens) if self.grading(g) == (key[0] - 1, key[1])]
            r_out = gf2_rank(self.d[:, cols])
            r_in = gf2_rank(self.d[:, prev]) if prev else 0
            h = len(cols) - r_out - r_in
            if h:
                out[key] = h
        return out

    def action(self, edge: int) -> np.ndarray:
        """Multiplication by X on the circle through ``edge`` (a loop label
        ``max_edge + 1 + t`` names free loop t)."""
        N = len(self.gens)
        A = np.zeros((N, N), dtype=np.uint8)
        top = max(self.edges, default=0)
        for col, (s, labels) in enumerate(self.gens):
            circles = self.circ[s]
            if edge > top:
                pos = len(circles) + (edge - top - 1)
            else:
                pos = next(i for i, C in enumerate(circles) if edge in C)
            if labels[pos] == 0:
                lab = list(labels)
                lab[pos] = 1
                A[self.index[(s, tuple(lab))], col] = 1
        return A

    def induced_rank(self, A: np.ndarray) -> dict:
        """Rank of the map induced by ``A`` on homology, per source grading."""
        out = {}
        keys = sorted({self.grading(g) for g in self.gens})
        for key in keys:
            here = [k for k, g in enumerate(self.gens) if self.grading(g) == key]
            Z = np.zeros((len(self.gens), 0), dtype=np.uint8)
            ns = gf2_nullspace(self.d[:, here])
            if ns.shape[1]:
                Z = np.zeros((len(self.gens), ns.shape[1]), dtype=np.uint8)
                Z[here] = ns
            AZ = gf2_mul(A, Z)
            B = self.d
            r = gf2_rank(np.hstack([AZ, B])) - gf2_rank(B)
            if r:
                out[key] = r
        return out


# modules over F[X_0, X_1]/(X_0^2, X_1^2)


def brute_force_free_cyclic(actions: list[np.ndarray], dim: int) -> bool:
    """Search every vector for one whose monomial images span the space,
    with the space of dimension 2^n."""
    n = len(actions)
    if dim != 2**n:
        return False
    monos = []
    for size in range(n + 1):
        for S in itertools.combinations(range(n), size):
            P = np.eye(dim, dtype=np.uint8)
            for k in S:
                P = gf2_mul(actions[k], P)
            monos.append(P)
    for bits in range(1, 2**dim):
        v = np.array([(bits >> k) & 1 for k in range(dim)], dtype=np.uint8)
        if gf2_rank(np.stack([gf2_mul(P, v) for P in monos], axis=1)) == dim:
            return True
    return False


def square_zero_matrices(dim: int) -> list[np.ndarray]:
    out = []
    for bits in range(2 ** (dim * dim)):
        A = np.array([(bits >> k) & 1 for k in range(dim * dim)], dtype=np.uint8).reshape(dim, dim)
        if not gf2_mul(A, A).any():
            out.append(A)
    return out


def commuting_square_zero_pairs(dim: int):
    Z = square_zero_matrices(dim)
    for A in Z:
        for B in Z:
            if np.array_equal(gf2_mul(A, B), gf2_mul(B, A)):
                yield A, B


def _indecomposables():
    """Some cyclic modules over F[X_0,X_1]/(X_0^2,X_1^2) as (X_0, X_1)."""
    e = lambda n, pairs: np.array([[1 if (r, c) in pairs else 0 for c in range(n)] for r in range(n)], dtype=np.uint8)
    free = (e(4, {(1, 0), (3, 2)}), e(4, {(2, 0), (3, 1)}))   # basis 1, X0, X1, X0X1
    return [
        free,
        (e(1, set()), e(1, set())),                          # F
        (e(2, {(1, 0)}), e(2, set())),                       # Λ/(X_1)
        (e(2, set()), e(2, {(1, 0)})),                       # Λ/(X_0)
        (e(2, {(1, 0)}), e(2, {(1, 0)})),                    # Λ/(X_0 + X_1)
        (e(3, {(1, 0)}), e(3, {(2, 0)})),                    # Λ/(X_0 X_1)
    ]


def random_module(rng, max_dim: int = 8) -> tuple[list[np.ndarray], int]:
    """A direct sum of small cyclic modules, conjugated by a random
    invertible matrix."""
    pieces = _indecomposables()
    chosen = []
    dim = 0
    while True:
        p = pieces[rng.randrange(len(pieces))] if rng.random() < 0.75 else pieces[0]
        if dim + len(p[0]) > max_dim:
            break
        chosen.append(p)
        dim += len(p[0])
        if rng.random() < 0.35:
            break
    A = np.zeros((dim, dim), dtype=np.uint8)
    B = np.zeros((dim, dim), dtype=np.uint8)
    at = 0
    for a, b in chosen:
        n = len(a)
        A[at:at + n, at:at + n] = a
        B[at:at + n, at:at + n] = b
        at += n
    while True:
        P = np.array([[rng.randrange(2) for _ in range(dim)] for _ in range(dim)], dtype=np.uint8)
        if gf2_rank(P) == dim:
            break
    Pinv = _inverse(P)
    return [gf2_mul(gf2_mul(P, A), Pinv), gf2_mul(gf2_mul(P, B), Pinv)], dim


def _inverse(P: np.ndarray) -> np.ndarray:
    n = len(P)
    M = np.hstack([P.copy(), np.eye(n, dtype=np.uint8)])
    for c in range(n):
        p = c + np.nonzero(M[c:, c])[0][0]
        M[[c, p]] = M[[p, c]]
        mask = M[:, c].astype(bool)
        mask[c] = False
        M[mask] ^= M[c]
    return M[:, n:]
