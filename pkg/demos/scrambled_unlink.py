"""
Scrambling an unlink
====================

Start from three round circles, tangle them with random Reidemeister
moves, and check that the Khovanov module still recognises an unlink.
A Hopf link plus a circle, scrambled the same way, does not pass.
"""

import random

from khmod.corpus import random_moves, standard
from khmod.khcube import relative
from khmod.khmodule import fingerprint, khovanov_module, is_free_cyclic
from khmod.linkdiag import disjoint_union, format_pd, parse_pd

rng = random.Random(1)

for label, start in [("unlink3", parse_pd("U U U")),
                     ("hopf + U", disjoint_union(standard("hopf"), parse_pd("U")))]:
    M0 = khovanov_module(start)
    print(f"== {label}")
    for trial in range(3):
        pd, script = random_moves(start, 4, rng, kinds="1223")
        M = khovanov_module(pd)
        v = is_free_cyclic(M)
        same = relative(M.ranks()) == relative(M0.ranks()) and fingerprint(M) == fingerprint(M0)
        print(f"{pd.n_crossings:2d} crossings, moves {[type(m).__name__ for m in script]}")
        print(f"   {format_pd(pd)}")
        print(f"   unlink module: {v.is_unlink_module}, invariants unchanged: {same}")
