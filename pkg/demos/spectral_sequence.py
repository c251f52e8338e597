"""
Spectral sequences by cancellation
==================================

Filter the trefoil's cube complex by the number of 1-resolutions and
follow the pages.  Every cube edge raises the level by one, so E_0 and
E_1 are both the full set of generators, E_2 is Khovanov homology, and
nothing happens after that.
"""

import random

from khmod.corpus import standard
from khmod.f2linalg import rank
from khmod.khcube import build_complex
from khmod.khmodule import basepoint_map, induced_module
from khmod.specseq import (
    FilteredMap,
    collapse_check,
    delta2_complex,
    induce_morphism,
    khovanov_filtration,
    page_gradings,
    pages,
    standard_page_oracle,
)

pd = standard("trefoil")
C = build_complex(pd)
FC = khovanov_filtration(pd)
ps = pages(FC)
for P in ps:
    print(f"E_{P.r}: rank {P.rank:3d}, levels {P.level_ranks()}, delta nonzero: {not P.delta.is_zero()}")

M = induced_module(pd, C=C)
print("E_2 matches Kh:", page_gradings(FC, ps[2]) == M.homology.ranks())

# push the basepoint map through every page; on the last page it is X_0
a = FilteredMap(basepoint_map(pd, M.basepoints[0], C).matrix(), FC, FC)
alpha = induce_morphism(a, ps, ps)
print("rank of the induced map per page:", [rank(A) for A in alpha])
print("rank of X_0 on Kh:", rank(M.actions[0]))

# a synthetic complex whose first interesting differential has order 2
rng = random.Random(3)
D = delta2_complex(rng)
qs = pages(D)
print()
for P in qs:
    print(f"E_{P.r}: levels {P.level_ranks()}  oracle {standard_page_oracle(D, P.r)}")
cert = collapse_check(qs)
print("collapse certificate:", cert)
