"""
Unlink versus Hopf link
=======================

Both links have Khovanov homology of total rank 4, so rank alone cannot
tell them apart.  The module structure can.
"""

from khmod.cli import table
from khmod.corpus import standard
from khmod.khcube import relative
from khmod.khmodule import action_homology, is_free_cyclic, khovanov_module, reduced_module

for name in ("unlink2", "hopf"):
    pd = standard(name)
    M = khovanov_module(pd)
    print(f"== {name}: {pd.n_crossings} crossings, total rank {M.dim}")
    print(table(relative(M.ranks())))

    # the actions as matrices; column k is the image of basis vector k
    print("basis gradings:", M.gradings)
    for k, X in enumerate(M.actions):
        print(f"X_{k} =")
        for row in X.to_dense():
            print("   ", *row)
    print("X_0 == X_1:", M.actions[0] == M.actions[1])

    v = is_free_cyclic(M)
    print("free cyclic:", v.is_unlink_module if v.is_unlink_module else f"False ({v.failure_reason})")

    # reduce at the first component; what is left is a module over X_1
    R = reduced_module(pd)
    (k,) = R.labels
    print(f"reduced rank {R.dim}, H(Kh_red, X_{k}) rank {sum(action_homology(R, k).values())}")
    print()
