"""
Cuntz-Krieger families of 2-graphs
==================================

For a finite 2-graph the boundary paths ``Lambda^{<=n}`` index the
augmented fibre ``X^{<=n}``, and the inclusion-exclusion element of a finite
set ``F`` at ``v`` vanishes for large ``n`` exactly when ``F`` is exhaustive.
"""

# %%
from cnp import kgraph as kg
from cnp import psys

corpus = {g.name: g for g in kg.load_corpus()}
g = corpus["no_common_extension"]
ps = psys.from_kgraph(g)
print("vertices:", g.vertices, "edges:", list(g.edges))

# %% Boundary paths match the augmented fibre
for n in [(0, 0), (1, 0), (1, 1)]:
    aug = psys.augmented_fiber(ps, ps.monoid.elem(n))
    print(n, "Lambda^<=n:", [str(t) for t in g.paths_le(n)], "dim X^<=n:", aug.module.dim)

# %% {e} is not exhaustive at v: the edge f has no common extension with e
e, f = g.parse_path("e"), g.parse_path("f")
print("MCE(e, f) =", g.mce(e, f))
print("{e} exhaustive:", g.is_exhaustive("v", [e]), "witness:", g.exhaustive_witness("v", [e]))
d = kg.ck_defect_symbolic(g, "v", [e], (1, 1))
print("defect of {e} at s=(1,1) is supported on", [str(t) for t in d.support()])

# %% {e, f} is exhaustive, and the engine certifies vanishing exactly
for F in g.minimal_exhaustive_sets("v"):
    fam = psys.ck_family(ps, "v", F)
    out = psys.check_cp_vanishes(ps, fam, ps.monoid.ball(1), horizon=3)
    print([str(x) for x in F], out.status, "exact:", out.exact)

# %% The non-exhaustive family fails, with the offending s and norm
bad = psys.check_cp_vanishes(ps, psys.ck_family(ps, "v", [e]), ps.monoid.ball(1), horizon=3)
print("{e}:", bad.status, "at s =", bad.s, "norm", bad.norm)
