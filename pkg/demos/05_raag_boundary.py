"""
Boundary relations for right-angled Artin monoids
=================================================

For the path graph a - b - c the complement graph has components {a, c}
and {b}.  Each component is a foundation set, so the relation
``prod_{s in C} (1 - T_s T_s*) = 0`` follows from (CP).  Truncated Toeplitz
families satisfy relations (1)-(3) on their interior but not (4).
"""

# %%
from cnp import boundary as bd
from cnp import qlo

m = qlo.Raag.from_edges(["a", "b", "c"], [("a", "b"), ("b", "c")])
comps = [sorted(C) for C in qlo.opp_components(m)]
print("components of the complement graph:", comps)

# %% The inclusion-exclusion family of each component vanishes for large s
for C in comps:
    F = [m.from_word((g,)) for g in C]
    v = bd.check_boundary_relation(None, F, monoid=m)["boundary"]
    print(C, v.status, "-", v.detail)

# %% {a} alone is not a foundation set: c has no common upper bound with a
v = bd.check_boundary_relation(None, [m.parse("a")], monoid=m)["boundary"]
print("{a}:", v.status, v.witnesses)

# %% The defect is 1 exactly when no member of F divides s
for s in ["b", "bb", "ab", "cb"]:
    d = bd.boundary_defect(m, [m.parse("a"), m.parse("c")], m.parse(s))
    print(f"defect({{a,c}}, {s}) = {d.value}")

# %% Toeplitz shifts on the ball of radius 4
fam = bd.TruncatedToeplitz(m, 4)
rep = bd.raag_relations_report(fam)
for k, v in rep.verdicts.items():
    print(k, v.status, v.detail)
