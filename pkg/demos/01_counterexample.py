"""
The lexicographic counterexample
================================

Over ``Z x Z`` with the lexicographic order, a two-vertex product system
has every ideal ``I_p`` equal to zero for ``p != e``.  The augmented fibres
collapse to the plain ones, the homomorphism on ``X^{<=(1,0)}`` has a kernel,
and any representation satisfying (CP) must kill the vertex ``v2``.
"""

# %%
from cnp import covariance as cv
from cnp import psys

L = psys.lex_counterexample()
m = L.monoid
e, p, q = m.identity(), m.parse("(0,1)"), m.parse("(1,0)")

# %% Ideals vanish away from the identity
for r in m.ball(2):
    print(f"I_{r} = {sorted(psys.ideal_I(L, r))}")

# %% So X^{<=q} is just X_q, and at q = (1,0) the left action is not injective
aug = psys.augmented_fiber(L, q)
print("summands of X^<=(1,0):", [str(r) for r, _ in aug.summands])
verdict = psys.phi_tilde_injective(L, q)
print("phi~_(1,0) injective:", verdict.injective, "kernel witness: delta_" + str(verdict.witness))

# %% The single-entry family {T_e = L_{delta_v2}} vanishes for large s
fam = psys.CompactFamily(L, {e: L.phi(e, L.algebra.delta(L.V2))})
v = psys.check_cp_vanishes(L, fam, [e, p, q], horizon=3)
print(v.status, "witnesses:", [(str(a), str(b)) for a, b in v.witnesses], "exact:", v.exact)

# %% Hence (CP) forces psi_e(delta_v2) = 0.  The truncated Fock representation
# does not kill it, and the checker says so.
fock = cv.fock_representation(L, m.ball(3), numeric=False)
print("Fock rep, CP:", cv.check_cp(fock, [fam], [e, p, q], 3)["CP"].status)


# A one-dimensional representation that sends v2 to zero passes.
def func(r, i):
    return [[1 if L.fiber(r).source[i] == L.V1 else 0]]


small = cv.Representation(L, 1, psi_e={L.V1: [[1]], L.V2: [[0]]}, func=func)
print("psi_e(delta_v2) = 0 rep, T axioms:", cv.check_T_axioms(small, m.ball(2)).passed)
print("psi_e(delta_v2) = 0 rep, CP:", cv.check_cp(small, [fam], [e, p, q], 3)["CP"].status)
