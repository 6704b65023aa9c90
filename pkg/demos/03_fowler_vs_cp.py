"""
Fowler covariance versus (CP)
=============================

Over ``N^2`` with injective left actions the two notions agree.  A
function-type representation passes both; inflating ``psi_e`` at one vertex
breaks both; truncated Fock representations are Toeplitz and fail both.
"""

# %%
from cnp import covariance as cv
from cnp import qlo, samples

N2 = qlo.GridNk(2)
ps, sigmas = samples.function_system(seed=0, n=3)
families = cv.standard_cp_families(ps, 3)
print(len(families), "test families")

reps = {
    "function-type": samples.function_rep(ps, sigmas, 0),
    "inflated": samples.function_rep(ps, sigmas, 0, inflate=True),
    "Fock": cv.fock_representation(ps, N2.ball(3), numeric=False),
}

# %%
for name, rep in reps.items():
    T = cv.check_T_axioms(rep, N2.ball(2)).passed
    fowler = cv.check_fowler(rep, N2.ball(2))["Fowler"]
    cp = cv.check_cp(rep, families, N2.ball(1), 3)["CP"]
    print(f"{name:14s} dim={rep.dim:3d} T={T} Fowler={fowler.status:5s} CP={cp.status}")

# %% A Fowler failure carries both sides of the identity
w = cv.check_fowler(reps["inflated"], N2.ball(1))["Fowler"].witnesses[0]
print(w["identity"], "at p =", w["p"], w["a"], "residual", w["residual"])
