"""
Katsura covariance for a single bimodule
========================================

For ``X`` over ``C^V`` with a kernel, Katsura's condition only constrains
``ker(phi)^perp``.  Representations built from isometric inclusions are
covariant exactly when the extra room in ``psi_e`` sits over the kernel,
and (CP) on the tensor-power system agrees.
"""

# %%
from cnp import covariance as cv
from cnp import psys, samples

for seed in range(12):
    X = samples.katsura_bimodule(seed, nverts=2 + seed % 2)
    ps = psys.tensor_power_system(X)
    reps = [samples.katsura_rep(ps, seed, c) for c in (True, False)]
    reps = [r for r in reps if r is not None]
    if not reps:
        # cycles through J leave no nonzero finite model
        continue
    print(f"seed {seed}: kernel={X.kernel_vertices()} ker(phi)^perp={cv.katsura_ideal(X)}")
    for r in reps:
        out = cv.check_katsura(r, (2, 3))
        print(f"   {r.name:18s} dim={r.dim:2d} Katsura={out['Katsura'].status} CP={out['CP'].status}")
