"""Seeded generators of product systems and representations with exact data.

Used by the test suite, the acceptance runner and the demos.  Unitaries
are built from Pythagorean triples so every entry is a Gaussian rational.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import hilbmod as hm
from . import psys
from . import qlo
from . import scalars as sc
from .covariance import Representation

_TRIPLES = [(3, 4, 5), (5, 12, 13), (8, 15, 17), (7, 24, 25), (20, 21, 29)]


def rng_of(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def phase(rng) -> object:
    """A random Gaussian-rational point on the unit circle."""
    if rng.random() < 0.3:
        return [1, -1, sc.I, -sc.I][rng.integers(4)]
    a, b, c = _TRIPLES[rng.integers(len(_TRIPLES))]
    if rng.random() < 0.5:
        a, b = b, a
    return sc.Gaussian.make(Fraction(a * (1 if rng.random() < .5 else -1), c),
                            Fraction(b * (1 if rng.random() < .5 else -1), c))


def unitary(rng, n: int) -> np.ndarray:
    """A random exact unitary: phases, a permutation and Givens rotations."""
    U = sc.zeros(n)
    perm = rng.permutation(n)
    for i in range(n):
        U[perm[i], i] = phase(rng)
    for _ in range(n - 1):
        i, j = sorted(rng.choice(n, size=2, replace=False)) if n > 1 else (0, 0)
        if i == j:
            break
        a, b, c = _TRIPLES[rng.integers(len(_TRIPLES))]
        G = sc.eye(n)
        G[i, i], G[i, j], G[j, i], G[j, j] = Fraction(a, c), Fraction(-b, c), Fraction(b, c), Fraction(a, c)
        U = G @ U
    return U


def random_bimodule(rng, vertices, dim: int, injective: bool = True, prefix: str = "x",
                    kernel: bool = False) -> hm.Bimodule:
    """Random basis with ranges and sources; ``injective`` makes every vertex a range.

    With ``kernel`` at least one vertex receives nothing.
    """
    vertices = list(vertices)
    for _ in range(200):
        rng_ = [vertices[k] for k in rng.integers(len(vertices), size=dim)]
        src = [vertices[k] for k in rng.integers(len(vertices), size=dim)]
        hit = set(rng_)
        if injective and len(hit) < len(vertices):
            continue
        if kernel and len(hit) == len(vertices):
            continue
        return hm.Bimodule(vertices, [f"{prefix}{i}" for i in range(dim)], src, rng_)
    raise ValueError("could not draw a bimodule with the requested kernel pattern")


def _block_flip(rng, A: hm.Bimodule, B: hm.Bimodule) -> np.ndarray:
    """A random unitary ``A -> B`` preserving (range, source) blocks, or None."""
    blocks_a, blocks_b = {}, {}
    for i in range(A.dim):
        blocks_a.setdefault((A.range[i], A.source[i]), []).append(i)
    for i in range(B.dim):
        blocks_b.setdefault((B.range[i], B.source[i]), []).append(i)
    if {k: len(v) for k, v in blocks_a.items()} != {k: len(v) for k, v in blocks_b.items()}:
        return None
    M = sc.zeros(B.dim, A.dim)
    for key, ia in blocks_a.items():
        ib = blocks_b[key]
        U = unitary(rng, len(ia))
        for r, i in enumerate(ib):
            for s, j in enumerate(ia):
                M[i, j] = U[r, s]
    return M


def random_word_system(seed, monoid: qlo.Monoid, nverts: int, maxdim: int = 3,
                       injective: bool = True, tries: int = 200) -> psys.WordSystem:
    """Random generator fibres (dim <= maxdim) with block-preserving random flips.

    Commuting generators must have commuting multiplicity matrices, so a
    draw is retried until the tensor blocks match; Artin monoids with a
    triangle of commuting generators are rejected up front since random
    flips almost never satisfy the braid relation.
    """
    rng = rng_of(seed)
    vs = [f"v{i}" for i in range(nverts)]
    gens = list(monoid.generators)
    for _ in range(tries):
        base = random_bimodule(rng, vs, int(rng.integers(nverts if injective else 1, maxdim + 1)),
                               injective)
        fibres = {}
        for g in gens:
            if rng.random() < 0.5:
                X = base
            else:
                X = random_bimodule(rng, vs, base.dim, injective)
            fibres[g] = hm.Bimodule(vs, [f"{g}{i}" for i in range(X.dim)], X.source, X.range)
        flips, ok = {}, True
        for a, g in enumerate(gens):
            for h in gens[a + 1:]:
                if monoid.commute(g, h):
                    A = hm.tensor(fibres[g], fibres[h]).module
                    B = hm.tensor(fibres[h], fibres[g]).module
                    M = _block_flip(rng, A, B)
                    if M is None:
                        ok = False
                        break
                    flips[(g, h)] = M
            if not ok:
                break
        if not ok:
            continue
        try:
            return psys.WordSystem(monoid, vs, fibres, flips)
        except psys.SystemError_:
            continue
    raise ValueError("no random system found; relax the constraints")


def random_raag(seed, n: int = 3) -> qlo.Raag:
    """Random Artin monoid on ``n`` generators with no commuting triangle."""
    rng = rng_of(seed)
    vs = "abcd"[:n]
    while True:
        edges = [(x, y) for i, x in enumerate(vs) for y in vs[i + 1:] if rng.random() < 0.5]
        adj = {(x, y) for x, y in edges} | {(y, x) for x, y in edges}
        if any((x, y) in adj and (y, z) in adj and (x, z) in adj
               for x in vs for y in vs for z in vs if len({x, y, z}) == 3):
            continue
        return qlo.Raag.from_edges(list(vs), edges)


# --- function-type systems and their Cuntz-Pimsner representations ------------------

def function_system(seed, n: int = 3):
    """A 2-colour system in which every vertex receives exactly one edge of each colour.

    Colour maps ``sigma_1`` and ``sigma_2 = sigma_1^m`` commute and miss
    vertex ``v0``, so representations can be inflated there.  Returns
    ``(system, sigmas)``.
    """
    rng = rng_of(seed)
    if n < 2:
        raise ValueError("need at least two vertices")
    vs = [f"v{i}" for i in range(n)]
    s1 = {v: vs[int(rng.integers(1, n))] for v in vs}
    m = int(rng.integers(1, 3))
    s2 = {}
    for v in vs:
        w = v
        for _ in range(m):
            w = s1[w]
        s2[v] = w
    sig = {1: s1, 2: s2}
    gens = {g: hm.Bimodule(vs, [f"{g}{v}" for v in vs], [sig[g][v] for v in vs], vs) for g in (1, 2)}
    A = hm.tensor(gens[1], gens[2]).module
    B = hm.tensor(gens[2], gens[1]).module
    M = sc.zeros(B.dim, A.dim)
    for k, (x, y) in enumerate(A.basis):
        v = x[1:]
        M[B.index((f"2{v}", f"1{s2[v]}")), k] = 1
    return psys.WordSystem(qlo.GridNk(2), vs, gens, {(1, 2): M}), sig


def function_rep(ps, sigmas, seed, mult: int = 2, inflate: bool = False) -> Representation:
    """``psi(edge into v of colour g) = E_{v, sigma_g(v)} (x) U_g`` with commuting diagonal ``U_g``.

    With ``inflate`` an extra vector is added under ``psi_e(delta_v0)``; no
    edge image reaches it, so Fowler covariance fails there while
    (T1)-(T3) still hold.
    """
    rng = rng_of(seed)
    vs = list(ps.vertices)
    n = len(vs) * mult + (1 if inflate else 0)
    pos = {v: i for i, v in enumerate(vs)}
    U = {g: [phase(rng) for _ in range(mult)] for g in sigmas}
    psi_e = {}
    for v in vs:
        P = sc.zeros(n)
        for a in range(mult):
            P[pos[v] * mult + a, pos[v] * mult + a] = 1
        if inflate and v == vs[0]:
            P[n - 1, n - 1] = 1
        psi_e[v] = P
    gens = {}
    for g, sig in sigmas.items():
        imgs = []
        for v in vs:
            M = sc.zeros(n)
            for a in range(mult):
                M[pos[v] * mult + a, pos[sig[v]] * mult + a] = U[g][a]
            imgs.append(M)
        gens[g] = imgs
    return Representation(ps, n, psi_e=psi_e, generators=gens,
                          name="inflated" if inflate else "function-type")


# --- single bimodules with a kernel --------------------------------------------------

def katsura_bimodule(seed, nverts: int = 3, maxdim: int = 3) -> hm.Bimodule:
    rng = rng_of(seed)
    nverts = max(2, nverts)
    return random_bimodule(rng, [f"v{i}" for i in range(nverts)], int(rng.integers(1, maxdim + 1)),
                           injective=False, prefix="x", kernel=True)


def _dims(X: hm.Bimodule, f: dict):
    """Least solution of ``d = N d + f``, or None if it is unbounded."""
    d = {v: 0 for v in X.vertices}
    for _ in range(len(X.vertices) + 2):
        new = {v: f.get(v, 0) + sum(d[X.source[i]] for i in range(X.dim) if X.range[i] == v)
               for v in X.vertices}
        if new == d:
            return d
        d = new
    return None


def _acyclic_feed(X: hm.Bimodule) -> list:
    """Vertices whose forward orbit (source to range) never meets a cycle."""
    succ = {v: {X.range[i] for i in range(X.dim) if X.source[i] == v} for v in X.vertices}
    out = []
    for v in X.vertices:
        seen, stack, ok = set(), [(v, ())], True
        while stack and ok:
            w, trail = stack.pop()
            for u in succ[w]:
                if u in trail or u == w:
                    ok = False
                    break
                stack.append((u, trail + (w,)))
        if ok:
            out.append(v)
    return out


def katsura_rep(ps: psys.WordSystem, seed, covariant: bool = True) -> Representation | None:
    """A representation of ``X^{(x)}`` built from isometric inclusions.

    Dimensions are the least solution of ``d_v = sum_{r(x)=v} d_{s(x)} + f_v``,
    where ``f_v`` is the part of ``psi_e(delta_v)`` missed by the edge images.
    Covariant representations have ``f_v = 0`` on ``ker(phi)^perp``.  ``f``
    lives on vertices that never feed a cycle, so ``d`` stays finite; returns
    None when the required support is empty.
    """
    rng = rng_of(seed)
    X = ps.generators[1]
    safe = _acyclic_feed(X)
    ker = [v for v in X.kernel_vertices() if v in safe]
    J = [v for v in safe if v not in X.kernel_vertices()]
    if not ker or (not covariant and not J):
        return None
    f = {v: int(rng.integers(1, 3)) for v in ker}
    if not covariant:
        f[J[int(rng.integers(len(J)))]] = 1
    d = _dims(X, f)
    if d is None:
        return None
    off, n = {}, 0
    for v in X.vertices:
        off[v] = n
        n += d[v]
    psi_e = {}
    for v in X.vertices:
        P = sc.zeros(n)
        for a in range(d[v]):
            P[off[v] + a, off[v] + a] = 1
        psi_e[v] = P
    slot = dict(off)
    imgs = []
    for i in range(X.dim):
        r, s = X.range[i], X.source[i]
        M = sc.zeros(n)
        for a in range(d[s]):
            M[slot[r] + a, off[s] + a] = 1
        slot[r] += d[s]
        imgs.append(M)
    return Representation(ps, n, psi_e=psi_e, generators={1: imgs},
                          name="Katsura-covariant" if covariant else "non-covariant")
