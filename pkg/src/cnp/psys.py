"""Product systems of finite-dimensional bimodules over quasi-lattice ordered monoids.

Three concrete families are provided:

* :class:`WordSystem` -- generator fibres plus flip unitaries for each
  commuting pair of generators, over ``N^k`` or a right-angled Artin
  monoid.  Fibres are tensor products along the normal-form word and the
  multiplication maps are products of flips.  k-graph systems and tensor
  power systems are word systems.
* :class:`TrivialSystem` -- the one-dimensional system ``C^P`` over any monoid.
* :class:`LexSystem` -- the two-vertex system over the lexicographic cone.

On top of these sit the ideals ``I_p``, the augmented fibres ``X^{<=q}``,
the maps ``iota~`` and the (CP) defect engine.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import hilbmod as hm
from . import qlo
from . import scalars as sc
from .hilbmod import Bimodule, Operator
from .qlo import INFINITY, Elem
from .scalars import TOL


class SystemError_(ValueError):
    """Raised when a product system fails its axioms at construction."""


class ProductSystem:
    """Base class: subclasses supply ``_fiber`` and ``_mult``."""

    #: every ``phi_p`` is injective
    all_phi_injective: bool = False

    def __init__(self, monoid: qlo.Monoid, vertices: Sequence):
        self.monoid = monoid
        self.vertices = tuple(vertices)
        self.algebra = hm.VertexAlgebra(self.vertices)
        self._memo: dict = {}
        self._lock = threading.Lock()

    def _cached(self, key, build):
        with self._lock:
            if key in self._memo:
                return self._memo[key]
        val = build()
        with self._lock:
            return self._memo.setdefault(key, val)

    @property
    def e(self) -> Elem:
        return self.monoid.identity()

    def fiber(self, p: Elem) -> Bimodule:
        if p.monoid != self.monoid:
            raise qlo.DomainError("element from another monoid")
        if p.is_identity:
            return self._cached(("fiber", p), lambda: Bimodule.algebra_module(self.vertices))
        return self._cached(("fiber", p), lambda: self._fiber(p))

    def mult(self, p: Elem, q: Elem) -> tuple[hm.Tensor, np.ndarray]:
        """``(X_p (x) X_q, M_{p,q})`` with ``M`` given on the tensor basis."""
        return self._cached(("mult", p, q), lambda: self._mult_generic(p, q))

    def _mult_generic(self, p, q):
        Xp, Xq = self.fiber(p), self.fiber(q)
        T = hm.tensor(Xp, Xq)
        Z = self.fiber(p * q)
        if p.is_identity or q.is_identity:
            M = sc.zeros(Z.dim, len(T.pairs))
            for k, (i, j) in enumerate(T.pairs):
                M[j if p.is_identity else i, k] = 1
            return T, M
        return T, self._mult(p, q, T, Z)

    def _fiber(self, p):
        raise NotImplementedError

    def _mult(self, p, q, T, Z):
        raise NotImplementedError

    def phi(self, p: Elem, a) -> Operator:
        return self.fiber(p).left_action(a)

    def mult_columns(self, p: Elem, q: Elem):
        """``M_{p,q}`` as sparse columns plus a ``(i, j) -> column`` index."""

        def build():
            T, M = self.mult(p, q)
            cols = []
            for k in range(M.shape[1]):
                cols.append({r: M[r, k] for r in np.flatnonzero(M[:, k] != 0).tolist()})
            return cols, {pair: k for k, pair in enumerate(T.pairs)}

        return self._cached(("mcols", p, q), build)

    def iota_unit(self, p: Elem, i: int, j: int, r: Elem) -> dict:
        """``iota^r_p(E_ij)`` as a sparse ``{(row, col): value}`` map on ``X_r``."""
        return self._cached(("iu", p, i, j, r), lambda: self._iota_unit(p, i, j, r))

    def _iota_unit(self, p, i, j, r):
        t = qlo.quotient(p, r)
        if t is None:
            return {}
        if t.is_identity:
            return {(i, j): 1}
        Xp, Xr = self.fiber(p), self.fiber(r)
        if p.is_identity:
            if i != j:
                return {}
            v = Xp.basis[i]
            return {(k, k): 1 for k in range(Xr.dim) if Xr.range[k] == v}
        cols, index = self.mult_columns(p, t)
        Xt = self.fiber(t)
        out: dict = {}
        for k in range(Xt.dim):
            a, b = index.get((i, k)), index.get((j, k))
            if a is None or b is None:
                continue
            for ra, va in cols[a].items():
                for rb, vb in cols[b].items():
                    key = (ra, rb)
                    val = out.get(key, 0) + va * sc.conj(vb)
                    if val == 0:
                        out.pop(key, None)
                    else:
                        out[key] = val
        return out

    def iota(self, S, p: Elem, r: Elem) -> Operator:
        """``iota^r_p(S)``, with the convention that it is 0 unless ``p <= r``."""
        Xr = self.fiber(r)
        S = S.matrix if isinstance(S, Operator) else np.asarray(S)
        t = qlo.quotient(p, r)
        if t is None:
            return Xr.zero_operator()
        if t.is_identity:
            return Operator(Xr, S)
        if S.dtype.kind in "fc":
            out = np.zeros((Xr.dim, Xr.dim), dtype=complex)
        else:
            out = sc.zeros(Xr.dim)
        for i, j in zip(*np.nonzero(S != 0)):
            c = S[i, j]
            for (a, b), v in self.iota_unit(p, int(i), int(j), r).items():
                out[a, b] = out[a, b] + c * v
        return Operator(Xr, out)

    # hooks refined by subclasses
    def kernel(self, p: Elem) -> frozenset:
        """Vertices ``v`` with ``phi_p(delta_v) = 0``."""
        if p.is_identity:
            return frozenset()
        return frozenset(self.fiber(p).kernel_vertices())

    def ideal(self, p: Elem) -> frozenset:
        return self._cached(("ideal", p), lambda: self._ideal(p))

    def _ideal(self, p):
        if p.is_identity:
            return frozenset(self.vertices)
        if self.all_phi_injective:
            return frozenset()
        out = set(self.vertices)
        for r in qlo.interval(p):
            out &= self.kernel(r)
            if not out:
                break
        return frozenset(out)

    def augmented_support(self, q: Elem) -> list[Elem]:
        """The ``p <= q`` whose summand ``X_p . I_{p^-1 q}`` may be nonzero."""
        if self.all_phi_injective:
            return [q]
        return qlo.divisors(q)

    @property
    def plain_augmented(self) -> bool:
        """``X^{<=q} = X_q`` for every ``q``."""
        return self.all_phi_injective

    def factorize(self, p: Elem, i: int):
        """Generator factors of basis vector ``i`` of ``X_p``, or None."""
        return None

    def check_associativity(self, triples: Iterable, tol=TOL) -> list:
        """Triples ``(p, q, r)`` where ``(xy)z != x(yz)`` on basis vectors."""
        bad = []
        for p, q, r in triples:
            Xp, Xq, Xr = self.fiber(p), self.fiber(q), self.fiber(r)
            for i in range(Xp.dim):
                for j in range(Xq.dim):
                    for k in range(Xr.dim):
                        x = Xp.basis_vector(Xp.basis[i])
                        y = Xq.basis_vector(Xq.basis[j])
                        z = Xr.basis_vector(Xr.basis[k])
                        lhs = product(self, p * q, product(self, p, x, q, y), r, z)
                        rhs = product(self, p, x, q * r, product(self, q, y, r, z))
                        if not lhs.equals(rhs, tol):
                            bad.append((p, q, r))
                            break
                    else:
                        continue
                    break
                else:
                    continue
                break
        return bad


def product(ps: ProductSystem, p: Elem, x: hm.Vector, q: Elem, y: hm.Vector) -> hm.Vector:
    """The product ``xy`` in ``X_{pq}``."""
    T, M = ps.mult(p, q)
    z = T.elementary(x, y)
    return hm.Vector(ps.fiber(p * q), M @ z.coeffs)


# --- word systems ----------------------------------------------------------------

def _flat(label):
    return label if isinstance(label, tuple) else (label,)


class WordSystem(ProductSystem):
    """Product system presented by generator fibres and flip unitaries.

    ``flips[(g, h)]`` maps ``X_g (x) X_h`` onto ``X_h (x) X_g`` in the
    canonical tensor bases, for every commuting pair with ``g`` before
    ``h`` in generator order.
    """

    def __init__(self, monoid, vertices, generators: dict, flips: dict | None = None,
                 validate: bool = True, tol: float = TOL):
        if not monoid.has_words:
            raise qlo.DomainError("word systems need a monoid with generators")
        super().__init__(monoid, vertices)
        gens = tuple(monoid.generators)
        self.generators = {}
        for g in gens:
            key = g if g in generators else str(g)
            if key not in generators:
                raise SystemError_(f"missing fibre for generator {g!r}")
            X = generators[key]
            if X.vertices != self.vertices:
                raise SystemError_(f"fibre {g!r} has a different vertex set")
            self.generators[g] = X
        self._gorder = {g: i for i, g in enumerate(gens)}
        self.flips = {}
        flips = dict(flips or {})
        for (g, h), M in flips.items():
            g = _gen(gens, g)
            h = _gen(gens, h)
            if self._gorder[g] > self._gorder[h]:
                g, h, M = h, g, sc.adjoint(np.asarray(M))
            self.flips[(g, h)] = np.asarray(M)
        for i, g in enumerate(gens):
            for h in gens[i + 1:]:
                if monoid.commute(g, h) and (g, h) not in self.flips:
                    raise SystemError_(f"missing flip for commuting generators {g!r}, {h!r}")
                if not monoid.commute(g, h) and (g, h) in self.flips:
                    raise SystemError_(f"flip given for non-commuting generators {g!r}, {h!r}")
        self.all_phi_injective = all(not X.kernel_vertices() for X in self.generators.values())
        if validate:
            self.validate(tol)

    def validate(self, tol=TOL):
        for (g, h), M in self.flips.items():
            A = self.word_space((g, h))
            B = self.word_space((h, g))
            if M.shape != (B.dim, A.dim):
                raise SystemError_(f"flip {g}{h} has shape {M.shape}, expected {(B.dim, A.dim)}")
            if not hm.is_unitary(M, tol):
                raise SystemError_(f"flip {g}{h} is not unitary")
            bad = hm.grading_violations(M, A, B, tol)
            if bad:
                raise SystemError_(f"flip {g}{h} mixes range/source blocks at {bad[0]}")
        gens = list(self.generators)
        for a in range(len(gens)):
            for b in range(a + 1, len(gens)):
                for c in range(b + 1, len(gens)):
                    g, h, k = gens[a], gens[b], gens[c]
                    m = self.monoid
                    if m.commute(g, h) and m.commute(h, k) and m.commute(g, k):
                        w = (g, h, k)
                        x = self._swap_seq(w, [0, 1, 0])
                        y = self._swap_seq(w, [1, 0, 1])
                        if not sc.equal(_dense(x), _dense(y), tol):
                            raise SystemError_(f"flips violate the braid relation on {g}{h}{k}")

    def word_space(self, w: tuple) -> Bimodule:
        w = tuple(w)
        if not w:
            return Bimodule.algebra_module(self.vertices)

        def build():
            X = self.generators[w[0]]
            Z = Bimodule(self.vertices, [(b,) for b in X.basis], X.source, X.range)
            for g in w[1:]:
                Z = hm.tensor(Z, self.generators[g], lambda a, b: a + (b,)).module
            return Z

        return self._cached(("word", w), build)

    def _fiber(self, p):
        return self.word_space(self.monoid.word(p))

    def _swap(self, w: tuple, i: int):
        """Sparse matrix (column dicts) of the flip at positions ``i, i+1``."""
        key = ("swap", w, i)

        def build():
            g, h = w[i], w[i + 1]
            src = self.word_space(w)
            w2 = w[:i] + (h, g) + w[i + 2:]
            dst = self.word_space(w2)
            pair_src = self.word_space((g, h))
            pair_dst = self.word_space((h, g))
            if (g, h) in self.flips:
                F = self.flips[(g, h)]
            else:
                F = sc.adjoint(self.flips[(h, g)])
            cols = []
            for lab in src.basis:
                j = pair_src.index(lab[i:i + 2])
                col = {}
                for r in range(F.shape[0]):
                    c = F[r, j]
                    if c != 0:
                        new = lab[:i] + pair_dst.basis[r] + lab[i + 2:]
                        col[dst.index(new)] = c
                cols.append(col)
            return w2, cols

        return self._cached(key, build)

    def _swap_seq(self, w, positions):
        cols = [{k: 1} for k in range(self.word_space(w).dim)]
        for i in positions:
            w, S = self._swap(w, i)
            cols = _compose(S, cols)
        return cols, self.word_space(w).dim

    def reorder(self, w: tuple, target: tuple):
        """Unitary ``X_w -> X_target`` built from flips, as column dicts."""
        w = tuple(w)
        cur = list(w)
        positions = []
        for i, g in enumerate(target):
            j = i
            while cur[j] != g:
                j += 1
            while j > i:
                if not self.monoid.commute(cur[j - 1], cur[j]):
                    raise SystemError_(f"cannot move {cur[j]} past {cur[j - 1]}")
                cur[j - 1], cur[j] = cur[j], cur[j - 1]
                positions.append(j - 1)
                j -= 1
        return self._swap_seq(w, positions)

    def _mult(self, p, q, T, Z):
        wp, wq = self.monoid.word(p), self.monoid.word(q)
        cat = self.word_space(wp + wq)
        cols, n = self.reorder(wp + wq, self.monoid.word(p * q))
        M = sc.zeros(Z.dim, len(T.pairs))
        for k, lab in enumerate(T.module.basis):
            for r, c in cols[cat.index(lab[0] + lab[1])].items():
                M[r, k] = c
        return M

    def factorize(self, p, i):
        if p.is_identity:
            return None
        lab = self.fiber(p).basis[i]
        w = self.monoid.word(p)
        return [(g, self.generators[g].index(b)) for g, b in zip(w, lab)]


def _gen(gens, g):
    if g in gens:
        return g
    for x in gens:
        if str(x) == str(g):
            return x
    raise SystemError_(f"unknown generator {g!r}")


def _compose(S, cols):
    out = []
    for col in cols:
        acc: dict = {}
        for j, c in col.items():
            for r, d in S[j].items():
                v = acc.get(r, 0) + d * c
                if v == 0:
                    acc.pop(r, None)
                else:
                    acc[r] = v
        out.append(acc)
    return out


def _dense(sparse):
    cols, n = sparse
    M = sc.zeros(n, len(cols))
    for k, col in enumerate(cols):
        for r, c in col.items():
            M[r, k] = c
    return M


# --- the other families -----------------------------------------------------------

class TrivialSystem(ProductSystem):
    """``C^P``: every fibre is ``C`` and multiplication is multiplication of numbers."""

    all_phi_injective = True

    def __init__(self, monoid):
        super().__init__(monoid, ("*",))

    def _fiber(self, p):
        return Bimodule(self.vertices, [("1", str(p))], ["*"], ["*"])

    def _mult(self, p, q, T, Z):
        M = sc.zeros(1, 1)
        M[0, 0] = 1
        return M

    def factorize(self, p, i):
        if p.is_identity or not self.monoid.has_words:
            return None
        return [(g, 0) for g in self.monoid.word(p)]


class LexSystem(ProductSystem):
    """The two-vertex system over the lexicographic cone of ``Z x Z``.

    Fibres over ``S = {0} x N`` carry the identity left action; the others
    carry ``(z1, z2) -> (z1, z1)``.  Every multiplication sends
    ``xi (x) eta`` to the basis vector with range ``r(xi)`` and source ``s(eta)``.
    """

    V1, V2 = "v1", "v2"

    def __init__(self):
        super().__init__(qlo.LexZxZ(), (self.V1, self.V2))

    @staticmethod
    def in_S(p: Elem) -> bool:
        return p.data[0] == 0

    def _fiber(self, p):
        if self.in_S(p):
            return Bimodule(self.vertices, ["e1", "e2"], [self.V1, self.V2], [self.V1, self.V2])
        return Bimodule(self.vertices, ["e1", "e2"], [self.V1, self.V2], [self.V1, self.V1])

    def _mult(self, p, q, T, Z):
        X, Y = T.left, T.right
        M = sc.zeros(Z.dim, len(T.pairs))
        for k, (i, j) in enumerate(T.pairs):
            hits = [t for t in range(Z.dim) if Z.range[t] == X.range[i] and Z.source[t] == Y.source[j]]
            M[hits[0], k] = 1
        return M

    def kernel(self, p):
        if p.is_identity or self.in_S(p):
            return frozenset()
        return frozenset({self.V2})

    def _ideal(self, p):
        # (0,1) <= p for every p != e and phi_{(0,1)} is injective
        if p.is_identity:
            return frozenset(self.vertices)
        return frozenset()

    def augmented_support(self, q):
        return [q]

    @property
    def plain_augmented(self):
        return True


def from_kgraph(g) -> WordSystem:
    """The product system ``X(Lambda)`` with ``X_n = c_0(Lambda^n)``."""
    m = qlo.GridNk(g.k)
    gens, flips = {}, {}
    for i in range(1, g.k + 1):
        es = [e for e in g.edges.values() if e.colour == i]
        gens[i] = Bimodule(g.vertices, [e.id for e in es], [e.source for e in es], [e.range for e in es])
    for i in range(1, g.k + 1):
        for j in range(i + 1, g.k + 1):
            A = hm.tensor(gens[i], gens[j])
            B = hm.tensor(gens[j], gens[i])
            M = sc.zeros(B.module.dim, A.module.dim)
            for k, lab in enumerate(A.module.basis):
                M[B.module.index(g._swap[lab]), k] = 1
            flips[(i, j)] = M
    ps = WordSystem(m, g.vertices, gens, flips)
    ps.graph = g
    return ps


def tensor_power_system(X: Bimodule) -> WordSystem:
    """``X^{(x)}`` over ``N``: ``X_n = X^{(x) n}``."""
    return WordSystem(qlo.GridNk(1), X.vertices, {1: X}, {})


def trivial_system(m: qlo.Monoid) -> TrivialSystem:
    return TrivialSystem(m)


def lex_counterexample() -> LexSystem:
    return LexSystem()


# --- ideals and augmented fibres --------------------------------------------------

def ideal_I(ps: ProductSystem, p: Elem) -> frozenset:
    """``I_p`` as a vertex set; ``I_e = A``."""
    return ps.ideal(p)


def restrict_to_ideal(X: Bimodule, I) -> Bimodule:
    """``X . I``: the span of basis vectors whose source lies in ``I``."""
    return X.submodule(X.restrict_sources(I))


@dataclass(frozen=True, eq=False)
class AugmentedFiber:
    owner: ProductSystem
    q: Elem
    summands: tuple  # (p, indices into fiber(p))
    module: Bimodule
    offsets: tuple

    def phi_tilde(self, a) -> Operator:
        return self.module.left_action(a)

    def block(self, p: Elem):
        for (r, idx), off in zip(self.summands, self.offsets):
            if r == p:
                return list(range(off, off + len(idx)))
        return []

    def paths(self) -> list:
        """Basis labels of every summand, ``(p, label)``."""
        return list(self.module.basis)


def augmented_fiber(ps: ProductSystem, q: Elem) -> AugmentedFiber:
    """``X^{<=q} = (+)_{p <= q} X_p . I_{p^-1 q}``."""

    def build():
        summands, basis, src, rng, offsets = [], [], [], [], []
        n = 0
        for p in ps.augmented_support(q):
            I = ps.ideal(qlo.quotient(p, q))
            if not I:
                continue
            X = ps.fiber(p)
            idx = tuple(X.restrict_sources(I))
            if not idx:
                continue
            summands.append((p, idx))
            offsets.append(n)
            n += len(idx)
            for i in idx:
                basis.append((p, X.basis[i]))
                src.append(X.source[i])
                rng.append(X.range[i])
        module = Bimodule(ps.vertices, basis, src, rng)
        return AugmentedFiber(ps, q, tuple(summands), module, tuple(offsets))

    return ps._cached(("aug", q), build)


@dataclass(frozen=True)
class InjectivityVerdict:
    injective: bool
    witness: str | None = None

    def __bool__(self):
        return self.injective


def phi_tilde_injective(ps: ProductSystem, q: Elem) -> InjectivityVerdict:
    aug = augmented_fiber(ps, q)
    hit = set(r for r in aug.module.range if r is not None)
    for v in ps.vertices:
        if v not in hit:
            return InjectivityVerdict(False, v)
    return InjectivityVerdict(True)


def iota_tilde(ps: ProductSystem, S, p: Elem, q: Elem) -> Operator:
    """``iota~^q_p(S)``: ``iota^r_p(S)`` on each summand ``r >= p``, zero elsewhere."""
    aug = augmented_fiber(ps, q)
    S = S.matrix if isinstance(S, Operator) else np.asarray(S)
    out = sc.zeros(aug.module.dim)
    if not qlo.divides(p, q):
        return Operator(aug.module, out)
    for (r, idx), off in zip(aug.summands, aug.offsets):
        if not qlo.divides(p, r):
            continue
        B = ps.iota(S, p, r).matrix
        sub = B[np.ix_(idx, idx)]
        out[off:off + len(idx), off:off + len(idx)] = sub
    return Operator(aug.module, out)


def iota_tilde_unit(ps: ProductSystem, p: Elem, i: int, j: int, q: Elem) -> dict:
    """``iota~^q_p(E_ij)`` as a sparse map on ``X^{<=q}``."""
    aug = augmented_fiber(ps, q)
    out = {}
    if not qlo.divides(p, q):
        return out
    for (r, idx), off in zip(aug.summands, aug.offsets):
        if not qlo.divides(p, r):
            continue
        pos = {k: n for n, k in enumerate(idx)}
        for (a, b), v in ps.iota_unit(p, i, j, r).items():
            if a in pos and b in pos:
                out[(off + pos[a], off + pos[b])] = v
    return out


def invariance_defect(ps: ProductSystem, S, p: Elem, q: Elem) -> float:
    """Largest entry of ``iota^r_p(S)`` leaving a summand ``X_r . I_{r^-1 q}``."""
    aug = augmented_fiber(ps, q)
    worst = 0.0
    for r, idx in aug.summands:
        if not qlo.divides(p, r):
            continue
        B = ps.iota(S, p, r).matrix
        out = [i for i in range(B.shape[0]) if i not in set(idx)]
        if out and idx:
            worst = max(worst, sc.max_abs(B[np.ix_(out, list(idx))]))
    return worst


# --- compact families and the (CP) engine -----------------------------------------

@dataclass
class CompactFamily:
    """Finitely many ``T_p in K(X_p)``.

    ``kind`` and ``meta`` record where the family came from, which the
    vanishing checker uses to attach exact certificates.
    """

    owner: ProductSystem
    entries: dict
    kind: str | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for p, T in self.entries.items():
            X = self.owner.fiber(p)
            M = T.matrix if isinstance(T, Operator) else np.asarray(T)
            op = Operator(X, M)
            if not op.is_adjointable():
                raise ValueError(f"T_{p} is not source-block-diagonal")
            clean[p] = op
        self.entries = clean

    @property
    def support(self) -> list[Elem]:
        return list(self.entries)

    def is_zero(self) -> bool:
        return all(T.is_zero() for T in self.entries.values())


def cp_defect(ps: ProductSystem, fam: CompactFamily, s: Elem) -> Operator:
    """``sum_{p in F} iota~^s_p(T_p)`` on ``X^{<=s}``."""
    aug = augmented_fiber(ps, s)
    out = sc.zeros(aug.module.dim)
    for p, T in fam.entries.items():
        out = out + iota_tilde(ps, T, p, s).matrix
    return Operator(aug.module, out)


@dataclass
class DefectVerdict:
    status: str  # VanishesForLargeS | FailsAt | InconclusiveAtHorizon
    horizon: int
    witnesses: list = field(default_factory=list)
    s: Elem | None = None
    norm: float = 0.0
    exact: bool = False
    certificate: str = ""
    hypothesis_violated: list = field(default_factory=list)
    checked: int = 0

    @property
    def vanishes(self) -> bool:
        return self.status == "VanishesForLargeS"

    def to_json(self) -> dict:
        out = {"status": self.status, "horizon": self.horizon, "exact": self.exact,
               "checked_s": self.checked}
        if self.witnesses:
            out["witnesses"] = [[str(q), str(r)] for q, r in self.witnesses]
        if self.s is not None:
            out["s"] = str(self.s)
            out["norm"] = self.norm
        if self.certificate:
            out["certificate"] = self.certificate
        if self.hypothesis_violated:
            out["HypothesisViolated"] = {"phi_tilde_non_injective_at": [str(s) for s in self.hypothesis_violated]}
        return out


def _stabilizes(r: Elem, support) -> bool:
    """Every support element either divides ``r`` or has no common upper bound with it."""
    return all(qlo.divides(p, r) or qlo.lub(p, r) is INFINITY for p in support)


def check_cp_vanishes(ps: ProductSystem, fam: CompactFamily, test_qs: Sequence[Elem],
                      horizon: int, tol: float = TOL) -> DefectVerdict:
    """Decide whether ``sum iota~^s_p(T_p) = 0`` for large ``s``, as far as honestly possible.

    For each ``q`` the frontier witness ``r`` absorbs the family's support;
    if some ``s >= r`` in the window has a nonzero defect, later candidates
    ``r' >= r`` from the window are tried before reporting ``FailsAt``.
    """
    support = sorted(fam.support, key=lambda p: (len(p), str(p)))
    cache: dict = {}
    hyp: list = []

    def defect_zero(s):
        if s not in cache:
            D = cp_defect(ps, fam, s)
            cache[s] = (D.is_zero(tol), hm.operator_norm(D))
            if not phi_tilde_injective(ps, s):
                hyp.append(s)
        return cache[s]

    witnesses = []
    all_exact = True
    certs = set()
    for q in test_qs:
        fr = qlo.frontier_for(q, support, horizon)
        r0 = fr.witnesses[0]
        window = sorted(fr.window(), key=lambda s: (len(s), str(s)))
        if not window:
            return DefectVerdict("InconclusiveAtHorizon", horizon, witnesses, checked=len(cache),
                                 hypothesis_violated=hyp)
        chosen, first_fail = None, None
        for r in window:
            above = [s for s in window if qlo.divides(r, s)]
            bad = next((s for s in above if not defect_zero(s)[0]), None)
            if bad is None:
                chosen = r
                break
            if first_fail is None:
                first_fail = bad
        if chosen is None:
            return DefectVerdict("FailsAt", horizon, witnesses, s=first_fail,
                                 norm=defect_zero(first_fail)[1], checked=len(cache),
                                 hypothesis_violated=hyp)
        witnesses.append((q, chosen))
        cert = _certify(ps, fam, chosen, support, tol, defect_zero)
        if cert:
            certs.add(cert)
        else:
            all_exact = False
    return DefectVerdict("VanishesForLargeS", horizon, witnesses, exact=all_exact and bool(test_qs),
                         certificate="; ".join(sorted(certs)) if all_exact else "",
                         checked=len(cache), hypothesis_violated=hyp)


def _certify(ps, fam, r, support, tol, defect_zero) -> str:
    """Reason why vanishing at the window extends to every ``s >= r``, or ''."""
    if fam.kind == "ck" and fam.meta.get("exhaustive"):
        return "exhaustive set: the defect vanishes for every s >= q v (v d(F))"
    if ps.plain_augmented and _stabilizes(r, support):
        # iota^s_p = iota^s_r iota^r_p for p <= r, and the other terms vanish
        return "stabilized support with X^{<=s} = X_s: defect(s) = iota^s_r(defect(r))"
    if isinstance(ps.monoid, qlo.GridNk) and ps.monoid.k == 1:
        h = max((p.data[0] for p in support), default=0)
        s1 = ps.monoid.elem((max(h + 1, r.data[0]),))
        if defect_zero(s1)[0]:
            return "N-system: vanishing at s = max(F)+1 persists"
    return ""


def vanishing_families(ps: ProductSystem, support: Sequence[Elem], at: Sequence[Elem],
                       kind: str | None = None) -> list[CompactFamily]:
    """A basis of the families on ``support`` whose defect is zero at every ``s`` in ``at``.

    Solved exactly by sparse elimination over the compact matrix units.
    """
    variables = []
    for p in support:
        X = ps.fiber(p)
        for i, j in hm.compact_units(X):
            variables.append((p, i, j))
    rows: dict = {}
    for s in at:
        for col, (p, i, j) in enumerate(variables):
            for (a, b), v in iota_tilde_unit(ps, p, i, j, s).items():
                rows.setdefault((s, a, b), {})[col] = v
    basis = sc.nullspace(rows.values(), len(variables))
    fams = []
    for vec in basis:
        entries = {p: sc.zeros(ps.fiber(p).dim) for p in support}
        for col, c in vec.items():
            p, i, j = variables[col]
            entries[p][i, j] = c
        entries = {p: M for p, M in entries.items() if not sc.is_zero(M)}
        fams.append(CompactFamily(ps, entries, kind=kind))
    return fams


# --- Fock spaces ---------------------------------------------------------------

class FockSpace:
    """``(+)_{q in D} X_q`` (or ``X^{<=q}`` when augmented) over a finite window ``D``.

    Creation operators drop every contribution that would leave ``D``.
    ``D`` must be closed under taking right factors so that annihilation
    is never truncated.
    """

    def __init__(self, ps: ProductSystem, D: Iterable[Elem], augmented: bool = False):
        self.system = ps
        self.augmented = augmented
        self.D = sorted(set(D), key=lambda s: (len(s), str(s)))
        self._pos = {q: n for n, q in enumerate(self.D)}
        if ps.monoid.has_words:
            for q in self.D:
                w = ps.monoid.word(q)
                for g in set(w):
                    t = qlo.quotient(ps.monoid.from_word((g,)), q)
                    if t is not None and t not in self._pos:
                        raise ValueError(f"window is not closed under right factors: {q} in D, {t} not")
        self.modules, self.offsets = [], []
        n = 0
        for q in self.D:
            X = augmented_fiber(ps, q).module if augmented else ps.fiber(q)
            self.modules.append(X)
            self.offsets.append(n)
            n += X.dim
        self.dim = n

    def __contains__(self, q):
        return q in self._pos

    def block(self, q: Elem) -> slice:
        k = self._pos[q]
        return slice(self.offsets[k], self.offsets[k] + self.modules[k].dim)

    def projection(self, comps) -> np.ndarray:
        P = sc.zeros(self.dim)
        for q in comps:
            sl = self.block(q)
            for i in range(sl.start, sl.stop):
                P[i, i] = 1
        return P

    def interior(self, chain: Sequence[Elem]) -> list[Elem]:
        """Components ``t`` such that applying ``chain`` right to left never leaves ``D``."""
        out = []
        for t in self.D:
            cur, ok = t, True
            for p in reversed(list(chain)):
                cur = p * cur
                if cur not in self._pos:
                    ok = False
                    break
            if ok:
                out.append(t)
        return out

    def annihilation_safe(self, elems: Sequence[Elem]) -> list[Elem]:
        """Components ``t`` where ``l(x)*`` for ``x`` in each ``X_p`` is not truncated."""
        out = []
        for t in self.D:
            if all((u := qlo.quotient(p, t)) is None or u in self._pos for p in elems):
                out.append(t)
        return out

    def creation(self, p: Elem, x) -> np.ndarray:
        """``l(x)`` or ``l~(x)`` for ``x in X_p`` given as a Vector or coefficient list."""
        c = x.coeffs if isinstance(x, hm.Vector) else np.asarray(x, dtype=object)
        ps = self.system
        out = sc.zeros(self.dim)
        nz = [i for i in range(len(c)) if c[i] != 0]
        for q in self.D:
            pq = p * q
            if pq not in self._pos:
                continue
            rows, cols = self.block(pq), self.block(q)
            if self.augmented:
                self._aug_block(p, q, pq, c, nz, out, rows.start, cols.start)
                continue
            mcols, index = ps.mult_columns(p, q)
            for j in range(ps.fiber(q).dim):
                for i in nz:
                    k = index.get((i, j))
                    if k is None:
                        continue
                    for r, v in mcols[k].items():
                        out[rows.start + r, cols.start + j] += c[i] * v
        return out

    def _aug_block(self, p, q, pq, c, nz, out, r0, c0):
        ps = self.system
        src, dst = augmented_fiber(ps, q), augmented_fiber(ps, pq)
        targets = {t: (idx, off) for (t, idx), off in zip(dst.summands, dst.offsets)}
        for (t, idx), off in zip(src.summands, src.offsets):
            mcols, index = ps.mult_columns(p, t)
            tgt = targets.get(p * t)
            pos = {k: n for n, k in enumerate(tgt[0])} if tgt else {}
            for a, j in enumerate(idx):
                for i in nz:
                    k = index.get((i, j))
                    if k is None:
                        continue
                    for r, v in mcols[k].items():
                        if r not in pos:
                            raise AssertionError(
                                f"l~ leaves the summand X_{p * t}.I at component {pq}")
                        out[r0 + tgt[1] + pos[r], c0 + off + a] += c[i] * v

    def compact(self, p: Elem, T) -> np.ndarray:
        """``l^{(p)}(T) = sum T_ij l(xi_i) l(xi_j)*``."""
        T = T.matrix if isinstance(T, Operator) else np.asarray(T)
        X = self.system.fiber(p)
        ops = {}
        out = sc.zeros(self.dim)
        for i, j in zip(*np.nonzero(T != 0)):
            for k in (int(i), int(j)):
                if k not in ops:
                    e = [0] * X.dim
                    e[k] = 1
                    ops[k] = self.creation(p, e)
            out = out + T[i, j] * (ops[int(i)] @ sc.adjoint(ops[int(j)]))
        return out

    def family(self, fam: CompactFamily) -> np.ndarray:
        out = sc.zeros(self.dim)
        for p, T in fam.entries.items():
            out = out + self.compact(p, T)
        return out


def fock_operator(ps: ProductSystem, p: Elem, x, D: Iterable[Elem], augmented: bool = False):
    """The truncated creation operator of ``x in X_p``; returns ``(space, matrix)``."""
    fs = FockSpace(ps, D, augmented)
    return fs, fs.creation(p, x)


@dataclass
class NormDecay:
    status: str  # Found | Inconclusive
    s: Elem | None
    norms: dict
    horizon: int

    def to_json(self):
        return {"status": self.status, "s": None if self.s is None else str(self.s),
                "horizon": self.horizon, "norms": {str(k): v for k, v in self.norms.items()}}


def boundary_norm_decay(ps: ProductSystem, fam: CompactFamily | None = None, element=None,
                        eps: float = 1e-9, horizon: int = 3, start: Elem | None = None,
                        augmented: bool = True) -> NormDecay:
    """Search above ``start`` for ``s`` with ``||element restricted to X^{<=s}|| < eps``.

    ``element`` is a list of ``(coeff, factors)`` with factors ``("l", p, x)``,
    ``("l*", p, x)``, ``("compact", p, T)`` or ``("family",)``; the default
    is the family's element ``sum l~^{(p)}(T_p)``.  Only components where
    no factor is truncated are used.
    """
    start = start or ps.e
    if element is None:
        element = [(1, [("family",)])]
    if fam is None:
        fam = CompactFamily(ps, {})
    support = list(fam.support)
    for _, factors in element:
        for f in factors:
            if f[0] != "family":
                support.append(f[1])
    fs = FockSpace(ps, ps.monoid.ball(horizon), augmented)
    M = sc.zeros(fs.dim)
    for coeff, factors in element:
        term = sc.eye(fs.dim)
        for f in factors:
            if f[0] == "l":
                term = term @ fs.creation(f[1], f[2])
            elif f[0] == "l*":
                term = term @ sc.adjoint(fs.creation(f[1], f[2]))
            elif f[0] == "compact":
                term = term @ fs.compact(f[1], f[2])
            else:
                term = term @ fs.family(fam)
        M = M + coeff * term

    def safe(s):
        for _, factors in element:
            cur = s
            for f in reversed(factors):
                if f[0] == "l":
                    cur = f[1] * cur
                    if cur not in fs:
                        return False
                elif f[0] == "l*":
                    t = qlo.quotient(f[1], cur)
                    if t is None:
                        break
                    cur = t
                else:
                    ps_ = fam.support if f[0] == "family" else [f[1]]
                    for p in ps_:
                        t = qlo.quotient(p, cur)
                        if t is not None and t not in fs:
                            return False
        return True

    window = sorted(qlo.frontier_for(start, support, horizon).window(), key=lambda s: (len(s), str(s)))
    norms = {}
    for s in window:
        if s not in fs or not safe(s):
            continue
        norms[s] = sc.opnorm(M[:, fs.block(s)]) if fs.block(s).stop > fs.block(s).start else 0.0
        if norms[s] < eps:
            return NormDecay("Found", s, norms, horizon)
    return NormDecay("Inconclusive", None, norms, horizon)


def ck_family(ps: WordSystem, v, F) -> CompactFamily:
    """The inclusion-exclusion family ``L_{delta_v} + sum_G (-1)^|G| sum_{lam in MCE(G)} delta_lam delta_lam*``.

    ``ps`` must come from :func:`from_kgraph`; ``F`` is a list of paths with range ``v``.
    """
    g = ps.graph
    m = ps.monoid
    entries: dict = {}

    def add(p, i, c):
        if p not in entries:
            entries[p] = sc.zeros(ps.fiber(p).dim)
        entries[p][i, i] += c

    add(m.identity(), ps.fiber(m.identity()).index(v), 1)
    F = list(F)
    for size in range(1, len(F) + 1):
        for G in itertools.combinations(F, size):
            for lam in g.mce_set(G):
                p = m.elem(lam.degree)
                add(p, ps.fiber(p).index(lam.key), (-1) ** size)
    entries = {p: M for p, M in entries.items() if not sc.is_zero(M)}
    return CompactFamily(ps, entries, kind="ck",
                         meta={"vertex": v, "F": [str(mu) for mu in F],
                               "exhaustive": g.is_exhaustive(v, F)})
