"""Representations of product systems in matrix algebras and their covariance checks.

A :class:`Representation` stores ``psi_e`` and the images of generator
basis vectors; every other ``psi_p`` is synthesized along normal-form
factorizations (or supplied directly, e.g. by a Fock window).  The
``check_*`` functions verify the defining identities on fibre bases and
return :class:`CovarianceReport` objects whose failures carry witnesses.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import hilbmod as hm
from . import psys
from . import qlo
from . import scalars as sc
from .qlo import INFINITY, Elem
from .scalars import TOL

PASS, FAIL, NA, VERIFIED = "Pass", "Fail", "NotApplicable", "VerifiedUpToHorizon"


class MissingFibre(KeyError):
    pass


class Representation:
    """``psi: X -> M_N``.

    Parameters
    ----------
    psi_e : mapping vertex -> N x N matrix
    generators : mapping generator -> list (by fibre basis index) or dict (by label)
    fibres : mapping p -> list of matrices, overriding synthesis
    func : callable ``(p, i) -> matrix`` used when neither of the above applies
    window : a :class:`psys.FockSpace` whose truncation defines interior projections
    numeric : evaluate in complex floating point instead of exact arithmetic
    """

    def __init__(self, system: psys.ProductSystem, dim: int, psi_e=None, generators=None,
                 fibres=None, func: Callable | None = None, window: psys.FockSpace | None = None,
                 numeric: bool = False, name: str = ""):
        self.system = system
        self.dim = int(dim)
        self.numeric = numeric
        self.window = window
        self.name = name
        self.func = func
        self._cache: dict = {}
        self.psi_e = {}
        for v in system.vertices:
            if psi_e is not None:
                M = psi_e.get(v, psi_e.get(str(v)))
                self.psi_e[v] = self._mat(M if M is not None else sc.zeros(self.dim))
        self.generators = {}
        for g, imgs in (generators or {}).items():
            g = _gen_key(system, g)
            if isinstance(imgs, dict):
                basis = system.generators[g].basis if hasattr(system, "generators") else system.fiber(
                    system.monoid.from_word((g,))).basis
                imgs = [imgs[b] if b in imgs else imgs[str(b)] for b in basis]
            self.generators[g] = [self._mat(M) for M in imgs]
        self.fibres = {p: [self._mat(M) for M in Ms] for p, Ms in (fibres or {}).items()}

    def _mat(self, M):
        M = np.asarray(M)
        if M.shape != (self.dim, self.dim):
            raise ValueError(f"expected a {self.dim}x{self.dim} matrix, got {M.shape}")
        if self.numeric:
            return sc.to_complex(M)
        return M if M.dtype == object else (sc.exact(M) if sc.is_exact(M) else M.astype(complex))

    @property
    def exact(self) -> bool:
        return not self.numeric

    def zero(self):
        return np.zeros((self.dim, self.dim), dtype=complex) if self.numeric else sc.zeros(self.dim)

    def identity(self):
        return np.eye(self.dim, dtype=complex) if self.numeric else sc.eye(self.dim)

    def covers(self, p: Elem) -> bool:
        try:
            self.psi_basis(p, 0) if self.system.fiber(p).dim else None
            return True
        except MissingFibre:
            return False

    def psi_basis(self, p: Elem, i: int):
        key = (p, i)
        if key in self._cache:
            return self._cache[key]
        M = self._build(p, i)
        self._cache[key] = M
        return M

    def _build(self, p, i):
        ps = self.system
        if p.is_identity and self.psi_e:
            return self.psi_e[ps.fiber(p).basis[i]]
        if p in self.fibres:
            return self.fibres[p][i]
        if self.func is not None:
            return self._mat(self.func(p, i))
        fac = ps.factorize(p, i)
        if fac is None or any(g not in self.generators for g, _ in fac):
            raise MissingFibre(f"representation does not cover fibre {p}")
        out = self.generators[fac[0][0]][fac[0][1]]
        for g, j in fac[1:]:
            out = out @ self.generators[g][j]
        return out

    def psi(self, p: Elem, x) -> np.ndarray:
        c = x.coeffs if isinstance(x, hm.Vector) else x
        out = self.zero()
        for i, ci in enumerate(c):
            if ci != 0:
                out = out + ci * self.psi_basis(p, i)
        return out

    def pe(self, v):
        return self.psi_basis(self.system.e, self.system.fiber(self.system.e).index(v))

    def interior(self, chain: Sequence[Elem]):
        """Projection onto the Fock components unaffected by truncation, or None."""
        if self.window is None:
            return None
        P = self.window.projection(self.window.interior(chain))
        return sc.to_complex(P) if self.numeric else P


def _gen_key(system, g):
    gens = getattr(system, "generators", None) or {x: None for x in system.monoid.generators}
    for x in gens:
        if x == g or str(x) == str(g):
            return x
    raise KeyError(f"unknown generator {g!r}")


def psi_compact(rep: Representation, p: Elem, T) -> np.ndarray:
    """``psi^{(p)}(T) = sum_ij T_ij psi_p(xi_i) psi_p(xi_j)*``."""
    T = T.matrix if isinstance(T, hm.Operator) else np.asarray(T)
    out = rep.zero()
    for i, j in zip(*np.nonzero(T != 0)):
        out = out + T[i, j] * (rep.psi_basis(p, int(i)) @ sc.adjoint(rep.psi_basis(p, int(j))))
    return out


def fock_representation(ps: psys.ProductSystem, D: Iterable[Elem], augmented: bool = False,
                        numeric: bool = True) -> Representation:
    """The (augmented) Fock representation truncated to the window ``D``."""
    fs = psys.FockSpace(ps, D, augmented)

    def func(p, i):
        e = [0] * ps.fiber(p).dim
        e[i] = 1
        return fs.creation(p, e)

    return Representation(ps, fs.dim, func=func, window=fs, numeric=numeric,
                          name="augmented Fock" if augmented else "Fock")


# --- reports -----------------------------------------------------------------

@dataclass
class Verdict:
    axiom: str
    status: str
    witnesses: list = field(default_factory=list)
    detail: str = ""
    horizon: int | None = None
    checked: int = 0
    exact: bool = True

    @property
    def ok(self) -> bool:
        return self.status in (PASS, VERIFIED, NA)

    def to_json(self) -> dict:
        out = {"status": self.status, "checked": self.checked, "exact": self.exact}
        if self.horizon is not None:
            out["horizon"] = self.horizon
        if self.detail:
            out["detail"] = self.detail
        if self.witnesses:
            out["witnesses"] = self.witnesses
        return out


@dataclass
class CovarianceReport:
    verdicts: dict = field(default_factory=dict)
    hypotheses: list = field(default_factory=list)

    def add(self, v: Verdict):
        self.verdicts[v.axiom] = v
        return self

    def merge(self, other: "CovarianceReport"):
        self.verdicts.update(other.verdicts)
        for h in other.hypotheses:
            if h not in self.hypotheses:
                self.hypotheses.append(h)
        return self

    def __getitem__(self, axiom) -> Verdict:
        return self.verdicts[axiom]

    def status(self, axiom) -> str:
        return self.verdicts[axiom].status

    @property
    def passed(self) -> bool:
        return all(v.ok for v in self.verdicts.values())

    def to_json(self) -> dict:
        out = {k: v.to_json() for k, v in self.verdicts.items()}
        if self.hypotheses:
            out["HypothesisViolated"] = list(self.hypotheses)
        return out


class _Collector:
    def __init__(self, rep, axiom, tol, limit=5):
        self.rep, self.axiom, self.tol, self.limit = rep, axiom, tol, limit
        self.witnesses: list = []
        self.failed = False
        self.checked = 0

    def compare(self, lhs, rhs, identity: str, **where):
        self.checked += 1
        diff = lhs - rhs
        if sc.is_zero(diff, self.tol):
            return True
        self.failed = True
        if len(self.witnesses) < self.limit:
            w = {"identity": identity, **{k: str(v) for k, v in where.items()},
                 "residual": sc.max_abs(diff)}
            if self.rep.dim <= 8:
                w["lhs"] = sc.dump_matrix(lhs)
                w["rhs"] = sc.dump_matrix(rhs)
            self.witnesses.append(w)
        return False

    def verdict(self, detail="", status=None) -> Verdict:
        st = status or (FAIL if self.failed else PASS)
        return Verdict(self.axiom, st, self.witnesses, detail, checked=self.checked,
                       exact=self.rep.exact)


def _default_elements(rep: Representation, radius: int = 2):
    if rep.window is not None:
        return [q for q in rep.window.D if len(q) <= radius]
    return rep.system.monoid.ball(radius)


def _proj(rep, chain, M):
    P = rep.interior(chain)
    return M if P is None else M @ P


def check_T_axioms(rep: Representation, elements: Sequence[Elem] | None = None,
                   tol: float = TOL) -> CovarianceReport:
    """(T1) ``psi_e`` is a *-homomorphism; (T2) multiplicativity; (T3) inner products."""
    ps = rep.system
    els = list(elements) if elements is not None else _default_elements(rep)
    rep_out = CovarianceReport()

    c = _Collector(rep, "T1", tol)
    vs = ps.vertices
    for v in vs:
        P = rep.pe(v)
        c.compare(sc.adjoint(P), P, "psi_e(d_v)* = psi_e(d_v)", v=v)
        c.compare(P @ P, P, "psi_e(d_v)^2 = psi_e(d_v)", v=v)
    for v, w in itertools.combinations(vs, 2):
        c.compare(rep.pe(v) @ rep.pe(w), rep.zero(), "psi_e(d_v) psi_e(d_w) = 0", v=v, w=w)
    detail = "degenerate: psi_e = 0" if all(sc.is_zero(rep.pe(v)) for v in vs) else ""
    rep_out.add(c.verdict(detail))

    c = _Collector(rep, "T2", tol)
    for p in els:
        Xp = ps.fiber(p)
        for q in els:
            Xq = ps.fiber(q)
            cols, index = ps.mult_columns(p, q)
            pq = p * q
            for i in range(Xp.dim):
                for j in range(Xq.dim):
                    lhs = rep.psi_basis(p, i) @ rep.psi_basis(q, j)
                    k = index.get((i, j))
                    if k is None:
                        rhs = rep.zero()
                    else:
                        rhs = rep.zero()
                        for r, val in cols[k].items():
                            rhs = rhs + val * rep.psi_basis(pq, r)
                    c.compare(_proj(rep, [p, q], lhs), _proj(rep, [p, q], rhs),
                              "psi_p(x) psi_q(y) = psi_pq(xy)", p=p, q=q, x=Xp.basis[i], y=Xq.basis[j])
    rep_out.add(c.verdict())

    c = _Collector(rep, "T3", tol)
    for p in els:
        Xp = ps.fiber(p)
        for i in range(Xp.dim):
            for j in range(Xp.dim):
                lhs = sc.adjoint(rep.psi_basis(p, i)) @ rep.psi_basis(p, j)
                rhs = rep.pe(Xp.source[i]) if i == j else rep.zero()
                c.compare(_proj(rep, [p], lhs), _proj(rep, [p], rhs),
                          "psi_p(x)* psi_p(y) = psi_e(<x,y>)", p=p, x=Xp.basis[i], y=Xp.basis[j])
    rep_out.add(c.verdict())
    return rep_out


def check_nica(rep: Representation, pairs: Sequence[tuple] | None = None, tol: float = TOL,
               max_units: int | None = None) -> CovarianceReport:
    """(N) on matrix units, including the zero branch when ``p v q = INFINITY``.

    ``max_units`` caps the matrix units per fibre (taken in a fixed order);
    the verdict records when a cap was applied.
    """
    ps = rep.system
    if pairs is None:
        els = _default_elements(rep, 1)
        pairs = [(p, q) for p in els for q in els]
    c = _Collector(rep, "N", tol)
    capped = False
    for p, q in pairs:
        Up = hm.compact_units(ps.fiber(p))
        Uq = hm.compact_units(ps.fiber(q))
        if max_units is not None and (len(Up) > max_units or len(Uq) > max_units):
            Up, Uq, capped = Up[:max_units], Uq[:max_units], True
        r = qlo.lub(p, q)
        P = None
        if rep.window is not None:
            safe = rep.window.annihilation_safe([p, q] + ([] if r is INFINITY else [r]))
            if len(safe) < len(rep.window.D):
                P = rep.window.projection(safe)
                if rep.numeric:
                    P = sc.to_complex(P)
        for (i, j) in Up:
            A = rep.psi_basis(p, i) @ sc.adjoint(rep.psi_basis(p, j))
            for (k, l) in Uq:
                B = rep.psi_basis(q, k) @ sc.adjoint(rep.psi_basis(q, l))
                if r is INFINITY:
                    rhs = rep.zero()
                else:
                    S = _sparse_product(ps.iota_unit(p, i, j, r), ps.iota_unit(q, k, l, r))
                    rhs = rep.zero()
                    for (a, b), v in S.items():
                        rhs = rhs + v * (rep.psi_basis(r, a) @ sc.adjoint(rep.psi_basis(r, b)))
                lhs = A @ B
                if P is not None:
                    lhs, rhs = lhs @ P, rhs @ P
                c.compare(lhs, rhs, "psi(S) psi(T) = psi(iota(S) iota(T))" if r is not INFINITY
                          else "psi(S) psi(T) = 0 (p v q infinite)", p=p, q=q,
                          S=f"E{i}{j}", T=f"E{k}{l}")
    return CovarianceReport().add(c.verdict("unit sets truncated by max_units" if capped else ""))


def _sparse_product(A: dict, B: dict) -> dict:
    rows: dict = {}
    for (k, l), v in B.items():
        rows.setdefault(k, []).append((l, v))
    out: dict = {}
    for (i, k), u in A.items():
        for l, v in rows.get(k, ()):
            val = out.get((i, l), 0) + u * v
            if val == 0:
                out.pop((i, l), None)
            else:
                out[(i, l)] = val
    return out


def check_cp(rep: Representation, families: Sequence[psys.CompactFamily], test_qs: Sequence[Elem],
             horizon: int, tol: float = TOL) -> CovarianceReport:
    """``sum psi^{(p)}(T_p) = 0`` for every family certified to vanish for large ``s``."""
    c = _Collector(rep, "CP", tol)
    report = CovarianceReport()
    certified = all_exact = 0
    uncertified = []
    for n, fam in enumerate(families):
        v = psys.check_cp_vanishes(rep.system, fam, test_qs, horizon, tol)
        if v.hypothesis_violated:
            msg = "phi~_s non-injective at " + ", ".join(str(s) for s in v.hypothesis_violated[:4])
            if msg not in report.hypotheses:
                report.hypotheses.append(msg)
        if not v.vanishes:
            uncertified.append(n)
            continue
        certified += 1
        all_exact += v.exact
        total = rep.zero()
        for p, T in fam.entries.items():
            total = total + psi_compact(rep, p, T)
        c.compare(total, rep.zero(), "sum psi^(p)(T_p) = 0", family=n,
                  support=[str(p) for p in fam.support])
    if not certified:
        return report.add(Verdict("CP", NA, detail="no family certified to vanish for large s",
                                  horizon=horizon, exact=rep.exact))
    status = FAIL if c.failed else (PASS if all_exact == certified else VERIFIED)
    detail = f"{certified} certified families" + (f"; uncertified: {uncertified}" if uncertified else "")
    v = c.verdict(detail, status)
    v.horizon = horizon
    return report.add(v)


def check_fowler(rep: Representation, elements: Sequence[Elem] | None = None,
                 tol: float = TOL) -> CovarianceReport:
    """``psi^{(p)}(phi_p(d_v)) = psi_e(d_v)`` for every vertex and covered ``p``."""
    ps = rep.system
    els = [p for p in (elements if elements is not None else _default_elements(rep)) if not p.is_identity]
    c = _Collector(rep, "Fowler", tol)
    for p in els:
        for v in ps.vertices:
            lhs = psi_compact(rep, p, ps.phi(p, ps.algebra.delta(v)))
            c.compare(lhs, rep.pe(v), "psi^(p)(phi_p(a)) = psi_e(a)", p=p, a=f"delta_{v}")
    notes = []
    if all(sc.is_zero(rep.pe(v)) for v in ps.vertices):
        notes.append("degenerate: psi_e = 0")
    report = CovarianceReport()
    if not ps.all_phi_injective:
        holds = "holds" if not c.failed else "fails"
        notes.append(f"hypothesis: some phi_p is not injective; the identity {holds} on the tested fibres")
        report.hypotheses.append("phi_p injective for all p")
        v = c.verdict("; ".join(notes), NA)
        v.witnesses = c.witnesses
        return report.add(v)
    return report.add(c.verdict("; ".join(notes)))


def katsura_ideal(X: hm.Bimodule) -> tuple:
    """``ker(phi)^perp`` (all of it is in ``phi^-1(K(X))`` in finite dimensions)."""
    ker = set(X.kernel_vertices())
    return tuple(v for v in X.vertices if v not in ker)


def katsura_ideal_bruteforce(X: hm.Bimodule) -> tuple:
    """Same ideal from the null space of ``a -> phi(a)`` and an annihilator scan."""
    A = hm.Bimodule.algebra_module(X.vertices)
    rows = []
    for k in range(X.dim):
        for l in range(X.dim):
            row = {}
            for n, v in enumerate(A.basis):
                val = X.left_action(A.algebra.delta(v)).matrix[k, l]
                if val != 0:
                    row[n] = val
            if row:
                rows.append(row)
    ker = sc.nullspace(rows, len(A.basis))
    return tuple(v for n, v in enumerate(A.basis) if all(vec.get(n, 0) == 0 for vec in ker))


def cp_families_for_tensor_power(ps: psys.ProductSystem, horizon: int) -> list:
    """Every family supported on ``{0, ..., horizon-1}`` whose defect vanishes at ``horizon``."""
    m = ps.monoid
    support = [m.elem((n,)) for n in range(horizon)]
    return psys.vanishing_families(ps, support, [m.elem((horizon,))])


def standard_cp_families(ps: psys.ProductSystem, horizon: int) -> list:
    """A deterministic battery of families to test (CP) against.

    Over ``N`` these are :func:`cp_families_for_tensor_power`; otherwise
    ``phi_e(d_v) - phi_g(d_v)`` for each generator ``g`` plus, over ``N^k``,
    every family on the unit ball whose defect vanishes at ``(1,...,1)``.
    """
    m = ps.monoid
    if isinstance(m, qlo.GridNk) and m.k == 1:
        return cp_families_for_tensor_power(ps, max(1, horizon - 1))
    fams = []
    for p in (p for p in m.ball(1) if not p.is_identity):
        for v in ps.vertices:
            a = ps.algebra.delta(v)
            fams.append(psys.CompactFamily(ps, {m.identity(): ps.phi(m.identity(), a),
                                                p: -1 * ps.phi(p, a).matrix}))
    if isinstance(m, qlo.GridNk):
        fams.extend(psys.vanishing_families(ps, m.ball(1), [m.elem((1,) * m.k)]))
    return fams


def check_katsura(rep: Representation, horizons: Sequence[int] = (2, 3, 4),
                  tol: float = TOL) -> CovarianceReport:
    """Katsura covariance on ``ker(phi)^perp``, cross-checked against (CP) at each horizon."""
    ps = rep.system
    if not (isinstance(ps.monoid, qlo.GridNk) and ps.monoid.k == 1):
        raise qlo.DomainError("Katsura covariance needs a tensor power system over N")
    one = ps.monoid.elem((1,))
    X = ps.fiber(one)
    J = katsura_ideal(X)
    c = _Collector(rep, "Katsura", tol)
    for v in J:
        lhs = psi_compact(rep, one, ps.phi(one, ps.algebra.delta(v)))
        c.compare(lhs, rep.pe(v), "psi^(1)(phi(a)) = psi_e(a) on ker(phi)^perp", a=f"delta_{v}")
    kat = c.verdict(f"ker(phi)^perp = {{{', '.join(J)}}}")
    report = CovarianceReport().add(kat)
    agree = []
    for h in horizons:
        fams = cp_families_for_tensor_power(ps, h)
        cp = check_cp(rep, fams, [ps.e], h + 1, tol)
        agree.append((h, cp["CP"].status))
        report.hypotheses.extend(x for x in cp.hypotheses if x not in report.hypotheses)
    kat.detail += "; CP at horizons " + ", ".join(f"{h}: {s}" for h, s in agree)
    cp_ok = all(s != FAIL for _, s in agree)
    if cp_ok != kat.ok:
        kat.detail += "; DISAGREES with CP"
    report.add(Verdict("CP", PASS if cp_ok else FAIL, detail="null-space families",
                       horizon=max(horizons), exact=rep.exact))
    return report
