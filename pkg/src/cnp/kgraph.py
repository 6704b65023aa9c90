"""Finite higher-rank graphs.

Paths are stored as colour-nondecreasing edge sequences; the squares
supply the rewriting that moves an edge of one colour past an edge of
another.  Composition follows the categorical convention: ``mu nu`` is
defined when ``s(mu) = r(nu)``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path as FsPath

import numpy as np

from . import scalars as sc
from .scalars import TOL


class KGraphError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    id: str
    colour: int
    range: str
    source: str


@dataclass(frozen=True)
class Path:
    """A path in normal form; degree-zero paths are vertices."""

    graph: "KGraph" = field(compare=False, hash=False, repr=False)
    edges: tuple
    vertex: str | None = None

    @property
    def degree(self) -> tuple:
        d = [0] * self.graph.k
        for e in self.edges:
            d[self.graph.edges[e].colour - 1] += 1
        return tuple(d)

    @property
    def range(self) -> str:
        return self.vertex if not self.edges else self.graph.edges[self.edges[0]].range

    @property
    def source(self) -> str:
        return self.vertex if not self.edges else self.graph.edges[self.edges[-1]].source

    @property
    def key(self):
        """Basis label used by the matching product-system fibre."""
        return self.edges if self.edges else self.vertex

    def __str__(self):
        return "".join(self.edges) if self.edges else str(self.vertex)

    def __mul__(self, other: "Path") -> "Path":
        return self.graph.compose(self, other)

    def __len__(self):
        return len(self.edges)


class KGraph:
    """A finite k-graph given by coloured edges and factorization squares.

    ``squares`` is a list of pairs ``((e, f), (f2, e2))`` with ``e``, ``e2``
    of one colour, ``f``, ``f2`` of a larger colour, and ``e f = f2 e2``.
    """

    def __init__(self, k: int, vertices, edges, squares=()):
        if k < 1:
            raise KGraphError("k must be positive")
        self.k = k
        self.name = None
        self.vertices = tuple(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise KGraphError("duplicate vertices")
        self.edges: dict[str, Edge] = {}
        for e in edges:
            if not isinstance(e, Edge):
                e = Edge(str(e["id"]), int(e["color"] if "color" in e else e["colour"]),
                         e["range"], e["source"])
            if e.id in self.edges:
                raise KGraphError(f"duplicate edge id {e.id!r}")
            if not 1 <= e.colour <= k:
                raise KGraphError(f"edge {e.id!r} has colour {e.colour} outside 1..{k}")
            for v in (e.range, e.source):
                if v not in self.vertices:
                    raise KGraphError(f"edge {e.id!r} uses unknown vertex {v!r}")
            self.edges[e.id] = e
        self._order = {e: i for i, e in enumerate(self.edges)}
        self._swap: dict[tuple, tuple] = {}
        for left, right in squares:
            self._add_square(tuple(left), tuple(right))
        self._check_squares()
        if k >= 3:
            self._check_cubes()
        self._by_colour_range: dict = {}
        for e in self.edges.values():
            self._by_colour_range.setdefault((e.colour, e.range), []).append(e.id)

    # --- construction -------------------------------------------------------

    def _add_square(self, left, right):
        E = self.edges
        for x in left + right:
            if x not in E:
                raise KGraphError(f"square uses unknown edge {x!r}")
        if E[left[0]].colour > E[left[1]].colour:
            left, right = right, left
        a, b = left
        c, d = right
        if not (E[a].colour == E[d].colour < E[b].colour == E[c].colour):
            raise KGraphError(f"square {left}={right} does not swap two colours")
        if E[a].source != E[b].range or E[c].source != E[d].range:
            raise KGraphError(f"square {left}={right} has non-composable sides")
        if E[a].range != E[c].range or E[b].source != E[d].source:
            raise KGraphError(f"square {left}={right} has mismatched corners")
        if left in self._swap or right in self._swap:
            raise KGraphError(f"square {left}={right} overlaps another square")
        self._swap[left] = right
        self._swap[right] = left

    def _check_squares(self):
        E = self.edges
        for a in E.values():
            for b in E.values():
                if a.colour != b.colour and a.source == b.range and (a.id, b.id) not in self._swap:
                    raise KGraphError(f"no square for the composable pair {a.id}{b.id}")

    def _check_cubes(self):
        E = self.edges
        for a, b, c in itertools.product(E.values(), repeat=3):
            cols = (a.colour, b.colour, c.colour)
            if len(set(cols)) < 3 or a.source != b.range or b.source != c.range:
                continue
            w = (a.id, b.id, c.id)
            x = self._apply(self._apply(self._apply(w, 0), 1), 0)
            y = self._apply(self._apply(self._apply(w, 1), 0), 1)
            if x != y:
                raise KGraphError(f"cube condition fails on {''.join(w)}")

    def _apply(self, w, i):
        w = list(w)
        w[i], w[i + 1] = self._swap[(w[i], w[i + 1])]
        return tuple(w)

    @classmethod
    def from_json(cls, obj) -> "KGraph":
        if isinstance(obj, (str, FsPath)) and not str(obj).lstrip().startswith("{"):
            with open(obj) as fh:
                obj = json.load(fh)
        elif isinstance(obj, str):
            obj = json.loads(obj)
        squares = [(tuple(s["left"]), tuple(s["right"])) for s in obj.get("squares", [])]
        g = cls(int(obj["k"]), obj["vertices"], obj["edges"], squares)
        g.name = obj.get("name")
        return g

    def to_json(self) -> dict:
        seen, sq = set(), []
        for left, right in self._swap.items():
            if self.edges[left[0]].colour < self.edges[left[1]].colour and left not in seen:
                seen.add(left)
                sq.append({"left": list(left), "right": list(right)})
        return {"k": self.k, "vertices": list(self.vertices),
                "edges": [{"id": e.id, "color": e.colour, "range": e.range, "source": e.source}
                          for e in self.edges.values()],
                "squares": sq}

    @classmethod
    def product(cls, E: "KGraph", F: "KGraph") -> "KGraph":
        """Cartesian product of two 1-graphs: colour 1 from ``E``, colour 2 from ``F``."""
        if E.k != 1 or F.k != 1:
            raise KGraphError("product expects two 1-graphs")
        vs = [f"{x}{y}" for x in E.vertices for y in F.vertices]
        edges, squares = [], []
        for e in E.edges.values():
            for y in F.vertices:
                edges.append(Edge(f"{e.id}{y}", 1, f"{e.range}{y}", f"{e.source}{y}"))
        for x in E.vertices:
            for f in F.edges.values():
                edges.append(Edge(f"{x}{f.id}", 2, f"{x}{f.range}", f"{x}{f.source}"))
        for e in E.edges.values():
            for f in F.edges.values():
                squares.append(((f"{e.id}{f.range}", f"{e.source}{f.id}"),
                                (f"{e.range}{f.id}", f"{e.id}{f.source}")))
        return cls(2, vs, edges, squares)

    # --- paths --------------------------------------------------------------

    def vertex(self, v) -> Path:
        if v not in self.vertices:
            raise KGraphError(f"unknown vertex {v!r}")
        return Path(self, (), v)

    def colour_word(self, n) -> tuple:
        return tuple(c + 1 for c, m in enumerate(n) for _ in range(m))

    def sort_edges(self, w, target=None) -> tuple:
        """Rewrite a composable edge sequence so its colours read ``target``.

        ``target`` defaults to the nondecreasing colour word.
        """
        w = list(w)
        cols = [self.edges[e].colour for e in w]
        if target is None:
            target = tuple(sorted(cols))
        if sorted(target) != sorted(cols):
            raise KGraphError("target colour word is not a rearrangement")
        for i, c in enumerate(target):
            j = i
            while self.edges[w[j]].colour != c:
                j += 1
            while j > i:
                w[j - 1], w[j] = self._swap[(w[j - 1], w[j])]
                j -= 1
        return tuple(w)

    def path(self, edges=(), vertex=None) -> Path:
        """Build a path from any composable edge sequence, or a vertex."""
        if isinstance(edges, str):
            edges = self.parse_edges(edges)
        edges = tuple(edges)
        if not edges:
            if vertex is None:
                raise KGraphError("an empty path needs a vertex")
            return self.vertex(vertex)
        for e in edges:
            if e not in self.edges:
                raise KGraphError(f"unknown edge {e!r}")
        for a, b in zip(edges, edges[1:]):
            if self.edges[a].source != self.edges[b].range:
                raise KGraphError(f"edges {a}, {b} are not composable")
        return Path(self, self.sort_edges(edges))

    def parse_edges(self, text: str) -> tuple:
        """Split ``"ef"`` or ``"e.f"`` into edge ids, longest match first."""
        text = text.strip()
        if "." in text or " " in text or "," in text:
            return tuple(t for t in text.replace(",", " ").replace(".", " ").split() if t)
        ids = sorted(self.edges, key=len, reverse=True)
        out, i = [], 0
        while i < len(text):
            for e in ids:
                if text.startswith(e, i):
                    out.append(e)
                    i += len(e)
                    break
            else:
                raise KGraphError(f"cannot split {text!r} into edges")
        return tuple(out)

    def parse_path(self, text: str) -> Path:
        text = text.strip()
        if text in self.vertices:
            return self.vertex(text)
        return self.path(self.parse_edges(text))

    def compose(self, mu: Path, nu: Path) -> Path:
        if mu.source != nu.range:
            raise KGraphError(f"{mu} and {nu} are not composable")
        if not mu.edges:
            return nu
        if not nu.edges:
            return mu
        return Path(self, self.sort_edges(mu.edges + nu.edges))

    def factor(self, lam: Path, m) -> tuple[Path, Path]:
        """The unique ``(mu, nu)`` with ``lam = mu nu`` and ``d(mu) = m``."""
        d = lam.degree
        if any(a > b for a, b in zip(m, d)):
            raise KGraphError(f"degree {m} exceeds {d}")
        rest = tuple(b - a for a, b in zip(m, d))
        w = self.sort_edges(lam.edges, self.colour_word(m) + self.colour_word(rest))
        n = sum(m)
        mu = Path(self, w[:n]) if n else self.vertex(lam.range)
        nu = Path(self, w[n:]) if n < len(w) else self.vertex(lam.source)
        return mu, nu

    def extends(self, tau: Path, mu: Path) -> bool:
        """``tau = mu mu'`` for some ``mu'``."""
        if tau.range != mu.range or any(a > b for a, b in zip(mu.degree, tau.degree)):
            return False
        return self.factor(tau, mu.degree)[0] == mu

    @lru_cache(maxsize=None)
    def paths_of_degree(self, n) -> tuple:
        n = tuple(n)
        if len(n) != self.k or min(n) < 0:
            raise KGraphError(f"bad degree {n}")
        if sum(n) == 0:
            return tuple(self.vertex(v) for v in self.vertices)
        cols = self.colour_word(n)
        out = []

        def grow(prefix, i):
            if i == len(cols):
                out.append(Path(self, tuple(prefix)))
                return
            for e in self.edges.values():
                if e.colour == cols[i] and (not prefix or self.edges[prefix[-1]].source == e.range):
                    prefix.append(e.id)
                    grow(prefix, i + 1)
                    prefix.pop()

        grow([], 0)
        return tuple(out)

    def paths_from(self, v, n) -> list[Path]:
        """``v Lambda^n``: paths of degree ``n`` with range ``v``."""
        return [p for p in self.paths_of_degree(tuple(n)) if p.range == v]

    def paths_upto(self, v, bound) -> list[Path]:
        out = []
        for n in itertools.product(*(range(b + 1) for b in bound)):
            out.extend(self.paths_from(v, n))
        return out

    def receives(self, v, colour) -> bool:
        return bool(self._by_colour_range.get((colour, v)))

    def mce(self, mu: Path, nu: Path) -> list[Path]:
        """Minimal common extensions, of degree ``d(mu) v d(nu)``."""
        if mu.range != nu.range:
            return []
        m = tuple(max(a, b) for a, b in zip(mu.degree, nu.degree))
        rest = tuple(a - b for a, b in zip(m, mu.degree))
        out = []
        for alpha in self.paths_from(mu.source, rest):
            lam = self.compose(mu, alpha)
            if self.extends(lam, nu) and lam not in out:
                out.append(lam)
        return out

    def mce_set(self, G) -> list[Path]:
        """Common extensions of every member of ``G`` of degree ``v d(G)``."""
        G = list(G)
        acc = [G[0]]
        for nu in G[1:]:
            nxt = []
            for lam in acc:
                for x in self.mce(lam, nu):
                    if x not in nxt:
                        nxt.append(x)
            acc = nxt
        return acc

    def paths_le(self, n) -> list[Path]:
        """``Lambda^{<=n}``: paths of degree ``<= n`` that cannot grow inside ``n``."""
        n = tuple(n)
        out = []
        for m in itertools.product(*(range(b + 1) for b in n)):
            for lam in self.paths_of_degree(m):
                if all(not self.receives(lam.source, i + 1) for i in range(self.k) if m[i] < n[i]):
                    out.append(lam)
        return out

    def default_exhaustive_bound(self, F) -> tuple:
        top = [0] * self.k
        for mu in F:
            top = [max(a, b) for a, b in zip(top, mu.degree)]
        return tuple(t + len(self.vertices) for t in top)

    def is_exhaustive(self, v, F, bound=None) -> bool:
        """Every ``mu`` in ``v Lambda`` with ``d(mu) <= bound`` meets some member of ``F``.

        The default bound is ``v d(F) + |V| (1,...,1)``; see the module notes.
        """
        return self.exhaustive_witness(v, F, bound) is None

    def exhaustive_witness(self, v, F, bound=None):
        F = list(F)
        for mu in F:
            if mu.range != v:
                raise KGraphError(f"{mu} does not have range {v}")
        if not F:
            return self.vertex(v)
        bound = tuple(bound) if bound is not None else self.default_exhaustive_bound(F)
        for mu in self.paths_upto(v, bound):
            if not any(self.mce(mu, nu) for nu in F):
                return mu
        return None

    def minimal_exhaustive_sets(self, v, degree_bound=None, max_candidates=12) -> list[list[Path]]:
        """Minimal exhaustive sets drawn from ``v Lambda^m``, ``m <= degree_bound``."""
        degree_bound = tuple(degree_bound) if degree_bound is not None else (1,) * self.k
        cands = self.paths_upto(v, degree_bound)
        if len(cands) > max_candidates:
            raise KGraphError(f"{len(cands)} candidate paths at {v}; raise max_candidates or lower the bound")
        found: list[frozenset] = []
        out = []
        for size in range(1, len(cands) + 1):
            for combo in itertools.combinations(range(len(cands)), size):
                s = frozenset(combo)
                if any(f <= s for f in found):
                    continue
                F = [cands[i] for i in combo]
                if self.is_exhaustive(v, F):
                    found.append(s)
                    out.append(F)
        return out


def load_corpus() -> list[KGraph]:
    """The packaged 2-graph corpus, in file-name order."""
    from importlib import resources

    out = []
    root = resources.files("cnp") / "data" / "kgraphs"
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            g = KGraph.from_json(json.loads(entry.read_text()))
            g.name = g.name or entry.name[:-5]
            out.append(g)
    return out


# --- Cuntz-Krieger families -------------------------------------------------

@dataclass
class CKFamily:
    """Matrices for vertices and edges; other paths are products along normal forms."""

    graph: KGraph
    dim: int
    vertex_maps: dict
    edge_maps: dict

    def __post_init__(self):
        for m in list(self.vertex_maps.values()) + list(self.edge_maps.values()):
            if np.asarray(m).shape != (self.dim, self.dim):
                raise KGraphError("family matrices must be dim x dim")
        for v in self.graph.vertices:
            self.vertex_maps.setdefault(v, sc.zeros(self.dim))
        for e in self.graph.edges:
            self.edge_maps.setdefault(e, sc.zeros(self.dim))

    def s(self, lam: Path):
        if not lam.edges:
            return self.vertex_maps[lam.vertex]
        out = self.edge_maps[lam.edges[0]]
        for e in lam.edges[1:]:
            out = out @ self.edge_maps[e]
        return out


def _adj(M):
    return sc.adjoint(M)


@dataclass
class CKReport:
    level: str
    bound: tuple
    violations: dict
    nondegenerate: bool
    exhaustive_sets: int = 0

    @property
    def passed(self) -> bool:
        return not any(self.violations.values())

    def to_json(self) -> dict:
        return {"level": self.level, "bound": list(self.bound), "passed": self.passed,
                "nondegenerate": self.nondegenerate, "exhaustive_sets_checked": self.exhaustive_sets,
                "violations": {k: v for k, v in self.violations.items()}}


def check_ck_family(fam: CKFamily, level: str = "CK", path_bound=None, degree_bound=None,
                    tol: float = TOL) -> CKReport:
    """Check (CK1)-(CK3), and (CK4) at level ``"CK"``, on paths of degree ``<= path_bound``."""
    g = fam.graph
    if level not in ("TCK", "CK"):
        raise ValueError("level must be TCK or CK")
    path_bound = tuple(path_bound) if path_bound is not None else (1,) * g.k
    degree_bound = tuple(degree_bound) if degree_bound is not None else (1,) * g.k
    viol = {"CK1": [], "CK2": [], "CK3": [], "CK4": []}
    I = sc.eye(fam.dim)
    P = fam.vertex_maps
    for v in g.vertices:
        p = P[v]
        if not (sc.equal(p @ p, p, tol) and sc.equal(_adj(p), p, tol)):
            viol["CK1"].append({"vertex": v, "issue": "not a projection"})
    for v, w in itertools.combinations(g.vertices, 2):
        if not sc.is_zero(P[v] @ P[w], tol):
            viol["CK1"].append({"vertices": [v, w], "issue": "not orthogonal"})
    paths = []
    for n in itertools.product(*(range(b + 1) for b in path_bound)):
        paths.extend(g.paths_of_degree(n))
    for mu in paths:
        for nu in paths:
            if mu.source == nu.range:
                lhs = fam.s(mu) @ fam.s(nu)
                rhs = fam.s(g.compose(mu, nu))
                if not sc.equal(lhs, rhs, tol):
                    viol["CK2"].append({"mu": str(mu), "nu": str(nu), "defect": sc.max_abs(lhs - rhs)})
    # (CK2) on squares, where the normal-form synthesis could hide a mismatch
    for (a, b), (c, d) in g._swap.items():
        lhs = fam.edge_maps[a] @ fam.edge_maps[b]
        rhs = fam.edge_maps[c] @ fam.edge_maps[d]
        if not sc.equal(lhs, rhs, tol):
            viol["CK2"].append({"square": [a + b, c + d], "defect": sc.max_abs(lhs - rhs)})
    for mu in paths:
        for nu in paths:
            lhs = _adj(fam.s(mu)) @ fam.s(nu)
            rhs = sc.zeros(fam.dim)
            for lam in g.mce(mu, nu):
                a = g.factor(lam, mu.degree)[1]
                b = g.factor(lam, nu.degree)[1]
                rhs = rhs + fam.s(a) @ _adj(fam.s(b))
            if not sc.equal(lhs, rhs, tol):
                viol["CK3"].append({"mu": str(mu), "nu": str(nu), "defect": sc.max_abs(lhs - rhs)})
    checked = 0
    if level == "CK":
        for v in g.vertices:
            for F in g.minimal_exhaustive_sets(v, degree_bound):
                checked += 1
                prod = I
                for lam in F:
                    s = fam.s(lam)
                    prod = prod @ (P[v] - s @ _adj(s))
                if not sc.is_zero(prod, tol):
                    viol["CK4"].append({"vertex": v, "F": [str(x) for x in F], "defect": sc.max_abs(prod)})
    nondeg = all(not sc.is_zero(P[v], tol) for v in g.vertices)
    return CKReport(level, degree_bound, viol, nondeg, checked)


# --- the inclusion-exclusion defect -----------------------------------------

@dataclass
class CKDefect:
    """Diagonal operator on ``c_0(Lambda^{<=s})`` in the basis ``basis``."""

    s: tuple
    basis: list
    inclusion_exclusion: list
    product_form: list

    def is_zero(self) -> bool:
        return all(x == 0 for x in self.inclusion_exclusion)

    def support(self) -> list:
        return [tau for tau, x in zip(self.basis, self.inclusion_exclusion) if x != 0]

    def matrix(self):
        n = len(self.basis)
        M = sc.zeros(n)
        for i, x in enumerate(self.inclusion_exclusion):
            M[i, i] = x
        return M


def ck_defect_symbolic(g: KGraph, v, F, s) -> CKDefect:
    """Evaluate the inclusion-exclusion element on every ``delta_tau``, ``tau`` in ``Lambda^{<=s}``.

    Coefficient on ``delta_tau``: ``[r(tau)=v] + sum_G (-1)^|G| #{lam in MCE(G): tau extends lam}``
    restricted to ``d(v G) <= s``; the product form is
    ``[r(tau)=v] prod_{mu in F} (1 - [tau extends mu])``.
    """
    F = list(F)
    for mu in F:
        if mu.range != v:
            raise KGraphError(f"{mu} does not have range {v}")
    s = tuple(s)
    basis = g.paths_le(s)
    terms = []
    for size in range(1, len(F) + 1):
        for G in itertools.combinations(F, size):
            top = tuple(max(x) for x in zip(*(mu.degree for mu in G)))
            if any(a > b for a, b in zip(top, s)):
                continue
            for lam in g.mce_set(G):
                terms.append(((-1) ** size, lam))
    incl, prod = [], []
    for tau in basis:
        base = 1 if tau.range == v else 0
        val = base + sum(sign for sign, lam in terms if g.extends(tau, lam))
        incl.append(val)
        p = base
        for mu in F:
            p *= 1 - (1 if g.extends(tau, mu) else 0)
        prod.append(p)
    return CKDefect(s, basis, incl, prod)
