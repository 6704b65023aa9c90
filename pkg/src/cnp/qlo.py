"""Quasi-lattice ordered monoids.

Three concrete kinds are modelled: the grid monoid ``N^k``, right-angled
Artin monoids given by a commutation graph, and the lexicographically
ordered positive cone of ``Z x Z``.  Elements are immutable and carry their
monoid; all order-theoretic operations are exposed as module functions.

>>> n2 = GridNk(2)
>>> str(lub(n2.parse("(1,0)"), n2.parse("(0,1)")))
'(1,1)'
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class DomainError(ValueError):
    """Raised when arguments live in different monoids or break a precondition."""


class IntervalInfinite(DomainError):
    """Raised when ``{r : e < r <= p}`` is infinite."""


class _Infinity:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INFINITY"

    def __str__(self):
        return "∞"

    def __reduce__(self):
        return (_Infinity, ())


#: Value returned by :func:`lub` when two elements have no common upper bound.
INFINITY = _Infinity()


@dataclass(frozen=True)
class Elem:
    """An element of a quasi-lattice ordered monoid, stored in normal form."""

    monoid: "Monoid"
    data: tuple

    def __mul__(self, other: "Elem") -> "Elem":
        return multiply(self, other)

    def __le__(self, other: "Elem") -> bool:
        return divides(self, other)

    def __lt__(self, other: "Elem") -> bool:
        return self != other and divides(self, other)

    def __ge__(self, other: "Elem") -> bool:
        return divides(other, self)

    def __gt__(self, other: "Elem") -> bool:
        return self != other and divides(other, self)

    def __len__(self):
        return self.monoid.length(self.data)

    @property
    def is_identity(self) -> bool:
        return self.data == self.monoid.identity().data

    def word(self) -> tuple:
        return self.monoid.word(self)

    def __str__(self):
        return self.monoid.format(self.data)

    def __repr__(self):
        return f"Elem({self.monoid.name}, {self.monoid.format(self.data)!r})"


class Monoid:
    name = "monoid"

    def identity(self) -> Elem:
        raise NotImplementedError

    def elem(self, data) -> Elem:
        return Elem(self, self.normalize(tuple(data)))

    def normalize(self, data: tuple) -> tuple:
        return data

    def length(self, data: tuple) -> int:
        raise NotImplementedError

    def parse(self, text: str) -> Elem:
        raise NotImplementedError

    def format(self, data: tuple) -> str:
        raise NotImplementedError

    # word structure; only grid and Artin monoids have one
    has_words = False

    def word(self, p: Elem) -> tuple:
        raise DomainError(f"{self.name} has no generator words")

    def ball(self, radius: int) -> list[Elem]:
        raise NotImplementedError

    def above(self, r: Elem, horizon: int) -> list[Elem]:
        """All ``s >= r`` with ``length(s) <= horizon``."""
        return [r * t for t in self.ball(horizon - len(r))] if horizon >= len(r) else []


@dataclass(frozen=True)
class GridNk(Monoid):
    """The monoid ``N^k`` with component-wise order."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise DomainError("GridNk needs k >= 1")

    @property
    def name(self):
        return f"N^{self.k}"

    @property
    def generators(self) -> tuple:
        return tuple(range(1, self.k + 1))

    has_words = True

    def commute(self, a, b) -> bool:
        return True

    def identity(self) -> Elem:
        return Elem(self, (0,) * self.k)

    def normalize(self, data):
        if len(data) != self.k or any(int(x) != x or x < 0 for x in data):
            raise DomainError(f"{data!r} is not in N^{self.k}")
        return tuple(int(x) for x in data)

    def length(self, data):
        return sum(data)

    def parse(self, text):
        return self.elem(_parse_pair(text, self.k))

    def format(self, data):
        return "(" + ",".join(map(str, data)) + ")"

    def generator(self, i) -> Elem:
        v = [0] * self.k
        v[i - 1] = 1
        return Elem(self, tuple(v))

    def word(self, p):
        return tuple(i + 1 for i, n in enumerate(p.data) for _ in range(n))

    def from_word(self, w) -> Elem:
        v = [0] * self.k
        for g in w:
            v[g - 1] += 1
        return Elem(self, tuple(v))

    def ball(self, radius):
        out = []
        for n in range(radius + 1):
            for c in _compositions(n, self.k):
                out.append(Elem(self, c))
        return out


@dataclass(frozen=True)
class Raag(Monoid):
    """The right-angled Artin monoid of an undirected simple graph.

    Vertices are ordered as given; generators adjacent in the graph commute.
    Elements are stored as the lexicographically least word in their
    commutation class (the leftmost-lex normal form of the trace monoid).
    """

    vertices: tuple
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        vs = tuple(self.vertices)
        if len(set(vs)) != len(vs):
            raise DomainError("duplicate vertices")
        if not vs:
            raise DomainError("a Raag needs at least one generator")
        object.__setattr__(self, "vertices", vs)
        es = set()
        for e in self.edges:
            e = tuple(e)
            if len(e) != 2:
                raise DomainError(f"bad edge {e!r}")
            a, b = e
            if a == b:
                raise DomainError(f"self-loop at {a!r}")
            if a not in vs or b not in vs:
                raise DomainError(f"edge {e!r} uses unknown vertex")
            es.add(frozenset((a, b)))
        object.__setattr__(self, "edges", frozenset(es))
        object.__setattr__(self, "_order", {v: i for i, v in enumerate(vs)})

    @classmethod
    def from_edges(cls, vertices: Sequence, edges: Iterable = ()) -> "Raag":
        edges = list(edges)
        seen = set()
        for e in edges:
            key = frozenset(e)
            if key in seen:
                raise DomainError(f"duplicate edge {tuple(e)!r}")
            seen.add(key)
        return cls(tuple(vertices), frozenset(seen))

    @classmethod
    def from_json(cls, obj) -> "Raag":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls.from_edges(obj["vertices"], [tuple(e) for e in obj.get("edges", [])])

    def to_json(self) -> dict:
        edges = sorted((sorted(e, key=self._order.get) for e in self.edges),
                       key=lambda e: (self._order[e[0]], self._order[e[1]]))
        return {"vertices": list(self.vertices), "edges": edges}

    @property
    def name(self):
        return f"Raag{self.vertices}"

    @property
    def generators(self) -> tuple:
        return self.vertices

    has_words = True

    def __hash__(self):
        return hash((self.vertices, self.edges))

    def __eq__(self, other):
        return isinstance(other, Raag) and self.vertices == other.vertices and self.edges == other.edges

    def commute(self, a, b) -> bool:
        return a == b or frozenset((a, b)) in self.edges

    def identity(self):
        return Elem(self, ())

    def normalize(self, data):
        word = list(data)
        for g in word:
            if g not in self._order:
                raise DomainError(f"unknown generator {g!r}")
        out = []
        while word:
            best = None
            for i, g in enumerate(word):
                if g in word[:i]:
                    continue
                if all(self.commute(g, h) for h in word[:i]):
                    if best is None or self._order[g] < self._order[word[best]]:
                        best = i
            out.append(word.pop(best))
        return tuple(out)

    def foata(self, p: Elem) -> list[tuple]:
        """Foata steps of ``p``: maximal blocks of pairwise commuting letters."""
        word = list(p.data)
        steps = []
        while word:
            step = []
            for i, g in enumerate(word):
                if g in word[:i]:
                    continue
                if all(self.commute(g, h) for h in word[:i]):
                    step.append(i)
            letters = sorted((word[i] for i in step), key=self._order.get)
            for i in sorted(step, reverse=True):
                word.pop(i)
            steps.append(tuple(letters))
        return steps

    def length(self, data):
        return len(data)

    def parse(self, text):
        text = text.strip()
        if text in ("", "e", "()"):
            return self.identity()
        if all(len(str(v)) == 1 for v in self.vertices) and not re.search(r"[\s.,]", text):
            letters = list(text)
        else:
            letters = [t for t in re.split(r"[\s.,]+", text) if t]
        return self.elem(letters)

    def format(self, data):
        if not data:
            return "e"
        sep = "" if all(len(str(v)) == 1 for v in self.vertices) else "."
        return sep.join(map(str, data))

    def generator(self, g) -> Elem:
        return self.elem((g,))

    def word(self, p):
        return p.data

    def from_word(self, w) -> Elem:
        return self.elem(tuple(w))

    def left_divide_letter(self, word: list, g) -> list | None:
        """Remove a left-minimal occurrence of ``g`` from ``word``, or None."""
        for i, h in enumerate(word):
            if h == g:
                return word[:i] + word[i + 1:]
            if not self.commute(g, h):
                return None
        return None

    def ball(self, radius):
        layer = {self.identity()}
        seen = set(layer)
        for _ in range(radius):
            nxt = set()
            for p in layer:
                for g in self.vertices:
                    q = self.elem(p.data + (g,))
                    if q not in seen:
                        seen.add(q)
                        nxt.add(q)
            layer = nxt
        return sorted(seen, key=lambda p: (len(p.data), [self._order[g] for g in p.data]))

    def opp_adjacent(self, a, b) -> bool:
        return a != b and not self.commute(a, b)


@dataclass(frozen=True)
class LexZxZ(Monoid):
    """``P = ((N \\ {0}) x Z) u ({0} x N)`` ordered lexicographically."""

    @property
    def name(self):
        return "LexZxZ"

    def identity(self):
        return Elem(self, (0, 0))

    @staticmethod
    def contains(data) -> bool:
        m, n = data
        return m > 0 or (m == 0 and n >= 0)

    def normalize(self, data):
        if len(data) != 2 or any(int(x) != x for x in data):
            raise DomainError(f"{data!r} is not an integer pair")
        data = (int(data[0]), int(data[1]))
        if not self.contains(data):
            raise DomainError(f"{data!r} is not in P")
        return data

    def length(self, data):
        return abs(data[0]) + abs(data[1])

    def parse(self, text):
        return self.elem(_parse_pair(text, 2, signed=True))

    def format(self, data):
        return f"({data[0]},{data[1]})"

    def ball(self, radius):
        out = []
        for m in range(0, radius + 1):
            for n in range(-(radius - m), radius - m + 1):
                if self.contains((m, n)):
                    out.append(Elem(self, (m, n)))
        return sorted(out, key=lambda p: (self.length(p.data), p.data))

    def above(self, r, horizon):
        return [s for s in self.ball(horizon) if divides(r, s)]


def _compositions(n, k):
    if k == 1:
        yield (n,)
        return
    for i in range(n, -1, -1):
        for rest in _compositions(n - i, k - 1):
            yield (i,) + rest


def _parse_pair(text, k, signed=False):
    m = re.fullmatch(r"\s*(?:\(([-+\d\s,]*)\)|([-+\d\s,]*))\s*", text)
    if not m:
        raise DomainError(f"cannot parse {text!r}")
    body = m.group(1) if m.group(1) is not None else m.group(2)
    parts = [t for t in re.split(r"[\s,]+", body) if t]
    try:
        vals = tuple(int(t) for t in parts)
    except ValueError:
        raise DomainError(f"cannot parse {text!r}") from None
    if len(vals) != k:
        raise DomainError(f"expected {k} components in {text!r}")
    return vals


def _same(p: Elem, q: Elem) -> Monoid:
    if p.monoid != q.monoid:
        raise DomainError(f"mixed monoids: {p.monoid.name} vs {q.monoid.name}")
    return p.monoid


# --- operations ---------------------------------------------------------------

def multiply(p: Elem, q: Elem) -> Elem:
    m = _same(p, q)
    if isinstance(m, GridNk):
        return Elem(m, tuple(a + b for a, b in zip(p.data, q.data)))
    if isinstance(m, Raag):
        return m.elem(p.data + q.data)
    return m.elem((p.data[0] + q.data[0], p.data[1] + q.data[1]))


def quotient(p: Elem, q: Elem) -> Elem | None:
    """The unique ``r`` with ``p r = q``, or None when ``p`` does not divide ``q``."""
    m = _same(p, q)
    if isinstance(m, GridNk):
        d = tuple(b - a for a, b in zip(p.data, q.data))
        return Elem(m, d) if min(d) >= 0 else None
    if isinstance(m, Raag):
        rest = list(q.data)
        for g in p.data:
            rest = m.left_divide_letter(rest, g)
            if rest is None:
                return None
        return m.elem(rest)
    d = (q.data[0] - p.data[0], q.data[1] - p.data[1])
    return Elem(m, d) if LexZxZ.contains(d) else None


def divides(p: Elem, q: Elem) -> bool:
    """The order ``p <= q``."""
    return quotient(p, q) is not None


def lub(p: Elem, q: Elem):
    """Least upper bound ``p v q``, or :data:`INFINITY`.

    For Artin monoids this peels ``q`` letter by letter: the next letter
    either left-divides what is left of ``p``, commutes with all of it, or
    no common upper bound exists.  The result is ``q`` followed by the
    residual of ``p``.
    """
    m = _same(p, q)
    if isinstance(m, GridNk):
        return Elem(m, tuple(max(a, b) for a, b in zip(p.data, q.data)))
    if isinstance(m, LexZxZ):
        return max(p, q, key=lambda x: x.data)
    residual = list(p.data)
    for g in q.data:
        rest = m.left_divide_letter(residual, g)
        if rest is not None:
            residual = rest
        elif all(m.commute(g, h) for h in residual):
            continue
        else:
            return INFINITY
    return m.elem(q.data + tuple(residual))


def lub_all(elems: Iterable[Elem], start: Elem | None = None):
    it = iter(elems)
    acc = start
    for x in it:
        acc = x if acc is None else lub(acc, x)
        if acc is INFINITY:
            return INFINITY
    return acc


def interval(p: Elem) -> list[Elem]:
    """All ``r`` with ``e < r <= p``."""
    m = p.monoid
    if isinstance(m, GridNk):
        out = [Elem(m, c) for c in itertools.product(*(range(n + 1) for n in p.data))]
        out = [r for r in out if any(r.data)]
        return sorted(out, key=lambda r: (sum(r.data), tuple(-x for x in r.data)))
    if isinstance(m, LexZxZ):
        a, b = p.data
        if a != 0:
            raise IntervalInfinite(f"{p} has infinitely many divisors")
        return [Elem(m, (0, j)) for j in range(1, b + 1)]
    found = {}
    stack = [(m.identity(), list(p.data))]
    while stack:
        pre, rest = stack.pop()
        for g in dict.fromkeys(rest):
            nxt = m.left_divide_letter(rest, g)
            if nxt is None:
                continue
            r = m.elem(pre.data + (g,))
            if r not in found:
                found[r] = True
                stack.append((r, nxt))
    return sorted(found, key=lambda r: (len(r.data), [m._order[g] for g in r.data]))


def divisors(p: Elem) -> list[Elem]:
    """All ``r <= p`` including the identity."""
    return [p.monoid.identity()] + interval(p)


def opp_components(m: Monoid) -> list[tuple]:
    """Connected components of the complement graph, in vertex order."""
    if not isinstance(m, Raag):
        raise DomainError("opp_components needs a Raag monoid")
    seen, comps = set(), []
    for v in m.vertices:
        if v in seen:
            continue
        comp, todo = [], [v]
        seen.add(v)
        while todo:
            a = todo.pop()
            comp.append(a)
            for b in m.vertices:
                if b not in seen and m.opp_adjacent(a, b):
                    seen.add(b)
                    todo.append(b)
        comps.append(tuple(sorted(comp, key=m._order.get)))
    return comps


@dataclass(frozen=True)
class FoundationVerdict:
    """Outcome of :func:`is_foundation_set`.

    ``exact`` distinguishes a proof from a search that merely found no
    counterexample of length at most ``horizon``.
    """

    holds: bool
    exact: bool
    counterexample: Elem | None = None
    certificate: str = ""
    horizon: int | None = None

    def __bool__(self):
        return self.holds

    @property
    def status(self) -> str:
        if not self.holds:
            return "False"
        return "True" if self.exact else "TrueUpToHorizon"


def refutes(F: Sequence[Elem], q: Elem) -> bool:
    return all(lub(p, q) is INFINITY for p in F)


def is_foundation_set(F: Sequence[Elem], horizon: int = 4) -> FoundationVerdict:
    F = list(F)
    if not F:
        raise DomainError("a foundation set must be nonempty")
    m = F[0].monoid
    for p in F:
        _same(F[0], p)
    if isinstance(m, (GridNk, LexZxZ)):
        return FoundationVerdict(True, True, certificate="every pair has a finite lub")
    if any(p.is_identity for p in F):
        return FoundationVerdict(True, True, certificate="contains e")
    letters = {p.data[0] for p in F if len(p.data) == 1}
    comps = opp_components(m)
    for c in comps:
        if set(c) <= letters:
            return FoundationVerdict(True, True, certificate=f"contains opp component {{{','.join(map(str, c))}}}")
    if all(len(p.data) == 1 for p in F):
        q = _generator_refuter(m, letters, comps)
        return FoundationVerdict(False, True, counterexample=q, certificate="generator criterion")
    for q in m.ball(horizon):
        if refutes(F, q):
            return FoundationVerdict(False, True, counterexample=q, certificate="explicit refuter")
    return FoundationVerdict(True, False, certificate="no refuter found", horizon=horizon)


def _generator_refuter(m: Raag, letters: set, comps) -> Elem:
    # for each opp component meeting F, walk it breadth-first from a vertex
    # outside F; every later letter then has an earlier non-commuting one
    word = []
    for c in comps:
        if not set(c) & letters:
            continue
        start = next(v for v in c if v not in letters)
        order, seen = [start], {start}
        i = 0
        while i < len(order):
            a = order[i]
            for b in c:
                if b not in seen and m.opp_adjacent(a, b):
                    seen.add(b)
                    order.append(b)
            i += 1
        word.extend(order)
    return m.elem(word)


@dataclass(frozen=True)
class Frontier:
    """Witnesses ``r >= base`` and the bounded window ``{s >= r}`` tested for them."""

    base: Elem
    witnesses: tuple
    horizon: int

    def window(self, r: Elem | None = None) -> list[Elem]:
        r = self.witnesses[0] if r is None else r
        return r.monoid.above(r, self.horizon)


def frontier_for(q: Elem, extra: Sequence[Elem], horizon: int) -> Frontier:
    """Pick ``r >= q`` absorbing each extra element whose lub with ``r`` is finite.

    Absorption is greedy in the given order.  Afterwards every ``x`` in
    ``extra`` satisfies ``x <= r`` or ``x v r = INFINITY``, and the latter
    persists for every ``s >= r``.
    """
    r = q
    for x in extra:
        l = lub(r, x)
        if l is not INFINITY:
            r = l
    return Frontier(q, (r,), horizon)


def parse_monoid(spec: str | dict) -> Monoid:
    """Build a monoid from ``"n2"``/``"N^3"``/``"lex"`` or a Raag JSON object."""
    if isinstance(spec, dict):
        kind = spec.get("kind", "raag")
        if kind == "grid":
            return GridNk(int(spec["k"]))
        if kind == "lex":
            return LexZxZ()
        graph = spec.get("graph", spec)
        return Raag.from_json(graph)
    s = spec.strip().lower()
    m = re.fullmatch(r"n\^?(\d+)", s)
    if m:
        return GridNk(int(m.group(1)))
    if s in ("lex", "lexzxz"):
        return LexZxZ()
    raise DomainError(f"unknown monoid {spec!r}")
