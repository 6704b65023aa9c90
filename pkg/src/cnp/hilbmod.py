"""Finite-dimensional right-Hilbert C^V bimodules.

A bimodule is described by an orthonormal basis in which every basis vector
``xi`` carries a source vertex (where the inner product lives) and a range
vertex (which idempotent of ``C^V`` fixes it on the left).  A range of
``None`` marks a vector killed by the whole left action.

Vectors and operators are thin wrappers around numpy arrays; the arrays
may be exact (object dtype) or complex.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Hashable, Sequence

import numpy as np

from . import scalars as sc
from .scalars import TOL


class ModuleMismatch(ValueError):
    pass


@dataclass(frozen=True)
class VertexAlgebra:
    """The commutative algebra ``C^V``; elements are vectors indexed by V."""

    vertices: tuple

    def __post_init__(self):
        if not self.vertices:
            raise ValueError("a vertex algebra needs at least one vertex")
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("duplicate vertices")

    def __len__(self):
        return len(self.vertices)

    def index(self, v) -> int:
        return self.vertices.index(v)

    def delta(self, v):
        a = sc.vector(len(self.vertices))
        a[self.index(v)] = 1
        return a

    def one(self):
        a = sc.vector(len(self.vertices))
        a[:] = 1
        return a

    def element(self, values) -> np.ndarray:
        """Build an element from a dict ``{v: value}`` or a sequence."""
        if isinstance(values, dict):
            a = sc.vector(len(self.vertices))
            for v, x in values.items():
                a[self.index(v)] = x
            return a
        a = np.asarray(values, dtype=object)
        if a.shape != (len(self.vertices),):
            raise ValueError("element has the wrong length")
        return a


@dataclass(frozen=True, eq=False)
class Bimodule:
    """Finite-dimensional right-Hilbert ``C^V``--``C^V`` bimodule."""

    vertices: tuple
    basis: tuple
    source: tuple
    range: tuple
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "basis", tuple(self.basis))
        object.__setattr__(self, "source", tuple(self.source))
        object.__setattr__(self, "range", tuple(self.range))
        n = len(self.basis)
        if len(self.source) != n or len(self.range) != n:
            raise ValueError("basis, source and range must have equal length")
        vs = set(self.vertices)
        for s, r in zip(self.source, self.range):
            if s not in vs:
                raise ValueError(f"unknown source vertex {s!r}")
            if r is not None and r not in vs:
                raise ValueError(f"unknown range vertex {r!r}")
        idx = {b: i for i, b in enumerate(self.basis)}
        if len(idx) != n:
            raise ValueError("duplicate basis labels")
        object.__setattr__(self, "_index", idx)

    def __eq__(self, other):
        return (isinstance(other, Bimodule) and self.vertices == other.vertices
                and self.basis == other.basis and self.source == other.source
                and self.range == other.range)

    def __hash__(self):
        return hash((self.vertices, self.basis, self.source, self.range))

    @property
    def algebra(self) -> VertexAlgebra:
        return VertexAlgebra(self.vertices)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def index(self, label) -> int:
        return self._index[label]

    def __contains__(self, label):
        return label in self._index

    @classmethod
    def algebra_module(cls, vertices: Sequence) -> "Bimodule":
        """``A`` as a bimodule over itself, basis labelled by the vertices."""
        vs = tuple(vertices)
        return cls(vs, vs, vs, vs)

    @property
    def is_algebra(self) -> bool:
        return self.basis == self.vertices and self.source == self.vertices and self.range == self.vertices

    def vector(self, coeffs=None) -> "Vector":
        if coeffs is None:
            return Vector(self, sc.vector(self.dim))
        if isinstance(coeffs, dict):
            c = sc.vector(self.dim)
            for k, v in coeffs.items():
                c[self.index(k)] = v
            return Vector(self, c)
        c = np.asarray(coeffs)
        if c.shape != (self.dim,):
            raise ModuleMismatch("coefficient vector has the wrong length")
        return Vector(self, c)

    def basis_vector(self, label) -> "Vector":
        c = sc.vector(self.dim)
        c[self.index(label)] = 1
        return Vector(self, c)

    def operator(self, matrix) -> "Operator":
        return Operator(self, matrix)

    def zero_operator(self) -> "Operator":
        return Operator(self, sc.zeros(self.dim))

    def identity(self) -> "Operator":
        return Operator(self, sc.eye(self.dim))

    def left_action(self, a) -> "Operator":
        """``phi(a)``: diagonal, ``a(range(xi))`` on ``xi`` and 0 on ``None`` ranges."""
        a = np.asarray(a, dtype=object)
        M = sc.zeros(self.dim)
        vidx = {v: i for i, v in enumerate(self.vertices)}
        for i, r in enumerate(self.range):
            if r is not None:
                M[i, i] = a[vidx[r]]
        return Operator(self, M)

    def right_diag(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=object)
        vidx = {v: i for i, v in enumerate(self.vertices)}
        return np.array([a[vidx[s]] for s in self.source], dtype=object)

    def source_blocks(self) -> dict:
        blocks: dict = {}
        for i, s in enumerate(self.source):
            blocks.setdefault(s, []).append(i)
        return blocks

    def kernel_vertices(self) -> tuple:
        """Vertices ``v`` with ``phi(delta_v) = 0``."""
        hit = set(r for r in self.range if r is not None)
        return tuple(v for v in self.vertices if v not in hit)

    def submodule(self, indices) -> "Bimodule":
        idx = list(indices)
        return Bimodule(self.vertices, [self.basis[i] for i in idx],
                        [self.source[i] for i in idx], [self.range[i] for i in idx])

    def restrict_sources(self, ideal) -> list[int]:
        ideal = set(ideal)
        return [i for i, s in enumerate(self.source) if s in ideal]

    def to_json(self) -> dict:
        return {"vertices": list(self.vertices),
                "basis": [{"id": _label_str(b), "source": s, "range": r}
                          for b, s, r in zip(self.basis, self.source, self.range)]}

    @classmethod
    def from_json(cls, obj) -> "Bimodule":
        if isinstance(obj, str):
            obj = json.loads(obj)
        vs = list(obj["vertices"])
        basis = obj.get("basis", [])
        return cls(vs, [b["id"] for b in basis], [b["source"] for b in basis],
                   [b.get("range") for b in basis])


def _label_str(b) -> str:
    if isinstance(b, tuple):
        return "".join(map(str, b))
    return str(b)


@dataclass(frozen=True, eq=False)
class Vector:
    module: Bimodule
    coeffs: np.ndarray

    def _check(self, other):
        if other.module != self.module:
            raise ModuleMismatch("vectors live in different modules")

    def __add__(self, other):
        self._check(other)
        return Vector(self.module, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return Vector(self.module, self.coeffs - other.coeffs)

    def __rmul__(self, c):
        return Vector(self.module, c * self.coeffs)

    def __neg__(self):
        return Vector(self.module, -self.coeffs)

    def act(self, a) -> "Vector":
        """Right action ``x . a``."""
        return Vector(self.module, self.coeffs * self.module.right_diag(a))

    def equals(self, other, tol=TOL) -> bool:
        self._check(other)
        return sc.equal(self.coeffs, other.coeffs, tol)

    def norm(self) -> float:
        return float(np.sqrt(sc.max_abs(inner(self, self))))


@dataclass(frozen=True, eq=False)
class Operator:
    module: Bimodule
    matrix: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.matrix)
        if M.shape != (self.module.dim, self.module.dim):
            raise ModuleMismatch(f"operator shape {M.shape} does not fit dimension {self.module.dim}")
        object.__setattr__(self, "matrix", M)

    def _check(self, other):
        if other.module != self.module:
            raise ModuleMismatch("operators act on different modules")

    def __add__(self, other):
        self._check(other)
        return Operator(self.module, self.matrix + other.matrix)

    def __sub__(self, other):
        self._check(other)
        return Operator(self.module, self.matrix - other.matrix)

    def __neg__(self):
        return Operator(self.module, -self.matrix)

    def __rmul__(self, c):
        return Operator(self.module, c * self.matrix)

    def __matmul__(self, other):
        if isinstance(other, Vector):
            if other.module != self.module:
                raise ModuleMismatch("operator and vector live in different modules")
            return Vector(self.module, self.matrix @ other.coeffs)
        self._check(other)
        return Operator(self.module, self.matrix @ other.matrix)

    @property
    def adj(self) -> "Operator":
        return Operator(self.module, sc.adjoint(self.matrix))

    def is_zero(self, tol=TOL) -> bool:
        return sc.is_zero(self.matrix, tol)

    def equals(self, other, tol=TOL) -> bool:
        self._check(other)
        return sc.equal(self.matrix, other.matrix, tol)

    def is_adjointable(self, tol=TOL) -> bool:
        """Source-block-diagonal, i.e. ``C^V``-linear on the right."""
        src = self.module.source
        M = self.matrix
        for i in range(M.shape[0]):
            for j in range(M.shape[1]):
                if src[i] != src[j] and not sc.is_zero(np.array([M[i, j]]), tol):
                    return False
        return True


def _same(x, y):
    if x.module != y.module:
        raise ModuleMismatch("arguments live in different modules")
    return x.module


def inner(x: Vector, y: Vector) -> np.ndarray:
    """``<x, y>_A``, conjugate-linear in ``x``."""
    X = _same(x, y)
    out = sc.vector(len(X.vertices))
    vidx = {v: i for i, v in enumerate(X.vertices)}
    for i, s in enumerate(X.source):
        out[vidx[s]] = out[vidx[s]] + sc.conj(x.coeffs[i]) * y.coeffs[i]
    return out


def rank_one(x: Vector, y: Vector) -> Operator:
    """The operator ``z -> x . <y, z>``."""
    X = _same(x, y)
    n = X.dim
    M = sc.zeros(n)
    for i in range(n):
        if x.coeffs[i] == 0:
            continue
        for j in range(n):
            if X.source[i] == X.source[j]:
                M[i, j] = x.coeffs[i] * sc.conj(y.coeffs[j])
    return Operator(X, M)


def unit_operator(X: Bimodule, i: int, j: int) -> Operator:
    """``theta_{xi_i, xi_j}``; zero unless the two sources agree."""
    M = sc.zeros(X.dim)
    if X.source[i] == X.source[j]:
        M[i, j] = 1
    return Operator(X, M)


def compact_units(X: Bimodule) -> list[tuple[int, int]]:
    """Index pairs spanning ``K(X)``: same-source matrix units."""
    return [(i, j) for i in range(X.dim) for j in range(X.dim) if X.source[i] == X.source[j]]


@dataclass(frozen=True, eq=False)
class Tensor:
    """``X (x)_A Y`` with the canonical basis ``xi (x) eta``, ``s(xi) = r(eta)``."""

    left: Bimodule
    right: Bimodule
    module: Bimodule
    pairs: tuple

    def elementary(self, x: Vector, y: Vector) -> Vector:
        if x.module != self.left or y.module != self.right:
            raise ModuleMismatch("factors do not match the tensor product")
        c = sc.vector(self.module.dim)
        for k, (i, j) in enumerate(self.pairs):
            c[k] = x.coeffs[i] * y.coeffs[j]
        return Vector(self.module, c)

    def left_amplify(self, S) -> np.ndarray:
        """Matrix of ``S (x) 1`` on the tensor basis."""
        S = _mat(S)
        n = len(self.pairs)
        M = sc.zeros(n)
        by_right: dict = {}
        for k, (i, j) in enumerate(self.pairs):
            by_right.setdefault(j, {})[i] = k
        for k, (i, j) in enumerate(self.pairs):
            col = by_right[j]
            for i2, k2 in col.items():
                if S[i2, i] != 0:
                    M[k2, k] = S[i2, i]
        return M

    def right_amplify(self, T) -> np.ndarray:
        """Matrix of ``1 (x) T`` for a left-module map ``T`` of ``Y``."""
        T = _mat(T)
        n = len(self.pairs)
        M = sc.zeros(n)
        by_left: dict = {}
        for k, (i, j) in enumerate(self.pairs):
            by_left.setdefault(i, {})[j] = k
        for k, (i, j) in enumerate(self.pairs):
            row = by_left[i]
            for j2, k2 in row.items():
                if T[j2, j] != 0:
                    M[k2, k] = T[j2, j]
        return M


def tensor(X: Bimodule, Y: Bimodule, label: Callable[[Hashable, Hashable], Hashable] | None = None) -> Tensor:
    """Balanced tensor product over ``C^V``.

    ``source(xi (x) eta) = source(eta)`` and ``range(xi (x) eta) = range(xi)``.
    """
    if X.vertices != Y.vertices:
        raise ModuleMismatch("tensor factors have different coefficient algebras")
    label = label or (lambda a, b: (a, b))
    pairs, basis, src, rng = [], [], [], []
    by_range: dict = {}
    for j, r in enumerate(Y.range):
        by_range.setdefault(r, []).append(j)
    for i in range(X.dim):
        for j in by_range.get(X.source[i], []):
            pairs.append((i, j))
            basis.append(label(X.basis[i], Y.basis[j]))
            src.append(Y.source[j])
            rng.append(X.range[i])
    Z = Bimodule(X.vertices, basis, src, rng)
    return Tensor(X, Y, Z, tuple(pairs))


def _mat(S):
    return S.matrix if isinstance(S, Operator) else np.asarray(S)


def iota(S, XY: Tensor, M, target: Bimodule | None = None) -> Operator:
    """``iota(S) = M (S (x) 1) M*`` on the product fibre.

    When the left factor is the coefficient algebra, ``S`` is multiplication
    by ``a = diag(S)`` and the result is the left action ``phi(a)``.
    """
    target = target or XY.right
    S = _mat(S)
    if S.shape != (XY.left.dim, XY.left.dim):
        raise ModuleMismatch("operator does not act on the left tensor factor")
    if XY.left.is_algebra:
        a = np.array([S[i, i] for i in range(S.shape[0])], dtype=object)
        return target.left_action(a)
    M = np.asarray(M)
    if M.shape != (target.dim, len(XY.pairs)):
        raise ModuleMismatch("multiplication map has the wrong shape")
    return Operator(target, M @ XY.left_amplify(S) @ sc.adjoint(M))


def operator_norm(T) -> float:
    """Largest singular value, computed block by block over the source grading."""
    if isinstance(T, Operator):
        M = sc.to_complex(T.matrix)
        blocks = T.module.source_blocks().values()
    else:
        M = sc.to_complex(T)
        blocks = [list(range(M.shape[0]))]
    best = 0.0
    for b in blocks:
        if b:
            best = max(best, sc.opnorm(M[np.ix_(b, b)]))
    return best


def is_unitary(M, tol=TOL) -> bool:
    M = np.asarray(M)
    if M.shape[0] != M.shape[1]:
        return False
    return sc.equal(sc.adjoint(M) @ M, sc.eye(M.shape[0]), tol)


def is_isometry(M, tol=TOL) -> bool:
    M = np.asarray(M)
    return sc.equal(sc.adjoint(M) @ M, sc.eye(M.shape[1]), tol)


def grading_violations(M, dom: Bimodule, cod: Bimodule, tol=TOL) -> list:
    """Entries of ``M : dom -> cod`` joining basis vectors of different (range, source)."""
    bad = []
    M = np.asarray(M)
    for i in range(M.shape[0]):
        for j in range(M.shape[1]):
            if M[i, j] != 0 and not sc.is_zero(np.array([M[i, j]]), tol):
                if cod.source[i] != dom.source[j] or cod.range[i] != dom.range[j]:
                    bad.append((cod.basis[i], dom.basis[j]))
    return bad
