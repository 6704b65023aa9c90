"""Exact Gaussian-rational scalars and the small matrix toolkit built on them.

Matrices throughout the package are numpy arrays.  Exact data lives in
``dtype=object`` arrays whose entries are ``int``, ``Fraction`` or
:class:`Gaussian`; floating data uses ``complex128``.  Every helper here
accepts either kind and only falls back to a tolerance when an entry is
inexact.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Integral, Rational

import numpy as np

TOL = 1e-9


class Gaussian:
    """A Gaussian rational ``re + im*i`` with ``Fraction`` parts.

    Arithmetic results with zero imaginary part collapse back to
    ``Fraction``/``int`` so that real data never pays for the wrapper.
    """

    __slots__ = ("re", "im")

    def __init__(self, re, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def make(re, im=0):
        re, im = Fraction(re), Fraction(im)
        if im == 0:
            return int(re) if re.denominator == 1 else re
        return Gaussian(re, im)

    @staticmethod
    def _parts(x):
        if isinstance(x, Gaussian):
            return x.re, x.im
        if isinstance(x, Rational):
            return Fraction(x), Fraction(0)
        return None

    def __add__(self, other):
        o = self._parts(other)
        if o is None:
            return complex(self) + other
        return Gaussian.make(self.re + o[0], self.im + o[1])

    __radd__ = __add__

    def __neg__(self):
        return Gaussian.make(-self.re, -self.im)

    def __sub__(self, other):
        o = self._parts(other)
        if o is None:
            return complex(self) - other
        return Gaussian.make(self.re - o[0], self.im - o[1])

    def __rsub__(self, other):
        o = self._parts(other)
        if o is None:
            return other - complex(self)
        return Gaussian.make(o[0] - self.re, o[1] - self.im)

    def __mul__(self, other):
        o = self._parts(other)
        if o is None:
            return complex(self) * other
        a, b = o
        return Gaussian.make(self.re * a - self.im * b, self.re * b + self.im * a)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._parts(other)
        if o is None:
            return complex(self) / other
        a, b = o
        den = a * a + b * b
        if den == 0:
            raise ZeroDivisionError("Gaussian division by zero")
        return Gaussian.make((self.re * a + self.im * b) / den,
                             (self.im * a - self.re * b) / den)

    def __rtruediv__(self, other):
        o = self._parts(other)
        if o is None:
            return other / complex(self)
        return Gaussian(*o) / self

    def conjugate(self):
        return Gaussian(self.re, -self.im)

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def __abs__(self):
        return float(self.abs2()) ** 0.5

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __eq__(self, other):
        o = self._parts(other)
        if o is None:
            try:
                return complex(self) == complex(other)
            except TypeError:
                return NotImplemented
        return self.re == o[0] and self.im == o[1]

    def __bool__(self):
        return bool(self.re or self.im)

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        return f"Gaussian({self.re}, {self.im})"

    def __str__(self):
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


I = Gaussian(0, 1)

_EXACT = (Integral, Fraction, Gaussian)


def is_exact(M) -> bool:
    M = np.asarray(M)
    if M.dtype != object:
        return M.dtype.kind in "iub"
    return all(isinstance(x, _EXACT) for x in M.flat)


def exact(M):
    """Return ``M`` as an object array; integer and rational input stays exact."""
    A = np.asarray(M)
    if A.dtype == object:
        return A
    out = np.empty(A.shape, dtype=object)
    if A.dtype.kind in "iub":
        out.flat = [int(x) for x in A.flat]
    else:
        out.flat = list(A.flat)
    return out


def zeros(n, m=None):
    m = n if m is None else m
    out = np.empty((n, m), dtype=object)
    out.fill(0)
    return out


def eye(n):
    out = zeros(n)
    for i in range(n):
        out[i, i] = 1
    return out


def vector(n):
    out = np.empty(n, dtype=object)
    out.fill(0)
    return out


def adjoint(M):
    M = np.asarray(M)
    return np.conjugate(M).T


def conj(x):
    return x.conjugate() if hasattr(x, "conjugate") else x


def is_zero(M, tol: float = TOL) -> bool:
    """Exact test on exact data, sup-norm within ``tol`` otherwise."""
    A = np.asarray(M)
    if A.size == 0:
        return True
    if A.dtype == object:
        if all(isinstance(x, _EXACT) for x in A.flat):
            return all(x == 0 for x in A.flat)
        A = A.astype(complex)
    return float(np.max(np.abs(A))) <= tol


def equal(A, B, tol: float = TOL) -> bool:
    return is_zero(np.asarray(A) - np.asarray(B), tol)


def max_abs(M) -> float:
    A = np.asarray(M)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(A.astype(complex))))


def to_complex(M):
    return np.asarray(M).astype(complex)


def opnorm(M) -> float:
    A = to_complex(M)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def block_diag(blocks):
    n = sum(b.shape[0] for b in blocks)
    m = sum(b.shape[1] for b in blocks)
    out = zeros(n, m)
    i = j = 0
    for b in blocks:
        out[i:i + b.shape[0], j:j + b.shape[1]] = b
        i += b.shape[0]
        j += b.shape[1]
    return out


def parse_scalar(v):
    """Parse ``[re, im]`` pairs, numbers, or ``"p/q"`` strings into a scalar.

    Integers and rational strings stay exact; JSON floats become ``complex``.
    """
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError(f"expected [re, im], got {v!r}")
        re, im = (parse_scalar(x) for x in v)
        if isinstance(re, _EXACT) and isinstance(im, _EXACT):
            return Gaussian.make(re, im)
        return complex(re) + 1j * complex(im)
    if isinstance(v, bool):
        raise ValueError("booleans are not scalars")
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        if v.is_integer():
            return int(v)
        return complex(v)
    if isinstance(v, str):
        return Gaussian.make(Fraction(v))
    raise ValueError(f"cannot parse scalar {v!r}")


def dump_scalar(x):
    if isinstance(x, Gaussian):
        return [_dump_real(x.re), _dump_real(x.im)]
    if isinstance(x, (Integral, Fraction)):
        return [_dump_real(Fraction(x)), 0]
    z = complex(x)
    return [z.real, z.imag]


def _dump_real(f: Fraction):
    return int(f) if f.denominator == 1 else str(f)


def parse_matrix(rows):
    data = [[parse_scalar(v) for v in row] for row in rows]
    n = len(data)
    m = len(data[0]) if n else 0
    out = zeros(n, m)
    for i, row in enumerate(data):
        if len(row) != m:
            raise ValueError(f"ragged matrix at row {i}")
        out[i, :] = row
    return out


def dump_matrix(M):
    return [[dump_scalar(x) for x in row] for row in np.asarray(M)]


def _exact_scalar(v):
    if isinstance(v, _EXACT):
        return v
    if isinstance(v, complex):
        return Gaussian.make(Fraction(v.real), Fraction(v.imag))
    return Fraction(v)


def nullspace(rows, ncols):
    """Exact null space of a sparse rational matrix.

    ``rows`` is an iterable of ``{column: value}`` dicts with ``int``,
    ``Fraction`` or ``Gaussian`` values.  Returns a list of basis vectors, each a dict.
    Gaussian elimination is done on the sparse rows directly; the matrices
    produced by the lifting maps are 0/1 patterns so fill-in stays small.
    """
    pivots: dict[int, dict[int, Fraction]] = {}
    for row in rows:
        r = {c: _exact_scalar(v) for c, v in row.items() if v != 0}
        # pivot rows are kept fully reduced, so one pass clears every pivot column
        for k in [k for k in r if k in pivots]:
            f = r.get(k)
            if not f:
                continue
            for kk, vv in pivots[k].items():
                nv = r.get(kk, 0) - f * vv
                if nv:
                    r[kk] = nv
                else:
                    r.pop(kk, None)
        if not r:
            continue
        c = min(r)
        lead = r[c]
        r = {k: v / lead for k, v in r.items()}
        for pr in pivots.values():
            f = pr.get(c)
            if f:
                for k, v in r.items():
                    nv = pr.get(k, 0) - f * v
                    if nv:
                        pr[k] = nv
                    else:
                        pr.pop(k, None)
        pivots[c] = r
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = {fc: Fraction(1)}
        for pc, pr in pivots.items():
            v = pr.get(fc)
            if v:
                vec[pc] = -v
        basis.append(vec)
    return basis
