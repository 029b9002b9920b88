"""Exact integer linear algebra.

Everything here works on Python ints, so intermediate entries never
overflow.  Matrices are immutable; every function returns new objects.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

from sympy import ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import smith_normal_decomp


class IntMatrix:
    """Immutable dense integer matrix (row-major).

    Zero-sized shapes are allowed: an ``n x 0`` matrix is how an empty
    kernel basis is returned.
    """

    __slots__ = ("_rows", "rows", "cols")

    def __init__(self, rows: Iterable[Iterable[int]], cols: int | None = None):
        data = tuple(tuple(int(x) for x in r) for r in rows)
        if cols is None:
            if not data:
                raise ValueError("cols must be given for a matrix with no rows")
            cols = len(data[0])
        for r in data:
            if len(r) != cols:
                raise ValueError("ragged matrix rows")
        self._rows = data
        self.rows = len(data)
        self.cols = cols

    # construction -------------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(([int(i == j) for j in range(n)] for i in range(n)), n)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(([0] * cols for _ in range(rows)), cols)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]], rows: int) -> "IntMatrix":
        return cls(([c[i] for c in columns] for i in range(rows)), len(columns))

    @classmethod
    def diagonal(cls, entries: Sequence[int], rows: int, cols: int) -> "IntMatrix":
        out = [[0] * cols for _ in range(rows)]
        for i, d in enumerate(entries):
            out[i][i] = d
        return cls(out, cols)

    # access -------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self._rows[i][j]

    def row(self, i: int) -> tuple[int, ...]:
        return self._rows[i]

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(r[j] for r in self._rows)

    def columns(self) -> list[tuple[int, ...]]:
        return [self.column(j) for j in range(self.cols)]

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self._rows]

    @property
    def T(self) -> "IntMatrix":
        return IntMatrix(self.columns(), self.rows)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "IntMatrix":
        return IntMatrix(([self._rows[i][j] for j in cols] for i in rows), len(cols))

    def hstack(self, other: "IntMatrix") -> "IntMatrix":
        if self.rows != other.rows:
            raise ValueError("row mismatch in hstack")
        return IntMatrix((a + b for a, b in zip(self._rows, other._rows)), self.cols + other.cols)

    def vstack(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.cols:
            raise ValueError("column mismatch in vstack")
        return IntMatrix(self._rows + other._rows, self.cols)

    # arithmetic ---------------------------------------------------------
    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        ocols = other.columns()
        return IntMatrix(
            ([sum(a * b for a, b in zip(r, c)) for c in ocols] for r in self._rows),
            other.cols,
        )

    def apply(self, v: Sequence[int]) -> tuple[int, ...]:
        if len(v) != self.cols:
            raise ValueError("vector length mismatch")
        return tuple(sum(a * b for a, b in zip(r, v)) for r in self._rows)

    def __neg__(self) -> "IntMatrix":
        return IntMatrix(([-x for x in r] for r in self._rows), self.cols)

    def scale(self, c: int) -> "IntMatrix":
        return IntMatrix(([c * x for x in r] for r in self._rows), self.cols)

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch in addition")
        return IntMatrix(
            ([a + b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)), self.cols
        )

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        return self + (-other)

    def is_zero(self) -> bool:
        return all(x == 0 for r in self._rows for x in r)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntMatrix):
            return NotImplemented
        return self.shape == other.shape and self._rows == other._rows

    def __hash__(self) -> int:
        return hash((self.shape, self._rows))

    def __repr__(self) -> str:
        return f"IntMatrix({self.tolist()!r}, cols={self.cols})"


@dataclass(frozen=True)
class SmithForm:
    """``left @ m @ right`` is the diagonal matrix with ``diagonal`` on it."""

    diagonal: tuple[int, ...]
    left: IntMatrix
    right: IntMatrix

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d != 0)


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, s, t)`` with ``s*a + t*b = g = gcd(a, b) >= 0``."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if a < 0:
        return -a, -s0, -t0
    return a, s0, t0


def hermite_form(m: IntMatrix) -> tuple[IntMatrix, IntMatrix]:
    """Row-style Hermite normal form.

    Returns ``(h, u)`` with ``u`` unimodular, ``u @ m == h``, ``h`` in row
    echelon form, pivots positive and entries above each pivot reduced into
    ``[0, pivot)``.
    """
    rows, cols = m.shape
    a = m.tolist()
    u = IntMatrix.identity(rows).tolist()
    r = 0
    for c in range(cols):
        if r == rows:
            break
        # fold every entry below r into row r with 2x2 unimodular moves
        for i in range(r + 1, rows):
            if a[i][c] == 0:
                continue
            x, y = a[r][c], a[i][c]
            g, s, t = _xgcd(x, y)
            px, py = x // g, y // g
            ar, ai = a[r], a[i]
            a[r] = [s * p + t * q for p, q in zip(ar, ai)]
            a[i] = [-py * p + px * q for p, q in zip(ar, ai)]
            ur, ui = u[r], u[i]
            u[r] = [s * p + t * q for p, q in zip(ur, ui)]
            u[i] = [-py * p + px * q for p, q in zip(ur, ui)]
        if a[r][c] == 0:
            continue
        if a[r][c] < 0:
            a[r] = [-x for x in a[r]]
            u[r] = [-x for x in u[r]]
        piv = a[r][c]
        for i in range(r):
            q = a[i][c] // piv
            if q:
                a[i] = [x - q * y for x, y in zip(a[i], a[r])]
                u[i] = [x - q * y for x, y in zip(u[i], u[r])]
        r += 1
    return IntMatrix(a, cols), IntMatrix(u, rows)


def hermite_pivots(h: IntMatrix) -> list[tuple[int, int]]:
    """(row, column) positions of the pivots of a row-echelon matrix."""
    out = []
    for i in range(h.rows):
        for j in range(h.cols):
            if h[i, j] != 0:
                out.append((i, j))
                break
    return out


def smith_form(m: IntMatrix) -> SmithForm:
    """Smith normal form with unimodular transforms.

    The diagonal is non-negative and each entry divides the next one; zeros
    come last.
    """
    rows, cols = m.shape
    if rows == 0 or cols == 0:
        return SmithForm((), IntMatrix.identity(rows), IntMatrix.identity(cols))
    d, u, v = smith_normal_decomp(DomainMatrix(m.tolist(), m.shape, ZZ).convert_to(ZZ))
    d, u, v = d.to_list(), u.to_list(), v.to_list()
    left = [[int(x) for x in row] for row in u]
    diag = [int(d[i][i]) for i in range(min(rows, cols))]
    for i, x in enumerate(diag):
        if x < 0:
            diag[i] = -x
            left[i] = [-y for y in left[i]]
    right = [[int(x) for x in row] for row in v]
    return SmithForm(tuple(diag), IntMatrix(left, rows), IntMatrix(right, cols))


def rank(m: IntMatrix) -> int:
    h, _ = hermite_form(m)
    return len(hermite_pivots(h))


def determinant(m: IntMatrix) -> int:
    """Bareiss fraction-free determinant."""
    n = m.rows
    if n != m.cols:
        raise ValueError("determinant of a non-square matrix")
    if n == 0:
        return 1
    a = m.tolist()
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k]:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def is_unimodular(m: IntMatrix) -> bool:
    return m.rows == m.cols and abs(determinant(m)) == 1


def integer_kernel(m: IntMatrix) -> IntMatrix:
    """Saturated basis of ``{v in Z^cols : m v = 0}`` as matrix columns.

    The basis is Hermite-reduced (as rows) before being transposed, so the
    output depends only on the kernel lattice.
    """
    h, u = hermite_form(m.T)
    r = len(hermite_pivots(h))
    vectors = [u.row(i) for i in range(r, u.rows)]
    if not vectors:
        return IntMatrix.zeros(m.cols, 0)
    kh, _ = hermite_form(IntMatrix(vectors, m.cols))
    return IntMatrix(kh.tolist(), m.cols).T


def lattice_basis(vectors: Sequence[Sequence[int]], dim: int) -> IntMatrix:
    """Hermite basis (as rows) of the lattice spanned by ``vectors``."""
    if not vectors:
        return IntMatrix.zeros(0, dim)
    h, _ = hermite_form(IntMatrix(vectors, dim))
    r = len(hermite_pivots(h))
    return IntMatrix([h.row(i) for i in range(r)], dim)


def solve_integer(a: IntMatrix, b: Sequence[int]) -> tuple[int, ...] | None:
    """One integer solution of ``a x = b``, or ``None`` if there is none."""
    if len(b) != a.rows:
        raise ValueError("right-hand side length mismatch")
    snf = smith_form(a)
    ub = snf.left.apply(b)
    y = [0] * a.cols
    for i, c in enumerate(ub):
        d = snf.diagonal[i] if i < len(snf.diagonal) else 0
        if d == 0:
            if c != 0:
                return None
        else:
            if c % d:
                return None
            y[i] = c // d
    return snf.right.apply(y)


def solve_rational(a: IntMatrix, b: Sequence[int]) -> list[Fraction] | None:
    """Unique rational solution of a full-column-rank system, else ``None``."""
    rows, cols = a.shape
    aug = [[Fraction(x) for x in a.row(i)] + [Fraction(b[i])] for i in range(rows)]
    piv_cols = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if aug[i][c] != 0), None)
        if p is None:
            return None
        aug[r], aug[p] = aug[p], aug[r]
        pv = aug[r][c]
        aug[r] = [x / pv for x in aug[r]]
        for i in range(rows):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        piv_cols.append(c)
        r += 1
    if any(aug[i][cols] != 0 for i in range(r, rows)):
        return None
    return [aug[i][cols] for i in range(cols)]


def vector_gcd(v: Sequence[int]) -> int:
    g = 0
    for x in v:
        g = gcd(g, x)
    return g


def is_primitive(v: Sequence[int]) -> bool:
    """True iff the entries of the nonzero vector ``v`` have gcd 1."""
    g = vector_gcd(v)
    if g == 0:
        raise ValueError("primitivity is undefined for the zero vector")
    return g == 1


def primitive(v: Sequence[int]) -> tuple[int, ...]:
    g = vector_gcd(v)
    if g == 0:
        raise ValueError("cannot primitivize the zero vector")
    return tuple(x // g for x in v)


def dual_basis(vectors: Sequence[Sequence[int]], dim: int) -> list[tuple[int, ...]]:
    """Functionals ``m_i`` with ``<m_i, v_j> = delta_ij``.

    Requires the vectors to be part of a lattice basis (a smooth cone).
    """
    k = len(vectors)
    r = IntMatrix.from_columns(vectors, dim)
    snf = smith_form(r)
    if snf.diagonal[:k] != (1,) * k:
        raise ValueError("vectors do not extend to a lattice basis")
    top = IntMatrix([snf.left.row(i) for i in range(k)], dim)
    w = snf.right @ top
    return [w.row(i) for i in range(k)]


def complete_basis(vectors: Sequence[Sequence[int]], dim: int) -> IntMatrix:
    """Unimodular matrix whose first columns are ``vectors``."""
    k = len(vectors)
    r = IntMatrix.from_columns(vectors, dim)
    snf = smith_form(r)
    if snf.diagonal[:k] != (1,) * k:
        raise ValueError("vectors do not extend to a lattice basis")
    # left @ r @ right = [I; 0]  =>  r = left^-1 [right^-1; 0]
    inv_left = unimodular_inverse(snf.left)
    cols = [inv_left.column(j) for j in range(dim)]
    extra = cols[k:]
    return IntMatrix.from_columns(list(vectors) + extra, dim)


def unimodular_inverse(u: IntMatrix) -> IntMatrix:
    n = u.rows
    cols = []
    for j in range(n):
        e = [int(i == j) for i in range(n)]
        x = solve_integer(u, e)
        if x is None:
            raise ValueError("matrix is not unimodular")
        cols.append(x)
    return IntMatrix.from_columns(cols, n)


# CSV interchange --------------------------------------------------------

def matrix_to_csv(m: IntMatrix, header: Sequence[str] | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for r in m.tolist():
        w.writerow(r)
    return buf.getvalue()


def matrix_from_csv(text: str, header: bool = False) -> tuple[IntMatrix, list[str] | None]:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    labels = None
    if header:
        labels, rows = rows[0], rows[1:]
    try:
        data = [[int(x) for x in r] for r in rows]
    except ValueError as exc:
        raise ValueError(f"non-integer matrix entry: {exc}") from None
    cols = len(labels) if labels is not None else (len(data[0]) if data else 0)
    return IntMatrix(data, cols), labels
