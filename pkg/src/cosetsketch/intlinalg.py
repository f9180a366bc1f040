"""Exact integer matrix algebra: Hermite and Smith normal forms, integral kernels
and integral solvability.

Everything here works on plain Python ints, so there is no overflow anywhere.
Matrices are small immutable row tuples; the algorithms are the textbook
elementary-operation ones with extended-gcd pivoting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

Vector = Tuple[int, ...]


@dataclass(frozen=True)
class IntMatrix:
    """Immutable integer matrix stored as a tuple of row tuples.

    ``ncols`` is stored explicitly so that matrices with zero rows still
    know their width.
    """

    rows: Tuple[Vector, ...]
    ncols: int

    def __post_init__(self):
        if self.ncols < 0:
            raise ValueError("ncols must be non-negative")
        for row in self.rows:
            if len(row) != self.ncols:
                raise ValueError(f"row {row} does not have {self.ncols} entries")

    @classmethod
    def of(cls, rows: Iterable[Sequence[int]], ncols: Optional[int] = None) -> "IntMatrix":
        rows = tuple(tuple(int(v) for v in row) for row in rows)
        if ncols is None:
            if not rows:
                raise ValueError("ncols is required for a matrix with no rows")
            ncols = len(rows[0])
        return cls(rows, ncols)

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)), n)

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "IntMatrix":
        return cls(tuple((0,) * ncols for _ in range(nrows)), ncols)

    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.nrows, self.ncols)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return self.nrows

    def tolist(self):
        return [list(row) for row in self.rows]

    @property
    def T(self) -> "IntMatrix":
        return IntMatrix(tuple(zip(*self.rows)) if self.rows else tuple(() for _ in range(self.ncols)),
                         self.nrows)

    def column(self, j: int) -> Vector:
        return tuple(row[j] for row in self.rows)

    def __matmul__(self, other):
        if isinstance(other, IntMatrix):
            if self.ncols != other.nrows:
                raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
            cols = other.T.rows
            return IntMatrix(tuple(tuple(_dot(r, c) for c in cols) for r in self.rows),
                             other.ncols)
        vec = tuple(other)
        if len(vec) != self.ncols:
            raise ValueError(f"shape mismatch {self.shape} @ vector of length {len(vec)}")
        return tuple(_dot(r, vec) for r in self.rows)

    def __rmatmul__(self, vec):
        # row vector times matrix
        vec = tuple(vec)
        if len(vec) != self.nrows:
            raise ValueError(f"vector of length {len(vec)} @ matrix of shape {self.shape}")
        out = [0] * self.ncols
        for c, row in zip(vec, self.rows):
            if c:
                for j, v in enumerate(row):
                    out[j] += c * v
        return tuple(out)

    def is_zero(self) -> bool:
        return all(v == 0 for row in self.rows for v in row)

    def det(self) -> int:
        """Determinant by fraction-free (Bareiss) elimination."""
        n = self.nrows
        if n != self.ncols:
            raise ValueError("determinant of a non-square matrix")
        if n == 0:
            return 1
        a = self.tolist()
        sign = 1
        prev = 1
        for k in range(n - 1):
            if a[k][k] == 0:
                for i in range(k + 1, n):
                    if a[i][k] != 0:
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


@dataclass(frozen=True)
class SmithDecomposition:
    """``U @ A @ V == D`` with ``U``, ``V`` unimodular and ``D`` diagonal."""

    U: IntMatrix
    D: IntMatrix
    V: IntMatrix
    invariant_factors: Tuple[int, ...]


def _dot(a, b) -> int:
    return sum(x * y for x, y in zip(a, b))


def xgcd(a: int, b: int) -> Tuple[int, int, int]:
    """Return ``(g, x, y)`` with ``g = gcd(a, b) >= 0`` and ``a*x + b*y == g``."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def _as_matrix(A) -> IntMatrix:
    if isinstance(A, IntMatrix):
        return A
    return IntMatrix.of(A)


def _combine(rows, p, i, a, b, c, d):
    """Replace rows p, i by (a*row_p + b*row_i, c*row_p + d*row_i)."""
    rp, ri = rows[p], rows[i]
    rows[p] = [a * x + b * y for x, y in zip(rp, ri)]
    rows[i] = [c * x + d * y for x, y in zip(rp, ri)]


def hnf(A) -> Tuple[IntMatrix, IntMatrix]:
    """Row-style Hermite normal form.

    Returns ``(H, U)`` with ``U @ A == H`` and ``U`` unimodular. Pivots of ``H``
    are positive, entries above a pivot lie in ``[0, pivot)`` and zero rows
    come last, so two matrices have the same integer row span exactly when
    their ``H`` agree.
    """
    A = _as_matrix(A)
    m, n = A.shape
    H = A.tolist()
    U = IntMatrix.identity(m).tolist()
    p = 0
    for j in range(n):
        if p == m:
            break
        for i in range(p + 1, m):
            b = H[i][j]
            if b == 0:
                continue
            a = H[p][j]
            if a != 0 and b % a == 0:
                q = b // a
                H[i] = [y - q * x for x, y in zip(H[p], H[i])]
                U[i] = [y - q * x for x, y in zip(U[p], U[i])]
                continue
            g, x, y = xgcd(a, b)
            # [[x, y], [-b/g, a/g]] has determinant 1
            coeffs = (x, y, -b // g, a // g)
            _combine(H, p, i, *coeffs)
            _combine(U, p, i, *coeffs)
        if H[p][j] == 0:
            continue
        if H[p][j] < 0:
            H[p] = [-v for v in H[p]]
            U[p] = [-v for v in U[p]]
        piv = H[p][j]
        for k in range(p):
            q = H[k][j] // piv
            if q:
                H[k] = [y - q * x for x, y in zip(H[p], H[k])]
                U[k] = [y - q * x for x, y in zip(U[p], U[k])]
        p += 1
    return IntMatrix.of(H, n), IntMatrix.of(U, m)


def pivot_columns(H: IntMatrix) -> Tuple[int, ...]:
    """Column index of the leading entry of each nonzero row of an echelon matrix."""
    out = []
    for row in H.rows:
        for j, v in enumerate(row):
            if v:
                out.append(j)
                break
    return tuple(out)


def snf(A) -> SmithDecomposition:
    """Smith normal form ``U @ A @ V == D``.

    The diagonal of ``D`` is non-negative with ``d_1 | d_2 | ...`` and any zeros
    trailing. ``invariant_factors`` lists all ``min(rows, cols)`` diagonal
    entries, ones included.
    """
    A = _as_matrix(A)
    m, n = A.shape
    D = A.tolist()
    U = IntMatrix.identity(m).tolist()
    # V is kept transposed so that column operations become row operations
    Vt = IntMatrix.identity(n).tolist()

    def col_op(p, i, a, b, c, d):
        # columns p, i <- (a*col_p + b*col_i, c*col_p + d*col_i)
        for row in D:
            x, y = row[p], row[i]
            row[p], row[i] = a * x + b * y, c * x + d * y
        _combine(Vt, p, i, a, b, c, d)

    def swap_cols(p, i):
        for row in D:
            row[p], row[i] = row[i], row[p]
        Vt[p], Vt[i] = Vt[i], Vt[p]

    for t in range(min(m, n)):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                v = D[i][j]
                if v and (best is None or abs(v) < abs(D[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        bi, bj = best
        if bi != t:
            D[t], D[bi] = D[bi], D[t]
            U[t], U[bi] = U[bi], U[t]
        if bj != t:
            swap_cols(t, bj)

        while True:
            for i in range(t + 1, m):
                b = D[i][t]
                if b == 0:
                    continue
                a = D[t][t]
                if b % a == 0:
                    q = b // a
                    D[i] = [y - q * x for x, y in zip(D[t], D[i])]
                    U[i] = [y - q * x for x, y in zip(U[t], U[i])]
                else:
                    g, x, y = xgcd(a, b)
                    coeffs = (x, y, -b // g, a // g)
                    _combine(D, t, i, *coeffs)
                    _combine(U, t, i, *coeffs)
            for j in range(t + 1, n):
                b = D[t][j]
                if b == 0:
                    continue
                a = D[t][t]
                if b % a == 0:
                    col_op(t, j, 1, 0, -(b // a), 1)
                else:
                    g, x, y = xgcd(a, b)
                    col_op(t, j, x, y, -b // g, a // g)
            if any(D[i][t] for i in range(t + 1, m)):
                continue
            a = D[t][t]
            bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n)
                        if D[i][j] % a), None)
            if bad is None:
                break
            # pull the offending row into the pivot row and clear again
            i = bad[0]
            D[t] = [x + y for x, y in zip(D[t], D[i])]
            U[t] = [x + y for x, y in zip(U[t], U[i])]
        if D[t][t] < 0:
            D[t] = [-v for v in D[t]]
            U[t] = [-v for v in U[t]]

    Dm = IntMatrix.of(D, n)
    factors = tuple(D[i][i] for i in range(min(m, n)))
    return SmithDecomposition(IntMatrix.of(U, m), Dm, IntMatrix.of(Vt, n).T, factors)


def integral_kernel(A) -> IntMatrix:
    """Basis (as HNF rows) of ``{x in Z^n : A @ x == 0}``.

    The result has zero rows when the kernel is trivial.
    """
    A = _as_matrix(A)
    n = A.ncols
    H, U = hnf(A.T)
    r = len(pivot_columns(H))
    rows = U.rows[r:]
    if not rows:
        return IntMatrix.zeros(0, n)
    K, _ = hnf(IntMatrix.of(rows, n))
    return IntMatrix(K.rows[:len(rows)], n)


def solve_integral(A, b: Sequence[int]) -> Optional[Vector]:
    """Integer row vector ``c`` with ``c @ A == b``, or ``None`` if none exists.

    Raises ``ValueError`` when ``len(b)`` differs from the column count.
    """
    A = _as_matrix(A)
    b = tuple(int(v) for v in b)
    if len(b) != A.ncols:
        raise ValueError(f"right-hand side has length {len(b)}, expected {A.ncols}")
    H, U = hnf(A)
    return _solve_echelon(H, U, b)


def _solve_echelon(H: IntMatrix, U: IntMatrix, b: Vector) -> Optional[Vector]:
    residual = list(b)
    coeffs = [0] * H.nrows
    for k, j in enumerate(pivot_columns(H)):
        q, r = divmod(residual[j], H.rows[k][j])
        if r:
            return None
        if q:
            coeffs[k] = q
            residual = [x - q * y for x, y in zip(residual, H.rows[k])]
    if any(residual):
        return None
    return tuple(coeffs) @ U if U.nrows else ()


def inverse_unimodular(V: IntMatrix) -> IntMatrix:
    """Integer inverse of a unimodular matrix."""
    H, U = hnf(V)
    if H != IntMatrix.identity(V.nrows):
        raise ValueError("matrix is not unimodular")
    return U


def is_unimodular(V: IntMatrix) -> bool:
    return V.nrows == V.ncols and abs(V.det()) == 1
