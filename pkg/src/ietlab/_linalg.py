"""Exact integer and rational matrix helpers.

Matrices are tuples of row tuples of Python ints (or Fractions).  Nothing
here touches floating point.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Matrix = tuple  # tuple[tuple[int, ...], ...]


def identity(n: int) -> Matrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def transpose(a: Sequence[Sequence]) -> Matrix:
    return tuple(zip(*a))


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> Matrix:
    bt = list(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a)


def matvec(a: Sequence[Sequence], v: Sequence) -> tuple:
    return tuple(sum(x * y for x, y in zip(row, v)) for row in a)


def vecmat(v: Sequence, a: Sequence[Sequence]) -> tuple:
    """Row vector times matrix, i.e. ``transpose(a) @ v``."""
    n = len(a[0])
    return tuple(sum(v[i] * a[i][j] for i in range(len(v))) for j in range(n))


def matpow(a: Sequence[Sequence], k: int) -> Matrix:
    if k < 0:
        raise ValueError("negative power")
    result = identity(len(a))
    base = tuple(tuple(r) for r in a)
    while k:
        if k & 1:
            result = matmul(base, result)
        base = matmul(base, base)
        k >>= 1
    return result


def dot(u: Sequence, v: Sequence):
    return sum(x * y for x, y in zip(u, v))


def rank(rows: Sequence[Sequence]) -> int:
    return len(_rref([list(map(Fraction, r)) for r in rows])[1])


def _rref(m: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    m = [row[:] for row in m]
    pivots: list[int] = []
    if not m:
        return m, pivots
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rational_nullspace(rows: Sequence[Sequence], n: int) -> tuple[tuple[Fraction, ...], ...]:
    """Basis of ``{w : rows @ w = 0}`` from the reduced row echelon form."""
    red, pivots = _rref([list(map(Fraction, r)) for r in rows]) if rows else ([], [])
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        w = [Fraction(0)] * n
        w[f] = Fraction(1)
        for row, p in zip(red, pivots):
            w[p] = -row[f]
        basis.append(tuple(w))
    return tuple(basis)


def solve_coordinates(basis: Sequence[Sequence], v: Sequence) -> tuple[Fraction, ...] | None:
    """Exact coefficients ``c`` with ``sum c_k basis[k] == v``; ``None`` if v is outside the span."""
    k = len(basis)
    n = len(v)
    # augmented system: columns are basis vectors
    m = [[Fraction(basis[j][i]) for j in range(k)] + [Fraction(v[i])] for i in range(n)]
    red, pivots = _rref(m)
    if k in pivots:
        return None
    if len(pivots) < k:
        raise ValueError("basis vectors are linearly dependent")
    coeffs = [Fraction(0)] * k
    for row, p in zip(red, pivots):
        coeffs[p] = row[k]
    return tuple(coeffs)


def det(a: Sequence[Sequence]) -> int:
    """Bareiss fraction-free determinant of an integer matrix."""
    m = [list(r) for r in a]
    n = len(m)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1] if n else 1


def inverse_unimodular(a: Sequence[Sequence]) -> Matrix:
    """Integer inverse of a matrix with determinant +-1."""
    n = len(a)
    m = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(a)]
    red, pivots = _rref(m)
    if pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    inv = [row[n:] for row in red]
    if any(x.denominator != 1 for row in inv for x in row):
        raise ValueError("matrix is not unimodular")
    return tuple(tuple(int(x) for x in row) for row in inv)


def hnf_rows(vectors: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    """Row Hermite normal form of the lattice spanned by integer ``vectors``.

    Pivots are positive, entries above a pivot lie in ``[0, pivot)``; zero
    rows are dropped, so the result is a basis in canonical form.
    """
    m = [list(v) for v in vectors]
    if not m:
        return ()
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        # Euclid down the column until a single nonzero entry remains at row r
        while True:
            nz = [i for i in range(r, len(m)) if m[i][c] != 0]
            if not nz:
                break
            i_min = min(nz, key=lambda i: abs(m[i][c]))
            m[r], m[i_min] = m[i_min], m[r]
            done = True
            for i in range(r + 1, len(m)):
                if m[i][c] != 0:
                    q = m[i][c] // m[r][c]
                    m[i] = [x - q * y for x, y in zip(m[i], m[r])]
                    if m[i][c] != 0:
                        done = False
            if done:
                break
        if r < len(m) and m[r][c] != 0:
            if m[r][c] < 0:
                m[r] = [-x for x in m[r]]
            for i in range(r):
                q = m[i][c] // m[r][c]
                if q:
                    m[i] = [x - q * y for x, y in zip(m[i], m[r])]
            r += 1
            if r == len(m):
                break
    return tuple(tuple(row) for row in m[:r] if any(row))


def integer_kernel(rows: Sequence[Sequence[int]], n: int) -> tuple[tuple[int, ...], ...]:
    """Basis (in row HNF) of the lattice ``{w in Z^n : rows @ w = 0}``.

    Unimodular column operations reduce ``rows`` to echelon form while the
    same operations are applied to an identity matrix; the columns of that
    transform beyond the pivots span the kernel lattice.
    """
    m = [list(r) for r in rows]
    u = [[int(i == j) for j in range(n)] for i in range(n)]  # columns tracked as u[:, j]

    def colop(j, k, q):  # col_j -= q * col_k
        for row in m:
            row[j] -= q * row[k]
        for row in u:
            row[j] -= q * row[k]

    def colswap(j, k):
        for row in m:
            row[j], row[k] = row[k], row[j]
        for row in u:
            row[j], row[k] = row[k], row[j]

    c = 0
    for row in m:
        if c == n:
            break
        while True:
            nz = [j for j in range(c, n) if row[j] != 0]
            if not nz:
                break
            j_min = min(nz, key=lambda j: abs(row[j]))
            colswap(c, j_min)
            for j in range(c + 1, n):
                if row[j] != 0:
                    colop(j, c, row[j] // row[c])
            if all(row[j] == 0 for j in range(c + 1, n)):
                break
        if row[c] != 0:
            c += 1
    kernel = [tuple(u[i][j] for i in range(n)) for j in range(c, n)]
    return hnf_rows(kernel)


def left_inverse(columns: Sequence[Sequence]) -> tuple[Matrix, tuple[int, ...]]:
    """Rational left inverse of an n x k matrix of full column rank.

    Picks k independent rows and inverts that square block; returns the
    k x n inverse (zero outside the chosen rows) and the chosen row indices.
    """
    n = len(columns)
    k = len(columns[0]) if n else 0
    red, pivots = _rref([[Fraction(x) for x in row] for row in transpose(columns)])
    if len(pivots) < k:
        raise ValueError("columns are linearly dependent")
    rows = tuple(pivots)
    block = [[Fraction(columns[r][j]) for j in range(k)] for r in rows]
    aug = [row + [Fraction(int(i == j)) for j in range(k)] for i, row in enumerate(block)]
    red_b, _ = _rref(aug)
    inv_block = [row[k:] for row in red_b]
    out = [[Fraction(0)] * n for _ in range(k)]
    for a in range(k):
        for b, r in enumerate(rows):
            out[a][r] = inv_block[a][b]
    return tuple(tuple(r) for r in out), rows
