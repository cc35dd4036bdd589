"""Exact linear algebra over the rationals.

Vectors are tuples of ``Fraction``; matrices are tuples of row tuples.
Everything here is small-dimensional plumbing for the geometry code.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Vector = tuple
Matrix = tuple


def frac(x) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to ``Fraction``."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        raise TypeError("floats are not accepted; pass a string or Fraction")
    return Fraction(x)


def vec(xs: Iterable) -> Vector:
    return tuple(frac(x) for x in xs)


def mat(rows: Iterable[Iterable]) -> Matrix:
    return tuple(vec(r) for r in rows)


def zeros(m: int, n: int) -> Matrix:
    return tuple((Fraction(0),) * n for _ in range(m))


def identity(n: int) -> Matrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def dot(a: Sequence, b: Sequence) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def matvec(A: Matrix, x: Sequence) -> Vector:
    return tuple(dot(row, x) for row in A)


def transpose(A: Matrix, ncols: int | None = None) -> Matrix:
    if not A:
        return tuple(() for _ in range(ncols or 0))
    return tuple(zip(*A))


def matmul(A: Matrix, B: Matrix, ncols: int | None = None) -> Matrix:
    """Product ``A @ B``; ``ncols`` (width of B) is needed when B has no rows."""
    if not A:
        return ()
    if not B:
        return zeros(len(A), ncols or 0)
    cols = list(zip(*B))
    return tuple(tuple(dot(row, c) for c in cols) for row in A)


def add(A: Matrix, B: Matrix) -> Matrix:
    return tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(A, B))


def sub(A: Matrix, B: Matrix) -> Matrix:
    return tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(A, B))


def scale(c, A: Matrix) -> Matrix:
    c = frac(c)
    return tuple(tuple(c * a for a in r) for r in A)


def hstack(A: Matrix, B: Matrix, rows: int) -> Matrix:
    if rows == 0:
        return ()
    A = A or tuple(() for _ in range(rows))
    B = B or tuple(() for _ in range(rows))
    return tuple(tuple(a) + tuple(b) for a, b in zip(A, B))


def vstack(A: Matrix, B: Matrix) -> Matrix:
    return tuple(A) + tuple(B)


def columns(A: Matrix, ncols: int) -> list[Vector]:
    if not A:
        return [() for _ in range(ncols)]
    return [tuple(r[j] for r in A) for j in range(ncols)]


def from_columns(cols: Sequence[Sequence], nrows: int) -> Matrix:
    if not cols:
        return tuple(() for _ in range(nrows))
    return tuple(tuple(frac(c[i]) for c in cols) for i in range(nrows))


def rref(rows: Sequence[Sequence], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form. Returns (nonzero rows, pivot columns)."""
    M = [list(map(frac, r)) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        pv = M[r][c]
        M[r] = [x / pv for x in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return M[:r], pivots


def rank(rows: Sequence[Sequence], ncols: int | None = None) -> int:
    if not rows:
        return 0
    ncols = len(rows[0]) if ncols is None else ncols
    return len(rref(rows, ncols)[1])


def nullspace(A: Matrix, ncols: int) -> list[Vector]:
    """Basis of ``{x : A x = 0}``."""
    R, piv = rref(A, ncols)
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        x = [Fraction(0)] * ncols
        x[f] = Fraction(1)
        for row, p in zip(R, piv):
            x[p] = -row[f]
        basis.append(tuple(x))
    return basis


def solve(A: Matrix, b: Sequence, ncols: int) -> Vector | None:
    """One solution of ``A x = b`` or None when inconsistent."""
    aug = [tuple(r) + (frac(bi),) for r, bi in zip(A, b)]
    R, piv = rref(aug, ncols + 1)
    if ncols in piv:
        return None
    x = [Fraction(0)] * ncols
    for row, p in zip(R, piv):
        x[p] = row[ncols]
    return tuple(x)


def inverse(A: Matrix) -> Matrix:
    n = len(A)
    aug = [tuple(r) + e for r, e in zip(A, identity(n))]
    R, piv = rref(aug, 2 * n)
    if piv[:n] != list(range(n)) or len(R) < n:
        raise ValueError("matrix is singular")
    return tuple(tuple(r[n:]) for r in R)


def independent_subset(vectors: Sequence[Sequence], n: int) -> list[int]:
    """Indices of a maximal linearly independent subset, greedy in order."""
    chosen: list[int] = []
    basis: list[Sequence] = []
    for k, v in enumerate(vectors):
        if rank(basis + [v], n) > len(basis):
            basis.append(v)
            chosen.append(k)
            if len(basis) == n:
                break
    return chosen


def complete_basis(vectors: Sequence[Sequence], n: int) -> list[Vector]:
    """Extend independent ``vectors`` to a basis of Q^n with unit vectors."""
    out = [vec(v) for v in vectors]
    if rank(out, n) < len(out):
        raise ValueError("vectors are linearly dependent")
    for i in range(n):
        if len(out) == n:
            break
        e = tuple(Fraction(int(i == j)) for j in range(n))
        if rank(out + [e], n) > len(out):
            out.append(e)
    return out


def is_zero(A: Matrix) -> bool:
    return all(x == 0 for r in A for x in r)


def lcm_denominator(xs: Iterable[Fraction]) -> int:
    from math import lcm

    d = 1
    for x in xs:
        d = lcm(d, x.denominator)
    return d
