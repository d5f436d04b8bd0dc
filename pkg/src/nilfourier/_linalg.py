"""Exact linear algebra over the rationals.

Vectors are tuples of ``Fraction``; floats are read as the shortest decimal
that round-trips to them.  Row-reduced echelon form is the canonical representation of a
subspace, so two spans are equal iff their RREF row lists are equal.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Vector = tuple


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        # a float stands for the shortest decimal that round-trips to it
        return Fraction(repr(x))
    return Fraction(x)


def fvec(v: Iterable) -> tuple:
    return tuple(to_fraction(x) for x in v)


def zero(d: int) -> tuple:
    return (Fraction(0),) * d


def unit(d: int, i: int) -> tuple:
    return tuple(Fraction(1 if j == i else 0) for j in range(d))


def add(u, v):
    return tuple(a + b for a, b in zip(u, v))


def sub(u, v):
    return tuple(a - b for a, b in zip(u, v))


def scale(c, v):
    return tuple(c * a for a in v)


def dot(u, v):
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def is_zero(v) -> bool:
    return all(a == 0 for a in v)


def rref(rows: Iterable[Sequence], d: int | None = None) -> tuple[tuple, tuple]:
    """Return (rows, pivots) of the reduced row echelon form, zero rows dropped."""
    mat = [list(fvec(r)) for r in rows]
    if not mat:
        return (), ()
    ncols = len(mat[0]) if d is None else d
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if p is None:
            continue
        mat[r], mat[p] = mat[p], mat[r]
        lead = mat[r][c]
        if lead != 1:
            mat[r] = [x / lead for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    return tuple(tuple(row) for row in mat[:r]), tuple(pivots)


def reduce(v: Sequence, rows: Sequence, pivots: Sequence) -> tuple:
    """Reduce ``v`` modulo the span of an RREF basis."""
    out = list(fvec(v))
    for row, p in zip(rows, pivots):
        c = out[p]
        if c != 0:
            out = [a - c * b for a, b in zip(out, row)]
    return tuple(out)


def in_span(v, rows, pivots) -> bool:
    return is_zero(reduce(v, rows, pivots))


def rank(rows: Iterable[Sequence]) -> int:
    return len(rref(rows)[0])


def solve(a: Sequence[Sequence], b: Sequence) -> tuple:
    """Solve the square system ``a x = b`` exactly; raise if singular."""
    n = len(a)
    aug = [list(fvec(row)) + [to_fraction(bi)] for row, bi in zip(a, b)]
    rows, pivots = rref(aug, d=n + 1)
    if len(rows) != n or any(p != i for i, p in enumerate(pivots)):
        raise ValueError("singular system")
    return tuple(row[n] for row in rows)


def inverse(a: Sequence[Sequence]) -> tuple:
    n = len(a)
    aug = [list(fvec(row)) + list(unit(n, i)) for i, row in enumerate(a)]
    rows, pivots = rref(aug, d=2 * n)
    if len(rows) != n or tuple(pivots[:n]) != tuple(range(n)):
        raise ValueError("singular matrix")
    return tuple(tuple(row[n:]) for row in rows)


def matmul(a, b):
    bt = list(zip(*b))
    return tuple(tuple(dot(r, c) for c in bt) for r in a)


def matvec(a, v):
    return tuple(dot(r, v) for r in a)


def transpose(a):
    return tuple(zip(*a))


def coordinates(v: Sequence, basis: Sequence[Sequence]) -> tuple:
    """Coordinates of ``v`` in a linearly independent ``basis``; raise if not in span."""
    k = len(basis)
    if k == 0:
        if not is_zero(fvec(v)):
            raise ValueError("vector not in span")
        return ()
    d = len(v)
    # columns are basis vectors; augmented with v
    aug = [[basis[j][i] for j in range(k)] + [v[i]] for i in range(d)]
    rows, pivots = rref(aug, d=k + 1)
    if k in pivots:
        raise ValueError("vector not in span")
    if len(pivots) != k:
        raise ValueError("basis is not independent")
    return tuple(row[k] for row in rows)
