"""Independent brute-force oracles.  None of these import the code under test
except for the bracket of a LieAlgebra (the structure constants themselves)."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

# Free associative algebra: dict word(tuple) -> Fraction, truncated at a length.


def _mul(a: dict, b: dict, cap: int) -> dict:
    out: dict = {}
    for u, x in a.items():
        for v, y in b.items():
            if len(u) + len(v) <= cap:
                w = u + v
                out[w] = out.get(w, 0) + x * y
    return {w: c for w, c in out.items() if c != 0}


def _exp_letter(letter: int, cap: int) -> dict:
    return {(letter,) * k: Fraction(1, math.factorial(k)) for k in range(cap + 1)}


def _log_one_plus(a: dict, cap: int) -> dict:
    """log(1 + a) for a with no constant term."""
    out: dict = {}
    power = {(): Fraction(1)}
    for m in range(1, cap + 1):
        power = _mul(power, a, cap)
        for w, c in power.items():
            out[w] = out.get(w, 0) + Fraction((-1) ** (m + 1), m) * c
    return {w: c for w, c in out.items() if c != 0}


def bch_series(cap: int) -> dict:
    """log(exp(x) exp(y)) as an associative series in letters 0 (x), 1 (y)."""
    p = _mul(_exp_letter(0, cap), _exp_letter(1, cap), cap)
    p.pop((), None)
    return _log_one_plus(p, cap)


def bch_oracle(bracket, x, y, cap: int):
    """Evaluate the series through the Dynkin-Specht-Wever projection: a
    homogeneous Lie element P of degree n equals (1/n) sum_w c_w [w] with
    left-normed brackets [w] = [...[[w1, w2], w3], ..., wn]."""
    z = [Fraction(0)] * len(x)
    letters = {0: tuple(Fraction(a) for a in x), 1: tuple(Fraction(a) for a in y)}
    for w, c in bch_series(cap).items():
        v = letters[w[0]]
        for a in w[1:]:
            v = bracket(v, letters[a])
        coef = c / len(w)
        z = [zi + coef * vi for zi, vi in zip(z, v)]
    return tuple(z)


# Free Lie algebra dimensions


def witt_dimension(k: int, n: int) -> int:
    """Dimension of the degree-n part of the free Lie algebra on k letters."""

    def mobius(m):
        res, p, q = 1, 2, m
        while p * p <= q:
            if q % p == 0:
                q //= p
                if q % p == 0:
                    return 0
                res = -res
            p += 1
        return -res if q > 1 else res

    return sum(mobius(d) * k ** (n // d) for d in range(1, n + 1) if n % d == 0) // n


def _rank(rows):
    rows = [list(r) for r in rows]
    r = 0
    ncols = len(rows[0]) if rows else 0
    for c in range(ncols):
        p = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = Fraction(rows[i][c], 1) / rows[r][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
    return r


def free_lie_span_dimension(k: int, n: int) -> int:
    """Rank of all left-normed commutators of length n in the free associative
    algebra on k letters (brute force, independent of any basis theory)."""
    words = list(itertools.product(range(k), repeat=n))
    pos = {w: i for i, w in enumerate(words)}
    rows = []
    for w in words:
        poly = {(w[0],): 1}
        for a in w[1:]:
            new: dict = {}
            for u, c in poly.items():
                new[u + (a,)] = new.get(u + (a,), 0) + c
                new[(a,) + u] = new.get((a,) + u, 0) - c
            poly = new
        row = [0] * len(words)
        for u, c in poly.items():
            row[pos[u]] += c
        rows.append(row)
    return _rank(rows)


# Gowers, box norm and energy by definition


def gowers_power_brute(f, s: int) -> complex:
    """E_{x, h in Z/N} prod_omega C^{|omega|} f(x + omega.h), pure Python."""
    n = len(f)
    total = 0j
    for x in range(n):
        for h in itertools.product(range(n), repeat=s):
            p = 1 + 0j
            for omega in itertools.product((0, 1), repeat=s):
                v = f[(x + sum(o * hh for o, hh in zip(omega, h))) % n]
                p *= v.conjugate() if sum(omega) % 2 else v
            total += p
    return total / n ** (s + 1)


def box_fourth_brute(phi):
    r, c = len(phi), len(phi[0])
    total = 0
    for n1 in range(r):
        for n2 in range(r):
            for m1 in range(c):
                for m2 in range(c):
                    total += phi[n1][m1] * phi[n1][m2].conjugate() * phi[n2][m1].conjugate() * phi[n2][m2]
    return total / (r * r * c * c)


def energy_brute(a, b=None, c=None, d=None) -> int:
    b = a if b is None else b
    c = a if c is None else c
    d = a if d is None else d
    a, b, c, d = (sorted(set(s)) for s in (a, b, c, d))
    dset = set(d)
    return sum(1 for x1 in a for x2 in b for x3 in c if x1 + x2 - x3 in dset)


def bohr_brute(n: int, freqs, rho) -> list:
    rho = Fraction(str(rho)) if isinstance(rho, float) else Fraction(rho)
    out = []
    for x in range(n):
        ok = True
        for s in freqs:
            r = Fraction(s * x % n, n)
            if min(r, 1 - r) > rho:
                ok = False
        if ok:
            out.append(x)
    return out


def freiman_brute(f: dict, k: int):
    elems = sorted(f)
    for t1 in itertools.product(elems, repeat=k):
        for t2 in itertools.product(elems, repeat=k):
            if sum(t1) == sum(t2) and sum(f[a] for a in t1) != sum(f[a] for a in t2):
                return False
    return True
