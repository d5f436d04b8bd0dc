"""Polynomial sequences in a nilpotent group, in binomial Taylor form.

A sequence is stored as ``g(n) = prod_i g_i^{C(n, i)}`` with the product taken
over multi-indices in increasing (total degree, lexicographic) order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce as _fold
from itertools import product
from math import comb, factorial, floor, gcd
from typing import Callable, Iterable, Mapping, Sequence

from . import _linalg as la
from .filtration import Filtration, OrderingIndex, Subalgebra
from .lie import AlgebraError, GroupElement, LieAlgebra, coords_second_kind


class SequenceError(AlgebraError):
    pass


def binom(n: int, k: int) -> int:
    """Generalised binomial n(n-1)...(n-k+1)/k! for any integer n."""
    if k < 0:
        return 0
    if n >= 0:
        return comb(n, k)
    return (-1) ** k * comb(k - n - 1, k)


def multi_binom(n: Sequence[int], i: Sequence[int]) -> int:
    out = 1
    for a, b in zip(n, i):
        out *= binom(a, b)
        if out == 0:
            return 0
    return out


def _order_key(i: tuple):
    return (sum(i), i)


def frac_signed(x):
    """Signed fractional part in (-1/2, 1/2]."""
    r = x - floor(x)
    if r > Fraction(1, 2) if isinstance(r, Fraction) else r > 0.5:
        r -= 1
    return r


def dist_to_int(x):
    return abs(frac_signed(x))


class PolySequence:
    """g(n) = prod_i g_i^{C(n, i)} on Z^arity."""

    def __init__(self, algebra: LieAlgebra, coeffs: Mapping, arity: int = 1, filtration: Filtration | None = None):
        self.algebra = algebra
        self.arity = arity
        self.filtration = filtration
        store = {}
        for i, g in coeffs.items():
            i = (i,) if isinstance(i, int) else tuple(int(a) for a in i)
            if len(i) != arity or any(a < 0 for a in i):
                raise SequenceError(f"bad multi-index {i} for arity {arity}")
            if not isinstance(g, GroupElement):
                g = GroupElement(algebra, la.fvec(g))
            if g.algebra != algebra:
                raise SequenceError("coefficient on a different algebra")
            if not g.is_identity():
                store[i] = g
        self.coeffs = dict(sorted(store.items(), key=lambda kv: _order_key(kv[0])))
        if filtration is not None:
            ok, witness = is_polynomial(self.coeffs, filtration)
            if not ok:
                raise SequenceError(f"coefficient at index {witness} is outside the filtration group")

    @property
    def degree(self) -> int:
        return max((sum(i) for i in self.coeffs), default=0)

    def __call__(self, n) -> GroupElement:
        return self.eval(n)

    def eval(self, n) -> GroupElement:
        n = (n,) if isinstance(n, int) else tuple(n)
        if len(n) != self.arity:
            raise SequenceError("argument arity mismatch")
        if any(abs(a) > 2 ** 31 for a in n):
            raise SequenceError("argument exceeds 2^31")
        out = GroupElement.identity(self.algebra)
        for i, g in self.coeffs.items():
            c = multi_binom(n, i)
            if c:
                out = out * g ** c
        return out

    def coefficient(self, i) -> GroupElement:
        i = (i,) if isinstance(i, int) else tuple(i)
        return self.coeffs.get(i, GroupElement.identity(self.algebra))

    def to_float(self) -> "PolySequence":
        return PolySequence(self.algebra, {i: g.to_float() for i, g in self.coeffs.items()}, self.arity)

    def degree_bound(self) -> int:
        """Bound on the polynomial degree of coordinates of g(n)."""
        return self.degree * self.algebra.step

    def to_json(self) -> dict:
        return {
            "arity": self.arity,
            "coeffs": [{"index": list(i), "element": [str(c) for c in g.coords]} for i, g in self.coeffs.items()],
        }

    @classmethod
    def from_json(cls, algebra: LieAlgebra, data, filtration: Filtration | None = None) -> "PolySequence":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            arity = int(data["arity"])
            coeffs = {tuple(e["index"]): [Fraction(str(c)) for c in e["element"]] for e in data["coeffs"]}
        except (KeyError, TypeError, ValueError) as exc:
            raise SequenceError(f"malformed sequence JSON: {exc}") from exc
        return cls(algebra, coeffs, arity, filtration)


def indices_up_to(arity: int, bound: int) -> list:
    idx = [i for i in product(range(bound + 1), repeat=arity) if sum(i) <= bound]
    return sorted(idx, key=_order_key)


def from_function(algebra: LieAlgebra, func: Callable, arity: int, degree_bound: int, filtration=None, check: int = 3) -> PolySequence:
    """Recover the Taylor form of a polynomial sequence from its values.

    ``g_i = (prod_{j before i} g_j^{C(i, j)})^{-1} g(i)``, since C(i, j) vanishes
    unless j <= i componentwise.
    """
    coeffs: dict = {}
    for i in indices_up_to(arity, degree_bound):
        prefix = GroupElement.identity(algebra)
        for j, gj in coeffs.items():
            c = multi_binom(i, j)
            if c:
                prefix = prefix * gj ** c
        gi = prefix.inverse() * func(i if arity > 1 else i[0])
        if not gi.is_identity():
            coeffs[i] = gi
    seq = PolySequence(algebra, coeffs, arity)
    exact = all(not isinstance(c, float) for g in coeffs.values() for c in g.coords)
    for k in range(1, check + 1):
        n = tuple(degree_bound + k + a for a in range(arity))
        n = n if arity > 1 else n[0]
        a, b = seq.eval(n), func(n)
        diff = a.inverse() * b
        if not diff.is_identity(0.0 if exact else 1e-7 * (1 + max(abs(float(c)) for c in b.coords))):
            raise SequenceError("values are not those of a polynomial sequence of the given degree")
    if filtration is not None:
        seq.filtration = filtration
    return seq


def pointwise_product(g: PolySequence, h: PolySequence) -> PolySequence:
    bound = max(g.degree, h.degree) * g.algebra.step
    return from_function(g.algebra, lambda n: g.eval(n) * h.eval(n), g.arity, bound)


def shift(g: PolySequence, h) -> PolySequence:
    h = (h,) if isinstance(h, int) else tuple(h)
    def f(n):
        n = (n,) if isinstance(n, int) else n
        return g.eval(tuple(a + b for a, b in zip(n, h)))
    return from_function(g.algebra, f, g.arity, g.degree_bound())


def derivative(g: PolySequence, h) -> PolySequence:
    """n -> g(n + h) g(n)^{-1}."""
    h = (h,) if isinstance(h, int) else tuple(h)

    def f(n):
        n = (n,) if isinstance(n, int) else n
        return g.eval(tuple(a + b for a, b in zip(n, h))) * g.eval(n).inverse()

    return from_function(g.algebra, f, g.arity, g.degree_bound())


def _index_for(f: Filtration, i: tuple) -> OrderingIndex:
    if f.kind == "degree":
        return f.index(sum(i))
    if f.kind == "degree-rank":
        return f.index(sum(i), 0)
    return f.index(i)


def is_polynomial(coeffs: Mapping, f: Filtration) -> tuple:
    """(True, None) if every g_i lies in G_i, else (False, first failing index)."""
    items = sorted(((tuple(i) if not isinstance(i, int) else (i,)), g) for i, g in coeffs.items())
    items.sort(key=lambda kv: _order_key(kv[0]))
    for i, g in items:
        coords = g.coords if isinstance(g, GroupElement) else la.fvec(g)
        if not f[_index_for(f, i)].contains(coords):
            return False, i if len(i) > 1 else i[0]
    return True, None


# Horizontal Taylor coefficients

@dataclass(frozen=True)
class HorizontalElement:
    degree: int
    basis: tuple  # representatives in G_(i,1) of a basis of G_(i,1)/G_(i,2)
    coords: tuple

    def __add__(self, other: "HorizontalElement") -> "HorizontalElement":
        if self.basis != other.basis:
            raise SequenceError("different tori")
        return HorizontalElement(self.degree, self.basis, tuple(a + b for a, b in zip(self.coords, other.coords)))


def horizontal_torus(f: Filtration, i: int) -> tuple:
    """(complement basis, G_(i,2)) for the i-th horizontal torus."""
    if f.kind != "degree-rank":
        raise SequenceError("horizontal tori need a degree-rank filtration")
    if i < 1 or i > f.degree_bound:
        raise SequenceError(f"index {i} beyond filtration degree {f.degree_bound}")
    g1 = f[f.index(i, 1)]
    g2 = f[f.index(i, 2)]
    comp = []
    cur = list(g2.basis)
    r = len(cur)
    for v in g1.basis:
        if la.rank(cur + [v]) > r:
            cur.append(v)
            comp.append(v)
            r += 1
    return tuple(comp), g2


def project_horizontal(f: Filtration, i: int, v: Sequence) -> HorizontalElement:
    comp, g2 = horizontal_torus(f, i)
    if not f[f.index(i, 1)].contains(v):
        raise SequenceError(f"element is not in G_({i},1)")
    coords = la.coordinates(la.fvec(v), list(comp) + list(g2.basis))
    return HorizontalElement(i, comp, coords[: len(comp)])


def taylor_coefficient(g: PolySequence, i, f: Filtration | None = None) -> HorizontalElement:
    """Taylor_i(g) = g_i mod G_(i,2)."""
    f = f or g.filtration
    if f is None:
        raise SequenceError("a degree-rank filtration is required")
    i_t = (i,) if isinstance(i, int) else tuple(i)
    return project_horizontal(f, sum(i_t), g.coefficient(i_t).coords)


# First-kind and graded forms (single variable)

def first_kind_coefficients(g: PolySequence, bound: int | None = None) -> dict:
    """v_k with log g(n) = sum_k C(n, k) v_k, via forward differences of log g."""
    if g.arity != 1:
        raise SequenceError("first-kind form implemented for one variable")
    bound = g.degree_bound() if bound is None else bound
    vals = [g.eval(n).coords for n in range(bound + 1)]
    out = {}
    for k in range(bound + 1):
        acc = la.zero(g.algebra.dim)
        for j in range(k + 1):
            c = (-1) ** (k - j) * comb(k, j)
            acc = tuple(a + c * b for a, b in zip(acc, vals[j]))
        if not all(a == 0 for a in acc):
            out[k] = acc
    return out


def from_first_kind(algebra: LieAlgebra, coeffs: Mapping, filtration=None) -> PolySequence:
    """Sequence n -> exp(sum_k C(n, k) v_k)."""
    top = max(coeffs, default=0)

    def f(n):
        v = la.zero(algebra.dim)
        for k, vk in coeffs.items():
            c = binom(n, k)
            v = tuple(a + c * b for a, b in zip(v, vk))
        return GroupElement(algebra, v)

    return from_function(algebra, f, 1, top * algebra.step, filtration)


def _monomial_coefficients(values: Sequence[Sequence], dim: int) -> list:
    """Coefficients c_i of sum_i c_i n^i / i! through the points n = 0..B."""
    b = len(values) - 1
    mat = [[Fraction(n ** i, factorial(i)) for i in range(b + 1)] for n in range(b + 1)]
    inv = la.inverse(mat)
    return [tuple(sum((inv[i][n] * values[n][k] for n in range(b + 1)), Fraction(0)) for k in range(dim)) for i in range(b + 1)]


def graded_taylor(g: PolySequence, f: Filtration) -> dict:
    """alpha[(i, j)] with g(n) = prod_i prod_j exp(X_j)^{alpha_ij n^i / i!}.

    The basis of the algebra must be adapted to the degree filtration ``f``;
    at step i the coefficient of n^i/i! in log of the remaining sequence lies in
    log G_i and is stripped off.
    """
    if g.arity != 1:
        raise SequenceError("graded form implemented for one variable")
    if f.kind != "degree":
        raise SequenceError("graded form needs a degree filtration")
    alg = g.algebra
    d = alg.dim
    _check_adapted(f)
    bound = g.degree_bound()
    pts = list(range(bound + 1))
    alpha: dict = {}
    factors: list = []

    def stripped(n):
        h = GroupElement.identity(alg)
        for i, j, a in factors:
            if a:
                h = h * GroupElement(alg, la.scale(Fraction(a) * Fraction(n ** i, factorial(i)), la.unit(d, j)))
        return h.inverse() * g.eval(n)

    for i in range(bound + 1):
        mono = _monomial_coefficients([stripped(n).coords for n in pts], d)
        for lower in range(i):
            if not la.is_zero(mono[lower]):
                raise SequenceError("stripping left a lower-degree term: basis not adapted")
        ci = mono[i]
        gi = f[f.index(i)] if i > 0 else Subalgebra.full(alg)
        if not gi.contains(ci):
            raise SequenceError(f"degree-{i} coefficient is outside G_{i}: basis not adapted")
        for j in range(d):
            if ci[j] != 0:
                alpha[(i, j)] = ci[j]
                factors.append((i, j, ci[j]))
    rest = stripped(bound + 1)
    if not rest.is_identity():
        raise SequenceError("graded representation failed to terminate")
    return alpha


def eval_graded(alg: LieAlgebra, alpha: Mapping, n: int) -> GroupElement:
    out = GroupElement.identity(alg)
    for (i, j), a in sorted(alpha.items()):
        out = out * GroupElement(alg, la.scale(Fraction(a) * Fraction(n ** i, factorial(i)), la.unit(alg.dim, j)))
    return out


def _check_adapted(f: Filtration) -> None:
    d = f.algebra.dim
    for idx, grp in f.groups.items():
        tail = Subalgebra.coordinate(f.algebra, range(d - grp.dim, d))
        if grp != tail:
            raise SequenceError(f"basis not adapted to the filtration at {idx!r}")


# Real polynomials and smoothness

@dataclass(frozen=True)
class RealPolynomial:
    """p(n) = sum_l alpha_l C(n, l)."""

    coeffs: tuple  # ((multi-index), alpha) pairs
    arity: int = 1

    @classmethod
    def binomial(cls, coeffs: Mapping, arity: int = 1) -> "RealPolynomial":
        items = tuple(sorted((((k,) if isinstance(k, int) else tuple(k)), v) for k, v in coeffs.items()))
        return cls(items, arity)

    @classmethod
    def monomial(cls, coeffs: Sequence) -> "RealPolynomial":
        """Single variable p(n) = sum_i c_i n^i rewritten in the binomial basis."""
        b = len(coeffs) - 1
        vals = [sum((la.to_fraction(c) * n ** i for i, c in enumerate(coeffs)), Fraction(0)) for n in range(b + 1)]
        out = {}
        for k in range(b + 1):
            out[k] = sum(((-1) ** (k - j) * comb(k, j) * vals[j] for j in range(k + 1)), Fraction(0))
        return cls.binomial(out)

    def __call__(self, n):
        n = (n,) if isinstance(n, int) else tuple(n)
        return sum(a * multi_binom(n, l) for l, a in self.coeffs)


def smoothness_norm(p: RealPolynomial, n: int) -> float:
    """max over l != 0 of N^{|l|} dist(alpha_l, Z)."""
    best = 0
    for l, a in p.coeffs:
        if sum(l) == 0:
            continue
        best = max(best, n ** sum(l) * dist_to_int(la.to_fraction(a) if not isinstance(a, float) else a))
    return float(best)


# Linear algebra core of the factorisation

@dataclass
class Decomposition:
    w_small: tuple
    w_rat: tuple
    w_perp: tuple
    dual: tuple  # dual vectors w_j with v_k . w_j = delta_jk
    used: tuple  # indices of the independent subset
    factor: Fraction  # ||w_small||_inf <= delta * factor
    denominator: int  # w_rat has entries in (1/denominator) Z


def linear_decompose(vectors: Sequence[Sequence[int]], w: Sequence, delta) -> Decomposition:
    w = la.fvec(w)
    d = len(w)
    delta = la.to_fraction(delta)
    vs = [tuple(int(a) for a in v) for v in vectors]
    worst = None
    for k, v in enumerate(vs):
        e = dist_to_int(la.dot(la.fvec(v), w))
        if e > delta and (worst is None or e > worst[1]):
            worst = (k, e)
    if worst is not None:
        raise SequenceError(f"precondition violated: dist(v_{worst[0]} . w, Z) = {float(worst[1])} > delta")
    used, basis = [], []
    for k, v in enumerate(vs):
        if la.rank(basis + [la.fvec(v)]) > len(basis):
            basis.append(la.fvec(v))
            used.append(k)
    if not basis:
        z = la.zero(d)
        return Decomposition(z, z, w, (), (), Fraction(0), 1)
    gram = [[la.dot(a, b) for b in basis] for a in basis]
    ginv = la.inverse(gram)
    # w_j = sum_m ginv[m][j] v_m lies in the row space and is dual to the v's
    dual = []
    for j in range(len(basis)):
        wj = la.zero(d)
        for m, vm in enumerate(basis):
            wj = la.add(wj, la.scale(ginv[m][j], vm))
        dual.append(wj)
    small, rat = la.zero(d), la.zero(d)
    for vj, wj in zip(basis, dual):
        x = la.dot(vj, w)
        fr = frac_signed(x)
        small = la.add(small, la.scale(fr, wj))
        rat = la.add(rat, la.scale(x - fr, wj))
    perp = la.sub(la.sub(w, small), rat)
    factor = sum((max(abs(a) for a in wj) for wj in dual), Fraction(0))
    den = 1
    for wj in dual:
        for a in wj:
            den = den * a.denominator // gcd(den, a.denominator)
    return Decomposition(small, rat, perp, tuple(dual), tuple(used), factor, den)


@dataclass(frozen=True)
class HorizontalCharacter:
    """psi(g) = k . psi_coords(g) on G_(degree,1), an integer vector k."""

    degree: int
    k: tuple


@dataclass
class Factorization:
    epsilon: PolySequence
    g_prime: PolySequence
    gamma: PolySequence
    denominator: int
    smoothness_constant: float
    decompositions: dict = field(default_factory=dict)


def factor_by_characters(g: PolySequence, chars: Sequence[HorizontalCharacter], n_scale: int, height_bound, filtration: Filtration | None = None) -> Factorization:
    """Split g = eps g' gamma with eps smooth, gamma rational and the given
    characters vanishing on the Taylor coefficients of g'."""
    f = filtration or g.filtration
    alg = g.algebra
    if f is None or f.kind != "degree-rank":
        raise SequenceError("factorisation needs a degree-rank filtration")
    if g.arity != 1:
        raise SequenceError("factorisation implemented for one variable")
    if not g.eval(0).is_identity():
        raise SequenceError("precondition violated: g(0) is not the identity")
    _check_adapted(f)
    H = la.to_fraction(height_bound)
    for ch in chars:
        k = tuple(int(a) for a in ch.k)
        if len(k) != alg.dim:
            raise SequenceError("character length does not match the algebra")
        if any(la.dot(la.fvec(k), v) != 0 for v in f[f.index(ch.degree, 2)].basis):
            raise SequenceError(f"precondition violated: character of degree {ch.degree} does not annihilate G_({ch.degree},2)")
        g1 = f[f.index(ch.degree, 1)]
        if any(k[j] != 0 for j in range(alg.dim - g1.dim)):
            raise SequenceError(f"precondition violated: character of degree {ch.degree} is not supported on G_({ch.degree},1)")
        if max(abs(a) for a in k) > H:
            raise SequenceError("precondition violated: character height exceeds the bound")
    v = first_kind_coefficients(g)
    small, rat, decs = {}, {}, {}
    for i in sorted({c.degree for c in chars}):
        vs = [c.k for c in chars if c.degree == i]
        w = v.get(i, la.zero(alg.dim))
        dec = linear_decompose(vs, w, H / Fraction(n_scale) ** i)
        decs[i] = dec
        small[i], rat[i] = dec.w_small, dec.w_rat
    eps = from_first_kind(alg, small)
    gam = from_first_kind(alg, rat)
    gp = from_function(alg, lambda n: eps.eval(n).inverse() * g.eval(n) * gam.eval(n).inverse(), 1, max(g.degree_bound(), 1))
    for n in range(0, min(n_scale, 64) + 1):
        lhs = eps.eval(n) * gp.eval(n) * gam.eval(n)
        if not (lhs.inverse() * g.eval(n)).is_identity():
            raise SequenceError("internal: factorisation identity fails")
    vp = first_kind_coefficients(gp)
    for ch in chars:
        if la.dot(la.fvec(ch.k), vp.get(ch.degree, la.zero(alg.dim))) != 0:
            raise SequenceError("internal: character does not vanish on g'")
    den = 1
    for n in range(0, min(n_scale, 64) + 1):
        for c in coords_second_kind(gam.eval(n)):
            den = den * c.denominator // gcd(den, c.denominator)
    from .nilmanifold import metric_upper_raw

    stride = max(1, n_scale // 4096)
    worst = 0.0
    prev = eps.eval(0)
    for n in range(1, n_scale + 1, stride):
        a, b = eps.eval(n), eps.eval(n - 1) if stride > 1 else prev
        worst = max(worst, metric_upper_raw(a, b))
        prev = a
    return Factorization(eps, gp, gam, den, worst * n_scale, decs)
