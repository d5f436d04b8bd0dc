"""Universal nilpotent algebras on graded generators, their relation quotient,
the abelian ideal of linear commutators, and the semidirect group built from
the scaling action on linear generators.

Free nilpotent algebras are realised inside the free associative algebra with
the Lyndon basis: the standard bracketing ``P_w`` of a Lyndon word ``w`` expands
to ``w`` plus lexicographically larger words, which makes rewriting into the
basis a triangular solve.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

from . import _linalg as la
from .filtration import Filtration, OrderingIndex, Quotient, Subalgebra, quotient, validate_filtration
from .lie import CapError, GroupElement, LieAlgebra, AlgebraError, bracket, commutator

MAX_S = 5
MAX_GENERATORS = 8

STAR, LIN, PET = "star", "lin", "pet"


class ConstructionError(AlgebraError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    """Degree-rank cap (s, r_star) and generator counts per degree 1..s."""

    s: int
    r_star: int
    d_star: tuple
    d_lin: tuple = ()
    d_pet: tuple = ()

    def __post_init__(self):
        s = self.s
        if s < 1:
            raise ConstructionError("s must be at least 1")
        if not 1 <= self.r_star <= s:
            raise ConstructionError("need 1 <= r_star <= s")
        pad = lambda v: tuple(int(a) for a in v) + (0,) * (s - len(v))
        for name in ("d_star", "d_lin", "d_pet"):
            v = getattr(self, name)
            if len(v) > s:
                raise ConstructionError(f"{name} has more than s entries")
            object.__setattr__(self, name, pad(v))
            if any(a < 0 for a in getattr(self, name)):
                raise ConstructionError("generator counts must be non-negative")
        if s > MAX_S:
            raise CapError(f"s = {s} exceeds cap {MAX_S}")
        if self.total > MAX_GENERATORS:
            raise CapError(f"{self.total} generators exceed cap {MAX_GENERATORS}")
        if self.total == 0:
            raise ConstructionError("at least one generator is required")

    @property
    def total(self) -> int:
        return sum(self.d_star) + sum(self.d_lin) + sum(self.d_pet)

    def letters(self) -> list:
        """Generators (degree i, index j, kind) in the order (degree, index)."""
        out = []
        for i in range(1, self.s + 1):
            a, b, c = self.d_star[i - 1], self.d_lin[i - 1], self.d_pet[i - 1]
            for j in range(1, a + b + c + 1):
                kind = STAR if j <= a else LIN if j <= a + b else PET
                out.append((i, j, kind))
        return out

    @classmethod
    def from_json(cls, data) -> "GeneratorSpec":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            return cls(
                int(data["s"]),
                int(data["r_star"]),
                tuple(data["d_star"]),
                tuple(data.get("d_lin", ())),
                tuple(data.get("d_pet", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConstructionError):
                raise
            raise ConstructionError(f"malformed generator spec: {exc}") from exc

    def to_json(self) -> dict:
        return {"s": self.s, "r_star": self.r_star, "d_star": list(self.d_star), "d_lin": list(self.d_lin), "d_pet": list(self.d_pet)}


# Lyndon words and the free associative algebra

def lyndon_words(alphabet: int, max_len: int) -> list:
    """All Lyndon words over ``range(alphabet)`` of length <= max_len (Duval)."""
    out = []
    if alphabet == 0:
        return out
    w = [-1]
    while w:
        w[-1] += 1
        out.append(tuple(w))
        m = len(w)
        while len(w) < max_len:
            w.append(w[len(w) - m])
        while w and w[-1] == alphabet - 1:
            w.pop()
    return out


def standard_factorization(w: tuple) -> tuple:
    """w = u v with v the longest proper Lyndon suffix."""
    for k in range(1, len(w)):
        v = w[k:]
        if _is_lyndon(v):
            return w[:k], v
    raise ValueError("word of length 1 has no factorization")


def _is_lyndon(w: tuple) -> bool:
    return all(w < w[k:] + w[:k] for k in range(1, len(w)))


def _assoc_bracket(p: dict, q: dict) -> dict:
    out: dict = {}
    for a, ca in p.items():
        for b, cb in q.items():
            c = ca * cb
            out[a + b] = out.get(a + b, 0) + c
            out[b + a] = out.get(b + a, 0) - c
    return {w: c for w, c in out.items() if c != 0}


class _LyndonBasis:
    def __init__(self, words: list):
        self.words = words
        self.index = {w: n for n, w in enumerate(words)}
        self._poly: dict = {}

    def poly(self, w: tuple) -> dict:
        if w not in self._poly:
            if len(w) == 1:
                self._poly[w] = {w: Fraction(1)}
            else:
                u, v = standard_factorization(w)
                self._poly[w] = _assoc_bracket(self.poly(u), self.poly(v))
        return self._poly[w]

    def express(self, q: dict) -> dict:
        """Coefficients of a Lie polynomial in the Lyndon basis."""
        q = dict(q)
        out = {}
        while q:
            u = min(q)
            c = q[u]
            if u not in self.index:
                raise ConstructionError(f"word {u} is not a basis Lyndon word")
            out[u] = c
            for w, cw in self.poly(u).items():
                nv = q.get(w, 0) - c * cw
                if nv == 0:
                    q.pop(w, None)
                else:
                    q[w] = nv
        return out


# Universal algebra

@dataclass
class UniversalAlgebra:
    spec: GeneratorSpec
    algebra: LieAlgebra
    words: tuple  # Lyndon word of each basis element (letters index spec.letters())
    letters: tuple
    generators: dict  # (i, j) -> basis index
    filtration: Filtration

    @property
    def lattice_gens(self) -> list:
        return [GroupElement(self.algebra, la.unit(self.algebra.dim, k)) for k in self.generators.values()]

    def weight(self, k: int) -> int:
        return sum(self.letters[a][0] for a in self.words[k])

    def generator_names(self) -> list:
        return ["[" + ",".join(f"e{self.letters[a][0]}.{self.letters[a][1]}" for a in w) + "]" if len(w) > 1 else f"e{self.letters[w[0]][0]}.{self.letters[w[0]][1]}" for w in self.words]


def build_universal(spec: GeneratorSpec) -> UniversalAlgebra:
    letters = spec.letters()
    deg = [l[0] for l in letters]
    s, r_star = spec.s, spec.r_star

    def kept(w):
        weight = sum(deg[a] for a in w)
        return weight < s or (weight == s and len(w) <= r_star)

    words = [w for w in lyndon_words(len(letters), s) if kept(w)]
    words.sort(key=lambda w: (sum(deg[a] for a in w), len(w), w))
    if len(words) > 64:
        raise CapError(f"universal algebra has dimension {len(words)} > 64")
    basis = _LyndonBasis(words)
    pos = basis.index
    structure: dict = {}
    for a, wa in enumerate(words):
        for b in range(a + 1, len(words)):
            wb = words[b]
            merged = wa + wb
            if not kept(merged):
                continue
            q = _assoc_bracket(basis.poly(wa), basis.poly(wb))
            if not q:
                continue
            coeffs = basis.express(q)
            vec = {pos[w]: c for w, c in coeffs.items()}
            structure[(a, b)] = vec
            structure[(b, a)] = {k: -c for k, c in vec.items()}
    alg = LieAlgebra(len(words), structure, max(1, min(s, 6)))
    gens = {(letters[w[0]][0], letters[w[0]][1]): n for n, w in enumerate(words) if len(w) == 1}
    groups = {OrderingIndex.degree_rank(0, 0): Subalgebra.full(alg)}
    weights = [sum(deg[a] for a in w) for w in words]
    for d in range(1, s + 1):
        for r in range(0, d + 1):
            idx = [n for n, w in enumerate(words) if weights[n] > d or (weights[n] == d and len(w) >= r)]
            groups[OrderingIndex.degree_rank(d, r)] = Subalgebra.coordinate(alg, idx)
    filt = Filtration(alg, "degree-rank", groups)
    return UniversalAlgebra(spec, alg, tuple(words), tuple(letters), gens, filt)


# Quotient by the relation ideal and the linear ideal

@dataclass
class Construction:
    universal: UniversalAlgebra
    quotient: Quotient
    relation_ideal: Subalgebra
    lin: Subalgebra  # inside the quotient algebra
    quot_words: tuple
    linear_positions: tuple  # (i, j) of linear generators, in letter order

    @property
    def algebra(self) -> LieAlgebra:
        return self.quotient.algebra

    @property
    def filtration(self) -> Filtration:
        return self.quotient.filtration

    @property
    def spec(self) -> GeneratorSpec:
        return self.universal.spec

    def scale_factors(self, t: Sequence) -> tuple:
        t = _as_vector(self, t)
        letters = self.universal.letters
        lin_pos = {letters_idx: n for n, letters_idx in enumerate(self._linear_letter_indices())}
        out = []
        for w in self.quot_words:
            f = 1
            for a in w:
                if a in lin_pos:
                    f = f * t[lin_pos[a]]
            out.append(f)
        return tuple(out)

    def _linear_letter_indices(self) -> list:
        return [n for n, l in enumerate(self.universal.letters) if l[2] == LIN]

    def quot_element(self, v: Sequence) -> GroupElement:
        return GroupElement(self.algebra, la.fvec(v))

    def lattice_gens(self) -> list:
        """Images of exp(e_{i,j}) in the quotient, keyed by (i, j)."""
        out = {}
        for key, k in self.universal.generators.items():
            v = self.quotient.project(la.unit(self.universal.algebra.dim, k))
            if not la.is_zero(v):
                out[key] = GroupElement(self.algebra, v)
        return out


def _as_vector(c: Construction, t) -> tuple:
    if isinstance(t, Mapping):
        t = [t.get(p, 0) for p in c.linear_positions]
    t = tuple(t)
    if len(t) != len(c.linear_positions):
        raise ConstructionError(f"expected {len(c.linear_positions)} linear parameters, got {len(t)}")
    return t


def build_quotient(u: UniversalAlgebra) -> Construction:
    letters = u.letters
    kinds = [l[2] for l in letters]
    rel_idx = []
    for n, w in enumerate(u.words):
        pet = sum(kinds[a] == PET for a in w)
        nonstar = sum(kinds[a] != STAR for a in w)
        if pet >= 1 or nonstar >= 2:
            rel_idx.append(n)
    rel = Subalgebra.coordinate(u.algebra, rel_idx)
    if not rel.is_ideal():
        raise ConstructionError("relation span is not an ideal")
    q = quotient(u.algebra, rel, u.filtration)
    quot_words = tuple(u.words[i] for i in q.complement)
    lin_idx = [n for n, w in enumerate(quot_words) if sum(kinds[a] == LIN for a in w) == 1]
    lin = Subalgebra.coordinate(q.algebra, lin_idx)
    if not lin.is_ideal():
        raise ConstructionError("linear span is not normal in the quotient")
    if any(not la.is_zero(bracket(q.algebra, a, b)) for a in lin.basis for b in lin.basis):
        raise ConstructionError("linear span is not abelian")
    positions = tuple((l[0], l[1]) for l in letters if l[2] == LIN)
    return Construction(u, q, rel, lin, quot_words, positions)


def rho_power(c: Construction, g: GroupElement, t) -> GroupElement:
    """g^t: scale each linear generator by its parameter, fix the others."""
    if g.algebra != c.algebra:
        raise ConstructionError("element is not in the quotient group")
    f = c.scale_factors(t)
    return GroupElement(g.algebra, tuple(a * b for a, b in zip(f, g.coords)))


# The semidirect group

@dataclass(frozen=True)
class SemidirectElement:
    t: tuple
    g: GroupElement
    g1: GroupElement


class SemidirectGroup:
    """R^{lin} acting on G_Quot x| G_Lin through the scaling action."""

    def __init__(self, c: Construction):
        self.c = c

    def element(self, t, g, g1) -> SemidirectElement:
        c = self.c
        t = tuple(la.to_fraction(a) if not isinstance(a, float) else a for a in _as_vector(c, t))
        if not isinstance(g, GroupElement):
            g = GroupElement(c.algebra, la.fvec(g))
        if not isinstance(g1, GroupElement):
            g1 = GroupElement(c.algebra, la.fvec(g1))
        if not c.lin.contains(g1.coords):
            raise ConstructionError("second component is not in the linear subgroup")
        return SemidirectElement(t, g, g1)

    def identity(self) -> SemidirectElement:
        z = GroupElement.identity(self.c.algebra)
        return SemidirectElement((Fraction(0),) * len(self.c.linear_positions), z, z)

    def inner_multiply(self, a: tuple, b: tuple) -> tuple:
        (g, g1), (h, h1) = a, b
        return (g * h, h.inverse() * g1 * h * h1)

    def inner_inverse(self, a: tuple) -> tuple:
        g, g1 = a
        return (g.inverse(), g * g1.inverse() * g.inverse())

    def act(self, t, a: tuple) -> tuple:
        """rho(t)(g, g1) = (g g1^t, g1)."""
        g, g1 = a
        return (g * rho_power(self.c, g1, t), g1)

    def multiply(self, a: SemidirectElement, b: SemidirectElement) -> SemidirectElement:
        inner = self.inner_multiply(self.act(b.t, (a.g, a.g1)), (b.g, b.g1))
        return SemidirectElement(tuple(x + y for x, y in zip(a.t, b.t)), inner[0], inner[1])

    def inverse(self, a: SemidirectElement) -> SemidirectElement:
        neg = tuple(-x for x in a.t)
        y = self.inner_inverse(self.act(neg, (a.g, a.g1)))
        return SemidirectElement(neg, y[0], y[1])

    def commutator(self, a: SemidirectElement, b: SemidirectElement) -> SemidirectElement:
        m = self.multiply
        return m(m(m(self.inverse(a), self.inverse(b)), a), b)

    def is_identity(self, a: SemidirectElement) -> bool:
        return all(x == 0 for x in a.t) and a.g.is_identity() and a.g1.is_identity()


@dataclass(frozen=True)
class SubgroupSpec:
    """{(t, (g, g1)) : t free or zero, log g in g_space, log g1 in g1_space}."""

    t_free: bool
    g_space: Subalgebra
    g1_space: Subalgebra

    def contains(self, a: SemidirectElement) -> bool:
        return (self.t_free or all(x == 0 for x in a.t)) and self.g_space.contains(a.g.coords) and self.g1_space.contains(a.g1.coords)


@dataclass
class MultiFiltrationReport:
    nesting: list = field(default_factory=list)
    commutator: list = field(default_factory=list)
    flavor: list = field(default_factory=list)
    checked_pairs: int = 0

    @property
    def passed(self) -> bool:
        return not (self.nesting or self.commutator or self.flavor)


class MultiFiltration:
    """Multidegree filtration on the semidirect group, indexed by (d1, d2)."""

    def __init__(self, group: SemidirectGroup):
        self.group = group
        self.c = group.c
        self.top = self.c.filtration.degree_bound

    def __getitem__(self, idx) -> SubgroupSpec:
        d1, d2 = idx
        c = self.c
        alg = c.algebra
        triv = Subalgebra.trivial(alg)
        full = Subalgebra.full(alg)
        if d1 > 1:
            return SubgroupSpec(False, triv, triv)
        qd = c.filtration[c.filtration.index(d2, 0)] if d2 > 0 else full
        qd_lin = qd.intersect(c.lin)
        if d1 == 1:
            if d2 > 0:
                return SubgroupSpec(False, qd_lin, triv)
            return SubgroupSpec(True, c.lin, triv)
        if d2 > 0:
            return SubgroupSpec(False, qd, qd_lin)
        return SubgroupSpec(True, full, c.lin)

    def indices(self) -> list:
        return [(d1, d2) for d1 in range(0, 3) for d2 in range(0, self.top + 2)]

    def generators(self, idx, params=(Fraction(1), Fraction(-3, 2))) -> list:
        spec = self[idx]
        grp = self.group
        alg = self.c.algebra
        z = alg.zero()
        nlin = len(self.c.linear_positions)
        out = []
        for p in params:
            if spec.t_free:
                for k in range(nlin):
                    out.append(grp.element(tuple(p if m == k else 0 for m in range(nlin)), z, z))
            for v in spec.g_space.basis:
                out.append(grp.element((0,) * nlin, la.scale(p, v), z))
            for v in spec.g1_space.basis:
                out.append(grp.element((0,) * nlin, z, la.scale(p, v)))
        return out


def semidirect_filtration(c: Construction) -> tuple:
    """Build the multidegree filtration and validate it at the level of generators."""
    grp = SemidirectGroup(c)
    mf = MultiFiltration(grp)
    rep = MultiFiltrationReport()
    idxs = mf.indices()
    gens = {i: mf.generators(i) for i in idxs}
    for i in idxs:
        for j in idxs:
            if i != j and i[0] <= j[0] and i[1] <= j[1]:
                if not all(mf[i].contains(x) for x in gens[j]):
                    rep.nesting.append((i, j))
    for i in idxs:
        for j in idxs:
            target = mf[(i[0] + j[0], i[1] + j[1])]
            for a in gens[i]:
                bad = next((b for b in gens[j] if not target.contains(grp.commutator(a, b))), None)
                rep.checked_pairs += len(gens[j])
                if bad is not None:
                    rep.commutator.append((i, j))
                    break
    # G_(0,0) is generated by G_(1,0) and G_(0,1): (t,(g,g1)) = (t,(id,id)) (0,(g,g1))
    g10, g01 = mf[(1, 0)], mf[(0, 1)]
    for x in gens[(0, 0)]:
        head = grp.element(x.t, c.algebra.zero(), c.algebra.zero())
        tail = grp.multiply(grp.inverse(head), x)
        if not (g10.contains(head) and g01.contains(tail)):
            rep.flavor.append(("generation", x))
    return mf, rep
