"""Orderings, filtrations by rational subalgebras, and quotients."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Mapping, Sequence

from . import _linalg as la
from .lie import AlgebraError, GroupElement, LieAlgebra, bracket, _span_closure_series

LESS_OR_EQUAL = "less-or-equal"
GREATER = "greater"
INCOMPARABLE = "incomparable"

KINDS = ("degree", "degree-rank", "multidegree")


class FiltrationError(AlgebraError):
    pass


@dataclass(frozen=True, order=True)
class OrderingIndex:
    """An index in one of the three orderings; ``value`` is a tuple of naturals."""

    kind: str
    value: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FiltrationError(f"unknown ordering {self.kind!r}")
        v = tuple(int(a) for a in self.value)
        if any(a < 0 for a in v):
            raise FiltrationError("indices are natural numbers")
        if self.kind == "degree" and len(v) != 1:
            raise FiltrationError("degree index has one component")
        if self.kind == "degree-rank":
            if len(v) != 2:
                raise FiltrationError("degree-rank index has two components")
        object.__setattr__(self, "value", v)

    @classmethod
    def degree(cls, d: int) -> "OrderingIndex":
        return cls("degree", (d,))

    @classmethod
    def degree_rank(cls, d: int, r: int) -> "OrderingIndex":
        if r > d:
            raise FiltrationError("degree-rank index needs r <= d")
        return cls("degree-rank", (d, r))

    @classmethod
    def multidegree(cls, *v: int) -> "OrderingIndex":
        return cls("multidegree", tuple(v))

    def is_zero(self) -> bool:
        return all(a == 0 for a in self.value)

    def __add__(self, other: "OrderingIndex") -> "OrderingIndex":
        return add(self, other)

    def __repr__(self):
        return f"{self.kind}{self.value}"


def _check_same(a: OrderingIndex, b: OrderingIndex):
    if a.kind != b.kind or len(a.value) != len(b.value):
        raise FiltrationError(f"cannot combine {a!r} and {b!r}")


def leq(a: OrderingIndex, b: OrderingIndex) -> bool:
    _check_same(a, b)
    if a.kind == "degree":
        return a.value[0] <= b.value[0]
    if a.kind == "degree-rank":
        (d1, r1), (d2, r2) = a.value, b.value
        return d1 < d2 or (d1 == d2 and r1 <= r2)
    return all(x <= y for x, y in zip(a.value, b.value))


def compare(a: OrderingIndex, b: OrderingIndex) -> str:
    if leq(a, b):
        return LESS_OR_EQUAL
    if leq(b, a):
        return GREATER
    return INCOMPARABLE


def add(a: OrderingIndex, b: OrderingIndex) -> OrderingIndex:
    """Componentwise addition; degree-rank sums with r > d stay as pairs and
    are normalised on lookup."""
    _check_same(a, b)
    return OrderingIndex(a.kind, tuple(x + y for x, y in zip(a.value, b.value)))


def normalize(idx: OrderingIndex) -> OrderingIndex:
    """Degree-rank convention G_(d,r) = G_(d+1,0) when r > d."""
    if idx.kind == "degree-rank":
        d, r = idx.value
        if r > d:
            return OrderingIndex("degree-rank", (d + 1, 0))
    return idx


# Subalgebras

@dataclass(frozen=True)
class Subalgebra:
    """Rational subspace of an algebra, stored in reduced row echelon form."""

    ambient: LieAlgebra
    basis: tuple
    pivots: tuple

    @classmethod
    def span(cls, alg: LieAlgebra, vectors: Iterable[Sequence]) -> "Subalgebra":
        rows, piv = la.rref([la.fvec(v) for v in vectors], d=alg.dim)
        return cls(alg, rows, piv)

    @classmethod
    def full(cls, alg: LieAlgebra) -> "Subalgebra":
        return cls.span(alg, [la.unit(alg.dim, i) for i in range(alg.dim)])

    @classmethod
    def trivial(cls, alg: LieAlgebra) -> "Subalgebra":
        return cls(alg, (), ())

    @classmethod
    def coordinate(cls, alg: LieAlgebra, indices: Iterable[int]) -> "Subalgebra":
        return cls.span(alg, [la.unit(alg.dim, i) for i in indices])

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __eq__(self, other):
        return isinstance(other, Subalgebra) and self.basis == other.basis and self.ambient == other.ambient

    def __hash__(self):
        return hash(self.basis)

    def contains(self, v: Sequence) -> bool:
        return la.in_span(v, self.basis, self.pivots)

    def contains_element(self, g: GroupElement) -> bool:
        return self.contains(g.coords)

    def issubset(self, other: "Subalgebra") -> bool:
        return all(other.contains(v) for v in self.basis)

    def reduce(self, v: Sequence) -> tuple:
        return la.reduce(v, self.basis, self.pivots)

    def is_closed(self) -> bool:
        return all(self.contains(bracket(self.ambient, a, b)) for a in self.basis for b in self.basis)

    def is_ideal(self) -> bool:
        d = self.ambient.dim
        return all(self.contains(bracket(self.ambient, la.unit(d, i), b)) for i in range(d) for b in self.basis)

    def intersect(self, other: "Subalgebra") -> "Subalgebra":
        return intersect(self, other)

    def __repr__(self):
        return f"Subalgebra(dim={self.dim})"


def bracket_span(alg: LieAlgebra, a: Subalgebra, b: Subalgebra) -> Subalgebra:
    """Linear span of [a_i, b_j] over basis vectors."""
    return Subalgebra.span(alg, [bracket(alg, x, y) for x in a.basis for y in b.basis])


def sum_span(a: Subalgebra, b: Subalgebra) -> Subalgebra:
    return Subalgebra.span(a.ambient, list(a.basis) + list(b.basis))


def intersect(a: Subalgebra, b: Subalgebra) -> Subalgebra:
    """Intersection of two subspaces via the kernel of [A; -B]."""
    if a.dim == 0 or b.dim == 0:
        return Subalgebra.trivial(a.ambient)
    d = a.ambient.dim
    # solve sum x_i a_i = sum y_j b_j : null space of the (d x (ka+kb)) matrix
    cols = list(a.basis) + [la.scale(-1, v) for v in b.basis]
    n = len(cols)
    mat = [[cols[c][r] for c in range(n)] for r in range(d)]
    rows, piv = la.rref(mat, d=n)
    free = [c for c in range(n) if c not in piv]
    vecs = []
    for f in free:
        x = [Fraction(0)] * n
        x[f] = Fraction(1)
        for row, p in zip(rows, piv):
            x[p] = -row[f]
        v = la.zero(d)
        for i in range(a.dim):
            if x[i] != 0:
                v = la.add(v, la.scale(x[i], a.basis[i]))
        vecs.append(v)
    return Subalgebra.span(a.ambient, vecs)


def join(h1: Subalgebra, h2: Subalgebra) -> Subalgebra:
    """Smallest bracket-closed subalgebra containing both."""
    if h1.ambient != h2.ambient:
        raise FiltrationError("ambient mismatch")
    alg = h1.ambient
    cur = sum_span(h1, h2)
    while True:
        nxt = Subalgebra.span(alg, list(cur.basis) + [bracket(alg, x, y) for x in cur.basis for y in cur.basis])
        if nxt.dim == cur.dim:
            return cur
        cur = nxt


def lower_central_series(alg: LieAlgebra) -> list:
    series = _span_closure_series(alg)
    if series[-1][0]:
        raise FiltrationError("lower central series does not terminate")
    return [Subalgebra(alg, rows, piv) for rows, piv in series]


# Filtrations

@dataclass
class FiltrationReport:
    nesting: list = field(default_factory=list)
    commutator: list = field(default_factory=list)
    flavor: list = field(default_factory=list)
    closure: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not (self.nesting or self.commutator or self.flavor or self.closure)


class Filtration:
    """Indexed family of subalgebras stored on a finite support."""

    def __init__(self, algebra: LieAlgebra, kind: str, groups: Mapping, arity: int | None = None):
        if kind not in KINDS:
            raise FiltrationError(f"unknown filtration kind {kind!r}")
        self.algebra = algebra
        self.kind = kind
        store = {}
        for idx, sub in groups.items():
            if not isinstance(idx, OrderingIndex):
                idx = OrderingIndex(kind, (idx,) if isinstance(idx, int) else tuple(idx))
            if idx.kind != kind:
                raise FiltrationError(f"index {idx!r} does not match kind {kind}")
            if not isinstance(sub, Subalgebra):
                sub = Subalgebra.span(algebra, sub)
            store[normalize(idx)] = sub
        self.groups = dict(sorted(store.items(), key=lambda kv: kv[0].value))
        lengths = {len(i.value) for i in self.groups}
        if arity is None:
            arity = lengths.pop() if lengths else (2 if kind == "degree-rank" else 1)
        self.arity = arity

    @classmethod
    def degree(cls, algebra: LieAlgebra, groups: Sequence) -> "Filtration":
        """``groups[i]`` is G_{i+1}; G_0 is set to G_1."""
        data = {OrderingIndex.degree(0): Subalgebra.full(algebra)}
        for i, g in enumerate(groups, start=1):
            data[OrderingIndex.degree(i)] = g if isinstance(g, Subalgebra) else Subalgebra.span(algebra, g)
        return cls(algebra, "degree", data)

    def index(self, *value) -> OrderingIndex:
        if len(value) == 1 and isinstance(value[0], (tuple, list)):
            value = tuple(value[0])
        return OrderingIndex(self.kind, value)

    @property
    def degree_bound(self) -> int:
        nontriv = [sum(i.value) if self.kind == "multidegree" else i.value[0] for i, g in self.groups.items() if g.dim]
        return max(nontriv, default=0)

    def __getitem__(self, idx) -> Subalgebra:
        if not isinstance(idx, OrderingIndex):
            idx = self.index(idx)
        idx = normalize(idx)
        if idx in self.groups:
            return self.groups[idx]
        if idx.is_zero():
            return Subalgebra.full(self.algebra)
        if self.kind == "degree-rank" and idx.value[1] == 0 and idx.value[0] == 1:
            return self[self.index(1, 1)] if self.index(1, 1) in self.groups else Subalgebra.full(self.algebra)
        above = [j for j, g in self.groups.items() if g.dim and leq(idx, j)]
        if not above:
            return Subalgebra.trivial(self.algebra)
        if self.kind == "degree" and idx.value[0] == 1:
            return Subalgebra.full(self.algebra)
        raise FiltrationError(f"group at {idx!r} is not determined by the stored support")

    def validate(self) -> FiltrationReport:
        return validate_filtration(self)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "groups": [
                {"index": list(i.value), "basis": [[_render(c) for c in row] for row in g.basis]}
                for i, g in self.groups.items()
            ],
        }

    @classmethod
    def from_json(cls, algebra: LieAlgebra, data) -> "Filtration":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            kind = data["kind"]
            groups = {}
            for entry in data["groups"]:
                idx = OrderingIndex(kind, tuple(entry["index"]))
                basis = [[Fraction(str(c)) for c in row] for row in entry["basis"]]
                if any(len(row) != algebra.dim for row in basis):
                    raise FiltrationError("basis vector length does not match algebra")
                groups[idx] = Subalgebra.span(algebra, basis)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, FiltrationError):
                raise
            raise FiltrationError(f"malformed filtration JSON: {exc}") from exc
        return cls(algebra, kind, groups)


def _render(c: Fraction) -> str:
    return str(c)


def validate_filtration(f: Filtration) -> FiltrationReport:
    rep = FiltrationReport()
    alg = f.algebra
    items = list(f.groups.items())
    zero_idx = OrderingIndex(f.kind, (0,) * f.arity)
    if zero_idx not in f.groups:
        items = [(zero_idx, Subalgebra.full(alg))] + items
    for i, g in items:
        if not g.is_closed():
            rep.closure.append(i)
    for (i, gi), (j, gj) in product(items, repeat=2):
        if i != j and leq(i, j) and not gj.issubset(gi):
            rep.nesting.append((i, j))
    for (i, gi), (j, gj) in product(items, repeat=2):
        if j.value < i.value:
            continue
        target = f[add(i, j)]
        for x in gi.basis:
            bad = next((y for y in gj.basis if not target.contains(bracket(alg, x, y))), None)
            if bad is not None:
                rep.commutator.append((i, j))
                break
    if f.kind == "degree":
        g0, g1 = f[f.index(0)], f[f.index(1)]
        if g0 != g1:
            rep.flavor.append("G_0 != G_1")
    elif f.kind == "degree-rank":
        if f[f.index(0, 0)] != f[f.index(1, 0)]:
            rep.flavor.append("G_(0,0) != G_(1,0)")
        for (d, r) in sorted({i.value for i in f.groups}):
            if r == 0 and d >= 1 and f.index(d, 1) in f.groups and f.index(d, 0) in f.groups:
                if f.groups[f.index(d, 0)] != f.groups[f.index(d, 1)]:
                    rep.flavor.append(f"G_({d},0) != G_({d},1)")
    else:
        k = f.arity
        units = [OrderingIndex("multidegree", tuple(1 if a == b else 0 for a in range(k))) for b in range(k)]
        joined = Subalgebra.trivial(alg)
        for e in units:
            joined = join(joined, f[e])
        if f[zero_idx] != joined:
            rep.flavor.append("G_0 is not the join of the unit-index groups")
    return rep


def degree_rank_from_degree(f: Filtration) -> Filtration:
    """Degree-rank filtration generated by iterated commutators of filtration
    generators, graded by (total depth, number of participants)."""
    if f.kind != "degree":
        raise FiltrationError("expected a degree filtration")
    rep = validate_filtration(f)
    if not rep.passed:
        raise FiltrationError(f"input filtration invalid: {rep}")
    alg = f.algebra
    s = f.degree_bound
    gens = []
    for i in range(1, s + 1):
        gens.extend((i, v) for v in f[f.index(i)].basis)
    classes: dict = {}
    for w, v in gens:
        classes.setdefault((w, 1), []).append(v)
    frontier = {k: la.rref(v, d=alg.dim)[0] for k, v in classes.items()}
    spans = dict(frontier)
    step = alg.step
    for count in range(2, step + 1):
        new: dict = {}
        for (w, c), vecs in frontier.items():
            for wg, g in gens:
                for v in vecs:
                    b = bracket(alg, g, v)
                    if not la.is_zero(b):
                        new.setdefault((w + wg, c + 1), []).append(b)
        frontier = {k: la.rref(v, d=alg.dim)[0] for k, v in new.items()}
        frontier = {k: v for k, v in frontier.items() if v}
        for k, v in frontier.items():
            spans[k] = la.rref(list(spans.get(k, ())) + list(v), d=alg.dim)[0]
        if not frontier:
            break
    groups = {OrderingIndex.degree_rank(0, 0): Subalgebra.full(alg)}
    for d in range(1, s + 1):
        for r in range(0, d + 1):
            vecs = [v for (w, c), vs in spans.items() if w > d or (w == d and c >= r) for v in vs]
            groups[OrderingIndex.degree_rank(d, r)] = Subalgebra.span(alg, vecs)
    out = Filtration(alg, "degree-rank", groups)
    rep = validate_filtration(out)
    if not rep.passed:
        raise FiltrationError(f"derived degree-rank filtration failed validation: {rep}")
    return out


@dataclass
class Quotient:
    algebra: LieAlgebra
    filtration: Filtration | None
    complement: tuple  # ambient indices kept as quotient basis
    ideal: Subalgebra

    def project(self, v: Sequence) -> tuple:
        r = self.ideal.reduce(v)
        return tuple(r[i] for i in self.complement)

    def lift(self, u: Sequence) -> tuple:
        out = [Fraction(0)] * self.ideal.ambient.dim
        for c, i in zip(u, self.complement):
            out[i] = la.to_fraction(c)
        return tuple(out)

    def project_element(self, g: GroupElement) -> GroupElement:
        return GroupElement(self.algebra, self.project(g.coords))


def quotient(alg: LieAlgebra, ideal: Subalgebra, f: Filtration | None = None) -> Quotient:
    if not ideal.is_ideal():
        raise FiltrationError("subalgebra is not an ideal")
    comp = tuple(i for i in range(alg.dim) if i not in ideal.pivots)
    if not comp:
        raise FiltrationError("quotient by the whole algebra is trivial")
    pos = {i: n for n, i in enumerate(comp)}
    structure = {}
    for a in comp:
        for b in comp:
            v = ideal.reduce(bracket(alg, la.unit(alg.dim, a), la.unit(alg.dim, b)))
            vec = {pos[k]: v[k] for k in comp if v[k] != 0}
            if vec:
                structure[(pos[a], pos[b])] = vec
    qalg = LieAlgebra(len(comp), structure, alg.declared_step)
    q = Quotient(qalg, None, comp, ideal)
    if f is not None:
        groups = {i: Subalgebra.span(qalg, [q.project(v) for v in g.basis]) for i, g in f.groups.items()}
        q.filtration = Filtration(qalg, f.kind, groups, arity=f.arity)
    return q
