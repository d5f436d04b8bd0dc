"""Nilpotent Lie algebras over the rationals and their simply connected groups.

A :class:`LieAlgebra` is given by sparse structure constants ``c[i, j] = {k: c_ijk}``
on a basis ``X_0, ..., X_{d-1}``.  A :class:`GroupElement` stores the first-kind
coordinates ``t`` of ``g = exp(sum t_i X_i)``; products go through the truncated
Dynkin series.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Iterable, Mapping, Sequence

from . import _linalg as la

MAX_STEP = 6
MAX_DIM = 64


class AlgebraError(ValueError):
    """Raised for malformed or invalid algebra input."""


class CapError(AlgebraError):
    """Raised when a request exceeds the supported step or dimension."""


def height(x) -> int:
    """max(|p|, |q|) of a rational, or the max over a vector."""
    if isinstance(x, (list, tuple)):
        return max((height(v) for v in x), default=0)
    q = la.to_fraction(x)
    return max(abs(q.numerator), q.denominator)


@dataclass
class ValidationReport:
    antisymmetry: list = field(default_factory=list)
    jacobi: list = field(default_factory=list)
    step: int | None = None
    declared_step: int | None = None
    message: str = ""

    @property
    def passed(self) -> bool:
        return (
            not self.antisymmetry
            and not self.jacobi
            and self.step is not None
            and self.step <= self.declared_step
        )


class LieAlgebra:
    """Finite-dimensional Lie algebra given by structure constants."""

    def __init__(self, dim: int, structure: Mapping, declared_step: int):
        if dim < 1:
            raise AlgebraError("dimension must be positive")
        if dim > MAX_DIM:
            raise CapError(f"dimension {dim} exceeds cap {MAX_DIM}")
        if declared_step < 1:
            raise AlgebraError("declared step must be positive")
        if declared_step > MAX_STEP:
            raise CapError(f"step {declared_step} exceeds cap {MAX_STEP}")
        self.dim = dim
        self.declared_step = declared_step
        table: dict = {}
        for (i, j), vec in structure.items():
            if not (0 <= i < dim and 0 <= j < dim):
                raise AlgebraError(f"index ({i}, {j}) out of range")
            clean = {}
            for k, c in dict(vec).items():
                if not 0 <= k < dim:
                    raise AlgebraError(f"index {k} out of range")
                c = la.to_fraction(c)
                if c != 0:
                    clean[k] = c
            if clean:
                table[(i, j)] = clean
        self._table = table
        # row-wise view for fast bracketing
        rows: list = [[] for _ in range(dim)]
        for (i, j), vec in sorted(table.items()):
            rows[i].append((j, tuple(sorted(vec.items()))))
        self._rows = rows
        self._report: ValidationReport | None = None

    @classmethod
    def from_brackets(cls, dim: int, step: int, brackets: Iterable, antisymmetrize: bool = True):
        """Build from ``(i, j, k, c)`` entries; mirror i<j entries when asked."""
        structure: dict = {}
        for i, j, k, c in brackets:
            c = la.to_fraction(c)
            structure.setdefault((i, j), {})
            structure[(i, j)][k] = structure[(i, j)].get(k, 0) + c
            if antisymmetrize and i != j:
                structure.setdefault((j, i), {})
                structure[(j, i)][k] = structure[(j, i)].get(k, 0) - c
        return cls(dim, structure, step)

    @property
    def structure(self) -> dict:
        return {key: dict(v) for key, v in self._table.items()}

    def constant(self, i: int, j: int, k: int) -> Fraction:
        return self._table.get((i, j), {}).get(k, Fraction(0))

    def __eq__(self, other):
        return (
            isinstance(other, LieAlgebra)
            and self.dim == other.dim
            and self.declared_step == other.declared_step
            and self._table == other._table
        )

    def __hash__(self):
        return hash((self.dim, self.declared_step, tuple(sorted((k, tuple(sorted(v.items()))) for k, v in self._table.items()))))

    def __repr__(self):
        return f"LieAlgebra(dim={self.dim}, step={self.declared_step}, nonzero={len(self._table)})"

    def bracket(self, x: Sequence, y: Sequence) -> tuple:
        return bracket(self, x, y)

    def zero(self) -> tuple:
        return la.zero(self.dim)

    def basis_vector(self, i: int) -> tuple:
        return la.unit(self.dim, i)

    def validate(self) -> ValidationReport:
        if self._report is None:
            self._report = validate_algebra(self)
        return self._report

    def ensure_valid(self) -> None:
        rep = self.validate()
        if not rep.passed:
            raise AlgebraError(f"algebra not validated: {rep.message}")

    @property
    def step(self) -> int:
        self.ensure_valid()
        return self._report.step

    def is_antisymmetric(self) -> bool:
        return not _antisymmetry_violations(self)

    def permuted(self, order: Sequence[int]) -> "LieAlgebra":
        """Algebra in the basis ``(X_order[0], X_order[1], ...)``."""
        if sorted(order) != list(range(self.dim)):
            raise AlgebraError("not a permutation")
        pos = {old: new for new, old in enumerate(order)}
        structure = {
            (pos[i], pos[j]): {pos[k]: c for k, c in vec.items()} for (i, j), vec in self._table.items()
        }
        return LieAlgebra(self.dim, structure, self.declared_step)

    # JSON
    def to_json(self) -> dict:
        keep_all = not self.is_antisymmetric()
        entries = []
        for (i, j), vec in sorted(self._table.items()):
            if i < j or keep_all:
                for k, c in sorted(vec.items()):
                    entries.append([i, j, k, str(c) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"])
        return {"dim": self.dim, "step": self.declared_step, "brackets": entries}

    @classmethod
    def from_json(cls, data) -> "LieAlgebra":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            dim = int(data["dim"])
            step = int(data["step"])
            raw = [(int(i), int(j), int(k), Fraction(str(c))) for i, j, k, c in data["brackets"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise AlgebraError(f"malformed algebra JSON: {exc}") from exc
        explicit_lower = any(i > j for i, j, _, _ in raw)
        return cls.from_brackets(dim, step, raw, antisymmetrize=not explicit_lower)


def bracket(alg: LieAlgebra, x: Sequence, y: Sequence) -> tuple:
    d = alg.dim
    if len(x) != d or len(y) != d:
        raise AlgebraError(f"dimension mismatch: expected {d}, got {len(x)} and {len(y)}")
    out = [0] * d
    for i, xi in enumerate(x):
        if xi == 0:
            continue
        for j, entries in alg._rows[i]:
            yj = y[j]
            if yj == 0:
                continue
            w = xi * yj
            for k, c in entries:
                out[k] += w * c
    zero = Fraction(0)
    return tuple(v if v != 0 else zero for v in out)


def _antisymmetry_violations(alg: LieAlgebra) -> list:
    bad = []
    keys = set(alg._table) | {(j, i) for i, j in alg._table}
    for i, j in sorted(keys):
        if i > j:
            continue
        a, b = alg._table.get((i, j), {}), alg._table.get((j, i), {})
        for k in sorted(set(a) | set(b)):
            if a.get(k, 0) != -b.get(k, 0):
                bad.append((i, j, k))
    return bad


def _span_closure_series(alg: LieAlgebra) -> list:
    """Lower central series as RREF bases; stops at zero or after dim+1 terms."""
    d = alg.dim
    current = la.rref([la.unit(d, i) for i in range(d)])
    series = [current]
    gens = [la.unit(d, i) for i in range(d)]
    for _ in range(d + 1):
        rows, _ = current
        if not rows:
            return series
        nxt = la.rref([bracket(alg, g, h) for g in gens for h in rows], d=d)
        series.append(nxt)
        if len(nxt[0]) == len(rows):
            return series  # stalled: not nilpotent
        current = nxt
    return series


def validate_algebra(alg: LieAlgebra) -> ValidationReport:
    rep = ValidationReport(declared_step=alg.declared_step)
    rep.antisymmetry = _antisymmetry_violations(alg)
    d = alg.dim
    e = [la.unit(d, i) for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            bij = bracket(alg, e[i], e[j])
            for k in range(j + 1, d):
                s = la.add(
                    la.add(bracket(alg, e[i], bracket(alg, e[j], e[k])), bracket(alg, e[j], bracket(alg, e[k], e[i]))),
                    bracket(alg, e[k], bij),
                )
                if not la.is_zero(s):
                    rep.jacobi.append((i, j, k))
    if not rep.antisymmetry and not rep.jacobi:
        series = _span_closure_series(alg)
        if series[-1][0]:
            rep.message = "lower central series does not terminate"
        else:
            rep.step = max(len(series) - 1, 1)
            if rep.step > alg.declared_step:
                rep.message = f"step {rep.step} exceeds declared step {alg.declared_step}"
    else:
        rep.message = f"{len(rep.antisymmetry)} antisymmetry and {len(rep.jacobi)} Jacobi violations"
    return rep


def nilpotency_step(alg: LieAlgebra) -> int:
    """Minimal j with G_(j+1) = 0."""
    series = _span_closure_series(alg)
    if series[-1][0]:
        raise AlgebraError("lower central series does not terminate: algebra is not nilpotent")
    return max(len(series) - 1, 1)


# Dynkin series

@lru_cache(maxsize=None)
def dynkin_words(step: int) -> tuple:
    """Words in {0: X, 1: Y} with rational weights so that
    log(e^X e^Y) = sum_w c_w [w_1, [w_2, ... [w_{m-1}, w_m]]] up to degree ``step``."""
    coeffs: dict = {}

    def blocks(remaining):
        # sequences of (r, s) with r + s >= 1 and total <= remaining
        yield ()
        for r in range(remaining + 1):
            for s in range(remaining + 1 - r):
                if r + s == 0:
                    continue
                for rest in blocks(remaining - r - s):
                    yield ((r, s),) + rest

    for seq in blocks(step):
        n = len(seq)
        if n == 0:
            continue
        m = sum(r + s for r, s in seq)
        denom = n * m
        for r, s in seq:
            denom *= factorial(r) * factorial(s)
        c = Fraction((-1) ** (n - 1), denom)
        word = tuple(letter for r, s in seq for letter in (0,) * r + (1,) * s)
        coeffs[word] = coeffs.get(word, 0) + c
    return tuple(sorted((w, c) for w, c in coeffs.items() if c != 0 and not (len(w) > 1 and w[-1] == w[-2])))


def _bch_vectors(alg: LieAlgebra, x: Sequence, y: Sequence) -> tuple:
    step = alg.step
    words = dynkin_words(step)
    cache: dict = {}
    letters = (tuple(x), tuple(y))

    def nested(word):
        if word in cache:
            return cache[word]
        if len(word) == 1:
            val = letters[word[0]]
        else:
            val = bracket(alg, letters[word[0]], nested(word[1:]))
        cache[word] = val
        return val

    out = [Fraction(0)] * alg.dim
    for word, c in words:
        v = nested(word)
        for k, vk in enumerate(v):
            if vk != 0:
                out[k] += c * vk
    return tuple(out)


@dataclass(frozen=True)
class GroupElement:
    """g = exp(sum t_i X_i) with first-kind coordinates ``coords``."""

    algebra: LieAlgebra
    coords: tuple

    def __post_init__(self):
        if len(self.coords) != self.algebra.dim:
            raise AlgebraError(f"expected {self.algebra.dim} coordinates, got {len(self.coords)}")
        object.__setattr__(self, "coords", tuple(self.coords))

    @classmethod
    def identity(cls, alg: LieAlgebra) -> "GroupElement":
        return cls(alg, alg.zero())

    @classmethod
    def exp(cls, alg: LieAlgebra, v: Sequence, exact: bool = True) -> "GroupElement":
        return cls(alg, la.fvec(v) if exact else tuple(float(a) for a in v))

    @property
    def log(self) -> tuple:
        return self.coords

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return bch_product(self, other)

    def inverse(self) -> "GroupElement":
        return power(self, -1)

    def __pow__(self, t) -> "GroupElement":
        return power(self, t)

    def is_identity(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.coords)

    def to_float(self) -> "GroupElement":
        return GroupElement(self.algebra, tuple(float(c) for c in self.coords))

    def second_kind(self) -> tuple:
        return coords_second_kind(self)


def bch_product(x: GroupElement, y: GroupElement) -> GroupElement:
    if x.algebra is not y.algebra and x.algebra != y.algebra:
        raise AlgebraError("elements live on different algebras")
    return GroupElement(x.algebra, _bch_vectors(x.algebra, x.coords, y.coords))


def power(g: GroupElement, t) -> GroupElement:
    if not isinstance(t, float) and not isinstance(t, Fraction):
        t = Fraction(t)
    zero = Fraction(0)
    return GroupElement(g.algebra, tuple(t * c if c != 0 else zero for c in g.coords))


def commutator(g: GroupElement, h: GroupElement) -> GroupElement:
    """[g, h] = g^{-1} h^{-1} g h."""
    return g.inverse() * h.inverse() * g * h


def _exp_axis(alg: LieAlgebra, i: int, u) -> GroupElement:
    v = [Fraction(0)] * alg.dim
    v[i] = u
    return GroupElement(alg, tuple(v))


def from_second_kind(alg: LieAlgebra, u: Sequence) -> GroupElement:
    """exp(u_0 X_0) exp(u_1 X_1) ... exp(u_{d-1} X_{d-1})."""
    if len(u) != alg.dim:
        raise AlgebraError("dimension mismatch")
    g = GroupElement.identity(alg)
    for i, ui in enumerate(u):
        if ui != 0:
            g = g * _exp_axis(alg, i, ui)
    return g


def coords_second_kind(g: GroupElement, tol: float = 1e-9) -> tuple:
    """Second-kind coordinates by peeling exp(u_i X_i) off the left, in basis order.

    Raises if a coordinate at or below the current index reappears, which
    means the basis order lacks the nesting property.
    """
    alg = g.algebra
    rest = g
    u = []
    exact = all(not isinstance(c, float) for c in g.coords)
    for i in range(alg.dim):
        ui = rest.coords[i]
        u.append(ui)
        if ui != 0:
            rest = _exp_axis(alg, i, -ui) * rest
        for j in range(i + 1):
            c = rest.coords[j]
            if (c != 0) if exact else (abs(c) > tol * (1 + max(abs(float(a)) for a in g.coords))):
                raise AlgebraError("basis order lacks the nesting property")
    return tuple(u)


def heisenberg() -> LieAlgebra:
    """Basis X, Y, Z with [X, Y] = Z."""
    return LieAlgebra.from_brackets(3, 2, [(0, 1, 2, 1)])


def abelian(d: int) -> LieAlgebra:
    return LieAlgebra(d, {}, 1)


def free_three_step() -> LieAlgebra:
    """Free 3-step algebra on X, Y: basis X, Y, [X,Y], [X,[X,Y]], [Y,[X,Y]]."""
    return LieAlgebra.from_brackets(5, 3, [(0, 1, 2, 1), (0, 2, 3, 1), (1, 2, 4, 1)])
