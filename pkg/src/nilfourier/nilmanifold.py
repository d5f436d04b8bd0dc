"""Nilmanifolds G/Gamma with the lattice Gamma = psi^{-1}(Z^d) of second-kind
coordinates, fundamental-domain reduction, metrics, characters, the smooth
partition of unity and nilcharacters built from it."""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import ceil, floor, gcd
from typing import Callable, Sequence

import numpy as np

from . import _linalg as la
from .filtration import Filtration, Subalgebra
from .lie import AlgebraError, GroupElement, LieAlgebra, bracket, coords_second_kind, from_second_kind, height
from .polyseq import PolySequence
from .rng import SplitMix64


class ManifoldError(AlgebraError):
    pass


def e(x) -> complex:
    """e(x) = exp(2 pi i x)."""
    return cmath.exp(2j * math.pi * float(x))


class Nilmanifold:
    """G/Gamma where the algebra basis is the Mal'cev basis."""

    def __init__(self, algebra: LieAlgebra, filtration: Filtration, check_lattice: int = 50, seed: int = 0):
        algebra.ensure_valid()
        if filtration.algebra != algebra:
            raise ManifoldError("filtration lives on a different algebra")
        self.algebra = algebra
        self.filtration = filtration
        self.dim = algebra.dim
        d = self.dim
        for idx, grp in filtration.groups.items():
            if grp != Subalgebra.coordinate(algebra, range(d - grp.dim, d)):
                raise ManifoldError(f"basis not adapted to the filtration at {idx!r}")
        for i in range(d):
            for j in range(d):
                v = bracket(algebra, la.unit(d, i), la.unit(d, j))
                if any(v[k] != 0 for k in range(max(i, j) + 1)):
                    raise ManifoldError("basis lacks the nesting property")
        rng = SplitMix64(seed)
        for _ in range(check_lattice):
            a = from_second_kind(algebra, [rng.integer(-3, 3) for _ in range(d)])
            b = from_second_kind(algebra, [rng.integer(-3, 3) for _ in range(d)])
            if any(c.denominator != 1 for c in coords_second_kind(a * b)):
                raise ManifoldError("integer second-kind points do not form a group")

    @property
    def structure_height(self) -> int:
        return max((height(c) for vec in self.algebra.structure.values() for c in vec.values()), default=1)

    def psi(self, g: GroupElement) -> tuple:
        return coords_second_kind(g)

    def element(self, u: Sequence, exact: bool = True) -> GroupElement:
        """Group element with second-kind coordinates u."""
        u = la.fvec(u) if exact else tuple(float(a) for a in u)
        return from_second_kind(self.algebra, u)

    def levels(self) -> list:
        """Blocks of coordinate indices, one per degree level 1..s."""
        f = self.filtration
        if f.kind != "degree":
            raise ManifoldError("levels need a degree filtration")
        d = self.dim
        s = f.degree_bound
        dims = [f[f.index(i)].dim for i in range(1, s + 2)]
        return [tuple(range(d - dims[i], d - dims[i + 1])) for i in range(s)]

    def to_json(self) -> dict:
        return {"algebra": self.algebra.to_json(), "filtration": self.filtration.to_json(), "basis_order": list(range(self.dim))}

    @classmethod
    def from_json(cls, data) -> "Nilmanifold":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            alg = LieAlgebra.from_json(data["algebra"])
            order = data.get("basis_order", list(range(alg.dim)))
            filt = Filtration.from_json(alg, data["filtration"])
        except (KeyError, TypeError) as exc:
            raise ManifoldError(f"malformed manifold JSON: {exc}") from exc
        if list(order) != list(range(alg.dim)):
            palg = alg.permuted(order)
            groups = {i: Subalgebra.span(palg, [tuple(v[o] for o in order) for v in g.basis]) for i, g in filt.groups.items()}
            alg, filt = palg, Filtration(palg, filt.kind, groups)
        return cls(alg, filt)


def torus(d: int = 1) -> Nilmanifold:
    from .lie import abelian

    alg = abelian(d)
    return Nilmanifold(alg, Filtration.degree(alg, [Subalgebra.full(alg)]))


def heisenberg_manifold() -> Nilmanifold:
    from .lie import heisenberg

    alg = heisenberg()
    return Nilmanifold(alg, Filtration.degree(alg, [Subalgebra.full(alg), Subalgebra.coordinate(alg, [2])]))


def _axis(alg: LieAlgebra, j: int, m) -> GroupElement:
    v = [Fraction(0)] * alg.dim
    v[j] = m
    return GroupElement(alg, tuple(v))


def _floor(x) -> int:
    return floor(x)


def reduce_to_fundamental(g: GroupElement, m: Nilmanifold | None = None) -> tuple:
    """({g}, [g]) with g = {g}[g], psi({g}) in [0,1)^d and psi([g]) integral.

    Coordinates are fixed in basis order by right multiplication with
    exp(X_j)^{-m}, which leaves earlier coordinates untouched.
    """
    alg = g.algebra
    cur = g
    lat = GroupElement.identity(alg)
    for j in range(alg.dim):
        for _ in range(3):
            u = coords_second_kind(cur)[j]
            mj = _floor(u)
            if mj == 0:
                break
            step = _axis(alg, j, mj if not isinstance(u, float) else float(mj))
            cur = cur * step.inverse()
            lat = step * lat
    return cur, lat


def metric_upper_raw(x: GroupElement, y: GroupElement) -> float:
    a = coords_second_kind(x * y.inverse())
    b = coords_second_kind(y * x.inverse())
    return float(min(max((abs(c) for c in a), default=0), max((abs(c) for c in b), default=0)))


def metric_upper(x: GroupElement, y: GroupElement, m: Nilmanifold | None = None, refinement: int = 0) -> float:
    """Upper bound on the right-invariant metric; non-increasing in ``refinement``."""
    best = metric_upper_raw(x, y)
    if refinement <= 0:
        return best
    ux, uy = coords_second_kind(x), coords_second_kind(y)
    alg = x.algebra
    for r in range(1, refinement + 1):
        pts = [x]
        for k in range(1, r + 1):
            lam = Fraction(k, r + 1)
            pts.append(from_second_kind(alg, tuple(a + lam * (b - a) for a, b in zip(ux, uy))))
        pts.append(y)
        chain = sum(metric_upper_raw(p, q) for p, q in zip(pts, pts[1:]))
        best = min(best, chain)
    return best


def random_rational_element(alg: LieAlgebra, rng: SplitMix64, num: int = 5, den: int = 4) -> GroupElement:
    return GroupElement(alg, tuple(Fraction(rng.integer(-num, num), rng.integer(1, den)) for _ in range(alg.dim)))


def validate_horizontal(k: Sequence[int], m: Nilmanifold, samples: int = 200, seed: int = 1) -> tuple:
    """(is g -> k.psi(g) additive on random pairs, ||k||_inf)."""
    k = tuple(int(a) for a in k)
    if len(k) != m.dim:
        raise ManifoldError("character length does not match the manifold")
    size = max((abs(a) for a in k), default=0)
    kf = la.fvec(k)
    rng = SplitMix64(seed)
    probes = [(GroupElement(m.algebra, la.unit(m.dim, i)), GroupElement(m.algebra, la.unit(m.dim, j))) for i in range(m.dim) for j in range(m.dim)]
    probes += [(random_rational_element(m.algebra, rng), random_rational_element(m.algebra, rng)) for _ in range(samples)]
    for a, b in probes:
        if la.dot(kf, m.psi(a * b)) != la.dot(kf, m.psi(a)) + la.dot(kf, m.psi(b)):
            return False, size
    return True, size


@dataclass(frozen=True)
class VerticalCharacter:
    """xi . (last dim T second-kind coordinates) on a central tail subgroup T."""

    subgroup: Subalgebra
    xi: tuple

    def validate(self, m: Nilmanifold) -> None:
        d = m.dim
        t = self.subgroup
        if t != Subalgebra.coordinate(m.algebra, range(d - t.dim, d)):
            raise ManifoldError("vertical subgroup is not spanned by a tail of the Mal'cev basis")
        if len(self.xi) != t.dim or any(Fraction(a).denominator != 1 for a in self.xi):
            raise ManifoldError("vertical frequency must be an integer vector over the subgroup basis")
        for v in t.basis:
            for i in range(d):
                if not la.is_zero(bracket(m.algebra, la.unit(d, i), v)):
                    raise ManifoldError("vertical subgroup is not central")

    def __call__(self, u: Sequence) -> float:
        top = u[len(u) - len(self.xi):]
        return float(sum(a * b for a, b in zip(self.xi, top)))


# Lipschitz wrappers and nilsequences

@dataclass
class ManifoldFunction:
    """F evaluated on second-kind coordinates of the fundamental-domain point."""

    func: Callable
    name: str = "F"

    def __call__(self, u: Sequence):
        return self.func(u)


def fundamental_coordinates(g: GroupElement) -> tuple:
    frac_part, _ = reduce_to_fundamental(g)
    return coords_second_kind(frac_part)


def eval_nilsequence(F: Callable, g: PolySequence, n) -> complex:
    return F(fundamental_coordinates(g.eval(n)))


def vertical_phase_function(freq: int = 1) -> ManifoldFunction:
    """e(freq * last coordinate) on the fundamental domain."""
    return ManifoldFunction(lambda u: e(freq * u[-1]), f"e({freq}*u_top)")


def estimate_lipschitz(F: Callable, m: Nilmanifold, samples: int = 10_000, seed: int = 0, scale: float = 0.05) -> float:
    """Largest sampled difference quotient |F(x)-F(y)| / d(x,y) over nearby pairs (an estimate)."""
    rng = SplitMix64(seed)
    best = 0.0
    for _ in range(samples):
        u = [rng.uniform() for _ in range(m.dim)]
        v = [min(max(a + scale * (2 * rng.uniform() - 1), 0.0), 0.999999) for a in u]
        x, y = m.element(u, exact=False), m.element(v, exact=False)
        dist = metric_upper_raw(x, y)
        if dist > 0:
            best = max(best, float(np.linalg.norm(np.atleast_1d(F(u)) - np.atleast_1d(F(v)))) / dist)
    return best


# Partition of unity

def bump(j: int, k: int, x: float) -> float:
    """rho_j on R/Z, j = 0..2k-1, supported on [j/(2k), j/(2k) + 1/k] mod 1.

    sum_j rho_j(x)^2 = 1: neighbouring bumps are sin and cos of the same phase."""
    h = 1.0 / (2 * k)
    u = (float(x) - j * h) % 1.0
    if u >= 2 * h:
        return 0.0
    return abs(math.sin(math.pi * k * u))


def active_bumps(k: int, x: float) -> list:
    """Indices j with rho_j(x) > 0 (at most two)."""
    h = 1.0 / (2 * k)
    pos = (float(x) % 1.0) / h
    base = int(math.floor(pos))
    out = []
    for j in (base, base - 1):
        j %= 2 * k
        v = bump(j, k, x)
        if v > 0:
            out.append((j, v))
    return out


def bump_center(j: int, k: int) -> float:
    return (j + 1) / (2 * k)


class PartitionOfUnity:
    """tau_t for t in [2k]^d, built level by level along the degree filtration.

    At each level the bumps act on that level's coordinates (well defined mod 1
    once lower levels sit in the window centred at the bump centres), and the
    representative is then moved into the window (beta - 1/2, beta + 1/2].
    """

    def __init__(self, m: Nilmanifold, eps: float, levels: int | None = None):
        if not 0 < eps < 0.5:
            raise ManifoldError("eps must lie in (0, 1/2)")
        self.m = m
        self.eps = eps
        self.k = max(1, math.ceil(1.0 / (2 * eps)))
        all_levels = m.levels()
        self.levels = all_levels if levels is None else all_levels[:levels]
        self.coords = tuple(c for lv in self.levels for c in lv)

    @property
    def index_count(self) -> int:
        return (2 * self.k) ** len(self.coords)

    def _walk(self, g: GroupElement, finish_window: bool):
        """Yield (t, tau value, representative) for all pieces nonzero at g."""
        alg = self.m.algebra
        k = self.k
        g = g.to_float()

        def rec(level, rep, t, val):
            if level == len(self.levels):
                yield t, val, rep
                return
            block = self.levels[level]
            u = coords_second_kind(rep)
            choices = [active_bumps(k, u[c]) for c in block]
            last = level == len(self.levels) - 1
            for combo in product(*choices):
                v = val
                for _, r in combo:
                    v *= r
                new_rep = rep
                if not last or finish_window:
                    for c, (j, _) in zip(block, combo):
                        beta = bump_center(j, k)
                        x = coords_second_kind(new_rep)[c]
                        shift = math.ceil(x - beta - 0.5)
                        if shift:
                            new_rep = new_rep * _axis(alg, c, -float(shift))
                yield from rec(level + 1, new_rep, t + tuple(j for j, _ in combo), v)

        yield from rec(0, g, (), 1.0)

    def evaluate(self, g: GroupElement) -> dict:
        return {t: v for t, v, _ in self._walk(g, False)}

    def tau(self, t: Sequence[int], g: GroupElement) -> float:
        return self.evaluate(g).get(tuple(t), 0.0)

    def functions(self) -> list:
        ranges = [range(2 * self.k)] * len(self.coords)
        return [ManifoldFunction(lambda u, t=t: self.tau(t, self.m.element(u, exact=False)), f"tau{t}") for t in product(*ranges)]

    def support_box(self, t: Sequence[int]) -> list:
        """Per-coordinate intervals of width 1/k <= 2 eps centred at the bump centres."""
        return [(bump_center(j, self.k) - 0.5 / self.k, bump_center(j, self.k) + 0.5 / self.k) for j in t]


def partition_of_unity(m: Nilmanifold, eps: float) -> PartitionOfUnity:
    return PartitionOfUnity(m, eps)


class Nilcharacter:
    """F(x)_t = tau_t(x) e(xi . psi_beta(x)_top), t over pieces of G/G_s."""

    def __init__(self, m: Nilmanifold, eta: VerticalCharacter, eps: float = 0.25):
        eta.validate(m)
        self.m = m
        self.eta = eta
        levels = m.levels()
        top = levels[-1]
        if eta.subgroup.dim != len(top):
            raise ManifoldError("frequency must live on the bottom filtration group")
        self.pou = PartitionOfUnity(m, eps, levels=len(levels) - 1)
        self.top = top
        self.k = self.pou.k
        self.output_dim = self.pou.index_count
        self._index = {t: n for n, t in enumerate(product(range(2 * self.k), repeat=len(self.pou.coords)))}

    def __call__(self, g: GroupElement) -> np.ndarray:
        out = np.zeros(self.output_dim, dtype=complex)
        for t, val, rep in self.pou._walk(g, True):
            u = coords_second_kind(rep)
            out[self._index[t]] = val * e(self.eta(u))
        return out

    def trace(self, g: GroupElement) -> complex:
        """Trace of F (x) conj(F): sum_t |F_t|^2."""
        v = self(g)
        return complex(np.vdot(v, v))


def make_nilcharacter(m: Nilmanifold, eta: VerticalCharacter, eps: float = 0.25) -> Nilcharacter:
    return Nilcharacter(m, eta, eps)


# Divisibility

def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def divisibility_constant(m: Nilmanifold) -> int:
    """Q' with psi(exp(sum z_j X_j)) integral whenever every z_j is in Q' Z.

    psi o exp is polynomial of degree <= step; its monomial coefficients are
    interpolated exactly on the grid {0..step}^d, and Q' is the lcm of their
    denominators (no constant term, so scaling z by Q' clears them)."""
    alg = m.algebra
    d, s = alg.dim, alg.step
    pts = list(range(s + 1))
    vinv = la.inverse([[Fraction(p) ** i for i in range(s + 1)] for p in pts])
    vals = {}
    for z in product(pts, repeat=d):
        vals[z] = coords_second_kind(GroupElement(alg, la.fvec(z)))
    coeffs = vals
    for axis in range(d):
        nxt = {}
        for key in product(range(s + 1), repeat=d):
            acc = [Fraction(0)] * d
            for p in pts:
                src = key[:axis] + (p,) + key[axis + 1:]
                w = vinv[key[axis]][p]
                if w:
                    acc = [a + w * b for a, b in zip(acc, coeffs[src])]
            nxt[key] = tuple(acc)
        coeffs = nxt
    q = 1
    for vec in coeffs.values():
        for c in vec:
            q = _lcm(q, c.denominator)
    return q
