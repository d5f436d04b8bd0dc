"""Fractional parts, bracket polynomials, Bohr sets, Freiman homomorphisms,
lattice rounding, bracket-linear models and dual coordinates on proper GAPs.

Fractional part convention: frac(x) in (-1/2, 1/2] and int_part(x) = x - frac(x),
the nearest integer with halves rounded down.  ``floor_convention=True``
switches to the floor pair {x} in [0, 1), [x] = floor(x).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from ._linalg import inverse, matmul, rank, to_fraction, transpose

MAX_BRACKET_DEPTH = 3
BOHR_CAP = 10 ** 6
FREIMAN_CAP = 10 ** 7
FIT_CAP = 10 ** 3


class AdditiveError(ValueError):
    pass


class AdditiveCapError(AdditiveError):
    pass


def frac(x, floor_convention: bool = False):
    """Representative of x mod 1 in (-1/2, 1/2] (or [0, 1) with the floor flag).
    Exact for Fraction and int input."""
    if floor_convention:
        return x - math.floor(x)
    r = x - math.floor(x)
    return r - 1 if r > Fraction(1, 2) else r


def int_part(x, floor_convention: bool = False):
    return x - frac(x, floor_convention)


def dist_to_int(x) -> float:
    return abs(frac(x))


def e(x) -> complex:
    return complex(np.exp(2j * np.pi * float(x)))


# Bracket expressions

OPS = ("sum", "mul", "frac", "int", "linear", "const")


@dataclass(frozen=True)
class BracketExpr:
    """Expression tree in n.  ``linear`` leaves are coef*n, ``const`` leaves
    are constants; ``frac`` and ``int`` take one child; ``sum`` and ``mul``
    take a list of children."""

    op: str
    children: tuple = ()
    coef: float = 0.0

    def __post_init__(self):
        if self.op not in OPS:
            raise AdditiveError(f"unknown op {self.op!r}")
        if self.op in ("frac", "int") and len(self.children) != 1:
            raise AdditiveError(f"{self.op} takes exactly one argument")
        if self.bracket_depth() > MAX_BRACKET_DEPTH:
            raise AdditiveError(f"bracket nesting exceeds {MAX_BRACKET_DEPTH}")

    def bracket_depth(self) -> int:
        inner = max((c.bracket_depth() for c in self.children), default=0)
        return inner + (1 if self.op in ("frac", "int") else 0)

    def evaluate(self, n: int, floor_convention: bool = False) -> float:
        op = self.op
        if op == "linear":
            return self.coef * n
        if op == "const":
            return self.coef
        vals = [c.evaluate(n, floor_convention) for c in self.children]
        if op == "sum":
            return math.fsum(vals)
        if op == "mul":
            return math.prod(vals)
        if op == "frac":
            return frac(vals[0], floor_convention)
        return int_part(vals[0], floor_convention)

    def phase(self, n: int, floor_convention: bool = False) -> complex:
        return e(frac(self.evaluate(n, floor_convention)))

    def to_json(self) -> dict:
        if self.op in ("linear", "const"):
            return {"op": self.op, "coef": self.coef}
        if self.op in ("frac", "int"):
            return {"op": self.op, "arg": self.children[0].to_json()}
        return {"op": self.op, "args": [c.to_json() for c in self.children]}

    @classmethod
    def from_json(cls, data) -> "BracketExpr":
        try:
            op = data["op"]
            if op in ("linear", "const"):
                return cls(op, (), float(data["coef"]))
            if op in ("frac", "int"):
                return cls(op, (cls.from_json(data["arg"]),))
            return cls(op, tuple(cls.from_json(a) for a in data["args"]))
        except (KeyError, TypeError) as exc:
            raise AdditiveError(f"malformed bracket expression: {exc}") from exc


def linear(c: float) -> BracketExpr:
    return BracketExpr("linear", (), float(c))


def const(c: float) -> BracketExpr:
    return BracketExpr("const", (), float(c))


def bracket_quadratic(alpha: float, beta: float) -> BracketExpr:
    """alpha * n * [beta * n]."""
    return BracketExpr("mul", (linear(alpha), BracketExpr("int", (linear(beta),))))


def eval_bracket_phase(expr: BracketExpr, n: int, floor_convention: bool = False) -> complex:
    return expr.phase(n, floor_convention)


# Bohr sets

@dataclass(frozen=True)
class BohrSpec:
    N: int
    S: tuple
    rho: float

    def __post_init__(self):
        if self.N < 1:
            raise AdditiveError("modulus must be positive")
        if not self.S:
            raise AdditiveError("frequency set is empty")
        if not 0 < self.rho <= 0.5:
            raise AdditiveError("radius must lie in (0, 1/2]")
        object.__setattr__(self, "S", tuple(sorted({int(s) % self.N for s in self.S})))

    def contains(self, x: int) -> bool:
        rho = to_fraction(self.rho)
        return all(abs(frac(Fraction(s * x, self.N))) <= rho for s in self.S)

    def to_json(self) -> dict:
        return {"N": self.N, "S": list(self.S), "rho": self.rho}

    @classmethod
    def from_json(cls, data) -> "BohrSpec":
        try:
            return cls(int(data["N"]), tuple(data["S"]), float(data["rho"]))
        except (KeyError, TypeError) as exc:
            raise AdditiveError(f"malformed Bohr spec: {exc}") from exc


def bohr_members(b: BohrSpec) -> list:
    """Sorted members of B(S, rho) in 0..N-1.  ||s x / N|| <= rho is checked in
    integers: min(sx mod N, N - sx mod N) <= rho N."""
    if b.N > BOHR_CAP:
        raise AdditiveCapError(f"modulus {b.N} exceeds the enumeration cap {BOHR_CAP}")
    x = np.arange(b.N, dtype=np.int64)
    ok = np.ones(b.N, dtype=bool)
    bound = to_fraction(b.rho) * b.N
    for s in b.S:
        r = (s * x) % b.N
        d = np.minimum(r, b.N - r)
        ok &= d * bound.denominator <= bound.numerator
    return [int(v) for v in np.flatnonzero(ok)]


# Freiman homomorphisms

def _close(u, v) -> bool:
    if isinstance(u, (int, Fraction)) and isinstance(v, (int, Fraction)):
        return u == v
    return abs(u - v) <= 1e-9 * max(1.0, abs(u), abs(v))


def is_freiman_hom(f: Mapping[int, object], k: int = 2) -> tuple:
    """(True, None) if sums of k elements determine sums of f-values, else
    (False, (t1, t2)) with the first violating pair of sorted k-tuples."""
    if k < 2:
        raise AdditiveError("k must be at least 2")
    elems = sorted(f)
    if math.comb(len(elems) + k - 1, k) > FREIMAN_CAP:
        raise AdditiveCapError("too many k-multisets to index")
    seen: dict = {}
    for tup in itertools.combinations_with_replacement(elems, k):
        key = sum(tup)
        val = sum(f[a] for a in tup)
        if key in seen:
            first, fv = seen[key]
            if not _close(fv, val):
                return False, (first, tup)
        else:
            seen[key] = (tup, val)
    return True, None


# Rounding and quadruple defects

def round_to_lattice(values, eps) -> np.ndarray:
    """Round each coordinate j to eps_j Z, ties toward +infinity."""
    vals = np.atleast_2d(np.asarray(values, dtype=float))
    eps = np.broadcast_to(np.asarray(eps, dtype=float), vals.shape[-1:])
    if np.any(eps <= 0):
        raise AdditiveError("lattice spacing must be positive")
    k = np.floor(vals / eps + 0.5)
    # multiply in exact decimal so 3 * 0.1 renders as 0.3
    out = np.array([[float(int(kk) * to_fraction(float(ee))) for kk, ee in zip(row, eps)] for row in k])
    return out.reshape(np.shape(values)) if np.ndim(values) < 2 else out


def additive_quadruples(h_values: Sequence[int]) -> list:
    hs = sorted(set(h_values))
    hset = set(hs)
    return [(a, b, c, a + b - c) for a in hs for b in hs for c in hs if a + b - c in hset]


def quadruple_defect(f: Mapping[int, Sequence[float]], quads) -> np.ndarray:
    """Per-coordinate max of |f(h1) + f(h2) - f(h3) - f(h4)| over the quadruples."""
    out = None
    for h1, h2, h3, h4 in quads:
        d = np.abs(np.asarray(f[h1], float) + np.asarray(f[h2], float) - np.asarray(f[h3], float) - np.asarray(f[h4], float))
        out = d if out is None else np.maximum(out, d)
    return out


# Bracket-linear models

def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, math.isqrt(n) + 1))


def next_prime(n: int) -> int:
    while not is_prime(n):
        n += 1
    return n


@dataclass(frozen=True)
class BracketLinearModel:
    """h -> sum_k a_k {b_k h / N'} + gamma, with a_k and gamma real d-vectors."""

    gamma: tuple
    terms: tuple  # ((a_k vector), b_k integer numerator)
    N_prime: int

    def __post_init__(self):
        if not is_prime(self.N_prime):
            raise AdditiveError(f"N' = {self.N_prime} is not prime")
        d = len(self.gamma)
        if any(len(a) != d for a, _ in self.terms):
            raise AdditiveError("coefficient vectors have inconsistent dimension")

    @property
    def d(self) -> int:
        return len(self.gamma)

    def check_scale(self, n: int) -> bool:
        return 100 * n <= self.N_prime <= 200 * n

    def __call__(self, h: int) -> np.ndarray:
        out = np.array(self.gamma, dtype=float)
        for a, b in self.terms:
            out = out + np.asarray(a, float) * float(frac(Fraction(b * h, self.N_prime)))
        return out


def verify_bracket_linear(model: BracketLinearModel, f: Mapping[int, Sequence[float]], eps) -> tuple:
    """(max violation per coordinate, sorted pass set) where the violation at h
    is the distance to Z of f(h) - model(h) coordinatewise."""
    eps = np.broadcast_to(np.asarray(eps, float), (model.d,))
    worst = np.zeros(model.d)
    passed = []
    for h in sorted(f):
        r = np.asarray(f[h], float) - model(h)
        v = np.abs(r - np.round(r))
        worst = np.maximum(worst, v)
        if np.all(v <= eps):
            passed.append(h)
    return worst, passed


@dataclass(frozen=True)
class SingleFrequencyFit:
    a: float
    b: int
    N_prime: int
    gamma: float
    violation: float
    optimal: tuple  # every (a, b) attaining the optimum; the fit is rarely unique

    @property
    def beta(self) -> Fraction:
        return Fraction(self.b, self.N_prime)

    def model(self) -> BracketLinearModel:
        return BracketLinearModel((self.gamma,), (((self.a,), self.b),), self.N_prime)


def _circular_center(points: np.ndarray) -> tuple:
    """For rows of points in R/Z, the centre minimising the max circular
    distance and that distance (the complement of the largest gap)."""
    p = np.sort(points - np.floor(points), axis=-1)
    gaps = np.diff(np.concatenate([p, p[..., :1] + 1], axis=-1), axis=-1)
    j = np.argmax(gaps, axis=-1)
    g = np.take_along_axis(gaps, j[..., None], -1)[..., 0]
    nxt = np.take_along_axis(p, ((j + 1) % p.shape[-1])[..., None], -1)[..., 0]
    half = (1 - g) / 2
    return nxt + half, half


def fit_single_frequency(f: Mapping[int, float], N_prime: int, a_step: float = 0.05, a_max: float = 1.0) -> SingleFrequencyFit:
    """Scan b in [0, N'), a in a_step Z within [-a_max, a_max], choosing gamma
    optimally for each; minimise the max distance to Z of the residual."""
    hs = np.array(sorted(f), dtype=np.int64)
    if len(hs) > FIT_CAP:
        raise AdditiveCapError(f"fitter is capped at |H| <= {FIT_CAP}")
    if not is_prime(N_prime):
        raise AdditiveError(f"N' = {N_prime} is not prime")
    fv = np.array([float(f[int(h)]) for h in hs])
    steps = int(round(a_max / a_step))
    grid = np.array([float(to_fraction(a_step) * j) for j in range(-steps, steps + 1)])
    bs = np.arange(N_prime, dtype=np.int64)
    r = (bs[:, None] * hs[None, :]) % N_prime
    fr = np.where(2 * r > N_prime, r - N_prime, r) / N_prime  # {b h / N'}
    results = []
    for a in grid:
        resid = fv[None, :] - a * fr
        centre, viol = _circular_center(resid)
        results.append((a, centre, viol))
    viol_all = np.stack([v for _, _, v in results])  # [a, b]
    vmin = float(viol_all.min())
    tol = 1e-12
    optimal = tuple(
        (float(grid[i]), int(b)) for i, b in zip(*np.nonzero(viol_all <= vmin + tol))
    )
    # deterministic choice among optima: smallest b, then smallest |a|, then a > 0
    a_best, b = min(optimal, key=lambda ab: (ab[1], abs(ab[0]), -ab[0]))
    i = int(np.flatnonzero(grid == a_best)[0])
    gamma = float(frac(results[i][1][b]))
    return SingleFrequencyFit(float(grid[i]), int(b), N_prime, gamma, vmin, optimal)


# Proper GAPs and dual coordinates

@dataclass(frozen=True)
class ProperGAP:
    """P = {sum ell_i n_i : |n_i| <= N_i} in Z/N'Z with frequency set S."""

    N_prime: int
    ells: tuple
    sides: tuple
    S: tuple

    def __post_init__(self):
        if len(self.ells) != len(self.sides):
            raise AdditiveError("generator and side-length counts differ")
        if math.prod(2 * n + 1 for n in self.sides) > BOHR_CAP:
            raise AdditiveCapError("GAP box too large to enumerate")

    @property
    def d(self) -> int:
        return len(self.ells)

    def phi(self, x: int) -> tuple:
        return tuple(frac(Fraction(a * x, self.N_prime)) for a in self.S)

    def box(self):
        return itertools.product(*[range(-n, n + 1) for n in self.sides])

    def element(self, coords) -> int:
        return sum(l * c for l, c in zip(self.ells, coords)) % self.N_prime

    def is_proper(self) -> bool:
        seen = set()
        for c in self.box():
            x = self.element(c)
            if x in seen:
                return False
            seen.add(x)
        return True

    def members(self) -> dict:
        return {self.element(c): c for c in self.box()}

    def radius(self) -> Fraction:
        """rho_P = max_alpha sum_i N_i |{alpha ell_i / N'}|; P lies in B(S, rho_P)."""
        return max(sum(n * abs(frac(Fraction(a * l, self.N_prime))) for l, n in zip(self.ells, self.sides)) for a in self.S)

    def certificate_rank(self) -> int:
        return rank([self.phi(l) for l in self.ells])

    def dual_vectors(self) -> tuple:
        """u_i with u_i . Phi(ell_j) = delta_ij: U = (M^T M)^{-1} M^T, M = [Phi(ell_j)] as columns."""
        if self.certificate_rank() != self.d:
            raise AdditiveError("independence certificate fails: Phi(ell_i) are dependent")
        mt = tuple(self.phi(l) for l in self.ells)  # rows = Phi(ell_j)
        gram = matmul(mt, transpose(mt))
        return matmul(inverse(gram), mt)

    def to_json(self) -> dict:
        return {"N_prime": self.N_prime, "ells": list(self.ells), "sides": list(self.sides), "S": list(self.S)}

    @classmethod
    def from_json(cls, data) -> "ProperGAP":
        try:
            return cls(int(data["N_prime"]), tuple(data["ells"]), tuple(data["sides"]), tuple(data["S"]))
        except (KeyError, TypeError) as exc:
            raise AdditiveError(f"malformed GAP: {exc}") from exc


def gap_dual_coordinates(p: ProperGAP, n: int):
    """n_i = u_i . Phi(n) for members of P; None for points of B(S, rho_P)
    outside P.  Raises for n outside B(S, rho_P)."""
    u = p.dual_vectors()
    rho = p.radius()
    ph = p.phi(n)
    if any(abs(v) > rho for v in ph):
        raise AdditiveError(f"{n} lies outside the Bohr set B(S, {rho})")
    coords = tuple(sum((ui * v for ui, v in zip(row, ph)), Fraction(0)) for row in u)
    if any(c.denominator != 1 for c in coords):
        return None
    ints = tuple(int(c) for c in coords)
    if any(abs(c) > s for c, s in zip(ints, p.sides)) or p.element(ints) != n % p.N_prime:
        return None
    return ints


@dataclass(frozen=True)
class FreimanLinearForm:
    """f(n) = constant + sum_alpha c_alpha {alpha n / N'} on P."""

    constant: object
    coefficients: tuple  # (alpha, c_alpha)
    N_prime: int

    def __call__(self, n: int):
        return self.constant + sum(c * frac(Fraction(a * n, self.N_prime)) for a, c in self.coefficients)


def freiman_linear_form(p: ProperGAP, f: Mapping[int, object]) -> FreimanLinearForm:
    """Bracket-linear form of a Freiman homomorphism on P from
    f(sum ell_i n_i) - f(0) = sum n_i (f(ell_i) - f(0))."""
    u = p.dual_vectors()
    f0 = to_fraction(f[0])
    diffs = [to_fraction(f[l % p.N_prime]) - f0 for l in p.ells]
    coeffs = tuple((a, sum((d * u[i][j] for i, d in enumerate(diffs)), Fraction(0))) for j, a in enumerate(p.S))
    return FreimanLinearForm(f0, coeffs, p.N_prime)
