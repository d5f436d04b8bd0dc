"""Gowers uniformity norms, box norms, correlations, major-arc search, additive
energy and the Cauchy-Schwarz quadruple statistic.

Signals live on Z/NZ (positions 0..N-1) or on the interval [N] = {1..N}
(array slot n-1 holds f(n)).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .rng import SplitMix64

MAX_S = 6
NAIVE_WORK_CAP = 2 ** 28  # modulus^s for the collapsed enumeration
BRUTE_WORK_CAP = 2 ** 22  # modulus^(s+1) for full enumeration
FFT_CAP = 2 ** 20
BLOCK = 2 ** 22


class GowersError(ValueError):
    pass


class GowersCapError(GowersError):
    pass


def e(x):
    return np.exp(2j * np.pi * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Signal:
    values: np.ndarray
    domain: str = "cyclic"

    def __post_init__(self):
        if self.domain not in ("cyclic", "interval"):
            raise GowersError(f"unknown domain {self.domain!r}")
        v = np.asarray(self.values, dtype=complex).reshape(-1)
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return len(self.values)

    @property
    def bound(self) -> float:
        return float(np.max(np.abs(self.values))) if self.N else 0.0

    @property
    def one_bounded(self) -> bool:
        return self.bound <= 1 + 1e-12

    def positions(self) -> np.ndarray:
        return np.arange(self.N) if self.domain == "cyclic" else np.arange(1, self.N + 1)


@dataclass(frozen=True)
class GowersResult:
    s: int
    value: float
    method: str
    N_tilde: int | None = None
    power_mean: float = 0.0


def tree_sum(x: np.ndarray) -> complex:
    """Sum in fixed order: repeated reduction of consecutive groups of 8."""
    x = np.asarray(x).reshape(-1)
    if x.size == 0:
        return 0.0
    while x.size > 1:
        pad = (-x.size) % 8
        if pad:
            x = np.concatenate([x, np.zeros(pad, dtype=x.dtype)])
        x = x.reshape(-1, 8).sum(axis=1)
    return x[0]


def _check_s(s: int):
    if s < 1:
        raise GowersError("s must be at least 1")
    if s > MAX_S:
        raise GowersCapError(f"s = {s} exceeds cap {MAX_S}")


def _shift_index(m: int) -> np.ndarray:
    return (np.arange(m)[None, :] + np.arange(m)[:, None]) % m  # [h, x] -> x + h


def _naive_power(f: np.ndarray, s: int) -> float:
    """E_{x,h_1..h_s} Delta f(x), with the last average done in closed form:
    E_{x,h_s} F(x) conj F(x+h_s) = |E_x F(x)|^2."""
    m = len(f)
    if s == 1:
        return float(abs(f.mean()) ** 2)
    idx = _shift_index(m)
    outer = s - 2  # derivatives taken in the Python loop
    total = []
    for hs in itertools.product(range(m), repeat=outer):
        d = f
        for h in hs:
            d = d * np.conj(np.roll(d, -h))
        # one vectorised derivative over h, then |E_x|^2
        dd = d[None, :] * np.conj(d[idx])  # [h, x]
        total.append(tree_sum(np.abs(dd.mean(axis=1)) ** 2) / m)
    return float(np.real(tree_sum(np.array(total)))) / (m ** outer)


def _brute_power(f: np.ndarray, s: int) -> complex:
    """Full enumeration over (x, h_1..h_s) of the multiplicative derivative."""
    m = len(f)
    grids = np.meshgrid(*([np.arange(m)] * (s + 1)), indexing="ij")
    x, hs = grids[0], grids[1:]
    acc = np.ones(x.shape, dtype=complex)
    for omega in itertools.product((0, 1), repeat=s):
        pos = x.copy()
        for w, h in zip(omega, hs):
            if w:
                pos = pos + h
        val = f[pos % m]
        acc *= np.conj(val) if sum(omega) % 2 else val
    return acc.mean()


def _u2_power_batch(rows: np.ndarray) -> np.ndarray:
    """||row||_{U^2}^4 for each row: sum_k |hat f(k)|^4 with hat f = E_n f e(-kn/N)."""
    m = rows.shape[-1]
    hat = np.fft.fft(rows, axis=-1) / m
    return np.sum(np.abs(hat) ** 4, axis=-1)


def _recursive_power(f: np.ndarray, s: int) -> float:
    m = len(f)
    if s == 1:
        return float(abs(f.mean()) ** 2)
    if s == 2:
        return float(_u2_power_batch(f[None, :])[0])
    outer = s - 3
    per_prefix = []
    block = max(1, BLOCK // m)
    for hs in itertools.product(range(m), repeat=outer):
        d = f
        for h in hs:
            d = d * np.conj(np.roll(d, -h))
        vals = []
        for start in range(0, m, block):
            h = np.arange(start, min(m, start + block))
            idx = (np.arange(m)[None, :] + h[:, None]) % m
            rows = d[None, :] * np.conj(d[idx])
            vals.append(_u2_power_batch(rows))
        per_prefix.append(tree_sum(np.concatenate(vals)) / m)
    return float(np.real(tree_sum(np.array(per_prefix)))) / (m ** outer)


def _power(f: np.ndarray, s: int, method: str) -> float:
    m = len(f)
    if method == "naive":
        if m ** s > NAIVE_WORK_CAP:
            raise GowersCapError(f"naive enumeration at modulus {m}, s={s} exceeds the work cap")
        return _naive_power(f, s)
    if method == "brute":
        if m ** (s + 1) > BRUTE_WORK_CAP:
            raise GowersCapError(f"brute enumeration at modulus {m}, s={s} exceeds the work cap")
        return float(np.real(_brute_power(f, s)))
    if method in ("recursive", "recursive-fft", "fft"):
        if m > FFT_CAP:
            raise GowersCapError(f"modulus {m} exceeds cap {FFT_CAP}")
        if m ** max(s - 2, 0) * m > 2 ** 34:
            raise GowersCapError(f"recursive evaluation at modulus {m}, s={s} exceeds the work cap")
        return _recursive_power(f, s)
    raise GowersError(f"unknown method {method!r}")


def _root(p: float, s: int) -> float:
    return max(p, 0.0) ** (1.0 / 2 ** s)


def gowers_norm_cyclic(f, s: int, method: str = "recursive") -> GowersResult:
    _check_s(s)
    vals = f.values if isinstance(f, Signal) else np.asarray(f, dtype=complex)
    p = _power(vals, s, method)
    return GowersResult(s, _root(p, s), "recursive-fft" if method in ("recursive", "fft") else method, None, p)


def default_modulus(n: int, s: int) -> int:
    return 1 << math.ceil(math.log2(2 ** s * n))


def gowers_norm_interval(f, s: int, method: str = "recursive", N_tilde: int | None = None) -> GowersResult:
    _check_s(s)
    vals = f.values if isinstance(f, Signal) else np.asarray(f, dtype=complex)
    n = len(vals)
    mt = default_modulus(n, s) if N_tilde is None else int(N_tilde)
    if mt < 2 ** s * n:
        raise GowersError(f"N_tilde = {mt} is below 2^s N = {2 ** s * n}")
    ext = np.zeros(mt, dtype=complex)
    ext[:n] = vals
    ind = np.zeros(mt, dtype=complex)
    ind[:n] = 1
    p = _power(ext, s, method)
    q = _power(ind, s, method)
    name = "recursive-fft" if method in ("recursive", "fft") else method
    return GowersResult(s, _root(p, s) / _root(q, s), name, mt, p / q)


def gowers_norm(f: Signal, s: int, method: str = "recursive", N_tilde: int | None = None) -> GowersResult:
    if f.domain == "cyclic":
        return gowers_norm_cyclic(f, s, method)
    return gowers_norm_interval(f, s, method, N_tilde)


# Box norm

def box_norm(phi: np.ndarray) -> float:
    """box^4 = E_{n,n',m,m'} phi(n,m) conj phi(n,m') conj phi(n',m) phi(n',m')."""
    phi = np.asarray(phi, dtype=complex)
    if phi.ndim != 2:
        raise GowersError("box norm needs a matrix")
    r, c = phi.shape
    gram = phi.T @ np.conj(phi)  # [m, m'] = sum_n phi(n,m) conj phi(n,m')
    p = float(np.sum(np.abs(gram) ** 2)) / (r * r * c * c)
    return p ** 0.25


def box_norm_fourth(phi: np.ndarray) -> float:
    phi = np.asarray(phi, dtype=complex)
    r, c = phi.shape
    gram = phi.T @ np.conj(phi)
    return float(np.sum(np.abs(gram) ** 2)) / (r * r * c * c)


@dataclass
class BoxChain:
    lhs: float
    rhs: float
    chain: list

    @property
    def holds(self) -> bool:
        tol = 1e-12
        return all(a <= b * (1 + tol) + tol for a, b in zip(self.chain, self.chain[1:]))


def box_inequality_check(a: np.ndarray, b: np.ndarray, phi: np.ndarray) -> BoxChain:
    """The chain |E a b phi|^4 <= (E_n|E_m b phi|)^4 <= (E_n|E_m b phi|^2)^2
    <= (E_{m,m'}|E_n phi conj phi'|)^2 <= E_{m,m'}|E_n phi conj phi'|^2 = box^4."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    r, c = phi.shape
    if a.shape != (r,) or b.shape != (c,):
        raise GowersError("shape mismatch between a, b and phi")
    l0 = abs(np.mean(a[:, None] * b[None, :] * phi)) ** 4
    inner = np.mean(b[None, :] * phi, axis=1)
    l1 = np.mean(np.abs(inner)) ** 4
    l2 = np.mean(np.abs(inner) ** 2) ** 2
    gram = (phi.T @ np.conj(phi)) / r
    l3 = np.mean(np.abs(gram)) ** 2
    l4 = np.mean(np.abs(gram) ** 2)
    chain = [float(l0), float(l1), float(l2), float(l3), float(l4)]
    return BoxChain(chain[0], chain[-1], chain)


# Correlation and major arcs

def correlation(f, chi) -> float:
    """max over output coordinates of |E_n f(n) conj chi_i(n)|; chi has shape (N,) or (N, D)."""
    fv = f.values if isinstance(f, Signal) else np.asarray(f, dtype=complex)
    cv = chi.values if isinstance(chi, Signal) else np.asarray(chi, dtype=complex)
    if cv.ndim == 1:
        cv = cv[:, None]
    if cv.shape[0] != len(fv):
        raise GowersError("length mismatch")
    return float(np.max(np.abs(np.mean(fv[:, None] * np.conj(cv), axis=0))))


@dataclass(frozen=True)
class MajorArc:
    theta: float
    score: float
    grid_size: int


def major_arc_search(g, q: int, T: float) -> MajorArc:
    """Grid maximiser of |E_{n in [N]} e(theta n) g(n)| over ||q theta|| <= T/N,
    grid spacing 1/(4N); among (numerical) ties the smallest |theta| wins, then
    the smaller theta."""
    gv = g.values if isinstance(g, Signal) else np.asarray(g, dtype=complex)
    n = len(gv)
    if q < 1:
        raise GowersError("q must be positive")
    if T * q > n:
        raise GowersError("precondition violated: T q > N")
    res = 4 * n
    js = np.arange(res)
    theta = np.where(js * 2 > res, js - res, js) / res  # in (-1/2, 1/2]
    qt = q * theta
    dist = np.abs(qt - np.round(qt))
    keep = dist <= T / n + 1e-15
    if not np.any(keep):
        raise GowersError("empty grid")
    cand = theta[keep]
    pos = np.arange(1, n + 1)
    scores = np.abs(np.exp(2j * np.pi * np.outer(cand, pos)) @ gv) / n
    best = scores.max()
    tied = np.flatnonzero(scores >= best - 1e-12 * max(1.0, best))
    order = sorted(tied, key=lambda i: (abs(cand[i]), cand[i]))
    i = order[0]
    return MajorArc(float(cand[i]), float(scores[i]), int(keep.sum()))


# Additive energy

def _representation_counts(a: Sequence[int], b: Sequence[int]) -> tuple:
    a, b = np.array(sorted(set(a)), dtype=np.int64), np.array(sorted(set(b)), dtype=np.int64)
    if a.size == 0 or b.size == 0:
        return 0, np.zeros(0, dtype=np.int64)
    lo_a, lo_b = int(a[0]), int(b[0])
    ha = np.zeros(int(a[-1]) - lo_a + 1, dtype=np.int64)
    hb = np.zeros(int(b[-1]) - lo_b + 1, dtype=np.int64)
    ha[a - lo_a] = 1
    hb[b - lo_b] = 1
    if ha.size * hb.size <= 2 ** 26:
        r = np.convolve(ha, hb)
    else:
        r = np.rint(fftconvolve(ha.astype(float), hb.astype(float))).astype(np.int64)
    return lo_a + lo_b, r


def additive_energy(a1: Iterable[int], a2: Iterable[int] | None = None, a3: Iterable[int] | None = None, a4: Iterable[int] | None = None) -> int:
    """#{x1 + x2 = x3 + x4} over A1 x A2 x A3 x A4 (all equal to A1 by default)."""
    a1 = list(a1)
    a2 = a1 if a2 is None else list(a2)
    a3 = a1 if a3 is None else list(a3)
    a4 = a1 if a4 is None else list(a4)
    for s_ in (a1, a2, a3, a4):
        if len(set(s_)) > 10_000:
            raise GowersCapError("sets are capped at 10^4 elements")
    off12, r12 = _representation_counts(a1, a2)
    off34, r34 = _representation_counts(a3, a4)
    if r12.size == 0 or r34.size == 0:
        return 0
    lo = max(off12, off34)
    hi = min(off12 + r12.size, off34 + r34.size)
    if hi <= lo:
        return 0
    x = r12[lo - off12: hi - off12]
    y = r34[lo - off34: hi - off34]
    return int(sum(int(u) * int(v) for u, v in zip(x, y) if u and v))


# Cauchy-Schwarz quadruple statistic

def _next_prime(n: int) -> int:
    def is_prime(k):
        if k < 2:
            return False
        return all(k % p for p in range(2, int(k ** 0.5) + 1))

    while not is_prime(n):
        n += 1
    return n


def _chi_table(chi, n: int, x_lo: int, x_hi: int) -> np.ndarray:
    """T[h-1, x - x_lo] = chi_h(x) for h in [N], x in [x_lo, x_hi]."""
    xs = np.arange(x_lo, x_hi + 1)
    if callable(chi):
        h, x = np.meshgrid(np.arange(1, n + 1), xs, indexing="ij")
        return np.asarray(np.broadcast_to(chi(h, x), h.shape), dtype=complex)
    arr = np.asarray(chi, dtype=complex)
    if arr.shape != (n, n):
        raise GowersError("chi array must have shape (N, N)")
    out = np.zeros((n, xs.size), dtype=complex)
    for j, x in enumerate(xs):
        if 1 <= x <= n:
            out[:, j] = arr[:, x - 1]
    return out


@dataclass
class QuadrupleStatistic:
    lhs: float
    rhs: float
    N_tilde: int
    steps: dict = field(default_factory=dict)

    def checks(self, tol: float = 1e-9) -> dict:
        s = self.steps
        rel = lambda a, b: abs(a - b) <= tol * max(1.0, abs(a), abs(b))
        return {
            "cauchy_schwarz_h": s["cs_lower"] <= s["S1"] * (1 + tol) + tol ** 2,
            "expansion_identity": rel(s["S1"], s["S1_expanded"]),
            "holder_k": s["S1"] ** 4 <= s["S2"] * (1 + tol) + tol ** 2,
            "box_step": s["S2"] <= s["S3"] * (1 + tol) + tol ** 2,
            "reparameterization": rel(s["S3"], s["S4"]),
            "restriction_scaling": bool(rel(s["S4"], s["S4_from_S5"])),
        }


def cs_quadruple_statistic(f1, f2, chi, theta: float = 0.0, N_tilde: int | None = None) -> QuadrupleStatistic:
    """lhs = E_{h in [N]} |E_{n in [N]} f2(n) Delta_h f1(n) conj chi_h(n)| and
    rhs = E_{h1+h2=h3+h4 in [N]} |E_{n in [N]} chi_h1(n) chi_h2(n+d) conj chi_h3(n) conj chi_h4(n+d) e(theta n)|,
    d = h1 - h4, together with every intermediate quantity of the
    Cauchy-Schwarz argument on Z/N~Z (N~ prime in [4N, 8N]).

    f1 is given on [N] (zero beyond), on [2N], or as a callable on integers;
    chi is a callable chi(h, n) on integer arrays or an (N, N) table
    chi[h-1, n-1] (zero off [N])."""
    f2 = np.asarray(f2.values if isinstance(f2, Signal) else f2, dtype=complex)
    n = len(f2)
    if callable(f1):
        f1z = np.asarray(f1(np.arange(1, 2 * n + 1)), dtype=complex)
    else:
        f1z = np.asarray(f1.values if isinstance(f1, Signal) else f1, dtype=complex)
        if len(f1z) == n:
            f1z = np.concatenate([f1z, np.zeros(n)])
    if len(f1z) != 2 * n:
        raise GowersError("f1 must give values on [N] or on [2N]")
    f1 = f1z[:n]
    if n > 64:
        raise GowersCapError("quadruple statistic is capped at N <= 64")
    mt = _next_prime(4 * n) if N_tilde is None else int(N_tilde)
    if not 4 * n <= mt <= 8 * n:
        raise GowersError("N_tilde must lie in [4N, 8N]")
    wide = _chi_table(chi, n, 1 - n, 2 * n)  # chi_h(x) for x in (-N, 2N]
    base = wide[:, n:2 * n]  # x in [N]
    steps = {}

    # lhs on [N]; Delta_h f1 reads f1 on [2N]
    lhs_terms = []
    for h in range(1, n + 1):
        d1 = f1 * np.conj(f1z[h:h + n])
        lhs_terms.append(abs(np.mean(f2 * d1 * np.conj(base[h - 1]))))
    lhs = float(np.mean(lhs_terms))

    # embed in Z/N~Z: positions 1..N, chi truncated and zero for h outside [N]
    F1 = np.zeros(mt, dtype=complex)
    F2 = np.zeros(mt, dtype=complex)
    F1[1:2 * n + 1], F2[1:n + 1] = f1z, f2
    C = np.zeros((mt, mt), dtype=complex)  # C[h, x]
    C[1:n + 1, 1:n + 1] = base
    idx = np.arange(mt)

    A = np.array([np.mean(F2 * F1 * np.conj(np.roll(F1, -h)) * np.conj(C[h])) for h in range(mt)])
    steps["cs_lower"] = float(((n / mt) ** 2 * lhs) ** 2)
    steps["S1"] = float(np.mean(np.abs(A) ** 2))

    G = F2 * F1
    # Phi_k(n, m) = Delta_k conj chi_{m-n}(n) = conj C[m-n, n] C[m-n, n+k]
    hmat = (idx[None, :] - idx[:, None]) % mt  # [n, m] -> m - n
    expanded = 0.0
    s2_terms, s3_terms = [], []
    for k in range(mt):
        a = G * np.conj(np.roll(G, -k))
        b = np.conj(F1) * np.roll(F1, -k)
        phi = np.conj(C[hmat, idx[:, None]]) * C[hmat, (idx[:, None] + k) % mt]
        t = np.mean(a[:, None] * b[None, :] * phi)
        expanded += t
        s2_terms.append(abs(t) ** 4)
        s3_terms.append(box_norm_fourth(phi))
    steps["S1_expanded"] = float(np.real(expanded / mt))
    steps["S2"] = float(np.mean(s2_terms))
    steps["S3"] = float(np.mean(s3_terms))

    # S4 = E_{h1,h3,h4 in Z/N~Z} |E_n G(n)|^2, h2 = h3 + h4 - h1, d = h1 - h4
    s4 = 0.0
    rows = np.flatnonzero(np.any(C != 0, axis=1))
    for h1 in rows:
        for h4 in rows:
            d = (h1 - h4) % mt
            h3 = idx
            h2 = (h3 + h4 - h1) % mt
            x = C[h1][None, :] * np.conj(C[h4][(idx + d) % mt])[None, :]
            y = np.conj(C[h3, :]) * C[h2][:, (idx + d) % mt]
            s4 += float(np.sum(np.abs(np.mean(x * y, axis=1)) ** 2))
    steps["S4"] = s4 / mt ** 3

    # restriction to quadruples in [N]: explicit enumeration
    quads = 0
    s5 = 0.0
    rhs_terms = []
    pos = np.arange(1, n + 1)
    phase = np.exp(2j * np.pi * theta * pos)
    for h1 in range(1, n + 1):
        for h2 in range(1, n + 1):
            for h3 in range(1, n + 1):
                h4 = h1 + h2 - h3
                if not 1 <= h4 <= n:
                    continue
                d = h1 - h4
                quads += 1
                shifted = pos + d
                ok = (shifted >= 1) & (shifted <= n)
                w2 = wide[h2 - 1, shifted - (1 - n)]
                w4 = wide[h4 - 1, shifted - (1 - n)]
                core = base[h1 - 1] * np.conj(base[h3 - 1])
                s5 += abs(np.mean(core * w2 * np.conj(w4) * ok)) ** 2
                rhs_terms.append(abs(np.mean(core * w2 * np.conj(w4) * phase)))
    steps["S5"] = float(s5 / quads)
    steps["S4_from_S5"] = float(quads / mt ** 3 * (n / mt) ** 2 * steps["S5"])
    steps["quadruples"] = quads
    rhs = float(np.mean(rhs_terms))
    return QuadrupleStatistic(lhs, rhs, mt, steps)


# Converse harness

@dataclass
class ConverseRecord:
    correlation: float
    norm: float
    s: int
    asserted: bool


def converse_harness(f: Signal, chi, s: int, phase_numerators: Sequence[int] | None = None, method: str = "recursive") -> ConverseRecord:
    """Correlation of f with chi and ||f||_{U^{s+1}}.  When chi is declared a
    polynomial phase e(sum a_i n^i / N) of degree <= s (``phase_numerators``)
    and the correlation is 1, the norm must be 1."""
    corr = correlation(f, chi)
    norm = gowers_norm(f, s + 1, method).value
    asserted = False
    if phase_numerators is not None and len(phase_numerators) <= s + 1 and f.domain == "cyclic":
        if abs(corr - 1) <= 1e-9:
            asserted = True
            if abs(norm - 1) > 1e-9:
                raise GowersError(f"converse direction fails: correlation 1 but norm {norm}")
    return ConverseRecord(corr, norm, s, asserted)


# Signal construction

def poly_phase(coeffs: Sequence, n_points: Sequence[int]) -> np.ndarray:
    """e(sum_i c_i n^i), reducing the phase mod 1 in exact arithmetic."""
    cs = [Fraction(str(c)) if not isinstance(c, Fraction) else c for c in coeffs]
    out = []
    for n in n_points:
        ph = sum((c * n ** i for i, c in enumerate(cs)), Fraction(0))
        ph -= math.floor(ph)
        out.append(float(ph))
    return e(np.array(out))


def random_signal(n: int, seed: int, kind: str = "pm1") -> np.ndarray:
    rng = SplitMix64(seed)
    u = rng.uniform_array(n)
    if kind == "pm1":
        return np.where(u < 0.5, 1.0, -1.0).astype(complex)
    if kind == "unimodular":
        return e(u)
    if kind == "disk":
        r = np.sqrt(rng.uniform_array(n))
        return r * e(u)
    raise GowersError(f"unknown random kind {kind!r}")


def signal_from_spec(spec: dict) -> Signal:
    """Signal JSON: explicit values, or a generator family with a seed."""
    try:
        domain = spec.get("domain", "cyclic")
        n = int(spec["N"])
        if "values" in spec:
            vals = np.array([complex(float(re), float(im)) for re, im in spec["values"]])
            if len(vals) != n:
                raise GowersError("values length does not match N")
            return Signal(vals, domain)
        family = spec["family"]
    except (KeyError, TypeError) as exc:
        raise GowersError(f"malformed signal spec: {exc}") from exc
    pts = np.arange(n) if domain == "cyclic" else np.arange(1, n + 1)
    if family == "poly-phase":
        if "numerators" in spec:
            coeffs = [Fraction(int(a), n) for a in spec["numerators"]]
        else:
            coeffs = spec["coeffs"]
        return Signal(poly_phase(coeffs, [int(p) for p in pts]), domain)
    if family == "bracket":
        from .additive import BracketExpr, bracket_quadratic

        if "expr" in spec:
            expr = BracketExpr.from_json(spec["expr"])
        else:
            expr = bracket_quadratic(spec["alpha"], spec["beta"])
        return Signal(np.array([expr.phase(int(p)) for p in pts]), domain)
    if family == "ap-indicator":
        start, step, length = int(spec["start"]), int(spec["step"]), int(spec["length"])
        members = {start + step * j for j in range(length)}
        if domain == "cyclic":
            members = {m % n for m in members}
        return Signal(np.array([1.0 if int(p) in members else 0.0 for p in pts]), domain)
    if family == "random":
        return Signal(random_signal(n, int(spec.get("seed", 0)), spec.get("kind", "pm1")), domain)
    raise GowersError(f"unknown signal family {family!r}")
