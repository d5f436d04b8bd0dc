"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run directly with ``python3 tests/test_acceptance.py`` or through pytest; the
per-criterion summary is printed at the end of the session.
"""

import functools
import math
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from nilfourier.additive import (
    BohrSpec,
    ProperGAP,
    bohr_members,
    bracket_quadratic,
    gap_dual_coordinates,
    is_freiman_hom,
)
from nilfourier.filtration import Filtration, Subalgebra, degree_rank_from_degree, validate_filtration
from nilfourier.gowers import (
    Signal,
    additive_energy,
    box_inequality_check,
    box_norm_fourth,
    correlation,
    cs_quadruple_statistic,
    gowers_norm_cyclic,
    gowers_norm_interval,
    poly_phase,
    random_signal,
)
from nilfourier.lie import GroupElement, abelian, bch_product, coords_second_kind, free_three_step, from_second_kind, heisenberg
from nilfourier.nilmanifold import (
    VerticalCharacter,
    eval_nilsequence,
    heisenberg_manifold,
    make_nilcharacter,
    metric_upper_raw,
    partition_of_unity,
    torus,
    vertical_phase_function,
)
from nilfourier.polyseq import (
    HorizontalCharacter,
    PolySequence,
    eval_graded,
    factor_by_characters,
    from_first_kind,
    from_function,
    graded_taylor,
    pointwise_product,
    shift,
    taylor_coefficient,
)
from nilfourier.rng import SplitMix64, derive
from nilfourier.universal import GeneratorSpec, SemidirectGroup, build_quotient, build_universal, rho_power, semidirect_filtration
from generators import FILTRATIONS, degree_rank, random_in, random_sequence
from oracles import bch_oracle, bohr_brute, box_fourth_brute, energy_brute, freiman_brute, witt_dimension

ROOT = Path(__file__).resolve().parents[1]
SUITE_START = time.perf_counter()
RESULTS = {}

# Naive-oracle value of ||e(alpha n [beta n])||_{U^3[64]} (N~ = 512),
# computed before the main build and frozen here.
U3_THRESHOLD_N64 = 0.8753176439282725
ALPHA, BETA = 0.414213562373, 0.732050807568


def criterion(number, title, limit_s):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            start = time.perf_counter()
            detail = ""
            try:
                detail = fn(*args, **kwargs) or ""
                elapsed = time.perf_counter() - start
                assert elapsed < limit_s, f"runtime {elapsed:.1f} s exceeds {limit_s} s"
            except BaseException as exc:
                elapsed = time.perf_counter() - start
                RESULTS[number] = f"criterion {number:2d} FAIL  {title} ({elapsed:.1f} s): {exc}".splitlines()[0]
                print(RESULTS[number])
                raise
            RESULTS[number] = f"criterion {number:2d} PASS  {title} ({elapsed:.1f} s){': ' + detail if detail else ''}"
            print(RESULTS[number])

        return run

    return wrap


def _rat(rng, num=9, den=6):
    return Fraction(rng.integer(-num, num), rng.integer(1, den))


@criterion(1, "BCH exactness and associativity", 10)
def test_criterion_01_bch():
    rng = SplitMix64(101)
    for alg in (abelian(3), heisenberg(), free_three_step()):
        for _ in range(200):
            x, y, z = (tuple(_rat(rng) for _ in range(alg.dim)) for _ in range(3))
            gx, gy, gz = (GroupElement.exp(alg, v) for v in (x, y, z))
            assert bch_product(gx, gy).coords == bch_oracle(alg.bracket, x, y, alg.step)
            assert ((gx * gy) * gz) == (gx * (gy * gz))


@criterion(2, "naive vs recursive-FFT Gowers norms", 60)
def test_criterion_02_gowers_methods():
    worst = 0.0
    for n in (8, 16, 32, 64):
        for seed in range(50):
            f = random_signal(n, derive(2, n, seed), ("pm1", "unimodular", "disk")[seed % 3])
            for s in (2, 3, 4):
                a = gowers_norm_cyclic(f, s, "naive").value
                b = gowers_norm_cyclic(f, s, "recursive").value
                worst = max(worst, abs(a - b))
    assert worst <= 1e-9
    return f"max difference {worst:.2e}"


@criterion(3, "norm axioms and identities", 60)
def test_criterion_03_norm_identities():
    rng = SplitMix64(3)
    for n in (8, 16, 32, 64):
        for s in (1, 2, 3, 4):
            assert abs(gowers_norm_cyclic(np.ones(n), s).value - 1) <= 1e-12
    for n in (16, 31, 64):
        for s in (1, 2, 3):
            coeffs = [Fraction(rng.integer(0, n - 1), n) for _ in range(s + 1)]
            p = poly_phase(coeffs, range(n))
            method = "naive" if n ** (s + 1) <= 2 ** 24 else "recursive"
            assert abs(gowers_norm_cyclic(p, s + 1, method).value - 1) <= 1e-9
            assert abs(gowers_norm_cyclic(p, s + 1, "recursive").value - 1) <= 1e-9
    for seed in range(50):
        f = random_signal(32, derive(3, seed), "disk")
        u = [gowers_norm_cyclic(f, s).value for s in (2, 3, 4)]
        assert u[0] <= u[1] + 1e-12 and u[1] <= u[2] + 1e-12
    for seed in range(10):
        n = 8 + 4 * seed
        f = random_signal(n, derive(33, seed), "disk")
        for s in (2, 3):
            base = gowers_norm_interval(f, s)
            other = gowers_norm_interval(f, s, N_tilde=base.N_tilde + 17)
            assert abs(base.value - other.value) <= 1e-9


@criterion(4, "box-norm inequality and exact box norm", 30)
def test_criterion_04_box_norm():
    rng = SplitMix64(4)
    for i in range(100):
        a = random_signal(16, derive(4, i, 0), "disk")
        b = random_signal(16, derive(4, i, 1), "disk")
        phi = random_signal(256, derive(4, i, 2), "disk").reshape(16, 16)
        chain = box_inequality_check(a, b, phi)
        assert chain.holds and chain.lhs <= chain.rhs
    units = [1, -1, 1j, -1j]
    for _ in range(5):
        phi = [[complex(units[rng.integer(0, 3)]) for _ in range(8)] for _ in range(8)]
        brute = box_fourth_brute(phi)
        assert brute.imag == 0 and box_norm_fourth(np.array(phi)) == brute.real


@criterion(5, "Cauchy-Schwarz quadruple chain", 120)
def test_criterion_05_cs_chain():
    n = 32
    one = lambda h, x: np.ones(np.broadcast(h, x).shape)
    trivial = cs_quadruple_statistic(lambda x: np.ones(len(x)), np.ones(n), one)
    assert abs(trivial.lhs - 1) <= 1e-12 and abs(trivial.rhs - 1) <= 1e-12
    assert all(trivial.checks().values())
    for fam in range(20):
        rng = SplitMix64(derive(5, fam))
        f1 = random_signal(2 * n, rng.next_u64(), "disk")
        f2 = random_signal(n, rng.next_u64(), "unimodular")
        chi = random_signal(n * n, rng.next_u64(), "unimodular").reshape(n, n)
        theta = rng.integer(0, 4 * n - 1) / (4 * n)
        stat = cs_quadruple_statistic(f1, f2, chi, theta)
        failed = [k for k, ok in stat.checks().items() if not ok]
        assert not failed, f"family {fam}: {failed}"


@criterion(6, "Taylor machinery", 120)
def test_criterion_06_taylor():
    for name in sorted(FILTRATIONS):
        f = FILTRATIONS[name]()
        fdr = degree_rank(f)
        rng = SplitMix64(derive(6, len(name)))
        for _ in range(50):
            g = random_sequence(f, rng)
            alpha = graded_taylor(g, f)
            for n in range(-20, 21):
                assert eval_graded(f.algebra, alpha, n) == g.eval(n)
        for _ in range(100):
            g, h = random_sequence(f, rng, degree_rank=fdr), random_sequence(f, rng, degree_rank=fdr)
            gh = pointwise_product(g, h)
            k = rng.integer(-10, 10)
            for i in (1, 2, 3):
                assert taylor_coefficient(gh, i, fdr) == taylor_coefficient(g, i, fdr) + taylor_coefficient(h, i, fdr)
                assert taylor_coefficient(shift(g, k), i, fdr) == taylor_coefficient(g, i, fdr)


def _factor_instances():
    r1 = abelian(1)
    yield (PolySequence(r1, {1: GroupElement(r1, (Fraction("0.2503"),))}), [HorizontalCharacter(1, (4,))], 100, 4,
           degree_rank_from_degree(Filtration.degree(r1, [Subalgebra.full(r1)])))
    rng = SplitMix64(7)
    h = heisenberg()
    fh = degree_rank_from_degree(Filtration.degree(h, [Subalgebra.full(h), Subalgebra.coordinate(h, [2])]))
    r2 = abelian(2)
    f2 = degree_rank_from_degree(Filtration.degree(r2, [Subalgebra.full(r2)]))
    height, n = 4, 100
    for idx in range(29):
        alg, f = ((r1, degree_rank_from_degree(Filtration.degree(r1, [Subalgebra.full(r1)]))), (r2, f2), (h, fh))[idx % 3]
        horiz = 1 if alg.dim == 1 else 2
        count = rng.integer(1, horiz)
        chars = []
        while len(chars) < count:
            k = tuple(rng.integer(-height, height) for _ in range(horiz)) + (0,) * (alg.dim - horiz)
            if any(k) and all(k[0] * c.k[1] != k[1] * c.k[0] for c in chars if horiz == 2) and (horiz == 2 or not chars):
                chars.append(HorizontalCharacter(1, k))
        # w with k_j . w = m_j + t_j, |t_j| <= 1/100 <= height / N
        kmat = [[Fraction(a) for a in c.k[:horiz]] for c in chars]
        targets = [Fraction(rng.integer(-5, 5)) + Fraction(rng.integer(-10, 10), 1000) for _ in chars]
        if len(chars) == horiz:
            if horiz == 2:
                det = kmat[0][0] * kmat[1][1] - kmat[0][1] * kmat[1][0]
                w = [(targets[0] * kmat[1][1] - targets[1] * kmat[0][1]) / det, (kmat[0][0] * targets[1] - kmat[1][0] * targets[0]) / det]
            else:
                w = [targets[0] / kmat[0][0]]
        else:
            k = kmat[0]
            nrm = sum(a * a for a in k)
            perp = [-k[1], k[0]] if horiz == 2 else [0]
            lam = _rat(rng, 5, 7)
            w = [targets[0] * a / nrm + lam * b for a, b in zip(k, perp)]
        coeffs = {1: tuple(w) + tuple(_rat(rng) for _ in range(alg.dim - horiz))}
        if alg.dim == 3:
            coeffs[2] = (0, 0, _rat(rng))
        yield from_first_kind(alg, coeffs, f), chars, n, height, f


@criterion(7, "factorisation postconditions", 120)
def test_criterion_07_factor():
    count = 0
    for g, chars, n, height, f in _factor_instances():
        res = factor_by_characters(g, chars, n, height, f)
        for x in range(0, 65):
            assert res.epsilon.eval(x) * res.g_prime.eval(x) * res.gamma.eval(x) == g.eval(x)
            assert all(c.denominator <= res.denominator and res.denominator % c.denominator == 0 for c in coords_second_kind(res.gamma.eval(x)))
        for ch in chars:
            t = taylor_coefficient(res.g_prime, ch.degree, f)
            vec = [sum((c * b[j] for c, b in zip(t.coords, t.basis)), Fraction(0)) for j in range(g.algebra.dim)]
            assert sum(Fraction(a) * v for a, v in zip(ch.k, vec)) == 0
        measured = max(metric_upper_raw(res.epsilon.eval(x), res.epsilon.eval(x - 1)) for x in range(1, n + 1))
        assert measured <= res.smoothness_constant / n + 1e-15
        count += 1
    assert count == 30


@criterion(8, "universal constructions", 60)
def test_criterion_08_universal():
    for d1 in (1, 2, 3, 4):
        dim = build_universal(GeneratorSpec(2, 2, (d1,))).algebra.dim
        assert dim == d1 + d1 * (d1 - 1) // 2 == witt_dimension(d1, 1) + witt_dimension(d1, 2)
    c = build_quotient(build_universal(GeneratorSpec(2, 2, (1,), (1,), (1,))))
    assert c.relation_ideal.is_ideal() and c.lin.is_ideal()
    assert all(all(x == 0 for x in c.algebra.bracket(a, b)) for a in c.lin.basis for b in c.lin.basis)
    assert validate_filtration(c.filtration).passed
    grp = SemidirectGroup(c)
    rng = SplitMix64(8)

    def quot():
        return GroupElement(c.algebra, tuple(_rat(rng, 5, 4) for _ in range(c.algebra.dim)))

    def lin():
        return random_in(c.lin, rng)

    for _ in range(100):
        s, t = (_rat(rng, 5, 4),), (_rat(rng, 5, 4),)
        g, gl, gl2 = quot(), lin(), lin()
        assert rho_power(c, rho_power(c, g, t), s) == rho_power(c, g, (s[0] * t[0],))
        assert rho_power(c, gl, t) * rho_power(c, gl, s) == rho_power(c, gl, (s[0] + t[0],))
        assert rho_power(c, g * gl2, t) == rho_power(c, g, t) * rho_power(c, gl2, t)
        assert rho_power(c, g * gl * g.inverse(), t) == g * rho_power(c, gl, t) * g.inverse()
        a, b, e = (grp.element((_rat(rng, 5, 4),), quot(), lin()) for _ in range(3))
        assert grp.multiply(grp.multiply(a, b), e) == grp.multiply(a, grp.multiply(b, e))
    _, rep = semidirect_filtration(c)
    assert rep.passed


@criterion(9, "partition of unity", 120)
def test_criterion_09_partition():
    worst = 0.0
    for m in (torus(1), torus(2), torus(3), heisenberg_manifold()):
        pou = partition_of_unity(m, 0.125)
        rng = SplitMix64(derive(9, m.dim))
        for _ in range(1000):
            g = m.element([rng.uniform() * 6 - 3 for _ in range(m.dim)], exact=False)
            vals = pou.evaluate(g)
            worst = max(worst, abs(sum(v * v for v in vals.values()) - 1))
            assert len(vals) <= 2 ** (3 * m.dim)
    assert worst <= 1e-9
    return f"max |sum tau^2 - 1| = {worst:.1e}"


@criterion(10, "nilcharacter norm, frequency and trace", 120)
def test_criterion_10_nilcharacter():
    hm = heisenberg_manifold()
    t1 = torus(1)
    cases = [(t1, VerticalCharacter(Subalgebra.full(t1.algebra), (3,))),
             (hm, VerticalCharacter(Subalgebra.coordinate(hm.algebra, [2]), (1,))),
             (hm, VerticalCharacter(Subalgebra.coordinate(hm.algebra, [2]), (-2,)))]
    for m, eta in cases:
        chi = make_nilcharacter(m, eta)
        rng = SplitMix64(derive(10, m.dim, eta.xi[0]))
        for _ in range(200):
            g = m.element([rng.uniform() * 4 - 2 for _ in range(m.dim)], exact=False)
            u = rng.uniform() * 4 - 2
            top = [0.0] * (m.dim - 1) + [u]
            base = chi(g)
            assert abs(np.linalg.norm(base) - 1) <= 1e-9
            assert abs(chi.trace(g) - 1) <= 1e-9
            moved = chi(m.element(top, exact=False) * g)
            assert np.allclose(moved, np.exp(2j * math.pi * eta.xi[0] * u) * base, atol=1e-9)


@criterion(11, "additive toolkit", 120)
def test_criterion_11_additive():
    assert additive_energy([1, 2, 3]) == 19 == energy_brute([1, 2, 3])
    rng = SplitMix64(11)
    for _ in range(50):
        sets = [[rng.integer(-30, 30) for _ in range(rng.integer(1, 12))] for _ in range(4)]
        e4 = additive_energy(*sets)
        assert e4 == energy_brute(*sets)
        assert e4 <= math.prod(additive_energy(s) for s in sets) ** 0.25 + 1e-9
    for _ in range(30):
        n = rng.integer(1, 1000)
        S = tuple(rng.integer(0, n - 1) for _ in range(rng.integer(1, 3)))
        rho = rng.integer(1, 49) / 100
        assert bohr_members(BohrSpec(n, S, rho)) == bohr_brute(n, S, rho)
    for _ in range(30):
        A = sorted({rng.integer(-12, 12) for _ in range(rng.integer(1, 7))})
        f = {a: 2 * a - 1 + (rng.integer(0, 3) == 0) for a in A}
        for k in (2, 3):
            assert is_freiman_hom(f, k)[0] == freiman_brute(f, k)
    for _ in range(20):
        S = (rng.integer(1, 100), rng.integer(1, 100))
        rho = rng.integer(1, 24) / 100
        gap = ProperGAP(101, (1,), (1,), S)
        members = bohr_members(BohrSpec(101, S, rho))
        mset = set(members)
        for x in members:
            for y in members:
                if (x + y) % 101 in mset:
                    assert tuple(a + b for a, b in zip(gap.phi(x), gap.phi(y))) == gap.phi(x + y)
    desk = ProperGAP(101, (1, 10), (4, 4), (1, 10))
    assert desk.is_proper()
    for x, coords in desk.members().items():
        assert gap_dual_coordinates(desk, x) == coords


def _heisenberg_realization(n_points):
    alg = heisenberg()
    g = from_function(alg, lambda n: from_second_kind(alg, (BETA * n + 0.5, ALPHA * n, 0)), 1, 2)
    F = vertical_phase_function(1)
    return np.array([eval_nilsequence(F, g, n) for n in range(1, n_points + 1)])


@criterion(12, "converse-direction regression", 120)
def test_criterion_12_converse():
    expr = bracket_quadratic(ALPHA, BETA)
    small = np.array([expr.phase(x) for x in range(1, 65)])
    assert abs(gowers_norm_interval(small, 3, "naive").value - U3_THRESHOLD_N64) <= 1e-12
    n = 512
    f = np.array([expr.phase(x) for x in range(1, n + 1)])
    norm = gowers_norm_interval(f, 3).value
    corr = correlation(Signal(f, "interval"), _heisenberg_realization(n))
    detail = f"U3[512] = {norm:.10f}, threshold {U3_THRESHOLD_N64:.10f}, correlation {corr:.6f}"
    assert corr >= 0.9, detail
    assert norm >= U3_THRESHOLD_N64, detail
    return detail


@criterion(13, "CLI determinism and suite runtime", 600)
def test_criterion_13_cli_determinism(tmp_path):
    sweep = ROOT / "sweeps" / "full.json"
    outputs = []
    for run in range(2):
        for jobs in (1, 8):
            for fmt in ("csv", "json"):
                path = tmp_path / f"{run}-{jobs}.{fmt}"
                proc = subprocess.run([sys.executable, "-m", "nilfourier.cli", "sweep", "--spec", str(sweep), "--jobs", str(jobs),
                                       "--format", fmt, "--out", str(path), "--seed", "13"], capture_output=True, text=True, timeout=300)
                assert proc.returncode == 0, proc.stderr
                outputs.append((fmt, path.read_bytes()))
    for fmt in ("csv", "json"):
        blobs = {b for f, b in outputs if f == fmt}
        assert len(blobs) == 1, f"{fmt} outputs differ"
    elapsed = time.perf_counter() - SUITE_START
    assert elapsed < 600, f"acceptance suite took {elapsed:.0f} s"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
