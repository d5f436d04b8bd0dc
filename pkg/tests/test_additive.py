import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nilfourier.additive import (
    AdditiveCapError,
    AdditiveError,
    BohrSpec,
    BracketExpr,
    BracketLinearModel,
    ProperGAP,
    additive_quadruples,
    bohr_members,
    bracket_quadratic,
    const,
    e,
    eval_bracket_phase,
    fit_single_frequency,
    frac,
    freiman_linear_form,
    gap_dual_coordinates,
    int_part,
    is_freiman_hom,
    linear,
    next_prime,
    quadruple_defect,
    round_to_lattice,
    verify_bracket_linear,
)
from nilfourier.rng import SplitMix64
from oracles import bohr_brute, freiman_brute

DESK_GAP = ProperGAP(101, (1, 10), (4, 4), (1, 10))


def test_frac_examples():
    assert frac(0.75) == -0.25
    assert frac(Fraction(1, 2)) == Fraction(1, 2)
    assert frac(-0.5) == 0.5
    assert frac(3) == 0 and int_part(3) == 3
    assert frac(0.75, floor_convention=True) == 0.75


@given(num=st.integers(-10 ** 6, 10 ** 6), den=st.integers(1, 1000), m=st.integers(-50, 50))
def test_frac_laws(num, den, m):
    x = Fraction(num, den)
    f = frac(x)
    assert -Fraction(1, 2) < f <= Fraction(1, 2)
    assert int_part(x) + f == x and int_part(x).denominator == 1
    assert frac(x + m) == f and frac(f) == f


def test_bracket_examples():
    expr = bracket_quadratic(0.3, 0.7)
    assert expr.evaluate(3) == pytest.approx(1.8)
    assert eval_bracket_phase(expr, 3) == pytest.approx(e(-0.2))
    assert eval_bracket_phase(bracket_quadratic(0, 0.7), 5) == pytest.approx(1)
    for n in range(-5, 6):
        assert eval_bracket_phase(bracket_quadratic(0.3, 2), n) == pytest.approx(e(0.6 * n * n))
    assert expr.bracket_depth() == 1


def test_bracket_json_and_depth():
    expr = BracketExpr("sum", (bracket_quadratic(0.1, 0.2), const(0.5), linear(0.25)))
    assert BracketExpr.from_json(expr.to_json()) == expr
    assert expr.evaluate(4) == pytest.approx(0.1 * 4 * 1 + 0.5 + 1.0)
    deep = linear(1)
    for _ in range(3):
        deep = BracketExpr("mul", (linear(0.5), BracketExpr("int", (deep,))))
    assert deep.bracket_depth() == 3
    with pytest.raises(AdditiveError):
        BracketExpr("mul", (linear(0.5), BracketExpr("int", (deep,))))
    with pytest.raises(AdditiveError):
        BracketExpr.from_json({"op": "pow"})


def test_bohr_examples():
    assert bohr_members(BohrSpec(20, (1,), 0.1)) == [0, 1, 2, 18, 19]
    assert bohr_members(BohrSpec(7, (1, 2, 3), 0.5)) == list(range(7))
    with pytest.raises(AdditiveError):
        BohrSpec(10, (), 0.1)
    with pytest.raises(AdditiveCapError):
        bohr_members(BohrSpec(10 ** 6 + 1, (1,), 0.1))


@given(seed=st.integers(0, 2 ** 32))
def test_bohr_against_enumeration(seed):
    rng = SplitMix64(seed)
    n = rng.integer(1, 1000)
    S = tuple(rng.integer(0, n - 1) for _ in range(rng.integer(1, 3)))
    S2 = tuple(rng.integer(0, n - 1) for _ in range(rng.integer(1, 3)))
    rho = rng.integer(1, 49) / 100
    members = bohr_members(BohrSpec(n, S, rho))
    assert members == bohr_brute(n, S, rho)
    assert 0 in members and all((-x) % n in set(members) for x in members)
    assert set(members) <= set(bohr_members(BohrSpec(n, S, min(rho + 0.1, 0.5))))
    assert set(bohr_members(BohrSpec(n, S + S2, rho))) == set(members) & set(bohr_members(BohrSpec(n, S2, rho)))


@given(seed=st.integers(0, 2 ** 32))
def test_phi_additive_on_small_bohr_sets(seed):
    rng = SplitMix64(seed)
    n = 101
    S = tuple(rng.integer(1, n - 1) for _ in range(2))
    rho = rng.integer(1, 24) / 100
    gap = ProperGAP(n, (1,), (1,), S)
    members = bohr_members(BohrSpec(n, S, rho))
    mset = set(members)
    for x in members:
        for y in members:
            if (x + y) % n in mset:
                assert tuple(a + b for a, b in zip(gap.phi(x), gap.phi(y))) == gap.phi(x + y)


def test_freiman_examples():
    assert is_freiman_hom({a: 3 * a + 2 for a in (0, 3, 4, 9)}) == (True, None)
    ok, witness = is_freiman_hom({0: 0, 1: 1, 2: 4})
    assert not ok and witness == ((0, 2), (1, 1))
    assert is_freiman_hom({5: 1.0}, 3) == (True, None)


@given(seed=st.integers(0, 2 ** 32), k=st.integers(2, 3))
def test_freiman_against_enumeration(seed, k):
    rng = SplitMix64(seed)
    A = sorted({rng.integer(-10, 10) for _ in range(rng.integer(1, 6))})
    slope, shift = rng.integer(-3, 3), rng.integer(-3, 3)
    f = {a: slope * a + shift for a in A}
    if rng.integer(0, 1):
        f[A[0]] += 1
    ok = is_freiman_hom(f, k)[0]
    assert ok == freiman_brute(f, k)
    if ok and len(A) > 1:
        assert is_freiman_hom({a: f[a] for a in A[1:]}, k)[0]


def test_round_to_lattice_examples():
    assert round_to_lattice([0.26], 0.1)[0] == 0.3
    assert np.array_equal(round_to_lattice([0.5, -1.5], 0.5), np.array([0.5, -1.5]))
    assert round_to_lattice([0.25], 0.5)[0] == 0.5
    with pytest.raises(AdditiveError):
        round_to_lattice([0.1], 0)


def test_rounding_defect_bound():
    rng = SplitMix64(17)
    for _ in range(100):
        hs = sorted({rng.integer(0, 30) for _ in range(8)})
        eps = np.array([0.05, 0.2])
        slope = np.array([rng.uniform(), rng.uniform()])
        f = {h: slope * h + 0.01 * np.array([rng.uniform(), rng.uniform()]) for h in hs}
        rounded = {h: round_to_lattice(v, eps) for h, v in f.items()}
        assert all(np.all(np.abs(rounded[h] - f[h]) <= eps / 2 + 1e-12) for h in hs)
        quads = additive_quadruples(hs)
        assert np.all(quadruple_defect(rounded, quads) <= quadruple_defect(f, quads) + 2 * eps + 1e-12)


def test_verify_bracket_linear():
    model = BracketLinearModel((0.1, 0.2), (((0.4, -0.3), 7), ((0.0, 1.0), 11)), 5003)
    assert model.check_scale(50) and not model.check_scale(10)
    f = {h: model(h) for h in range(1, 51)}
    worst, passed = verify_bracket_linear(model, f, 1e-12)
    assert np.all(worst <= 1e-12) and passed == list(range(1, 51))
    f[13] = f[13] + np.array([0.3, 0.0])
    worst, passed = verify_bracket_linear(model, f, 1e-9)
    assert passed == [h for h in range(1, 51) if h != 13]
    assert worst[0] == pytest.approx(0.3)
    with pytest.raises(AdditiveError):
        BracketLinearModel((0.0,), (), 100)


def test_single_frequency_fit():
    p = next_prime(5000)
    f = {h: 0.4 * float(frac(Fraction(7 * h, p))) + 0.1 for h in range(1, 51)}
    fit = fit_single_frequency(f, p)
    assert (0.4, 7) in fit.optimal
    assert fit.violation == pytest.approx(0, abs=1e-12)
    worst, passed = verify_bracket_linear(fit.model(), f, 1e-9)
    assert passed == list(range(1, 51))


def test_desk_gap_round_trip():
    assert DESK_GAP.is_proper()
    assert DESK_GAP.certificate_rank() == 2
    members = DESK_GAP.members()
    assert len(members) == 81
    for x, coords in members.items():
        assert gap_dual_coordinates(DESK_GAP, x) == coords
    assert gap_dual_coordinates(DESK_GAP, 0) == (0, 0)
    rho = DESK_GAP.radius()
    for x in range(101):
        if x not in members and all(abs(v) <= rho for v in DESK_GAP.phi(x)):
            assert gap_dual_coordinates(DESK_GAP, x) is None
    assert ProperGAP.from_json(DESK_GAP.to_json()) == DESK_GAP


def test_gap_one_dimensional():
    gap = ProperGAP(101, (3,), (5,), (2,))
    assert gap.radius() < Fraction(1, 2)
    u = gap.dual_vectors()
    assert u[0][0] == 1 / frac(Fraction(6, 101))
    for x, coords in gap.members().items():
        assert gap_dual_coordinates(gap, x) == coords


def test_gap_certificate_and_bohr_containment():
    with pytest.raises(AdditiveError):
        ProperGAP(101, (1, 2), (2, 2), (1,)).dual_vectors()
    gap = ProperGAP(101, (1,), (2,), (1,))
    with pytest.raises(AdditiveError):
        gap_dual_coordinates(gap, 50)


def test_freiman_linear_form_on_gap():
    f = {x: Fraction(3) * c[0] - Fraction(1, 2) * c[1] + 5 for x, c in DESK_GAP.members().items()}
    form = freiman_linear_form(DESK_GAP, f)
    assert all(form(x) == v for x, v in f.items())
    assert math.isclose(float(form(0)), 5)
