from fractions import Fraction
import itertools

import pytest
from hypothesis import given, strategies as st
from sympy import Rational
from sympy.physics.wigner import wigner_3j as sympy_3j

from atomjunction.atomic import (
    GROUND_SUBLEVELS,
    decay_branching,
    relative_strength,
    sigma_plus_fraction,
    transition_strengths,
    wigner_3j,
    wigner_3j_squared,
    zeeman_shift,
)
from atomjunction.constants import RB87


# hand-derived sigma+ strengths relative to the stretched mF=2 line
SIGMA_PLUS_ORACLE = {-2: Fraction(1, 15), -1: Fraction(1, 5), 0: Fraction(2, 5), 1: Fraction(2, 3), 2: Fraction(1)}


def _oracle_sigma_plus(m):
    # <2 m; 1 1 | 3 m+1>^2 = (j+m+1)(j+m+2) / ((2j+1)(2j+2)) with j = 2
    return Fraction((3 + m) * (4 + m), 30)


@pytest.mark.parametrize("mF", GROUND_SUBLEVELS)
def test_sigma_plus_strengths_exact(mF):
    assert relative_strength(mF, 1) == SIGMA_PLUS_ORACLE[mF]
    assert relative_strength(mF, 1) == _oracle_sigma_plus(mF) / _oracle_sigma_plus(2)


@pytest.mark.parametrize("mF", GROUND_SUBLEVELS)
def test_sigma_minus_mirrors_sigma_plus(mF):
    assert relative_strength(mF, -1) == relative_strength(-mF, 1)


def _half_int(max_two_j=8):
    return st.integers(0, max_two_j).map(lambda k: Fraction(k, 2))


def _all_symbols(limit=5):
    for tj1, tj2, tj3 in itertools.product(range(limit), repeat=3):
        j1, j2, j3 = (Fraction(t, 2) for t in (tj1, tj2, tj3))
        for tm1 in range(-tj1, tj1 + 1, 2):
            for tm2 in range(-tj2, tj2 + 1, 2):
                tm3 = -tm1 - tm2
                if abs(tm3) <= tj3 and (tj3 - tm3) % 2 == 0:
                    yield j1, j2, j3, Fraction(tm1, 2), Fraction(tm2, 2), Fraction(tm3, 2)


def test_matches_sympy_on_small_symbols():
    n = 0
    for j1, j2, j3, m1, m2, m3 in _all_symbols():
        ref = sympy_3j(*(Rational(x.numerator, x.denominator) for x in (j1, j2, j3, m1, m2, m3)))
        assert wigner_3j(j1, j2, j3, m1, m2, m3) == pytest.approx(float(ref), abs=1e-14)
        n += 1
    assert n > 300


@pytest.mark.parametrize("j1,j2", [(1, 2), (Fraction(1, 2), Fraction(3, 2)), (2, 3), (1, 1)])
def test_orthogonality_over_m(j1, j2):
    # sum_{m1,m2} (2 j3 + 1) 3j(j1 j2 j3; m1 m2 m3) 3j(j1 j2 j3'; m1 m2 m3') = delta delta
    j1, j2 = Fraction(j1), Fraction(j2)
    j3s = [abs(j1 - j2) + k for k in range(int(j1 + j2 - abs(j1 - j2)) + 1)]
    ms1 = [-j1 + k for k in range(int(2 * j1) + 1)]
    ms2 = [-j2 + k for k in range(int(2 * j2) + 1)]
    for j3, j3p in itertools.product(j3s, repeat=2):
        for m3 in [-j3 + k for k in range(int(2 * j3) + 1)]:
            total = sum(
                (2 * j3 + 1) * wigner_3j(j1, j2, j3, m1, m2, m3) * wigner_3j(j1, j2, j3p, m1, m2, m3)
                for m1 in ms1
                for m2 in ms2
            )
            assert total == pytest.approx(1.0 if j3 == j3p else 0.0, abs=1e-12)


def test_orthogonality_over_j3():
    j1, j2 = Fraction(3), Fraction(1)
    for m1, m2, m1p in itertools.product(range(-3, 4), range(-1, 2), range(-3, 4)):
        m2p = m1 + m2 - m1p
        if abs(m2p) > 1:
            continue
        total = sum(
            (2 * j3 + 1) * wigner_3j(j1, j2, j3, m1, m2, -m1 - m2) * wigner_3j(j1, j2, j3, m1p, m2p, -m1 - m2)
            for j3 in (2, 3, 4)
        )
        assert total == pytest.approx(1.0 if (m1, m2) == (m1p, m2p) else 0.0, abs=1e-12)


@given(_half_int(), _half_int(), _half_int(), st.integers(-8, 8), st.integers(-8, 8))
def test_selection_rules_and_symmetry(j1, j2, j3, tm1, tm2):
    m1, m2 = Fraction(tm1, 2), Fraction(tm2, 2)
    m3 = -m1 - m2
    valid_m = all(abs(m) <= j and (j - m).denominator == 1 for m, j in ((m1, j1), (m2, j2), (m3, j3)))
    if not valid_m:
        return
    sq = wigner_3j_squared(j1, j2, j3, m1, m2, m3)
    triangle = abs(j1 - j2) <= j3 <= j1 + j2 and (j1 + j2 + j3).denominator == 1
    if not triangle:
        assert sq == 0
        return
    assert 0 <= sq <= 1
    # cyclic permutation leaves the square unchanged, sign flip of all m too
    assert wigner_3j_squared(j2, j3, j1, m2, m3, m1) == sq
    assert wigner_3j_squared(j1, j2, j3, -m1, -m2, -m3) == sq


def test_forbidden_symbols_are_zero():
    assert wigner_3j(1, 1, 1, 1, 1, 0) == 0.0
    assert wigner_3j(1, 1, 0, 2, -2, 0) == 0.0


def test_rejects_non_half_integer():
    with pytest.raises(ValueError):
        wigner_3j(0.3, 1, 1, 0, 0, 0)
    with pytest.raises(ValueError):
        wigner_3j(1, 1, 1, 0.5, -0.5, 0)


@pytest.mark.parametrize("mp", range(-3, 4))
def test_branching_sums_to_one(mp):
    assert sum(decay_branching(mp, m) for m in GROUND_SUBLEVELS) == 1


def test_stretched_state_decays_only_to_stretched_ground():
    assert decay_branching(3, 2) == 1
    assert decay_branching(-3, -2) == 1


def test_zeeman_shift_examples():
    b = 0.78e-3
    unit = RB87.mu_b_over_h * b
    assert zeeman_shift(2, 1, b) == pytest.approx(unit)
    assert zeeman_shift(-2, -1, b) == pytest.approx(-unit)
    assert unit * 1e-6 == pytest.approx(10.92, abs=0.01)
    assert zeeman_shift(0, 1, b) == pytest.approx(4 / 6 * unit)
    assert zeeman_shift(1, 1, 0.0) == 0.0


@pytest.mark.parametrize("args", [(3, 1, 1e-3), (0, 0, 1e-3), (0, 1, -1e-3)])
def test_zeeman_shift_rejects_bad_input(args):
    with pytest.raises(ValueError):
        zeeman_shift(*args)


def test_transition_table():
    comps = transition_strengths()
    assert len(comps) == 10
    assert [c.q for c in comps[:5]] == [1] * 5
    strongest = [c for c in comps if c.rel_strength == 1.0]
    assert {(c.mF, c.q) for c in strongest} == {(2, 1), (-2, -1)}
    for c in comps:
        assert c.isat == pytest.approx(RB87.isat_cycling / c.rel_strength)
        assert c.mF_prime == c.mF + c.q


def test_helicity_convention():
    assert sigma_plus_fraction(0.85) == 0.85
    assert sigma_plus_fraction(0.85, parallel_to_field=False) == pytest.approx(0.15)
    with pytest.raises(ValueError):
        sigma_plus_fraction(1.2)
