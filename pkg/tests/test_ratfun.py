from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from netabstraction.errors import (
    DegreeOverflow,
    DimensionMismatch,
    DivisionByZero,
    PoleAtPoint,
    SingularMatrix,
)
from netabstraction.ratfun import (
    MAX_DEGREE,
    _PROBES,
    ONE,
    ZERO,
    Polynomial,
    RationalFunction,
    TransferMatrix,
    det_at,
    rank_at,
)
from tests.strategies import nonzero_fracs, polynomials, rational_functions

Q = RationalFunction
Z0 = np.exp(0.7j)


def first_order(a, b=0):
    """(1 + b q^-1) / (1 - a q^-1)"""
    return Q(Polynomial([1, b]), Polynomial([1, -Fraction(a)]))


def close(a, b, rel=1e-9):
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


# -- hand-computed values ------------------------------------------------------


def test_polynomial_product():
    assert Polynomial([1, 1]) * Polynomial([1, -1]) == Polynomial([1, 0, -1])


def test_trailing_zeros_dropped():
    p = Polynomial([1, 2, 0, 0])
    assert p.degree == 1
    assert Polynomial([]).degree == -1


def test_canonical_form_cancels_common_factor():
    f = Q(Polynomial([2, 2]), Polynomial([4, 4]))
    assert f == Q(Fraction(1, 2))
    assert f.num == Polynomial([Fraction(1, 2)])
    assert f.den == Polynomial([1])


def test_canonicalization_is_idempotent_on_example():
    f = Q(Polynomial([0, 3, 3]), Polynomial([0, 6, -6]))
    g = Q(f.num, f.den)
    assert (g.num, g.den) == (f.num, f.den)


def test_sum_of_first_order_terms():
    # 1/(1-q^-1/2) + 1/(1+q^-1/2) = 2 / (1 - q^-2/4)
    s = first_order(Fraction(1, 2)) + first_order(Fraction(-1, 2))
    assert s == Q(Polynomial([2]), Polynomial([1, 0, Fraction(-1, 4)]))


def test_delay_evaluates_to_negative_power():
    f = RationalFunction.delay(2, 3)
    assert close(f.evaluate(Z0), 3 / Z0**2)


def test_first_order_evaluation():
    f = first_order(Fraction(1, 3), 2)
    z = Z0
    assert close(f.evaluate(z), (1 + 2 / z) / (1 - 1 / (3 * z)))


def test_properness_and_value_at_infinity():
    assert Q(Polynomial([3, 1]), Polynomial([2, -1])).value_at_infinity() == Fraction(3, 2)
    advance = Q(Polynomial([1]), Polynomial([0, 1]))  # q
    assert not advance.is_proper()
    with pytest.raises(PoleAtPoint):
        advance.value_at_infinity()
    assert RationalFunction.delay(1, 5).value_at_infinity() == 0


def test_stability():
    assert first_order(Fraction(1, 2)).is_stable()
    assert not first_order(2).is_stable()
    assert not first_order(1).is_stable()


def test_pole_hit_raises():
    with pytest.raises(PoleAtPoint):
        first_order(1).evaluate(1.0)


def test_zero_has_no_inverse():
    with pytest.raises(DivisionByZero):
        ZERO.inv()
    with pytest.raises(DivisionByZero):
        ONE / ZERO


def test_degree_ceiling():
    f = ONE
    with pytest.raises(DegreeOverflow):
        for k in range(MAX_DEGREE + 2):
            f = f * first_order(Fraction(1, k + 2))


def test_two_by_two_inverse_matches_adjugate():
    a, b = RationalFunction.delay(1, Fraction(1, 3)), RationalFunction.delay(1, Fraction(2, 5))
    M = TransferMatrix([[ONE, -a], [-b, ONE]])
    det = ONE - a * b
    expected = TransferMatrix([[ONE / det, a / det], [b / det, ONE / det]])
    assert M.inverse() == expected


def test_singular_inverse_raises():
    a = RationalFunction.delay(1, 2)
    with pytest.raises(SingularMatrix):
        TransferMatrix([[a, a], [a, a]]).inverse()


def test_left_inverse_of_tall_matrix():
    M = TransferMatrix([[ONE, ZERO], [RationalFunction.delay(1, 1), ONE], [ONE, RationalFunction.delay(2, 3)]])
    Li = M.left_inverse()
    assert Li.shape == (2, 3)
    assert Li @ M == TransferMatrix.identity(2)


def test_determinant_at_a_point():
    a, b = RationalFunction.delay(1, Fraction(1, 3)), first_order(Fraction(1, 2))
    M = TransferMatrix([[ONE, a], [b, ONE]])
    x = Fraction(2, 5)
    # 1 - (x/3) * 1/(1 - x/2)
    assert det_at(M, x) == 1 - (x / 3) / (1 - x / 2)
    assert det_at(TransferMatrix([[first_order(Fraction(1, 2))]]), 2) is None


def test_nonsingularity():
    a = RationalFunction.delay(1, 2)
    assert TransferMatrix.identity(3).is_nonsingular()
    assert not TransferMatrix([[a, a], [a, a]]).is_nonsingular()
    assert not TransferMatrix([[ONE, ZERO]]).is_nonsingular()
    # vanishes at every probe point, so only the exact fallback can decide
    p = Polynomial([1])
    for x in _PROBES:
        p = p * Polynomial([-x, 1])
    tricky = TransferMatrix([[RationalFunction(p)]])
    assert all(det_at(tricky, x) == 0 for x in _PROBES)
    assert tricky.is_nonsingular()


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        TransferMatrix.identity(2) @ TransferMatrix.identity(3)
    with pytest.raises(DimensionMismatch):
        TransferMatrix.identity(2) + TransferMatrix.identity(3)


def test_rank_at_points():
    a = RationalFunction.delay(1, Fraction(1, 2))
    M = TransferMatrix([[a, ONE], [a * a, a]])  # rank one: row 2 = a * row 1
    assert rank_at(M, [Z0, np.exp(1.3j)]) == 1
    assert rank_at(TransferMatrix.identity(3), [Z0]) == 3


def test_block_and_select_round_trip():
    M = TransferMatrix([[Q(k * 3 + c) for c in range(3)] for k in range(3)])
    top = M.select([0], None)
    bottom = M.select([1, 2], None)
    assert TransferMatrix.block([[top], [bottom]]) == M
    assert M.T.T == M
    assert M.select([2, 0], [1]) == TransferMatrix([[Q(7)], [Q(1)]])


# -- properties ----------------------------------------------------------------


@given(rational_functions(), rational_functions(), rational_functions())
def test_field_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + b == b + a and a * b == b * a
    assert a - a == ZERO
    if a:
        assert a * a.inv() == ONE


@given(rational_functions(), rational_functions())
def test_equality_is_cross_multiplication(a, b):
    cross = a.num * b.den - b.num * a.den
    assert (a == b) == cross.is_zero()


@given(polynomials(), polynomials().filter(lambda p: not p.is_zero()))
def test_canonicalization_idempotent(num, den):
    f = Q(num, den)
    g = Q(f.num, f.den)
    assert (g.num, g.den) == (f.num, f.den)
    assert f.den.coeffs[f.den.order] == 1


@given(rational_functions(), rational_functions(), st.floats(0.1, 3.0))
def test_evaluation_commutes_with_arithmetic(a, b, w):
    z = np.exp(1j * w) * 1.0001
    try:
        fa, fb = a.evaluate(z), b.evaluate(z)
        assert close((a + b).evaluate(z), fa + fb)
        assert close((a * b).evaluate(z), fa * fb)
        if b and abs(fb) > 1e-6:
            assert close((a / b).evaluate(z), fa / fb, 1e-7)
    except PoleAtPoint:
        assume(False)


@given(st.lists(nonzero_fracs, min_size=6, max_size=6), st.integers(0, 3))
def test_left_inverse_is_exact(cs, shift):
    cols = [
        [RationalFunction.delay(k % 2 + 1, cs[k]) if (k + shift) % 3 else ONE for k in range(3)],
        [ONE, RationalFunction.delay(1, cs[3]), RationalFunction.delay(2, cs[4])],
    ]
    M = TransferMatrix([[cols[0][r], cols[1][r]] for r in range(3)])
    try:
        Li = M.left_inverse()
    except SingularMatrix:
        assume(False)
    assert Li @ M == TransferMatrix.identity(2)


@given(st.lists(rational_functions(max_degree=1, nonzero=True), min_size=4, max_size=4))
def test_inverse_is_two_sided(vals):
    M = TransferMatrix([[ONE + vals[0], vals[1]], [vals[2], ONE + vals[3]]])
    try:
        Mi = M.inverse()
    except SingularMatrix:
        assume(False)
    assert Mi @ M == TransferMatrix.identity(2)
    assert M @ Mi == TransferMatrix.identity(2)


@given(st.lists(rational_functions(max_degree=1), min_size=4, max_size=4))
def test_nonsingularity_matches_inverse(vals):
    M = TransferMatrix([vals[:2], vals[2:]])
    try:
        M.inverse()
        invertible = True
    except SingularMatrix:
        invertible = False
    assert M.is_nonsingular() == invertible
