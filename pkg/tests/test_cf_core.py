from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dist_nearest_int, golden_theta, recurrence, theta_from_quotients
from shrinking_targets.cf_core import (GOLDEN, ConstantQuotient, ConvergentTable, Custom, ExplicitList,
                                       LinearQuotient, PaperProp2, dist_to_integer, dist_to_integer_ostrowski,
                                       dist_to_target, extend_table, ostrowski_admissible, ostrowski_digits,
                                       theta_approx)
from shrinking_targets.errors import ResourceCapError, ValidationError


def test_golden_fibonacci_until_13():
    t = extend_table(ConstantQuotient(1), lambda k, q: q >= 13)
    assert [t.q(k) for k in range(7)] == [1, 1, 2, 3, 5, 8, 13]


def test_linear_quotient_first_rows():
    t = extend_table(LinearQuotient(), lambda k, q: k == 4)
    assert [t.a(k) for k in range(1, 5)] == [1, 2, 3, 4]
    assert [t.q(k) for k in range(5)] == [1, 1, 3, 10, 43]


def test_constant_two_growth_instance():
    t = ConvergentTable(ConstantQuotient(2))
    _, qs = recurrence([2] * 6)
    assert [t.q(k) for k in range(7)] == qs
    assert t.q(5) == 70 and t.q(3) == 12 and t.q(5) >= 2 * t.q(3)


@pytest.mark.parametrize("spec,K", [(GOLDEN, 300), (ConstantQuotient(2), 300), (LinearQuotient(), 150),
                                    (PaperProp2(), 30), (Custom.named("square"), 60),
                                    (ExplicitList((3, 1, 4, 1, 5), LinearQuotient()), 40)])
def test_table_matches_plain_recurrence(spec, K):
    t = ConvergentTable(spec)
    quotients = [spec.quotient(k) for k in range(1, K + 1)]
    ps, qs = recurrence(quotients)
    assert [t.p(k) for k in range(K + 1)] == ps
    assert [t.q(k) for k in range(K + 1)] == qs
    assert t.check_invariants(K - 1) == []


def test_prop2_rule():
    spec = PaperProp2()
    assert spec.quotient(1) == spec.quotient(2) == 1
    with mpmath.workdps(40):
        for k in (3, 10, 100, 1000):
            assert spec.quotient(k) == int(mpmath.nint(mpmath.power(k, mpmath.log(mpmath.log(k)))))


def test_theta_approx_examples():
    t = ConvergentTable(GOLDEN)
    a5 = theta_approx(t, 5)
    assert a5.value == Fraction(5, 8) and a5.error_bound == Fraction(1, 8 * 13)
    a0 = theta_approx(ConvergentTable(LinearQuotient()), 0)
    assert a0.value == 0 and a0.error_bound == 1
    a10 = theta_approx(t, 10)
    with mpmath.workdps(60):
        gap = abs(mpmath.mpf(a10.value.numerator) / a10.value.denominator - golden_theta())
        assert gap < mpmath.mpf(1) / (t.q(10) * t.q(11))


def test_theta_approx_index_error():
    t = ConvergentTable(GOLDEN, cap_k=10)
    with pytest.raises(IndexError):
        theta_approx(t, 10)


def test_cap_and_bad_rules():
    with pytest.raises(ResourceCapError):
        extend_table(GOLDEN, lambda k, q: False, cap_k=50)
    with pytest.raises(ValidationError):
        ConvergentTable(Custom(lambda k: 0, "zero")).q(1)
    with pytest.raises(ValidationError):
        ConstantQuotient(0)
    with pytest.raises(ValidationError):
        Custom.named("nope")


def test_dist_to_integer_n1_golden():
    d = dist_to_integer(1, ConvergentTable(GOLDEN), Fraction(1, 10**30))
    with mpmath.workdps(60):
        ref = 1 - golden_theta()
        assert abs(mpmath.mpf(d.value.numerator) / d.value.denominator - ref) <= mpmath.mpf(10) ** -30
    assert abs(float(d.value) - 0.381966) < 1e-6
    loose = dist_to_integer(12345, ConvergentTable(GOLDEN), Fraction(1, 2))
    assert loose.error_bound <= Fraction(1, 2)


SPECS_200BIT = [(GOLDEN, [1] * 400), (LinearQuotient(), list(range(1, 120))), (ConstantQuotient(3), [3] * 300)]


@pytest.mark.parametrize("spec,quotients", SPECS_200BIT)
def test_dist_encloses_200bit_evaluation(spec, quotients):
    t = ConvergentTable(spec)
    tol = Fraction(1, 1 << 80)
    with mpmath.workprec(200):
        theta = theta_from_quotients(quotients, dps=70)
        for n in range(1, 100001):
            d = dist_to_integer(n, t, tol)
            ref = dist_nearest_int(n * theta)
            lo = mpmath.mpf(d.lo.numerator) / d.lo.denominator
            hi = mpmath.mpf(d.hi.numerator) / d.hi.denominator
            slack = mpmath.mpf(2) ** -190
            assert lo - slack <= ref <= hi + slack


def test_dist_to_target_zero_n():
    t = ConvergentTable(GOLDEN)
    assert dist_to_target(0, Fraction(3, 4), t, Fraction(1, 100)).value == Fraction(1, 4)


def test_ostrowski_examples():
    g = ConvergentTable(GOLDEN)
    digits = ostrowski_digits(4, g)
    assert sum(c * g.q(k) for k, c in digits) == 4
    assert digits[0] == (3, 1) and g.q(digits[-1][0]) == 1
    assert ostrowski_digits(g.q(7), g) == [(7, 1)]
    lin = ConvergentTable(LinearQuotient())
    assert sum(c * lin.q(k) for k, c in ostrowski_digits(100, lin)) == 100


@pytest.mark.parametrize("spec", [GOLDEN, LinearQuotient(), ConstantQuotient(3)])
def test_ostrowski_round_trip_all_n(spec):
    t = ConvergentTable(spec)
    for n in range(0, 10001):
        digits = ostrowski_digits(n, t)
        assert sum(c * t.q(k) for k, c in digits) == n
        assert ostrowski_admissible(digits, t)


@given(st.integers(min_value=1, max_value=10**12), st.integers(min_value=10, max_value=120))
@settings(max_examples=60, deadline=None)
def test_ostrowski_distance_agrees(n, bits):
    t = ConvergentTable(LinearQuotient())
    tol = Fraction(1, 1 << bits)
    a = dist_to_integer(n, t, tol)
    b = dist_to_integer_ostrowski(n, t, tol)
    assert a.overlaps(b)


@given(st.integers(min_value=1, max_value=10**9), st.integers(min_value=4, max_value=150),
       st.integers(min_value=1, max_value=40))
@settings(max_examples=80, deadline=None)
def test_smaller_tol_never_wider(n, bits, extra):
    t = ConvergentTable(GOLDEN)
    wide = dist_to_integer(n, t, Fraction(1, 1 << bits))
    narrow = dist_to_integer(n, t, Fraction(1, 1 << (bits + extra)))
    assert narrow.error_bound <= wide.error_bound
    assert narrow.error_bound <= Fraction(1, 1 << (bits + extra))


def test_custom_double_exponential_big_quotients():
    t = ConvergentTable(Custom.named("double_exponential"))
    assert t.q(1) == 4 and t.q(2) == 16 * 4 + 1
    assert t.check_invariants(12) == []
