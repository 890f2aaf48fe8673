import math
from fractions import Fraction

import mpmath
import pytest

from oracles import recurrence
from shrinking_targets.cf_core import GOLDEN, ConstantQuotient, Custom, LinearQuotient, PaperProp2
from shrinking_targets.criterion import (SERIES_COLUMNS, condition_i_check, condition_ii_check, last_block_increase,
                                         main_series, prop2_series, render_int, shifted_series)
from shrinking_targets.errors import ValidationError
from shrinking_targets.phi_funcs import (CONVERGING, DIVERGING, Constant, LogStack, Power, Shifted,
                                         khinchin_divergence_report)

K = 200


def mp_log_phi(depth, n):
    x = mpmath.log(max(n, {1: 3, 2: 16}[depth]))
    return x if depth == 1 else x * mpmath.log(x)


def test_golden_constant4_terms_and_limit():
    rep = main_series(GOLDEN, Constant(Fraction(4)), K)
    assert rep.classification == DIVERGING
    limit = math.log((1 + math.sqrt(5)) / 2) / 4
    assert abs(float(rep.terms[-1][1].value) - limit) < 1e-12
    assert abs(limit - 0.1203) < 1e-4
    # partial sums grow linearly
    assert abs(float(rep.partial_sums[-1][1].value) / (K + 1) - limit) < 0.01
    assert rep.columns == SERIES_COLUMNS and len(rep.rows) == K + 1


@pytest.mark.parametrize("spec,depth", [(GOLDEN, 1), (LinearQuotient(), 2)])
def test_terms_match_independent_evaluation(spec, depth):
    rep = main_series(spec, LogStack(depth), 40)
    sh = shifted_series(spec, LogStack(depth), 40)
    _, qs = recurrence([spec.quotient(k) for k in range(1, 43)])
    with mpmath.workdps(50):
        for k in range(41):
            ph = mp_log_phi(depth, qs[k])
            ratio = mpmath.mpf(qs[k + 1]) / qs[k]
            ref = mpmath.log(min(ph, ratio)) / ph
            ref_sh = mpmath.log(min(ph, ratio)) / mp_log_phi(depth, qs[k + 1])
            for got, want in ((rep.terms[k][1], ref), (sh.terms[k][1], ref_sh)):
                assert abs(mpmath.mpf(got.value.numerator) / got.value.denominator - want) < mpmath.mpf(10) ** -30


def test_partial_sums_consistent_with_terms():
    rep = main_series(LinearQuotient(), Shifted(LogStack(1), Fraction(4)), 60)
    total = Fraction(0)
    err = Fraction(0)
    for (k, t), (k2, s) in zip(rep.terms, rep.partial_sums):
        assert k == k2
        total += t.value
        err += t.error_bound
        assert abs(total - s.value) <= err + s.error_bound
    assert rep.partial_sum_at(60) == rep.partial_sums[-1][1]


def test_terms_nonnegative_when_phi_at_least_one():
    for spec in (GOLDEN, LinearQuotient(), PaperProp2()):
        for phi in (Constant(Fraction(1)), LogStack(1), Power(Fraction(1, 3))):
            rep = main_series(spec, phi, 30)
            assert all(t.hi >= 0 and t.value >= -t.error_bound for k, t in rep.terms if k >= 1)


def test_golden_shifted_equal_for_constant():
    a = main_series(GOLDEN, Constant(Fraction(4)), 100)
    b = shifted_series(GOLDEN, Constant(Fraction(4)), 100)
    assert [t for _, t in a.terms] == [t for _, t in b.terms]
    assert b.classification == DIVERGING and b.metadata["lambda_count"] == 0


def test_golden_logstack_both_diverge():
    assert main_series(GOLDEN, LogStack(1), K).classification == DIVERGING
    assert shifted_series(GOLDEN, LogStack(1), K).classification == DIVERGING


def test_greedy_theta_both_converge(greedy_theta_shifted):
    phi = Shifted(LogStack(1), Fraction(4))
    a = main_series(greedy_theta_shifted, phi, K)
    b = shifted_series(greedy_theta_shifted, phi, K)
    assert a.classification == CONVERGING and b.classification == CONVERGING
    # each term sits below 2 log k / k^2 once phi(q_k) > k^2
    for k, t in a.terms:
        if k >= 3:
            assert t.hi <= Fraction(2 * math.log(k) + 1e-9) / k**2 + Fraction(1, 10**20)
    assert last_block_increase(a).value > 0


MATRIX_THETAS = [GOLDEN, ConstantQuotient(2), LinearQuotient(), PaperProp2()]
MATRIX_PHIS = [Constant(Fraction(4)), LogStack(1), LogStack(2), Shifted(LogStack(1), Fraction(4)),
               Power(Fraction(1, 2))]


@pytest.mark.parametrize("theta", MATRIX_THETAS, ids=str)
@pytest.mark.parametrize("phi", MATRIX_PHIS, ids=str)
def test_main_and_shifted_never_contradict(theta, phi):
    K_max = 60 if isinstance(theta, PaperProp2) else K
    a = main_series(theta, phi, K_max).classification
    b = shifted_series(theta, phi, K_max).classification
    assert {a, b} != {DIVERGING, CONVERGING}


@pytest.mark.parametrize("theta", MATRIX_THETAS + [Custom.named("double_exponential")], ids=str)
@pytest.mark.parametrize("c", [2, 4, 100])
def test_bounded_phi_always_diverges(theta, c):
    K_max = {"prop2": 40, "custom": 14}.get(theta.kind, K)
    assert main_series(theta, Constant(Fraction(c)), K_max).classification == DIVERGING


@pytest.mark.parametrize("theta", [GOLDEN, ConstantQuotient(2), ConstantQuotient(5)], ids=str)
@pytest.mark.parametrize("phi", [Constant(Fraction(4)), LogStack(1), LogStack(2), Shifted(LogStack(1), 4)], ids=str)
def test_bounded_type_with_divergent_khinchin_sum_diverges(theta, phi):
    assert condition_i_check(theta, 100).trend_label == "bounded"
    assert khinchin_divergence_report(phi, 10**6).classification == DIVERGING
    # log log growth needs complete dyadic blocks up to k = 511 to show its trend
    assert main_series(theta, phi, 511).classification == DIVERGING


def test_condition_i_examples():
    g = condition_i_check(GOLDEN, 100)
    assert g.trend_label == "bounded" and g.holds_up_to_K
    golden_ratio = (1 + math.sqrt(5)) / 2
    assert abs(float(g.trend[-1][1].value) - golden_ratio) < 0.01
    assert condition_i_check(LinearQuotient(), 100).trend_label == "growing"
    five = condition_i_check(ConstantQuotient(5), 100)
    assert five.trend_label == "bounded"
    assert abs(float(five.fitted_C.value) - (5 + math.sqrt(29)) / 2) < 0.01
    with pytest.raises(ValidationError):
        condition_i_check(GOLDEN, 1)


def test_condition_ii_examples():
    lin = condition_ii_check(LinearQuotient(), 400, D=Fraction(1))
    assert lin.fitted_D.hi <= 1
    assert lin.skipped == [1]
    # early k violate D = 1, large k do not
    assert lin.violations and max(lin.violations) < 200
    g = condition_ii_check(GOLDEN, 400)
    # max over [K/2, K] sits at k = K/2: 1.618 / log q_200 ~ 0.017
    assert g.fitted_D.value < Fraction(1, 50)
    g2 = condition_ii_check(GOLDEN, 200)
    assert g.fitted_D.value < g2.fitted_D.value


def test_prop2_series_examples():
    assert prop2_series(PaperProp2(), 1023).classification == DIVERGING
    assert prop2_series(Custom.named("double_exponential"), 25).classification == CONVERGING
    assert prop2_series(GOLDEN, 500).classification == DIVERGING
    rep = prop2_series(GOLDEN, 10)
    assert rep.terms[0][0] == 2
    assert abs(float(rep.terms[0][1].value) - 1 / math.log(2)) < 1e-15


def test_render_int():
    assert render_int(12345) == "12345"
    big = render_int(1 << 20000)
    assert big.startswith("~") and "bits=20001" in big
