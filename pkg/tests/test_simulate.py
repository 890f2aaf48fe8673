from fractions import Fraction

import mpmath
import numpy as np
import pytest

from oracles import golden_theta, theta_from_quotients
from shrinking_targets.cf_core import GOLDEN, ConvergentTable, LinearQuotient
from shrinking_targets.errors import ConstructionError, ValidationError
from shrinking_targets.phi_funcs import Constant, LogStack, Power, Shifted
from shrinking_targets.simulate import (PRNG_NAME, borel_cantelli_statistic, minkowski_check, run_liminf_experiment,
                                        sample_targets, theta_builder_remark_i, verify_remark_i, wilson_interval)

C1 = Constant(Fraction(1))


def test_targets_deterministic_and_seeded():
    a, b = sample_targets(11, 64), sample_targets(11, 64)
    assert a.dtype == np.uint64 and np.array_equal(a, b)
    assert not np.array_equal(a, sample_targets(12, 64))
    # prefix stability: more samples extend, never reshuffle
    assert np.array_equal(sample_targets(11, 10), a[:10])


def test_liminf_deterministic():
    r1 = run_liminf_experiment(GOLDEN, LogStack(1), 20, [100, 1000, 10000], seed=3)
    r2 = run_liminf_experiment(GOLDEN, LogStack(1), 20, [100, 1000, 10000], seed=3)
    assert r1 == r2 and r1.to_dict() == r2.to_dict()
    assert r1.prng == PRNG_NAME
    r3 = run_liminf_experiment(GOLDEN, LogStack(1), 20, [100, 1000, 10000], seed=4)
    assert r3.minima != r1.minima


@pytest.mark.parametrize("theta,phi", [(GOLDEN, C1), (LinearQuotient(), LogStack(2))])
def test_monotone_per_sample_and_quantiles(theta, phi):
    r = run_liminf_experiment(theta, phi, 40, [10, 100, 1000, 10**4, 10**5], seed=1)
    for mins, hits in zip(r.minima, r.hits):
        assert all(b <= a for a, b in zip(mins, mins[1:]))
        assert all(b >= a for a, b in zip(hits, hits[1:]))
    arr = np.array(r.minima)
    for j, q in enumerate(r.quantiles):
        assert q["median"] == float(np.median(arr[:, j]))
        assert q["min"] == arr[:, j].min() and q["max"] == arr[:, j].max()
        assert q["min"] <= q["q25"] <= q["median"] <= q["q75"] <= q["max"]
    assert len(r.quantile_rows()) == 5


def test_minima_match_independent_scan():
    N = 3000
    quotients = list(range(1, 40))
    r = run_liminf_experiment(LinearQuotient(), LogStack(1), 8, [N], seed=9)
    with mpmath.workdps(50):
        theta = theta_from_quotients(quotients, 50)
        for S, mins, bnds, args, hits in zip(r.targets, r.minima, r.minima_bounds, r.argmins, r.hits):
            s = mpmath.mpf(S) / 2**64
            best, arg, h = None, None, 0
            for n in range(1, N + 1):
                d = mpmath.frac(n * theta - s)
                d = min(d, 1 - d)
                v = n * mpmath.log(max(n, 3)) * d
                if best is None or v < best:
                    best, arg = v, n
                h += v < 1
            assert abs(float(best) - mins[0]) <= bnds[0] + 1e-15
            assert args[0] == arg and hits[0] == h


def test_homogeneous_target_small_along_convergents():
    t = ConvergentTable(GOLDEN)
    r = run_liminf_experiment(GOLDEN, C1, 1, [t.q(k) for k in range(5, 25)], seed=0, targets=[0])
    for k, v in zip(range(5, 25), r.minima[0]):
        assert v <= t.q(k) / t.q(k + 1) < 1
    # q_k ||q_k theta|| tends to 1/sqrt(5) from above, so n = 1 keeps the minimum
    assert abs(r.minima[0][-1] - (3 - 5**0.5) / 2) < 1e-12
    assert r.argmins[0][-1] == 1


def test_liminf_validation():
    with pytest.raises(ValidationError):
        run_liminf_experiment(GOLDEN, C1, 0, [10], seed=0)


@pytest.fixture(scope="module")
def minkowski_golden():
    return minkowski_check(GOLDEN, 50, 10**5, seed=2)


def test_minkowski_examples(minkowski_golden):
    r = minkowski_golden
    assert r.checkpoints[-1] == 10**5 and r.checkpoints[:3] == [1, 2, 4]
    counts = np.array(r.counts)
    assert (counts[:, -1] >= 1).all()
    assert (np.diff(counts, axis=1) >= 0).all()
    # every sample keeps gaining hits over a long window
    j = r.checkpoints.index(16)
    assert (counts[:, -1] > counts[:, j]).mean() >= 0.95
    assert minkowski_check(GOLDEN, 0, 100, seed=2).counts == []


def test_minkowski_hits_per_window_match_expectation(minkowski_golden):
    """E #{N < n <= 4N : ||n theta - s|| < 1/(4n)} = sum 1/(2n) ~ log(4)/2 for uniform s."""
    r = minkowski_golden
    counts = np.array(r.counts)
    expected = sum(1 / (2 * n) for n in range(1 << 12, (1 << 14) + 1)) + sum(1 / (2 * n) for n in range(1 << 14, 1 << 16))
    j = r.checkpoints.index(1 << 12)
    observed = (counts[:, j + 4] - counts[:, j]).mean()  # N = 2^12 -> 2^16, two 4x windows
    assert abs(observed - expected) < 4 * (expected / 50) ** 0.5


@pytest.mark.xfail(strict=True, reason="P(a hit in (N, 4N]) <= E[hits] = log(4)/2 < 0.95, so the 95% example cannot hold")
def test_minkowski_counts_grow_from_N_to_4N_for_95_percent(minkowski_golden):
    r = minkowski_golden
    counts = np.array(r.counts)
    j = r.checkpoints.index(1 << 14)
    assert (counts[:, j + 2] > counts[:, j]).mean() >= 0.95


def test_minkowski_counts_match_enumeration():
    r = minkowski_check(GOLDEN, 5, 2000, seed=8)
    with mpmath.workdps(40):
        theta = golden_theta(40)
        for S, counts in zip(r.targets, r.counts):
            s = mpmath.mpf(S) / 2**64
            c = 0
            for n in range(1, 2001):
                d = mpmath.frac(n * theta - s)
                c += min(d, 1 - d) < mpmath.mpf(1) / (4 * n)
            assert counts[-1] == c


def test_builder_power_one():
    spec = theta_builder_remark_i(Power(Fraction(1)), 10)
    t = ConvergentTable(spec)
    assert all(t.q(k) > k * k for k in range(1, 11))
    assert max(spec.prefix) <= 3
    # greedy: decreasing any quotient breaks the condition at that index
    for k, a in enumerate(spec.prefix, start=1):
        if a > 1:
            q = (a - 1) * t.q(k - 1) + t.q(k - 2)
            assert q <= k * k


def test_builder_logstack(greedy_theta_log):
    t = ConvergentTable(greedy_theta_log)
    with mpmath.workdps(30):
        for k in range(1, 13):
            assert mpmath.log(max(t.q(k), 3)) > k * k
    assert greedy_theta_log.prefix[0] == 1
    verify_remark_i(greedy_theta_log, LogStack(1), 12)


def test_builder_base_case_and_failures():
    assert theta_builder_remark_i(LogStack(1), 1).prefix == (1,)
    with pytest.raises(ConstructionError):
        theta_builder_remark_i(Constant(Fraction(2)), 3, max_quotient_bits=64)
    with pytest.raises(ValidationError):
        theta_builder_remark_i(LogStack(1), 0)
    with pytest.raises(ConstructionError):
        verify_remark_i(GOLDEN, LogStack(1), 5)


def test_greedy_theta_shifted_postcondition(greedy_theta_shifted):
    verify_remark_i(greedy_theta_shifted, Shifted(LogStack(1), Fraction(4)), 201)


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and abs((lo + hi) / 2 - 0.5) < 1e-12
    z = 1.959963984540054
    assert abs((hi - lo) / 2 - z / (1 + z * z / 100) * (0.25 / 100 + z * z / 40000) ** 0.5) < 1e-12
    lo0, hi0 = wilson_interval(0, 100)
    assert lo0 == 0 and 0 < hi0 < 0.05
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_borel_cantelli_small_and_empty():
    empty = borel_cantelli_statistic(GOLDEN, Constant(Fraction(4)), range(1, 5), 0, seed=1)
    assert empty.rows == [] and empty.M == 0
    r = borel_cantelli_statistic(GOLDEN, Constant(Fraction(4)), range(1, 9), 2000, seed=1)
    assert [row.k for row in r.rows] == list(range(1, 9))
    assert all(row.disagreements == 0 for row in r.rows)
    cum = [row.median_cumulative for row in r.rows]
    assert all(b >= a for a, b in zip(cum, cum[1:]))
    assert r.to_dict()["rows"][0]["certified_disagreements"] == 0
