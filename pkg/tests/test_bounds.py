import math

import mpmath
import pytest

from deformed_iid.bounds import (LowerBoundParams, alignment_limit, failure_probability_bound, lemma_d2_check,
                                 spike_from_gap, theorem_query_budget, two_side_target)
from deformed_iid.errors import SubcriticalSpike
from deformed_iid.query_model import ThresholdSchedule, overlap_bound, tau_k

mpmath.mp.dps = 40


def test_closed_forms_against_high_precision():
    lam = mpmath.mpf(2)
    tau0 = 64 / (lam**2 * (lam - 1) ** 2) * (mpmath.log(10) + 1 / mpmath.log(lam))
    assert tau_k(ThresholdSchedule.from_lambda(2.0, 0.1, 1000), 0) == pytest.approx(float(tau0), abs=1e-10)
    gap = mpmath.mpf("0.5")
    ob = 64 * (mpmath.log(10) + 1 / gap) / (1000 * gap**2)
    assert overlap_bound(ThresholdSchedule.from_gap(0.5, 0.1, 1000), 1) == pytest.approx(float(ob), abs=1e-12)
    fp = mpmath.exp(-1 / gap - 1000 * gap**3 / 256)
    assert failure_probability_bound(LowerBoundParams(0.5, 1000, 0)) == pytest.approx(float(fp), abs=1e-14)
    assert float(fp) == pytest.approx(0.0830526, abs=1e-7)


def test_failure_probability_limits_and_monotonicity():
    vals = [failure_probability_bound(LowerBoundParams(0.25, 1000, t)) for t in range(0, 30)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(math.exp(-4.0), rel=1e-9)


def test_lower_bound_params_validation():
    with pytest.raises(ValueError):
        LowerBoundParams(0.6, 100)
    assert LowerBoundParams(0.5, 100).lam == pytest.approx(2.0)
    assert spike_from_gap(0.5) == 2.0


def test_theorem_query_budget_examples():
    assert theorem_query_budget(1000, 0.5) == 2
    assert theorem_query_budget(math.exp(10), 0.1) == 20
    assert theorem_query_budget(10**6, 0.05) in (2 * theorem_query_budget(10**6, 0.1),
                                                 2 * theorem_query_budget(10**6, 0.1) + 1)
    assert theorem_query_budget(1000, two_side=True, lam=1.2) == math.floor(math.log(1000) / 1.0)
    with pytest.raises(SubcriticalSpike):
        theorem_query_budget(1000, two_side=True, lam=1.0)


def test_alignment_limit():
    assert alignment_limit(2.0) == pytest.approx(0.866025, abs=1e-6)
    assert alignment_limit(1e8) == pytest.approx(1.0)
    assert alignment_limit(1.0 + 1e-12) < 1e-5
    with pytest.raises(SubcriticalSpike):
        alignment_limit(0.9)


def _brute_d2(lam, k_max):
    lam = mpmath.mpf(lam)
    lhs = max(lam ** (-4 * k) * (k + 1) for k in range(0, k_max + 1))
    lhs2 = max(lam ** (-4 * k) * mpmath.log(1 + k) for k in range(1, k_max + 1))
    return lhs, lhs2


@pytest.mark.parametrize("lam", [1.05, 1.1, 1.3, 2.0, 5.0])
def test_lemma_d2_against_brute_force(lam):
    res = lemma_d2_check(lam, 1000)
    lhs, lhs2 = _brute_d2(lam, 1000)
    assert res.lhs == pytest.approx(float(lhs), rel=1e-12)
    assert res.lhs2 == pytest.approx(float(lhs2), rel=1e-12)
    assert res.holds


def test_lemma_d2_examples():
    res = lemma_d2_check(2.0, 100)
    assert res.rhs == pytest.approx(1.13268, abs=1e-5)
    assert res.lhs == 1.0
    far = lemma_d2_check(1e6, 10)
    assert far.lhs == 1.0 and far.rhs == pytest.approx(1.0, abs=1e-2)


def test_two_side_target():
    assert two_side_target(2.0) == 0.25
    assert two_side_target(1.2) == pytest.approx(0.05)
