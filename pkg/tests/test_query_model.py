import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from deformed_iid.ensembles import DeformedSpec, Seed, build_planted, sample_sphere, sample_stiefel
from deformed_iid.errors import InvalidDelta, InvalidQuery, NonOrthogonalQuery, QueryBudgetExceeded
from deformed_iid.query_model import (QueryLedger, QueryOracle, ThresholdSchedule, append_output_query,
                                      ledger_dump, overlap_bound, overlap_potential,
                                      projected_two_side_responses, query, reveal_source, tau_k)


def _unit(rng, d, complex_=True):
    x = rng.standard_normal(d) + (1j * rng.standard_normal(d) if complex_ else 0)
    return x / np.linalg.norm(x)


def test_identity_oracle_echoes_and_counts(rng):
    oracle = QueryOracle(np.eye(5))
    for k in range(1, 4):
        v = _unit(rng, 5)
        assert np.allclose(query(oracle, v), v)
        assert oracle.count == k
    assert oracle.ledger.k == 3


def test_oracle_budget_and_validation(rng):
    oracle = QueryOracle(np.eye(4), budget=1)
    oracle.query(_unit(rng, 4))
    with pytest.raises(QueryBudgetExceeded):
        oracle.query(_unit(rng, 4))
    with pytest.raises(InvalidQuery):
        QueryOracle(np.eye(4)).query(np.ones(4))
    with pytest.raises(InvalidQuery):
        QueryOracle(np.eye(4)).query(np.ones(3) / math.sqrt(3))


def test_default_budget_is_theorem_budget():
    inst = build_planted(DeformedSpec(d=1000, lambdas=(2.0,), shape="one-side-rank1", seed=Seed(0)))
    assert QueryOracle(inst).budget == 2  # floor(ln 1000 / 2.5)
    assert QueryOracle(np.eye(3)).budget == math.inf


def test_oracle_hides_matrix_but_harness_can_reveal():
    inst = build_planted(DeformedSpec(d=20, lambdas=(2.0,), shape="one-side-rank1", seed=Seed(1)))
    oracle = QueryOracle(inst, budget=3)
    assert not any("matrix" in name and not name.startswith("_") for name in dir(oracle))
    assert reveal_source(oracle) is inst
    ledger = oracle.ledger
    ledger.queries.append(np.zeros(20))
    assert oracle.ledger.k == 0


def test_conditional_mean_of_response():
    # E[M v | v] over fresh noise equals lam (u* v) u.
    d, n, lam = 50, 1000, 2.0
    inst = build_planted(DeformedSpec(d=d, lambdas=(lam,), shape="one-side-rank1", seed=Seed(2)))
    u = inst.truth
    v = _unit(np.random.default_rng(3), d, complex_=False)
    v = v + 0.5 * u
    v /= np.linalg.norm(v)
    mean = np.zeros(d)
    for i in range(n):
        other = build_planted(DeformedSpec(d=d, lambdas=(lam,), shape="one-side-rank1", seed=Seed(2, i + 1)))
        m = other.noise + lam * np.outer(u, u)
        mean += QueryOracle(m, budget=1).query(v)
    mean /= n
    target = lam * (u @ v) * u
    assert np.max(np.abs(mean - target)) <= 3.0 / math.sqrt(n * d)


def test_ledger_basis_is_orthonormal_and_reconstructs(rng):
    d = 60
    m = rng.standard_normal((d, d))
    ledger = QueryLedger(d)
    for _ in range(12):
        v = _unit(rng, d)
        ledger.record(v, m @ v)
    b = ledger.basis
    assert b.shape == (d, 24)
    assert np.allclose(b.T @ b, np.eye(24), atol=1e-12)
    assert np.allclose(b @ ledger.coefficients, ledger.raw_directions(), atol=1e-12)
    assert np.allclose(ledger.basis_responses(), m @ b, atol=1e-10)
    assert ledger.basis_at(3).shape[1] == 6
    with pytest.raises(ValueError):
        b[0, 0] = 1.0


def test_ledger_skips_dependent_parts(rng):
    d = 10
    ledger = QueryLedger(d)
    v = _unit(rng, d, complex_=False)
    ledger.record(v, v)
    ledger.record(-v, -v)
    assert ledger.basis.shape[1] == 1
    assert ledger.widths == [1, 1]


def test_mgs_stays_orthogonal_for_nearly_parallel_queries(rng):
    d = 30
    base = _unit(rng, d, complex_=False)
    ledger = QueryLedger(d)
    for j in range(10):
        v = base + 1e-6 * rng.standard_normal(d)
        v /= np.linalg.norm(v)
        ledger.record(v, v)
    b = ledger.basis
    assert np.max(np.abs(b.T @ b - np.eye(b.shape[1]))) < 1e-10


def test_two_side_ledger_requires_adjoint(rng):
    ledger = QueryLedger(5, "two-side")
    with pytest.raises(ValueError):
        ledger.record(_unit(rng, 5), np.zeros(5))


def test_projected_responses(rng):
    d = 20
    m = rng.standard_normal((d, d))
    ledger = QueryLedger(d, "two-side")
    v = _unit(rng, d, complex_=False)
    w, z = projected_two_side_responses(ledger, v, m)
    assert np.allclose(w, m @ v) and np.allclose(z, m.T @ v)
    q = sample_stiefel(d, 4, "real", Seed(4)).columns
    for j in range(3):
        ledger.record(q[:, j], m @ q[:, j], m.T @ q[:, j])
    w, z = projected_two_side_responses(ledger, q[:, 3], m)
    assert np.max(np.abs(ledger.basis.T @ w)) < 1e-10
    assert np.max(np.abs(ledger.basis.T @ z)) < 1e-10
    with pytest.raises(NonOrthogonalQuery):
        projected_two_side_responses(ledger, q[:, 0], m)


def test_overlap_potential_examples(rng):
    q = sample_stiefel(30, 4, "real", Seed(5)).columns
    assert overlap_potential(q, q[:, 2]) == pytest.approx(1.0)
    u = sample_stiefel(30, 5, "real", Seed(5)).columns[:, 4]
    perp = u - q @ (q.T @ u)
    perp /= np.linalg.norm(perp)
    assert overlap_potential(q, perp) == pytest.approx(0.0, abs=1e-14)
    assert overlap_potential(np.zeros((30, 0)), u) == 0.0


def test_overlap_potential_exchangeability():
    d, k = 500, 5
    v = sample_stiefel(d, 2 * k, "real", Seed(6)).columns
    u = sample_sphere(d, "real", np.random.default_rng(7), size=10000)
    phi = np.sum((u @ v) ** 2, axis=1)
    assert abs(phi.mean() - 2 * k / d) < 0.005


def test_tau_closed_forms():
    sched = ThresholdSchedule.from_lambda(2.0, 0.1, 1000)
    assert sched.tau0 == pytest.approx(16 * (math.log(10) + 1 / math.log(2)), abs=1e-9)
    assert tau_k(sched, 0) == pytest.approx(59.9245, abs=1e-3)
    assert tau_k(sched, 1) / tau_k(sched, 0) == pytest.approx(2.0**4)
    lam = 3.0
    edge = ThresholdSchedule.from_lambda(lam, math.exp(-1), 100)
    assert edge.tau0 == pytest.approx(64 / lam**2 / (lam - 1) ** 2 * (1 + 1 / math.log(lam)))


def test_delta_validation():
    for bad in (0.0, 0.5, 1.0):
        with pytest.raises(InvalidDelta):
            ThresholdSchedule.from_lambda(2.0, bad, 10)


def test_overlap_bound_examples():
    sched = ThresholdSchedule.from_gap(0.5, 0.1, 1000)
    assert overlap_bound(sched, 1) == pytest.approx(64 * (math.log(10) + 2) / (1000 * 0.25), abs=1e-12)
    assert overlap_bound(sched, 1) == pytest.approx(1.1015, abs=1e-3)
    assert overlap_bound(sched, 2) / overlap_bound(sched, 1) == pytest.approx(2.0**4)
    big = ThresholdSchedule.from_gap(0.5, 0.1, 4000)
    assert overlap_bound(big, 3) * 4 == pytest.approx(overlap_bound(sched, 3))


def test_append_output_query_in_span_keeps_width(rng):
    d = 12
    ledger = QueryLedger(d)
    q = sample_stiefel(d, 2, "real", Seed(8)).columns
    for j in range(2):
        ledger.record(q[:, j], q[:, j])
    vhat = (q[:, 0] + 1j * q[:, 1]) / math.sqrt(2)
    out = append_output_query(ledger, vhat)
    assert out.basis.shape[1] == 2
    assert ledger.basis.shape[1] == 2
    empty = append_output_query(QueryLedger(d), vhat)
    assert empty.basis.shape[1] <= 2


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=0, max_value=4))
def test_output_query_dominates_overlap(seed, k):
    rng = np.random.default_rng(seed)
    d = 100
    ledger = QueryLedger(d)
    for _ in range(k):
        v = _unit(rng, d)
        ledger.record(v, v)
    vhat, u = _unit(rng, d), _unit(rng, d)
    assert append_output_query(ledger, vhat).potential(u) - abs(np.vdot(vhat, u)) ** 2 >= -1e-10


def test_ledger_dump_fields(rng):
    ledger = QueryLedger(4)
    v = _unit(rng, 4)
    ledger.record(v, 2 * v)
    sched = ThresholdSchedule.from_lambda(2.0, 0.1, 4)
    rec = ledger_dump(ledger, v, sched)[0]
    assert rec["k"] == 1 and rec["phi"] == pytest.approx(1.0)
    assert np.allclose(np.array(rec["query_re"]) + 1j * np.array(rec["query_im"]), v)
