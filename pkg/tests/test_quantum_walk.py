import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from support import random_walk_matrix
from walkosc.instances import T1
from walkosc.oracle import OracleError, from_dense, identity, oracle_sum
from walkosc.quantum_walk import (
    PhaseError, QuantumWalkEvolver, QuantumWalkProblem, global_phase_rotate, qw_output_distribution, validate_qw_problem,
)


def problem(T, initial, t):
    return QuantumWalkProblem(from_dense(np.asarray(T, dtype=float)), initial, t)


def test_t_zero_keeps_start_vertex():
    assert qw_output_distribution(problem(T1, {2: 1.0}, 0.0))[2] == pytest.approx(1.0)


def test_two_vertex_transfer():
    dist = qw_output_distribution(problem([[0, 1], [1, 0]], {0: 1.0}, math.pi / 2))
    assert dist[0] == pytest.approx(0.0, abs=1e-12) and dist[1] == pytest.approx(1.0)


def test_path_spreads_evenly():
    # [DERIVED] path eigenvalues 0, +-sqrt(2): c_1(t) = cos(sqrt(2) t)
    dist = qw_output_distribution(problem(T1, {1: 1.0}, math.pi / (2 * math.sqrt(2))))
    assert [dist[v] for v in range(3)] == pytest.approx([0.5, 0.0, 0.5], abs=1e-12)


def test_rk4_method_agrees():
    p = problem(T1, {1: 1.0}, 1.3)
    exact = qw_output_distribution(p, method="exact")
    rk4 = qw_output_distribution(p, method="rk4", tol=1e-11)
    assert exact.max_abs_diff(rk4) < 1e-9
    with pytest.raises(ValueError):
        qw_output_distribution(p, method="chebyshev")


def test_global_phase_rotation():
    assert global_phase_rotate({0: 1j}) == {0: 1 + 0j}
    out = global_phase_rotate({0: cmath.exp(1j * math.pi / 4) * 0.6, 1: cmath.exp(1j * math.pi / 4) * 0.8})
    assert out[0] == pytest.approx(0.6) and out[1] == pytest.approx(0.8)
    assert global_phase_rotate({0: 2.0}, imaginary=True)[0] == pytest.approx(2j)
    with pytest.raises(PhaseError):
        global_phase_rotate({0: 1 / math.sqrt(2), 1: 1j / math.sqrt(2)})


def test_validation_reports():
    assert validate_qw_problem(problem(T1, {1: 1.0}, 1.0)).valid
    bad = validate_qw_problem(problem([[0, -1], [-1, 0]], {0: 1.0}, 1.0))
    assert any("negative weight" in v for v in bad.violations)
    unnorm = validate_qw_problem(problem(T1, {0: 1.0, 1: 1.0}, 1.0))
    assert any("squared norm" in v for v in unnorm.violations)


def test_validation_samples_large_graphs():
    n = 200
    T = oracle_sum(identity(n), identity(n))
    report = validate_qw_problem(QuantumWalkProblem(T, {0: 1.0}, 1.0), sample_rows=50)
    assert report.valid and report.rows_checked == 50


def test_validating_mode_guards_queries():
    p = QuantumWalkProblem(from_dense(np.array([[0.0, -1.0], [-1.0, 0.0]])), {0: 1.0}, 1.0, validating=True)
    with pytest.raises(OracleError, match="negative"):
        p.walk_oracle.query_row(0)


def test_problem_file_round_trip():
    p = problem(T1, {0: 0.6, 2: 0.8j}, 2.0)
    q = QuantumWalkProblem.from_json(json.loads(json.dumps(p.to_json())))
    assert q.initial == {0: 0.6 + 0j, 2: 0.8j} and q.t_final == 2.0
    assert np.array_equal(q.initial_vector(), p.initial_vector())


def test_evolver_many_times():
    ev = QuantumWalkEvolver(problem(T1, {0: 1.0}, 1.0))
    for t in (0.0, 0.7, 4.0):
        assert ev.distribution(t).total() == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 14), st.floats(0.0, 2 * math.pi), st.floats(0.0, 5.0))
def test_phase_and_shift_invariance(seed, n, phi, t):
    rng = np.random.default_rng(seed)
    T = random_walk_matrix(rng, n)
    x = rng.normal(size=n)
    x /= np.linalg.norm(x)
    base = qw_output_distribution(QuantumWalkProblem(from_dense(T), dict(enumerate(x + 0j)), t))
    rotated = qw_output_distribution(
        QuantumWalkProblem(from_dense(T), {v: a * cmath.exp(1j * phi) for v, a in enumerate(x)}, t)
    )
    assert base.max_abs_diff(rotated) < 1e-12
    d = max(1, int((T != 0).sum(axis=1).max()))
    for gamma in (1.0, 3.0 * d):
        shifted = qw_output_distribution(QuantumWalkProblem(from_dense(T + gamma * np.eye(n)), dict(enumerate(x + 0j)), t))
        assert base.max_abs_diff(shifted) < 1e-10
    assert base.total() == pytest.approx(1.0, abs=1e-9)
