import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from support import A_from_kappa, random_kappa
from walkosc.dynamics import PhaseState
from walkosc.harmonic_oscillator import (
    A_row_violations, A_to_kappa, OscillatorEvolver, SpringError, SpringSystem, ZeroEnergyError, classify_stability,
    energy_distribution, ho_output_distribution, kappa_to_A, total_energy, total_energy_springs, wall_springs,
)
from walkosc.instances import T1, T2, T3
from walkosc.oracle import OracleError, dense_materialize, from_dense, from_edges
from walkosc.qw_to_ho import build_doubled_A

DOUBLED_B = np.array([[5, 0, 0, -4], [0, 5, -4, 0], [0, -4, 5, 0], [-4, 0, 0, 5]], dtype=float)


def test_single_spring_A():
    A = dense_materialize(kappa_to_A(from_edges(2, [(0, 1, 1.0)])))
    assert np.array_equal(A, [[1, -1], [-1, 1]])


def test_appendix_b_doubled_A_from_springs():
    kappa = from_edges(4, [(z, z, 1.0) for z in range(4)] + [(0, 3, 4.0), (1, 2, 4.0)])
    assert np.array_equal(dense_materialize(kappa_to_A(kappa)), DOUBLED_B)


def test_doubled_example1_from_springs():
    # springs of the doubled example: read off the doubled stiffness matrix
    A, kappa = build_doubled_A(from_dense(T1), unsafe=True)
    assert np.array_equal(dense_materialize(kappa_to_A(kappa)), dense_materialize(A))


def test_kappa_to_A_one_query_per_row():
    kappa = from_edges(3, [(0, 1, 1.0), (1, 2, 2.0)])
    A = kappa_to_A(kappa)
    kappa.counter.read_and_reset()
    A.query_row(1)
    assert kappa.counter.read_and_reset() == 1


def test_A_to_kappa():
    kappa = A_to_kappa(from_dense(np.array([[1.0, -1.0], [-1.0, 1.0]])))
    assert kappa.query_row(0) == [(1, 1.0)]
    with pytest.raises(SpringError, match="positive off-diagonal"):
        A_to_kappa(from_dense(np.array([[1.0, 1.0], [1.0, 1.0]]))).query_row(0)
    with pytest.raises(SpringError, match="negative row sum"):
        A_to_kappa(from_dense(np.array([[1.0, -2.0], [-2.0, 1.0]]))).query_row(1)
    assert A_row_violations(from_dense(np.array([[1.0, 1.0], [1.0, 1.0]])))


def test_total_energy_examples():
    kappa = from_edges(2, [(0, 1, 1.0)])
    A = kappa_to_A(kappa)
    assert total_energy(PhaseState(np.zeros(2), np.array([1.0, 0.0])), A) == pytest.approx(0.5)
    assert total_energy(PhaseState(np.array([1.0, 0.0]), np.zeros(2)), A) == pytest.approx(0.5)
    doubled = from_dense(DOUBLED_B)
    q = np.array([1, 0, -1, 0]) / math.sqrt(5)
    assert total_energy(PhaseState(q, np.zeros(4)), doubled) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        total_energy(PhaseState(np.zeros(3), np.zeros(3)), A)


def test_energy_distribution_examples():
    kappa = from_edges(2, [(0, 1, 1.0)])
    dist = energy_distribution(kappa, PhaseState(np.zeros(2), np.array([1.0, 0.0])))
    assert dist[0] == 1.0 and dist[(0, 1)] == 0.0
    assert energy_distribution(kappa, PhaseState(np.array([1.0, 0.0]), np.zeros(2)))[(0, 1)] == pytest.approx(1.0)
    with pytest.raises(ZeroEnergyError):
        energy_distribution(kappa, PhaseState(np.zeros(2), np.zeros(2)))


def test_appendix_b_energy_fractions():
    kappa = from_edges(4, [(z, z, 1.0) for z in range(4)] + [(0, 3, 4.0), (1, 2, 4.0)])
    q = np.array([1, 0, -1, 0]) / math.sqrt(5)
    dist = energy_distribution(kappa, PhaseState(q, np.zeros(4)))
    assert dist[(0, 0)] == pytest.approx(0.1, abs=1e-12)
    assert dist[(0, 3)] == pytest.approx(0.4, abs=1e-12)
    assert dist.total() == pytest.approx(1.0, abs=1e-12)


def test_ho_output_methods():
    sys = SpringSystem(from_edges(3, [(0, 1, 1.0), (1, 2, 0.5), (2, 2, 0.3)]), {0: 1.0}, {2: -0.5}, 2.0)
    exact = ho_output_distribution(sys, method="exact")
    rk4 = ho_output_distribution(sys, method="rk4", tol=1e-11)
    assert exact.max_abs_diff(rk4) < 1e-8
    assert exact.total() == pytest.approx(1.0, abs=1e-9)
    assert ho_output_distribution(SpringSystem(sys.kappa, {}, {1: 1.0}, 0.0))[1] == pytest.approx(1.0)
    with pytest.raises(ZeroEnergyError):
        ho_output_distribution(SpringSystem(sys.kappa, {}, {}, 1.0))


def test_validating_mode():
    sys = SpringSystem(from_edges(2, [(0, 1, -1.0)]), {}, {0: 1.0}, 1.0, validating=True)
    with pytest.raises(OracleError, match="negative"):
        sys.spring_oracle.query_row(0)


def test_system_file_round_trip():
    sys = SpringSystem(from_edges(3, [(0, 1, 1.0), (2, 2, 0.5)]), {0: 0.3}, {2: -1.0}, 1.5)
    back = SpringSystem.from_json(json.loads(json.dumps(sys.to_json())))
    assert back.q0 == sys.q0 and back.p0 == sys.p0 and back.t_final == 1.5
    assert np.array_equal(dense_materialize(back.kappa), dense_materialize(sys.kappa))


def _split(T):
    A, _ = build_doubled_A(from_dense(T), unsafe=True)
    return T @ T, dense_materialize(A)


def test_stability_cases():
    assert classify_stability(*_split(T1)) == 1
    pre, split = _split(T2)
    assert classify_stability(pre, split) == 3
    assert wall_springs(split).tolist() == [3, -1, -1, -1, 3, -1, -1, -1]
    assert classify_stability(*_split(T3)) == 1


def test_stability_case_two():
    # negative wall at mass 0 but still positive definite
    split = np.array([[1.0, -2.0], [-2.0, 5.0]])
    assert wall_springs(split).tolist() == [-1.0, 3.0]
    assert classify_stability(split, split) == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 32))
def test_kappa_A_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    k = random_kappa(rng, n)
    kappa = from_dense(k)
    A = kappa_to_A(kappa)
    assert np.allclose(dense_materialize(A), A_from_kappa(k), atol=1e-12)
    assert A_row_violations(A) == []
    assert np.allclose(dense_materialize(A_to_kappa(A)), k, atol=1e-12)
    state = PhaseState(rng.normal(size=n), rng.normal(size=n))
    assert total_energy(state, A) == pytest.approx(total_energy_springs(state, kappa), rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 12))
def test_distribution_sums_to_one_at_all_times(seed, n):
    rng = np.random.default_rng(seed)
    k = random_kappa(rng, n)
    sys = SpringSystem(from_dense(k), dict(enumerate(rng.normal(size=n))), dict(enumerate(rng.normal(size=n))), 1.0)
    ev = OscillatorEvolver(sys)
    for t in (0.0, 0.4, 3.0, 10.0):
        d = ev.distribution(t)
        assert d.total() == pytest.approx(1.0, abs=1e-9)
        assert min(d.probs.values()) >= 0
