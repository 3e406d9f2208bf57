import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from support import A_from_kappa, expm_oscillator, random_kappa
from walkosc.harmonic_oscillator import OscillatorEvolver, SpringSystem, ZeroEnergyError
from walkosc.ho_to_qw import (
    WalkLayout, build_B, build_fold, build_walk_T, check_subspace_constraint, full_reduction, map_initial_state,
    reconstruct_PHO, verify_BtB_equals_A,
)
from walkosc.oracle import dense_materialize, from_dense, from_edges
from walkosc.outcomes import column_sums
from walkosc.quantum_walk import QuantumWalkEvolver


def single_spring(k=1.0):
    return from_edges(2, [(0, 1, k)])


def test_B_examples():
    B, idx = build_B(single_spring(4.0))
    assert B.query_row(idx.index(0, 0)) == [(0, 2.0), (1, -2.0)]
    B, idx = build_B(from_edges(1, [(0, 0, 9.0)]))
    assert B.query_row(0) == [(0, 3.0)]


def test_B_column_lists_both_signs():
    kappa = from_edges(3, [(0, 1, 1.0), (1, 2, 4.0)])
    B, idx = build_B(kappa)
    assert sorted(B.query_col(1)) == sorted([(idx.index(0, 0), -1.0), (idx.index(1, 0), 2.0)])


def test_BtB_check_catches_corruption():
    rng = np.random.default_rng(3)
    k = random_kappa(rng, 6)
    B, _ = build_B(from_dense(k))
    Bd = dense_materialize(B)
    assert verify_BtB_equals_A(Bd, A_from_kappa(k)).passed
    Bd[np.nonzero(Bd)[0][0], np.nonzero(Bd)[1][0]] *= 1.01
    report = verify_BtB_equals_A(Bd, A_from_kappa(k))
    assert not report.passed and report.max_error > 1e-4


def test_single_spring_walk():
    B, idx = build_B(single_spring())
    T = dense_materialize(build_walk_T(B))
    layout = WalkLayout(2, idx)
    e = idx.index(0, 0)
    assert T.min() >= 0 and np.array_equal(T, T.T)
    v1, v2 = layout.v1, layout.v2
    # +1 at mass 0 stays in copy, -1 at mass 1 crosses copies
    assert T[layout.e1 + e, v1 + 0] == 1 and T[layout.e1 + e, v2 + 1] == 1
    assert T[layout.e2 + e, v2 + 0] == 1 and T[layout.e2 + e, v1 + 1] == 1
    assert T.sum() == 8


def test_initial_amplitudes():
    kappa = single_spring()
    B, idx = build_B(kappa)
    layout = WalkLayout(2, idx)
    c = map_initial_state({}, {0: 1.0}, kappa, B, layout)
    assert c == {layout.v1: pytest.approx(1 / math.sqrt(2)), layout.v2: pytest.approx(-1 / math.sqrt(2))}
    c = map_initial_state({0: 1.0}, {}, kappa, B, layout)
    e = idx.index(0, 0)
    assert c[layout.e1 + e] == pytest.approx(-1j / math.sqrt(2)) and c[layout.e2 + e] == pytest.approx(1j / math.sqrt(2))
    with pytest.raises(ZeroEnergyError):
        map_initial_state({}, {}, kappa, B, layout)


def _system(seed, n, t=1.0):
    rng = np.random.default_rng(seed)
    k = random_kappa(rng, n)
    return SpringSystem(from_dense(k), dict(enumerate(rng.normal(size=n))), dict(enumerate(rng.normal(size=n))), t)


def test_amplitude_energy_identity():
    sys = _system(4, 7)
    problem, _, art = full_reduction(sys)
    x = problem.initial_vector()
    assert np.vdot(x, x).real == pytest.approx(1.0, abs=1e-12)
    m = art.layout.edges.size
    edges = x[:2 * m]
    q = np.array([sys.q0.get(v, 0.0) for v in range(7)])
    # edge weight is the potential energy share
    assert np.vdot(edges, edges).real == pytest.approx(0.5 * q @ dense_materialize(sys.A) @ q / art.H, rel=1e-10)


def test_subspace_preserved_and_detects_corruption():
    sys = _system(9, 6)
    problem, _, art = full_reduction(sys)
    walk = QuantumWalkEvolver(problem)
    for t in (1.0, 2.0, 5.0):
        assert check_subspace_constraint(walk.amplitudes(t), art.B, art.layout).passed
    c = walk.amplitudes(1.0).copy()
    c[art.layout.v1] += 1e-3j
    assert not check_subspace_constraint(c, art.B, art.layout).passed


def test_fold_is_stochastic():
    sys = _system(1, 5)
    _, fold, _ = full_reduction(sys)
    report = column_sums(fold)
    assert report.max_error < 1e-12 and report.min_entry >= 0


def test_fold_sum_and_literal_half():
    sys = _system(2, 5, 1.7)
    problem, fold, art = full_reduction(sys)
    p_ho = OscillatorEvolver(sys).distribution(1.7)
    folded = reconstruct_PHO(QuantumWalkEvolver(problem).distribution(1.7), fold, art.H)
    assert p_ho.max_abs_diff(folded) < 1e-9
    assert folded.total() == pytest.approx(1.0, abs=1e-9)
    # averaging the copies instead of summing loses exactly half
    for s in folded.probs:
        assert p_ho[s] - 0.5 * folded[s] == pytest.approx(0.5 * p_ho[s], abs=1e-9)


def test_walk_position_matches_reference_oscillator():
    sys = _system(6, 4)
    problem, _, art = full_reduction(sys)
    q0 = np.array([sys.q0[v] for v in range(4)])
    p0 = np.array([sys.p0[v] for v in range(4)])
    q, p = expm_oscillator(dense_materialize(sys.A), q0, p0, 2.0)
    c = QuantumWalkEvolver(problem).amplitudes(2.0)
    L = art.layout
    v = (c[L.v1:L.v1 + 4] - c[L.v2:L.v2 + 4]) / math.sqrt(2)
    assert np.allclose(v.real * math.sqrt(2 * art.H), p, atol=1e-9)


def test_query_costs():
    sys = _system(7, 8)
    _, _, art = full_reduction(sys)
    d = art.kappa.degree_bound
    for r in range(art.layout.size):
        art.kappa.counter.read_and_reset()
        art.T.query_row(r)
        cost = art.kappa.counter.read_and_reset()
        assert cost <= (2 if r < art.layout.v1 else 2 * (d + 1))


def test_zero_energy_rejected():
    with pytest.raises(ZeroEnergyError):
        full_reduction(SpringSystem(single_spring(), {}, {}, 1.0))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 10), st.sampled_from([0.3, 1.0, 4.0]))
def test_reduction_reproduces_oscillator(seed, n, t):
    sys = _system(seed, n, t)
    problem, fold, art = full_reduction(sys)
    assert verify_BtB_equals_A(art.B, dense_materialize(sys.A)).passed
    assert dense_materialize(art.T).min() >= 0
    folded = reconstruct_PHO(QuantumWalkEvolver(problem).distribution(t), fold, art.H)
    assert OscillatorEvolver(sys).distribution(t).max_abs_diff(folded) < 1e-9


def test_fold_rejects_missing_spring():
    kappa = single_spring()
    _, idx = build_B(kappa)
    fold = build_fold(kappa, WalkLayout(2, idx))
    with pytest.raises(Exception, match="no spring"):
        fold.row_query((1, 1))
