"""The Harmonic Oscillator Problem: unit masses coupled by springs.

``kappa`` is the symmetric spring-constant oracle; a diagonal entry
``kappa[v, v]`` is a spring from mass ``v`` to a fixed wall. The stiffness
matrix ``A`` has ``A[v, w] = -kappa[v, w]`` off the diagonal and
``A[v, v] = sum_w kappa[v, w]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import HamiltonianPropagator, PhaseState, evolve_hamiltonian_rk4
from .oracle import DENSE_CAP, Oracle, dense_materialize, graph_from_json, graph_to_json, nonnegative_guard
from .outcomes import EnergyDistribution

PSD_TOL = 1e-10
CONDITION_TOL = 1e-12


class SpringError(ValueError):
    """A matrix violates the physical spring-system conditions."""


class ZeroEnergyError(ValueError):
    pass


def kappa_to_A(kappa: Oracle) -> Oracle:
    """Stiffness oracle; one ``A`` row query costs one ``kappa`` row query."""
    n = kappa.dimension

    def row(v: int):
        out = []
        diag = 0.0
        for w, x in kappa.query_row(v):
            diag += x
            if w != v:
                out.append((w, -x))
        out.append((v, diag))
        return out

    bound = None if kappa.max_weight is None else kappa.degree_bound * kappa.max_weight
    return Oracle(
        (n, n), row, row_degree=min(kappa.row_degree + 1, n), symmetric=True,
        max_weight=bound, name=f"A[{kappa.name}]",
    )


def A_to_kappa(A: Oracle, *, validate: bool = True) -> Oracle:
    """Inverse of :func:`kappa_to_A`.

    With ``validate`` every queried row must have non-positive off-diagonal
    entries and a non-negative sum; violations raise :class:`SpringError`.
    ``validate=False`` lets negative wall springs through (used to reproduce
    unstable illustration systems).
    """
    n = A.dimension

    def row(v: int):
        entries = A.query_row(v)
        out = []
        total = 0.0
        for w, x in entries:
            total += x
            if w != v:
                if validate and x > 0:
                    raise SpringError(f"row {v}: positive off-diagonal A[{v},{w}] = {x}; offending row {entries}")
                out.append((w, -x))
        if validate and total < -CONDITION_TOL:
            raise SpringError(f"row {v}: negative row sum {total}; offending row {entries}")
        if abs(total) > CONDITION_TOL:
            out.append((v, total))
        return out

    bound = None if A.max_weight is None else A.degree_bound * A.max_weight
    return Oracle((n, n), row, row_degree=A.row_degree, symmetric=True, max_weight=bound, name=f"kappa[{A.name}]")


def A_row_violations(A: Oracle, rows=None) -> list[str]:
    """Rows of ``A`` breaking the spring conditions (no raising)."""
    out = []
    for v in range(A.dimension) if rows is None else rows:
        entries = A.query_row(v)
        for w, x in entries:
            if w != v and x > 0:
                out.append(f"A[{v},{w}] = {x} > 0")
        total = sum(x for _, x in entries)
        if total < -CONDITION_TOL:
            out.append(f"row {v} sum {total} < 0")
    return out


@dataclass
class SpringSystem:
    """Masses and springs with a sparse initial displacement/momentum."""

    kappa: Oracle
    q0: dict[int, float]
    p0: dict[int, float]
    t_final: float
    validating: bool = False

    @property
    def n(self) -> int:
        return self.kappa.dimension

    @property
    def spring_oracle(self) -> Oracle:
        return nonnegative_guard(self.kappa) if self.validating else self.kappa

    @property
    def A(self) -> Oracle:
        return kappa_to_A(self.spring_oracle)

    def initial_state(self) -> PhaseState:
        q = np.zeros(self.n)
        p = np.zeros(self.n)
        for v, x in self.q0.items():
            q[v] = x
        for v, x in self.p0.items():
            p[v] = x
        return PhaseState(q, p)

    @classmethod
    def from_json(cls, data: dict) -> "SpringSystem":
        kappa = graph_from_json(data, name="kappa")
        q0 = {int(v): float(x) for v, x in data.get("q0", [])}
        p0 = {int(v): float(x) for v, x in data.get("p0", [])}
        return cls(kappa, q0, p0, float(data["t_final"]))

    def to_json(self) -> dict:
        out = graph_to_json(self.kappa)
        out["q0"] = [[v, x] for v, x in sorted(self.q0.items())]
        out["p0"] = [[v, x] for v, x in sorted(self.p0.items())]
        out["t_final"] = self.t_final
        return out


HarmonicOscillatorProblem = SpringSystem


def total_energy(state: PhaseState, A: Oracle) -> float:
    """``1/2 p.p + 1/2 q.A.q``, querying only rows where ``q`` is non-zero."""
    if state.q.shape[0] != A.dimension:
        raise ValueError(f"state has {state.q.shape[0]} masses, A has {A.dimension}")
    kinetic = 0.5 * float(state.p @ state.p)
    potential = 0.0
    for v in np.flatnonzero(state.q):
        potential += state.q[v] * sum(x * state.q[w] for w, x in A.query_row(int(v)))
    return kinetic + 0.5 * potential


def total_energy_springs(state: PhaseState, kappa: Oracle) -> float:
    """Energy summed spring by spring; each edge contributes once."""
    h = 0.5 * float(state.p @ state.p)
    for v in range(kappa.dimension):
        for w, k in kappa.query_row(v):
            if w == v:
                h += 0.5 * k * state.q[v] ** 2
            elif w > v:
                h += 0.5 * k * (state.q[v] - state.q[w]) ** 2
    return h


def energy_distribution(kappa: Oracle, state: PhaseState, H: float | None = None) -> EnergyDistribution:
    """Energy fractions over masses and springs at ``state``.

    Every mass and every spring with non-zero constant is listed, even when
    it currently stores no energy.
    """
    n = kappa.dimension
    parts: dict = {v: 0.5 * float(state.p[v]) ** 2 for v in range(n)}
    for v in range(n):
        for w, k in kappa.query_row(v):
            if w == v:
                parts[(v, v)] = 0.5 * k * state.q[v] ** 2
            elif w > v:
                parts[(v, w)] = 0.5 * k * (state.q[v] - state.q[w]) ** 2
    total = sum(parts.values()) if H is None else H
    if total <= 0:
        raise ZeroEnergyError("total energy is zero; the energy distribution is undefined")
    return EnergyDistribution({s: float(e / total) for s, e in parts.items()}, total_energy=float(total))


class OscillatorEvolver:
    """Exact normal-mode evolution of one system at many times."""

    def __init__(self, system: SpringSystem, cap: int = DENSE_CAP) -> None:
        self.system = system
        self.kappa = system.spring_oracle
        self.A_dense = dense_materialize(kappa_to_A(self.kappa), cap)
        self.propagator = HamiltonianPropagator(self.A_dense)
        self.s0 = system.initial_state()
        self.H = 0.5 * float(self.s0.p @ self.s0.p) + 0.5 * float(self.s0.q @ self.A_dense @ self.s0.q)
        if self.H <= 0:
            raise ZeroEnergyError("initial state has zero energy")

    def state(self, t: float) -> PhaseState:
        q, p = self.propagator(self.s0.q, self.s0.p, t)
        return PhaseState(q, p, t)

    def distribution(self, t: float) -> EnergyDistribution:
        return energy_distribution(self.kappa, self.state(t), self.H)


def ho_output_distribution(
    system: SpringSystem, *, method: str = "auto", tol: float = 1e-9, cap: int = DENSE_CAP
) -> EnergyDistribution:
    """Energy distribution over masses and springs at ``t_final``."""
    if method == "auto":
        method = "exact" if system.n <= cap else "rk4"
    if method == "exact":
        return OscillatorEvolver(system, cap).distribution(system.t_final)
    if method == "rk4":
        s0 = system.initial_state()
        A = system.A
        H = total_energy(s0, A)
        if H <= 0:
            raise ZeroEnergyError("initial state has zero energy")
        state, _ = evolve_hamiltonian_rk4(A, s0, system.t_final, tol)
        return energy_distribution(system.spring_oracle, state, H)
    raise ValueError(f"unknown method {method!r}")


def wall_springs(A_split) -> np.ndarray:
    """Wall spring constants of a dense stiffness matrix (its row sums)."""
    return np.asarray(A_split, dtype=float).sum(axis=1)


def _min_eig(m) -> float:
    m = np.asarray(m, dtype=float)
    return float(np.linalg.eigvalsh(0.5 * (m + m.T)).min())


def classify_stability(A_pre_split, A_split) -> int:
    """Case 1: walls >= 0 and PSD; case 2: some wall < 0 but PSD; case 3: not PSD.

    A split matrix can only be PSD if the matrix it came from is, so an
    indefinite ``A_pre_split`` is case 3 without looking further.
    """
    if _min_eig(A_pre_split) < -PSD_TOL or _min_eig(A_split) < -PSD_TOL:
        return 3
    return 1 if wall_springs(A_split).min() >= -CONDITION_TOL else 2
