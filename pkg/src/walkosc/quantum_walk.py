"""The Quantum Walk Problem: a particle hopping on a weighted graph."""

from __future__ import annotations

import cmath
import random
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .dynamics import SchrodingerPropagator, evolve_schrodinger_rk4
from .oracle import DENSE_CAP, Oracle, OracleError, dense_materialize, graph_from_json, graph_to_json, nonnegative_guard
from .outcomes import VertexDistribution

NORM_TOL = 1e-10
SUPPORT_THRESHOLD = 1e-12


class PhaseError(ValueError):
    """Amplitudes do not share a common complex phase."""


@dataclass
class QuantumWalkProblem:
    """Walk on the graph of ``T`` from a sparse initial state.

    ``initial`` maps vertex -> complex amplitude. With ``validating`` set,
    every query to ``T`` made through :attr:`walk_oracle` is checked for
    negative weights.
    """

    T: Oracle
    initial: dict[int, complex]
    t_final: float
    validating: bool = False

    @property
    def n(self) -> int:
        return self.T.dimension

    @property
    def walk_oracle(self) -> Oracle:
        return nonnegative_guard(self.T) if self.validating else self.T

    def initial_vector(self) -> np.ndarray:
        c = np.zeros(self.n, dtype=complex)
        for v, amp in self.initial.items():
            c[v] = amp
        return c

    @classmethod
    def from_json(cls, data: dict) -> "QuantumWalkProblem":
        T = graph_from_json(data, name="T")
        initial: dict[int, complex] = {}
        for v, re, im in data["initial"]:
            initial[int(v)] = initial.get(int(v), 0j) + complex(float(re), float(im))
        return cls(T, initial, float(data["t_final"]))

    def to_json(self) -> dict:
        out = graph_to_json(self.T)
        out["initial"] = [[v, a.real, a.imag] for v, a in sorted(self.initial.items())]
        out["t_final"] = self.t_final
        return out


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    rows_checked: int = 0

    @property
    def valid(self) -> bool:
        return not self.violations


def validate_qw_problem(problem: QuantumWalkProblem, *, sample_rows: int = 1000, seed: int = 0) -> ValidationReport:
    """Check weights, degree bound and normalization without raising.

    Rows are scanned exhaustively for ``N <= 64`` and sampled otherwise.
    """
    report = ValidationReport()
    n = problem.n
    if n <= 64:
        rows: Iterable[int] = range(n)
    else:
        rng = random.Random(seed)
        rows = sorted(rng.sample(range(n), min(sample_rows, n)))
    for v in rows:
        report.rows_checked += 1
        try:
            row = problem.T.query_row(v)
        except OracleError as exc:
            report.violations.append(str(exc))
            continue
        for w, x in row:
            if x < 0:
                report.violations.append(f"negative weight T[{v},{w}] = {x}")
    for v in problem.initial:
        if not 0 <= v < n:
            report.violations.append(f"initial amplitude on vertex {v} outside [0, {n})")
    norm = sum(abs(a) ** 2 for a in problem.initial.values())
    if abs(norm - 1.0) > NORM_TOL:
        report.violations.append(f"initial state has squared norm {norm:.12g}, expected 1")
    if problem.t_final < 0:
        report.violations.append(f"t_final must be non-negative, got {problem.t_final}")
    return report


def global_phase_rotate(
    initial: dict[int, complex], phi: float | None = None, *, imaginary: bool = False, tol: float = 1e-10
) -> dict[int, complex]:
    """Multiply every amplitude by ``exp(i phi)`` so they become real.

    Without ``phi`` the phase of the largest amplitude is removed. The result
    must be real (or purely imaginary with ``imaginary=True``) to ``tol``.
    """
    if not initial:
        return {}
    if phi is None:
        lead = max(initial.values(), key=abs)
        phi = -cmath.phase(lead)
    rot = cmath.exp(1j * phi) * (1j if imaginary else 1)
    out = {v: a * rot for v, a in initial.items()}
    stray = max(abs(a.imag) if not imaginary else abs(a.real) for a in out.values())
    if stray > tol:
        raise PhaseError(f"amplitudes are not collinear in the complex plane (residual {stray:.3g})")
    if imaginary:
        return {v: complex(0.0, a.imag) for v, a in out.items()}
    return {v: complex(a.real, 0.0) for v, a in out.items()}


def _to_distribution(c: np.ndarray, sparse: bool) -> VertexDistribution:
    probs = np.abs(c) ** 2
    if sparse:
        return VertexDistribution({int(v): float(p) for v, p in enumerate(probs) if p > SUPPORT_THRESHOLD})
    return VertexDistribution({v: float(p) for v, p in enumerate(probs)})


class QuantumWalkEvolver:
    """Exact evolution of one problem at many times from one diagonalization."""

    def __init__(self, problem: QuantumWalkProblem, cap: int = DENSE_CAP) -> None:
        self.problem = problem
        self.propagator = SchrodingerPropagator(dense_materialize(problem.walk_oracle, cap))
        self.c0 = problem.initial_vector()

    def amplitudes(self, t: float) -> np.ndarray:
        return self.propagator(self.c0, t)

    def distribution(self, t: float) -> VertexDistribution:
        return _to_distribution(self.amplitudes(t), sparse=False)


def qw_output_distribution(
    problem: QuantumWalkProblem, *, method: str = "auto", tol: float = 1e-9, cap: int = DENSE_CAP
) -> VertexDistribution:
    """``P(v) = |c_v(t_final)|^2``.

    ``method`` is ``"exact"`` (dense spectral), ``"rk4"`` (oracle-driven, sparse
    support above ``1e-12``), or ``"auto"`` (exact up to ``cap``).
    """
    if method == "auto":
        method = "exact" if problem.n <= cap else "rk4"
    if method == "exact":
        return QuantumWalkEvolver(problem, cap).distribution(problem.t_final)
    if method == "rk4":
        res = evolve_schrodinger_rk4(problem.walk_oracle, problem.initial_vector(), problem.t_final, tol)
        return _to_distribution(res.x, sparse=True)
    raise ValueError(f"unknown method {method!r}")
