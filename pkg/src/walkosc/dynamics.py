"""Time evolution for both problem classes.

Exact evolvers diagonalize a dense symmetric matrix once and are used for
desk-scale verification. :func:`evolve_oracle_rk4` integrates ``x' = L x``
for any linear action built from oracle queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .oracle import Oracle, identity, oracle_block, oracle_scale, operator_norm_bound, to_sparse

SYMMETRY_TOL = 1e-10
FREE_MODE_TOL = 1e-10


class EvolutionError(RuntimeError):
    pass


class UnstableSystemError(EvolutionError):
    """The stiffness matrix has an eigenvalue below ``-FREE_MODE_TOL``."""


@dataclass
class ComplexState:
    amplitudes: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass
class PhaseState:
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.q.shape != self.p.shape:
            raise ValueError(f"q and p lengths differ: {self.q.shape} vs {self.p.shape}")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p))):
            raise ValueError("phase state has non-finite entries")

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])


def _check_symmetric(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise EvolutionError(f"expected a square matrix, got shape {m.shape}")
    asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    if asym > SYMMETRY_TOL:
        raise EvolutionError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    return 0.5 * (m + m.T)


class SchrodingerPropagator:
    """``exp(-i T t)`` via one eigendecomposition of ``T``."""

    def __init__(self, T) -> None:
        self.evals, self.evecs = np.linalg.eigh(_check_symmetric(T))

    def __call__(self, c0: np.ndarray, t: float) -> np.ndarray:
        coeffs = self.evecs.T @ np.asarray(c0, dtype=complex)
        return self.evecs @ (np.exp(-1j * self.evals * t) * coeffs)


def evolve_schrodinger_exact(T, c0: ComplexState, t: float) -> ComplexState:
    """Solve ``c' = -i T c`` exactly for a dense symmetric ``T``."""
    out = SchrodingerPropagator(T)(c0.amplitudes, t)
    return ComplexState(out, c0.t + t)


class HamiltonianPropagator:
    """Normal-mode solution of ``q' = p, p' = -A q``.

    Modes with eigenvalue in ``[-FREE_MODE_TOL, 0]`` are treated as free
    particles; anything more negative is an unstable system.
    """

    def __init__(self, A) -> None:
        evals, self.modes = np.linalg.eigh(_check_symmetric(A))
        if evals.size and evals.min() < -FREE_MODE_TOL:
            raise UnstableSystemError(
                f"stiffness matrix has negative eigenvalue {evals.min():.3g}"
            )
        self.evals = np.clip(evals, 0.0, None)
        self.omega = np.sqrt(self.evals)
        self.free = self.evals <= FREE_MODE_TOL

    def __call__(self, q0: np.ndarray, p0: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        qm = self.modes.T @ q0
        pm = self.modes.T @ p0
        w = np.where(self.free, 1.0, self.omega)
        cos, sin = np.cos(w * t), np.sin(w * t)
        q = np.where(self.free, qm + pm * t, qm * cos + pm * sin / w)
        p = np.where(self.free, pm, -qm * w * sin + pm * cos)
        return self.modes @ q, self.modes @ p


def evolve_hamiltonian_exact(A, s0: PhaseState, t: float) -> PhaseState:
    q, p = HamiltonianPropagator(A)(s0.q, s0.p, t)
    return PhaseState(q, p, s0.t + t)


def hamiltonian_energy(A, state: PhaseState) -> float:
    A = np.asarray(A, dtype=float)
    return 0.5 * float(state.p @ state.p) + 0.5 * float(state.q @ A @ state.q)


# --- oracle-driven integration -----------------------------------------------


@dataclass
class RK4Result:
    x: np.ndarray
    steps: int
    refinements: int
    estimated_error: float = field(default=0.0)


def _rk4(action: Callable[[np.ndarray], np.ndarray], x0: np.ndarray, t: float, steps: int) -> np.ndarray:
    h = t / steps
    x = x0.copy()
    for _ in range(steps):
        k1 = action(x)
        k2 = action(x + 0.5 * h * k1)
        k3 = action(x + 0.5 * h * k2)
        k4 = action(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def evolve_oracle_rk4(
    action: Callable[[np.ndarray], np.ndarray],
    x0,
    t: float,
    tol: float,
    norm_bound: float,
    *,
    max_steps: int = 2_000_000,
) -> RK4Result:
    """Fixed-step RK4 for ``x' = action(x)``.

    The initial step satisfies ``h * norm_bound <= 0.1``; the step count is
    then doubled until two successive runs agree to ``tol`` (max-abs).
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    x0 = np.asarray(x0)
    if t == 0:
        return RK4Result(x0.copy(), 0, 0)
    steps = max(1, math.ceil(t * norm_bound / 0.1))
    prev = _rk4(action, x0, t, steps)
    refinements = 0
    while True:
        steps *= 2
        if steps > max_steps:
            raise EvolutionError(f"RK4 needs more than {max_steps} steps to reach tol {tol}")
        cur = _rk4(action, x0, t, steps)
        refinements += 1
        err = float(np.max(np.abs(cur - prev))) if cur.size else 0.0
        if err < tol:
            return RK4Result(cur, steps, refinements, err)
        prev = cur


def real_form_generator(T: Oracle) -> Oracle:
    """Block oracle ``((0, T), (-T, 0))`` acting on ``(Re c, Im c)``."""
    return oracle_block([[None, T], [oracle_scale(T, -1.0), None]], symmetric=False)


def hamiltonian_generator(A: Oracle) -> Oracle:
    """Block oracle ``((0, I), (-A, 0))`` acting on ``(q, p)``."""
    n = A.dimension
    return oracle_block([[None, identity(n)], [oracle_scale(A, -1.0), None]], symmetric=False)


def linear_action(generator: Oracle) -> Callable[[np.ndarray], np.ndarray]:
    """Matrix-vector action of ``generator``, assembled from one pass of row queries."""
    mat = to_sparse(generator)
    return lambda x: mat @ x


def evolve_schrodinger_rk4(T: Oracle, c0: np.ndarray, t: float, tol: float) -> RK4Result:
    """Integrate the real form of ``c' = -i T c`` and return complex amplitudes."""
    gen = real_form_generator(T)
    c0 = np.asarray(c0, dtype=complex)
    res = evolve_oracle_rk4(
        linear_action(gen), np.concatenate([c0.real, c0.imag]), t, tol, operator_norm_bound(T)
    )
    n = T.dimension
    res.x = res.x[:n] + 1j * res.x[n:]
    return res


def evolve_hamiltonian_rk4(A: Oracle, s0: PhaseState, t: float, tol: float) -> tuple[PhaseState, RK4Result]:
    gen = hamiltonian_generator(A)
    # mode frequencies are square roots of the eigenvalues of A
    bound = max(1.0, math.sqrt(operator_norm_bound(A)))
    res = evolve_oracle_rk4(linear_action(gen), s0.stacked, t, tol, bound)
    n = A.dimension
    return PhaseState(res.x[:n], res.x[n:], s0.t + t), res
