"""Simulating a quantum walk with a spring system.

The walk matrix is shifted by ``gamma`` (a global phase), squared, and the
square is sign-split so that every coupling spring is non-negative. A real
initial state ``c`` becomes the momenta ``(c, -c)`` of the doubled system.
The walk's vertex distribution is recovered from the oscillator energy
distribution through a transition matrix whose wall-spring entries can be
negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import PhaseState
from .harmonic_oscillator import A_to_kappa, SpringError, SpringSystem
from .oracle import DENSE_CAP, Oracle, identity, oracle_product, oracle_scale, oracle_sum
from .outcomes import OutcomeDistribution, TransitionOracle, VertexDistribution
from .quantum_walk import QuantumWalkProblem, global_phase_rotate
from .sign_split import DoubledIndex

NEGATIVE_TOL = 1e-9


class ReductionError(ValueError):
    pass


def shift_adjacency(T: Oracle, gamma: float) -> Oracle:
    """``T + gamma * I``."""
    if gamma <= 0:
        raise ReductionError(f"gamma must be positive, got {gamma}")
    out = oracle_sum(T, identity(T.dimension, gamma))
    out.name = f"T+{gamma:g}I"
    return out


def build_doubled_A(T_shift: Oracle, *, unsafe: bool = False, wall_tol: float = 1e-9) -> tuple[Oracle, Oracle]:
    """Doubled stiffness ``A`` and its spring oracle from ``Ã = T_shift^2``.

    Same-copy blocks hold the diagonal of ``Ã`` (plus any negative
    off-diagonal entries); cross-copy blocks hold minus the positive
    off-diagonal entries. For a non-negative walk matrix this is
    ``((A_d, -A_o), (-A_o, A_d))``. One ``A`` row costs one row of ``Ã``,
    i.e. at most ``degree + 1`` queries to ``T_shift``.

    Unless ``unsafe`` is set, querying a wall spring below ``wall_tol``
    raises :class:`ReductionError` (the shift was too small).
    """
    n = T_shift.dimension
    A_tilde = oracle_product(T_shift, T_shift)
    index = DoubledIndex(n)

    def row(z: int):
        base, copy = index.pi(z), index.copy_of(z)
        own = 0 if copy == 1 else n
        other = n - own
        out = []
        for u, x in A_tilde.query_row(base):
            if u == base:
                out.append((own + u, x))
            elif x < 0:
                out.append((own + u, x))
            else:
                out.append((other + u, -x))
        return out

    A = Oracle(
        (2 * n, 2 * n), row, row_degree=A_tilde.row_degree, symmetric=True,
        max_weight=A_tilde.max_weight, name="A_doubled",
    )
    kappa = A_to_kappa(A, validate=not unsafe)
    if unsafe:
        return A, kappa

    def checked_row(z: int):
        try:
            entries = kappa.query_row(z)
        except SpringError as e:
            raise ReductionError(f"{e}; increase gamma") from e
        wall = dict(entries).get(z, 0.0)
        if wall < wall_tol:
            raise ReductionError(f"wall spring at doubled mass {z} is {wall:.3g}; increase gamma")
        return entries

    kappa_bar = Oracle(
        (2 * n, 2 * n), checked_row, row_degree=kappa.row_degree, symmetric=True,
        max_weight=kappa.max_weight, name="kappa_doubled",
    )
    return A, kappa_bar


def map_initial_state(c0: dict[int, complex], n: int) -> PhaseState:
    """Real walk amplitudes ``c`` -> doubled oscillator state ``q = 0, p = (c, -c)``."""
    p = np.zeros(2 * n)
    for v, amp in c0.items():
        amp = complex(amp)
        if abs(amp.imag) > 1e-12:
            raise ReductionError(f"amplitude at vertex {v} is not real: {amp}; rotate the global phase first")
        p[v] = amp.real
        p[n + v] = -amp.real
    return PhaseState(np.zeros(2 * n), p)


class _RowCache:
    """Per-call cache of walk rows and rows of its square."""

    def __init__(self, T_shift: Oracle) -> None:
        self.T_shift = T_shift
        self.rows: dict[int, dict[int, float]] = {}
        self.sq_rows: dict[int, dict[int, float]] = {}

    def row(self, x: int) -> dict[int, float]:
        if x not in self.rows:
            self.rows[x] = dict(self.T_shift.query_row(x))
        return self.rows[x]

    def sq_row(self, w: int) -> dict[int, float]:
        if w not in self.sq_rows:
            acc: dict[int, float] = {}
            for x, t_wx in self.row(w).items():
                for u, t_xu in self.row(x).items():
                    acc[u] = acc.get(u, 0.0) + t_wx * t_xu
            self.sq_rows[w] = acc
        return self.sq_rows[w]

    def wall(self, w: int) -> float:
        sq = self.sq_row(w)
        return sq.get(w, 0.0) - sum(x for u, x in sq.items() if u != w)


def build_transition_C(
    T_shift: Oracle, *, kappa_floor: float | None = None, cap: int = DENSE_CAP
) -> TransitionOracle:
    """Signed transition matrix with ``P_QW(v) = sum_s C[v, s] P_HO(s)``.

    Outcome labels of the doubled oscillator: ``z`` for the mass at doubled
    index ``z``, ``(z, z)`` for its wall spring, ``(w, n + u)`` for the
    spring between copy-1 mass ``w`` and copy-2 mass ``u``.

    A row query for vertex ``v`` reads the walk rows within distance two of
    ``v`` once each (at most ``d^2 + 1`` rows for degree ``d``); the spring
    constants it needs are recomputed from those rows rather than from the
    spring oracle.

    The declared column bound is the exact largest column l1 norm when
    ``N <= cap``; above that it is derived from ``kappa_floor``, a lower
    bound on the wall springs.
    """
    n = T_shift.dimension

    def row_fn(v: int):
        cache = _RowCache(T_shift)
        rv = cache.row(v)
        rowsum = sum(rv.values())
        out: list[tuple] = [(v, 1.0), (n + v, 1.0)]
        for w, t_vw in rv.items():
            wall = cache.wall(w)
            if abs(wall) < 1e-300:
                raise ReductionError(f"wall spring at vertex {w} vanishes; C is undefined")
            coef = t_vw * (t_vw - (rowsum - t_vw)) / wall
            out.append(((w, w), coef))
            out.append(((n + w, n + w), coef))
        for w, t_vw in rv.items():
            sq = cache.sq_row(w)
            for u, t_vu in rv.items():
                if u != w:
                    out.append(((w, n + u), t_vw * t_vu / sq[u]))
        return out

    def col_fn(r):
        cache = _RowCache(T_shift)
        if isinstance(r, (int, np.integer)):
            return [(int(r) % n, 1.0)]
        a, b = r
        if a == b:
            w = a % n
            wall = cache.wall(w)
            out = []
            for v, t_vw in cache.row(w).items():
                rowsum = sum(cache.row(v).values())
                out.append((v, t_vw * (t_vw - (rowsum - t_vw)) / wall))
            return out
        w, u = a, b - n
        if not (0 <= w < n and 0 <= u < n and w != u):
            raise ReductionError(f"{r} is not a cross-copy spring label")
        a_wu = cache.sq_row(w).get(u, 0.0)
        rw, ru = cache.row(w), cache.row(u)
        return [(v, rw[v] * ru[v] / a_wu) for v in rw if v in ru]

    def cols():
        cache = _RowCache(T_shift)
        labels: list = list(range(2 * n))
        for w in range(n):
            labels += [(w, w), (n + w, n + w)]
            labels += [(w, n + u) for u, x in cache.sq_row(w).items() if u != w and x != 0]
        return labels

    d = T_shift.row_degree
    bound = None
    if n <= cap:
        bound = max(sum(abs(x) for _, x in col_fn(r)) for r in cols())
    elif kappa_floor is not None and kappa_floor > 0:
        wmax = T_shift.max_weight if T_shift.max_weight is not None else float("inf")
        bound = max(1.0, (d * wmax) ** 2 / kappa_floor)
    return TransitionOracle(
        row_fn, col_fn, bound=bound, row_sparsity=2 + 2 * d + d * (d - 1),
        rows=range(n), cols=cols, name="C_qw_ho",
    )


def reconstruct_PQW(P_HO: OutcomeDistribution, C: TransitionOracle) -> VertexDistribution:
    """``P_QW(v) = sum_s C[v, s] P_HO(s)``; tiny negatives are clipped."""
    out = {}
    for v in C.row_labels():
        p = sum(coef * P_HO[s] for s, coef in C.row_query(v))
        if p < -NEGATIVE_TOL:
            raise ReductionError(f"reconstructed probability of vertex {v} is {p:.3g}; inputs do not match")
        out[v] = max(p, 0.0)
    return VertexDistribution(out)


@dataclass
class QwToHoArtifacts:
    T_shift: Oracle
    A: Oracle
    kappa_bar: Oracle
    gamma: float
    index: DoubledIndex
    C: TransitionOracle
    degree: int
    weight_scale: float = 1.0


def _max_weight(T: Oracle) -> float:
    if T.max_weight is not None:
        return T.max_weight
    return max((abs(x) for v in range(T.dimension) for _, x in T.query_row(v)), default=0.0)


def full_reduction(
    problem: QuantumWalkProblem, *, gamma: float | None = None, unsafe_gamma: bool = False
) -> tuple[SpringSystem, TransitionOracle, QwToHoArtifacts]:
    """Map a walk with real (or collinear-phase) initial state to a spring system.

    Weights above one are scaled down and ``t_final`` scaled up to match.
    ``gamma`` defaults to three times the degree bound; smaller shifts
    need ``unsafe_gamma`` and may produce negative wall springs.
    """
    initial = global_phase_rotate(problem.initial)
    T = problem.walk_oracle
    t_final = problem.t_final
    scale = _max_weight(T)
    if scale > 1:
        T = oracle_scale(T, 1.0 / scale)
        t_final = t_final * scale
    else:
        scale = 1.0
    n = T.dimension
    d = T.degree_bound
    if gamma is None:
        gamma = 3.0 * d
    if gamma < 3 * d and not unsafe_gamma:
        raise ReductionError(f"gamma = {gamma} is below 3d = {3 * d}; pass unsafe_gamma to allow it")
    T_shift = shift_adjacency(T, gamma) if gamma > 0 else T
    A, kappa_bar = build_doubled_A(T_shift, unsafe=unsafe_gamma)
    floor = gamma**2 - d * d - 2 * gamma * d
    C = build_transition_C(T_shift, kappa_floor=floor if floor > 0 else None)
    s0 = map_initial_state(initial, n)
    p0 = {int(z): float(s0.p[z]) for z in np.flatnonzero(s0.p)}
    system = SpringSystem(kappa_bar, {}, p0, t_final)
    artifacts = QwToHoArtifacts(T_shift, A, kappa_bar, gamma, DoubledIndex(n), C, d, scale)
    return system, C, artifacts


def wall_spring_bounds(d: int, gamma: float) -> tuple[float, float]:
    """``(2 d^2, gamma^2 + d^2)`` for loop-free walks with weights at most one."""
    return 2.0 * d * d, gamma * gamma + d * d

