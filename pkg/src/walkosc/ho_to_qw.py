"""Simulating a spring system with a quantum walk.

With the incidence-like factor ``B`` (``A = B^T B``) the state
``(-i B q, p) / sqrt(2H)`` evolves under ``((0, B), (B^T, 0))`` as a
Schrödinger equation. Sign-splitting ``B`` gives an entrywise non-negative
walk on two copies of ``edges + vertices``; each squared amplitude is the
energy fraction stored in the matching spring or mass.

Walk index layout: ``[edges copy 1 | edges copy 2 | vertices copy 1 |
vertices copy 2]``. Edges are indexed ``w * d + slot`` where ``slot`` is
the position of ``(w, u)``, ``u >= w``, among ``w``'s incident edges;
unused slots are empty rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import PhaseState
from .harmonic_oscillator import SpringSystem, ZeroEnergyError, kappa_to_A, total_energy
from .oracle import EdgeLabel, Oracle, OracleError, dense_materialize, incident_edges, nonnegative_guard, oracle_block, transpose
from .outcomes import EnergyDistribution, OutcomeDistribution, TransitionOracle
from .quantum_walk import QuantumWalkProblem
from .sign_split import split_pos_neg

SUBSPACE_TOL = 1e-8
BTB_TOL = 1e-12


@dataclass(frozen=True)
class EdgeIndex:
    """Padded edge enumeration: ``d`` slots per vertex."""

    n: int
    slots: int

    @property
    def size(self) -> int:
        return self.n * self.slots

    def index(self, w: int, slot: int) -> int:
        return w * self.slots + slot

    def split(self, e: int) -> tuple[int, int]:
        return divmod(e, self.slots)


def _edge_at(kappa: Oracle, index: EdgeIndex, e: int) -> tuple[EdgeLabel, float] | None:
    w, slot = index.split(e)
    row = [(u, k) for u, k in kappa.query_row(w) if u >= w]
    if slot >= len(row):
        return None
    u, k = row[slot]
    if k < 0:
        raise OracleError(f"negative spring constant kappa[{w},{u}] = {k}")
    return EdgeLabel(w, u, slot), k


def build_B(kappa: Oracle) -> tuple[Oracle, EdgeIndex]:
    """Rectangular ``|E| x |V|`` oracle with ``B^T B = A``.

    Row ``e = (w, u)`` holds ``+sqrt(kappa)`` at ``w`` and ``-sqrt(kappa)``
    at ``u`` (only the former for a wall spring). A row costs one ``kappa``
    query, a column at most ``d + 1``.
    """
    n = kappa.dimension
    index = EdgeIndex(n, max(kappa.row_degree, 1))

    def row(e: int):
        hit = _edge_at(kappa, index, e)
        if hit is None:
            return []
        edge, k = hit
        s = math.sqrt(k)
        return [(edge.w, s)] if edge.is_loop else [(edge.w, s), (edge.u, -s)]

    def col(v: int):
        out = []
        entries = kappa.query_row(v)
        for u, k in entries:
            if k < 0:
                raise OracleError(f"negative spring constant kappa[{v},{u}] = {k}")
        upper = [(u, k) for u, k in entries if u >= v]
        for slot, (u, k) in enumerate(upper):
            out.append((index.index(v, slot), math.sqrt(k)))
        for w, k in entries:
            if w < v:
                slot = next(e.slot for e in incident_edges(kappa, w) if e.u == v)
                out.append((index.index(w, slot), -math.sqrt(k)))
        return out

    wmax = None if kappa.max_weight is None else math.sqrt(kappa.max_weight)
    B = Oracle(
        (index.size, n), row, col, row_degree=2, col_degree=kappa.row_degree,
        max_weight=wmax, name="B",
    )
    return B, index


@dataclass
class BtBReport:
    max_error: float
    location: tuple[int, int] | None
    passed: bool


def verify_BtB_equals_A(B, A) -> BtBReport:
    """Dense check of ``B^T B = A``; reports the worst entry."""
    Bd = dense_materialize(B) if isinstance(B, Oracle) else np.asarray(B, dtype=float)
    Ad = dense_materialize(A) if isinstance(A, Oracle) else np.asarray(A, dtype=float)
    diff = np.abs(Bd.T @ Bd - Ad)
    if diff.size == 0:
        return BtBReport(0.0, None, True)
    loc = np.unravel_index(int(np.argmax(diff)), diff.shape)
    err = float(diff[loc])
    return BtBReport(err, (int(loc[0]), int(loc[1])), err < BTB_TOL)


def build_walk_T(B: Oracle) -> Oracle:
    """Four-block non-negative walk from the sign-split of ``B``."""
    Bp, Bn = split_pos_neg(B)
    BpT, BnT = transpose(Bp), transpose(Bn)
    T = oracle_block(
        [
            [None, None, Bp, Bn],
            [None, None, Bn, Bp],
            [BpT, BnT, None, None],
            [BnT, BpT, None, None],
        ],
        symmetric=True,
    )
    T.name = "T_walk"
    T.max_weight = B.max_weight
    return nonnegative_guard(T)


@dataclass
class WalkLayout:
    n: int
    edges: EdgeIndex

    @property
    def e1(self) -> int:
        return 0

    @property
    def e2(self) -> int:
        return self.edges.size

    @property
    def v1(self) -> int:
        return 2 * self.edges.size

    @property
    def v2(self) -> int:
        return 2 * self.edges.size + self.n

    @property
    def size(self) -> int:
        return 2 * self.edges.size + 2 * self.n


def map_initial_state(
    q0: dict[int, float], p0: dict[int, float], kappa: Oracle, B: Oracle, layout: WalkLayout, H: float | None = None
) -> dict[int, complex]:
    """Doubled walk amplitudes for the oscillator state ``(q0, p0)``.

    Each copy carries ``(-i B q, p) / sqrt(4H)`` (the second negated), so
    the doubled vector has unit norm.
    """
    if H is None:
        n = kappa.dimension
        q = np.zeros(n)
        p = np.zeros(n)
        for v, x in q0.items():
            q[v] = x
        for v, x in p0.items():
            p[v] = x
        H = total_energy(PhaseState(q, p), kappa_to_A(kappa))
    if H <= 0:
        raise ZeroEnergyError("initial oscillator state has zero energy")
    scale = 1.0 / math.sqrt(4.0 * H)
    c: dict[int, complex] = {}
    for v, x in p0.items():
        if x != 0:
            c[layout.v1 + v] = complex(x * scale, 0.0)
            c[layout.v2 + v] = complex(-x * scale, 0.0)
    if any(x != 0 for x in q0.values()):
        bq: dict[int, float] = {}
        for v, x in q0.items():
            if x == 0:
                continue
            for e, b in B.query_col(v):
                bq[e] = bq.get(e, 0.0) + b * x
        for e, y in bq.items():
            if y != 0:
                c[layout.e1 + e] = complex(0.0, -y * scale)
                c[layout.e2 + e] = complex(0.0, y * scale)
    return c


@dataclass
class SubspaceReport:
    vertex_imag: float
    edge_real: float
    range_residual: float
    antisymmetry: float

    @property
    def residual(self) -> float:
        return max(self.vertex_imag, self.edge_real, self.range_residual, self.antisymmetry)

    @property
    def passed(self) -> bool:
        return self.residual < SUBSPACE_TOL


def check_subspace_constraint(c, B, layout: WalkLayout) -> SubspaceReport:
    """How far ``c`` is from the invariant subspace.

    Vertex amplitudes must be real, edge amplitudes ``i`` times a real
    vector in the range of ``B``, and the two copies opposite.
    """
    c = np.asarray(c, dtype=complex)
    Bd = dense_materialize(B) if isinstance(B, Oracle) else np.asarray(B, dtype=float)
    m = layout.edges.size
    e1, e2 = c[layout.e1:layout.e1 + m], c[layout.e2:layout.e2 + m]
    v1, v2 = c[layout.v1:layout.v1 + layout.n], c[layout.v2:layout.v2 + layout.n]
    anti = max(np.max(np.abs(e1 + e2), initial=0.0), np.max(np.abs(v1 + v2), initial=0.0))
    cE = (e1 - e2) / math.sqrt(2.0)
    cV = (v1 - v2) / math.sqrt(2.0)
    target = cE.imag
    if Bd.size and np.any(target):
        x, *_ = np.linalg.lstsq(Bd, target, rcond=None)
        resid = float(np.max(np.abs(Bd @ x - target)))
    else:
        resid = float(np.max(np.abs(target), initial=0.0))
    return SubspaceReport(
        vertex_imag=float(np.max(np.abs(cV.imag), initial=0.0)),
        edge_real=float(np.max(np.abs(cE.real), initial=0.0)),
        range_residual=resid,
        antisymmetry=float(anti),
    )


def build_fold(kappa: Oracle, layout: WalkLayout) -> TransitionOracle:
    """Map from doubled walk outcomes to oscillator outcomes.

    Each mass or spring collects the probability of both of its copies
    (coefficient one), so every column sums to one.
    """
    m = layout.edges.size

    def row_fn(s):
        if isinstance(s, tuple):
            w, u = s
            slot = next((e.slot for e in incident_edges(kappa, w) if e.u == u), None)
            if slot is None:
                raise OracleError(f"no spring between {w} and {u}")
            e = layout.edges.index(w, slot)
            return [(layout.e1 + e, 1.0), (layout.e2 + e, 1.0)]
        return [(layout.v1 + s, 1.0), (layout.v2 + s, 1.0)]

    def col_fn(r: int):
        if r >= layout.v1:
            return [((r - layout.v1) % layout.n, 1.0)]
        e = r % m
        hit = _edge_at(kappa, layout.edges, e)
        return [] if hit is None else [(hit[0].endpoints, 1.0)]

    def rows():
        labels: list = list(range(layout.n))
        for w in range(layout.n):
            labels += [e.endpoints for e in incident_edges(kappa, w)]
        return labels

    def cols():
        # padded edge slots are never populated, so they are not outcomes
        return [r for r in range(layout.size) if r >= layout.v1 or col_fn(r)]

    return TransitionOracle(
        row_fn, col_fn, bound=1.0, row_sparsity=2, rows=rows, cols=cols, name="fold",
    )


def reconstruct_PHO(P_QW: OutcomeDistribution, fold: TransitionOracle, H: float = 0.0) -> EnergyDistribution:
    """Oscillator distribution from the doubled walk distribution."""
    probs = {s: float(sum(c * P_QW[r] for r, c in fold.row_query(s))) for s in fold.row_labels()}
    return EnergyDistribution(probs, total_energy=H)


@dataclass
class HoToQwArtifacts:
    kappa: Oracle
    B: Oracle
    T: Oracle
    layout: WalkLayout
    H: float
    fold: TransitionOracle


def full_reduction(system: SpringSystem) -> tuple[QuantumWalkProblem, TransitionOracle, HoToQwArtifacts]:
    kappa = system.spring_oracle
    H = total_energy(system.initial_state(), kappa_to_A(kappa))
    if H <= 0:
        raise ZeroEnergyError("initial oscillator state has zero energy")
    B, edges = build_B(kappa)
    layout = WalkLayout(kappa.dimension, edges)
    T = build_walk_T(B)
    c0 = map_initial_state(system.q0, system.p0, kappa, B, layout, H)
    fold = build_fold(kappa, layout)
    problem = QuantumWalkProblem(T, c0, system.t_final)
    return problem, fold, HoToQwArtifacts(kappa, B, T, layout, H, fold)
