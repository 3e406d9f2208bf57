"""Black-box sparse matrices with row/column query access.

An :class:`Oracle` never exposes its matrix directly. Callers ask for the
non-zero entries of one row (or column) at a time and every such request is
counted, which lets the reductions be checked for query efficiency.

The combinators (:func:`oracle_sum`, :func:`oracle_product`,
:func:`oracle_block`, :func:`oracle_entrywise`) build new oracles whose
queries are answered by querying their inputs, never by materializing them.
"""

from __future__ import annotations

import functools
import math
import threading
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import sparse

ZERO_TOL = 1e-14
DENSE_CAP = 4096

Row = list[tuple[int, float]]


class OracleError(ValueError):
    """Raised for malformed queries or oracle outputs."""


class _Counter:
    def __init__(self) -> None:
        self._value = 0
        self._lock = threading.Lock()

    def bump(self) -> None:
        with self._lock:
            self._value += 1

    def read_and_reset(self) -> int:
        with self._lock:
            value, self._value = self._value, 0
            return value

    @property
    def value(self) -> int:
        return self._value


def _clean(entries: Iterable[tuple[int, float]]) -> Row:
    # merge duplicates, drop numerical zeros, sort by index
    acc: dict[int, float] = {}
    for idx, x in entries:
        acc[idx] = acc.get(idx, 0.0) + x
    return sorted((i, x) for i, x in acc.items() if abs(x) >= ZERO_TOL)


class Oracle:
    """Query access to a sparse ``rows x cols`` real matrix.

    ``row_fn(v)`` and ``col_fn(w)`` return iterables of ``(index, weight)``.
    Symmetric oracles answer column queries with ``row_fn``.
    ``max_weight`` is an optional declared bound on ``|entry|`` used for
    step-size selection; ``None`` means unknown.
    """

    def __init__(
        self,
        shape: tuple[int, int],
        row_fn: Callable[[int], Iterable[tuple[int, float]]],
        col_fn: Callable[[int], Iterable[tuple[int, float]]] | None = None,
        *,
        row_degree: int,
        col_degree: int | None = None,
        symmetric: bool = False,
        max_weight: float | None = None,
        name: str = "oracle",
    ) -> None:
        if symmetric and shape[0] != shape[1]:
            raise OracleError(f"symmetric oracle must be square, got {shape}")
        if col_fn is None and not symmetric:
            raise OracleError("non-symmetric oracle needs a column function")
        self.shape = (int(shape[0]), int(shape[1]))
        self._row_fn = row_fn
        self._col_fn = row_fn if col_fn is None else col_fn
        self.row_degree = int(row_degree)
        self.col_degree = int(row_degree if col_degree is None else col_degree)
        self.symmetric = symmetric
        self.max_weight = max_weight
        self.name = name
        self.counter = _Counter()

    def __repr__(self) -> str:
        return f"Oracle({self.name!r}, shape={self.shape}, degree={self.row_degree})"

    @property
    def dimension(self) -> int:
        if self.shape[0] != self.shape[1]:
            raise OracleError(f"{self.name} is rectangular {self.shape}")
        return self.shape[0]

    @property
    def degree_bound(self) -> int:
        return max(self.row_degree, self.col_degree)

    def _checked(self, entries, bound: int, limit: int, what: str, k: int) -> Row:
        row = _clean(entries)
        if len(row) > bound:
            raise OracleError(
                f"{self.name}: {what} {k} has {len(row)} entries, degree bound is {bound}"
            )
        for idx, x in row:
            if not 0 <= idx < limit:
                raise OracleError(f"{self.name}: {what} {k} returned index {idx} out of range")
            if not math.isfinite(x):
                raise OracleError(f"{self.name}: {what} {k} returned non-finite weight {x}")
        return row

    def query_row(self, v: int) -> Row:
        """Non-zero entries of row ``v`` sorted by column index."""
        if not 0 <= v < self.shape[0]:
            raise OracleError(f"{self.name}: row {v} out of range [0, {self.shape[0]})")
        self.counter.bump()
        return self._checked(self._row_fn(v), self.row_degree, self.shape[1], "row", v)

    def query_col(self, w: int) -> Row:
        """Non-zero entries of column ``w`` sorted by row index."""
        if not 0 <= w < self.shape[1]:
            raise OracleError(f"{self.name}: column {w} out of range [0, {self.shape[1]})")
        self.counter.bump()
        return self._checked(self._col_fn(w), self.col_degree, self.shape[0], "column", w)

    @property
    def T(self) -> "Oracle":
        return transpose(self)


def query_row(oracle: Oracle, v: int) -> Row:
    return oracle.query_row(v)


def reset_and_read_counter(oracle: Oracle) -> int:
    """Queries made against ``oracle`` since the last reset; resets to zero."""
    return oracle.counter.read_and_reset()


# --- leaf constructors -------------------------------------------------------


def from_entries(
    shape: tuple[int, int],
    entries: Iterable[tuple[int, int, float]],
    *,
    symmetric: bool = False,
    name: str = "sparse",
) -> Oracle:
    """Oracle backed by an explicit ``(row, col, weight)`` list.

    With ``symmetric=True`` each off-diagonal entry is mirrored, so every
    undirected edge is listed once.
    """
    rows: dict[int, dict[int, float]] = {}
    cols: dict[int, dict[int, float]] = {}

    def put(i: int, j: int, x: float) -> None:
        rows.setdefault(i, {})
        rows[i][j] = rows[i].get(j, 0.0) + x
        cols.setdefault(j, {})
        cols[j][i] = cols[j].get(i, 0.0) + x

    for i, j, x in entries:
        i, j, x = int(i), int(j), float(x)
        if not (0 <= i < shape[0] and 0 <= j < shape[1]):
            raise OracleError(f"entry ({i}, {j}) outside shape {shape}")
        if not math.isfinite(x):
            raise OracleError(f"entry ({i}, {j}) has non-finite weight {x}")
        put(i, j, x)
        if symmetric and i != j:
            put(j, i, x)

    frozen_rows = {i: tuple(_clean(r.items())) for i, r in rows.items()}
    frozen_cols = {j: tuple(_clean(c.items())) for j, c in cols.items()}
    row_deg = max((len(r) for r in frozen_rows.values()), default=0)
    col_deg = max((len(c) for c in frozen_cols.values()), default=0)
    weights = [abs(x) for r in frozen_rows.values() for _, x in r]
    return Oracle(
        shape,
        lambda v: frozen_rows.get(v, ()),
        None if symmetric else (lambda w: frozen_cols.get(w, ())),
        row_degree=row_deg,
        col_degree=col_deg,
        symmetric=symmetric,
        max_weight=max(weights, default=0.0),
        name=name,
    )


def from_dense(matrix, *, symmetric: bool | None = None, name: str = "dense") -> Oracle:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise OracleError(f"expected a 2-d matrix, got shape {m.shape}")
    if symmetric is None:
        symmetric = m.shape[0] == m.shape[1] and np.array_equal(m, m.T)
    if symmetric:
        if not np.array_equal(m, m.T):
            raise OracleError("matrix is not symmetric")
        ii, jj = np.nonzero(np.triu(m))
    else:
        ii, jj = np.nonzero(m)
    return from_entries(
        m.shape, ((i, j, m[i, j]) for i, j in zip(ii, jj)), symmetric=symmetric, name=name
    )


def from_edges(n: int, edges: Iterable[Sequence], name: str = "graph") -> Oracle:
    """Symmetric oracle from an undirected weighted edge list ``[v, w, weight]``."""
    return from_entries((n, n), ((v, w, x) for v, w, x in edges), symmetric=True, name=name)


def identity(n: int, scale: float = 1.0) -> Oracle:
    row = (lambda v: ((v, scale),)) if scale != 0 else (lambda v: ())
    return Oracle(
        (n, n), row, row_degree=1 if scale != 0 else 0, symmetric=True,
        max_weight=abs(scale), name=f"{scale}*I",
    )


def zero(rows: int, cols: int | None = None) -> Oracle:
    cols = rows if cols is None else cols
    empty = lambda _: ()  # noqa: E731
    return Oracle(
        (rows, cols), empty, None if rows == cols else empty,
        row_degree=0, col_degree=0, symmetric=rows == cols, max_weight=0.0, name="zero",
    )


# --- combinators -------------------------------------------------------------


def transpose(a: Oracle) -> Oracle:
    if a.symmetric:
        return a
    return Oracle(
        (a.shape[1], a.shape[0]),
        a.query_col,
        a.query_row,
        row_degree=a.col_degree,
        col_degree=a.row_degree,
        max_weight=a.max_weight,
        name=f"{a.name}^T",
    )


def _add_bounds(x: float | None, y: float | None) -> float | None:
    return None if x is None or y is None else x + y


def oracle_sum(a: Oracle, b: Oracle) -> Oracle:
    """``a + b``; every output query costs one query to each input."""
    if a.shape != b.shape:
        raise OracleError(f"cannot add oracles of shape {a.shape} and {b.shape}")
    symmetric = a.symmetric and b.symmetric
    return Oracle(
        a.shape,
        lambda v: a.query_row(v) + b.query_row(v),
        None if symmetric else (lambda w: a.query_col(w) + b.query_col(w)),
        row_degree=min(a.row_degree + b.row_degree, a.shape[1]),
        col_degree=min(a.col_degree + b.col_degree, a.shape[0]),
        symmetric=symmetric,
        max_weight=_add_bounds(a.max_weight, b.max_weight),
        name=f"({a.name}+{b.name})",
    )


def oracle_product(a: Oracle, b: Oracle) -> Oracle:
    """``a @ b``.

    Row ``v`` is ``sum_u a[v, u] * b[u, :]``: one row query to ``a`` and at
    most ``a.row_degree`` row queries to ``b``. Columns work the same way
    through ``b``'s column and ``a``'s columns.
    """
    if a.shape[1] != b.shape[0]:
        raise OracleError(f"cannot multiply oracles of shape {a.shape} and {b.shape}")

    def row(v: int) -> Row:
        out: list[tuple[int, float]] = []
        for u, x in a.query_row(v):
            out.extend((w, x * y) for w, y in b.query_row(u))
        return out

    def col(w: int) -> Row:
        out: list[tuple[int, float]] = []
        for u, y in b.query_col(w):
            out.extend((v, x * y) for v, x in a.query_col(u))
        return out

    # a @ a for symmetric a is symmetric; otherwise assume nothing
    symmetric = a is b and a.symmetric
    max_weight = None
    if a.max_weight is not None and b.max_weight is not None:
        max_weight = a.max_weight * b.max_weight * min(a.row_degree, b.col_degree)
    return Oracle(
        (a.shape[0], b.shape[1]),
        row,
        None if symmetric else col,
        row_degree=min(a.row_degree * b.row_degree, b.shape[1]),
        col_degree=min(a.col_degree * b.col_degree, a.shape[0]),
        symmetric=symmetric,
        max_weight=max_weight,
        name=f"({a.name}*{b.name})",
    )


def oracle_block(blocks: Sequence[Sequence[Oracle | None]], *, symmetric: bool | None = None) -> Oracle:
    """Assemble a block matrix from a rectangular grid of oracles.

    ``None`` entries are zero blocks. Every row of blocks needs at least one
    oracle to fix its height and every column of blocks one to fix its width.
    A row query touches only the blocks in the matching block-row.
    """
    n_br = len(blocks)
    n_bc = len(blocks[0]) if n_br else 0
    if n_br == 0 or n_bc == 0 or any(len(r) != n_bc for r in blocks):
        raise OracleError("block grid must be a non-empty rectangle")
    heights: list[int | None] = [None] * n_br
    widths: list[int | None] = [None] * n_bc
    for i, brow in enumerate(blocks):
        for j, blk in enumerate(brow):
            if blk is None:
                continue
            h, w = blk.shape
            if heights[i] not in (None, h) or widths[j] not in (None, w):
                raise OracleError(f"block ({i}, {j}) has inconsistent shape {blk.shape}")
            heights[i], widths[j] = h, w
    if None in heights or None in widths:
        raise OracleError("every block row and column needs at least one non-zero block")
    row_off = np.concatenate([[0], np.cumsum(heights)]).astype(int)
    col_off = np.concatenate([[0], np.cumsum(widths)]).astype(int)
    shape = (int(row_off[-1]), int(col_off[-1]))

    if symmetric is None:
        # detectable case only: mirrored blocks are the same symmetric oracle
        symmetric = n_br == n_bc and all(
            (blocks[i][j] is None and blocks[j][i] is None)
            or (blocks[i][j] is blocks[j][i] and blocks[i][j].symmetric)
            for i in range(n_br)
            for j in range(n_bc)
        )

    def row(v: int) -> Row:
        i = int(np.searchsorted(row_off, v, side="right") - 1)
        local = v - row_off[i]
        out: list[tuple[int, float]] = []
        for j, blk in enumerate(blocks[i]):
            if blk is not None:
                out.extend((int(col_off[j]) + w, x) for w, x in blk.query_row(local))
        return out

    def col(w: int) -> Row:
        j = int(np.searchsorted(col_off, w, side="right") - 1)
        local = w - col_off[j]
        out: list[tuple[int, float]] = []
        for i in range(n_br):
            blk = blocks[i][j]
            if blk is not None:
                out.extend((int(row_off[i]) + v, x) for v, x in blk.query_col(local))
        return out

    row_degree = max(sum(b.row_degree for b in brow if b is not None) for brow in blocks)
    col_degree = max(
        sum(blocks[i][j].col_degree for i in range(n_br) if blocks[i][j] is not None)
        for j in range(n_bc)
    )
    bounds = [b.max_weight for brow in blocks for b in brow if b is not None]
    return Oracle(
        shape,
        row,
        None if symmetric else col,
        row_degree=row_degree,
        col_degree=col_degree,
        symmetric=symmetric,
        max_weight=None if None in bounds else max(bounds, default=0.0),
        name="block",
    )


def oracle_entrywise(f: Callable[[float], float], a: Oracle, *, name: str | None = None) -> Oracle:
    """Apply ``f`` to every stored entry; requires ``f(0) == 0``."""
    if f(0.0) != 0:
        raise OracleError("entrywise function must map 0 to 0")
    return Oracle(
        a.shape,
        lambda v: [(w, f(x)) for w, x in a.query_row(v)],
        None if a.symmetric else (lambda w: [(v, f(x)) for v, x in a.query_col(w)]),
        row_degree=a.row_degree,
        col_degree=a.col_degree,
        symmetric=a.symmetric,
        max_weight=None,
        name=name or f"f({a.name})",
    )


def oracle_scale(a: Oracle, c: float) -> Oracle:
    out = oracle_entrywise(lambda x: c * x, a, name=f"{c}*{a.name}")
    if a.max_weight is not None:
        out.max_weight = abs(c) * a.max_weight
    return out


def nonnegative_guard(a: Oracle) -> Oracle:
    """Same oracle, but every query raises on a negative entry."""
    def check(row, which, k):
        for idx, x in row:
            if x < 0:
                raise OracleError(f"{a.name}: negative entry {x} at {which} {k}, index {idx}")
        return row

    return Oracle(
        a.shape,
        lambda v: check(a.query_row(v), "row", v),
        None if a.symmetric else (lambda w: check(a.query_col(w), "column", w)),
        row_degree=a.row_degree,
        col_degree=a.col_degree,
        symmetric=a.symmetric,
        max_weight=a.max_weight,
        name=a.name,
    )


def memoized(a: Oracle) -> Oracle:
    """Cache rows and columns of ``a``; only cache misses reach ``a``."""
    row = functools.lru_cache(maxsize=None)(lambda v: tuple(a.query_row(v)))
    col = row if a.symmetric else functools.lru_cache(maxsize=None)(lambda w: tuple(a.query_col(w)))
    return Oracle(
        a.shape, row, None if a.symmetric else col,
        row_degree=a.row_degree, col_degree=a.col_degree, symmetric=a.symmetric,
        max_weight=a.max_weight, name=f"memo({a.name})",
    )


# --- materialization and checks ----------------------------------------------


def dense_materialize(a: Oracle, cap: int = DENSE_CAP) -> np.ndarray:
    """Full matrix built from one row query per row."""
    if max(a.shape) > cap:
        raise OracleError(f"{a.name} has shape {a.shape}, above dense cap {cap}")
    m = np.zeros(a.shape)
    for v in range(a.shape[0]):
        for w, x in a.query_row(v):
            m[v, w] = x
    return m


def to_sparse(a: Oracle):
    """``scipy.sparse.csr_matrix`` built from one row query per row."""
    indptr, indices, data = [0], [], []
    for v in range(a.shape[0]):
        row = a.query_row(v)
        indices.extend(w for w, _ in row)
        data.extend(x for _, x in row)
        indptr.append(len(indices))
    return sparse.csr_matrix((data, indices, indptr), shape=a.shape)


def symmetry_violations(a: Oracle, limit: int = 64) -> list[tuple[int, int, float, float]]:
    """Exhaustive symmetry check; lists ``(v, w, a_vw, a_wv)`` mismatches."""
    n = a.dimension
    if n > limit:
        raise OracleError(f"exhaustive symmetry check limited to N <= {limit}, got {n}")
    rows = {v: dict(a.query_row(v)) for v in range(n)}
    bad = []
    for v, row in rows.items():
        for w, x in row.items():
            y = rows[w].get(v, 0.0)
            if x != y:
                bad.append((v, w, x, y))
    return bad


def operator_norm_bound(a: Oracle) -> float:
    """Gershgorin-style bound ``degree * max|entry|``."""
    if a.max_weight is not None:
        return a.degree_bound * a.max_weight
    m = max((abs(x) for v in range(a.shape[0]) for _, x in a.query_row(v)), default=0.0)
    return a.degree_bound * m


# --- edge labels -------------------------------------------------------------


@dataclass(frozen=True, order=True)
class EdgeLabel:
    """Edge ``(w, u)`` with ``w <= u`` stored in slot ``slot`` of ``w``'s list."""

    w: int
    u: int
    slot: int

    def __post_init__(self) -> None:
        if self.w > self.u:
            raise OracleError(f"edge endpoints must satisfy w <= u, got ({self.w}, {self.u})")

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.w, self.u)

    @property
    def is_loop(self) -> bool:
        return self.w == self.u


def incident_edges(kappa: Oracle, w: int) -> list[EdgeLabel]:
    """Edges ``(w, u)`` with ``u >= w``, one ``kappa`` row query."""
    upper = [u for u, _ in kappa.query_row(w) if u >= w]
    return [EdgeLabel(w, u, slot) for slot, u in enumerate(upper)]


# --- file format -------------------------------------------------------------


def graph_from_json(data: dict, name: str = "graph") -> Oracle:
    """Load ``{"n": int, "edges": [[v, w, weight], ...]}`` with ``v <= w``."""
    n = int(data["n"])
    edges = []
    seen = set()
    for item in data["edges"]:
        v, w, x = int(item[0]), int(item[1]), float(item[2])
        if v > w:
            raise OracleError(f"edge [{v}, {w}] must be listed with v <= w")
        if (v, w) in seen:
            raise OracleError(f"edge [{v}, {w}] listed twice")
        seen.add((v, w))
        edges.append((v, w, x))
    return from_edges(n, edges, name=name)


def graph_to_json(a: Oracle) -> dict:
    n = a.dimension
    edges = [[v, w, x] for v in range(n) for w, x in a.query_row(v) if w >= v]
    return {"n": n, "edges": edges}
