"""Outcome distributions and the transition matrices that relate them."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable

Label = Hashable

CLIP_TOL = 1e-12


@dataclass
class OutcomeDistribution:
    """Finite map from outcome labels to probabilities."""

    probs: dict[Label, float]

    def __getitem__(self, label: Label) -> float:
        return self.probs.get(label, 0.0)

    def __iter__(self):
        return iter(self.probs)

    def __len__(self) -> int:
        return len(self.probs)

    def total(self) -> float:
        return float(sum(self.probs.values()))

    def subset(self, predicate: Callable[[Label], bool]) -> float:
        return float(sum(p for s, p in self.probs.items() if predicate(s)))

    def support(self, threshold: float = CLIP_TOL) -> dict[Label, float]:
        return {s: p for s, p in self.probs.items() if p > threshold}

    def max_abs_diff(self, other: "OutcomeDistribution") -> float:
        keys = set(self.probs) | set(other.probs)
        return max((abs(self[k] - other[k]) for k in keys), default=0.0)


@dataclass
class VertexDistribution(OutcomeDistribution):
    """Quantum walk read-out: ``P(v) = |c_v|^2``."""


@dataclass
class EnergyDistribution(OutcomeDistribution):
    """Oscillator read-out over masses (``int``) and springs (``(v, w)``, ``v <= w``)."""

    total_energy: float = 0.0


class TransitionOracle:
    """Sparse matrix ``C`` with ``P(s) = sum_r C[s, r] Q(r)``.

    Rows are target outcomes ``s``, columns are source outcomes ``r``. Both
    are queryable and counted. ``bound`` is a declared bound on the l1 norm
    of any column, which limits how far one sample can move an estimate.
    """

    def __init__(
        self,
        row_fn: Callable[[Label], list[tuple[Label, float]]],
        col_fn: Callable[[Label], list[tuple[Label, float]]],
        *,
        bound: float | None = None,
        row_sparsity: int | None = None,
        rows: Iterable[Label] | None = None,
        cols: Iterable[Label] | None = None,
        name: str = "C",
    ) -> None:
        self._row_fn = row_fn
        self._col_fn = col_fn
        self.bound = bound
        self.row_sparsity = row_sparsity
        self._rows = rows
        self._cols = cols
        self.name = name
        self._lock = threading.Lock()
        self.queries = 0

    def _bump(self) -> None:
        with self._lock:
            self.queries += 1

    def row_query(self, s: Label) -> list[tuple[Label, float]]:
        self._bump()
        return self._row_fn(s)

    def col_query(self, r: Label) -> list[tuple[Label, float]]:
        self._bump()
        return self._col_fn(r)

    def row_labels(self) -> list[Label]:
        if self._rows is None:
            raise ValueError(f"{self.name} does not enumerate its rows")
        return list(self._rows() if callable(self._rows) else self._rows)

    def col_labels(self) -> list[Label]:
        if self._cols is None:
            raise ValueError(f"{self.name} does not enumerate its columns")
        return list(self._cols() if callable(self._cols) else self._cols)

    def reset_and_read_counter(self) -> int:
        with self._lock:
            n, self.queries = self.queries, 0
            return n


def identity_transition(labels: Iterable[Label] | None = None) -> TransitionOracle:
    return TransitionOracle(
        lambda s: [(s, 1.0)], lambda r: [(r, 1.0)], bound=1.0, row_sparsity=1,
        rows=labels, cols=labels, name="identity",
    )


def apply_transition(c: TransitionOracle, q: OutcomeDistribution, rows: Iterable[Label] | None = None) -> dict[Label, float]:
    """``sum_r C[s, r] q(r)`` for each row label ``s`` (row queries only)."""
    rows = c.row_labels() if rows is None else rows
    return {s: sum(coef * q[r] for r, coef in c.row_query(s)) for s in rows}


@dataclass
class ColumnSumReport:
    max_error: float
    worst_column: Label | None
    columns_checked: int
    min_entry: float = field(default=float("inf"))
    max_abs_entry: float = 0.0


def column_sums(c: TransitionOracle, cols: Iterable[Label] | None = None) -> ColumnSumReport:
    """Deviation of every column sum from one, plus entry extremes."""
    cols = c.col_labels() if cols is None else cols
    worst, worst_col, n = 0.0, None, 0
    lo, hi = float("inf"), 0.0
    for r in cols:
        entries = c.col_query(r)
        total = sum(x for _, x in entries)
        for _, x in entries:
            lo = min(lo, x)
            hi = max(hi, abs(x))
        err = abs(total - 1.0)
        if worst_col is None or err > worst:
            worst, worst_col = err, r
        n += 1
    return ColumnSumReport(worst, worst_col, n, lo, hi)
