"""Sampling, estimation and decision variants of a distribution-valued problem.

A problem with output distribution ``P`` over a finite outcome set can be
solved in three forms: draw outcomes from ``P``, estimate ``P(S0)`` for an
efficiently testable subset ``S0``, or decide whether ``P(S0) >= a`` or
``P(S0) <= b``. This module converts between the forms and pushes samples
and estimates through a :class:`~walkosc.outcomes.TransitionOracle` ``C``
relating two distributions by ``P(s) = sum_r C[s, r] Q(r)``.

Randomness always comes from an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from .oracle import DENSE_CAP
from .outcomes import OutcomeDistribution, TransitionOracle

Predicate = Callable[[Any], bool]


class VariantError(ValueError):
    pass


class NegativeTransitionError(VariantError):
    """Sampling through a transition matrix with negative entries."""


class DeciderError(VariantError):
    pass


def hoeffding_count(eps: float, delta: float, span: float = 1.0) -> int:
    """Draws needed so a mean of values in an interval of width ``span`` is
    within ``eps`` with probability ``1 - delta``."""
    if not (0 < eps < 1 and 0 < delta < 1):
        raise VariantError(f"eps and delta must lie in (0, 1), got {eps}, {delta}")
    return math.ceil(span * span * math.log(2.0 / delta) / (2.0 * eps * eps))


@dataclass
class Sampler:
    """Draws single outcomes; ``draw_many`` may be overridden for speed."""

    draw: Callable[[np.random.Generator], Hashable]
    outcomes: Sequence[Hashable] | None = None
    accuracy: float = 0.0
    batch: Callable[[np.random.Generator, int], list] | None = None

    def __call__(self, rng: np.random.Generator) -> Hashable:
        return self.draw(rng)

    def draw_many(self, rng: np.random.Generator, k: int) -> list:
        if self.batch is not None:
            return self.batch(rng, k)
        return [self.draw(rng) for _ in range(k)]


def sampler_from_distribution(dist: OutcomeDistribution | dict) -> Sampler:
    """Exact sampler for a finite distribution (negative noise clipped)."""
    probs = dist.probs if isinstance(dist, OutcomeDistribution) else dict(dist)
    labels = list(probs)
    weights = np.clip(np.array([probs[s] for s in labels], dtype=float), 0.0, None)
    total = weights.sum()
    if total <= 0:
        raise VariantError("distribution has no positive mass")
    weights /= total

    def batch(rng: np.random.Generator, k: int) -> list:
        return [labels[i] for i in rng.choice(len(labels), size=k, p=weights)]

    return Sampler(lambda rng: batch(rng, 1)[0], outcomes=labels, batch=batch)


@dataclass
class Estimator:
    """``estimate(predicate, precision)`` returns ``P(S0)`` to ``precision``.

    ``precision`` is the finest precision the estimator guarantees.
    """

    estimate: Callable[[Predicate, float], float]
    precision: float = 0.0
    outcomes: Sequence[Hashable] | None = None
    calls: int = 0

    def __call__(self, predicate: Predicate, precision: float | None = None) -> float:
        self.calls += 1
        return self.estimate(predicate, self.precision if precision is None else precision)


def exact_estimator(dist: OutcomeDistribution | dict) -> Estimator:
    probs = dist.probs if isinstance(dist, OutcomeDistribution) else dict(dist)

    def estimate(pred: Predicate, precision: float) -> float:
        return float(sum(p for s, p in probs.items() if pred(s)))

    return Estimator(estimate, 0.0, outcomes=list(probs))


def estimator_from_sampler(s: Sampler, delta: float, rng: np.random.Generator, precision: float) -> Estimator:
    """Estimator backed by fresh draws for every request."""

    def estimate(pred: Predicate, eps: float) -> float:
        return estimate_from_samples(s, pred, eps, delta, rng)

    return Estimator(estimate, precision, outcomes=s.outcomes)


@dataclass
class Decider:
    """``decide(predicate, a, b)``: yes if ``P(S0) >= a``, no if ``<= b``.

    Answers for ``P(S0)`` strictly between ``b`` and ``a`` may go either way.
    """

    decide: Callable[[Predicate, float, float], bool]
    log: list[tuple[float, float, bool]] = field(default_factory=list)

    def __call__(self, predicate: Predicate, a: float, b: float) -> bool:
        answer = self.decide(predicate, a, b)
        if not isinstance(answer, (bool, np.bool_)):
            raise DeciderError(f"decider returned {answer!r}, expected yes/no")
        self.log.append((a, b, bool(answer)))
        return bool(answer)

    @property
    def calls(self) -> int:
        return len(self.log)


def estimate_from_samples(
    s: Sampler, predicate: Predicate, eps: float, delta: float, rng: np.random.Generator
) -> float:
    """Empirical frequency of ``S0`` over ``ceil(ln(2/delta) / (2 eps^2))`` draws."""
    n = hoeffding_count(eps, delta)
    draws = s.draw_many(rng, n)
    hits = _indicator_counts(draws, predicate)
    return hits / n


def _indicator_counts(draws: list, predicate: Predicate) -> int:
    cache: dict = {}
    hits = 0
    for r in draws:
        if r not in cache:
            cache[r] = bool(predicate(r))
        hits += cache[r]
    return hits


def sample_from_estimator(
    e: Estimator, m: int, rng: np.random.Generator, *, fidelity: float | None = None
) -> Hashable:
    """Draw one outcome bit by bit, most significant bit first.

    Outcome ``k`` of ``e.outcomes`` is encoded as the ``m``-bit binary form of
    ``k``. Each bit is fixed by comparing the estimated mass of the current
    prefix extended by 1 against the mass of the prefix. The total-variation
    error is at most ``m`` times the per-call precision; if that exceeds
    ``fidelity`` the call is refused.
    """
    if e.outcomes is None:
        raise VariantError("estimator has no declared outcome set to encode")
    labels = list(e.outcomes)
    if len(labels) > 2**m:
        raise VariantError(f"{len(labels)} outcomes do not fit in {m} bits")
    if fidelity is not None and m * e.precision > fidelity:
        raise VariantError(
            f"estimator precision {e.precision} over {m} bits exceeds requested fidelity {fidelity}"
        )
    position = {s: k for k, s in enumerate(labels)}

    def prefix_pred(prefix: int, length: int) -> Predicate:
        shift = m - length
        return lambda s: s in position and position[s] >> shift == prefix

    prefix, mass = 0, 1.0
    for length in range(1, m + 1):
        one = prefix << 1 | 1
        p_one = e(prefix_pred(one, length))
        ratio = 0.0 if mass <= 0 else min(max(p_one / mass, 0.0), 1.0)
        if rng.random() < ratio:
            prefix, mass = one, p_one
        else:
            prefix, mass = prefix << 1, mass - p_one
    if prefix >= len(labels):
        raise VariantError(f"estimator assigned mass to unused code {prefix}")
    return labels[prefix]


def decide_from_estimate(e: Estimator, predicate: Predicate, a: float, b: float) -> bool:
    """Yes iff the estimate is at least ``(a + b) / 2``."""
    if a <= b:
        raise VariantError(f"need a > b, got a = {a}, b = {b}")
    if a - b < 2 * e.precision:
        raise VariantError(f"gap {a - b:g} is smaller than twice the estimator precision {e.precision:g}")
    return e(predicate, (a - b) / 2) >= (a + b) / 2


def decider_from_estimator(e: Estimator) -> Decider:
    return Decider(lambda pred, a, b: decide_from_estimate(e, pred, a, b))


def estimate_from_decider(d: Decider, predicate: Predicate, precision: float, *, recheck: bool = False) -> float:
    """Bisection on ``[0, 1]`` with at most ``ceil(log2(1/precision))`` calls.

    Each call asks about thresholds ``mid +- precision/4``. With ``recheck``
    the last question is repeated once and a changed answer raises
    :class:`DeciderError`.
    """
    if not 0 < precision < 1:
        raise VariantError(f"precision must lie in (0, 1), got {precision}")
    steps = math.ceil(math.log2(1.0 / precision))
    g = precision / 4
    lo, hi = 0.0, 1.0
    last = None
    for _ in range(steps):
        mid = (lo + hi) / 2
        yes = d(predicate, mid + g, mid - g)
        last = (mid, yes)
        if yes:
            lo = max(lo, mid - g)
        else:
            hi = min(hi, mid + g)
        if lo > hi:
            raise DeciderError(f"decider answers are inconsistent (interval [{lo}, {hi}])")
    if recheck and last is not None:
        mid, yes = last
        if d(predicate, mid + g, mid - g) != yes:
            raise DeciderError(f"decider changed its answer at threshold {mid}")
    return (lo + hi) / 2


def _scan_negative(C: TransitionOracle, cap: int) -> tuple | None:
    labels = list(C.col_labels())
    if len(labels) > cap:
        return None
    for r in labels:
        for s, x in C.col_query(r):
            if x < 0:
                return r, s, x
    return None


def map_samples_via_C(
    s: Sampler, C: TransitionOracle, *, cap: int = DENSE_CAP, col_tol: float = 1e-9
) -> Sampler:
    """Sampler for ``P(s) = sum_r C[s, r] Q(r)`` from a sampler for ``Q``.

    Each draw ``r`` is replaced by ``s`` with probability ``C[s, r]``. A
    negative entry means the mapping has no sampling form; it is refused up
    front when the columns can be scanned and otherwise on first sight.
    """
    hit = _scan_negative(C, cap)
    if hit is not None:
        r, t, x = hit
        raise NegativeTransitionError(
            f"C[{t}, {r}] = {x:g} < 0; samples cannot be mapped, estimate probabilities instead"
        )
    columns: dict = {}

    def column(r):
        if r not in columns:
            col = C.col_query(r)
            for t, x in col:
                if x < 0:
                    raise NegativeTransitionError(
                        f"C[{t}, {r}] = {x:g} < 0; samples cannot be mapped, estimate probabilities instead"
                    )
            total = sum(x for _, x in col)
            if abs(total - 1.0) > col_tol:
                raise VariantError(f"column {r} of C sums to {total}, not 1")
            columns[r] = ([t for t, _ in col], np.array([x for _, x in col]) / total)
        return columns[r]

    def draw(rng: np.random.Generator):
        targets, weights = column(s.draw(rng))
        return targets[int(rng.choice(len(targets), p=weights))]

    def batch(rng: np.random.Generator, k: int) -> list:
        out = []
        for r in s.draw_many(rng, k):
            targets, weights = column(r)
            out.append(targets[int(rng.choice(len(targets), p=weights))] if len(targets) > 1 else targets[0])
        return out

    return Sampler(draw, outcomes=None, accuracy=s.accuracy, batch=batch)


def estimate_subset_via_samples_and_C(
    s: Sampler,
    C: TransitionOracle,
    predicate: Predicate,
    eps: float,
    delta: float,
    rng: np.random.Generator,
) -> float:
    """Mean of ``sum_{t in S0} C[t, r_i]`` over draws ``r_i`` from ``Q``.

    Works with negative entries. Each term lies in ``[-bound, bound]`` where
    ``bound`` is the declared largest column l1 norm of ``C``.
    """
    if C.bound is None or not math.isfinite(C.bound):
        raise VariantError("C declares no coefficient bound; the sample count cannot be fixed")
    n = hoeffding_count(eps, delta, span=2.0 * C.bound)
    draws = s.draw_many(rng, n)
    values: dict = {}
    total = 0.0
    for r in draws:
        if r not in values:
            values[r] = sum(x for t, x in C.col_query(r) if predicate(t))
        total += values[r]
    return total / n


def map_estimates_via_C(e: Estimator, C: TransitionOracle, s: Hashable, precision: float | None = None) -> float:
    """``P(s)`` from estimates of ``Q`` over the support of row ``s`` of ``C``.

    Each ``Q(r)`` is requested at ``precision / sum_r |C[s, r]|`` so the
    weighted sum meets ``precision`` (default: the estimator's own).
    """
    row = C.row_query(s)
    if C.row_sparsity is not None and len(row) > C.row_sparsity:
        raise VariantError(f"row {s} of C has {len(row)} entries, above the sparsity bound {C.row_sparsity}")
    weight = sum(abs(x) for _, x in row)
    target = e.precision if precision is None else precision
    per_call = target / weight if weight > 0 else target
    return float(sum(x * e(_equals(r), per_call) for r, x in row))


def _equals(r: Hashable) -> Predicate:
    return lambda t: t == r
