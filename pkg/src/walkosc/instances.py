"""Deterministic instance generators and problem-file I/O."""

from __future__ import annotations

import json
from pathlib import Path

import networkx as nx
import numpy as np

from .harmonic_oscillator import SpringSystem
from .oracle import Oracle, from_dense, from_edges
from .quantum_walk import QuantumWalkProblem

KINDS = ("path", "cycle", "star", "random-regular", "random-sparse", "appendix-a1", "appendix-a2", "appendix-a3", "appendix-b")


class InstanceError(ValueError):
    pass


def path_graph(n: int) -> Oracle:
    return from_edges(n, [(i, i + 1, 1.0) for i in range(n - 1)], name=f"path-{n}")


def cycle_graph(n: int) -> Oracle:
    if n < 3:
        raise InstanceError(f"a cycle needs at least 3 vertices, got {n}")
    return from_edges(n, [(i, (i + 1) % n, 1.0) for i in range(n)], name=f"cycle-{n}")


def star_graph(n: int) -> Oracle:
    return from_edges(n, [(0, i, 1.0) for i in range(1, n)], name=f"star-{n}")


def _weighted(n: int, pairs, rng: np.random.Generator, name: str) -> Oracle:
    edges = [(min(v, w), max(v, w), float(rng.uniform(0.1, 1.0))) for v, w in sorted(pairs)]
    return from_edges(n, edges, name=name)


def random_regular_graph(n: int, seed: int, degree: int = 3) -> Oracle:
    if degree >= n or (n * degree) % 2:
        degree = 2
    g = nx.random_regular_graph(degree, n, seed=seed)
    return _weighted(n, g.edges(), np.random.default_rng(seed), f"random-regular-{n}")


def random_sparse_graph(n: int, seed: int, *, loops: bool = False) -> Oracle:
    """Roughly ``1.5 n`` random weighted edges; optional self-loops."""
    rng = np.random.default_rng(seed)
    g = nx.gnm_random_graph(n, min(n * (n - 1) // 2, 3 * n // 2), seed=seed)
    pairs = list(g.edges())
    if loops:
        pairs += [(v, v) for v in range(n) if rng.random() < 0.3]
    return _weighted(n, pairs, rng, f"random-sparse-{n}")


T1 = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
T2 = np.array([[0, 1, 1, 1], [1, 0, 0, 0], [1, 0, 0, 0], [1, 0, 0, 0]], dtype=float)
T3 = T2 + 6 * np.eye(4)
TB = np.array([[2, 1], [1, 2]], dtype=float)


def graph(kind: str, size: int | None = None, seed: int = 0) -> Oracle:
    """Weighted adjacency oracle of a named family."""
    fixed = {"appendix-a1": T1, "appendix-a2": T2, "appendix-a3": T3, "appendix-b": TB}
    if kind in fixed:
        return from_dense(fixed[kind], symmetric=True, name=kind)
    if size is None or size < 1:
        raise InstanceError(f"{kind} needs a positive size")
    if kind == "path":
        return path_graph(size)
    if kind == "cycle":
        return cycle_graph(size)
    if kind == "star":
        return star_graph(size)
    if kind == "random-regular":
        return random_regular_graph(size, seed)
    if kind == "random-sparse":
        return random_sparse_graph(size, seed)
    raise InstanceError(f"unknown instance kind {kind!r}; expected one of {', '.join(KINDS)}")


def random_real_state(n: int, rng: np.random.Generator, k: int | None = None) -> dict[int, complex]:
    """Normalized real amplitudes on ``k`` random vertices (all by default)."""
    k = n if k is None else min(k, n)
    support = np.sort(rng.choice(n, size=k, replace=False))
    x = rng.normal(size=k)
    x /= np.linalg.norm(x)
    return {int(v): complex(a) for v, a in zip(support, x)}


def generate_qw(kind: str, size: int | None, seed: int, t_final: float = 1.0) -> QuantumWalkProblem:
    T = graph(kind, size, seed)
    rng = np.random.default_rng([seed, 1])
    return QuantumWalkProblem(T, random_real_state(T.dimension, rng), t_final)


def generate_ho(kind: str, size: int | None, seed: int, t_final: float = 1.0) -> SpringSystem:
    """Springs from the graph weights, random walls on some masses, random ``(q0, p0)``."""
    base = graph(kind, size, seed)
    n = base.dimension
    rng = np.random.default_rng([seed, 2])
    edges = []
    for v in range(n):
        for w, x in base.query_row(v):
            if w >= v:
                edges.append((v, w, abs(x)))
    for v in range(n):
        if rng.random() < 0.5 and not any(e[0] == e[1] == v for e in edges):
            edges.append((v, v, float(rng.uniform(0.1, 1.0))))
    kappa = from_edges(n, edges, name=f"kappa-{base.name}")
    q = rng.normal(size=n)
    p = rng.normal(size=n)
    return SpringSystem(kappa, {v: float(q[v]) for v in range(n)}, {v: float(p[v]) for v in range(n)}, t_final)


def parse_generate(text: str) -> tuple[str, int | None, int]:
    """``kind[:size[:seed]]`` -> ``(kind, size, seed)``."""
    parts = text.split(":")
    kind = parts[0]
    try:
        size = int(parts[1]) if len(parts) > 1 and parts[1] else None
        seed = int(parts[2]) if len(parts) > 2 and parts[2] else 0
    except ValueError as exc:
        raise InstanceError(f"bad generator spec {text!r}: {exc}") from None
    if kind not in KINDS:
        raise InstanceError(f"unknown instance kind {kind!r}; expected one of {', '.join(KINDS)}")
    return kind, size, seed


def load_problem(path: str | Path) -> QuantumWalkProblem | SpringSystem:
    """Problem file; walk files carry ``initial``, spring files ``q0``/``p0``."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceError(f"cannot read problem file {path}: {exc}") from None
    try:
        if "initial" in data:
            return QuantumWalkProblem.from_json(data)
        if "q0" in data or "p0" in data:
            return SpringSystem.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"malformed problem file {path}: {exc}") from None
    raise InstanceError(f"{path}: neither a walk ('initial') nor a spring system ('q0'/'p0')")


def save_problem(problem: QuantumWalkProblem | SpringSystem, path: str | Path) -> None:
    Path(path).write_text(json.dumps(problem.to_json(), indent=1, sort_keys=True) + "\n")
