"""Sign-split embedding.

A real operator ``M = P - N`` with entrywise non-negative ``P`` and ``N`` is
embedded as ``((P, N), (N, P))`` on two copies of the index set. Vectors of
the form ``(x, -x)`` stay antisymmetric under that operator and each copy
evolves exactly as ``x`` does under ``M``.

Doubled indices are laid out as ``[copy 1; copy 2]``: ``sigma1(s) = s`` and
``sigma2(s) = n + s``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .oracle import Oracle, OracleError, nonnegative_guard, oracle_block, oracle_entrywise

ANTISYMMETRY_TOL = 1e-8


class AntisymmetryError(ValueError):
    pass


@dataclass(frozen=True)
class DoubledIndex:
    n: int

    def sigma1(self, s: int) -> int:
        return s

    def sigma2(self, s: int) -> int:
        return self.n + s

    def sigma(self, copy: int, s: int) -> int:
        if copy not in (1, 2):
            raise ValueError(f"copy must be 1 or 2, got {copy}")
        return s if copy == 1 else self.n + s

    def pi(self, z: int) -> int:
        if not 0 <= z < 2 * self.n:
            raise IndexError(f"doubled index {z} out of range")
        return z % self.n

    def copy_of(self, z: int) -> int:
        return 1 if z < self.n else 2


def _positive(x: float) -> float:
    return x if x > 0 else 0.0


def _negative(x: float) -> float:
    return -x if x < 0 else 0.0


def split_pos_neg(m: Oracle) -> tuple[Oracle, Oracle]:
    """``(P, N)`` with ``m = P - N`` and both entrywise non-negative."""
    p = oracle_entrywise(_positive, m, name=f"{m.name}+")
    n = oracle_entrywise(_negative, m, name=f"{m.name}-")
    p.max_weight = n.max_weight = m.max_weight
    return p, n


def embed_operator(p: Oracle, n: Oracle) -> Oracle:
    """Doubled oracle ``((P, N), (N, P))``; negative entries raise on query."""
    if p.shape != n.shape:
        raise OracleError(f"P and N shapes differ: {p.shape} vs {n.shape}")
    p, n = nonnegative_guard(p), nonnegative_guard(n)
    symmetric = p.symmetric and n.symmetric
    out = oracle_block([[p, n], [n, p]], symmetric=symmetric)
    out.name = "signsplit"
    return out


def embed_vector(x) -> np.ndarray:
    x = np.asarray(x)
    return np.concatenate([x, -x])


def project_back(z, tol: float = ANTISYMMETRY_TOL) -> np.ndarray:
    """Recover ``x`` from ``z ~ (x, -x)``; raises if ``z`` is not antisymmetric."""
    z = np.asarray(z)
    if z.shape[0] % 2:
        raise ValueError(f"doubled vector must have even length, got {z.shape[0]}")
    n = z.shape[0] // 2
    top, bottom = z[:n], z[n:]
    drift = float(np.max(np.abs(top + bottom))) if n else 0.0
    if drift >= tol:
        raise AntisymmetryError(f"vector is not antisymmetric: max |z1 + z2| = {drift:.3g}")
    return 0.5 * (top - bottom)


def antisymmetry_residual(z) -> float:
    z = np.asarray(z)
    n = z.shape[0] // 2
    return float(np.max(np.abs(z[:n] + z[n:]))) if n else 0.0
