"""Shared generators for the test suite."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from walkosc.oracle import from_dense


def random_sparse_matrix(rng: np.random.Generator, n: int, density: float = 0.15, *, symmetric: bool = True,
                         signed: bool = True, loops: bool = True) -> np.ndarray:
    m = np.where(rng.random((n, n)) < density, rng.uniform(-1 if signed else 0.1, 1, (n, n)), 0.0)
    if not loops:
        np.fill_diagonal(m, 0.0)
    if symmetric:
        m = np.triu(m)
        m = m + np.triu(m, 1).T
    return m


def random_walk_matrix(rng: np.random.Generator, n: int, density: float = 0.2) -> np.ndarray:
    """Symmetric, non-negative, loop-free, weights in (0, 1]."""
    return random_sparse_matrix(rng, n, density, signed=False, loops=False)


def random_kappa(rng: np.random.Generator, n: int, density: float = 0.25) -> np.ndarray:
    """Symmetric non-negative spring table with some wall springs."""
    k = random_sparse_matrix(rng, n, density, signed=False, loops=False)
    walls = np.where(rng.random(n) < 0.5, rng.uniform(0.1, 1, n), 0.0)
    return k + np.diag(walls)


def A_from_kappa(kappa: np.ndarray) -> np.ndarray:
    """Stiffness matrix assembled directly from the definition."""
    A = -kappa.copy()
    np.fill_diagonal(A, kappa.sum(axis=1))
    return A


def oracle(m: np.ndarray, name: str = "m"):
    return from_dense(m, name=name)


def expm_walk(T: np.ndarray, c0: np.ndarray, t: float) -> np.ndarray:
    """Independent reference: ``exp(-i T t) c0`` via Pade approximation."""
    return scipy.linalg.expm(-1j * t * np.asarray(T, dtype=float)) @ c0


def expm_oscillator(A: np.ndarray, q0: np.ndarray, p0: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Independent reference: first-order Hamiltonian flow via matrix exponential."""
    n = A.shape[0]
    L = np.block([[np.zeros((n, n)), np.eye(n)], [-A, np.zeros((n, n))]])
    x = scipy.linalg.expm(L * t) @ np.concatenate([q0, p0])
    return x[:n], x[n:]
