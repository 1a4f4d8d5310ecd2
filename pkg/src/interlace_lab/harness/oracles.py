"""Random-matrix eigenvalue oracles.

Direct dense matrix sampling plus a symmetric eigensolver; independent of
every kernel formula in this package, so these are true cross-checks.
"""
from __future__ import annotations

import numpy as np


def gue_sample(rng: np.random.Generator, n: int, count: int, scale: float = 1.0) -> np.ndarray:
    """Eigenvalues of Hermitian matrices with N(0, scale) diagonal and
    complex off-diagonal entries of variance scale."""
    H = np.zeros((count, n, n), complex)
    for i in range(n):
        H[:, i, i] = rng.normal(0.0, np.sqrt(scale), size=count)
        for j in range(i + 1, n):
            off = (rng.normal(size=count) + 1j * rng.normal(size=count)) * np.sqrt(scale / 2.0)
            H[:, i, j] = off
            H[:, j, i] = np.conj(off)
    return np.linalg.eigvalsh(H)


def complex_wishart_sample(
    rng: np.random.Generator, n: int, k: int, count: int, entry_variance: float = 1.0
) -> np.ndarray:
    """Eigenvalues of A A* with A an n x k matrix of independent complex
    Gaussians, E|A_ij|^2 = entry_variance."""
    s = np.sqrt(entry_variance / 2.0)
    A = rng.normal(0.0, s, size=(count, n, k)) + 1j * rng.normal(0.0, s, size=(count, n, k))
    W = A @ np.conj(np.transpose(A, (0, 2, 1)))
    return np.linalg.eigvalsh(W).real


def jacobi_unitary_sample(
    rng: np.random.Generator, n: int, p: int, q: int, count: int
) -> np.ndarray:
    """Eigenvalues of the matrix beta-2 Jacobi ensemble: A(A + B)^{-1} with
    A ~ Wishart(n, p), B ~ Wishart(n, q); spectrum in [0, 1]."""
    sa = np.sqrt(0.5)
    A = rng.normal(0, sa, (count, n, p)) + 1j * rng.normal(0, sa, (count, n, p))
    B = rng.normal(0, sa, (count, n, q)) + 1j * rng.normal(0, sa, (count, n, q))
    WA = A @ np.conj(np.transpose(A, (0, 2, 1)))
    WB = B @ np.conj(np.transpose(B, (0, 2, 1)))
    vals = np.empty((count, n))
    for i in range(count):
        # generalized problem A v = lam (A + B) v
        import scipy.linalg as sla

        vals[i] = np.sort(sla.eigh(WA[i], WA[i] + WB[i], eigvals_only=True).real)
    return vals


def rmt_oracle(ensemble: str, count: int, rng: np.random.Generator) -> np.ndarray:
    """String-addressable oracle: 'gue:n', 'wishart:n,k', 'jue:n,p,q'.

    Returns sorted eigenvalue samples of shape (count, n).
    """
    if count > 1_000_000:
        raise ValueError("count capped at 1e6")
    kind, _, rest = ensemble.partition(":")
    args = [int(v) for v in rest.split(",")] if rest else []
    if args and args[0] > 6:
        raise ValueError("matrix size capped at 6")
    if kind == "gue":
        return gue_sample(rng, args[0], count)
    if kind == "wishart":
        return complex_wishart_sample(rng, args[0], args[1], count)
    if kind == "jue":
        return jacobi_unitary_sample(rng, args[0], args[1], args[2], count)
    raise ValueError(f"unknown ensemble {ensemble!r}")
