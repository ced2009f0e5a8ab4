"""Dense linear algebra kernels: the matrix exponential with its phi1 companion, plus a small LP solver."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# condition number above which phi1 switches from the inverse formula to the series
PHI1_COND_LIMIT = 1e12
_LP_EPS = 1e-11


class DimensionError(ValueError):
    pass


class NumericalError(ArithmeticError):
    """Base class for failures of the numerical kernels."""


class Infeasible(NumericalError):
    pass


class Unbounded(NumericalError):
    pass


def as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def rows_times(R: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Return ``R @ M`` computed so that every output row depends only on its input row.

    BLAS kernels may pick different summation orders depending on the batch
    size; the engines rely on bitwise-identical results whether a direction is
    evaluated alone or inside a batch, so the product is spelled out.
    """
    return (R[:, :, None] * M[None, :, :]).sum(axis=1)


def rows_dot(R: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Row-wise dot products ``R @ v`` with the same batch-independence as :func:`rows_times`."""
    return (R * v[None, :]).sum(axis=1)


def mat_exp(A, t: float = 1.0) -> np.ndarray:
    """Matrix exponential e^{At} by scaling and squaring with a Taylor core."""
    A = as_square(A)
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    n = A.shape[0]
    M = A * t
    norm = np.linalg.norm(M, 1)
    squarings = 0
    if norm > 0.5:
        squarings = int(math.ceil(math.log2(norm / 0.5)))
    X = M / (2.0 ** squarings)
    E = np.eye(n)
    term = np.eye(n)
    for k in range(1, 40):
        term = term @ X / k
        E = E + term
        if np.linalg.norm(term, 1) <= 1e-18 * np.linalg.norm(E, 1):
            break
    for _ in range(squarings):
        E = E @ E
    return E


def phi1(A, t: float) -> np.ndarray:
    """The integral operator A^{-1}(e^{At} - I), total in A.

    Singular or badly conditioned A falls back to the series
    sum_k A^k t^{k+1}/(k+1)!, evaluated as a block of an augmented exponential.
    """
    A = as_square(A)
    n = A.shape[0]
    if not np.any(A):
        return t * np.eye(n)
    cond = np.linalg.cond(A)
    if np.isfinite(cond) and cond <= PHI1_COND_LIMIT:
        return np.linalg.solve(A, mat_exp(A, t) - np.eye(n))
    aug = np.zeros((2 * n, 2 * n))
    aug[:n, :n] = A
    aug[:n, n:] = np.eye(n)
    return mat_exp(aug, t)[:n, n:]


@dataclass(frozen=True)
class LinearProgram:
    """maximize objective . x  subject to  normals @ x <= offsets."""

    objective: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        G = np.asarray(self.normals, dtype=float)
        h = np.asarray(self.offsets, dtype=float).reshape(-1)
        if G.ndim != 2 or G.shape[0] == 0:
            raise DimensionError("constraint set must be a nonempty 2-D array")
        if G.shape[1] != c.size or G.shape[0] != h.size:
            raise DimensionError(
                f"inconsistent LP shapes: c {c.shape}, G {G.shape}, h {h.shape}")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "normals", G)
        object.__setattr__(self, "offsets", h)


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, T[row])


def _run_simplex(T: np.ndarray, basis: list[int], cost: np.ndarray) -> None:
    """Primal simplex on tableau ``T`` (rhs in the last column), Bland's rule.

    Maximizes ``cost @ z``; raises Unbounded when an improving column has no
    positive entry.
    """
    nv = T.shape[1] - 1
    while True:
        reduced = cost - cost[basis] @ T[:, :nv]
        entering = -1
        for j in range(nv):
            if reduced[j] > _LP_EPS:
                entering = j
                break
        if entering < 0:
            return
        column = T[:, entering]
        leave = -1
        best = math.inf
        for i in range(T.shape[0]):
            if column[i] > _LP_EPS:
                ratio = T[i, -1] / column[i]
                if ratio < best - 1e-15 or (abs(ratio - best) <= 1e-15 and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            raise Unbounded("objective is unbounded over the feasible region")
        _pivot(T, leave, entering)
        basis[leave] = entering


def lp_max(lp: LinearProgram) -> tuple[float, np.ndarray]:
    """Solve ``lp`` with a dense two-phase simplex; returns (value, argmax)."""
    c, G, h = lp.objective, lp.normals, lp.offsets
    m, n = G.shape
    # free variables split as x = xp - xm; one slack per row
    A = np.hstack([G, -G, np.eye(m)])
    b = h.copy()
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    art_rows = np.flatnonzero(neg)
    n_art = art_rows.size
    nv = 2 * n + m + n_art
    T = np.zeros((m, nv + 1))
    T[:, :2 * n + m] = A
    T[:, -1] = b
    basis = []
    for i in range(m):
        if neg[i]:
            k = 2 * n + m + int(np.searchsorted(art_rows, i))
            T[i, k] = 1.0
            basis.append(k)
        else:
            basis.append(2 * n + i)

    if n_art:
        phase1 = np.zeros(nv)
        phase1[2 * n + m:] = -1.0
        _run_simplex(T, basis, phase1)
        scale = max(1.0, float(np.abs(h).max()))
        if -phase1[basis] @ T[:, -1] > 1e-9 * scale:
            raise Infeasible("constraint set is empty")
        # drive remaining artificials out of the basis, dropping redundant rows
        keep = []
        for i in range(m):
            if basis[i] >= 2 * n + m:
                cols = np.flatnonzero(np.abs(T[i, :2 * n + m]) > 1e-9)
                if cols.size == 0:
                    continue
                _pivot(T, i, int(cols[0]))
                basis[i] = int(cols[0])
            keep.append(i)
        T = np.hstack([T[keep, :2 * n + m], T[keep, -1:]])
        basis = [basis[i] for i in keep]

    phase2 = np.concatenate([c, -c, np.zeros(m)])
    _run_simplex(T, basis, phase2)
    z = np.zeros(2 * n + m)
    z[basis] = T[:, -1]
    x = z[:n] - z[n:2 * n]
    return float(c @ x), x
