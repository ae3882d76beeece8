"""Sparse symmetric linear algebra used by assembly, stepping and the
stability lab.

Sparse operators are scipy CSR arrays in canonical form (duplicates
summed, column indices strictly increasing within each row); dense
operators are plain 2-D numpy arrays.  The SPD solver is conjugate
gradients with diagonal (Jacobi) preconditioning, which is all the
uniform meshes used here need.  The dense path exists for the stability
lab, where transition operators must be formed explicitly.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy import sparse

DENSE_CAP = 5000


class SolverError(RuntimeError):
    """Iterative solve did not reach the requested tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


def csr_from_triplets(n_rows, n_cols, triplets) -> sparse.csr_array:
    """Build a canonical CSR array from (row, col, value) triplets.

    Duplicate entries are summed.  Out-of-range indices are rejected.
    """
    trip = list(triplets)
    if trip:
        rows, cols, vals = (np.asarray(seq) for seq in zip(*trip))
    else:
        rows = cols = np.empty(0, dtype=np.int64)
        vals = np.empty(0, dtype=float)
    return csr_from_arrays(n_rows, n_cols, rows, cols, vals)


def csr_from_arrays(n_rows, n_cols, rows, cols, vals) -> sparse.csr_array:
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=float)
    if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
        raise ValueError("row index out of range")
    if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
        raise ValueError("column index out of range")
    mat = sparse.coo_array((vals, (rows, cols)), shape=(n_rows, n_cols)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def matvec(A: sparse.csr_array, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (A.shape[1],):
        raise ValueError(f"shape mismatch: matrix {A.shape}, vector {x.shape}")
    return A @ x


def pcg(A, b, rel_tol=1e-10, max_iter=None, x0=None):
    """Jacobi-preconditioned conjugate gradients on an SPD matrix.

    Returns (x, iterations) with ||A x - b|| <= rel_tol * ||b||.  Raises
    SolverError when the budget is exhausted, carrying the final
    residual for diagnosis.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"shape mismatch: matrix {A.shape}, rhs {b.shape}")
    if max_iter is None:
        max_iter = 10 * n
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return np.zeros(n), 0
    tol = rel_tol * norm_b

    diag = A.diagonal()
    if np.any(diag <= 0.0):
        raise ValueError("non-positive diagonal entry; matrix is not SPD")
    inv_diag = 1.0 / diag

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    it = 0
    while it < max_iter:
        if np.linalg.norm(r) <= tol:
            # Recurrence residual can drift from the true one; confirm.
            r = b - A @ x
            if np.linalg.norm(r) <= tol:
                return x, it
        z = inv_diag * r
        rz = r @ z
        if it == 0:
            p = z
        else:
            p = z + (rz / rz_old) * p
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x = x + alpha * p
        r = r - alpha * Ap
        rz_old = rz
        it += 1
    residual = float(np.linalg.norm(b - A @ x))
    if residual <= tol:
        return x, it
    raise SolverError(
        f"CG failed to converge in {max_iter} iterations "
        f"(residual {residual:.3e}, target {tol:.3e})",
        residual=residual, iterations=it)


def solve_spd(A, b, rel_tol=1e-10, max_iter=None, x0=None) -> np.ndarray:
    x, _ = pcg(A, b, rel_tol=rel_tol, max_iter=max_iter, x0=x0)
    return x


def to_dense(A: sparse.csr_array, cap: int = DENSE_CAP) -> np.ndarray:
    if max(A.shape) > cap:
        raise ValueError(f"dense conversion of {A.shape} exceeds cap {cap}")
    return A.toarray()


def dense_solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """A^{-1} B through pivoted LU; raises LinAlgError on singular A."""
    return np.linalg.solve(np.asarray(A, dtype=float),
                           np.asarray(B, dtype=float))


def dense_multiply(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[1] != B.shape[0]:
        raise ValueError(f"shape mismatch: {A.shape} @ {B.shape}")
    return A @ B


def dense_spectral_norm(A: np.ndarray, rel_tol: float = 1e-10,
                        max_iter: int = 500_000) -> float:
    """Largest singular value via power iteration on A^T A.

    The Rayleigh quotient of A^T A is nondecreasing along the iteration,
    so stagnation (relative change below rel_tol) is a sound stopping
    rule; it never overestimates the true norm.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    rng = np.random.default_rng(0xC0FFEE)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for it in range(max_iter):
        w = A @ v
        v = A.T @ w
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        v /= nv
        sigma_new = np.linalg.norm(A @ v)
        if it > 0 and abs(sigma_new - sigma) <= rel_tol * max(sigma_new, 1e-300):
            return float(sigma_new)
        sigma = sigma_new
    raise SolverError("power iteration did not stagnate",
                      residual=float(sigma), iterations=max_iter)


def dense_smallest_eigenvalue(A: np.ndarray, rel_tol: float = 1e-8,
                              max_iter: int = 200_000) -> float:
    """Smallest eigenvalue of a symmetric positive definite matrix by
    inverse power iteration (Cholesky factored once)."""
    A = np.asarray(A, dtype=float)
    factor = scipy.linalg.cho_factor(A)
    n = A.shape[0]
    rng = np.random.default_rng(0xC0FFEE)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    mu = 0.0  # Rayleigh quotient of A^{-1}, nondecreasing
    for it in range(max_iter):
        w = scipy.linalg.cho_solve(factor, v)
        mu_new = v @ w
        nw = np.linalg.norm(w)
        v = w / nw
        if it > 0 and abs(mu_new - mu) <= rel_tol * max(mu_new, 1e-300):
            return float(1.0 / mu_new)
        mu = mu_new
    raise SolverError("inverse power iteration did not stagnate",
                      residual=float(mu), iterations=max_iter)
