"""Kronecker products, column-stacked vectorization and minimum-norm solves."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = ["SizeLimitError", "kron", "vec", "unvec", "MinNormResult", "min_norm_solve"]

# largest entry count a Kronecker product may allocate
MAX_KRON_ENTRIES = 1 << 26


class SizeLimitError(OverflowError):
    pass


def kron(A, B, *, max_entries: int = MAX_KRON_ENTRIES) -> np.ndarray:
    """Block matrix ``[a_ij * B]`` of shape ``(m*r, n*s)``."""
    A = np.atleast_2d(np.asarray(A))
    B = np.atleast_2d(np.asarray(B))
    (m, n), (r, s) = A.shape, B.shape
    rows, cols = m * r, n * s
    if rows * cols > max_entries:
        raise SizeLimitError(f"Kronecker product of size {rows}x{cols} exceeds the limit")
    out = A[:, None, :, None] * B[None, :, None, :]
    return out.reshape(rows, cols)


def vec(X) -> np.ndarray:
    """Stack the columns of ``X`` into one vector."""
    X = np.asarray(X)
    if X.ndim == 1:
        return X.copy()
    if X.ndim != 2:
        raise ValueError("vec expects a matrix")
    return X.reshape(-1, order="F").copy()


def unvec(v, n: int, m: int) -> np.ndarray:
    """Inverse of :func:`vec` for an ``n x m`` matrix."""
    v = np.asarray(v)
    if v.ndim != 1 or v.size != n * m:
        raise ValueError(f"cannot reshape vector of length {v.size} into {n}x{m}")
    return v.reshape(n, m, order="F").copy()


class MinNormResult(NamedTuple):
    x: np.ndarray
    rank: int
    cond: float


def min_norm_solve(M, q, rtol: float = 1e-12) -> MinNormResult:
    """Minimum-norm least-squares solution of ``M x = q`` via the SVD.

    Singular values below ``rtol * sigma_max`` are treated as zero.  The
    returned ``cond`` is ``sigma_max / sigma_min`` over all singular
    values (``inf`` for a singular matrix), so callers can watch for
    near-singular systems even when the solve itself succeeds.
    """
    M = np.atleast_2d(np.asarray(M))
    q = np.asarray(q)
    if M.shape[0] != q.shape[0]:
        raise ValueError(f"matrix with {M.shape[0]} rows cannot solve a length-{q.shape[0]} right side")
    if M.size == 0:
        return MinNormResult(np.zeros((M.shape[1],) + q.shape[1:], dtype=np.result_type(M, q)), 0, np.inf)
    U, sv, Vh = np.linalg.svd(M, full_matrices=False)
    smax = sv[0]
    if smax == 0.0:
        return MinNormResult(np.zeros((M.shape[1],) + q.shape[1:], dtype=np.result_type(M, q)), 0, np.inf)
    keep = sv > rtol * smax
    rank = int(keep.sum())
    coef = U[:, keep].conj().T @ q
    coef = coef / (sv[keep] if q.ndim == 1 else sv[keep][:, None])
    x = Vh[keep].conj().T @ coef
    cond = float(smax / sv[-1]) if sv[-1] > 0 else np.inf
    return MinNormResult(x, rank, cond)
