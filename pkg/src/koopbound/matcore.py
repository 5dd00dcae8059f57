"""Dense real linear algebra on weight matrices.

Everything downstream (bound evaluation, diagnostics, regularizer
gradients) goes through this module, so the conventions here are load
bearing: determinants are always assembled from singular values in log
space, and the SVD carries a fixed sign convention so repeated runs are
reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class MatCoreError(Exception):
    """Base class for linear-algebra failures in this module."""


class ShapeError(MatCoreError):
    pass


class InvalidParameterError(MatCoreError):
    pass


class NotFiniteError(MatCoreError):
    pass


class SvdConvergenceError(MatCoreError):
    pass


class RankDeficientError(MatCoreError):
    """Raised when an operation needs full column rank and does not have it.

    Carries the offending smallest singular value so callers can report it
    or fall back to the graph/weighted bound variants.
    """

    def __init__(self, message: str, sigma_min: float):
        super().__init__(message)
        self.sigma_min = sigma_min


def as_matrix(m) -> np.ndarray:
    """Validate and normalize input to a finite float64 2-D array."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"matrix dimensions must be positive, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotFiniteError("matrix contains NaN or Inf entries")
    return a


@dataclass(frozen=True)
class Svd:
    """Full SVD M = U diag(s) V^T with U rows x rows and V cols x cols."""

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        m, n = self.u.shape[0], self.v.shape[0]
        sigma = np.zeros((m, n))
        k = len(self.singular_values)
        sigma[:k, :k] = np.diag(self.singular_values)
        return self.u @ sigma @ self.v.T


def _fix_column_sign(col: np.ndarray) -> float:
    """Sign making the first nonzero entry of col positive (1.0 for zero col)."""
    for x in col:
        if abs(x) > 1e-12:
            return 1.0 if x > 0 else -1.0
    return 1.0


def svd(m) -> Svd:
    """Full SVD with a deterministic sign convention.

    The first nonzero entry of every left singular vector is made
    positive; paired right singular vectors are flipped along with it so
    the reconstruction is unchanged.  Columns of U (and V) beyond
    min(rows, cols) span null spaces and are sign-fixed independently.
    """
    a = as_matrix(m)
    rows, cols = a.shape
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(
            f"SVD failed to converge for a {rows}x{cols} matrix"
        ) from exc
    v = vt.T
    k = min(rows, cols)
    for i in range(k):
        sign = _fix_column_sign(u[:, i])
        u[:, i] *= sign
        v[:, i] *= sign
    for i in range(k, rows):
        u[:, i] *= _fix_column_sign(u[:, i])
    for i in range(k, cols):
        v[:, i] *= _fix_column_sign(v[:, i])
    return Svd(u=u, singular_values=s, v=v)


def singular_values(m) -> np.ndarray:
    a = as_matrix(m)
    return np.linalg.svd(a, compute_uv=False)


def operator_norm(m) -> float:
    """Largest singular value."""
    return float(singular_values(m)[0])


def rank_tolerance(sigma_max: float, rows: int, cols: int) -> float:
    """Relative rank cutoff: 1e-8 * sigma_1 * max(rows, cols)."""
    return 1e-8 * sigma_max * max(rows, cols)


def numeric_rank(m) -> int:
    s = singular_values(m)
    tol = rank_tolerance(float(s[0]), *as_matrix(m).shape)
    return int(np.sum(s > tol))


def pq_norm(m, p: float, q: float) -> float:
    """(p, q) matrix norm: outer q-norm over columns of inner p-norms.

    ||M||_{2,2} is the Frobenius norm under this convention.
    """
    if p < 1 or q < 1:
        raise InvalidParameterError(f"pq_norm needs p, q >= 1, got p={p}, q={q}")
    a = as_matrix(m)
    col_norms = np.sum(np.abs(a) ** p, axis=0) ** (1.0 / p)
    return float(np.sum(col_norms ** q) ** (1.0 / q))


def gram_logdet(m) -> float:
    """log det(M^T M) = 2 * sum(log sigma_i), for full-column-rank M.

    Computed entirely in log space so deep products of factors never
    overflow or underflow.
    """
    a = as_matrix(m)
    rows, cols = a.shape
    if cols > rows:
        raise ShapeError(
            f"gram_logdet needs cols <= rows, got {rows}x{cols}"
        )
    s = np.linalg.svd(a, compute_uv=False)
    tol = rank_tolerance(float(s[0]), rows, cols)
    sigma_min = float(s[-1])
    if sigma_min <= tol:
        raise RankDeficientError(
            f"matrix is numerically rank deficient (sigma_min={sigma_min:.3e}, "
            f"tolerance={tol:.3e})",
            sigma_min=sigma_min,
        )
    return float(2.0 * np.sum(np.log(s)))


def restricted_det(m, tol: float) -> tuple[float, int]:
    """Product of the singular values strictly above tol, with their count.

    This is the determinant of M restricted to the orthogonal complement
    of its kernel.  The empty product (zero matrix) is 1.
    """
    if tol <= 0:
        raise InvalidParameterError(f"restricted_det needs tol > 0, got {tol}")
    s = singular_values(m)
    kept = s[s > tol]
    rank = int(kept.size)
    if rank == 0:
        return 1.0, 0
    value = float(math.exp(np.sum(np.log(kept))))
    return value, rank


def condition_number(m) -> float:
    """sigma_1 / sigma_min over the min(rows, cols) singular values.

    Returns +inf for singular matrices instead of raising: diagnostics
    must be able to log degenerate training epochs.
    """
    s = singular_values(m)
    smin = float(s[-1])
    if smin == 0.0:
        return math.inf
    return float(s[0]) / smin
