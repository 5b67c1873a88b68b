"""Dense symmetric matrix algebra.

Symmetric matrices are plain read-only ``numpy`` arrays that went through
:func:`as_symmetric`. Eigenvalues are always reported in descending order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidInputError, NumericFailureError

SYMMETRY_RTOL = 1e-10
PIVOT_RTOL = 1e-12


def as_symmetric(a: ArrayLike, *, check: bool = True) -> NDArray[np.float64]:
    """Validate a square finite matrix and return a read-only symmetric copy.

    The copy is ``(A + A.T) / 2`` so that ``A[i, j]`` and ``A[j, i]`` hold the
    same value bit for bit.

    Raises
    ------
    InvalidInputError
        If the input is not square, has non-finite entries, or (with
        ``check=True``) is asymmetric beyond ``1e-10`` relative to its
        largest entry.
    """
    arr = np.array(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InvalidInputError(f"expected a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("matrix has non-finite entries")
    if check:
        scale = max(1.0, float(np.max(np.abs(arr))))
        if np.max(np.abs(arr - arr.T)) > SYMMETRY_RTOL * scale:
            raise InvalidInputError("matrix is not symmetric")
    sym = 0.5 * (arr + arr.T)
    sym.flags.writeable = False
    return sym


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues (descending) and matching unit eigenvectors as columns."""

    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.float64]

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> NDArray[np.float64]:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T


def _frozen(a: NDArray) -> NDArray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def eigh(a: ArrayLike) -> EigenDecomposition:
    """Full symmetric eigendecomposition with descending eigenvalues.

    Eigenvectors are determined only up to sign, and up to rotation inside a
    repeated eigenvalue; compare projectors, never raw vectors.
    """
    sym = as_symmetric(a)
    try:
        w, v = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(f"eigensolver did not converge: {exc}") from exc
    return EigenDecomposition(_frozen(w[::-1]), _frozen(v[:, ::-1]))


def eigvecs_range(a: ArrayLike, start: int, stop: int) -> NDArray[np.float64]:
    """Eigenvectors for descending positions ``start..stop-1`` only.

    Cheaper than :func:`eigh` when a small contiguous block is needed, which
    is the common case for a leading principal subspace. No symmetry check
    is performed; callers pass matrices they built symmetric.
    """
    p = np.shape(a)[0]
    if not 0 <= start < stop <= p:
        raise InvalidInputError(f"invalid eigen index range [{start}, {stop}) for dimension {p}")
    try:
        _, v = sla.eigh(a, subset_by_index=[p - stop, p - start - 1], check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericFailureError(f"eigensolver did not converge: {exc}") from exc
    return v[:, ::-1]


def spectral_norm(a: ArrayLike) -> float:
    sym = as_symmetric(a)
    return float(np.max(np.abs(np.linalg.eigvalsh(sym))))


def frobenius_norm(a: ArrayLike) -> float:
    return float(np.linalg.norm(as_symmetric(a), "fro"))


def nuclear_norm(a: ArrayLike) -> float:
    sym = as_symmetric(a)
    return float(np.sum(np.abs(np.linalg.eigvalsh(sym))))


def trace(a: ArrayLike) -> float:
    return float(np.trace(as_symmetric(a)))


def effective_rank(a: ArrayLike) -> float:
    """``Tr(A) / ||A||_inf`` for a nonzero positive-semidefinite matrix."""
    sym = as_symmetric(a)
    norm = spectral_norm(sym)
    if norm == 0.0:
        raise InvalidInputError("effective rank of the zero matrix is undefined")
    return float(np.trace(sym)) / norm


def cholesky_lower(cov: ArrayLike) -> NDArray[np.float64]:
    """Lower Cholesky factor with a relative pivot floor.

    Fails when any pivot is at most ``1e-12 * ||cov||_inf``.
    """
    sym = as_symmetric(cov)
    try:
        lower = np.linalg.cholesky(sym)
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError("matrix is not positive definite") from exc
    pivots = np.diag(lower) ** 2
    floor = PIVOT_RTOL * spectral_norm(sym)
    if np.any(pivots <= floor):
        raise NumericFailureError(
            f"matrix is numerically singular (smallest pivot {pivots.min():.3e} <= {floor:.3e})"
        )
    return lower


def sample_gaussian(
    cov: ArrayLike, rng: np.random.Generator, size: int | None = None
) -> NDArray[np.float64]:
    """Draw ``N(0, cov)`` vectors as ``L @ z`` with ``L`` the Cholesky factor.

    Returns a vector of length ``p`` when ``size`` is None, else an array of
    shape ``(size, p)``.
    """
    lower = cholesky_lower(cov)
    p = lower.shape[0]
    if size is None:
        return lower @ rng.standard_normal(p)
    return rng.standard_normal((size, p)) @ lower.T
