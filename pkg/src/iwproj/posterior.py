"""Inverse-Wishart pseudo-posterior for the covariance and its projectors.

The posterior after ``n`` observations with sample covariance ``S`` under
the prior ``IW(G, p + b - 1)`` is ``IW(G + n S, n + p + b - 1)``, where
``Sigma ~ IW(Psi, nu)`` means ``Sigma^{-1} ~ Wishart(Psi^{-1}, nu)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidInputError, NumericFailureError
from .linalg import as_symmetric, cholesky_lower, eigvecs_range
from .spectrum import ClusterSelection, Projector, SpectrumSpec

Sampler = Callable[["PosteriorParams", np.random.Generator], NDArray[np.float64]]


@dataclass(frozen=True)
class PosteriorParams:
    scale: NDArray[np.float64]
    dof: float
    scale_cholesky: NDArray[np.float64]

    @property
    def dim(self) -> int:
        return self.scale.shape[0]


def make_params(scale: ArrayLike, dof: float) -> PosteriorParams:
    psi = as_symmetric(scale)
    p = psi.shape[0]
    if not dof > p - 1:
        raise InvalidInputError(f"degrees of freedom {dof} must exceed p - 1 = {p - 1}")
    chol = cholesky_lower(psi)
    chol.flags.writeable = False
    return PosteriorParams(psi, float(dof), chol)


def posterior_from(g: ArrayLike, b: float, sigma_hat: ArrayLike, n: int) -> PosteriorParams:
    """Conjugate update: scale ``G + n * sigma_hat``, degrees ``n + p + b - 1``."""
    if b <= 0:
        raise InvalidInputError("b must be positive")
    if n < 0:
        raise InvalidInputError("n must be non-negative")
    g = as_symmetric(g)
    s = as_symmetric(sigma_hat)
    if g.shape != s.shape:
        raise InvalidInputError("prior scale and sample covariance differ in shape")
    p = g.shape[0]
    return make_params(g + n * s, n + p + b - 1)


def sample_sigma(params: PosteriorParams, rng: np.random.Generator) -> NDArray[np.float64]:
    """One inverse-Wishart draw via the Bartlett factorization.

    With ``Psi = C C^T`` and Bartlett factor ``A`` (lower triangular, chi
    diagonal with ``nu - i`` degrees, standard normal below), the precision
    ``C^{-T} A A^T C^{-1}`` is ``Wishart(Psi^{-1}, nu)``, so the covariance is
    ``B^T B`` with ``B = A^{-1} C^T``.
    """
    p = params.dim
    a = np.zeros((p, p))
    a[np.diag_indices(p)] = np.sqrt(rng.chisquare(params.dof - np.arange(p)))
    rows, cols = np.tril_indices(p, -1)
    a[rows, cols] = rng.standard_normal(rows.size)
    b = sla.solve_triangular(a, params.scale_cholesky.T, lower=True, check_finite=False)
    sigma = b.T @ b
    return 0.5 * (sigma + sigma.T)


def sample_sigma_outer(params: PosteriorParams, rng: np.random.Generator) -> NDArray[np.float64]:
    """Reference sampler: invert a sum of ``nu`` outer products ``W W^T``, ``W ~ N(0, Psi^{-1})``.

    ``nu`` is rounded to the nearest integer. Cost grows with ``nu``; meant
    for cross-checking :func:`sample_sigma`.
    """
    count = int(round(params.dof))
    factor = sla.solve_triangular(params.scale_cholesky, np.eye(params.dim), lower=True).T
    w = rng.standard_normal((count, params.dim)) @ factor.T
    precision = w.T @ w
    sigma = np.linalg.inv(precision)
    return 0.5 * (sigma + sigma.T)


def posterior_projector_draws(
    params: PosteriorParams,
    center: Projector,
    spectrum: SpectrumSpec,
    selection: ClusterSelection,
    n: int,
    count: int,
    rng: np.random.Generator,
    *,
    sampler: Sampler = sample_sigma,
    replicate: int | None = None,
) -> NDArray[np.float64]:
    """``n * ||P_J(Sigma) - center||_2^2`` for ``count`` posterior draws.

    ``P_J(Sigma)`` spans the eigenvectors of the draw at the flat positions of
    the selected clusters (order-based clustering with the design
    multiplicities).
    """
    if count < 1:
        raise InvalidInputError("count must be at least 1")
    idx = selection.indices(spectrum)
    if center.matrix.shape[0] != spectrum.dim or params.dim != spectrum.dim:
        raise InvalidInputError("dimension mismatch between posterior, center and spectrum")
    out = np.empty(count)
    for i in range(count):
        try:
            sigma = sampler(params, rng)
            u = eigvecs_range(sigma, idx.start, idx.stop)
        except (NumericFailureError, np.linalg.LinAlgError) as exc:
            where = f"replicate {replicate}, " if replicate is not None else ""
            raise NumericFailureError(f"posterior draw failed ({where}draw {i}): {exc}") from exc
        pu = center.matrix @ u
        dist = center.rank + u.shape[1] - 2.0 * float(np.sum(pu * pu))
        out[i] = n * max(dist, 0.0)
    return out


def quantile_rank(alpha: float, size: int) -> int:
    """1-based order-statistic rank ``ceil(alpha * size)`` clamped to ``[1, size]``.

    ``alpha * size`` is rounded to 9 decimals first so grid values such as
    ``0.001 * 3000`` land on the integer they denote.
    """
    return min(max(math.ceil(round(alpha * size, 9)), 1), size)


def gamma_circ(draws: ArrayLike, alpha: float) -> float:
    """Lower-tail ``alpha`` quantile of the draws by the ceiling-rank rule.

    The critical value for significance ``a`` is ``gamma_circ(draws, 1 - a)``.
    """
    x = np.asarray(draws, dtype=np.float64).ravel()
    if x.size == 0:
        raise InvalidInputError("no draws")
    if not 0 < alpha < 1:
        raise InvalidInputError("alpha must lie in (0, 1)")
    return float(np.sort(x)[quantile_rank(alpha, x.size) - 1])
