"""Two-step Monte Carlo comparison of frequentist and pseudo-posterior laws.

Step one samples ``n * ||P_hat - P_true||_2^2`` over fresh datasets. Step two
draws fresh datasets and, for each, the posterior distribution of
``n * ||P - P_hat||_2^2``, summarised by its quantiles on a fixed grid.

Every replicate gets its own stream from :func:`iwproj.streams.stream`, keyed
by (seed, step, n, replicate index). Results are collected in index order,
so any number of workers yields identical output.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import stats

from .datagen import ExperimentDesign, generate_dataset, sample_covariance
from .errors import InvalidInputError, NumericFailureError
from .linalg import eigvecs_range
from .posterior import posterior_from, posterior_projector_draws, quantile_rank
from .spectrum import GammaStar, basis_distance_sq, projector_from_basis
from .streams import stream

log = logging.getLogger(__name__)

QUANTILE_GRID = np.arange(1, 1000) / 1000.0
LEVELS = (0.99, 0.95, 0.90, 0.85, 0.80, 0.75)
MAX_DROP_FRACTION = 0.01
CHUNK = 25


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample with order-statistic quantiles and a right-continuous ECDF."""

    samples: NDArray[np.float64]
    gap_ok: NDArray[np.bool_] | None = None

    def __post_init__(self) -> None:
        x = np.sort(np.asarray(self.samples, dtype=np.float64).ravel())
        if x.size == 0 or not np.all(np.isfinite(x)):
            raise InvalidInputError("empirical distribution needs finite samples")
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)

    @property
    def size(self) -> int:
        return self.samples.size

    def quantile(self, alpha: float) -> float:
        return float(self.samples[quantile_rank(alpha, self.size) - 1])

    def quantiles(self, alphas: ArrayLike) -> NDArray[np.float64]:
        ranks = [quantile_rank(float(a), self.size) for a in np.asarray(alphas)]
        return self.samples[np.asarray(ranks) - 1]

    def ecdf(self, x: ArrayLike) -> NDArray[np.float64] | float:
        """Fraction of samples ``<= x``."""
        out = np.searchsorted(self.samples, x, side="right") / self.size
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class RealizationQuantiles:
    """Row ``j``: posterior quantiles on ``alphas`` for dataset ``j``."""

    values: NDArray[np.float64]
    alphas: NDArray[np.float64]
    gap_ok: NDArray[np.bool_]

    @property
    def realizations(self) -> int:
        return self.values.shape[0]

    def column(self, alpha: float) -> NDArray[np.float64]:
        """Sorted copy of the per-realization quantiles at ``alpha``."""
        j = int(np.argmin(np.abs(self.alphas - alpha)))
        if abs(self.alphas[j] - alpha) > 1e-9:
            raise InvalidInputError(f"alpha {alpha} is not on the quantile grid")
        return np.sort(self.values[:, j])


class QQPoint(NamedTuple):
    alpha: float
    gamma_true: float
    gamma_posterior_median: float


class CoverageRow(NamedTuple):
    level: float
    coverage: float
    iqr: float


# --- rank conventions -----------------------------------------------------------


def median_rank(r: int) -> int:
    """1-based rank ``floor(R/2)`` (25 of 50), at least 1."""
    return max(1, r // 2)


def lower_quartile_rank(r: int) -> int:
    return max(1, r // 4)


def upper_quartile_rank(r: int) -> int:
    return min(r, math.ceil(3 * r / 4))


# --- workers ----------------------------------------------------------------------


def _run(fn: Callable, tasks: Sequence, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _chunks(count: int, size: int = CHUNK) -> list[tuple[int, int]]:
    return [(i, min(i + size, count)) for i in range(0, count, size)]


def gap_condition(sigma_hat: NDArray[np.float64], design: ExperimentDesign) -> bool:
    """Whether ``||sigma_hat - truth||_inf <= min_r g_r / 4``."""
    diff = sigma_hat - np.diag(design.spectrum.eigenvalues)
    return float(np.max(np.abs(np.linalg.eigvalsh(diff)))) <= 0.25 * design.spectrum.min_gap()


# --- step one -----------------------------------------------------------------------


def _frequentist_chunk(task) -> list[tuple[float, bool]]:
    design, n, seed, start, stop = task
    idx = design.selection.indices(design.spectrum)
    truth_basis = design.spectrum.truth_eigen().eigenvectors[:, idx.start : idx.stop]
    out = []
    for i in range(start, stop):
        rng = stream(seed, "frequentist", n, i)
        sigma_hat = sample_covariance(generate_dataset(design, n, rng))
        try:
            u = eigvecs_range(sigma_hat, idx.start, idx.stop)
        except NumericFailureError:
            out.append((math.nan, False))
            continue
        out.append((n * basis_distance_sq(truth_basis, u), gap_condition(sigma_hat, design)))
    return out


def frequentist_samples(
    design: ExperimentDesign,
    n: int,
    reps: int | None = None,
    *,
    seed: int | None = None,
    workers: int = 1,
) -> EmpiricalDistribution:
    """``reps`` realizations of ``n * ||P_hat_J - P_J||_2^2`` on fresh data."""
    reps = design.mc.freq_reps if reps is None else reps
    seed = design.seed if seed is None else seed
    if reps < 2:
        raise InvalidInputError("need at least 2 replicates")
    tasks = [(design, n, seed, a, b) for a, b in _chunks(reps)]
    pairs = [pair for chunk in _run(_frequentist_chunk, tasks, workers) for pair in chunk]
    values = np.array([v for v, _ in pairs])
    gap = np.array([g for _, g in pairs])
    ok = np.isfinite(values)
    dropped = reps - int(ok.sum())
    if dropped:
        log.warning("dropped %d of %d frequentist replicates (n=%d)", dropped, reps, n)
    if dropped > MAX_DROP_FRACTION * reps:
        raise NumericFailureError(f"{dropped} of {reps} frequentist replicates failed (n={n})")
    return EmpiricalDistribution(values[ok], gap[ok])


# --- step two -----------------------------------------------------------------------


def _posterior_realization(task) -> tuple[NDArray[np.float64], bool]:
    design, n, seed, j, draws, alphas = task
    rng = stream(seed, "posterior", n, j)
    sigma_hat = sample_covariance(generate_dataset(design, n, rng))
    idx = design.selection.indices(design.spectrum)
    center = projector_from_basis(eigvecs_range(sigma_hat, idx.start, idx.stop))
    params = posterior_from(design.prior.matrix(design.p), design.prior.b, sigma_hat, n)
    values = posterior_projector_draws(
        params, center, design.spectrum, design.selection, n, draws, rng, replicate=j
    )
    dist = EmpiricalDistribution(values)
    return dist.quantiles(alphas), gap_condition(sigma_hat, design)


def posterior_quantile_realizations(
    design: ExperimentDesign,
    n: int,
    realizations: int | None = None,
    draws: int | None = None,
    alphas: ArrayLike = QUANTILE_GRID,
    *,
    seed: int | None = None,
    workers: int = 1,
) -> RealizationQuantiles:
    """Posterior quantiles of ``n * ||P_J - P_hat_J||_2^2`` for each of ``R`` datasets."""
    realizations = design.mc.realizations if realizations is None else realizations
    draws = design.mc.draws if draws is None else draws
    seed = design.seed if seed is None else seed
    if realizations < 4 or draws < 10:
        raise InvalidInputError("need at least 4 realizations and 10 draws each")
    grid = np.asarray(alphas, dtype=np.float64)
    tasks = [(design, n, seed, j, draws, grid) for j in range(realizations)]
    rows = _run(_posterior_realization, tasks, workers)
    values = np.vstack([q for q, _ in rows])
    gap = np.array([g for _, g in rows])
    return RealizationQuantiles(values, grid, gap)


# --- summaries ------------------------------------------------------------------------


def qq_points(
    freq: EmpiricalDistribution, rq: RealizationQuantiles, alphas: ArrayLike | None = None
) -> list[QQPoint]:
    """(alpha, frequentist quantile, median posterior quantile) for each grid value."""
    grid = rq.alphas if alphas is None else np.asarray(alphas)
    k = median_rank(rq.realizations) - 1
    return [QQPoint(float(a), freq.quantile(float(a)), float(rq.column(float(a))[k])) for a in grid]


def coverage_table(
    freq: EmpiricalDistribution,
    rq: RealizationQuantiles,
    levels: Sequence[float] = LEVELS,
) -> list[CoverageRow]:
    """Median coverage and interquartile spread of the posterior critical values.

    For confidence level ``L`` the critical values are the per-realization
    posterior quantiles at ``L``. Coverage is the frequentist ECDF at their
    median (rank ``floor(R/2)``); the spread is the ECDF difference between
    ranks ``ceil(3R/4)`` and ``floor(R/4)``. For ``R = 50`` these are the
    25th, 38th and 12th values.
    """
    r = rq.realizations
    rows = []
    for level in levels:
        col = rq.column(level)
        cov = freq.ecdf(col[median_rank(r) - 1])
        iqr = freq.ecdf(col[upper_quartile_rank(r) - 1]) - freq.ecdf(col[lower_quartile_rank(r) - 1])
        rows.append(CoverageRow(float(level), float(cov), float(iqr)))
    return rows


# --- Gaussian limit -------------------------------------------------------------------


def sample_xi_norm_sq(
    gamma: GammaStar | ArrayLike, count: int, rng: np.random.Generator, *, batch: int = 10_000
) -> NDArray[np.float64]:
    """Draws of ``sum_i gamma_i z_i^2`` with ``z`` standard normal."""
    weights = gamma.diagonal if isinstance(gamma, GammaStar) else np.asarray(gamma, dtype=np.float64)
    if count < 1:
        raise InvalidInputError("count must be at least 1")
    out = np.empty(count)
    for start in range(0, count, batch):
        stop = min(start + batch, count)
        z = rng.standard_normal((stop - start, weights.size))
        out[start:stop] = (z * z) @ weights
    return out


def kolmogorov_distance(a: ArrayLike, b: ArrayLike) -> float:
    """Sup distance between the empirical CDFs of two samples."""
    return float(stats.ks_2samp(np.ravel(a), np.ravel(b)).statistic)


@dataclass(frozen=True)
class ExperimentResult:
    n: int
    freq: EmpiricalDistribution
    rq: RealizationQuantiles

    def qq(self) -> list[QQPoint]:
        return qq_points(self.freq, self.rq)

    def coverage(self, levels: Sequence[float] = LEVELS) -> list[CoverageRow]:
        return coverage_table(self.freq, self.rq, levels)


def run_experiment(design: ExperimentDesign, n: int, *, workers: int = 1) -> ExperimentResult:
    """Both Monte Carlo steps at one sample size with the design's budgets."""
    log.info("n=%d: %d frequentist replicates", n, design.mc.freq_reps)
    freq = frequentist_samples(design, n, workers=workers)
    log.info("n=%d: %d realizations x %d posterior draws", n, design.mc.realizations, design.mc.draws)
    rq = posterior_quantile_realizations(design, n, workers=workers)
    return ExperimentResult(n, freq, rq)
