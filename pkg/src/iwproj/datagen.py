"""Ground-truth spectra, data samplers and concentration radii."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidInputError
from .linalg import as_symmetric
from .spectrum import ClusterSelection, SpectrumSpec
from .streams import stream

MP_SUPPORT = (0.71, 1.34)
EXP1_LEADING = (25.698, 15.7688, 10.0907, 5.9214, 3.4321)
EXP2_LEADING = (25.0, 20.0, 15.0, 10.0, 7.5, 5.0)
EXP2_LEADING_MULT = (3, 3, 3, 1, 1, 1)
EXP2_LAWS = (
    "uniform", "laplace", "discrete3", "gaussian", "laplace",
    "discrete3", "laplace", "laplace", "uniform",
)
TIE_STEP = 1e-12


class Law(str, Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    LAPLACE = "laplace"
    DISCRETE3 = "discrete3"


def law_scale(kind: Law | str, variance: float) -> float:
    """Scale parameter ``a`` giving the law mean zero and the target variance.

    Gaussian returns the standard deviation.
    """
    kind = Law(kind)
    if variance <= 0:
        raise InvalidInputError("variance must be positive")
    if kind is Law.GAUSSIAN:
        return math.sqrt(variance)
    if kind is Law.UNIFORM:
        return math.sqrt(3.0 * variance)
    if kind is Law.LAPLACE:
        return math.sqrt(variance / 2.0)
    return math.sqrt(1.5 * variance)


def sample_law(kind: Law | str, variance, rng: np.random.Generator, size) -> NDArray[np.float64]:
    """Draw from a zero-mean component law; ``variance`` broadcasts over columns."""
    kind = Law(kind)
    v = np.asarray(variance, dtype=np.float64)
    if kind is Law.GAUSSIAN:
        return rng.standard_normal(size) * np.sqrt(v)
    if kind is Law.UNIFORM:
        return rng.uniform(-1.0, 1.0, size) * np.sqrt(3.0 * v)
    if kind is Law.LAPLACE:
        return rng.laplace(0.0, 1.0, size) * np.sqrt(v / 2.0)
    return (rng.integers(0, 3, size) - 1).astype(np.float64) * np.sqrt(1.5 * v)


# --- Marchenko-Pastur ---------------------------------------------------------


@dataclass(frozen=True)
class MarchenkoPastur:
    """MP law with variance ``sigma2`` and aspect ratio ``ratio`` (< 1)."""

    ratio: float
    sigma2: float = 1.0

    @classmethod
    def from_support(cls, lower: float, upper: float) -> "MarchenkoPastur":
        """Solve ``sigma2 * (1 -+ sqrt(ratio))**2 = (lower, upper)`` exactly."""
        if not 0 < lower < upper:
            raise InvalidInputError("need 0 < lower < upper")
        lo, hi = math.sqrt(lower), math.sqrt(upper)
        root = (hi - lo) / (hi + lo)
        return cls(ratio=root**2, sigma2=((hi + lo) / 2.0) ** 2)

    @property
    def support(self) -> tuple[float, float]:
        s = math.sqrt(self.ratio)
        return self.sigma2 * (1 - s) ** 2, self.sigma2 * (1 + s) ** 2

    def pdf(self, x: ArrayLike) -> NDArray[np.float64]:
        x = np.asarray(x, dtype=np.float64)
        a, b = self.support
        inside = (x > a) & (x < b)
        out = np.zeros_like(x)
        xi = x[inside]
        out[inside] = np.sqrt((b - xi) * (xi - a)) / (2 * math.pi * self.sigma2 * self.ratio * xi)
        return out

    def sample(self, size: int, rng: np.random.Generator) -> NDArray[np.float64]:
        """Rejection sampling under a flat envelope at 1.01 x the grid maximum."""
        a, b = self.support
        grid = np.linspace(a, b, 20001)
        ceiling = 1.01 * float(np.max(self.pdf(grid)))
        out = np.empty(0)
        while out.size < size:
            need = size - out.size
            x = rng.uniform(a, b, 2 * need + 16)
            keep = rng.uniform(0.0, ceiling, x.size) < self.pdf(x)
            out = np.concatenate([out, x[keep]])
        return out[:size]


def _break_ties(values: NDArray[np.float64]) -> NDArray[np.float64]:
    """Sort descending; the k-th repeat of a value is lowered by ``k * 1e-12``."""
    vals = np.sort(np.asarray(values, dtype=np.float64))[::-1].copy()
    seen: dict[float, int] = {}
    for i, v in enumerate(vals):
        k = seen.get(v, 0)
        seen[v] = k + 1
        vals[i] = v - k * TIE_STEP
    return np.sort(vals)[::-1]


# --- experiment designs -------------------------------------------------------


@dataclass(frozen=True)
class MCBudget:
    freq_reps: int = 3000
    realizations: int = 50
    draws: int = 3000

    def __post_init__(self) -> None:
        if min(self.freq_reps, self.realizations, self.draws) < 2:
            raise InvalidInputError("all Monte Carlo counts must be at least 2")


@dataclass(frozen=True)
class Prior:
    """Inverse-Wishart prior ``IW(g_scale * I, p + b - 1)``."""

    g_scale: float = 1.0
    b: float = 1.0

    def __post_init__(self) -> None:
        if self.g_scale <= 0 or self.b <= 0:
            raise InvalidInputError("prior scale and b must be positive")

    def matrix(self, p: int) -> NDArray[np.float64]:
        return as_symmetric(self.g_scale * np.eye(p))


@dataclass(frozen=True)
class ExperimentDesign:
    spectrum: SpectrumSpec
    laws: tuple[str, ...]
    selection: ClusterSelection
    n_grid: tuple[int, ...] = (100, 300, 500, 1000, 2000, 3000)
    mc: MCBudget = field(default_factory=MCBudget)
    prior: Prior = field(default_factory=Prior)
    seed: int = 0
    name: str = "custom"

    def __post_init__(self) -> None:
        try:
            laws = tuple(Law(k).value for k in self.laws)
        except ValueError as exc:
            raise InvalidInputError(str(exc)) from exc
        object.__setattr__(self, "laws", laws)
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if len(laws) != self.spectrum.dim:
            raise InvalidInputError(f"{len(laws)} component laws for dimension {self.spectrum.dim}")
        if any(n < 1 for n in self.n_grid):
            raise InvalidInputError("sample sizes must be positive")
        self.selection.validate(self.spectrum)

    @property
    def p(self) -> int:
        return self.spectrum.dim


def build_experiment1(seed: int = 0, **kwargs) -> ExperimentDesign:
    """Gaussian data, p = 100, five spikes over a Marchenko-Pastur bulk, top cluster."""
    tail = MarchenkoPastur.from_support(*MP_SUPPORT).sample(95, stream(seed, "spectrum"))
    values = _break_ties(tail)
    spectrum = SpectrumSpec(EXP1_LEADING + tuple(values), (1,) * 100)
    return ExperimentDesign(
        spectrum=spectrum,
        laws=("gaussian",) * 100,
        selection=ClusterSelection(0, 0),
        seed=seed,
        name="exp1",
        **kwargs,
    )


def build_experiment2(seed: int = 0, **kwargs) -> ExperimentDesign:
    """Mixed non-Gaussian components, three triple clusters selected jointly (rank 9)."""
    tail = stream(seed, "spectrum").uniform(0.0, 3.0, 88)
    values = _break_ties(tail)
    spectrum = SpectrumSpec(EXP2_LEADING + tuple(values), EXP2_LEADING_MULT + (1,) * 88)
    return ExperimentDesign(
        spectrum=spectrum,
        laws=EXP2_LAWS + ("gaussian",) * 91,
        selection=ClusterSelection(0, 2),
        seed=seed,
        name="exp2",
        **kwargs,
    )


def generate_dataset(design: ExperimentDesign, n: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """``n x p`` matrix of independent components with variances ``sigma_jj``.

    Columns sharing a law are drawn in one block, in law order, so the
    stream consumption depends only on the design.
    """
    if n < 1:
        raise InvalidInputError("n must be positive")
    variances = design.spectrum.eigenvalues
    laws = np.asarray(design.laws)
    data = np.empty((n, design.p))
    for kind in Law:
        cols = np.flatnonzero(laws == kind.value)
        if cols.size:
            data[:, cols] = sample_law(kind, variances[cols], rng, (n, cols.size))
    return data


def sample_covariance(data: ArrayLike) -> NDArray[np.float64]:
    """``(1/n) sum x_j x_j^T`` without centering (data are zero-mean by assumption)."""
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise InvalidInputError("data must be a non-empty n x p array")
    return as_symmetric(x.T @ x / x.shape[0], check=False)


def delta_hat(
    case: str,
    n: int,
    p: int,
    *,
    effective_rank: float | None = None,
    spectral_norm: float | None = None,
    radius: float | None = None,
) -> float:
    """Relative concentration radius of the sample covariance, up to absolute constants.

    Cases: ``gaussian`` needs ``effective_rank``; ``subgaussian`` uses ``p``;
    ``bounded`` needs ``radius`` and ``spectral_norm``; ``logconcave`` uses
    ``p``. Natural logarithms throughout.
    """
    if n <= 1:
        raise InvalidInputError("n must exceed 1")
    log_n = math.log(n)
    if case == "gaussian":
        if effective_rank is None:
            raise InvalidInputError("gaussian case needs the effective rank")
        return math.sqrt((effective_rank + log_n) / n)
    if case == "subgaussian":
        return math.sqrt((p + log_n) / n)
    if case == "bounded":
        if radius is None or spectral_norm is None:
            raise InvalidInputError("bounded case needs the support radius and spectral norm")
        return radius / math.sqrt(spectral_norm) * math.sqrt(log_n / n)
    if case == "logconcave":
        return math.sqrt(log_n**6 / (n * p))
    raise InvalidInputError(f"unknown concentration case {case!r}")


DELTA_CASES = ("gaussian", "subgaussian", "bounded", "logconcave")
