"""Error-term diagnostics for the posterior and frequentist approximations.

All terms are evaluated with the hidden absolute constants set to 1 and
natural logarithms, so they are meaningful up to constants only. They are
reported, never compared with Monte Carlo coverage errors.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.typing import NDArray

from .datagen import ExperimentDesign, generate_dataset
from .errors import InvalidInputError
from .spectrum import ClusterSelection, SpectrumSpec, cluster_width, gamma_star, spectral_gap

DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class MomentMatrices:
    """Whitened coordinates on the selected eigenspaces (``u``) and the rest (``v``)."""

    u: NDArray[np.float64]
    v: NDArray[np.float64]


def moment_matrices(spec: SpectrumSpec, sel: ClusterSelection) -> MomentMatrices:
    truth = spec.truth_eigen()
    inside = np.zeros(spec.dim, dtype=bool)
    inside[list(sel.indices(spec))] = True
    scaled = truth.eigenvectors / np.sqrt(spec.eigenvalues)
    return MomentMatrices(scaled[:, inside].T.copy(), scaled[:, ~inside].T.copy())


def moment3_estimates(
    design: ExperimentDesign, mc_draws: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte Carlo ``(E||U X||^3, E||V X||^3)`` over fresh observations."""
    if mc_draws < 1000:
        raise InvalidInputError("need at least 1000 draws for third-moment estimates")
    mats = moment_matrices(design.spectrum, design.selection)
    x = generate_dataset(design, mc_draws, rng)
    ux = np.linalg.norm(x @ mats.u.T, axis=1)
    vx = np.linalg.norm(x @ mats.v.T, axis=1)
    return float(np.mean(ux**3)), float(np.mean(vx**3))


@dataclass(frozen=True)
class SpectrumSummary:
    dim: int
    m_j: int
    clusters_in_j: int
    gap: float
    width: float
    sigma_norm: float
    sigma_trace: float
    sigma_sq_trace: float
    gamma_l2: float
    gamma_linf: float

    @classmethod
    def of(cls, spec: SpectrumSpec, sel: ClusterSelection) -> "SpectrumSummary":
        gamma = gamma_star(spec, sel)
        sigma = spec.eigenvalues
        return cls(
            dim=spec.dim,
            m_j=sel.dim(spec),
            clusters_in_j=sel.size,
            gap=spectral_gap(spec, sel),
            width=cluster_width(spec, sel),
            sigma_norm=float(sigma[0]),
            sigma_trace=float(sigma.sum()),
            sigma_sq_trace=float(np.sum(sigma**2)),
            gamma_l2=gamma.l2,
            gamma_linf=gamma.linf,
        )

    def denominator(self) -> tuple[float, bool]:
        """``||G||_2^{1/2} (||G||_2^2 - ||G||_inf^2)^{1/4}`` for the limit covariance ``G``.

        Returns ``(value, degenerate)``; degenerate when the bracket vanishes,
        i.e. the limit covariance has a single entry.
        """
        spread = self.gamma_l2**2 - self.gamma_linf**2
        if spread <= DEGENERATE_RTOL * self.gamma_l2**2:
            return 0.0, True
        return math.sqrt(self.gamma_l2) * spread**0.25, False


def diamond_1(s: SpectrumSummary, n: float, p: int, g_norm: float) -> float:
    root = math.log(n) + p
    ratio = 1.0 + s.width / s.gap
    brace = root * (ratio * math.sqrt(s.m_j) * s.sigma_norm / s.gap + s.m_j) * s.sigma_norm
    brace += s.m_j * g_norm
    return brace * s.m_j * s.sigma_norm / s.gap**2 * math.sqrt(root / n)


def diamond_2(s: SpectrumSummary, n: float, p: int, delta_hat: float) -> float:
    inner = min(s.m_j * s.sigma_norm**2, s.sigma_sq_trace)
    return s.sigma_norm * inner / s.gap**3 * p * (delta_hat + p / n)


def diamond_3(s: SpectrumSummary, n: float) -> float:
    return s.m_j**1.5 * s.sigma_norm * s.sigma_trace / s.gap**2 * math.sqrt(math.log(n) / n)


def overline_delta(s: SpectrumSummary, n: float, delta_hat: float) -> float:
    ratio = 1.0 + s.width / s.gap
    quartic = ratio * delta_hat**4 / s.gap**4
    cubic = s.clusters_in_j * delta_hat**3 / s.gap**3
    return n * s.m_j * ratio * max(quartic, cubic)


@dataclass(frozen=True)
class DiamondTerms:
    diamond1: float
    diamond2: float
    diamond3: float
    diamond: float
    denominator: float
    degenerate: bool


def diamond_terms(
    spec: SpectrumSpec,
    sel: ClusterSelection,
    g_norm: float,
    b: float,
    n: float,
    p: int | None = None,
    delta_hat: float = 1.0,
) -> DiamondTerms:
    """Posterior-approximation error terms; ``b`` does not enter the formulas."""
    if delta_hat <= 0:
        raise InvalidInputError("delta_hat must be positive")
    if n <= 1:
        raise InvalidInputError("n must exceed 1")
    p = spec.dim if p is None else p
    s = SpectrumSummary.of(spec, sel)
    d1, d2, d3 = diamond_1(s, n, p, g_norm), diamond_2(s, n, p, delta_hat), diamond_3(s, n)
    denom, degenerate = s.denominator()
    total = d1 + d2 + d3
    diamond = (total if degenerate else total / denom) + 1.0 / n
    return DiamondTerms(d1, d2, d3, diamond, denom, degenerate)


@dataclass(frozen=True)
class OverlineTerms:
    overline_delta: float
    overline_diamond: float
    moment_term: float
    denominator: float
    degenerate: bool


def overline_terms(
    spec: SpectrumSpec,
    sel: ClusterSelection,
    n: float,
    p: int | None = None,
    delta_hat: float = 1.0,
    moment3: tuple[float, float] = (1.0, 1.0),
) -> OverlineTerms:
    """Frequentist Gaussian-approximation error terms."""
    if delta_hat < 0:
        raise InvalidInputError("delta_hat must be non-negative")
    p = spec.dim if p is None else p
    s = SpectrumSummary.of(spec, sel)
    moment_term = moment3[0] * moment3[1] * p**0.25 / math.sqrt(n)
    od = overline_delta(s, n, delta_hat)
    denom, degenerate = s.denominator()
    tail = od if degenerate else od / denom
    return OverlineTerms(od, moment_term + tail, moment_term, denom, degenerate)


@dataclass(frozen=True)
class BoundReport:
    n: int
    p: int
    b: float
    g_norm: float
    delta_case: str
    delta_hat: float
    m_j: int
    gap: float
    width: float
    sigma_norm: float
    sigma_trace: float
    moment_u: float
    moment_v: float
    denominator: float
    diamond1: float
    diamond2: float
    diamond3: float
    diamond: float
    overline_delta: float
    overline_diamond: float
    flag: str

    def as_dict(self) -> dict:
        return asdict(self)


def bound_report(
    spec: SpectrumSpec,
    sel: ClusterSelection,
    *,
    n: int,
    b: float,
    g_norm: float,
    delta_case: str,
    delta_hat: float,
    moment3: tuple[float, float],
) -> BoundReport:
    s = SpectrumSummary.of(spec, sel)
    dt = diamond_terms(spec, sel, g_norm, b, n, spec.dim, delta_hat)
    ot = overline_terms(spec, sel, n, spec.dim, delta_hat, moment3)
    return BoundReport(
        n=n, p=spec.dim, b=b, g_norm=g_norm, delta_case=delta_case, delta_hat=delta_hat,
        m_j=s.m_j, gap=s.gap, width=s.width, sigma_norm=s.sigma_norm, sigma_trace=s.sigma_trace,
        moment_u=moment3[0], moment_v=moment3[1], denominator=dt.denominator,
        diamond1=dt.diamond1, diamond2=dt.diamond2, diamond3=dt.diamond3, diamond=dt.diamond,
        overline_delta=ot.overline_delta, overline_diamond=ot.overline_diamond,
        flag="degenerate" if dt.degenerate else "ok",
    )
