"""Eigenvalue clusters, spectral projectors, gaps and the limit covariance.

Indexing is 0-based throughout: cluster ``r`` of a :class:`SpectrumSpec`
covers the flat (descending) eigenvalue positions ``spec.clusters[r]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InvalidInputError
from .linalg import EigenDecomposition, as_symmetric


@dataclass(frozen=True)
class SpectrumSpec:
    """Distinct eigenvalues ``mu_1 > ... > mu_q > 0`` with multiplicities."""

    distinct: tuple[float, ...]
    multiplicities: tuple[int, ...]

    def __post_init__(self) -> None:
        mu = tuple(float(x) for x in self.distinct)
        mult = tuple(int(m) for m in self.multiplicities)
        object.__setattr__(self, "distinct", mu)
        object.__setattr__(self, "multiplicities", mult)
        if not mu or len(mu) != len(mult):
            raise InvalidInputError("need one multiplicity per distinct eigenvalue")
        if not all(np.isfinite(mu)) or min(mu) <= 0:
            raise InvalidInputError("eigenvalues must be finite and positive")
        if any(a <= b for a, b in zip(mu, mu[1:])):
            raise InvalidInputError("distinct eigenvalues must be strictly decreasing")
        if min(mult) < 1:
            raise InvalidInputError("multiplicities must be positive")

    @property
    def q(self) -> int:
        return len(self.distinct)

    @property
    def dim(self) -> int:
        return sum(self.multiplicities)

    @cached_property
    def clusters(self) -> list[range]:
        return cluster_ranges(self.multiplicities)

    @cached_property
    def eigenvalues(self) -> NDArray[np.float64]:
        """Eigenvalues expanded by multiplicity, descending."""
        return np.repeat(np.asarray(self.distinct), self.multiplicities)

    def covariance(self) -> NDArray[np.float64]:
        """The diagonal ground-truth covariance."""
        return as_symmetric(np.diag(self.eigenvalues))

    def truth_eigen(self) -> EigenDecomposition:
        """Eigendecomposition of :meth:`covariance` with the standard basis."""
        vecs = np.eye(self.dim)
        vals = self.eigenvalues.copy()
        vecs.flags.writeable = False
        vals.flags.writeable = False
        return EigenDecomposition(vals, vecs)

    def cluster_gaps(self) -> NDArray[np.float64]:
        """Per-cluster gaps ``g_r`` (distance to the neighbouring clusters)."""
        mu = np.asarray(self.distinct)
        if self.q == 1:
            return np.array([np.inf])
        diffs = mu[:-1] - mu[1:]
        left = np.concatenate([[np.inf], diffs])
        right = np.concatenate([diffs, [np.inf]])
        return np.minimum(left, right)

    def min_gap(self) -> float:
        return float(np.min(self.cluster_gaps()))


def cluster_ranges(multiplicities) -> list[range]:
    out, start = [], 0
    for m in multiplicities:
        out.append(range(start, start + int(m)))
        start += int(m)
    return out


@dataclass(frozen=True)
class ClusterSelection:
    """Contiguous cluster interval ``first..last`` (0-based, inclusive)."""

    first: int
    last: int

    @property
    def size(self) -> int:
        """Number of clusters in the selection."""
        return self.last - self.first + 1

    def validate(self, spec: SpectrumSpec) -> None:
        if not 0 <= self.first <= self.last < spec.q:
            raise InvalidInputError(
                f"cluster selection [{self.first}, {self.last}] outside 0..{spec.q - 1}"
            )
        if self.first == 0 and self.last == spec.q - 1:
            raise InvalidInputError("selection covers every cluster; complement is empty")

    def contains(self, r: int) -> bool:
        return self.first <= r <= self.last

    def indices(self, spec: SpectrumSpec) -> range:
        """Flat eigenvalue positions of the selected clusters."""
        self.validate(spec)
        clusters = spec.clusters
        return range(clusters[self.first].start, clusters[self.last].stop)

    def dim(self, spec: SpectrumSpec) -> int:
        return len(self.indices(spec))


def cluster_sample_eigenvalues(sorted_eigenvalues: ArrayLike, spec: SpectrumSpec) -> list[range]:
    """Assign sorted (descending) sample eigenvalues to clusters by order."""
    n = np.shape(sorted_eigenvalues)[0]
    if n != spec.dim:
        raise InvalidInputError(f"got {n} eigenvalues, multiplicities sum to {spec.dim}")
    return spec.clusters


def spectral_gap(spec: SpectrumSpec, sel: ClusterSelection) -> float:
    """Distance from the selected clusters to their neighbours."""
    sel.validate(spec)
    mu = spec.distinct
    below = mu[sel.last] - mu[sel.last + 1] if sel.last < spec.q - 1 else np.inf
    above = mu[sel.first - 1] - mu[sel.first] if sel.first > 0 else np.inf
    return float(min(above, below))


def cluster_width(spec: SpectrumSpec, sel: ClusterSelection) -> float:
    sel.validate(spec)
    return spec.distinct[sel.first] - spec.distinct[sel.last]


@dataclass(frozen=True)
class Projector:
    matrix: NDArray[np.float64]
    rank: int


def projector_from_basis(basis: NDArray[np.float64]) -> Projector:
    """Projector ``B B^T`` onto the span of orthonormal columns ``B``."""
    b = np.asarray(basis, dtype=np.float64)
    if b.ndim != 2 or b.shape[1] == 0:
        raise InvalidInputError("basis must have at least one column")
    mat = b @ b.T
    mat = 0.5 * (mat + mat.T)
    mat.flags.writeable = False
    return Projector(mat, b.shape[1])


def projector(eig: EigenDecomposition, indices) -> Projector:
    """Sum of ``u_k u_k^T`` over the given eigenvector positions."""
    idx = list(indices)
    if not idx:
        raise InvalidInputError("empty index set")
    if min(idx) < 0 or max(idx) >= eig.dim or len(set(idx)) != len(idx):
        raise InvalidInputError("indices must be distinct positions within the dimension")
    return projector_from_basis(eig.eigenvectors[:, idx])


def projector_distance_sq(p: Projector | ArrayLike, q: Projector | ArrayLike) -> float:
    """Squared Frobenius distance between two projectors."""
    a = p.matrix if isinstance(p, Projector) else np.asarray(p)
    b = q.matrix if isinstance(q, Projector) else np.asarray(q)
    if a.shape != b.shape:
        raise InvalidInputError("projectors have different dimensions")
    return float(np.sum((a - b) ** 2))


def basis_distance_sq(u: NDArray[np.float64], v: NDArray[np.float64]) -> float:
    """``||U U^T - V V^T||_2^2`` from orthonormal bases, without forming p x p products.

    Uses ``rank(U) + rank(V) - 2 ||U^T V||_F^2``; clipped at zero against
    rounding.
    """
    cross = u.T @ v
    return max(0.0, float(u.shape[1] + v.shape[1] - 2.0 * np.sum(cross * cross)))


@dataclass(frozen=True)
class GammaStar:
    """Diagonal of the limit covariance, ordered (r outer, s middle, repeats inner)."""

    diagonal: NDArray[np.float64]

    @property
    def l1(self) -> float:
        return float(np.sum(self.diagonal))

    @property
    def l2(self) -> float:
        return float(np.sqrt(np.sum(self.diagonal**2)))

    @property
    def linf(self) -> float:
        return float(np.max(self.diagonal))


def gamma_star(spec: SpectrumSpec, sel: ClusterSelection) -> GammaStar:
    sel.validate(spec)
    mu, mult = spec.distinct, spec.multiplicities
    parts = []
    for r in range(sel.first, sel.last + 1):
        for s in range(spec.q):
            if sel.contains(s):
                continue
            value = 2.0 * mu[r] * mu[s] / (mu[r] - mu[s]) ** 2
            parts.append(np.full(mult[r] * mult[s], value))
    diag = np.concatenate(parts)
    diag.flags.writeable = False
    return GammaStar(diag)


def linear_term(
    truth: EigenDecomposition,
    spec: SpectrumSpec,
    sel: ClusterSelection,
    e: ArrayLike,
) -> NDArray[np.float64]:
    """First-order change of the selected projector under a perturbation ``E``.

    Evaluates ``sum_{r in J} sum_{s not in J} (P_r E P_s + P_s E P_r) / (mu_r - mu_s)``
    in the eigenbasis of the truth: the cross block between the selected and
    the complementary coordinates is divided entrywise by eigenvalue
    differences.
    """
    sel.validate(spec)
    pert = as_symmetric(e)
    if pert.shape[0] != truth.dim or truth.dim != spec.dim:
        raise InvalidInputError("dimension mismatch")
    u = truth.eigenvectors
    sigma = spec.eigenvalues
    inside = np.zeros(spec.dim, dtype=bool)
    inside[list(sel.indices(spec))] = True
    rotated = u.T @ pert @ u
    weights = np.zeros_like(rotated)
    diff = sigma[inside][:, None] - sigma[~inside][None, :]
    weights[np.ix_(inside, ~inside)] = 1.0 / diff
    weights[np.ix_(~inside, inside)] = 1.0 / diff.T
    out = u @ (weights * rotated) @ u.T
    return 0.5 * (out + out.T)
