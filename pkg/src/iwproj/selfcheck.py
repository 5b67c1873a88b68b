"""Fast invariant checks run by ``iwproj selfcheck``.

Each check returns a :class:`CheckResult`. ``fault`` names a check whose
inputs get deliberately corrupted, to confirm the check can fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bounds import moment_matrices
from .linalg import eigh, frobenius_norm, nuclear_norm, spectral_norm
from .posterior import gamma_circ, make_params, sample_sigma, sample_sigma_outer
from .spectrum import (
    ClusterSelection,
    SpectrumSpec,
    cluster_width,
    linear_term,
    projector,
    projector_distance_sq,
    spectral_gap,
)

FAULTS = ("projector", "weyl", "wishart", "lemma", "quantile", "whitening")


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def random_symmetric(rng: np.random.Generator, p: int) -> np.ndarray:
    a = rng.uniform(-1.0, 1.0, (p, p))
    return 0.5 * (a + a.T)


def random_orthogonal(rng: np.random.Generator, p: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    return q * np.sign(np.diag(r))


def random_lemma_instance(rng: np.random.Generator):
    """Random truth with clusters, a selection and a perturbation with ``||E|| <= g/4``."""
    q = int(rng.integers(2, 6))
    mult = tuple(int(m) for m in rng.integers(1, 4, q))
    mu = tuple(np.sort(rng.uniform(0.5, 10.0, q))[::-1])
    if min(a - b for a, b in zip(mu, mu[1:])) < 0.05:
        mu = tuple(10.0 - 1.5 * np.arange(q))
    spec = SpectrumSpec(mu, mult)
    while True:
        first = int(rng.integers(0, q))
        last = int(rng.integers(first, q))
        if not (first == 0 and last == q - 1):
            break
    sel = ClusterSelection(first, last)
    basis = random_orthogonal(rng, spec.dim)
    truth = (basis * spec.eigenvalues) @ basis.T
    truth = 0.5 * (truth + truth.T)
    e = random_symmetric(rng, spec.dim)
    scale = rng.uniform(0.01, 1.0) * spectral_gap(spec, sel) / 4.0
    e *= scale / spectral_norm(e)
    return spec, sel, truth, e


def lemma_slack(spec, sel, truth, e, *, fault: bool = False) -> tuple[float, float]:
    """``(davis_kahan_lhs / rhs, remainder_lhs / rhs)``; both must be ``<= 1``."""
    idx = list(sel.indices(spec))
    t_eig = eigh(truth)
    p_true = projector(t_eig, idx).matrix
    p_pert = projector(eigh(truth + e), idx).matrix
    lin = linear_term(t_eig, spec, sel, e)
    if fault:
        lin = 0.5 * lin
    g, l = spectral_gap(spec, sel), cluster_width(spec, sel)
    en = spectral_norm(e)
    factor = 1.0 + (2.0 / math.pi) * l / g
    dk = spectral_norm(p_pert - p_true) / (4.0 * factor * en / g)
    rem = spectral_norm(p_pert - p_true - lin) / (15.0 * factor * (en / g) ** 2)
    return dk, rem


def finite_difference_error(spec, sel, truth, e, t: float = 1e-5, *, fault: bool = False) -> float:
    """Max-entry gap between the difference quotient and the linear term, relative to the latter."""
    idx = list(sel.indices(spec))
    t_eig = eigh(truth)
    p_true = projector(t_eig, idx).matrix
    p_step = projector(eigh(truth + t * e), idx).matrix
    lin = linear_term(t_eig, spec, sel, e)
    if fault:
        lin = 0.5 * lin
    quotient = (p_step - p_true) / t
    return float(np.max(np.abs(quotient - lin)) / np.max(np.abs(lin)))


def check_projectors(seed: int, count: int = 200, fault: bool = False) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        p = int(rng.integers(2, 31))
        a = random_symmetric(rng, p)
        dec = eigh(a)
        u = dec.eigenvectors
        worst = max(worst, np.max(np.abs(u.T @ u - np.eye(p))) / (1e-10 * p))
        worst = max(worst, np.max(np.abs(dec.reconstruct() - a)) / (1e-9 * (1 + np.max(np.abs(a)))))
        k = int(rng.integers(1, p + 1))
        proj = projector(dec, range(k)).matrix
        if fault:
            proj = proj + 1e-3
        worst = max(worst, np.max(np.abs(proj @ proj - proj)) / 1e-9)
        worst = max(worst, abs(np.trace(proj) - k) / 1e-9)
        sn, fn, nn = spectral_norm(a), frobenius_norm(a), nuclear_norm(a)
        if not (sn <= fn * (1 + 1e-12) and fn <= nn * (1 + 1e-12)):
            worst = max(worst, math.inf)
        other = projector(eigh(random_symmetric(rng, p)), range(k))
        d = projector_distance_sq(proj, other)
        if not -1e-9 <= d <= 2 * k + 1e-9:
            worst = max(worst, math.inf)
    return CheckResult("projector-algebra", worst <= 1.0, f"worst tolerance ratio {worst:.3g}")


def check_wishart(seed: int, draws: int = 2000, fault: bool = False) -> CheckResult:
    rng = np.random.default_rng(seed)
    p, nu = 5, 50
    psi = np.diag(np.arange(1.0, p + 1))
    params = make_params(psi, nu)
    sig = np.array([sample_sigma(params, rng) for _ in range(draws)])
    if fault:
        sig *= 1.1
    prec_mean = np.mean(np.linalg.inv(sig), axis=0)
    target = nu * np.linalg.inv(psi)
    err_prec = np.linalg.norm(prec_mean - target) / np.linalg.norm(target)
    err_cov = np.linalg.norm(sig.mean(axis=0) - psi / (nu - p - 1)) / np.linalg.norm(psi / (nu - p - 1))
    oracle = np.array([sample_sigma_outer(params, rng) for _ in range(draws // 4)])
    err_oracle = np.linalg.norm(oracle.mean(axis=0) - sig.mean(axis=0)) / np.linalg.norm(sig.mean(axis=0))
    ok = err_prec <= 0.05 and err_cov <= 0.05 and err_oracle <= 0.05
    return CheckResult(
        "wishart-moments",
        ok,
        f"precision mean err {err_prec:.3f}, covariance mean err {err_cov:.3f}, oracle err {err_oracle:.3f}",
    )


def check_lemma(seed: int, count: int = 50, fault: bool = False) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_dk = worst_rem = worst_fd = 0.0
    for _ in range(count):
        inst = random_lemma_instance(rng)
        dk, rem = lemma_slack(*inst, fault=fault)
        worst_dk, worst_rem = max(worst_dk, dk), max(worst_rem, rem)
        worst_fd = max(worst_fd, finite_difference_error(*inst, fault=fault))
    return CheckResult(
        "projector-perturbation",
        worst_dk <= 1.0 and worst_rem <= 1.0 and worst_fd <= 1e-3,
        f"max lhs/rhs: first-order {worst_dk:.3g}, remainder {worst_rem:.3g}; "
        f"derivative rel err {worst_fd:.2e}",
    )


def check_weyl(seed: int, count: int = 200, fault: bool = False) -> CheckResult:
    """Sorted eigenvalues move by at most the spectral norm of the perturbation."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        p = int(rng.integers(2, 31))
        a = random_symmetric(rng, p)
        e = rng.uniform(0.0, 1.0) * random_symmetric(rng, p)
        shift = eigh(a + e).eigenvalues - eigh(a).eigenvalues
        bound = spectral_norm(e)
        if fault:
            bound *= 0.5
        worst = max(worst, float(np.max(np.abs(shift))) / (bound + 1e-12))
    return CheckResult("weyl", worst <= 1.0 + 1e-9, f"max shift / norm {worst:.3g}")


def check_quantiles(seed: int, count: int = 20, fault: bool = False) -> CheckResult:
    rng = np.random.default_rng(seed)
    alphas = np.arange(1, 1000) / 1000.0
    ok = True
    for _ in range(count):
        x = rng.exponential(size=int(rng.integers(1, 600)))
        q = np.array([gamma_circ(x, a) for a in alphas])
        qt = np.array([gamma_circ(np.exp(x), a) for a in alphas])
        if fault:
            q = q[::-1]
        ok = ok and bool(np.all(np.diff(q) >= 0) and np.array_equal(np.exp(q), qt))
    return CheckResult("quantile-monotonicity", ok, "rank quantile monotone and equivariant" if ok else "violated")


def check_whitening(seed: int, count: int = 200, fault: bool = False) -> CheckResult:
    """Moment matrices whiten the truth on the selected eigenspaces and on the rest."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        spec, sel, _, _ = random_lemma_instance(rng)
        mats = moment_matrices(spec, sel)
        truth = spec.covariance()
        if fault:
            truth = 1.01 * truth
        for m in (mats.u, mats.v):
            worst = max(worst, float(np.max(np.abs(m @ truth @ m.T - np.eye(m.shape[0])))) / 1e-9)
    return CheckResult("whitening", worst <= 1.0, f"worst tolerance ratio {worst:.3g}")


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "projector": check_projectors,
    "weyl": check_weyl,
    "wishart": check_wishart,
    "lemma": check_lemma,
    "quantile": check_quantiles,
    "whitening": check_whitening,
}

# checks whose ``count`` is a number of random instances
INSTANCE_CHECKS = ("projector", "weyl", "lemma", "whitening")


def run_selfcheck(
    seed: int = 2024, fault: str | None = None, instances: int | None = None
) -> list[CheckResult]:
    """Run every check; ``instances`` overrides the random-instance count."""
    if fault is not None and fault not in CHECKS:
        raise ValueError(f"unknown fault {fault!r}")
    out = []
    for i, (name, fn) in enumerate(CHECKS.items()):
        kwargs = {"count": instances} if instances is not None and name in INSTANCE_CHECKS else {}
        out.append(fn(seed + i, fault=(name == fault), **kwargs))
    return out
