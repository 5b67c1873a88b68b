import logging
import math

import numpy as np
import pytest
from scipy import integrate, optimize

from iwproj.datagen import (
    EXP2_LAWS,
    ExperimentDesign,
    Law,
    MarchenkoPastur,
    _break_ties,
    build_experiment1,
    build_experiment2,
    delta_hat,
    generate_dataset,
    law_scale,
    sample_covariance,
    sample_law,
)
from iwproj.errors import InvalidInputError
from iwproj.linalg import effective_rank, spectral_norm
from iwproj.spectrum import ClusterSelection, SpectrumSpec, gamma_star, spectral_gap
from iwproj.streams import stream


def diag_design(variances, laws):
    return ExperimentDesign(
        spectrum=SpectrumSpec(tuple(variances), (1,) * len(variances)),
        laws=tuple(laws),
        selection=ClusterSelection(0, 0),
    )


class TestLaws:
    @pytest.mark.parametrize("kind", list(Law))
    def test_moments(self, kind):
        rng = np.random.default_rng(20)
        v = 2.5
        x = sample_law(kind, v, rng, 1_000_000)
        assert abs(x.mean()) <= 0.01 * math.sqrt(v)
        assert x.var() == pytest.approx(v, rel=0.02)

    def test_scales(self):
        assert law_scale("uniform", 3.0) == pytest.approx(3.0)
        assert law_scale("laplace", 2.0) == pytest.approx(1.0)
        assert law_scale("discrete3", 1.5) == pytest.approx(1.5)
        assert law_scale("gaussian", 4.0) == pytest.approx(2.0)

    def test_discrete_support(self):
        x = sample_law("discrete3", 1.5, np.random.default_rng(21), 10_000)
        assert set(np.unique(x)) == {-1.5, 0.0, 1.5}

    def test_uniform_fourth_moment(self):
        x = sample_law("uniform", 3.0, np.random.default_rng(22), 1_000_000)
        assert np.abs(x).max() <= 3.0
        assert np.mean(x**4) == pytest.approx(3.0**4 / 5, rel=0.05)


class TestMarchenkoPastur:
    def test_support_fit(self):
        mp = MarchenkoPastur.from_support(0.71, 1.34)
        # independent route: root-find each endpoint equation with unit variance
        s_lo = optimize.brentq(lambda s: (1 - s) ** 2 - 0.71, 0.0, 0.5)
        s_hi = optimize.brentq(lambda s: (1 + s) ** 2 - 1.34, 0.0, 0.5)
        assert math.sqrt(mp.ratio) == pytest.approx(0.1575, abs=2e-4)
        assert mp.ratio == pytest.approx(0.0248, abs=1e-4)
        assert s_lo <= math.sqrt(mp.ratio) <= s_hi
        assert abs(mp.sigma2 - 1.0) < 1e-3
        unit = MarchenkoPastur(mp.ratio, 1.0)
        assert unit.support[0] == pytest.approx(0.71, abs=1e-3)
        assert unit.support[1] == pytest.approx(1.34, abs=1e-3)
        assert mp.support == pytest.approx((0.71, 1.34), abs=1e-12)

    def test_density_normalized(self):
        mp = MarchenkoPastur.from_support(0.71, 1.34)
        total, _ = integrate.quad(mp.pdf, *mp.support, limit=200)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_sampler_cdf(self):
        mp = MarchenkoPastur.from_support(0.71, 1.34)
        x = mp.sample(100_000, np.random.default_rng(23))
        assert x.min() >= 0.71 and x.max() <= 1.34
        mid = 0.5 * (0.71 + 1.34)
        cdf_mid, _ = integrate.quad(mp.pdf, 0.71, mid, limit=200)
        assert np.mean(x <= mid) == pytest.approx(cdf_mid, abs=0.02)


class TestDesigns:
    def test_experiment1(self):
        d = build_experiment1(seed=0)
        mu = d.spectrum.distinct
        assert d.p == 100 and d.spectrum.q == 100
        assert mu[:5] == (25.698, 15.7688, 10.0907, 5.9214, 3.4321)
        assert min(mu[5:]) >= 0.71 and max(mu[5:]) <= 1.34
        assert set(d.laws) == {"gaussian"}
        assert d.selection == ClusterSelection(0, 0)

    def test_experiment1_seeded(self):
        assert build_experiment1(5).spectrum == build_experiment1(5).spectrum
        assert build_experiment1(5).spectrum != build_experiment1(6).spectrum

    def test_experiment2(self):
        d = build_experiment2(seed=0)
        spec = d.spectrum
        assert d.p == 100 and spec.q == 94
        assert spec.distinct[:6] == (25.0, 20.0, 15.0, 10.0, 7.5, 5.0)
        assert spec.multiplicities[:6] == (3, 3, 3, 1, 1, 1)
        assert min(spec.distinct[6:]) >= 0.0 and max(spec.distinct[6:]) <= 3.0
        assert d.selection.dim(spec) == 9
        assert spectral_gap(spec, d.selection) == 5.0
        assert d.laws[:9] == EXP2_LAWS
        assert d.laws[3] == "gaussian"
        assert set(d.laws[9:]) == {"gaussian"}

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            diag_design([2.0, 1.0], ["gaussian"])
        with pytest.raises(InvalidInputError):
            diag_design([2.0, 1.0], ["gaussian", "cauchy"])

    def test_tie_breaking(self):
        out = _break_ties(np.array([1.0, 2.0, 1.0, 1.0]))
        np.testing.assert_array_equal(out, [2.0, 1.0, 1.0 - 1e-12, 1.0 - 2e-12])


class TestDataset:
    def test_gaussian_variances(self):
        d = diag_design([4.0, 2.0, 1.0], ["gaussian"] * 3)
        x = generate_dataset(d, 100_000, np.random.default_rng(24))
        np.testing.assert_allclose(x.var(axis=0), [4.0, 2.0, 1.0], rtol=0.03)

    def test_mixed_laws(self):
        d = diag_design([4.0, 3.0, 1.5, 1.0], ["uniform", "laplace", "discrete3", "gaussian"])
        x = generate_dataset(d, 200_000, np.random.default_rng(25))
        np.testing.assert_allclose(x.var(axis=0), [4.0, 3.0, 1.5, 1.0], rtol=0.03)
        assert np.abs(x[:, 0]).max() <= math.sqrt(12.0)
        assert set(np.unique(x[:, 2])) == {-1.5, 0.0, 1.5}
        assert abs(np.corrcoef(x.T)[0, 1]) < 0.01

    def test_reproducible(self):
        d = build_experiment2(seed=1)
        a = generate_dataset(d, 50, stream(9, "frequentist", 50, 3))
        b = generate_dataset(d, 50, stream(9, "frequentist", 50, 3))
        assert a.tobytes() == b.tobytes()


class TestSampleCovariance:
    def test_examples(self):
        np.testing.assert_array_equal(sample_covariance([[1.0, 2.0]]), [[1, 2], [2, 4]])
        np.testing.assert_array_equal(sample_covariance([[1.0, 0.0], [0.0, 1.0]]), np.diag([0.5, 0.5]))
        np.testing.assert_array_equal(sample_covariance([[1.0, 1.0], [-1.0, -1.0]]), [[1, 1], [1, 1]])

    def test_concentration_sanity(self, caplog):
        truth = np.diag([4.0, 1.0])
        d = diag_design([4.0, 1.0], ["gaussian"] * 2)
        n = 100_000
        s = sample_covariance(generate_dataset(d, n, np.random.default_rng(26)))
        radius = delta_hat("gaussian", n, 2, effective_rank=effective_rank(truth))
        err = spectral_norm(s - truth)
        if err > 3 * radius * 4.0:
            logging.getLogger(__name__).warning("sample covariance error %.4g above 3x radius", err)


class TestDeltaHat:
    def test_gaussian(self):
        value = delta_hat("gaussian", 10_000, 100, effective_rank=100.0)
        assert value == pytest.approx(math.sqrt((100 + math.log(1e4)) / 1e4))
        assert value == pytest.approx(0.1045, abs=1e-4)

    def test_subgaussian_logconcave(self):
        assert delta_hat("subgaussian", math.e, 1) == pytest.approx(math.sqrt(2 / math.e))
        assert delta_hat("subgaussian", math.e, 1) == pytest.approx(0.8578, abs=1e-4)
        assert delta_hat("logconcave", math.e, 1) == pytest.approx(0.6065, abs=1e-4)

    def test_bounded(self):
        assert delta_hat("bounded", math.e, 5, radius=2.0, spectral_norm=4.0) == pytest.approx(math.sqrt(1 / math.e))
        with pytest.raises(InvalidInputError):
            delta_hat("bounded", 10, 5, spectral_norm=4.0)
        with pytest.raises(InvalidInputError):
            delta_hat("gaussian", 10, 5)
        with pytest.raises(InvalidInputError):
            delta_hat("heavy", 10, 5)
        with pytest.raises(InvalidInputError):
            delta_hat("subgaussian", 1, 5)


def test_experiment1_gamma_star_shape():
    d = build_experiment1(seed=0)
    g = gamma_star(d.spectrum, d.selection)
    assert g.diagonal.size == 99
    assert g.diagonal[0] == pytest.approx(2 * 25.698 * 15.7688 / 9.9292**2)
