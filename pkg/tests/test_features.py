import numpy as np
import pytest

from gradcp import SeriesSample, embed_lags, make_family, parse_family_token


class TestMakeFamily:
    def test_mean_identity(self):
        fam = make_family("mean")
        assert fam.size == 1
        assert fam.required_dim == 1
        assert fam.features[0]((3.5,)) == 3.5

    def test_variance(self):
        fam = make_family("variance")
        assert fam.features[0]((2.0,)) == 4.0

    def test_autocov_lag2(self):
        fam = make_family("acf", p=2)
        assert fam.size == 3
        a, b, c = 2.0, 3.0, 5.0
        f0, f1, f2 = fam.features
        assert f0((a, b, c)) == a * a
        assert f1((a, b, c)) == a * b
        assert f2((a, b, c)) == a * c

    def test_cross_covariance_d2(self):
        fam = make_family("cov", d=2)
        assert fam.labels == ("f11", "f12", "f22")
        f12 = fam.features[1]
        assert f12((2.0, 3.0)) == 6.0

    def test_cov_symmetry(self, rng):
        # f_ij(x) == f_ji(x); only i <= j is stored, check via swapped coords
        fam = make_family("cov", d=3)
        x = rng.standard_normal(3)
        for f in fam.features:
            assert f(x) == x[f.i] * x[f.j] == x[f.j] * x[f.i]

    def test_cov_degenerates_to_variance(self):
        fam = make_family("cov", d=1)
        assert fam.size == 1
        assert fam.features[0]((3.0,)) == 9.0

    def test_cov_count(self):
        for d in (2, 3, 4):
            assert make_family("cov", d=d).size == d * (d + 1) // 2

    def test_labels_unique(self):
        for fam in (make_family("acf", p=5), make_family("cov", d=4)):
            assert len(set(fam.labels)) == fam.size

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            make_family("kurtosis")

    def test_token_parsing(self):
        assert parse_family_token("acf:2").size == 3
        assert parse_family_token("mean").kind == "mean"
        assert parse_family_token("variance").kind == "variance"
        assert parse_family_token("cov", d=2).size == 3
        with pytest.raises(ValueError):
            parse_family_token("acf:x")
        with pytest.raises(ValueError):
            parse_family_token("median")


class TestEmbedLags:
    def test_lag1(self):
        sample = SeriesSample(np.array([1.0, 2.0, 3.0, 4.0]))
        emb = embed_lags(sample, 1)
        assert emb.n_obs == 3
        np.testing.assert_array_equal(emb.values, [[2, 1], [3, 2], [4, 3]])

    def test_lag_too_large(self):
        sample = SeriesSample(np.arange(5.0))
        with pytest.raises(ValueError, match="too large"):
            embed_lags(sample, 5)

    def test_lag0_identity(self):
        sample = SeriesSample(np.array([1.0, 2.0, 3.0]))
        emb = embed_lags(sample, 0)
        np.testing.assert_array_equal(emb.values, sample.values)

    def test_multivariate_rejected(self):
        sample = SeriesSample(np.ones((4, 2)))
        with pytest.raises(ValueError, match="univariate"):
            embed_lags(sample, 1)

    def test_matches_acf_family_dim(self, rng):
        y = rng.standard_normal(30)
        emb = embed_lags(SeriesSample(y), 3)
        fam = make_family("acf", p=3)
        fx = fam.evaluate(emb.values)
        # f_l row t equals Y_{t+p} * Y_{t+p-l} on the original series
        for l in range(4):
            expected = y[3:] * y[3 - l : 30 - l]
            np.testing.assert_allclose(fx[l], expected)


class TestEvaluate:
    def test_mean_and_variance_prefixes_independent(self, rng):
        from gradcp import build_prefix_sums

        y = rng.standard_normal(50)
        sample = SeriesSample(y)
        p_mean = build_prefix_sums(sample, make_family("mean"))
        p_var = build_prefix_sums(sample, make_family("variance"))
        assert p_mean.labels == ("id",)
        assert p_var.labels == ("x2",)
        assert not np.allclose(p_mean.sums, p_var.sums)

    def test_wrong_dim(self):
        fam = make_family("cov", d=2)
        with pytest.raises(ValueError, match="dimension"):
            fam.evaluate(np.ones((5, 3)))
