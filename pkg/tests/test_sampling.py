import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from noisymc.io import write_observations
from noisymc.sampling import (
    InvalidDistributionError,
    MatrixDims,
    NoiseModel,
    build_distribution,
    generate_low_rank,
    pi_norm_sq,
    regularity_constants,
    sample_observations,
    apply_observation_operator,
)


def test_dims_derived():
    d = MatrixDims(3, 7)
    assert (d.M, d.m, d.d) == (7, 3, 10)
    assert d.M * d.m == d.m1 * d.m2
    with pytest.raises(ValueError):
        MatrixDims(0, 3)


class TestBuildDistribution:
    def test_uniform(self):
        dist = build_distribution(MatrixDims(2, 2))
        np.testing.assert_array_equal(dist.pi, np.full((2, 2), 0.25))
        np.testing.assert_array_equal(dist.row_marginals, [0.5, 0.5])
        np.testing.assert_array_equal(dist.col_marginals, [0.5, 0.5])

    def test_product(self):
        dist = build_distribution(MatrixDims(2, 2), "product", row_weights=[1, 3], col_weights=[1, 1])
        np.testing.assert_allclose(dist.pi, [[0.125, 0.125], [0.375, 0.375]], rtol=0, atol=1e-15)

    def test_explicit_not_product(self):
        table = [[0.4, 0.1], [0.1, 0.4]]
        dist = build_distribution(MatrixDims(2, 2), "explicit", table=table)
        np.testing.assert_allclose(dist.row_marginals, [0.5, 0.5])
        np.testing.assert_allclose(dist.col_marginals, [0.5, 0.5])
        assert not np.allclose(dist.pi, np.outer(dist.row_marginals, dist.col_marginals))

    def test_zero_mass(self):
        with pytest.raises(InvalidDistributionError):
            build_distribution(MatrixDims(2, 2), "explicit", table=np.zeros((2, 2)))
        with pytest.raises(InvalidDistributionError):
            build_distribution(MatrixDims(2, 2), "product", row_weights=[0, 0], col_weights=[1, 1])

    def test_negative_weights(self):
        with pytest.raises(InvalidDistributionError):
            build_distribution(MatrixDims(2, 2), "explicit", table=[[1, -1], [1, 1]])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            build_distribution(MatrixDims(2, 3), "explicit", table=np.ones((3, 2)))
        with pytest.raises(ValueError):
            build_distribution(MatrixDims(2, 3), "product", row_weights=[1, 1, 1], col_weights=[1, 1])

    def test_immutable(self):
        dist = build_distribution(MatrixDims(2, 2))
        with pytest.raises(ValueError):
            dist.pi[0, 0] = 1.0


class TestRegularityConstants:
    @pytest.mark.parametrize("shape", [(1, 1), (2, 2), (2, 3), (7, 4), (50, 50)])
    def test_uniform_is_one(self, shape):
        reg = regularity_constants(build_distribution(MatrixDims(*shape)))
        assert reg.L == pytest.approx(1.0, abs=1e-12)
        assert reg.mu == pytest.approx(1.0, abs=1e-12)

    def test_explicit(self):
        reg = regularity_constants(build_distribution(MatrixDims(2, 2), "explicit", table=[[0.4, 0.1], [0.1, 0.4]]))
        assert reg.mu == pytest.approx(2.5)
        assert reg.L == pytest.approx(1.0)

    def test_zero_cell_flagged(self):
        dist = build_distribution(MatrixDims(2, 3), "explicit", table=[[1, 1, 1], [1, 0, 1]])
        reg = regularity_constants(dist)
        assert reg.zero_position == (1, 1)
        assert not reg.mu_defined and reg.mu == float("inf")
        # generation still works with a zero-mass cell
        obs = sample_observations(np.zeros((2, 3)), dist, NoiseModel("gaussian", 0.0), 500, 1)
        assert not np.any((obs.rows == 1) & (obs.cols == 1))

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, (4, 5), elements=st.floats(0.01, 10)))
    def test_recomputable_and_at_least_one(self, table):
        dist = build_distribution(MatrixDims(4, 5), "explicit", table=table)
        reg = regularity_constants(dist)
        m = 4
        assert reg.L == pytest.approx(m * max(dist.pi.sum(1).max(), dist.pi.sum(0).max()), abs=1e-12)
        assert reg.mu == pytest.approx(1.0 / (20 * dist.pi.min()), rel=1e-12)
        assert reg.L >= 1 - 1e-12 and reg.mu >= 1 - 1e-12


class TestPiNorm:
    def test_all_ones(self):
        dist = build_distribution(MatrixDims(3, 4), "product", row_weights=[1, 2, 3], col_weights=[4, 1, 1, 1])
        assert pi_norm_sq(np.ones((3, 4)), dist) == pytest.approx(1.0)

    def test_uniform(self):
        A = np.arange(12.0).reshape(3, 4)
        assert pi_norm_sq(A, build_distribution(MatrixDims(3, 4))) == pytest.approx(np.sum(A**2) / 12)

    def test_weighted(self):
        dist = build_distribution(MatrixDims(2, 2), "explicit", table=[[0.4, 0.1], [0.1, 0.4]])
        assert pi_norm_sq(np.array([[1.0, 0.0], [0.0, 2.0]]), dist) == pytest.approx(2.0)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            pi_norm_sq(np.ones((2, 3)), build_distribution(MatrixDims(2, 2)))

    def test_lower_bound_random(self):
        rng = np.random.default_rng(3)
        dist = build_distribution(MatrixDims(6, 9), "explicit", table=rng.uniform(0.05, 1, (6, 9)))
        mu = regularity_constants(dist).mu
        for _ in range(1000):
            A = rng.standard_normal((6, 9))
            assert pi_norm_sq(A, dist) >= np.sum(A**2) / (54 * mu) * (1 - 1e-12)


class TestGenerateLowRank:
    def test_rank_one(self):
        A = generate_low_rank(MatrixDims(2, 2), 1, 1.0, 0)
        assert np.linalg.matrix_rank(A) == 1
        assert np.abs(A).max() <= 1.0

    def test_full_rank(self):
        A = generate_low_rank(MatrixDims(5, 4), 4, 2.0, 1)
        assert np.linalg.matrix_rank(A) == 4

    def test_rank_three_60(self):
        A = generate_low_rank(MatrixDims(60, 60), 3, 1.0, 2)
        s = np.linalg.svd(A, compute_uv=False)
        assert np.all(s[3:] < 1e-8 * s[0])
        assert s[2] > 1e-8 * s[0]
        assert 0.5 <= np.abs(A).max() <= 1.0

    def test_bad_rank(self):
        with pytest.raises(ValueError):
            generate_low_rank(MatrixDims(3, 5), 4, 1.0, 0)


class TestNoise:
    @pytest.mark.parametrize("kind", ["gaussian", "sub_exponential", "rademacher"])
    def test_standardized_moments(self, kind):
        from noisymc.rng import make_rng

        xi = NoiseModel(kind, 1.0).standardized(make_rng(11), 10**6)
        assert abs(np.mean(xi)) < 0.005
        assert abs(np.mean(xi**2) - 1) < 0.01

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            NoiseModel("cauchy", 1.0)


class TestSampleObservations:
    def test_noiseless(self):
        A0 = generate_low_rank(MatrixDims(5, 6), 2, 1.0, 0)
        obs = sample_observations(A0, build_distribution(MatrixDims(5, 6)), NoiseModel("gaussian", 0.0), 300, 4)
        np.testing.assert_array_equal(obs.y, A0[obs.rows, obs.cols])
        np.testing.assert_array_equal(apply_observation_operator(A0, obs), obs.y)

    def test_uniform_frequencies(self):
        dims = MatrixDims(10, 10)
        obs = sample_observations(np.zeros((10, 10)), build_distribution(dims), NoiseModel("gaussian", 0.0), 10**5, 5)
        freq = obs.counts() / obs.n
        # 3-sigma binomial band: 3 * sqrt(0.01 * 0.99 / 1e5) ~ 0.00094 < 0.003
        assert np.all(np.abs(freq - 0.01) <= 0.003)

    def test_deterministic(self, tmp_path):
        A0 = generate_low_rank(MatrixDims(4, 4), 2, 1.0, 0)
        dist = build_distribution(MatrixDims(4, 4))
        noise = NoiseModel("sub_exponential", 0.3)
        a = sample_observations(A0, dist, noise, 200, 99)
        b = sample_observations(A0, dist, noise, 200, 99)
        assert a == b
        write_observations(tmp_path / "a.csv", a)
        write_observations(tmp_path / "b.csv", b)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        c = sample_observations(A0, dist, noise, 200, 100)
        assert a != c


class TestObservationOperator:
    def test_zero(self):
        obs = sample_observations(np.ones((3, 3)), build_distribution(MatrixDims(3, 3)), NoiseModel(), 20, 0)
        np.testing.assert_array_equal(apply_observation_operator(np.zeros((3, 3)), obs), np.zeros(20))

    def test_repeated_position(self):
        from noisymc.sampling import ObservationSet

        obs = ObservationSet(MatrixDims(2, 2), [1, 1, 0], [0, 0, 1], [0.0, 0.0, 0.0])
        A = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(apply_observation_operator(A, obs), [3.0, 3.0, 2.0])

    def test_mismatch(self):
        obs = sample_observations(np.ones((3, 3)), build_distribution(MatrixDims(3, 3)), NoiseModel(), 5, 0)
        with pytest.raises(ValueError):
            apply_observation_operator(np.zeros((3, 4)), obs)
