import json

import numpy as np
import pytest

from sase.channel import (
    ArrayGeometry,
    ChannelInstance,
    PathSet,
    assemble_channel,
    numerical_rank,
    random_channel,
    sample_paths,
    steering_vector_ula,
    steering_vector_upa,
    ula_response,
)
from sase.errors import InvalidParameterError, ShapeError


class TestSteeringVectors:
    def test_ula_broadside(self):
        np.testing.assert_allclose(steering_vector_ula(0.0, 4), [0.5] * 4, atol=1e-15)

    def test_ula_endfire(self):
        expected = np.array([1, -1]) / np.sqrt(2)
        np.testing.assert_allclose(steering_vector_ula(np.pi / 2, 2), expected, atol=1e-15)

    def test_ula_thirty_degrees(self):
        expected = 0.5 * np.array([1, -1j, -1, 1j])
        np.testing.assert_allclose(steering_vector_ula(np.pi / 6, 4), expected, atol=1e-15)

    def test_ula_zero_antennas(self):
        with pytest.raises(InvalidParameterError):
            steering_vector_ula(0.1, 0)

    def test_upa_zero_azimuth_broadside_elevation(self):
        np.testing.assert_allclose(steering_vector_upa(0.0, np.pi / 2, 4), [0.5] * 4, atol=1e-15)

    def test_upa_row_major_flattening(self):
        expected = 0.5 * np.array([1, 1, -1, -1])
        np.testing.assert_allclose(steering_vector_upa(np.pi / 2, np.pi / 2, 4), expected, atol=1e-15)

    def test_upa_non_square(self):
        with pytest.raises(InvalidParameterError):
            steering_vector_upa(0.1, 0.2, 6)

    @pytest.mark.parametrize("n", [1, 3, 16, 144])
    def test_unit_norm(self, rng, n):
        for theta in rng.uniform(-np.pi / 2, np.pi / 2, 20):
            assert abs(np.linalg.norm(steering_vector_ula(theta, n)) - 1) < 1e-12
        if int(np.sqrt(n)) ** 2 == n:
            az, el = rng.uniform(-np.pi / 2, np.pi / 2, 2)
            assert abs(np.linalg.norm(steering_vector_upa(az, el, n)) - 1) < 1e-12

    def test_response_matrix_columns(self):
        thetas = np.array([-0.3, 0.2, 1.1])
        a = ula_response(thetas, 5)
        for k, t in enumerate(thetas):
            np.testing.assert_allclose(a[:, k], steering_vector_ula(t, 5))


class TestGeometry:
    def test_spacing_fixed(self):
        with pytest.raises(InvalidParameterError):
            ArrayGeometry("ula", 4, spacing_ratio=0.4)

    def test_upa_side(self):
        assert ArrayGeometry("upa", 36).side == 6
        with pytest.raises(InvalidParameterError):
            ArrayGeometry("upa", 35)


class TestSamplePaths:
    def test_deterministic(self):
        a = sample_paths(4, "ula", np.random.default_rng(5))
        b = sample_paths(4, "ula", np.random.default_rng(5))
        np.testing.assert_array_equal(a.aoa, b.aoa)
        np.testing.assert_array_equal(a.gains, b.gains)

    def test_gain_second_moment(self):
        rng = np.random.default_rng(0)
        gains = np.concatenate([sample_paths(4, "ula", rng).gains for _ in range(2500)])
        assert abs(np.mean(np.abs(gains) ** 2) - 1) < 0.05

    def test_angle_range(self, rng):
        for _ in range(200):
            p = sample_paths(6, "ula", rng)
            for ang in (p.aoa, p.aod):
                assert np.all(ang >= -np.pi / 2) and np.all(ang < np.pi / 2)

    def test_upa_pairs(self, rng):
        p = sample_paths(6, "upa", rng, cluster_shape=(3, 2))
        assert p.aoa.shape == (6, 2)
        assert p.cluster_shape == (3, 2)

    def test_zero_paths(self, rng):
        with pytest.raises(InvalidParameterError):
            sample_paths(0, "ula", rng)

    def test_bad_cluster_shape(self, rng):
        with pytest.raises(ShapeError):
            sample_paths(6, "upa", rng, cluster_shape=(2, 2))

    def test_round_trip(self, rng):
        p = sample_paths(3, "upa", rng)
        q = PathSet.from_dict(json.loads(json.dumps(p.to_dict())))
        np.testing.assert_array_equal(p.aoa, q.aoa)
        np.testing.assert_array_equal(p.gains, q.gains)


class TestAssembleChannel:
    def test_single_path_all_ones(self):
        paths = PathSet(np.array([0.0]), np.array([0.0]), np.array([1.0 + 0j]), "ula")
        ch = assemble_channel(paths, ArrayGeometry("ula", 2), ArrayGeometry("ula", 2))
        np.testing.assert_allclose(ch.matrix, np.ones((2, 2)), atol=1e-15)

    def test_default_dimensions_rank(self, default_channel):
        assert numerical_rank(default_channel.matrix) == 4
        assert default_channel.rank == 4

    def test_svd_factors(self, rng):
        for kind, n_r, n_t in (("ula", 36, 144), ("upa", 16, 36)):
            ch = random_channel(rng, n_r, n_t, 4, kind)
            recon = ch.true_left @ np.diag(ch.true_singulars) @ ch.true_right.conj().T
            assert np.linalg.norm(ch.matrix - recon) <= 1e-10 * np.linalg.norm(ch.matrix)
            assert np.all(np.diff(ch.true_singulars) <= 0)
            np.testing.assert_allclose(ch.true_left.conj().T @ ch.true_left, np.eye(4), atol=1e-10)

    def test_phase_canonical(self, default_channel):
        u = default_channel.true_left
        for k in range(u.shape[1]):
            first = u[np.flatnonzero(np.abs(u[:, k]) > 1e-12)[0], k]
            assert abs(first.imag) < 1e-12 and first.real > 0

    def test_mean_power(self):
        rng = np.random.default_rng(7)
        power = [np.linalg.norm(random_channel(rng, 6, 8, 3).matrix) ** 2 for _ in range(10_000)]
        assert abs(np.mean(power) / 48 - 1) < 0.02

    def test_upa_scale(self):
        # single broadside path gives a flat matrix of magnitude one
        paths = PathSet(np.zeros((1, 2)), np.zeros((1, 2)), np.array([1.0 + 0j]), "upa", (1, 1))
        ch = assemble_channel(paths, ArrayGeometry("upa", 4), ArrayGeometry("upa", 9))
        np.testing.assert_allclose(np.abs(ch.matrix), np.ones((4, 9)), atol=1e-12)

    def test_kind_mismatch(self, rng):
        paths = sample_paths(2, "ula", rng)
        with pytest.raises(ShapeError):
            assemble_channel(paths, ArrayGeometry("upa", 4), ArrayGeometry("upa", 4))

    def test_same_seed_bit_identical(self):
        a = random_channel(np.random.default_rng(3), 8, 16, 4)
        b = random_channel(np.random.default_rng(3), 8, 16, 4)
        np.testing.assert_array_equal(a.matrix, b.matrix)

    def test_json_round_trip(self, small_channel):
        back = ChannelInstance.from_json(small_channel.to_json())
        np.testing.assert_array_equal(back.matrix, small_channel.matrix)
        np.testing.assert_allclose(back.true_singulars, small_channel.true_singulars)


class TestNumericalRank:
    def test_identity(self):
        assert numerical_rank(np.eye(4), 1e-9) == 4

    def test_zero(self):
        assert numerical_rank(np.zeros((3, 5))) == 0

    @pytest.mark.parametrize("m", range(4, 41, 4))
    def test_column_prefix(self, rng, m):
        ch = random_channel(rng, 36, 144, 4)
        assert numerical_rank(ch.matrix[:, :m]) == 4
