import numpy as np
import pytest

from sase.errors import IllConditionedError, ShapeError
from sase.linalg import random_unitary, unvec, vec
from sase.metrics import nmse
from sase.reconstruct import (
    ChannelEstimate,
    CoreCoefficient,
    assemble_estimate,
    build_ls_system,
    estimate_channel,
    kronecker_operators,
    ls_objective,
    solve_core,
)
from sase.sounding import NoiseModel
from sase.subspace import UNCONSTRAINED, SaseSettings, run_sase


def cn(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def toy_system(rng, n_r=4, n_t=6, rank=2, m=3):
    w = random_unitary(rng, n_r)[:, :rank]
    f = random_unitary(rng, n_t)[:, :rank]
    return w, f, cn(rng, n_r, m), cn(rng, rank, n_t - m), m


class TestCoreCoefficient:
    def test_column_major(self):
        r = np.array([[1, 2], [3, 4]], dtype=complex)
        c = CoreCoefficient.from_matrix(r)
        np.testing.assert_array_equal(c.r_vec, [1, 3, 2, 4])
        np.testing.assert_array_equal(CoreCoefficient.from_vec(c.r_vec).r_matrix, r)


class TestBuildLsSystem:
    def test_scalar_case(self, rng):
        w = np.array([[1.0 + 0j]])
        f = random_unitary(rng, 5)[:, :1]
        gram, _ = build_ls_system(w, f, cn(rng, 1, 1), cn(rng, 1, 4), 1)
        np.testing.assert_allclose(gram, [[1.0]], atol=1e-12)

    def test_hermitian(self, rng):
        gram, _ = build_ls_system(*toy_system(rng))
        assert np.linalg.norm(gram - gram.conj().T) < 1e-12

    @pytest.mark.parametrize("m", [1, 3, 6])
    def test_matches_kronecker(self, rng, m):
        w, f, _, _, _ = toy_system(rng)
        y_s, q_c = cn(rng, 4, m), cn(rng, 2, 6 - m)
        g1, r1 = build_ls_system(w, f, y_s, q_c, m, method="structured")
        g2, r2 = build_ls_system(w, f, y_s, q_c, m, method="kronecker")
        np.testing.assert_allclose(g1, g2, atol=1e-10)
        np.testing.assert_allclose(r1, r2, atol=1e-10)

    def test_vec_identity(self, rng):
        # vec(W R F1^H) = (conj(F1) kron W) vec(R)
        w, f, _, _, m = toy_system(rng)
        r = cn(rng, 2, 2)
        a1, a2 = kronecker_operators(w, f, m)
        np.testing.assert_allclose(a1 @ vec(r), vec(w @ r @ f[:m].conj().T), atol=1e-12)
        np.testing.assert_allclose(a2 @ vec(r), vec(r @ f[m:].conj().T), atol=1e-12)

    def test_objective_forms_agree(self, rng):
        w, f, y_s, q_c, m = toy_system(rng)
        a1, a2 = kronecker_operators(w, f, m)
        r = cn(rng, 2, 2)
        stacked = np.linalg.norm(vec(y_s) - a1 @ vec(r)) ** 2 + np.linalg.norm(vec(q_c) - a2 @ vec(r)) ** 2
        assert ls_objective(r, w, f, y_s, q_c, m) == pytest.approx(stacked, rel=1e-12)

    def test_shape_mismatch(self, rng):
        w, f, y_s, q_c, m = toy_system(rng)
        with pytest.raises(ShapeError):
            build_ls_system(w, f, y_s[:, :2], q_c, m)


class TestSolveCore:
    def test_identity(self, rng):
        rhs = cn(rng, 4)
        np.testing.assert_allclose(solve_core(np.eye(4), rhs).r_vec, rhs, atol=1e-14)

    def test_pinv_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            w, f, y_s, q_c, m = toy_system(rng, n_r=6, n_t=9, rank=3, m=4)
            gram, rhs = build_ls_system(w, f, y_s, q_c, m)
            a1, a2 = kronecker_operators(w, f, m)
            a = np.vstack([a1, a2])
            oracle = np.linalg.pinv(a) @ np.concatenate([vec(y_s), vec(q_c)])
            r = solve_core(gram, rhs).r_vec
            assert np.linalg.norm(r - oracle) <= 1e-8 * np.linalg.norm(oracle)

    def test_ill_conditioned(self):
        gram = np.diag([1.0, 1e-14]).astype(complex)
        with pytest.raises(IllConditionedError, match="condition number"):
            solve_core(gram, np.ones(2, complex))

    def test_first_order_optimality(self, rng):
        w, f, y_s, q_c, m = toy_system(rng)
        r = unvec(solve_core(*build_ls_system(w, f, y_s, q_c, m)).r_vec, 2, 2)
        best = ls_objective(r, w, f, y_s, q_c, m)
        for _ in range(100):
            d = cn(rng, 2, 2)
            d *= 1e-4 / np.linalg.norm(d)
            assert ls_objective(r + d, w, f, y_s, q_c, m) >= best - 1e-12

    def test_noiseless_exact_subspaces(self, default_channel):
        u, v = default_channel.true_left, default_channel.true_right
        h = default_channel.matrix
        q_c = u.conj().T @ h[:, 20:]
        core = solve_core(*build_ls_system(u, v, h[:, :20], q_c, 20))
        np.testing.assert_allclose(core.r_matrix, u.conj().T @ h @ v, atol=1e-9)


class TestEstimate:
    def test_dense_product(self, rng):
        w, f, _, _, _ = toy_system(rng)
        core = CoreCoefficient.from_matrix(cn(rng, 2, 2))
        est = assemble_estimate(w, core, f)
        np.testing.assert_allclose(est.dense, w @ core.r_matrix @ f.conj().T, atol=1e-12)
        assert np.linalg.matrix_rank(est.dense) <= 2

    def test_zero_core(self, rng):
        w, f, _, _, _ = toy_system(rng)
        est = assemble_estimate(w, CoreCoefficient.from_matrix(np.zeros((2, 2), complex)), f)
        assert not np.any(est.dense)

    def test_core_size_mismatch(self, rng):
        w, f, _, _, _ = toy_system(rng)
        with pytest.raises(ShapeError):
            assemble_estimate(w, CoreCoefficient.from_matrix(np.zeros((3, 3), complex)), f)

    def test_noiseless_pipeline(self, default_channel):
        res = run_sase(default_channel, SaseSettings(20, 6, 8, 4, mode=UNCONSTRAINED), NoiseModel(0.0, np.random.default_rng()))
        est = estimate_channel(res.w, res.f, res.stage1.y_post_dft, res.stage2.q_c, 20)
        assert nmse(default_channel, est) <= 1e-12

    def test_dominant_modes(self, rng):
        w = random_unitary(rng, 8)[:, :4]
        f = random_unitary(rng, 10)[:, :4]
        core = np.diag([1.0, 5.0, 0.1, 3.0]).astype(complex)
        est = ChannelEstimate(w, CoreCoefficient.from_matrix(core), f)
        wd, fd = est.dominant_modes(2)
        np.testing.assert_allclose(np.abs(wd.conj().T @ w[:, [1, 3]]), np.eye(2), atol=1e-12)
        np.testing.assert_allclose(np.abs(fd.conj().T @ f[:, [1, 3]]), np.eye(2), atol=1e-12)
