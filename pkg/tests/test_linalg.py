import numpy as np
import pytest

from dicke_ising.linalg import (
    LanczosBreakdown,
    NotConverged,
    eigh_dense,
    lanczos_ground,
    svd_truncated,
)

from oracles import jacobi_svd


def reconstruct(dec):
    return dec.U @ np.diag(dec.singular_values) @ dec.Vt


class TestSvdTruncated:
    def test_identity_no_truncation(self):
        dec = svd_truncated(np.eye(3), cutoff=0.0, max_dim=3)
        assert np.allclose(dec.singular_values, [1.0, 1.0, 1.0])
        assert dec.discarded_weight == 0.0
        assert not dec.capped

    def test_rank_one(self):
        rng = np.random.default_rng(0)
        u = rng.normal(size=5)
        v = rng.normal(size=7)
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        dec = svd_truncated(np.outer(u, v), cutoff=1e-10, max_dim=10)
        assert dec.rank == 1
        assert abs(dec.singular_values[0] - 1.0) < 1e-12

    def test_random_matches_jacobi_oracle(self):
        rng = np.random.default_rng(1)
        M = rng.normal(size=(8, 8))
        dec = svd_truncated(M, cutoff=0.0, max_dim=8)
        s_oracle, _, _ = jacobi_svd(M)
        assert np.max(np.abs(dec.singular_values - s_oracle)) < 1e-12
        assert np.linalg.norm(reconstruct(dec) - M) < 1e-12

    def test_discarded_weight_identity(self):
        rng = np.random.default_rng(2)
        for cutoff in (0.0, 1e-8, 1e-3, 0.1):
            M = rng.normal(size=(10, 6)) * rng.uniform(0.1, 2.0)
            dec = svd_truncated(M, cutoff=cutoff, max_dim=6)
            total = np.linalg.norm(M) ** 2
            err = np.linalg.norm(M - reconstruct(dec)) ** 2
            assert abs(err / total - dec.discarded_weight) < 1e-12
            if not dec.capped:
                assert dec.discarded_weight <= cutoff

    def test_orthonormal_factors(self):
        rng = np.random.default_rng(3)
        M = rng.normal(size=(9, 5))
        dec = svd_truncated(M, cutoff=1e-4, max_dim=9)
        k = dec.rank
        assert np.allclose(dec.U.T @ dec.U, np.eye(k), atol=1e-12)
        assert np.allclose(dec.Vt @ dec.Vt.T, np.eye(k), atol=1e-12)

    def test_singular_values_sorted(self):
        rng = np.random.default_rng(4)
        M = rng.normal(size=(12, 12))
        dec = svd_truncated(M, cutoff=1e-6, max_dim=12)
        assert np.all(np.diff(dec.singular_values) <= 0)

    def test_tie_kept_at_truncation_edge(self):
        # Two exactly equal singular values: cutoff allows keeping one,
        # the tie rule keeps both.
        M = np.diag([1.0, 1.0])
        dec = svd_truncated(M, cutoff=0.5, max_dim=4)
        assert dec.rank == 2

    def test_capped_flag(self):
        M = np.diag([1.0, 0.1])
        dec = svd_truncated(M, cutoff=0.0, max_dim=1)
        assert dec.capped
        assert dec.rank == 1
        assert abs(dec.discarded_weight - 0.01 / 1.01) < 1e-14

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            svd_truncated(np.array([[np.nan, 0.0], [0.0, 1.0]]), 0.0, 2)
        with pytest.raises(ValueError):
            svd_truncated(np.zeros((0, 2)), 0.0, 1)
        with pytest.raises(ValueError):
            svd_truncated(np.eye(2), 1.5, 2)
        with pytest.raises(ValueError):
            svd_truncated(np.eye(2), 0.0, 0)


class TestLanczosGround:
    def test_diagonal(self):
        A = np.diag([3.0, 1.0, 2.0])
        val, vec = lanczos_ground(lambda x: A @ x, np.ones(3), tol=1e-12)
        assert abs(val - 1.0) < 1e-12
        assert abs(abs(vec[1]) - 1.0) < 1e-10

    def test_two_by_two_closed_form(self):
        eps, h = 0.3, 0.4
        A = np.array([[eps, -h], [-h, -eps]])
        val, vec = lanczos_ground(lambda x: A @ x, np.array([1.0, 0.3]), tol=1e-13)
        assert abs(val + 0.5) < 1e-12
        assert np.linalg.norm(A @ vec - val * vec) < 1e-12

    def test_random_symmetric_matches_dense(self):
        rng = np.random.default_rng(5)
        A = rng.normal(size=(50, 50))
        A = 0.5 * (A + A.T)
        val, vec = lanczos_ground(lambda x: A @ x, rng.normal(size=50), tol=1e-12)
        ref = np.linalg.eigvalsh(A)[0]
        assert abs(val - ref) < 1e-10
        assert np.linalg.norm(A @ vec - val * vec) <= 1e-12 * max(1.0, abs(val)) * 10

    def test_variational_bound(self):
        rng = np.random.default_rng(6)
        A = rng.normal(size=(30, 30))
        A = 0.5 * (A + A.T)
        val, _ = lanczos_ground(lambda x: A @ x, rng.normal(size=30), tol=1e-12)
        for _ in range(20):
            v = rng.normal(size=30)
            v /= np.linalg.norm(v)
            assert val <= v @ A @ v + 1e-10

    def test_eigenvector_normalized(self):
        rng = np.random.default_rng(7)
        A = rng.normal(size=(20, 20))
        A = 0.5 * (A + A.T)
        _, vec = lanczos_ground(lambda x: A @ x, rng.normal(size=20), tol=1e-12)
        assert abs(np.linalg.norm(vec) - 1.0) < 1e-12

    def test_breakdown_on_zero_vector(self):
        with pytest.raises(LanczosBreakdown):
            lanczos_ground(lambda x: x, np.zeros(4), tol=1e-12)

    def test_not_converged_carries_best_estimate(self):
        rng = np.random.default_rng(8)
        A = rng.normal(size=(200, 200))
        A = 0.5 * (A + A.T)
        with pytest.raises(NotConverged) as exc:
            lanczos_ground(lambda x: A @ x, rng.normal(size=200), tol=1e-15, max_iter=5)
        assert exc.value.eigenvalue is not None
        assert exc.value.residual is not None

    def test_restart_converges_eventually(self):
        # Needs more than one restart cycle at very tight tolerance.
        rng = np.random.default_rng(9)
        A = rng.normal(size=(400, 400))
        A = 0.5 * (A + A.T)
        val, vec = lanczos_ground(lambda x: A @ x, rng.normal(size=400), tol=1e-12, max_iter=2000)
        assert abs(val - np.linalg.eigvalsh(A)[0]) < 1e-9

    def test_dimension_one(self):
        val, vec = lanczos_ground(lambda x: -2.5 * x, np.array([0.7]), tol=1e-12)
        assert abs(val + 2.5) < 1e-12
        assert abs(abs(vec[0]) - 1.0) < 1e-12


class TestEighDense:
    def test_two_by_two(self):
        A = np.array([[0.3, -0.4], [-0.4, -0.3]])
        vals, vecs = eigh_dense(A)
        assert np.allclose(vals, [-0.5, 0.5], atol=1e-12)
        assert np.allclose(A @ vecs, vecs @ np.diag(vals), atol=1e-10)

    def test_identity(self):
        vals, _ = eigh_dense(np.eye(6))
        assert np.allclose(vals, 1.0)

    def test_construct_then_recover(self):
        rng = np.random.default_rng(10)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        d = np.array([-1.5, 0.25, 2.0])
        A = q @ np.diag(d) @ q.T
        vals, _ = eigh_dense(A)
        assert np.allclose(vals, d, atol=1e-10)

    def test_ascending_order(self):
        rng = np.random.default_rng(11)
        A = rng.normal(size=(15, 15))
        A = 0.5 * (A + A.T)
        vals, _ = eigh_dense(A)
        assert np.all(np.diff(vals) >= 0)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            eigh_dense(np.array([[0.0, 1.0], [0.0, 0.0]]))
