import numpy as np
import pytest

from dicke_ising.dmrg import DmrgSettings, dmrg_ground
from dicke_ising.ed import dense_hamiltonian, exact_diag_ground
from dicke_ising.model import ModelParams, SelfFields
from dicke_ising.mpo import build_mpo
from dicke_ising.mps import MPS, measure_profiles, product_state

from oracles import ff_chain_energy, tfim_bulk_energy


def random_model(rng):
    return (
        ModelParams(
            J=float(rng.uniform(-0.5, 0.5)),
            eps=float(rng.uniform(0.0, 0.6)),
            g=float(rng.uniform(0.0, 1.2)),
        ),
        SelfFields(m_x=float(rng.uniform(-0.5, 0.5)), m_s=float(rng.uniform(-0.5, 0.5))),
    )


class TestBuildMpo:
    def test_decoupled_sites(self):
        params = ModelParams(J=0.0, eps=0.3, g=1.0)
        fields = SelfFields(m_x=0.4)
        mpo = build_mpo(params, fields, 4)
        h1 = np.array([[0.3, -0.4], [-0.4, -0.3]])
        expected = np.zeros((16, 16))
        for i in range(4):
            op = np.array([[1.0]])
            for j in range(4):
                op = np.kron(op, h1 if j == i else np.eye(2))
            expected += op
        assert np.max(np.abs(mpo.to_dense() - expected)) < 1e-12
        assert abs(np.linalg.eigvalsh(expected)[0] + 2.0) < 1e-12
        assert abs(mpo.energy_offset - 0.64) < 1e-14

    def test_af_boundary_fields(self):
        params = ModelParams(J=0.2, eps=0.0, g=0.0)
        mpo = build_mpo(params, SelfFields(m_x=0.0, m_s=0.5), 4, with_af_boundary=True)
        H = mpo.to_dense()
        sz = np.array([[1.0, 0.0], [0.0, -1.0]])
        ops = []
        for j in range(4):
            op = np.array([[1.0]])
            for k in range(4):
                op = np.kron(op, sz if k == j else np.eye(2))
            ops.append(op)
        expected = 0.2 * (ops[0] @ ops[1] + ops[1] @ ops[2] + ops[2] @ ops[3])
        expected += 0.2 * ops[0] - 0.2 * ops[3]
        assert np.max(np.abs(H - expected)) < 1e-12
        # Néel state |down up down up> sits at basis index 0b1010.
        assert abs(H[0b1010, 0b1010] + 1.0) < 1e-14

    def test_matches_dense_assembly_oracle(self):
        rng = np.random.default_rng(12)
        for af in (False, True):
            params, fields = random_model(rng)
            H_mpo = build_mpo(params, fields, 8, with_af_boundary=af).to_dense()
            H_dense = dense_hamiltonian(params, fields, 8, with_af_boundary=af)
            assert np.max(np.abs(H_mpo - H_dense)) < 1e-12

    def test_invalid_inputs(self):
        params = ModelParams(J=0.2, eps=0.1, g=0.3)
        with pytest.raises(ValueError):
            build_mpo(params, SelfFields(), 1)
        with pytest.raises(ValueError):
            build_mpo(params, SelfFields(), 5, with_af_boundary=True)


class TestProductState:
    def test_minus_z(self):
        sx, sz = measure_profiles(product_state(3, "minus_z"))
        assert np.allclose(sz, -1.0, atol=1e-14)
        assert np.allclose(sx, 0.0, atol=1e-14)

    def test_plus_x(self):
        sx, sz = measure_profiles(product_state(2, "plus_x"))
        assert np.allclose(sx, 1.0, atol=1e-14)
        assert np.allclose(sz, 0.0, atol=1e-14)

    def test_neel_even_up(self):
        sx, sz = measure_profiles(product_state(4, "neel_even_up"))
        assert np.allclose(sz, [-1.0, 1.0, -1.0, 1.0], atol=1e-14)
        signs = np.array([(-1.0) ** (i + 1) for i in range(4)])
        assert abs(signs @ sz - 4.0) < 1e-14

    def test_normalization_and_bounds(self):
        psi = product_state(5, "plus_x")
        assert abs(psi.norm() - 1.0) < 1e-12
        with pytest.raises(ValueError):
            product_state(0, "minus_z")
        with pytest.raises(ValueError):
            product_state(3, "sideways")


class TestDmrgGround:
    def test_decoupled_sites(self):
        params = ModelParams(J=0.0, eps=0.3, g=1.0)
        mpo = build_mpo(params, SelfFields(m_x=0.4), 4)
        sol = dmrg_ground(mpo, product_state(4, "minus_z"))
        assert sol.converged
        assert abs(sol.energy + 2.0) < 1e-10

    def test_matches_ed_at_ten_sites(self):
        # Oracle-agreement checks run at truncation 1e-12: the default
        # 1e-10 cutoff bounds the energy error at the tolerance itself.
        params = ModelParams(J=0.2, eps=0.0, g=1.0)
        fields = SelfFields(m_x=0.1)
        settings = DmrgSettings(cutoff=1e-12)
        sol = dmrg_ground(build_mpo(params, fields, 10), product_state(10, "plus_x"), settings)
        e_ed, _, _ = exact_diag_ground(params, fields, 10)
        assert abs(sol.energy - e_ed) < 1e-10

    def test_nlce_difference_matches_free_fermions(self):
        # J=-0.2, eps=0, h_x=0.3: bulk energy from a 100/101 pair.
        params = ModelParams(J=-0.2, eps=0.0, g=1.0)
        fields = SelfFields(m_x=0.3)
        settings = DmrgSettings(cutoff=1e-12)
        e = {}
        for n in (100, 101):
            sol = dmrg_ground(build_mpo(params, fields, n), product_state(n, "plus_x"), settings)
            assert sol.converged
            assert abs(sol.energy - ff_chain_energy(n, -0.2, 0.3)) < 1e-8
            e[n] = sol.energy
        bulk = tfim_bulk_energy(-0.2, 0.3)
        assert abs((e[101] - e[100]) - bulk) < 1e-8

    def test_sweep_energy_monotone(self):
        rng = np.random.default_rng(13)
        for _ in range(3):
            params, fields = random_model(rng)
            sol = dmrg_ground(build_mpo(params, fields, 12), product_state(12, "minus_z"))
            diffs = np.diff(sol.sweep_energies)
            assert np.all(diffs <= 1e-12)

    def test_profile_bounds(self):
        params = ModelParams(J=0.3, eps=0.2, g=0.8)
        sol = dmrg_ground(build_mpo(params, SelfFields(m_x=0.2), 8), product_state(8, "plus_x"))
        assert np.all(np.abs(sol.sx_profile) <= 1.0 + 1e-10)
        assert np.all(np.abs(sol.sz_profile) <= 1.0 + 1e-10)

    def test_unconverged_flag(self):
        params = ModelParams(J=-0.3, eps=0.1, g=1.0)
        settings = DmrgSettings(max_sweeps=1, energy_tol=1e-14)
        sol = dmrg_ground(build_mpo(params, SelfFields(m_x=0.3), 10), product_state(10, "minus_z"), settings)
        assert not sol.converged
        assert sol.sweeps_used == 1

    def test_mismatched_sizes_rejected(self):
        params = ModelParams(J=0.1, eps=0.1, g=0.1)
        mpo = build_mpo(params, SelfFields(), 4)
        with pytest.raises(ValueError):
            dmrg_ground(mpo, product_state(5, "minus_z"))


class TestMeasureProfiles:
    def test_closed_form_single_site_state(self):
        params = ModelParams(J=0.0, eps=0.3, g=1.0)
        sol = dmrg_ground(build_mpo(params, SelfFields(m_x=0.4), 6), product_state(6, "minus_z"))
        assert np.allclose(sol.sx_profile, 0.8, atol=1e-9)
        assert np.allclose(sol.sz_profile, -0.6, atol=1e-9)


class TestExactDiag:
    def test_two_site_spectrum(self):
        params = ModelParams(J=0.2, eps=0.0, g=0.0)
        H = dense_hamiltonian(params, SelfFields(), 2)
        vals = np.linalg.eigvalsh(H)
        assert np.allclose(vals, [-0.2, -0.2, 0.2, 0.2], atol=1e-14)
        e, _, _ = exact_diag_ground(params, SelfFields(), 2)
        assert abs(e + 0.2) < 1e-14

    def test_single_site(self):
        params = ModelParams(J=0.0, eps=0.3, g=1.0)
        e, sx, sz = exact_diag_ground(params, SelfFields(m_x=0.4), 1)
        assert abs(e + 0.5) < 1e-12
        assert abs(sx[0] - 0.8) < 1e-12
        assert abs(sz[0] + 0.6) < 1e-12

    def test_cross_oracle_with_dmrg(self):
        rng = np.random.default_rng(14)
        params, fields = random_model(rng)
        settings = DmrgSettings(cutoff=1e-12)
        sol = dmrg_ground(build_mpo(params, fields, 8), product_state(8, "plus_x"), settings)
        e, _, _ = exact_diag_ground(params, fields, 8)
        assert abs(sol.energy - e) < 1e-10

    def test_degenerate_ground_reports_max_staggered(self):
        # g=0, eps=0, J>0: two exactly degenerate Néel states; the
        # reported one has the largest (positive) staggered moment.
        params = ModelParams(J=0.2, eps=0.0, g=0.0)
        _, _, sz = exact_diag_ground(params, SelfFields(), 6)
        signs = np.array([(-1.0) ** (i + 1) for i in range(6)])
        assert signs @ sz > 5.999

    def test_size_limit(self):
        with pytest.raises(ValueError):
            exact_diag_ground(ModelParams(J=0.1, eps=0.1, g=0.1), SelfFields(), 15)


class TestSymmetries:
    def test_spin_flip_symmetry_at_zero_eps(self):
        # With eps = 0 and no boundary fields the Hamiltonian commutes
        # with the global spin flip.
        params = ModelParams(J=0.25, eps=0.0, g=1.0)
        H = dense_hamiltonian(params, SelfFields(m_x=0.2), 6)
        dim = H.shape[0]
        flip = np.array([dim - 1 - i for i in range(dim)])  # product of sigma^x
        assert np.max(np.abs(H[np.ix_(flip, flip)] - H)) < 1e-14

    def test_field_flip_covariance(self):
        # Cluster energies are even in m_x.
        rng = np.random.default_rng(15)
        for af in (False, True):
            params, fields = random_model(rng)
            e_plus, _, _ = exact_diag_ground(params, fields, 8, with_af_boundary=af)
            e_minus, _, _ = exact_diag_ground(
                params, fields.with_(m_x=-fields.m_x), 8, with_af_boundary=af
            )
            assert abs(e_plus - e_minus) < 1e-10

    def test_mps_canonical_forms(self):
        rng = np.random.default_rng(16)
        tensors = [rng.normal(size=(1, 2, 3))]
        tensors += [rng.normal(size=(3, 2, 3)) for _ in range(3)]
        tensors += [rng.normal(size=(3, 2, 1))]
        psi = MPS(tensors).canonicalize(2)
        assert abs(psi.norm() - 1.0) < 1e-12
        for i in range(2):  # left of center: left-orthonormal
            a = psi.tensors[i]
            l, p, r = a.shape
            m = a.reshape(l * p, r)
            assert np.allclose(m.T @ m, np.eye(r), atol=1e-10)
        for i in range(3, 5):  # right of center: right-orthonormal
            a = psi.tensors[i]
            l, p, r = a.shape
            m = a.reshape(l, p * r)
            assert np.allclose(m @ m.T, np.eye(l), atol=1e-10)
