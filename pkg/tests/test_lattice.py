import numpy as np
import pytest

from collisim import (
    BoseHubbardParams,
    ResourceError,
    ValidationError,
    build_bose_hubbard_mpo,
    build_dense_hamiltonian,
    ladder_operators,
    mpo_expectation,
    mpo_to_dense,
    probe_operators,
    product_state,
)


class TestLadderOperators:
    def test_two_levels(self):
        b, bdag, n = ladder_operators(2)
        np.testing.assert_allclose(b, [[0, 1], [0, 0]])
        np.testing.assert_allclose(n, np.diag([0.0, 1.0]))

    def test_three_levels(self):
        b, _, _ = ladder_operators(3)
        expected = np.zeros((3, 3))
        expected[0, 1] = 1.0
        expected[1, 2] = np.sqrt(2)
        np.testing.assert_allclose(b, expected)

    def test_truncated_commutator(self):
        d = 4
        b, bdag, _ = ladder_operators(d)
        comm = b @ bdag - bdag @ b
        expected = np.eye(d)
        expected[d - 1, d - 1] = 1 - d
        np.testing.assert_allclose(comm, expected, atol=1e-14)

    def test_number_is_diagonal(self):
        _, _, n = ladder_operators(5)
        np.testing.assert_allclose(n, np.diag(np.arange(5.0)), atol=1e-14)


class TestBoseHubbardHamiltonian:
    def test_chemical_potential_only(self):
        p = BoseHubbardParams(n_sites=2, d=2, h=0.0, u=0.0, mu=1.0)
        dense = mpo_to_dense(build_bose_hubbard_mpo(p))
        np.testing.assert_allclose(dense, np.diag([0.0, 1.0, 1.0, 2.0]), atol=1e-14)

    def test_single_hopping_bond(self):
        p = BoseHubbardParams(n_sites=2, d=2, h=1.0, u=0.0, mu=0.0)
        dense = mpo_to_dense(build_bose_hubbard_mpo(p))
        expected = np.zeros((4, 4))
        expected[1, 2] = expected[2, 1] = -1.0  # |01> <-> |10>
        np.testing.assert_allclose(dense, expected, atol=1e-14)

    def test_mpo_matches_dense_assembly(self):
        p = BoseHubbardParams(n_sites=4, d=3, h=0.1, u=1.0, mu=-0.5)
        np.testing.assert_allclose(
            mpo_to_dense(build_bose_hubbard_mpo(p)),
            build_dense_hamiltonian(p),
            atol=1e-12,
        )

    def test_bond_dimension_four(self):
        p = BoseHubbardParams(n_sites=5, d=2, h=0.3, u=0.7, mu=0.2)
        mpo = build_bose_hubbard_mpo(p)
        assert [t.shape[3] for t in mpo.tensors] == [4, 4, 4, 4, 1]

    @pytest.mark.parametrize("seed", range(4))
    def test_hermitian_for_random_params(self, seed):
        rng = np.random.default_rng(seed)
        p = BoseHubbardParams(
            n_sites=3, d=3,
            h=float(rng.uniform(-1, 1)),
            u=float(rng.uniform(-1, 1)),
            mu=float(rng.uniform(-1, 1)),
        )
        dense = mpo_to_dense(build_bose_hubbard_mpo(p))
        np.testing.assert_allclose(dense, dense.conj().T, atol=1e-12)

    @pytest.mark.parametrize(
        "h,u,mu", [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)]
    )
    def test_term_isolation(self, h, u, mu):
        p = BoseHubbardParams(n_sites=3, d=3, h=h, u=u, mu=mu)
        b, bdag, n = ladder_operators(3)
        dims = [3, 3, 3]

        def embed(op, site):
            out = np.ones((1, 1), dtype=complex)
            for i, d in enumerate(dims):
                out = np.kron(out, op if i == site else np.eye(d))
            return out

        def embed2(op_a, op_b, site):
            out = np.ones((1, 1), dtype=complex)
            for i, d in enumerate(dims):
                if i == site:
                    out = np.kron(out, op_a)
                elif i == site + 1:
                    out = np.kron(out, op_b)
                else:
                    out = np.kron(out, np.eye(d))
            return out

        expected = np.zeros((27, 27), dtype=complex)
        for i in range(3):
            expected += mu * embed(n, i) + 0.5 * u * embed(bdag @ bdag @ b @ b, i)
        for i in range(2):
            expected += -h * (embed2(b, bdag, i) + embed2(bdag, b, i))
        np.testing.assert_allclose(
            mpo_to_dense(build_bose_hubbard_mpo(p)), expected, atol=1e-13
        )

    def test_eigenvectors_match_mpo_expectation(self):
        rng = np.random.default_rng(101)
        p = BoseHubbardParams(
            n_sites=3, d=3,
            h=float(rng.uniform(0.1, 1.0)),
            u=float(rng.uniform(0.1, 1.0)),
            mu=float(rng.uniform(-1.0, 0.0)),
        )
        dense = build_dense_hamiltonian(p)
        np.testing.assert_allclose(dense, dense.conj().T, atol=1e-13)
        evals, _ = np.linalg.eigh(dense)
        mpo = build_bose_hubbard_mpo(p)
        # product basis states give diagonal elements of H
        for occ in [(0, 0, 0), (1, 1, 1), (2, 0, 1)]:
            state = product_state([3, 3, 3], occ)
            idx = occ[0] * 9 + occ[1] * 3 + occ[2]
            assert mpo_expectation(state, mpo).real == pytest.approx(
                dense[idx, idx].real, abs=1e-11
            )
        assert evals[0] <= dense.diagonal().real.min() + 1e-12

    def test_mpo_expectation_matches_quadratic_form(self):
        p = BoseHubbardParams(n_sites=5, d=2, h=0.4, u=0.9, mu=-0.3)
        mpo = build_bose_hubbard_mpo(p)
        dense = build_dense_hamiltonian(p)
        occ = (1, 0, 1, 1, 0)
        state = product_state([2] * 5, occ)
        idx = int("".join(map(str, occ)), 2)
        assert mpo_expectation(state, mpo).real == pytest.approx(
            dense[idx, idx].real, abs=1e-11
        )

    def test_dense_cap_enforced(self):
        p = BoseHubbardParams(n_sites=8, d=3, h=0.1, u=1.0, mu=0.0)
        with pytest.raises(ResourceError):
            build_dense_hamiltonian(p)

    def test_param_validation(self):
        with pytest.raises(ValidationError):
            BoseHubbardParams(n_sites=1, d=2, h=0.0, u=0.0, mu=0.0)
        with pytest.raises(ValidationError):
            BoseHubbardParams(n_sites=2, d=1, h=0.0, u=0.0, mu=0.0)


class TestProbeOperators:
    def test_qubit_jump(self):
        jump, h_s = probe_operators("qubit", 1.0)
        expected = np.zeros((2, 2))
        expected[0, 1] = 1.0
        np.testing.assert_allclose(jump, expected)
        np.testing.assert_allclose(h_s, np.zeros((2, 2)))

    def test_boson_jump_scaling(self):
        jump, _ = probe_operators("boson", 4.0, d_p=3)
        assert jump[0, 1] == pytest.approx(2.0)
        assert jump[1, 2] == pytest.approx(2.0 * np.sqrt(2))

    def test_zero_gamma(self):
        jump, _ = probe_operators("qubit", 0.0)
        np.testing.assert_allclose(jump, np.zeros((2, 2)))

    def test_hs_override(self):
        h_s = np.diag([0.0, 0.5])
        _, out = probe_operators("qubit", 1.0, h_s=h_s)
        np.testing.assert_allclose(out, h_s)

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            probe_operators("fermion", 1.0)
