import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crwsim.operators import (
    DimensionMismatchError,
    QOperator,
    QState,
    SpaceDescriptor,
    basis_state,
    destroy_op,
    embed,
    expectation,
    identity,
    ket_bra,
    partial_trace,
    tensor,
)


def qop(mat, *dims):
    return QOperator(SpaceDescriptor(tuple(dims)), np.asarray(mat, dtype=complex))


def random_qop(rng, *dims):
    d = int(np.prod(dims))
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return qop(m, *dims)


class TestTensor:
    def test_identity_case(self):
        out = tensor(qop(np.eye(2), 2), qop(np.eye(3), 3))
        assert out.space.factors == (2, 3)
        np.testing.assert_allclose(out.dense(), np.eye(6))

    def test_dimension_product(self):
        rng = np.random.default_rng(0)
        out = tensor(random_qop(rng, 3), random_qop(rng, 2))
        assert out.dim == 6

    def test_basis_action(self):
        # (sigma+ on 2 levels) x I2 maps |00> to |10>
        sigma_p = ket_bra(2, 1, 0)
        op = tensor(qop(sigma_p, 2), qop(np.eye(2), 2))
        space = op.space
        psi00 = basis_state(space, (0, 0)).data
        out = op.matrix @ psi00
        np.testing.assert_allclose(out, basis_state(space, (1, 0)).data)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_associativity_up_to_flattening(self, seed):
        rng = np.random.default_rng(seed)
        dims = rng.integers(2, 4, size=3)
        a, b, c = (random_qop(rng, int(d)) for d in dims)
        left = tensor(tensor(a, b), c)
        right = tensor(a, tensor(b, c))
        assert left.space == right.space
        np.testing.assert_allclose(left.dense(), right.dense(), atol=1e-12)


class TestEmbed:
    def test_identity_embeds_to_identity(self):
        space = SpaceDescriptor.chain(2, 1)
        out = embed(np.eye(3), 0, space)
        np.testing.assert_allclose(out.dense(), np.eye(space.dim))

    def test_basis_action_on_second_atom(self):
        # |e><1| on atom 2 of an N=2, n_max=1 chain
        space = SpaceDescriptor.chain(2, 1)
        op = embed(ket_bra(3, 2, 1), 2, space)
        src = basis_state(space, (0, 0, 1, 0))
        dst = basis_state(space, (0, 0, 2, 0))
        np.testing.assert_allclose(op.matrix @ src.data, dst.data)

    def test_trace_identity(self):
        rng = np.random.default_rng(3)
        space = SpaceDescriptor((3, 2, 2))
        local = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        out = embed(local, 1, space)
        expected = np.trace(local) * space.dim / 2
        assert abs(out.trace() - expected) < 1e-12

    def test_dimension_mismatch_rejected(self):
        space = SpaceDescriptor((3, 2))
        with pytest.raises(DimensionMismatchError):
            embed(np.eye(2), 0, space)

    def test_disjoint_embeddings_commute(self):
        rng = np.random.default_rng(7)
        space = SpaceDescriptor((2, 3, 2))
        a = embed(rng.standard_normal((2, 2)) + 0j, 0, space)
        b = embed(rng.standard_normal((2, 2)) + 0j, 2, space)
        np.testing.assert_allclose((a @ b).dense(), (b @ a).dense(), atol=1e-12)


class TestPartialTrace:
    def test_product_state(self):
        rng = np.random.default_rng(11)
        def random_density(d):
            m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            rho = m @ m.conj().T
            return rho / np.trace(rho)
        rho_a, rho_b = random_density(2), random_density(3)
        space = SpaceDescriptor((2, 3))
        joint = QState(space, "density", np.kron(rho_a, rho_b))
        out = partial_trace(joint, [0])
        np.testing.assert_allclose(out.data, rho_a, atol=1e-12)

    def test_bell_state_reduces_to_mixed(self):
        space = SpaceDescriptor((2, 2))
        bell = np.zeros(4, dtype=complex)
        bell[0] = bell[3] = 1 / np.sqrt(2)
        out = partial_trace(QState(space, "pure", bell), [1])
        np.testing.assert_allclose(out.data, np.eye(2) / 2, atol=1e-12)

    def test_trace_preserved(self):
        rng = np.random.default_rng(13)
        space = SpaceDescriptor((2, 3, 2))
        m = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        rho = m @ m.conj().T
        rho /= np.trace(rho)
        out = partial_trace(QState(space, "density", rho), [0, 2])
        assert abs(np.trace(out.data) - 1.0) < 1e-12

    def test_keep_all_is_identity(self):
        rng = np.random.default_rng(17)
        space = SpaceDescriptor((2, 2))
        m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        rho = m @ m.conj().T
        rho /= np.trace(rho)
        out = partial_trace(QState(space, "density", rho), [0, 1])
        np.testing.assert_allclose(out.data, rho, atol=1e-12)

    def test_empty_keep_rejected(self):
        space = SpaceDescriptor((2, 2))
        with pytest.raises(ValueError):
            partial_trace(basis_state(space, (0, 0)), [])

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_linearity(self, seed):
        rng = np.random.default_rng(seed)
        space = SpaceDescriptor((2, 3))
        def rnd():
            return rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        a, b = rnd(), rnd()
        lam = complex(rng.standard_normal(), rng.standard_normal())
        keep = [int(rng.integers(0, 2))]
        lhs = partial_trace(QState(space, "density", a + lam * b), keep).data
        rhs = (partial_trace(QState(space, "density", a), keep).data
               + lam * partial_trace(QState(space, "density", b), keep).data)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)


class TestExpectation:
    def test_identity_on_normalized_state(self):
        space = SpaceDescriptor((2, 3))
        rng = np.random.default_rng(19)
        psi = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        psi /= np.linalg.norm(psi)
        val = expectation(identity(space), QState(space, "pure", psi))
        assert abs(val - 1.0) < 1e-12

    def test_orthogonal_projector(self):
        space = SpaceDescriptor((2,))
        proj = qop(ket_bra(2, 1, 1), 2)
        psi = basis_state(space, (0,))
        assert abs(expectation(proj, psi)) < 1e-15

    def test_hermitian_gives_real(self):
        rng = np.random.default_rng(23)
        m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        h = qop(m + m.conj().T, 2, 3)
        psi = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        psi /= np.linalg.norm(psi)
        val = expectation(h, QState(h.space, "pure", psi))
        assert abs(val.imag) <= 1e-12

    def test_space_mismatch_rejected(self):
        with pytest.raises(DimensionMismatchError):
            expectation(identity(SpaceDescriptor((2,))),
                        basis_state(SpaceDescriptor((3,)), (0,)))


class TestStates:
    def test_pure_norm_validation(self):
        space = SpaceDescriptor((2,))
        bad = QState(space, "pure", np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            bad.validate()

    def test_density_positivity_validation(self):
        space = SpaceDescriptor((2,))
        bad = QState(space, "density", np.diag([1.5, -0.5]).astype(complex))
        with pytest.raises(ValueError):
            bad.validate()

    def test_destroy_op_truncation(self):
        a = destroy_op(2)
        np.testing.assert_allclose(a, [[0, 1], [0, 0]])

    def test_atomic_factor_is_three_dimensional(self):
        space = SpaceDescriptor.chain(3, 1)
        assert space.factors == (3, 2) * 3
        assert space.dim == 216

    def test_storage_policy_switches_to_sparse(self):
        import scipy.sparse as sp

        small = embed(np.eye(3), 0, SpaceDescriptor.chain(3, 1))   # dim 216
        large = embed(np.eye(3), 0, SpaceDescriptor.chain(4, 1))   # dim 1296
        assert isinstance(small.matrix, np.ndarray)
        assert sp.issparse(large.matrix)
