import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tgextrap.exceptions import NonFiniteError, SingularOperatorError, TensorShapeError
from tgextrap.tensor_core import (
    einstein_product,
    flatten,
    fro_norm,
    identity_op,
    inner,
    make_tensor,
    mode_n_matrix_product,
    mode_n_vector_product,
    parse_tensor,
    phi_index,
    read_tensor,
    solve_flattened_oracle,
    spectral_radius,
    square_modes,
    trace,
    transpose,
    unflatten,
    write_tensor,
    format_tensor,
)

A22 = np.array([[1.0, 2.0], [3.0, 4.0]])
shapes = st.lists(st.integers(1, 3), min_size=1, max_size=3).map(tuple)


def rand(shape, seed=0):
    return np.random.default_rng(seed).standard_normal(shape)


class TestMakeTensor:
    def test_row_major(self):
        t = make_tensor((2, 2), [1, 2, 3, 4])
        assert t[0, 1] == 2.0  # (1,2) entry in 1-based terms
        assert not t.flags.writeable

    def test_zero(self):
        assert np.array_equal(make_tensor((2,), [0, 0]), np.zeros(2))

    def test_length_mismatch(self):
        with pytest.raises(TensorShapeError):
            make_tensor((2, 2), [1, 2, 3])

    def test_non_finite(self):
        with pytest.raises(NonFiniteError):
            make_tensor((2,), [1.0, np.nan])


class TestIdentity:
    def test_matrix(self):
        assert np.array_equal(identity_op((2,)), np.eye(2))

    def test_kronecker_entries(self):
        I = identity_op((2, 2))
        assert I[0, 1, 0, 1] == 1.0
        assert I[0, 1, 1, 0] == 0.0

    @given(shapes)
    def test_identity_law_bit_exact(self, s):
        X = rand(s)
        assert np.array_equal(einstein_product(identity_op(s), X, len(s)), X)


class TestEinsteinProduct:
    def test_hand_matvec(self):
        np.testing.assert_array_equal(einstein_product(A22, [1.0, 1.0], 1), [3.0, 7.0])

    def test_mode_mismatch(self):
        with pytest.raises(TensorShapeError):
            einstein_product(rand((2, 3)), rand((2,)), 1)

    @settings(max_examples=30)
    @given(shapes, shapes, shapes, st.integers(0, 10_000))
    def test_associative(self, s1, s2, s3, seed):
        A, B, C = rand(s1 + s2, seed), rand(s2 + s3, seed + 1), rand(s3 + (2,), seed + 2)
        lhs = einstein_product(einstein_product(A, B, len(s2)), C, len(s3))
        rhs = einstein_product(A, einstein_product(B, C, len(s3)), len(s2))
        assert fro_norm(lhs - rhs) <= 1e-12 * max(fro_norm(lhs), 1.0)

    @settings(max_examples=30)
    @given(shapes, shapes, shapes, st.integers(0, 10_000))
    def test_flatten_homomorphism(self, s1, s2, s3, seed):
        A, B = rand(s1 + s2, seed), rand(s2 + s3, seed + 1)
        P = flatten(einstein_product(A, B, len(s2)), len(s1))
        Q = flatten(A, len(s1)) @ flatten(B, len(s2))
        assert np.max(np.abs(P - Q)) <= 1e-12 * max(np.max(np.abs(Q)), 1.0)


class TestTranspose:
    @given(shapes, shapes)
    def test_involution(self, s1, s2):
        A = rand(s1 + s2)
        assert np.array_equal(transpose(transpose(A, len(s1)), len(s2)), A)

    def test_matrix(self):
        A = np.arange(6.0).reshape(2, 3)
        np.testing.assert_array_equal(transpose(A, 1), A.T)

    @given(shapes, shapes)
    def test_flatten_commutes(self, s1, s2):
        A = rand(s1 + s2)
        np.testing.assert_array_equal(flatten(transpose(A, len(s1)), len(s2)), flatten(A, len(s1)).T)

    def test_bad_split(self):
        with pytest.raises(TensorShapeError):
            transpose(A22, 0)


class TestTraceInnerNorm:
    def test_trace_values(self):
        assert trace(identity_op((2, 3))) == 6.0
        assert trace(A22) == 5.0

    def test_trace_via_flatten(self):
        A = rand((2, 3, 2, 3))
        assert math.isclose(trace(A), np.trace(flatten(A, 2)), rel_tol=1e-12)

    def test_trace_non_square(self):
        with pytest.raises(TensorShapeError):
            trace(rand((2, 3)))

    def test_inner(self):
        assert inner(A22, A22) == 30.0
        assert inner(A22, np.zeros((2, 2))) == 0.0
        B = rand((2, 2))
        assert inner(A22, B) == inner(B, A22)
        with pytest.raises(TensorShapeError):
            inner(A22, np.zeros(4))

    def test_inner_is_trace_of_transpose_product(self):
        A, B = rand((2, 3, 2, 3), 1), rand((2, 3, 2, 3), 2)
        lhs = inner(A, B)
        rhs = trace(einstein_product(transpose(A, 2), B, 2))
        assert math.isclose(lhs, rhs, rel_tol=1e-12)

    def test_norm(self):
        assert math.isclose(fro_norm(A22), math.sqrt(30.0))
        A, B = rand((3, 2), 3), rand((3, 2), 4)
        assert math.isclose(fro_norm(-2.5 * A), 2.5 * fro_norm(A))
        assert fro_norm(A + B) <= fro_norm(A) + fro_norm(B)
        assert fro_norm(np.zeros(3)) == 0.0


class TestModeProducts:
    def test_identity_matrix(self):
        A = rand((2, 3, 4))
        np.testing.assert_array_equal(mode_n_matrix_product(A, np.eye(3), 1), A)

    def test_vector_reduces_to_matvec(self):
        v, M = rand(4), rand((3, 4))
        np.testing.assert_allclose(mode_n_matrix_product(v, M, 0), M @ v, rtol=1e-14)

    def test_direct_summation_and_commutation(self):
        A, M, N = rand((2, 3, 4), 1), rand((5, 2), 2), rand((6, 4), 3)
        direct = np.einsum("ijk,ai,bk->ajb", A, M, N)
        one = mode_n_matrix_product(mode_n_matrix_product(A, M, 0), N, 2)
        two = mode_n_matrix_product(mode_n_matrix_product(A, N, 2), M, 0)
        np.testing.assert_allclose(one, direct, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(two, one, rtol=1e-12, atol=1e-12)

    def test_mismatch(self):
        with pytest.raises(TensorShapeError):
            mode_n_matrix_product(rand((2, 3)), rand((2, 2)), 1)
        with pytest.raises(TensorShapeError):
            mode_n_vector_product(rand((2, 3)), rand(2), 1)

    def test_vector_slices(self):
        A = rand((2, 3, 4))
        np.testing.assert_array_equal(mode_n_vector_product(A, np.eye(3)[1], 1), A[:, 1, :])
        np.testing.assert_array_equal(mode_n_vector_product(A, np.zeros(3), 1), np.zeros((2, 4)))

    def test_row_sums(self):
        np.testing.assert_array_equal(mode_n_vector_product(A22, [1.0, 1.0], 1), [3.0, 7.0])


class TestFlatten:
    def test_matrix_is_itself(self):
        np.testing.assert_array_equal(flatten(A22, 1), A22)

    def test_hand_index(self):
        # (2,1,1,2) in a 2x2x2x2 tensor lands at row 3, column 2 (1-based)
        A = np.zeros((2, 2, 2, 2))
        A[1, 0, 0, 1] = 1.0
        M = flatten(A, 2)
        assert M[2, 1] == 1.0 and M.sum() == 1.0
        assert phi_index((2, 1), (2, 2)) == 3
        assert phi_index((1, 2), (2, 2)) == 2

    def test_phi_matches_flatten(self):
        dims = (3, 2, 4)
        A = np.arange(24.0).reshape(dims)
        col = flatten(A, 3).ravel()
        for idx in np.ndindex(*dims):
            one_based = tuple(i + 1 for i in idx)
            assert col[phi_index(one_based, dims) - 1] == A[idx]

    @given(shapes, shapes)
    def test_round_trip_bit_exact(self, s1, s2):
        A = rand(s1 + s2)
        assert np.array_equal(unflatten(flatten(A, len(s1)), s1, s2), A)

    def test_scalar_and_identity(self):
        assert unflatten(np.array([[3.0]]), (1,), (1,)).shape == (1, 1)
        I = identity_op((2, 3))
        assert np.array_equal(unflatten(flatten(I, 2), (2, 3), (2, 3)), I)

    def test_errors(self):
        with pytest.raises(TensorShapeError):
            flatten(A22, 3)
        with pytest.raises(TensorShapeError):
            unflatten(np.zeros((2, 3)), (2,), (2,))


class TestSpectralRadius:
    def test_scaled_identity(self):
        assert math.isclose(spectral_radius(0.5 * identity_op((2, 2))).value, 0.5, rel_tol=1e-12)

    def test_diagonal(self):
        M = unflatten(np.diag([0.9, 0.1]), (2,), (2,))
        assert math.isclose(spectral_radius(M).value, 0.9, rel_tol=1e-8)

    def test_zero(self):
        r = spectral_radius(np.zeros((2, 2, 2, 2)))
        assert r.value == 0.0 and r.converged

    def test_non_square(self):
        with pytest.raises(TensorShapeError):
            spectral_radius(rand((2, 3)))

    @pytest.mark.parametrize("seed", range(8))
    def test_against_characteristic_roots(self, seed):
        n = 2 + seed % 5  # I <= 6
        mat = np.random.default_rng(seed).standard_normal((n, n))
        oracle = float(np.max(np.abs(np.roots(np.poly(mat)))))
        est = spectral_radius(unflatten(mat, (n,), (n,)), tol=1e-12)
        assert est.converged
        assert abs(est.value - oracle) <= 1e-8 * oracle

    def test_plus_minus_pair(self):
        M = unflatten(np.diag([0.8, -0.8, 0.3]), (3,), (3,))
        assert math.isclose(spectral_radius(M).value, 0.8, rel_tol=1e-8)

    def test_non_convergence_flag(self):
        rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.99]])
        r = spectral_radius(unflatten(rot * 1.0001, (3,), (3,)), tol=1e-16, max_iters=3)
        assert r.iterations <= 3


class TestOracleSolve:
    def test_identity(self):
        B = rand((2, 3))
        np.testing.assert_allclose(solve_flattened_oracle(identity_op((2, 3)), B), B, rtol=1e-15)

    def test_scaled(self):
        B = rand((2, 3))
        np.testing.assert_allclose(solve_flattened_oracle(2 * identity_op((2, 3)), B), B / 2, rtol=1e-15)

    def test_residual(self):
        rng = np.random.default_rng(5)
        M = unflatten(np.eye(12) * 3 + rng.standard_normal((12, 12)), (3, 4), (3, 4))
        B = rng.standard_normal((3, 4))
        X = solve_flattened_oracle(M, B)
        assert fro_norm(einstein_product(M, X, 2) - B) <= 1e-10 * fro_norm(B)

    def test_singular(self):
        with pytest.raises(SingularOperatorError):
            solve_flattened_oracle(np.zeros((2, 2, 2, 2)), np.ones((2, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(TensorShapeError):
            solve_flattened_oracle(identity_op((2,)), np.ones(3))


class TestTextFormat:
    def test_layout(self):
        text = format_tensor(make_tensor((2, 2), [1, 2, 3, 4]))
        lines = text.splitlines()
        assert lines[0] == "2" and lines[1] == "2 2"
        assert lines[2].split() == ["1", "2", "3", "4"]

    @given(shapes, st.integers(0, 1000))
    def test_round_trip_exact(self, s, seed):
        A = rand(s, seed)
        assert np.array_equal(parse_tensor(format_tensor(A)), A)

    def test_file_round_trip(self, tmp_path):
        A = rand((2, 3, 4))
        write_tensor(tmp_path / "a.txt", A)
        assert np.array_equal(read_tensor(tmp_path / "a.txt"), A)

    def test_bad_count(self):
        with pytest.raises(TensorShapeError):
            parse_tensor("2\n2 2\n1 2 3\n")


def test_square_modes():
    assert square_modes(rand((2, 3, 2, 3))) == (2, 3)
    with pytest.raises(TensorShapeError):
        square_modes(rand((2, 3, 3, 2)))
