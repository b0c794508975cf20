import numpy as np
import pytest

from mfris_ee.domain.exceptions import DimensionMismatchError, NonHermitianError
from mfris_ee.infrastructure.linalg.complex_linalg import (
    complex_to_real, ensure_hermitian, herm, is_psd, kron, max_eigpair, min_eigenvalue, outer, unvec, vec,
)
from tests.helpers import random_complex, random_hermitian


def test_kron_of_identities_is_identity():
    assert np.array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))


def test_kron_with_scalar_block():
    out = kron(np.array([[0, 1], [1, 0]]), np.array([[2]]))
    assert np.array_equal(out, np.array([[0, 2], [2, 0]]))


def test_vec_identity_matches_kronecker_form(rng):
    A = random_complex(rng, 2, 3)
    X = random_complex(rng, 3, 2)
    B = random_complex(rng, 2, 2)
    lhs = vec(A @ X @ B)
    rhs = kron(B.T, A) @ vec(X)
    assert np.allclose(lhs, rhs, atol=1e-11)


def test_kron_mixed_product(rng):
    A, B = random_complex(rng, 2, 3), random_complex(rng, 3, 2)
    C, D = random_complex(rng, 3, 2), random_complex(rng, 2, 4)
    assert np.allclose(kron(A, B) @ kron(C, D), kron(A @ C, B @ D), atol=1e-11)


def test_vec_stacks_columns():
    assert np.array_equal(vec(np.eye(2)), np.array([1, 0, 0, 1]))
    assert np.array_equal(vec(np.array([[1, 2, 3], [4, 5, 6]])), np.array([1, 4, 2, 5, 3, 6]))


def test_vec_of_row_keeps_entries():
    row = np.array([[1 + 1j, 2, 3]])
    assert np.array_equal(vec(row), row.ravel())


def test_unvec_inverts_vec(rng):
    A = random_complex(rng, 3, 5)
    assert np.array_equal(unvec(vec(A), 3, 5), A)


def test_unvec_rejects_wrong_size():
    with pytest.raises(DimensionMismatchError):
        unvec(np.zeros(5), 2, 3)


def test_is_psd_basic_cases(rng):
    assert is_psd(np.eye(4), tol=1e-9)
    assert not is_psd(-np.eye(2))
    X = random_complex(rng, 5, 3)
    assert is_psd(herm(X) @ X)


def test_non_hermitian_input_is_rejected():
    with pytest.raises(NonHermitianError):
        is_psd(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(NonHermitianError):
        max_eigpair(np.array([[0, 1j], [1j, 0]]))


def test_round_off_drift_is_symmetrized():
    a = np.array([[1.0, 1e-14], [0.0, 1.0]])
    h = ensure_hermitian(a)
    assert np.array_equal(h, herm(h))


def test_ensure_hermitian_needs_square_input():
    with pytest.raises(DimensionMismatchError):
        ensure_hermitian(np.zeros((2, 3)))


def test_max_eigpair_of_diagonal():
    value, vector = max_eigpair(np.diag([1.0, 2.0, 3.0]))
    assert value == pytest.approx(3.0)
    assert np.allclose(np.abs(vector), [0, 0, 1])


def test_max_eigpair_of_rank_one(rng):
    x = random_complex(rng, 4)
    value, vector = max_eigpair(outer(x, x))
    assert value == pytest.approx(np.linalg.norm(x) ** 2)
    # eigenvector is x / |x| up to a phase
    assert abs(np.vdot(vector, x / np.linalg.norm(x))) == pytest.approx(1.0)


def test_max_eigpair_residual_and_oracle(rng):
    A = random_hermitian(rng, 6)
    value, vector = max_eigpair(A)
    assert np.linalg.norm(vector) == pytest.approx(1.0)
    assert np.linalg.norm(A @ vector - value * vector) <= 1e-8 * np.linalg.norm(A, 2)
    assert value == pytest.approx(np.max(np.linalg.eigvalsh(A)), abs=1e-9)
    assert min_eigenvalue(A) == pytest.approx(np.min(np.linalg.eigvalsh(A)), abs=1e-9)


def test_complex_to_real_of_real_matrix_is_block_diagonal():
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    out = complex_to_real(A)
    assert np.array_equal(out, np.block([[A, np.zeros((2, 2))], [np.zeros((2, 2)), A]]))


def test_complex_to_real_doubles_the_spectrum():
    h = np.array([[0, 1j], [-1j, 0]])
    values = np.sort(np.linalg.eigvalsh(complex_to_real(h)))
    assert np.allclose(values, [-1, -1, 1, 1])


def test_complex_to_real_preserves_psd_status(rng):
    for _ in range(100):
        h = random_hermitian(rng, 3)
        assert is_psd(h) == is_psd(complex_to_real(h))
