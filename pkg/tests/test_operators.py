import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfiflow.errors import DimensionMismatch, NonHermitian
from qfiflow.operators import (
    IDENTITY2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    anticommutator,
    commutator,
    dagger,
    eigh,
    tensor_product,
    trace,
)

from conftest import random_hermitian, random_operator

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 8)


def matmul_2x2(a, b):
    return np.array([[sum(a[i, k] * b[k, j] for k in range(2)) for j in range(2)] for i in range(2)])


def test_commutator_examples():
    npt.assert_array_equal(commutator(SIGMA_X, SIGMA_X), np.zeros((2, 2)))
    npt.assert_allclose(commutator(SIGMA_X, SIGMA_Y), 2j * SIGMA_Z)
    expected = matmul_2x2(SIGMA_PLUS, SIGMA_MINUS) - matmul_2x2(SIGMA_MINUS, SIGMA_PLUS)
    npt.assert_allclose(expected, SIGMA_Z)
    npt.assert_allclose(commutator(SIGMA_PLUS, SIGMA_MINUS), expected)


def test_anticommutator_examples():
    npt.assert_allclose(anticommutator(SIGMA_X, SIGMA_X), 2 * IDENTITY2)
    npt.assert_allclose(anticommutator(SIGMA_PLUS @ SIGMA_MINUS, IDENTITY2 / 2), SIGMA_PLUS @ SIGMA_MINUS)
    expected = matmul_2x2(SIGMA_PLUS, SIGMA_MINUS) + matmul_2x2(SIGMA_MINUS, SIGMA_PLUS)
    npt.assert_allclose(expected, IDENTITY2)
    npt.assert_allclose(anticommutator(SIGMA_PLUS, SIGMA_MINUS), expected)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        commutator(np.eye(2), np.eye(3))
    with pytest.raises(DimensionMismatch):
        anticommutator(np.eye(3), np.eye(2))


def test_dagger_examples():
    npt.assert_array_equal(dagger(IDENTITY2), IDENTITY2)
    npt.assert_array_equal(dagger(SIGMA_MINUS), SIGMA_PLUS)
    npt.assert_array_equal(dagger(1j * SIGMA_Z), -1j * SIGMA_Z)


def test_eigh_examples():
    npt.assert_allclose(eigh(SIGMA_Z).eigenvalues, [-1, 1])
    sys = eigh(np.diag([0.3, 0.7]))
    npt.assert_allclose(sys.eigenvalues, [0.3, 0.7])
    npt.assert_allclose(np.abs(sys.eigenvectors), np.eye(2), atol=1e-15)
    # characteristic polynomial of (I + 0.5 sx)/2: x^2 - x + (1/4 - 1/16)
    a = (IDENTITY2 + 0.5 * SIGMA_X) / 2
    roots = np.sort(np.roots([1, -1, 0.25 - 1 / 16]).real)
    npt.assert_allclose(eigh(a).eigenvalues, roots, atol=1e-15)
    npt.assert_allclose(roots, [0.25, 0.75])


def test_eigh_rejects_non_hermitian():
    with pytest.raises(NonHermitian):
        eigh(SIGMA_PLUS)
    # drift below tolerance is symmetrized away
    drift = SIGMA_X + 1e-13 * SIGMA_PLUS
    npt.assert_allclose(eigh(drift).eigenvalues, [-1, 1], atol=1e-12)


def test_tensor_product_examples(rng):
    npt.assert_array_equal(tensor_product(IDENTITY2, IDENTITY2), np.eye(4))
    a, b = random_operator(rng, 2), random_operator(rng, 3)
    npt.assert_allclose(trace(tensor_product(a, b)), trace(a) * trace(b))
    zz = tensor_product(SIGMA_Z, SIGMA_Z)
    expected = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            expected[2 * i + j, 2 * i + j] = SIGMA_Z[i, i].real * SIGMA_Z[j, j].real
    npt.assert_array_equal(zz, expected)
    npt.assert_array_equal(zz, np.diag([1, -1, -1, 1]))


@settings(max_examples=60, deadline=None)
@given(seed=seeds, d=dims)
def test_eigh_reconstruction_and_orthonormality(seed, d):
    rng = np.random.default_rng(seed)
    a = random_hermitian(rng, d)
    sys = eigh(a)
    assert np.all(np.diff(sys.eigenvalues) >= 0)
    norm = np.max(np.abs(a))
    assert np.max(np.abs(sys.reconstruct() - a)) <= 1e-12 * d * norm
    v = sys.eigenvectors
    assert np.max(np.abs(v.conj().T @ v - np.eye(d))) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(seed=seeds, d=dims)
def test_algebraic_identities(seed, d):
    rng = np.random.default_rng(seed)
    a, b = random_operator(rng, d), random_operator(rng, d)
    npt.assert_allclose(commutator(a, b), -commutator(b, a), atol=1e-12)
    npt.assert_allclose(anticommutator(a, b), anticommutator(b, a), atol=1e-12)
    npt.assert_array_equal(dagger(dagger(a)), a)
    npt.assert_allclose(dagger(a @ b), dagger(b) @ dagger(a), atol=1e-12)
