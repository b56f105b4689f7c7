"""Dense complex matrix helpers for small Hilbert spaces.

Everything here works on plain ``numpy`` arrays. Functions accept stacks of
matrices (shape ``(..., d, d)``) wherever the underlying numpy operation
broadcasts, which lets the integrator advance a state and its parameter
derivative in one call.
"""

from typing import NamedTuple

import numpy as np

from .errors import ConvergenceFailure, DimensionMismatch, NonHermitian

# Pauli basis with |e> = (1, 0), |g> = (0, 1), so sigma_z = |e><e| - |g><g|.
IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


class HermitianEigensystem(NamedTuple):
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # columns are orthonormal eigenvectors

    def reconstruct(self):
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(a):
    """Return ``a`` as a finite square complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2] or m.shape[-1] < 1:
        raise DimensionMismatch(f"expected square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def _check_same_dim(a, b):
    if a.shape[-1] != b.shape[-1] or a.shape[-2] != b.shape[-2]:
        raise DimensionMismatch(f"dimension mismatch: {a.shape} vs {b.shape}")


def dagger(a):
    a = np.asarray(a)
    return np.conj(np.swapaxes(a, -1, -2))


def commutator(a, b):
    a, b = np.asarray(a), np.asarray(b)
    _check_same_dim(a, b)
    return a @ b - b @ a


def anticommutator(a, b):
    a, b = np.asarray(a), np.asarray(b)
    _check_same_dim(a, b)
    return a @ b + b @ a


def trace(a):
    return np.trace(np.asarray(a), axis1=-2, axis2=-1)


def max_norm(a):
    """Largest absolute entry."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def tensor_product(a, b):
    return np.kron(np.asarray(a), np.asarray(b))


def hermitian_part(a):
    a = np.asarray(a)
    return 0.5 * (a + dagger(a))


def hermiticity_error(a):
    return max_norm(np.asarray(a) - dagger(a))


def eigh(a, herm_tol=None):
    """Eigendecomposition of a Hermitian matrix.

    The input is symmetrized before the LAPACK call so that small drift from
    the integrator does not leak into the eigenvectors. ``herm_tol`` defaults to
    ``1e-10 * dim * max|A|``; a larger anti-Hermitian part raises
    :class:`NonHermitian`.
    """
    m = as_matrix(a)
    if m.ndim != 2:
        raise DimensionMismatch("eigh expects a single matrix")
    dim = m.shape[0]
    if herm_tol is None:
        herm_tol = 1e-10 * dim * max(max_norm(m), 1.0)
    err = hermiticity_error(m)
    if err > herm_tol:
        raise NonHermitian(f"matrix is not Hermitian: max|A - A^dag| = {err:.3g}")
    try:
        w, v = np.linalg.eigh(hermitian_part(m))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return HermitianEigensystem(w, v)


def bloch_to_matrix(b):
    """Qubit state (I + b.sigma)/2."""
    bx, by, bz = b
    return 0.5 * (IDENTITY2 + bx * SIGMA_X + by * SIGMA_Y + bz * SIGMA_Z)


def matrix_to_bloch(rho):
    """Components Tr[rho sigma_k]; for a traceless matrix this is its Pauli expansion times 2."""
    return np.array([np.real(np.trace(rho @ s)) for s in PAULIS])
