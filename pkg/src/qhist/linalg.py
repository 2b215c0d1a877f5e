"""
Dense complex linear algebra and validation predicates.

Matrices and vectors are plain ``numpy`` arrays of dtype ``complex128``.
Dimensions in this package are small (a handful of levels), so everything
is dense. Predicates take an absolute, entrywise tolerance that defaults to
:data:`DEFAULT_TOL`.
"""

from __future__ import annotations

import numpy as np
import numpy.typing as npt

ComplexMatrix = npt.NDArray[np.complex128]
ComplexVector = npt.NDArray[np.complex128]

DEFAULT_TOL = 1e-9


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


class ValidationError(ValueError):
    """An input violates a stated invariant."""


def as_matrix(m) -> ComplexMatrix:
    """Return ``m`` as a read-only 2-D complex array."""
    a = np.array(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {a.shape}")
    a.setflags(write=False)
    return a


def as_vector(v) -> ComplexVector:
    """Return ``v`` as a read-only 1-D complex array."""
    a = np.array(v, dtype=np.complex128)
    if a.ndim != 1:
        raise ShapeError(f"expected a 1-D vector, got shape {a.shape}")
    a.setflags(write=False)
    return a


def _require_square(m: ComplexMatrix) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")


def matmul(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def adjoint(m: ComplexMatrix) -> ComplexMatrix:
    """Conjugate transpose."""
    return np.conj(m).T


def trace(m: ComplexMatrix) -> complex:
    _require_square(m)
    return complex(np.trace(m))


def apply(m: ComplexMatrix, v: ComplexVector) -> ComplexVector:
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise ShapeError(f"cannot apply {m.shape} matrix to length-{v.shape} vector")
    return m @ v


def max_abs(m) -> float:
    """Max-entry norm; 0.0 for empty input."""
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def unitarity_residual(m: ComplexMatrix) -> float:
    _require_square(m)
    return max_abs(adjoint(m) @ m - np.eye(m.shape[0]))


def hermiticity_residual(m: ComplexMatrix) -> float:
    _require_square(m)
    return max_abs(m - adjoint(m))


def is_unitary(m: ComplexMatrix, tol: float = DEFAULT_TOL) -> bool:
    return unitarity_residual(m) <= tol


def is_hermitian(m: ComplexMatrix, tol: float = DEFAULT_TOL) -> bool:
    return hermiticity_residual(m) <= tol


def is_projector(m: ComplexMatrix, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``m`` is Hermitian and idempotent, both entrywise within ``tol``."""
    return is_hermitian(m, tol) and max_abs(m @ m - m) <= tol


def is_density(m: ComplexMatrix, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``m`` is Hermitian, has unit trace and no eigenvalue below ``-tol``."""
    if not is_hermitian(m, tol):
        return False
    if abs(trace(m) - 1.0) > tol:
        return False
    values, _ = hermitian_eig(m, tol)
    return bool(values[-1] >= -tol)


def hermitian_eig(
    m: ComplexMatrix, tol: float = DEFAULT_TOL
) -> tuple[npt.NDArray[np.float64], ComplexMatrix]:
    """
    Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    m : ComplexMatrix
        Square matrix, Hermitian within ``tol``.
    tol : float
        Entrywise Hermiticity tolerance.

    Returns
    -------
    eigenvalues : ndarray of float
        Real eigenvalues in descending order.
    eigenvectors : ComplexMatrix
        Orthonormal eigenvectors as columns, ``eigenvectors[:, k]`` belonging
        to ``eigenvalues[k]``.

    Raises
    ------
    ValidationError
        If ``m`` is not Hermitian within ``tol``.
    """
    _require_square(m)
    residual = hermiticity_residual(m)
    if residual > tol:
        raise ValidationError(f"matrix is not Hermitian (residual {residual:.3g})")
    # symmetrise so that LAPACK sees exactly Hermitian input
    h = 0.5 * (m + adjoint(m))
    values, vectors = np.linalg.eigh(h)
    order = np.argsort(values, kind="stable")[::-1]
    return values[order], vectors[:, order]


def outer(v: ComplexVector, w: ComplexVector | None = None) -> ComplexMatrix:
    """``|v><w|`` (``|v><v|`` when ``w`` is omitted)."""
    w = v if w is None else w
    return np.outer(v, np.conj(w))


def basis_projector(d: int, k: int) -> ComplexMatrix:
    """Rank-one projector onto the ``k``-th computational basis vector."""
    p = np.zeros((d, d), dtype=np.complex128)
    p[k, k] = 1.0
    return p


HADAMARD: ComplexMatrix = as_matrix(np.array([[1, 1], [1, -1]]) / np.sqrt(2.0))
