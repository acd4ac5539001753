"""
Dense symmetric linear algebra.

Eigendecompositions use cyclic Jacobi sweeps so that identical input gives
identical output on every platform; factorizations and triangular solves go
through scipy.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import linalg as sla

from .domain.errors import (
    DimensionMismatchError,
    NoConvergenceError,
    NonFiniteError,
    NotPositiveDefiniteError,
    ValidationError,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence[Sequence[float]]]

MAX_JACOBI_SWEEPS = 100
_JACOBI_RELATIVE_OFF = 1e-14


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


class SymmetricMatrix:
    """
    Dense real symmetric n x n matrix.

    Asymmetric input is rejected unless ``symmetrize=True``, in which case
    the matrix is replaced by (S + S^T) / 2.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: ArrayLike, symmetrize: bool = False):
        array = np.array(entries, dtype=float)
        if array.ndim == 0:
            array = array.reshape(1, 1)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise DimensionMismatchError(
                f"expected a square matrix, got shape {array.shape}"
            )
        if array.shape[0] < 1:
            raise DimensionMismatchError("matrix dimension must be at least 1")
        if not np.all(np.isfinite(array)):
            raise NonFiniteError("matrix contains NaN or infinite entries")
        if symmetrize:
            array = 0.5 * (array + array.T)
        elif not np.array_equal(array, array.T):
            raise ValidationError(
                "matrix is not symmetric; pass symmetrize=True to average it"
            )
        self._entries = _frozen(array)

    @property
    def n(self) -> int:
        return self._entries.shape[0]

    @property
    def entries(self) -> np.ndarray:
        """Read-only view of the entries."""
        return self._entries

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._entries)))

    def quadratic_form(self, x: np.ndarray) -> float:
        """x^T S x."""
        x = np.asarray(x, dtype=float)
        return float(x @ self._entries @ x)

    def __array__(self, dtype=None):  # numpy interop
        return np.asarray(self._entries, dtype=dtype)

    def __repr__(self) -> str:
        return f"SymmetricMatrix(n={self.n})"


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """
    Eigenpairs of a symmetric matrix.

    Attributes:
        eigenvalues: Eigenvalues sorted in nonincreasing order
        eigenvectors: Orthonormal matrix; column i belongs to eigenvalue i
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def max_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    def reconstruct(self, eigenvalues: Optional[np.ndarray] = None) -> np.ndarray:
        """V diag(eigenvalues) V^T, defaulting to the stored eigenvalues."""
        values = self.eigenvalues if eigenvalues is None else eigenvalues
        V = self.eigenvectors
        return (V * values) @ V.T


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Lower-triangular factor L with L L^T = S."""

    L: np.ndarray

    @property
    def n(self) -> int:
        return self.L.shape[0]

    def solve(self, b: np.ndarray) -> np.ndarray:
        return sla.cho_solve((self.L, True), b, check_finite=False)


def as_symmetric(matrix: Union["SymmetricMatrix", ArrayLike]) -> SymmetricMatrix:
    """Accept either a SymmetricMatrix or array-like input."""
    if isinstance(matrix, SymmetricMatrix):
        return matrix
    return SymmetricMatrix(matrix)


def _fix_signs(V: np.ndarray) -> np.ndarray:
    # largest-magnitude component positive; argmax picks the lowest index on ties
    pivots = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[pivots, np.arange(V.shape[1])] < 0.0, -1.0, 1.0)
    return V * signs


def eigh(S: Union[SymmetricMatrix, ArrayLike]) -> EigenDecomposition:
    """
    Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Rotations are applied in row-cyclic order (p, q) with p < q. Eigenvalues
    are returned in nonincreasing order and every eigenvector has its
    largest-magnitude component positive.

    Raises:
        NonFiniteError: On NaN/Inf input
        NoConvergenceError: If the off-diagonal mass does not vanish within
            MAX_JACOBI_SWEEPS sweeps
    """
    S = as_symmetric(S)
    A = np.array(S.entries, dtype=float)
    n = S.n
    V = np.eye(n)

    scale = np.linalg.norm(A)
    threshold = _JACOBI_RELATIVE_OFF * scale
    sweeps = 0
    while True:
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= threshold:
            break
        if sweeps >= MAX_JACOBI_SWEEPS:
            raise NoConvergenceError(
                f"Jacobi eigensolver did not converge in {MAX_JACOBI_SWEEPS} sweeps"
            )
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = 0.0
                A[q, p] = 0.0

                vec_p = V[:, p].copy()
                vec_q = V[:, q].copy()
                V[:, p] = c * vec_p - s * vec_q
                V[:, q] = s * vec_p + c * vec_q

    logger.debug("Jacobi eigensolver converged after %d sweeps (n=%d)", sweeps, n)
    values = np.diag(A).copy()
    order = np.argsort(-values, kind="stable")
    return EigenDecomposition(
        eigenvalues=_frozen(values[order]),
        eigenvectors=_frozen(_fix_signs(V[:, order])),
    )


def cholesky(S: Union[SymmetricMatrix, ArrayLike]) -> CholeskyFactor:
    """
    Cholesky factorization S = L L^T.

    Raises:
        NotPositiveDefiniteError: If a nonpositive pivot is met
    """
    S = as_symmetric(S)
    try:
        L = sla.cholesky(S.entries, lower=True, check_finite=False)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite ({e}); run the covariance diagnosis"
        ) from e
    if not np.all(np.diag(L) > 0.0):
        raise NotPositiveDefiniteError("Cholesky factor has a zero pivot")
    return CholeskyFactor(L=_frozen(L))


def solve_spd(S: Union[SymmetricMatrix, ArrayLike], b: np.ndarray) -> np.ndarray:
    """
    Solve S y = b for positive definite S.

    One step of iterative refinement keeps the residual small for
    moderately ill-conditioned S.
    """
    S = as_symmetric(S)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != S.n:
        raise DimensionMismatchError(
            f"right-hand side has length {b.shape[0]}, matrix has n={S.n}"
        )
    factor = cholesky(S)
    y = factor.solve(b)
    residual = b - S.entries @ y
    return y + factor.solve(residual)


def condition_number(S: Union[SymmetricMatrix, ArrayLike]) -> float:
    """
    Spectral condition number lambda_max / lambda_min.

    Raises:
        NotPositiveDefiniteError: If the smallest eigenvalue is not positive
    """
    decomposition = eigh(S)
    smallest = decomposition.min_eigenvalue
    if smallest <= 0.0:
        raise NotPositiveDefiniteError(
            f"smallest eigenvalue {smallest:.3e} is not positive"
        )
    return decomposition.max_eigenvalue / smallest
