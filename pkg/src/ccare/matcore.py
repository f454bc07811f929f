"""Dense real matrix primitives.

Matrices are plain :class:`numpy.ndarray` objects. :func:`as_matrix` and
:func:`as_symmetric` are the validating constructors; both return read-only
float64 copies so that values can be shared freely.

Eigenvalues come from LAPACK through NumPy: ``syevd`` (tridiagonalization
followed by implicit QL/QR) for symmetric input and ``geev`` (Hessenberg
reduction followed by shifted QR) for general input.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import (AsymmetricMatrix, DimensionMismatch, EigenFailure,
                     NonFiniteEntries)

__all__ = [
    "SYM_TOL", "ORDER_TOL", "PSD_TOL", "STABLE_TOL",
    "Relation", "OrderResult",
    "as_matrix", "as_symmetric", "symmetrize",
    "sym_eigvals", "eigvals_general", "spectral_abscissa", "is_stable",
    "is_psd", "loewner_compare", "fro_norm",
]

SYM_TOL = 1e-6
ORDER_TOL = 1e-8
PSD_TOL = 1e-8
STABLE_TOL = 1e-12


class Relation(str, enum.Enum):
    GREATER_EQUAL = "GreaterEqual"
    LESS_EQUAL = "LessEqual"
    EQUAL = "Equal"
    INCOMPARABLE = "Incomparable"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class OrderResult:
    """Loewner-order classification of ``X - Y``.

    ``min_eig_diff`` and ``max_eig_diff`` are the extreme eigenvalues of the
    difference; ``tol`` is the effective (already scaled) tolerance that
    produced ``relation``.
    """

    relation: Relation
    min_eig_diff: float
    max_eig_diff: float
    tol: float = 0.0

    @property
    def is_ge(self):
        """``X ⪰ Y`` up to tolerance (GreaterEqual or Equal)."""
        return self.relation in (Relation.GREATER_EQUAL, Relation.EQUAL)

    @property
    def is_le(self):
        """``X ⪯ Y`` up to tolerance (LessEqual or Equal)."""
        return self.relation in (Relation.LESS_EQUAL, Relation.EQUAL)


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def as_matrix(M, *, square=False, name="matrix"):
    """Return a read-only 2-D float64 copy of `M`.

    Raises
    ------
    DimensionMismatch
        If `M` is not two-dimensional, is empty, or is not square when
        `square` is set.
    NonFiniteEntries
        If any entry is NaN or infinite.
    """
    try:
        a = np.array(M, dtype=float, ndmin=2)
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(f"{name} is not a rectangular numeric array: {exc}") from None
    if a.ndim != 2 or a.size == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if square and a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteEntries(f"{name} has NaN or infinite entries")
    return _frozen(a)


def symmetrize(M):
    """Return ``(M + M.T) / 2`` as a read-only array. No checks."""
    M = np.asarray(M, dtype=float)
    return _frozen(0.5 * (M + M.T))


def as_symmetric(M, *, sym_tol=SYM_TOL, name="matrix"):
    """Validate that `M` is symmetric to within `sym_tol` and symmetrize it.

    The asymmetry ``max |M[p, q] - M[q, p]|`` must not exceed
    ``sym_tol * (1 + ||M||_F)``.
    """
    a = as_matrix(M, square=True, name=name)
    skew = float(np.max(np.abs(a - a.T)))
    if skew > sym_tol * (1.0 + fro_norm(a)):
        raise AsymmetricMatrix(f"{name} is not symmetric (max asymmetry {skew:.3e})")
    return symmetrize(a)


def sym_eigvals(X):
    """Eigenvalues of the symmetric part of `X`, ascending."""
    X = np.asarray(X, dtype=float)
    try:
        return np.linalg.eigvalsh(0.5 * (X + X.T))
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from None


def eigvals_general(M):
    """All eigenvalues of a square real matrix, with multiplicity.

    Complex eigenvalues appear as conjugate pairs; neither member is dropped.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    try:
        return np.linalg.eigvals(M).astype(complex)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from None


def spectral_abscissa(M):
    """Largest real part over the eigenvalues of `M`."""
    return float(np.max(eigvals_general(M).real))


def is_stable(M, tol=STABLE_TOL):
    """True iff every eigenvalue of `M` has real part below ``-tol``."""
    return spectral_abscissa(M) < -tol


def is_psd(X, tol=PSD_TOL):
    """Positive semidefiniteness test, relative to the spectral radius of `X`.

    Returns True iff ``lambda_min(X) >= -tol * (1 + max |lambda(X)|)``.
    """
    w = sym_eigvals(X)
    return bool(w[0] >= -tol * (1.0 + float(np.max(np.abs(w)))))


def _spectral_radius_sym(X):
    w = sym_eigvals(X)
    return float(np.max(np.abs(w)))


def loewner_compare(X, Y, tol=ORDER_TOL):
    """Classify the Loewner relation between symmetric `X` and `Y`.

    The eigenvalues of ``X - Y`` are compared against the effective tolerance
    ``tol * (1 + max(||X||_2, ||Y||_2))``.

    Returns
    -------
    OrderResult
        ``Equal`` when both extreme eigenvalues of the difference are within
        tolerance of zero, ``GreaterEqual`` when the smallest is not below
        ``-tol``, ``LessEqual`` when the largest is not above ``tol``, and
        ``Incomparable`` otherwise.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape:
        raise DimensionMismatch(f"cannot compare shapes {X.shape} and {Y.shape}")
    w = sym_eigvals(X - Y)
    lo, hi = float(w[0]), float(w[-1])
    eff = tol * (1.0 + max(_spectral_radius_sym(X), _spectral_radius_sym(Y)))
    if abs(lo) <= eff and abs(hi) <= eff:
        rel = Relation.EQUAL
    elif lo >= -eff:
        rel = Relation.GREATER_EQUAL
    elif hi <= eff:
        rel = Relation.LESS_EQUAL
    else:
        rel = Relation.INCOMPARABLE
    return OrderResult(rel, lo, hi, eff)


def fro_norm(M):
    return float(np.linalg.norm(np.asarray(M, dtype=float), "fro"))
