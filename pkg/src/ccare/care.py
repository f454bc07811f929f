"""Single continuous algebraic Riccati equation (CARE) machinery.

The equation is ``A.T X + X A - X S X + Q = 0`` with ``S, Q`` symmetric
positive semidefinite. :func:`solve_care` returns the stabilizing solution
from the stable invariant subspace of the Hamiltonian matrix.
:func:`newton_care_oracle` reaches the same solution by a Newton iteration
built on :func:`solve_lyapunov` and is kept as an independent cross-check.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import matcore
from .errors import (DimensionMismatch, NoConvergence, NotDetectable,
                     NotPositiveSemidefinite, NotStabilizable, SingularSystem,
                     SubspaceFailure, UnstableCoefficient)

__all__ = [
    "PBH_TOL", "PBH_AXIS_TOL",
    "CareInstance", "CareSolution",
    "pbh_stabilizable", "pbh_detectable", "solve_lyapunov", "solve_care",
    "newton_care_oracle", "care_residual", "care_res_tol",
]

PBH_TOL = 1e-10
# Eigenvalues with real part above -PBH_AXIS_TOL are tested by PBH.
PBH_AXIS_TOL = 1e-10

_LYAP_COND_LIMIT = 1e14
_NEWTON_MAX_SWEEPS = 200
_NEWTON_STEP_TOL = 1e-12


@dataclass(frozen=True)
class CareInstance:
    """Data ``(A, S, Q)`` of one CARE.

    Construction copies and validates the inputs. `S` and `Q` must be
    symmetric and positive semidefinite under :func:`matcore.is_psd`.
    """

    A: np.ndarray
    S: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        A = matcore.as_matrix(self.A, square=True, name="A")
        S = matcore.as_symmetric(self.S, name="S")
        Q = matcore.as_symmetric(self.Q, name="Q")
        if not (A.shape == S.shape == Q.shape):
            raise DimensionMismatch(
                f"A, S, Q shapes differ: {A.shape}, {S.shape}, {Q.shape}")
        if not matcore.is_psd(S):
            raise NotPositiveSemidefinite("S is not positive semidefinite")
        if not matcore.is_psd(Q):
            raise NotPositiveSemidefinite("Q is not positive semidefinite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "Q", Q)

    @property
    def n(self):
        return self.A.shape[0]


@dataclass(frozen=True)
class CareSolution:
    X: np.ndarray
    closed_loop_abscissa: float
    residual_fro: float


def _numerical_rank(M, tol):
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0] * max(M.shape)))


def pbh_stabilizable(A, S, tol=PBH_TOL):
    """PBH test for stabilizability of ``(A, S)``.

    For each eigenvalue ``lam`` of `A` with ``Re lam > -PBH_AXIS_TOL`` the
    block ``[A - lam I, S]`` must have full row rank. Numerical rank counts
    singular values above ``tol * sigma_max * 2n``.
    """
    A = np.asarray(A, dtype=float)
    S = np.asarray(S, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or S.shape != (n, n):
        raise DimensionMismatch(f"incompatible shapes {A.shape} and {S.shape}")
    eye = np.eye(n)
    for lam in matcore.eigvals_general(A):
        if lam.real <= -PBH_AXIS_TOL:
            continue
        block = np.hstack([A - lam * eye, S.astype(complex)])
        if _numerical_rank(block, tol) < n:
            return False
    return True


def pbh_detectable(A, Q, tol=PBH_TOL):
    """PBH test for detectability of ``(A, Q)``.

    Detectability of ``(A, Q)`` is defined as stabilizability of
    ``(A.T, Q.T)``, and this is computed literally that way. The rank
    condition is therefore on the stacked block ``[A - lam I; Q]``.
    """
    return pbh_stabilizable(np.asarray(A, dtype=float).T,
                            np.asarray(Q, dtype=float).T, tol)


def solve_lyapunov(A, C):
    """Solve ``A.T X + X A + C = 0`` for symmetric `X`.

    Uses the Kronecker form ``(I kron A.T + A.T kron I) vec(X) = -vec(C)``
    with column-major ``vec``, solved densely.

    Raises
    ------
    UnstableCoefficient
        If `A` has an eigenvalue with nonnegative real part.
    SingularSystem
        If the vectorized system is numerically singular.
    """
    A = matcore.as_matrix(A, square=True, name="A")
    C = matcore.as_symmetric(C, name="C")
    n = A.shape[0]
    if C.shape != (n, n):
        raise DimensionMismatch(f"A is {A.shape} but C is {C.shape}")
    if not matcore.spectral_abscissa(A) < 0.0:
        raise UnstableCoefficient("Lyapunov coefficient is not Hurwitz")
    eye = np.eye(n)
    K = np.kron(eye, A.T) + np.kron(A.T, eye)
    if np.linalg.cond(K) > _LYAP_COND_LIMIT:
        raise SingularSystem("vectorized Lyapunov system is numerically singular")
    try:
        x = np.linalg.solve(K, -C.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    return matcore.symmetrize(x.reshape((n, n), order="F"))


def _riccati_lhs(A, S, X):
    return A.T @ X + X @ A - X @ S @ X


def care_residual(inst, X):
    """Symmetrized left-hand side ``A.T X + X A - X S X + Q`` at `X`."""
    X = np.asarray(X, dtype=float)
    if X.shape != inst.A.shape:
        raise DimensionMismatch(f"X is {X.shape}, expected {inst.A.shape}")
    return matcore.symmetrize(_riccati_lhs(inst.A, inst.S, X) + inst.Q)


def care_res_tol(inst, X):
    """Acceptance bound on ``||care_residual||_F`` for a computed solution."""
    return 1e-9 * (1.0 + matcore.fro_norm(inst.Q)
                   + matcore.fro_norm(X) ** 2 * matcore.fro_norm(inst.S))


def hamiltonian(inst):
    """The ``2n x 2n`` matrix ``[[A, -S], [-Q, -A.T]]``."""
    return np.block([[inst.A, -inst.S], [-inst.Q, -inst.A.T]])


def solve_care(inst, *, check=True):
    """Stabilizing positive semidefinite solution of a CARE.

    An ordered real Schur form of the Hamiltonian puts the ``n`` stable
    eigenvalues first; with ``[U1; U2]`` the leading ``n`` Schur vectors,
    ``X = U2 U1^{-1}``.

    Parameters
    ----------
    inst : CareInstance
    check : bool, optional
        Run the PBH preconditions first. Callers that have already verified
        them for an equivalent pair may skip this.

    Returns
    -------
    CareSolution

    Raises
    ------
    NotStabilizable, NotDetectable
        If the corresponding PBH test fails.
    SubspaceFailure
        If the stable subspace does not have dimension ``n``, its leading
        block is singular, or the recovered `X` misses the residual bound or
        is not stabilizing.
    """
    if check:
        if not pbh_stabilizable(inst.A, inst.S):
            raise NotStabilizable("(A, S) is not stabilizable")
        if not pbh_detectable(inst.A, inst.Q):
            raise NotDetectable("(A, Q) is not detectable")
    n = inst.n
    try:
        _, U, sdim = scipy.linalg.schur(hamiltonian(inst), output="real", sort="lhp")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SubspaceFailure(f"Schur decomposition failed: {exc}") from None
    if sdim != n:
        raise SubspaceFailure(
            f"Hamiltonian has {sdim} stable eigenvalues, expected {n}")
    U1, U2 = U[:n, :n], U[n:, :n]
    if np.linalg.cond(U1) > 1.0 / np.finfo(float).eps:
        raise SubspaceFailure("leading block of the stable subspace is singular")
    X = matcore.symmetrize(np.linalg.solve(U1.T, U2.T).T)

    abscissa = matcore.spectral_abscissa(inst.A - inst.S @ X)
    res = matcore.fro_norm(care_residual(inst, X))
    if res > care_res_tol(inst, X):
        raise SubspaceFailure(f"CARE residual {res:.3e} exceeds tolerance")
    if not abscissa < 0.0:
        raise SubspaceFailure("recovered solution is not stabilizing")
    return CareSolution(X, abscissa, res)


def newton_care_oracle(inst, X0=None):
    """Newton iteration for the stabilizing CARE solution.

    Each step solves ``(A - S X).T X' + X' (A - S X) + Q + X S X = 0``.
    Stops when ``||X' - X||_F < 1e-12 (1 + ||X||_F)``.

    `X0` must make ``A - S X0`` stable; it defaults to zero, which is only
    valid for Hurwitz `A`.
    """
    n = inst.n
    X = np.zeros((n, n)) if X0 is None else np.asarray(X0, dtype=float)
    if X.shape != (n, n):
        raise DimensionMismatch(f"X0 is {X.shape}, expected {(n, n)}")
    for _ in range(_NEWTON_MAX_SWEEPS):
        closed = inst.A - inst.S @ X
        if not matcore.spectral_abscissa(closed) < 0.0:
            raise UnstableCoefficient("Newton iterate lost closed-loop stability")
        X_next = solve_lyapunov(closed, inst.Q + X @ inst.S @ X)
        if matcore.fro_norm(X_next - X) < _NEWTON_STEP_TOL * (1.0 + matcore.fro_norm(X)):
            return X_next
        X = X_next
    raise NoConvergence(f"Newton iteration did not converge in {_NEWTON_MAX_SWEEPS} steps")
