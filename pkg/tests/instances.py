"""Random problem generators shared by the test modules."""

import numpy as np

from ccare import matcore
from ccare.care import CareInstance, pbh_detectable, pbh_stabilizable
from ccare.model import CcareProblem, auto_shifts, ccare_residual


def random_stable(n, rng, margin=(0.2, 1.0)):
    M = rng.standard_normal((n, n))
    return M - (matcore.spectral_abscissa(M) + rng.uniform(*margin)) * np.eye(n)


def random_psd(n, rng, rank=None):
    r = n if rank is None else rank
    B = rng.standard_normal((n, r))
    return B @ B.T


def random_care(n, rng):
    """A solvable CARE together with a stabilizing Newton start.

    Even draws use a Hurwitz ``A`` and start from zero. Odd draws use an
    arbitrary ``A`` with positive definite ``S`` and start from ``c I`` with
    ``c`` large enough that ``A - c S`` is Hurwitz.
    """
    while True:
        if rng.integers(2) == 0:
            A = random_stable(n, rng)
            S = random_psd(n, rng, rank=int(rng.integers(1, n + 1)))
            X0 = np.zeros((n, n))
        else:
            A = rng.standard_normal((n, n))
            S = random_psd(n, rng) + 0.5 * np.eye(n)
            c = 1.0
            while not matcore.is_stable(A - c * S):
                c *= 2.0
            X0 = c * np.eye(n)
        Q = random_psd(n, rng, rank=int(rng.integers(1, n + 1)))
        if pbh_stabilizable(A, S) and pbh_detectable(A, Q):
            return CareInstance(A, S, Q), X0


def random_ccare(rng, n=None, N=None):
    """Random coupled problem with positive definite ``S_i``.

    Couplings are drawn from [0.2, 1.5]. Any nonnegative shift then gives
    stabilizable pairs, and auto shifts make every pair detectable.
    """
    n = int(rng.integers(1, 5)) if n is None else n
    N = int(rng.integers(2, 4)) if N is None else N
    A = [rng.standard_normal((n, n)) for _ in range(N)]
    S = [random_psd(n, rng, rank=1) + 0.3 * np.eye(n) for _ in range(N)]
    Q = [random_psd(n, rng, rank=int(rng.integers(1, n + 1))) for _ in range(N)]
    delta = rng.uniform(0.2, 1.5, size=(N, N))
    np.fill_diagonal(delta, 0.0)
    return CcareProblem(A, S, Q, delta)


def upper_bound_scale(p, rho):
    """Smallest ``c = 2^k`` with ``R_i(cI) <= 0`` and ``A_i - rho_i I - c S_i`` Hurwitz."""
    eye = np.eye(p.n)
    c = 1.0
    while True:
        X = [c * eye] * p.N
        if all(matcore.loewner_compare(ccare_residual(p, X, i), 0 * eye, 0.0).is_le
               and matcore.is_stable(p.A[i] - rho[i] * eye - c * p.S[i])
               for i in range(p.N)):
            return c
        c *= 2.0


def solvable_instances(count, seed=7):
    """`count` random coupled problems with auto shifts and an upper-bound start."""
    from ccare.iteration import IterationConfig, run

    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        p = random_ccare(rng)
        rho = auto_shifts(p)
        rep = run(p, IterationConfig(shifts=rho, max_iter=2000, check_monotone=False))
        if rep.converged:
            out.append((p, rho, upper_bound_scale(p, rho)))
    return out
