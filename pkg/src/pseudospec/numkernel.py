"""Dense complex linear algebra used by every other module.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``; the
helpers here validate them and wrap LAPACK where a mature routine exists.
The smallest and largest singular values are computed iteratively, because
the pseudospectrum sweeps call them tens of thousands of times and only
need one end of the spectrum.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ExpOverflow, InvalidArgument, NoConvergence, SingularMatrix

SEED = 20170301
_PIVOT_RTOL = 1e-14


def as_matrix(a, square: bool = False) -> np.ndarray:
    """Return ``a`` as a finite 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.size == 0:
        raise InvalidArgument(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise InvalidArgument(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidArgument("matrix has non-finite entries")
    return m


@dataclass(frozen=True)
class EigenResult:
    values: np.ndarray
    vectors: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.values)


def solve_linear(A, B) -> np.ndarray:
    """Solve ``A X = B`` by LU with partial pivoting.

    Raises :class:`SingularMatrix` when a pivot falls below
    ``1e-14 * max|A_ij|``.
    """
    A = as_matrix(A, square=True)
    B = np.asarray(B, dtype=np.complex128)
    vector = B.ndim == 1
    B = as_matrix(B)
    if B.shape[0] != A.shape[0]:
        raise InvalidArgument("row count of B does not match A")
    lu, piv = _lu(A)
    amax = np.max(np.abs(A))
    if amax == 0.0 or np.min(np.abs(np.diag(lu))) < _PIVOT_RTOL * amax:
        raise SingularMatrix("pivot below 1e-14*||A||_max")
    X = sla.lu_solve((lu, piv), B, check_finite=False)
    return X[:, 0] if vector else X


def eigenvalues(A, vectors: bool = False) -> EigenResult:
    """All eigenvalues of ``A`` with multiplicity.

    Backed by LAPACK ``zgeev`` (Hessenberg reduction followed by the
    shifted QR iteration). Eigenvectors, when requested, have unit norm.
    """
    A = as_matrix(A, square=True)
    try:
        if vectors:
            w, v = sla.eig(A, check_finite=False)
            v = v / np.linalg.norm(v, axis=0)
            return EigenResult(w, v)
        return EigenResult(sla.eigvals(A, check_finite=False))
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc


def schur(A) -> Tuple[np.ndarray, np.ndarray]:
    """Complex Schur form ``A = Z T Z^*``."""
    A = as_matrix(A, square=True)
    T, Z = sla.schur(A, output="complex", check_finite=False)
    return T, Z


def _lu(A: np.ndarray):
    # exact zero pivots are detected by the callers; silence LAPACK's warning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        return sla.lu_factor(A, check_finite=False)


def _lanczos_top(
    apply: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    rtol: float,
    maxiter: int,
) -> Tuple[Optional[float], np.ndarray]:
    """Largest eigenvalue of a Hermitian positive semidefinite operator.

    Lanczos with full reorthogonalization. Convergence is the Ritz residual
    ``beta_k |s_k| <= rtol * theta``, which bounds the distance from the
    Ritz value ``theta`` to an eigenvalue. Returns ``(theta, v)`` with the
    Ritz vector ``v`` (useful as a warm start), ``(inf, v)`` when ``apply``
    overflows, or ``(None, v)`` without convergence.
    """
    n = x0.size
    m = min(maxiter, n)
    Q = np.zeros((m + 1, n), dtype=np.complex128)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    Q[0] = x0 / np.linalg.norm(x0)
    v = Q[0]
    for j in range(m):
        with np.errstate(all="ignore"):
            w = apply(Q[j])
        if not np.all(np.isfinite(w)):
            return np.inf, Q[j]
        alpha[j] = np.vdot(Q[j], w).real
        raw = np.linalg.norm(w)
        for _ in range(2):
            w = w - Q[: j + 1].T @ (Q[: j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)
        if j == 0:
            theta, S = np.array([alpha[0]]), np.ones((1, 1))
        else:
            theta, S = sla.eigh_tridiagonal(alpha[: j + 1], beta[:j], check_finite=False)
        top = theta[-1]
        v = S[:, -1] @ Q[: j + 1]
        breakdown = beta[j] <= 1e-12 * raw
        if breakdown and j + 1 < n:
            # the Krylov space is invariant; its top Ritz value need not be
            # the top eigenvalue, so continue in the orthogonal complement
            w = _random_vector(n, j)
            for _ in range(2):
                w = w - Q[: j + 1].T @ (Q[: j + 1].conj() @ w)
            beta[j] = 0.0
            Q[j + 1] = w / np.linalg.norm(w)
            continue
        if top <= 0:
            # zero operator on this Krylov space
            return (0.0, v) if beta[j] == 0 else (None, v)
        if breakdown or beta[j] * abs(S[-1, -1]) <= rtol * top:
            return float(top), v
        Q[j + 1] = w / beta[j]
    return None, v


def _random_vector(n: int, salt: int = 0) -> np.ndarray:
    rng = np.random.default_rng((SEED, salt))
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def _inverse_lanczos(
    solve: Callable[[np.ndarray], np.ndarray],
    solve_h: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    rtol: float,
    maxiter: int,
) -> Tuple[Optional[float], np.ndarray]:
    """sigma_min of ``M`` from Lanczos on ``(M^* M)^{-1} = M^{-1} M^{-*}``.

    A relative tolerance ``rtol`` on ``theta = sigma^{-2}`` gives about
    ``rtol / 2`` on sigma.
    """
    theta, v = _lanczos_top(lambda b: solve(solve_h(b)), x0, rtol, maxiter)
    if theta is None:
        return None, v
    if theta == np.inf:
        return 0.0, v
    return float(1.0 / np.sqrt(theta)), v


def smallest_singular_value(A, rtol: float = 1e-10, maxiter: int = 200) -> float:
    """sigma_min(A) by inverse Lanczos on ``A^* A`` with LU solves.

    Falls back to a full SVD (bidiagonalization) when the iteration stagnates;
    returns 0 for a numerically singular matrix.
    """
    A = as_matrix(A, square=True)
    n = A.shape[0]
    lu, piv = _lu(A)
    if np.min(np.abs(np.diag(lu))) == 0.0:
        return 0.0
    sigma, _ = _inverse_lanczos(
        lambda b: sla.lu_solve((lu, piv), b, check_finite=False),
        lambda b: sla.lu_solve((lu, piv), b, trans=2, check_finite=False),
        np.ones(n, dtype=np.complex128),
        rtol,
        maxiter,
    )
    if sigma is None:
        return float(sla.svdvals(A, check_finite=False)[-1])
    return sigma


def shifted_triangular_sigma_min(
    T: np.ndarray,
    z: complex,
    x0: Optional[np.ndarray] = None,
    rtol: float = 1e-10,
    maxiter: int = 200,
) -> Tuple[float, np.ndarray]:
    """sigma_min(zI - T) for upper-triangular ``T``; O(n^2) per iteration.

    Returns the value and the right singular vector so that sweeps over
    neighbouring ``z`` can warm-start.
    """
    n = T.shape[0]
    M = -T.copy()
    M[np.diag_indices(n)] += z
    d = np.abs(np.diag(M))
    if np.min(d) == 0.0:
        v = np.zeros(n, dtype=np.complex128)
        v[int(np.argmin(d))] = 1.0
        return 0.0, v
    if x0 is None:
        x0 = np.ones(n, dtype=np.complex128)
    else:
        # a warm start can sit in an invariant subspace that misses the
        # wanted singular vector (e.g. for normal T); blend in a fixed
        # random direction
        r = _random_vector(n)
        x0 = x0 / np.linalg.norm(x0) + 1e-2 * r / np.linalg.norm(r)
    sigma, v = _inverse_lanczos(
        lambda b: sla.solve_triangular(M, b, check_finite=False),
        lambda b: sla.solve_triangular(M, b, trans=2, check_finite=False),
        x0,
        rtol,
        maxiter,
    )
    if sigma is None:
        _, s, vh = sla.svd(M, check_finite=False)
        return float(s[-1]), vh[-1].conj()
    return sigma, v


def sparse_smallest_singular_value(M, rtol: float = 1e-10, maxiter: int = 150) -> float:
    """sigma_min of a sparse square matrix via a sparse LU (SuperLU).

    Used for banded finite-difference operators too large for dense work.
    Raises :class:`NoConvergence` on stagnation since no dense fallback is
    affordable at these sizes.
    """
    M = sp.csc_matrix(M, dtype=np.complex128)
    n = M.shape[0]
    try:
        lu = spla.splu(M)
    except RuntimeError:  # exactly singular factor
        return 0.0
    sigma, _ = _inverse_lanczos(
        lu.solve,
        lambda b: lu.solve(b, trans="H"),
        np.ones(n, dtype=np.complex128),
        rtol,
        maxiter,
    )
    if sigma is None:
        raise NoConvergence("sparse inverse Lanczos did not converge")
    return sigma


def operator_norm(A, rtol: float = 1e-10, maxiter: int = 200) -> float:
    """Largest singular value by Lanczos on ``A^* A``.

    Starts from the all-ones vector, retries once from a seeded random vector
    (in case the start is orthogonal to the top singular vector's Krylov
    space) and falls back to a full SVD after that.
    """
    A = as_matrix(A)
    if not np.any(A):
        return 0.0
    Ah = A.conj().T
    n = A.shape[1]
    rng = np.random.default_rng(SEED)
    starts = [
        np.ones(n, dtype=np.complex128),
        rng.standard_normal(n) + 1j * rng.standard_normal(n),
    ]
    best = 0.0
    for x0 in starts:
        theta, _ = _lanczos_top(lambda b: Ah @ (A @ b), x0, rtol, maxiter)
        if theta is not None and np.isfinite(theta) and theta > 0:
            best = max(best, float(np.sqrt(theta)))
    if best > 0:
        return best
    return float(sla.svdvals(A, check_finite=False)[0])


def matrix_exp(A, t: float = 1.0, max_norm: float = 1e4) -> np.ndarray:
    """``exp(tA)`` by scaling and squaring with Pade approximants.

    Backed by :func:`scipy.linalg.expm` (degree up to 13). Raises
    :class:`ExpOverflow` when ``||tA||_1`` exceeds ``max_norm``.
    """
    A = as_matrix(A, square=True)
    if t < 0:
        raise InvalidArgument("t must be nonnegative")
    if t == 0:
        return np.eye(A.shape[0], dtype=np.complex128)
    X = t * A
    if np.linalg.norm(X, 1) > max_norm:
        raise ExpOverflow(f"||tA||_1 = {np.linalg.norm(X, 1):.3g} exceeds {max_norm:g}")
    return sla.expm(X)
