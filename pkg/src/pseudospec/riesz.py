"""Riesz spectral projections by contour quadrature and the resulting
block decomposition of a discretized operator.

Projections use the counterclockwise integral ``(1/2 pi i) \\oint (z - A)^{-1} dz``
around a single eigenvalue, which is idempotent and fixes the eigenvector.
Eigenvalues are indexed by increasing real part; for an :class:`OperatorMatrix`
only eigenvalues that survive doubling ``N`` are indexed, but enclosure is
checked against the full computed spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from . import numkernel
from .errors import (
    BlockSingular,
    DomainError,
    EnclosureViolation,
    InsufficientData,
    InvalidArgument,
    QuadratureNotConverged,
    RankDetectionFailure,
)
from .operators import OperatorMatrix, converged_eigenvalues, trust_index

RANK_TOL = 1e-8


def _matrix(A) -> np.ndarray:
    return A.matrix if isinstance(A, OperatorMatrix) else numkernel.as_matrix(A, square=True)


def _sorted(ev: np.ndarray) -> np.ndarray:
    return ev[np.lexsort((ev.imag, ev.real))]


def indexed_spectrum(A) -> Tuple[np.ndarray, np.ndarray]:
    """``(indexed, full)``: the eigenvalues addressable by index and all of them."""
    if isinstance(A, OperatorMatrix):
        return converged_eigenvalues(A), A.eigenvalues
    ev = _sorted(numkernel.eigenvalues(A).values)
    return ev, ev


def default_radius(lam: complex, full: np.ndarray) -> float:
    gaps = np.abs(full - lam)
    gaps = gaps[gaps > 0]
    if gaps.size == 0:
        return 1.0
    return 0.4 * float(gaps.min())


@dataclass(frozen=True)
class Projection:
    matrix: np.ndarray
    eigenvalue: complex
    radius: float
    quad_points: int
    converged: bool

    @property
    def norm(self) -> float:
        return numkernel.operator_norm(self.matrix)


def _contour_sum(M: np.ndarray, lam: complex, r: float, n: int, offset: int, stride: int) -> np.ndarray:
    """``sum_j r e^{i theta_j} (z_j - M)^{-1}`` over ``j = offset, offset+stride, ...``."""
    N = M.shape[0]
    eye = np.eye(N, dtype=np.complex128)
    acc = np.zeros((N, N), dtype=np.complex128)
    for j in range(offset, n, stride):
        w = r * np.exp(2j * np.pi * j / n)
        lu = sla.lu_factor(eye * (lam + w) - M, check_finite=False)
        acc += w * sla.lu_solve(lu, eye, check_finite=False)
    return acc


def riesz_projection(
    A,
    k: int,
    radius: Optional[float] = None,
    quad_points: int = 64,
    max_points: int = 1024,
    rtol: float = 1e-8,
) -> Projection:
    """Spectral projection for the ``k``-th eigenvalue.

    Trapezoidal rule on a circle, doubling the node count (reusing the old
    nodes) until consecutive results agree to ``rtol`` relative.
    """
    M = _matrix(A)
    indexed, full = indexed_spectrum(A)
    if not 0 <= k < indexed.size:
        raise InvalidArgument(f"index {k} outside the {indexed.size} trusted eigenvalues")
    lam = complex(indexed[k])
    r = default_radius(lam, full) if radius is None else float(radius)
    others = np.abs(full - lam)
    # the eigenvalue itself may appear as a near-duplicate; count all within r
    inside = np.count_nonzero(others < r * (1 + 1e-6))
    if inside != 1:
        raise EnclosureViolation(f"circle of radius {r:g} about {lam:.6g} encloses {inside} eigenvalues")
    n = quad_points
    S = _contour_sum(M, lam, r, n, 0, 1)
    Q = S / n
    while True:
        if 2 * n > max_points:
            raise QuadratureNotConverged(f"no agreement to {rtol:g} with {n} nodes")
        # nodes of the 2n rule are the n old ones plus n interleaved ones
        S = S + _contour_sum(M, lam, r, 2 * n, 1, 2)
        n *= 2
        Q_new = S / n
        change = numkernel.operator_norm(Q_new - Q)
        scale = numkernel.operator_norm(Q_new)
        Q = Q_new
        if change <= rtol * scale:
            return Projection(Q, lam, r, n, True)


@dataclass(frozen=True)
class ProjectionSequence:
    eigenvalues: np.ndarray
    norms: np.ndarray
    quad_points: List[int]
    converged: List[bool]
    slope: Optional[float]

    def report(self) -> Dict:
        return {
            "projections": [
                {
                    "k": k,
                    "lambda_re": float(lam.real),
                    "lambda_im": float(lam.imag),
                    "q_norm": float(q),
                    "quad_points": int(n),
                    "converged": bool(c),
                }
                for k, (lam, q, n, c) in enumerate(
                    zip(self.eigenvalues, self.norms, self.quad_points, self.converged)
                )
            ],
            "slope": self.slope,
            "slope_window": "k >= 2",
        }


def log_slope(norms: Sequence[float], k_min: int = 2) -> Optional[float]:
    """Least-squares slope of ``log norms[k]`` against ``k`` for ``k >= k_min``."""
    q = np.asarray(norms, dtype=float)
    k = np.arange(q.size)
    sel = k >= k_min
    if sel.sum() < 2:
        return None
    return float(np.polyfit(k[sel], np.log(q[sel]), 1)[0])


def projection_norm_sequence(A, k_max: int, **kw) -> ProjectionSequence:
    """``||Q_k||`` for ``k = 0..k_max`` and the slope of ``log ||Q_k||``."""
    indexed, _ = indexed_spectrum(A)
    limit = trust_index(A) if isinstance(A, OperatorMatrix) else indexed.size - 1
    limit = min(limit, indexed.size - 1)
    if k_max > limit:
        raise InvalidArgument(f"k_max={k_max} beyond the truncation-trust index {limit}")
    projs = [riesz_projection(A, k, **kw) for k in range(k_max + 1)]
    norms = np.array([p.norm for p in projs])
    return ProjectionSequence(
        indexed[: k_max + 1],
        norms,
        [p.quad_points for p in projs],
        [p.converged for p in projs],
        log_slope(norms),
    )


# -- decomposition ------------------------------------------------------------


def range_basis(P: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of ``Ran P`` from an SVD.

    Raises :class:`RankDetectionFailure` when some singular value sits within
    two decades of the cut ``tol * s_max``, i.e. the rank is ambiguous.
    """
    U, s, _ = sla.svd(P, check_finite=False)
    if s.size == 0 or s[0] == 0.0:
        return U[:, :0]
    rel = s / s[0]
    if np.any((rel > tol * 1e-2) & (rel < tol * 1e2)):
        raise RankDetectionFailure("singular values straddle the rank threshold")
    r = int(np.count_nonzero(rel > tol))
    return U[:, :r]


@dataclass(frozen=True, eq=False)
class RieszDecomposition:
    matrix: np.ndarray
    eigenvalues: np.ndarray  # lambda_0..lambda_m
    projections: List[np.ndarray]
    tail_basis: np.ndarray
    tail_block: np.ndarray
    projection_norms: np.ndarray
    meta: Dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.projections) - 1

    def partial_sum(self, j: Optional[int] = None) -> np.ndarray:
        j = self.m if j is None else j
        return sum(self.projections[: j + 1])

    def block(self, n: int) -> np.ndarray:
        """``A`` restricted to ``Ran Q_n`` in an orthonormal basis."""
        V = range_basis(self.projections[n])
        return V.conj().T @ self.matrix @ V

    @property
    def constant(self) -> float:
        return 1.0 + float(np.sum(self.projection_norms))


def decompose(A, m: int, **kw) -> RieszDecomposition:
    """Projections ``Q_0..Q_m`` and ``A`` compressed to ``Ran(I - P_m)``."""
    if m < 0:
        raise InvalidArgument("m must be nonnegative")
    M = _matrix(A)
    projs = [riesz_projection(A, k, **kw) for k in range(m + 1)]
    P = sum(p.matrix for p in projs)
    U = range_basis(np.eye(M.shape[0]) - P)
    B = U.conj().T @ M @ U
    return RieszDecomposition(
        matrix=M,
        eigenvalues=np.array([p.eigenvalue for p in projs]),
        projections=[p.matrix for p in projs],
        tail_basis=U,
        tail_block=B,
        projection_norms=np.array([p.norm for p in projs]),
    )


def _block_resolvent(B: np.ndarray, z: complex, scale: float) -> float:
    if B.shape[0] == 0:
        return 0.0
    s = numkernel.smallest_singular_value(z * np.eye(B.shape[0]) - B)
    if s <= 1e-14 * scale:
        raise BlockSingular(f"z = {z} is a block eigenvalue")
    return 1.0 / s


def boulton_bound(A, m: int, z: complex, decomposition: Optional[RieszDecomposition] = None) -> float:
    """``C (sum_n ||(A|Q_n - z)^{-1}|| + ||(tail - z)^{-1}||)`` with
    ``C = 1 + sum_n ||Q_n||``."""
    d = decomposition if decomposition is not None else decompose(A, m)
    if d.m != m:
        raise InvalidArgument("decomposition built for a different m")
    scale = max(numkernel.operator_norm(d.matrix), 1.0)
    total = sum(_block_resolvent(d.block(n), z, scale) for n in range(m + 1))
    total += _block_resolvent(d.tail_block, z, scale)
    return d.constant * total


# -- growth laws -------------------------------------------------------------


@dataclass(frozen=True)
class GrowthFit:
    exponent: float
    prefactor: float
    offset: float
    k: np.ndarray


def eigenvalue_growth_fit(eigs: Sequence[complex], k_min: int = 0, offset: float = 0.5) -> GrowthFit:
    """Fit ``Re lambda_k ~ c (k + offset)^p`` on a log-log scale.

    The half-integer offset is the Maslov index of the WKB quantization
    condition; without it low modes bias the exponent towards 1.
    """
    lam = np.asarray(eigs).real
    k = np.arange(lam.size)
    sel = (k >= k_min) & (lam > 0) & (k + offset > 0)
    if sel.sum() < 3:
        raise InsufficientData("need at least three positive eigenvalues")
    p, logc = np.polyfit(np.log(k[sel] + offset), np.log(lam[sel]), 1)
    return GrowthFit(float(p), float(math.exp(logc)), offset, k[sel])


@dataclass(frozen=True)
class TailConstants:
    M_tilde: float
    omega: float
    m_values: Tuple[int, ...]


def fit_tail_constants(
    A,
    m_values: Sequence[int] = (1, 2, 3, 4),
    times: Optional[Sequence[float]] = None,
    safety: float = 0.9,
) -> TailConstants:
    """Fit ``(M~, omega)`` for the tail estimate.

    ``omega`` is ``safety`` times the smallest ``Re lambda_k / k^{6/5}`` over
    indexed ``k >= 1``, so that ``lambda_k >= omega k^{6/5}``. ``M~`` is the
    largest sampled ``||exp(-t B_m)|| e^{omega m^{6/5} t}`` over the tail
    blocks ``B_m`` on ``Ran(I - P_{m-1})``.
    """
    from .semigroup import default_times, propagators

    indexed, _ = indexed_spectrum(A)
    k = np.arange(1, indexed.size)
    omega = safety * float(np.min(indexed.real[1:] / k**1.2))
    times = default_times() if times is None else times
    M_tilde = 1.0
    for m in m_values:
        if m < 1:
            raise InvalidArgument("tail estimates need m >= 1")
        B = decompose(A, m - 1).tail_block
        rate = omega * m**1.2
        for t, E in propagators(B, times):
            M_tilde = max(M_tilde, numkernel.operator_norm(E) * math.exp(rate * t))
    return TailConstants(float(M_tilde), omega, tuple(m_values))


def tail_resolvent_estimate(m: int, z: complex, M_tilde: float, omega: float) -> float:
    """``M~ / (omega m^{6/5} - Re z)`` for the resolvent of ``A`` on
    ``Ran(I - P_{m-1})``."""
    edge = omega * m**1.2
    gap = edge - complex(z).real
    if gap <= 0:
        raise DomainError(f"Re z must lie below omega m^(6/5) = {edge:g}")
    return M_tilde / gap
