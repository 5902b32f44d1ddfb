"""Semigroup norm curves ``t -> ||exp(-tA)||``, growth bounds and the
closed forms known for the imaginary Airy operator ``-d^2/dx^2 + ix``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import numkernel
from .errors import DomainError, InvalidArgument
from .operators import OperatorMatrix


def default_times(t_min: float = 0.1, t_max: float = 4.0, n: int = 25) -> np.ndarray:
    """Geometric sampling; beyond ``t = 4`` the norms of interest underflow."""
    return np.geomspace(t_min, t_max, n)


@dataclass(frozen=True)
class NormCurve:
    times: np.ndarray
    norms: np.ndarray
    growth_bound_a: Optional[float]
    meta: Dict = field(default_factory=dict)

    @property
    def log_norms(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.norms)

    def Ma(self, a: float) -> float:
        """Smallest ``M`` with ``norm(t) <= M e^{-a t}`` on the sampled times
        (and at ``t = 0``, where the norm is 1)."""
        return float(max(1.0, np.max(self.norms * np.exp(a * self.times))))

    def rows(self, exact=None):
        for t, n in zip(self.times, self.norms):
            row = [t, n, math.log(n) if n > 0 else -math.inf]
            if exact is not None:
                row.append(exact(t))
            yield tuple(row)


def fit_growth_bound(times: Sequence[float], norms: Sequence[float]) -> Optional[float]:
    """Negated least-squares slope of ``log norm`` against ``t`` over the later
    half of the samples (at least two points); ``None`` if that is impossible."""
    t = np.asarray(times, dtype=float)
    n = np.asarray(norms, dtype=float)
    if t.size < 2:
        return None
    start = min(t.size // 2, t.size - 2)
    t, n = t[start:], n[start:]
    ok = n > 0
    if ok.sum() < 2:
        return None
    slope = np.polyfit(t[ok], np.log(n[ok]), 1)[0]
    return float(-slope)


def _common_step(times: np.ndarray, rtol: float = 1e-9) -> Optional[float]:
    """A step ``s`` such that every time is an integer multiple of ``s``."""
    pts = np.concatenate([[0.0], times])
    diffs = np.diff(pts)
    s = float(diffs.min())
    ratios = times / s
    if np.all(np.abs(ratios - np.round(ratios)) <= rtol * np.maximum(ratios, 1.0)) and ratios[-1] <= 2000:
        return s
    return None


def propagators(A, times: Sequence[float], max_norm: float = 1e4) -> Iterable[Tuple[float, np.ndarray]]:
    """Yield ``(t, exp(-tA))`` for increasing ``times``.

    When all times are multiples of a common step, one step exponential is
    cached and reused; otherwise each increment gets its own exponential.
    Either way the error of ``exp(-tA)`` compounds over products, which is
    benign for decaying semigroups.
    """
    M = A.matrix if isinstance(A, OperatorMatrix) else numkernel.as_matrix(A, square=True)
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise InvalidArgument("times must be positive and strictly increasing")
    step = _common_step(times)
    E = np.eye(M.shape[0], dtype=np.complex128)
    if step is not None:
        S = numkernel.matrix_exp(-M, step, max_norm=max_norm)
        k = 0
        for t in times:
            target = int(round(t / step))
            while k < target:
                E = S @ E
                k += 1
            yield float(t), E
    else:
        prev = 0.0
        for t in times:
            E = numkernel.matrix_exp(-M, t - prev, max_norm=max_norm) @ E
            prev = t
            yield float(t), E


def norm_curve(A, times: Optional[Sequence[float]] = None) -> NormCurve:
    """Sample ``||exp(-tA)||`` and fit the growth bound from the tail."""
    times = default_times() if times is None else np.asarray(times, dtype=float)
    norms = np.array([numkernel.operator_norm(E) for _, E in propagators(A, times)])
    meta = {}
    if isinstance(A, OperatorMatrix):
        meta["operator"] = A.describe()
    return NormCurve(np.asarray(times, dtype=float), norms, fit_growth_bound(times, norms), meta)


def spectral_radius(E) -> float:
    return float(np.max(np.abs(numkernel.eigenvalues(E).values)))


def werner_bound(M: float, a: float, z: complex) -> float:
    """Resolvent bound ``M / (a - Re z)`` for a semigroup with
    ``||exp(-tA)|| <= M e^{-a t}``; valid for ``Re z < a``."""
    if M <= 0:
        raise InvalidArgument("M must be positive")
    gap = a - complex(z).real
    if gap <= 0:
        raise DomainError(f"Re z = {complex(z).real:g} is not below a = {a:g}")
    return M / gap


def werner_pairs(curve: NormCurve, a_values: Sequence[float]) -> List[Tuple[float, float]]:
    """``(M_a, a)`` pairs read off a sampled norm curve."""
    return [(curve.Ma(a), float(a)) for a in a_values]


def best_werner_bound(pairs: Sequence[Tuple[float, float]], z: complex) -> float:
    vals = [M / (a - complex(z).real) for M, a in pairs if a > complex(z).real]
    if not vals:
        raise DomainError("no (M, a) pair covers this z")
    return min(vals)


def airy_exact_norm(t: float) -> float:
    """``||exp(-t H)||`` for ``H = -d^2/dx^2 + ix`` on the line."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    return math.exp(-(t**3) / 12.0)


def airy_Ma(a: float) -> float:
    """``sup_t exp(a t - t^3/12)``, attained at ``t = 2 sqrt(a)``."""
    if a <= 0:
        raise DomainError("a must be positive")
    return math.exp(4.0 / 3.0 * a**1.5)


def airy_escape_bound(eps: float, w: float) -> float:
    """Real part beyond which the Airy eps-pseudospectrum lies:
    ``w^{-1} (log 1/eps)^{2/3}``."""
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    if w <= 0:
        raise DomainError("w must be positive")
    return math.log(1.0 / eps) ** (2.0 / 3.0) / w
