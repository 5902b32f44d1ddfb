"""Escape-rate exponents of pseudospectral boundaries and the scaled
imaginary-cubic operators ``-d^2/dx^2 + ix^3 - c x^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from . import numkernel
from .errors import InsufficientData, InvalidArgument, NoCrossing
from .operators import (
    OperatorMatrix,
    PotentialSpec,
    fd_discretize,
    fd_sparse,
    hermite_discretize,
    parse_potential,
)
from .pseudospectrum import Region, compute_grid

DEFAULT_EPS = tuple(10.0 ** -k for k in range(2, 9))
EPS_FLOOR = 1e-8


@dataclass(frozen=True)
class LineScan:
    re: np.ndarray
    im: float
    sigma_min: np.ndarray
    trusted: np.ndarray
    eigenvalues: np.ndarray


def line_scan(A, re_min: float, re_max: float, n_points: int, axis_im: float = 0.0) -> LineScan:
    g = compute_grid(A, Region.line(re_min, re_max, axis_im, n_points), workers=1)
    return LineScan(g.region.re, axis_im, g.sigma_min[0], g.trusted[0], g.eigenvalues)


def crossings_from_scan(scan: LineScan, eps_list: Sequence[float], delta: float = 0.5) -> List[float]:
    """Largest ``Re z`` on the scanned line where ``sigma_min`` falls through
    each eps, i.e. where the line enters the eps-pseudospectrum from the left.

    Segments touching a ``delta``-disk around an eigenvalue, or an untrusted
    node, are skipped. The crossing is placed by linear interpolation.
    """
    x, s = scan.re, scan.sigma_min
    z = x + 1j * scan.im
    ok = scan.trusted.copy()
    for lam in scan.eigenvalues:
        ok &= np.abs(z - lam) >= delta
    seg_ok = ok[:-1] & ok[1:]
    out = []
    for eps in eps_list:
        d = s - eps
        hit = seg_ok & (d[:-1] >= 0) & (d[1:] < 0)
        idx = np.nonzero(hit)[0]
        if idx.size == 0:
            raise NoCrossing(f"sigma_min never crosses eps={eps:g} on the line")
        i = idx[-1]
        t = d[i] / (d[i] - d[i + 1]) if d[i] != d[i + 1] else 0.0
        out.append(float(x[i] + t * (x[i + 1] - x[i])))
    return out


def boundary_crossings(
    A,
    eps_list: Sequence[float],
    axis_im: float = 0.0,
    re_range: Tuple[float, float] = (-5.0, 80.0),
    n_points: int = 4251,
    delta: float = 0.5,
) -> List[float]:
    scan = line_scan(A, re_range[0], re_range[1], n_points, axis_im)
    return crossings_from_scan(scan, eps_list, delta)


@dataclass(frozen=True)
class ExponentFit:
    pairs: List[Tuple[float, float]]
    exponent_p: float
    prefactor: float
    r_squared: float

    def report(self) -> Dict:
        return {
            "pairs": [[e, b] for e, b in self.pairs],
            "p": self.exponent_p,
            "prefactor": self.prefactor,
            "r2": self.r_squared,
            "eps_floor": EPS_FLOOR,
        }


def fit_exponent(pairs: Sequence[Tuple[float, float]]) -> ExponentFit:
    """Fit ``boundary = C (log 1/eps)^p`` by least squares in log-log form."""
    pairs = [(float(e), float(b)) for e, b in pairs]
    if len(pairs) < 4:
        raise InsufficientData("need at least 4 (eps, boundary) pairs")
    eps = np.array([p[0] for p in pairs])
    b = np.array([p[1] for p in pairs])
    if np.any(eps <= 0) or np.any(eps >= 1) or np.any(b <= 0):
        raise InvalidArgument("need 0 < eps < 1 and positive boundaries")
    if math.log10(eps.max() / eps.min()) < 3 - 1e-9:
        raise InsufficientData("eps values must span at least 3 decades")
    X = np.log(np.log(1.0 / eps))
    Y = np.log(b)
    p, c = np.polyfit(X, Y, 1)
    resid = Y - (p * X + c)
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit(pairs, float(p), float(math.exp(c)), min(max(r2, 0.0), 1.0))


# -- reference families ------------------------------------------------------


def airy_operator(N: int = 1200, L: float = 40.0) -> OperatorMatrix:
    return fd_discretize(parse_potential("i*x"), N, L)


def bender_operator(N: int = 192, scale: float = 0.7) -> OperatorMatrix:
    # at N = 192 this scale keeps lambda_0..lambda_10 within 1e-6 of the
    # 2N run and the spurious truncation modes far from the real axis
    return hermite_discretize(parse_potential("i*x^3"), N, scale)


def escape_fit(A, eps_list: Sequence[float] = DEFAULT_EPS, **kw) -> ExponentFit:
    b = boundary_crossings(A, eps_list, **kw)
    return fit_exponent(list(zip(eps_list, b)))


# -- semiclassical rescaling ---------------------------------------------------


@dataclass(frozen=True)
class Semiclassical:
    tau: float
    h: float
    c: float
    potential: PotentialSpec

    @property
    def kinetic(self) -> float:
        return self.h**2

    def unscaled_norm(self, scaled_norm: float) -> float:
        """``||(H_c - i tau^3)^{-1}||`` from ``||(H_c^h - i)^{-1}||``."""
        return scaled_norm / self.tau**3


def cubic_potential(c: float, sign: float = -1.0) -> PotentialSpec:
    """``ix^3 + sign * c x^2``."""
    return PotentialSpec((0, 0, sign * c, 1j))


def semiclassical_transform(c: float, tau: float) -> Semiclassical:
    """``x -> tau x`` maps ``H_c - i tau^3`` to ``tau^3 (H_c^h - i)`` with
    ``h = tau^{-5/2}``, ``H_c^h = -h^2 d^2 + ix^3 - c h^{2/5} x^2``."""
    if tau <= 0:
        raise InvalidArgument("tau must be positive")
    h = tau ** -2.5
    return Semiclassical(float(tau), h, float(c), cubic_potential(c * h**0.4))


@dataclass(frozen=True)
class CounterexampleScan:
    c: float
    sign: float
    tau: np.ndarray
    resnorm: np.ndarray
    trusted: np.ndarray
    meta: Dict = field(default_factory=dict)

    @property
    def z_im(self) -> np.ndarray:
        return self.tau**3

    @property
    def log_resnorm(self) -> np.ndarray:
        return np.log(self.resnorm)

    @property
    def slope(self) -> Optional[float]:
        sel = self.trusted
        if sel.sum() < 2:
            return None
        return float(np.polyfit(self.tau[sel], self.log_resnorm[sel], 1)[0])

    def strictly_increasing(self) -> bool:
        r = self.resnorm[self.trusted]
        return bool(np.all(np.diff(r) > 0))

    def log_growth(self) -> float:
        lr = self.log_resnorm[self.trusted]
        return float(lr[-1] - lr[0])

    def rows(self):
        for t, r, ok in zip(self.tau, self.resnorm, self.trusted):
            yield t, t**3, r, math.log(r), bool(ok)


def counterexample_scan(
    c: float,
    tau_list: Sequence[float],
    N: int = 20000,
    L: float = 25.0,
    sign: float = -1.0,
) -> CounterexampleScan:
    """Resolvent norms of ``-d^2 + ix^3 + sign*c x^2`` at ``z = i tau^3``.

    ``sign = -1`` is the non-admissible operator, ``sign = +1`` the
    admissible contrast. The operator is finite differences on ``[-L, L]``
    in sparse form. Points with ``|z|`` beyond half the Gershgorin bound,
    or whose turning point ``x = tau`` is not well inside the box, are
    marked untrusted and the scan stops there.
    """
    V = cubic_potential(c, sign)
    A = fd_sparse(V, N, L)
    h = 2 * L / (N + 1)
    gersh = 4.0 / h**2 + float(np.max(np.abs(V(np.array([-L, L])))))
    eye = sp.identity(N, format="csc", dtype=np.complex128)
    tau = np.asarray(tau_list, dtype=float)
    norms = np.full(tau.size, np.nan)
    trusted = np.zeros(tau.size, dtype=bool)
    for j, t in enumerate(tau):
        if t**3 > 0.5 * gersh or t > 0.5 * L:
            break
        s = numkernel.sparse_smallest_singular_value(1j * t**3 * eye - A)
        norms[j] = 1.0 / s if s > 0 else math.inf
        trusted[j] = True
    meta = {"potential": V.label, "scheme": "fd", "N": N, "L": L}
    return CounterexampleScan(float(c), float(sign), tau, norms, trusted, meta)


def contrast_werner_bound(c: float, N: int = 128, a_fracs=(0.25, 0.5, 0.75, 0.9)) -> float:
    """Resolvent bound on the imaginary axis for the admissible ``ix^3 + cx^2``.

    ``(M_a, a)`` pairs are read from a sampled semigroup norm curve of the
    Hermite discretization, ``a`` a fraction of the fitted growth bound, and
    the best ``M_a / a`` is returned (``Re z = 0`` on the scan).
    """
    from .semigroup import best_werner_bound, norm_curve, werner_pairs

    op = hermite_discretize(cubic_potential(c, +1.0), N)
    curve = norm_curve(op)
    a0 = curve.growth_bound_a
    pairs = werner_pairs(curve, [f * a0 for f in a_fracs])
    return best_werner_bound(pairs, 0.0)


def semiclassical_boundary(
    h: float,
    c: float,
    x_range: Tuple[float, float] = (-2.0, 2.0),
    n_points: int = 401,
    alpha: float = 0.0,
) -> np.ndarray:
    """``ix^3 - c h^{2/5} x^2 + h^{6/5} alpha`` over ``x_range`` (the
    ``xi -> 0`` edge of the symbol image), as a complex polyline."""
    if n_points < 2:
        raise InvalidArgument("n_points must be at least 2")
    x = np.linspace(x_range[0], x_range[1], n_points)
    return 1j * x**3 - c * h**0.4 * x**2 + h**1.2 * alpha


def shifted_intersection(h: float, c: float, alpha: float) -> float:
    """Positive root of ``-c h^{2/5} x^2 + h^{6/5} alpha = 0``."""
    if c <= 0 or alpha < 0:
        raise InvalidArgument("need c > 0 and alpha >= 0")
    return h**0.4 * math.sqrt(alpha / c)
