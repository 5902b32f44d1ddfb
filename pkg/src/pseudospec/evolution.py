"""Time evolution of ``phi_t = phi'' - V phi`` as a real two-component system,
the Mehler kernel of the comparison harmonic oscillator, and the pointwise
domination ``|phi(t)|^2 <= exp(t H_k) |phi(0)|^2``.

Here ``H_k = d^2/dx^2 + 2 kappa`` with ``kappa(x) = -c x^2 + d`` and
``Re V >= c x^2 - d``. ``H_k`` is a harmonic oscillator of frequency
``nu = sqrt(2c)``; the conventional parameter ``omega = sqrt(8c)`` equals
``2 nu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, ExpOverflow, InvalidArgument, StabilityLoss
from .operators import PotentialSpec, check_admissibility, fd_grid, parse_potential

SINH_LIMIT = 700.0
DECAY_TOL = 1e-12


@dataclass(frozen=True)
class GridFunction:
    x: np.ndarray
    f1: np.ndarray
    f2: np.ndarray

    def __post_init__(self):
        if self.x.size < 16:
            raise InvalidArgument("need at least 16 nodes")
        if not (self.x.shape == self.f1.shape == self.f2.shape):
            raise InvalidArgument("node and value arrays differ in shape")

    @classmethod
    def from_callable(cls, f: Callable, N: int, L: float) -> "GridFunction":
        x = fd_grid(N, L)
        v = np.asarray(f(x), dtype=np.complex128) * np.ones_like(x)
        return cls(x, v.real.copy(), v.imag.copy())

    @classmethod
    def from_complex(cls, x: np.ndarray, v: np.ndarray) -> "GridFunction":
        return cls(x, np.ascontiguousarray(v.real), np.ascontiguousarray(v.imag))

    @property
    def L(self) -> float:
        h = self.h
        return float(-self.x[0] + h)

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def values(self) -> np.ndarray:
        return self.f1 + 1j * self.f2

    @property
    def abs2(self) -> np.ndarray:
        return self.f1**2 + self.f2**2

    def l2_norm(self) -> float:
        return math.sqrt(self.h * float(np.sum(self.abs2)))


@dataclass(frozen=True)
class MehlerParams:
    c_quad: float
    d_const: float

    def __post_init__(self):
        if self.c_quad <= 0:
            raise InvalidArgument("c must be positive")

    @property
    def omega(self) -> float:
        return math.sqrt(8.0 * self.c_quad)

    @property
    def nu(self) -> float:
        return 0.5 * self.omega

    @property
    def d_shift(self) -> float:
        return 2.0 * self.d_const

    @classmethod
    def for_potential(cls, V: PotentialSpec) -> "MehlerParams":
        rep = check_admissibility(V)
        if rep.quad_c <= 0:
            raise InvalidArgument(f"{V.label}: no quadratic lower bound for Re V")
        return cls(rep.quad_c, rep.shift_d)


def _trig(p: MehlerParams, t: float) -> Tuple[float, float, float]:
    """``(sinh 2 nu t, cosh 2 nu t - 1, nu)`` with overflow guard."""
    if t <= 0:
        raise DomainError("t must be positive")
    nu = p.nu
    arg = 2 * nu * t
    if arg > SINH_LIMIT:
        raise ExpOverflow(f"2 nu t = {arg:g} overflows sinh")
    return math.sinh(arg), 2.0 * math.sinh(nu * t) ** 2, nu


def mehler_prefactor(p: MehlerParams, t: float) -> float:
    sh, _, nu = _trig(p, t)
    return math.exp(p.d_shift * t) * math.sqrt(nu / (2 * math.pi * sh))


def mehler_kernel(p: MehlerParams, t: float, x, y):
    """Kernel of ``exp(t (d^2/dx^2 - 2c x^2 + 2d))``.

    The quadratic form ``cosh(2 nu t)(x^2+y^2) - 2xy`` is evaluated as
    ``(x-y)^2 + (cosh - 1)(x^2+y^2)`` so the small-``t`` heat-kernel limit
    does not cancel.
    """
    sh, chm1, nu = _trig(p, t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    q = (x - y) ** 2 + chm1 * (x**2 + y**2)
    return mehler_prefactor(p, t) * np.exp(-nu * q / (2 * sh))


def mehler_apply(p: MehlerParams, t: float, x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Trapezoid quadrature of ``int K(t, x, y) g(y) dy`` on the uniform
    grid ``x`` (the integrand vanishes at the Dirichlet walls)."""
    h = float(x[1] - x[0])
    K = mehler_kernel(p, t, x[:, None], x[None, :])
    return h * (K @ g)


@dataclass(frozen=True)
class KernelBoundReport:
    max_ratio: float
    C: float
    bounded: bool
    exponent_gap_min: float
    diagonal_gap_max: float
    alpha: float
    t: float


def kernel_bound_check(
    p: MehlerParams, t: float, alpha: float, samples: int = 10000, seed: int = 0, box: float = 10.0
) -> KernelBoundReport:
    """Gaussian bound ``K(t,x,y) <= C mu(x) mu(y)`` with
    ``mu(x) = exp(-alpha nu x^2 / (2 sinh 2 nu t))``.

    It rests on ``cosh(2 nu t)(x^2+y^2) - 2xy >= alpha (x^2+y^2)`` for
    ``alpha <= cosh(2 nu t) - 1``, tight on the diagonal ``x = y`` at the
    largest ``alpha``. Ratios are formed in log space to avoid underflow.
    """
    sh, chm1, nu = _trig(p, t)
    if not 0 < alpha <= chm1 * (1 + 1e-15):
        raise DomainError(f"alpha must lie in (0, cosh(2 nu t) - 1 = {chm1:g}]")
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(-box, box, (2, samples))
    r2 = x**2 + y**2
    q = (x - y) ** 2 + chm1 * r2
    gap = q - alpha * r2
    C = mehler_prefactor(p, t)
    log_ratio = math.log(C) - nu * gap / (2 * sh)
    s = np.linspace(-box, box, 201)
    diag_gap = (chm1 - alpha) * 2 * s**2
    max_ratio = float(np.exp(np.max(log_ratio)))
    return KernelBoundReport(
        max_ratio=max_ratio,
        C=C,
        bounded=bool(max_ratio <= C * (1 + 1e-12)),
        exponent_gap_min=float(np.min(gap)),
        diagonal_gap_max=float(np.max(np.abs(diag_gap))),
        alpha=float(alpha),
        t=float(t),
    )


# -- time stepping -----------------------------------------------------------


def system_matrix(V: PotentialSpec, x: np.ndarray) -> sp.csc_matrix:
    """``[[D - Re V, Im V], [-Im V, D - Re V]]`` with the Dirichlet Laplacian ``D``."""
    n = x.size
    h = float(x[1] - x[0])
    lap = sp.diags([-2 * np.ones(n), np.ones(n - 1), np.ones(n - 1)], [0, 1, -1]) / h**2
    v = V(x)
    R = sp.diags(v.real)
    I = sp.diags(v.imag)
    return sp.bmat([[lap - R, I], [-I, lap - R]], format="csc")


def evolve_system(
    V: PotentialSpec,
    f0: GridFunction,
    T: float,
    dt: float,
    sample_every: Optional[int] = None,
) -> List[Tuple[float, GridFunction]]:
    """Crank-Nicolson for the real form of ``phi_t = phi'' - V phi``.

    Returns ``(t, f)`` samples including ``t = 0``, by default about 50 of
    them. For ``Re V >= 0`` on the grid the discrete L2 norm must not grow;
    growth beyond 1e-6 relative in one step raises :class:`StabilityLoss`.
    """
    if T <= 0 or dt <= 0:
        raise InvalidArgument("T and dt must be positive")
    scale = max(float(np.max(np.sqrt(f0.abs2))), 1e-300)
    if max(math.sqrt(f0.abs2[0]), math.sqrt(f0.abs2[-1])) > DECAY_TOL * max(scale, 1.0):
        raise InvalidArgument("initial data must decay to 1e-12 at the walls")
    x = f0.x
    n = x.size
    M = system_matrix(V, x)
    E = sp.identity(2 * n, format="csc")
    lu = spla.splu((E - 0.5 * dt * M).tocsc())
    B = (E + 0.5 * dt * M).tocsr()
    accretive = bool(np.all(V(x).real >= 0))
    steps = max(1, int(round(T / dt)))
    every = sample_every or max(1, steps // 50)
    u = np.concatenate([f0.f1, f0.f2])
    out = [(0.0, f0)]
    prev = float(np.linalg.norm(u))
    for k in range(1, steps + 1):
        u = lu.solve(B @ u)
        nrm = float(np.linalg.norm(u))
        if accretive and nrm > prev * (1 + 1e-6) + 1e-300:
            raise StabilityLoss(f"norm grew from {prev:.3e} to {nrm:.3e} at step {k}")
        prev = nrm
        if k % every == 0 or k == steps:
            out.append((k * dt, GridFunction(x, u[:n].copy(), u[n:].copy())))
    return out


@dataclass(frozen=True)
class DominationReport:
    max_violation: float
    scale: float
    passed: bool
    params: MehlerParams
    trajectory: List[Tuple[float, GridFunction]]
    rhs: List[np.ndarray]
    tol: float = 1e-6

    @property
    def relative_violation(self) -> float:
        return self.max_violation / self.scale if self.scale > 0 else self.max_violation

    def rows(self):
        for (t, f), r in zip(self.trajectory, self.rhs):
            for j in range(f.x.size):
                yield t, f.x[j], f.f1[j], f.f2[j], f.abs2[j], r[j]


def domination_check(
    V: PotentialSpec,
    f0: GridFunction,
    T: float,
    dt: float = 1e-3,
    params: Optional[MehlerParams] = None,
    n_samples: int = 10,
    tol: float = 1e-6,
) -> DominationReport:
    """Compare ``|f(t)|^2`` from :func:`evolve_system` with the Mehler
    evolution of ``|f0|^2`` at ``n_samples`` times in ``(0, T]``."""
    p = params or MehlerParams.for_potential(V)
    steps = max(1, int(round(T / dt)))
    every = max(1, steps // n_samples)
    traj = evolve_system(V, f0, T, dt, sample_every=every)
    a0 = f0.abs2
    scale = float(np.max(a0))
    rhs = [a0.copy()]
    worst = 0.0 if scale == 0 else -math.inf
    for t, f in traj[1:]:
        r = mehler_apply(p, t, f0.x, a0)
        rhs.append(r)
        if scale > 0:
            worst = max(worst, float(np.max(f.abs2 - r)))
    passed = worst <= tol * scale
    return DominationReport(worst, scale, bool(passed), p, traj, rhs, tol)


# -- reference cases -------------------------------------------------------------

TEST_POTENTIALS = (
    "x^2",
    "i*x^3 + x^2",
    "x^4 + i*x^3",
    "2*x^2 + i*x",
    "(1+0.5i)*x^2",
)


def reference_bumps() -> List[Callable]:
    return [
        lambda x: np.exp(-(x**2) / 2),
        lambda x: np.exp(-((x - 1) ** 2)) * (1 + 0.5j * x),
        lambda x: np.exp(-2 * (x + 0.5) ** 2) * np.exp(1j * 2 * x),
    ]


def domination_suite(N: int = 2000, L: float = 8.0, T: float = 1.0, dt: float = 1e-3) -> List[Dict]:
    out = []
    for text in TEST_POTENTIALS:
        V = parse_potential(text)
        for j, bump in enumerate(reference_bumps()):
            f0 = GridFunction.from_callable(bump, N, L)
            rep = domination_check(V, f0, T, dt)
            out.append(
                {
                    "potential": V.label,
                    "bump": j,
                    "max_violation": rep.max_violation,
                    "relative": rep.relative_violation,
                    "passed": rep.passed,
                }
            )
    return out
