"""Complex polynomial potentials and their discretized Schroedinger operators.

Two schemes are provided for ``-k d^2/dx^2 + V(x)``:

* Galerkin in the Hermite-function basis (``hermite_discretize``), banded
  via the ladder-operator algebra, used for everything with decaying
  eigenfunctions;
* second-order finite differences on ``[-L, L]`` with Dirichlet walls
  (``fd_discretize``), used as a cross-check and for the Airy operator.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
import scipy.sparse as sp

from . import numkernel
from .errors import InvalidArgument


@dataclass(frozen=True)
class PotentialSpec:
    """``V(x) = sum_j coefficients[j] * x**j``."""

    coefficients: Tuple[complex, ...]
    label: str = ""

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coefficients)
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        if len(coeffs) < 2:
            raise InvalidArgument("potential must have degree >= 1")
        object.__setattr__(self, "coefficients", coeffs)
        if not self.label:
            object.__setattr__(self, "label", format_potential(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=np.complex128)
        for c in reversed(self.coefficients):
            out = out * x + c
        return out

    @property
    def real_coefficients(self) -> np.ndarray:
        return np.array([c.real for c in self.coefficients])

    @property
    def imag_coefficients(self) -> np.ndarray:
        return np.array([c.imag for c in self.coefficients])

    def derivative(self) -> np.ndarray:
        return P.polyder(np.array(self.coefficients))

    @property
    def is_real(self) -> bool:
        return all(c.imag == 0 for c in self.coefficients)


def format_potential(coeffs: Sequence[complex]) -> str:
    terms = []
    for j, c in enumerate(coeffs):
        if c == 0:
            continue
        if c.imag == 0:
            lit = f"{c.real:g}"
        elif c.real == 0:
            lit = f"{c.imag:g}i"
        else:
            lit = f"({c.real:g}{c.imag:+g}i)"
        terms.append(lit if j == 0 else f"{lit}*x^{j}")
    out = ""
    for k, t in enumerate(reversed(terms)):
        if k == 0:
            out = t
        elif t.startswith("-"):
            out += " - " + t[1:]
        else:
            out += " + " + t
    return out


_TERM = re.compile(
    r"""^(?P<coef>\([^()]*\)|[0-9.eE+\-]*i?)?   # coefficient, maybe parenthesised
        (?:\*?x(?:\^(?P<pow>\d+))?)?$           # optional x or x^k
    """,
    re.VERBOSE,
)


def _split_terms(s: str):
    terms, depth, start = [], 0, 0
    for i, ch in enumerate(s):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch in "+-" and depth == 0 and i > start and s[i - 1] not in "eE*(^":
            terms.append(s[start:i])
            start = i
    terms.append(s[start:])
    return [t for t in terms if t]


def _complex_literal(text: str) -> complex:
    text = text.strip("()")
    if text in ("", "+"):
        return 1.0
    if text == "-":
        return -1.0
    text = text.replace("i", "j")
    if text.endswith("j") and (len(text) == 1 or text[-2] in "+-"):
        text = text[:-1] + "1j"
    return complex(text)


def parse_potential(text: str, label: str = "") -> PotentialSpec:
    """Parse the CLI mini-language, e.g. ``"1i*x^3 + 1*x^2"``.

    A term is ``<complex>*x^<int>``; the coefficient may be ``a``, ``bi`` or
    ``(a+bi)``, the ``*`` and ``^1`` may be dropped and a bare number is the
    constant term.
    """
    s = text.replace(" ", "")
    if not s:
        raise InvalidArgument("empty potential")
    coeffs: dict = {}
    for term in _split_terms(s):
        sign = 1.0
        if term[0] in "+-":
            sign = -1.0 if term[0] == "-" else 1.0
            term = term[1:]
        m = _TERM.match(term)
        if m is None or not term:
            raise InvalidArgument(f"cannot parse term {term!r} in {text!r}")
        has_x = "x" in term
        power = int(m.group("pow")) if m.group("pow") else (1 if has_x else 0)
        coef_txt = m.group("coef") or ""
        if not has_x and not coef_txt:
            raise InvalidArgument(f"cannot parse term {term!r} in {text!r}")
        try:
            c = _complex_literal(coef_txt)
        except ValueError as exc:
            raise InvalidArgument(f"bad coefficient {coef_txt!r}") from exc
        coeffs[power] = coeffs.get(power, 0) + sign * c
    deg = max(coeffs)
    return PotentialSpec(tuple(coeffs.get(j, 0) for j in range(deg + 1)), label or text)


# -- admissibility -----------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityReport:
    re_nonneg: bool
    shift_d: float
    quad_c: float
    grad_bound_ab: Optional[Tuple[float, float]]
    unbounded: bool
    min_re: float = 0.0

    @property
    def admissible(self) -> bool:
        """Hypotheses of the main inclusion result (Re V >= c x^2 - d, c > 0)."""
        return self.unbounded and self.re_nonneg and self.quad_c > 0

    @property
    def warnings(self) -> Tuple[str, ...]:
        out = []
        if not self.re_nonneg:
            out.append("Re V is unbounded below; the operator is not m-accretive")
        if self.quad_c <= 0:
            out.append("no quadratic lower bound Re V >= c x^2 - d with c > 0")
        if not self.unbounded:
            out.append("V is bounded at infinity")
        return tuple(out)


def _poly_min(coeffs: np.ndarray, xs: np.ndarray) -> float:
    """Minimum of a real polynomial over the samples and its real critical points."""
    crit = P.polyroots(P.polyder(coeffs)) if len(coeffs) > 2 else np.array([])
    crit = crit[np.abs(crit.imag) < 1e-9].real if crit.size else crit
    pts = np.concatenate([xs, np.asarray(crit, dtype=float)])
    return float(np.min(P.polyval(pts, coeffs)))


def _bounded_below(coeffs: np.ndarray) -> bool:
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if coeffs.size <= 1:
        return True
    deg = coeffs.size - 1
    return bool(deg % 2 == 0 and coeffs[-1] > 0)


def check_admissibility(
    V: PotentialSpec, sample_range: float = 10.0, n_samples: int = 4001
) -> AdmissibilityReport:
    """Test the accretivity / growth hypotheses on a potential.

    Advisory only: callers decide what to do with an inadmissible potential.
    """
    if sample_range <= 0:
        raise InvalidArgument("sample_range must be positive")
    xs = np.linspace(-sample_range, sample_range, n_samples)
    re = V.real_coefficients
    unbounded = V.degree >= 1
    re_nonneg = _bounded_below(re)
    min_re = _poly_min(re, xs)

    # geometric sweep for the quadratic lower bound; only c with Re V - c x^2
    # bounded below qualify. Real parts of degree > 2 admit every c, so the
    # sweep is capped at 1 there to keep d moderate.
    re_trim = np.trim_zeros(re, "b")
    deg_re = re_trim.size - 1
    if deg_re == 2 and re_trim[2] > 0:
        c_cap = float(re_trim[2])
    elif deg_re > 2 and _bounded_below(re_trim):
        c_cap = 1.0
    else:
        c_cap = 0.0
    quad_c = 0.0
    if c_cap > 0:
        k = np.arange(-120, 1)
        sweep = c_cap * 2.0 ** (k / 8.0)
        for c in sweep[::-1]:
            slack = re.copy()
            if slack.size < 3:
                slack = np.pad(slack, (0, 3 - slack.size))
            slack[2] -= c
            if _bounded_below(slack) or np.allclose(np.trim_zeros(slack, "b"), 0):
                quad_c = float(c)
                break
    if quad_c > 0:
        slack = np.pad(re, (0, max(0, 3 - re.size))).copy()
        slack[2] -= quad_c
        shift_d = max(0.0, -_poly_min(slack, xs))
    else:
        shift_d = max(0.0, -min_re)

    # |V'|^2 <= a + b |V|^2 with b = 1: a = max over R of |V'|^2 - |V|^2,
    # a real polynomial with negative leading coefficient.
    v = np.array(V.coefficients)
    dv = V.derivative()
    abs2 = lambda c: np.real(P.polymul(c, np.conj(c)))
    diff = P.polysub(abs2(dv), abs2(v))
    a = max(0.0, -_poly_min(-diff, xs))
    return AdmissibilityReport(
        re_nonneg=bool(re_nonneg),
        shift_d=float(shift_d),
        quad_c=quad_c,
        grad_bound_ab=(float(a), 1.0) if unbounded else None,
        unbounded=unbounded,
        min_re=min_re,
    )


# -- discretization ----------------------------------------------------------


class Scheme(str, enum.Enum):
    HERMITE = "hermite"
    FD = "fd"


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    matrix: np.ndarray
    scheme: Scheme
    basis_size: int
    scale_or_L: float
    potential: PotentialSpec
    kinetic: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def N(self) -> int:
        return self.basis_size

    @cached_property
    def norm(self) -> float:
        return numkernel.operator_norm(self.matrix)

    @property
    def trust_radius(self) -> float:
        """Pseudospectra are trusted only inside ``|z| <= 0.5 ||A||``."""
        return 0.5 * self.norm

    def is_trusted(self, z) -> np.ndarray:
        return np.abs(np.asarray(z)) <= self.trust_radius

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues sorted by increasing real part."""
        w = numkernel.eigenvalues(self.matrix).values
        return w[np.lexsort((w.imag, w.real))]

    @property
    def nodes(self) -> np.ndarray:
        if self.scheme is not Scheme.FD:
            raise InvalidArgument("grid nodes exist only for the FD scheme")
        return fd_grid(self.N, self.scale_or_L)

    def describe(self) -> dict:
        return {
            "potential": self.potential.label,
            "scheme": self.scheme.value,
            "N": self.N,
            "scale_or_L": self.scale_or_L,
            "kinetic": self.kinetic,
        }


def default_scale(V: PotentialSpec) -> float:
    d = V.degree
    return float((d + 1) ** (-1.0 / (d + 2)))


def _hermite_ladder(M: int, scale: float, kinetic: float):
    k = np.arange(M - 1)
    X = np.zeros((M, M))
    X[k, k + 1] = X[k + 1, k] = scale * np.sqrt((k + 1) / 2.0)
    P2 = np.diag((2 * np.arange(M) + 1) / (2 * scale**2))
    k2 = np.arange(M - 2)
    P2[k2, k2 + 2] = P2[k2 + 2, k2] = -np.sqrt((k2 + 1) * (k2 + 2)) / (2 * scale**2)
    return X, kinetic * P2


def hermite_discretize(
    V: PotentialSpec, N: int, scale: Optional[float] = None, kinetic: float = 1.0
) -> OperatorMatrix:
    """Galerkin matrix of ``-k d^2/dx^2 + V`` in scaled Hermite functions.

    Powers of the position matrix are formed on an enlarged basis and then
    truncated, so every retained entry is the exact Galerkin integral.
    """
    if N < 4:
        raise InvalidArgument("Hermite discretization needs N >= 4")
    if scale is None:
        scale = default_scale(V)
    if scale <= 0:
        raise InvalidArgument("scale must be positive")
    M = N + V.degree + 2
    X, A = _hermite_ladder(M, scale, kinetic)
    A = A.astype(np.complex128)
    Xp = np.eye(M)
    for j, c in enumerate(V.coefficients):
        if j > 0:
            Xp = Xp @ X
        if c != 0:
            A = A + c * Xp
    return OperatorMatrix(
        np.ascontiguousarray(A[:N, :N]), Scheme.HERMITE, N, float(scale), V, kinetic
    )


def fd_grid(N: int, L: float) -> np.ndarray:
    """Interior nodes ``x_j = -L + j h``, ``h = 2L/(N+1)``."""
    if N < 8:
        raise InvalidArgument("finite-difference discretization needs N >= 8")
    if L <= 0:
        raise InvalidArgument("L must be positive")
    h = 2 * L / (N + 1)
    return -L + h * np.arange(1, N + 1)


def fd_sparse(V: PotentialSpec, N: int, L: float, kinetic: float = 1.0) -> sp.csc_matrix:
    """Sparse tridiagonal form of :func:`fd_discretize` for large ``N``."""
    x = fd_grid(N, L)
    h = x[1] - x[0]
    off = -kinetic / h**2 * np.ones(N - 1)
    return sp.diags(
        [2 * kinetic / h**2 + V(x), off, off], [0, 1, -1], format="csc", dtype=np.complex128
    )


def fd_discretize(
    V: PotentialSpec, N: int, L: float, kinetic: float = 1.0
) -> OperatorMatrix:
    """Central differences with Dirichlet walls at ``+-L`` (see :func:`fd_grid`)."""
    A = fd_sparse(V, N, L, kinetic).toarray()
    return OperatorMatrix(A, Scheme.FD, N, float(L), V, kinetic)


def discretize(
    V: PotentialSpec,
    scheme,
    N: int,
    scale_or_L: Optional[float] = None,
    kinetic: float = 1.0,
) -> OperatorMatrix:
    scheme = Scheme(scheme)
    if scheme is Scheme.HERMITE:
        return hermite_discretize(V, N, scale_or_L, kinetic)
    if scale_or_L is None:
        raise InvalidArgument("FD scheme needs the half-width L")
    return fd_discretize(V, N, scale_or_L, kinetic)


def bandwidth(A: np.ndarray, tol: float = 0.0) -> int:
    nz = np.argwhere(np.abs(A) > tol)
    return int(np.max(np.abs(nz[:, 0] - nz[:, 1]))) if nz.size else 0


# -- convergence gate --------------------------------------------------------


def _drift(low: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Distance from each of ``low`` to the nearest eigenvalue in ``ref``."""
    return np.min(np.abs(low[:, None] - ref[None, :]), axis=1)


@dataclass(frozen=True)
class GateReport:
    passed: bool
    drift: np.ndarray
    eigenvalues: np.ndarray
    tol: float
    n_check: int


def convergence_gate(
    op: OperatorMatrix, n_check: int = 6, tol: Optional[float] = None
) -> GateReport:
    """Compare the smallest-modulus eigenvalues of ``op`` with those at ``2N``.

    Modulus ordering, as in :func:`trust_index`, keeps spurious truncation
    modes with small real part out of the checked set. ``tol`` defaults to 1e-6 absolute for Hermite and 1e-3 relative for FD,
    whose second-order error makes a 1e-6 gate unreachable.
    """
    fine = discretize(op.potential, op.scheme, 2 * op.N, op.scale_or_L, op.kinetic)
    w = op.eigenvalues
    low = w[np.argsort(np.abs(w), kind="stable")][:n_check]
    drift = _drift(low, fine.eigenvalues)
    if tol is None:
        tol = 1e-6 if op.scheme is Scheme.HERMITE else 1e-3
        if op.scheme is Scheme.FD:
            drift = drift / np.maximum(np.abs(low), 1.0)
    return GateReport(bool(np.all(drift <= tol)), drift, low, tol, n_check)


def trust_index(op: OperatorMatrix, tol: float = 1e-6) -> int:
    """Largest ``k`` such that the ``k+1`` smallest-modulus eigenvalues all
    move by at most ``tol`` when ``N`` is doubled.

    Ordering by modulus keeps the large spurious modes of Hermite truncations
    out of the count.
    """
    fine = discretize(op.potential, op.scheme, 2 * op.N, op.scale_or_L, op.kinetic)
    w = op.eigenvalues[np.argsort(np.abs(op.eigenvalues), kind="stable")]
    drift = _drift(w, fine.eigenvalues)
    bad = np.nonzero(drift > tol)[0]
    return int(bad[0] - 1) if bad.size else op.N - 1


def converged_eigenvalues(op: OperatorMatrix, tol: float = 1e-6) -> np.ndarray:
    """Eigenvalues (by real part) that survive doubling ``N``.

    Hermite truncations of cubic potentials produce spurious eigenvalues of
    huge modulus; this drops them.
    """
    fine = discretize(op.potential, op.scheme, 2 * op.N, op.scale_or_L, op.kinetic)
    drift = _drift(op.eigenvalues, fine.eigenvalues)
    rel = drift / np.maximum(np.abs(op.eigenvalues), 1.0)
    return op.eigenvalues[rel <= tol]


def tune_scale(
    V: PotentialSpec,
    N: int,
    factors: Sequence[float] = (0.7, 0.85, 1.0, 1.15, 1.3),
    n_check: int = 6,
    kinetic: float = 1.0,
) -> float:
    """Pick the Hermite scale with the smallest N -> 2N drift of the lowest modes.

    Candidates are the default heuristic times ``factors``; ties go to the
    candidate closest to the heuristic.
    """
    base = default_scale(V)
    best, best_drift = base, np.inf
    order = sorted(factors, key=lambda f: abs(f - 1.0))
    for f in order:
        op = hermite_discretize(V, N, base * f, kinetic)
        fine = hermite_discretize(V, 2 * N, base * f, kinetic)
        d = float(np.max(_drift(op.eigenvalues[:n_check], fine.eigenvalues)))
        if d < best_drift * 0.5 or (d <= 1e-9 and best_drift > 1e-9):
            best, best_drift = base * f, d
    return float(best)
