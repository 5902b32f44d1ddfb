"""Resolvent-norm grids, epsilon level curves and the inclusion verifier.

All grid work goes through one complex Schur factorization ``A = Z T Z^*``;
since ``Z`` is unitary, ``sigma_min(zI - A) = sigma_min(zI - T)`` and each
node costs a few O(n^2) triangular solves instead of an O(n^3) SVD.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import numkernel
from .errors import EmptyLevelSet, InvalidArgument, NoTrustedNodes
from .operators import OperatorMatrix

GRID_CAP = 4_000_000
WINDOW_NOTE = (
    "inclusion certified on the sampled window only; points outside the window "
    "(in particular larger |Im z|) are not checked"
)

MatrixLike = Union[OperatorMatrix, np.ndarray]


def _matrix(A: MatrixLike) -> np.ndarray:
    return A.matrix if isinstance(A, OperatorMatrix) else numkernel.as_matrix(A, square=True)


def _norm(A: MatrixLike) -> float:
    return A.norm if isinstance(A, OperatorMatrix) else numkernel.operator_norm(A)


def default_workers() -> int:
    env = os.environ.get("PSEUDOSPEC_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class Region:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int
    ny: int
    cap: int = GRID_CAP

    def __post_init__(self):
        if not (self.re_min < self.re_max):
            raise InvalidArgument("need re_min < re_max")
        if self.ny > 1 and not (self.im_min < self.im_max):
            raise InvalidArgument("need im_min < im_max")
        if self.nx < 1 or self.ny < 1:
            raise InvalidArgument("nx, ny must be positive")
        if self.nx * self.ny > self.cap:
            raise InvalidArgument(f"{self.nx}x{self.ny} grid exceeds cap {self.cap}")

    @classmethod
    def line(cls, re_min: float, re_max: float, im: float, n: int) -> "Region":
        """A single horizontal row of nodes at ``Im z = im``."""
        return cls(re_min, re_max, im, im, n, 1)

    @property
    def re(self) -> np.ndarray:
        return np.linspace(self.re_min, self.re_max, self.nx)

    @property
    def im(self) -> np.ndarray:
        if self.ny == 1:
            return np.array([self.im_min])
        return np.linspace(self.im_min, self.im_max, self.ny)

    @property
    def nodes(self) -> np.ndarray:
        """Complex nodes, shape ``(ny, nx)``; row ``j`` has ``Im z = im[j]``."""
        return self.re[None, :] + 1j * self.im[:, None]

    @property
    def spacing(self) -> Tuple[float, float]:
        hx = (self.re_max - self.re_min) / max(self.nx - 1, 1)
        hy = (self.im_max - self.im_min) / max(self.ny - 1, 1) if self.ny > 1 else 0.0
        return hx, hy

    @property
    def diameter(self) -> float:
        return math.hypot(self.re_max - self.re_min, self.im_max - self.im_min)


@dataclass(frozen=True, eq=False)
class PseudospectrumGrid:
    region: Region
    sigma_min: np.ndarray  # (ny, nx)
    trusted: np.ndarray  # (ny, nx) bool
    eigenvalues: np.ndarray
    norm: float
    meta: Dict = field(default_factory=dict)

    @property
    def nodes(self) -> np.ndarray:
        return self.region.nodes

    @property
    def log10_resnorm(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return -np.log10(self.sigma_min)

    def rows(self):
        """Row-major ``(re, im, sigma_min, log10_resnorm, trusted)`` tuples."""
        z = self.nodes.ravel()
        s = self.sigma_min.ravel()
        lr = self.log10_resnorm.ravel()
        t = self.trusted.ravel()
        for k in range(z.size):
            yield z[k].real, z[k].imag, s[k], lr[k], bool(t[k])


def resolvent_norm(A: MatrixLike, z: complex) -> float:
    """``||(z - A)^{-1}||``; ``math.inf`` when ``sigma_min < 1e-14 ||A||``."""
    M = _matrix(A)
    n = M.shape[0]
    s = numkernel.smallest_singular_value(z * np.eye(n) - M)
    if s < 1e-14 * _norm(A):
        return math.inf
    return 1.0 / s


def _sweep_rows(T: np.ndarray, Z: np.ndarray, rows: Sequence[int]) -> Dict[int, np.ndarray]:
    out = {}
    for j in rows:
        v = None
        vals = np.empty(Z.shape[1])
        for i in range(Z.shape[1]):
            vals[i], v = numkernel.shifted_triangular_sigma_min(T, Z[j, i], v)
        out[j] = vals
    return out


def compute_grid(
    A: MatrixLike,
    region: Region,
    workers: Optional[int] = None,
    trust_radius: Optional[float] = None,
) -> PseudospectrumGrid:
    """sigma_min(zI - A) at every node of ``region``.

    Nodes with ``|z|`` beyond the trust radius (half the matrix norm for an
    :class:`OperatorMatrix`, unlimited for a bare matrix) are flagged
    untrusted. Rows are swept independently, warm-starting along each row.
    """
    M = _matrix(A)
    T, _ = numkernel.schur(M)
    Z = region.nodes
    workers = workers or default_workers()
    chunks = [list(range(j, region.ny, workers)) for j in range(min(workers, region.ny))]
    sigma = np.empty(Z.shape)
    if workers == 1:
        results = [_sweep_rows(T, Z, range(region.ny))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda rows: _sweep_rows(T, Z, rows), chunks))
    for res in results:
        for j, vals in res.items():
            sigma[j] = vals
    if trust_radius is None:
        trust_radius = A.trust_radius if isinstance(A, OperatorMatrix) else math.inf
    trusted = np.abs(Z) <= trust_radius
    meta = {"trust_radius": trust_radius, "window_note": WINDOW_NOTE}
    if isinstance(A, OperatorMatrix):
        meta["operator"] = A.describe()
    eig = np.diag(T).copy()
    eig = eig[np.lexsort((eig.imag, eig.real))]
    return PseudospectrumGrid(region, sigma, trusted, eig, _norm(A), meta)


# -- level curves ------------------------------------------------------------


@dataclass(frozen=True)
class ContourSet:
    eps: float
    polylines: List[np.ndarray]  # complex points; closed curves repeat the first point

    def __len__(self) -> int:
        return len(self.polylines)

    def closed(self) -> List[bool]:
        return [len(p) > 2 and p[0] == p[-1] for p in self.polylines]


# corner order: 0=(j,i) 1=(j,i+1) 2=(j+1,i+1) 3=(j+1,i)
# edges: 0 bottom (0-1), 1 right (1-2), 2 top (3-2), 3 left (0-3)
_EDGE_CORNERS = ((0, 1), (1, 2), (3, 2), (0, 3))
_CORNER_EDGES = ((3, 0), (0, 1), (1, 2), (2, 3))


def _edge_key(j: int, i: int, e: int):
    if e == 0:
        return ("h", j, i)
    if e == 1:
        return ("v", j, i + 1)
    if e == 2:
        return ("h", j + 1, i)
    return ("v", j, i)


def extract_contours(grid: PseudospectrumGrid, eps: float) -> ContourSet:
    """Marching-squares polylines of ``sigma_min = eps``.

    Crossings are placed by linear interpolation along cell edges. In a saddle
    cell the average of the four corners decides which diagonal pair is
    connected.
    """
    S = grid.sigma_min
    if grid.region.ny < 2 or grid.region.nx < 2:
        raise InvalidArgument("contours need a 2-D grid")
    Z = grid.nodes
    inside = S < eps
    if inside.all() or not inside.any():
        raise EmptyLevelSet(f"no cell straddles eps={eps:g}")

    points: Dict[tuple, complex] = {}
    adj: Dict[tuple, List[tuple]] = {}

    def crossing(j, i, e):
        key = _edge_key(j, i, e)
        if key not in points:
            a, b = _EDGE_CORNERS[e]
            (ja, ia), (jb, ib) = corner_idx[a], corner_idx[b]
            va, vb = S[j + ja, i + ia], S[j + jb, i + ib]
            t = (eps - va) / (vb - va)
            za, zb = Z[j + ja, i + ia], Z[j + jb, i + ib]
            points[key] = za + t * (zb - za)
        return key

    def link(k1, k2):
        adj.setdefault(k1, []).append(k2)
        adj.setdefault(k2, []).append(k1)

    corner_idx = ((0, 0), (0, 1), (1, 1), (1, 0))
    ny, nx = S.shape
    mixed = np.argwhere(
        (inside[:-1, :-1] != inside[:-1, 1:])
        | (inside[:-1, :-1] != inside[1:, :-1])
        | (inside[:-1, :-1] != inside[1:, 1:])
    )
    if mixed.size == 0:
        raise EmptyLevelSet(f"no cell straddles eps={eps:g}")
    for j, i in mixed:
        c = [inside[j + dj, i + di] for dj, di in corner_idx]
        cut = [e for e, (a, b) in enumerate(_EDGE_CORNERS) if c[a] != c[b]]
        if len(cut) == 2:
            link(crossing(j, i, cut[0]), crossing(j, i, cut[1]))
            continue
        # saddle: diagonal corners share status
        centre_inside = np.mean([S[j + dj, i + di] for dj, di in corner_idx]) < eps
        isolate = (1, 3) if centre_inside == c[0] else (0, 2)
        for corner in isolate:
            e1, e2 = _CORNER_EDGES[corner]
            link(crossing(j, i, e1), crossing(j, i, e2))

    polylines = []
    seen = set()
    starts = [k for k, v in adj.items() if len(v) == 1] + list(adj)
    for start in starts:
        if start in seen:
            continue
        line = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [k for k in adj[cur] if k != prev and (k not in seen or (k == start and len(line) > 2))]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            line.append(cur)
            if cur == start:
                break
            seen.add(cur)
        polylines.append(np.array([points[k] for k in line]))
    return ContourSet(float(eps), polylines)


# -- inclusion ---------------------------------------------------------------


@dataclass(frozen=True)
class InclusionResult:
    holds: bool
    violations: List[complex]
    eps: float
    delta: float
    R: float
    cell_margin: float
    note: str = WINDOW_NOTE

    def __bool__(self) -> bool:
        return self.holds


def _grid_for(A: MatrixLike, grid: Optional[PseudospectrumGrid], region: Optional[Region]):
    if grid is not None:
        return grid
    if region is None:
        raise InvalidArgument("pass a precomputed grid or a region")
    return compute_grid(A, region)


def exempt_mask(grid: PseudospectrumGrid, delta: float, R: float) -> np.ndarray:
    """Nodes in ``{Re z >= R}`` or within ``delta`` of an eigenvalue."""
    Z = grid.nodes
    mask = Z.real >= R
    for lam in grid.eigenvalues:
        mask |= np.abs(Z - lam) < delta
    return mask


def verify_inclusion(
    A: MatrixLike,
    delta: float,
    R: float,
    eps: float,
    grid: Optional[PseudospectrumGrid] = None,
    region: Optional[Region] = None,
) -> InclusionResult:
    """Check that every trusted node with ``sigma_min < eps`` lies in the
    half-plane ``Re z >= R`` or in a ``delta``-disk around an eigenvalue."""
    grid = _grid_for(A, grid, region)
    bad = grid.trusted & ~exempt_mask(grid, delta, R) & (grid.sigma_min < eps)
    hx, hy = grid.region.spacing
    return InclusionResult(
        holds=not bad.any(),
        violations=[complex(z) for z in grid.nodes[bad]],
        eps=eps,
        delta=delta,
        R=R,
        cell_margin=0.5 * math.hypot(hx, hy),
    )


def find_epsilon(
    A: MatrixLike,
    delta: float,
    R: float,
    grid: Optional[PseudospectrumGrid] = None,
    region: Optional[Region] = None,
) -> float:
    """Largest eps for which :func:`verify_inclusion` holds on the grid.

    This is exactly the minimum of sigma_min over trusted nodes outside the
    exempt set, so no bisection is needed.
    """
    grid = _grid_for(A, grid, region)
    pool = grid.trusted & ~exempt_mask(grid, delta, R)
    if not pool.any():
        raise NoTrustedNodes("no trusted node outside the exempt set")
    return float(np.min(grid.sigma_min[pool]))
