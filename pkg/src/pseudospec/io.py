"""CSV, JSON and SVG writers.

Every file starts with comment lines carrying the hash of the resolved run
configuration and any trust metadata, so outputs can be traced to the
settings that produced them. Writers are deterministic: identical inputs give
byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np


def config_hash(config: Dict) -> str:
    blob = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _plain(obj):
    """Convert numpy scalars/arrays and complex numbers into JSON types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _plain(obj.real), "im": _plain(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _header_lines(meta: Optional[Dict]) -> List[str]:
    lines = []
    for k, v in sorted((meta or {}).items()):
        text = v if isinstance(v, str) else json.dumps(_plain(v), sort_keys=True)
        lines.append(f"# {k}: {text}")
    return lines


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], meta: Optional[Dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="\n") as fh:
        for line in _header_lines(meta):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_csv(path) -> np.ndarray:
    """Numeric body of a CSV written by :func:`write_csv`."""
    with open(path) as fh:
        skip = 1 + sum(1 for line in fh if line.startswith("#"))
    return np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=skip))


def write_json(path, payload: Dict, meta: Optional[Dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"_meta": _plain(meta or {}), **_plain(payload)}
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return path


# -- grid/contour/curve tables -----------------------------------------------

GRID_COLUMNS = ("re", "im", "sigma_min", "log10_resnorm", "trusted")
CONTOUR_COLUMNS = ("eps", "polyline_id", "re", "im")
CURVE_COLUMNS = ("t", "norm", "log_norm")
SCAN_COLUMNS = ("tau", "z_im", "resnorm", "log_resnorm", "trusted")
TRAJECTORY_COLUMNS = ("t", "x", "f1", "f2", "abs2", "rhs_bound")


def contour_rows(contour_sets) -> Iterable[Sequence]:
    for cs in contour_sets:
        for pid, line in enumerate(cs.polylines):
            for p in line:
                yield cs.eps, pid, p.real, p.imag


# -- SVG ---------------------------------------------------------------------


class SvgCanvas:
    """Tiny SVG writer mapping a complex-plane window onto pixels."""

    def __init__(self, re_min, re_max, im_min, im_max, width: int = 800, height: int = 600, pad: int = 40):
        self.box = (re_min, re_max, im_min, im_max)
        self.width, self.height, self.pad = width, height, pad
        self.items: List[str] = []

    def xy(self, z: complex):
        re_min, re_max, im_min, im_max = self.box
        w = self.width - 2 * self.pad
        h = self.height - 2 * self.pad
        x = self.pad + (z.real - re_min) / (re_max - re_min) * w
        y = self.pad + (im_max - z.imag) / (im_max - im_min) * h
        return round(x, 3), round(y, 3)

    def rect(self, z0: complex, z1: complex, fill: str, opacity: float = 0.2):
        (x0, y0), (x1, y1) = self.xy(z0), self.xy(z1)
        self.items.append(
            f'<rect x="{min(x0, x1)}" y="{min(y0, y1)}" width="{abs(x1 - x0)}" '
            f'height="{abs(y1 - y0)}" fill="{fill}" fill-opacity="{opacity}"/>'
        )

    def polyline(self, pts: Sequence[complex], stroke: str = "black", width: float = 1.0):
        coords = " ".join("%s,%s" % self.xy(complex(p)) for p in pts)
        self.items.append(
            f'<polyline points="{coords}" fill="none" stroke="{stroke}" stroke-width="{width}"/>'
        )

    def circle(self, z: complex, r: float = 3.0, fill: str = "red"):
        x, y = self.xy(complex(z))
        self.items.append(f'<circle cx="{x}" cy="{y}" r="{r}" fill="{fill}"/>')

    def text(self, x: float, y: float, s: str, size: int = 12):
        self.items.append(f'<text x="{x}" y="{y}" font-size="{size}">{escape(s)}</text>')

    def render(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">'
        )
        return "\n".join(['<?xml version="1.0" encoding="UTF-8"?>', head, *self.items, "</svg>"]) + "\n"


_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def write_pseudospectrum_svg(path, grid, contour_sets, meta: Optional[Dict] = None) -> Path:
    """Contours, eigenvalue markers and grey shading over untrusted cells."""
    r = grid.region
    cv = SvgCanvas(r.re_min, r.re_max, r.im_min, r.im_max)
    hx, hy = r.spacing
    Z = grid.nodes
    # shade untrusted nodes row by row as runs
    for j in range(r.ny):
        row = ~grid.trusted[j]
        i = 0
        while i < r.nx:
            if row[i]:
                k = i
                while k + 1 < r.nx and row[k + 1]:
                    k += 1
                cv.rect(Z[j, i] - (hx + 1j * hy) / 2, Z[j, k] + (hx + 1j * hy) / 2, "grey")
                i = k + 1
            else:
                i += 1
    for n, cs in enumerate(contour_sets):
        for line in cs.polylines:
            cv.polyline(line, stroke=_PALETTE[n % len(_PALETTE)])
    for lam in grid.eigenvalues:
        if r.re_min <= lam.real <= r.re_max and r.im_min <= lam.imag <= r.im_max:
            cv.circle(lam)
    y = 14
    for k, v in sorted((meta or {}).items()):
        cv.text(4, y, f"{k}: {v}", size=10)
        y += 12
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(cv.render())
    return path
