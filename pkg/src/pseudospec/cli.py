"""``pseudospec`` command line.

Settings come from flags, then an optional ``key=value`` config file, then
built-in defaults, in that order of precedence. Every command prints its
resolved configuration (including the seed) as JSON before doing any work.

Exit codes: 0 pass, 1 property violation, 2 numerical-gate failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import io, numkernel
from .errors import PseudospecError
from .operators import (
    Scheme,
    check_admissibility,
    convergence_gate,
    discretize,
    parse_potential,
)

EXIT_OK, EXIT_VIOLATION, EXIT_GATE = 0, 1, 2


@dataclass
class RunConfig:
    potential: str = "1i*x^3 + 1*x^2"
    scheme: str = "hermite"
    N: int = 128
    scale_or_L: Optional[float] = None
    region: Tuple[float, float, float, float] = (-5.0, 30.0, -15.0, 15.0)
    nx: int = 200
    ny: int = 200
    eps_list: Tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
    times: Optional[Tuple[float, ...]] = None
    delta: float = 0.5
    R: float = 20.0
    seed: int = numkernel.SEED
    output_dir: str = "out"
    workers: Optional[int] = None
    family: str = "bender"
    c: float = 1.0
    tau: Tuple[float, ...] = (1.0, 1.2, 1.4, 1.6, 1.8, 2.0)
    T: float = 1.0
    dt: float = 1e-3
    L: float = 8.0
    bump: int = 0
    alpha: Optional[float] = None
    t: float = 0.5
    k_max: int = 10
    n_eig: int = 10
    svg: bool = True

    def as_dict(self) -> Dict:
        return io._plain(asdict(self))


_FLOATS = {"scale_or_L", "delta", "R", "c", "T", "dt", "L", "alpha", "t"}
_INTS = {"N", "nx", "ny", "seed", "workers", "bump", "k_max", "n_eig"}
_TUPLES = {"region", "eps_list", "times", "tau"}


def _coerce(key: str, value):
    if value is None or value == "":
        return None
    if key in _FLOATS:
        return float(value)
    if key in _INTS:
        return int(value)
    if key in _TUPLES:
        if isinstance(value, str):
            return tuple(float(v) for v in value.replace(" ", "").split(",") if v)
        return tuple(float(v) for v in value)
    if key == "svg":
        return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
    return value


def read_config_file(path) -> Dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PseudospecError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        k = k.replace("-", "_")
        if k not in known:
            raise PseudospecError(f"{path}:{n}: unknown key {k!r}")
        out[k] = _coerce(k, v.strip('"'))
    return out


def resolve_config(args: argparse.Namespace, command_defaults: Optional[Dict] = None) -> RunConfig:
    values = asdict(RunConfig())
    values.update(command_defaults or {})
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = _coerce(f.name, v)
    if values["workers"] is None:
        env = os.environ.get("PSEUDOSPEC_WORKERS")
        values["workers"] = int(env) if env else (os.cpu_count() or 1)
    return RunConfig(**values)


def _meta(cfg: RunConfig, **extra) -> Dict:
    # worker count and output location do not change results
    d = {k: v for k, v in cfg.as_dict().items() if k not in ("workers", "output_dir")}
    return {"config_hash": io.config_hash(d), "seed": cfg.seed, **extra}


def _operator(cfg: RunConfig):
    V = parse_potential(cfg.potential)
    return discretize(V, cfg.scheme, cfg.N, cfg.scale_or_L)


def _out(cfg: RunConfig, name: str) -> Path:
    return Path(cfg.output_dir) / name


def _say(msg: str):
    print(msg, flush=True)


# -- commands ----------------------------------------------------------------


def cmd_eig(cfg: RunConfig) -> int:
    op = _operator(cfg)
    gate = convergence_gate(op)
    ev = op.eigenvalues
    passed = {complex(lam) for lam, d in zip(gate.eigenvalues, gate.drift) if d <= gate.tol}
    rows = [(k, lam.real, lam.imag, complex(lam) in passed) for k, lam in enumerate(ev)]
    io.write_csv(
        _out(cfg, "eigenvalues.csv"),
        ("k", "re", "im", "gate_checked"),
        rows,
        _meta(cfg, operator=op.describe(), gate_passed=gate.passed, gate_tol=gate.tol),
    )
    for k, lam in enumerate(ev[: cfg.n_eig]):
        _say(f"lambda_{k} = {lam.real:.10f} {lam.imag:+.3e}i")
    _say(f"convergence gate ({gate.n_check} lowest, N vs 2N, tol {gate.tol:g}): "
         f"{'pass' if gate.passed else 'FAIL'}; max drift {float(np.max(gate.drift)):.3e}")
    return EXIT_OK if gate.passed else EXIT_GATE


def cmd_pseudospectrum(cfg: RunConfig) -> int:
    from .errors import EmptyLevelSet
    from .pseudospectrum import Region, compute_grid, extract_contours

    op = _operator(cfg)
    region = Region(*cfg.region, cfg.nx, cfg.ny)
    grid = compute_grid(op, region, workers=cfg.workers)
    if not grid.trusted.any():
        _say("no trusted node in the window")
        return EXIT_GATE
    meta = _meta(cfg, operator=op.describe(), trust_radius=grid.meta["trust_radius"],
                 trusted_fraction=float(grid.trusted.mean()), window_note=grid.meta["window_note"])
    io.write_csv(_out(cfg, "grid.csv"), io.GRID_COLUMNS, grid.rows(), meta)
    sets = []
    for eps in cfg.eps_list:
        try:
            sets.append(extract_contours(grid, eps))
        except EmptyLevelSet:
            _say(f"eps={eps:g}: empty level set in window")
    io.write_csv(_out(cfg, "contours.csv"), io.CONTOUR_COLUMNS, io.contour_rows(sets), meta)
    if cfg.svg:
        io.write_pseudospectrum_svg(_out(cfg, "pseudospectrum.svg"), grid, sets,
                                    {"potential": op.potential.label, "N": op.N})
    _say(f"grid {cfg.nx}x{cfg.ny}: min sigma_min {float(grid.sigma_min.min()):.3e}; "
         f"{len(sets)} contour levels written to {cfg.output_dir}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from .pseudospectrum import Region, compute_grid, find_epsilon, verify_inclusion

    op = _operator(cfg)
    grid = compute_grid(op, Region(*cfg.region, cfg.nx, cfg.ny), workers=cfg.workers)
    eps = find_epsilon(op, cfg.delta, cfg.R, grid=grid)
    res = verify_inclusion(op, cfg.delta, cfg.R, eps, grid=grid)
    eps_half = find_epsilon(op, cfg.delta / 2, cfg.R, grid=grid)
    ok = res.holds and eps > 0 and eps_half <= eps
    report = {
        "eps": eps,
        "eps_certified_cells": eps - res.cell_margin,
        "cell_margin": res.cell_margin,
        "violations": [[z.real, z.imag] for z in res.violations],
        "eps_half_delta": eps_half,
        "monotone_in_delta": eps_half <= eps,
        "delta": cfg.delta,
        "R": cfg.R,
        "note": res.note,
    }
    io.write_json(_out(cfg, "verify.json"), report, _meta(cfg, operator=op.describe()))
    _say(f"eps = {eps:.6e} (delta={cfg.delta}, R={cfg.R}); violations: {len(res.violations)}; "
         f"eps at delta/2 = {eps_half:.6e}")
    _say(res.note)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_semigroup(cfg: RunConfig) -> int:
    from .semigroup import airy_exact_norm, default_times, norm_curve

    op = _operator(cfg)
    times = np.array(cfg.times) if cfg.times else default_times()
    curve = norm_curve(op, times)
    airy = op.potential.coefficients == (0, 1j)
    exact = airy_exact_norm if airy else None
    cols = io.CURVE_COLUMNS + (("exact_airy",) if airy else ())
    io.write_csv(_out(cfg, "curve.csv"), cols, curve.rows(exact),
                 _meta(cfg, operator=op.describe(), growth_bound_a=curve.growth_bound_a))
    _say(f"growth bound a = {curve.growth_bound_a:.6f} (fit over the later half of {len(times)} times)")
    rc = EXIT_OK
    if check_admissibility(op.potential).re_nonneg and np.any(curve.norms > 1 + 1e-8):
        _say("contraction violated: a norm exceeds 1")
        rc = EXIT_VIOLATION
    if airy:
        dev = float(np.max(np.abs(curve.norms / [exact(t) for t in times] - 1)))
        _say(f"max relative deviation from exp(-t^3/12): {dev:.3e}")
    return rc


def cmd_riesz(cfg: RunConfig) -> int:
    from .riesz import projection_norm_sequence, riesz_projection

    op = _operator(cfg)
    seq = projection_norm_sequence(op, cfg.k_max)
    A = op.matrix
    worst = 0.0
    for k in range(cfg.k_max + 1):
        Q = riesz_projection(op, k).matrix
        nq = numkernel.operator_norm(Q)
        worst = max(worst, numkernel.operator_norm(Q @ Q - Q) / nq)
    report = seq.report()
    report["max_idempotency_defect"] = worst
    io.write_json(_out(cfg, "projections.json"), report, _meta(cfg, operator=op.describe()))
    for row in report["projections"]:
        _say(f"k={row['k']:2d} lambda={row['lambda_re']:.6f} |Q|={row['q_norm']:.4e}")
    _say(f"slope of log|Q_k| over k>=2: {seq.slope:.4f} (pi/sqrt(3) = {math.pi / math.sqrt(3):.4f})")
    return EXIT_OK if worst <= 1e-7 else EXIT_VIOLATION


FAMILY_BANDS = {"airy": (0.6, 0.75), "bender": (1.1, 1.3)}


def cmd_scaling(cfg: RunConfig) -> int:
    from .scaling import (
        DEFAULT_EPS,
        airy_operator,
        bender_operator,
        boundary_crossings,
        counterexample_scan,
        fit_exponent,
    )

    if cfg.family == "counterexample":
        scan = counterexample_scan(cfg.c, cfg.tau)
        io.write_csv(_out(cfg, "scan.csv"), io.SCAN_COLUMNS, scan.rows(), _meta(cfg, **scan.meta))
        for t, zi, r, lr, ok in scan.rows():
            _say(f"tau={t:.3f} z=i*{zi:.4f} |R|={r:.6e} log={lr:+.4f}{'' if ok else ' (untrusted)'}")
        inc = scan.strictly_increasing()
        _say(f"strictly increasing: {inc}; log growth {scan.log_growth():+.4f}")
        return EXIT_OK if inc else EXIT_VIOLATION
    if cfg.family not in FAMILY_BANDS:
        raise PseudospecError(f"unknown family {cfg.family!r}")
    eps = [e for e in cfg.eps_list if e <= 1e-2] or list(DEFAULT_EPS)
    if cfg.family == "airy":
        op = airy_operator()
        b = boundary_crossings(op, eps, re_range=(-2.0, 10.0), n_points=601)
    else:
        op = bender_operator()
        b = boundary_crossings(op, eps, re_range=(0.0, 60.0), n_points=3001)
    fit = fit_exponent(list(zip(eps, b)))
    io.write_json(_out(cfg, f"fit_{cfg.family}.json"), fit.report(), _meta(cfg, operator=op.describe()))
    lo, hi = FAMILY_BANDS[cfg.family]
    _say(f"{cfg.family}: p = {fit.exponent_p:.4f} (band [{lo}, {hi}]), r^2 = {fit.r_squared:.6f}")
    return EXIT_OK if lo <= fit.exponent_p <= hi else EXIT_VIOLATION


def cmd_evolve(cfg: RunConfig) -> int:
    from .evolution import GridFunction, domination_check, reference_bumps

    V = parse_potential(cfg.potential)
    bumps = reference_bumps()
    f0 = GridFunction.from_callable(bumps[cfg.bump % len(bumps)], max(cfg.N, 16), cfg.L)
    rep = domination_check(V, f0, cfg.T, cfg.dt)
    io.write_csv(_out(cfg, "trajectory.csv"), io.TRAJECTORY_COLUMNS, rep.rows(),
                 _meta(cfg, c=rep.params.c_quad, d=rep.params.d_const))
    _say(f"max(|f|^2 - Mehler bound) = {rep.max_violation:.3e} "
         f"({rep.relative_violation:.3e} of max|f0|^2): {'pass' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def cmd_mehler_check(cfg: RunConfig) -> int:
    from .evolution import MehlerParams, kernel_bound_check

    V = parse_potential(cfg.potential)
    p = MehlerParams.for_potential(V)
    nu = p.nu
    alpha = cfg.alpha if cfg.alpha is not None else math.cosh(2 * nu * cfg.t) - 1
    rep = kernel_bound_check(p, cfg.t, alpha, seed=cfg.seed)
    io.write_json(_out(cfg, "mehler.json"), asdict(rep), _meta(cfg))
    _say(f"max K/(mu mu) = {rep.max_ratio:.12e}, C = {rep.C:.12e}; bounded: {rep.bounded}")
    return EXIT_OK if rep.bounded and rep.exponent_gap_min >= -1e-12 else EXIT_VIOLATION


COMMANDS = {
    "eig": (cmd_eig, {}),
    "pseudospectrum": (cmd_pseudospectrum, {}),
    "verify": (cmd_verify, {"N": 192}),
    "semigroup": (cmd_semigroup, {}),
    "riesz": (cmd_riesz, {"potential": "1i*x^3", "N": 192, "scale_or_L": 0.7}),
    "scaling": (cmd_scaling, {}),
    "evolve": (cmd_evolve, {"N": 2000, "potential": "1i*x^3 + 1*x^2"}),
    "mehler-check": (cmd_mehler_check, {"potential": "1i*x^3 + 1*x^2"}),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pseudospec", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--potential")
        p.add_argument("--scheme", choices=[s.value for s in Scheme])
        p.add_argument("--N", type=int)
        p.add_argument("--scale-or-L", dest="scale_or_L", type=float,
                       help="Hermite scale or FD half-width")
        p.add_argument("--region", help="re_min,re_max,im_min,im_max")
        p.add_argument("--nx", type=int)
        p.add_argument("--ny", type=int)
        p.add_argument("--eps", dest="eps_list", help="comma-separated eps values")
        p.add_argument("--times", help="comma-separated times")
        p.add_argument("--delta", type=float)
        p.add_argument("--R", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--workers", type=int)
        p.add_argument("--family", choices=["airy", "bender", "counterexample"])
        p.add_argument("--c", type=float)
        p.add_argument("--tau", help="comma-separated tau values")
        p.add_argument("--T", type=float)
        p.add_argument("--dt", type=float)
        p.add_argument("--L", type=float, help="half-width of the evolution box")
        p.add_argument("--bump", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--t", type=float)
        p.add_argument("--k-max", dest="k_max", type=int)
        p.add_argument("--n-eig", dest="n_eig", type=int)
        p.add_argument("--no-svg", dest="svg", action="store_const", const=False)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    fn, defaults = COMMANDS[args.command]
    try:
        cfg = resolve_config(args, defaults)
        _say(json.dumps({"command": args.command, "config": cfg.as_dict()}, sort_keys=True))
        return fn(cfg)
    except PseudospecError as exc:
        _say(f"error: {type(exc).__name__}: {exc}")
        return EXIT_GATE


if __name__ == "__main__":
    sys.exit(main())
