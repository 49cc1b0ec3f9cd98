"""Command-line front end.

Every command prints one JSON report document and exits with

    0  every non-informational check passed
    1  some check failed
    2  usage error (bad flags, missing fields, n < 2k)
    3  domain or resolution error during the run
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, symfun
from .boundary import bk_of_field, bk_umbilic, ellipticity_report, solve_h
from .conformal import cone_along, mean_curvature, schouten, tangential_schouten
from .errors import ConflabError, DomainError, NoRootError
from .fields import BubbleParams, ScalarField, bubble_field, parse_field
from .liouville import (
    certify_bubble,
    ball_checks,
    sigma_normalization,
    solve_family_for_c0,
    theorem_constraint_report,
)
from .mobius import (
    GridSpec,
    MobiusInversion,
    invariance_check_bk,
    invariance_check_sigma,
    lambda_bar,
    verify_kelvin_fixed_point,
    verify_lemma41,
)
from .report import CheckReport, all_pass
from .sampling import boundary_points, interior_points

COMMANDS = (
    "sigma", "schouten", "bk", "cone", "bubble-certify", "solve-h", "solve-family", "kelvin-check",
    "ball-check", "lambda-bar", "lemma41", "constraint-report", "suite", "emit-grid",
)
NEEDS_BK = {"bk", "bubble-certify", "solve-h", "solve-family", "ball-check", "constraint-report", "kelvin-check"}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    n: int | None = None
    k: int | None = None
    field_spec: dict = field(default_factory=dict)  # {"bubble": {...}} or {"expr": "..."}
    at: str | None = None
    x: list | None = None
    h: float | None = None
    c0: float | None = None
    mode: str = "A_T"
    lam: float = 1.0
    d: float = 0.5
    points: list | None = None
    samples: int = 100
    tol: float | None = None
    grid: GridSpec = field(default_factory=GridSpec)
    seed: int = 0
    out: str | None = None
    quantity: str = "u"
    axes: list | None = None
    span: list | None = None
    count: int = 101
    csv: str | None = None

    def echo(self) -> dict:
        d = {
            "command": self.command, "n": self.n, "k": self.k, "field": self.field_spec, "at": self.at, "x": self.x,
            "h": self.h, "c0": self.c0, "mode": self.mode, "lam": self.lam, "d": self.d, "points": self.points,
            "samples": self.samples, "tol": self.tol, "grid": self.grid.to_dict(), "seed": self.seed,
        }
        if self.command == "emit-grid":
            d.update(quantity=self.quantity, axes=self.axes, span=self.span, count=self.count, csv=self.csv)
        return d


@dataclass
class ReportDocument:
    version: str
    config: dict
    checks: list
    passed: bool
    wall_ms: float

    def to_dict(self, with_time: bool = True) -> dict:
        d = {
            "version": self.version,
            "config": self.config,
            "checks": [c.to_dict() for c in self.checks],
            "pass": self.passed,
        }
        if with_time:
            d["wall_ms"] = round(self.wall_ms, 3)
        return d

    def to_json(self, with_time: bool = True) -> str:
        from .report import _jsonable

        return json.dumps(_jsonable(self.to_dict(with_time)), indent=2)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="conflab", description="Numerical checks for sigma_k curvature on the half-space with umbilic boundary.")
    p.add_argument("--version", action="version", version=f"conflab {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--n", type=int, help="dimension (default: from the field, else 4)")
    p.add_argument("--k", type=int, help="order of sigma_k / B_k (default 2)")
    p.add_argument("--b", type=float, help="bubble scale b (default 1)")
    p.add_argument("--center", help="bubble center, comma-separated (default 0,...,0,-1)")
    p.add_argument("--expr", help="conformal factor as an expression in x1..xn")
    p.add_argument("--at", help="matrix: '2I', 'cI' or the comma-separated upper triangle")
    p.add_argument("--x", help="evaluation point (boundary points may omit x_n)")
    p.add_argument("--h", type=float, help="mean curvature")
    p.add_argument("--c0", type=float, help="boundary constant")
    p.add_argument("--mode", choices=("A_T", "M"), default="A_T", help="solve-h: keep A_T or M fixed (default A_T)")
    p.add_argument("--lam", type=float, default=1.0, help="inversion radius for kelvin-check (default 1)")
    p.add_argument("--d", type=float, default=0.5, help="ball-check: ball radius is 2d (default 0.5)")
    p.add_argument("--points", help="lemma41 boundary points, ';'-separated")
    p.add_argument("--samples", type=int, default=100, help="random samples per check (default 100)")
    p.add_argument("--tol", type=float, help="override the main tolerance of sigma/bk/cone checks")
    p.add_argument("--grid", help='JSON {"shells", "r_far_factor", "angular", "seed"}')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="also write the JSON report here")
    p.add_argument("--quantity", choices=("u", "sigma_k", "bk-boundary"), default="u", help="emit-grid quantity")
    p.add_argument("--axes", help="emit-grid: two 1-based axes to vary, e.g. 1,2")
    p.add_argument("--span", help="emit-grid: lo,hi (default -2,2)")
    p.add_argument("--count", type=int, default=101, help="emit-grid: points per axis (default 101)")
    p.add_argument("--csv", help="emit-grid: output CSV path")
    return p


def parse_args(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(command=ns.command)
    center = _floats(ns.center) if ns.center else None
    n = ns.n
    if n is None:
        n = len(center) if center else 4
    if center is not None and len(center) != n:
        raise UsageError(f"--center has {len(center)} coordinates but n={n}")
    if n < 3:
        raise UsageError("n must be at least 3")
    cfg.n = n
    cfg.k = ns.k if ns.k is not None else 2
    if cfg.k < 1:
        raise UsageError("k must be positive")
    if ns.command in NEEDS_BK and n < 2 * cfg.k:
        raise UsageError(f"B_k needs n >= 2k (n={n}, k={cfg.k})")
    if ns.command == "sigma" and cfg.k > n:
        raise UsageError(f"k={cfg.k} exceeds n={n}")
    if ns.expr is not None and (ns.b is not None or center is not None):
        raise UsageError("--expr cannot be combined with --b/--center")
    if ns.expr is not None:
        cfg.field_spec = {"expr": ns.expr}
    else:
        cfg.field_spec = {"bubble": {"b": ns.b if ns.b is not None else 1.0,
                                "center": center if center is not None else [0.0] * (n - 1) + [-1.0]}}
    cfg.at, cfg.h, cfg.c0, cfg.mode = ns.at, ns.h, ns.c0, ns.mode
    cfg.x = _floats(ns.x) if ns.x else None
    cfg.lam, cfg.d, cfg.samples, cfg.tol, cfg.seed = ns.lam, ns.d, ns.samples, ns.tol, ns.seed
    if ns.points:
        cfg.points = [_floats(s) for s in ns.points.split(";") if s.strip()]
    if ns.grid:
        try:
            cfg.grid = GridSpec.from_dict(json.loads(ns.grid))
        except (json.JSONDecodeError, TypeError, DomainError) as exc:
            raise UsageError(f"bad --grid: {exc}") from exc
    cfg.out, cfg.quantity, cfg.count, cfg.csv = ns.out, ns.quantity, ns.count, ns.csv
    if ns.command == "emit-grid":
        cfg.axes = [int(a) for a in _floats(ns.axes)] if ns.axes else [1, 2]
        cfg.span = _floats(ns.span) if ns.span else [-2.0, 2.0]
        if len(cfg.axes) != 2 or not all(1 <= a <= n for a in cfg.axes) or cfg.axes[0] == cfg.axes[1]:
            raise UsageError("--axes needs two distinct axes in 1..n")
        if len(cfg.span) != 2 or not cfg.span[0] < cfg.span[1]:
            raise UsageError("--span needs lo,hi with lo < hi")
        if cfg.count < 2:
            raise UsageError("--count must be at least 2")
        if not cfg.csv:
            raise UsageError("emit-grid needs --csv")
        if cfg.quantity == "bk-boundary" and n in cfg.axes:
            raise UsageError("bk-boundary lives on x_n = 0; choose tangential axes")
    _require(cfg)
    return cfg


def _require(cfg: RunConfig) -> None:
    c = cfg.command
    need = {
        "solve-h": ["at", "c0"],
        "solve-family": ["c0"],
        "constraint-report": [],
        "schouten": ["x"],
    }.get(c, [])
    if c == "bk" and cfg.at is not None and cfg.h is None:
        need = ["h"]
    for name in need:
        if getattr(cfg, name) is None:
            raise UsageError(f"{c} needs --{name.replace('_', '-')}")


def parse_matrix(text: str, dim: int) -> np.ndarray:
    t = text.strip()
    if t.endswith("I"):
        scale = t[:-1]
        try:
            c = float(scale) if scale else 1.0
        except ValueError as exc:
            raise UsageError(f"bad matrix shorthand {text!r}") from exc
        return c * np.eye(dim)
    vals = _floats(t)
    want = dim * (dim + 1) // 2
    if len(vals) != want:
        raise UsageError(f"matrix of dimension {dim} needs {want} upper-triangle entries, got {len(vals)}")
    return symfun.sym_from_upper(vals, dim)


def make_field(cfg: RunConfig) -> ScalarField:
    if "expr" in cfg.field_spec:
        return parse_field(cfg.field_spec["expr"], cfg.n)
    bp = cfg.field_spec["bubble"]
    return bubble_field(BubbleParams(cfg.n, bp["b"], tuple(bp["center"])))


def _point(cfg: RunConfig, boundary: bool) -> np.ndarray:
    n = cfg.n
    if cfg.x is None:
        return np.zeros(n) if boundary else np.concatenate([np.zeros(n - 1), [1.0]])
    x = np.asarray(cfg.x, dtype=float)
    if boundary and x.shape[0] == n - 1:
        x = np.concatenate([x, [0.0]])
    if x.shape[0] != n:
        raise UsageError(f"--x needs {n} coordinates")
    return x


def _info(name, value, notes=None) -> CheckReport:
    return CheckReport(name, value, informational=True, notes=notes or [])


def _expected_bubble_sigma(cfg, u):
    if "bubble" in cfg.field_spec:
        return sigma_normalization(cfg.n, cfg.k)
    return None


def cmd_sigma(cfg):
    if cfg.at is not None:
        A = parse_matrix(cfg.at, cfg.n)
        return [_info(f"sigma_{cfg.k}", symfun.sigma(A, cfg.k))]
    u = make_field(cfg)
    x = _point(cfg, boundary=False)
    val = symfun.sigma(schouten(u, x), cfg.k)
    ref = _expected_bubble_sigma(cfg, u)
    if ref is None:
        return [_info(f"sigma_{cfg.k} of the Schouten tensor", val)]
    tol = cfg.tol if cfg.tol is not None else 1e-8
    err = abs(val - ref) / ref
    return [CheckReport(f"sigma_{cfg.k} of the Schouten tensor", val, ref, abs(val - ref), tol * ref, err <= tol)]


def cmd_schouten(cfg):
    u = make_field(cfg)
    x = _point(cfg, boundary=False)
    A = schouten(u, x)
    label = symfun.cone_classify(A)
    out = [_info("Schouten tensor", A), _info("cone max_k", label.max_k)]
    if x[-1] == 0.0:
        out.append(_info("tangential Schouten tensor", tangential_schouten(u, x)))
        out.append(_info("mean curvature", mean_curvature(u, x)))
    return out


def cmd_bk(cfg):
    if cfg.at is not None:
        A_T = parse_matrix(cfg.at, cfg.n - 1)
        return [_info(f"B_{cfg.k}", bk_umbilic(cfg.n, cfg.k, A_T, cfg.h))]
    u = make_field(cfg)
    x = _point(cfg, boundary=True)
    out = [_info(f"B_{cfg.k}", bk_of_field(u, x, cfg.k))]
    out.append(ellipticity_report(u, x, cfg.n, cfg.k))
    return out


def cmd_cone(cfg):
    u = make_field(cfg)
    if cfg.x is not None:
        pts = _point(cfg, boundary=False)[None, :]
    else:
        pts = interior_points(np.random.default_rng(cfg.seed), cfg.samples, cfg.n)
    return [cone_along(u, pts, cfg.k)]


def cmd_bubble_certify(cfg):
    if "bubble" not in cfg.field_spec:
        raise UsageError("bubble-certify needs bubble parameters, not --expr")
    bp = cfg.field_spec["bubble"]
    cert = certify_bubble(BubbleParams(cfg.n, bp["b"], tuple(bp["center"])), cfg.k, cfg.samples, cfg.seed)
    return cert.reports()


def cmd_solve_h(cfg):
    D = parse_matrix(cfg.at, cfg.n - 1)
    h = solve_h(cfg.mode, D, cfg.n, cfg.k, cfg.c0)
    A_T = D if cfg.mode == "A_T" else D - 0.5 * h * h * np.eye(cfg.n - 1)
    resid = abs(bk_umbilic(cfg.n, cfg.k, A_T, h) - cfg.c0)
    tol = 1e-12 * (1 + cfg.c0)
    return [CheckReport(f"h with B_{cfg.k} = c0 (fixed {cfg.mode})", h, None, resid, tol, resid <= tol,
                        notes=["abs_err is |B(h) - c0|"])]


def cmd_solve_family(cfg):
    h, fam = solve_family_for_c0(cfg.n, cfg.k, cfg.c0)
    cert = certify_bubble(fam.member(1.0), cfg.k, cfg.samples, cfg.seed)
    err = abs(cert.c0 - cfg.c0)
    tol = 1e-8 * max(1.0, cfg.c0)
    return [
        _info("h", h, [fam.describe()]),
        CheckReport("family member b=1 attains c0", cert.c0, cfg.c0, err, tol, err <= tol),
    ]


def cmd_kelvin_check(cfg):
    u = make_field(cfg)
    x = _point(cfg, boundary=True)
    m = MobiusInversion(tuple(x), cfg.lam)
    rng = np.random.default_rng(cfg.seed)
    tol = cfg.tol if cfg.tol is not None else 1e-6
    inner = interior_points(rng, cfg.samples, cfg.n) + np.concatenate([x[:-1], [0.0]])
    bnd = boundary_points(rng, cfg.samples, cfg.n) + np.concatenate([x[:-1], [0.0]])
    out = [invariance_check_sigma(u, m, inner, cfg.k, tol), invariance_check_bk(u, m, bnd, cfg.k, tol)]
    out.append(verify_kelvin_fixed_point(u, x, cfg.grid))
    return out


def cmd_ball_check(cfg):
    if "bubble" not in cfg.field_spec:
        raise UsageError("ball-check needs bubble parameters, not --expr")
    bp = cfg.field_spec["bubble"]
    p = BubbleParams(cfg.n, bp["b"], tuple(bp["center"]))
    return ball_checks(p, cfg.k, cfg.d, cfg.samples, cfg.seed)


def cmd_lambda_bar(cfg):
    u = make_field(cfg)
    x = _point(cfg, boundary=True)
    res = lambda_bar(u, x, cfg.grid)
    if "bubble" in cfg.field_spec and math.isfinite(res.lambda_bar):
        ref = u.params.lambda_bar(x)
        err = abs(res.lambda_bar - ref)
        return [CheckReport("lambda_bar", res.lambda_bar, ref, err, 1e-3 * ref, err <= 1e-3 * ref,
                            notes=[json.dumps(res.to_dict())] + res.notes)]
    return [_info("lambda_bar", res.lambda_bar, [json.dumps(res.to_dict(), default=str)] + res.notes)]


def cmd_lemma41(cfg):
    u = make_field(cfg)
    n = cfg.n
    pts = cfg.points or [[0.0] * n, [3.0] + [0.0] * (n - 1), [0.0, -2.0] + [0.0] * (n - 2)]
    pts = [p + [0.0] if len(p) == n - 1 else p for p in pts]
    if any(len(p) != n for p in pts):
        raise UsageError(f"--points entries need {n - 1} or {n} coordinates")
    return [verify_lemma41(u, pts, cfg.grid)]


def cmd_constraint_report(cfg):
    hs = [cfg.h] if cfg.h is not None else [0.5, 1.0, 2.0]
    return [theorem_constraint_report(cfg.n, cfg.k, h) for h in hs]


def cmd_suite(cfg):
    from .suite import run_suite

    return run_suite(cfg.seed, cfg.grid)


@dataclass(frozen=True)
class SliceGrid:
    """A 2-D slice through ``base`` along two axes (0-based), ``count`` points per axis."""

    base: tuple
    axes: tuple
    lo: float
    hi: float
    count: int

    def points(self) -> np.ndarray:
        t = np.linspace(self.lo, self.hi, self.count)
        a, b = self.axes
        pts = np.tile(np.asarray(self.base, dtype=float), (self.count * self.count, 1))
        # row-major: first axis slowest
        pts[:, a] = np.repeat(t, self.count)
        pts[:, b] = np.tile(t, self.count)
        return pts


def emit_grid(u: ScalarField, quantity: str, grid: SliceGrid, path: str, k: int = 2) -> int:
    """Write "x1,...,xn,value" rows for the slice; returns the row count."""
    pts = grid.points()
    if quantity == "u":
        vals = u.values(pts)
    elif quantity == "sigma_k":
        vals = np.array([symfun.sigma(schouten(u, p), k) for p in pts])
    elif quantity == "bk-boundary":
        if np.any(pts[:, -1] != 0.0):
            raise DomainError("bk-boundary needs the slice inside x_n = 0")
        vals = np.array([bk_of_field(u, p, k) for p in pts])
    else:
        raise DomainError(f"unknown quantity {quantity!r}")
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i + 1}" for i in range(u.n)] + ["value"])
            for p, v in zip(pts, vals):
                w.writerow([repr(float(c)) for c in p] + [repr(float(v))])
    except OSError as exc:
        raise DomainError(f"cannot write {path}: {exc}") from exc
    return len(pts)


def cmd_emit_grid(cfg):
    u = make_field(cfg)
    base = _point(cfg, boundary=cfg.quantity == "bk-boundary")
    grid = SliceGrid(tuple(base), tuple(a - 1 for a in cfg.axes), cfg.span[0], cfg.span[1], cfg.count)
    rows = emit_grid(u, cfg.quantity, grid, cfg.csv, cfg.k)
    return [_info("rows written", rows, [cfg.csv])]


HANDLERS = {
    "sigma": cmd_sigma,
    "schouten": cmd_schouten,
    "bk": cmd_bk,
    "cone": cmd_cone,
    "bubble-certify": cmd_bubble_certify,
    "solve-h": cmd_solve_h,
    "solve-family": cmd_solve_family,
    "kelvin-check": cmd_kelvin_check,
    "ball-check": cmd_ball_check,
    "lambda-bar": cmd_lambda_bar,
    "lemma41": cmd_lemma41,
    "constraint-report": cmd_constraint_report,
    "suite": cmd_suite,
    "emit-grid": cmd_emit_grid,
}


def run(cfg: RunConfig) -> tuple[ReportDocument, int]:
    t0 = time.perf_counter()
    checks = HANDLERS[cfg.command](cfg)
    ok = all_pass(checks)
    doc = ReportDocument(__version__, cfg.echo(), checks, ok, 1000.0 * (time.perf_counter() - t0))
    return doc, 0 if ok else 1


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        print(f"conflab: usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        doc, code = run(cfg)
    except UsageError as exc:
        print(f"conflab: usage error: {exc}", file=sys.stderr)
        return 2
    except (ConflabError, NoRootError) as exc:
        err = {"version": __version__, "config": cfg.echo(), "error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(err, indent=2, default=str))
        print(f"conflab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    text = doc.to_json()
    print(text)
    if cfg.out:
        try:
            with open(cfg.out, "w") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            print(f"conflab: cannot write {cfg.out}: {exc}", file=sys.stderr)
            return 3
    return code


if __name__ == "__main__":
    sys.exit(main())
