"""Inversions of the half-space, conformal invariance and moving spheres.

The moving-sphere radius lambda_bar(x) is found by bisection on a
feasibility test: u_{x,lam} <= u on a log-radial x hemisphere grid of
{y_n >= 0, |y - x| >= lam} out to R_far, with the region beyond R_far
certified by the superharmonic barrier

    u(y) >= (min_{|z-x| = R, z_n >= 0} |z-x|^(n-2) u(z)) |y - x|^(2-n),   |y - x| >= R,

together with u_{x,lam}(y) <= lam^(n-2) |y-x|^(2-n) max_{B_{lam^2/R}(x)} u.
The barrier is a property of solutions; for other fields it is an assumption.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import symfun
from .boundary import bk_of_field, bk_umbilic
from .conformal import schouten, schouten_from_jet
from .errors import DomainError, ResolutionError
from .fields import BubbleField, Domain, InversionField, ScalarField, kelvin_field, EPS_SING
from .report import CheckReport
from .sampling import hemisphere_directions

FEAS_SLACK = 1e-12
BISECT_RTOL = 1e-4
CERT_DELTA = 1e-3


def sweep_workers() -> int:
    """Thread cap for grid sweeps, from CONFLAB_THREADS (default 1)."""
    raw = os.environ.get("CONFLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Ordered map, threaded up to sweep_workers(); callers reduce the results."""
    items = list(items)
    workers = min(sweep_workers(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class MobiusInversion:
    center: tuple
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in np.asarray(self.center, dtype=float).reshape(-1))
        if not self.radius > 0:
            raise DomainError(f"inversion radius must be positive, got {self.radius}")
        if c[-1] != 0.0:
            raise DomainError(f"inversion center must lie on x_n = 0, got x_n={c[-1]!r}")
        object.__setattr__(self, "center", c)

    @property
    def n(self) -> int:
        return len(self.center)


def apply_inversion(m: MobiusInversion, y) -> np.ndarray:
    """x + lam^2 (y - x)/|y - x|^2; rows of a 2-D array are mapped independently."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(m.center)
    d = np.atleast_2d(y) - x
    r2 = np.sum(d * d, axis=1)
    if np.any(np.sqrt(r2) <= EPS_SING):
        raise DomainError("point coincides with the inversion center")
    out = x + m.radius**2 * d / r2[:, None]
    return out if y.ndim == 2 else out[0]


def _rel_check(name, lhs, rhs, tol_rel, notes=None) -> CheckReport:
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    err = np.abs(lhs - rhs)
    scaled = err / (1.0 + np.abs(rhs))
    i = int(np.argmax(scaled)) if len(scaled) else 0
    return CheckReport(
        name=name,
        value=float(np.max(scaled)) if len(scaled) else 0.0,
        reference=0.0,
        abs_err=float(err[i]) if len(err) else 0.0,
        tol=tol_rel,
        passed=bool(np.all(scaled <= tol_rel)),
        notes=notes or [],
    )


def invariance_check_sigma(u: ScalarField, m: MobiusInversion, pts, k: int, tol: float = 1e-6) -> CheckReport:
    """sigma_k of the reflected metric at y against sigma_k of g_u at phi(y)."""
    if m.n != u.n:
        raise DomainError("inversion and field dimensions differ")
    w = kelvin_field(u, m.center, m.radius)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    lhs = [symfun.sigma(schouten(w, y), k) for y in pts]
    rhs = [symfun.sigma(schouten(u, z), k) for z in apply_inversion(m, pts)]
    return _rel_check(f"sigma_{k} invariance", lhs, rhs, tol, [f"{len(pts)} points"])


def invariance_check_bk(u: ScalarField, m: MobiusInversion, pts, k: int, tol: float = 1e-6) -> CheckReport:
    """B_k of the reflected metric at boundary y against B_k of g_u at phi(y)."""
    if m.n != u.n:
        raise DomainError("inversion and field dimensions differ")
    w = kelvin_field(u, m.center, m.radius)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if np.any(pts[:, -1] != 0.0):
        raise DomainError("B_k invariance needs points on x_n = 0")
    images = apply_inversion(m, pts)
    images[:, -1] = 0.0  # exact on the hyperplane; drop roundoff
    lhs = [bk_of_field(w, y, k) for y in pts]
    rhs = [bk_of_field(u, z, k) for z in images]
    return _rel_check(f"B_{k} invariance", lhs, rhs, tol, [f"{len(pts)} points"])


def halfspace_to_ball(u: ScalarField, d: float, x0p) -> InversionField:
    """v(z) = (2d/|z-p|)^(n-2) u(p + 4d^2 (z-p)/|z-p|^2) on B_{2d}(q), p = (x0', -d), q = (x0', d)."""
    if not d > 0:
        raise DomainError(f"d must be positive, got {d}")
    x0p = np.asarray(x0p, dtype=float).reshape(-1)
    if x0p.shape[0] != u.n - 1:
        raise DomainError(f"x0' must have {u.n - 1} coordinates")
    p = np.concatenate([x0p, [-d]])
    q = np.concatenate([x0p, [d]])
    return InversionField(u, p, 2.0 * d, domain=Domain(kind="ball", center=tuple(q), radius=2.0 * d))


def ball_center(v: InversionField) -> np.ndarray:
    return np.asarray(v.domain.center)


def sphere_boundary_data(v: ScalarField, z, center, radius: float):
    """(A_T, h) of g_v on the round sphere |z - center| = radius, normal pointing into the ball.

    A_T is the Schouten tensor restricted to an orthonormal tangent frame and
    h = v^(-2/(n-2)) (1/R - (2/(n-2)) d_nu v / v).  On a sphere through
    interior evaluation this needs v to be defined at z, so callers pass
    points just inside the sphere or fields whose domain includes it.
    """
    z = np.asarray(z, dtype=float)
    c = np.asarray(center, dtype=float)
    n = v.n
    nu = (c - z) / radius
    j = v.raw_jet(z)
    if not j.val > 0:
        raise DomainError("field must be positive on the sphere")
    S = schouten_from_jet(j, n)
    # orthonormal complement of nu
    q, _ = np.linalg.qr(np.column_stack([nu, np.eye(n)]))
    E = q[:, 1:n]
    A_T = E.T @ S @ E
    h = math.exp(-2.0 / (n - 2) * math.log(j.val)) * (1.0 / radius - 2.0 / (n - 2) * (j.grad @ nu) / j.val)
    return 0.5 * (A_T + A_T.T), h


def bk_sphere(v: ScalarField, z, center, radius: float, k: int) -> float:
    A_T, h = sphere_boundary_data(v, z, center, radius)
    return bk_umbilic(v.n, k, A_T, h)


@dataclass(frozen=True)
class GridSpec:
    shells: int = 64
    r_far_factor: float = 1e3
    angular: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.shells < 2:
            raise DomainError("grid needs at least 2 shells")
        if not self.r_far_factor > 1:
            raise DomainError("r_far_factor must exceed 1")
        if self.angular is not None and self.angular < 1:
            raise DomainError("angular count must be positive")

    def angular_count(self, n: int) -> int:
        return self.angular if self.angular is not None else 2 * n * 32

    def directions(self, n: int) -> np.ndarray:
        return hemisphere_directions(n, self.angular_count(n), self.seed)

    def radii(self, lam: float) -> np.ndarray:
        return lam * np.geomspace(1.0, self.r_far_factor, self.shells)

    def to_dict(self) -> dict:
        return {"shells": self.shells, "r_far_factor": self.r_far_factor, "angular": self.angular, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        unknown = set(d) - {"shells", "r_far_factor", "angular", "seed"}
        if unknown:
            raise DomainError(f"unknown grid keys {sorted(unknown)}")
        return cls(**d)


@dataclass
class Feasibility:
    lam: float
    feasible: bool
    margin: float  # min over the grid of u - u_{x,lam}
    worst_point: np.ndarray | None
    tail_ok: bool
    tail_gap: float  # barrier minus reflected tail bound


def _shell_margin(u, x, lam, dirs, r):
    n = u.n
    pts = x + r * dirs
    uy = u.values(pts)
    img = x + (lam * lam / r) * dirs
    ul = (lam / r) ** (n - 2) * u.values(img)
    diff = uy - ul
    i = int(np.argmin(diff))
    return diff[i], pts[i], float(np.max(uy))


def feasibility(u: ScalarField, x, lam: float, grid: GridSpec, dirs=None) -> Feasibility:
    x = np.asarray(x, dtype=float)
    n = u.n
    dirs = grid.directions(n) if dirs is None else dirs
    radii = grid.radii(lam)
    shells = parallel_map(lambda r: _shell_margin(u, x, lam, dirs, r), radii)
    margin, worst, umax = min(shells, key=lambda s: s[0])
    umax = max(s[2] for s in shells)
    slack = FEAS_SLACK * max(1.0, umax)

    R = radii[-1]
    barrier = float(np.min(R ** (n - 2) * u.values(x + R * dirs)))
    rho = lam * lam / R
    inner = np.vstack([x[None, :], x + 0.5 * rho * dirs, x + rho * dirs])
    reflected = lam ** (n - 2) * float(np.max(u.values(inner)))
    tail_gap = barrier - reflected
    tail_ok = tail_gap >= -slack
    return Feasibility(lam, bool(margin >= -slack and tail_ok), float(margin), np.asarray(worst), tail_ok, tail_gap)


@dataclass
class LambdaBarResult:
    x: np.ndarray
    lambda_bar: float
    grid_spec: dict
    margin_below: float  # min(u - u_{x,lam}) at lambda_bar (1 - delta)
    failure_at: list | str | None  # first failure location at lambda_bar (1 + delta)
    failure_margin: float
    evaluations: int
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "x": self.x.tolist(),
            "lambda_bar": self.lambda_bar,
            "grid": self.grid_spec,
            "margin_below": self.margin_below,
            "failure_at": self.failure_at,
            "failure_margin": self.failure_margin,
            "evaluations": self.evaluations,
        }


def _assert_monotone(records):
    ordered = sorted(records, key=lambda f: f.lam)
    seen_infeasible = None
    for f in ordered:
        if not f.feasible and seen_infeasible is None:
            seen_infeasible = f
        elif f.feasible and seen_infeasible is not None:
            raise ResolutionError(
                f"feasibility is not monotone on this grid: lam={seen_infeasible.lam:.6g} fails "
                f"but lam={f.lam:.6g} passes; refine the grid"
            )


def lambda_bar(u: ScalarField, x, grid: GridSpec | None = None, lam_start: float = 1.0,
               max_doublings: int = 40) -> LambdaBarResult:
    """Critical moving-sphere radius at boundary point x, to relative 1e-3, with certificate."""
    grid = grid or GridSpec()
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] == u.n - 1:
        x = np.concatenate([x, [0.0]])
    if x.shape[0] != u.n or x[-1] != 0.0:
        raise DomainError("lambda_bar needs a point on x_n = 0")
    dirs = grid.directions(u.n)
    records = []

    def test(lam):
        f = feasibility(u, x, lam, grid, dirs)
        records.append(f)
        _assert_monotone(records)
        return f

    lam = lam_start
    f = test(lam)
    if f.feasible:
        for _ in range(max_doublings):
            lam *= 2.0
            f = test(lam)
            if not f.feasible:
                break
        else:
            return LambdaBarResult(x, math.inf, grid.to_dict(), f.margin, None, math.nan, len(records),
                                   [f"feasible up to lam={lam:.3g}; lambda_bar reported as inf"])
        lo, hi = lam / 2.0, lam
    else:
        for _ in range(max_doublings):
            lam /= 2.0
            f = test(lam)
            if f.feasible:
                break
        else:
            raise ResolutionError(f"no feasible radius down to lam={lam:.3g}")
        lo, hi = lam, 2.0 * lam
    while hi / lo - 1.0 > BISECT_RTOL:
        mid = math.sqrt(lo * hi)
        if test(mid).feasible:
            lo = mid
        else:
            hi = mid
    lb = 0.5 * (lo + hi)
    below = test(lb * (1.0 - CERT_DELTA))
    above = test(lb * (1.0 + CERT_DELTA))
    if not below.feasible or above.feasible:
        raise ResolutionError("certificate at lambda_bar (1 -/+ delta) is inconsistent; refine the grid")
    if above.margin < -FEAS_SLACK:
        where = above.worst_point.tolist()
    else:
        where = "tail"
    notes = []
    if not above.tail_ok and above.margin >= -FEAS_SLACK:
        notes.append("transition decided by the far-field barrier")
    return LambdaBarResult(x, lb, grid.to_dict(), below.margin, where, above.margin, len(records), notes)


def alpha_estimate(u: ScalarField, radii=(1e2, 1e3, 1e4), angular: int | None = None, seed: int = 0) -> float:
    """liminf |y|^(n-2) u(y) over the closed half-space.

    Per radius the minimum over hemisphere samples is taken, then the two
    largest radii are combined by Richardson extrapolation in 1/R.  Growth
    faster than R^(1/2) returns inf, decay faster than R^(-1/2) returns 0.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) < 2 or np.any(np.diff(radii) <= 0) or radii[0] < 1:
        raise DomainError("radii must be increasing, at least two, all >= 1")
    n = u.n
    dirs = hemisphere_directions(n, angular or 2 * n * 32, seed)
    mins = np.array([float(np.min(R ** (n - 2) * u.values(R * dirs))) for R in radii])
    (R1, R2), (m1, m2) = radii[-2:], mins[-2:]
    ratio = m2 / m1 if m1 > 0 else math.inf
    if ratio > math.sqrt(R2 / R1):
        return math.inf
    if ratio < math.sqrt(R1 / R2):
        return 0.0
    return float((R2 * m2 - R1 * m1) / (R2 - R1))


def decay_bound_check(u: ScalarField, r0: float = 1.0, samples: int = 200, seed: int = 0) -> CheckReport:
    """u(y) >= (min over the half-sphere of radius r0 of u) r0^(n-2) |y|^(2-n) for |y| >= r0."""
    n = u.n
    rng = np.random.default_rng(seed)
    cap = hemisphere_directions(n, 2 * n * 32, seed)
    m = float(np.min(u.values(r0 * cap)))
    g = rng.standard_normal((samples, n))
    g[:, -1] = np.abs(g[:, -1])
    g /= np.linalg.norm(g, axis=1)[:, None]
    r = r0 * np.exp(rng.uniform(0.0, math.log(1e3), samples))
    y = r[:, None] * g
    bound = m * r0 ** (n - 2) * r ** (2 - n)
    gap = u.values(y) - bound
    return CheckReport(
        name="half-space barrier lower bound",
        value=float(np.min(gap)),
        reference=0.0,
        abs_err=float(max(0.0, -np.min(gap))),
        tol=1e-12,
        passed=bool(np.all(gap >= -1e-12)),
        notes=[f"r0={r0}, {samples} samples"],
    )


def verify_lemma41(u: ScalarField, pts, grid: GridSpec | None = None, rel_tol: float = 5e-3) -> CheckReport:
    """lambda_bar(x)^(n-2) u(x) against alpha at each boundary point."""
    n = u.n
    alpha = alpha_estimate(u)
    name = "lambda_bar^(n-2) u = alpha"
    if not (0 < alpha < math.inf):
        return CheckReport(name=name, value=alpha, passed=False, informational=True,
                           notes=[f"not applicable: alpha = {alpha} violates 0 < alpha < inf"])
    vals = []
    for x in np.atleast_2d(np.asarray(pts, dtype=float)):
        x = x if x.shape[0] == n else np.concatenate([x, [0.0]])
        res = lambda_bar(u, x, grid)
        vals.append(res.lambda_bar ** (n - 2) * u.value(x))
    vals = np.asarray(vals)
    err = np.abs(vals - alpha)
    i = int(np.argmax(err))
    return CheckReport(
        name=name,
        value=float(vals[i]),
        reference=alpha,
        abs_err=float(err[i]),
        tol=rel_tol * alpha,
        passed=bool(np.all(err <= rel_tol * alpha)),
        notes=[f"{len(vals)} points"],
    )


def _fixed_point_grid(n, x, lam, dirs):
    radii = lam * np.geomspace(1e-2, 1e2, 33)
    return np.vstack([x + r * dirs for r in radii])


def kelvin_residual(u: ScalarField, x, lam: float, pts) -> float:
    w = kelvin_field(u, x, lam)
    return float(np.max(np.abs(w.values(pts) - u.values(pts))))


def verify_kelvin_fixed_point(u: ScalarField, x, grid: GridSpec | None = None, closed_form: bool = True,
                              rel_tol: float = 1e-6) -> CheckReport:
    """max |u_{x,lambda_bar} - u| <= rel_tol max u over a grid of the closed half-space minus x.

    lambda_bar comes from the closed form for bubbles (when ``closed_form``)
    or from the grid bisection, refined by minimizing the residual over a
    +-3e-3 relative bracket.
    """
    grid = grid or GridSpec()
    n = u.n
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] == n - 1:
        x = np.concatenate([x, [0.0]])
    name = "Kelvin fixed point at lambda_bar"
    notes = []
    if closed_form and isinstance(u, BubbleField):
        lam = u.params.lambda_bar(x)
        notes.append("closed-form lambda_bar")
    else:
        try:
            res = lambda_bar(u, x, grid)
        except (DomainError, ResolutionError) as exc:
            return CheckReport(name=name, value=math.nan, abs_err=math.inf, passed=False,
                               notes=[f"lambda_bar unavailable ({exc}); hypothesis violated"])
        if not math.isfinite(res.lambda_bar):
            return CheckReport(name=name, value=math.inf, abs_err=math.inf, passed=False,
                               notes=["lambda_bar is infinite: hypothesis violated (not a solution)"])
        dirs = grid.directions(n)
        pts = _fixed_point_grid(n, x, res.lambda_bar, dirs)
        opt = minimize_scalar(lambda t: kelvin_residual(u, x, t, pts),
                              bounds=(res.lambda_bar * (1 - 3e-3), res.lambda_bar * (1 + 3e-3)),
                              method="bounded", options={"xatol": 1e-12 * res.lambda_bar})
        lam = float(opt.x)
        notes.append(f"grid lambda_bar {res.lambda_bar:.8g} refined to {lam:.12g}")
    pts = _fixed_point_grid(n, x, lam, grid.directions(n))
    umax = float(np.max(u.values(pts)))
    resid = kelvin_residual(u, x, lam, pts)
    return CheckReport(
        name=name,
        value=resid,
        reference=0.0,
        abs_err=resid,
        tol=rel_tol * umax,
        passed=resid <= rel_tol * umax,
        notes=notes + [f"lambda={lam:.12g}"],
    )
