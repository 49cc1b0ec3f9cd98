"""Bubble certification, the c0 <-> h constraint and the ball version."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import symfun
from .boundary import bk_of_field, bk_umbilic, solve_h
from .conformal import mean_curvature, schouten, tangential_schouten
from .errors import DomainError
from .fields import BubbleParams, InversionField, bubble_field
from .mobius import bk_sphere, halfspace_to_ball
from .report import CheckReport
from .sampling import ball_points, boundary_points, interior_points, sphere_points

SIGMA_TOL = 1e-8
AT_TOL = 1e-8
H_TOL = 1e-10
SPREAD_TOL = 1e-9


def sigma_normalization(n: int, k: int) -> float:
    """sigma_k(2 I_n) = 2^k binom(n, k)."""
    return float(2**k * math.comb(n, k))


@dataclass(frozen=True)
class BubbleCertificate:
    params: BubbleParams
    k: int
    sigma_err: float
    AT_err: float
    h_err: float
    c0: float
    bk_spread: float

    @property
    def passed(self) -> bool:
        return (
            self.sigma_err <= SIGMA_TOL
            and self.AT_err <= AT_TOL
            and self.h_err <= H_TOL
            and self.bk_spread <= SPREAD_TOL * max(1.0, abs(self.c0))
        )

    def reports(self) -> list[CheckReport]:
        p, k = self.params, self.k
        tag = f"n={p.n}, k={k}, b={p.b:g}"
        spread_tol = SPREAD_TOL * max(1.0, abs(self.c0))
        return [
            CheckReport(f"sigma_{k} = 2^k binom(n,k) ({tag})", self.sigma_err, 0.0, self.sigma_err, SIGMA_TOL,
                        self.sigma_err <= SIGMA_TOL, notes=["relative error"]),
            CheckReport(f"A_T = 2I ({tag})", self.AT_err, 0.0, self.AT_err, AT_TOL, self.AT_err <= AT_TOL),
            CheckReport(f"h = -2 sqrt(b) xbar_n ({tag})", self.h_err, 0.0, self.h_err, H_TOL, self.h_err <= H_TOL),
            CheckReport(f"B_{k} constant on the boundary ({tag})", self.c0, None, self.bk_spread, spread_tol,
                        self.bk_spread <= spread_tol, notes=["value is the mean, abs_err the spread"]),
        ]

    def to_dict(self) -> dict:
        return {
            "params": {"n": self.params.n, "b": self.params.b, "center": list(self.params.center)},
            "k": self.k,
            "sigma_err": self.sigma_err,
            "AT_err": self.AT_err,
            "h_err": self.h_err,
            "c0": self.c0,
            "bk_spread": self.bk_spread,
            "pass": self.passed,
        }


def certify_bubble(p: BubbleParams, k: int, samples: int = 100, seed: int = 0) -> BubbleCertificate:
    n = p.n
    if n < 2 * k:
        raise DomainError(f"certification needs n >= 2k (n={n}, k={k})")
    u = bubble_field(p)
    rng = np.random.default_rng(seed)
    shift = np.asarray(p.center)
    shift[-1] = 0.0
    inner = interior_points(rng, samples, n) + shift
    bnd = boundary_points(rng, samples, n) + shift
    ref = sigma_normalization(n, k)
    sig = np.array([symfun.sigma(schouten(u, y), k) for y in inner])
    sigma_err = float(np.max(np.abs(sig - ref)) / ref)
    eye = 2.0 * np.eye(n - 1)
    at_err = max(float(np.max(np.abs(tangential_schouten(u, x) - eye))) for x in bnd)
    h_ref = p.mean_curvature
    h_err = float(max(abs(mean_curvature(u, x) - h_ref) for x in bnd))
    bk = np.array([bk_of_field(u, x, k) for x in bnd])
    return BubbleCertificate(p, k, sigma_err, at_err, h_err, float(np.mean(bk)), float(np.ptp(bk)))


@dataclass(frozen=True)
class BubbleFamily:
    """Bubbles with h = -2 sqrt(b) xbar_n, i.e. xbar_n = -h / (2 sqrt(b)); xbar' is free."""

    n: int
    k: int
    c0: float
    h: float

    def member(self, b: float, xbar_tangential=None) -> BubbleParams:
        if not b > 0:
            raise DomainError("b must be positive")
        xt = np.zeros(self.n - 1) if xbar_tangential is None else np.asarray(xbar_tangential, dtype=float)
        return BubbleParams(self.n, b, tuple(xt) + (-self.h / (2.0 * math.sqrt(b)),))

    def describe(self) -> str:
        return f"{{(b, xbar): b > 0, xbar_n = -{self.h:.12g} / (2 sqrt(b))}}"


def solve_family_for_c0(n: int, k: int, c0: float) -> tuple[float, BubbleFamily]:
    """h with B_k(2 I_{n-1}, h) = c0, and the bubble family attaining it."""
    h = solve_h("A_T", 2.0 * np.eye(n - 1), n, k, c0)
    return h, BubbleFamily(n, k, c0, h)


def theorem_constraint_report(n: int, k: int, h: float) -> CheckReport:
    """Compare the stated bubble constraint with direct substitution into B_k.

    LHS_paper = sum_{s=1}^{k-1} (n-s)!/((n-k)! (2k-2s-1)!! n) sigma_s(2 I_{n-1}) h^(2k-2s-1)
              + (n-1)!/((n-k)! (2k-1)!!) h^(2k-1)
    c0_direct   = B_k(2 I_{n-1}, h)
    RHS_paper   = (n+1-k)/n c0_direct

    The same LHS with sigma_s(2 I_n) is reported as an alternative reading.
    Always informational.
    """
    if n < 2 * k or k < 1:
        raise DomainError(f"needs n >= 2k >= 2 (n={n}, k={k})")
    f = symfun.factorial
    df = symfun.double_factorial

    def lhs(dim):
        eye = 2.0 * np.eye(dim)
        tot = f(n - 1) / (f(n - k) * df(2 * k - 1)) * h ** (2 * k - 1)
        for s in range(1, k):
            c = f(n - s) / (f(n - k) * df(2 * k - 2 * s - 1) * n)
            tot += c * symfun.sigma(eye, s) * h ** (2 * k - 2 * s - 1)
        return tot

    lhs_paper = lhs(n - 1)
    lhs_alt = lhs(n)
    c0 = bk_umbilic(n, k, 2.0 * np.eye(n - 1), h)
    rhs = (n + 1 - k) / n * c0
    value = {
        "LHS_paper": lhs_paper,
        "c0_direct": c0,
        "RHS_paper": rhs,
        "ratio": lhs_paper / rhs if rhs != 0 else math.nan,
        "LHS_alt_sigma_2I_n": lhs_alt,
    }
    return CheckReport(
        name=f"constraint reconciliation (n={n}, k={k}, h={h:g})",
        value=value,
        reference=None,
        abs_err=abs(lhs_paper - rhs),
        tol=0.0,
        passed=True,
        informational=True,
        notes=["reconciliation artifact; never a failure"],
    )


def fit_bubble(pts, vals, n: int):
    """Least-squares bubble (b, xbar) from samples, using v^(-2/(n-2)) = (1 + b|z - xbar|^2)/sqrt(b)."""
    pts = np.atleast_2d(pts)
    m = (n - 2) / 2.0
    w = np.exp(-np.log(vals) / m)
    X = np.column_stack([np.sum(pts * pts, axis=1), pts, np.ones(len(pts))])
    coef, *_ = np.linalg.lstsq(X, w, rcond=None)
    A, B = coef[0], coef[1:-1]
    if not A > 0:
        raise DomainError("samples are not consistent with a bubble")
    return BubbleParams(n, float(A * A), tuple(-B / (2.0 * A)))


def ball_checks(p: BubbleParams, k: int, d: float = 0.5, samples: int = 100, seed: int = 0,
                          x0p=None) -> list[CheckReport]:
    """Interior sigma_k, boundary constancy and bubble fit for the half-space bubble moved onto B_{2d}(q)."""
    n = p.n
    if n < 2 * k:
        raise DomainError(f"needs n >= 2k (n={n}, k={k})")
    x0p = np.zeros(n - 1) if x0p is None else np.asarray(x0p, dtype=float)
    u = bubble_field(p)
    v = halfspace_to_ball(u, d, x0p)
    q = np.asarray(v.domain.center)
    R = 2.0 * d
    rng = np.random.default_rng(seed)
    tag = f"n={n}, k={k}, d={d:g}"
    notes = [f"d={d:g} is tiny; derivatives scale like d^-2"] if d < 1e-3 else []
    reports = []

    ref = sigma_normalization(n, k)
    inner = ball_points(rng, samples, q, R)
    sig = np.array([symfun.sigma(schouten(v, z), k) for z in inner])
    err = float(np.max(np.abs(sig - ref)) / ref)
    reports.append(CheckReport(f"ball sigma_{k} = 2^k binom(n,k) ({tag})", err, 0.0, err, 1e-6, err <= 1e-6,
                               notes=notes + ["relative error"]))

    # boundary: pull back sphere samples to the hyperplane, and evaluate B_k on the sphere itself
    sph = sphere_points(rng, samples, q, R)
    pre = v.image(sph)
    pre[:, -1] = 0.0
    pulled = np.array([bk_of_field(u, y, k) for y in pre])
    free = InversionField(u, v.center, v.radius)
    direct = np.array([bk_sphere(free, z, q, R, k) for z in sph])
    spread = float(max(np.ptp(pulled), np.ptp(direct), np.max(np.abs(direct - pulled))))
    reports.append(CheckReport(f"ball B_{k} constant on the sphere ({tag})", float(np.mean(direct)),
                               float(np.mean(pulled)), spread, 1e-8, spread <= 1e-8,
                               notes=notes + ["abs_err: max of both spreads and their mismatch"]))

    fit_pts = ball_points(rng, 3 * (n + 2), q, R)
    fitted = fit_bubble(fit_pts, v.values(fit_pts), n)
    check_pts = ball_points(rng, samples, q, R)
    vv = v.values(check_pts)
    resid = float(np.max(np.abs(bubble_field(fitted).values(check_pts) - vv)) / np.max(vv))
    reports.append(CheckReport(f"ball field is a bubble ({tag})", resid, 0.0, resid, 1e-8, resid <= 1e-8,
                               notes=notes + [f"fitted b={fitted.b:.12g}, center={np.round(fitted.center, 12).tolist()}"]))
    return reports


def verify_corollary_ball(p: BubbleParams, k: int, d: float = 0.5, samples: int = 100, seed: int = 0) -> CheckReport:
    parts = ball_checks(p, k, d, samples, seed)
    return CheckReport(
        name=f"ball check (n={p.n}, k={k}, d={d:g})",
        value={r.name: r.value for r in parts},
        passed=all(r.passed for r in parts),
        notes=[r.line() for r in parts],
    )
