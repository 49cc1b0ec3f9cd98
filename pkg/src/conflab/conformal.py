"""Pointwise curvature of g_u = u^(4/(n-2)) |dx|^2.

All matrices are (1,1)-tensors g_u^{-1} A_{g_u} expressed in the Euclidean
frame.  The boundary is the hyperplane x_n = 0 with inward normal e_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import symfun
from .errors import DomainError
from .fields import ScalarField
from .jet import Jet
from .report import CheckReport


def _upow(u: float, p: float) -> float:
    return math.exp(p * math.log(u))


def _boundary_point(u: ScalarField, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] == u.n - 1:
        x = np.concatenate([x, [0.0]])
    if x.shape[0] != u.n:
        raise DomainError(f"boundary point has dimension {x.shape[0]}, field has {u.n}")
    if x[-1] != 0.0:
        raise DomainError(f"point is not on the boundary hyperplane (x_n = {x[-1]!r})")
    return x


def schouten_from_jet(j: Jet, n: int) -> np.ndarray:
    u = j.val
    g = j.grad
    c1 = -2.0 / (n - 2) * _upow(u, -(n + 2) / (n - 2))
    w = _upow(u, -2.0 * n / (n - 2))
    A = c1 * j.hess + (2.0 * n / (n - 2) ** 2) * w * np.outer(g, g) - (2.0 / (n - 2) ** 2) * w * (g @ g) * np.eye(n)
    return 0.5 * (A + A.T)


def schouten(u: ScalarField, x) -> np.ndarray:
    """g_u^{-1} A_{g_u} at x from the analytic 2-jet of u."""
    return schouten_from_jet(u.jet(x), u.n)


def mean_curvature_from_jet(j: Jet, n: int) -> float:
    return -2.0 / (n - 2) * _upow(j.val, -n / (n - 2)) * j.grad[-1]


def mean_curvature(u: ScalarField, x) -> float:
    """h = -(2/(n-2)) u^(-n/(n-2)) u_n on x_n = 0."""
    x = _boundary_point(u, x)
    return mean_curvature_from_jet(u.jet(x), u.n)


def tangential_from_jet(j: Jet, n: int) -> np.ndarray:
    u = j.val
    gt = j.grad[:-1]
    Ht = j.hess[:-1, :-1]
    c1 = -2.0 / (n - 2) * _upow(u, -(n + 2) / (n - 2))
    w = _upow(u, -2.0 * n / (n - 2))
    full_sq = j.grad @ j.grad
    A = c1 * Ht + (2.0 * n / (n - 2) ** 2) * w * np.outer(gt, gt) - (2.0 / (n - 2) ** 2) * w * full_sq * np.eye(n - 1)
    return 0.5 * (A + A.T)


def tangential_schouten(u: ScalarField, x) -> np.ndarray:
    """(n-1)x(n-1) tangential part of the Schouten tensor on x_n = 0."""
    x = _boundary_point(u, x)
    return tangential_from_jet(u.jet(x), u.n)


def tangential_m_from_jet(j: Jet, n: int) -> np.ndarray:
    """M = A^T + h^2/2 I, which depends on the tangential derivatives of u only."""
    u = j.val
    gt = j.grad[:-1]
    c1 = -2.0 / (n - 2) * _upow(u, -(n + 2) / (n - 2))
    w = _upow(u, -2.0 * n / (n - 2))
    A = c1 * j.hess[:-1, :-1] + (2.0 * n / (n - 2) ** 2) * w * np.outer(gt, gt) - (2.0 / (n - 2) ** 2) * w * (gt @ gt) * np.eye(n - 1)
    return 0.5 * (A + A.T)


def tangential_m(u: ScalarField, x) -> np.ndarray:
    x = _boundary_point(u, x)
    return tangential_m_from_jet(u.jet(x), u.n)


@dataclass(frozen=True)
class BoundaryJet:
    location: np.ndarray
    u_val: float
    grad: np.ndarray
    tangential_hessian: np.ndarray
    A_T: np.ndarray
    h: float

    @property
    def M(self) -> np.ndarray:
        return self.A_T + 0.5 * self.h**2 * np.eye(self.A_T.shape[0])


def boundary_jet(u: ScalarField, x) -> BoundaryJet:
    x = _boundary_point(u, x)
    j = u.jet(x)
    n = u.n
    return BoundaryJet(
        location=x,
        u_val=j.val,
        grad=j.grad.copy(),
        tangential_hessian=j.hess[:-1, :-1].copy(),
        A_T=tangential_from_jet(j, n),
        h=mean_curvature_from_jet(j, n),
    )


@dataclass(frozen=True)
class CurvaturePoint:
    location: np.ndarray
    A: np.ndarray
    sigma_values: tuple
    cone: symfun.ConeLabel


def curvature_point(u: ScalarField, x, k: int | None = None) -> CurvaturePoint:
    A = schouten(u, x)
    k = u.n if k is None else k
    return CurvaturePoint(
        location=np.asarray(x, dtype=float),
        A=A,
        sigma_values=tuple(symfun.sigmas(A, k)[1:]),
        cone=symfun.cone_classify(A),
    )


def sigma_k_curvature(u: ScalarField, x, k: int) -> float:
    if not 1 <= k <= u.n:
        raise DomainError(f"k={k} out of range [1, {u.n}]")
    return symfun.sigma(schouten(u, x), k)


def log_schouten(u: ScalarField, x) -> np.ndarray:
    """Covariant Schouten components -Hess W + dW (x) dW - |dW|^2/2 I, W = (2/(n-2)) ln u.

    Multiplying by u^(-4/(n-2)) gives the (1,1) form returned by ``schouten``.
    """
    j = u.jet(x)
    n = u.n
    c = 2.0 / (n - 2)
    gW = c * j.grad / j.val
    HW = c * (j.hess / j.val - np.outer(j.grad, j.grad) / j.val**2)
    A = -HW + np.outer(gW, gW) - 0.5 * (gW @ gW) * np.eye(n)
    return 0.5 * (A + A.T)


def cone_along(u: ScalarField, points, k: int) -> CheckReport:
    """Pass iff the Schouten tensor lies in Gamma_k^+ at every point.

    ``value`` is the worst margin min_j min_pts sigma_j for j <= k.
    """
    worst = math.inf
    worst_at = None
    failures = 0
    for p in np.atleast_2d(points):
        A = schouten(u, p)
        sig = symfun.sigmas(A, k)[1:]
        m = min(sig)
        if m < worst:
            worst, worst_at = m, p
        if symfun.cone_classify(A).max_k < k:
            failures += 1
    notes = [f"worst margin at {np.round(worst_at, 6).tolist()}"] if worst_at is not None else []
    if failures:
        notes.append(f"{failures} point(s) outside Gamma_{k}^+")
    return CheckReport(
        name=f"cone_along(k={k})",
        value=worst,
        reference=0.0,
        abs_err=max(0.0, -worst),
        tol=0.0,
        passed=failures == 0,
        notes=notes,
    )
