"""The acceptance suite as a library call: one list of CheckReports per criterion."""

from __future__ import annotations

import math

import numpy as np

from . import symfun
from .boundary import bk_h_derivative, bk_of_field, linearization_coeffs, verify_linearization
from .fdcheck import fd_derivative
from .fields import BubbleParams, bubble_field, parse_field, perturb_field, random_positive_expr
from .liouville import certify_bubble, ball_checks, solve_family_for_c0, theorem_constraint_report
from .mobius import (
    GridSpec,
    MobiusInversion,
    invariance_check_bk,
    invariance_check_sigma,
    lambda_bar,
    verify_kelvin_fixed_point,
    verify_lemma41,
)
from .report import CheckReport
from .sampling import boundary_points, interior_points

BUBBLE_CASES = [(4, 2), (5, 2), (6, 2), (6, 3), (8, 3)]
BUBBLE_B = [0.3, 1.0, 4.0]


def _worst(name, errs, tol, notes=None) -> CheckReport:
    e = float(np.max(errs))
    return CheckReport(name, e, 0.0, e, tol, e <= tol, notes=notes or [])


def _bubble(n, b, seed):
    rng = np.random.default_rng(seed)
    center = np.concatenate([rng.uniform(-1, 1, n - 1), [-rng.uniform(0.2, 1.5)]])
    return BubbleParams(n, b, tuple(center))


def certificates(seed: int = 0):
    out = []
    for i, (n, k) in enumerate(BUBBLE_CASES):
        for j, b in enumerate(BUBBLE_B):
            out.append(certify_bubble(_bubble(n, b, seed + 10 * i + j), k, samples=100, seed=seed + 10 * i + j))
    return out


def criterion_bubble_sigma(seed: int = 0, certs=None) -> list[CheckReport]:
    certs = certs or certificates(seed)
    return [_worst("bubble sigma_k = 2^k binom(n,k), relative", [c.sigma_err for c in certs], 1e-8,
                   [f"{len(certs)} bubbles x 100 interior points"])]


def criterion_boundary_data(seed: int = 0, certs=None) -> list[CheckReport]:
    certs = certs or certificates(seed)
    return [
        _worst("bubble A_T = 2I, max-norm", [c.AT_err for c in certs], 1e-8),
        _worst("bubble h = -2 sqrt(b) xbar_n", [c.h_err for c in certs], 1e-10),
    ]


def criterion_bk_value(seed: int = 0) -> list[CheckReport]:
    p = BubbleParams(4, 0.25, (0.0, 0.0, 0.0, -1.0))
    u = bubble_field(p)
    pts = boundary_points(np.random.default_rng(seed), 50, 4)
    vals = np.array([bk_of_field(u, x, 2) for x in pts])
    h, _ = solve_family_for_c0(4, 2, 7.0)
    dev = float(np.max(np.abs(vals - 7.0)))
    spread = float(np.ptp(vals))
    return [
        CheckReport("B_2 = 7 for the h = 1 bubble (n=4)", float(np.mean(vals)), 7.0, dev, 1e-8, dev <= 1e-8),
        CheckReport("B_2 spread over 50 boundary points", spread, 0.0, spread, 1e-9, spread <= 1e-9),
        CheckReport("solve_family_for_c0(4, 2, 7) = 1", h, 1.0, abs(h - 1.0), 1e-10, abs(h - 1.0) <= 1e-10),
    ]


def random_cone_matrix(rng, dim: int, k: int) -> np.ndarray:
    """Random symmetric matrix in Gamma_k^+ with sigma_1..sigma_k bounded away from 0."""
    while True:
        q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        eig = rng.uniform(0.2, 3.0, dim)
        if dim > k and rng.random() < 0.5:
            eig[0] = -rng.uniform(0.0, 0.3)
        A = q @ np.diag(eig) @ q.T
        A = 0.5 * (A + A.T)
        if k == 0 or symfun.cone_classify(A).max_k >= k:
            return A


def criterion_monotonicity(seed: int = 0, trials: int = 100) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(trials):
        n, k = [(4, 2), (5, 2), (6, 2), (6, 3), (8, 3), (8, 4)][rng.integers(6)]
        h = rng.uniform(0.1, 2.0)
        A_T = random_cone_matrix(rng, n - 1, k - 1)
        M = A_T + 0.5 * h * h * np.eye(n - 1)
        deriv, rep = bk_h_derivative(M, h, n, k)
        errs.append(abs(rep.value - deriv) / abs(deriv))
    return [_worst("FD dB_k/dh at fixed M vs sigma_{k-1}(A_T), relative", errs, 1e-6, [f"{trials} inputs"])]


def linearization_pairs(n: int = 4, k: int = 2, eps: float = 1e-3):
    """(u0, u1, x', channel) pairs whose difference annihilates the other channels at x'."""
    u0 = bubble_field(BubbleParams(n, 0.25, (0.1,) + (0.0,) * (n - 2) + (-1.0,)))
    xs = [f"x{i + 1}" for i in range(n)]
    tang = " + ".join(f"{x}^2" for x in xs[:-1])
    bump_n = parse_field(f"x{n}*exp(-({tang}) - x{n}^2)", n)
    bump_a = parse_field(f"(x1 - 0.3)^2*exp(-((x1 - 0.3)^2 + " + " + ".join(f"{x}^2" for x in xs[1:]) + "))", n)
    bump_ab = parse_field(f"(x1 - 0.3)*(x2 + 0.2)*exp(-(" + " + ".join(f"{x}^2" for x in xs) + "))", n)
    xa = np.zeros(n)
    xa[0] = 0.3
    xab = np.zeros(n)
    xab[0], xab[1] = 0.3, -0.2
    return [
        (u0, perturb_field(u0, bump_n, eps), np.zeros(n), "b_n"),
        (u0, perturb_field(u0, bump_a, eps), xa, "a"),
        (u0, perturb_field(u0, bump_ab, eps), xab, "a"),
    ]


def criterion_linearization(seed: int = 0) -> list[CheckReport]:
    out = []
    for n, k in [(4, 2), (6, 3)]:
        for eps in (1e-2, 1e-3, 1e-4):
            for u0, u1, x, ch in linearization_pairs(n, k, eps):
                out.append(verify_linearization(u0, u1, x, n, k, ch))
    diffs = []
    for u0, u1, x, _ in linearization_pairs(4, 2, 1e-2):
        c64 = linearization_coeffs(u0, u1, x, 4, 2, 64)
        c128 = linearization_coeffs(u0, u1, x, 4, 2, 128)
        diffs.append(max(abs(c64.b_n - c128.b_n), float(np.max(np.abs(c64.a - c128.a)))))
    out.append(_worst("quadrature 64 vs 128 nodes", diffs, 1e-12))
    return out


def criterion_invariance(seed: int = 0, fields: int = 100, inversions: int = 10, n: int = 4, k: int = 2) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    maps = [MobiusInversion(tuple(rng.uniform(-1, 1, n - 1)) + (0.0,), float(rng.uniform(0.3, 2.0)))
            for _ in range(inversions)]
    sig, bk = [], []
    for i in range(fields):
        u = parse_field(random_positive_expr(rng, n), n)
        m = maps[i % inversions]
        sig.append(invariance_check_sigma(u, m, interior_points(rng, 5, n), k))
        bk.append(invariance_check_bk(u, m, boundary_points(rng, 5, n), k))
    notes = [f"{fields} parsed fields, {inversions} inversions, 5 points each"]
    return [
        _worst(f"sigma_{k} invariance under inversion", [r.value for r in sig], 1e-6, notes),
        _worst(f"B_{k} invariance under inversion", [r.value for r in bk], 1e-6, notes),
    ]


def criterion_moving_spheres(seed: int = 0, grid: GridSpec | None = None) -> list[CheckReport]:
    grid = grid or GridSpec(seed=seed)
    u = bubble_field(BubbleParams(4, 1.0, (0.0, 0.0, 0.0, -1.0)))
    res = lambda_bar(u, np.zeros(4), grid)
    rel = abs(res.lambda_bar / math.sqrt(2.0) - 1.0)
    out = [CheckReport("lambda_bar(0) = sqrt(2)", res.lambda_bar, math.sqrt(2.0), rel * math.sqrt(2.0),
                       1e-3 * math.sqrt(2.0), rel <= 1e-3, notes=[f"{res.evaluations} feasibility sweeps"])]
    out.append(verify_lemma41(u, [[0, 0, 0, 0], [3, 0, 0, 0], [0, -2, 0, 0]], grid))
    out.append(verify_kelvin_fixed_point(u, np.zeros(4), grid, closed_form=False))
    return out


def criterion_symfun(seed: int = 0, trials: int = 100) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    fd_errs, trace_ok = [], []
    for _ in range(trials):
        dim = int(rng.integers(3, 7))
        B = rng.standard_normal((dim, dim))
        A = 0.5 * (B + B.T)
        for k in range(1, dim + 1):
            G = symfun.sigma_gradient(A, k)
            fd = sym_fd_gradient(lambda X: symfun.sigma(X, k), A)
            fd_errs.append(float(np.max(np.abs(fd - G)) / max(1.0, float(np.max(np.abs(G))))))
            trace_ok.append(symfun.newton_trace_check(A, k))
    worst_trace = max(trace_ok, key=lambda r: r.abs_err / r.tol)
    return [
        _worst("sigma_gradient vs central differences, relative", fd_errs, 1e-7, [f"{trials} matrices, dims 3-6"]),
        CheckReport("Newton trace identity", worst_trace.value, worst_trace.reference, worst_trace.abs_err,
                    worst_trace.tol, all(r.passed for r in trace_ok), notes=["worst case over all (A, s)"]),
    ]


def sym_fd_gradient(f, A, step: float = 1e-5) -> np.ndarray:
    """Entrywise dF/dA_ij by central differences along symmetric directions.

    Moving A_ij and A_ji together changes f by G_ij + G_ji = 2 G_ij for i != j.
    """
    dim = A.shape[0]
    G = np.zeros((dim, dim))
    for i in range(dim):
        for j in range(i, dim):
            E = np.zeros((dim, dim))
            E[i, j] = E[j, i] = 1.0
            d = fd_derivative(lambda t: f(A + t * E), 0.0, step)
            G[i, j] = G[j, i] = d if i == j else 0.5 * d
    return G


def criterion_constraint_report() -> list[CheckReport]:
    return [theorem_constraint_report(4, 2, h) for h in (0.5, 1.0, 2.0)]


def criterion_ball(seed: int = 0) -> list[CheckReport]:
    h, fam = solve_family_for_c0(4, 2, 7.0)
    return ball_checks(fam.member(0.25), 2, d=0.5, samples=100, seed=seed)


def run_suite(seed: int = 0, grid: GridSpec | None = None) -> list[CheckReport]:
    certs = certificates(seed)
    out = []
    out += criterion_bubble_sigma(seed, certs)
    out += criterion_boundary_data(seed, certs)
    out += criterion_bk_value(seed)
    out += criterion_monotonicity(seed)
    out += criterion_linearization(seed)
    out += criterion_invariance(seed)
    out += criterion_moving_spheres(seed, grid)
    out += criterion_symfun(seed)
    out += criterion_constraint_report()
    out += criterion_ball(seed)
    return out
