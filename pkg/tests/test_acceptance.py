"""Acceptance criteria 1-10, each printing one pass/fail line."""

import json
import math
import time

import numpy as np
import pytest

from conflab import symfun
from conflab.boundary import bk_h_derivative, bk_of_field, linearization_coeffs, verify_linearization
from conflab.fields import BubbleParams, bubble_field, parse_field, random_positive_expr
from conflab.liouville import certify_bubble, ball_checks, solve_family_for_c0, theorem_constraint_report
from conflab.mobius import (
    MobiusInversion,
    invariance_check_bk,
    invariance_check_sigma,
    lambda_bar,
    verify_kelvin_fixed_point,
    verify_lemma41,
)
from conflab.sampling import boundary_points, interior_points
from conflab.suite import BUBBLE_B, BUBBLE_CASES, _bubble, linearization_pairs, random_cone_matrix, sym_fd_gradient

LINES = {}


def record(num, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}"
    LINES[num] = line
    print(line)
    return ok


@pytest.fixture(scope="module")
def certs():
    t0 = time.perf_counter()
    out = []
    for i, (n, k) in enumerate(BUBBLE_CASES):
        for j, b in enumerate(BUBBLE_B):
            s = 10 * i + j
            out.append(certify_bubble(_bubble(n, b, s), k, samples=100, seed=s))
    return out, time.perf_counter() - t0


def test_criterion_01_bubble_sigma(certs):
    cs, secs = certs
    worst = max(c.sigma_err for c in cs)
    ok = worst <= 1e-8 and secs <= 10.0 and len(cs) == 15
    assert record(1, ok, f"worst relative sigma_k error {worst:.2e} (tol 1e-8), {secs:.2f} s (limit 10 s)")


def test_criterion_02_boundary_data(certs):
    cs, _ = certs
    at = max(c.AT_err for c in cs)
    h = max(c.h_err for c in cs)
    ok = at <= 1e-8 and h <= 1e-10
    assert record(2, ok, f"A_T max-norm error {at:.2e} (tol 1e-8), h error {h:.2e} (tol 1e-10)")


def test_criterion_03_bk_value():
    u = bubble_field(BubbleParams(4, 0.25, (0.0, 0.0, 0.0, -1.0)))
    vals = np.array([bk_of_field(u, x, 2) for x in boundary_points(np.random.default_rng(3), 50, 4)])
    h, _ = solve_family_for_c0(4, 2, 7.0)
    dev, spread = float(np.max(np.abs(vals - 7.0))), float(np.ptp(vals))
    ok = dev <= 1e-8 and spread <= 1e-9 and abs(h - 1.0) <= 1e-10
    assert record(3, ok, f"|B_2 - 7| {dev:.2e}, spread {spread:.2e}, |h - 1| {abs(h - 1):.2e}")


def test_criterion_04_monotonicity():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        n, k = [(4, 2), (5, 2), (6, 2), (6, 3), (8, 3), (8, 4)][rng.integers(6)]
        h = rng.uniform(0.1, 2.0)
        A_T = random_cone_matrix(rng, n - 1, k - 1)
        M = A_T + 0.5 * h * h * np.eye(n - 1)
        # reference is sigma_{k-1}(A_T) evaluated from A_T directly, not through the library's derivative
        ref = symfun.sigma(A_T, k - 1)
        _, rep = bk_h_derivative(M, h, n, k)
        worst = max(worst, abs(rep.value - ref) / abs(ref))
    assert record(4, worst <= 1e-6, f"worst relative FD vs sigma_(k-1)(A_T) {worst:.2e} (tol 1e-6), 100 inputs")


def test_criterion_05_linearization():
    reps = []
    for n, k in [(4, 2), (6, 3)]:
        for eps in (1e-2, 1e-3, 1e-4):
            for u0, u1, x, ch in linearization_pairs(n, k, eps):
                reps.append(verify_linearization(u0, u1, x, n, k, ch, nodes=64))
    worst = max(r.abs_err / r.tol for r in reps)
    diff = 0.0
    for u0, u1, x, _ in linearization_pairs(4, 2, 1e-2) + linearization_pairs(6, 3, 1e-2):
        n = u0.n
        k = 2 if n == 4 else 3
        c64 = linearization_coeffs(u0, u1, x, n, k, 64)
        c128 = linearization_coeffs(u0, u1, x, n, k, 128)
        diff = max(diff, abs(c64.b_n - c128.b_n), float(np.max(np.abs(c64.a - c128.a))))
    ok = all(r.passed for r in reps) and diff <= 1e-12
    assert record(5, ok, f"{len(reps)} vanishing-jet checks, worst err/tol {worst:.2e}; 64 vs 128 nodes {diff:.2e} (tol 1e-12)")


def test_criterion_06_invariance():
    rng = np.random.default_rng(6)
    maps = [MobiusInversion(tuple(rng.uniform(-1, 1, 3)) + (0.0,), float(rng.uniform(0.3, 2.0))) for _ in range(10)]
    ws, wb = 0.0, 0.0
    ok = True
    for i in range(100):
        u = parse_field(random_positive_expr(rng, 4), 4)
        rs = invariance_check_sigma(u, maps[i % 10], interior_points(rng, 5, 4), 2, tol=1e-6)
        rb = invariance_check_bk(u, maps[i % 10], boundary_points(rng, 5, 4), 2, tol=1e-6)
        ws, wb = max(ws, rs.value), max(wb, rb.value)
        ok = ok and rs.passed and rb.passed
    ok = ok and ws <= 1e-6 and wb <= 1e-6
    assert record(6, ok, f"worst sigma_2 invariance {ws:.2e}, B_2 invariance {wb:.2e} (tol 1e-6), 100 fields x 10 inversions")


def test_criterion_07_moving_spheres():
    t0 = time.perf_counter()
    u = bubble_field(BubbleParams(4, 1.0, (0.0, 0.0, 0.0, -1.0)))
    lb = lambda_bar(u, np.zeros(4)).lambda_bar
    rel = abs(lb / math.sqrt(2.0) - 1.0)
    mass = verify_lemma41(u, [[0, 0, 0, 0], [3, 0, 0, 0], [0, -2, 0, 0]])
    fp = verify_kelvin_fixed_point(u, np.zeros(4), closed_form=False)
    secs = time.perf_counter() - t0
    ok = rel <= 1e-3 and mass.passed and fp.passed and fp.abs_err <= 1e-6 * u.value(np.zeros(4)) and secs <= 60.0
    assert record(7, ok, f"lambda_bar(0) = {lb:.6f} (rel {rel:.1e}, tol 1e-3); mass identity err {mass.abs_err:.2e}/{mass.tol:.2e}; "
                         f"fixed point {fp.abs_err:.2e}/{fp.tol:.2e}; {secs:.1f} s (limit 60 s)")


def test_criterion_08_symfun():
    rng = np.random.default_rng(8)
    fd_worst, trace_ok = 0.0, True
    for _ in range(100):
        dim = int(rng.integers(3, 7))
        B = rng.standard_normal((dim, dim))
        A = 0.5 * (B + B.T)
        for k in range(1, dim + 1):
            G = symfun.sigma_gradient(A, k)
            fd = sym_fd_gradient(lambda X: symfun.sigma(X, k), A)
            fd_worst = max(fd_worst, float(np.max(np.abs(fd - G))) / max(1.0, float(np.max(np.abs(G)))))
            # trace of the Newton tensor: tr(grad sigma_k) = (dim - k + 1) sigma_(k-1)
            ref = (dim - k + 1) * symfun.sigma(A, k - 1)
            trace_ok = trace_ok and abs(np.trace(G) - ref) <= 1e-10 * (1.0 + abs(ref))
            trace_ok = trace_ok and symfun.newton_trace_check(A, k).passed
    ok = fd_worst <= 1e-7 and trace_ok
    assert record(8, ok, f"worst FD gradient error {fd_worst:.2e} (tol 1e-7); trace identity {'ok' if trace_ok else 'violated'} (tol 1e-10)")


def test_criterion_09_constraint_report():
    a = theorem_constraint_report(4, 2, 1.0)
    b = theorem_constraint_report(4, 2, 1.0)
    v = a.value
    vals_ok = v["LHS_paper"] == 5.5 and v["c0_direct"] == 7.0 and v["RHS_paper"] == 5.25
    same = json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    ok = vals_ok and same and a.informational and a.passed
    assert record(9, ok, f"LHS {v['LHS_paper']!r}, c0 {v['c0_direct']!r}, RHS {v['RHS_paper']!r}; bit-identical {same}; informational")


def test_criterion_10_ball():
    _, fam = solve_family_for_c0(4, 2, 7.0)
    reps = ball_checks(fam.member(0.25), 2, d=0.5, samples=100, seed=10)
    sig, bnd, fit = reps
    ok = (sig.abs_err <= 1e-6 and sig.passed and bnd.abs_err <= 1e-8 and bnd.passed
          and fit.abs_err <= 1e-8 and fit.passed)
    assert record(10, ok, f"ball sigma_2 {sig.abs_err:.2e} (tol 1e-6), boundary constancy {bnd.abs_err:.2e} (tol 1e-8), "
                          f"fit residual {fit.abs_err:.2e} (tol 1e-8)")
