import json
import math

import numpy as np
import pytest

from conflab.boundary import bk_umbilic
from conflab.errors import DomainError
from conflab.fields import BubbleParams, bubble_field
from conflab.liouville import (
    certify_bubble,
    ball_checks,
    fit_bubble,
    sigma_normalization,
    solve_family_for_c0,
    theorem_constraint_report,
    verify_corollary_ball,
)
from conflab.sampling import ball_points


def test_sigma_normalization():
    assert sigma_normalization(4, 2) == 24.0
    assert sigma_normalization(6, 3) == 160.0


@pytest.mark.parametrize("c0, h", [(7.0, 1.0), (20.0, 2.0)])
def test_certificate_for_hand_solved_family(c0, h):
    # for n=4, k=2 the boundary operator on 2I is h^3 + 6h
    got, fam = solve_family_for_c0(4, 2, c0)
    assert got == pytest.approx(h, abs=1e-12)
    for b in (0.25, 1.0, 3.0):
        cert = certify_bubble(fam.member(b, [0.3, -0.1, 0.2]), 2)
        assert cert.passed, cert.to_dict()
        assert cert.c0 == pytest.approx(c0, rel=1e-10)
        assert all(r.passed for r in cert.reports())


def test_certificate_n6_k3():
    p = BubbleParams(6, 0.5, (0.1, 0.0, -0.2, 0.0, 0.3, -0.8))
    cert = certify_bubble(p, 3)
    assert cert.passed
    ref = bk_umbilic(6, 3, 2 * np.eye(5), p.mean_curvature)
    assert cert.c0 == pytest.approx(ref, rel=1e-10)
    json.dumps(cert.to_dict())


def test_certificate_rejects_small_n():
    with pytest.raises(DomainError):
        certify_bubble(BubbleParams(4, 1.0, (0, 0, 0, -1.0)), 3)


def test_family_round_trip():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(4, 9))
        k = int(rng.integers(1, n // 2 + 1))
        c0 = float(rng.uniform(0.05, 50))
        h, fam = solve_family_for_c0(n, k, c0)
        p = fam.member(float(rng.uniform(0.2, 4)), rng.uniform(-1, 1, n - 1))
        assert p.mean_curvature == pytest.approx(h, rel=1e-12)
        assert bk_umbilic(n, k, 2 * np.eye(n - 1), p.mean_curvature) == pytest.approx(c0, rel=1e-10)
    assert "xbar_n" in fam.describe()


def test_family_degenerates_as_c0_vanishes():
    h, fam = solve_family_for_c0(4, 2, 1e-10)
    assert abs(h) <= 1e-10
    assert abs(fam.member(1.0).center[-1]) <= 1e-10
    with pytest.raises(DomainError):
        fam.member(0.0)


def test_constraint_report_values():
    rep = theorem_constraint_report(4, 2, 1.0)
    assert rep.informational and rep.passed
    v = rep.value
    # hand evaluation at h = 1: 6/(2*3) + 6/(2*4) * 6 = 5.5, and 3/4 of B_2 = 7
    assert v["LHS_paper"] == pytest.approx(5.5, rel=1e-14)
    assert v["c0_direct"] == pytest.approx(7.0, rel=1e-14)
    assert v["RHS_paper"] == pytest.approx(5.25, rel=1e-14)
    assert v["ratio"] == pytest.approx(5.5 / 5.25, rel=1e-14)
    assert v["LHS_alt_sigma_2I_n"] == pytest.approx(7.0, rel=1e-14)
    again = theorem_constraint_report(4, 2, 1.0)
    assert json.dumps(again.to_dict()) == json.dumps(rep.to_dict())
    with pytest.raises(DomainError):
        theorem_constraint_report(3, 2, 1.0)


def test_fit_bubble_recovers_parameters():
    p = BubbleParams(5, 1.7, (0.2, -0.3, 0.1, 0.0, -0.6))
    pts = ball_points(np.random.default_rng(0), 30, np.zeros(5), 1.0)
    got = fit_bubble(pts, bubble_field(p).values(pts), 5)
    assert got.b == pytest.approx(p.b, rel=1e-10)
    np.testing.assert_allclose(got.center, p.center, atol=1e-10)


def test_ball_checks_pass():
    h, fam = solve_family_for_c0(4, 2, 7.0)
    reps = ball_checks(fam.member(0.25), 2, d=0.5)
    assert len(reps) == 3 and all(r.passed for r in reps), [r.line() for r in reps]
    assert reps[1].value == pytest.approx(7.0, rel=1e-9)
    assert verify_corollary_ball(BubbleParams(6, 1.0, (0.0,) * 5 + (-0.5,)), 3, d=0.8, samples=30).passed


def test_ball_check_notes_tiny_radius():
    p = BubbleParams(4, 1.0, (0, 0, 0, -1.0))
    reps = ball_checks(p, 2, d=1e-6, samples=10)
    assert all(any("tiny" in n for n in r.notes) for r in reps)
