import math

import numpy as np
import pytest

from conflab.errors import DomainError, ResolutionError
from conflab.fields import BubbleParams, ConstantField, bubble_field, parse_field, random_positive_expr
from conflab.mobius import (
    GridSpec,
    MobiusInversion,
    alpha_estimate,
    apply_inversion,
    bk_sphere,
    feasibility,
    halfspace_to_ball,
    invariance_check_bk,
    invariance_check_sigma,
    lambda_bar,
    decay_bound_check,
    parallel_map,
    sweep_workers,
    verify_kelvin_fixed_point,
    verify_lemma41,
)
from conflab.sampling import boundary_points, interior_points, sphere_points

BUBBLE = BubbleParams(4, 1.0, (0.0, 0.0, 0.0, -1.0))


def test_apply_inversion_examples():
    m = MobiusInversion((0.0, 0.0, 0.0, 0.0), 1.0)
    np.testing.assert_allclose(apply_inversion(m, [2.0, 0, 0, 0]), [0.5, 0, 0, 0])
    rng = np.random.default_rng(0)
    m = MobiusInversion((0.3, -0.2, 0.1, 0.0), 0.8)
    y = interior_points(rng, 50, 4)
    np.testing.assert_allclose(apply_inversion(m, apply_inversion(m, y)), y, atol=1e-12)
    s = sphere_points(rng, 20, m.center, m.radius)
    np.testing.assert_allclose(apply_inversion(m, s), s, atol=1e-12)
    with pytest.raises(DomainError):
        apply_inversion(m, m.center)


def test_inversion_validation():
    with pytest.raises(DomainError):
        MobiusInversion((0.0, 0.0, 1.0), 1.0)
    with pytest.raises(DomainError):
        MobiusInversion((0.0, 0.0, 0.0), -1.0)


def test_invariance_on_bubbles_and_flat():
    rng = np.random.default_rng(1)
    m = MobiusInversion((0.4, 0.0, -0.3, 0.0), 1.3)
    u = bubble_field(BUBBLE)
    rep = invariance_check_sigma(u, m, interior_points(rng, 10, 4), 2)
    assert rep.passed
    assert invariance_check_bk(u, m, boundary_points(rng, 10, 4), 2).passed
    flat = ConstantField(1.0, 4)
    m0 = MobiusInversion((0.0, 0.0, 0.0, 0.0), 1.0)
    assert invariance_check_sigma(flat, m0, interior_points(rng, 5, 4), 2).passed
    assert invariance_check_bk(flat, m0, boundary_points(rng, 5, 4), 2).passed


def test_invariance_on_random_fields():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n = int(rng.integers(4, 7))
        k = int(rng.integers(1, n // 2 + 1))
        u = parse_field(random_positive_expr(rng, n), n)
        m = MobiusInversion(tuple(rng.uniform(-1, 1, n - 1)) + (0.0,), float(rng.uniform(0.3, 2)))
        assert invariance_check_sigma(u, m, interior_points(rng, 4, n), k).passed
        assert invariance_check_bk(u, m, boundary_points(rng, 4, n), k).passed


def test_halfspace_to_ball():
    d = 0.5
    u = bubble_field(BubbleParams(4, 0.25, (0.0, 0.0, 0.0, -1.0)))
    v = halfspace_to_ball(u, d, [0.0, 0.0, 0.0])
    p = np.array([0.0, 0.0, 0.0, -d])
    q = np.array([0.0, 0.0, 0.0, d])
    rng = np.random.default_rng(3)
    z = sphere_points(rng, 50, q, 2 * d)
    img = v.image(z)
    np.testing.assert_allclose(np.linalg.norm(img - p, axis=1) * np.linalg.norm(z - p, axis=1), 4 * d * d, atol=1e-10)
    np.testing.assert_allclose(img[:, -1], 0.0, atol=1e-12)
    with pytest.raises(DomainError):
        v.value([0.0, 0.0, 0.0, 2.0])
    with pytest.raises(DomainError):
        halfspace_to_ball(u, 0.0, [0, 0, 0])


def test_ball_boundary_trace_is_constant():
    # u with trace (a/(d^2 + |x'|^2))^((n-2)/2) on x_n = 0 gives v = a^((n-2)/2) (2d)^(2-n) on the sphere
    n, d, a = 4, 0.7, 1.9
    u = parse_field(f"{a}/({d}^2 + x1^2 + x2^2 + x3^2 + x4^2)", n)
    v = halfspace_to_ball(u, d, [0.0, 0.0, 0.0])
    q = np.array([0.0, 0.0, 0.0, d])
    z = sphere_points(np.random.default_rng(4), 30, q, 2 * d)
    z = q + (1 - 1e-13) * (z - q)
    np.testing.assert_allclose(v.values(z), a * (2 * d) ** (2 - n), rtol=1e-10)


def test_sphere_bk_matches_halfspace_bubble():
    u = bubble_field(BubbleParams(4, 1.0, (0.2, 0.0, 0.0, -1.0)))
    v = halfspace_to_ball(u, 0.5, [0.0, 0.0, 0.0])
    q = np.array([0.0, 0.0, 0.0, 0.5])
    for z in sphere_points(np.random.default_rng(5), 10, q, 1.0):
        zi = q + (1 - 1e-12) * (z - q)
        assert bk_sphere(v, zi, q, 1.0, 2) == pytest.approx(20.0, rel=1e-9)


def test_alpha_estimate():
    assert alpha_estimate(bubble_field(BUBBLE)) == pytest.approx(1.0, abs=1e-5)
    assert alpha_estimate(bubble_field(BubbleParams(4, 4.0, (0, 0, 0, -1.0)))) == pytest.approx(0.5, abs=1e-5)
    assert alpha_estimate(parse_field("(x1^2 + x2^2 + x3^2 + x4^2)^(-1)", 4)) == pytest.approx(1.0, rel=1e-12)
    assert alpha_estimate(ConstantField(1.0, 4)) == math.inf
    assert alpha_estimate(parse_field("(1 + x1^2 + x2^2 + x3^2 + (x4 - 1)^2)^(-2)", 4)) == 0.0
    with pytest.raises(DomainError):
        alpha_estimate(ConstantField(1.0, 4), radii=[10.0])


def test_lambda_bar_bubble_and_scaling():
    u = bubble_field(BUBBLE)
    res = lambda_bar(u, np.zeros(4))
    assert res.lambda_bar == pytest.approx(math.sqrt(2), rel=1e-3)
    assert res.margin_below >= -1e-12
    assert res.failure_at is not None and res.failure_margin < 0
    doubled = bubble_field(BubbleParams(4, 0.25, (0.0, 0.0, 0.0, -2.0)))
    assert lambda_bar(doubled, np.zeros(4)).lambda_bar == pytest.approx(2 * res.lambda_bar, rel=1e-3)


def test_lambda_bar_non_bubble_certificate():
    u = parse_field("(x1^2 + x2^2 + x3^2 + (x4 + 1)^2)^(-1)", 4)
    res = lambda_bar(u, np.zeros(4))
    assert math.isfinite(res.lambda_bar)
    assert feasibility(u, np.zeros(4), res.lambda_bar * 0.999, GridSpec()).feasible
    assert not feasibility(u, np.zeros(4), res.lambda_bar * 1.001, GridSpec()).feasible


def test_lambda_bar_flat_is_infinite():
    assert lambda_bar(ConstantField(1.0, 4), np.zeros(4)).lambda_bar == math.inf


def test_lambda_bar_rejects_interior_point():
    with pytest.raises(DomainError):
        lambda_bar(bubble_field(BUBBLE), [0.0, 0.0, 0.0, 1.0])


def test_monotonicity_violation_is_a_resolution_error(monkeypatch):
    # feasible again just above the bisected radius, so the certificate exposes the wobble
    from conflab import mobius

    real = mobius.feasibility

    def fake(u, x, lam, grid, dirs=None):
        f = real(u, x, lam, grid, dirs)
        f.feasible = lam < 1.5 or 1.5012 < lam < 1.502
        return f

    monkeypatch.setattr(mobius, "feasibility", fake)
    with pytest.raises(ResolutionError, match="not monotone"):
        mobius.lambda_bar(ConstantField(1.0, 4), np.zeros(4))


def test_mass_identity_and_fixed_point():
    u = bubble_field(BUBBLE)
    assert verify_lemma41(u, [[0, 0, 0, 0], [3, 0, 0, 0], [0, -2, 0, 0]]).passed
    flat = verify_lemma41(ConstantField(1.0, 4), [[0, 0, 0, 0]])
    assert flat.informational and not flat.passed
    assert verify_kelvin_fixed_point(u, np.zeros(4)).passed
    assert verify_kelvin_fixed_point(u, [5.0, 0, 0, 0], closed_form=False).passed
    rep = verify_kelvin_fixed_point(ConstantField(1.0, 4), np.zeros(4))
    assert not rep.passed


@pytest.mark.slow
def test_mass_identity_n6():
    u = bubble_field(BubbleParams(6, 0.5, (0.0,) * 5 + (-1.0,)))
    assert verify_lemma41(u, [[0.0] * 6, [1.0] + [0.0] * 5]).passed


def test_decay_bound_on_bubbles():
    assert decay_bound_check(bubble_field(BUBBLE)).passed
    assert decay_bound_check(bubble_field(BubbleParams(5, 2.0, (0.3, 0, 0, 0, -0.5)))).passed


def test_parallel_map_is_ordered(monkeypatch):
    monkeypatch.setenv("CONFLAB_THREADS", "4")
    assert sweep_workers() == 4
    assert parallel_map(lambda v: v * v, range(10)) == [v * v for v in range(10)]
    monkeypatch.setenv("CONFLAB_THREADS", "junk")
    assert sweep_workers() == 1


def test_threaded_lambda_bar_is_identical(monkeypatch):
    u = bubble_field(BUBBLE)
    serial = lambda_bar(u, np.zeros(4)).to_dict()
    monkeypatch.setenv("CONFLAB_THREADS", "3")
    assert lambda_bar(u, np.zeros(4)).to_dict() == serial


def test_grid_spec_from_dict():
    g = GridSpec.from_dict({"shells": 16, "r_far_factor": 100.0, "angular": 50, "seed": 2})
    assert g.radii(2.0)[-1] == pytest.approx(200.0)
    with pytest.raises(DomainError):
        GridSpec.from_dict({"shells": 16, "bogus": 1})
    with pytest.raises(DomainError):
        GridSpec(shells=1)
