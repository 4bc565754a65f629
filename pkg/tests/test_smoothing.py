from dataclasses import replace

import numpy as np
import pytest

from developable import (Constant, ConvexDomain, CurvatureProfile, DevelopableImmersion, FramedCurve,
                         Function, InvalidInput, MarginViolation, SmoothingConfig, WindowCollapsed,
                         convergence_report, margin_check, run_pipeline, run_stage)
from developable.frames import integrate_domain_frame
from developable.immersion import sphere_directions
from developable.profile import PiecewiseConstant, bump_cdf
from developable.smoothing import (build_smooth_curve, compute_ell_star, endpoint_cutoff,
                                   flatten_factor)

DIRS2 = sphere_directions(2)


def _smooth_bump(t):
    y = (np.asarray(t, dtype=float) - 0.9) / 0.65
    out = np.zeros_like(y)
    inside = np.abs(y) < 1
    out[inside] = np.exp(1 - 1 / (1 - y[inside] ** 2))
    return 0.4 * out


# -- margin ------------------------------------------------------------------


def test_margin_straight_is_unbounded(flat_disc):
    assert margin_check(flat_disc) == np.inf


def test_margin_circle_radius_two():
    prof = CurvatureProfile.constant(0.8, [0.5])
    curve = FramedCurve.build(prof, np.eye(2), 1e-3)
    mid, _ = curve.domain.state(np.array(0.4))
    imm = DevelopableImmersion(curve, ConvexDomain.ball(mid, 0.5))
    # fronts meet at the centre (L = 2) while S <= 1
    assert margin_check(imm) >= 1.0


def test_margin_violation_has_witness():
    prof = CurvatureProfile.constant(0.8, [1.0])
    curve = FramedCurve.build(prof, np.eye(2), 1e-3)
    mid, _ = curve.domain.state(np.array(0.4))
    imm = DevelopableImmersion(curve, ConvexDomain.ball(mid, 1.5))
    with pytest.raises(MarginViolation) as info:
        margin_check(imm)
    t, direction = info.value.witness
    assert 0.0 <= t <= 0.8 and direction == (1.0,)


# -- flattening and cutoffs --------------------------------------------------------


def test_flatten_factor_examples():
    trial = integrate_domain_frame(CurvatureProfile.constant(0.2, [0.1]), np.eye(2), 1e-3)
    _, lam = flatten_factor(trial, ConvexDomain.ball(trial.points[100], 1.0), 1.0, DIRS2)
    assert np.all(lam == 1.0)
    straight = integrate_domain_frame(CurvatureProfile.constant(0.2, [0.0]), np.eye(2), 1e-3)
    _, lam = flatten_factor(straight, ConvexDomain.ball(straight.points[100], 1.0), 1.0, DIRS2)
    assert np.all(lam == 1.0)


def test_flatten_factor_halves_at_the_critical_point():
    # kappa = 2 and S + rho/2 = 0.5 + 0.5 = 1 at t0 = 0.1
    trial = integrate_domain_frame(CurvatureProfile.constant(0.2, [2.0]), np.eye(2), 1e-3)
    g0, _ = trial.state(np.array(0.1))
    t, lam = flatten_factor(trial, ConvexDomain.ball(g0, 0.5), 1.0, DIRS2)
    k = int(np.argmin(np.abs(t - 0.1)))
    assert lam[k] == pytest.approx(0.5, abs=1e-5)
    assert np.all((lam > 0) & (lam <= 1))


def test_endpoint_cutoff_examples():
    base = Constant(2.0)
    m, ell_star = 10.0, 1.0
    cut = endpoint_cutoff(base, m, ell_star)
    assert cut(np.array(0.5)) == 2.0                  # both cutoffs equal 1
    assert np.all(cut(np.linspace(0, 0.1, 11)) == 0.0)  # m t <= 1
    assert np.all(cut(np.linspace(0.9, 1.0, 11)) == 0.0)
    assert cut(np.array(0.15)) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(WindowCollapsed):
        endpoint_cutoff(base, 1.0, 1.5)


# -- ell* ------------------------------------------------------------------------


def test_ell_star_identical_curves():
    curve = integrate_domain_frame(CurvatureProfile.constant(1.0, [0.3]), np.eye(2), 1e-3)
    assert compute_ell_star(curve, curve, ConvexDomain.ball([0.5, 0.1], 0.8), DIRS2) == 1.0


@pytest.mark.parametrize("alpha", [0.02, 0.05, 0.1])
def test_ell_star_rotated_line(alpha):
    domain = ConvexDomain.ball([0.5, 0.0], 0.8)
    prof = CurvatureProfile.constant(1.0, [0.0])
    curve = integrate_domain_frame(prof, np.eye(2), 1e-3)
    rot = np.array([[np.cos(alpha), np.sin(alpha)], [-np.sin(alpha), np.cos(alpha)]])
    tilted = integrate_domain_frame(prof, rot, 1e-3)
    # the last plane of the straight curve is x1 = 1, |x2| <= h; the tilted front
    # x . (cos a, sin a) = t first touches it at its lower end point
    h = np.sqrt(0.8**2 - 0.5**2)
    expected = np.cos(alpha) - h * np.sin(alpha)
    assert compute_ell_star(tilted, curve, domain, DIRS2) == pytest.approx(expected, abs=1e-10)


def test_ell_star_tends_to_length(corner_stages, corner):
    _, records = corner_stages
    values = [r.ell_star for r in records]
    assert np.all(np.diff(values) >= 0)
    assert values[-1] >= corner.length - 1e-3
    assert all(v <= corner.length for v in values)


# -- stages ----------------------------------------------------------------------


def test_zero_profile_stage(flat_disc):
    rec = run_stage(flat_disc, SmoothingConfig(), 8)
    assert np.all(rec.lambda_values == 1.0)
    assert np.array_equal(rec.curve.points, flat_disc.curve.domain.points)
    assert np.all(rec.immersion.hessian_at(np.array([[0.1, 0.2], [-0.5, 0.3]])) == 0.0)


def test_smooth_profile_is_reproduced_at_large_m(unit_disc):
    kappa = Function(lambda t: 0.3 + 0.1 * np.cos(np.pi * t / 1.8), 0.4)
    prof = CurvatureProfile(1.8, (kappa,), normal=Constant(0.5))
    curve = FramedCurve.build(prof, np.eye(2), 1e-3, origin=[-0.9, -0.3])
    imm = DevelopableImmersion(curve, unit_disc)
    rho = min(1.0, margin_check(imm))
    rec = build_smooth_curve(imm, SmoothingConfig(rho=rho), 200)
    t = np.linspace(0, 1.8, 721)
    assert np.max(np.abs(rec.final.kappa[0](t) - kappa(t))) <= 1e-6
    assert np.all(rec.lambda_values == 1.0)


def test_step_curvature_stages_pass(step_curvature):
    rho = min(1.0, margin_check(step_curvature))
    config = SmoothingConfig(rho=rho)
    shrunk = []
    for m in config.schedule:
        rec = build_smooth_curve(step_curvature, config, m)
        shrunk.append(rec.lambda_deficit_fraction())
        assert set(rec.inequalities) == {"curvature_rho2", "curvature_rho4", "curvature_rho8"}
        assert all(v <= 1 + 1e-9 for v in rec.inequalities.values())
        assert rec.jacobian_min >= rec.jacobian_floor - 1e-9
        assert np.all((rec.lambda_values > 0) & (rec.lambda_values <= 1))
        # discrete continuity of lambda: adjacent jumps bounded by C dt with a moderate C
        jumps = np.abs(np.diff(rec.lambda_values)) / np.diff(rec.lambda_times)
        assert np.max(jumps) < 50 * m
    # the share of flattened grid points does not grow along the schedule
    assert np.all(np.diff(shrunk) <= 0)


def test_polytope_domain_is_rejected():
    box = ConvexDomain.box([-1.0, -1.0], [1.0, 1.0])
    curve = FramedCurve.build(CurvatureProfile.constant(1.0, [0.0], normal=1.0), np.eye(2), 1e-2,
                              origin=[-0.5, 0.0])
    with pytest.raises(InvalidInput):
        build_smooth_curve(DevelopableImmersion(curve, box), SmoothingConfig(), 4)


def test_window_collapse_surfaces(corner):
    with pytest.raises(WindowCollapsed):
        run_stage(corner, SmoothingConfig(schedule=(1,)), 1)


def test_corner_immersions(corner_stages):
    _, records = corner_stages
    for rec in records:
        assert rec.validation.passed
        assert rec.validation.isometry_residual <= 1e-8
        m = rec.m
        imm = rec.immersion
        # affine inside both cutoff windows
        for t0 in (0.5 / m, rec.ell_star - 0.5 / m, 0.5 * (rec.ell_star + imm.length)):
            t = np.full(5, min(t0, imm.length))
            s = np.linspace(-0.2, 0.2, 5)[:, None]
            assert np.all(imm.hessian(t, s) == 0.0)
        # the Hessian vanishes exactly where the cut-off normal curvature does
        t = np.linspace(0, imm.length, 400)
        zero = imm.curve.effective_normal(t) == 0.0
        H = imm.hessian(t, np.zeros((400, 1)))
        assert np.all(H[zero] == 0.0)


def test_corner_convergence(corner, corner_stages):
    config, records = corner_stages
    report = convergence_report(corner, records, config)
    errors = report.errors
    assert np.all(np.diff(errors) < 0)
    assert errors[-1] / errors[0] < 0.25
    assert report.monotone


def test_identical_maps_have_zero_error(corner, corner_stages):
    config, records = corner_stages
    same = DevelopableImmersion(corner.curve, corner.domain, extend_affine=True)
    report = convergence_report(corner, [replace(records[0], immersion=same)], config)
    row = report.rows[0]
    assert row.grad == 0.0 and row.hess == 0.0
    assert row.total <= 1e-24   # rounding in the value difference only


def test_threads_do_not_change_results(corner, corner_stages):
    config, records = corner_stages
    threaded = run_pipeline(corner, config, threads=3)
    for a, b in zip(records, threaded):
        assert a.m == b.m
        assert np.array_equal(a.immersion.curve.target.frames, b.immersion.curve.target.frames)


@pytest.mark.slow
def test_smooth_input_self_approximation(unit_disc):
    prof = CurvatureProfile(1.8, (Constant(0.0),), normal=Function(_smooth_bump, 0.4, (0.25, 1.55)))
    imm = DevelopableImmersion(FramedCurve.build(prof, np.eye(2), 1e-3, origin=[-0.9, 0.0]), unit_disc)
    config = SmoothingConfig(rho=1.0)
    report = convergence_report(imm, run_pipeline(imm, config), config)
    assert report.errors[-1] <= 1e-6
