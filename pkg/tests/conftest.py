import numpy as np
import pytest

from developable import (Constant, ConvexDomain, CurvatureProfile, DevelopableImmersion, FramedCurve,
                         PiecewiseConstant)

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when != "call":
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    prev = _ACCEPTANCE.get(number)
    passed = rep.passed and (prev is None or prev[1])
    details = f"{prev[3]}; {detail}" if prev and prev[3] else detail
    _ACCEPTANCE[number] = (title, passed, (prev[2] if prev else 0.0) + rep.duration, details)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, secs, detail = _ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title} ({secs:.1f} s) {detail}")


# -- shared geometry ------------------------------------------------------------


@pytest.fixture(scope="session")
def unit_disc():
    return ConvexDomain.ball([0.0, 0.0], 1.0)


@pytest.fixture(scope="session")
def cylinder():
    """Unit-square cylinder: straight leading curve, kappa_n = 1."""
    box = ConvexDomain.box([-1e-9, -0.5], [1.0 + 1e-9, 0.5])
    prof = CurvatureProfile.constant(1.0, [0.0], normal=1.0)
    curve = FramedCurve.build(prof, np.eye(2), 1e-3, origin=[0.0, 0.0])
    return DevelopableImmersion(curve, box)


@pytest.fixture(scope="session")
def flat_disc(unit_disc):
    prof = CurvatureProfile.constant(1.8, [0.0])
    curve = FramedCurve.build(prof, np.eye(2), 1e-3, origin=[-0.9, 0.0])
    return DevelopableImmersion(curve, unit_disc)


@pytest.fixture(scope="session")
def corner(unit_disc):
    """Cylinder with a corner: kappa_n jumps from 0 to 1 halfway along a diameter."""
    prof = CurvatureProfile(1.8, (Constant(0.0),), normal=PiecewiseConstant((0.9,), (0.0, 1.0)))
    curve = FramedCurve.build(prof, np.eye(2), 1e-3, origin=[-0.9, 0.0])
    return DevelopableImmersion(curve, unit_disc)


@pytest.fixture(scope="session")
def corner_stages(corner):
    from developable import SmoothingConfig, run_pipeline

    config = SmoothingConfig(rho=1.0)
    return config, run_pipeline(corner, config)


@pytest.fixture(scope="session")
def step_curvature(unit_disc):
    """kappa_1 jumps 0 -> 0.5 and kappa_n 0 -> 1 on a diameter-like curve in the unit disc."""
    prof = CurvatureProfile(1.7, (PiecewiseConstant((0.9,), (0.0, 0.5)),),
                            normal=PiecewiseConstant((0.6,), (0.0, 1.0)))
    curve = FramedCurve.build(prof, np.eye(2), 1e-3, origin=[-0.9, 0.0])
    return DevelopableImmersion(curve, unit_disc)


def build_glue_chain():
    """Arm, flat body, arm on an ellipse; arm C is placed so the chain glues without motion.

    Both arms bend right up to their interface, so smoothing changes the
    interface data and the stage-m gluing motions are non-trivial.
    """
    from developable import AffinePiece, RigidMotion, matching_motion

    dom = ConvexDomain.ellipsoid([0.0, 0.0], [1.5, 0.6])
    prof = CurvatureProfile(0.9, (Constant(0.0),), normal=PiecewiseConstant((0.3,), (0.0, 1.0)))
    arm_a = DevelopableImmersion(FramedCurve.build(prof, np.eye(2), 1e-3, origin=[-1.4, 0.0]), dom,
                                 extend_affine=True)
    x0, x1 = np.array([-0.5, 0.0]), np.array([0.5, 0.0])
    v, g, _ = arm_a.fields_at(x0[None], order=1)
    body = AffinePiece(x0, v[0], g[0])
    back = -np.eye(2)
    trial = FramedCurve.build(prof, back, 1e-3, origin=[1.4, 0.0])
    motion = matching_motion(body, RigidMotion.identity(3),
                             DevelopableImmersion(trial, dom, extend_affine=True), x1)
    curve_c = FramedCurve.build(prof, back, 1e-3, origin=[1.4, 0.0],
                                target_frame0=trial.target.frames[0] @ motion.R.T,
                                target_origin=motion.b)
    arm_c = DevelopableImmersion(curve_c, dom, extend_affine=True)
    return dom, [arm_a, body, arm_c], [(x0, np.array([1.0, 0.0])), (x1, np.array([1.0, 0.0]))]


@pytest.fixture(scope="session")
def glue_chain():
    return build_glue_chain()
