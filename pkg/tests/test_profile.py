import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from developable import (Constant, CurvatureProfile, Function, InvalidInput, PiecewiseConstant,
                         PiecewiseLinear, psi1, psi2)
from developable.profile import bump, bump_cdf, bump_first_moment, darboux_from_domain

# mpmath, 30 digits: int_0^1 y phi(y) dy and G0(0.5) for the normalised bump phi
HALF_FIRST_MOMENT = 0.16722699885498766
G0_HALF = 0.87703271672267092


def test_bump_is_normalised_and_symmetric():
    mass, _ = quad(lambda y: bump(np.array(y)), -1, 1, epsabs=0, epsrel=1e-12)
    assert mass == pytest.approx(1.0, abs=1e-12)
    y = np.linspace(-1, 1, 101)
    assert np.allclose(bump(y), bump(-y), atol=0)
    assert bump_cdf(np.array(0.0)) == pytest.approx(0.5, abs=1e-14)
    assert bump_cdf(np.array(0.5)) == pytest.approx(G0_HALF, abs=1e-12)
    assert bump_cdf(np.array(1.0)) == pytest.approx(1.0, abs=1e-14)


def test_first_moment_table():
    # G1(y) = int_{-1}^y z phi(z) dz, so G1(1) = 0 and G1(0) = -int_0^1 z phi
    assert bump_first_moment(np.array(1.0)) == pytest.approx(0.0, abs=1e-14)
    assert bump_first_moment(np.array(0.0)) == pytest.approx(-HALF_FIRST_MOMENT, abs=1e-12)


def test_mollified_constant_is_identical():
    c = Constant(0.7)
    for m in (1, 4, 32):
        assert c.mollified(1.0 / m, 2.0) is c
    prof = CurvatureProfile.constant(1.0, [0.3, -0.2], [0.1], 0.5)
    moll = prof.mollified(8)
    t = np.linspace(0, 1, 17)
    assert np.array_equal(moll.sample(t), prof.sample(t))


def test_mollified_step_example():
    step = PiecewiseConstant((1.0,), (0.0, 1.0))
    out = step.mollified(0.1, 2.0)
    assert np.all(out(np.linspace(0.0, 0.9, 50)) == 0.0)
    assert np.allclose(out(np.linspace(1.1, 2.0, 50)), 1.0, atol=1e-15)
    assert out(np.array(1.0)) == pytest.approx(0.5, abs=1e-14)
    assert out(np.array(1.05)) == pytest.approx(G0_HALF, abs=1e-12)


def test_step_l1_distance_decays():
    step = PiecewiseConstant((1.0,), (0.0, 1.0))
    t = np.linspace(0.0, 2.0, 2**16 + 1)
    dists = []
    for m in (2, 4, 8, 16, 32):
        w = 1.0 / m
        diff = np.abs(step.mollified(w, 2.0)(t) - step(t))
        dist = np.trapezoid(diff, t)
        assert dist == pytest.approx(2 * w * HALF_FIRST_MOMENT, rel=1e-3)
        dists.append(dist)
    assert np.all(np.diff(dists) < 0)


def test_mollified_kink():
    kink = PiecewiseLinear((0.0, 1.0, 2.0), (0.0, 0.0, 1.0))
    w = 0.2
    out = kink.mollified(w, 2.0)
    assert out(np.array(1.0)) == pytest.approx(w * HALF_FIRST_MOMENT, abs=1e-13)
    # linear away from the kink
    assert out(np.array(1.5)) == pytest.approx(0.5, abs=1e-14)


def _quad_convolution(f, t, w, length):
    def integrand(y):
        return f(np.clip(np.array(t - w * y), 0.0, length)) * bump(np.array(y))
    return quad(integrand, -1, 1, points=[-0.5, 0, 0.5], epsabs=1e-13, limit=200)[0]


@pytest.mark.parametrize("component", [
    PiecewiseConstant((0.3, 0.8), (0.2, -1.0, 0.5)),
    PiecewiseLinear((0.0, 0.4, 0.9, 1.2), (0.0, 1.0, -0.5, 0.3)),
])
def test_exact_convolution_matches_quadrature(component):
    w, length = 0.15, 1.2
    out = component.mollified(w, length)
    for t in (0.0, 0.05, 0.33, 0.4, 0.71, 0.9, 1.15, 1.2):
        assert out(np.array(t)) == pytest.approx(_quad_convolution(component, t, w, length), abs=1e-10)


def test_generic_function_route_matches_exact_route():
    pl = PiecewiseLinear((0.0, 0.4, 0.9, 1.2), (0.0, 1.0, -0.5, 0.3))
    fn = Function(pl, declared_bound=1.0, breaks=(0.4, 0.9))
    w, length = 0.1, 1.2
    t = np.linspace(0, length, 97)
    exact, generic = pl.mollified(w, length), fn.mollified(w, length)
    assert np.max(np.abs(exact(t) - generic(t))) <= 1e-12
    for order in (1, 2):
        assert np.max(np.abs(exact.derivative(t, order) - generic.derivative(t, order))) <= 1e-9


def test_mollified_derivatives_match_differences():
    smooth = Function(lambda t: np.sin(3 * t), 1.0).mollified(0.2, 2.0)
    t = np.linspace(0.5, 1.5, 11)
    h = 1e-4
    fd1 = (smooth(t + h) - smooth(t - h)) / (2 * h)
    fd2 = (smooth(t + h) - 2 * smooth(t) + smooth(t - h)) / h**2
    assert np.allclose(smooth.derivative(t, 1), fd1, atol=1e-7)
    assert np.allclose(smooth.derivative(t, 2), fd2, atol=1e-5)


def test_cutoff_functions():
    assert psi2(np.array(1.5)) == pytest.approx(0.5, abs=1e-15)
    x = np.linspace(-3, 3, 601)
    assert np.all(psi2(x[x <= 1]) == 0.0)
    assert np.all(psi2(x[x >= 2]) == 1.0)
    assert np.all(np.diff(psi2(x)) >= 0)
    assert np.allclose(psi1(x), psi2(-x), atol=0)
    assert np.allclose(psi2(1.5 + x) + psi2(1.5 - x), 1.0, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=4), st.floats(0.01, 0.5))
def test_mollification_preserves_bounds(values, w):
    breaks = tuple(np.linspace(0.2, 0.8, len(values))[:-1]) if len(values) > 1 else ()
    pc = PiecewiseConstant(breaks, tuple(values))
    out = pc.mollified(w, 1.0)
    t = np.linspace(0, 1, 257)
    vals = out(t)
    assert np.all(vals <= max(values) + 1e-12) and np.all(vals >= min(values) - 1e-12)


def test_profile_autofills_twists_and_orders_columns():
    prof = CurvatureProfile(1.0, (Constant(1.0), Constant(0.0)), normal=Constant(2.0))
    assert prof.n == 3
    assert prof.column_names() == ["k1", "k2", "k1_2", "kn"]
    assert np.array_equal(prof.sample(np.array([0.5])), [[1.0, 0.0, 0.0, 2.0]])


def test_profile_validation():
    with pytest.raises(InvalidInput):
        CurvatureProfile(0.0, (Constant(1.0),))
    with pytest.raises(InvalidInput):
        CurvatureProfile(1.0, ())
    with pytest.raises(InvalidInput):
        CurvatureProfile(1.0, (Constant(1.0), Constant(0.0)), twist=(Constant(0.0), Constant(1.0)))
    with pytest.raises(InvalidInput):
        CurvatureProfile(1.0, (Function(lambda t: 3 * t, declared_bound=1.0),))
    with pytest.raises(InvalidInput):
        CurvatureProfile.constant(1.0, [0.0]).mollified(0.5)


def test_generators_are_skew():
    prof = CurvatureProfile(1.0, (Constant(1.0), Constant(-0.5)), (Constant(0.25),), Constant(2.0))
    K = prof.generator(np.array([0.1, 0.7]))
    assert np.array_equal(K, -np.swapaxes(K, -1, -2))
    assert K[0, 0, 1] == 1.0 and K[0, 0, 2] == -0.5 and K[0, 1, 2] == 0.25
    D = prof.darboux_generator(np.array([0.1]))
    assert D.shape == (1, 4, 4)
    assert np.array_equal(D, -np.swapaxes(D, -1, -2))
    assert D[0, 0, 3] == 2.0
    assert np.array_equal(darboux_from_domain(K, np.zeros(2))[..., :3, :3], K)
