import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from developable import (ConvexDomain, InsufficientResolution, InvalidInput, SampledMap, cone_map,
                         detect_rulings, estimate_fields, isometry_residual, normal_field,
                         second_form_field, sharpness_probe)
from developable.analyzer import (cluster_directions, cone_shell_oracle, default_schedule,
                                  holder_quotients, shell_integral)
from developable.io import read_samples_csv, write_samples_csv


def _cylinder_map(x):
    return np.stack([np.sin(x[..., 0]), x[..., 1], 1 - np.cos(x[..., 0])], axis=-1)


def _rotation(seed, dim=3):
    q, r = np.linalg.qr(np.random.default_rng(seed).normal(size=(dim, dim)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


@pytest.fixture(scope="module")
def cylinder_fields():
    smap = SampledMap.from_function(_cylinder_map, ConvexDomain.ball([0.0, 0.0], 0.6), 1e-2)
    return estimate_fields(smap)


@pytest.fixture(scope="module")
def cone_sample():
    return SampledMap.from_function(cone_map, ConvexDomain.ball([0.6, 0.0], 0.35), 5e-3)


# -- field estimation ------------------------------------------------------------------


def test_affine_map_is_exact():
    q = _rotation(1)[:, :2]
    b = np.array([0.3, -0.2, 1.0])
    smap = SampledMap.from_function(lambda x: x @ q.T + b, ConvexDomain.ball([0.0, 0.0], 1.0), 0.05)
    f = estimate_fields(smap)
    m = f.grad_mask
    assert np.max(np.abs(f.grad[m] - q)) <= 1e-12
    assert np.max(np.abs(f.hess[f.interior])) <= 1e-10
    assert isometry_residual(f)[1] <= 1e-12
    # one-sided stencils are used only in the boundary layer
    assert f.boundary_layer.any() and not (f.boundary_layer & f.interior).any()


def test_quadratic_component_is_exact():
    def func(x):
        return np.stack([x[..., 0], x[..., 1], x[..., 0] ** 2 + 3 * x[..., 0] * x[..., 1]], axis=-1)

    f = estimate_fields(SampledMap.from_function(func, ConvexDomain.ball([0.0, 0.0], 1.0), 0.05))
    H = f.hess[f.interior][..., 2]
    assert np.allclose(H, [[2.0, 3.0], [3.0, 0.0]], atol=1e-9)
    x = f.smap.nodes()[f.grad_mask]
    g = f.grad[f.grad_mask][:, 2, :]
    assert np.allclose(g, np.stack([2 * x[:, 0] + 3 * x[:, 1], 3 * x[:, 0]], axis=1), atol=1e-9)


def test_cylinder_hessian(cylinder_fields):
    f = cylinder_fields
    x = f.smap.nodes()[f.interior]
    exact = np.zeros(x.shape[:1] + (2, 2, 3))
    exact[:, 0, 0, 0] = -np.sin(x[:, 0])
    exact[:, 0, 0, 2] = np.cos(x[:, 0])
    assert np.max(np.abs(f.hess[f.interior] - exact)) <= 1e-3


def test_isometry_residual_examples():
    disc = ConvexDomain.ball([0.0, 0.0], 1.0)
    double = estimate_fields(SampledMap.from_function(
        lambda x: np.concatenate([2 * x, np.zeros(x.shape[:-1] + (1,))], axis=-1), disc, 0.1))
    assert isometry_residual(double)[1] == pytest.approx(3.0, abs=1e-12)
    ident = estimate_fields(SampledMap.from_function(
        lambda x: np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1), disc, 0.1))
    assert isometry_residual(ident)[1] <= 1e-14


def test_no_interior_raises():
    disc = ConvexDomain.ball([0.0, 0.0], 0.05)
    with pytest.raises(InsufficientResolution) as info:
        estimate_fields(SampledMap.from_function(_cylinder_map, disc, 0.06))
    assert info.value.min_h is not None


# -- normals and the second form ---------------------------------------------------------


def test_normals(cylinder_fields):
    f = cylinder_fields
    nrm, degenerate = normal_field(f)
    assert not degenerate.any()
    x = f.smap.nodes()[f.grad_mask]
    exact = np.stack([-np.sin(x[:, 0]), np.zeros(len(x)), np.cos(x[:, 0])], axis=1)
    assert np.max(np.abs(nrm[f.grad_mask] - exact)) <= 1e-3
    dots = np.einsum("...ij,...i->...j", f.grad[f.grad_mask], nrm[f.grad_mask])
    assert np.max(np.abs(dots)) <= 1e-12

    flat = estimate_fields(SampledMap.from_function(
        lambda x: np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1),
        ConvexDomain.ball([0.0, 0.0], 1.0), 0.1))
    assert np.allclose(normal_field(flat)[0][flat.grad_mask], [0, 0, 1])


def test_rank_one_defects(cylinder_fields):
    f = cylinder_fields
    sf = second_form_field(f, normal_field(f)[0])
    assert sf.max_minor <= 1e-4
    assert sf.symmetry_defect <= 1e-10
    assert sf.codazzi_defect <= 1e-2


def test_defects_vanish_under_refinement():
    minors = []
    for h in (2e-2, 1e-2, 5e-3):
        f = estimate_fields(SampledMap.from_function(cone_map, ConvexDomain.ball([0.6, 0.0], 0.35), h))
        sf = second_form_field(f, normal_field(f)[0])
        assert sf.symmetry_defect <= 1e-12     # the mixed stencil is symmetric
        minors.append(sf.max_minor)
    orders = np.log2(np.array(minors[:-1]) / minors[1:])
    assert np.all(orders >= 0.9)


# -- rulings ---------------------------------------------------------------------------


def test_cylinder_rulings(cylinder_fields):
    part = detect_rulings(cylinder_fields)
    assert len(part.cluster_normals) == 1
    assert np.allclose(np.abs(part.cluster_normals[0]), [1.0, 0.0], atol=1e-2)
    assert not part.noisy and part.segments_failed == 0


def test_cone_rulings_through_apex(cone_sample):
    f = estimate_fields(cone_sample)
    part = detect_rulings(f)
    ruled = part.kind == 2
    x = cone_sample.nodes()[ruled]
    nu = part.normals[ruled]
    # rulings are radial: the hyperplane normal is orthogonal to x and the line passes near 0
    assert np.max(np.abs(np.einsum("ij,ij->i", x, nu))) <= 1e-2
    sv = np.linalg.svd(np.nan_to_num(second_form_field(f, normal_field(f)[0]).A[ruled]), compute_uv=False)
    assert np.max(sv[:, 1] / sv[:, 0]) <= 1e-2
    assert len(part.cluster_normals) > 5


def test_flat_map_is_one_body():
    q = _rotation(4)[:, :2]
    smap = SampledMap.from_function(lambda x: x @ q.T, ConvexDomain.ball([0.0, 0.0], 0.5), 0.02)
    part = detect_rulings(estimate_fields(smap))
    assert len(part.bodies) == 1
    assert not (part.kind == 2).any()
    assert part.bodies[0].size == int((part.kind == 1).sum())


def test_non_isometry_rejected():
    disc = ConvexDomain.ball([0.0, 0.0], 1.0)
    f = estimate_fields(SampledMap.from_function(
        lambda x: np.concatenate([2 * x, np.zeros(x.shape[:-1] + (1,))], axis=-1), disc, 0.1))
    with pytest.raises(InvalidInput):
        detect_rulings(f)


def test_rotation_invariance(cone_sample):
    q = _rotation(7)
    turned = SampledMap(cone_sample.origin, cone_sample.h, cone_sample.mask, cone_sample.values @ q.T)
    a = detect_rulings(estimate_fields(cone_sample))
    b = detect_rulings(estimate_fields(turned))
    assert np.array_equal(a.kind, b.kind)
    ruled = a.kind == 2
    assert np.max(np.abs(a.normals[ruled] - b.normals[ruled])) <= 1e-8


def test_three_dimensional_cylinder():
    def func(x):
        return np.stack([np.sin(x[..., 0]), 1 - np.cos(x[..., 0]), x[..., 1], x[..., 2]], axis=-1)

    part = detect_rulings(estimate_fields(SampledMap.from_function(
        func, ConvexDomain.ball([0.0, 0.0, 0.0], 0.4), 0.05)))
    assert len(part.cluster_normals) == 1
    assert np.allclose(np.abs(part.cluster_normals[0]), [1, 0, 0], atol=1e-2)


@given(st.floats(0.0, np.pi))
@settings(max_examples=30, deadline=None)
def test_clustering_merges_near_duplicates(theta):
    v = np.array([np.cos(theta), np.sin(theta)])
    w = np.array([np.cos(theta + 1e-3), np.sin(theta + 1e-3)])
    labels, centres = cluster_directions(np.stack([v, -w, v]), 2e-2)
    assert len(centres) == 1 and np.all(labels == 0)


def test_clustering_separates_directions():
    labels, centres = cluster_directions(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.001]]), 2e-2)
    assert len(centres) == 2 and labels[0] == labels[2] != labels[1]


def test_holder_quotient_cylinder(cylinder_fields):
    # grad u is smooth, so the C^{0,1/2} quotient stays bounded by the diameter
    assert holder_quotients(cylinder_fields) <= np.sqrt(1.2) + 1e-6


# -- sample files ------------------------------------------------------------------------


def test_samples_csv_round_trip(tmp_path, cone_sample):
    path = tmp_path / "samples.csv"
    write_samples_csv(path, cone_sample)
    back = read_samples_csv(path)
    assert back.h == pytest.approx(cone_sample.h, rel=1e-12)
    m = back.mask
    assert m.sum() == cone_sample.mask.sum()
    assert np.array_equal(np.sort(back.values[m], axis=0), np.sort(cone_sample.values[cone_sample.mask], axis=0))


def test_from_immersion_matches_evaluation(cylinder):
    smap = SampledMap.from_immersion(cylinder, 0.05)
    x = smap.nodes()[smap.mask]
    assert np.allclose(smap.values[smap.mask], _cylinder_map(x[:, [0, 1]]), atol=1e-9)


# -- sharpness probe -------------------------------------------------------------------


@pytest.mark.parametrize("p", [1.2, 1.5, 2.0, 2.5])
def test_shell_oracle_matches_quadrature(p):
    from scipy.integrate import quad

    ref = 2 * np.pi * 3 ** (p / 2) * quad(lambda r: r ** (1 - p), 0.01, 0.04)[0]
    assert cone_shell_oracle(p, 0.01, 0.04) == pytest.approx(ref, rel=1e-12)


def test_shell_integral_close_to_oracle():
    got = shell_integral(cone_map, 1.5, 0.0625, 0.25, 0.0625 / 32)
    assert got == pytest.approx(cone_shell_oracle(1.5, 0.0625, 0.25), rel=1e-2)


def test_probe_verdicts():
    assert sharpness_probe(1.5).verdict == "converges"
    res = sharpness_probe(2.0)
    assert res.verdict == "diverges"
    assert np.allclose(res.per_halving, 2 * np.pi * 3 * np.log(2), rtol=0.02)
    assert sharpness_probe(2.5, resolution=16).verdict == "diverges"


def test_probe_away_from_apex_is_finite():
    res = sharpness_probe(2.0, schedule=[2.0, 1.0, 0.5])
    assert np.all(np.isfinite(res.increments))
    assert np.allclose(res.increments, res.oracle, rtol=1e-2)


def test_probe_inputs():
    with pytest.raises(InvalidInput):
        sharpness_probe(3.0)
    with pytest.raises(InvalidInput):
        sharpness_probe(1.5, schedule=[0.1, 0.2, 0.05])
    with pytest.raises(InsufficientResolution):
        sharpness_probe(1.5, schedule=default_schedule(3), h=0.01)
