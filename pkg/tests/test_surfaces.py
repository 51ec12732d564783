import numpy as np
import pytest
from hypothesis import given, strategies as st

from projdual import (DegenerateParametrization, ShapeSpecError, circle, ellipse, ellipsoid,
                      gauss_rank, graph_patch, isotropic_directions, normal, parse_shape,
                      plane_patch, sample_grid, second_form, sphere, torus)
from projdual.checks import builtin_shapes
from projdual.oracles import central_differences
from projdual.surfaces import linear_image, sample_at, second_form_on

TWO_PI = 2 * np.pi


def test_circle_normal_and_curvature():
    np.testing.assert_allclose(normal(circle(), [0.0]), [1, 0], atol=1e-15)
    np.testing.assert_allclose(second_form(circle(), [0.0]), [[-1.0]], atol=1e-15)


def test_sphere_north_pole_normal():
    s = sphere(2)
    np.testing.assert_allclose(normal(s.pole_patch, [np.pi / 2, 0.0]), [0, 0, 1], atol=1e-15)


def test_ellipse_normal_matches_gradient_oracle():
    # normalized gradient of x^2/4 + y^2 - 1 at (2 cos t, sin t), t = pi/4, by central differences
    t = np.pi / 4
    x = np.array([2 * np.cos(t), np.sin(t)])
    g = lambda p: p[0] ** 2 / 4 + p[1] ** 2 - 1
    h = 1e-6
    grad = np.array([(g(x + h * e) - g(x - h * e)) / (2 * h) for e in np.eye(2)])
    expected = grad / np.linalg.norm(grad)
    np.testing.assert_allclose(expected, [0.4472135954999579, 0.8944271909999159], atol=1e-9)
    np.testing.assert_allclose(normal(ellipse(2, 1), [t]), expected, atol=1e-9)


def test_plane_second_form_zero():
    assert np.array_equal(second_form(plane_patch(), [0.3, -0.2]), np.zeros((2, 2)))
    assert gauss_rank(plane_patch(), [0.3, -0.2]) == 0


def test_torus_parabolic_locus():
    t = torus(2, 0.5)
    assert abs(np.linalg.det(second_form(t, [0.7, 0.0]))) > 1e-3
    assert abs(np.linalg.det(second_form(t, [0.7, np.pi / 2]))) < 1e-9
    assert gauss_rank(t, [0.7, np.pi / 2]) == 1
    assert gauss_rank(sphere(), [0.3, 0.2]) == 2


def test_sample_grid_counts():
    s = sample_grid(circle(), 4)
    np.testing.assert_allclose(s.u[:, 0], [0, np.pi / 2, np.pi, 3 * np.pi / 2])
    assert len(sample_grid(sphere(), 8)) == 8 * 7 + 2
    with pytest.raises(ValueError):
        sample_grid(circle(), 1)


def test_torus_grid_flags_exactly_two_rows():
    s = sample_grid(torus(2, 0.5), 16)
    assert len(s) == 256
    flagged_rows = sorted(set(s.grid_index[s.flagged, 1].tolist()))
    # theta = k * 2pi / 16; the parabolic circles are theta = pi/2 and 3pi/2
    assert flagged_rows == [4, 12]
    assert s.flagged.sum() == 32


def test_isotropic_directions_examples():
    assert isotropic_directions(sample_at(sphere(), [0.1, 0.2])) == []
    assert isotropic_directions(sample_at(plane_patch(), [0.1, 0.2])) == "all"
    # inner equator of torus(2, 0.5) at phi = 0: principal curvatures -1/1.5 (along y)
    # and 1/0.5 (along z), asymptotic at tan(alpha) = sqrt((1/1.5) / 2) from the y axis
    smp = sample_at(torus(2, 0.5), [0.0, np.pi])
    dirs = isotropic_directions(smp)
    assert len(dirs) == 2
    expected = [np.array([0, np.sqrt(3) / 2, 0.5]), np.array([0, np.sqrt(3) / 2, -0.5])]
    for d in dirs:
        assert min(min(np.linalg.norm(d - e), np.linalg.norm(d + e)) for e in expected) < 1e-12
        assert abs(second_form_on(smp.tangents, smp.second_form, d)) < 1e-9
    assert isotropic_directions(sample_at(torus(2, 0.5), [0.0, np.pi / 2])).__len__() == 1


def test_degenerate_parametrization_raises():
    with pytest.raises(DegenerateParametrization):
        normal(sphere(), [0.0, np.pi / 2])


def test_parse_shape():
    assert parse_shape("sphere:r=2").diameter == 4
    assert parse_shape("torus:R=2,r=0.5").spec == "torus:R=2,r=0.5"
    g = parse_shape("graph:c20=1,c02=-1,w=0.5")
    assert g.domain == ((-0.5, 0.5), (-0.5, 0.5))
    for bad in ("cube:r=1", "sphere:r", "sphere:q=1", "sphere:r=-1", "graph:x=1", "torus:R=1,r=2"):
        with pytest.raises(ShapeSpecError):
            parse_shape(bad)


@pytest.mark.parametrize("s", builtin_shapes(), ids=lambda s: s.spec)
def test_normals_orthogonal(s):
    g = sample_grid(s, 64)
    assert np.max(np.abs(np.einsum("mi,mji->mj", g.normal, g.tangents))) < 1e-9


@pytest.mark.parametrize("s", builtin_shapes(), ids=lambda s: s.spec)
def test_weingarten_symmetry(s):
    g = sample_grid(s, 32)
    first = np.einsum("mik,mjk->mij", g.tangents, g.tangents)
    m = first @ g.shape_operator
    ok = ~g.flagged
    assert np.max(np.abs(m - np.swapaxes(m, 1, 2))[ok]) < 1e-8


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 3.0])
def test_sphere_curvature(r):
    g = sample_grid(sphere(r), 24)
    ev = np.linalg.eigvals(g.shape_operator)
    np.testing.assert_allclose(ev.real, -1 / r, atol=1e-9)


@pytest.mark.parametrize("s", builtin_shapes(), ids=lambda s: s.spec)
def test_period_roundtrip(s):
    u = np.array([0.3, 0.4][: s.param_dim])
    for k, per in enumerate(s.periodic):
        if per:
            lo, hi = s.domain[k]
            shifted = u.copy()
            shifted[k] += hi - lo
            np.testing.assert_allclose(s.evaluate(shifted)[0], s.evaluate(u)[0], atol=1e-10)


@given(st.data())
def test_derivatives_match_central_differences(data):
    shapes = builtin_shapes() + [graph_patch({(2, 0): 1.0, (1, 1): 0.5, (0, 3): -0.3})]
    s = data.draw(st.sampled_from(shapes))
    u = np.array([data.draw(st.floats(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo)))
                  for lo, hi in s.domain])
    _, df, d2f = s.evaluate(u)
    fd1, fd2 = central_differences(s, u)
    assert np.linalg.norm(fd1 - df) / np.linalg.norm(df) < 1e-5
    assert np.linalg.norm(fd2 - d2f) / max(np.linalg.norm(d2f), 1.0) < 1e-5


def test_linear_image_scales_positions():
    s = linear_image(ellipsoid(3, 2, 1), 1.7 * np.eye(3))
    u = [0.2, 0.3]
    np.testing.assert_allclose(s.evaluate(u)[0], 1.7 * ellipsoid(3, 2, 1).evaluate(u)[0])
    assert s.diameter == pytest.approx(1.7 * 6)
