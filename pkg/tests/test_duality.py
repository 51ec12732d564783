import numpy as np
import pytest
from hypothesis import given, strategies as st

from projdual import (DualCloud, OriginOnTangent, SingularSystem, admissibility_report,
                      bidual_solve, canonicalize, circle, dual_cloud, dual_point, ellipse,
                      embed_affine, graph_patch, hyperplane_from_affine, involution_residual,
                      involution_residuals, plane_patch, sample_grid, sphere, torus)
from projdual.checks import builtin_shapes
from projdual.projective import canonicalize_rows, projective_distance


def test_dual_point_examples():
    # tangent plane <N, x> = <N, m> is stored as canonicalize(N, -<N, m>)
    assert dual_point([0, 0, 1], [0, 0, 1]) == canonicalize([0, 0, 1, -1])
    assert dual_point([2, 0, 0], [1, 0, 0]) == canonicalize([1, 0, 0, -2])
    assert dual_point([2, 0, 0], [1, 0, 0]) == hyperplane_from_affine([1, 0, 0], 2)
    with pytest.raises(ValueError):
        dual_point([0, 0, 1], [0, 0, 2])


def test_dual_of_ellipse_is_dual_conic():
    c = dual_cloud(ellipse(2, 1), sample_grid(ellipse(2, 1), 128)).chart_points()
    assert np.max(np.abs(4 * c[:, 0] ** 2 + c[:, 1] ** 2 - 1)) < 1e-9


@pytest.mark.parametrize("a,b", [(2, 1), (3, 0.5)])
def test_dual_conic_law(a, b):
    c = dual_cloud(ellipse(a, b), sample_grid(ellipse(a, b), 97)).chart_points()
    assert np.max(np.abs(a * a * c[:, 0] ** 2 + b * b * c[:, 1] ** 2 - 1)) < 1e-9


def test_dual_of_unit_sphere_is_itself():
    s = sphere(1.0)
    g = sample_grid(s, 10)
    cloud = dual_cloud(s, g)
    # with the (N, -<N, m>) representative the tangent plane at m lands on i(-m)
    for p, x in zip(cloud.coords, g.position):
        assert projective_distance(p, embed_affine(-x)) < 1e-10


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 3.0])
def test_reciprocal_sphere(r):
    c = dual_cloud(sphere(r), sample_grid(sphere(r), 32)).chart_points()
    assert np.max(np.abs(np.linalg.norm(c, axis=1) - 1 / r)) < 1e-9


def test_plane_dual_collapses():
    s = plane_patch()
    cloud = dual_cloud(s, sample_grid(s, 8))
    assert np.ptp(cloud.coords, axis=0).max() == 0.0
    assert np.all(cloud.provenance["rank"] == 0)


def test_flagged_samples_are_carried():
    s = torus(2, 0.5)
    g = sample_grid(s, 16)
    cloud = dual_cloud(s, g)
    assert len(cloud) == len(g)
    assert np.array_equal(cloud.provenance["rank"], g.gauss_rank)


def test_tangent_plane_incidence():
    for s in builtin_shapes():
        g = sample_grid(s, 32)
        cloud = dual_cloud(s, g)
        lifted = canonicalize_rows(np.concatenate([g.position, np.ones((len(g), 1))], axis=1))
        assert np.max(np.abs(np.einsum("mi,mi->m", lifted, cloud.coords))) < 1e-10


def test_cloud_validation():
    with pytest.raises(ValueError):
        DualCloud(np.zeros((3, 4)), {"u": np.zeros(2)})


def test_bidual_solve_unit_circle():
    for t in np.linspace(0, 6, 7):
        g = np.array([np.cos(t), np.sin(t)])
        dg = np.array([[-np.sin(t), np.cos(t)]])
        np.testing.assert_allclose(bidual_solve(g, dg), g, atol=1e-15)


def test_bidual_solve_sphere_oracle():
    # sphere r=2, longitude/latitude (phi, theta) at m=(2,0,0): N = m/2, <N, m> = 2,
    # g = N/2 = (cos t cos p, cos t sin p, sin t)/2; derivatives at p = t = 0
    g = np.array([0.5, 0, 0])
    dg = np.array([[0, 0.5, 0], [0, 0, 0.5]])
    x = bidual_solve(g, dg)
    np.testing.assert_allclose(x, [2, 0, 0], atol=1e-15)
    m = np.vstack([g, dg])
    assert np.linalg.norm(m @ x - [1, 0, 0]) < 1e-10 * np.linalg.norm(m) * np.linalg.norm(x)


def test_bidual_solve_rank_collapse():
    with pytest.raises(SingularSystem):
        bidual_solve([1.0, 0, 0], [[0, 0, 0], [0, 0, 0]])
    with pytest.raises(SingularSystem):
        bidual_solve([1.0, 0, 0], [[0, 1e-9, 0], [0, 0, 1.0]])


@given(st.floats(0, 2 * np.pi), st.floats(-1.4, 1.4))
def test_involution_sphere(phi, theta):
    assert involution_residual(sphere(2), [phi, theta], origin_shift=np.zeros(3)) < 1e-9


def test_involution_ellipse():
    s = ellipse(2, 1)
    res = [involution_residual(s, [t]) for t in np.linspace(0, 2 * np.pi, 64, endpoint=False)]
    assert max(res) < 1e-8


def test_involution_torus():
    s = torus(2, 0.5)
    assert involution_residual(s, [0.3, 0.2], origin_shift=[0, 0, -1]) < 1e-7
    with pytest.raises(SingularSystem):
        involution_residual(s, [0.3, np.pi / 2], origin_shift=[0, 0, -1])


def test_origin_on_tangent():
    with pytest.raises(OriginOnTangent):
        involution_residual(sphere(1), [0.0, 0.0], origin_shift=[1.0, 0, 0])


@pytest.mark.parametrize("s", builtin_shapes()[:5], ids=lambda s: s.spec)
def test_involution_residuals_grid(s):
    r = involution_residuals(sample_grid(s, 64))
    assert r.max_residual < 1e-7 * s.diameter
    assert not r.singular[~r.skipped_rank].any() or s.name == "torus"


def test_torus_parabolic_never_wrong():
    s = torus(2, 0.5)
    g = sample_grid(s, 64)
    r = involution_residuals(g)
    assert np.all(np.isnan(r.residuals[g.flagged]))
    assert r.max_residual < 1e-7 * s.diameter


def test_admissibility_examples():
    rep = admissibility_report(sample_grid(sphere(), 16))
    assert rep.fraction == 1.0 and rep.admissible
    rep = admissibility_report(sample_grid(plane_patch(), 8))
    assert rep.fraction == 0.0 and not rep.admissible
    rep = admissibility_report(sample_grid(torus(2, 0.5), 64))
    assert rep.fraction == pytest.approx(1 - 2 / 64)
    assert rep.admissible
    assert len(rep.deficient_params) == 128


def test_admissibility_list_input():
    g = sample_grid(circle(), 8)
    assert admissibility_report(list(g)).fraction == 1.0


def test_graph_patch_hyperbolic_dual():
    s = graph_patch({(2, 0): 1.0, (0, 2): -1.0})
    cloud = dual_cloud(s, sample_grid(s, 9))
    assert np.all(cloud.provenance["rank"] == 2)
