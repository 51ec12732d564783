import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from projdual import (Hyperplane, OutsideChart, ProjPoint, RetractionUndefined, ZeroVector,
                      best_chart, canonicalize, chart, embed_affine, hyperplane_from_affine,
                      inverse_chart, orth_complement_contains, projective_distance, retract)
from projdual.projective import canonicalize_rows, hausdorff

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
vectors = arrays(float, st.integers(3, 4), elements=finite).filter(lambda x: np.linalg.norm(x) > 1e-3)


def test_canonicalize_examples():
    assert np.array_equal(canonicalize([0, 0, 2]).coords, [0, 0, 1])
    assert np.array_equal(canonicalize([-3, 0, 0]).coords, [1, 0, 0])
    np.testing.assert_allclose(canonicalize([1, 1, 0]).coords, [2 ** -0.5, 2 ** -0.5, 0], atol=1e-16)


def test_canonicalize_zero_vector():
    with pytest.raises(ZeroVector):
        canonicalize([0.0, 1e-13, 0.0])


def test_sign_rule_skips_tiny_leading_coordinate():
    p = canonicalize([1e-14, -1.0, 0.0])
    assert p.coords[1] > 0


def test_rows_match_single():
    x = np.random.default_rng(0).standard_normal((20, 4))
    rows = canonicalize_rows(x)
    for r, raw in zip(rows, x):
        assert np.array_equal(r, canonicalize(raw).coords)


def test_embed_affine_examples():
    assert np.array_equal(embed_affine([0, 0]).coords, [0, 0, 1])
    np.testing.assert_allclose(embed_affine([3, 4]).coords, np.array([3, 4, 1]) / np.sqrt(26), atol=1e-16)


def test_embed_chart_roundtrip_random(rng):
    for x in rng.standard_normal((100, 3)) * 10:
        np.testing.assert_allclose(chart(embed_affine(x), 4), x, rtol=1e-13, atol=1e-13)


def test_chart_examples():
    assert np.array_equal(chart(ProjPoint([0, 0, 1]), 3), [0, 0])
    np.testing.assert_allclose(chart(canonicalize([2, 4, 2]), 3), [1, 2])
    with pytest.raises(OutsideChart):
        chart(ProjPoint([1, 0, 0]), 3)


def test_best_chart_examples():
    assert best_chart(ProjPoint([0, 0, 1])) == 3
    assert best_chart(canonicalize([1, 1, 0])) == 1
    assert best_chart(canonicalize([0.1, 0.99, 0.1])) == 2


def test_incidence_examples():
    h = Hyperplane(ProjPoint([0, 0, 1]))
    assert orth_complement_contains(h, ProjPoint([1, 0, 0])) == (True, 0.0)
    flag, res = orth_complement_contains(h, ProjPoint([0, 0, 1]))
    assert not flag and res == 1.0
    assert orth_complement_contains(Hyperplane(canonicalize([1, 1, 0])), canonicalize([1, -1, 0]))[0]


def test_hyperplane_from_affine_examples():
    assert canonicalize([0, 1, 0]) == hyperplane_from_affine([0, 1], 0)
    assert canonicalize([1, 0, -2]) == hyperplane_from_affine([1, 0], 2)
    with pytest.raises(ZeroVector):
        hyperplane_from_affine([0, 0], 1)


def test_hyperplane_from_affine_incidence(rng):
    for _ in range(50):
        v = rng.standard_normal(3)
        c = rng.standard_normal()
        h = hyperplane_from_affine(v, c)
        # points of the plane <v, x> = c
        base = v * c / v.dot(v)
        q, _ = np.linalg.qr(np.column_stack([v, rng.standard_normal((3, 2))]))
        for t in rng.standard_normal((10, 2)):
            x = base + q[:, 1:] @ t
            ok, res = orth_complement_contains(h, np.append(x, 1.0) / np.linalg.norm(np.append(x, 1.0)))
            assert abs(res) < 1e-12


def test_retract_examples():
    sigma = ProjPoint([0, 0, 1])
    assert projective_distance(retract(sigma, canonicalize([1, 1, 1])), canonicalize([1, 1, 0])) < 1e-15
    assert retract(sigma, ProjPoint([1, 0, 0])) == ProjPoint([1, 0, 0])
    with pytest.raises(RetractionUndefined):
        retract(sigma, sigma)


def test_projective_distance_identifies_antipodes():
    a = canonicalize([1, 2, 3]).coords
    assert projective_distance(a, -a) == 0.0
    assert hausdorff(a[None], -a[None]) == 0.0


@given(vectors)
def test_canonicalize_idempotent(x):
    p = canonicalize(x)
    assert canonicalize(p.coords) == p
    assert abs(np.linalg.norm(p.coords) - 1) < 1e-15


@given(vectors, st.floats(1e-3, 1e3) | st.floats(-1e3, -1e-3))
def test_scale_invariance(x, lam):
    np.testing.assert_allclose(canonicalize(lam * x).coords, canonicalize(x).coords, atol=1e-14)


@given(vectors)
def test_chart_roundtrip(x):
    p = canonicalize(x)
    c = best_chart(p)
    q = inverse_chart(chart(p, c), c)
    assert projective_distance(p, q) < 1e-12


@given(vectors, vectors)
def test_retraction_lands_and_is_idempotent(s, x):
    if len(s) != len(x):
        x = np.resize(x, len(s)) + 0.5
    sigma, p = canonicalize(s), canonicalize(x)
    if projective_distance(sigma, p) < 1e-6:
        return
    r = retract(sigma, p)
    assert abs(np.dot(r.coords, sigma.coords)) < 1e-12
    assert projective_distance(retract(sigma, r), r) < 1e-12
