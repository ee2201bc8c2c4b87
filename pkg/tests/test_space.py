import math
import random
from fractions import Fraction

import numpy as np
import pytest

from hypcrit.errors import KindMismatchError
from hypcrit.space import (
    ModelSpace,
    PlanePoint,
    Ray,
    TreePoint,
    dist_to_segment,
    distance,
    distances_to_point,
    estimate_delta,
    geodesic_point,
    gromov_product,
    pairwise_distances,
    plane_distance,
    ray_point,
)
from hypcrit.geometry_checks import _rand_plane_point, _rand_tree_point

TREE = ModelSpace.tree()
PLANE = ModelSpace.plane()


def rand_points(seed, space, n, radius=6.0):
    rng = random.Random(seed)
    if space.kind == "tree":
        return [_rand_tree_point(rng, space, radius) for _ in range(n)]
    return [_rand_plane_point(rng, radius) for _ in range(n)]


# ---------------------------------------------------------------------------
# distances


def test_tree_distance_small_cases():
    x = TreePoint("")
    assert distance(TREE, x, TreePoint("a")) == 1
    assert distance(TREE, TreePoint("a"), TreePoint("b")) == 2
    assert distance(TREE, TreePoint("ab"), TreePoint("aB")) == 2
    # half-edge points
    p = TreePoint("", Fraction(1, 2), "a")
    assert distance(TREE, x, p) == Fraction(1, 2)
    assert distance(TREE, p, TreePoint("a")) == Fraction(1, 2)
    q = TreePoint("", Fraction(1, 2), "b")
    assert distance(TREE, p, q) == 1


def test_tree_distance_is_exact_rational():
    space = ModelSpace.tree(edge_length=Fraction(3, 2))
    d = distance(space, TreePoint("ab"), TreePoint("aB", Fraction(3, 4), "a"))
    assert isinstance(d, Fraction)
    assert d == Fraction(3, 2) + Fraction(3, 2) + Fraction(3, 4)


def test_plane_distance_closed_form_on_imaginary_axis():
    # d(i, e^t i) = t, the textbook vertical-geodesic formula
    for t in (0.25, 1.0, 3.5):
        got = plane_distance(1j, math.exp(t) * 1j)
        assert got == pytest.approx(t, abs=1e-12)


def test_plane_distance_invariant_under_horizontal_shift_and_dilation():
    rng = random.Random(7)
    for _ in range(200):
        z1, z2 = (_rand_plane_point(rng, 5.0).z for _ in range(2))
        b = rng.uniform(-3, 3)
        lam = math.exp(rng.uniform(-1, 1))
        d0 = plane_distance(z1, z2)
        assert plane_distance(z1 + b, z2 + b) == pytest.approx(d0, abs=1e-9)
        assert plane_distance(lam * z1, lam * z2) == pytest.approx(d0, abs=1e-9)


@pytest.mark.parametrize("space", [TREE, PLANE], ids=["tree", "plane"])
def test_distance_is_a_metric_on_samples(space):
    pts = rand_points(11, space, 25)
    for p in pts:
        assert float(distance(space, p, p)) == 0.0
    for p in pts[:10]:
        for q in pts[:10]:
            assert float(distance(space, p, q)) == pytest.approx(
                float(distance(space, q, p)), abs=1e-12
            )
            for r in pts[:6]:
                lhs = float(distance(space, p, r))
                rhs = float(distance(space, p, q)) + float(distance(space, q, r))
                assert lhs <= rhs + 1e-9


def test_distance_refuses_mixed_kinds():
    with pytest.raises(KindMismatchError):
        distance(TREE, TreePoint("a"), PlanePoint(1j))


# ---------------------------------------------------------------------------
# geodesics and rays


@pytest.mark.parametrize("space", [TREE, PLANE], ids=["tree", "plane"])
def test_geodesic_point_interpolates(space):
    pts = rand_points(13, space, 20)
    for p, q in zip(pts[:10], pts[10:]):
        d = distance(space, p, q)
        if float(d) == 0.0:
            continue
        assert float(distance(space, geodesic_point(space, p, q, 0), p)) < 1e-9
        assert float(distance(space, geodesic_point(space, p, q, d), q)) < 1e-9
        t = d * Fraction(1, 3) if space.kind == "tree" else float(d) / 3.0
        m = geodesic_point(space, p, q, t)
        assert float(distance(space, p, m)) == pytest.approx(float(t), abs=1e-9)
        assert float(distance(space, m, q)) == pytest.approx(float(d - t), abs=1e-9)


def test_tree_geodesic_passes_through_the_median_vertex():
    m = geodesic_point(TREE, TreePoint("ab"), TreePoint("aB"), 1)
    assert m == TreePoint("a")


def test_gromov_product_tree_is_lcp_depth():
    assert gromov_product(TREE, TREE.basepoint, TreePoint("abA"), TreePoint("abb")) == 2
    assert gromov_product(TREE, TREE.basepoint, TreePoint("a"), TreePoint("B")) == 0


@pytest.mark.parametrize("space", [TREE, PLANE], ids=["tree", "plane"])
def test_gromov_product_bounds(space):
    pts = rand_points(17, space, 15)
    for x, y, z in zip(pts[:5], pts[5:10], pts[10:15]):
        p = float(gromov_product(space, x, y, z))
        assert -1e-9 <= p
        assert p <= min(float(distance(space, x, y)), float(distance(space, x, z))) + 1e-9


def test_ray_point_is_unit_speed():
    ray = Ray(TreePoint("b"), "a" * 30)
    a = ray_point(TREE, ray, 2)
    b = ray_point(TREE, ray, 5)
    assert distance(TREE, a, b) == 3
    pray = Ray(PlanePoint(2j), 0.0)
    pa = ray_point(PLANE, pray, 1.0)
    pb = ray_point(PLANE, pray, 2.5)
    assert plane_distance(pa.z, pb.z) == pytest.approx(1.5, abs=1e-9)


# ---------------------------------------------------------------------------
# hyperbolicity and segment distances


def quadruples(seed, space, n):
    pts = rand_points(seed, space, 4 * n)
    return [tuple(pts[4 * i : 4 * i + 4]) for i in range(n)]


def test_estimate_delta_tree_is_zero():
    est = estimate_delta(TREE, quadruples(19, TREE, 40))
    assert float(est.delta_hat) == 0.0


def test_estimate_delta_plane_below_log3():
    est = estimate_delta(PLANE, quadruples(23, PLANE, 40))
    assert 0.0 < est.delta_hat <= math.log(3.0) + 1e-9


@pytest.mark.parametrize("space", [TREE, PLANE], ids=["tree", "plane"])
def test_dist_to_segment_matches_grid_minimum(space):
    pts = rand_points(29, space, 8)
    for x, p, q in zip(pts[:2], pts[2:4], pts[4:6]):
        d = distance(space, p, q)
        if float(d) == 0.0:
            continue
        grid = [
            float(distance(space, x, geodesic_point(space, p, q, d * Fraction(i, 64))))
            if space.kind == "tree"
            else float(distance(space, x, geodesic_point(space, p, q, float(d) * i / 64)))
            for i in range(65)
        ]
        got = float(dist_to_segment(space, x, p, q))
        assert got <= min(grid) + 1e-9
        assert got >= min(grid) - 0.05  # grid is only 1/64-dense


@pytest.mark.parametrize("space", [TREE, PLANE], ids=["tree", "plane"])
def test_vectorized_distances_agree_pointwise(space):
    pts = rand_points(31, space, 15)
    D = pairwise_distances(space, pts)
    assert D.shape == (15, 15)
    for i in range(0, 15, 3):
        for j in range(0, 15, 4):
            assert D[i, j] == pytest.approx(float(distance(space, pts[i], pts[j])), abs=1e-9)
    col = distances_to_point(space, pts, pts[0])
    assert np.allclose(col, D[:, 0], atol=1e-9)


def test_tree_point_validation():
    with pytest.raises(ValueError):
        TreePoint("aA")
    with pytest.raises(ValueError):
        TreePoint("a", Fraction(1, 2), None)
    with pytest.raises(ValueError):
        PlanePoint(1.0 - 1j)
