import itertools
import math
import random

import pytest

from hypcrit.entropy import (
    check_entropy_lower_bound,
    check_packing_chain,
    check_packing_growth,
    covering_entropy_estimate,
    covering_number,
    equidistribution_constant,
    estimate_critical_exponent,
    greedy_covering_count,
    packing_number,
    poincare_partial,
    recheck_equidistribution,
)
from hypcrit.geometry_checks import _rand_plane_point, _rand_tree_point
from hypcrit.orbits import enumerate_orbit_ball, tree_action
from hypcrit.space import ModelSpace

TREE = ModelSpace.tree()
PLANE = ModelSpace.plane()


def synthetic_counts(h, K=1.0):
    return [(t, max(1, round(K * math.exp(h * t)))) for t in range(0, 12)]


# ---------------------------------------------------------------------------
# exponent estimation


def test_regression_recovers_exact_exponential_growth():
    counts = [(t, 5 * 3**t) for t in range(0, 11)]
    est = estimate_critical_exponent(counts, (2, 10))
    assert est.h_hat == pytest.approx(math.log(3.0), abs=1e-12)
    assert est.residual < 1e-12
    assert est.method == "regression"


def test_last_ratio_method():
    counts = [(t, 2 * 4**t) for t in range(0, 8)]
    est = estimate_critical_exponent(counts, (0, 7), method="last-ratio")
    assert est.h_hat == pytest.approx(math.log(4.0), abs=1e-12)


def test_estimator_input_validation():
    good = synthetic_counts(1.0)
    with pytest.raises(ValueError):
        estimate_critical_exponent(good, (0, 11), method="wishful")
    with pytest.raises(ValueError):
        estimate_critical_exponent(good[:3], (0, 2))
    with pytest.raises(ValueError):
        estimate_critical_exponent([(0, 1), (1, 3), (2, 2), (3, 5)], (0, 3))
    with pytest.raises(ValueError):
        estimate_critical_exponent([(0, 0), (1, 1), (2, 2), (3, 3)], (0, 3))


def test_poincare_partial_on_tree_ball():
    ball = enumerate_orbit_ball(tree_action(), 6)
    # closed form: 1 + sum_{n=1..6} 4*3^{n-1} e^{-s n}
    s = 1.5
    want = 1.0 + sum(4 * 3 ** (n - 1) * math.exp(-s * n) for n in range(1, 7))
    assert poincare_partial(ball, s) == pytest.approx(want, rel=1e-12)
    with pytest.raises(ValueError):
        poincare_partial(ball, -0.1)


# ---------------------------------------------------------------------------
# equidistribution constant


def test_equidistribution_constant_on_exact_free_group_counts():
    counts = [(n, 2 * 3**n - 1) for n in range(0, 11)]
    rep = equidistribution_constant(counts, math.log(3.0))
    # oracle: max over the grid of max(N/3^n, 3^n/N), N = 2*3^n - 1
    want = max(max((2 * 3**n - 1) / 3**n, 3**n / (2 * 3**n - 1)) for n in range(11))
    assert rep.K_measured == pytest.approx(want, rel=1e-12)
    assert rep.K_measured < 2.0
    assert recheck_equidistribution(counts, math.log(3.0), rep.K_measured + 1e-12)
    assert not recheck_equidistribution(counts, math.log(3.0), rep.K_measured * 0.9)


def test_equidistribution_validation():
    with pytest.raises(ValueError):
        equidistribution_constant([(1, 3)], 0.0)
    with pytest.raises(ValueError):
        equidistribution_constant([(1, 0)], 1.0)


# ---------------------------------------------------------------------------
# packing and covering


def brute_force_covering(space, points, r):
    from hypcrit.space import pairwise_distances

    D = pairwise_distances(space, points)
    n = len(points)
    for k in range(1, n + 1):
        for centers in itertools.combinations(range(n), k):
            if all(min(D[i, j] for j in centers) <= r + 1e-12 for i in range(n)):
                return k
    return n


def brute_force_packing(space, points, r):
    from hypcrit.space import pairwise_distances

    D = pairwise_distances(space, points)
    n = len(points)
    best = 0
    for k in range(n, 0, -1):
        for chosen in itertools.combinations(range(n), k):
            if all(D[i, j] > 2 * r + 1e-12 for i, j in itertools.combinations(chosen, 2)):
                return k
    return best


@pytest.mark.parametrize("space", [TREE, PLANE], ids=["tree", "plane"])
def test_exact_modes_match_brute_force(space):
    rng = random.Random(41)
    for trial in range(6):
        n = rng.randrange(4, 9)
        if space.kind == "tree":
            pts = [_rand_tree_point(rng, space, 4.0) for _ in range(n)]
        else:
            pts = [_rand_plane_point(rng, 4.0) for _ in range(n)]
        r = rng.uniform(0.3, 1.5)
        assert covering_number(space, pts, r, "exact") == brute_force_covering(space, pts, r)
        assert packing_number(space, pts, r, "exact") == brute_force_packing(space, pts, r)


@pytest.mark.parametrize("space", [TREE, PLANE], ids=["tree", "plane"])
def test_greedy_modes_bound_the_optimum(space):
    rng = random.Random(43)
    for trial in range(6):
        if space.kind == "tree":
            pts = [_rand_tree_point(rng, space, 5.0) for _ in range(14)]
        else:
            pts = [_rand_plane_point(rng, 5.0) for _ in range(14)]
        r = rng.uniform(0.3, 1.5)
        assert covering_number(space, pts, r, "greedy") >= covering_number(space, pts, r, "exact")
        assert packing_number(space, pts, r, "greedy") <= packing_number(space, pts, r, "exact")
        assert greedy_covering_count(space, pts, r) == covering_number(space, pts, r, "greedy")


def test_exact_mode_size_limit():
    rng = random.Random(47)
    pts = [_rand_tree_point(rng, TREE, 5.0) for _ in range(30)]
    with pytest.raises(ValueError):
        covering_number(TREE, pts, 1.0, "exact")


@pytest.mark.parametrize("space", [TREE, PLANE], ids=["tree", "plane"])
def test_packing_chain(space):
    rng = random.Random(53)
    for trial in range(10):
        if space.kind == "tree":
            pts = [_rand_tree_point(rng, space, 5.0) for _ in range(12)]
        else:
            pts = [_rand_plane_point(rng, 5.0) for _ in range(12)]
        ok, (p2, c2, p1) = check_packing_chain(space, pts, rng.uniform(0.3, 1.2))
        assert ok
        assert p2 <= c2 <= p1


def test_covering_entropy_on_the_tree():
    act = tree_action()
    ball = enumerate_orbit_ball(act, 7)
    est = covering_entropy_estimate(act, [e.point for e in ball.entries], 0.5, (3, 7))
    assert est.h_hat == pytest.approx(math.log(3.0), abs=0.05)


def test_packing_growth_bound_on_tree():
    act = tree_action()
    ball = enumerate_orbit_ball(act, 6)
    rep = check_packing_growth(act, [e.point for e in ball.entries], [2.0, 4.0, 6.0], 1.0)
    assert rep.passed
    assert rep.P >= 1


def test_entropy_lower_bound():
    ok, bound = check_entropy_lower_bound(math.log(3.0), 0.0, 0.5)
    assert ok
    assert bound == pytest.approx(math.log(2.0) / 5.0, rel=1e-12)
    bad, _ = check_entropy_lower_bound(0.05, 0.0, 0.5)
    assert not bad
    with pytest.raises(ValueError):
        check_entropy_lower_bound(1.0, 0.0, 0.0)
