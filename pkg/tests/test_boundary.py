import math

import pytest

from hypcrit.boundary import (
    VisualParams,
    ball_mass,
    boundary_gromov_product,
    check_ahlfors_regularity,
    check_quasiconformality,
    check_shadow_ball_lemma,
    cylinder_scale,
    generalized_ball_contains,
    limit_set_sample,
    patterson_sullivan_atoms,
    plane_boundary,
    qc_hull_sample,
    shadow_contains,
    shadow_mass,
    tree_boundary,
    tree_cylinder_cells,
    visual_distance,
)
from hypcrit.errors import DepthError, InsufficientDataError, MeasureError
from hypcrit.isometries import certify_ping_pong, schottky_pair
from hypcrit.orbits import enumerate_orbit_ball, schottky_action, tree_action
from hypcrit.space import TreePoint


@pytest.fixture(scope="module")
def f2():
    return tree_action()


@pytest.fixture(scope="module")
def f2_ball(f2):
    return enumerate_orbit_ball(f2, 8)


@pytest.fixture(scope="module")
def f2_measure(f2, f2_ball):
    return patterson_sullivan_atoms(f2, f2_ball, 1.3)


@pytest.fixture(scope="module")
def schottky():
    desc = schottky_pair(4.0)
    return schottky_action(desc, certify_ping_pong(desc))


@pytest.fixture(scope="module")
def schottky_ball(schottky):
    return enumerate_orbit_ball(schottky, 14.0)


# ---------------------------------------------------------------------------
# boundary products, visual metric, shadows


def test_tree_boundary_product_is_lcp(f2):
    z = tree_boundary("abab")
    zp = tree_boundary("abba")
    p, err = boundary_gromov_product(f2, z, zp)
    assert p == 2
    assert err == 0


def test_tree_boundary_product_refuses_truncation(f2):
    with pytest.raises(DepthError):
        boundary_gromov_product(f2, tree_boundary("ab"), tree_boundary("abab"))


def test_plane_boundary_product_bracket(schottky):
    z = plane_boundary(1.0, depth=12.0)
    zp = plane_boundary(-1.0, depth=12.0)
    p, err = boundary_gromov_product(schottky, z, zp)
    assert p >= -1e-9
    assert 0 <= err <= schottky.declared_delta + 1e-12


def test_visual_distance_tree_is_an_ultrametric(f2):
    params = VisualParams(a=1.0)
    zs = [tree_boundary(w) for w in ("aaaa", "abaa", "abba", "baba")]
    for z in zs:
        for zp in zs:
            if z.word == zp.word:
                continue
            lo, hi = visual_distance(params, f2, z, zp)
            assert lo == hi
    d = lambda u, v: visual_distance(params, f2, tree_boundary(u), tree_boundary(v))[0]
    for u, v, w in (("aaaa", "abaa", "abba"), ("aaaa", "baba", "abba")):
        assert d(u, w) <= max(d(u, v), d(v, w)) + 1e-12


def test_visual_distance_plane_bracket_ordering(schottky):
    params = VisualParams(a=0.3)
    z = plane_boundary(2.0, depth=12.0)
    zp = plane_boundary(-3.0, depth=12.0)
    lo, hi = visual_distance(params, schottky, z, zp)
    assert 0 < lo <= hi


def test_visual_parameter_range_is_enforced(schottky):
    with pytest.raises(ValueError):
        visual_distance(VisualParams(a=0.7), schottky,
                        plane_boundary(1.0), plane_boundary(-1.0))


def test_generalized_ball_is_the_cylinder(f2):
    rho = cylinder_scale(f2, 2)
    z = tree_boundary("ab")
    assert generalized_ball_contains(f2, z, rho, tree_boundary("abaa"))
    assert generalized_ball_contains(f2, z, rho, tree_boundary("aBaa")) is False
    # a shallower approximant that might or might not continue into the
    # cylinder is refused, not guessed
    with pytest.raises(DepthError):
        generalized_ball_contains(f2, tree_boundary("abab"), cylinder_scale(f2, 4), z)


def test_shadow_contains_tree(f2):
    y = TreePoint("ab")
    assert shadow_contains(f2, y, 0.5, tree_boundary("ababab"))
    assert not shadow_contains(f2, y, 0.5, tree_boundary("bbbbbb"))
    with pytest.raises(ValueError):
        shadow_contains(f2, y, 0.0, tree_boundary("ababab"))


def test_shadow_contains_plane_vertical_axis(schottky):
    # basepoint i, endpoint inf: the ray is the vertical half-line above i
    from hypcrit.space import PlanePoint

    assert shadow_contains(schottky, PlanePoint(3j), 0.5, plane_boundary(math.inf))
    assert not shadow_contains(schottky, PlanePoint(3.0 + 3j), 0.5, plane_boundary(math.inf))


# ---------------------------------------------------------------------------
# limit sets and measures


def test_limit_set_sample_tree(f2, f2_ball):
    sam = limit_set_sample(f2, f2_ball, 8)
    assert len(sam) == 4 * 3**7
    assert all(z.depth == 8 for z in sam)
    with pytest.raises(InsufficientDataError):
        limit_set_sample(f2, f2_ball, 9)


def test_limit_set_sample_plane(schottky, schottky_ball):
    sam = limit_set_sample(schottky, schottky_ball, 4.0)
    assert len(sam) >= 4
    coords = [z.coord for z in sam]
    assert len(set(coords)) == len(coords)


def test_qc_hull_sample_sizes(f2, f2_ball):
    sam = limit_set_sample(f2, f2_ball, 8)
    hull = qc_hull_sample(f2, sam[:50], 20, seed=1)
    assert len(hull) > 20


def test_measure_requires_supercritical_s(f2, f2_ball):
    with pytest.raises(MeasureError):
        patterson_sullivan_atoms(f2, f2_ball, 0.9)  # below log 3
    with pytest.raises(MeasureError):
        patterson_sullivan_atoms(f2, f2_ball, -1.0)


def test_measure_is_normalized(f2_measure):
    assert sum(a.weight for a in f2_measure.atoms) == pytest.approx(1.0, rel=1e-12)
    assert all(a.boundary is not None for a in f2_measure.boundary_atoms)


def test_cylinder_mass_closed_form(f2, f2_measure):
    # oracle: with atoms at word lengths 6..8 and weights prop. to
    # 3^{-1.3 k}, every depth-n cylinder carries (3/4) 3^{-n} of the mass
    for n in (1, 2, 3):
        mass, frac = ball_mass(f2, f2_measure, tree_boundary("ab"[: 1] * n), cylinder_scale(f2, n))
        assert mass == pytest.approx(0.75 * 3.0**-n, rel=1e-6)
        assert frac > 0
    for n in (1, 2, 3):
        cells = tree_cylinder_cells(f2, n)
        m0, _ = ball_mass(f2, f2_measure, cells[0][0], cells[0][1])
        m1, _ = ball_mass(f2, f2_measure, cells[-1][0], cells[-1][1])
        assert m0 == pytest.approx(m1, rel=1e-9)


def test_ball_mass_refuses_unresolvable_scale(f2, f2_measure):
    mass, frac = ball_mass(f2, f2_measure, tree_boundary("a" * 12), math.exp(-12.0))
    assert mass is None
    assert frac == 0.0


def test_shadow_mass_positive_on_attained_shadows(f2, f2_measure):
    deep = [a for a in f2_measure.boundary_atoms if a.word][0]
    m = shadow_mass(f2, f2_measure, deep.point, 2.0)
    assert m is not None and m > 0


# ---------------------------------------------------------------------------
# audits


def test_ahlfors_audit_tree(f2, f2_measure):
    centers = [z for z, _ in tree_cylinder_cells(f2, 4)[::20]]
    scales = [cylinder_scale(f2, n) for n in (1, 2, 3, 4)]
    rep = check_ahlfors_regularity(f2, f2_measure, math.log(3.0), centers, scales)
    assert rep.passed
    assert rep.A_upper == pytest.approx(0.75, rel=1e-6)
    assert rep.A_lower == pytest.approx(0.75, rel=1e-6)
    assert rep.step1_bound == pytest.approx(3.0**1.5, rel=1e-12)


def test_ahlfors_audit_rejects_dirac_control(f2, f2_measure):
    from hypcrit.boundary import Atom, AtomicMeasure

    deep = max(f2_measure.boundary_atoms, key=lambda a: a.displacement)
    dirac = AtomicMeasure((Atom(deep.word, deep.point, deep.displacement, 1.0, deep.boundary),),
                          f2_measure.s, f2_measure.truncation_T)
    centers = [deep.boundary]
    scales = [cylinder_scale(f2, n) for n in (3, 4, 5)]
    rep = check_ahlfors_regularity(f2, dirac, math.log(3.0), centers, scales)
    assert not rep.passed


def test_quasiconformality_tree_is_conformal(f2, f2_measure):
    rep = check_quasiconformality(f2, f2_measure, math.log(3.0), "a", tree_cylinder_cells(f2, 3))
    assert rep.Q == pytest.approx(1.0, abs=1e-9)
    assert rep.cells_used > 0


def test_quasiconformality_plane_reports_finite_q(schottky):
    ball = enumerate_orbit_ball(schottky, 23.0)
    measure = patterson_sullivan_atoms(schottky, ball, 0.35)
    lim = limit_set_sample(schottky, ball, 12.0)
    cells = [(z, 0.05) for z in lim[:20]]
    rep = check_quasiconformality(schottky, measure, 0.2767, "a", cells)
    assert math.isfinite(rep.Q) and rep.Q >= 1.0


def test_shadow_ball_lemma_both_models(f2, schottky, schottky_ball):
    tball = enumerate_orbit_ball(f2, 8)
    tsam = limit_set_sample(f2, tball, 8)[::40]
    trep = check_shadow_ball_lemma(f2, tsam, [2.0, 4.0], seed=3, pair_count=100)
    assert trep.passed
    psam = limit_set_sample(schottky, schottky_ball, 4.0)
    prep = check_shadow_ball_lemma(schottky, psam, [2.0, 4.0], seed=3, pair_count=100)
    assert prep.passed
    assert all(ok for _, _, _, ok in prep.pack_cov_rows)
