import math
import random
from fractions import Fraction

import pytest

from hypcrit.convergence import (
    ApproximationWitness,
    ContinuityConfig,
    SearchFailure,
    algebraic_convergence_gap,
    run_continuity_experiment,
    search_witness,
    snapshot,
    verify_witness,
)
from hypcrit.errors import InsufficientDataError, MalformedWitnessError
from hypcrit.isometries import certify_ping_pong, schottky_pair
from hypcrit.orbits import enumerate_orbit_ball, schottky_action, tree_action
from hypcrit.space import ModelSpace

PLANE = ModelSpace.plane()


@pytest.fixture(scope="module")
def f2():
    return tree_action()


@pytest.fixture(scope="module")
def f2_ball(f2):
    return enumerate_orbit_ball(f2, 4)


@pytest.fixture(scope="module")
def snap(f2, f2_ball):
    return snapshot(f2, f2_ball, 0.5)


def identity_witness(A, eps):
    return ApproximationWitness(
        tuple(range(len(A.points))),
        tuple(range(len(A.elements))),
        tuple(range(len(A.elements))),
        eps,
    )


# ---------------------------------------------------------------------------
# snapshots


def test_snapshot_elements_are_strictly_inside(snap):
    # radius 2: identity and the four letters; length-2 words sit exactly
    # on the boundary shell and are excluded
    assert sorted(el.word for el in snap.elements) == ["", "A", "B", "a", "b"]
    assert all(el.displacement < snap.radius for el in snap.elements)


def test_snapshot_net_covers_the_ball(snap):
    assert snap.covering_radius == pytest.approx(1.0 / 32.0)
    assert snap.points[snap.base_index].word == ""
    import numpy as np

    da = snap.distances()[snap.base_index]
    assert float(np.max(da)) <= snap.radius + 1e-12


def test_snapshot_action_table_is_exact(snap, f2):
    from hypcrit.isometries import apply_isometry

    for gi, el in enumerate(snap.elements[:3]):
        iso = f2.isometry(el.word)
        for pi in range(0, len(snap.points), 37):
            j = snap.action_table[gi, pi]
            if j < 0:
                continue
            assert apply_isometry(f2.space, iso, snap.points[pi]) == snap.points[j]


def test_snapshot_refuses_coarse_resolution(f2, f2_ball):
    with pytest.raises(ValueError):
        snapshot(f2, f2_ball, 0.5, resolution=Fraction(1, 4))


def test_snapshot_refuses_shallow_ball(f2):
    with pytest.raises(InsufficientDataError):
        snapshot(f2, enumerate_orbit_ball(f2, 1), 0.25)


# ---------------------------------------------------------------------------
# witness verification


def test_identity_witness_is_valid_at_twice_covering_radius(snap):
    eps = 2.0 * snap.covering_radius
    valid, defects = verify_witness(snap, snap, identity_witness(snap, eps))
    assert valid
    assert defects.basepoint == 0.0
    assert defects.distortion == 0.0
    assert defects.phi_equivariance == 0.0
    assert defects.psi_equivariance == 0.0
    assert defects.surjectivity == pytest.approx(snap.covering_radius)


def test_malformed_witnesses_are_rejected_loudly(snap):
    w = identity_witness(snap, 1.0)
    with pytest.raises(MalformedWitnessError):
        verify_witness(snap, snap, ApproximationWitness(w.f[:-1], w.phi, w.psi, 1.0))
    bad_phi = (len(snap.elements) + 5,) + w.phi[1:]
    with pytest.raises(MalformedWitnessError):
        verify_witness(snap, snap, ApproximationWitness(w.f, bad_phi, w.psi, 1.0))


def test_generator_swap_has_large_equivariance_defect(snap, f2, f2_ball):
    words = [el.word for el in snap.elements]
    swap = {"a": "b", "b": "a", "A": "B", "B": "A"}
    phi = tuple(words.index(swap.get(w, w)) for w in words)
    w = identity_witness(snap, 0.5)
    valid, defects = verify_witness(snap, snap, ApproximationWitness(w.f, phi, w.psi, 0.5))
    assert not valid
    systole = 1.0
    assert defects.phi_equivariance >= systole - 0.5


def test_search_witness_between_rescaled_trees(f2, f2_ball):
    lim = snapshot(f2, f2_ball, 1.0, resolution=Fraction(1, 16))
    ell = Fraction(65, 64)
    near = tree_action(edge_length=ell)
    nball = enumerate_orbit_ball(near, 4 * ell)
    nsnap = snapshot(near, nball, 1.0, resolution=ell / 16)
    got = search_witness(nsnap, lim, 1.0)
    assert isinstance(got, ApproximationWitness)
    assert got.defects.worst() < 1.0
    assert got.defects.distortion < 0.1


def test_search_witness_reports_failures(f2, f2_ball):
    lim = snapshot(f2, f2_ball, 1.0)
    far = tree_action(edge_length=Fraction(3))
    fball = enumerate_orbit_ball(far, 12)
    fsnap = snapshot(far, fball, 1.0, resolution=Fraction(3, 16))
    got = search_witness(fsnap, lim, 0.1)
    assert isinstance(got, SearchFailure)
    assert got.defects.worst() >= 0.1


def test_validity_is_monotone_in_epsilon(snap):
    rng = random.Random(11)
    n_pts, n_els = len(snap.points), len(snap.elements)
    grid = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
    for _ in range(20):
        f = tuple(rng.randrange(n_pts) for _ in range(n_pts))
        phi = tuple(rng.randrange(n_els) for _ in range(n_els))
        psi = tuple(rng.randrange(n_els) for _ in range(n_els))
        verdicts = [
            verify_witness(snap, snap, ApproximationWitness(f, phi, psi, e))[0]
            for e in grid
        ]
        # once valid at some eps, valid at every larger eps
        assert verdicts == sorted(verdicts)


# ---------------------------------------------------------------------------
# convergence experiments


def test_algebraic_gap_shrinks_along_the_family():
    gens_limit = schottky_pair(4.0).generators
    gaps = [
        algebraic_convergence_gap(PLANE, schottky_pair(4.0 + step).generators,
                                  gens_limit, 3.0, samples=50, seed=0)
        for step in (0.5, 0.25, 0.125)
    ]
    assert gaps[0] > gaps[1] > gaps[2] > 0


def test_constant_family_passes_trivially():
    cfg = ContinuityConfig(
        ball_T=6.0,
        window=(2.0, 6.0),
        eps_ladder=(1.0, 0.5),
        param_scale=float,
        h_target=lambda ell: math.log(3.0) / float(ell),
    )
    rep = run_continuity_experiment(
        lambda ell: tree_action(edge_length=ell),
        [Fraction(1), Fraction(1)],
        Fraction(1),
        cfg,
    )
    assert rep.passed
    for row in rep.rows:
        assert row.eps == 0.5
        assert row.h_hat == rep.h_limit
        assert row.K < 2.0


def test_certification_failure_aborts_the_experiment():
    from hypcrit.errors import CertificationError

    def member(L):
        desc = schottky_pair(float(L))
        cert = certify_ping_pong(desc)
        if not hasattr(cert, "systole_bound"):
            raise CertificationError("ping-pong certification failed")
        return schottky_action(desc, cert)

    cfg = ContinuityConfig(ball_T=6.0, eps_ladder=(0.5,), rank_window=(1, 4),
                           param_scale=lambda L: L / 4.0)
    with pytest.raises(CertificationError) as err:
        run_continuity_experiment(member, [0.5], 4.0, cfg)
    assert "0.5" in str(err.value)
