import math
import random

import pytest

from hypcrit.errors import ClassificationError
from hypcrit.isometries import (
    IDENTITY_PLANE,
    PingPongFailure,
    PlaneIsometry,
    SchottkyCertificate,
    SchottkyDescription,
    TreeIsometry,
    apply_isometry,
    certify_ping_pong,
    compose,
    schottky_pair,
    translation_length,
)
from hypcrit.space import ModelSpace, PlanePoint, TreePoint, distance, plane_distance

TREE = ModelSpace.tree()
PLANE = ModelSpace.plane()


def hyperbolic_shift(t):
    return PlaneIsometry.from_matrix(math.exp(t / 2), 0.0, 0.0, math.exp(-t / 2))


def test_tree_isometry_acts_by_left_multiplication():
    g = TreeIsometry("ab")
    assert apply_isometry(TREE, g, TreePoint("")) == TreePoint("ab")
    assert apply_isometry(TREE, g, TreePoint("Ba")) == TreePoint("aa")
    assert apply_isometry(TREE, g.inverse(), apply_isometry(TREE, g, TreePoint("bA"))) == TreePoint("bA")


def test_compose_matches_sequential_application():
    rng = random.Random(5)
    for _ in range(100):
        g = hyperbolic_shift(rng.uniform(-2, 2))
        h = PlaneIsometry.from_matrix(1.0, rng.uniform(-2, 2), 0.0, 1.0)
        z = PlanePoint(complex(rng.uniform(-2, 2), rng.uniform(0.2, 3)))
        lhs = apply_isometry(PLANE, compose(g, h), z)
        rhs = apply_isometry(PLANE, g, apply_isometry(PLANE, h, z))
        assert plane_distance(lhs.z, rhs.z) < 1e-9


def test_isometries_preserve_distance():
    rng = random.Random(6)
    for _ in range(100):
        g = compose(hyperbolic_shift(rng.uniform(-2, 2)),
                    PlaneIsometry.from_matrix(1.0, rng.uniform(-2, 2), 0.0, 1.0))
        z1 = PlanePoint(complex(rng.uniform(-2, 2), rng.uniform(0.2, 3)))
        z2 = PlanePoint(complex(rng.uniform(-2, 2), rng.uniform(0.2, 3)))
        d0 = float(distance(PLANE, z1, z2))
        d1 = float(distance(PLANE, apply_isometry(PLANE, g, z1), apply_isometry(PLANE, g, z2)))
        assert d1 == pytest.approx(d0, abs=1e-9)


def test_translation_length_of_diagonal_matrix():
    # oracle: translation length of diag(e^{t/2}, e^{-t/2}) is exactly t
    for t in (0.5, 1.0, 4.0):
        assert translation_length(PLANE, hyperbolic_shift(t)) == pytest.approx(t, abs=1e-9)


def test_translation_length_rejects_elliptic_and_parabolic():
    rot = PlaneIsometry.from_matrix(math.cos(1.0), math.sin(1.0), -math.sin(1.0), math.cos(1.0))
    with pytest.raises(ClassificationError):
        translation_length(PLANE, rot)
    shift = PlaneIsometry.from_matrix(1.0, 1.0, 0.0, 1.0)
    with pytest.raises(ClassificationError):
        translation_length(PLANE, shift)


def test_tree_translation_length_is_cyclic_word_length():
    assert translation_length(TREE, TreeIsometry("ab")) == 2
    assert translation_length(TREE, TreeIsometry("abA")) == 1  # conjugate of b


def test_matrix_normalization():
    g = PlaneIsometry.from_matrix(2.0, 0.0, 0.0, 0.5)
    a, b, c, d = g.mat
    assert a * d - b * c == pytest.approx(1.0, abs=1e-12)
    assert IDENTITY_PLANE.is_identity
    with pytest.raises(ValueError):
        PlaneIsometry.from_matrix(1.0, 0.0, 0.0, -1.0)


def test_schottky_pair_certifies_at_l4():
    desc = schottky_pair(4.0)
    cert = certify_ping_pong(desc)
    assert isinstance(cert, SchottkyCertificate)
    assert cert.systole_bound == pytest.approx(4.0, abs=1e-9)
    assert cert.per_letter_gain > 0.0


def test_ping_pong_fails_when_disks_collide():
    # short translation lengths shrink the gap between the disks to nothing
    desc = schottky_pair(0.5)
    got = certify_ping_pong(desc)
    assert isinstance(got, PingPongFailure)


def test_certificate_words_are_honest_displacements():
    desc = schottky_pair(4.0)
    cert = certify_ping_pong(desc)
    act_base = PlanePoint(1j)
    for g in desc.generators:
        d = float(distance(PLANE, act_base, apply_isometry(PLANE, g, act_base)))
        assert d >= cert.systole_bound - 1e-9


def test_standard_disks_description_roundtrip():
    desc = SchottkyDescription.with_standard_disks(schottky_pair(4.0).generators)
    assert len(desc.generators) == 2
    # one (repelling, attracting) arc pair per generator
    assert len(desc.disks) == 2
    assert all(len(pair) == 2 for pair in desc.disks)
