"""Concrete isometries of the two model spaces.

Tree isometries are reduced words acting on the Cayley tree by left
multiplication (the source of truth; no matrix representation). Plane
isometries are real 2x2 matrices of determinant 1, identified with their
negatives, acting by Mobius transformations; products are renormalized to
determinant 1 to damp float drift.

Schottky subgroups of the plane isometries come with paired disjoint disks
(arcs of the boundary circle) and a sampling-based ping-pong certificate.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ClassificationError, KindMismatchError
from .space import PLANE, TREE, PlanePoint, TreePoint, plane_distance
from .words import (
    compose_words,
    cyclic_reduce,
    invert_word,
    is_reduced,
    letters,
    reduce_word,
    reduced_words_upto,
)

MAT_TOL = 1e-12


@dataclass(frozen=True)
class TreeIsometry:
    word: str

    def __post_init__(self):
        if not is_reduced(self.word):
            raise ValueError("tree isometry word must be reduced")

    @property
    def kind(self):
        return TREE

    def inverse(self):
        return TreeIsometry(invert_word(self.word))

    @property
    def is_identity(self):
        return self.word == ""


def _normalize_matrix(m):
    a, b, c, d = m
    det = a * d - b * c
    if det <= 0:
        raise ValueError("matrix must have positive determinant, got %g" % det)
    s = math.sqrt(det)
    a, b, c, d = a / s, b / s, c / s, d / s
    # canonical sign: first entry of (a, b, c, d) with |entry| > tol positive
    for entry in (a, b, c, d):
        if abs(entry) > MAT_TOL:
            if entry < 0:
                a, b, c, d = -a, -b, -c, -d
            break
    return (a, b, c, d)


@dataclass(frozen=True)
class PlaneIsometry:
    mat: tuple  # (a, b, c, d), det = 1, canonical sign

    @staticmethod
    def from_matrix(a, b, c, d):
        return PlaneIsometry(_normalize_matrix((float(a), float(b), float(c), float(d))))

    @property
    def kind(self):
        return PLANE

    @property
    def trace(self):
        return self.mat[0] + self.mat[3]

    def inverse(self):
        a, b, c, d = self.mat
        return PlaneIsometry(_normalize_matrix((d, -b, -c, a)))

    @property
    def is_identity(self):
        a, b, c, d = self.mat
        return abs(a - 1) < 1e-9 and abs(d - 1) < 1e-9 and abs(b) < 1e-9 and abs(c) < 1e-9

    def boundary_apply(self, x):
        """Action on the boundary (real line plus infinity)."""
        a, b, c, d = self.mat
        if x == math.inf:
            return a / c if abs(c) > MAT_TOL else math.inf
        den = c * x + d
        if abs(den) < 1e-300:
            return math.inf
        return (a * x + b) / den


IDENTITY_PLANE = PlaneIsometry.from_matrix(1.0, 0.0, 0.0, 1.0)


def compose(g, h):
    """g after h (so apply(compose(g,h), p) == apply(g, apply(h, p)))."""
    if g.kind != h.kind:
        raise KindMismatchError("cannot compose isometries of different kinds")
    if g.kind == TREE:
        return TreeIsometry(compose_words(g.word, h.word))
    a1, b1, c1, d1 = g.mat
    a2, b2, c2, d2 = h.mat
    return PlaneIsometry(
        _normalize_matrix(
            (
                a1 * a2 + b1 * c2,
                a1 * b2 + b1 * d2,
                c1 * a2 + d1 * c2,
                c1 * b2 + d1 * d2,
            )
        )
    )


def apply_isometry(space, iso, p):
    """Apply an isometry to a model point."""
    if space.kind != iso.kind:
        raise KindMismatchError("isometry kind does not match space kind")
    if space.kind == TREE:
        if not isinstance(p, TreePoint):
            raise KindMismatchError("expected tree point")
        w = compose_words(iso.word, p.word)
        if p.offset == 0:
            return TreePoint(w)
        far = compose_words(iso.word, compose_words(p.word, p.direction))
        if len(far) == len(w) + 1:
            return TreePoint(w, p.offset, far[-1])
        # the image edge is canonically anchored at the other endpoint
        return TreePoint(far, space.edge_length - p.offset, w[-1])
    if not isinstance(p, PlanePoint):
        raise KindMismatchError("expected plane point")
    a, b, c, d = iso.mat
    z = (a * p.z + b) / (c * p.z + d)
    return PlanePoint(complex(z.real, max(z.imag, 1e-300)))


def translation_length(space, iso):
    """Stable displacement of a hyperbolic isometry.

    Tree words translate along their axis by the cyclically reduced length.
    A plane matrix with |trace| > 2 translates by 2 arccosh(|trace|/2);
    elliptic and parabolic matrices are rejected with a classification
    error rather than returning 0 or NaN.
    """
    if space.kind != iso.kind:
        raise KindMismatchError("isometry kind does not match space kind")
    if space.kind == TREE:
        return len(cyclic_reduce(iso.word)) * space.edge_length
    tr = abs(iso.trace)
    if tr > 2.0 + 1e-9:
        return 2.0 * math.acosh(tr / 2.0)
    if tr > 2.0 - 1e-9:
        raise ClassificationError("parabolic", iso.trace)
    raise ClassificationError("elliptic", iso.trace)


# ---------------------------------------------------------------------------
# boundary circle bookkeeping: the real line is mapped to the unit circle by
# the Cayley transform x -> (x - i)/(x + i); arcs are (center angle, half
# width) pairs, with infinity at angle 0.


def boundary_angle(x):
    if x == math.inf:
        return 0.0
    w = complex(x, -1.0) / complex(x, 1.0)
    return math.atan2(w.imag, w.real)


def angle_to_boundary(theta):
    if abs(theta) < 1e-15:
        return math.inf
    return -1.0 / math.tan(theta / 2.0)


def _angle_gap(t1, t2):
    d = (t1 - t2) % (2.0 * math.pi)
    if d > math.pi:
        d -= 2.0 * math.pi
    return d


@dataclass(frozen=True)
class BoundaryArc:
    center: float  # angle
    half_width: float

    def contains_angle(self, theta, slack=0.0):
        return abs(_angle_gap(theta, self.center)) <= self.half_width + slack

    def contains(self, x, slack=0.0):
        return self.contains_angle(boundary_angle(x), slack)


def _fixed_points(iso):
    """(repelling, attracting) boundary fixed points of a hyperbolic matrix."""
    a, b, c, d = iso.mat
    tr = a + d
    if abs(tr) <= 2.0:
        raise ClassificationError("elliptic" if abs(tr) < 2 else "parabolic", tr)
    disc = math.sqrt(tr * tr - 4.0)
    if abs(c) > MAT_TOL:
        x1 = ((a - d) + disc) / (2.0 * c)
        x2 = ((a - d) - disc) / (2.0 * c)
        # attracting fixed point has |c x + d| > 1
        if abs(c * x1 + d) > 1.0:
            return x2, x1
        return x1, x2
    # c == 0: fixed points are infinity and b/(d - a)
    other = b / (d - a) if abs(d - a) > MAT_TOL else math.inf
    if abs(a / d) > 1.0:
        return other, math.inf
    return math.inf, other


def standard_disks(iso):
    """Source/target arcs for a hyperbolic generator.

    Conjugating the generator to the dilation xi -> e^L xi (repelling fixed
    point at 0, attracting at infinity), the source disk is the preimage of
    {|xi| <= e^{-L/2}} and the target the preimage of {|xi| >= e^{L/2}}.
    The generator maps the exterior of its source arc into its target arc;
    the inverse swaps the roles.
    """
    rep, att = _fixed_points(iso)
    from .space import _mobius_apply, _mobius_inverse, _mobius_to_axis

    m = _mobius_to_axis(rep, att)
    minv = _mobius_inverse(m)
    L = 2.0 * math.acosh(abs(iso.trace) / 2.0)
    s = math.exp(-L / 2.0)

    def arc_through(scale, inside_point):
        p1 = _mobius_apply(minv, complex(scale, 0.0))
        p2 = _mobius_apply(minv, complex(-scale, 0.0))
        p1 = p1.real if p1 != math.inf else math.inf
        p2 = p2.real if p2 != math.inf else math.inf
        t1, t2 = boundary_angle(p1), boundary_angle(p2)
        tc = boundary_angle(inside_point)
        # the arc between t1, t2 containing tc
        half = abs(_angle_gap(t1, t2)) / 2.0
        mid = t2 + _angle_gap(t1, t2) / 2.0
        if abs(_angle_gap(tc, mid)) > half:
            mid = mid + math.pi
            half = math.pi - half
        return BoundaryArc(math.atan2(math.sin(mid), math.cos(mid)), half)

    source = arc_through(s, rep)
    target = arc_through(1.0 / s, att)
    return source, target


@dataclass(frozen=True)
class SchottkyDescription:
    generators: tuple  # PlaneIsometry, one per free generator
    disks: tuple  # ((source_arc, target_arc), ...) aligned with generators

    @staticmethod
    def with_standard_disks(gens):
        return SchottkyDescription(tuple(gens), tuple(standard_disks(g) for g in gens))


@dataclass(frozen=True)
class SchottkyCertificate:
    systole_bound: float
    attaining_word: str
    per_letter_gain: float
    boundary_samples: int
    word_horizon: int
    displacement_table: dict = field(repr=False, default=None)


@dataclass(frozen=True)
class PingPongFailure:
    reason: str
    witness: object = None


def _word_matrices(gens, horizon):
    """Matrices of all reduced words up to the horizon, memoized by prefix."""
    rank = len(gens)
    alph = letters(rank)
    gen_map = {}
    for i, g in enumerate(gens):
        gen_map[alph[2 * i]] = g
        gen_map[alph[2 * i + 1]] = g.inverse()
    mats = {"": IDENTITY_PLANE}
    for w in reduced_words_upto(rank, horizon):
        if w and w not in mats:
            mats[w] = compose(mats[w[:-1]], gen_map[w[-1]])
    return mats


def certify_ping_pong(desc, boundary_samples=10_000, word_horizon=6, gain_horizon=4):
    """Sampling-based ping-pong certification of a Schottky description.

    Checks that the 2m disks are pairwise disjoint and that each generator
    maps the (sampled) exterior of its source disk into its target disk.
    On success returns a certificate carrying a systole lower bound at the
    basepoint i (minimum displacement over all reduced words of length <=
    word_horizon, with positive measured per-letter displacement gain over
    words of length <= gain_horizon). On failure returns a PingPongFailure
    with the offending sample. The certificate records the sampling density;
    this is dense sampling, not interval arithmetic.
    """
    gens = desc.generators
    if len(gens) < 2:
        raise ValueError("ping-pong needs at least 2 generators")
    arcs = []
    for i, (src, tgt) in enumerate(desc.disks):
        if src.half_width <= 0 or tgt.half_width <= 0:
            raise ValueError("malformed disk: nonpositive radius")
        arcs.append(("src", i, src))
        arcs.append(("tgt", i, tgt))
    for a in range(len(arcs)):
        for b in range(a + 1, len(arcs)):
            gap = abs(_angle_gap(arcs[a][2].center, arcs[b][2].center))
            if gap <= arcs[a][2].half_width + arcs[b][2].half_width:
                return PingPongFailure(
                    "disks not disjoint", (arcs[a][:2], arcs[b][:2])
                )
    # nesting: each generator maps the exterior of its source arc into its
    # target arc (and the inverse swaps source/target)
    thetas = [
        -math.pi + (2.0 * math.pi) * (k + 0.5) / boundary_samples
        for k in range(boundary_samples)
    ]
    for i, g in enumerate(gens):
        src, tgt = desc.disks[i]
        ginv = g.inverse()
        for theta in thetas:
            if not src.contains_angle(theta):
                x = angle_to_boundary(theta)
                if not tgt.contains(g.boundary_apply(x)):
                    return PingPongFailure("nesting violated by generator", (i, x))
            if not tgt.contains_angle(theta):
                x = angle_to_boundary(theta)
                if not src.contains(ginv.boundary_apply(x)):
                    return PingPongFailure("nesting violated by inverse", (i, x))
    # displacement survey at the basepoint
    base = PlanePoint(1j)
    mats = _word_matrices(gens, word_horizon)
    disp = {}
    for w, m in mats.items():
        a, b, c, d = m.mat
        z = (a * 1j + b) / (c * 1j + d)
        disp[w] = plane_distance(1j, z)
    nonid = {w: v for w, v in disp.items() if w}
    best_word = min(nonid, key=lambda w: (nonid[w], w))
    gain = min(
        disp[w] - disp[w[:-1]]
        for w in disp
        if 1 <= len(w) <= gain_horizon
    )
    if gain <= 0:
        return PingPongFailure("no positive per-letter displacement gain", best_word)
    return SchottkyCertificate(
        systole_bound=nonid[best_word],
        attaining_word=best_word,
        per_letter_gain=gain,
        boundary_samples=boundary_samples,
        word_horizon=word_horizon,
        displacement_table=disp,
    )


def schottky_pair(L=4.0):
    """The standard two-generator Schottky description with translation
    lengths L: a dilation along the imaginary axis and its conjugate by the
    quarter rotation about i (axis from -1 to 1)."""
    g1 = PlaneIsometry.from_matrix(math.exp(L / 2.0), 0.0, 0.0, math.exp(-L / 2.0))
    th = math.pi / 4.0
    r = PlaneIsometry.from_matrix(math.cos(th), -math.sin(th), math.sin(th), math.cos(th))
    g2 = compose(compose(r, g1), r.inverse())
    return SchottkyDescription.with_standard_disks([g1, g2])
