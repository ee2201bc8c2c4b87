"""Model spaces: weighted regular trees and the hyperbolic upper half-plane.

Tree points and distances are exact (stdlib Fraction in units of the edge
length); plane points are complex numbers z = re + i*im with im > 0 and all
plane arithmetic is float64 with a declared metric tolerance of 1e-9.

The tree of valence 2k is realized as the Cayley tree of the free group F_k:
vertices are reduced words, edges have length `edge_length`, and a point in
the interior of an edge is stored as (shallow vertex word, offset, letter of
the deeper endpoint). Odd valences are supported for bare geometry by
allowing words over an asymmetric alphabet is NOT done here; instead odd
valence is accepted only in the sense that geometry functions never need the
group structure. In practice every scenario uses even valence.

Plane geodesics are handled through a single code path: conjugate the
geodesic to the positive imaginary axis by a Mobius map and move along it by
multiplying the imaginary part by e^t.
"""

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DepthError, KindMismatchError
from .words import is_reduced, word_key, _ORDER

TREE = "tree"
PLANE = "plane"

#: declared point-equality tolerance in the plane metric
PLANE_TOL = 1e-9


@dataclass(frozen=True)
class TreePoint:
    """A point of the weighted tree.

    ``word`` is the reduced word of the shallowest vertex of the edge the
    point lies on; ``offset`` (a Fraction, in length units, 0 <= offset <
    edge_length) is the distance from that vertex toward the deeper vertex
    ``word + direction``. Vertices have offset 0 and direction None.
    """

    word: str
    offset: Fraction = Fraction(0)
    direction: str = None

    def __post_init__(self):
        if not is_reduced(self.word):
            raise ValueError("tree vertex word must be reduced: %r" % self.word)
        if self.offset == 0:
            if self.direction is not None:
                raise ValueError("vertex point must have direction None")
        else:
            if self.direction is None:
                raise ValueError("edge-interior point needs a direction letter")
            if self.word and self.direction == self.word[-1].swapcase():
                raise ValueError("direction would backtrack; not a reduced edge")

    @property
    def is_vertex(self):
        return self.offset == 0


@dataclass(frozen=True)
class PlanePoint:
    """Upper half-plane point, stored as a complex number with im > 0."""

    z: complex

    def __post_init__(self):
        if not (self.z.imag > 0):
            raise ValueError("plane point must have positive imaginary part")


@dataclass(frozen=True)
class ModelSpace:
    kind: str
    valence: int = 0
    edge_length: Fraction = Fraction(1)

    @staticmethod
    def tree(valence=4, edge_length=1):
        if valence < 3:
            raise ValueError("tree valence must be >= 3")
        return ModelSpace(TREE, valence, Fraction(edge_length))

    @staticmethod
    def plane():
        return ModelSpace(PLANE)

    @property
    def basepoint(self):
        if self.kind == TREE:
            return TreePoint("")
        return PlanePoint(1j)

    @property
    def rank(self):
        """Free-group rank of the tree (valence must be even)."""
        if self.kind != TREE:
            raise KindMismatchError("rank only defined for trees")
        if self.valence % 2 != 0:
            raise ValueError("group structure needs even valence")
        return self.valence // 2


def _check_point(space, p):
    if space.kind == TREE and not isinstance(p, TreePoint):
        raise KindMismatchError("expected a tree point, got %r" % (p,))
    if space.kind == PLANE and not isinstance(p, PlanePoint):
        raise KindMismatchError("expected a plane point, got %r" % (p,))


def _lcp(u, v):
    n = min(len(u), len(v))
    i = 0
    while i < n and u[i] == v[i]:
        i += 1
    return i


def tree_depth(space, p):
    """Distance from the root vertex (empty word), exact."""
    return len(p.word) * space.edge_length + p.offset


def _tree_separation(space, p, q):
    """Length of the common initial segment of the two root-paths."""
    L = space.edge_length
    k = _lcp(p.word, q.word)
    lp, lq = len(p.word), len(q.word)
    if k < lp and k < lq:
        return k * L
    if lp == lq:
        # same vertex
        if p.direction is not None and p.direction == q.direction:
            return lp * L + min(p.offset, q.offset)
        return lp * L
    if lp < lq:
        if p.direction is not None and p.direction == q.word[lp]:
            return lp * L + p.offset
        return lp * L
    if q.direction is not None and q.direction == p.word[lq]:
        return lq * L + q.offset
    return lq * L


def plane_distance(z1, z2):
    """d(z1, z2) = 2 asinh(|z1-z2| / (2 sqrt(y1 y2))); stable near 0."""
    return 2.0 * math.asinh(abs(z1 - z2) / (2.0 * math.sqrt(z1.imag * z2.imag)))


def distance(space, p, q):
    """Distance in the model space. Exact Fraction on trees, float on plane."""
    _check_point(space, p)
    _check_point(space, q)
    if space.kind == TREE:
        return tree_depth(space, p) + tree_depth(space, q) - 2 * _tree_separation(space, p, q)
    return plane_distance(p.z, q.z)


def gromov_product(space, base, y, z):
    """(y, z)_base = (d(base,y) + d(base,z) - d(y,z)) / 2."""
    dxy = distance(space, base, y)
    dxz = distance(space, base, z)
    dyz = distance(space, y, z)
    return (dxy + dxz - dyz) / 2


# ---------------------------------------------------------------------------
# tree geodesics


def _tree_point_at_depth(space, word, direction, depth):
    """Point on the root-path of (word [+ direction partial edge]) at `depth`."""
    L = space.edge_length
    m, r = divmod(depth, L)
    m = int(m)
    if r == 0:
        return TreePoint(word[:m])
    if m < len(word):
        step = word[m]
    else:
        step = direction
    return TreePoint(word[:m], r, step)


def _as_fraction(t):
    if isinstance(t, Fraction):
        return t
    if isinstance(t, int):
        return Fraction(t)
    return Fraction(t)  # exact binary value of the float


def _tree_geodesic_point(space, p, q, t):
    t = _as_fraction(t)
    d = distance(space, p, q)
    if t < 0 or t > d:
        raise ValueError("geodesic parameter out of range: t=%s, d=%s" % (t, d))
    sep = _tree_separation(space, p, q)
    a = tree_depth(space, p) - sep  # length of the upward leg
    if t <= a:
        return _tree_point_at_depth(space, p.word, p.direction, tree_depth(space, p) - t)
    return _tree_point_at_depth(space, q.word, q.direction, sep + (t - a))


# ---------------------------------------------------------------------------
# plane geodesics (single Mobius-conjugation code path)


def _mobius_apply(M, z):
    a, b, c, d = M
    if z == math.inf:
        return a / c if c != 0 else math.inf
    den = c * z + d
    if den == 0:
        return math.inf
    return (a * z + b) / den


def _mobius_inverse(M):
    a, b, c, d = M
    return (d, -b, -c, a)


def _mobius_to_axis(u, v):
    """Mobius map sending boundary points u -> 0, v -> infinity.

    Maps the geodesic line (u, v) onto the positive imaginary axis;
    determinant kept positive so the upper half-plane is preserved.
    """
    if u == math.inf:
        return (0.0, 1.0, -1.0, v)
    if v == math.inf:
        return (1.0, -u, 0.0, 1.0)
    if u > v:
        return (1.0, -u, 1.0, -v)
    return (1.0, -u, -1.0, v)


def plane_geodesic_endpoints(z1, z2):
    """Ideal endpoints (u, v) of the geodesic through z1, z2, v on the z2 side."""
    if abs(z1.real - z2.real) <= 1e-14 * (1.0 + abs(z1.real) + abs(z2.real)):
        x = 0.5 * (z1.real + z2.real)
        if z2.imag >= z1.imag:
            return x, math.inf
        return math.inf, x
    c = (abs(z1) ** 2 - abs(z2) ** 2) / (2.0 * (z1.real - z2.real))
    r = abs(z1 - c)
    u, v = c - r, c + r
    # orient: moving from z1 to z2 must head toward v
    M = _mobius_to_axis(u, v)
    if _mobius_apply(M, z2).imag >= _mobius_apply(M, z1).imag:
        return u, v
    return v, u


def _plane_geodesic_point(space, p, q, t):
    d = plane_distance(p.z, q.z)
    if t < -PLANE_TOL or t > d + PLANE_TOL:
        raise ValueError("geodesic parameter out of range")
    t = min(max(t, 0.0), d)
    if d == 0.0:
        return p
    u, v = plane_geodesic_endpoints(p.z, q.z)
    M = _mobius_to_axis(u, v)
    a = _mobius_apply(M, p.z)
    w = _mobius_apply(_mobius_inverse(M), complex(0.0, abs(a) * math.exp(t)))
    return PlanePoint(complex(w.real, max(w.imag, 1e-300)))


def geodesic_point(space, p, q, t):
    """The point at arclength t along the geodesic from p to q."""
    _check_point(space, p)
    _check_point(space, q)
    if space.kind == TREE:
        return _tree_geodesic_point(space, p, q, t)
    return _plane_geodesic_point(space, p, q, float(t))


# ---------------------------------------------------------------------------
# rays toward the boundary

@dataclass(frozen=True)
class Ray:
    """Geodesic ray description: origin point + boundary target.

    Tree target: a deep reduced word (finite prefix of the intended
    boundary word); the ray is only usable up to the depth of the proxy
    vertex. Plane target: an ideal endpoint, a real number or math.inf.
    """

    origin: object
    target: object


def ray_point(space, ray, t):
    """Point at arclength t >= 0 along the ray."""
    if t < 0:
        raise ValueError("ray parameter must be nonnegative")
    if space.kind == TREE:
        proxy = TreePoint(ray.target)
        d = distance(space, ray.origin, proxy)
        if _as_fraction(t) > d:
            raise DepthError(
                "ray proxy too shallow: t=%s beyond proxy distance %s" % (t, d)
            )
        return _tree_geodesic_point(space, ray.origin, proxy, t)
    e = ray.target
    p = ray.origin.z
    if e == math.inf:
        return PlanePoint(complex(p.real, p.imag * math.exp(t)))
    if abs(p.real - e) <= 1e-14 * (1.0 + abs(e)):
        # vertical ray going down toward e
        return PlanePoint(complex(p.real, p.imag * math.exp(-t)))
    c = (abs(p) ** 2 - e * e) / (2.0 * (p.real - e))
    u = 2.0 * c - e
    M = _mobius_to_axis(u, e)  # u -> 0, e -> infinity
    a = _mobius_apply(M, p)
    w = _mobius_apply(_mobius_inverse(M), complex(0.0, abs(a) * math.exp(t)))
    return PlanePoint(complex(w.real, max(w.imag, 1e-300)))


def busemann(space, ray, y, horizon):
    """Busemann cocycle approximation B(origin side): d(ray(horizon), y) - horizon.

    Returns (value, error_bound). On the tree the sequence stabilizes once
    the horizon passes the projection of y onto the ray, and the error bound
    is then exactly 0. On the plane the approximant decreases monotonically
    to the limit; the reported bound is the measured decrease over the last
    doubling of the horizon (an empirical gap, not a certified bound).
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    _check_point(space, y)
    if space.kind == TREE:
        h = _as_fraction(horizon)
        value = distance(space, ray_point(space, ray, h), y) - h
        prev_h = h - space.edge_length
        if prev_h > 0:
            prev = distance(space, ray_point(space, ray, prev_h), y) - prev_h
            err = Fraction(0) if prev == value else space.edge_length
        else:
            err = space.edge_length
        return value, err
    h = float(horizon)
    value = plane_distance(ray_point(space, ray, h).z, y.z) - h
    half = plane_distance(ray_point(space, ray, h / 2).z, y.z) - h / 2
    return value, max(half - value, 0.0)


# ---------------------------------------------------------------------------
# hyperbolicity estimation

@dataclass(frozen=True)
class HyperbolicityEstimate:
    delta_hat: float
    sample_count: int
    max_defect_witness: tuple


def estimate_delta(space, samples):
    """Largest observed defect of the four-point product inequality.

    samples: list of quadruples (w, x, y, z). The result is a certified
    lower bound for the hyperbolicity constant of the space restricted to
    the sample; no upper bound is claimed.
    """
    if not samples:
        raise ValueError("need at least one sample quadruple")
    best = None
    witness = None
    for (w, x, y, z) in samples:
        defect = min(
            gromov_product(space, w, x, y), gromov_product(space, w, y, z)
        ) - gromov_product(space, w, x, z)
        if best is None or defect > best:
            best = defect
            witness = (w, x, y, z)
    delta_hat = max(best, type(best)(0))
    return HyperbolicityEstimate(delta_hat, len(samples), witness)


# ---------------------------------------------------------------------------
# distances to geodesics (closed forms, used by the inequality audits)


def dist_to_segment(space, x, p, q):
    """d(x, [p,q]) for the geodesic segment between p and q."""
    if space.kind == TREE:
        # on a tree the distance to a geodesic equals the Gromov product
        return gromov_product(space, x, p, q)
    if plane_distance(p.z, q.z) < 1e-13:
        return plane_distance(x.z, p.z)
    u, v = plane_geodesic_endpoints(p.z, q.z)
    M = _mobius_to_axis(u, v)
    xm = _mobius_apply(M, x.z)
    a = abs(_mobius_apply(M, p.z))
    b = abs(_mobius_apply(M, q.z))
    if a > b:
        a, b = b, a
    rho = abs(xm)
    if a <= rho <= b:
        return math.asinh(abs(xm.real) / xm.imag)
    if rho < a:
        return plane_distance(xm, complex(0.0, a))
    return plane_distance(xm, complex(0.0, b))


def plane_dist_to_ideal_line(x, u, v):
    """d(x, line(u, v)) for ideal endpoints u != v on the boundary."""
    M = _mobius_to_axis(u, v)
    xm = _mobius_apply(M, x.z)
    return math.asinh(abs(xm.real) / xm.imag)


def plane_line_point(u, v, xref, t):
    """Point on the ideal line (u,v) at signed arclength t from the
    projection of xref onto the line (positive direction toward v)."""
    M = _mobius_to_axis(u, v)
    xm = _mobius_apply(M, xref.z)
    w = _mobius_apply(_mobius_inverse(M), complex(0.0, abs(xm) * math.exp(t)))
    return PlanePoint(complex(w.real, max(w.imag, 1e-300)))


def tree_dist_to_word_line(space, x, wu, wv):
    """d(x, line) where the line joins the deep vertices of words wu, wv.

    Exact, provided the proxies are deeper than the projection of x.
    """
    return gromov_product(space, x, TreePoint(wu), TreePoint(wv))


# ---------------------------------------------------------------------------
# vectorized pairwise distances


def pairwise_distances(space, points):
    """Dense float64 distance matrix over a list of model points."""
    n = len(points)
    if space.kind == PLANE:
        z = np.array([p.z for p in points], dtype=complex)
        y = z.imag
        num = np.abs(z[:, None] - z[None, :])
        den = 2.0 * np.sqrt(y[:, None] * y[None, :])
        return 2.0 * np.arcsinh(num / den)
    L = float(space.edge_length)
    wl = np.array([len(p.word) for p in points], dtype=np.int64)
    off = np.array([float(p.offset) for p in points])
    maxlen = int(wl.max()) + 1 if n else 1
    path = -np.ones((n, maxlen), dtype=np.int16)
    for i, p in enumerate(points):
        for j, c in enumerate(p.word):
            path[i, j] = _ORDER[c]
        if p.direction is not None:
            path[i, len(p.word)] = _ORDER[p.direction]
    depth = wl * L + off
    # lcp of the full root paths, pairwise
    eq = path[:, None, :] == path[None, :, :]
    # also treat shared -1 padding as unequal-beyond-path; a -1 only matches
    # a -1, which can only extend the lcp past both paths where it is harmless
    neq = ~eq
    has_diff = neq.any(axis=2)
    first_diff = np.where(has_diff, neq.argmax(axis=2), maxlen)
    wmin = np.minimum(wl[:, None], wl[None, :])
    sep = np.minimum(first_diff, wmin) * L
    # partial-edge bonuses
    li, lj = wl[:, None], wl[None, :]
    oi, oj = off[:, None], off[None, :]
    same_vertex_same_dir = (li == lj) & (first_diff > li) & (oi > 0)
    sep = sep + np.where(same_vertex_same_dir, np.minimum(oi, oj), 0.0)
    sep = sep + np.where((li < lj) & (first_diff > li), oi, 0.0)
    sep = sep + np.where((lj < li) & (first_diff > lj), oj, 0.0)
    d = depth[:, None] + depth[None, :] - 2.0 * sep
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def distances_to_point(space, points, q):
    """Vector of distances from each point in `points` to q."""
    if space.kind == PLANE:
        z = np.array([p.z for p in points], dtype=complex)
        return 2.0 * np.arcsinh(np.abs(z - q.z) / (2.0 * np.sqrt(z.imag * q.z.imag)))
    return np.array([float(distance(space, p, q)) for p in points])
