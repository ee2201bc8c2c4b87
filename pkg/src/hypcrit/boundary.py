"""Boundary approximants, visual metrics, shadows, limit sets and the
Patterson-Sullivan proxy measures, with Ahlfors-regularity and
quasiconformality audits.

Honesty conventions: tree boundary data is exact (words and rational
depths) and comparisons below the recorded truncation depth are refused,
never guessed; plane boundary products carry explicit error brackets and
every set-membership answer near a threshold is three-valued
(True / False / None for "unknown").
"""

import math
import random
from dataclasses import dataclass

from .errors import DepthError, InsufficientDataError, MeasureError
from .space import (
    PLANE,
    TREE,
    PlanePoint,
    Ray,
    TreePoint,
    _tree_separation,
    busemann,
    distance,
    geodesic_point,
    gromov_product,
    plane_line_point,
    ray_point,
    tree_depth,
)
from .words import compose_words, invert_word, word_key


@dataclass(frozen=True)
class BoundaryApprox:
    """A truncated boundary point.

    Tree: ``word`` is the known prefix of the boundary word, ``depth`` its
    length. Plane: ``coord`` is the ideal endpoint (a real number or
    math.inf) and ``word`` records the group element that produced it;
    ``depth`` is the displacement of that element (the scale down to which
    the approximant is trusted).
    """

    kind: str
    word: str
    depth: float
    coord: float = None

    def __post_init__(self):
        if self.kind == TREE and self.depth < 1:
            raise ValueError("tree boundary approximant needs depth >= 1")


def tree_boundary(word):
    return BoundaryApprox(TREE, word, len(word))


def plane_boundary(coord, word="", depth=8.0):
    return BoundaryApprox(PLANE, word, depth, coord)


def _lcp_len(u, v):
    n = min(len(u), len(v))
    i = 0
    while i < n and u[i] == v[i]:
        i += 1
    return i


def boundary_ray(action, z):
    """Ray from the basepoint toward the boundary approximant."""
    if action.space.kind == TREE:
        return Ray(action.basepoint, z.word)
    return Ray(action.basepoint, z.coord)


def boundary_gromov_product(action, z, zp):
    """(z, z')_x extended to the boundary, with an error bound.

    Tree: exact common-prefix length times the edge length, error 0;
    refused when the prefix runs into a truncation (the true product could
    then exceed what the approximants can certify). Plane: Gromov product
    of deep proxy points on the rays toward the two endpoints; the error
    bound is the hyperbolicity constant capped by the measured two-depth
    stability gap (brackets therefore shrink as approximants deepen).
    """
    space = action.space
    if space.kind == TREE:
        k = _lcp_len(z.word, zp.word)
        if k >= min(z.depth, zp.depth):
            raise DepthError(
                "common prefix reaches truncation depth %d; deepen the approximants"
                % k
            )
        return k * space.edge_length, space.edge_length * 0
    if z.coord == zp.coord:
        raise DepthError("identical plane endpoints: product is unbounded")
    t = max(min(z.depth, zp.depth), 4.0)
    base = action.basepoint
    r1, r2 = boundary_ray(action, z), boundary_ray(action, zp)

    def product_at(tt):
        p1 = ray_point(space, r1, tt)
        p2 = ray_point(space, r2, tt)
        return float(gromov_product(space, base, p1, p2))

    value = product_at(t)
    gap = abs(value - product_at(max(t - 2.0, 1.0)))
    err = min(action.declared_delta if action.declared_delta > 0 else math.inf,
              gap + 1e-6)
    return value, err


@dataclass(frozen=True)
class VisualParams:
    a: float
    center: object = None  # defaults to the action basepoint
    V: float = None  # defaults to e^{a*delta}


def visual_distance(params, action, z, zp):
    """Certified bracket for the visual distance of two boundary points.

    Tree (delta = 0): e^{-a (z,z')_x} itself is an ultrametric, so lower =
    upper. Plane: the bracket [(1/V) e^{-a (p + err)}, V e^{-a p}] with
    V = e^{a delta} from the standard-metric comparison, valid only while
    3 - 2 e^{a delta} > 0.
    """
    a = params.a
    delta = action.declared_delta
    if a <= 0:
        raise ValueError("visual parameter a must be positive")
    if delta > 0 and a >= math.log(2.0) / (2.0 * delta):
        raise ValueError("a outside the admissible range (0, log2/(2 delta))")
    if action.space.kind == TREE:
        p, _ = boundary_gromov_product(action, z, zp)
        v = math.exp(-a * float(p))
        return v, v
    V = params.V if params.V is not None else math.exp(a * delta)
    if 3.0 - 2.0 * math.exp(a * delta) <= 0:
        raise ValueError("standard-metric constant 3 - 2 e^{a delta} not positive")
    p, err = boundary_gromov_product(action, z, zp)
    return math.exp(-a * (p + err)) / V, V * math.exp(-a * p)


def generalized_ball_contains(action, z, rho, zp):
    """z' in B(z, rho) = {(z, z')_x > log(1/rho)}; three-valued on the plane.

    Returns True, False, or None when the product's error bracket straddles
    the threshold.
    """
    if not (0 < rho <= 1):
        raise ValueError("radius must be in (0, 1]")
    thr = math.log(1.0 / rho)
    if action.space.kind == TREE:
        k = _lcp_len(z.word, zp.word)
        L = float(action.space.edge_length)
        if k * L > thr:
            return True  # certified even at truncation: product >= k*L
        if k < min(z.depth, zp.depth):
            return False  # product exactly k*L <= threshold
        raise DepthError("membership undecidable at truncation depth %d" % k)
    p, err = boundary_gromov_product(action, z, zp)
    if p - err > thr:
        return True
    if p + err <= thr:
        return False
    return None


def shadow_contains(action, y, r, z):
    """Whether the ray from the basepoint toward z meets the open ball B(y, r).

    Rays are unique in both models; the minimum ray-to-point distance is
    computed in closed form.
    """
    if r <= 0:
        raise ValueError("shadow radius must be positive")
    space = action.space
    if space.kind == TREE:
        proxy = TreePoint(z.word)
        sep = _tree_separation(space, y, proxy)
        if sep >= tree_depth(space, proxy) and tree_depth(space, y) > sep:
            raise DepthError("shadow test needs a deeper boundary word")
        return float(tree_depth(space, y) - sep) < r
    # conjugate the full line through basepoint and endpoint to the axis;
    # the ray is the upper half starting at the basepoint image
    from .space import _mobius_apply, _mobius_to_axis, plane_distance

    base = action.basepoint.z
    e = z.coord
    if e == math.inf:
        u = base.real
    elif abs(base.real - e) <= 1e-14 * (1.0 + abs(e)):
        u = math.inf
    else:
        c = (abs(base) ** 2 - e * e) / (2.0 * (base.real - e))
        u = 2.0 * c - e
    M = _mobius_to_axis(u, e)
    ym = _mobius_apply(M, y.z)
    a0 = abs(_mobius_apply(M, base))
    if abs(ym) >= a0:
        dmin = math.asinh(abs(ym.real) / ym.imag)
    else:
        dmin = plane_distance(ym, complex(0.0, a0))
    return dmin < r


@dataclass(frozen=True)
class ShadowBallReport:
    passed: bool
    ball_in_shadow: tuple  # (tested, violations)
    shadow_in_ball: tuple  # (tested, violations, undecided)
    visual_comparison: tuple  # (tested, violations, undecided)
    pack_cov_rows: tuple  # ((T, pack_star, cov, ok), ...)


def check_shadow_ball_lemma(action, samples, ts, params=None, seed=0, pair_count=200):
    """Audit of the shadow/ball comparison package on boundary samples.

    Four sub-checks, all in the honest direction of their inequalities:
    (1) every certified member of B(z, e^{-T}) lies in the shadow of the
    ball of radius 7 delta around the point at distance T on the ray to z;
    (2) every sampled member of a shadow Shad(xi_T, r) lies in
    B(z, e^{-T + r}) (undecidable memberships are counted, not failed);
    (3) the visual-distance bracket sandwiches generalized balls with the
    constant V = e^{a delta}; (4) Pack*(scale e^{-T + delta}) <=
    Cov(scale e^{-T}), exactly via cylinder counts on the tree and via a
    conservative packing lower bound against a greedy covering upper bound
    on the plane.
    """
    rng = random.Random(seed)
    space = action.space
    delta = action.declared_delta
    r_shadow = 7.0 * delta if delta > 0 else 1e-9
    r_out = max(1.0, r_shadow)
    bis = [0, 0]
    sib = [0, 0, 0]
    vis = [0, 0, 0]
    if params is None:
        a = 0.2 / delta if delta > 0 else 1.0
        params = VisualParams(a)
    V = params.V if params.V is not None else math.exp(params.a * delta)
    for _ in range(pair_count):
        z, zp = rng.sample(samples, 2)
        try:
            p, err = boundary_gromov_product(action, z, zp)
        except DepthError:
            continue
        for T in ts:
            try:
                xi = ray_point(space, boundary_ray(action, z), T)
            except DepthError:
                continue
            if p - err > T + 1e-9:
                bis[0] += 1
                if not shadow_contains(action, xi, r_shadow, zp):
                    bis[1] += 1
            if shadow_contains(action, xi, r_out, zp):
                rho = min(math.exp(-T + r_out), 1.0)
                try:
                    m = generalized_ball_contains(action, z, rho, zp)
                except DepthError:
                    m = None
                sib[0] += 1
                if m is None:
                    sib[2] += 1
                elif not m:
                    sib[1] += 1
            # visual bracket against the generalized ball at radius e^{-T}
            rho = math.exp(-T)
            lo_d, hi_d = visual_distance(params, action, z, zp)
            try:
                m = generalized_ball_contains(action, z, rho, zp)
            except DepthError:
                m = None
            vis[0] += 1
            if hi_d < rho**params.a / V - 1e-12:
                if m is False:
                    vis[1] += 1
                elif m is None:
                    vis[2] += 1
            if m is True and lo_d > V * rho**params.a + 1e-12:
                vis[1] += 1
    rows = []
    if space.kind == TREE:
        k = action.rank
        L = float(space.edge_length)
        for T in ts:
            m_cov = int(math.floor(T / L + 1e-9)) + 1
            cov = 2 * k * (2 * k - 1) ** (m_cov - 1)
            m_pack = int(math.floor((T - delta) / L + 1e-9)) + 1
            pack = 2 * k * (2 * k - 1) ** (m_pack - 1)
            rows.append((T, pack, cov, pack <= cov))
    else:
        pts = samples[: min(len(samples), 20)]
        for T in ts:
            chosen = []
            for i, z in enumerate(pts):
                ok = True
                for j in chosen:
                    try:
                        p, err = boundary_gromov_product(action, z, pts[j])
                    except DepthError:
                        ok = False
                        break
                    if p + err > T - 2.0 * delta:
                        ok = False
                        break
                if ok:
                    chosen.append(i)
            pack = len(chosen)
            rho = math.exp(-T)
            covered = [False] * len(pts)
            cov = 0
            for i, z in enumerate(pts):
                if covered[i]:
                    continue
                cov += 1
                covered[i] = True
                for j in range(len(pts)):
                    if covered[j]:
                        continue
                    try:
                        if generalized_ball_contains(action, z, rho, pts[j]) is True:
                            covered[j] = True
                    except DepthError:
                        pass
            rows.append((T, pack, cov, pack <= cov))
    passed = bis[1] == 0 and sib[1] == 0 and vis[1] == 0 and all(r[3] for r in rows)
    return ShadowBallReport(passed, tuple(bis), tuple(sib), tuple(vis), tuple(rows))


# ---------------------------------------------------------------------------
# limit set and hull sampling


def limit_set_sample(action, ball, min_displacement):
    """Boundary approximants accumulated by the orbit.

    Tree: deep entry words read as truncated boundary words. Plane:
    attracting fixed points of the entries' isometries (hyperbolic words
    only), tagged with the producing word, deduplicated at 1e-9.
    """
    if float(ball.radius) < float(min_displacement):
        raise InsufficientDataError("ball shallower than min_displacement")
    out = []
    if action.space.kind == TREE:
        for e in ball.entries:
            if e.word and float(e.displacement) >= float(min_displacement):
                out.append(tree_boundary(e.word))
        if not out:
            raise InsufficientDataError("no entries deep enough")
        return out
    from .isometries import _fixed_points

    seen = set()
    for e in ball.entries:
        if not e.word or float(e.displacement) < float(min_displacement):
            continue
        iso = action.isometry(e.word)
        if abs(iso.trace) <= 2.0 + 1e-12:
            continue  # not hyperbolic; cannot contribute a fixed direction
        _, att = _fixed_points(iso)
        key = "inf" if att == math.inf else round(att / 1e-9)
        if key in seen:
            continue
        seen.add(key)
        out.append(plane_boundary(att, e.word, float(e.displacement)))
    if not out:
        raise InsufficientDataError("no entries deep enough")
    return out


def qc_hull_sample(action, limit_samples, pair_count, seed=0, points_per_pair=8, max_radius=10.0):
    """Points along geodesic lines joining random pairs of limit points."""
    if len(limit_samples) < 2:
        raise ValueError("need at least 2 limit points")
    rng = random.Random(seed)
    space = action.space
    out = []
    for _ in range(pair_count):
        z1, z2 = rng.sample(limit_samples, 2)
        if space.kind == TREE:
            p1, p2 = TreePoint(z1.word), TreePoint(z2.word)
            d = distance(space, p1, p2)
            if d == 0:
                continue
            steps = min(points_per_pair, int(d / space.edge_length) + 1)
            for i in range(steps + 1):
                out.append(geodesic_point(space, p1, p2, d * i / steps))
        else:
            if z1.coord == z2.coord:
                continue
            for i in range(points_per_pair):
                t = -max_radius + 2.0 * max_radius * (i + 0.5) / points_per_pair
                out.append(plane_line_point(z1.coord, z2.coord, action.basepoint, t))
    return out


# ---------------------------------------------------------------------------
# Patterson-Sullivan proxy measures


@dataclass(frozen=True)
class Atom:
    word: str
    point: object
    displacement: float
    weight: float
    boundary: object = None  # BoundaryApprox when projected


@dataclass(frozen=True)
class AtomicMeasure:
    atoms: tuple
    s: float
    truncation_T: float

    @property
    def boundary_atoms(self):
        return [a for a in self.atoms if a.boundary is not None]


def patterson_sullivan_atoms(action, ball, s):
    """Normalized e^{-s d(x, gx)}-weighted orbit Dirac masses.

    Requires s strictly above a rough growth estimate of the ball (below it
    the truncated sum is not a stable proxy for the limit measure). Atoms
    at displacement >= (2/3) of the ball radius also carry a boundary
    projection for reporting boundary masses.
    """
    if s <= 0:
        raise MeasureError("s must be positive")
    shells = [(t, n) for t, n in ball.count_by_shell if n > 0]
    if len(shells) >= 3 and shells[-1][1] > shells[-2][1] > 1:
        h_rough = (math.log(shells[-1][1]) - math.log(shells[-2][1])) / (
            shells[-1][0] - shells[-2][0]
        )
    else:
        h_rough = 0.0
    if s <= h_rough:
        raise MeasureError(
            "s = %.4g is not above the rough growth rate %.4g; the truncated "
            "sum is unstable (the limit construction sends s down to the "
            "critical exponent along a sequence, always from above)" % (s, h_rough)
        )
    total = sum(math.exp(-s * float(e.displacement)) for e in ball.entries)
    thresh = 2.0 * float(ball.radius) / 3.0
    atoms = []
    tree = action.space.kind == TREE
    if not tree:
        from .isometries import _fixed_points

    for e in ball.entries:
        w = math.exp(-s * float(e.displacement)) / total
        b = None
        if e.word and float(e.displacement) >= thresh - 1e-12:
            if tree:
                b = tree_boundary(e.word)
            else:
                iso = action.isometry(e.word)
                if abs(iso.trace) > 2.0 + 1e-12:
                    _, att = _fixed_points(iso)
                    b = plane_boundary(att, e.word, float(e.displacement))
        atoms.append(Atom(e.word, e.point, float(e.displacement), w, b))
    return AtomicMeasure(tuple(atoms), s, float(ball.radius))


def ball_mass(action, measure, z, rho):
    """Boundary mass of the generalized ball B(z, rho).

    Conditional on atoms that resolve the scale: an atom trusted down to
    scale e^{-depth} cannot locate any ball of radius rho < e^{-depth}, so
    at scale rho the population is first restricted to atoms with
    depth >= log(1/rho) and renormalized there; remaining per-ball
    undecidable memberships are also dropped from the denominator. Returns
    (mass, decided_fraction) or (None, 0.0) when nothing is decidable.
    """
    thr = math.log(1.0 / rho)
    scale = (
        float(action.space.edge_length) if action.space.kind == TREE else 1.0
    )
    num = den = 0.0
    total = 0.0
    for a in measure.boundary_atoms:
        total += a.weight
        if a.boundary.depth * scale < thr - 1e-12:
            continue
        try:
            m = generalized_ball_contains(action, z, rho, a.boundary)
        except DepthError:
            m = None
        if m is None:
            continue
        den += a.weight
        if m:
            num += a.weight
    if den == 0.0:
        return None, 0.0
    return num / den, den / total if total else 0.0


def shadow_mass(action, measure, y, r):
    """Boundary mass of the shadow of B(y, r) seen from the basepoint."""
    num = den = 0.0
    for a in measure.boundary_atoms:
        try:
            m = shadow_contains(action, y, r, a.boundary)
        except DepthError:
            continue
        den += a.weight
        if m:
            num += a.weight
    if den == 0.0:
        return None
    return num / den


# ---------------------------------------------------------------------------
# audits


@dataclass(frozen=True)
class AhlforsReport:
    A_lower: float
    A_upper: float
    step1_bound: float
    step1_passed: bool
    shadow_Q: float
    shadow_R0: float
    samples: int
    skipped: int

    @property
    def passed(self):
        return self.step1_passed


def check_ahlfors_regularity(action, measure, h, centers, scales, shadow_samples=25):
    """Ahlfors-regularity audit of the boundary measure.

    For sampled (center z, radius rho) the ratio mu(B(z, rho)) / rho^h is
    recorded; A_upper must respect the explicit one-sided bound
    e^{h (55 delta + 3 D)}. The shadow lower bound at radius
    R0 = log2/h + 55 delta + 3 D + 5 delta is checked with Q as a measured
    free parameter: the smallest Q making every sampled inequality
    mu(Shad_x(gx, R0)) >= (1/(2Q)) e^{-h d(x, gx)} hold is reported.
    """
    delta, D = action.declared_delta, action.declared_codiameter
    A_upper = 0.0
    A_lower = math.inf
    used = skipped = 0
    for z in centers:
        for rho in scales:
            mass, _ = ball_mass(action, measure, z, rho)
            if mass is None:
                skipped += 1
                continue
            ratio = mass / rho**h
            used += 1
            A_upper = max(A_upper, ratio)
            if mass > 0:
                A_lower = min(A_lower, ratio)
    if used == 0:
        raise InsufficientDataError("no decidable (center, scale) samples")
    step1 = math.exp(h * (55.0 * delta + 3.0 * D))
    R0 = math.log(2.0) / h + 55.0 * delta + 3.0 * D + 5.0 * delta
    Q = 1.0
    deep = [a for a in measure.boundary_atoms if a.word]
    for a in deep[:: max(1, len(deep) // shadow_samples)]:
        m = shadow_mass(action, measure, a.point, R0)
        if not m:
            skipped += 1
            continue
        Q = max(Q, math.exp(-h * a.displacement) / (2.0 * m))
    return AhlforsReport(
        A_lower, A_upper, step1, A_upper <= step1 + 1e-9, Q, R0, used, skipped
    )


@dataclass(frozen=True)
class QuasiconformalityReport:
    Q: float
    cells_used: int
    cells_skipped: int
    g_word: str


def _pull_back_boundary(action, g_word, z):
    """g^{-1} z as a boundary approximant."""
    if action.space.kind == TREE:
        w = compose_words(invert_word(g_word), z.word)
        if len(w) < 1:
            raise DepthError("pullback cancels the whole approximant")
        return tree_boundary(w)
    iso = action.isometry(g_word).inverse()
    return plane_boundary(iso.boundary_apply(z.coord), z.word, z.depth)


def check_quasiconformality(action, measure, h, g_word, cells):
    """Measured quasiconformality constant of the boundary measure.

    cells: list of (z, rho) boundary balls. For each cell C the mass ratio
    mu(g^{-1} C) / mu(C) is compared against the conformal factor
    e^{h (B_z(x,x) - B_z(x,gx))} = e^{-h B_z(x, gx)}; the smallest Q
    covering all decidable nonzero cells is returned (Q is an output of the
    audit, never an assumed theoretical value). Zero-mass or undecidable
    cells are skipped and counted.
    """
    space = action.space
    gx = action.orbit_point(g_word)
    Q = 1.0
    used = skipped = 0
    for z, rho in cells:
        m, _ = ball_mass(action, measure, z, rho)
        if space.kind == TREE:
            try:
                zpull = _pull_back_boundary(action, g_word, z)
            except DepthError:
                skipped += 1
                continue
            mpull, _ = ball_mass(action, measure, zpull, rho_pullback(action, z, zpull, rho))
        else:
            mpull = _plane_pullback_mass(action, measure, g_word, z, rho)
        if not m or not mpull:
            skipped += 1
            continue
        # Busemann value toward the cell center
        if space.kind == TREE:
            deep_word = z.word + z.word[-1] * 8
            horizon = (len(deep_word) - 1) * space.edge_length
        else:
            deep_word = None
            horizon = 30.0
        ray = (
            Ray(action.basepoint, deep_word)
            if space.kind == TREE
            else Ray(action.basepoint, z.coord)
        )
        bus, _ = busemann(space, ray, gx, horizon)
        factor = math.exp(-h * float(bus))
        ratio = mpull / m
        Q = max(Q, ratio / factor, factor / ratio)
        used += 1
    if used == 0:
        raise InsufficientDataError("no usable cells for the quasiconformality audit")
    return QuasiconformalityReport(Q, used, skipped, g_word)


def rho_pullback(action, z, zpull, rho):
    """Radius making the pulled-back tree cell exactly the image cylinder."""
    L = float(action.space.edge_length)
    shift = (len(zpull.word) - len(z.word)) * L
    return min(rho * math.exp(-shift), 1.0)


def _plane_pullback_mass(action, measure, g_word, z, rho):
    """mu(g^{-1} B(z, rho)) on the plane: push each atom by g and test."""
    iso = action.isometry(g_word)
    num = den = 0.0
    for a in measure.boundary_atoms:
        b = a.boundary
        pushed = plane_boundary(iso.boundary_apply(b.coord), b.word, b.depth)
        try:
            m = generalized_ball_contains(action, z, rho, pushed)
        except DepthError:
            m = None
        if m is None:
            continue
        den += a.weight
        if m:
            num += a.weight
    if den == 0.0:
        return None
    return num / den


def tree_cylinder_cells(action, depth, tiny=1e-9):
    """All depth-n cylinders as (center approximant, radius) cells."""
    from .words import reduced_words_of_length

    L = float(action.space.edge_length)
    rho = math.exp(-(depth * L - tiny))
    return [
        (tree_boundary(w), rho) for w in reduced_words_of_length(action.rank, depth)
    ]


def cylinder_scale(action, depth, tiny=1e-9):
    """Radius whose generalized ball is exactly the depth-n cylinder."""
    return math.exp(-(depth * float(action.space.edge_length) - tiny))
