"""Finite snapshots of (space, basepoint, group) triples, verification and
search of equivariant approximations, algebraic-convergence gaps, and the
end-to-end continuity experiment for the critical exponent.

A snapshot discretizes the data quantified over by an equivariant
eps-approximation: a net of the 1/eps-ball, the elements displacing the
basepoint by strictly less than 1/eps, and the exact action table between
them. Verification recomputes every defect from scratch; search only ever
returns witnesses that re-verify.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InsufficientDataError, MalformedWitnessError
from .isometries import apply_isometry
from .space import TREE, TreePoint, distance, pairwise_distances, tree_depth
from .words import compose_words, letters, reduced_words_upto

#: eps rungs tried by the continuity experiment, largest first; the last
#: rung is the floor imposed by the resolution <= eps/4 precondition
EPS_LADDER = (4.0, 2.0, 1.0, 0.75, 0.5, 0.4375, 0.375, 0.3125, 0.28125, 0.25)


@dataclass(frozen=True)
class SnapElement:
    word: str
    displacement: float


class TripleSnapshot:
    """Finite net + element set + action table of a triple at scale eps.

    points: net of the closed 1/eps-ball around the basepoint (tree: all
    offset-grid points; plane: the orbit sample itself). elements: group
    elements with displacement strictly below 1/eps. action_table[g][p] is
    the index of the image net point, or -1 when the image leaves the ball
    (or, on the plane, the sampled net).
    """

    def __init__(self, action, epsilon, resolution, covering_radius, points, elements, table, base_index, point_words=None):
        self.action = action
        self.space = action.space
        self.epsilon = float(epsilon)
        self.resolution = resolution
        self.covering_radius = float(covering_radius)
        self.points = points
        self.elements = elements
        self.action_table = table
        self.base_index = base_index
        self.point_words = point_words
        self._dist = None

    @property
    def radius(self):
        return 1.0 / self.epsilon

    def distances(self):
        if self._dist is None:
            self._dist = pairwise_distances(self.space, self.points)
        return self._dist


def _tree_net(space, R, res_frac):
    """All offset-grid points of the closed R-ball of the tree.

    Grid spacing is edge_length * res_frac along every edge; vertices are
    included. Exact rational arithmetic throughout.
    """
    L = space.edge_length
    res = L * res_frac
    steps = int(1 / res_frac)
    R = Fraction(R) if not isinstance(R, Fraction) else R
    rank = space.rank
    alpha = letters(rank)
    max_depth = int(R / L)
    pts = []
    for w in reduced_words_upto(rank, max_depth):
        depth = len(w) * L
        pts.append(TreePoint(w))
        for d in alpha:
            if w and d == w[-1].swapcase():
                continue
            for k in range(1, steps):
                off = k * res
                if depth + off > R:
                    break
                pts.append(TreePoint(w, off, d))
    return pts, res


def snapshot(action, ball, epsilon, resolution=None):
    """Discretize (space, basepoint, group) at scale eps from an orbit ball.

    resolution defaults to edge/16 on trees with edge <= 1 and edge/24
    otherwise; it must satisfy resolution <= eps/4 so the discretization
    error stays subordinate to eps. The ball must reach radius 1/eps.
    """
    R = 1.0 / float(epsilon)
    if float(ball.radius) < R - 1e-12:
        raise InsufficientDataError(
            "ball radius %s below snapshot radius %.6g" % (ball.radius, R)
        )
    space = action.space
    if space.kind == TREE:
        L = space.edge_length
        if resolution is None:
            res_frac = Fraction(1, 16) if L <= 1 else Fraction(1, 24)
        else:
            res_frac = Fraction(resolution) / L
        res = L * res_frac
        if float(res) > float(epsilon) / 4.0 + 1e-12:
            raise ValueError("resolution %s too coarse for eps=%s" % (res, epsilon))
        Rfrac = _max_grid_radius(R, res)
        points, res = _tree_net(space, Rfrac, res_frac)
        index = {(p.word, p.offset, p.direction): i for i, p in enumerate(points)}
        cov = float(res) / 2.0
        elements = [
            SnapElement(e.word, float(e.displacement))
            for e in ball.entries
            if float(e.displacement) < R - 1e-12
        ]
        table = np.full((len(elements), len(points)), -1, dtype=np.int64)
        for gi, el in enumerate(elements):
            iso = action.isometry(el.word)
            for pi, p in enumerate(points):
                q = apply_isometry(space, iso, p)
                if tree_depth(space, q) > Rfrac:
                    continue
                table[gi, pi] = index[(q.word, q.offset, q.direction)]
        base_index = index[("", Fraction(0), None)]
    else:
        if resolution is None:
            resolution = float(epsilon) / 4.0
        if float(resolution) > float(epsilon) / 4.0 + 1e-12:
            raise ValueError("resolution too coarse for eps=%s" % epsilon)
        sel = [e for e in ball.entries if float(e.displacement) <= R + 1e-9]
        points = [e.point for e in sel]
        words = {e.word: i for i, e in enumerate(sel)}
        elements = [
            SnapElement(e.word, float(e.displacement))
            for e in sel
            if float(e.displacement) < R - 1e-12
        ]
        table = np.full((len(elements), len(points)), -1, dtype=np.int64)
        for gi, el in enumerate(elements):
            for pi, e in enumerate(sel):
                w = compose_words(el.word, e.word)
                j = words.get(w, -1)
                table[gi, pi] = j
        # the net is the sampled orbit itself; discretization slack
        # relative to that sample is zero and is reported as such
        cov = 0.0
        res = float(resolution)
        base_index = words[""]
        return TripleSnapshot(
            action, epsilon, res, cov, points, elements, table, base_index,
            point_words=tuple(e.word for e in sel),
        )
    return TripleSnapshot(action, epsilon, res, cov, points, elements, table, base_index)


def _max_grid_radius(R, res):
    """Largest grid multiple of res not exceeding R (keeps the net closed
    under the exact tree arithmetic)."""
    k = int(Fraction(R) / res)
    return res * k


@dataclass(frozen=True)
class WitnessDefects:
    basepoint: float
    distortion: float
    surjectivity: float
    phi_equivariance: float
    psi_equivariance: float
    discretization: float

    def worst(self):
        return max(
            self.basepoint,
            self.distortion,
            self.surjectivity,
            self.phi_equivariance,
            self.psi_equivariance,
        )


@dataclass(frozen=True)
class ApproximationWitness:
    f: tuple
    phi: tuple
    psi: tuple
    epsilon: float
    defects: WitnessDefects = None


@dataclass(frozen=True)
class SearchFailure:
    reason: str
    defects: WitnessDefects


def _check_table(name, table, length, limit):
    if len(table) != length:
        raise MalformedWitnessError(
            "%s table has %d entries, expected %d" % (name, len(table), length)
        )
    for i, v in enumerate(table):
        if v is None or not (0 <= int(v) < limit):
            raise MalformedWitnessError("%s table entry %d is invalid: %r" % (name, i, v))


def verify_witness(A, B, w):
    """Recompute all five defect maxima of the witness and judge validity.

    Stored defects are never trusted. Surjectivity is checked against B's
    net with its covering radius added; the remaining conditions are
    evaluated on the nets exactly, with the combined covering radius of
    both nets reported separately as discretization slack. Valid iff every
    defect is strictly below w.epsilon.
    """
    _check_table("f", w.f, len(A.points), len(B.points))
    _check_table("phi", w.phi, len(A.elements), max(len(B.elements), 1))
    _check_table("psi", w.psi, len(B.elements), max(len(A.elements), 1))
    f = np.asarray(w.f, dtype=np.int64)
    DA = A.distances()
    DB = B.distances()
    base = float(DB[f[A.base_index], B.base_index])
    distortion = float(np.abs(DB[np.ix_(f, f)] - DA).max())
    surj = float(DB[f, :].min(axis=0).max()) + B.covering_radius
    phi_def = _equivariance_defect(A, B, f, w.phi, forward=True)
    psi_def = _equivariance_defect(A, B, f, w.psi, forward=False)
    defects = WitnessDefects(
        base, distortion, surj, phi_def, psi_def,
        A.covering_radius + B.covering_radius,
    )
    eps = float(w.epsilon)
    valid = defects.worst() < eps
    return valid, defects


def _apply_element(snap, el_idx, point):
    iso = snap.action.isometry(snap.elements[el_idx].word)
    return apply_isometry(snap.space, iso, point)


def _equivariance_defect(A, B, f, mapping, forward):
    """Forward: max d_B(f(g x), phi(g) f(x)) over g in Sigma(A), x with
    g x in the A-ball. Backward: max d_B(f(psi(g) x), g f(x)) over g in
    Sigma(B), x with psi(g) x in the A-ball."""
    DB = B.distances()
    worst = 0.0
    n_out = len(B.elements) if not forward else len(A.elements)
    for gi in range(n_out):
        ai = gi if forward else mapping[gi]
        bi = mapping[gi] if forward else gi
        row_a = A.action_table[ai]
        valid = row_a >= 0
        if not valid.any():
            continue
        xs = np.nonzero(valid)[0]
        lhs = f[row_a[xs]]
        rhs = B.action_table[bi][f[xs]]
        inside = rhs >= 0
        if inside.any():
            worst = max(worst, float(DB[lhs[inside], rhs[inside]].max()))
        for k in np.nonzero(~inside)[0]:
            x = xs[k]
            img = _apply_element(B, bi, B.points[f[x]])
            worst = max(worst, float(distance(B.space, B.points[lhs[k]], img)))
    return worst


def _word_index(snap):
    return {el.word: i for i, el in enumerate(snap.elements)}


def _match_element(word, index):
    """Index of the word in the element table, or of its longest prefix."""
    w = word
    while w not in index:
        w = w[:-1]
    return index[w]


def search_witness(A, B, epsilon, hints="auto"):
    """Build a candidate witness, verify it, and return it only if valid.

    For snapshots sharing word labels (tree vs rescaled tree, or members
    of a parametric family) the tables are built word-wise: f maps each
    point to the same-word point with the offset carried over on the
    offset grid, and phi/psi match element words (falling back to the
    longest available prefix for shell-straddling elements). Otherwise a
    greedy nearest-displacement matching is attempted. Failures return a
    SearchFailure carrying the best defect vector found.
    """
    if hints not in ("auto", "words", "greedy"):
        raise ValueError("unknown hint channel %r" % hints)
    same_kind = A.space.kind == B.space.kind
    use_words = hints == "words" or (hints == "auto" and same_kind)
    if use_words and A.space.kind == TREE:
        f = _tree_wordwise_points(A, B)
    elif use_words:
        f = _plane_wordwise_points(A, B)
    else:
        f = _greedy_points(A, B)
    if f is None:
        return SearchFailure(
            "no point correspondence found",
            WitnessDefects(math.inf, math.inf, math.inf, math.inf, math.inf, 0.0),
        )
    bw = _word_index(B)
    aw = _word_index(A)
    if use_words:
        phi = tuple(_match_element(el.word, bw) for el in A.elements)
        psi = tuple(_match_element(el.word, aw) for el in B.elements)
    else:
        phi = _greedy_elements(A, B)
        psi = _greedy_elements(B, A)
    w = ApproximationWitness(tuple(int(i) for i in f), phi, psi, float(epsilon))
    valid, defects = verify_witness(A, B, w)
    if valid:
        return ApproximationWitness(w.f, w.phi, w.psi, w.epsilon, defects)
    return SearchFailure("verification failed", defects)


def _tree_wordwise_points(A, B):
    scale = Fraction(B.space.edge_length) / Fraction(A.space.edge_length)
    index = {(p.word, p.offset, p.direction): i for i, p in enumerate(B.points)}
    vertex = {p.word: i for i, p in enumerate(B.points) if p.is_vertex}
    f = []
    for p in A.points:
        key = (p.word, p.offset * scale, p.direction)
        j = index.get(key)
        if j is None:
            j = vertex.get(p.word)
        while j is None:
            # deep A-point with no B-counterpart inside the ball: walk up
            wshort = p.word[:-1] if p.word else ""
            j = vertex.get(wshort)
            p = TreePoint(wshort)
        f.append(j)
    return f


def _plane_wordwise_points(A, B):
    # plane snapshot points carry the orbit word of the producing entry
    words_b = {w: i for i, w in enumerate(B.point_words)}
    f = []
    for w in A.point_words:
        ww = w
        while ww not in words_b:
            ww = ww[:-1]
        f.append(words_b[ww])
    return f


def _greedy_points(A, B):
    da = np.array([float(distance(A.space, p, A.points[A.base_index])) for p in A.points])
    db = np.array([float(distance(B.space, p, B.points[B.base_index])) for p in B.points])
    order_b = np.argsort(db, kind="stable")
    f = []
    for d in da:
        j = int(order_b[np.searchsorted(db[order_b], d).clip(0, len(order_b) - 1)])
        f.append(j)
    return f


def _greedy_elements(A, B):
    db = np.array([el.displacement for el in B.elements])
    out = []
    for el in A.elements:
        out.append(int(np.abs(db - el.displacement).argmin()))
    return tuple(out)


def algebraic_convergence_gap(space, gens_n, gens_limit, ball_radius, samples=200, seed=0):
    """Max over generators and sampled ball points of d(g_n y, g_limit y)."""
    if len(gens_n) != len(gens_limit):
        raise ValueError("generator lists must align index-wise")
    from .geometry_checks import _rand_point
    import random

    rng = random.Random(seed)
    pts = [space.basepoint] + [
        _rand_point(rng, space, float(ball_radius)) for _ in range(samples)
    ]
    gap = 0.0
    for g, h in zip(gens_n, gens_limit):
        for y in pts:
            gap = max(
                gap,
                float(
                    distance(
                        space,
                        apply_isometry(space, g, y),
                        apply_isometry(space, h, y),
                    )
                ),
            )
    return gap


# ---------------------------------------------------------------------------
# continuity experiment


@dataclass(frozen=True)
class ContinuityRow:
    param: float
    eps: float
    h_hat: float
    residual: float
    K: float


@dataclass(frozen=True)
class ContinuityReport:
    rows: tuple
    h_limit: float
    C: float
    passed: bool
    notes: str = ""

    def to_csv(self):
        lines = ["param,eps,h_hat,residual,K"]
        for r in self.rows:
            lines.append(
                "%.10g,%.10g,%.10g,%.10g,%.10g" % (r.param, r.eps, r.h_hat, r.residual, r.K)
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ContinuityConfig:
    ball_T: float = 10.0
    window: tuple = (4.0, 10.0)
    eps_ladder: tuple = EPS_LADDER
    h_tolerance: float = 0.01
    K_bound: float = 4.0
    param_scale: object = None  # callable param -> factor on ball_T/window
    #: optional (lo_count, hi_count): the window is taken between the
    #: displacements at these cumulative counts, so every family member is
    #: estimated over literally the same group elements (smooth in the
    #: family parameter, which absolute windows are not)
    rank_window: tuple = None
    h_target: object = None  # optional callable param -> closed-form exponent
    h_reference: object = None  # optional callable param -> h for the K audit


def _member_counts(action, ball):
    """Counting-function samples (T, N(T)) suitable for the estimators."""
    shells = [(float(t), n) for t, n in ball.count_by_shell if n > 0]
    if action.space.kind == TREE:
        return shells
    disps = sorted(float(e.displacement) for e in ball.entries)
    out = []
    for i, d in enumerate(disps):
        if out and d - out[-1][0] < 1e-9:
            out[-1] = (out[-1][0], i + 1)
        else:
            out.append((d, i + 1))
    return out


def run_continuity_experiment(make_member, schedule, limit_param, config=ContinuityConfig()):
    """Continuity of the critical exponent along a parametric family.

    make_member(param) must return a certified GroupAction; a member that
    fails certification aborts the experiment with the parameter named.
    Each row reports the smallest ladder eps at which search_witness finds
    a verified witness against the limit snapshot, the member's exponent
    estimate, its residual against the closed-form target (when one is
    supplied; otherwise against the limit estimate), and the measured
    equidistribution constant. The verdict needs |h_n - h_limit| <=
    tolerance + C * eps_n for the reported C, and K uniformly bounded.
    """
    from .entropy import equidistribution_constant, estimate_critical_exponent
    from .errors import CertificationError
    from .orbits import enumerate_orbit_ball

    def member_pipeline(param):
        try:
            action = make_member(param)
        except CertificationError as exc:
            raise CertificationError(
                "family member %r failed certification: %s" % (param, exc)
            ) from exc
        scale = float(config.param_scale(param)) if config.param_scale else 1.0
        T = config.ball_T * scale
        ball = enumerate_orbit_ball(action, _exact_T(action, T))
        counts = _member_counts(action, ball)
        if config.rank_window:
            # two-point estimate between fixed cumulative-count quantiles:
            # every member is measured on literally the same group
            # elements, so the estimate varies smoothly in the parameter
            # (distinct-displacement collapse does not, near degeneracies)
            lo_n, hi_n = config.rank_window
            d = sorted(float(e.displacement) for e in ball.entries)
            if len(d) < hi_n:
                raise InsufficientDataError(
                    "ball too shallow for rank window %r" % (config.rank_window,)
                )
            h = math.log(hi_n / lo_n) / (d[hi_n - 1] - d[lo_n - 1])
            mid = int(round(math.sqrt(lo_n * hi_n)))
            h_mid = math.log(mid / lo_n) / (d[mid - 1] - d[lo_n - 1])
            from .entropy import EntropyEstimate

            win = (d[lo_n - 1], d[hi_n - 1])
            est = EntropyEstimate(
                h, win, "rank-quantile", abs(h - h_mid),
                ((d[lo_n - 1], lo_n), (d[hi_n - 1], hi_n)),
            )
        else:
            win = (config.window[0] * scale, config.window[1] * scale)
            est = estimate_critical_exponent(counts, win)
        href = config.h_reference(param) if config.h_reference else est.h_hat
        K = equidistribution_constant(
            [(t, n) for t, n in counts if win[0] - 1e-9 <= t <= win[1] + 1e-9], href
        ).K_measured
        return action, ball, est, K

    limit_action, limit_ball, limit_est, limit_K = member_pipeline(limit_param)
    limit_snaps = {}

    def make_snapshot(action, ball, eps):
        # word-wise matching needs the same offset-grid fraction on every
        # member, so the tree resolution is pinned to edge/24 throughout
        if action.space.kind == TREE:
            return snapshot(action, ball, eps, resolution=action.space.edge_length / 24)
        return snapshot(action, ball, eps)

    def limit_snapshot(eps):
        if eps not in limit_snaps:
            limit_snaps[eps] = make_snapshot(limit_action, limit_ball, eps)
        return limit_snaps[eps]

    rows = []
    for param in schedule:
        action, ball, est, K = member_pipeline(param)
        achieved = math.inf
        for eps in sorted(config.eps_ladder, reverse=True):
            if 1.0 / eps > float(ball.radius) + 1e-9:
                continue
            # every rung is tried: a shell-straddling radius can fail while
            # smaller rungs still succeed
            got = search_witness(make_snapshot(action, ball, eps), limit_snapshot(eps), eps)
            if isinstance(got, ApproximationWitness):
                achieved = eps
        target = config.h_target(param) if config.h_target else limit_est.h_hat
        rows.append(
            ContinuityRow(float(param), achieved, est.h_hat, abs(est.h_hat - target), K)
        )
    C = 0.0
    for r in rows:
        drift = abs(r.h_hat - limit_est.h_hat)
        if drift > config.h_tolerance and math.isfinite(r.eps):
            C = max(C, (drift - config.h_tolerance) / r.eps)
    passed = all(math.isfinite(r.eps) for r in rows)
    passed = passed and all(r.K <= config.K_bound + 1e-9 for r in rows)
    passed = passed and all(
        rows[i].eps >= rows[i + 1].eps - 1e-12 for i in range(len(rows) - 1)
    )
    for r in rows:
        drift = abs(r.h_hat - limit_est.h_hat)
        passed = passed and drift <= config.h_tolerance + C * r.eps + 1e-12
    notes = "limit K=%.6g" % limit_K
    return ContinuityReport(tuple(rows), limit_est.h_hat, C, passed, notes)


def _exact_T(action, T):
    """Keep tree ball radii on the exact rational grid when possible."""
    if action.space.kind == TREE:
        L = action.space.edge_length
        return L * int(Fraction(T) / L)
    return T
