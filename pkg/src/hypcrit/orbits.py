"""Group actions and pruned breadth-first orbit-ball enumeration.

The enumeration core: given an action with a certified linear lower bound
d(x, gx) >= c*|g| - c' on displacements, enumerate all distinct orbit
points within radius T, deduplicated, with deterministic output order
(canonical word order) regardless of the worker count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CertificationError, InsufficientDataError, KindMismatchError
from .isometries import (
    IDENTITY_PLANE,
    PlaneIsometry,
    TreeIsometry,
    apply_isometry,
    compose,
)
from .space import PLANE, TREE, PlanePoint, TreePoint, distance, plane_distance
from .words import compose_words, invert_word, letters, word_key

#: hard cap on enumerated elements; hitting it aborts with a diagnosis
#: (a non-discrete action would otherwise loop)
ELEMENT_CAP = 2_000_000


@dataclass(frozen=True)
class PruneParams:
    """Linear displacement lower bound d(x, gx) >= c*|g| - c_prime."""

    c: float
    c_prime: float = 0.0


@dataclass(frozen=True, eq=False)
class GroupAction:
    """A finitely generated action on a model space.

    ``gen_map`` maps each alphabet letter (generator or inverse) to its
    isometry, so the generator list is closed under inverses by
    construction. ``declared_delta`` / ``declared_codiameter`` are the
    class constants the audits are run against; ``certificate`` carries
    ping-pong data for Schottky actions (None for tree actions, where
    freeness is structural).
    """

    space: object
    gen_map: dict
    declared_delta: float
    declared_codiameter: float
    certificate: object = None

    @property
    def basepoint(self):
        return self.space.basepoint

    @property
    def rank(self):
        return len(self.gen_map) // 2

    @property
    def alphabet(self):
        return letters(self.rank)

    def isometry(self, word):
        if self.space.kind == TREE:
            return TreeIsometry(word)
        g = IDENTITY_PLANE
        for c in word:
            g = compose(g, self.gen_map[c])
        return g

    def orbit_point(self, word):
        return apply_isometry(self.space, self.isometry(word), self.basepoint)

    def displacement(self, word):
        if self.space.kind == TREE:
            return len(word) * self.space.edge_length
        return distance(self.space, self.basepoint, self.orbit_point(word))


def tree_action(valence=4, edge_length=1, declared_delta=0.0, declared_codiameter=0.5):
    from .space import ModelSpace

    if valence % 2 != 0:
        raise ValueError("tree group actions need even valence")
    space = ModelSpace.tree(valence, edge_length)
    gen_map = {c: TreeIsometry(c) for c in letters(valence // 2)}
    return GroupAction(space, gen_map, declared_delta, declared_codiameter)


def schottky_action(desc, certificate, declared_delta=math.log(3.0), declared_codiameter=3.0):
    from .space import ModelSpace

    alph = letters(len(desc.generators))
    gen_map = {}
    for i, g in enumerate(desc.generators):
        gen_map[alph[2 * i]] = g
        gen_map[alph[2 * i + 1]] = g.inverse()
    return GroupAction(
        ModelSpace.plane(), gen_map, declared_delta, declared_codiameter, certificate
    )


@dataclass(frozen=True)
class OrbitEntry:
    word: str
    point: object
    displacement: object  # Fraction on trees, float on the plane


@dataclass(frozen=True)
class OrbitBall:
    radius: object
    entries: tuple  # sorted by canonical word order
    count_by_shell: tuple  # ((t, N(t)), ...) nondecreasing
    merge_radius: float
    merged_words: tuple = ()

    @property
    def count(self):
        return len(self.entries)

    def words(self):
        return [e.word for e in self.entries]


def default_prune(action):
    if action.space.kind == TREE:
        return PruneParams(float(action.space.edge_length), 0.0)
    if action.certificate is None:
        raise CertificationError("plane action has no ping-pong certificate")
    return PruneParams(action.certificate.per_letter_gain, 0.0)


def default_merge_radius(action):
    if action.space.kind == TREE:
        return 0.0  # exact dedup by (vertex word, offset)
    return min(1e-6, action.certificate.systole_bound / 10.0)


def enumerate_orbit_ball(action, T, merge_radius=None, prune=None, workers=1, shell_step=None):
    """All distinct orbit points within displacement T of the basepoint.

    Breadth-first over reduced words with the linear prune bound capping
    word length at (T + c')/c; deduplication is exact on trees and spatial-
    hash based (cell size merge_radius/sqrt(2), exact pairwise
    confirmation) on the plane. Output order is canonical word order, and
    is identical for every worker count: the frontier is expanded in sorted
    chunks whose results are concatenated in chunk order.
    """
    if T < 0:
        raise ValueError("ball radius must be nonnegative")
    if prune is None:
        prune = default_prune(action)
    if prune.c <= 0:
        raise CertificationError("prune bound must have c > 0 (termination)")
    if merge_radius is None:
        merge_radius = default_merge_radius(action)
    cert = action.certificate
    if cert is not None and merge_radius >= cert.systole_bound / 3.0:
        raise CertificationError(
            "merge_radius %.3g too large for certified systole %.3g"
            % (merge_radius, cert.systole_bound)
        )
    tree = action.space.kind == TREE
    alph = action.alphabet
    max_len = int(math.floor((float(T) + prune.c_prime) / prune.c + 1e-12))

    entries = []
    merged_words = []
    if tree:
        L = action.space.edge_length
        entries.append(OrbitEntry("", TreePoint(""), Fraction(0)))
        frontier = [""]

        def expand_words(chunk):
            out = []
            for w in chunk:
                last = w[-1] if w else None
                for c in alph:
                    if last is None or c != last.swapcase():
                        out.append(w + c)
            return out

        for k in range(1, max_len + 1):
            if k * L > T:
                break
            if workers > 1 and len(frontier) > 4 * workers:
                size = (len(frontier) + workers - 1) // workers
                chunks = [frontier[i : i + size] for i in range(0, len(frontier), size)]
                with ThreadPoolExecutor(max_workers=workers) as ex:
                    parts = list(ex.map(expand_words, chunks))
                children = [w for part in parts for w in part]
            else:
                children = expand_words(frontier)
            disp = k * L
            entries.extend(OrbitEntry(w, TreePoint(w), disp) for w in children)
            frontier = children
            if len(entries) > ELEMENT_CAP:
                raise CertificationError("element cap hit; action looks non-discrete")
    else:
        base = action.basepoint
        entries.append(OrbitEntry("", base, 0.0))
        cell = merge_radius / math.sqrt(2.0) if merge_radius > 0 else None
        grid = {}
        if cell:
            grid[(round(base.z.real / cell), round(base.z.imag / cell))] = [0]
        frontier = [("", IDENTITY_PLANE)]

        def expand_mats(chunk):
            out = []
            for w, g in chunk:
                last = w[-1] if w else None
                for c in alph:
                    if last is None or c != last.swapcase():
                        out.append((w + c, compose(g, action.gen_map[c])))
            return out

        for k in range(1, max_len + 1):
            if workers > 1 and len(frontier) > 4 * workers:
                size = (len(frontier) + workers - 1) // workers
                chunks = [frontier[i : i + size] for i in range(0, len(frontier), size)]
                with ThreadPoolExecutor(max_workers=workers) as ex:
                    parts = list(ex.map(expand_mats, chunks))
                children = [wg for part in parts for wg in part]
            else:
                children = expand_mats(frontier)
            next_frontier = []
            for w, g in children:
                p = apply_isometry(action.space, g, base)
                d = plane_distance(base.z, p.z)
                next_frontier.append((w, g))
                if d > float(T) + 1e-9:  # closed ball at the declared tolerance
                    continue
                merged = False
                if cell:
                    ci, cj = round(p.z.real / cell), round(p.z.imag / cell)
                    for key in (
                        (ci + di, cj + dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)
                    ):
                        for idx in grid.get(key, ()):
                            if plane_distance(entries[idx].point.z, p.z) < merge_radius:
                                merged = True
                                merged_words.append((w, entries[idx].word))
                                break
                        if merged:
                            break
                    if not merged:
                        grid.setdefault((ci, cj), []).append(len(entries))
                if not merged:
                    entries.append(OrbitEntry(w, p, d))
            frontier = next_frontier
            if len(entries) > ELEMENT_CAP:
                raise CertificationError("element cap hit; action looks non-discrete")

    entries.sort(key=lambda e: word_key(e.word))
    if shell_step is None:
        shell_step = float(action.space.edge_length) if tree else 1.0
    disps = sorted(float(e.displacement) for e in entries)
    shells = []
    t = 0.0
    Tf = float(T)
    while t <= Tf + 1e-12:
        n = _count_le(disps, t + 1e-12)
        shells.append((t, n))
        t += shell_step
    if not shells or abs(shells[-1][0] - Tf) > 1e-12:
        shells.append((Tf, len(entries)))
    return OrbitBall(T, tuple(entries), tuple(shells), merge_radius, tuple(merged_words))


def _count_le(sorted_vals, t):
    import bisect

    return bisect.bisect_right(sorted_vals, t)


def export_entries(ball):
    """Line-oriented export: word<TAB>displacement<TAB>coordinates."""
    lines = []
    for e in ball.entries:
        if isinstance(e.point, TreePoint):
            coords = "%s:%s:%s" % (e.point.word, e.point.offset, e.point.direction or "-")
        else:
            coords = "%.12g,%.12g" % (e.point.z.real, e.point.z.imag)
        lines.append("%s\t%.12g\t%s" % (e.word, float(e.displacement), coords))
    return "\n".join(lines) + "\n"


def export_shells_csv(ball):
    lines = ["t,count"]
    for t, n in ball.count_by_shell:
        lines.append("%.12g,%d" % (t, n))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# derived measurements


def sigma_R(action, ball, R):
    """Group elements displacing the basepoint by at most R.

    Refuses (never silently truncates) if the ball is too shallow to
    answer exactly.
    """
    if float(R) > float(ball.radius) + 1e-12:
        raise InsufficientDataError(
            "sigma_R needs radius %s but ball has %s" % (R, ball.radius)
        )
    return [action.isometry(e.word) for e in ball.entries if float(e.displacement) <= float(R) + 1e-12]


@dataclass(frozen=True)
class SystoleReport:
    min_displacement: object
    attaining_word: str
    elements_examined: int
    note: str = "upper bound on the true systole: deeper elements could be shorter"


def measure_systole(action, ball):
    nonid = [e for e in ball.entries if e.word]
    if not nonid:
        raise InsufficientDataError("ball has no nonidentity entries")
    best = min(nonid, key=lambda e: (float(e.displacement), word_key(e.word)))
    return SystoleReport(best.displacement, best.word, len(ball.entries))


def measure_codiameter(action, ball, hull_samples):
    """Max over hull samples of the distance to the nearest orbit point.

    An empirical lower estimate of the codiameter (denser hulls or deeper
    balls can only increase it).
    """
    if not hull_samples:
        raise ValueError("need at least one hull sample")
    from .space import distances_to_point

    pts = [e.point for e in ball.entries]
    worst = 0.0
    for q in hull_samples:
        d = distances_to_point(action.space, pts, q).min()
        worst = max(worst, float(d))
    return worst


@dataclass(frozen=True)
class CheckReport:
    passed: bool
    witness: object = None
    detail: dict = None


def _orbit_graph_neighbors(action, ball, threshold):
    """Adjacency (by index) of the orbit graph with edge threshold."""
    index = {e.word: i for i, e in enumerate(ball.entries)}
    steps = [
        e.word
        for e in ball.entries
        if e.word and float(e.displacement) <= float(threshold) + 1e-12
    ]
    adj = []
    for e in ball.entries:
        nbrs = []
        for s in steps:
            w2 = compose_words(e.word, s)
            j = index.get(w2)
            if j is not None:
                nbrs.append(j)
        adj.append(nbrs)
    return adj


def check_generating(action, ball, threshold=None):
    """Every ball entry is a product of small-displacement elements.

    The default threshold 2D + 72*delta is the theoretical generating
    bound; passing a smaller explicit threshold verifies a stronger
    statement (the small set already generates), hence still certifies the
    bound. Pass means every entry is reachable from the identity through
    orbit points in the ball with steps of displacement <= threshold.
    """
    theo = 2.0 * action.declared_codiameter + 72.0 * action.declared_delta
    if threshold is None:
        threshold = theo
    if threshold > theo + 1e-9:
        raise ValueError("threshold above the theoretical generating bound")
    if float(ball.radius) < 2.0 * threshold - 1e-9:
        raise InsufficientDataError(
            "ball radius %s < 2x threshold %s" % (ball.radius, threshold)
        )
    adj = _orbit_graph_neighbors(action, ball, threshold)
    index = {e.word: i for i, e in enumerate(ball.entries)}
    seen = {index[""]}
    stack = [index[""]]
    while stack:
        i = stack.pop()
        for j in adj[i]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    if len(seen) == len(ball.entries):
        return CheckReport(True, detail={"threshold": threshold})
    missing = min(
        (i for i in range(len(ball.entries)) if i not in seen),
        key=lambda i: word_key(ball.entries[i].word),
    )
    return CheckReport(False, witness=ball.entries[missing].word, detail={"threshold": threshold})


def word_metric_distances(action, ball, R):
    """d_Sigma(g, id) for every entry: BFS over the orbit graph whose edges
    join orbit points at distance <= R."""
    entries = ball.entries
    n = len(entries)
    index = {e.word: i for i, e in enumerate(entries)}
    if action.space.kind == TREE:
        steps = [e.word for e in entries if e.word and float(e.displacement) <= float(R) + 1e-12]
        dist = [-1] * n
        start = index[""]
        dist[start] = 0
        frontier = [start]
        while frontier:
            nxt = []
            for i in frontier:
                for s in steps:
                    j = index.get(compose_words(entries[i].word, s))
                    if j is not None and dist[j] < 0:
                        dist[j] = dist[i] + 1
                        nxt.append(j)
            frontier = nxt
        return dist
    # plane: vectorized distance threshold graph
    from .space import pairwise_distances

    pts = [e.point for e in entries]
    D = pairwise_distances(action.space, pts)
    close = D <= float(R) + 1e-9
    dist = np.full(n, -1, dtype=int)
    start = index[""]
    dist[start] = 0
    frontier = np.zeros(n, dtype=bool)
    frontier[start] = True
    level = 0
    while frontier.any():
        level += 1
        reach = close[frontier].any(axis=0) & (dist < 0)
        dist[reach] = level
        frontier = reach
    return list(dist)


def check_word_metric_comparison(action, ball, R):
    """(R - 2D - 72*delta) * d_Sigma(g) <= d(gx, x) <= R * d_Sigma(g)."""
    thresh = 2.0 * action.declared_codiameter + 72.0 * action.declared_delta
    if R <= thresh:
        raise ValueError("R must exceed 2D + 72*delta = %.6g" % thresh)
    lower_c = R - thresh
    dsig = word_metric_distances(action, ball, R)
    worst_lower = worst_upper = 0.0
    witness = None
    for e, k in zip(ball.entries, dsig):
        if k < 0:
            return CheckReport(False, witness=("unreachable", e.word))
        d = float(e.displacement)
        if lower_c * k > d + 1e-9 or d > R * k + 1e-9:
            return CheckReport(
                False, witness=(e.word, k, d), detail={"R": R, "threshold": thresh}
            )
        if k:
            worst_lower = max(worst_lower, lower_c * k / d) if d else worst_lower
            worst_upper = max(worst_upper, d / (R * k))
    return CheckReport(
        True,
        detail={
            "R": R,
            "threshold": thresh,
            "worst_lower_ratio": worst_lower,
            "worst_upper_ratio": worst_upper,
        },
    )
