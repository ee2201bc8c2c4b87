"""Critical-exponent and covering-entropy estimation with explicit audits.

Estimates are never bare numbers: every estimate carries its window,
method and residual. Packing/covering numbers have an exact branch-and-
bound mode for small instances (<= 24 points) and deterministic greedy
modes for larger ones, with the direction of the greedy bound labeled.
"""

import math
from dataclasses import dataclass

import numpy as np

from .space import distances_to_point, pairwise_distances

EXACT_LIMIT = 24


@dataclass(frozen=True)
class EntropyEstimate:
    h_hat: float
    window: tuple
    method: str
    residual: float
    counts_used: tuple

    def as_dict(self):
        return {
            "h_hat": self.h_hat,
            "window": list(self.window),
            "method": self.method,
            "residual": self.residual,
            "points": len(self.counts_used),
        }


def estimate_critical_exponent(counts, window, method="regression"):
    """Growth rate of N(T) over the window.

    counts: list of (T, N(T)) with N positive and nondecreasing.
    regression: least-squares slope of log N vs T over the window (with max
    absolute residual reported); last-ratio: difference quotient over the
    last grid step of the window.
    """
    if method not in ("regression", "last-ratio"):
        raise ValueError("unknown method %r" % method)
    lo, hi = window
    pts = [(float(t), n) for t, n in counts if lo - 1e-12 <= float(t) <= hi + 1e-12]
    if any(n <= 0 for _, n in pts):
        raise ValueError("counts must be positive")
    if len(pts) < 4:
        raise ValueError("need at least 4 grid points in the window")
    for (t1, n1), (t2, n2) in zip(pts, pts[1:]):
        if t2 <= t1 or n2 < n1:
            raise ValueError("counts must be sorted with nondecreasing N")
    ts = np.array([t for t, _ in pts])
    ys = np.log([n for _, n in pts])
    if method == "regression":
        slope, icept = np.polyfit(ts, ys, 1)
        resid = float(np.max(np.abs(ys - (slope * ts + icept))))
        return EntropyEstimate(max(float(slope), 0.0), (lo, hi), method, resid, tuple(pts))
    h = (ys[-1] - ys[-2]) / (ts[-1] - ts[-2])
    # residual: disagreement with the previous step's ratio
    prev = (ys[-2] - ys[-3]) / (ts[-2] - ts[-3])
    return EntropyEstimate(max(float(h), 0.0), (lo, hi), method, abs(float(h - prev)), tuple(pts))


def poincare_partial(ball, s):
    """Partial Poincare sum over the ball: sum over entries of e^{-s d(x,gx)}."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    return float(sum(math.exp(-s * float(e.displacement)) for e in ball.entries))


# ---------------------------------------------------------------------------
# packing and covering numbers


def _close_matrix(space, points, r):
    D = pairwise_distances(space, points)
    return D <= r + 1e-12


def covering_number(space, points, r, mode="exact"):
    """Smallest number of points of the set whose r-balls cover the set.

    exact: optimal by branch and bound (<= 24 points); greedy: farthest-
    point traversal starting from the first point (deterministic); the
    greedy count is an upper bound for the optimum.
    """
    n = len(points)
    if n == 0:
        return 0
    if mode == "exact":
        if n > EXACT_LIMIT:
            raise ValueError("exact mode limited to %d points" % EXACT_LIMIT)
        close = _close_matrix(space, points, r)
        masks = [sum(1 << j for j in range(n) if close[i, j]) for i in range(n)]
        full = (1 << n) - 1
        best = [covering_number(space, points, r, "greedy")]

        def search(covered, used):
            if used >= best[0]:
                return
            if covered == full:
                best[0] = used
                return
            low = (~covered) & full
            i = (low & -low).bit_length() - 1  # lowest uncovered point
            for j in range(n):
                if close[i, j]:
                    search(covered | masks[j], used + 1)

        search(0, 0)
        return best[0]
    if mode == "greedy":
        D = pairwise_distances(space, points)
        centers = [0]
        mind = D[0].copy()
        while mind.max() > r + 1e-12:
            nxt = int(np.argmax(mind))
            centers.append(nxt)
            mind = np.minimum(mind, D[nxt])
        return len(centers)
    raise ValueError("unknown mode %r" % mode)


def packing_number(space, points, r, mode="exact"):
    """Largest number of pairwise 2r-separated points of the set.

    exact: optimal (max independent set in the 2r-close graph, <= 24
    points); greedy: lexicographic-first maximal separated set, a lower
    bound for the optimum.
    """
    n = len(points)
    if n == 0:
        return 0
    if mode == "exact":
        if n > EXACT_LIMIT:
            raise ValueError("exact mode limited to %d points" % EXACT_LIMIT)
        close = _close_matrix(space, points, 2 * r)
        conflict = [0] * n
        for i in range(n):
            for j in range(n):
                if i != j and close[i, j]:
                    conflict[i] |= 1 << j
        best = [0]

        def search(i, chosen_count, banned):
            if chosen_count + (n - i) <= best[0]:
                return
            if i == n:
                best[0] = max(best[0], chosen_count)
                return
            if not (banned >> i) & 1:
                search(i + 1, chosen_count + 1, banned | conflict[i])
            search(i + 1, chosen_count, banned)

        search(0, 0, 0)
        return best[0]
    if mode == "greedy":
        D = pairwise_distances(space, points)
        chosen = []
        for i in range(n):
            if all(D[i, j] > 2 * r + 1e-12 for j in chosen):
                chosen.append(i)
        return len(chosen)
    raise ValueError("unknown mode %r" % mode)


def covering_entropy_estimate(action, hull_samples, r, window, grid_step=None, method="regression"):
    """Growth rate of greedy covering numbers of hull pieces.

    hull_samples: model points with known distance to the basepoint (the
    declared sampling density is the caller's responsibility and should be
    reported alongside). For each grid T in the window the greedy covering
    number of the samples within distance T of the basepoint is computed;
    the slope of its log is the covering-entropy estimate (an upper-bound-
    flavored greedy figure, not a certified value).
    """
    lo, hi = window
    if grid_step is None:
        grid_step = float(action.space.edge_length) if action.space.kind == "tree" else 1.0
    base = action.basepoint
    d0 = distances_to_point(action.space, hull_samples, base)
    counts = []
    t = lo
    while t <= hi + 1e-9:
        sel = [p for p, d in zip(hull_samples, d0) if d <= t + 1e-9]
        if sel:
            counts.append((t, greedy_covering_count(action.space, sel, r)))
        t += grid_step
    if len(counts) < 3:
        raise ValueError("window shorter than 3 grid points")
    if len(counts) == 3:
        counts = [(counts[0][0] - grid_step, max(counts[0][1] - 1, 1))] + counts
    return estimate_critical_exponent(counts, (counts[0][0], counts[-1][0]), method)


def greedy_covering_count(space, points, r):
    """Farthest-point greedy covering with O(n) vector work per center.

    Equivalent to covering_number(..., mode="greedy") but avoids the dense
    n x n matrix, so it scales to ~1e5 points.
    """
    n = len(points)
    if n == 0:
        return 0
    if space.kind == "plane":
        z = np.array([p.z for p in points], dtype=complex)

        def dist_from(i):
            return 2.0 * np.arcsinh(
                np.abs(z - z[i]) / (2.0 * np.sqrt(z.imag * z[i].imag))
            )

    else:
        from .words import _ORDER

        L = float(space.edge_length)
        wl = np.array([len(p.word) for p in points], dtype=np.int64)
        off = np.array([float(p.offset) for p in points])
        maxlen = int(wl.max()) + 1
        path = -np.ones((n, maxlen), dtype=np.int16)
        for i, p in enumerate(points):
            for j, c in enumerate(p.word):
                path[i, j] = _ORDER[c]
            if p.direction is not None:
                path[i, len(p.word)] = _ORDER[p.direction]
        depth = wl * L + off

        def dist_from(i):
            neq = path != path[i]
            has = neq.any(axis=1)
            first = np.where(has, neq.argmax(axis=1), maxlen)
            wmin = np.minimum(wl, wl[i])
            sep = np.minimum(first, wmin) * L
            same_v = (wl == wl[i]) & (first > wl) & (off > 0)
            sep = sep + np.where(same_v, np.minimum(off, off[i]), 0.0)
            sep = sep + np.where((wl < wl[i]) & (first > wl), off, 0.0)
            sep = sep + np.where((wl[i] < wl) & (first > wl[i]), off[i], 0.0)
            return np.maximum(depth + depth[i] - 2.0 * sep, 0.0)

    mind = dist_from(0)
    count = 1
    while mind.max() > r + 1e-12:
        nxt = int(np.argmax(mind))
        mind = np.minimum(mind, dist_from(nxt))
        count += 1
    return count


def check_packing_chain(space, points, r):
    """Exact-mode chain Pack(Y,2r) <= Cov(Y,2r) <= Pack(Y,r)."""
    p2 = packing_number(space, points, 2 * r, "exact")
    c2 = covering_number(space, points, 2 * r, "exact")
    p1 = packing_number(space, points, r, "exact")
    return p2 <= c2 <= p1, (p2, c2, p1)


@dataclass(frozen=True)
class PackingGrowthReport:
    passed: bool
    P: int
    base_radius: float
    rows: tuple  # ((T, measured, bound), ...)


def check_packing_growth(action, hull_samples, ts, r):
    """Measured packing numbers against the growth bound P(1+P)^{T/r - 1}.

    P is the (greedy, hence lower-bound) packing number of the hull within
    radius 72*delta + 3r of the basepoint; measured values are greedy
    packing numbers of hull pieces, also lower bounds, so a pass is the
    honest direction of the inequality.
    """
    base = action.basepoint
    base_radius = 72.0 * action.declared_delta + 3.0 * r
    d0 = distances_to_point(action.space, hull_samples, base)
    core = [p for p, d in zip(hull_samples, d0) if d <= base_radius + 1e-9]
    P = packing_number(action.space, core, r, "greedy") if core else 1
    P = max(P, 1)
    rows = []
    ok = True
    for T in ts:
        sel = [p for p, d in zip(hull_samples, d0) if d <= T + 1e-9]
        measured = packing_number(action.space, sel, r, "greedy") if sel else 0
        bound = P * (1.0 + P) ** (T / r - 1.0)
        rows.append((T, measured, bound))
        if measured > bound + 1e-9:
            ok = False
    return PackingGrowthReport(ok, P, base_radius, tuple(rows))


# ---------------------------------------------------------------------------
# explicit bounds


@dataclass(frozen=True)
class EquidistributionReport:
    K_measured: float
    h_used: float
    worst_T: float


def equidistribution_constant(counts, h):
    """Smallest K with (1/K) e^{hT} <= N(T) <= K e^{hT} on the grid."""
    if h <= 0:
        raise ValueError("h must be positive")
    K = 1.0
    worst = None
    for t, n in counts:
        if n <= 0:
            raise ValueError("counts must be positive")
        ratio = max(n / math.exp(h * float(t)), math.exp(h * float(t)) / n)
        if ratio > K:
            K = ratio
            worst = float(t)
    return EquidistributionReport(K, h, worst if worst is not None else float(counts[0][0]))


def recheck_equidistribution(counts, h, K):
    """True iff (1/K) e^{hT} <= N(T) <= K e^{hT} for every grid T."""
    for t, n in counts:
        e = math.exp(h * float(t))
        if n > K * e or n < e / K:
            return False
    return True


def check_entropy_lower_bound(h, delta, D, tolerance=1e-9):
    """h >= log 2 / (99*delta + 10*D), up to the estimator tolerance."""
    den = 99.0 * delta + 10.0 * D
    if den <= 0:
        raise ValueError("99*delta + 10*D must be positive")
    bound = math.log(2.0) / den
    return h >= bound - tolerance, bound
