"""Batch experiment driver.

Scenarios are JSON documents (schema 1) naming an action and one block
per subcommand; the same scenario file can drive several subcommands.
Reports are plain CSV/JSON with sorted keys and LF endings, so the same
scenario and seed produce byte-identical output. The exit code is 0 iff
every check enabled by the scenario passed.
"""

import argparse
import json
import math
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .boundary import (
    Atom,
    AtomicMeasure,
    check_ahlfors_regularity,
    check_quasiconformality,
    check_shadow_ball_lemma,
    cylinder_scale,
    limit_set_sample,
    patterson_sullivan_atoms,
    qc_hull_sample,
    tree_boundary,
    tree_cylinder_cells,
)
from .convergence import ContinuityConfig, _member_counts, run_continuity_experiment
from .entropy import (
    check_entropy_lower_bound,
    check_packing_chain,
    check_packing_growth,
    covering_entropy_estimate,
    equidistribution_constant,
    estimate_critical_exponent,
    poincare_partial,
    recheck_equidistribution,
)
from .errors import CertificationError, ClassificationError
from .geometry_checks import SamplingPlan, check_geodesic_lemmas
from .isometries import (
    PingPongFailure,
    PlaneIsometry,
    certify_ping_pong,
    schottky_pair,
    compose,
    translation_length,
)
from .orbits import (
    check_generating,
    check_word_metric_comparison,
    enumerate_orbit_ball,
    measure_systole,
    schottky_action,
    tree_action,
)
from .isometries import apply_isometry
from .space import TREE, ModelSpace, PLANE_TOL, distance

SCHEMA = 1
DEFAULT_MIN_SYSTOLE = 0.5


# ---------------------------------------------------------------------------
# scenario loading and action certification


def load_scenario(path):
    p = Path(path)
    if not p.exists():
        # bundled scenario by bare name
        name = p.name if p.name.endswith(".scn") else p.name + ".scn"
        ref = resources.files("hypcrit") / "scenarios" / name
        if ref.is_file():
            sc = json.loads(ref.read_text(encoding="utf-8"))
        else:
            raise FileNotFoundError(path)
    else:
        sc = json.loads(p.read_text(encoding="utf-8"))
    if sc.get("schema") != SCHEMA:
        raise ValueError("unsupported scenario schema %r" % sc.get("schema"))
    return sc


def screen_plane_systole(gens, threshold):
    """Short-word displacement screen, run before any ping-pong work.

    Words of length <= 2 over the generators and their inverses are
    displaced at the basepoint. A numerically fixed basepoint sends the
    element to translation_length for classification (elliptic elements
    are rejected there); a positive displacement below the threshold is a
    systole rejection.
    """
    space = ModelSpace.plane()
    base = space.basepoint
    elems = []
    for g in gens:
        elems.extend([g, g.inverse()])
    words = list(elems) + [compose(a, b) for a in elems for b in elems]
    best = None
    for g in words:
        if g.is_identity:
            continue
        d = float(distance(space, base, apply_isometry(space, g, base)))
        if d <= PLANE_TOL:
            translation_length(space, g)  # raises ClassificationError
            continue
        if best is None or d < best:
            best = d
    if best is not None and best < threshold:
        raise CertificationError(
            "systole below class threshold: shortest measured displacement "
            "%.6g < %.6g" % (best, threshold)
        )


def build_action(spec):
    kind = spec["kind"]
    if kind == "tree":
        return tree_action(
            valence=int(spec.get("valence", 4)),
            edge_length=Fraction(spec.get("edge_length", 1)),
        )
    threshold = float(spec.get("min_systole", DEFAULT_MIN_SYSTOLE))
    if kind == "schottky":
        desc = schottky_pair(float(spec.get("L", 4.0)))
    elif kind == "plane":
        gens = [
            PlaneIsometry.from_matrix(*(float(v) for v in row))
            for row in spec["generators"]
        ]
        from .isometries import SchottkyDescription

        screen_plane_systole(gens, threshold)
        desc = SchottkyDescription.with_standard_disks(gens)
    else:
        raise ValueError("unknown action kind %r" % kind)
    screen_plane_systole(desc.generators, threshold)
    cert = certify_ping_pong(desc)
    if isinstance(cert, PingPongFailure):
        raise CertificationError("ping-pong certification failed: %s" % (cert,))
    return schottky_action(desc, cert)


# ---------------------------------------------------------------------------
# report plumbing


def write_report(outdir, name, text):
    path = Path(outdir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def counts_csv(counts):
    lines = ["t,count"]
    for t, n in counts:
        lines.append("%.12g,%d" % (float(t), n))
    return "\n".join(lines) + "\n"


def _block(scenario, name):
    if name not in scenario:
        raise ValueError("scenario %r has no %r block" % (scenario.get("name"), name))
    return scenario[name]


def _seed(scenario, args):
    seed = args.seed if args.seed is not None else scenario.get("seed")
    if seed is None:
        raise ValueError("seeds are mandatory: set --seed or a scenario seed")
    return int(seed)


# ---------------------------------------------------------------------------
# subcommands


def cmd_entropy(scenario, args, outdir):
    block = _block(scenario, "entropy")
    action = build_action(scenario["action"])
    ball = enumerate_orbit_ball(action, _radius(action, block["T"]), workers=args.threads)
    counts = _member_counts(action, ball)
    window = tuple(float(v) for v in block["window"])
    est = estimate_critical_exponent(counts, window, block.get("method", "regression"))

    win_counts = [
        (t, n) for t, n in counts if window[0] - 1e-9 <= float(t) <= window[1] + 1e-9
    ]
    h_used = float(block.get("K_h", est.h_hat))
    eq = equidistribution_constant(win_counts, h_used)
    recheck = recheck_equidistribution(win_counts, h_used, eq.K_measured * (1 + 1e-12))
    lb_ok, lb = check_entropy_lower_bound(
        est.h_hat, action.declared_delta, action.declared_codiameter
    )
    sys_rep = measure_systole(action, ball)

    report = {
        "name": scenario.get("name", ""),
        "ball": {"T": float(ball.radius), "count": ball.count},
        "estimate": est.as_dict(),
        "equidistribution": {
            "K_measured": eq.K_measured,
            "h_used": h_used,
            "worst_T": eq.worst_T,
            "recheck": recheck,
        },
        "lower_bound": {"bound": lb, "passed": lb_ok},
        "systole": {
            "min_displacement": float(sys_rep.min_displacement),
            "word": sys_rep.attaining_word,
        },
        "poincare_partial": {
            "%.12g" % s: poincare_partial(ball, float(s))
            for s in block.get("poincare_s", [])
        },
    }
    checks = [lb_ok, recheck]
    if "h_target" in block:
        tol = float(block.get("h_tolerance", 0.01))
        drift = abs(est.h_hat - float(block["h_target"]))
        report["h_target"] = {
            "target": float(block["h_target"]),
            "drift": drift,
            "tolerance": tol,
            "passed": drift <= tol,
        }
        checks.append(drift <= tol)
    if "K_bound" in block:
        k_ok = eq.K_measured <= float(block["K_bound"]) + 1e-9
        report["equidistribution"]["bound"] = float(block["K_bound"])
        report["equidistribution"]["bound_passed"] = k_ok
        checks.append(k_ok)
    if "covering" in block:
        cov = block["covering"]
        cest = covering_entropy_estimate(
            action,
            [e.point for e in ball.entries],
            float(cov["r"]),
            tuple(float(v) for v in cov["window"]),
        )
        report["covering_entropy"] = cest.as_dict()
    passed = all(checks)
    report["passed"] = passed
    write_report(outdir, "counts.csv", counts_csv(counts))
    write_report(outdir, "estimate.json", dump_json(report))
    return passed


def _radius(action, T):
    if action.space.kind == TREE:
        L = action.space.edge_length
        return L * int(Fraction(str(T)) / L)
    return float(T)


def _dirac_measure(measure):
    """Single-atom replacement of a boundary measure (negative control)."""
    deep = max(measure.boundary_atoms, key=lambda a: a.displacement)
    atom = Atom(deep.word, deep.point, deep.displacement, 1.0, deep.boundary)
    return AtomicMeasure((atom,), measure.s, measure.truncation_T)


def cmd_boundary(scenario, args, outdir):
    block = _block(scenario, "boundary")
    action = build_action(scenario["action"])
    ball = enumerate_orbit_ball(action, _radius(action, block["T"]), workers=args.threads)
    measure = patterson_sullivan_atoms(action, ball, float(block["s"]))
    if block.get("dirac_control"):
        measure = _dirac_measure(measure)
    h = float(block["h"])

    if action.space.kind == TREE:
        centers, scales, cells = [], [], []
        per = int(block.get("cells_per_depth", 12))
        for depth in block["cylinder_depths"]:
            all_cells = tree_cylinder_cells(action, int(depth))
            step = max(1, len(all_cells) // per)
            cells = all_cells[::step][:per]
            centers.extend(z for z, _ in cells)
            scales_here = [cylinder_scale(action, int(depth))]
            scales.extend(scales_here)
        centers = centers or [tree_boundary("a")]
        scales = sorted(set(scales), reverse=True)
        qc_cells = tree_cylinder_cells(action, int(block.get("qc_depth", 3)))
    else:
        lim = limit_set_sample(action, ball, float(block["min_displacement"]))
        centers = lim[: int(block.get("max_centers", 40))]
        scales = [float(v) for v in block["scales"]]
        rho = float(block.get("qc_scale", scales[-1]))
        qc_cells = [(z, rho) for z in centers]

    ahl = check_ahlfors_regularity(action, measure, h, centers, scales)
    qc = check_quasiconformality(action, measure, h, block.get("qc_word", "a"), qc_cells)

    report = {
        "name": scenario.get("name", ""),
        "measure": {"s": measure.s, "atoms": len(measure.atoms),
                    "boundary_atoms": len(measure.boundary_atoms)},
        "ahlfors": {
            "A_lower": ahl.A_lower,
            "A_upper": ahl.A_upper,
            "A_vis": max(ahl.A_upper, 1.0 / ahl.A_lower) if ahl.A_lower > 0 else math.inf,
            "step1_bound": ahl.step1_bound,
            "step1_passed": ahl.step1_passed,
            "shadow_Q": ahl.shadow_Q,
            "shadow_R0": ahl.shadow_R0,
            "samples": ahl.samples,
            "skipped": ahl.skipped,
        },
        "quasiconformality": {
            "Q": qc.Q,
            "cells_used": qc.cells_used,
            "cells_skipped": qc.cells_skipped,
            "g_word": qc.g_word,
        },
    }
    checks = [ahl.passed]
    if "qc_bound" in block:
        qc_ok = qc.Q <= float(block["qc_bound"]) + 1e-9
        report["quasiconformality"]["bound"] = float(block["qc_bound"])
        report["quasiconformality"]["bound_passed"] = qc_ok
        checks.append(qc_ok)
    passed = all(checks)
    report["passed"] = passed
    write_report(outdir, "audits.json", dump_json(report))
    return passed


def _schottky_member(min_systole):
    def member(L):
        desc = schottky_pair(float(L))
        screen_plane_systole(desc.generators, min_systole)
        cert = certify_ping_pong(desc)
        if isinstance(cert, PingPongFailure):
            raise CertificationError("ping-pong certification failed: %s" % (cert,))
        return schottky_action(desc, cert)

    return member


def cmd_converge(scenario, args, outdir):
    block = _block(scenario, "converge")
    family = block["family"]
    kw = {}
    for name in ("ball_T", "h_tolerance", "K_bound"):
        if name in block:
            kw[name] = float(block[name])
    if "window" in block:
        kw["window"] = tuple(float(v) for v in block["window"])
    if "eps_ladder" in block:
        kw["eps_ladder"] = tuple(float(v) for v in block["eps_ladder"])
    if "rank_window" in block:
        kw["rank_window"] = tuple(int(v) for v in block["rank_window"])

    if family == "tree-rescale":
        schedule = [Fraction(str(v)) for v in block["schedule"]]
        limit = Fraction(str(block["limit"]))
        valence = int(scenario["action"].get("valence", 4))
        make_member = lambda ell: tree_action(valence=valence, edge_length=ell)
        kw.setdefault("param_scale", float)
        if block.get("closed_form_target", True):
            kw.setdefault("h_target", lambda ell: math.log(valence - 1) / float(ell))
            kw.setdefault("h_reference", lambda ell: math.log(valence - 1) / float(ell))
    elif family == "schottky-length":
        schedule = [float(v) for v in block["schedule"]]
        limit = float(block["limit"])
        make_member = _schottky_member(
            float(scenario["action"].get("min_systole", DEFAULT_MIN_SYSTOLE))
        )
        kw.setdefault("param_scale", lambda L: L / 4.0)
    else:
        raise ValueError("unknown family %r" % family)

    report = run_continuity_experiment(make_member, schedule, limit, ContinuityConfig(**kw))
    audits = {
        "name": scenario.get("name", ""),
        "family": family,
        "h_limit": report.h_limit,
        "C": report.C,
        "notes": report.notes,
        "continuity_passed": report.passed,
    }
    checks = [report.passed]
    if "cauchy" in block:
        min_ratio = float(block["cauchy"].get("min_shrink_ratio", 1.5))
        hs = [r.h_hat for r in report.rows]
        diffs = [abs(a - b) for a, b in zip(hs, hs[1:])]
        ratios = [a / b for a, b in zip(diffs, diffs[1:]) if b > 0]
        ok = bool(ratios) and min(ratios) >= min_ratio
        audits["cauchy"] = {
            "shrink_ratios": ratios,
            "min_shrink_ratio": min_ratio,
            "passed": ok,
        }
        checks.append(ok)
    passed = all(checks)
    audits["passed"] = passed
    write_report(outdir, "continuity.csv", report.to_csv())
    write_report(outdir, "audits.json", dump_json(audits))
    return passed


def cmd_verify(scenario, args, outdir):
    block = _block(scenario, "verify")
    action = build_action(scenario["action"])
    seed = _seed(scenario, args)
    delta = action.declared_delta
    if "delta_override" in block:
        if not block.get("unsafe"):
            raise ValueError('delta_override requires "unsafe": true')
        delta = float(block["delta_override"])

    balls = {}

    def ball(T):
        R = _radius(action, T)
        if R not in balls:
            balls[R] = enumerate_orbit_ball(action, R, workers=args.threads)
        return balls[R]

    audits = {"name": scenario.get("name", ""), "delta": delta, "seed": seed}
    ok = True

    for check in block["checks"]:
        if check == "lemmas":
            plan = SamplingPlan(
                count=int(block.get("configs", 300)),
                seed=seed,
                radius=float(block.get("radius", 6.0)),
            )
            rep = check_geodesic_lemmas(action.space, delta, plan)
            rows = []
            for r in rep.rows:
                row = {
                    "name": r.name,
                    "configs": r.configs,
                    "max_defect": r.max_defect,
                    "bound": r.bound,
                    "passed": r.passed,
                }
                if args.emit_witnesses or not r.passed:
                    row["witness"] = r.witness
                rows.append(row)
            audits["geodesic_lemmas"] = {"passed": rep.passed, "rows": rows}
            ok = ok and rep.passed
        elif check == "shadow_ball":
            sb = block["shadow_ball"]
            b = ball(sb["T"])
            samples = limit_set_sample(action, b, float(sb["min_displacement"]))
            samples = samples[: int(sb.get("max_samples", 200))]
            rep = check_shadow_ball_lemma(
                action,
                samples,
                [float(t) for t in sb["ts"]],
                seed=seed,
                pair_count=int(sb.get("pair_count", 300)),
            )
            audits["shadow_ball"] = {
                "passed": rep.passed,
                "ball_in_shadow": list(rep.ball_in_shadow),
                "shadow_in_ball": list(rep.shadow_in_ball),
                "visual_comparison": list(rep.visual_comparison),
                "pack_cov_rows": [list(r) for r in rep.pack_cov_rows],
            }
            ok = ok and rep.passed
        elif check == "generating":
            g = block["generating"]
            rep = check_generating(action, ball(g["T"]), g.get("threshold"))
            audits["generating"] = _check_report_dict(rep, args)
            ok = ok and rep.passed
        elif check == "word_metric":
            wm = block["word_metric"]
            rep = check_word_metric_comparison(action, ball(wm["T"]), float(wm["R"]))
            audits["word_metric"] = _check_report_dict(rep, args)
            ok = ok and rep.passed
        elif check == "packing_growth":
            pg = block["packing_growth"]
            b = ball(pg["T"])
            samples = limit_set_sample(action, b, float(pg["min_displacement"]))
            hull = qc_hull_sample(action, samples, int(pg.get("pair_count", 40)), seed=seed)
            rep = check_packing_growth(
                action, hull, [float(t) for t in pg["ts"]], float(pg["r"])
            )
            audits["packing_growth"] = {
                "passed": rep.passed,
                "P": rep.P,
                "base_radius": rep.base_radius,
                "rows": [list(r) for r in rep.rows],
            }
            ok = ok and rep.passed
        elif check == "packing_chain":
            pc = block["packing_chain"]
            pts = [e.point for e in ball(pc["T"]).entries][: int(pc.get("max_points", 20))]
            chain_ok, nums = check_packing_chain(action.space, pts, float(pc["r"]))
            audits["packing_chain"] = {
                "passed": chain_ok,
                "pack2_cov2_pack1": list(nums),
            }
            ok = ok and chain_ok
        else:
            raise ValueError("unknown check %r" % check)

    audits["passed"] = ok
    write_report(outdir, "audits.json", dump_json(audits))
    return ok


def _check_report_dict(rep, args):
    out = {"passed": rep.passed}
    if rep.detail:
        out["detail"] = {k: v for k, v in sorted(rep.detail.items())}
    if rep.witness is not None and (args.emit_witnesses or not rep.passed):
        out["witness"] = list(rep.witness) if isinstance(rep.witness, tuple) else rep.witness
    return out


COMMANDS = {
    "entropy": cmd_entropy,
    "boundary": cmd_boundary,
    "converge": cmd_converge,
    "verify": cmd_verify,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hypcrit",
        description="Critical-exponent experiments on hyperbolic model spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("entropy", "orbit counts and critical-exponent estimate"),
        ("boundary", "Ahlfors-regularity and quasiconformality audits"),
        ("converge", "continuity experiment along a parametric family"),
        ("verify", "geometry inequality suites"),
    ):
        q = sub.add_parser(name, help=help_text)
        q.add_argument("--scenario", required=True, help="scenario file or bundled name")
        q.add_argument("--out", required=True, help="report directory")
        q.add_argument("--seed", type=int, default=None)
        q.add_argument("--threads", type=int, default=1)
        q.add_argument("--emit-witnesses", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        passed = COMMANDS[args.command](scenario, args, args.out)
    except (CertificationError, ClassificationError) as exc:
        diagnosis = "%s: %s" % (type(exc).__name__, exc)
        print("rejected: " + diagnosis, file=sys.stderr)
        write_report(args.out, "audits.json", dump_json({"error": diagnosis, "passed": False}))
        return 2
    if not passed:
        print("one or more checks failed; see reports in %s" % args.out, file=sys.stderr)
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
