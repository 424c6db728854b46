"""Command-line front door: verification suites over space instances,
barycenter / superposition / embedding runners, and the Lipschitz-slope
counterexample demo.

Every subcommand prints a JSON report with a flat check list and exits 0
iff all checks pass; malformed input exits 2.  With --out, the report is
also written as JSON + CSV next to a rendered slack chart.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .barycenter import (
    DiscreteMeasure,
    frechet_objective,
    inductive_means,
    solve_barycenter,
    variance_certificate,
)
from .comparison import make_rng, verify_angle_monotonicity, verify_cat, verify_kappa_independence
from .curves import SampledCurve, check_antipodality, forward_angle_defect
from .embedding import (
    build_embedding,
    fibre_distance,
    hilbertianity_report,
    section_identity_slacks,
    verify_linearity,
)
from .errors import CatCalcError, ConfigError
from .report import Report
from .spaces import Space, space_from_json
from .tangent import (
    TangentVector,
    _step_bound,
    cone_metric,
    first_variation,
    oplus,
    scalar_product,
    scale,
    zero_vector,
)
from .transport import EdgeFlow, flow_from_json, graph_from_json, superpose

_CAT_BATCHES = 4


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("CATCALC_WORKERS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    if _workers() > 1:
        with ThreadPoolExecutor(max_workers=_workers()) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def cat_suite(space: Space, kappa: float, n: int, seed: int, tol: float = 1e-9) -> Report:
    """Triangle comparison against the model of curvature kappa."""
    per_batch = max(1, n // _CAT_BATCHES)
    counts = [per_batch] * (_CAT_BATCHES - 1) + [n - per_batch * (_CAT_BATCHES - 1)]
    batches = _pmap(
        lambda arg: verify_cat(space, kappa, arg[1], seed + 7919 * arg[0], tol),
        list(enumerate(counts)),
    )
    merged = batches[0]
    for b in batches[1:]:
        merged = merged.merge(b)
    rep = Report("verify-cat", meta={"space": space.space_id, "kappa": kappa,
                                     "samples": merged.samples, "violations": merged.violations})
    rep.add("cat-comparison", merged.worst_slack, tol)
    return rep


def _sample_distinct(space: Space, rng, x, min_d: float = 1e-3, tries: int = 200):
    for _ in range(tries):
        y = space.sample_point(rng)
        if space.dist(x, y) > min_d:
            return y
    raise ConfigError("could not sample a point away from the base")


def angle_suite(space: Space, n: int, seed: int, tol: float = 1e-9) -> Report:
    """Angle monotonicity, the angle triangle inequality, and stability of
    the comparison angle under the curvature parameter."""
    rng = make_rng(seed)
    kappa = space.curvature_bound()
    grid = np.linspace(0.1, 1.0, 8)
    worst_mono = -math.inf
    for _ in range(n):
        x = space.sample_point(rng)
        g_t = _sample_distinct(space, rng, x)
        e_t = _sample_distinct(space, rng, x)
        out = verify_angle_monotonicity(space, x, g_t, e_t, grid, grid, tol)
        worst_mono = max(worst_mono, out.worst_slack)
    # triangle inequality for angles between geodesic directions at x;
    # comparison angles of far-away triples do not satisfy it, the limit
    # angles do
    worst_tri = -math.inf
    for _ in range(n):
        x = space.sample_point(rng)
        ys = [_sample_distinct(space, rng, x) for _ in range(3)]
        ang = {
            (i, j): space.angle_between(x, ys[i], ys[j])
            for i in range(3)
            for j in range(i + 1, 3)
        }
        worst_tri = max(
            worst_tri,
            ang[0, 2] - ang[0, 1] - ang[1, 2],
            ang[0, 1] - ang[0, 2] - ang[1, 2],
            ang[1, 2] - ang[0, 1] - ang[0, 2],
        )
    # fitted constants of the angle difference under a curvature drop must
    # stay bounded as the configuration shrinks toward the vertex
    x = space.sample_point(rng)
    consts = []
    for halving in range(4):
        pairs = []
        for _ in range(20):
            y1 = _sample_distinct(space, rng, x)
            y2 = _sample_distinct(space, rng, x)
            t = 0.5 ** halving
            pairs.append((space.geodesic(x, y1, t), space.geodesic(x, y2, t)))
        out = verify_kappa_independence(space, x, pairs, kappa, kappa - 1.0, tol)
        consts.append(out.details["fitted_constant"])
    rep = Report("verify-angles", meta={"space": space.space_id, "fitted_constants": consts})
    rep.add("angle-monotonicity", worst_mono, tol)
    rep.add("angle-triangle-inequality", worst_tri, tol)
    rep.add("kappa-independence-bounded", max(consts) - 10.0 * max(consts[0], 1e-12), 0.0)
    return rep


def _random_vector(space: Space, rng, x, max_reach: float = 1.5) -> TangentVector:
    reach = min(max_reach, 0.5 * space.cat_radius(x))
    for _ in range(200):
        y = space.sample_point(rng)
        if 1e-3 < space.dist(x, y) < reach:
            return TangentVector(space, x, y, float(rng.uniform(0.2, 1.8)))
    raise ConfigError("could not sample a tangent vector at the base point")


def cone_calc_suite(space: Space, n: int, seed: int, tol: float = 1e-8,
                    four_point_tol: float = 1e-7) -> Report:
    """Tangent-cone identities on random vector pairs, plus the four-point
    nonpositive-curvature test of the cone metric."""
    rng = make_rng(seed)
    worst = {k: -math.inf for k in (
        "norm-homogeneity", "law-of-cosines", "inner-homogeneity",
        "cauchy-schwarz", "equality-alignment", "parallelogram-bound",
        "four-point-cat0",
    )}
    for _ in range(n):
        x = space.sample_point(rng)
        v = _random_vector(space, rng, x)
        w = _random_vector(space, rng, x)
        lam = float(rng.uniform(0.2, 2.0))
        lv = scale(lam, v)
        worst["norm-homogeneity"] = max(
            worst["norm-homogeneity"],
            abs(cone_metric(lv, zero_vector(space, x)).value - lam * v.norm),
        )
        d_ext = cone_metric(v, w).value
        inner_exact = v.norm * w.norm * math.cos(space.angle_between(x, v.target, w.target))
        worst["law-of-cosines"] = max(
            worst["law-of-cosines"],
            abs(d_ext ** 2 - (v.norm ** 2 + w.norm ** 2 - 2.0 * inner_exact)),
        )
        worst["inner-homogeneity"] = max(
            worst["inner-homogeneity"],
            abs(scalar_product(lv, w) - lam * scalar_product(v, w)),
        )
        inner = scalar_product(v, w)
        worst["cauchy-schwarz"] = max(worst["cauchy-schwarz"], abs(inner) - v.norm * w.norm)
        # aligned pair: equality in Cauchy-Schwarz forces proportionality
        w2 = TangentVector(space, x, space.geodesic(x, v.target, float(rng.uniform(0.3, 0.9))),
                           float(rng.uniform(0.2, 1.8)))
        if scalar_product(v, w2) >= v.norm * w2.norm - tol:
            worst["equality-alignment"] = max(
                worst["equality-alignment"],
                cone_metric(scale(w2.norm, v), scale(v.norm, w2)).value,
            )
        s = oplus(v, w)
        worst["parallelogram-bound"] = max(
            worst["parallelogram-bound"],
            d_ext ** 2 + s.norm ** 2 - 2.0 * (v.norm ** 2 + w.norm ** 2),
        )
        vs = [v, w, _random_vector(space, rng, x), _random_vector(space, rng, x)]
        d = {(i, j): cone_metric(vs[i], vs[j]).value for i in range(4) for j in range(i + 1, 4)}
        worst["four-point-cat0"] = max(
            worst["four-point-cat0"],
            d[0, 2] ** 2 + d[1, 3] ** 2
            - (d[0, 1] ** 2 + d[1, 2] ** 2 + d[2, 3] ** 2 + d[0, 3] ** 2),
        )
    rep = Report("verify-cone-calc", meta={"space": space.space_id, "samples": n})
    for name in ("norm-homogeneity", "law-of-cosines", "inner-homogeneity", "cauchy-schwarz"):
        rep.add(name, worst[name], tol)
    rep.add("equality-alignment", worst["equality-alignment"], 1e-6)
    rep.add("parallelogram-bound", worst["parallelogram-bound"], tol)
    rep.add("four-point-cat0", worst["four-point-cat0"], four_point_tol)
    return rep


def _fd_slope(g, g0: float, t0: float) -> float:
    """One-sided derivative at 0 by extrapolating quotients over thirds.

    Restarts from a smaller base step when the extrapolants have not
    stabilized, e.g. when a piecewise-linear kink sits inside the window.
    """
    for _ in range(5):
        quots = [(g(t0 * 3.0 ** (-k)) - g0) / (t0 * 3.0 ** (-k)) for k in range(7)]
        r1 = [(3.0 * quots[k + 1] - quots[k]) / 2.0 for k in range(6)]
        r2 = [(9.0 * r1[k + 1] - r1[k]) / 8.0 for k in range(5)]
        r3 = [(27.0 * r2[k + 1] - r2[k]) / 26.0 for k in range(4)]
        if abs(r3[-1] - r3[-2]) < 1e-10 * (1.0 + abs(r3[-1])):
            return r3[-1]
        t0 /= 81.0
    return r3[-1]


def first_variation_suite(space: Space, n: int, seed: int, tol: float = 1e-7) -> Report:
    """First-variation formula against an independent finite-difference
    derivative of the distance and against the tangent scalar product."""
    rng = make_rng(seed)
    worst_fd = -math.inf
    worst_inner = -math.inf
    for _ in range(n):
        x = space.sample_point(rng)
        v = _random_vector(space, rng, x)
        y = _sample_distinct(space, rng, x)
        d0 = space.dist(x, y)
        fv = first_variation(v, y)
        slope = _fd_slope(lambda t: space.dist(v.at(t), y), d0, 0.05 * _step_bound(v))
        worst_fd = max(worst_fd, abs(fv + d0 * slope))
        eta = TangentVector(space, x, y, 1.0)
        worst_inner = max(worst_inner, abs(fv - scalar_product(v, eta)))
    rep = Report("verify-first-variation", meta={"space": space.space_id, "samples": n})
    rep.add("first-variation-vs-fd", worst_fd, tol)
    rep.add("first-variation-vs-inner", worst_inner, tol)
    return rep


def curves_suite(space: Space, n: int, seed: int, tol: float = 1e-6,
                 angle_tol: float = 1e-4) -> Report:
    """Antipodality of one-sided derivatives at non-knot points of smooth
    sampled curves, the forward angle condition, and a corner control."""
    rng = make_rng(seed)
    worst_anti = -math.inf
    worst_angle = -math.inf
    done = 0
    while done < n:
        p = space.sample_point(rng)
        q = _sample_distinct(space, rng, p, min_d=0.1)
        if space.dist(p, q) > 0.5 * space.cat_radius(p):
            continue
        knots = sorted({0.0, 1.0, *(float(rng.uniform(0.1, 0.9)) for _ in range(3))})
        c = SampledCurve(space, knots, [space.geodesic(p, q, t) for t in knots])
        t = float(rng.uniform(0.05, 0.95))
        if c.is_knot(t):
            continue
        worst_anti = max(worst_anti, check_antipodality(c, t))
        worst_angle = max(worst_angle, forward_angle_defect(c, t))
        done += 1
    # corner control: a backtracking knot must show a large defect
    p = space.sample_point(rng)
    q = _sample_distinct(space, rng, p, min_d=0.1)
    corner = SampledCurve(space, [0.0, 0.5, 1.0], [p, q, p])
    corner_defect = check_antipodality(corner, 0.5, allow_knot=True)
    rep = Report("verify-curves", meta={"space": space.space_id, "samples": n,
                                        "corner_defect": corner_defect})
    rep.add("antipodality", worst_anti, tol)
    rep.add("forward-angle", worst_angle, angle_tol)
    rep.add("corner-detected", 0.1 - corner_defect, 0.0)
    return rep


def barycenter_suite(space: Space, mu: DiscreteMeasure, tol: float = 1e-8,
                     n_probes: int = 100, seed: int = 0) -> Report:
    result = solve_barycenter(space, mu, tol)
    rng = make_rng(seed)
    probes = [space.sample_point(rng) for _ in range(n_probes)]
    var_slack = variance_certificate(space, mu, result.point, probes)
    # independent probe: the slow generic solver must not beat the result
    probe = inductive_means(space, mu, tol=1e-4, seed=seed + 1)
    opt_slack = frechet_objective(space, mu, result.point) - frechet_objective(space, mu, probe.point)
    rep = Report("barycenter", meta={
        "point": space.point_to_json(result.point),
        "gap_bound": result.gap_bound,
        "iterations": result.iterations,
    })
    rep.add("variance-certificate", -var_slack, 1e-9)
    rep.add("solver-optimality", opt_slack, 1e-12)
    return rep


def superpose_suite(b: EdgeFlow) -> Report:
    dec = superpose(b)
    trav = dec.edge_traversals()
    mass_slack = max(
        (abs(sum(w for w, _, _ in trav[i]) - abs(fl)) for i, fl in enumerate(b.flow)),
        default=0.0,
    )
    bal = dec.endpoint_balance()
    div = b.divergence()
    boundary_slack = max(abs(bal[node] - div[node]) for node in b.graph.nodes)
    rep = Report("superpose", meta={
        "paths": [[list(seq), w] for seq, w in dec.paths],
        "cycles": [[list(seq), w] for seq, w in dec.cycles],
    })
    rep.add("edge-mass-equality", mass_slack, 1e-12)
    rep.add("boundary-match", boundary_slack, 1e-12)
    return rep


def embed_suite(b: EdgeFlow, grid: int = 9, seed: int = 0, landmarks: int = 20,
                dist_tol: float = 1e-7, norm_tol: float = 1e-9, tie_tol: float = 1e-7) -> Report:
    section = build_embedding(b, grid)
    slacks = section_identity_slacks(b, section, landmarks, seed)
    other = build_embedding(b, grid, tie_break="revlex")
    tie_slack = max(
        (fibre_distance(section.vectors[x], other.vectors[x]) for x in section.grid),
        default=0.0,
    )
    rep = Report("embed", meta={"grid": grid, "edges": len(b.graph.edges)})
    rep.add("distance-differential", slacks["dist_slack"], dist_tol)
    rep.add("pointwise-norm", slacks["norm_slack"], norm_tol)
    rep.add("halfline-rigidity", section.rigidity_defect, 1e-9)
    rep.add("tie-break-independence", tie_slack, tie_tol)
    return rep


def hilbert_suite(graph, flows=None, n: int = 20, seed: int = 0, grid: int = 9,
                  rel_tol: float = 1e-8, pointwise_tol: float = 1e-7) -> Report:
    if flows is None:
        rng = make_rng(seed)
        flows = [
            EdgeFlow(graph, tuple(rng.uniform(-1.0, 1.0, size=len(graph.edges))))
            for _ in range(2 * n)
        ]
    out = hilbertianity_report(flows, grid, rel_tol, pairing="sequential")
    lin = verify_linearity(flows[0], flows[1], grid)
    rep = Report("hilbert", meta={"pairs": out["pairs"], "histogram": out["histogram"]})
    rep.add("norm-parallelogram", out["max_rel_slack"], rel_tol)
    rep.add("integrated-parallelogram", out["max_rel_slack_pointwise"], rel_tol)
    rep.add("fibre-additivity", lin["additivity"], pointwise_tol)
    rep.add("fibre-isometry", lin["isometry"], pointwise_tol)
    rep.add("fibre-parallelogram", lin["parallelogram"], pointwise_tol)
    return rep


def _lip_at_zero(f, depth: int = 40) -> float:
    """Pointwise Lipschitz slope at 0 as the sup of dyadic difference quotients."""
    best = 0.0
    for k in range(depth):
        h = 2.0 ** (-k)
        best = max(best, abs(f(h) - f(0.0)) / h, abs(f(-h) - f(0.0)) / h)
    return best


def lip_counterexample() -> Report:
    """On the real line with a single-point reference measure, the pointwise
    Lipschitz slope violates the parallelogram law that derivations satisfy:
    with f = |x| and g = x the slopes at 0 are 1, 1, 2, 2, giving sides
    8 vs 4, while every derivation there annihilates both functions."""
    f = abs
    g = lambda x: x
    lip_f = _lip_at_zero(f)
    lip_g = _lip_at_zero(g)
    lip_sum = _lip_at_zero(lambda x: f(x) + g(x))
    lip_diff = _lip_at_zero(lambda x: f(x) - g(x))
    side_lhs = lip_sum ** 2 + lip_diff ** 2
    side_rhs = 2.0 * (lip_f ** 2 + lip_g ** 2)
    rep = Report("counterexample", meta={
        "lip_f": lip_f, "lip_g": lip_g, "lip_sum": lip_sum, "lip_diff": lip_diff,
        "parallelogram_sides": [side_lhs, side_rhs],
        "parallelogram_gap": side_lhs - side_rhs,
        "derivation_sides": [0.0, 0.0],
    })
    rep.add("lip-values", max(abs(lip_f - 1.0), abs(lip_g - 1.0),
                              abs(lip_sum - 2.0), abs(lip_diff - 2.0)), 0.0)
    rep.add("lip-parallelogram-sides", abs(side_lhs - 8.0) + abs(side_rhs - 4.0), 0.0)
    rep.add("lip-law-violated", 4.0 - abs(side_lhs - side_rhs), 0.0)
    return rep


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------

def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _load_space(path: str) -> Space:
    try:
        return space_from_json(_load_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad space descriptor in {path}: {exc}") from exc


def _load_graph(path: str):
    try:
        return graph_from_json(_load_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad graph descriptor in {path}: {exc}") from exc


def _load_flow(path: str, graph) -> EdgeFlow:
    try:
        return flow_from_json(_load_json(path), graph)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad flow descriptor in {path}: {exc}") from exc


def _load_measure(space: Space, path: str) -> DiscreteMeasure:
    obj = _load_json(path)
    try:
        return DiscreteMeasure(tuple(
            (space.point_from_json(p), float(w)) for p, w in obj["atoms"]
        ))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad measure in {path}: {exc}") from exc


def _emit(report: Report, out) -> int:
    sys.stdout.write(report.json_text())
    if out:
        report.write(out)
    return 0 if report.passed else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catcalc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run a verification suite on a space")
    vsub = verify.add_subparsers(dest="suite", required=True)
    for name, default_n in (("cat", 1000), ("angles", 50), ("cone-calc", 200), ("curves", 50)):
        p = vsub.add_parser(name)
        p.add_argument("--space", required=True)
        p.add_argument("--n", type=int, default=default_n)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--out", default=None)
        if name == "cat":
            p.add_argument("--kappa", type=float, default=None)

    p = sub.add_parser("barycenter")
    p.add_argument("--space", required=True)
    p.add_argument("--measure", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("superpose")
    p.add_argument("--graph", required=True)
    p.add_argument("--flow", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("embed")
    p.add_argument("--graph", required=True)
    p.add_argument("--flow", required=True)
    p.add_argument("--grid", type=int, default=9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("hilbert")
    p.add_argument("--graph", required=True)
    p.add_argument("--flows", default=None, help="directory of flow JSON files")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=9)
    p.add_argument("--out", default=None)

    p = sub.add_parser("counterexample")
    p.add_argument("--out", default=None)
    return parser


def _run(args) -> int:
    if args.command == "verify":
        space = _load_space(args.space)
        if args.suite == "cat":
            kappa = args.kappa if args.kappa is not None else space.curvature_bound()
            rep = cat_suite(space, kappa, args.n, args.seed, args.tol or 1e-9)
        elif args.suite == "angles":
            rep = angle_suite(space, args.n, args.seed, args.tol or 1e-9)
        elif args.suite == "cone-calc":
            rep = cone_calc_suite(space, args.n, args.seed, args.tol or 1e-8)
        else:
            rep = curves_suite(space, args.n, args.seed, args.tol or 1e-6)
        return _emit(rep, args.out)
    if args.command == "barycenter":
        space = _load_space(args.space)
        mu = _load_measure(space, args.measure)
        return _emit(barycenter_suite(space, mu, args.tol, args.n, args.seed), args.out)
    if args.command == "superpose":
        graph = _load_graph(args.graph)
        return _emit(superpose_suite(_load_flow(args.flow, graph)), args.out)
    if args.command == "embed":
        graph = _load_graph(args.graph)
        b = _load_flow(args.flow, graph)
        return _emit(embed_suite(b, args.grid, args.seed), args.out)
    if args.command == "hilbert":
        graph = _load_graph(args.graph)
        flows = None
        if args.flows:
            paths = sorted(Path(args.flows).glob("*.json"))
            if not paths:
                raise ConfigError(f"no flow files found in {args.flows}")
            flows = [_load_flow(str(fp), graph) for fp in paths]
        return _emit(hilbert_suite(graph, flows, args.n, args.seed, args.grid), args.out)
    if args.command == "counterexample":
        return _emit(lip_counterexample(), args.out)
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CatCalcError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
