"""Embedding of derivations into the tangent bundle of a metric graph.

Pipeline: decompose the flow into orientation-aligned paths, collect the
path right-derivatives crossing each grid point into a fibre measure on the
local tangent cone, and rescale its barycenter by the crossing density.
The resulting section reproduces the derivation's action on distance
functions and its pointwise norm, and is additive in the flow; integrating
the fibrewise parallelogram identity yields the Hilbert property of the
derivation norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .barycenter import DiscreteMeasure, rigidity_check
from .errors import RigidityViolation
from .spaces import EuclideanCone, Point
from .tangent import TangentVector, d_dist, exact_cone_metric, oplus, zero_vector
from .transport import EdgeFlow, MetricGraph, superpose

DEFAULT_GRID = 9

# fibre template: cone over the two edge directions at angle pi
_FIBRE_BASE = [[0.0, math.pi], [math.pi, 0.0]]


@dataclass(frozen=True)
class FibreMeasure:
    """Atoms (signed speed along the edge orientation, weight) at one point,
    together with the crossing-density factor dnu/dmu."""

    base: Point
    atoms: tuple
    dnu_dmu: float

    @property
    def mass(self) -> float:
        return sum(w for _, w in self.atoms)


@dataclass
class TangentSection:
    graph: MetricGraph
    grid: list  # of Point
    vectors: dict  # Point -> TangentVector
    fibres: dict  # Point -> FibreMeasure
    rigidity_defect: float = 0.0

    def norm_sq_mu(self) -> float:
        """Integral of |v|^2 against mu over the grid (exact: |v| is constant
        on each edge)."""
        total = 0.0
        per_edge: dict = {}
        for x in self.grid:
            per_edge.setdefault(x.data[1], []).append(self.vectors[x].norm)
        for i, norms in per_edge.items():
            total += float(np.mean(np.square(norms))) * self.graph.mu_edge(i)
        return total


def edge_grid(graph: MetricGraph, n: int = DEFAULT_GRID) -> list:
    """Interior sample points: n per edge, endpoints excluded by a margin."""
    pts = []
    for i, (_, _, length) in enumerate(graph.edges):
        margin = length / 100.0
        for off in np.linspace(margin, length - margin, n):
            pts.append(Point(graph.space_id, ("edge", i, float(off))))
    return pts


def distance_slope(graph: MetricGraph, y: Point, x: Point):
    """Slope of dist(., y) along the edge orientation at x, or None at kinks."""
    _, i, off = x.data
    length = graph.edges[i][2]
    h = min(off, length - off) / 64.0
    d0 = graph.dist(x, y)
    dp = graph.dist(Point(graph.space_id, ("edge", i, off + h)), y)
    dm = graph.dist(Point(graph.space_id, ("edge", i, off - h)), y)
    s_plus = (dp - d0) / h
    s_minus = (d0 - dm) / h
    if abs(s_plus - s_minus) > 1e-9:
        return None
    return 0.5 * (s_plus + s_minus)


def _fibre_vector(graph: MetricGraph, x: Point, signed_value: float) -> TangentVector:
    if signed_value == 0.0:
        return zero_vector(graph, x)
    _, i, off = x.data
    length = graph.edges[i][2]
    sign = 1 if signed_value > 0 else -1
    room = (length - off) if sign > 0 else off
    step = room / 2.0
    target = graph.point_along(x, ("ray", i, sign), step)
    return TangentVector(graph, x, target, abs(signed_value) / step)


def build_embedding(
    b: EdgeFlow,
    grid: int = DEFAULT_GRID,
    tie_break: str = "lex",
    rigidity_tol: float = 1e-9,
    verify: bool = False,
    landmarks: int = 20,
    seed: int = 0,
) -> TangentSection:
    """Map a derivation to a tangent-vector field via path superposition.

    With verify=True the two defining identities are re-checked numerically
    at every grid point: the action on distance functions (tolerance 1e-7)
    and the pointwise norm (tolerance 1e-9).
    """
    graph = b.graph
    decomposition = superpose(b, tie_break=tie_break)
    traversals = decomposition.edge_traversals()
    points = edge_grid(graph, grid)
    vectors, fibres = {}, {}
    worst_defect = 0.0
    for x in points:
        i = x.data[1]
        trav = traversals[i]
        if not trav:
            vectors[x] = zero_vector(graph, x)
            fibres[x] = FibreMeasure(x, (), 0.0)
            continue
        # each crossing path contributes its right derivative (signed speed)
        # with weight = path weight per unit length
        atoms = tuple((sign * speed, w / speed) for w, sign, speed in trav)
        dnu_dmu = sum(w for _, w in atoms) / graph.density[i]
        fibre = FibreMeasure(x, atoms, dnu_dmu)
        cone = EuclideanCone(_FIBRE_BASE)
        mu = DiscreteMeasure(tuple((cone.ray_point(abs(s), 0 if s > 0 else 1), w) for s, w in atoms))
        rig = rigidity_check(cone, mu, cone.apex(), tol=rigidity_tol)
        if not rig["triggered"] or rig["halfline_defect"] > rigidity_tol:
            raise RigidityViolation(
                f"fibre measure at {x} is not concentrated on a half-line "
                f"(defect {rig['halfline_defect']:.3e})"
            )
        worst_defect = max(worst_defect, rig["halfline_defect"])
        bar = rig["barycenter"]
        r, ray = cone._unpack(bar)
        signed_bar = r if ray in (None, 0) else -r
        vectors[x] = _fibre_vector(graph, x, dnu_dmu * signed_bar)
        fibres[x] = fibre
    section = TangentSection(graph, points, vectors, fibres, worst_defect)
    if verify:
        _verify_section(b, section, landmarks=landmarks, seed=seed)
    return section


def _landmark_points(graph: MetricGraph, n: int, seed: int) -> list:
    pts = [graph.node_point(m) for m in graph.nodes]
    rng = np.random.Generator(np.random.Philox(seed))
    while len(pts) < n:
        pts.append(graph.sample_point(rng))
    return pts[:n]


def section_identity_slacks(b: EdgeFlow, section: TangentSection, landmarks: int = 20, seed: int = 0) -> dict:
    """Worst deviations of the two defining identities over the grid.

    norm_slack: | |v(x)| - |b|(x) |; dist_slack: relative deviation of the
    distance differential d_x dist_y(v(x)) from the derivation applied to
    dist_y, over the landmark points (skipping kinks of dist_y at x).
    """
    graph = b.graph
    marks = _landmark_points(graph, landmarks, seed)
    norm_slack = 0.0
    dist_slack = 0.0
    for x in section.grid:
        v = section.vectors[x]
        i = x.data[1]
        norm_expected = abs(b.flow[i]) / graph.density[i]
        norm_slack = max(norm_slack, abs(v.norm - norm_expected) / (1.0 + norm_expected))
        for y in marks:
            slope = distance_slope(graph, y, x)
            if slope is None or graph.dist(x, y) < 1e-9:
                continue
            expected = b.flow[i] / graph.density[i] * slope
            got = d_dist(y, x, v)
            dist_slack = max(dist_slack, abs(got - expected) / (1.0 + abs(expected)))
    return {"norm_slack": norm_slack, "dist_slack": dist_slack}


def _verify_section(b: EdgeFlow, section: TangentSection, landmarks: int, seed: int,
                    dist_tol: float = 1e-7, norm_tol: float = 1e-9):
    slacks = section_identity_slacks(b, section, landmarks, seed)
    if slacks["norm_slack"] > norm_tol:
        raise RigidityViolation(
            f"norm identity violated: worst slack {slacks['norm_slack']:.3e}"
        )
    if slacks["dist_slack"] > dist_tol:
        raise RigidityViolation(
            f"distance-differential identity violated: worst slack {slacks['dist_slack']:.3e}"
        )


def fibre_distance(v: TangentVector, w: TangentVector) -> float:
    d = exact_cone_metric(v, w)
    assert d is not None
    return d


def verify_linearity(b1: EdgeFlow, b2: EdgeFlow, grid: int = DEFAULT_GRID, tol: float = 1e-7) -> dict:
    """Pointwise additivity, isometry and parallelogram identities of the
    embedding; returns per-identity worst slacks."""
    if b1.graph is not b2.graph:
        raise ValueError("flows must live on the same graph")
    graph = b1.graph
    s1 = build_embedding(b1, grid)
    s2 = build_embedding(b2, grid)
    s_sum = build_embedding(b1 + b2, grid)
    s_diff = build_embedding(b1 - b2, grid)
    slacks = {"additivity": 0.0, "isometry": 0.0, "parallelogram": 0.0}
    for x in s1.grid:
        v1, v2 = s1.vectors[x], s2.vectors[x]
        v_sum, v_diff = s_sum.vectors[x], s_diff.vectors[x]
        slacks["additivity"] = max(
            slacks["additivity"], fibre_distance(v_sum, oplus(v1, v2))
        )
        i = x.data[1]
        slacks["isometry"] = max(
            slacks["isometry"],
            abs(fibre_distance(v1, v2) - abs(b1.flow[i] - b2.flow[i]) / graph.density[i]),
        )
        para = v_sum.norm ** 2 + v_diff.norm ** 2 - 2.0 * (v1.norm ** 2 + v2.norm ** 2)
        slacks["parallelogram"] = max(slacks["parallelogram"], abs(para))
    slacks["pass"] = all(v <= tol for k, v in slacks.items() if k != "pass")
    return slacks


def hilbertianity_report(
    derivation_samples, grid: int = DEFAULT_GRID, rel_tol: float = 1e-8, pairing: str = "all"
) -> dict:
    """Parallelogram law of the L2 derivation norm over sample pairs.

    pairing "all" checks every pair of samples, "sequential" consumes the
    samples two at a time.  Checks both the direct norm computation and its
    integrated pointwise counterpart from the embedded sections; returns the
    slack histogram.
    """
    from .transport import derivation_norm_22

    flows = list(derivation_samples)
    if pairing == "all":
        pairs = [(a, c) for a in range(len(flows)) for c in range(a + 1, len(flows))]
    elif pairing == "sequential":
        pairs = [(a, a + 1) for a in range(0, len(flows) - 1, 2)]
    else:
        raise ValueError(f"unknown pairing {pairing!r}")
    slacks = []
    pointwise = []
    for a, c in pairs:
        b1, b2 = flows[a], flows[c]
        n_sum = derivation_norm_22(b1 + b2)["l2_norm"] ** 2
        n_diff = derivation_norm_22(b1 - b2)["l2_norm"] ** 2
        n1 = derivation_norm_22(b1)["l2_norm"] ** 2
        n2 = derivation_norm_22(b2)["l2_norm"] ** 2
        scale = max(n_sum + n_diff, 2.0 * (n1 + n2), 1e-30)
        slacks.append(abs(n_sum + n_diff - 2.0 * (n1 + n2)) / scale)
        # integrated pointwise identity from the sections
        s_sum = build_embedding(b1 + b2, grid)
        s_diff = build_embedding(b1 - b2, grid)
        s1 = build_embedding(b1, grid)
        s2 = build_embedding(b2, grid)
        lhs = s_sum.norm_sq_mu() + s_diff.norm_sq_mu()
        rhs = 2.0 * (s1.norm_sq_mu() + s2.norm_sq_mu())
        pointwise.append(abs(lhs - rhs) / max(lhs, rhs, 1e-30))
    worst = max(slacks) if slacks else 0.0
    worst_pw = max(pointwise) if pointwise else 0.0
    return {
        "pairs": len(slacks),
        "max_rel_slack": worst,
        "max_rel_slack_pointwise": worst_pw,
        "histogram": np.histogram(slacks, bins=10, range=(0.0, max(worst, 1e-12)))[0].tolist(),
        "pass": worst <= rel_tol and worst_pw <= rel_tol,
    }
