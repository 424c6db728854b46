"""Barycenters (Frechet means) of finitely supported measures on CAT(0)
instances, with variance and Jensen certificates and a half-line rigidity
detector.

The squared-distance objective is 2-strongly convex on CAT(0) spaces, so a
candidate's distance to the true minimizer is controlled by its objective
gap; solvers below drive that gap to solver precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence, NotCat0, NotConvex
from .spaces import EuclideanCone, ModelSpace, Point, Space, _GraphMetric


@dataclass(frozen=True)
class DiscreteMeasure:
    atoms: tuple  # of (Point, weight)

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("measure needs at least one atom")
        for _, w in self.atoms:
            if w <= 0.0:
                raise ValueError("weights must be positive")
        object.__setattr__(self, "atoms", tuple((p, float(w)) for p, w in self.atoms))

    @property
    def mass(self) -> float:
        return sum(w for _, w in self.atoms)

    def normalized(self) -> "DiscreteMeasure":
        m = self.mass
        return DiscreteMeasure(tuple((p, w / m) for p, w in self.atoms))


@dataclass(frozen=True)
class BarycenterResult:
    point: Point
    gap_bound: float
    iterations: int


def frechet_objective(space: Space, mu: DiscreteMeasure, p: Point) -> float:
    return sum(w * space.dist(p, x) ** 2 for x, w in mu.normalized().atoms)


def _solve_euclidean(space: ModelSpace, mu: DiscreteMeasure) -> BarycenterResult:
    coords = np.array([p.data for p, _ in mu.atoms])
    weights = np.array([w for _, w in mu.atoms])
    mean = (weights[:, None] * coords).sum(axis=0) / weights.sum()
    return BarycenterResult(Point(space.space_id, tuple(mean.tolist())), 0.0, 1)


def _solve_graph(space: _GraphMetric, mu: DiscreteMeasure) -> BarycenterResult:
    """Exact minimization: on each edge the objective is piecewise quadratic
    in the offset, with one active linear distance branch per atom between
    breakpoints."""
    mu = mu.normalized()
    best = None
    for i, (u, v, length) in enumerate(space.edges):
        # candidate distance branches d(off) = s*off + c per atom
        atom_branches = []
        for x, w in mu.atoms:
            branches = [
                (1.0, space.dist(space.node_point(u), x)),
                (-1.0, length + space.dist(space.node_point(v), x)),
            ]
            if x.data[0] == "edge" and x.data[1] == i:
                off_j = x.data[2]
                branches += [(1.0, -off_j), (-1.0, off_j)]
            atom_branches.append((w, branches))
        cuts = {0.0, length}
        for _, branches in atom_branches:
            for (s1, c1) in branches:
                for (s2, c2) in branches:
                    if s1 != s2:
                        off = (c2 - c1) / (s1 - s2)
                        if 0.0 < off < length:
                            cuts.add(off)
        grid = sorted(cuts)
        for lo, hi in zip(grid, grid[1:]):
            mid = 0.5 * (lo + hi)
            lin = 0.0  # coefficient of off in F; quadratic coefficient is 1
            const = 0.0
            for w, branches in atom_branches:
                s, c = min(branches, key=lambda b: b[0] * mid + b[1])
                lin += 2.0 * w * s * c
                const += w * c * c
            off = min(max(-lin / 2.0, lo), hi)
            val = off * off + lin * off + const
            if best is None or val < best[0] - 1e-15:
                best = (val, space._canon(("edge", i, off)))
    return BarycenterResult(best[1], 0.0, len(space.edges))


def _solve_cone(space: EuclideanCone, mu: DiscreteMeasure) -> BarycenterResult:
    """On each ray the squared cone distance is an exact quadratic in the
    radius, so the per-ray minimizer is closed form."""
    mu = mu.normalized()
    best = None
    for i in range(space.n_base):
        proj = 0.0
        const = 0.0
        for x, w in mu.atoms:
            r_j, j = space._unpack(x)
            cos_t = 1.0 if (j is None or j == i) else math.cos(min(space.base[i, j], math.pi))
            proj += w * r_j * cos_t
            const += w * r_j * r_j
        r = max(proj, 0.0)
        val = r * r - 2.0 * r * proj + const
        if best is None or val < best[0] - 1e-15:
            best = (val, space.ray_point(r, i))
    return BarycenterResult(best[1], 0.0, space.n_base)


def _solve_karcher(space: ModelSpace, mu: DiscreteMeasure, tol: float, max_iters: int = 200) -> BarycenterResult:
    """Fixed-point iteration b <- exp_b(mean of log_b(x_i)); converges on
    Hadamard model spaces."""
    mu = mu.normalized()
    b = mu.atoms[0][0]
    for it in range(max_iters):
        m = np.zeros(3)
        for x, w in mu.atoms:
            d = space.dist(b, x)
            if d > 0.0:
                m = m + w * d * space.initial_velocity(b, x)
        g = space._riem_norm(m)
        if g < tol * 1e-3:
            return BarycenterResult(b, g, it + 1)
        b = space.exp_velocity(b, m / g, g)
    raise NonConvergence("Karcher iteration stalled before reaching tolerance")


def solve_barycenter(space: Space, mu: DiscreteMeasure, tol: float = 1e-8) -> BarycenterResult:
    if space.curvature_bound() > 0.0:
        raise NotCat0("barycenters are only solved on CAT(0) instances")
    if isinstance(space, ModelSpace):
        if space.kappa == 0.0:
            return _solve_euclidean(space, mu)
        return _solve_karcher(space, mu, tol)
    if isinstance(space, EuclideanCone):
        return _solve_cone(space, mu)
    if isinstance(space, _GraphMetric):
        return _solve_graph(space, mu)
    return inductive_means(space, mu, tol)


def inductive_means(space: Space, mu: DiscreteMeasure, tol: float, seed: int = 0, max_passes: int = 200) -> BarycenterResult:
    """Sturm's inductive-mean scheme over shuffled cyclic passes.

    Generic but slowly convergent; used as a solver of last resort and as an
    independent consistency probe for the exact solvers.
    """
    mu = mu.normalized()
    rng = np.random.default_rng(seed)
    atoms = list(mu.atoms)
    b = atoms[0][0]
    s = 0.0
    prev_obj = frechet_objective(space, mu, b)
    passes = 0
    for passes in range(1, max_passes + 1):
        order = rng.permutation(len(atoms))
        for k in order:
            x, w = atoms[k]
            s += w
            b = space.geodesic(b, x, w / s)
        obj = frechet_objective(space, mu, b)
        if prev_obj - obj < 1e-12 * (1.0 + abs(obj)):
            break
        prev_obj = obj
    return BarycenterResult(b, math.sqrt(max(prev_obj - obj, 0.0) + tol ** 2), passes)


def variance_certificate(space: Space, mu: DiscreteMeasure, bar: Point, probes) -> float:
    """Minimum slack of the variance inequality over the probe points."""
    mu = mu.normalized()
    f_bar = frechet_objective(space, mu, bar)
    worst = math.inf
    for p in probes:
        slack = frechet_objective(space, mu, p) - f_bar - space.dist(p, bar) ** 2
        worst = min(worst, slack)
    return worst


def jensen_check(space: Space, mu: DiscreteMeasure, phi, bar: Point, convexity_slack: float = 1e-9) -> float:
    """Slack of Jensen's inequality; phi must be geodesically convex."""
    mu = mu.normalized()
    # sanity-check convexity along geodesics between atoms
    for (x, _), (y, _) in zip(mu.atoms, mu.atoms[1:]):
        for t in (0.25, 0.5, 0.75):
            mid = space.geodesic(x, y, t)
            if phi(mid) > (1.0 - t) * phi(x) + t * phi(y) + convexity_slack:
                raise NotConvex("phi fails midpoint convexity along an atom geodesic")
    return sum(w * phi(x) for x, w in mu.atoms) - phi(bar)


def rigidity_check(space: Space, mu: DiscreteMeasure, p: Point, tol: float = 1e-9) -> dict:
    """Detects the equality case forcing the measure onto a half-line from p.

    If the barycenter is at least the mean distance away from p, every atom
    must be aligned with the segment through p and the barycenter; on spaces
    non-branching from p the atoms must in fact lie on a single ray, checked
    via pairwise additivity of distances.
    """
    mu = mu.normalized()
    bar = solve_barycenter(space, mu).point
    mean_dist = sum(w * space.dist(x, p) for x, w in mu.atoms)
    d_bp = space.dist(bar, p)
    triggered = d_bp >= mean_dist - tol
    defect = 0.0
    if triggered:
        for x, _ in mu.atoms:
            defect = max(defect, abs(space.dist(x, bar) - abs(space.dist(x, p) - d_bp)))
        if space.is_nonbranching_from(p):
            pts = sorted((x for x, _ in mu.atoms), key=lambda x: space.dist(p, x))
            for a, b in zip(pts, pts[1:]):
                defect = max(
                    defect,
                    abs(space.dist(a, b) - (space.dist(p, b) - space.dist(p, a))),
                )
    return {"triggered": bool(triggered), "halfline_defect": defect, "barycenter": bar}
