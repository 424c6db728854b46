"""Statistical verification of triangle and angle comparison inequalities.

Each verifier samples configurations in a space instance, evaluates the
relevant comparison quantity in the model plane and reports the worst signed
slack.  A positive slack beyond tolerance counts as a violation, so these
harnesses can genuinely fail (and do, on the negative controls).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import model_spaces as ms
from .errors import SamplingFailed
from .spaces import Point, Space


def make_rng(seed: int) -> np.random.Generator:
    # counter-based generator: sample batches can be split without
    # changing the stream
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class ComparisonReport:
    space_id: str
    samples: int
    violations: int
    worst_slack: float
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def merge(self, other: "ComparisonReport") -> "ComparisonReport":
        return ComparisonReport(
            space_id=self.space_id,
            samples=self.samples + other.samples,
            violations=self.violations + other.violations,
            worst_slack=max(self.worst_slack, other.worst_slack),
            tolerance=self.tolerance,
            details={**self.details, **other.details},
        )

    def to_json(self) -> dict:
        return {
            "space": self.space_id,
            "samples": self.samples,
            "violations": self.violations,
            "worst_slack": self.worst_slack,
            "tolerance": self.tolerance,
            "pass": self.passed,
            **self.details,
        }


def _sample_triangle(space: Space, kappa: float, rng: np.random.Generator, max_tries: int = 200):
    """Three points with perimeter < 2 D_kappa and positive side lengths."""
    diam2 = 2.0 * ms.d_kappa_diam(kappa)
    for _ in range(max_tries):
        a, b, c = (space.sample_point(rng) for _ in range(3))
        d_ab, d_ac, d_bc = space.dist(a, b), space.dist(a, c), space.dist(b, c)
        if min(d_ab, d_ac, d_bc) < 1e-6:
            continue
        if d_ab + d_ac + d_bc >= diam2 * 0.999:
            continue
        return a, b, c, d_ab, d_ac, d_bc
    raise SamplingFailed("could not sample an admissible triangle")


def verify_cat(space: Space, kappa: float, n_samples: int, seed: int, tol: float = 1e-9) -> ComparisonReport:
    """Four-point triangle comparison against the model plane of curvature kappa.

    Samples triangles (a, b, c) plus an intermediate point on the side bc and
    checks d(a, d) <= model distance between the comparison points, up to tol.
    """
    rng = make_rng(seed)
    violations = 0
    worst = -math.inf
    for _ in range(n_samples):
        a, b, c, d_ab, d_ac, d_bc = _sample_triangle(space, kappa, rng)
        t = rng.uniform(0.05, 0.95)
        d = space.geodesic(b, c, t)
        tri = ms.build_comparison_triangle(kappa, d_ab, d_ac, d_bc)
        d_bar = ms.comparison_point(tri, t * d_bc, (1.0 - t) * d_bc)
        slack = space.dist(a, d) - ms.model_distance(tri.a, d_bar)
        worst = max(worst, slack)
        if slack > tol:
            violations += 1
    return ComparisonReport(space.space_id, n_samples, violations, worst, tol)


def verify_angle_monotonicity(
    space: Space,
    x: Point,
    gamma_target: Point,
    eta_target: Point,
    t_grid,
    s_grid,
    tol: float = 1e-9,
) -> ComparisonReport:
    """Comparison angles at x are non-decreasing along both geodesic parameters."""
    kappa = space.curvature_bound()
    t_grid = np.asarray(t_grid, dtype=float)
    s_grid = np.asarray(s_grid, dtype=float)
    if np.any(t_grid <= 0.0) or np.any(s_grid <= 0.0):
        raise ValueError("grids must be positive (the angle is undefined at the vertex)")
    angles = np.empty((len(t_grid), len(s_grid)))
    for i, t in enumerate(t_grid):
        gt = space.geodesic(x, gamma_target, t)
        for j, s in enumerate(s_grid):
            hs = space.geodesic(x, eta_target, s)
            angles[i, j] = ms.comparison_angle(
                kappa, space.dist(x, gt), space.dist(x, hs), space.dist(gt, hs)
            )
    slack_t = float(np.max(angles[:-1, :] - angles[1:, :])) if len(t_grid) > 1 else 0.0
    slack_s = float(np.max(angles[:, :-1] - angles[:, 1:])) if len(s_grid) > 1 else 0.0
    worst = max(slack_t, slack_s)
    return ComparisonReport(
        space.space_id,
        samples=angles.size,
        violations=int(worst > tol),
        worst_slack=worst,
        tolerance=tol,
        details={"max_angle": float(angles.max()), "min_angle": float(angles.min())},
    )


def verify_kappa_independence(
    space: Space, x: Point, pairs, kappa1: float, kappa2: float, tol: float = 1e-9
) -> ComparisonReport:
    """Angle difference between two curvature parameters is O(d(x,y1) d(x,y2)).

    Fits the constant over the sample and reports it; violations count pairs
    whose angle difference exceeds the fitted bound (zero by construction, the
    interesting output is the fitted constant under shrinking samples).
    """
    if kappa1 < kappa2:
        raise ValueError("expected kappa1 >= kappa2")
    fitted = 0.0
    worst = 0.0
    n = 0
    for y1, y2 in pairs:
        d1, d2 = space.dist(x, y1), space.dist(x, y2)
        d12 = space.dist(y1, y2)
        n += 1
        if d1 < 1e-12 or d2 < 1e-12 or d12 < 1e-12:
            continue
        a1 = ms.comparison_angle(kappa1, d1, d2, d12)
        a2 = ms.comparison_angle(kappa2, d1, d2, d12)
        diff = abs(a1 - a2)
        worst = max(worst, diff)
        fitted = max(fitted, diff / (d1 * d2))
    return ComparisonReport(
        space.space_id,
        samples=n,
        violations=0,
        worst_slack=worst,
        tolerance=tol,
        details={"fitted_constant": fitted},
    )
