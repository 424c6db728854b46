import math

import numpy as np
import pytest

from catcalc.comparison import (
    make_rng,
    verify_angle_monotonicity,
    verify_cat,
    verify_kappa_independence,
)
from catcalc.spaces import EuclideanCone, MetricTree, ModelSpace, tripod


def test_verify_cat_euclidean_zero_violations():
    rep = verify_cat(ModelSpace(0.0), kappa=0.0, n_samples=300, seed=1)
    assert rep.violations == 0
    # flat case is the equality case of the comparison
    assert abs(rep.worst_slack) < 1e-9


def test_verify_cat_tripod_and_cone():
    rep = verify_cat(tripod(), kappa=0.0, n_samples=300, seed=2)
    assert rep.violations == 0
    cone = EuclideanCone([[0.0, math.pi, math.pi], [math.pi, 0.0, math.pi], [math.pi, math.pi, 0.0]])
    rep = verify_cat(cone, kappa=0.0, n_samples=300, seed=3)
    assert rep.violations == 0


def test_verify_cat_hyperbolic_against_zero():
    # hyperbolic triangles are thinner than Euclidean ones
    rep = verify_cat(ModelSpace(-1.0), kappa=0.0, n_samples=200, seed=4)
    assert rep.violations == 0
    assert rep.worst_slack < 0.0


def test_verify_cat_negative_control():
    # the sphere is not CAT(-1): comparison against kappa=-1 must fail
    rep = verify_cat(ModelSpace(1.0), kappa=-1.0, n_samples=200, seed=5)
    assert rep.violations > 0
    # and passes against its own curvature
    rep = verify_cat(ModelSpace(1.0), kappa=1.0, n_samples=200, seed=5)
    assert rep.violations == 0


def test_verify_cat_deterministic():
    a = verify_cat(ModelSpace(-1.0), kappa=0.0, n_samples=100, seed=42)
    b = verify_cat(ModelSpace(-1.0), kappa=0.0, n_samples=100, seed=42)
    assert a.worst_slack == b.worst_slack


def test_angle_monotonicity_euclidean_constant():
    e = ModelSpace(0.0)
    x = e.point_from_json([0.0, 0.0])
    g = e.point_from_json([1.0, 0.0])
    h = e.point_from_json([0.3, 0.8])
    grid = np.linspace(0.1, 1.0, 10)
    rep = verify_angle_monotonicity(e, x, g, h, grid, grid)
    assert rep.violations == 0
    assert abs(rep.details["max_angle"] - rep.details["min_angle"]) < 1e-12


def test_angle_monotonicity_tripod_pi():
    tp = tripod()
    rep = verify_angle_monotonicity(
        tp,
        tp.node_point("o"),
        tp.node_point("a"),
        tp.node_point("b"),
        np.linspace(0.1, 1.0, 5),
        np.linspace(0.1, 1.0, 5),
    )
    assert rep.violations == 0
    assert rep.details["min_angle"] == pytest.approx(math.pi, abs=1e-9)


def test_angle_monotonicity_hyperbolic_grid():
    s = ModelSpace(-1.0)
    rng = make_rng(17)
    x = s.sample_point(rng)
    g = s.sample_point(rng)
    h = s.sample_point(rng)
    grid = np.linspace(0.05, 1.0, 20)
    rep = verify_angle_monotonicity(s, x, g, h, grid, grid)
    assert rep.violations == 0


def test_kappa_independence():
    s = ModelSpace(1.0)
    x = s.origin()
    rng = make_rng(23)
    constants = []
    for scale in (0.1, 0.05, 0.025):
        pairs = []
        for _ in range(40):
            y1 = s.geodesic(x, s.sample_point(rng), scale)
            y2 = s.geodesic(x, s.sample_point(rng), scale)
            pairs.append((y1, y2))
        rep = verify_kappa_independence(s, x, pairs, kappa1=1.0, kappa2=0.0)
        constants.append(rep.details["fitted_constant"])
        assert rep.worst_slack <= rep.details["fitted_constant"] * (2.0 * scale) ** 2
    # fitted constant stays bounded as the configuration shrinks
    assert max(constants) < 1.0


def test_kappa_independence_degenerate():
    e = ModelSpace(0.0)
    x = e.point_from_json([0.0, 0.0])
    y = e.point_from_json([0.5, 0.0])
    rep = verify_kappa_independence(e, x, [(y, y)], kappa1=0.0, kappa2=0.0)
    assert rep.worst_slack == 0.0
