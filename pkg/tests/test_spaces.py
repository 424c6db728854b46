import math

import numpy as np
import pytest

from catcalc.errors import NonUniqueGeodesic, PreconditionFailed
from catcalc.spaces import (
    EuclideanCone,
    MetricTree,
    ModelSpace,
    certify_midpoint,
    contraction_ratio,
    space_from_json,
    tripod,
)


def euclid():
    return ModelSpace(0.0)


def test_tripod_path_metric():
    tp = tripod()
    p = tp.edge_point(0, 0.4)  # on leg o-a at 0.4 from hub
    q = tp.edge_point(1, 0.7)
    assert tp.dist(p, q) == pytest.approx(1.1, abs=1e-15)


def test_cone_distances():
    cone = EuclideanCone([[0.0, math.pi], [math.pi, 0.0]])
    assert cone.dist(cone.ray_point(1.0, 0), cone.ray_point(1.0, 1)) == pytest.approx(2.0, abs=1e-14)
    assert cone.dist(cone.ray_point(2.0, 0), cone.ray_point(3.0, 0)) == pytest.approx(1.0, abs=1e-15)
    assert cone.dist(cone.apex(), cone.ray_point(1.5, 1)) == pytest.approx(1.5)


def test_cone_geodesic_through_apex():
    cone = EuclideanCone([[0.0, math.pi], [math.pi, 0.0]])
    p, q = cone.ray_point(1.0, 0), cone.ray_point(1.0, 1)
    assert cone.midpoint(p, q) == cone.apex()
    g = cone.geodesic(p, q, 0.75)
    assert g.data == (0.5, 1)
    # sharp-angle cone refuses cross-ray geodesics
    narrow = EuclideanCone([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(NonUniqueGeodesic):
        narrow.geodesic(narrow.ray_point(1.0, 0), narrow.ray_point(1.0, 1), 0.5)


def test_midpoints():
    e = euclid()
    p = e.point_from_json([0.0, 0.0])
    q = e.point_from_json([2.0, 0.0])
    assert np.allclose(e.midpoint(p, q).data, (1.0, 0.0))

    tp = tripod()
    m = tp.midpoint(tp.edge_point(0, 0.8), tp.edge_point(1, 0.8))
    assert m == tp.node_point("o")

    s = ModelSpace(1.0)
    a = s.point_from_json([1.0, 0.0, 0.0])
    b = s.point_from_json([0.0, 1.0, 0.0])
    m = s.midpoint(a, b)
    r = 1.0 / math.sqrt(2.0)
    assert np.allclose(m.data, (r, r, 0.0), atol=1e-12)


def test_metric_axioms_and_geodesic_speed_sampled():
    rng = np.random.default_rng(5)
    cone = EuclideanCone([[0.0, math.pi, math.pi], [math.pi, 0.0, math.pi], [math.pi, math.pi, 0.0]])
    tree = MetricTree(
        ["a", "b", "c", "d", "e"],
        [("a", "b", 1.0), ("b", "c", 0.5), ("b", "d", 2.0), ("d", "e", 0.25)],
    )
    for space in (euclid(), ModelSpace(-1.0), ModelSpace(1.0), tree, cone, tripod()):
        pts = [space.sample_point(rng) for _ in range(12)]
        for p in pts:
            assert space.dist(p, p) == pytest.approx(0.0, abs=1e-12)
        for p in pts[:6]:
            for q in pts[:6]:
                assert space.dist(p, q) == pytest.approx(space.dist(q, p), abs=1e-12)
                for r in pts[:6]:
                    assert space.dist(p, q) <= space.dist(p, r) + space.dist(r, q) + 1e-12
        for p, q in zip(pts[:5], pts[5:10]):
            d = space.dist(p, q)
            for _ in range(20):
                t, s = rng.uniform(0.0, 1.0, size=2)
                gt = space.geodesic(p, q, t)
                gs = space.geodesic(p, q, s)
                assert space.dist(gt, gs) == pytest.approx(abs(t - s) * d, abs=1e-10)
            assert space.dist(space.geodesic(p, q, 0.0), p) == pytest.approx(0.0, abs=1e-10)
            assert space.dist(space.geodesic(p, q, 1.0), q) == pytest.approx(0.0, abs=1e-10)


def test_cat_radius_lipschitz():
    rng = np.random.default_rng(9)
    for space in (ModelSpace(1.0), ModelSpace(-1.0), tripod()):
        for _ in range(30):
            x, y = space.sample_point(rng), space.sample_point(rng)
            assert space.cat_radius(y) >= space.cat_radius(x) - space.dist(x, y) - 1e-12


def test_certify_midpoint():
    e = euclid()
    x = e.point_from_json([0.0, 0.0])
    y = e.point_from_json([2.0, 0.0])
    cert = certify_midpoint(e, x, y, e.point_from_json([1.0, 0.1]), eps=0.1)
    assert cert.bound == pytest.approx(0.1, abs=1e-12)
    assert cert.actual <= cert.bound + 1e-12

    # positive curvature constant
    s = ModelSpace(1.0)
    a = s.origin()
    b = s.exp_velocity(a, np.array([1.0, 0.0, 0.0]), 1.0)
    m2 = s.geodesic(a, b, 0.5 + 0.01)
    eps = math.sqrt(max(s.dist(a, m2) ** 2 - s.dist(a, b) ** 2 / 4.0, s.dist(b, m2) ** 2 - s.dist(a, b) ** 2 / 4.0))
    cert = certify_midpoint(s, a, b, m2, eps=eps * 1.0001)
    assert cert.bound == pytest.approx(eps * 1.0001 / math.sqrt(math.cos(0.5)), rel=1e-10)
    assert cert.actual <= cert.bound + 1e-9

    with pytest.raises(PreconditionFailed):
        certify_midpoint(e, x, y, e.point_from_json([0.0, 5.0]), eps=0.01)


def test_certify_midpoint_tripod_hub():
    tp = tripod()
    x = tp.edge_point(0, 0.5)
    y = tp.edge_point(1, 0.5)
    hub = tp.node_point("o")
    # hub is the true midpoint here, any admissible eps certifies it
    eps = 1e-3
    cert = certify_midpoint(tp, x, y, hub, eps)
    assert cert.actual <= cert.bound + 1e-12


def test_contraction_ratio():
    e = euclid()
    rng = np.random.default_rng(2)
    for _ in range(20):
        x, y, z = (e.sample_point(rng) for _ in range(3))
        assert contraction_ratio(e, x, y, z, 0.37) == pytest.approx(1.0, abs=1e-12)

    tp = tripod()
    # from the hub, geodesics into distinct legs shrink proportionally
    r = contraction_ratio(tp, tp.node_point("o"), tp.edge_point(0, 0.5), tp.edge_point(1, 0.5), 0.5)
    assert r == pytest.approx(1.0, abs=1e-12)

    s = ModelSpace(1.0)
    x = s.origin()
    for _ in range(30):
        y, z = s.sample_point(rng), s.sample_point(rng)
        if s.dist(x, y) > 0.3 or s.dist(x, z) > 0.3 or s.dist(y, z) == 0.0:
            continue
        r = contraction_ratio(s, x, y, z, 0.5)
        assert abs(r - 1.0) <= 0.05


def test_cone_nonbranching_from_apex():
    cone = EuclideanCone([[0.0, math.pi, math.pi], [math.pi, 0.0, math.pi], [math.pi, math.pi, 0.0]])
    apex = cone.apex()
    y, z = cone.ray_point(1.0, 0), cone.ray_point(1.0, 1)
    assert cone.is_nonbranching_from(apex)
    for t in np.linspace(0.1, 1.0, 10):
        gt = cone.geodesic(apex, y, t)
        ht = cone.geodesic(apex, z, t)
        assert cone.dist(gt, ht) > 0.0


def test_json_round_trip():
    for desc in (
        {"type": "model", "kappa": -1.0},
        {"type": "tree", "nodes": ["a", "b", "c"], "edges": [["a", "b", 1.0], ["b", "c", 2.0]]},
        {"type": "cone", "base_distances": [[0.0, math.pi], [math.pi, 0.0]]},
    ):
        space = space_from_json(desc)
        assert space.to_json()["type"] == desc["type"]
        rng = np.random.default_rng(1)
        p = space.sample_point(rng)
        q = space.point_from_json(space.point_to_json(p))
        assert space.dist(p, q) == pytest.approx(0.0, abs=1e-15)


def test_cross_space_points_rejected():
    a, b = euclid(), euclid()
    p = a.point_from_json([0.0, 0.0])
    q = b.point_from_json([1.0, 0.0])
    with pytest.raises(ValueError):
        a.dist(p, q)
