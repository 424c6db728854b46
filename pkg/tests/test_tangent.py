import math

import numpy as np
import pytest

from catcalc.comparison import make_rng
from catcalc.errors import NotSemiconvex
from catcalc.spaces import EuclideanCone, ModelSpace, tripod
from catcalc.tangent import (
    TangentVector,
    cone_metric,
    d_dist,
    differential,
    first_variation,
    oplus,
    richardson_limit,
    scalar_product,
    scale,
    zero_vector,
)


def euclid():
    return ModelSpace(0.0)


def ept(e, *coords):
    return e.point_from_json(list(coords))


def test_richardson_exact_on_linear():
    est = richardson_limit(lambda t: 3.0 + 2.0 * t, 0.5)
    assert est.value == pytest.approx(3.0, abs=1e-12)


def test_cone_metric_basics():
    e = euclid()
    x = ept(e, 0.0, 0.0)
    v = TangentVector(e, x, ept(e, 1.0, 0.0), 1.0)
    w = TangentVector(e, x, ept(e, 0.0, 1.0), 1.0)
    assert cone_metric(v, v).value == 0.0
    assert cone_metric(v, w).value == pytest.approx(math.sqrt(2.0), abs=1e-9)
    assert cone_metric(v, w).exact == pytest.approx(math.sqrt(2.0), abs=1e-14)


def test_cone_metric_tripod_hub():
    tp = tripod()
    hub = tp.node_point("o")
    v = TangentVector(tp, hub, tp.node_point("a"), 1.0)
    w = TangentVector(tp, hub, tp.node_point("b"), 1.0)
    est = cone_metric(v, w)
    assert est.value == pytest.approx(2.0, abs=1e-9)
    assert est.exact == pytest.approx(2.0, abs=1e-14)


def test_cone_metric_models():
    for k in (1.0, -1.0):
        s = ModelSpace(k)
        rng = make_rng(31)
        x = s.origin()
        y, z = s.sample_point(rng), s.sample_point(rng)
        v = TangentVector(s, x, y, 0.7)
        w = TangentVector(s, x, z, 1.3)
        est = cone_metric(v, w)
        assert est.value == pytest.approx(est.exact, abs=1e-8)


def test_scalar_product_values():
    e = euclid()
    x = ept(e, 0.0, 0.0)
    v = TangentVector(e, x, ept(e, 1.0, 0.0), 1.0)
    w = TangentVector(e, x, ept(e, 0.0, 1.0), 1.0)
    assert scalar_product(v, w) == pytest.approx(0.0, abs=1e-9)
    assert scalar_product(v, v) == pytest.approx(v.norm ** 2, abs=1e-12)

    tp = tripod()
    hub = tp.node_point("o")
    a = TangentVector(tp, hub, tp.node_point("a"), 1.0)
    b = TangentVector(tp, hub, tp.node_point("b"), 1.0)
    assert scalar_product(a, b) == pytest.approx(-1.0, abs=1e-9)


def test_oplus():
    e = euclid()
    x = ept(e, 0.0, 0.0)
    v = TangentVector(e, x, ept(e, 1.0, 0.0), 1.0)
    w = TangentVector(e, x, ept(e, 0.0, 1.0), 1.0)
    s = oplus(v, w, via_limit=True)
    assert s.norm == pytest.approx(math.sqrt(2.0), abs=1e-8)
    # direction bisects the axes
    u = e.initial_velocity(x, s.target)
    assert np.allclose(u, (math.sqrt(0.5), math.sqrt(0.5)), atol=1e-12)

    z = zero_vector(e, x)
    s = oplus(v, z)
    assert s.norm == pytest.approx(v.norm, abs=1e-12)
    assert scalar_product(s, w) == pytest.approx(scalar_product(v, w), abs=1e-8)

    tp = tripod()
    hub = tp.node_point("o")
    a = TangentVector(tp, hub, tp.node_point("a"), 1.0)
    b = TangentVector(tp, hub, tp.node_point("b"), 1.0)
    assert oplus(a, b, via_limit=True).norm == pytest.approx(0.0, abs=1e-9)
    assert oplus(a, scale(0.25, b)).norm == pytest.approx(0.75, abs=1e-12)
    assert oplus(a, a).norm == pytest.approx(2.0, abs=1e-12)


def test_oplus_cone():
    cone = EuclideanCone([[0.0, math.pi], [math.pi, 0.0]])
    apex = cone.apex()
    v = TangentVector(cone, apex, cone.ray_point(1.0, 0), 1.0)
    w = TangentVector(cone, apex, cone.ray_point(0.5, 1), 1.0)
    s = oplus(v, w, via_limit=True)
    assert s.norm == pytest.approx(0.5, abs=1e-9)
    # the heavier ray wins
    assert cone.direction_key(apex, s.target) == cone.direction_key(apex, v.target)


def test_first_variation():
    e = euclid()
    x = ept(e, 0.0, 0.0)
    v = TangentVector(e, x, ept(e, 1.0, 0.0), 1.0)
    assert first_variation(v, ept(e, 0.0, 1.0)) == pytest.approx(0.0, abs=1e-9)
    assert first_variation(v, ept(e, 1.0, 0.0)) == pytest.approx(1.0, abs=1e-9)
    assert first_variation(v, ept(e, 2.0, 0.0)) == pytest.approx(2.0, abs=1e-9)

    tp = tripod()
    hub = tp.node_point("o")
    a = TangentVector(tp, hub, tp.node_point("a"), 1.0)
    assert first_variation(a, tp.node_point("b")) == pytest.approx(-1.0, abs=1e-9)


def test_first_variation_matches_scalar_product():
    rng = make_rng(12)
    for space in (euclid(), ModelSpace(-1.0), ModelSpace(1.0), tripod()):
        for _ in range(15):
            x, y, z = (space.sample_point(rng) for _ in range(3))
            if min(space.dist(x, y), space.dist(x, z)) < 1e-3:
                continue
            v = TangentVector(space, x, y, float(rng.uniform(0.2, 1.5)))
            eta = TangentVector(space, x, z, 1.0)
            fv = first_variation(v, z)
            sp = scalar_product(v, eta)
            assert fv == pytest.approx(sp, abs=1e-7 * (1.0 + abs(sp)))


def test_differential():
    e = euclid()
    x = ept(e, 1.0, 0.0)
    v = TangentVector(e, x, ept(e, 2.0, 0.0), 1.0)
    assert differential(lambda p: 1.7, x, v) == 0.0
    assert differential(lambda p: math.hypot(*p.data), x, v) == pytest.approx(1.0, abs=1e-8)
    # distance from the base point has derivative |v|
    v2 = TangentVector(e, x, ept(e, 2.0, 1.0), 0.8)
    assert differential(lambda p: e.dist(p, x), x, v2) == pytest.approx(v2.norm, abs=1e-8)
    # homogeneity
    d1 = differential(lambda p: math.hypot(*p.data), x, scale(0.3, v))
    assert d1 == pytest.approx(0.3 * 1.0, abs=1e-8)


def test_differential_rejects_nonsemiconvex():
    e = euclid()
    x = ept(e, 0.0, 0.0)
    v = TangentVector(e, x, ept(e, 1.0, 0.0), 1.0)
    # concave kink at the base point: quotients increase as h shrinks
    with pytest.raises(NotSemiconvex):
        differential(lambda p: math.sqrt(abs(p.data[0])), x, v)


def test_d_dist():
    e = euclid()
    x = ept(e, 0.0, 0.0)
    v = TangentVector(e, x, ept(e, 1.0, 0.0), 1.0)
    assert d_dist(x, x, v) == pytest.approx(v.norm, abs=1e-12)
    assert d_dist(ept(e, 1.0, 0.0), x, v) == pytest.approx(-1.0, abs=1e-8)

    tp = tripod()
    hub = tp.node_point("o")
    b = TangentVector(tp, hub, tp.node_point("b"), 1.0)
    assert d_dist(tp.node_point("a"), hub, b) == pytest.approx(1.0, abs=1e-8)


def test_d_dist_agrees_with_differential():
    rng = make_rng(44)
    for space in (euclid(), ModelSpace(-1.0), tripod()):
        for _ in range(10):
            x, y, t = (space.sample_point(rng) for _ in range(3))
            if min(space.dist(x, y), space.dist(x, t)) < 1e-2:
                continue
            v = TangentVector(space, x, t, 1.0)
            via_sp = d_dist(y, x, v)
            via_diff = differential(lambda p: space.dist(p, y), x, v)
            assert via_sp == pytest.approx(via_diff, abs=1e-8 * (1 + abs(via_sp)))


def test_norm_recovery_from_distance_differentials():
    # |v| is the sup of -d_dist(y, x, v) over a spread of targets y
    rng = make_rng(71)
    s = ModelSpace(-1.0)
    x = s.sample_point(rng)
    v = TangentVector(s, x, s.sample_point(rng), 1.0)
    sup = max(-d_dist(s.sample_point(rng), x, v) for _ in range(50))
    assert sup <= v.norm + 1e-9
    assert sup >= v.norm - 2e-2
