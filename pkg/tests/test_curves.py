import math

import numpy as np
import pytest

from catcalc.curves import (
    SampledCurve,
    check_antipodality,
    const_speed_reparam,
    curve_class_distance,
    curve_from_json,
    forward_angle_defect,
    left_derivative,
    length,
    metric_speed,
    metric_speed_via_landmarks,
    right_derivative,
    speed_profile,
)
from catcalc.errors import ConstantCurve, KnotPoint
from catcalc.spaces import ModelSpace, tripod
from catcalc.tangent import differential


def euclid():
    return ModelSpace(0.0)


def eline(e, xs):
    return [e.point_from_json([x, 0.0]) for x in xs]


def test_geodesic_segment_speed_and_length():
    e = euclid()
    c = SampledCurve(e, [0.0, 1.0], eline(e, [0.0, 2.0]))
    assert metric_speed(c, 0.3) == pytest.approx(2.0)
    assert length(c) == pytest.approx(2.0)
    assert speed_profile(c).length == pytest.approx(2.0)


def test_parabola_speed():
    e = euclid()
    ts = np.linspace(0.0, 1.0, 201)
    c = SampledCurve(e, ts, [e.point_from_json([t * t, 0.0]) for t in ts])
    assert metric_speed(c, 0.5) == pytest.approx(1.0, abs=0.01)
    assert length(c) == pytest.approx(1.0, abs=1e-12)


def test_tripod_leg_to_leg():
    tp = tripod()
    c = SampledCurve(tp, [0.0, 0.5, 1.0], [tp.node_point("a"), tp.node_point("o"), tp.node_point("b")])
    assert metric_speed(c, 0.2) == pytest.approx(2.0)
    assert length(c) == pytest.approx(2.0)


def test_speed_via_landmarks():
    e = euclid()
    c = SampledCurve(e, [0.0, 1.0], eline(e, [0.0, 2.0]))
    rng = np.random.default_rng(6)
    landmarks = [e.sample_point(rng) for _ in range(30)]
    # include a point far ahead along the track for exactness
    landmarks.append(e.point_from_json([10.0, 0.0]))
    est = metric_speed_via_landmarks(c, 0.4, landmarks)
    s = metric_speed(c, 0.4)
    assert est <= s + 1e-6
    assert abs(est - s) <= 5e-2 * (1.0 + s)


def test_const_speed_reparam():
    e = euclid()
    ts = np.linspace(0.0, 1.0, 51)
    c = SampledCurve(e, ts, [e.point_from_json([t * t, 0.0]) for t in ts])
    r = const_speed_reparam(c)
    assert np.allclose(r.speeds, r.length, atol=1e-10)
    assert r.length == pytest.approx(c.length, abs=1e-14)
    # t -> (t^2, 0) becomes t -> (t, 0) at the knots
    for t, p in zip(r.times, r.points):
        assert p.data[0] == pytest.approx(t, abs=1e-12)
    # idempotent
    r2 = const_speed_reparam(r)
    assert np.allclose(r2.times, r.times)


def test_const_speed_reparam_removes_plateau():
    e = euclid()
    pts = eline(e, [0.0, 1.0, 1.0, 2.0])
    c = SampledCurve(e, [0.0, 0.25, 0.75, 1.0], pts)
    r = const_speed_reparam(c)
    assert len(r.points) == 3
    assert np.allclose(r.speeds, 2.0, atol=1e-12)
    with pytest.raises(ConstantCurve):
        const_speed_reparam(SampledCurve(e, [0.0, 1.0], eline(e, [1.0, 1.0])))


def test_curve_class_distance():
    e = euclid()
    ts = np.linspace(0.0, 1.0, 21)
    c1 = SampledCurve(e, ts, [e.point_from_json([t, 0.0]) for t in ts])
    # same trace, cubic time warp
    c2 = SampledCurve(e, ts, [e.point_from_json([t ** 3, 0.0]) for t in ts])
    assert curve_class_distance(c1, c2) == pytest.approx(0.0, abs=1e-9)
    # parallel segments at height h
    c3 = SampledCurve(e, [0.0, 1.0], [e.point_from_json([0.0, 0.25]), e.point_from_json([1.0, 0.25])])
    assert curve_class_distance(c1, c3) == pytest.approx(0.25, abs=1e-12)


def test_one_sided_derivatives():
    e = euclid()
    c = SampledCurve(e, [0.0, 1.0], eline(e, [0.0, 2.0]))
    v = right_derivative(c, 0.4)
    assert v.norm == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(e.initial_velocity(v.base, v.target), (1.0, 0.0))
    w = left_derivative(c, 0.4)
    assert np.allclose(e.initial_velocity(w.base, w.target), (-1.0, 0.0))

    tp = tripod()
    c = SampledCurve(tp, [0.0, 0.5, 1.0], [tp.node_point("a"), tp.node_point("o"), tp.node_point("b")])
    v = right_derivative(c, 0.2)
    assert v.norm == pytest.approx(2.0, abs=1e-12)
    assert tp.direction_key(v.base, v.target) == tp.direction_key(v.base, tp.node_point("o"))
    with pytest.raises(KnotPoint):
        right_derivative(c, 0.5)


def test_chain_rule():
    e = euclid()
    center = e.point_from_json([0.0, 0.0])
    ts = np.linspace(0.0, 1.0, 400)
    pts = [e.point_from_json([math.cos(t), math.sin(t)]) for t in ts]
    c = SampledCurve(e, ts, pts)
    t = 0.5012
    v = right_derivative(c, t)
    f = lambda p: e.dist(p, center)
    dfv = differential(f, v.base, v)
    h = 1e-6
    fd = (f(c.at(t + h)) - f(c.at(t))) / h
    assert dfv == pytest.approx(fd, abs=1e-5)
    # radial derivative is zero up to the chord discretization of the circle
    assert abs(dfv) < 2e-3


def test_antipodality():
    e = euclid()
    c = SampledCurve(e, [0.0, 1.0], eline(e, [0.0, 2.0]))
    assert check_antipodality(c, 0.37) == pytest.approx(0.0, abs=1e-8)

    ts = np.linspace(0.0, 1.0, 101)
    arc = SampledCurve(e, ts, [e.point_from_json([math.cos(t), math.sin(t)]) for t in ts])
    assert check_antipodality(arc, 0.505) <= 1e-6

    # right-angle corner: defect equals speed * sqrt(2)
    corner = SampledCurve(
        e,
        [0.0, 0.5, 1.0],
        [e.point_from_json(p) for p in ([0.0, 0.0], [1.0, 0.0], [1.0, 1.0])],
    )
    with pytest.raises(KnotPoint):
        check_antipodality(corner, 0.5)
    defect = check_antipodality(corner, 0.5, allow_knot=True)
    assert defect == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-9)


def test_forward_angle_defect():
    e = euclid()
    c = SampledCurve(e, [0.0, 1.0], eline(e, [0.0, 2.0]))
    assert forward_angle_defect(c, 0.3) <= 1e-9
    ts = np.linspace(0.0, 1.0, 101)
    arc = SampledCurve(e, ts, [e.point_from_json([math.cos(t), math.sin(t)]) for t in ts])
    assert forward_angle_defect(arc, 0.3456) <= 1e-4


def test_curve_json_round_trip():
    tp = tripod()
    c = SampledCurve(tp, [0.0, 0.5, 1.0], [tp.node_point("a"), tp.node_point("o"), tp.node_point("b")])
    c2 = curve_from_json(tp, c.to_json())
    assert c2.length == pytest.approx(c.length)
    assert tp.dist(c2.at(0.3), c.at(0.3)) == pytest.approx(0.0, abs=1e-15)
