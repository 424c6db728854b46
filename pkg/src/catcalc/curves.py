"""Absolutely continuous curves as time-stamped samples with geodesic
interpolation.

Everything off the sample knots is exact: speeds are per-interval constants,
derivatives are genuine one-sided limits, and pathologies (direction jumps)
are confined to knots, which are flagged rather than smoothed over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import model_spaces as ms
from .errors import ConstantCurve, KnotPoint
from .spaces import Point, Space
from .tangent import TangentVector, oplus, zero_vector

_KNOT_TOL = 1e-12


class SampledCurve:
    def __init__(self, space: Space, times: Sequence[float], points: Sequence[Point]):
        times = np.asarray(times, dtype=float)
        if len(times) != len(points) or len(times) < 2:
            raise ValueError("need matching times and points, at least two samples")
        if times[0] != 0.0 or times[-1] != 1.0 or np.any(np.diff(times) <= 0.0):
            raise ValueError("times must increase strictly from 0 to 1")
        for p in points:
            space._check(p)
        self.space = space
        self.times = times
        self.points = list(points)
        self.seg_lengths = np.array(
            [space.dist(p, q) for p, q in zip(self.points, self.points[1:])]
        )
        self.speeds = self.seg_lengths / np.diff(times)

    @property
    def length(self) -> float:
        return float(self.seg_lengths.sum())

    def _segment(self, t: float) -> int:
        if not 0.0 <= t <= 1.0:
            raise ValueError("curve parameter outside [0, 1]")
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return min(max(i, 0), len(self.points) - 2)

    def at(self, t: float) -> Point:
        i = self._segment(t)
        t0, t1 = self.times[i], self.times[i + 1]
        return self.space.geodesic(self.points[i], self.points[i + 1], (t - t0) / (t1 - t0))

    def is_knot(self, t: float) -> bool:
        return bool(np.any(np.abs(self.times - t) < _KNOT_TOL))

    def to_json(self) -> dict:
        return {
            "times": self.times.tolist(),
            "points": [self.space.point_to_json(p) for p in self.points],
        }


def curve_from_json(space: Space, obj: dict) -> SampledCurve:
    return SampledCurve(space, obj["times"], [space.point_from_json(p) for p in obj["points"]])


@dataclass(frozen=True)
class SpeedProfile:
    speeds: tuple
    length: float


def speed_profile(c: SampledCurve) -> SpeedProfile:
    return SpeedProfile(tuple(c.speeds.tolist()), c.length)


def metric_speed(c: SampledCurve, t: float) -> float:
    """Per-interval constant speed; at knots, the right limit."""
    if t >= 1.0:
        return float(c.speeds[-1])
    return float(c.speeds[c._segment(t)])


def metric_speed_via_landmarks(c: SampledCurve, t: float, landmarks, h: float = 1e-6) -> float:
    """Lower bound sup_y -(d(c_., y))'(t) over landmark points y.

    Approaches the true speed from below as the landmarks fill the space.
    """
    best = 0.0
    ct = c.at(t)
    for y in landmarks:
        # forward difference stays within the interval for small h
        rate = -(c.space.dist(c.at(min(t + h, 1.0)), y) - c.space.dist(ct, y)) / h
        best = max(best, rate)
    return best


def length(c: SampledCurve) -> float:
    return c.length


def const_speed_reparam(c: SampledCurve) -> SampledCurve:
    """Reparametrize to constant speed = total length, dropping plateaus."""
    total = c.length
    if total == 0.0:
        raise ConstantCurve("constant curves admit no constant-speed form")
    cum = np.concatenate([[0.0], np.cumsum(c.seg_lengths)])
    times, points = [], []
    for t, p in zip(cum / total, c.points):
        if times and t - times[-1] < _KNOT_TOL:
            continue  # plateau collapses to a single knot
        times.append(float(t))
        points.append(p)
    times[-1] = 1.0
    return SampledCurve(c.space, times, points)


def curve_class_distance(c1: SampledCurve, c2: SampledCurve, grid: int = 64) -> float:
    """Upper bound on the reparametrization-class distance.

    Canonicalizes both curves to constant speed and takes the sup distance
    over a merged evaluation grid; exact zero for equal classes.
    """
    a, b = const_speed_reparam(c1), const_speed_reparam(c2)
    ts = np.unique(np.concatenate([a.times, b.times, np.linspace(0.0, 1.0, grid)]))
    return max(a.space.dist(a.at(t), b.at(t)) for t in ts)


def _one_sided(c: SampledCurve, t: float, forward: bool, allow_knot: bool) -> TangentVector:
    if c.is_knot(t) and not allow_knot:
        raise KnotPoint(f"derivative may jump at sample knot t={t}")
    if forward:
        if t >= 1.0:
            raise ValueError("no right derivative at t=1")
        i = c._segment(t) if not c.is_knot(t) else int(np.argmin(np.abs(c.times - t)))
        i = min(i, len(c.points) - 2)
        endpoint = c.points[i + 1]
    else:
        if t <= 0.0:
            raise ValueError("no left derivative at t=0")
        if c.is_knot(t):
            i = int(np.argmin(np.abs(c.times - t))) - 1
        else:
            i = c._segment(t)
        endpoint = c.points[i]
    x = c.at(t)
    speed = float(c.speeds[i])
    if speed == 0.0:
        return zero_vector(c.space, x)
    d = c.space.dist(x, endpoint)
    if d == 0.0:
        raise KnotPoint("evaluation point coincides with the segment endpoint")
    return TangentVector(c.space, x, endpoint, speed / d)


def right_derivative(c: SampledCurve, t: float, allow_knot: bool = False) -> TangentVector:
    """Right derivative as a tangent vector; norm equals the metric speed."""
    return _one_sided(c, t, forward=True, allow_knot=allow_knot)


def left_derivative(c: SampledCurve, t: float, allow_knot: bool = False) -> TangentVector:
    return _one_sided(c, t, forward=False, allow_knot=allow_knot)


def check_antipodality(c: SampledCurve, t: float, allow_knot: bool = False) -> float:
    """Norm of (right derivative) + (left derivative) in the tangent cone.

    Zero wherever the curve passes straight through; positive at corners.
    """
    v = right_derivative(c, t, allow_knot=allow_knot)
    w = left_derivative(c, t, allow_knot=allow_knot)
    return oplus(v, w).norm


def forward_angle_defect(c: SampledCurve, t: float, n_dyadic: int = 5) -> float:
    """Max comparison angle at c_t between two forward points, dyadic steps.

    Vanishing defect is the angle condition satisfied by AC curves at
    almost every time.
    """
    kappa = c.space.curvature_bound()
    x = c.at(t)
    defect = 0.0
    d1 = min(1.0 - t, 1e-2)
    for k in range(n_dyadic):
        da, db = d1 * 0.5 ** k, d1 * 0.5 ** (k + 1)
        pa, pb = c.at(t + da), c.at(t + db)
        da_, db_ = c.space.dist(x, pa), c.space.dist(x, pb)
        if min(da_, db_) < 1e-14:
            continue
        # keep the finest-scale value: the defect must fall as steps shrink
        defect = ms.comparison_angle(kappa, da_, db_, c.space.dist(pa, pb))
    return defect
