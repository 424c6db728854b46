"""Closed-form geometry of the two-dimensional constant-curvature model planes.

Curvature kappa is a runtime value.  The sphere is represented embedded in
R^3 with radius 1/sqrt(kappa), the hyperbolic plane as the upper hyperboloid
sheet in Minkowski 3-space, and the flat case as the Euclidean plane chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AntipodalPoints,
    DegenerateVertex,
    NotIntermediate,
    PerimeterTooLarge,
)

# below this threshold on kappa*x^2 the trig branches cancel badly
_SERIES_CUTOFF = 1e-8

_ACOS_CLAMP = 1e-9


def d_kappa_diam(kappa: float) -> float:
    """Diameter of the model plane: pi/sqrt(kappa) if kappa > 0, else inf."""
    if kappa > 0.0:
        return math.pi / math.sqrt(kappa)
    return math.inf


def sn(kappa: float, x: float) -> float:
    """Modified sine: sin(sqrt(k)x)/sqrt(k), x, or sinh(sqrt(-k)x)/sqrt(-k)."""
    kx2 = abs(kappa) * x * x
    if kx2 < _SERIES_CUTOFF:
        # series in kappa*x^2; exact at kappa=0
        return x * (1.0 - kappa * x * x / 6.0 + kappa * kappa * x ** 4 / 120.0)
    if kappa > 0.0:
        rk = math.sqrt(kappa)
        return math.sin(rk * x) / rk
    rk = math.sqrt(-kappa)
    return math.sinh(rk * x) / rk


def cn(kappa: float, x: float) -> float:
    """Modified cosine: cos(sqrt(k)x), 1, or cosh(sqrt(-k)x)."""
    kx2 = abs(kappa) * x * x
    if kx2 < _SERIES_CUTOFF:
        return 1.0 - kappa * x * x / 2.0 + kappa * kappa * x ** 4 / 24.0
    if kappa > 0.0:
        return math.cos(math.sqrt(kappa) * x)
    return math.cosh(math.sqrt(-kappa) * x)


def _clamped_acos(c: float) -> float:
    if c > 1.0:
        if c > 1.0 + _ACOS_CLAMP:
            raise ValueError(f"cosine argument {c} out of range")
        c = 1.0
    elif c < -1.0:
        if c < -1.0 - _ACOS_CLAMP:
            raise ValueError(f"cosine argument {c} out of range")
        c = -1.0
    return math.acos(c)


@dataclass(frozen=True)
class ModelPoint:
    """A point of the model plane of curvature ``kappa``.

    Coordinates are a 2-vector (kappa = 0), a point on the embedded sphere
    of radius 1/sqrt(kappa) (kappa > 0), or a hyperboloid point with
    Minkowski square 1/kappa and positive last coordinate (kappa < 0).
    """

    kappa: float
    coords: tuple

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        object.__setattr__(self, "coords", tuple(c.tolist()))
        if self.kappa > 0.0:
            if abs(float(c @ c) - 1.0 / self.kappa) > 1e-9 / self.kappa:
                raise ValueError("point not on the sphere of curvature kappa")
        elif self.kappa < 0.0:
            m = c[0] * c[0] + c[1] * c[1] - c[2] * c[2]
            if abs(m - 1.0 / self.kappa) > 1e-9 / abs(self.kappa):
                raise ValueError("point not on the hyperboloid of curvature kappa")
            if c[2] <= 0.0:
                raise ValueError("hyperboloid point must lie on the upper sheet")

    @property
    def vec(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


def _minkowski(a: np.ndarray, b: np.ndarray) -> float:
    return float(a[0] * b[0] + a[1] * b[1] - a[2] * b[2])


def _check_same_kappa(p: ModelPoint, q: ModelPoint):
    if p.kappa != q.kappa:
        raise ValueError("points belong to model planes of different curvature")


def model_distance(p: ModelPoint, q: ModelPoint) -> float:
    """Geodesic distance in the model plane."""
    _check_same_kappa(p, q)
    k = p.kappa
    a, b = p.vec, q.vec
    if k == 0.0:
        return float(np.linalg.norm(a - b))
    if k > 0.0:
        r2 = 1.0 / k
        r = math.sqrt(r2)
        c = float(a @ b) / r2
        if c < 0.0:
            return r * _clamped_acos(c)
        # chord formula, stable for nearby points
        chord = float(np.linalg.norm(a - b))
        return 2.0 * r * math.asin(min(chord / (2.0 * r), 1.0))
    r2 = 1.0 / (-k)
    r = math.sqrt(r2)
    d = a - b
    # Minkowski square of the chord is nonnegative for hyperboloid points
    q = max(_minkowski(d, d), 0.0)
    return 2.0 * r * math.asinh(math.sqrt(q) / (2.0 * r))


def model_geodesic(p: ModelPoint, q: ModelPoint, t: float) -> ModelPoint:
    """Constant-speed geodesic from p to q evaluated at t in [0, 1]."""
    _check_same_kappa(p, q)
    k = p.kappa
    d = model_distance(p, q)
    if k > 0.0 and d >= d_kappa_diam(k) - 1e-12:
        raise AntipodalPoints("geodesic between near-antipodal points is not unique")
    a, b = p.vec, q.vec
    if k == 0.0:
        return ModelPoint(0.0, tuple((1.0 - t) * a + t * b))
    if d == 0.0:
        return p
    if k > 0.0:
        r = 1.0 / math.sqrt(k)
        # unit initial velocity in the embedding
        u = b - (float(a @ b) * k) * a
        u /= np.linalg.norm(u)
        s = t * d
        return ModelPoint(k, tuple(a * math.cos(s / r) + u * r * math.sin(s / r)))
    r = 1.0 / math.sqrt(-k)
    u = b + (_minkowski(a, b) * (-k)) * a
    nu = math.sqrt(max(_minkowski(u, u), 0.0))
    u /= nu
    s = t * d
    return ModelPoint(k, tuple(a * math.cosh(s / r) + u * r * math.sinh(s / r)))


def comparison_angle(kappa: float, d_xy0: float, d_xy1: float, d_y0y1: float) -> float:
    """Angle at x of the comparison triangle with the given side lengths.

    Uses the curvature cosine law; the Euclidean branch is the classical
    cosine law.  Raises if a side at the vertex vanishes or the perimeter
    is too large for the model plane.
    """
    if d_xy0 <= 0.0 or d_xy1 <= 0.0:
        raise DegenerateVertex("zero-length side at the angle vertex")
    if d_xy0 + d_xy1 + d_y0y1 >= 2.0 * d_kappa_diam(kappa):
        raise PerimeterTooLarge("perimeter >= twice the model diameter")
    # half-angle form of the cosine law: stable near both 0 and pi,
    # unlike taking arccos of the cosine-law quotient directly
    a, b, c = d_y0y1, d_xy0, d_xy1
    u, v, w = sorted((a, b, c), reverse=True)
    # Kahan's groupings: each term accurate to a few ulps
    terms = {
        u: w - (u - v),  # 2(s - largest)
        v: w + (u - v),
        w: u + (v - w),
    }
    two_s = u + (v + w)
    excess_a, excess_b, excess_c = terms[a], terms[b], terms[c]
    slack = _ACOS_CLAMP * (1.0 + two_s)
    if excess_a < -slack or excess_b < -slack or excess_c < -slack:
        raise NotIntermediate(
            f"side lengths ({d_xy0}, {d_xy1}, {d_y0y1}) violate the triangle "
            "inequality beyond clamping tolerance"
        )
    # side lengths this close to degenerate are indistinguishable from the
    # exact collinear case at double precision
    snap = 5e-14 * two_s
    if excess_a <= snap:
        return math.pi
    if excess_b <= snap or excess_c <= snap:
        return 0.0
    num = sn(kappa, 0.5 * excess_b) * sn(kappa, 0.5 * excess_c)
    den = sn(kappa, 0.5 * two_s) * sn(kappa, 0.5 * excess_a)
    return 2.0 * math.atan2(math.sqrt(max(num, 0.0)), math.sqrt(max(den, 0.0)))


@dataclass(frozen=True)
class ComparisonTriangle:
    """Model triangle realizing prescribed side lengths.

    Vertices a, b, c satisfy d(a,b)=d_ab, d(a,c)=d_ac, d(b,c)=d_bc.
    """

    kappa: float
    a: ModelPoint
    b: ModelPoint
    c: ModelPoint
    d_ab: float
    d_ac: float
    d_bc: float


def _origin(kappa: float) -> ModelPoint:
    if kappa == 0.0:
        return ModelPoint(0.0, (0.0, 0.0))
    if kappa > 0.0:
        return ModelPoint(kappa, (0.0, 0.0, 1.0 / math.sqrt(kappa)))
    return ModelPoint(kappa, (0.0, 0.0, 1.0 / math.sqrt(-kappa)))


def _exp_at_origin(kappa: float, direction: float, dist: float) -> ModelPoint:
    """Exponential map at the canonical origin along a planar angle."""
    ux, uy = math.cos(direction), math.sin(direction)
    if kappa == 0.0:
        return ModelPoint(0.0, (dist * ux, dist * uy))
    if kappa > 0.0:
        r = 1.0 / math.sqrt(kappa)
        return ModelPoint(
            kappa,
            (r * math.sin(dist / r) * ux, r * math.sin(dist / r) * uy, r * math.cos(dist / r)),
        )
    r = 1.0 / math.sqrt(-kappa)
    return ModelPoint(
        kappa,
        (r * math.sinh(dist / r) * ux, r * math.sinh(dist / r) * uy, r * math.cosh(dist / r)),
    )


def build_comparison_triangle(
    kappa: float, d_ab: float, d_ac: float, d_bc: float
) -> ComparisonTriangle:
    """Place a triangle with the given side lengths in the model plane."""
    if d_ab + d_ac + d_bc >= 2.0 * d_kappa_diam(kappa):
        raise PerimeterTooLarge("perimeter >= twice the model diameter")
    a = _origin(kappa)
    if d_ab == 0.0 and d_ac == 0.0:
        return ComparisonTriangle(kappa, a, a, a, d_ab, d_ac, d_bc)
    b = _exp_at_origin(kappa, 0.0, d_ab)
    if d_ab == 0.0 or d_ac == 0.0:
        c = _exp_at_origin(kappa, 0.0, d_ac)
        return ComparisonTriangle(kappa, a, b, c, d_ab, d_ac, d_bc)
    alpha = comparison_angle(kappa, d_ab, d_ac, d_bc)
    c = _exp_at_origin(kappa, alpha, d_ac)
    return ComparisonTriangle(kappa, a, b, c, d_ab, d_ac, d_bc)


def comparison_point(tri: ComparisonTriangle, d_bd: float, d_dc: float) -> ModelPoint:
    """Point on side bc at distance d_bd from b and d_dc from c."""
    if abs(d_bd + d_dc - tri.d_bc) > 1e-10 * (1.0 + tri.d_bc):
        raise NotIntermediate("d_bd + d_dc does not equal the side length d_bc")
    if tri.d_bc == 0.0:
        return tri.b
    return model_geodesic(tri.b, tri.c, d_bd / tri.d_bc)
