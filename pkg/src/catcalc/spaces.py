"""Geodesic space instances: model planes, metric trees and Euclidean cones.

Every space hands out immutable :class:`Point` values tagged with the space
id; mixing points across spaces raises.  All bundled instances have exact
closed-form distances and geodesics.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass
from typing import Any, Optional

import networkx as nx
import numpy as np

from . import model_spaces as ms
from .errors import NonUniqueGeodesic, PreconditionFailed
from .model_spaces import ModelPoint

# surrogate for an infinite CAT(kappa) radius on globally CAT(0) instances
GLOBAL_CAT_RADIUS = 1e9

_space_counter = itertools.count()


@dataclass(frozen=True)
class Point:
    space_id: str
    data: tuple

    def __repr__(self):
        return f"Point({self.space_id}, {self.data})"


class Space:
    """Common interface of all geodesic space instances."""

    kind = "abstract"

    def __init__(self, space_id: Optional[str] = None):
        self.space_id = space_id or f"{self.kind}-{next(_space_counter)}"

    def _check(self, *pts: Point):
        for p in pts:
            if p.space_id != self.space_id:
                raise ValueError(
                    f"point of space {p.space_id!r} used with space {self.space_id!r}"
                )

    # -- metric interface ------------------------------------------------
    def dist(self, p: Point, q: Point) -> float:
        raise NotImplementedError

    def geodesic(self, p: Point, q: Point, t: float) -> Point:
        raise NotImplementedError

    def midpoint(self, p: Point, q: Point) -> Point:
        return self.geodesic(p, q, 0.5)

    def cat_radius(self, p: Point) -> float:
        raise NotImplementedError

    def curvature_bound(self) -> float:
        raise NotImplementedError

    def is_nonbranching_from(self, p: Point) -> bool:
        return False

    def sample_point(self, rng: np.random.Generator) -> Point:
        raise NotImplementedError

    # -- tangent-direction helpers (exact closed forms) -------------------
    def direction_key(self, x: Point, y: Point):
        """Hashable id of the initial direction of the geodesic x -> y.

        Two keys at the same base compare equal iff the geodesics leave x
        the same way.  None means no closed form is available.
        """
        return None

    def angle_between(self, x: Point, y: Point, z: Point) -> Optional[float]:
        """Exact angle at x between the geodesics toward y and z, or None."""
        return None

    def point_along(self, x: Point, key, s: float) -> Point:
        """Point at distance s from x along the direction ``key``."""
        raise NotImplementedError

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict:
        raise NotImplementedError

    def point_to_json(self, p: Point) -> Any:
        self._check(p)
        return list(p.data)

    def point_from_json(self, obj: Any) -> Point:
        return Point(self.space_id, tuple(obj))


class ModelSpace(Space):
    """Wrapper presenting a model plane of curvature kappa as a Space."""

    kind = "model"

    def __init__(self, kappa: float, space_id: Optional[str] = None):
        super().__init__(space_id)
        self.kappa = float(kappa)

    def _mp(self, p: Point) -> ModelPoint:
        return ModelPoint(self.kappa, p.data)

    def _pt(self, m: ModelPoint) -> Point:
        return Point(self.space_id, m.coords)

    def dist(self, p: Point, q: Point) -> float:
        self._check(p, q)
        return ms.model_distance(self._mp(p), self._mp(q))

    def geodesic(self, p: Point, q: Point, t: float) -> Point:
        self._check(p, q)
        return self._pt(ms.model_geodesic(self._mp(p), self._mp(q), t))

    def cat_radius(self, p: Point) -> float:
        if self.kappa > 0.0:
            return ms.d_kappa_diam(self.kappa) / 2.0
        return GLOBAL_CAT_RADIUS

    def curvature_bound(self) -> float:
        return self.kappa

    def is_nonbranching_from(self, p: Point) -> bool:
        return True

    def origin(self) -> Point:
        return self._pt(ms._origin(self.kappa))

    def sample_point(self, rng: np.random.Generator) -> Point:
        r_max = 1.0
        if self.kappa > 0.0:
            r_max = min(1.0, ms.d_kappa_diam(self.kappa) / 4.0)
        r = r_max * math.sqrt(rng.uniform())
        phi = rng.uniform(0.0, 2.0 * math.pi)
        return self._pt(ms._exp_at_origin(self.kappa, phi, r))

    # initial velocity of the geodesic p -> q, as an embedded vector
    def initial_velocity(self, p: Point, q: Point) -> np.ndarray:
        self._check(p, q)
        a, b = self._mp(p).vec, self._mp(q).vec
        k = self.kappa
        if k == 0.0:
            u = b - a
        elif k > 0.0:
            u = b - (float(a @ b) * k) * a
        else:
            mk = a[0] * b[0] + a[1] * b[1] - a[2] * b[2]
            u = b + (mk * (-k)) * a
        n = self._riem_norm(u)
        if n == 0.0:
            raise ValueError("zero-length geodesic has no direction")
        return u / n

    def _riem_norm(self, u: np.ndarray) -> float:
        if self.kappa < 0.0:
            return math.sqrt(max(u[0] * u[0] + u[1] * u[1] - u[2] * u[2], 0.0))
        return float(np.linalg.norm(u))

    def _riem_inner(self, u: np.ndarray, v: np.ndarray) -> float:
        if self.kappa < 0.0:
            return float(u[0] * v[0] + u[1] * v[1] - u[2] * v[2])
        return float(u @ v)

    def project_tangent(self, p: Point, u: np.ndarray) -> np.ndarray:
        """Project an ambient vector onto the tangent space at p.

        Sums of nearly opposite unit velocities lose tangency to rounding;
        re-projecting keeps exp_velocity on the embedded surface.
        """
        self._check(p)
        if self.kappa == 0.0:
            return u
        a = self._mp(p).vec
        return u - self.kappa * self._riem_inner(u, a) * a

    def exp_velocity(self, p: Point, u: np.ndarray, s: float) -> Point:
        """Exponential map at p along the unit velocity u for distance s."""
        self._check(p)
        a = self._mp(p).vec
        k = self.kappa
        if k == 0.0:
            return Point(self.space_id, tuple(a + s * u))
        if k > 0.0:
            r = 1.0 / math.sqrt(k)
            v = a * math.cos(s / r) + u * r * math.sin(s / r)
        else:
            r = 1.0 / math.sqrt(-k)
            v = a * math.cosh(s / r) + u * r * math.sinh(s / r)
        return Point(self.space_id, tuple(v))

    def direction_key(self, x: Point, y: Point):
        u = self.initial_velocity(x, y)
        return ("vel", tuple(np.round(u, 14)))

    def angle_between(self, x: Point, y: Point, z: Point) -> float:
        u = self.initial_velocity(x, y)
        v = self.initial_velocity(x, z)
        c = self._riem_inner(u, v)
        c = min(1.0, max(-1.0, c))
        return math.acos(c)

    def point_along(self, x: Point, key, s: float) -> Point:
        kind, u = key
        assert kind == "vel"
        return self.exp_velocity(x, np.asarray(u), s)

    def to_json(self) -> dict:
        return {"type": "model", "kappa": self.kappa}


class _GraphMetric(Space):
    """Path metric on an undirected weighted graph; points live on edges."""

    kind = "graph"

    def __init__(self, nodes, edges, space_id: Optional[str] = None):
        super().__init__(space_id)
        self.nodes = [str(n) for n in nodes]
        self.edges = [(str(u), str(v), float(w)) for u, v, w in edges]
        for _, _, w in self.edges:
            if w <= 0.0:
                raise ValueError("edge lengths must be positive")
        self.graph = nx.Graph()
        self.graph.add_nodes_from(self.nodes)
        for i, (u, v, w) in enumerate(self.edges):
            self.graph.add_edge(u, v, weight=w, index=i)
        if not nx.is_connected(self.graph):
            raise ValueError("graph must be connected")
        self._node_dist = dict(nx.all_pairs_dijkstra_path_length(self.graph, weight="weight"))
        self._path_cache: dict = {}
        self.total_length = sum(w for _, _, w in self.edges)

    # -- points ------------------------------------------------------------
    def node_point(self, name: str) -> Point:
        name = str(name)
        if name not in self.graph:
            raise ValueError(f"unknown node {name!r}")
        return Point(self.space_id, ("node", name))

    def edge_point(self, edge_index: int, offset: float) -> Point:
        u, v, w = self.edges[edge_index]
        if not 0.0 <= offset <= w:
            raise ValueError("offset outside the edge")
        return self._canon(("edge", edge_index, float(offset)))

    def _canon(self, data: tuple, tol: float = 1e-12) -> Point:
        if data[0] == "edge":
            _, i, off = data
            u, v, w = self.edges[i]
            if off <= tol:
                return Point(self.space_id, ("node", u))
            if off >= w - tol:
                return Point(self.space_id, ("node", v))
        return Point(self.space_id, data)

    def _node_distances_to(self, p: Point) -> dict:
        """Distances from p to its adjacent nodes: {node: distance}."""
        if p.data[0] == "node":
            return {p.data[1]: 0.0}
        _, i, off = p.data
        u, v, w = self.edges[i]
        return {u: off, v: w - off}

    def dist(self, p: Point, q: Point) -> float:
        self._check(p, q)
        dp, dq = self._node_distances_to(p), self._node_distances_to(q)
        best = math.inf
        if p.data[0] == "edge" and q.data[0] == "edge" and p.data[1] == q.data[1]:
            best = abs(p.data[2] - q.data[2])
        for a, da in dp.items():
            for b, db in dq.items():
                best = min(best, da + self._node_dist[a][b] + db)
        return best

    def _node_path(self, a: str, b: str) -> list:
        key = (a, b)
        if key not in self._path_cache:
            self._path_cache[key] = nx.shortest_path(self.graph, a, b, weight="weight")
        return self._path_cache[key]

    def geodesic_segments(self, p: Point, q: Point) -> list:
        """Shortest path p -> q as [(edge_index, off_from, off_to)] segments."""
        self._check(p, q)
        dp, dq = self._node_distances_to(p), self._node_distances_to(q)
        best = None
        if p.data[0] == "edge" and q.data[0] == "edge" and p.data[1] == q.data[1]:
            best = (abs(p.data[2] - q.data[2]), None, None)
        for a, da in dp.items():
            for b, db in dq.items():
                tot = da + self._node_dist[a][b] + db
                if best is None or tot < best[0] - 1e-15:
                    best = (tot, a, b)
        total, a, b = best
        segs = []
        if a is None:
            i = p.data[1]
            segs.append((i, p.data[2], q.data[2]))
            return segs
        # leading partial edge
        if p.data[0] == "edge":
            i = p.data[1]
            u, v, w = self.edges[i]
            segs.append((i, p.data[2], 0.0 if a == u else w))
        for x, y in zip(self._node_path(a, b), self._node_path(a, b)[1:]):
            i = self.graph[x][y]["index"]
            u, v, w = self.edges[i]
            segs.append((i, 0.0, w) if x == u else (i, w, 0.0))
        if q.data[0] == "edge":
            i = q.data[1]
            u, v, w = self.edges[i]
            segs.append((i, 0.0 if b == u else w, q.data[2]))
        return [s for s in segs if abs(s[2] - s[1]) > 0.0]

    def geodesic(self, p: Point, q: Point, t: float) -> Point:
        segs = self.geodesic_segments(p, q)
        total = sum(abs(b - a) for _, a, b in segs)
        if total == 0.0:
            return p
        s = t * total
        acc = 0.0
        for i, a, b in segs:
            seg_len = abs(b - a)
            if s <= acc + seg_len + 1e-15:
                frac = (s - acc) / seg_len
                return self._canon(("edge", i, a + (b - a) * frac))
            acc += seg_len
        return q

    def cat_radius(self, p: Point) -> float:
        return GLOBAL_CAT_RADIUS

    def curvature_bound(self) -> float:
        return 0.0

    def sample_point(self, rng: np.random.Generator) -> Point:
        weights = np.array([w for _, _, w in self.edges])
        i = int(rng.choice(len(self.edges), p=weights / weights.sum()))
        off = rng.uniform(0.0, self.edges[i][2])
        return self._canon(("edge", i, off))

    # -- tangent directions -------------------------------------------------
    def direction_key(self, x: Point, y: Point):
        segs = self.geodesic_segments(x, y)
        if not segs:
            raise ValueError("zero-length geodesic has no direction")
        i, a, b = segs[0]
        return ("ray", i, 1 if b > a else -1)

    def angle_between(self, x: Point, y: Point, z: Point) -> float:
        return 0.0 if self.direction_key(x, y) == self.direction_key(x, z) else math.pi

    def point_along(self, x: Point, key, s: float) -> Point:
        _, i, sgn = key
        u, v, w = self.edges[i]
        if x.data[0] == "edge" and x.data[1] == i:
            off = x.data[2]
        elif x.data == ("node", u):
            off = 0.0
        elif x.data == ("node", v):
            off = w
        else:
            raise ValueError("direction key does not start at x")
        off2 = off + sgn * s
        if not 0.0 <= off2 <= w:
            raise ValueError("point_along left the first edge")
        return self._canon(("edge", i, off2))

    def point_to_json(self, p: Point) -> Any:
        self._check(p)
        if p.data[0] == "node":
            return {"node": p.data[1]}
        return {"edge": p.data[1], "offset": p.data[2]}

    def point_from_json(self, obj: Any) -> Point:
        if "node" in obj:
            return self.node_point(obj["node"])
        return self.edge_point(int(obj["edge"]), float(obj["offset"]))


class MetricTree(_GraphMetric):
    """Finite metric tree; globally CAT(0) with unique geodesics."""

    kind = "tree"

    def __init__(self, nodes, edges, space_id: Optional[str] = None):
        super().__init__(nodes, edges, space_id)
        if len(self.edges) != len(self.nodes) - 1:
            raise ValueError("a tree must have exactly n-1 edges")

    def to_json(self) -> dict:
        return {"type": "tree", "nodes": list(self.nodes), "edges": [list(e) for e in self.edges]}


def tripod(leg: float = 1.0) -> MetricTree:
    """Three unit legs glued at a hub: the canonical branching CAT(0) space."""
    return MetricTree(
        ["o", "a", "b", "c"],
        [("o", "a", leg), ("o", "b", leg), ("o", "c", leg)],
    )


class EuclideanCone(Space):
    """Euclidean cone over a finite base metric.

    Points are (radius, base index) with the apex at radius 0; the squared
    distance is t^2 + s^2 - 2 t s cos(min(d_base, pi)).  Geodesic evaluation
    between distinct rays is supported only when the base distance is >= pi
    (geodesics then pass through the apex); bundled instances satisfy this.
    """

    kind = "cone"

    def __init__(self, base_distances, space_id: Optional[str] = None, max_radius: float = 4.0):
        super().__init__(space_id)
        m = np.asarray(base_distances, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("base_distances must be a square matrix")
        if not np.allclose(m, m.T) or np.any(np.diag(m) != 0.0) or np.any(m < 0.0):
            raise ValueError("base_distances must be a symmetric metric matrix")
        n = m.shape[0]
        for i in range(n):
            for j in range(n):
                if i != j and m[i, j] <= 0.0:
                    raise ValueError("distinct base points must have positive distance")
                for k in range(n):
                    if m[i, j] > m[i, k] + m[k, j] + 1e-12:
                        raise ValueError("base_distances violates the triangle inequality")
        self.base = m
        self.n_base = n
        self.max_radius = float(max_radius)

    def apex(self) -> Point:
        return Point(self.space_id, ("apex",))

    def ray_point(self, radius: float, base_index: int) -> Point:
        if radius < 0.0:
            raise ValueError("radius must be nonnegative")
        if radius == 0.0:
            return self.apex()
        return Point(self.space_id, (float(radius), int(base_index)))

    def _unpack(self, p: Point):
        if p.data[0] == "apex":
            return 0.0, None
        return p.data

    def dist(self, p: Point, q: Point) -> float:
        self._check(p, q)
        t, i = self._unpack(p)
        s, j = self._unpack(q)
        if i is None or j is None:
            return t + s
        if i == j:
            return abs(t - s)
        ang = min(self.base[i, j], math.pi)
        return math.sqrt(max(t * t + s * s - 2.0 * t * s * math.cos(ang), 0.0))

    def geodesic(self, p: Point, q: Point, t: float) -> Point:
        self._check(p, q)
        r1, i = self._unpack(p)
        r2, j = self._unpack(q)
        if i is not None and j is not None and i != j and self.base[i, j] < math.pi:
            raise NonUniqueGeodesic(
                "geodesics between distinct rays at base distance < pi are not "
                "representable in a cone over a discrete base"
            )
        total = self.dist(p, q)
        s = t * total
        if i == j or j is None or i is None:
            # along one ray (possibly through the apex when i is None)
            if i is None and j is None:
                return self.apex()
            if i is None:
                return self.ray_point(s, j)
            if j is None:
                return self.ray_point(r1 - s, i)
            return self.ray_point(r1 + (r2 - r1) * t, i)
        # through the apex
        if s <= r1:
            return self.ray_point(r1 - s, i)
        return self.ray_point(s - r1, j)

    def cat_radius(self, p: Point) -> float:
        return GLOBAL_CAT_RADIUS

    def curvature_bound(self) -> float:
        return 0.0

    def is_nonbranching_from(self, p: Point) -> bool:
        return p.data[0] == "apex"

    def sample_point(self, rng: np.random.Generator) -> Point:
        i = int(rng.integers(self.n_base))
        r = rng.uniform(0.0, self.max_radius)
        return self.ray_point(r, i) if r > 0 else self.apex()

    def direction_key(self, x: Point, y: Point):
        r1, i = self._unpack(x)
        r2, j = self._unpack(y)
        if i is None:
            if j is None:
                raise ValueError("zero-length geodesic has no direction")
            return ("base", j)
        if j is None or i != j or r2 < r1:
            return ("ray", i, -1)
        if r2 == r1:
            raise ValueError("zero-length geodesic has no direction")
        return ("ray", i, +1)

    def angle_between(self, x: Point, y: Point, z: Point) -> float:
        k1, k2 = self.direction_key(x, y), self.direction_key(x, z)
        if k1 == k2:
            return 0.0
        if k1[0] == "base" and k2[0] == "base":
            return min(self.base[k1[1], k2[1]], math.pi)
        return math.pi

    def point_along(self, x: Point, key, s: float) -> Point:
        r, i = self._unpack(x)
        if key[0] == "base":
            assert i is None
            return self.ray_point(s, key[1])
        _, ray, sgn = key
        r2 = r + sgn * s
        if r2 < 0.0:
            raise ValueError("point_along passed the apex")
        return self.ray_point(r2, ray)

    def point_to_json(self, p: Point) -> Any:
        self._check(p)
        if p.data[0] == "apex":
            return {"apex": True}
        return {"radius": p.data[0], "ray": p.data[1]}

    def point_from_json(self, obj: Any) -> Point:
        if obj.get("apex"):
            return self.apex()
        return self.ray_point(float(obj["radius"]), int(obj["ray"]))

    def to_json(self) -> dict:
        return {"type": "cone", "base_distances": self.base.tolist()}


@dataclass(frozen=True)
class MidpointCertificate:
    bound: float
    actual: float
    eps: float


def certify_midpoint(space: Space, x: Point, y: Point, m_candidate: Point, eps: float) -> MidpointCertificate:
    """Certified bound on the distance from an eps-approximate midpoint.

    The constant is 1 in nonpositive curvature and 1/sqrt(cos(sqrt(k)*d/2))
    for a positive bound k.
    """
    d = space.dist(x, y)
    half_sq = d * d / 4.0 + eps * eps
    if space.dist(x, m_candidate) ** 2 > half_sq + 1e-12 or space.dist(y, m_candidate) ** 2 > half_sq + 1e-12:
        raise PreconditionFailed("candidate is not an eps-approximate midpoint")
    k = space.curvature_bound()
    if k <= 0.0:
        c = 1.0
    else:
        arg = math.cos(math.sqrt(k) * d / 2.0)
        if arg <= 0.0:
            raise PreconditionFailed("points too far apart for the positive-curvature bound")
        c = 1.0 / math.sqrt(arg)
    m = space.midpoint(x, y)
    return MidpointCertificate(bound=c * eps, actual=space.dist(m, m_candidate), eps=eps)


def contraction_ratio(space: Space, x: Point, y: Point, z: Point, eps: float) -> float:
    """Ratio d(geodesic contractions at eps) / (eps * d(y, z))."""
    if not 0.0 < eps < 1.0:
        raise PreconditionFailed("eps must lie in (0, 1)")
    dyz = space.dist(y, z)
    if dyz == 0.0:
        return 1.0
    gy = space.geodesic(x, y, eps)
    gz = space.geodesic(x, z, eps)
    return space.dist(gy, gz) / (eps * dyz)


def space_from_json(obj: dict) -> Space:
    """Build a space from its JSON descriptor.

    The space id is derived from the descriptor content, so identical
    descriptors yield identical ids (and hence reproducible reports).
    """
    if not isinstance(obj, dict):
        raise ValueError("space descriptor must be a JSON object")
    kind = obj.get("type")
    digest = hashlib.sha1(
        json.dumps(obj, sort_keys=True).encode()
    ).hexdigest()[:8]
    space_id = f"{kind}-{digest}"
    if kind == "model":
        return ModelSpace(float(obj["kappa"]), space_id)
    if kind == "tree":
        return MetricTree(obj["nodes"], [tuple(e) for e in obj["edges"]], space_id)
    if kind == "cone":
        return EuclideanCone(obj["base_distances"], space_id)
    raise ValueError(f"unknown space type {kind!r}")
