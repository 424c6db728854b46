"""Derivations and 1-currents on metric graphs, with path superposition.

A derivation is a signed flow on oriented edges acting on functions through
the directional derivative scaled by 1/density.  Everything is finite, so
mass, boundary and the path decomposition are computed exactly.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .curves import SampledCurve
from .errors import NodePoint, QuadratureFailure
from .spaces import Point, _GraphMetric


class MetricGraph(_GraphMetric):
    """Weighted graph carrying a reference measure: length x per-edge density."""

    kind = "graph"

    def __init__(self, nodes, edges, density=None, space_id=None):
        super().__init__(nodes, edges, space_id)
        if density is None:
            density = [1.0] * len(self.edges)
        self.density = [float(d) for d in density]
        if len(self.density) != len(self.edges) or any(d <= 0.0 for d in self.density):
            raise ValueError("need one positive density per edge")
        self.is_tree = len(self.edges) == len(self.nodes) - 1

    def mu_edge(self, i: int) -> float:
        """Measure of edge i."""
        return self.density[i] * self.edges[i][2]

    def to_json(self) -> dict:
        return {
            "type": "graph",
            "nodes": list(self.nodes),
            "edges": [list(e) for e in self.edges],
            "density": list(self.density),
        }


def graph_from_json(obj: dict) -> MetricGraph:
    return MetricGraph(obj["nodes"], [tuple(e) for e in obj["edges"]], obj.get("density"))


class NodeFunction:
    """Piecewise-linear function given by node values, linear on edges."""

    def __init__(self, graph: MetricGraph, values: dict):
        self.graph = graph
        self.values = {str(k): float(v) for k, v in values.items()}
        missing = set(graph.nodes) - set(self.values)
        if missing:
            raise ValueError(f"missing node values: {sorted(missing)}")

    def __call__(self, p: Point) -> float:
        if p.data[0] == "node":
            return self.values[p.data[1]]
        _, i, off = p.data
        u, v, length = self.graph.edges[i]
        t = off / length
        return (1.0 - t) * self.values[u] + t * self.values[v]

    def exact_slope(self, edge_index: int) -> float:
        u, v, length = self.graph.edges[edge_index]
        return (self.values[v] - self.values[u]) / length

    def __mul__(self, other: "NodeFunction"):
        # product is quadratic on edges; return a plain callable
        return lambda p: self(p) * other(p)


def directional_derivative(graph: MetricGraph, f, p: Point, h: Optional[float] = None) -> float:
    """Derivative of f along the edge orientation (u -> v) at an interior point."""
    if p.data[0] != "node" and isinstance(f, NodeFunction):
        return f.exact_slope(p.data[1])
    if p.data[0] == "node":
        raise NodePoint("directional derivative requested at a node")
    _, i, off = p.data
    length = graph.edges[i][2]
    if h is None:
        h = min(off, length - off, length / 8.0) / 2.0
    pp = Point(graph.space_id, ("edge", i, off + h))
    pm = Point(graph.space_id, ("edge", i, off - h))
    return (f(pp) - f(pm)) / (2.0 * h)


@dataclass(frozen=True)
class EdgeFlow:
    """Signed flow per edge, oriented u -> v; acts on functions as a derivation."""

    graph: MetricGraph = field(compare=False)
    flow: tuple

    def __post_init__(self):
        if len(self.flow) != len(self.graph.edges):
            raise ValueError("need one flow value per edge")
        object.__setattr__(self, "flow", tuple(float(x) for x in self.flow))

    def divergence(self) -> dict:
        """Net outflow per node."""
        div = {n: 0.0 for n in self.graph.nodes}
        for (u, v, _), fl in zip(self.graph.edges, self.flow):
            div[u] += fl
            div[v] -= fl
        return div

    def apply(self, f, p: Point) -> float:
        """b(f) at an interior point."""
        if p.data[0] == "node":
            raise NodePoint("derivations act almost everywhere; nodes are null")
        i = p.data[1]
        return self.flow[i] / self.graph.density[i] * directional_derivative(self.graph, f, p)

    def __add__(self, other: "EdgeFlow") -> "EdgeFlow":
        return EdgeFlow(self.graph, tuple(a + b for a, b in zip(self.flow, other.flow)))

    def __sub__(self, other: "EdgeFlow") -> "EdgeFlow":
        return EdgeFlow(self.graph, tuple(a - b for a, b in zip(self.flow, other.flow)))

    def __mul__(self, lam: float) -> "EdgeFlow":
        return EdgeFlow(self.graph, tuple(lam * a for a in self.flow))

    __rmul__ = __mul__


def flow_from_json(obj: dict, graph: Optional[MetricGraph] = None) -> EdgeFlow:
    if graph is None:
        graph = graph_from_json(obj)
    lookup = {}
    for u, v, val in obj["flow"]:
        lookup[(str(u), str(v))] = float(val)
    flow = []
    for u, v, _ in graph.edges:
        if (u, v) in lookup:
            flow.append(lookup[(u, v)])
        elif (v, u) in lookup:
            flow.append(-lookup[(v, u)])
        else:
            flow.append(0.0)
    return EdgeFlow(graph, tuple(flow))


def derivation_norm(b: EdgeFlow, at: Point) -> float:
    if at.data[0] == "node":
        raise NodePoint("pointwise norm defined only at edge interiors")
    i = at.data[1]
    return abs(b.flow[i]) / b.graph.density[i]


def derivation_norm_via_landmarks(b: EdgeFlow, at: Point, landmarks) -> float:
    """sup of b(dist to landmark); approaches the exact norm from below."""
    graph = b.graph
    best = 0.0
    for y in landmarks:
        val = b.apply(lambda p: graph.dist(p, y), at)
        best = max(best, val)
    return best


def derivation_norm_22(b: EdgeFlow) -> dict:
    l2_sq = sum(
        (fl / d) ** 2 * d * length
        for fl, d, (_, _, length) in zip(b.flow, b.graph.density, b.graph.edges)
    )
    div_sq = sum(x * x for x in b.divergence().values())
    return {"l2_norm": math.sqrt(l2_sq), "div_l2": math.sqrt(div_sq)}


_GAUSS_N = 24


def _edge_integral(graph: MetricGraph, i: int, integrand: Callable[[float], float]) -> float:
    """Integral of integrand(offset) over edge i against length measure.

    Gauss-Legendre at two orders; raises if they disagree (non-smooth data
    should be refined by the caller instead).
    """
    length = graph.edges[i][2]
    vals = []
    for n in (_GAUSS_N, 2 * _GAUSS_N):
        xs, ws = np.polynomial.legendre.leggauss(n)
        offs = 0.5 * length * (xs + 1.0)
        vals.append(0.5 * length * sum(w * integrand(o) for w, o in zip(ws, offs)))
    if abs(vals[0] - vals[1]) > 1e-9 * (1.0 + abs(vals[1])):
        raise QuadratureFailure("edge quadrature did not converge at doubled order")
    return vals[1]


class Current1:
    """Normal 1-current induced by a derivation: T(g, f) = int g b(f) dmu."""

    def __init__(self, b: EdgeFlow):
        self.b = b
        self.graph = b.graph

    def __call__(self, g, f) -> float:
        total = 0.0
        for i, fl in enumerate(self.b.flow):
            if fl == 0.0:
                continue
            if isinstance(f, NodeFunction) and isinstance(g, NodeFunction):
                # exact: b(f) is constant on the edge, g is linear
                u, v, length = self.graph.edges[i]
                g_mean = 0.5 * (g.values[u] + g.values[v])
                total += fl * f.exact_slope(i) * length * g_mean
            else:
                def integrand(off, i=i):
                    p = Point(self.graph.space_id, ("edge", i, off))
                    slope = directional_derivative(self.graph, f, p)
                    return g(p) * slope

                total += fl * _edge_integral(self.graph, i, integrand)
        return total

    def mass_edge_density(self, i: int) -> float:
        """Density of the mass measure on edge i w.r.t. length."""
        return abs(self.b.flow[i])

    def mass(self) -> float:
        return sum(abs(fl) * length for fl, (_, _, length) in zip(self.b.flow, self.graph.edges))

    def boundary_weights(self) -> dict:
        """Node weights of the boundary measure: T(1, f) = sum f(n) w_n."""
        return {n: -d for n, d in self.b.divergence().items()}


def current_from_derivation(b: EdgeFlow) -> Current1:
    return Current1(b)


def curve_current_eval(c: SampledCurve, g, f) -> float:
    """[[c]](g, f) = int_0^1 g(c_t) (f o c)'(t) dt, segment by segment."""
    total = 0.0
    for k in range(len(c.points) - 1):
        t0, t1 = c.times[k], c.times[k + 1]
        if c.seg_lengths[k] == 0.0:
            continue
        xs, ws = np.polynomial.legendre.leggauss(_GAUSS_N)
        h = 1e-3 * (t1 - t0)
        for x, w in zip(xs, ws):
            t = t0 + 0.5 * (x + 1.0) * (t1 - t0)
            df = (f(c.at(min(t + h, t1))) - f(c.at(max(t - h, t0)))) / (
                min(t + h, t1) - max(t - h, t0)
            )
            total += 0.5 * (t1 - t0) * w * g(c.at(t)) * df
    return total


@dataclass
class PathDecomposition:
    graph: MetricGraph
    paths: list  # of (node sequence, weight)
    cycles: list  # of (node sequence with first==last, weight)

    def curves(self) -> list:
        """Constant-speed SampledCurves with weights, paths then cycles."""
        out = []
        for seq, w in self.paths + self.cycles:
            out.append((_nodes_to_curve(self.graph, seq), w))
        return out

    def edge_traversals(self) -> dict:
        """Per edge: list of (weight, sign, speed) over all paths and cycles."""
        trav = {i: [] for i in range(len(self.graph.edges))}
        for seq, w in self.paths + self.cycles:
            speed = sum(
                self.graph.graph[a][b]["weight"] for a, b in zip(seq, seq[1:])
            )
            for a, b in zip(seq, seq[1:]):
                i = self.graph.graph[a][b]["index"]
                sign = 1.0 if self.graph.edges[i][0] == a else -1.0
                trav[i].append((w, sign, speed))
        return trav

    def endpoint_balance(self) -> dict:
        """(start pushforward - end pushforward) per node, paths only."""
        bal = {n: 0.0 for n in self.graph.nodes}
        for seq, w in self.paths:
            bal[seq[0]] += w
            bal[seq[-1]] -= w
        return bal


def _nodes_to_curve(graph: MetricGraph, seq) -> SampledCurve:
    lengths = [graph.graph[a][b]["weight"] for a, b in zip(seq, seq[1:])]
    total = sum(lengths)
    times = np.concatenate([[0.0], np.cumsum(lengths) / total])
    times[-1] = 1.0
    return SampledCurve(graph, times, [graph.node_point(n) for n in seq])


def _widest_path(arcs: dict, sources, sinks, order: dict):
    """Max-bottleneck path from any source to any sink over residual arcs.

    Deterministic: ties are broken by the given node order.
    """
    best_cap = {n: 0.0 for n in order}
    parent = {}
    heap = []
    for s in sources:
        best_cap[s] = math.inf
        heapq.heappush(heap, (-math.inf, order[s], s))
    seen = set()
    while heap:
        negcap, _, n = heapq.heappop(heap)
        if n in seen:
            continue
        seen.add(n)
        for m in sorted(arcs.get(n, {}), key=order.get):
            cap = min(-negcap, arcs[n][m])
            if cap > best_cap[m] + 1e-18:
                best_cap[m] = cap
                parent[m] = n
                heapq.heappush(heap, (-cap, order[m], m))
    best_sink = None
    for t in sorted(sinks, key=order.get):
        if best_cap[t] > 0.0 and (best_sink is None or best_cap[t] > best_cap[best_sink]):
            best_sink = t
    if best_sink is None:
        return None, 0.0
    seq = [best_sink]
    while seq[-1] not in sources:
        seq.append(parent[seq[-1]])
    seq.reverse()
    return seq, best_cap[best_sink]


def superpose(b: EdgeFlow, tie_break: str = "lex") -> PathDecomposition:
    """Decompose the flow into weighted source-to-sink paths plus cycles.

    Paths follow the flow orientation, so traversal weights add up to |flow|
    on every edge with no cancellation.  Deterministic; tie_break chooses the
    node ordering used to resolve ties ('lex' or 'revlex').
    """
    graph = b.graph
    nodes = sorted(graph.nodes, reverse=(tie_break == "revlex"))
    order = {n: k for k, n in enumerate(nodes)}
    arcs: dict = {n: {} for n in graph.nodes}
    for (u, v, _), fl in zip(graph.edges, b.flow):
        if fl > 0.0:
            arcs[u][v] = arcs[u].get(v, 0.0) + fl
        elif fl < 0.0:
            arcs[v][u] = arcs[v].get(u, 0.0) - fl
    div = b.divergence()
    surplus = {n: d for n, d in div.items() if d > 1e-15}
    deficit = {n: -d for n, d in div.items() if d < -1e-15}
    paths = []
    while surplus:
        seq, cap = _widest_path(arcs, set(surplus), set(deficit), order)
        if seq is None:
            break
        w = min(cap, surplus[seq[0]], deficit[seq[-1]])
        paths.append((seq, w))
        for a, bn in zip(seq, seq[1:]):
            arcs[a][bn] -= w
            if arcs[a][bn] <= 1e-15:
                del arcs[a][bn]
        for store, key in ((surplus, seq[0]), (deficit, seq[-1])):
            store[key] -= w
            if store[key] <= 1e-15:
                del store[key]
    # residual is divergence-free: peel cycles
    cycles = []
    while True:
        start = None
        for n in nodes:
            if arcs.get(n):
                start = n
                break
        if start is None:
            break
        seq = [start]
        seen = {start: 0}
        while True:
            n = seq[-1]
            m = min(arcs[n], key=order.get)
            if m in seen:
                cyc = seq[seen[m]:] + [m]
                cap = min(arcs[a][bn] for a, bn in zip(cyc, cyc[1:]))
                cycles.append((cyc, cap))
                for a, bn in zip(cyc, cyc[1:]):
                    arcs[a][bn] -= cap
                    if arcs[a][bn] <= 1e-15:
                        del arcs[a][bn]
                break
            seen[m] = len(seq)
            seq.append(m)
    return PathDecomposition(graph, paths, cycles)
