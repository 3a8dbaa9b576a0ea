"""Finite metric trees: acyclic length spaces with unique vertex paths.

A tree point lives on an edge at an arc-length offset.  Locations are kept
canonical so that equality is well defined: an offset at (or within
snapping distance of) an endpoint is rewritten to a designated vertex
form, namely the smallest incident edge index with the offset measured
from that edge's first vertex.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, EdgeListError, InvalidPointError
from .geometry import Point, SpaceModel, ToleranceConfig

__all__ = ["TreeEdge", "TreeLocation", "MetricTree", "parse_edge_list"]

# Offsets within this distance of an endpoint snap to the vertex form.
_SNAP = 1e-12


@dataclass(frozen=True)
class TreeEdge:
    a: str
    b: str
    length: float


@dataclass(frozen=True)
class TreeLocation:
    """Canonical payload: index of the carrying edge plus arc-length offset."""

    edge: int
    offset: float


class MetricTree(SpaceModel):
    """A connected acyclic graph with positive edge lengths as a geodesic space.

    Geodesics follow the unique vertex path between the carrying edges;
    all vertex-to-vertex distances are precomputed at construction.
    """

    __slots__ = ("vertices", "edges", "_adj", "_edge_of", "_vdist", "_incident")

    def __init__(self, edges, vertices=None, tolerances: ToleranceConfig | None = None):
        super().__init__(tolerances)
        edge_objs = []
        seen_order: list[str] = []
        seen = set()
        for spec in edges:
            if isinstance(spec, TreeEdge):
                a, b, length = spec.a, spec.b, spec.length
            else:
                a, b, length = spec
            a, b = str(a), str(b)
            length = float(length)
            if a == b:
                raise ConstructionError(f"self-loop at vertex '{a}'")
            if not (math.isfinite(length) and length > 0):
                raise ConstructionError(f"edge ({a}, {b}) has nonpositive length {length}")
            edge_objs.append(TreeEdge(a, b, length))
            for v in (a, b):
                if v not in seen:
                    seen.add(v)
                    seen_order.append(v)
        if not edge_objs:
            raise ConstructionError("a metric tree needs at least one edge")
        if vertices is None:
            vertex_list = seen_order
        else:
            vertex_list = [str(v) for v in vertices]
            if len(set(vertex_list)) != len(vertex_list):
                raise ConstructionError("duplicate vertex ids")
            missing = seen - set(vertex_list)
            if missing:
                raise ConstructionError(f"edges reference undeclared vertices: {sorted(missing)}")

        object.__setattr__(self, "vertices", tuple(vertex_list))
        object.__setattr__(self, "edges", tuple(edge_objs))

        adj: dict[str, list[tuple[str, int]]] = {v: [] for v in vertex_list}
        edge_of: dict[tuple[str, str], int] = {}
        incident: dict[str, int] = {}
        for idx, e in enumerate(edge_objs):
            adj[e.a].append((e.b, idx))
            adj[e.b].append((e.a, idx))
            if (e.a, e.b) in edge_of or (e.b, e.a) in edge_of:
                raise ConstructionError(f"parallel edge between '{e.a}' and '{e.b}'")
            edge_of[(e.a, e.b)] = idx
            edge_of[(e.b, e.a)] = idx
            for v in (e.a, e.b):
                if v not in incident or idx < incident[v]:
                    incident[v] = idx
        object.__setattr__(self, "_adj", adj)
        object.__setattr__(self, "_edge_of", edge_of)
        object.__setattr__(self, "_incident", incident)

        if len(edge_objs) != len(vertex_list) - 1:
            raise ConstructionError(
                f"{len(vertex_list)} vertices and {len(edge_objs)} edges cannot form a tree"
            )
        vdist = {root: self._bfs_lengths(root) for root in vertex_list}
        if any(len(row) != len(vertex_list) for row in vdist.values()):
            raise ConstructionError("edge graph is not connected")
        object.__setattr__(self, "_vdist", vdist)

    def _bfs_lengths(self, root: str) -> dict[str, float]:
        dist = {root: 0.0}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v, idx in self._adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + self.edges[idx].length
                    queue.append(v)
        return dist

    # -- location helpers --------------------------------------------

    def vertex_location(self, name: str) -> TreeLocation:
        """Canonical location of a named vertex."""
        name = str(name)
        if name not in self._incident:
            raise InvalidPointError(f"unknown vertex '{name}'")
        idx = self._incident[name]
        e = self.edges[idx]
        return TreeLocation(idx, 0.0 if e.a == name else e.length)

    def vertex_point(self, name: str) -> Point:
        return Point(self, self.vertex_location(name))

    def edge_point(self, edge: int, offset: float) -> Point:
        return self.point((edge, offset))

    def location_vertex(self, loc: TreeLocation) -> str | None:
        """Vertex name if the location sits on one, else None."""
        e = self.edges[loc.edge]
        if loc.offset == 0.0:
            return e.a
        if loc.offset == e.length:
            return e.b
        return None

    def _canonical(self, edge: int, offset: float) -> TreeLocation:
        e = self.edges[edge]
        snap = _SNAP * max(1.0, e.length)
        if offset <= snap:
            return self.vertex_location(e.a)
        if offset >= e.length - snap:
            return self.vertex_location(e.b)
        return TreeLocation(edge, offset)

    def validate_payload(self, payload):
        if isinstance(payload, TreeLocation):
            edge, offset = payload.edge, payload.offset
        else:
            try:
                edge, offset = payload
            except (TypeError, ValueError):
                raise InvalidPointError(
                    "tree payload must be a TreeLocation or an (edge, offset) pair"
                )
        if isinstance(edge, str) or not 0 <= int(edge) < len(self.edges):
            raise InvalidPointError(f"edge index {edge!r} out of range")
        edge = int(edge)
        offset = float(offset)
        if not 0.0 <= offset <= self.edges[edge].length:
            raise InvalidPointError(
                f"offset {offset} outside [0, {self.edges[edge].length}] on edge {edge}"
            )
        return self._canonical(edge, offset)

    def _endpoint_offsets(self, loc: TreeLocation) -> tuple[tuple[str, float], tuple[str, float]]:
        e = self.edges[loc.edge]
        return (e.a, loc.offset), (e.b, e.length - loc.offset)

    def payload_distance(self, a: TreeLocation, b: TreeLocation) -> float:
        if a.edge == b.edge:
            return abs(a.offset - b.offset)
        best = math.inf
        for u, off_u in self._endpoint_offsets(a):
            du = self._vdist[u]
            for v, off_v in self._endpoint_offsets(b):
                cand = off_u + du[v] + off_v
                if cand < best:
                    best = cand
        return best

    def vertex_distance(self, u: str, v: str) -> float:
        return self._vdist[str(u)][str(v)]

    def distance_to_vertex(self, loc: TreeLocation, v: str) -> float:
        (ua, off_a), (ub, off_b) = self._endpoint_offsets(loc)
        return min(off_a + self._vdist[ua][v], off_b + self._vdist[ub][v])

    def vertex_path(self, u: str, v: str) -> list[str]:
        """Unique vertex path from u to v, inclusive."""
        if u == v:
            return [u]
        parent: dict[str, str] = {u: u}
        queue = deque([u])
        while queue:
            w = queue.popleft()
            if w == v:
                break
            for x, _ in self._adj[w]:
                if x not in parent:
                    parent[x] = w
                    queue.append(x)
        path = [v]
        while path[-1] != u:
            path.append(parent[path[-1]])
        path.reverse()
        return path

    def _route_segments(self, a: TreeLocation, b: TreeLocation):
        """Directed (edge, from_offset, to_offset) segments of the geodesic a -> b."""
        best = None
        for u, off_u in self._endpoint_offsets(a):
            du = self._vdist[u]
            for v, off_v in self._endpoint_offsets(b):
                cand = off_u + du[v] + off_v
                if best is None or cand < best[0]:
                    best = (cand, u, v, off_u, off_v)
        _, u, v, off_u, off_v = best
        segments = []
        ea, eb = self.edges[a.edge], self.edges[b.edge]
        if off_u > 0.0:
            segments.append((a.edge, a.offset, 0.0 if u == ea.a else ea.length))
        path = self.vertex_path(u, v)
        for p, q in zip(path, path[1:]):
            idx = self._edge_of[(p, q)]
            e = self.edges[idx]
            segments.append((idx, 0.0, e.length) if e.a == p else (idx, e.length, 0.0))
        if off_v > 0.0:
            segments.append((b.edge, eb.length if v == eb.b else 0.0, b.offset))
        return segments

    def payload_interpolate(self, a: TreeLocation, b: TreeLocation, t: float):
        total = self.payload_distance(a, b)
        target = t * total
        if a.edge == b.edge:
            step = b.offset - a.offset
            sign = 1.0 if step >= 0 else -1.0
            return self._canonical(a.edge, a.offset + sign * target)
        remaining = target
        for edge, start, stop in self._route_segments(a, b):
            seg_len = abs(stop - start)
            if seg_len <= 0.0:
                continue
            if remaining <= seg_len:
                sign = 1.0 if stop >= start else -1.0
                return self._canonical(edge, start + sign * remaining)
            remaining -= seg_len
        return b

    def sample_payload(self, rng: np.random.Generator):
        idx = int(rng.integers(0, len(self.edges)))
        offset = float(rng.uniform(0.0, self.edges[idx].length))
        return self._canonical(idx, offset)

    def payloads_equal(self, a: TreeLocation, b: TreeLocation) -> bool:
        return a.edge == b.edge and a.offset == b.offset

    def format_payload(self, payload: TreeLocation) -> str:
        v = self.location_vertex(payload)
        if v is not None:
            return f"vertex,{v}"
        return f"edge,{payload.edge},{payload.offset:.17g}"

    def describe(self) -> str:
        return f"MetricTree({len(self.vertices)} vertices, {len(self.edges)} edges)"

    def __eq__(self, other):
        return (
            isinstance(other, MetricTree)
            and other.vertices == self.vertices
            and other.edges == self.edges
        )

    def __hash__(self):
        return hash(("tree", self.vertices, self.edges))


def parse_edge_list(text: str, tolerances: ToleranceConfig | None = None) -> MetricTree:
    """Build a metric tree from plain text, one edge per line.

    Each nonblank line must read "vertexA vertexB length" with arbitrary
    whitespace-free tokens for the vertices.  Malformed lines raise
    ``EdgeListError`` with the 1-based line number.
    """
    edges = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise EdgeListError(line_no, f"expected 'vertexA vertexB length', got {raw!r}")
        a, b, length_token = tokens
        try:
            length = float(length_token)
        except ValueError:
            raise EdgeListError(line_no, f"length {length_token!r} is not a number")
        if not (math.isfinite(length) and length > 0):
            raise EdgeListError(line_no, f"length must be positive, got {length}")
        edges.append((a, b, length))
    if not edges:
        raise EdgeListError(0, "edge list is empty")
    try:
        return MetricTree(edges, tolerances=tolerances)
    except ConstructionError as exc:
        raise ConstructionError(f"edge list does not describe a tree: {exc}") from exc
