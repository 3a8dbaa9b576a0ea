"""Closed convex sets with closed-form metric projections.

Each descriptor knows its space, a display name, a membership test, and
the nearest-point projection.  All sets here are closed and geodesically
convex in their model, so the projection is single valued and firmly
nonexpansive.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConstructionError, DomainError, SpaceMismatchError
from .geometry import (
    Euclidean,
    Hyperboloid,
    Point,
    ProductSpace,
    SpaceModel,
    check_same_space,
    distance,
    geodesic_point,
    minkowski,
)
from .metric_tree import MetricTree

__all__ = [
    "ConvexSet",
    "EuclideanHalfspace",
    "EuclideanHyperplane",
    "HyperbolicHalfspace",
    "GeodesicBall",
    "Subtree",
    "ProductSet",
    "project",
    "projection_defect",
]


class ConvexSet:
    """Base class for closed convex sets with an exact projection."""

    __slots__ = ("space", "name")

    def __init__(self, space: SpaceModel, name: str):
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "name", name)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def _check_point(self, x: Point):
        if x.space is not self.space and x.space != self.space:
            raise SpaceMismatchError(
                f"point in {x.space.describe()} vs set '{self.name}' in "
                f"{self.space.describe()}"
            )

    def project(self, x: Point) -> Point:
        raise NotImplementedError

    def contains(self, x: Point, tol: float | None = None) -> bool:
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"{self.describe()} [{self.name}]"

    def _eq_key(self):
        raise NotImplementedError

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.space == other.space and self._eq_key() == other._eq_key()

    def __hash__(self):
        return hash((type(self).__name__, self.name))


class EuclideanHalfspace(ConvexSet):
    """{x : <normal, x> <= offset} in a Euclidean model."""

    __slots__ = ("normal", "offset", "_norm_sq")

    def __init__(self, space: Euclidean, normal, offset: float, name: str = "halfspace"):
        if not isinstance(space, Euclidean):
            raise ConstructionError("EuclideanHalfspace requires a Euclidean space")
        super().__init__(space, name)
        arr = np.array(normal, dtype=float)
        if arr.shape != (space.dim,):
            raise ConstructionError(f"normal must have {space.dim} coordinates")
        norm_sq = float(arr @ arr)
        if norm_sq <= 0 or not math.isfinite(norm_sq):
            raise ConstructionError("halfspace normal must be nonzero and finite")
        arr.setflags(write=False)
        object.__setattr__(self, "normal", arr)
        object.__setattr__(self, "offset", float(offset))
        object.__setattr__(self, "_norm_sq", norm_sq)

    def project(self, x: Point) -> Point:
        self._check_point(x)
        gap = float(self.normal @ x.payload) - self.offset
        if gap <= 0.0:
            return x
        return Point(self.space, self.space.validate_payload(
            x.payload - (gap / self._norm_sq) * self.normal))

    def contains(self, x: Point, tol: float | None = None) -> bool:
        self._check_point(x)
        tol = self.space.tolerances.eq_tol if tol is None else tol
        gap = float(self.normal @ x.payload) - self.offset
        return gap <= tol * math.sqrt(self._norm_sq)

    def _eq_key(self):
        return (tuple(self.normal), self.offset)

    def describe(self) -> str:
        coeffs = ", ".join(f"{v:g}" for v in self.normal)
        return f"halfspace <({coeffs}), x> <= {self.offset:g}"


class EuclideanHyperplane(ConvexSet):
    """{x : <normal, x> = offset}: an affine hyperplane (a line in the plane)."""

    __slots__ = ("normal", "offset", "_norm_sq")

    def __init__(self, space: Euclidean, normal, offset: float, name: str = "hyperplane"):
        if not isinstance(space, Euclidean):
            raise ConstructionError("EuclideanHyperplane requires a Euclidean space")
        super().__init__(space, name)
        arr = np.array(normal, dtype=float)
        if arr.shape != (space.dim,):
            raise ConstructionError(f"normal must have {space.dim} coordinates")
        norm_sq = float(arr @ arr)
        if norm_sq <= 0 or not math.isfinite(norm_sq):
            raise ConstructionError("hyperplane normal must be nonzero and finite")
        arr.setflags(write=False)
        object.__setattr__(self, "normal", arr)
        object.__setattr__(self, "offset", float(offset))
        object.__setattr__(self, "_norm_sq", norm_sq)

    def project(self, x: Point) -> Point:
        self._check_point(x)
        gap = float(self.normal @ x.payload) - self.offset
        if gap == 0.0:
            return x
        return Point(self.space, self.space.validate_payload(
            x.payload - (gap / self._norm_sq) * self.normal))

    def contains(self, x: Point, tol: float | None = None) -> bool:
        self._check_point(x)
        tol = self.space.tolerances.eq_tol if tol is None else tol
        gap = abs(float(self.normal @ x.payload) - self.offset)
        return gap <= tol * math.sqrt(self._norm_sq)

    def _eq_key(self):
        return (tuple(self.normal), self.offset)

    def describe(self) -> str:
        coeffs = ", ".join(f"{v:g}" for v in self.normal)
        return f"hyperplane <({coeffs}), x> = {self.offset:g}"


class HyperbolicHalfspace(ConvexSet):
    """{x : m(u, x) <= 0} for a unit spacelike Minkowski normal u.

    The boundary is the totally geodesic hypersurface orthogonal to u;
    the projection of an exterior point subtracts the u-component and
    renormalizes onto the sheet.  A non-unit spacelike normal is
    normalized at construction.
    """

    __slots__ = ("normal",)

    def __init__(self, space: Hyperboloid, normal, name: str = "hyperbolic-halfspace"):
        if not isinstance(space, Hyperboloid):
            raise ConstructionError("HyperbolicHalfspace requires a Hyperboloid space")
        super().__init__(space, name)
        arr = np.array(normal, dtype=float)
        if arr.shape != (space.dim + 1,):
            raise ConstructionError(f"normal must have {space.dim + 1} ambient coordinates")
        mm = minkowski(arr, arr)
        if not (math.isfinite(mm) and mm > 0):
            raise ConstructionError("normal must be spacelike: m(u, u) > 0")
        arr = arr / math.sqrt(mm)
        arr.setflags(write=False)
        object.__setattr__(self, "normal", arr)

    def project(self, x: Point) -> Point:
        self._check_point(x)
        s = minkowski(self.normal, x.payload)
        if s <= 0.0:
            return x
        w = x.payload - s * self.normal
        scale = math.sqrt(-minkowski(w, w))
        return Point(self.space, self.space.validate_payload(w / scale))

    def contains(self, x: Point, tol: float | None = None) -> bool:
        self._check_point(x)
        tol = self.space.tolerances.eq_tol if tol is None else tol
        return minkowski(self.normal, x.payload) <= tol

    def _eq_key(self):
        return tuple(self.normal)

    def describe(self) -> str:
        coeffs = ", ".join(f"{v:g}" for v in self.normal)
        return f"hyperbolic halfspace m(({coeffs}), x) <= 0"


class GeodesicBall(ConvexSet):
    """Closed metric ball; convex in every nonpositively curved model."""

    __slots__ = ("center", "radius")

    def __init__(self, center: Point, radius: float, name: str = "ball"):
        super().__init__(center.space, name)
        radius = float(radius)
        if not (math.isfinite(radius) and radius > 0):
            raise ConstructionError(f"ball radius must be positive, got {radius}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", radius)

    def project(self, x: Point) -> Point:
        self._check_point(x)
        d = distance(self.center, x)
        if d <= self.radius:
            return x
        return geodesic_point(self.center, x, self.radius / d)

    def contains(self, x: Point, tol: float | None = None) -> bool:
        self._check_point(x)
        tol = self.space.tolerances.eq_tol if tol is None else tol
        return distance(self.center, x) <= self.radius + tol

    def _eq_key(self):
        return (self.center, self.radius)

    def describe(self) -> str:
        return f"ball(center={self.space.format_payload(self.center.payload)}, r={self.radius:g})"


class Subtree(ConvexSet):
    """The closed subtree induced by a connected vertex subset.

    The set consists of the chosen vertices together with every full edge
    joining two of them.  An exterior point projects to its gate: the
    subtree vertex nearest to it.
    """

    __slots__ = ("vertex_set", "edge_set", "vertex_order")

    def __init__(self, tree: MetricTree, vertices, name: str = "subtree"):
        if not isinstance(tree, MetricTree):
            raise ConstructionError("Subtree requires a MetricTree space")
        super().__init__(tree, name)
        names = [str(v) for v in vertices]
        if not names:
            raise ConstructionError("subtree vertex set is empty")
        unknown = [v for v in names if v not in tree._incident]
        if unknown:
            raise ConstructionError(f"unknown vertices: {unknown}")
        vset = frozenset(names)
        eset = frozenset(
            i for i, e in enumerate(tree.edges) if e.a in vset and e.b in vset
        )
        # connectivity of the induced subgraph
        order = sorted(vset)
        reached = {order[0]}
        frontier = [order[0]]
        while frontier:
            u = frontier.pop()
            for v, idx in tree._adj[u]:
                if idx in eset and v not in reached:
                    reached.add(v)
                    frontier.append(v)
        if reached != vset:
            raise ConstructionError(
                f"vertex set {sorted(vset)} does not induce a connected subtree"
            )
        object.__setattr__(self, "vertex_set", vset)
        object.__setattr__(self, "edge_set", eset)
        object.__setattr__(self, "vertex_order", tuple(order))

    def project(self, x: Point) -> Point:
        self._check_point(x)
        tree: MetricTree = self.space
        loc = x.payload
        if loc.edge in self.edge_set:
            return x
        v = tree.location_vertex(loc)
        if v is not None and v in self.vertex_set:
            return x
        best_v = None
        best_d = math.inf
        for w in self.vertex_order:
            d = tree.distance_to_vertex(loc, w)
            if d < best_d:
                best_d = d
                best_v = w
        return tree.vertex_point(best_v)

    def contains(self, x: Point, tol: float | None = None) -> bool:
        self._check_point(x)
        tree: MetricTree = self.space
        loc = x.payload
        if loc.edge in self.edge_set:
            return True
        v = tree.location_vertex(loc)
        if v is not None and v in self.vertex_set:
            return True
        tol = self.space.tolerances.eq_tol if tol is None else tol
        return distance(x, self.project(x)) <= tol

    def _eq_key(self):
        return self.vertex_set

    def describe(self) -> str:
        return f"subtree({', '.join(self.vertex_order)})"


class ProductSet(ConvexSet):
    """Cartesian product of a set in each factor of a product space."""

    __slots__ = ("left", "right")

    def __init__(self, space: ProductSpace, left: ConvexSet, right: ConvexSet,
                 name: str = "product-set"):
        if not isinstance(space, ProductSpace):
            raise ConstructionError("ProductSet requires a ProductSpace")
        if left.space != space.left or right.space != space.right:
            raise ConstructionError("factor sets must live in the product's factors")
        super().__init__(space, name)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    def project(self, x: Point) -> Point:
        self._check_point(x)
        pl, pr = x.payload
        return Point(self.space, (self.left.project(pl), self.right.project(pr)))

    def contains(self, x: Point, tol: float | None = None) -> bool:
        self._check_point(x)
        pl, pr = x.payload
        return self.left.contains(pl, tol) and self.right.contains(pr, tol)

    def _eq_key(self):
        return (self.left, self.right)

    def describe(self) -> str:
        return f"product({self.left.describe()}, {self.right.describe()})"


def project(c: ConvexSet, x: Point) -> Point:
    """Nearest point of the closed convex set ``c`` to ``x``."""
    return c.project(x)


def projection_defect(c: ConvexSet, x: Point, y: Point) -> float:
    """Slack in d(x, Px)^2 + d(Px, y)^2 <= d(x, y)^2 for y in the set.

    Nonnegative (up to rounding) for every x and every member y; this is
    the variational inequality characterizing the metric projection.
    """
    check_same_space(x, y)
    if not c.contains(y):
        raise DomainError(f"challenge point is not in the set '{c.name}'")
    px = c.project(x)
    return distance(x, y) ** 2 - distance(x, px) ** 2 - distance(px, y) ** 2
