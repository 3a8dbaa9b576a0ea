"""Scenario documents: flat sectioned key-value descriptions of a run.

A scenario declares a space, named convex sets, and one run in a plain
text format that is trivially diffable::

    [space]
    kind = euclidean
    dim = 2

    [set A]
    kind = halfspace
    normal = 0,1
    offset = 0

    [run]
    algorithm = cyclic
    sets = A,B
    x0 = 1,1
    max_iter = 100
    output = trace.csv

Vectors are comma-separated reals; tree points read ``vertex,NAME`` or
``edge,INDEX,OFFSET``; hyperboloid points are ambient coordinates or
``exp:`` plus tangent coordinates at the apex; product points join the
factor specs with ``;``.  Unknown sections or keys are hard errors, as
are unresolved set references and weight lists that do not sum to 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .convex_sets import (
    ConvexSet,
    EuclideanHalfspace,
    EuclideanHyperplane,
    GeodesicBall,
    HyperbolicHalfspace,
    ProductSet,
    Subtree,
)
from .errors import ConstructionError, InvalidPointError, ScenarioError
from .geometry import Euclidean, Hyperboloid, Point, ProductSpace, SpaceModel
from .iterations import StopRule
from .metric_tree import MetricTree

__all__ = ["Scenario", "parse_scenario", "serialize_scenario", "parse_point_spec", "point_spec"]

ALGORITHMS = ("cyclic", "averaged", "fixedpoint", "certify", "barycenter")

_ITERATIVE = {"cyclic", "averaged", "fixedpoint"}


@dataclass(eq=True)
class Scenario:
    """A parsed and fully validated scenario document."""

    space: SpaceModel
    sets: dict[str, ConvexSet]
    algorithm: str
    run_sets: list[str]
    output_path: str
    x0: Point | None = None
    witness: Point | None = None
    weights: list[float] | None = None
    stop: StopRule | None = None
    seed: int = 0
    samples: int = 1000
    claim_alpha: float | None = None
    claim_set: str | None = None
    mean_points: list[Point] = field(default_factory=list)


# ---------------------------------------------------------------------
# low-level document structure
# ---------------------------------------------------------------------


class _Section:
    def __init__(self, header: str, line_no: int):
        self.header = header
        self.line_no = line_no
        self.items: list[tuple[str, str, int]] = []

    def keys(self):
        return [k for k, _, _ in self.items]

    def get(self, key: str, line_hint=True):
        hits = [(v, ln) for k, v, ln in self.items if k == key]
        if not hits:
            return None
        if len(hits) > 1:
            raise ScenarioError(f"key repeats {len(hits)} times", line_no=hits[1][1], key=key)
        return hits[0]

    def get_all(self, key: str):
        return [(v, ln) for k, v, ln in self.items if k == key]

    def require(self, key: str):
        hit = self.get(key)
        if hit is None:
            raise ScenarioError("missing mandatory key", line_no=self.line_no, key=key)
        return hit


def _split_document(text: str) -> list[_Section]:
    sections: list[_Section] = []
    current: _Section | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = _Section(line[1:-1].strip(), line_no)
            sections.append(current)
            continue
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {raw!r}", line_no=line_no)
        if current is None:
            raise ScenarioError("key outside any section", line_no=line_no)
        key, value = line.split("=", 1)
        current.items.append((key.strip(), value.strip(), line_no))
    return sections


def _floats(value: str, line_no: int, key: str) -> list[float]:
    try:
        return [float(tok) for tok in value.split(",")]
    except ValueError:
        raise ScenarioError(f"expected comma-separated reals, got {value!r}",
                            line_no=line_no, key=key)


def _int(value: str, line_no: int, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ScenarioError(f"expected an integer, got {value!r}", line_no=line_no, key=key)


def _float(value: str, line_no: int, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ScenarioError(f"expected a real, got {value!r}", line_no=line_no, key=key)


# ---------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------


def _partition_prefixed(items, line_no, allowed_plain):
    """Split section items into plain keys and left./right. sub-items."""
    plain, left, right = [], [], []
    for key, value, ln in items:
        if key.startswith("left."):
            left.append((key[5:], value, ln))
        elif key.startswith("right."):
            right.append((key[6:], value, ln))
        elif key in allowed_plain:
            plain.append((key, value, ln))
        else:
            raise ScenarioError("unknown key", line_no=ln, key=key)
    return plain, left, right


def _build_space(items, line_no) -> SpaceModel:
    kinds = [(v, ln) for k, v, ln in items if k == "kind"]
    if not kinds:
        raise ScenarioError("missing mandatory key", line_no=line_no, key="kind")
    kind, kind_ln = kinds[0]
    if kind == "euclidean" or kind == "hyperboloid":
        allowed = {"kind", "dim"}
        for k, v, ln in items:
            if k not in allowed:
                raise ScenarioError("unknown key", line_no=ln, key=k)
        dims = [(v, ln) for k, v, ln in items if k == "dim"]
        if not dims:
            raise ScenarioError("missing mandatory key", line_no=line_no, key="dim")
        dim = _int(dims[0][0], dims[0][1], "dim")
        try:
            return Euclidean(dim) if kind == "euclidean" else Hyperboloid(dim)
        except ConstructionError as exc:
            raise ScenarioError(str(exc), line_no=dims[0][1], key="dim")
    if kind == "tree":
        edges = []
        for k, v, ln in items:
            if k == "kind":
                continue
            if k != "edge":
                raise ScenarioError("unknown key", line_no=ln, key=k)
            parts = [p.strip() for p in v.split(",")]
            if len(parts) != 3:
                raise ScenarioError(f"expected 'A,B,length', got {v!r}", line_no=ln, key=k)
            edges.append((parts[0], parts[1], _float(parts[2], ln, k)))
        if not edges:
            raise ScenarioError("tree needs at least one 'edge' line", line_no=line_no)
        try:
            return MetricTree(edges)
        except ConstructionError as exc:
            raise ScenarioError(str(exc), line_no=line_no)
    if kind == "product":
        plain, left, right = _partition_prefixed(items, line_no, {"kind"})
        if not left or not right:
            raise ScenarioError("product space needs left.* and right.* keys",
                                line_no=kind_ln)
        return ProductSpace(_build_space(left, line_no), _build_space(right, line_no))
    raise ScenarioError(f"unknown space kind {kind!r}", line_no=kind_ln, key="kind")


# ---------------------------------------------------------------------
# points
# ---------------------------------------------------------------------


def _split_product_spec(text: str, line_no: int, key: str) -> tuple[str, str]:
    depth = 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == ";" and depth == 0:
            return text[:i], text[i + 1:]
    raise ScenarioError(f"product point needs 'left;right', got {text!r}",
                        line_no=line_no, key=key)


def _strip_parens(text: str) -> str:
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        return text[1:-1].strip()
    return text


def parse_point_spec(space: SpaceModel, text: str, line_no: int = 0, key: str = "point") -> Point:
    """Parse a textual point in the conventions of the given space."""
    text = text.strip()
    try:
        if isinstance(space, Euclidean):
            return space.point(_floats(text, line_no, key))
        if isinstance(space, Hyperboloid):
            if text.startswith("exp:"):
                return space.exp_from_base(_floats(text[4:], line_no, key))
            return space.point(_floats(text, line_no, key))
        if isinstance(space, MetricTree):
            parts = [p.strip() for p in text.split(",")]
            if parts[0] == "vertex" and len(parts) == 2:
                return space.vertex_point(parts[1])
            if parts[0] == "edge" and len(parts) == 3:
                return space.edge_point(_int(parts[1], line_no, key),
                                        _float(parts[2], line_no, key))
            raise ScenarioError(
                f"tree point must be 'vertex,NAME' or 'edge,INDEX,OFFSET', got {text!r}",
                line_no=line_no, key=key)
        if isinstance(space, ProductSpace):
            left_text, right_text = _split_product_spec(text, line_no, key)
            pl = parse_point_spec(space.left, _strip_parens(left_text), line_no, key)
            pr = parse_point_spec(space.right, _strip_parens(right_text), line_no, key)
            return space.point((pl, pr))
    except (InvalidPointError, ConstructionError) as exc:
        raise ScenarioError(str(exc), line_no=line_no, key=key)
    raise ScenarioError(f"no point syntax for space {space.describe()}",
                        line_no=line_no, key=key)


def point_spec(point: Point) -> str:
    """Full-precision textual form of a point, inverse to parse_point_spec."""
    space = point.space
    if isinstance(space, (Euclidean, Hyperboloid)):
        return ",".join(f"{v:.17g}" for v in point.payload)
    if isinstance(space, MetricTree):
        v = space.location_vertex(point.payload)
        if v is not None:
            return f"vertex,{v}"
        return f"edge,{point.payload.edge},{point.payload.offset:.17g}"
    if isinstance(space, ProductSpace):
        pl, pr = point.payload
        return f"({point_spec(pl)});({point_spec(pr)})"
    raise ScenarioError(f"no point syntax for space {space.describe()}")


# ---------------------------------------------------------------------
# sets
# ---------------------------------------------------------------------


def _build_set(space: SpaceModel, name: str, items, line_no) -> ConvexSet:
    kinds = [(v, ln) for k, v, ln in items if k == "kind"]
    if not kinds:
        raise ScenarioError("missing mandatory key", line_no=line_no, key="kind")
    kind, kind_ln = kinds[0]

    def only(allowed):
        for k, v, ln in items:
            if k not in allowed:
                raise ScenarioError("unknown key", line_no=ln, key=k)

    def require(key):
        hits = [(v, ln) for k, v, ln in items if k == key]
        if not hits:
            raise ScenarioError("missing mandatory key", line_no=line_no, key=key)
        return hits[0]

    try:
        if kind == "halfspace" or kind == "hyperplane":
            only({"kind", "normal", "offset"})
            normal_v, normal_ln = require("normal")
            offset_v, offset_ln = require("offset")
            cls = EuclideanHalfspace if kind == "halfspace" else EuclideanHyperplane
            return cls(space, _floats(normal_v, normal_ln, "normal"),
                       _float(offset_v, offset_ln, "offset"), name=name)
        if kind == "hyperbolic-halfspace":
            only({"kind", "normal"})
            normal_v, normal_ln = require("normal")
            return HyperbolicHalfspace(space, _floats(normal_v, normal_ln, "normal"),
                                       name=name)
        if kind == "ball":
            only({"kind", "center", "radius"})
            center_v, center_ln = require("center")
            radius_v, radius_ln = require("radius")
            return GeodesicBall(parse_point_spec(space, center_v, center_ln, "center"),
                                _float(radius_v, radius_ln, "radius"), name=name)
        if kind == "subtree":
            only({"kind", "vertices"})
            verts_v, verts_ln = require("vertices")
            return Subtree(space, [v.strip() for v in verts_v.split(",")], name=name)
        if kind == "product":
            if not isinstance(space, ProductSpace):
                raise ScenarioError("product set needs a product space",
                                    line_no=kind_ln, key="kind")
            plain, left, right = _partition_prefixed(items, line_no, {"kind"})
            if not left or not right:
                raise ScenarioError("product set needs left.* and right.* keys",
                                    line_no=kind_ln)
            return ProductSet(space,
                              _build_set(space.left, f"{name}.left", left, line_no),
                              _build_set(space.right, f"{name}.right", right, line_no),
                              name=name)
    except ConstructionError as exc:
        raise ScenarioError(str(exc), line_no=kind_ln)
    raise ScenarioError(f"unknown set kind {kind!r}", line_no=kind_ln, key="kind")


# ---------------------------------------------------------------------
# the run section and whole-document assembly
# ---------------------------------------------------------------------

_RUN_KEYS = {
    "cyclic": {"algorithm", "sets", "x0", "witness", "max_iter",
               "residual_tol", "stall_tol", "output"},
    "averaged": {"algorithm", "sets", "x0", "witness", "weights", "max_iter",
                 "residual_tol", "stall_tol", "output"},
    "fixedpoint": {"algorithm", "sets", "x0", "witness", "max_iter",
                   "residual_tol", "stall_tol", "output"},
    "certify": {"algorithm", "samples", "seed", "witness",
                "claim_alpha", "claim_set", "output"},
    "barycenter": {"algorithm", "point", "weights", "output"},
}


def _parse_weights(value: str, line_no: int) -> list[float]:
    weights = _floats(value, line_no, "weights")
    if any(w < 0 for w in weights):
        raise ScenarioError("weights must be nonnegative", line_no=line_no, key="weights")
    if abs(sum(weights) - 1.0) > 1e-12:
        raise ScenarioError("weights must sum to 1", line_no=line_no, key="weights")
    return weights


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document (see module docstring)."""
    sections = _split_document(text)
    space_sections = [s for s in sections if s.header == "space"]
    run_sections = [s for s in sections if s.header == "run"]
    set_sections = [s for s in sections if s.header.startswith("set ")]
    known = set(space_sections) | set(run_sections) | set(set_sections)
    for s in sections:
        if s not in known:
            raise ScenarioError(f"unknown section [{s.header}]", line_no=s.line_no)
    if len(space_sections) != 1:
        raise ScenarioError(f"need exactly one [space] section, found {len(space_sections)}")
    if len(run_sections) != 1:
        raise ScenarioError(f"need exactly one [run] section, found {len(run_sections)}")

    space = _build_space(space_sections[0].items, space_sections[0].line_no)

    sets: dict[str, ConvexSet] = {}
    for sec in set_sections:
        name = sec.header[4:].strip()
        if not name:
            raise ScenarioError("set section needs a name: [set NAME]", line_no=sec.line_no)
        if name in sets:
            raise ScenarioError(f"duplicate set name '{name}'", line_no=sec.line_no)
        sets[name] = _build_set(space, name, sec.items, sec.line_no)

    run = run_sections[0]
    algorithm_v, algorithm_ln = run.require("algorithm")
    if algorithm_v not in ALGORITHMS:
        raise ScenarioError(f"unknown algorithm {algorithm_v!r}",
                            line_no=algorithm_ln, key="algorithm")
    allowed = _RUN_KEYS[algorithm_v]
    for k, v, ln in run.items:
        if k not in allowed:
            raise ScenarioError("unknown key", line_no=ln, key=k)

    output_v, _ = run.require("output")
    scenario = Scenario(space=space, sets=sets, algorithm=algorithm_v,
                        run_sets=[], output_path=output_v)

    if algorithm_v in _ITERATIVE:
        sets_v, sets_ln = run.require("sets")
        names = [n.strip() for n in sets_v.split(",") if n.strip()]
        if not names:
            raise ScenarioError("empty set list", line_no=sets_ln, key="sets")
        for n in names:
            if n not in sets:
                raise ScenarioError(f"unresolved set reference '{n}'",
                                    line_no=sets_ln, key="sets")
        scenario.run_sets = names
        x0_v, x0_ln = run.require("x0")
        scenario.x0 = parse_point_spec(space, x0_v, x0_ln, "x0")
        max_iter_v, max_iter_ln = run.require("max_iter")
        residual = run.get("residual_tol")
        stall = run.get("stall_tol")
        try:
            scenario.stop = StopRule(
                max_iter=_int(max_iter_v, max_iter_ln, "max_iter"),
                residual_tol=(_float(*residual, "residual_tol") if residual
                              else StopRule.__dataclass_fields__["residual_tol"].default),
                stall_tol=(_float(*stall, "stall_tol") if stall
                           else StopRule.__dataclass_fields__["stall_tol"].default),
            )
        except ConstructionError as exc:
            raise ScenarioError(str(exc), line_no=max_iter_ln, key="max_iter")
        if algorithm_v == "averaged":
            weights = run.get("weights")
            if weights is not None:
                scenario.weights = _parse_weights(*weights)
                if len(scenario.weights) != len(names):
                    raise ScenarioError(
                        f"{len(names)} sets but {len(scenario.weights)} weights",
                        line_no=weights[1], key="weights")
    elif algorithm_v == "certify":
        samples = run.get("samples")
        if samples is not None:
            scenario.samples = _int(*samples, "samples")
            if scenario.samples < 1:
                raise ScenarioError("samples must be >= 1", line_no=samples[1], key="samples")
        seed = run.get("seed")
        if seed is not None:
            scenario.seed = _int(*seed, "seed")
        claim_alpha = run.get("claim_alpha")
        claim_set = run.get("claim_set")
        if (claim_alpha is None) != (claim_set is None):
            raise ScenarioError("claim_alpha and claim_set must appear together",
                                line_no=run.line_no)
        if claim_alpha is not None:
            scenario.claim_alpha = _float(*claim_alpha, "claim_alpha")
            if not 0.0 < scenario.claim_alpha < 1.0:
                raise ScenarioError("claim_alpha must lie in (0, 1)",
                                    line_no=claim_alpha[1], key="claim_alpha")
            scenario.claim_set = claim_set[0]
            if scenario.claim_set not in sets:
                raise ScenarioError(f"unresolved set reference '{scenario.claim_set}'",
                                    line_no=claim_set[1], key="claim_set")
    elif algorithm_v == "barycenter":
        point_items = run.get_all("point")
        if not point_items:
            raise ScenarioError("barycenter needs at least one 'point' line",
                                line_no=run.line_no, key="point")
        scenario.mean_points = [
            parse_point_spec(space, v, ln, "point") for v, ln in point_items
        ]
        weights = run.get("weights")
        if weights is not None:
            scenario.weights = _parse_weights(*weights)
            if len(scenario.weights) != len(scenario.mean_points):
                raise ScenarioError(
                    f"{len(scenario.mean_points)} points but "
                    f"{len(scenario.weights)} weights",
                    line_no=weights[1], key="weights")

    witness = run.get("witness")
    if witness is not None and "witness" in allowed:
        scenario.witness = parse_point_spec(space, witness[0], witness[1], "witness")
    return scenario


# ---------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------


def _space_lines(space: SpaceModel, prefix: str = "") -> list[str]:
    if isinstance(space, Euclidean):
        return [f"{prefix}kind = euclidean", f"{prefix}dim = {space.dim}"]
    if isinstance(space, Hyperboloid):
        return [f"{prefix}kind = hyperboloid", f"{prefix}dim = {space.dim}"]
    if isinstance(space, MetricTree):
        lines = [f"{prefix}kind = tree"]
        lines.extend(
            f"{prefix}edge = {e.a},{e.b},{e.length:.17g}" for e in space.edges
        )
        return lines
    if isinstance(space, ProductSpace):
        lines = [f"{prefix}kind = product"]
        lines.extend(_space_lines(space.left, prefix + "left."))
        lines.extend(_space_lines(space.right, prefix + "right."))
        return lines
    raise ScenarioError(f"cannot serialize space {space.describe()}")


def _set_lines(c: ConvexSet, prefix: str = "") -> list[str]:
    if isinstance(c, EuclideanHalfspace):
        normal = ",".join(f"{v:.17g}" for v in c.normal)
        return [f"{prefix}kind = halfspace", f"{prefix}normal = {normal}",
                f"{prefix}offset = {c.offset:.17g}"]
    if isinstance(c, EuclideanHyperplane):
        normal = ",".join(f"{v:.17g}" for v in c.normal)
        return [f"{prefix}kind = hyperplane", f"{prefix}normal = {normal}",
                f"{prefix}offset = {c.offset:.17g}"]
    if isinstance(c, HyperbolicHalfspace):
        normal = ",".join(f"{v:.17g}" for v in c.normal)
        return [f"{prefix}kind = hyperbolic-halfspace", f"{prefix}normal = {normal}"]
    if isinstance(c, GeodesicBall):
        return [f"{prefix}kind = ball",
                f"{prefix}center = {point_spec(c.center)}",
                f"{prefix}radius = {c.radius:.17g}"]
    if isinstance(c, Subtree):
        return [f"{prefix}kind = subtree",
                f"{prefix}vertices = {','.join(c.vertex_order)}"]
    if isinstance(c, ProductSet):
        lines = [f"{prefix}kind = product"]
        lines.extend(_set_lines(c.left, prefix + "left."))
        lines.extend(_set_lines(c.right, prefix + "right."))
        return lines
    raise ScenarioError(f"cannot serialize set '{c.name}'")


def serialize_scenario(s: Scenario) -> str:
    """Canonical text for a scenario; parse(serialize(s)) equals s."""
    lines = ["[space]"]
    lines.extend(_space_lines(s.space))
    for name, c in s.sets.items():
        lines.append("")
        lines.append(f"[set {name}]")
        lines.extend(_set_lines(c))
    lines.append("")
    lines.append("[run]")
    lines.append(f"algorithm = {s.algorithm}")
    if s.algorithm in _ITERATIVE:
        lines.append(f"sets = {','.join(s.run_sets)}")
        lines.append(f"x0 = {point_spec(s.x0)}")
        lines.append(f"max_iter = {s.stop.max_iter}")
        lines.append(f"residual_tol = {s.stop.residual_tol:.17g}")
        lines.append(f"stall_tol = {s.stop.stall_tol:.17g}")
        if s.algorithm == "averaged" and s.weights is not None:
            lines.append(f"weights = {','.join(f'{w:.17g}' for w in s.weights)}")
    elif s.algorithm == "certify":
        lines.append(f"samples = {s.samples}")
        lines.append(f"seed = {s.seed}")
        if s.claim_alpha is not None:
            lines.append(f"claim_alpha = {s.claim_alpha:.17g}")
            lines.append(f"claim_set = {s.claim_set}")
    elif s.algorithm == "barycenter":
        for p in s.mean_points:
            lines.append(f"point = {point_spec(p)}")
        if s.weights is not None:
            lines.append(f"weights = {','.join(f'{w:.17g}' for w in s.weights)}")
    if s.witness is not None and "witness" in _RUN_KEYS[s.algorithm]:
        lines.append(f"witness = {point_spec(s.witness)}")
    lines.append(f"output = {s.output_path}")
    return "\n".join(lines) + "\n"
