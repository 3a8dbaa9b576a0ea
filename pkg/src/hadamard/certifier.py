"""Randomized property suite for the package's metric inequalities.

Each check kind samples one inequality (curvature defect,
Cauchy-Schwarz, projection firmness, the quasi-firm theorems, ...) at
seeded random inputs, records the worst defect together with the inputs
achieving it, and passes when that defect clears the model's tolerance.
Streams derive from per-check seeds (PCG64 via ``SeedSequence``), so
reports are deterministic and independent of any execution order, and a
recorded witness can always be re-evaluated to reproduce its defect.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .barycenter import WeightedPoints, frechet_mean, variance_defect
from .convex_sets import ConvexSet, projection_defect
from .errors import CheckSpecError
from .geometry import Point, SpaceModel, cat0_defect, distance, geodesic_point, quasilinearization
from .iterations import (
    StopRule,
    approximate_shadows,
    attach_shadows,
    averaged_projections,
    cyclic_projections,
    shadow_cauchy_worst_defect,
)
from .operators import (
    Composition,
    ConvexCombination,
    Projection,
    discrepancy,
    fold_composition_alpha,
    combination_alpha,
    quasi_firm_defect,
)

__all__ = [
    "CAT0",
    "CAUCHY_SCHWARZ",
    "PROJECTION_FIRM",
    "PROJECTION_INEQ",
    "QUASI_FIRM",
    "COMPOSITION_THEOREM",
    "COMBINATION_THEOREM",
    "FIX_CONVEXITY",
    "VARIANCE_INEQ",
    "FEJER_RUN",
    "CHECK_KINDS",
    "CheckSpec",
    "CheckResult",
    "CertificateReport",
    "sample_point",
    "run_check",
    "run_suite",
    "reevaluate_witness",
    "default_suite",
    "space_suite",
]

CAT0 = "cat0"
CAUCHY_SCHWARZ = "cauchy_schwarz"
PROJECTION_FIRM = "projection_firm"
PROJECTION_INEQ = "projection_ineq"
QUASI_FIRM = "quasi_firm"
COMPOSITION_THEOREM = "composition_theorem"
COMBINATION_THEOREM = "combination_theorem"
FIX_CONVEXITY = "fix_convexity"
VARIANCE_INEQ = "variance_ineq"
FEJER_RUN = "fejer_run"

CHECK_KINDS = (
    CAT0,
    CAUCHY_SCHWARZ,
    PROJECTION_FIRM,
    PROJECTION_INEQ,
    QUASI_FIRM,
    COMPOSITION_THEOREM,
    COMBINATION_THEOREM,
    FIX_CONVEXITY,
    VARIANCE_INEQ,
    FEJER_RUN,
)

# Checks whose inputs pass through an iterative barycenter solve get the
# looser tolerance; everything else uses the model's own.
_BARYCENTER_BOUND_KINDS = {COMBINATION_THEOREM, VARIANCE_INEQ}
_BARYCENTER_TOL = 1e-6


def sample_point(space: SpaceModel, rng: np.random.Generator) -> Point:
    """Seeded sample satisfying the space's point invariants.

    Euclidean models draw standard normal coordinates, the hyperboloid
    maps a normal tangent vector at the apex through the exponential
    map, trees pick a uniform edge then a uniform offset, and products
    sample factor-wise.
    """
    return space.sample(rng)


@dataclass(frozen=True)
class CheckSpec:
    """One randomized check: a kind, a space, subjects, samples, a seed."""

    kind: str
    space: SpaceModel
    samples: int
    seed: int
    payload: dict = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        if self.kind not in CHECK_KINDS:
            raise CheckSpecError(f"unknown check kind '{self.kind}'")
        if self.samples < 1:
            raise CheckSpecError("samples must be >= 1")

    @property
    def tolerance(self) -> float:
        if self.kind in _BARYCENTER_BOUND_KINDS:
            return max(_BARYCENTER_TOL, self.space.defect_tolerance)
        return self.space.defect_tolerance


@dataclass(frozen=True)
class CheckResult:
    kind: str
    label: str
    space: str
    samples: int
    seed: int
    worst_defect: float
    witness: tuple
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.worst_defect >= -self.tolerance

    def text_line(self) -> str:
        tag = f"{self.kind}" + (f"[{self.label}]" if self.label else "")
        return (
            f"{'PASS' if self.passed else 'FAIL'} {tag} on {self.space}: "
            f"worst defect {self.worst_defect:.6e} at tolerance {self.tolerance:g} "
            f"({self.samples} samples, seed {self.seed})"
        )


@dataclass(frozen=True)
class CertificateReport:
    entries: tuple[CheckResult, ...]
    suite_seed: int | None
    wall_time: float
    model_summary: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def to_text(self) -> str:
        lines = [
            f"certificate suite: {len(self.entries)} checks, "
            f"{'all passed' if self.passed else 'FAILURES present'}",
            f"models: {', '.join(self.model_summary)}",
            f"suite seed: {self.suite_seed}",
            f"wall time: {self.wall_time:.3f} s",
        ]
        lines.extend(e.text_line() for e in self.entries)
        return "\n".join(lines) + "\n"

    def to_csv(self, stream) -> None:
        stream.write("kind,samples,seed,worst_defect,pass\n")
        for e in self.entries:
            stream.write(
                f"{e.kind},{e.samples},{e.seed},{e.worst_defect:.17g},"
                f"{'true' if e.passed else 'false'}\n"
            )


def _payload(spec: CheckSpec, key: str):
    if key not in spec.payload:
        raise CheckSpecError(f"check '{spec.kind}' needs payload key '{key}'")
    return spec.payload[key]


def _op_and_alphas(spec: CheckSpec):
    factors = _payload(spec, "factors")
    if len(factors) < 2:
        raise CheckSpecError("composition check needs at least two factors")
    ops = [op for op, _ in factors]
    alphas = [a for _, a in factors]
    composed = Composition(tuple(reversed(ops)))
    return composed, fold_composition_alpha(alphas)


def _combination_subjects(spec: CheckSpec):
    ops = _payload(spec, "ops")
    alphas = _payload(spec, "alphas")
    weights = _payload(spec, "weights")
    combo = ConvexCombination(weights, ops)
    return combo, combination_alpha(alphas)


def _fejer_defect(spec: CheckSpec, x0: Point) -> float:
    sets = _payload(spec, "sets")
    witness = _payload(spec, "witness")
    rule = spec.payload.get("rule", StopRule(max_iter=200))
    algorithm = spec.payload.get("algorithm", "cyclic")
    if algorithm == "cyclic":
        trace = cyclic_projections(sets, x0, rule, witness=witness)
    elif algorithm == "averaged":
        trace = averaged_projections(sets, x0, rule, witness=witness)
    else:
        raise CheckSpecError(f"unknown fejer algorithm '{algorithm}'")
    worst = min(trace.fejer_gaps) if trace.fejer_gaps else 0.0
    attach_shadows(trace, approximate_shadows(trace, sets), approximate=True)
    return min(worst, shadow_cauchy_worst_defect(trace))


def _evaluate(spec: CheckSpec, rng: np.random.Generator):
    """Yield (defect, witness_inputs) pairs, one per sample."""
    space = spec.space
    kind = spec.kind
    if kind == CAT0:
        for _ in range(spec.samples):
            x, y, z = (space.sample(rng) for _ in range(3))
            t = float(rng.uniform())
            yield cat0_defect(x, y, z, t), (x, y, z, t)
    elif kind == CAUCHY_SCHWARZ:
        for _ in range(spec.samples):
            x, z, y, w = (space.sample(rng) for _ in range(4))
            defect = distance(x, z) * distance(y, w) - abs(quasilinearization(x, z, y, w))
            yield defect, (x, z, y, w)
    elif kind == PROJECTION_FIRM:
        op = Projection(_payload(spec, "set"))
        for _ in range(spec.samples):
            x, y = space.sample(rng), space.sample(rng)
            defect = discrepancy(op, x, y) - distance(op.apply(x), op.apply(y)) ** 2
            yield defect, (x, y)
    elif kind == PROJECTION_INEQ:
        c = _payload(spec, "set")
        for _ in range(spec.samples):
            x = space.sample(rng)
            y = c.project(space.sample(rng))
            yield projection_defect(c, x, y), (x, y)
    elif kind == QUASI_FIRM:
        op = _payload(spec, "op")
        alpha = _payload(spec, "alpha")
        fixed = _payload(spec, "fixed_points")
        for _ in range(spec.samples):
            x = space.sample(rng)
            for y in fixed:
                yield quasi_firm_defect(op, alpha, x, y), (x, y)
    elif kind == COMPOSITION_THEOREM:
        composed, alpha = _op_and_alphas(spec)
        witness = _payload(spec, "witness")
        for _ in range(spec.samples):
            x = space.sample(rng)
            yield quasi_firm_defect(composed, alpha, x, witness), (x, witness)
    elif kind == COMBINATION_THEOREM:
        combo, alpha = _combination_subjects(spec)
        witness = _payload(spec, "witness")
        for _ in range(spec.samples):
            x = space.sample(rng)
            yield quasi_firm_defect(combo, alpha, x, witness), (x, witness)
    elif kind == FIX_CONVEXITY:
        c = _payload(spec, "set")
        op = Projection(c)
        for _ in range(spec.samples):
            y1 = c.project(space.sample(rng))
            y2 = c.project(space.sample(rng))
            mid = geodesic_point(y1, y2, 0.5)
            yield -distance(op.apply(mid), mid), (y1, y2)
    elif kind == VARIANCE_INEQ:
        size = spec.payload.get("instance_size", 4)
        challengers = spec.payload.get("challengers", 50)
        for _ in range(spec.samples):
            pts = [space.sample(rng) for _ in range(size)]
            raw = rng.uniform(0.05, 1.0, size)
            weights = tuple(float(v) for v in raw / raw.sum())
            wp = WeightedPoints(pts, weights)
            mean = frechet_mean(wp)
            for _ in range(challengers):
                y = space.sample(rng)
                yield variance_defect(wp, mean, y), (tuple(pts), weights, y)
    elif kind == FEJER_RUN:
        fixed_x0 = spec.payload.get("x0")
        for _ in range(spec.samples):
            x0 = fixed_x0 if fixed_x0 is not None else space.sample(rng)
            yield _fejer_defect(spec, x0), (x0,)
    else:  # pragma: no cover - guarded by CheckSpec validation
        raise CheckSpecError(f"unknown check kind '{kind}'")


def run_check(spec: CheckSpec) -> CheckResult:
    """Evaluate one check; the result records the worst sampled defect."""
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    worst = math.inf
    worst_witness: tuple = ()
    for defect, witness in _evaluate(spec, rng):
        if defect < worst:
            worst = defect
            worst_witness = witness
    return CheckResult(
        kind=spec.kind,
        label=spec.label,
        space=spec.space.describe(),
        samples=spec.samples,
        seed=spec.seed,
        worst_defect=worst,
        witness=worst_witness,
        tolerance=spec.tolerance,
    )


def reevaluate_witness(spec: CheckSpec, witness: tuple) -> float:
    """Recompute the defect of a recorded witness for its check.

    Reproduces the recorded worst defect exactly, since every check's
    defect is a deterministic function of its inputs.
    """
    kind = spec.kind
    if kind == CAT0:
        x, y, z, t = witness
        return cat0_defect(x, y, z, t)
    if kind == CAUCHY_SCHWARZ:
        x, z, y, w = witness
        return distance(x, z) * distance(y, w) - abs(quasilinearization(x, z, y, w))
    if kind == PROJECTION_FIRM:
        op = Projection(_payload(spec, "set"))
        x, y = witness
        return discrepancy(op, x, y) - distance(op.apply(x), op.apply(y)) ** 2
    if kind == PROJECTION_INEQ:
        x, y = witness
        return projection_defect(_payload(spec, "set"), x, y)
    if kind == QUASI_FIRM:
        x, y = witness
        return quasi_firm_defect(_payload(spec, "op"), _payload(spec, "alpha"), x, y)
    if kind == COMPOSITION_THEOREM:
        composed, alpha = _op_and_alphas(spec)
        x, y = witness
        return quasi_firm_defect(composed, alpha, x, y)
    if kind == COMBINATION_THEOREM:
        combo, alpha = _combination_subjects(spec)
        x, y = witness
        return quasi_firm_defect(combo, alpha, x, y)
    if kind == FIX_CONVEXITY:
        c = _payload(spec, "set")
        y1, y2 = witness
        mid = geodesic_point(y1, y2, 0.5)
        return -distance(c.project(mid), mid)
    if kind == VARIANCE_INEQ:
        pts, weights, y = witness
        wp = WeightedPoints(pts, weights)
        return variance_defect(wp, frechet_mean(wp), y)
    if kind == FEJER_RUN:
        (x0,) = witness
        return _fejer_defect(spec, x0)
    raise CheckSpecError(f"unknown check kind '{kind}'")


def run_suite(specs, suite_seed: int | None = None) -> CertificateReport:
    """Run every check and aggregate; the suite passes iff all entries pass."""
    specs = list(specs)
    if not specs:
        raise CheckSpecError("suite needs at least one check")
    start = time.perf_counter()
    entries = tuple(run_check(s) for s in specs)
    elapsed = time.perf_counter() - start
    models = []
    for s in specs:
        desc = s.space.describe()
        if desc not in models:
            models.append(desc)
    return CertificateReport(
        entries=entries,
        suite_seed=suite_seed,
        wall_time=elapsed,
        model_summary=tuple(models),
    )


def _child_seeds(suite_seed: int, count: int) -> list[int]:
    state = np.random.SeedSequence(suite_seed).generate_state(count, dtype=np.uint64)
    return [int(v) for v in state]


def space_suite(
    space: SpaceModel,
    sets: dict[str, ConvexSet],
    witness: Point | None,
    samples: int,
    seed: int,
    claim_alpha: float | None = None,
    claim_set: str | None = None,
) -> list[CheckSpec]:
    """Checks for one user-declared space and its named sets.

    Always samples the curvature and Cauchy-Schwarz inequalities plus
    the variance bound; each set contributes projection checks; a
    witness inside the sets unlocks the quasi-firm, composition,
    combination, and Fejer checks.  A claimed constant adds one
    quasi-firm check for the named set's projection at that constant.
    """
    specs: list[CheckSpec] = []

    def add(kind, n, payload=None, label=""):
        specs.append(CheckSpec(kind=kind, space=space, samples=n, seed=0,
                               payload=payload or {}, label=label))

    add(CAT0, samples)
    add(CAUCHY_SCHWARZ, samples)
    add(VARIANCE_INEQ, max(1, samples // 50), {"instance_size": 3, "challengers": 25})
    for name, c in sets.items():
        add(PROJECTION_FIRM, max(1, samples // 2), {"set": c}, name)
        add(PROJECTION_INEQ, max(1, samples // 2), {"set": c}, name)
        add(FIX_CONVEXITY, max(1, samples // 4), {"set": c}, name)
    if witness is not None:
        fixed_sets = {n: c for n, c in sets.items() if c.contains(witness)}
        for name, c in fixed_sets.items():
            add(QUASI_FIRM, max(1, samples // 2),
                {"op": Projection(c), "alpha": 0.5, "fixed_points": [witness]},
                name)
        if len(fixed_sets) >= 2:
            factors = [(Projection(c), 0.5) for c in fixed_sets.values()]
            add(COMPOSITION_THEOREM, max(1, samples // 2),
                {"factors": factors, "witness": witness}, "declared-sets")
            n = len(fixed_sets)
            add(COMBINATION_THEOREM, max(1, samples // 4),
                {"ops": [Projection(c) for c in fixed_sets.values()],
                 "alphas": [0.5] * n, "weights": [1.0 / n] * n,
                 "witness": witness}, "declared-sets")
            add(FEJER_RUN, 2,
                {"algorithm": "cyclic", "sets": list(fixed_sets.values()),
                 "witness": witness, "rule": StopRule(max_iter=500)},
                "declared-sets")
    if claim_alpha is not None:
        if claim_set not in sets:
            raise CheckSpecError(f"claimed set '{claim_set}' is not declared")
        if witness is None:
            raise CheckSpecError("a claimed constant needs a witness fixed point")
        add(QUASI_FIRM, max(1, samples // 2),
            {"op": Projection(sets[claim_set]), "alpha": claim_alpha,
             "fixed_points": [witness]},
            f"claimed-{claim_set}")
    seeds = _child_seeds(seed, len(specs))
    return [
        CheckSpec(kind=s.kind, space=s.space, samples=s.samples,
                  seed=seeds[i], payload=s.payload, label=s.label)
        for i, s in enumerate(specs)
    ]


def default_suite(seed: int = 0, samples: int = 1000) -> list[CheckSpec]:
    """The shipped cross-model suite: one check per asserted inequality.

    Covers the curvature and Cauchy-Schwarz inequalities on five models
    (flat 3-space, the hyperbolic plane, two trees, a flat-by-tree
    product), projection firmness and the projection inequality per set
    family, the quasi-firm certificates for projections, the composition
    and convex-combination theorems, fixed-set convexity, the
    strong-convexity variance bound, and Fejer/shadow diagnostics for
    cyclic and averaged runs.
    """
    from .metric_tree import MetricTree
    from .geometry import Euclidean, Hyperboloid, ProductSpace
    from .convex_sets import (
        EuclideanHalfspace,
        GeodesicBall,
        HyperbolicHalfspace,
        ProductSet,
        Subtree,
    )

    e2 = Euclidean(2)
    e3 = Euclidean(3)
    h2 = Hyperboloid(2)
    tripod = MetricTree([("o", "a", 1.0), ("o", "b", 1.0), ("o", "c", 1.0)])
    caterpillar = MetricTree(
        [("v0", "v1", 1.0), ("v1", "v2", 1.5), ("v2", "v3", 0.5),
         ("v2", "v4", 2.0), ("v1", "v5", 1.0)]
    )
    product = ProductSpace(e2, tripod)

    origin2 = e2.point([0.0, 0.0])
    apex = h2.base_point()
    gate = tripod.vertex_point("o")

    half_v = EuclideanHalfspace(e2, [0.0, 1.0], 0.0, name="v<=0")
    half_u = EuclideanHalfspace(e2, [1.0, 0.0], 0.0, name="u<=0")
    half_diag = EuclideanHalfspace(e2, [1.0, 1.0], 0.0, name="u+v<=0")
    ball_e3 = GeodesicBall(e3.point([0.5, -0.25, 0.0]), 1.25, name="ball-e3")
    ball_h2 = GeodesicBall(h2.exp_from_base([0.3, -0.2]), 1.0, name="ball-h2")
    ball_tree = GeodesicBall(tripod.edge_point(0, 0.5), 0.75, name="ball-tripod")
    hyp_half_1 = HyperbolicHalfspace(h2, [0.0, 1.0, 0.0], name="m1<=0")
    hyp_half_2 = HyperbolicHalfspace(h2, [0.0, 0.0, 1.0], name="m2<=0")
    leg_a = Subtree(tripod, ["o", "a"], name="leg-a")
    leg_b = Subtree(tripod, ["o", "b"], name="leg-b")
    spine = Subtree(caterpillar, ["v0", "v1", "v2"], name="spine")
    branch = Subtree(caterpillar, ["v1", "v2", "v4"], name="branch")
    prod_set = ProductSet(product, half_v, leg_a, name="halfspace-x-leg")

    specs: list[CheckSpec] = []

    def add(kind, space, n, payload=None, label=""):
        specs.append(
            CheckSpec(kind=kind, space=space, samples=n, seed=0,
                      payload=payload or {}, label=label)
        )

    for space, label in [
        (e3, "euclidean3"),
        (h2, "hyperbolic2"),
        (tripod, "tripod"),
        (caterpillar, "caterpillar"),
        (product, "euclidean-x-tripod"),
    ]:
        add(CAT0, space, samples, label=label)
        add(CAUCHY_SCHWARZ, space, samples, label=label)

    for c, label in [
        (half_v, "halfspace-v"),
        (half_diag, "halfspace-diag"),
        (hyp_half_1, "hyp-halfspace-1"),
        (ball_e3, "ball-e3"),
        (ball_h2, "ball-h2"),
        (ball_tree, "ball-tripod"),
        (spine, "spine"),
        (branch, "branch"),
        (prod_set, "product-set"),
    ]:
        add(PROJECTION_FIRM, c.space, max(1, samples // 2), {"set": c}, label)
        add(PROJECTION_INEQ, c.space, max(1, samples // 2), {"set": c}, label)

    add(QUASI_FIRM, e2, max(1, samples // 2),
        {"op": Projection(half_v), "alpha": 0.5, "fixed_points": [origin2]},
        "projection-halfspace")
    add(QUASI_FIRM, tripod, max(1, samples // 2),
        {"op": Projection(leg_a), "alpha": 0.5, "fixed_points": [gate]},
        "projection-subtree")

    add(COMPOSITION_THEOREM, e2, max(1, samples // 2),
        {"factors": [(Projection(half_v), 0.5), (Projection(half_u), 0.5)],
         "witness": origin2},
        "two-euclidean-halfspaces")
    add(COMPOSITION_THEOREM, h2, max(1, samples // 2),
        {"factors": [(Projection(hyp_half_1), 0.5), (Projection(hyp_half_2), 0.5)],
         "witness": apex},
        "two-hyperbolic-halfspaces")
    add(COMPOSITION_THEOREM, caterpillar, max(1, samples // 2),
        {"factors": [(Projection(spine), 0.5), (Projection(branch), 0.5)],
         "witness": caterpillar.vertex_point("v1")},
        "two-subtrees")
    add(COMPOSITION_THEOREM, e2, max(1, samples // 2),
        {"factors": [(Projection(half_v), 0.5), (Projection(half_u), 0.5),
                     (Projection(half_diag), 0.5)],
         "witness": origin2},
        "three-euclidean-halfspaces")

    add(COMBINATION_THEOREM, e2, max(1, samples // 4),
        {"ops": [Projection(half_v), Projection(half_u), Projection(half_diag)],
         "alphas": [0.5, 0.5, 0.5],
         "weights": [1.0 / 3.0] * 3,
         "witness": origin2},
        "three-projections-euclidean")
    add(COMBINATION_THEOREM, tripod, max(1, samples // 4),
        {"ops": [Projection(leg_a), Projection(leg_b)],
         "alphas": [0.5, 0.5],
         "weights": [0.5, 0.5],
         "witness": gate},
        "two-subtree-projections")

    add(FIX_CONVEXITY, e2, max(1, samples // 2), {"set": half_v}, "halfspace")
    add(FIX_CONVEXITY, tripod, max(1, samples // 2), {"set": leg_a}, "subtree")

    for space, label in [(e3, "euclidean3"), (h2, "hyperbolic2"), (tripod, "tripod")]:
        add(VARIANCE_INEQ, space, max(1, samples // 50),
            {"instance_size": 4, "challengers": 50}, label)

    add(FEJER_RUN, e2, 3,
        {"algorithm": "cyclic", "sets": [half_v, half_u], "witness": origin2,
         "rule": StopRule(max_iter=400)},
        "cyclic-halfspaces")
    add(FEJER_RUN, e2, 3,
        {"algorithm": "averaged", "sets": [half_v, half_u], "witness": origin2,
         "rule": StopRule(max_iter=200)},
        "averaged-halfspaces")
    add(FEJER_RUN, tripod, 3,
        {"algorithm": "cyclic", "sets": [leg_a, leg_b], "witness": gate,
         "rule": StopRule(max_iter=200)},
        "cyclic-subtrees")

    seeds = _child_seeds(seed, len(specs))
    return [
        CheckSpec(kind=s.kind, space=s.space, samples=s.samples,
                  seed=seeds[i], payload=s.payload, label=s.label)
        for i, s in enumerate(specs)
    ]
