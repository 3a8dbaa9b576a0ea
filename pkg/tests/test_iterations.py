"""Iteration drivers, Fejer monotonicity, shadows, and center estimation."""

import io
import math

import numpy as np
import pytest

from hadamard import (
    Composition,
    Constant,
    DomainError,
    EuclideanHalfspace,
    EuclideanHyperplane,
    GeodesicBall,
    Identity,
    NotAFixedPointError,
    Projection,
    StopRule,
    Subtree,
    approximate_shadows,
    asymptotic_center_estimate,
    attach_shadows,
    averaged_projections,
    cyclic_projections,
    distance,
    fixed_point_iterate,
    project_to_segment,
    shadow_cauchy_worst_defect,
    shadow_sequence,
    technical_condition_gaps,
)
from hadamard.errors import ConstructionError


@pytest.fixture
def quadrant_sets(e2):
    return [
        EuclideanHalfspace(e2, [0, 1], 0.0, name="v<=0"),
        EuclideanHalfspace(e2, [1, 0], 0.0, name="u<=0"),
    ]


class TestStopRule:
    def test_validation(self):
        with pytest.raises(ConstructionError):
            StopRule(max_iter=0)
        rule = StopRule(max_iter=10)
        assert rule.residual_tol == 1e-8
        assert rule.stall_tol == 1e-12


class TestFixedPointIterate:
    def test_identity_converges_immediately(self, e2):
        trace = fixed_point_iterate(Identity(), e2.point([1, 2]), StopRule(max_iter=10))
        assert trace.stop_reason == "converged"
        assert trace.iterations == 1
        assert all(p == trace.points[0] for p in trace.points)

    def test_constant_map(self, e2):
        c = e2.point([5, 5])
        trace = fixed_point_iterate(Constant(c), e2.point([0, 0]), StopRule(max_iter=10))
        assert trace.stop_reason == "converged"
        assert trace.points[1] is c
        assert trace.final_point is c

    def test_composed_projections_reach_intersection(self, e2, quadrant_sets):
        op = Composition([Projection(quadrant_sets[1]), Projection(quadrant_sets[0])])
        trace = fixed_point_iterate(op, e2.point([1, 1]), StopRule(max_iter=10))
        assert trace.stop_reason == "converged"
        assert np.allclose(trace.points[1].payload, [0, 0])
        assert trace.residuals[-1] == 0.0

    def test_max_iter(self, e2):
        shift = Constant(e2.point([1, 0]))
        # a genuinely moving map: rotate around the origin
        import numpy as np

        def rot(p):
            c, s = math.cos(0.5), math.sin(0.5)
            x, y = p.payload
            return e2.point([c * x - s * y, s * x + c * y])

        from hadamard import Pointwise

        trace = fixed_point_iterate(Pointwise("rot", rot), e2.point([1, 0]),
                                    StopRule(max_iter=7))
        assert trace.stop_reason == "maxiter"
        assert trace.iterations == 7

    def test_witness_must_be_fixed(self, e2, quadrant_sets):
        op = Projection(quadrant_sets[0])
        with pytest.raises(NotAFixedPointError):
            fixed_point_iterate(op, e2.point([1, 1]), StopRule(max_iter=5),
                                witness=e2.point([0, 1]))


class TestCyclicProjections:
    def test_start_inside_intersection(self, e2, quadrant_sets):
        trace = cyclic_projections(quadrant_sets, e2.point([-1, -1]), StopRule(max_iter=10))
        assert trace.stop_reason == "converged"
        assert trace.iterations == 0

    def test_quadrant_two_steps(self, e2, quadrant_sets):
        trace = cyclic_projections(quadrant_sets, e2.point([1, 1]), StopRule(max_iter=10))
        assert [tuple(p.payload) for p in trace.points] == [(1, 1), (1, 0), (0, 0)]
        assert trace.stop_reason == "converged"

    def test_two_lines_match_rotation_recursion(self, e2):
        """Classical two-line alternating projections at angle pi/4.

        Landing on line 1 at distance r from the origin, the next landing
        on line 2 is at r cos(theta), and per full cycle r contracts by
        cos^2(theta); iterates stay expressible in closed form.
        """
        theta = math.pi / 4
        l1 = EuclideanHyperplane(e2, [0, 1], 0.0, name="L1")
        l2 = EuclideanHyperplane(e2, [-math.sin(theta), math.cos(theta)], 0.0, name="L2")
        trace = cyclic_projections([l1, l2], e2.point([1, 0]),
                                   StopRule(max_iter=80, residual_tol=1e-12),
                                   witness=e2.point([0, 0]))
        # oracle: x0 already sits on L1, so landing n >= 2 has radius
        # cos(theta)^(n-1), on L2 for even n and back on L1 for odd n
        for n, p in enumerate(trace.points[1:], start=1):
            if n == 1:
                expected = np.array([1.0, 0.0])
            else:
                r = math.cos(theta) ** (n - 1)
                if n % 2 == 0:
                    expected = r * np.array([math.cos(theta), math.sin(theta)])
                else:
                    expected = np.array([r, 0.0])
            assert np.allclose(p.payload, expected, atol=1e-12)
        assert trace.stop_reason == "converged"
        assert distance(trace.final_point, e2.point([0, 0])) <= 1e-6

    def test_subsampled_iterates_match_composed_operator(self, e2, rng):
        """Every N-th cyclic iterate equals one application of P_N...P_1."""
        sets = [
            EuclideanHalfspace(e2, [0, 1], 0.25, name="A"),
            GeodesicBall(e2.point([0.0, -1.0]), 2.0, name="B"),
            EuclideanHalfspace(e2, [1, 1], 0.5, name="C"),
        ]
        composed = Composition([Projection(c) for c in reversed(sets)])
        for _ in range(10):
            x0 = e2.sample(rng)
            trace = cyclic_projections(sets, x0, StopRule(max_iter=12, residual_tol=0.0))
            z = x0
            for k in range(1, len(trace.points) // len(sets) + 1):
                z = composed.apply(z)
                assert distance(trace.points[k * len(sets)], z) <= 1e-12

    def test_subsampled_residuals_nonincreasing(self, e2, quadrant_sets, rng):
        x0 = e2.point([2.0, 3.0])
        trace = cyclic_projections(quadrant_sets, x0, StopRule(max_iter=50))
        per_cycle = trace.residuals[:: len(quadrant_sets)]
        for a, b in zip(per_cycle, per_cycle[1:]):
            assert b <= a + 1e-9

    def test_disjoint_sets_stall(self, e2):
        balls = [
            GeodesicBall(e2.point([-2, 0]), 0.5, name="left"),
            GeodesicBall(e2.point([2, 0]), 0.5, name="right"),
        ]
        trace = cyclic_projections(balls, e2.point([0, 3]), StopRule(max_iter=500))
        assert trace.stop_reason == "stalled"
        assert trace.final_residual > 1.0

    def test_empty_set_list(self, e2):
        with pytest.raises(DomainError):
            cyclic_projections([], e2.point([0, 0]), StopRule(max_iter=5))

    def test_witness_outside_sets_rejected(self, e2, quadrant_sets):
        with pytest.raises(NotAFixedPointError):
            cyclic_projections(quadrant_sets, e2.point([1, 1]), StopRule(max_iter=5),
                               witness=e2.point([1, 1]))


class TestAveragedProjections:
    def test_quadrant_halving(self, e2, quadrant_sets):
        trace = averaged_projections(quadrant_sets, e2.point([1, 1]),
                                     StopRule(max_iter=30, residual_tol=1e-13),
                                     witness=e2.point([0, 0]))
        for n, p in enumerate(trace.points):
            assert np.allclose(p.payload, [2.0**-n, 2.0**-n], atol=1e-12)

    def test_tripod_one_step(self, tripod):
        legs = [Subtree(tripod, ["o", "a"], name="leg-a"),
                Subtree(tripod, ["o", "b"], name="leg-b")]
        trace = averaged_projections(legs, tripod.vertex_point("c"), StopRule(max_iter=10))
        assert trace.stop_reason == "converged"
        assert trace.iterations == 1
        assert trace.final_point == tripod.vertex_point("o")

    def test_weight_length_mismatch(self, e2, quadrant_sets):
        with pytest.raises(DomainError):
            averaged_projections(quadrant_sets, e2.point([1, 1]),
                                 StopRule(max_iter=5), weights=[1.0])

    def test_start_inside(self, e2, quadrant_sets):
        trace = averaged_projections(quadrant_sets, e2.point([-1, -2]),
                                     StopRule(max_iter=5))
        assert trace.iterations == 0
        assert trace.stop_reason == "converged"


class TestFejerDiagnostics:
    def test_gaps_nonnegative_with_witness(self, e2, quadrant_sets, rng):
        w = e2.point([0, 0])
        for _ in range(20):
            x0 = e2.sample(rng)
            trace = cyclic_projections(quadrant_sets, x0, StopRule(max_iter=100), witness=w)
            assert all(g >= -1e-10 for g in trace.fejer_gaps)
            assert trace.fejer_violations(1e-10) == 0
            assert not trace.witness_is_proxy

    def test_proxy_witness_labeled(self, e2, quadrant_sets):
        trace = cyclic_projections(quadrant_sets, e2.point([1, 1]), StopRule(max_iter=100))
        assert trace.witness_is_proxy
        assert trace.witness is trace.final_point


class TestShadows:
    def test_constant_trace_shadows(self, e2, quadrant_sets):
        c = GeodesicBall(e2.point([-1, -1]), 1.0)
        trace = cyclic_projections(quadrant_sets, e2.point([-1, -1]), StopRule(max_iter=5))
        shadows = shadow_sequence(trace, c)
        assert all(s == trace.points[0] for s in shadows)

    def test_quadrant_shadows_match_hand_values(self, e2, quadrant_sets):
        trace = averaged_projections(quadrant_sets, e2.point([1, 1]),
                                     StopRule(max_iter=20, residual_tol=1e-11))
        shadows = approximate_shadows(trace, quadrant_sets)
        for p, s in zip(trace.points, shadows):
            expected = np.minimum(p.payload, 0.0)  # componentwise clamp
            assert np.allclose(s.payload, expected, atol=1e-10)
        attach_shadows(trace, shadows, approximate=True)
        assert trace.shadows_approximate

    def test_shadow_cauchy_inequality(self, e2, quadrant_sets, rng):
        for _ in range(10):
            trace = cyclic_projections(quadrant_sets, e2.sample(rng), StopRule(max_iter=60))
            attach_shadows(trace, approximate_shadows(trace, quadrant_sets), True)
            assert shadow_cauchy_worst_defect(trace) >= -1e-9

    def test_shadows_required_for_diagnostics(self, e2, quadrant_sets):
        trace = cyclic_projections(quadrant_sets, e2.point([1, 1]), StopRule(max_iter=5))
        with pytest.raises(DomainError):
            shadow_cauchy_worst_defect(trace)


class TestSegmentProjection:
    def test_euclidean_oracle(self, e3, rng):
        """Clamped inner-product projection is the flat-space answer."""
        for _ in range(50):
            p, q, z = (e3.sample(rng) for _ in range(3))
            seg = q.payload - p.payload
            t = float((z.payload - p.payload) @ seg / (seg @ seg))
            t = min(max(t, 0.0), 1.0)
            expected = p.payload + t * seg
            got = project_to_segment(p, q, z)
            assert np.allclose(got.payload, expected, atol=1e-8)

    def test_degenerate_segment(self, e2):
        p = e2.point([1, 1])
        assert project_to_segment(p, p, e2.point([5, 5])) is p


class TestTechnicalGaps:
    def test_quadrant_run_gap_vanishes_at_termination(self, e2, quadrant_sets):
        trace = averaged_projections(quadrant_sets, e2.point([1, 1]),
                                     StopRule(max_iter=40, residual_tol=1e-11),
                                     witness=e2.point([0, 0]))
        attach_shadows(trace, approximate_shadows(trace, quadrant_sets), True)
        gaps = technical_condition_gaps(trace)
        assert all(g >= -1e-12 for g in gaps)
        assert gaps[-1] <= 1e-6


class TestAsymptoticCenter:
    def test_constant_sequence(self, e2):
        p = e2.point([2, 2])
        est = asymptotic_center_estimate([p, p, p], 0)
        assert est.center == p
        assert est.radius == 0.0
        assert est.heuristic

    def test_euclidean_alternating(self, e2):
        pts = [e2.point([1, 0]), e2.point([-1, 0])] * 3
        est = asymptotic_center_estimate(pts, 0)
        assert np.allclose(est.center.payload, [0, 0])
        assert est.radius == pytest.approx(1.0)

    def test_tripod_alternating_leaves(self, tripod):
        pts = [tripod.vertex_point("a"), tripod.vertex_point("b")] * 3
        est = asymptotic_center_estimate(pts, 0)
        assert est.center == tripod.vertex_point("o")

    def test_tail_start_domain(self, e2):
        with pytest.raises(DomainError):
            asymptotic_center_estimate([e2.point([0, 0])], 1)


class TestTraceCsv:
    def test_header_and_blank_cells(self, e2, quadrant_sets):
        trace = cyclic_projections(quadrant_sets, e2.point([1, 1]),
                                   StopRule(max_iter=10), witness=e2.point([0, 0]))
        buf = io.StringIO()
        trace.to_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "n,residual,fejer_gap,step,shadow_dist"
        first = lines[1].split(",")
        assert first[0] == "0"
        assert first[2] == "" and first[3] == "" and first[4] == ""

    def test_floats_survive_round_trip(self, e2, quadrant_sets, rng):
        """17 significant digits reproduce the doubles exactly."""
        trace = cyclic_projections(quadrant_sets, e2.sample(rng),
                                   StopRule(max_iter=10), witness=e2.point([0, 0]))
        buf = io.StringIO()
        trace.to_csv(buf)
        rows = [line.split(",") for line in buf.getvalue().splitlines()[1:]]
        for n, row in enumerate(rows):
            assert float(row[1]) == trace.residuals[n]
            if n >= 1:
                assert float(row[3]) == trace.steps[n - 1]
