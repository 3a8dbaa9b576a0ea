"""Distances, geodesics, the metric pairing, and the curvature defect."""

import math

import numpy as np
import pytest

from hadamard import (
    DomainError,
    GeodesicSegment,
    Hyperboloid,
    InfeasibleTriangleError,
    InvalidPointError,
    ProductSpace,
    SpaceMismatchError,
    ToleranceConfig,
    cat0_defect,
    comparison_triangle,
    distance,
    geodesic,
    geodesic_point,
    quasilinearization,
)
from hadamard.errors import ConstructionError


class TestDistance:
    def test_euclidean_pythagorean(self, e2):
        assert distance(e2.point([0, 0]), e2.point([3, 4])) == pytest.approx(5.0)

    def test_hyperbolic_along_parametrized_geodesic(self, h2):
        a = h2.point([1, 0, 0])
        b = h2.point([math.cosh(1), math.sinh(1), 0])
        assert distance(a, b) == pytest.approx(1.0, abs=1e-12)

    def test_tripod_leaf_to_leaf(self, tripod):
        assert distance(tripod.vertex_point("a"), tripod.vertex_point("b")) == 2.0

    def test_symmetry_and_zero_iff_equal(self, all_models, rng):
        for space in all_models.values():
            for _ in range(50):
                p, q = space.sample(rng), space.sample(rng)
                assert distance(p, q) == pytest.approx(distance(q, p), abs=1e-12)
                assert distance(p, p) == 0.0

    def test_triangle_inequality(self, all_models, rng):
        for space in all_models.values():
            for _ in range(100):
                p, q, r = (space.sample(rng) for _ in range(3))
                assert distance(p, q) <= distance(p, r) + distance(r, q) + 1e-9

    def test_space_mismatch(self, e2, e3):
        with pytest.raises(SpaceMismatchError):
            distance(e2.point([0, 0]), e3.point([0, 0, 0]))

    def test_off_manifold_point_rejected(self, h2):
        with pytest.raises(InvalidPointError):
            h2.point([1.0, 0.5, 0.0])

    def test_lower_sheet_rejected(self, h2):
        with pytest.raises(InvalidPointError):
            h2.point([-1.0, 0.0, 0.0])


class TestGeodesicPoint:
    def test_euclidean_midpoint(self, e2):
        mid = geodesic_point(e2.point([0, 0]), e2.point([2, 0]), 0.5)
        assert np.allclose(mid.payload, [1, 0])

    def test_endpoints_exact(self, all_models, rng):
        for space in all_models.values():
            p, q = space.sample(rng), space.sample(rng)
            assert geodesic_point(p, q, 0.0) is p
            assert geodesic_point(p, q, 1.0) is q

    def test_tripod_midpoint_is_center(self, tripod):
        mid = geodesic_point(tripod.vertex_point("a"), tripod.vertex_point("b"), 0.5)
        assert mid == tripod.vertex_point("o")

    def test_split_ratios(self, all_models, rng):
        for space in all_models.values():
            tol = space.defect_tolerance
            for _ in range(40):
                p, q = space.sample(rng), space.sample(rng)
                t = float(rng.uniform())
                r = geodesic_point(p, q, t)
                d = distance(p, q)
                assert distance(p, r) == pytest.approx(t * d, abs=max(tol, 1e-9))
                assert distance(r, q) == pytest.approx((1 - t) * d, abs=max(tol, 1e-9))

    def test_parameter_domain(self, e2):
        p, q = e2.point([0, 0]), e2.point([1, 0])
        with pytest.raises(DomainError):
            geodesic_point(p, q, 1.5)
        with pytest.raises(DomainError):
            geodesic_point(p, q, -0.1)

    def test_mismatch(self, e2, e3):
        with pytest.raises(SpaceMismatchError):
            geodesic_point(e2.point([0, 0]), e3.point([0, 0, 0]), 0.5)


class TestGeodesicSegment:
    def test_reparametrization(self, all_models, rng):
        """d(gamma(t1), gamma(t2)) = |t1 - t2| * length on sampled pairs."""
        for space in all_models.values():
            tol = max(space.defect_tolerance, 1e-9)
            p, q = space.sample(rng), space.sample(rng)
            seg = geodesic(p, q)
            assert seg.length == pytest.approx(distance(p, q))
            assert seg.at(0.0) is p and seg.at(1.0) is q
            for _ in range(25):
                t1, t2 = float(rng.uniform()), float(rng.uniform())
                expected = abs(t1 - t2) * seg.length
                assert distance(seg.at(t1), seg.at(t2)) == pytest.approx(expected, abs=tol)

    def test_immutable(self, e2):
        seg = GeodesicSegment(e2.point([0, 0]), e2.point([1, 0]))
        with pytest.raises(AttributeError):
            seg.length = 2.0


class TestQuasilinearization:
    def test_orthogonal_vectors_vanish(self, e2):
        x = e2.point([0, 0])
        z = e2.point([1, 0])
        w = e2.point([0, 1])
        assert quasilinearization(x, z, x, w) == pytest.approx(0.0, abs=1e-12)

    def test_self_pairing_is_squared_distance(self, all_models, rng):
        for space in all_models.values():
            x, y = space.sample(rng), space.sample(rng)
            assert quasilinearization(x, y, x, y) == pytest.approx(
                distance(x, y) ** 2, abs=max(space.defect_tolerance, 1e-9)
            )

    def test_tripod_hand_value(self, tripod):
        # legs a and b of a unit tripod: half of (1 + 1 - 4 - 0)
        a, b, o = (tripod.vertex_point(v) for v in "abo")
        assert quasilinearization(a, o, b, o) == pytest.approx(-1.0, abs=1e-12)

    def test_swap_of_bound_vectors(self, all_models, rng):
        for space in all_models.values():
            x, z, y, w = (space.sample(rng) for _ in range(4))
            assert quasilinearization(x, z, y, w) == pytest.approx(
                quasilinearization(y, w, x, z), abs=1e-12
            )

    def test_matches_euclidean_inner_product(self, e3, rng):
        for _ in range(200):
            x, z, y, w = (e3.sample(rng) for _ in range(4))
            inner = float((z.payload - x.payload) @ (w.payload - y.payload))
            assert quasilinearization(x, z, y, w) == pytest.approx(inner, abs=1e-12)

    def test_cauchy_schwarz(self, all_models, rng):
        """|<xz, yw>| <= d(x,z) d(y,w): the pairing is metrically bounded."""
        for space in all_models.values():
            tol = space.defect_tolerance
            for _ in range(1000):
                x, z, y, w = (space.sample(rng) for _ in range(4))
                bound = distance(x, z) * distance(y, w)
                assert abs(quasilinearization(x, z, y, w)) <= bound + tol


class TestCat0Defect:
    def test_euclidean_midpoint_equality_case(self, e2, rng):
        for _ in range(50):
            x, y, z = (e2.sample(rng) for _ in range(3))
            assert cat0_defect(x, y, z, 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_tripod_hand_value(self, tripod):
        a, b, c = (tripod.vertex_point(v) for v in "abc")
        assert cat0_defect(a, b, c, 0.5) == pytest.approx(2.0, abs=1e-12)

    def test_t_zero_is_exact_zero(self, all_models, rng):
        for space in all_models.values():
            x, y, z = (space.sample(rng) for _ in range(3))
            assert cat0_defect(x, y, z, 0.0) == 0.0

    def test_nonnegative_in_every_model(self, all_models, rng):
        for space in all_models.values():
            tol = space.defect_tolerance
            for _ in range(1000):
                x, y, z = (space.sample(rng) for _ in range(3))
                t = float(rng.uniform())
                assert cat0_defect(x, y, z, t) >= -tol

    def test_parameter_domain(self, e2, rng):
        x, y, z = (e2.sample(rng) for _ in range(3))
        with pytest.raises(DomainError):
            cat0_defect(x, y, z, 1.0001)


class TestComparisonTriangle:
    def test_equilateral(self):
        pts = comparison_triangle(2, 2, 2)
        assert pts[0] == (0.0, 0.0)
        assert pts[1] == (2.0, 0.0)
        assert pts[2] == pytest.approx((1.0, math.sqrt(3.0)))

    def test_degenerate_collinear(self):
        pts = comparison_triangle(1, 1, 2)
        assert pts[1] == pytest.approx((1.0, 0.0))
        assert pts[2] == pytest.approx((2.0, 0.0), abs=1e-12)

    def test_right_triangle_law_of_cosines(self):
        # cos at the first vertex: (9 + 25 - 16) / (2*3*5) = 3/5
        pts = comparison_triangle(3, 4, 5)
        assert pts[1] == pytest.approx((3.0, 0.0))
        assert pts[2] == pytest.approx((3.0, 4.0))

    def test_realizes_model_triangles(self, all_models, rng):
        """Any triple of model distances embeds with matching side lengths."""
        for space in all_models.values():
            for _ in range(50):
                x, y, z = (space.sample(rng) for _ in range(3))
                dxy, dyz, dzx = distance(x, y), distance(y, z), distance(z, x)
                px, py, pz = comparison_triangle(dxy, dyz, dzx)
                assert math.dist(px, py) == pytest.approx(dxy, abs=1e-9)
                assert math.dist(py, pz) == pytest.approx(dyz, abs=1e-9)
                assert math.dist(pz, px) == pytest.approx(dzx, abs=1e-9)
                assert pz[1] >= 0.0

    def test_infeasible(self):
        with pytest.raises(InfeasibleTriangleError):
            comparison_triangle(1, 1, 5)
        with pytest.raises(InfeasibleTriangleError):
            comparison_triangle(-1, 1, 1)


class TestProductSpace:
    def test_squared_distance_splits(self, product, rng):
        for _ in range(200):
            p, q = product.sample(rng), product.sample(rng)
            dl = distance(p.payload[0], q.payload[0])
            dr = distance(p.payload[1], q.payload[1])
            assert distance(p, q) ** 2 == pytest.approx(dl**2 + dr**2, abs=1e-12)

    def test_payload_validation(self, product, e2, e3):
        with pytest.raises(InvalidPointError):
            product.point((e3.point([0, 0, 0]), product.right.vertex_point("a")))
        with pytest.raises(InvalidPointError):
            product.point(e2.point([0, 0]))

    def test_nested_product(self, e2, tripod):
        outer = ProductSpace(ProductSpace(e2, e2), tripod)
        rng = np.random.default_rng(3)
        p, q = outer.sample(rng), outer.sample(rng)
        mid = geodesic_point(p, q, 0.5)
        assert distance(p, mid) == pytest.approx(distance(mid, q), abs=1e-9)


class TestToleranceConfig:
    def test_defaults(self):
        cfg = ToleranceConfig()
        assert cfg.eq_tol == 1e-9
        assert cfg.on_manifold == 1e-10
        assert cfg.hyperbolic_tol == 1e-7
        assert cfg.max_barycenter_sweeps == 200

    def test_positivity_enforced(self):
        with pytest.raises(ConstructionError):
            ToleranceConfig(eq_tol=0.0)
        with pytest.raises(ConstructionError):
            ToleranceConfig(max_barycenter_sweeps=0)

    def test_defect_tolerance_tracks_hyperbolic_factors(self, e2, h2, tripod):
        assert e2.defect_tolerance == 1e-9
        assert h2.defect_tolerance == 1e-7
        assert ProductSpace(e2, tripod).defect_tolerance == 1e-9
        assert ProductSpace(e2, h2).defect_tolerance == 1e-7

    def test_points_are_immutable(self, e2):
        p = e2.point([1, 2])
        with pytest.raises(AttributeError):
            p.payload = None
        with pytest.raises(ValueError):
            p.payload[0] = 5.0

    def test_hyperboloid_needs_positive_dim(self):
        with pytest.raises(ConstructionError):
            Hyperboloid(0)
