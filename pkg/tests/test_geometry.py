import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ancientflow.errors import AncientFlowError
from ancientflow.geometry import (
    ClosedCurve,
    arc_length,
    check_field,
    field_laplacian,
    normal_tangential_split,
    position_laplacian,
    resample_constant_speed,
    resample_with_params,
    transport_field,
    turning_number,
    unit_tangent,
)
from ancientflow.spectrum import MultiCircle
from ancientflow.torus import TorusCurveParams, sample

from conftest import circle

TWO_PI = 2.0 * np.pi


def torus12(m, r=1.0):
    return sample(TorusCurveParams((1, 2), r), m)


def random_curve(seed, m=64, dim=3):
    rng = np.random.default_rng(seed)
    p = TWO_PI * np.arange(m) / m
    coef = rng.normal(scale=0.15, size=(dim, 3))
    pts = np.zeros((m, dim))
    pts[:, 0], pts[:, 1] = np.cos(p), np.sin(p)
    for k in range(3):
        pts += np.outer(np.sin((k + 2) * p + k), coef[:, k])
    return ClosedCurve(pts)


class TestConstruction:
    def test_points_are_read_only(self):
        c = circle(16)
        with pytest.raises(ValueError):
            c.points[0, 0] = 5.0

    @pytest.mark.parametrize("pts", [
        np.zeros((7, 2)),
        np.zeros((10,)),
        np.ones((10, 1)),
    ])
    def test_rejects_bad_shapes(self, pts):
        with pytest.raises(AncientFlowError) as exc:
            ClosedCurve(pts)
        assert exc.value.code == "invalid-curve"

    def test_rejects_repeated_points_and_nan(self):
        pts = circle(16).points.copy()
        pts[3] = pts[2]
        with pytest.raises(AncientFlowError):
            ClosedCurve(pts)
        pts = circle(16).points.copy()
        pts[4, 1] = np.nan
        with pytest.raises(AncientFlowError):
            ClosedCurve(pts)

    def test_check_field(self):
        c = circle(16)
        with pytest.raises(AncientFlowError) as exc:
            check_field(c, np.ones(15))
        assert exc.value.code == "grid-mismatch"
        with pytest.raises(AncientFlowError) as exc:
            check_field(c, np.full(16, np.inf))
        assert exc.value.code == "invalid-field"


class TestResample:
    def test_nonuniform_circle(self):
        rng = np.random.default_rng(0)
        th = np.sort(rng.uniform(0, TWO_PI, 300))
        c = ClosedCurve(np.column_stack([np.cos(th), np.sin(th)]))
        out = resample_constant_speed(c, 256)
        assert out.M == 256
        np.testing.assert_allclose(np.linalg.norm(out.points, axis=1), 1.0, atol=2e-5)
        assert np.ptp(out.segments) <= 1e-12

    def test_uniform_circle_unchanged(self):
        c = circle(128)
        np.testing.assert_allclose(resample_constant_speed(c).points, c.points, atol=1e-12)
        assert abs(arc_length(resample_constant_speed(c)) - arc_length(c)) <= 1e-10 * arc_length(c)

    def test_torus_already_constant_speed(self):
        c = torus12(200)
        np.testing.assert_allclose(resample_constant_speed(c).points, c.points, atol=1e-12)

    def test_idempotent(self):
        once = resample_constant_speed(random_curve(4))
        twice = resample_constant_speed(once)
        np.testing.assert_allclose(twice.points, once.points, atol=1e-10)

    def test_transport_follows_params(self):
        c = random_curve(7, m=200)
        new, params = resample_with_params(c, 150)
        moved = transport_field(c.points[:, 0], c, params)
        np.testing.assert_allclose(moved, new.points[:, 0], atol=1e-13)


class TestLength:
    def test_unit_circle(self):
        assert abs(arc_length(circle(256)) - TWO_PI) < 1e-3

    def test_double_circle(self):
        c = MultiCircle(2).sample(512)
        assert abs(arc_length(c) - 4.0 * np.pi * np.sqrt(2.0)) < 1e-3

    def test_torus(self):
        assert abs(arc_length(torus12(512)) - TWO_PI * np.sqrt(5.0)) < 1e-3

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10 ** 6), shift=st.integers(0, 63), scale=st.floats(0.1, 10.0))
    def test_rigid_and_scaling_invariance(self, seed, shift, scale):
        c = random_curve(seed)
        rng = np.random.default_rng(seed)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        moved = c.with_points(np.roll(c.points, shift, axis=0) @ q.T + rng.normal(size=3))
        assert arc_length(moved) == pytest.approx(arc_length(c), rel=1e-13)
        assert arc_length(c.scaled(scale)) == pytest.approx(scale * arc_length(c), rel=1e-13)


class TestLaplacian:
    def test_circle_points_inward_with_curvature(self):
        c = circle(512, radius=2.5)
        lap = position_laplacian(c)
        np.testing.assert_allclose(np.linalg.norm(lap, axis=1), 1 / 2.5, atol=1e-5)
        assert np.all(np.sum(lap * c.points, axis=1) < 0)

    def test_shrinking_circle_at_minus_one(self):
        c = circle(512, radius=np.sqrt(2.0))
        np.testing.assert_allclose(position_laplacian(c), -c.points / 2.0, atol=1e-5)

    def test_torus_pairs(self):
        c = torus12(512)
        lap = position_laplacian(c)
        for j, k in enumerate((1, 2)):
            np.testing.assert_allclose(lap[:, 2 * j:2 * j + 2], -k * k * c.points[:, 2 * j:2 * j + 2] / 5.0,
                                       atol=1e-3)

    def test_second_order_on_ellipse(self):
        errs = []
        grids = [64, 128, 256, 512]
        for m in grids:
            # An off-centre ellipse sampled at equal chords, with the
            # exact curvature vector from the analytic parametrization.
            th = TWO_PI * np.arange(4 * m) / (4 * m)
            fine = ClosedCurve(np.column_stack([2 * np.cos(th) + 0.3, np.sin(th)]))
            c = resample_constant_speed(fine, m)
            x, y = c.points[:, 0] - 0.3, c.points[:, 1]
            t = np.arctan2(y, x / 2)
            dx, dy = -2 * np.sin(t), np.cos(t)
            ddx, ddy = -2 * np.cos(t), -np.sin(t)
            sp2 = dx * dx + dy * dy
            kappa = (dx * ddy - dy * ddx) / sp2 ** 1.5
            nrm = np.column_stack([-dy, dx]) / np.sqrt(sp2)[:, None]
            errs.append(np.max(np.abs(position_laplacian(c) - kappa[:, None] * nrm)))
        slope = -np.polyfit(np.log(grids), np.log(errs), 1)[0]
        assert 1.8 <= slope <= 2.2

    def test_circle_convergence_order(self):
        # On equal chords the three-point rule is exact; perturbing the
        # spacing brings back the generic second-order error.
        errs, grids = [], [64, 128, 256, 512]
        for m in grids:
            th = TWO_PI * np.arange(m) / m
            th = th + 0.3 * np.sin(th) / 1.0
            c = ClosedCurve(np.column_stack([np.cos(th), np.sin(th)]))
            errs.append(np.max(np.abs(position_laplacian(c) + c.points)))
        slope = -np.polyfit(np.log(grids), np.log(errs), 1)[0]
        assert 1.8 <= slope <= 2.2

    def test_field_laplacian_matches_vector_form(self):
        c = random_curve(2)
        np.testing.assert_allclose(field_laplacian(c, c.points[:, 1]), position_laplacian(c)[:, 1], atol=1e-12)


class TestSplit:
    def test_circle_position_is_normal(self):
        c = circle(128, radius=1.7)
        normal, tangential = normal_tangential_split(c, c.points)
        np.testing.assert_allclose(tangential, 0.0, atol=1e-14)
        np.testing.assert_allclose(normal, c.points, atol=1e-14)

    def test_tangent_has_no_normal_part(self):
        c = random_curve(5)
        normal, _ = normal_tangential_split(c, unit_tangent(c))
        np.testing.assert_allclose(normal, 0.0, atol=1e-14)

    def test_torus_position_is_normal(self):
        c = torus12(256)
        _, tangential = normal_tangential_split(c, c.points)
        np.testing.assert_allclose(tangential, 0.0, atol=1e-13)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10 ** 6))
    def test_parts_sum_to_input(self, seed):
        c = random_curve(seed)
        field = np.random.default_rng(seed).normal(size=c.points.shape)
        normal, tangential = normal_tangential_split(c, field)
        np.testing.assert_allclose(normal + tangential, field, rtol=0, atol=1e-14)


class TestTurningNumber:
    def test_circles(self):
        assert turning_number(circle(64)) == 1
        assert turning_number(circle(96, turns=3)) == 3
        assert turning_number(circle(64, phase=0.0).with_points(circle(64).points[::-1])) == -1

    def test_torus_fast_pair(self):
        assert turning_number(torus12(256), plane=(2, 3)) == 2
        assert turning_number(torus12(256), plane=(0, 1)) == 1

    def test_singular_projection(self):
        # a square: its vertical sides collapse to points on the (x, z) plane
        side = np.linspace(0.0, 1.0, 8, endpoint=False)
        one, zero = np.ones(8), np.zeros(8)
        xy = np.concatenate([
            np.column_stack([side, zero]), np.column_stack([one, side]),
            np.column_stack([1 - side, one]), np.column_stack([zero, 1 - side]),
        ])
        pts = np.column_stack([xy, np.zeros(32)])
        with pytest.raises(AncientFlowError) as exc:
            turning_number(ClosedCurve(pts), plane=(0, 2))
        assert exc.value.code == "singular-projection"

    def test_invalid_plane(self):
        with pytest.raises(AncientFlowError):
            turning_number(circle(32), plane=(0, 2))
