import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ancientflow.errors import AncientFlowError
from ancientflow.geometry import ClosedCurve
from ancientflow.gaussian import weighted_inner_product
from ancientflow.spectrum import MultiCircle, spectrum
from ancientflow.torus import TorusCurveParams, exact_trajectory, sample, sample_at
from ancientflow.verification import (
    ANCHORS,
    LinearCaloric,
    append_suite_row,
    carleman_sides,
    carleman_verify,
    drift_identity_check,
    effective_codimension,
    gram_schmidt_at,
    growth_fit,
    inputs_digest,
    make_verdict,
    poincare_verify,
    rigidity_experiment,
)

import oracles
from conftest import circle

# Frozen diagonals of the quadrature Gram oracle
GRAM_R1 = [0.5, 0.5, 0.5, 0.5]
GRAM_R001 = [5e-5, 5e-5, 5e-17, 5e-17]


def shifted_ellipse(m):
    p = 2.0 * np.pi * np.arange(m) / m
    return ClosedCurve(np.column_stack([1.3 * np.cos(p) + 0.2 * np.cos(2 * p) + 0.4, np.sin(p) + 0.1]))


def project_off(u, curve, t, funcs):
    for f in funcs:
        u = u - weighted_inner_product(u, f, curve, t) / weighted_inner_product(f, f, curve, t) * f
    return u


class TestCodimension:
    def test_gram_oracle_frozen(self):
        np.testing.assert_allclose(np.diag(oracles.weighted_gram_torus((1, 2), 1.0, -1.0)), GRAM_R1, rtol=1e-10)
        np.testing.assert_allclose(np.diag(oracles.weighted_gram_torus((1, 2), 0.01, -5e-5)), GRAM_R001,
                                   rtol=1e-8)

    @pytest.mark.parametrize("r, t, codim", [(1.0, -1.0, 3), (0.01, -5e-5, 1)])
    def test_torus(self, r, t, codim):
        c = sample(TorusCurveParams((1, 2), r), 512)
        rep = effective_codimension(c, t)
        assert rep.codimension == codim
        expect = np.sort(np.linalg.eigvalsh(oracles.weighted_gram_torus((1, 2), r, t)))[::-1]
        np.testing.assert_allclose(rep.singular_values, expect, atol=1e-10)

    def test_planar_circle(self):
        pts = np.column_stack([circle(64).points, np.zeros(64)])
        assert effective_codimension(ClosedCurve(pts), -1.0).codimension == 1


class TestGramSchmidt:
    def test_orthonormal(self, rng):
        c = sample_at((1, 2), -1.0, 256)
        fields = [np.ones(256), c.points[:, 0], c.points[:, 0] + c.points[:, 2], rng.normal(size=256)]
        res = gram_schmidt_at(fields, c, -1.0)
        gram = np.array([[weighted_inner_product(a, b, c, -1.0) for b in res.orthonormal] for a in res.orthonormal])
        np.testing.assert_allclose(gram, np.eye(4), atol=1e-12)
        # x3 is orthogonal to 1 and x1, so removing x1 from x1 + x3 takes exactly one copy
        assert res.coefficients[1, 2] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.tril(res.coefficients) == 0.0)

    def test_rank_deficient(self):
        c = circle(64)
        x = c.points[:, 0]
        with pytest.raises(AncientFlowError) as exc:
            gram_schmidt_at([x, np.ones(64), 2 * x - 1.0], c, -1.0)
        assert exc.value.code == "rank-deficient"
        assert exc.value.context["index"] == 2


class TestPoincare:
    sigma = MultiCircle(2).sample(256)
    spec = spectrum(sigma, 6)
    psi_angle = MultiCircle(2).angles(256) / 2

    def test_saturation(self):
        res = poincare_verify(self.sigma, np.cos(self.psi_angle), -1.0, self.spec)
        assert res.lhs == pytest.approx(res.rhs, rel=1e-3)
        assert res.holds

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), level=st.sampled_from([0, 2]), t=st.sampled_from([-1.0, -4.0]))
    def test_random_fields(self, seed, level, t):
        rng = np.random.default_rng(seed)
        curve = self.sigma.scaled(np.sqrt(-t))
        u = sum(a * np.cos(k * self.psi_angle) + b * np.sin(k * self.psi_angle)
                for k, (a, b) in enumerate(rng.normal(size=(6, 2))))
        psi = list(self.spec.eigenfunctions[1:level + 1])
        u = project_off(u, curve, t, [np.ones(256)] + psi)
        assert poincare_verify(curve, u, t, self.spec, level, psi=psi or None).holds

    def test_not_orthogonal(self):
        with pytest.raises(AncientFlowError) as exc:
            poincare_verify(self.sigma, np.cos(self.psi_angle) + 1.0, -1.0, self.spec)
        assert exc.value.code == "not-orthogonal"
        assert len(exc.value.context["residuals"]) == 1


class TestDrift:
    def test_second_order_on_shifted_curve(self):
        grids = [64, 128, 256, 512]
        res = [drift_identity_check(LinearCaloric(np.array([0.6, 0.8]), shifted_ellipse(m)), -1.3) for m in grids]
        slope = -np.polyfit(np.log(grids), np.log(res), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.2)

    def test_torus_exact(self):
        c = sample_at((1, 2), -2.0, 128)
        assert drift_identity_check(LinearCaloric(np.array([1.0, 0, 0.5, 0]), c), -2.0) < 1e-12

    def test_direction_checked(self):
        with pytest.raises(AncientFlowError):
            LinearCaloric(np.ones(3), circle(32))


class TestGrowth:
    times = -np.logspace(8, 4, 13)

    @pytest.mark.parametrize("freqs, idx, expect", [((1, 2), 0, 0.25), ((1,), 0, 1.0), ((1, 2), 2, 1.0)])
    def test_coordinates(self, freqs, idx, expect):
        traj = exact_trajectory(freqs, self.times, 512, {"u": lambda p: p[:, idx]})
        fit = growth_fit(traj, "u")
        assert fit.exponent_d == pytest.approx(expect, abs=0.02)

    def test_constant(self):
        traj = exact_trajectory((1, 2), self.times, 256, {"u": lambda p: np.ones(p.shape[0])})
        assert abs(growth_fit(traj, "u").exponent_d) < 0.01

    def test_envelope_holds(self):
        traj = exact_trajectory((1, 2), self.times, 256, {"u": lambda p: p[:, 0]})
        fit = growth_fit(traj, "u")
        from ancientflow.gaussian import weighted_norm_sq
        for s in traj.samples:
            assert weighted_norm_sq(s.fields["u"], s.curve, s.t) <= fit.constant_C * (1 - s.t) ** fit.exponent_d * (1 + 1e-12)

    def test_window_requirements(self):
        short = exact_trajectory((1, 2), -np.logspace(3, 2, 9), 64, {"u": lambda p: p[:, 0]})
        with pytest.raises(AncientFlowError) as exc:
            growth_fit(short, "u")
        assert exc.value.code == "invalid-window"
        few = exact_trajectory((1, 2), self.times[:4], 64, {"u": lambda p: p[:, 0]})
        with pytest.raises(AncientFlowError) as exc:
            growth_fit(few, "u")
        assert exc.value.code == "too-few-samples"


class TestCarleman:
    sigma = MultiCircle(1).sample(128)
    psi = MultiCircle(1).angles(128)
    times = np.linspace(-2.0, -1.0, 81)

    def test_caloric_mode(self):
        u = np.exp(-0.5 * self.times)[:, None] * np.cos(self.psi)[None, :]
        res = carleman_verify(u, self.sigma, self.times, 2.0, 1.0)
        assert res.holds

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), alpha=st.floats(1.0, 6.0), delta=st.floats(0.5, 4.0))
    def test_random_fields(self, seed, alpha, delta):
        rng = np.random.default_rng(seed)
        u = np.zeros((self.times.size, 128))
        for k in range(4):
            for j in range(3):
                a, b = rng.normal(size=2)
                u += np.outer(np.cos(np.pi * j * (self.times + 2.0)), a * np.cos(k * self.psi) + b * np.sin(k * self.psi))
        assert carleman_verify(u, self.sigma, self.times, alpha, delta).holds

    def test_sides_shape_checked(self):
        with pytest.raises(AncientFlowError):
            carleman_sides(np.zeros((3, 5)), self.sigma, self.times, 1.0, 1.0)

    def test_parameters(self):
        with pytest.raises(AncientFlowError):
            carleman_verify(np.zeros((81, 128)), self.sigma, self.times, -1.0, 1.0)

    def test_under_resolved(self):
        rng = np.random.default_rng(0)
        u = rng.normal(size=(self.times.size, 128))
        with pytest.raises(AncientFlowError) as exc:
            carleman_verify(u, self.sigma, self.times, 2.0, 1.0)
        assert exc.value.code == "under-resolved"


class TestRigidity:
    def test_zero_amplitude(self):
        ref = MultiCircle(1)
        res = rigidity_experiment(ref, np.cos(ref.angles(128)), 0.0, (0.0, 0.05))
        assert res.status == "stable-zero"

    def test_amplitude_checked(self):
        ref = MultiCircle(1)
        with pytest.raises(AncientFlowError) as exc:
            rigidity_experiment(ref, np.ones(64), 0.5)
        assert exc.value.code == "invalid-amplitude"


class TestVerdicts:
    def test_digest_is_canonical(self):
        assert inputs_digest({"a": 1, "b": [0.1]}) == inputs_digest({"b": [0.1], "a": 1})
        assert len(inputs_digest({})) == 16

    def test_record(self):
        v = make_verdict("carleman", {"x": 1}, lhs=1.0, rhs=2.0, holds=True, tolerance=0.0)
        assert v["anchor"] == ANCHORS["carleman"]
        assert v["holds"] is True

    def test_suite_rows(self, tmp_path):
        path = tmp_path / "suite.csv"
        append_suite_row(path, make_verdict("drift", {}, lhs=1e-3, rhs=1e-10, holds=False))
        append_suite_row(path, make_verdict("growth", {}, lhs=0.25, fit=0.25))
        lines = path.read_text().splitlines()
        assert lines[0] == "op,anchor,inputs_digest,lhs,rhs,holds,tolerance"
        assert len(lines) == 3
        assert lines[1].split(",")[5] == "false"
