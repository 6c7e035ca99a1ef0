import math

import numpy as np
import pytest

from recipgeo import (
    AffineStructure,
    Chart,
    ChartPoint,
    GeodesicState,
    SingularContext,
    TerminationReason,
    WeightVector,
    affine_geodesic_log,
    affine_geodesic_ratio,
    affine_trajectory,
    cost_log,
    hessian_ratio,
    integrate_geodesic,
    lc_christoffel_xy,
    lc_rhs_qr,
    lc_rhs_xy,
    qr_residual,
    radical_basis,
    tangent_constraints,
)
from recipgeo.errors import InadmissibleInitialState, InvalidSpan, ZeroExponent, ZeroSum

from conftest import assert_close


class TestTangentConstraints:
    def test_unit_surface_point(self):
        c = tangent_constraints(1.0, 0.4, 0.7)
        assert c.ratio_plus == 1.0
        assert_close(c.ratio_minus, -0.7 / 0.4, 1e-14)

    def test_symmetric_slope_zero(self):
        assert tangent_constraints(2.0, 0.5, 0.5).qr_slope == 0.0

    def test_power_value(self):
        # 1/a + 1/b = 3 + 2 = 5 at a = 1/3, b = 1/2
        c = tangent_constraints(2.0, 1 / 3, 1 / 2)
        assert_close(c.ratio_plus, 32.0, 1e-12)
        assert_close(c.qr_slope, (1 / 3 - 1 / 2) / (1 / 3 + 1 / 2), 1e-14)

    def test_opposite_branches_for_equal_weights(self):
        c = tangent_constraints(3.0, 0.5, 0.5)
        assert c.ratio_plus * c.ratio_minus < 0.0

    def test_errors(self):
        with pytest.raises(ZeroExponent):
            tangent_constraints(1.0, 0.0, 0.5)
        with pytest.raises(ZeroSum):
            tangent_constraints(1.0, 0.5, -0.5)


class TestAffineLog:
    def test_identity_at_zero(self):
        t0 = np.array([0.4, -1.0])
        np.testing.assert_array_equal(affine_geodesic_log(t0, np.array([1.0, 2.0]), 0.0), t0)

    def test_ratio_image_is_exponential(self):
        t0 = np.array([0.0, 0.0])
        v = np.array([0.3, -0.7])
        x1 = np.exp(affine_geodesic_log(t0, v, 1.0))
        x0 = np.exp(t0)
        np.testing.assert_allclose(x1 / x0, np.exp(v), rtol=1e-14)

    def test_radical_direction_keeps_cost_constant(self):
        w = WeightVector(np.array([0.6, -0.2, 0.7]))
        v = radical_basis(w).vectors[0]
        t0 = np.array([0.5, 1.0, -0.3])
        J0 = cost_log(ChartPoint(Chart.LOG, t0), w).J
        for lam in np.linspace(-20.0, 20.0, 9):
            t = affine_geodesic_log(t0, v, float(lam))
            assert_close(cost_log(ChartPoint(Chart.LOG, t), w).J, J0, 1e-12)


class TestAffineRatio:
    def test_maximal_interval_left_motion(self):
        _, (lo, hi) = affine_geodesic_ratio(np.array([1.0, 1.0]), np.array([-1.0, 0.0]))
        assert lo == -math.inf
        assert hi == 1.0

    def test_maximal_interval_growth(self):
        _, (lo, hi) = affine_geodesic_ratio(np.array([1.0, 1.0]), np.array([1.0, 1.0]))
        assert lo == -1.0
        assert hi == math.inf

    def test_zero_velocity_unbounded(self):
        _, (lo, hi) = affine_geodesic_ratio(np.array([2.0]), np.array([0.0]))
        assert lo == -math.inf and hi == math.inf

    def test_log_image_satisfies_reduced_equation(self):
        # s(lam) = log(x0 + lam v) obeys s'' + (s')^2 = 0, checked with the
        # exact velocity and one finite-difference layer for s''
        x0, v = 2.0, -0.5
        h = 1e-5
        for lam in (0.0, 0.7, 1.5):
            sdot = lambda l: v / (x0 + l * v)
            sddot = (sdot(lam + h) - sdot(lam - h)) / (2.0 * h)
            assert abs(sddot + sdot(lam) ** 2) <= 1e-10

    def test_trajectory_truncated_at_boundary(self):
        start = ChartPoint(Chart.RATIO, np.array([1.0, 1.0]))
        traj = affine_trajectory(
            AffineStructure.RATIO_FLAT, start, np.array([-1.0, 0.0]), (0.0, 5.0), num=64
        )
        assert traj.termination is TerminationReason.DOMAIN_BOUNDARY
        assert traj.samples[-1].lam < 1.0
        assert np.all(traj.positions > 0.0)

    def test_trajectory_full_span(self):
        start = ChartPoint(Chart.RATIO, np.array([1.0, 1.0]))
        traj = affine_trajectory(
            AffineStructure.RATIO_FLAT, start, np.array([1.0, 2.0]), (0.0, 3.0), num=32
        )
        assert traj.termination is TerminationReason.SPAN_COMPLETE
        assert traj.samples[-1].lam == 3.0

    def test_log_flat_trajectory_accelerations(self):
        start = ChartPoint(Chart.RATIO, np.array([2.0, 1.0]))
        v = np.array([0.3, -0.4])
        traj = affine_trajectory(AffineStructure.LOG_FLAT, start, v, (0.0, 2.0), num=16)
        for s in traj.samples:
            np.testing.assert_allclose(s.velocity, v * s.position, rtol=1e-13)
            np.testing.assert_allclose(s.acceleration, v * v * s.position, rtol=1e-13)


class TestLcRhs:
    def test_zero_velocity(self):
        st = GeodesicState(Chart.RATIO, [2.0, 3.0], [0.0, 0.0], 0.0)
        np.testing.assert_array_equal(lc_rhs_xy(st, 0.3, 0.4), [0.0, 0.0])

    def test_contraction_consistency(self, rng):
        for _ in range(50):
            a, b = rng.uniform(0.2, 1.2, 2) * np.where(rng.uniform(size=2) < 0.5, -1, 1)
            x, y = np.exp(rng.uniform(-1, 1, 2))
            if abs(SingularContext.from_xy(a, b, x, y).Delta) < 0.05:
                continue
            v = rng.uniform(-2, 2, 2)
            st = GeodesicState(Chart.RATIO, [x, y], v, 0.0)
            acc = lc_rhs_xy(st, a, b)
            expected = -lc_christoffel_xy(a, b, x, y).contract(v)
            scale = max(1.0, float(np.max(np.abs(expected))))
            assert np.max(np.abs(acc - expected)) / scale <= 1e-10

    def test_swap_symmetry(self):
        a, b, x, y = 0.4, 0.9, 2.0, 1.3
        vx, vy = 0.5, -0.2
        acc1 = lc_rhs_xy(GeodesicState(Chart.RATIO, [x, y], [vx, vy], 0.0), a, b)
        acc2 = lc_rhs_xy(GeodesicState(Chart.RATIO, [y, x], [vy, vx], 0.0), b, a)
        assert_close(acc1[0], acc2[1], 1e-12)
        assert_close(acc1[1], acc2[0], 1e-12)

    def test_qr_symmetric_preserves_zero_rdot(self):
        st = GeodesicState(Chart.QR, [0.9, 0.2], [-0.5, 0.0], 0.0)
        acc = lc_rhs_qr(st, 0.5, 0.5)
        assert acc[1] == 0.0

    def test_qr_velocity_homogeneity(self):
        st1 = GeodesicState(Chart.QR, [0.9, 0.2], [-0.5, 0.3], 0.0)
        st2 = GeodesicState(Chart.QR, [0.9, 0.2], [-1.0, 0.6], 0.0)
        acc1 = lc_rhs_qr(st1, 0.4, 0.7)
        acc2 = lc_rhs_qr(st2, 0.4, 0.7)
        np.testing.assert_allclose(acc2, 4.0 * acc1, rtol=1e-12)

    def test_qr_matches_transported_xy(self, rng):
        for _ in range(30):
            a, b = rng.uniform(0.2, 1.0, 2)
            x, y = np.exp(rng.uniform(-0.8, 0.8, 2))
            q = a * math.log(x) + b * math.log(y)
            if abs(math.sinh(q)) < 0.1 or abs((a + b) * math.cosh(q) - math.sinh(q)) < 0.05:
                continue
            if abs(SingularContext.from_xy(a, b, x, y).Delta) < 0.05:
                continue
            vx, vy = rng.uniform(-1.5, 1.5, 2)
            lx, ly = vx / x, vy / y
            acc = lc_rhs_xy(GeodesicState(Chart.RATIO, [x, y], [vx, vy], 0.0), a, b)
            gx, gy = acc[0] / x - lx * lx, acc[1] / y - ly * ly
            expected = np.array([a * gx + b * gy, -b * gx + a * gy])
            qd, rd = a * lx + b * ly, -b * lx + a * ly
            r = -b * math.log(x) + a * math.log(y)
            got = lc_rhs_qr(GeodesicState(Chart.QR, [q, r], [qd, rd], 0.0), a, b)
            scale = max(1.0, float(np.max(np.abs(expected))))
            assert np.max(np.abs(got - expected)) / scale <= 1e-8


class TestIntegrateGeodesic:
    def test_zero_velocity_constant(self):
        st = GeodesicState(Chart.RATIO, [2.0, 3.0], [0.0, 0.0], 0.0)
        traj = integrate_geodesic(st, 0.3, 0.4, (0.0, 2.0), tol=1e-10, samples=16)
        assert traj.termination is TerminationReason.SPAN_COMPLETE
        for s in traj.samples:
            np.testing.assert_allclose(s.position, [2.0, 3.0], rtol=1e-12)

    def test_reference_run_one(self):
        st = GeodesicState(Chart.RATIO, [4.0, 2.0], [-1.0, 1.0], 0.0)
        traj = integrate_geodesic(st, 1 / 3, 1 / 2, (0.0, 8.0), tol=1e-10)
        assert traj.termination in (
            TerminationReason.SINGULARITY_REACHED,
            TerminationReason.STEP_UNDERFLOW,
            TerminationReason.SPAN_COMPLETE,
        )
        res = qr_residual(traj, 1 / 3, 1 / 2)
        deltas = np.array(
            [SingularContext.from_xy(1 / 3, 1 / 2, *s.position).Delta for s in traj.samples]
        )
        assert np.max(res[np.abs(deltas) > 1e-3]) <= 1e-8

    def test_reference_run_two(self):
        st = GeodesicState(Chart.RATIO, [1.0, 2.0], [-1.0, 3.0], 0.0)
        traj = integrate_geodesic(st, -2.0, 1.0, (0.0, 4.0), tol=1e-10)
        assert traj.termination is TerminationReason.SPAN_COMPLETE
        res = qr_residual(traj, -2.0, 1.0)
        deltas = np.array(
            [SingularContext.from_xy(-2.0, 1.0, *s.position).Delta for s in traj.samples]
        )
        assert np.max(res[np.abs(deltas) > 1e-3]) <= 1e-8

    def test_lambda_monotone(self):
        st = GeodesicState(Chart.RATIO, [1.0, 2.0], [-1.0, 3.0], 0.0)
        traj = integrate_geodesic(st, -2.0, 1.0, (0.0, 2.0), tol=1e-8, samples=64)
        lams = traj.lambdas
        assert np.all(np.diff(lams) > 0.0)

    def test_energy_first_integral(self):
        a, b = -2.0, 1.0
        w = WeightVector(np.array([a, b]))
        st = GeodesicState(Chart.RATIO, [1.0, 2.0], [-1.0, 3.0], 0.0)
        tol = 1e-10
        traj = integrate_geodesic(st, a, b, (0.0, 4.0), tol=tol)
        energies = [
            float(s.velocity @ hessian_ratio(ChartPoint(Chart.RATIO, s.position), w).to_dense() @ s.velocity)
            for s in traj.samples
        ]
        budget = 5.0 * tol * max(traj.accepted, 1) * max(1.0, abs(energies[0]))
        assert max(energies) - min(energies) <= budget

    def test_inadmissible_start(self):
        st = GeodesicState(Chart.RATIO, [1.0, 1.0], [1.0, 0.0], 0.0)  # Z = 1
        with pytest.raises(InadmissibleInitialState):
            integrate_geodesic(st, 0.5, 0.5, (0.0, 1.0))

    def test_invalid_span(self):
        st = GeodesicState(Chart.RATIO, [2.0, 3.0], [0.1, 0.0], 0.0)
        with pytest.raises(InvalidSpan):
            integrate_geodesic(st, 0.5, 0.5, (1.0, 1.0))

    def test_qr_chart_symmetric_case(self):
        st = GeodesicState(Chart.QR, [1.0, 0.3], [-0.4, 0.0], 0.0)
        traj = integrate_geodesic(st, 0.5, 0.5, (0.0, 3.0), tol=1e-10, samples=128)
        assert max(abs(s.velocity[1]) for s in traj.samples) <= 1e-10

    def test_termination_soundness(self):
        # when the guard reports a singularity the final sample is within 10x
        st = GeodesicState(Chart.RATIO, [4.0, 2.0], [-1.0, 1.0], 0.0)
        traj = integrate_geodesic(st, 1 / 3, 1 / 2, (0.0, 8.0), tol=1e-10)
        if traj.termination is TerminationReason.SINGULARITY_REACHED:
            d = SingularContext.from_xy(1 / 3, 1 / 2, *traj.samples[-1].position).Delta
            assert abs(d) <= 10.0 * 1e-9


class TestQrResidual:
    def test_constant_trajectory_zero(self):
        st = GeodesicState(Chart.RATIO, [2.0, 3.0], [0.0, 0.0], 0.0)
        traj = integrate_geodesic(st, 0.3, 0.4, (0.0, 1.0), tol=1e-10, samples=8)
        assert np.max(qr_residual(traj, 0.3, 0.4)) == 0.0

    def test_affine_path_fails_geodesic_equations(self):
        # a log-flat affine geodesic is not a Levi-Civita geodesic: feeding
        # its own accelerations into the rotated-chart forms leaves a large
        # defect
        a, b = 1 / 3, 1 / 2
        start = ChartPoint(Chart.RATIO, np.array([4.0, 2.0]))
        traj = affine_trajectory(
            AffineStructure.LOG_FLAT, start, np.array([-0.25, 0.5]), (0.0, 1.0), num=32
        )
        res = qr_residual(traj, a, b)
        assert np.max(res) > 1e-3

    def test_lc_trajectory_small_residual(self):
        st = GeodesicState(Chart.RATIO, [1.0, 2.0], [-1.0, 3.0], 0.0)
        traj = integrate_geodesic(st, -2.0, 1.0, (0.0, 2.0), tol=1e-10, samples=64)
        assert np.max(qr_residual(traj, -2.0, 1.0)) <= 1e-8
