"""Excised quadrature of time-sliced amplitudes.

The heaviest property here is the brute-force dual check: the chained-transfer
evaluation must reproduce, term by term, the literal nested midpoint sum of
``prefactor * phi(x_k) exp(discrete_action) psi(x_0)`` on tiny meshes.
"""

import itertools

import numpy as np
import pytest

from gaugeslice import (
    BoxSchedule,
    CapExceededError,
    ExcisionRegion,
    ScalarPotentialSpec,
    ScheduleError,
    SingularNodeError,
    VectorPotentialSpec,
    amplitude_error_report,
    amplitude_quadrature,
    discrete_action,
    gaussian_evaluator,
    kernel_prefactor,
    operator_vs_kernel_consistency,
    slice_kernel,
)
from gaugeslice.fields import Grid
from gaugeslice.pathint import (
    AmplitudeEstimate,
    _TensorMesh,
    phase_mesh_spacing,
    raw_sliced_amplitude,
)
from gaugeslice.reference import exact_free_gaussian


class TestPrefactor:
    def test_modulus(self):
        eps = 0.2
        for n, k in [(1, 1), (1, 3), (2, 2)]:
            pref = kernel_prefactor(n, eps, k)
            assert abs(pref) == pytest.approx((4.0 * np.pi * eps) ** (-n * k / 2.0))

    def test_phase_is_root_of_inverse_i(self):
        pref = kernel_prefactor(1, 0.2, 1)
        assert np.angle(pref) == pytest.approx(-np.pi / 4.0)

    def test_displayed_convention_off_by_one_slice(self):
        eps = 0.2
        ratio = kernel_prefactor(1, eps, 3, "displayed") / kernel_prefactor(1, eps, 3)
        assert abs(ratio) == pytest.approx((4.0 * np.pi * eps) ** 0.5)

    def test_unknown_convention(self):
        with pytest.raises(ValueError):
            kernel_prefactor(1, 0.2, 1, "bogus")

    def test_slice_kernel_modulus(self):
        val = slice_kernel([1.0], [0.3], 0.25)
        assert abs(val) == pytest.approx((4.0 * np.pi * 0.25) ** -0.5)


class TestDiscreteAction:
    def test_free_two_points(self):
        # kinetic term only: i eps * (1/4) ((x1 - x0)/eps)^2
        act = discrete_action([[0.0], [1.0]], 0.5)
        assert act == pytest.approx(1j * 0.5 * 0.25 * (1.0 / 0.5) ** 2)

    def test_potential_sampled_at_later_point(self):
        scalar = ScalarPotentialSpec(lambda p: 10.0 * (p[..., 0] > 0.5))
        act_free = discrete_action([[0.0], [1.0]], 0.5)
        act = discrete_action([[0.0], [1.0]], 0.5, scalar=scalar)
        # V is evaluated at x1 = 1, not at x0 = 0
        assert act == pytest.approx(act_free - 1j * 0.5 * 10.0)

    def test_gauge_increment_enters_without_eps(self):
        vec = VectorPotentialSpec((lambda p: np.full(p.shape[:-1], 0.7),))
        act_free = discrete_action([[0.0], [1.0]], 0.5)
        act = discrete_action([[0.0], [1.0]], 0.5, vector=vec)
        assert act == pytest.approx(act_free + 1j * 0.7)

    def test_singular_point_rejected(self):
        with pytest.raises(SingularNodeError):
            discrete_action([[0.0], [1.0]], 0.5, singular_points=[(0.0,)])

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            discrete_action([[0.0]], 0.5)


class TestExcisionRegion:
    def test_gap_subtraction(self):
        region = ExcisionRegion.build(1, 2.0, singular_points=[(0.0,)], gap=0.1)
        assert region.axis_intervals == (((-2.0, -0.1), (0.1, 2.0)),)

    def test_zero_gap_keeps_box(self):
        region = ExcisionRegion.build(1, 2.0, singular_points=[(0.0,)], gap=0.0)
        assert region.axis_intervals == (((-2.0, 2.0),),)

    def test_mesh_avoids_gap_and_conserves_length(self):
        region = ExcisionRegion.build(1, 2.0, singular_points=[(0.0,)], gap=0.1)
        nodes, weights = region.axis_mesh(0, 0.05)
        assert np.min(np.abs(nodes)) >= 0.1
        assert np.sum(weights) == pytest.approx(3.8)

    def test_per_axis_gaps_in_2d(self):
        region = ExcisionRegion.build(2, 1.0, singular_points=[(0.5, -0.5)], gap=0.2)
        assert region.axis_intervals[0] == ((-1.0, 0.3), (0.7, 1.0))
        assert region.axis_intervals[1] == ((-1.0, -0.7), (-0.3, 1.0))

    def test_validation(self):
        with pytest.raises(ValueError):
            ExcisionRegion((((0.0, 0.0),),))
        with pytest.raises(ValueError):
            ExcisionRegion((((0.0, 2.0), (1.0, 3.0)),))


class TestBoxSchedule:
    def test_monotonicity_enforced(self):
        with pytest.raises(ScheduleError):
            BoxSchedule((2.0, 1.0), (0.0, 0.0))
        with pytest.raises(ScheduleError):
            BoxSchedule((1.0, 2.0), (0.0, 0.1))
        with pytest.raises(ScheduleError):
            BoxSchedule((1.0,), (0.0, 0.0))

    def test_fresnel_spacing(self):
        sched = BoxSchedule.fresnel(0.1, 5.0, steps=4)
        assert len(sched) == 4
        diffs = np.diff(sched.radii)
        assert np.allclose(diffs, 2.0 * np.pi * 0.1 / 5.0)

    def test_fresnel_gap_shrinkage(self):
        sched = BoxSchedule.fresnel(0.1, 5.0, steps=3, gap=1e-2, gap_final=1e-3)
        assert sched.gaps[0] == pytest.approx(1e-2)
        assert sched.gaps[-1] == pytest.approx(1e-3)


class TestBruteForceDual:
    def test_chained_transfers_match_nested_sum(self):
        # two slices, coarse 1D meshes: sum the integrand literally over the
        # product grid and compare with the factorized evaluation
        eps = 0.25
        scalar = ScalarPotentialSpec(lambda p: np.sum(p**2, axis=-1))
        vector = VectorPotentialSpec((lambda p: 0.4 * np.sin(p[..., 0]),))
        phi = gaussian_evaluator(center=0.5, ndim=1)
        psi = gaussian_evaluator(momentum=1.0, ndim=1)
        region = ExcisionRegion.build(1, 2.0)
        h = 0.5
        fast = raw_sliced_amplitude(
            phi, psi, eps, 2, [region] * 3, h, vector=vector, scalar=scalar
        )

        nodes, weights = region.axis_mesh(0, h)
        pref = kernel_prefactor(1, eps, 2)
        brute = 0.0j
        for (x0, w0), (x1, w1), (x2, w2) in itertools.product(
            zip(nodes, weights), repeat=3
        ):
            xs = [[x0], [x1], [x2]]
            brute += (
                phi(np.array([x2]))
                * np.exp(discrete_action(xs, eps, scalar=scalar, vector=vector))
                * psi(np.array([x0]))
                * w0
                * w1
                * w2
            )
        brute *= pref
        assert fast == pytest.approx(complex(brute), rel=1e-9)

    def test_region_count_validated(self):
        region = ExcisionRegion.build(1, 2.0)
        with pytest.raises(ValueError):
            raw_sliced_amplitude(
                gaussian_evaluator(), gaussian_evaluator(), 0.1, 2, [region] * 2, 0.5
            )


class TestKernelAgainstClosedForm:
    def test_one_transfer_reproduces_free_evolution(self):
        # integral of K_eps(x, y) psi(y) dy equals the exactly evolved Gaussian
        eps = 0.2
        radius = 10.0
        region = ExcisionRegion.build(1, radius)
        h = phase_mesh_spacing(eps, radius, adjacent_pairs=1)
        nodes, weights = region.axis_mesh(0, h)
        psi = gaussian_evaluator(momentum=1.0, ndim=1)
        for x in (0.0, 0.7):
            total = sum(
                slice_kernel([x], [y], eps) * psi(np.array([y])) * w
                for y, w in zip(nodes, weights)
            )
            exact = exact_free_gaussian(np.array([x]), eps, 0.0, 1.0, 1.0)[0]
            assert abs(total - exact) < 1e-6 * abs(exact)


class TestAmplitudeQuadrature:
    def test_free_single_slice_matches_closed_form(self):
        t = 0.2
        phi = gaussian_evaluator(center=0.8, ndim=1)
        psi = gaussian_evaluator(momentum=1.0, ndim=1)
        schedule = BoxSchedule.fresnel(t, 6.0, steps=6, tail_window=4)
        est = amplitude_quadrature(phi, psi, t, 1, schedule)
        x = np.linspace(-30.0, 30.0, 60001)
        closed = np.trapezoid(
            phi(x[:, None]) * exact_free_gaussian(x, t, 0.0, 1.0, 1.0), x
        )
        report = amplitude_error_report(est, complex(closed))
        assert report.rel_error < 1e-3
        assert report.converged

    def test_cap_exceeded_suggests_fewer_slices(self):
        schedule = BoxSchedule.fresnel(0.1, 5.0, steps=2)
        with pytest.raises(CapExceededError) as info:
            amplitude_quadrature(
                gaussian_evaluator(), gaussian_evaluator(), 0.2, 2, schedule,
                max_evals=10,
            )
        assert info.value.suggested_slices is not None
        assert info.value.suggested_slices >= 0

    def test_estimate_validates_nonempty(self):
        with pytest.raises(ValueError):
            AmplitudeEstimate((), (), 0.0, 0.0, (), 0.1, 1)

    def test_error_report_fields(self):
        est = AmplitudeEstimate(
            raw=(1.0 + 0j, 1.02 + 0j),
            radii=(5.0, 5.5),
            value=1.01 + 0j,
            tail_oscillation=0.005,
            mesh_sizes=(10, 11),
            eps=0.1,
            slices=1,
        )
        rep = amplitude_error_report(est, 1.0 + 0j)
        assert rep.abs_error == pytest.approx(0.01)
        assert rep.rel_error == pytest.approx(0.01)
        assert rep.converged


class TestOperatorVsKernel:
    def test_one_dimensional_routes_agree(self):
        # with a single axis the threaded and frozen gauge increments coincide,
        # so the split operator and the kernel transfer must match closely
        vec = VectorPotentialSpec((lambda p: 0.5 * np.sin(2.0 * np.pi * p[..., 0] / 12.0),))
        grid = Grid((-6.0,), (6.0,), (64,))
        assert operator_vs_kernel_consistency(vec, grid, 0.05) < 1e-4

    def test_mesh_spacing_formula(self):
        assert phase_mesh_spacing(0.1, 5.0, adjacent_pairs=2) == pytest.approx(
            (np.pi / 4.0) * 0.1 / 10.0
        )
