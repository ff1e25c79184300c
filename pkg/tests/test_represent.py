"""Monte Carlo representations: value, gradients, time bounds, martingale check.

The quantitative oracle is the pure-wait value of example1, which is available
in closed form because the state is a driftless Brownian motion and the
running reward is exponential.
"""

import math

import numpy as np
import pytest

import stopbound as sb

NEVER_STOP = sb.BoundarySurface.constant(-1e9, "stop-below", label="never")


def _ex1_wait_value(eid, t, x):
    """Closed-form reward of never stopping before the horizon."""
    k = 1.0 - eid.alpha
    beta0 = 0.5 * (k * eid.sigma) ** 2
    rem = eid.horizon - t
    pull = (1.0 - math.exp((beta0 - eid.r) * rem)) / (eid.r - beta0)
    return -math.exp(-k * x) * pull - eid.c2 * math.exp(-eid.r * rem)


def _ex1_wait_grad(eid, t, x):
    k = 1.0 - eid.alpha
    beta0 = 0.5 * (k * eid.sigma) ** 2
    rem = eid.horizon - t
    pull = (1.0 - math.exp((beta0 - eid.r) * rem)) / (eid.r - beta0)
    return k * math.exp(-k * x) * pull


class TestValueOracle:
    T0, X0 = 0.25, 3.0

    def test_pure_wait_value(self, ex1_id, ex1_spec):
        est = sb.estimate_value(
            ex1_spec, self.T0, [self.X0], NEVER_STOP, 20_000, 5e-3, seed=21
        )
        want = _ex1_wait_value(ex1_id, self.T0, self.X0)
        # states are sampled exactly and the trapezoid bias is O(dt^2), so
        # the tolerance is purely statistical
        assert abs(est.mean - want) <= 3.5 * est.std_error
        assert est.n_effective == est.n_paths == 20_000

    def test_pure_wait_gradient(self, ex1_id, ex1_spec):
        est = sb.estimate_grad_v(
            ex1_spec, self.T0, [self.X0], NEVER_STOP, 20_000, 5e-3, seed=22
        )
        want = _ex1_wait_grad(ex1_id, self.T0, self.X0)
        assert abs(est.mean - want) <= 3.5 * est.std_error

    def test_gradient_matches_crn_bump(self, ex1_spec):
        # same seed at both starting points: the paths share their noise, so
        # the finite difference converges pathwise to the flow derivative
        eps = 1e-4
        kw = dict(n_paths=4_000, dt=5e-3, seed=23)
        base = sb.estimate_value(ex1_spec, self.T0, [self.X0], NEVER_STOP, **kw)
        bump = sb.estimate_value(ex1_spec, self.T0, [self.X0 + eps], NEVER_STOP, **kw)
        grad = sb.estimate_grad_v(ex1_spec, self.T0, [self.X0], NEVER_STOP, **kw)
        fd = (bump.mean - base.mean) / eps
        assert fd == pytest.approx(grad.mean, rel=1e-2)

    @pytest.mark.parametrize("x_probe", [0.5, 5.0])
    def test_stopping_at_solver_boundary_beats_never_stopping(
        self, ex1_spec, ex1_surface, ex1_b0, x_probe
    ):
        # x = 0.5 sits deep in the stop region (immediate stop), x = 5.0 in
        # continuation just above the boundary
        kw = dict(n_paths=8_000, dt=5e-3, seed=24)
        stay = sb.estimate_value(ex1_spec, self.T0, [x_probe], NEVER_STOP, **kw)
        stop = sb.estimate_value(ex1_spec, self.T0, [x_probe], ex1_b0, **kw)
        joint = math.hypot(stay.std_error, stop.std_error)
        assert stop.mean >= stay.mean - 3.0 * joint
        # and the boundary estimate reproduces the solved surface value
        v_grid = ex1_surface.value_at(self.T0, [x_probe])
        assert abs(stop.mean - v_grid) <= 3.0 * stop.std_error + 1e-2


class TestTimeBounds:
    def test_sandwich_ordering(self, ex1_spec, ex1_b0):
        tb = sb.estimate_time_bounds(
            ex1_spec, 0.25, [5.0], ex1_b0, 4_000, 5e-3, seed=25, tightened=True
        )
        assert tb.lower.mean <= tb.upper.mean + 1e-12
        assert tb.upper.mean < -1e-3  # genuinely nonzero on this probe
        assert tb.tightened is not None
        # time-homogeneous data makes the tightened bound vanish path by
        # path, and the crude estimate must sit below it
        assert tb.tightened.mean == 0.0
        assert tb.tightened.std_error == 0.0
        joint = math.hypot(tb.tightened.std_error, tb.upper.std_error)
        assert tb.upper.mean <= tb.tightened.mean + 3.0 * joint

    def test_upper_bound_matches_pure_wait_time_derivative(self, ex1_spec):
        # never stopping makes the upper bound an unbiased estimate of the
        # exact time derivative: vt = -E[disc (h + n)(X_T)], and the Euler
        # terminal state is exact for driftless constant-sigma dynamics
        t0, x0 = 0.25, 5.0
        k, r, sg, c2 = 0.5, 0.1, 0.25, 1.0
        beta0 = 0.5 * (k * sg) ** 2
        span = 1.0 - t0
        vt_exact = math.exp(-k * x0) * math.exp(-(r - beta0) * span) - c2 * r * math.exp(
            -r * span
        )
        tb = sb.estimate_time_bounds(
            ex1_spec, t0, [x0], NEVER_STOP, 20_000, 1e-3, seed=125
        )
        assert tb.upper.mean < -1e-3  # genuinely nonzero
        assert tb.upper.mean == pytest.approx(vt_exact, abs=3.5 * tb.upper.std_error)
        assert tb.lower.mean <= tb.upper.mean + 1e-12

    def test_terminal_mass_survives_extracted_boundary(self, ex1_spec, ex1_b0):
        # regression: the degenerate terminal slab of the extracted boundary
        # must not swallow paths just before the horizon
        sample = sb.sample_functionals(
            ex1_spec, 0.25, [5.0], ex1_b0, 4_000, 1e-3, ["vt_upper"], seed=126
        )
        assert sample.hit_terminal.mean() > 0.5
        assert sample.estimate("vt_upper").mean < -1e-3

    def test_bounds_vanish_inside_the_stop_region(self, ex1_spec, ex1_b0):
        # starting below the boundary stops immediately; both bounds reduce
        # to the obstacle's time slope, which is zero here
        tb = sb.estimate_time_bounds(
            ex1_spec, 0.25, [3.0], ex1_b0, 500, 5e-3, seed=127
        )
        assert tb.upper.mean == 0.0
        assert tb.lower.mean == 0.0

    def test_excess_target_and_tightened_conflict(self, ex1_spec, ex1_b0):
        tb = sb.estimate_time_bounds(
            ex1_spec, 0.25, [3.0], ex1_b0, 500, 1e-2, seed=26, target="excess"
        )
        assert tb.lower.mean <= tb.upper.mean + 1e-12
        with pytest.raises(sb.ParameterError):
            sb.estimate_time_bounds(
                ex1_spec, 0.25, [3.0], ex1_b0, 100, 1e-2, target="excess", tightened=True
            )

    def test_infinite_horizon_rejected(self):
        spec = sb.frozen_spec("example2b", 0.0)
        with pytest.raises(sb.UnsupportedError):
            sb.estimate_time_bounds(spec, 0.0, [0.5, 0.3], NEVER_STOP, 100, 1e-2)


class TestMeasureChange:
    def test_event_weights_average_to_one(self, ex1_id, ex1_spec):
        change = sb.measure_change(ex1_id)
        sample = sb.sample_functionals(
            ex1_spec,
            0.25,
            [3.0],
            NEVER_STOP,
            5_000,
            5e-3,
            ["value"],
            seed=27,
            measure_change=change,
            mode="reweight",
        )
        w = sample.event_weight[sample.valid]
        se = w.std(ddof=1) / math.sqrt(w.size)
        assert abs(w.mean() - 1.0) <= 3.5 * se
        assert (w > 0).all()

    def test_reweight_and_shift_agree(self, ex1_id, ex1_spec, ex1_b0):
        # for Gaussian increments and constant tilt the two estimators target
        # the same discrete expectation exactly
        change = sb.measure_change(ex1_id)
        kw = dict(n_paths=5_000, dt=5e-3, seed=28, measure_change=change)
        a = sb.estimate_value(ex1_spec, 0.25, [1.0], ex1_b0, mode="reweight", **kw)
        b = sb.estimate_value(ex1_spec, 0.25, [1.0], ex1_b0, mode="shifted", **kw)
        joint = math.hypot(a.std_error, b.std_error)
        assert abs(a.mean - b.mean) <= 3.0 * joint

    def test_effective_sample_size_shrinks_under_reweighting(self, ex1_id, ex1_spec):
        change = sb.measure_change(ex1_id)
        sample = sb.sample_functionals(
            ex1_spec,
            0.25,
            [3.0],
            NEVER_STOP,
            2_000,
            5e-3,
            ["value"],
            seed=29,
            measure_change=change,
        )
        est = sample.estimate("value")
        assert 0 < est.n_effective < est.n_paths

    def test_bad_mode_rejected(self, ex1_id, ex1_spec):
        with pytest.raises(sb.ParameterError):
            sb.sample_functionals(
                ex1_spec,
                0.25,
                [3.0],
                NEVER_STOP,
                10,
                1e-2,
                ["value"],
                measure_change=sb.measure_change(ex1_id),
                mode="antithetic",
            )


class TestMartingaleCheckpoints:
    def test_constant_along_checkpoints(self, ex1_spec, ex1_surface, ex1_b0):
        ests = sb.estimate_martingale_checkpoints(
            ex1_spec,
            ex1_surface,
            ex1_b0,
            0.25,
            [5.0],  # continuation start, so the checkpoints carry real paths
            [0.0, 0.25, 0.5],
            20_000,
            5e-3,
            seed=30,
        )
        base = ests[0]
        assert base.std_error == 0.0
        for est in ests[1:]:
            assert abs(est.mean - base.mean) <= 3.0 * est.std_error + 5 * 5e-3

    def test_checkpoint_validation(self, ex1_spec, ex1_surface, ex1_b0):
        with pytest.raises(sb.ParameterError):
            sb.estimate_martingale_checkpoints(
                ex1_spec, ex1_surface, ex1_b0, 0.25, [5.0], [-0.1], 100, 1e-2
            )
        with pytest.raises(sb.ParameterError):
            sb.estimate_martingale_checkpoints(
                ex1_spec, ex1_surface, ex1_b0, 0.25, [5.0], [0.9], 100, 1e-2
            )


class TestKernelMechanics:
    def test_chunk_size_invariance(self, ex1_spec, ex1_b0):
        kw = dict(seed=31, requests=["value", ("grad", 0)])
        a = sb.sample_functionals(
            ex1_spec, 0.25, [1.0], ex1_b0, 600, 1e-2, kw["requests"],
            seed=kw["seed"], chunk_size=600,
        )
        b = sb.sample_functionals(
            ex1_spec, 0.25, [1.0], ex1_b0, 600, 1e-2, kw["requests"],
            seed=kw["seed"], chunk_size=37,
        )
        for name in ("value", "grad0"):
            assert np.array_equal(a.functionals[name], b.functionals[name])
        assert np.array_equal(a.tau, b.tau)

    def test_duplicate_requests_rejected(self, ex1_spec):
        with pytest.raises(sb.ParameterError):
            sb.sample_functionals(
                ex1_spec, 0.25, [1.0], NEVER_STOP, 10, 1e-2, ["value", "value"]
            )

    def test_axis_out_of_range(self, ex1_spec):
        with pytest.raises(sb.ParameterError):
            sb.estimate_grad_v(ex1_spec, 0.25, [1.0], NEVER_STOP, 10, 1e-2, axis=1)
        with pytest.raises(sb.ParameterError):
            sb.estimate_wcirc(ex1_spec, 0.25, [1.0], NEVER_STOP, 10, 1e-2, axis=-1)

    def test_finite_horizon_span_mismatch(self, ex1_spec):
        with pytest.raises(sb.ParameterError):
            sb.sample_functionals(
                ex1_spec, 0.25, [1.0], NEVER_STOP, 10, 1e-2, ["value"], span=0.3
            )

    def test_infinite_horizon_default_span(self):
        spec = sb.frozen_spec("example2b", 0.0)
        sample = sb.sample_functionals(
            spec, 0.0, [5.0, 0.3], NEVER_STOP, 4, 0.5, ["value"], seed=32
        )
        assert sample.truncated
        # r = 0.1: the 1e-6 discount target sits past the 50-unit cap
        assert sample.span == pytest.approx(50.0)
        assert sample.truncation_bound == pytest.approx(math.exp(-5.0))

    def test_custom_functional_runs(self, ex1_spec, ex1_b0):
        func = sb.custom_functional(
            "occupancy",
            integrand=lambda c: np.ones(c.x.shape[0]),
        )
        sample = sb.sample_functionals(
            ex1_spec, 0.25, [1.0], ex1_b0, 200, 1e-2, [func], seed=33
        )
        occ = sample.values("occupancy")
        # the running-one integral is the (trapezoid) time to stop
        assert np.allclose(occ, sample.tau[sample.valid], atol=1e-9)

    def test_phi_exact_when_never_stopping(self, ex1_spec):
        what, phi = sb.estimate_what_phi(
            ex1_spec, 0.25, [3.0], NEVER_STOP, 200, 1e-2, seed=35
        )
        assert phi.mean == pytest.approx(0.75, abs=1e-12)
        assert phi.std_error == pytest.approx(0.0, abs=1e-12)

    def test_excess_slope_below_value_gradient(self, ex1_spec, ex1_b0):
        # the stop reward is flat in x, so the excess and the value share
        # their gradient, and the one-sided bound applies to both
        what, phi = sb.estimate_what_phi(
            ex1_spec, 0.25, [5.0], ex1_b0, 4_000, 5e-3, seed=34
        )
        grad = sb.estimate_grad_v(
            ex1_spec, 0.25, [5.0], ex1_b0, 4_000, 5e-3, seed=34
        )
        joint = math.hypot(what.std_error, grad.std_error)
        assert what.mean <= grad.mean + 3.0 * joint
        assert 0.0 < phi.mean <= 0.75 + 1e-12

    def test_what_needs_one_dimension(self, ex2a_frozen):
        with pytest.raises(sb.UnsupportedError):
            sb.estimate_what_phi(
                ex2a_frozen, 0.0, [0.5, 0.3], NEVER_STOP, 10, 1e-2
            )
