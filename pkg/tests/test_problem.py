"""Problem container, generator images and the gamma level curve.

Oracles are closed forms computed independently in each test body.
"""

import math

import numpy as np
import pytest

import stopbound as sb
from stopbound import problem as pb

E_HALF = math.exp(-0.5)
GAMMA1 = 2.0 * math.log(10.0)


def _const_spec(dim=1, **kw):
    """Minimal valid spec: driftless unit-noise problem with flat rewards."""
    base = dict(
        dim=dim,
        horizon=1.0,
        kill_rate=0.0,
        drift=lambda x: np.zeros_like(np.atleast_2d(x)),
        grad_drift=lambda x: np.zeros(np.atleast_2d(x).shape + (dim,)),
        sigma=np.eye(dim),
        running=lambda t, x: np.zeros(np.atleast_2d(x).shape[:-1]),
        obstacle=lambda t, x: np.zeros(np.atleast_2d(x).shape[:-1]),
    )
    base.update(kw)
    return sb.ProblemSpec(**base)


class TestValidation:
    def test_sigma_shape_mismatch(self):
        with pytest.raises(sb.ParameterError):
            _const_spec(sigma=np.eye(2))

    def test_negative_kill_rate(self):
        with pytest.raises(sb.ParameterError):
            _const_spec(kill_rate=-0.1)

    def test_nonpositive_horizon(self):
        with pytest.raises(sb.ParameterError):
            _const_spec(horizon=0.0)

    def test_infinite_horizon_needs_kill_rate(self):
        with pytest.raises(sb.ParameterError):
            _const_spec(horizon=math.inf, kill_rate=0.0)

    def test_infinite_horizon_rejects_end_reward(self):
        with pytest.raises(sb.ParameterError):
            _const_spec(
                horizon=math.inf,
                kill_rate=0.5,
                terminal=lambda x: np.zeros(np.atleast_2d(x).shape[:-1]),
            )

    def test_bad_orientation(self):
        with pytest.raises(sb.ParameterError):
            _const_spec(boundary_orientation="sideways")

    def test_indefinite_diffusion_rejected(self):
        sig = np.array([[1.0, 0.0], [0.0, 1.0]])
        spec = _const_spec(dim=2, sigma=sig)  # sanity: psd passes
        assert spec.dim == 2

    def test_require_names_missing_piece(self):
        spec = _const_spec()
        with pytest.raises(sb.ConfigurationError, match="terminal"):
            spec.require("terminal")


class TestGeneratorImages:
    def test_example1_waiting_gain_closed_form(self, ex1_spec):
        # h + m = -exp(-(1-alpha) x) + r c1 with alpha=0.5, r=0.1, c1=1
        got = pb.hm_value(ex1_spec, 0.3, np.array([1.0])).item()
        assert got == pytest.approx(-E_HALF + 0.1, abs=1e-12)

    def test_example1_obstacle_generator_constant(self, ex1_spec):
        # f = -c1 constant, so m = -r f = r c1
        xs = np.array([[-2.0], [0.0], [3.5]])
        m = pb.obstacle_generator(ex1_spec, 0.1, xs)
        assert np.allclose(m, 0.1, atol=1e-14)

    def test_example1_terminal_generator_constant(self, ex1_spec):
        n = pb.terminal_generator(ex1_spec, np.array([0.7]))
        assert n.item() == pytest.approx(0.1, abs=1e-14)

    def test_hm_gradient_matches_fd(self, ex1_spec):
        pts = np.array([[0.4], [2.0]])
        grad, used_fd = pb.hm_gradient(ex1_spec, 0.2, pts)
        assert not used_fd
        eps = 1e-6
        for i, p in enumerate(pts):
            up = pb.hm_value(ex1_spec, 0.2, p + eps).item()
            dn = pb.hm_value(ex1_spec, 0.2, p - eps).item()
            assert grad[i, 0] == pytest.approx((up - dn) / (2 * eps), rel=1e-5)

    def test_hm_time_derivative_zero_for_autonomous_data(self, ex1_spec):
        val, used_fd = pb.hm_time_derivative(ex1_spec, 0.5, np.array([1.0]))
        assert not used_fd
        assert abs(val.item()) < 1e-9

    def test_fd_fallback_gradient(self):
        # drop the analytic partials: the fallback must agree with them
        eid = sb.example_id("example1")
        spec = sb.build_example(eid)
        import dataclasses

        bare = dataclasses.replace(spec, hm_grad=None, hm_t=None)
        pts = np.array([[1.3]])
        got, used_fd = pb.hm_gradient(bare, 0.2, pts)
        assert used_fd
        want = 0.5 * math.exp(-0.5 * 1.3)
        assert float(got[0, 0]) == pytest.approx(want, rel=1e-5)


class TestGammaCurve:
    def test_example1_matches_closed_form(self, ex1_spec):
        g = pb.gamma_curve(ex1_spec, 0.25)
        assert g == pytest.approx(GAMMA1, abs=1e-6)

    def test_never_positive_gives_plus_inf(self):
        eid = sb.example_id("example1", c1=0.0, c2=0.0)
        spec = sb.build_example(eid)
        assert pb.gamma_curve(spec, 0.0) == math.inf

    def test_always_positive_gives_minus_inf(self):
        spec = _const_spec(
            running=lambda t, x: np.ones(np.atleast_2d(x).shape[:-1]),
            obstacle_t=lambda t, x: np.zeros(np.atleast_2d(x).shape[:-1]),
            obstacle_grad=lambda t, x: np.zeros(np.atleast_2d(x).shape),
            obstacle_hess=lambda t, x: np.zeros(np.atleast_2d(x).shape + (1,)),
        )
        assert pb.gamma_curve(spec, 0.0) == -math.inf

    def test_tail_length_checked(self, ex2a_frozen):
        with pytest.raises(sb.ParameterError):
            pb.gamma_curve(ex2a_frozen, 0.0, tail=())


class TestFreezeAndTruncate:
    def test_freeze_drops_inert_axis(self, ex2a_id):
        full = sb.build_example(ex2a_id)
        frozen = sb.freeze_axis(full, 2, 0.7)
        assert frozen.dim == 2
        pt3 = np.array([[1.5, 0.2, 0.7]])
        pt2 = np.array([[1.5, 0.2]])
        assert np.asarray(frozen.running(0.1, pt2)).item() == pytest.approx(
            np.asarray(full.running(0.1, pt3)).item(), abs=1e-14
        )
        assert np.asarray(frozen.obstacle(0.1, pt2)).item() == pytest.approx(
            np.asarray(full.obstacle(0.1, pt3)).item(), abs=1e-14
        )

    def test_freeze_first_axis_rejected(self, ex2a_id):
        full = sb.build_example(ex2a_id)
        with pytest.raises(sb.ParameterError):
            sb.freeze_axis(full, 0, 0.0)

    def test_freeze_noisy_axis_rejected(self, ex2a_id):
        full = sb.build_example(ex2a_id)
        with pytest.raises((sb.ParameterError, sb.DiagnosticError)):
            sb.freeze_axis(full, 1, 0.0)

    def test_truncate_infinite_horizon(self):
        eid = sb.example_id("example2b")
        spec = sb.frozen_spec(eid, 0.0)
        assert not spec.finite_horizon
        cut = sb.truncate_horizon(spec, 50.0)
        assert cut.horizon == 50.0
        # end reward equals the stop reward at the cut
        xs = np.array([[3.0, 0.5], [-1.0, -0.2]])
        assert np.allclose(cut.terminal(xs), spec.obstacle(50.0, xs), atol=1e-14)

    def test_truncate_finite_horizon_rejected(self, ex1_spec):
        with pytest.raises(sb.ParameterError):
            sb.truncate_horizon(ex1_spec, 0.5)
