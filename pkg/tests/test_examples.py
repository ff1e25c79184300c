"""Built-in example catalogue: parameters, analytic references, payoff wiring."""

import math

import numpy as np
import pytest

import stopbound as sb
from stopbound import examples as ex
from stopbound import problem as pb


class TestExampleId:
    def test_names(self):
        assert ex.EXAMPLE_NAMES == ("example1", "example2a", "example2b", "example2c")

    def test_defaults_example1(self, ex1_id):
        p = ex1_id.params
        assert (p["r"], p["alpha"], p["c1"], p["c2"]) == (0.1, 0.5, 1.0, 1.0)
        assert (p["sigma"], p["horizon"]) == (0.25, 1.0)

    def test_defaults_example2c(self):
        eid = sb.example_id("example2c")
        assert eid.r == 0.1 and eid.mu == 0.02
        assert not math.isfinite(sb.build_example(eid).horizon)

    def test_attribute_passthrough(self, ex1_id):
        assert ex1_id.alpha == 0.5

    def test_unknown_name(self):
        with pytest.raises(sb.ParameterError):
            sb.example_id("example3")

    def test_unknown_override(self):
        with pytest.raises(sb.ParameterError):
            sb.example_id("example1", kappa=2.0)

    def test_alpha_range_enforced(self):
        with pytest.raises(sb.ParameterError):
            sb.example_id("example1", alpha=1.0)

    def test_reward_ordering_enforced(self):
        with pytest.raises(sb.ParameterError):
            sb.example_id("example1", c1=0.5, c2=1.0)

    def test_rate_dominance_enforced(self):
        # the perpetual examples need r > mu for finite values
        with pytest.raises(sb.ParameterError):
            sb.example_id("example2c", mu=0.1)


class TestAnalyticReferences:
    def test_gamma_example1(self, ex1_id):
        assert ex.analytic_reference(ex1_id, "gamma") == pytest.approx(
            2.0 * math.log(10.0), abs=1e-14
        )

    def test_gamma_example2a(self):
        g = ex.analytic_reference(sb.example_id("example2a"), "gamma")
        assert g(0.4, 0.0) == pytest.approx(4.2, abs=1e-12)
        assert g(-0.4, 0.1) == pytest.approx((0.02 - 0.5) / 0.1, abs=1e-12)

    def test_gamma_example2c(self):
        g = ex.analytic_reference(sb.example_id("example2c"), "gamma")
        assert g(0.4, 0.0) == pytest.approx(math.log(5.0), abs=1e-12)
        assert g(-1.0, 0.0) == -math.inf

    def test_slope_bound_example2c(self):
        eid = sb.example_id("example2c")
        assert ex.analytic_reference(eid, "slope_bound") == pytest.approx(12.5)

    def test_gamma_agrees_with_curve_scan(self, ex1_spec, ex1_id):
        scanned = pb.gamma_curve(ex1_spec, 0.4)
        assert scanned == pytest.approx(ex.analytic_reference(ex1_id, "gamma"), abs=1e-6)

    def test_gamma_agrees_with_curve_scan_2d(self, ex2a_frozen, ex2a_id):
        g = ex.analytic_reference(ex2a_id, "gamma")
        for tail in (-1.0, 0.5):
            scanned = pb.gamma_curve(ex2a_frozen, 0.2, tail=(tail,))
            assert scanned == pytest.approx(g(tail, 0.0), abs=1e-6)

    def test_tight_upper_flag(self):
        assert ex.analytic_reference(sb.example_id("example1"), "tight_upper_applies")
        assert not ex.analytic_reference(
            sb.example_id("example1", c2=0.5), "tight_upper_applies"
        )

    def test_unknown_quantity(self, ex1_id):
        with pytest.raises(sb.ParameterError):
            ex.analytic_reference(ex1_id, "bogus")


class TestSpecWiring:
    def test_hm_gradient_analytic_everywhere(self):
        # supplied partials must match finite differences of h + m
        probes = {
            "example1": np.array([[1.2]]),
            "example2a": np.array([[2.0, 0.3, -0.4]]),
            "example2b": np.array([[-3.0, 1.0, 0.2]]),
            "example2c": np.array([[1.1, 0.7, -0.1]]),
        }
        for name, pts in probes.items():
            spec = sb.build_example(sb.example_id(name))
            grad, used_fd = pb.hm_gradient(spec, 0.3, pts)
            assert not used_fd, name
            eps = 1e-6
            for k in range(spec.dim):
                up = pts.copy()
                dn = pts.copy()
                up[0, k] += eps
                dn[0, k] -= eps
                fd = (
                    pb.hm_value(spec, 0.3, up).item()
                    - pb.hm_value(spec, 0.3, dn).item()
                ) / (2 * eps)
                assert grad[0, k] == pytest.approx(fd, rel=2e-5, abs=1e-8), (name, k)

    def test_example2a_generator_values(self):
        # m = r y - mu for the linear stop reward f = -y
        spec = sb.build_example(sb.example_id("example2a"))
        m = pb.obstacle_generator(spec, 0.2, np.array([1.5, 0.0, 0.0]))
        assert m.item() == pytest.approx(0.1 * 1.5 - 0.02, abs=1e-13)

    def test_example2c_generator_values(self):
        # m = (r - mu) e^theta for the log-price stop reward f = -e^theta
        spec = sb.build_example(sb.example_id("example2c"))
        m = pb.obstacle_generator(spec, 0.2, np.array([1.5, 0.0, 0.0]))
        assert m.item() == pytest.approx(0.08 * math.exp(1.5), rel=1e-12)

    def test_orientation_stop_below(self):
        for name in ex.EXAMPLE_NAMES:
            assert sb.build_example(sb.example_id(name)).boundary_orientation == (
                "stop-below"
            )

    def test_frozen_spec_example1_rejected(self, ex1_id):
        with pytest.raises(sb.ParameterError):
            sb.frozen_spec(ex1_id, 0.0)

    def test_measure_change(self):
        mc1 = ex.measure_change(sb.example_id("example1"))
        assert np.allclose(mc1.eta, [-0.125])
        mc2c = ex.measure_change(sb.example_id("example2c"))
        assert np.allclose(mc2c.eta, [0.3, 0.0, 0.0])
        assert ex.measure_change(sb.example_id("example2a")) is None

    def test_truncation_span(self):
        assert ex.truncation_span(sb.example_id("example1")) is None
        span, residual = ex.truncation_span(sb.example_id("example2b"))
        assert span == 50.0
        assert residual == pytest.approx(math.exp(-5.0), rel=1e-12)


class TestDefaults:
    def test_probes_sit_in_guaranteed_continuation(self):
        for name in ex.EXAMPLE_NAMES:
            eid = sb.example_id(name)
            gamma = ex.analytic_reference(eid, "gamma")
            for t, x in ex.default_probes(eid):
                level = gamma if np.isscalar(gamma) else gamma(x[1], x[2])
                assert x[0] >= level + 0.25, (name, t, x)

    def test_probes_inside_default_box(self):
        for name in ex.EXAMPLE_NAMES:
            eid = sb.example_id(name)
            box = ex.default_box(eid)
            for _, x in ex.default_probes(eid):
                for k, (lo, hi) in enumerate(box):
                    assert lo < x[k] < hi, (name, k)

    def test_box_brackets_gamma_range(self):
        # the solver can only see the boundary if gamma fits inside the box
        for name in ("example2a", "example2b", "example2c"):
            eid = sb.example_id(name)
            g = ex.analytic_reference(eid, "gamma")
            (lo1, hi1), (lo2, hi2) = ex.default_box(eid)
            tails = np.linspace(lo2, hi2, 33)
            levels = np.array([g(x2, 0.0) for x2 in tails])
            finite = np.isfinite(levels)
            assert (levels[finite] < hi1 - 2.0).all(), name

    def test_applicability_routes(self):
        routes = {
            "example1": ("A", "C", "D"),
            "example2a": ("A", "B", "C", "E", "G"),
            "example2b": ("B", "C", "E", "F", "G"),
            "example2c": ("B", "C", "E"),
        }
        for name, expected in routes.items():
            rep = ex.applicability(sb.example_id(name))
            assert tuple(rep["conditions_expected"]) == expected, name
