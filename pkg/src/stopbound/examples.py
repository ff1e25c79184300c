"""Built-in worked problems with analytic reference quantities.

Four parameterised instances exercise the whole toolchain:

* example1  — one-dimensional irreversible-investment stopper: killed
              Brownian motion with exponential running cost and constant
              stop/end rewards.
* example2a — demand/price model on a finite horizon: state (y, x, z) with
              price y first (the boundary coordinate), arithmetic dynamics,
              inert capacity parameter z.
* example2b — the same payoffs on an infinite horizon with mean-reverting
              demand x.
* example2c — infinite horizon with geometric price, delivered in log-price
              coordinates theta = ln y, plus the exponential change of
              measure that absorbs the price factor from the excess
              gradient.

The boundary coordinate always comes first, so stopping means the first
coordinate falling to the boundary level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from .errors import ParameterError
from .problem import ProblemSpec, freeze_axis
from .represent import MeasureChange, custom_functional

__all__ = [
    "EXAMPLE_NAMES",
    "ExampleId",
    "example_id",
    "build_example",
    "frozen_spec",
    "measure_change",
    "analytic_reference",
    "applicability",
    "truncation_span",
    "default_box",
    "default_probes",
]

EXAMPLE_NAMES = ("example1", "example2a", "example2b", "example2c")

_DEFAULTS = {
    "example1": {
        "r": 0.1,
        "alpha": 0.5,
        "c1": 1.0,
        "c2": 1.0,
        "mu": 0.0,
        "sigma": 0.25,
        "horizon": 1.0,
    },
    "example2a": {
        "r": 0.1,
        "alpha": 0.05,
        "beta": 0.3,
        "mu": 0.02,
        "sigma": 0.3,
        "horizon": 1.0,
    },
    "example2b": {
        "r": 0.1,
        "alpha_ou": 0.05,
        "zeta": 0.0,
        "beta": 0.3,
        "mu": 0.02,
        "sigma": 0.3,
    },
    "example2c": {
        "r": 0.1,
        "alpha_ou": 0.05,
        "zeta": 0.0,
        "beta": 0.3,
        "mu": 0.02,
        "sigma": 0.3,
    },
}

# Truncation of the infinite-horizon instances: run until the discount drops
# below 1e-6 but never beyond 50 time units.
_TRUNCATION_TARGET = 1e-6
_TRUNCATION_CAP = 50.0


@dataclass(frozen=True)
class ExampleId:
    """A validated example name plus its full parameter map."""

    name: str
    params: MappingProxyType

    def __getattr__(self, key):
        try:
            return self.params[key]
        except KeyError as exc:
            raise AttributeError(key) from exc


def example_id(name: str, **overrides) -> ExampleId:
    if name not in EXAMPLE_NAMES:
        raise ParameterError(
            f"unknown example {name!r}; choose one of {', '.join(EXAMPLE_NAMES)}"
        )
    params = dict(_DEFAULTS[name])
    for key, val in overrides.items():
        if key not in params:
            raise ParameterError(f"{name} takes no parameter {key!r}")
        params[key] = float(val)
    p = params
    if p["r"] <= 0:
        raise ParameterError("the discount rate must satisfy r > 0")
    if name == "example1":
        if not 0 < p["alpha"] < 1:
            raise ParameterError("example1 requires alpha in (0, 1)")
        if not p["c1"] >= p["c2"] >= 0:
            raise ParameterError("example1 requires c1 >= c2 >= 0")
        if p["sigma"] <= 0:
            raise ParameterError("example1 requires sigma > 0")
        if p["horizon"] <= 0:
            raise ParameterError("example1 requires a positive horizon")
    elif name == "example2a":
        if p["horizon"] <= 0 or not math.isfinite(p["horizon"]):
            raise ParameterError("example2a requires a finite positive horizon")
        if p["sigma"] <= 0 or p["beta"] <= 0:
            raise ParameterError("example2a requires sigma > 0 and beta > 0")
    else:
        if p["sigma"] <= 0 or p["beta"] <= 0:
            raise ParameterError(f"{name} requires sigma > 0 and beta > 0")
        if p["r"] <= max(p["alpha_ou"], p["mu"]):
            raise ParameterError(
                f"{name} requires r > max(alpha_ou, mu) for a finite value"
            )
    return ExampleId(name=name, params=MappingProxyType(params))


def _as_id(id_or_name, overrides) -> ExampleId:
    if isinstance(id_or_name, ExampleId):
        if overrides:
            return example_id(id_or_name.name, **{**id_or_name.params, **overrides})
        return id_or_name
    return example_id(str(id_or_name), **overrides)


def _example1_spec(eid: ExampleId) -> ProblemSpec:
    r, a = eid.r, eid.alpha
    c1, c2, mu, sg = eid.c1, eid.c2, eid.mu, eid.sigma
    k = 1.0 - a

    def running(t, x):
        return -np.exp(-k * x[..., 0])

    def running_t(t, x):
        return np.zeros(x.shape[:-1])

    def running_grad(t, x):
        return (k * np.exp(-k * x[..., 0]))[..., None]

    const = lambda v: (lambda t, x: np.full(x.shape[:-1], v))
    zero_vec = lambda t, x: np.zeros(x.shape)

    return ProblemSpec(
        dim=1,
        horizon=eid.horizon,
        kill_rate=r,
        drift=lambda x: np.full(x.shape, mu),
        grad_drift=lambda x: np.zeros(x.shape + (1,)),
        sigma=np.array([[sg]]),
        running=running,
        running_t=running_t,
        running_grad=running_grad,
        obstacle=const(-c1),
        obstacle_t=const(0.0),
        obstacle_grad=zero_vec,
        obstacle_hess=lambda t, x: np.zeros(x.shape + (1,)),
        terminal=lambda x: np.full(x.shape[:-1], -c2),
        terminal_grad=lambda x: np.zeros(x.shape),
        terminal_hess=lambda x: np.zeros(x.shape + (1,)),
        hm_t=lambda t, x: np.zeros(x.shape[:-1]),
        hm_grad=lambda t, x: (k * np.exp(-k * x[..., 0]))[..., None],
        obstacle_tt=const(0.0),
        label="example1",
    )


def _demand_payoffs(r, mu, *, log_price: bool):
    """Shared payoff wiring for the demand/price family; state (y|theta, x, z)."""

    def running(t, x):
        return x[..., 2] - x[..., 1]

    def running_t(t, x):
        return np.zeros(x.shape[:-1])

    def running_grad(t, x):
        g = np.zeros(x.shape)
        g[..., 1] = -1.0
        g[..., 2] = 1.0
        return g

    if log_price:
        price = lambda x: np.exp(x[..., 0])
    else:
        price = lambda x: x[..., 0]

    def obstacle(t, x):
        return -price(x)

    def obstacle_grad(t, x):
        g = np.zeros(x.shape)
        g[..., 0] = -price(x) if log_price else -1.0
        return g

    def obstacle_hess(t, x):
        hess = np.zeros(x.shape + (3,))
        if log_price:
            hess[..., 0, 0] = -price(x)
        return hess

    scale = (r - mu) if log_price else None

    def hm_grad(t, x):
        g = np.zeros(x.shape)
        g[..., 0] = scale * price(x) if log_price else r
        g[..., 1] = -1.0
        g[..., 2] = 1.0
        return g

    zero_t = lambda t, x: np.zeros(x.shape[:-1])
    return {
        "running": running,
        "running_t": running_t,
        "running_grad": running_grad,
        "obstacle": obstacle,
        "obstacle_t": zero_t,
        "obstacle_grad": obstacle_grad,
        "obstacle_hess": obstacle_hess,
        "hm_t": zero_t,
        "hm_grad": hm_grad,
        "obstacle_tt": zero_t,
    }


def _example2a_spec(eid: ExampleId) -> ProblemSpec:
    r, a, b, mu, sg = eid.r, eid.alpha, eid.beta, eid.mu, eid.sigma
    parts = _demand_payoffs(r, mu, log_price=False)

    def drift(x):
        out = np.zeros(x.shape)
        out[..., 0] = mu
        out[..., 1] = a
        return out

    return ProblemSpec(
        dim=3,
        horizon=eid.horizon,
        kill_rate=r,
        drift=drift,
        grad_drift=lambda x: np.zeros(x.shape + (3,)),
        sigma=np.diag([sg, b, 0.0]),
        terminal=lambda x: -x[..., 0],
        terminal_grad=lambda x: np.broadcast_to(
            np.array([-1.0, 0.0, 0.0]), x.shape
        ).copy(),
        terminal_hess=lambda x: np.zeros(x.shape + (3,)),
        label="example2a",
        **parts,
    )


def _ou_drift(alpha_ou, zeta, mu_first):
    def drift(x):
        out = np.zeros(x.shape)
        out[..., 0] = mu_first
        out[..., 1] = alpha_ou * (zeta - x[..., 1])
        return out

    def grad_drift(x):
        jac = np.zeros(x.shape + (3,))
        jac[..., 1, 1] = -alpha_ou
        return jac

    return drift, grad_drift


def _example2b_spec(eid: ExampleId) -> ProblemSpec:
    r, mu, sg, b = eid.r, eid.mu, eid.sigma, eid.beta
    parts = _demand_payoffs(r, mu, log_price=False)
    drift, grad_drift = _ou_drift(eid.alpha_ou, eid.zeta, mu)
    return ProblemSpec(
        dim=3,
        horizon=math.inf,
        kill_rate=r,
        drift=drift,
        grad_drift=grad_drift,
        sigma=np.diag([sg, b, 0.0]),
        label="example2b",
        **parts,
    )


def _example2c_spec(eid: ExampleId) -> ProblemSpec:
    r, mu, sg, b = eid.r, eid.mu, eid.sigma, eid.beta
    parts = _demand_payoffs(r, mu, log_price=True)
    # log-price drift: mu - sigma^2/2
    drift, grad_drift = _ou_drift(eid.alpha_ou, eid.zeta, mu - 0.5 * sg * sg)
    return ProblemSpec(
        dim=3,
        horizon=math.inf,
        kill_rate=r,
        drift=drift,
        grad_drift=grad_drift,
        sigma=np.diag([sg, b, 0.0]),
        label="example2c",
        **parts,
    )


_BUILDERS = {
    "example1": _example1_spec,
    "example2a": _example2a_spec,
    "example2b": _example2b_spec,
    "example2c": _example2c_spec,
}


def build_example(id_or_name, **overrides) -> ProblemSpec:
    """Fully wired problem for a built-in example (parameters overridable)."""
    eid = _as_id(id_or_name, overrides)
    return _BUILDERS[eid.name](eid)


def frozen_spec(id_or_name, z_value: float = 0.0, **overrides) -> ProblemSpec:
    """Two-dimensional restriction of a demand/price example at fixed z.

    The z coordinate is inert (no drift, no noise), so freezing it is exact;
    the result feeds the grid solver.
    """
    eid = _as_id(id_or_name, overrides)
    if eid.name == "example1":
        raise ParameterError("example1 is already one-dimensional")
    return freeze_axis(build_example(eid), axis=2, value=z_value)


def measure_change(id_or_name, **overrides):
    """The example's exponential change of measure, or None.

    example1: absorbs the running-cost factor exp(-(1-alpha) X) into a drift
    shift.  example2c: absorbs the price factor exp(theta), shifting the
    log-price drift up by sigma^2 and leaving demand untouched.
    """
    eid = _as_id(id_or_name, overrides)
    if eid.name == "example1":
        return MeasureChange(
            eta=np.array([(eid.alpha - 1.0) * eid.sigma]),
            label="example1:cost-factor",
        )
    if eid.name == "example2c":
        return MeasureChange(
            eta=np.array([eid.sigma, 0.0, 0.0]), label="example2c:price-factor"
        )
    return None


def truncation_span(id_or_name, **overrides):
    """(span, residual discount) for infinite-horizon runs, else None."""
    eid = _as_id(id_or_name, overrides)
    if eid.name in ("example1", "example2a"):
        return None
    span = min(-math.log(_TRUNCATION_TARGET) / eid.r, _TRUNCATION_CAP)
    return span, math.exp(-eid.r * span)


def analytic_reference(id_or_name, quantity: str, **overrides):
    """Closed-form reference values: see each branch for the contract."""
    eid = _as_id(id_or_name, overrides)
    name = eid.name
    r = eid.r

    if quantity == "stop_shape":
        coord = {"example1": "x", "example2a": "y", "example2b": "y"}.get(
            name, "log-price"
        )
        return {
            "orientation": "stop-below",
            "boundary_axis": 0,
            "boundary_coordinate": coord,
            "tail_axes": () if name == "example1" else (1, 2),
        }

    if quantity == "gamma":
        # level above which the running gain of waiting is positive
        if name == "example1":
            if r * eid.c1 <= 0:
                return math.inf
            return math.log(1.0 / (r * eid.c1)) / (1.0 - eid.alpha)
        if name in ("example2a", "example2b"):
            return lambda x, z: (eid.mu + x - z) / r
        scale = r - eid.mu

        def gamma_log_price(x, z):
            x, z = np.asarray(x, dtype=float), np.asarray(z, dtype=float)
            with np.errstate(divide="ignore"):
                return np.where(x > z, np.log(np.maximum(x - z, 1e-300) / scale), -np.inf)

        return gamma_log_price

    if quantity == "slope_bound":
        if name != "example2c":
            raise ParameterError(f"{name} has no analytic slope bound")
        return 1.0 / (r - eid.mu)

    if quantity == "tight_upper_applies":
        if name == "example1":
            return eid.c1 == eid.c2
        if name == "example2a":
            return True  # end reward equals the stop reward at the horizon
        raise ParameterError(f"{name} has no horizon, so no tightened bound")

    if quantity == "gradx_functional":
        if name != "example1":
            raise ParameterError(f"{name} has no closed-form gradient integrand")
        k = 1.0 - eid.alpha

        def integrand(ctx):
            return ctx.disc * k * np.exp(-k * ctx.x[..., 0])

        return custom_functional("gradx_closed", integrand=integrand)

    if quantity == "excess_grad_profile":
        # example2c only: the first excess-gradient component with the price
        # factor absorbed by the measure change; pair with mode="reweight"
        # (weights restore the factor) or mode="shifted" (the coupled tilted
        # dynamics) for two estimators of the same number.
        if name != "example2c":
            raise ParameterError(f"{name} has no absorbed-profile functional")
        scale = r - eid.mu

        def make(theta0: float):
            amp = scale * math.exp(theta0)

            def integrand(ctx):
                return ctx.disc * amp * np.exp(eid.mu * ctx.s)

            return custom_functional("wcirc0_profile", integrand=integrand)

        return make

    raise ParameterError(f"unsupported reference quantity {quantity!r} for {name}")


def applicability(id_or_name, **overrides) -> dict:
    """Which regularity route the instance is built to exercise."""
    eid = _as_id(id_or_name, overrides)
    if eid.name == "example1":
        return {
            "route": "one-dimensional ratio bounds",
            "conditions_expected": ["A", "C", "D"],
            "tight_time_bound": eid.c1 == eid.c2,
            "custom_refinement": eid.c2 == 0.0,
        }
    if eid.name == "example2a":
        return {
            "route": "growth-controlled slope bounds",
            "conditions_expected": ["A", "B", "C", "E", "G"],
        }
    if eid.name == "example2b":
        return {
            "route": "ratio-dominance and growth-controlled slope bounds",
            "conditions_expected": ["B", "C", "E", "F", "G"],
        }
    return {
        "route": "measure-change slope bound",
        "conditions_expected": ["B", "C", "E"],
        "slope_bound": 1.0 / (eid.r - eid.mu),
    }


def default_box(id_or_name, **overrides):
    """Spatial solve box per example: list of (low, high) per PDE coordinate."""
    eid = _as_id(id_or_name, overrides)
    if eid.name == "example1":
        return [(-4.0, 8.0)]
    # first-coordinate boxes bracket the gamma level's range over the tail
    # box, so the stopping boundary stays visible to the solver
    if eid.name == "example2a":
        return [(-26.0, 24.0), (-2.0, 2.0)]
    if eid.name == "example2b":
        return [(-36.0, 34.0), (-3.0, 3.0)]
    return [(-8.0, 8.0), (-3.0, 3.0)]


def default_probes(id_or_name, **overrides):
    """Five continuation probe points per example: (t, state) pairs.

    Probes sit strictly above the analytic gamma level, which guarantees
    continuation regardless of where the boundary lands.
    """
    eid = _as_id(id_or_name, overrides)
    name = eid.name
    if name == "example1":
        g = analytic_reference(eid, "gamma")
        return [(0.25, np.array([g + off])) for off in (0.3, 0.8, 1.3, 1.8, 2.3)]
    gamma = analytic_reference(eid, "gamma")
    if name == "example2a":
        t0 = 0.25
        cells = [(-0.4, 1.0), (-0.2, 1.4), (0.0, 1.0), (0.2, 1.4), (0.4, 1.0)]
        return [
            (t0, np.array([float(gamma(x, 0.0)) + off, x, 0.0])) for x, off in cells
        ]
    if name == "example2b":
        cells = [(-1.0, 2.0), (-0.5, 2.5), (0.0, 2.0), (0.5, 2.5), (1.0, 2.0)]
        return [
            (0.0, np.array([float(gamma(x, 0.0)) + off, x, 0.0])) for x, off in cells
        ]
    # log-price probes stay at moderate levels: the face clamp error scales
    # with the payoff at the face, so high-level cells need a far wider box
    cells = [(0.25, 0.5), (0.35, 0.5), (0.45, 0.5), (0.55, 0.5), (0.65, 0.5)]
    return [(0.0, np.array([float(gamma(x, 0.0)) + off, x, 0.0])) for x, off in cells]
