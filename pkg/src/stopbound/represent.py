"""Monte Carlo representations of value gradients and time-derivative bounds.

Every estimator simulates paths from a probe point (t, x), stops them at the
first entry of the supplied boundary's stop side, and averages a pathwise
functional.  The implemented functionals are

* value:      running reward integral plus stop or end reward;
* grad k:     the pathwise derivative, pairing reward gradients with the
              first-variation flow column k;
* time bounds: an upper and a lower pathwise bound whose expectations
              sandwich the time derivative of the value (or of the excess
              w = v - f when ``target="excess"``);
* wcirc k:    the excess-gradient representation pairing the gradient of
              h + m with flow column k;
* what/phi:   the scalar one-dimensional excess-slope lower bound and the
              mean time to stop.

All rewards are discounted by exp(-kill_rate * s).  Estimators share one
chunked streaming kernel; per-path accumulation order is fixed by the path
index, so results are independent of chunk size and evaluation order.
Optional importance weighting multiplies running contributions by the
change-of-measure weight at the running time and stop contributions by the
weight at the stop time.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    NumericOverflowError,
    ParameterError,
    UnsupportedError,
)
from .flow import PathBundle, chunk_ranges, default_chunk, draw_increments, step_grid
from .problem import ProblemSpec, hm_gradient, hm_time_derivative, terminal_generator

__all__ = [
    "MeasureChange",
    "Estimate",
    "TimeBounds",
    "PathSample",
    "custom_functional",
    "sample_functionals",
    "estimate_value",
    "estimate_grad_v",
    "estimate_time_bounds",
    "estimate_wcirc",
    "estimate_what_phi",
    "estimate_martingale_checkpoints",
    "apply_measure_change",
    "tilt_problem",
    "mean_se",
    "difference_se",
    "ratio_with_se",
]

# Truncation of infinite horizons: run until the discount factor is below
# this target, but never longer than _TRUNCATION_CAP time units.
_TRUNCATION_TARGET = 1e-6
_TRUNCATION_CAP = 50.0


@dataclass(frozen=True)
class MeasureChange:
    """Exponential change of measure driven by a constant Brownian exposure.

    Under the new measure the Brownian motion gains drift ``eta``, so the
    state gains drift ``sigma @ eta``.  The Radon-Nikodym weight along a path
    is exp(eta . B_s - 0.5 |eta|^2 s), accumulated per step from the log
    increment below.
    """

    eta: np.ndarray
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "eta", np.asarray(self.eta, dtype=float).reshape(-1))

    def log_weight_increment(self, db: np.ndarray, dt_step: float) -> np.ndarray:
        return db @ self.eta - 0.5 * float(self.eta @ self.eta) * dt_step

    def drift_shift(self, sigma: np.ndarray) -> np.ndarray:
        return np.asarray(sigma, dtype=float) @ self.eta


def tilt_problem(spec: ProblemSpec, change: MeasureChange) -> ProblemSpec:
    """The problem whose plain law equals the tilted law of ``spec``."""
    from dataclasses import replace

    shift = change.drift_shift(spec.sigma)
    base = spec.drift

    def drift(x):
        return np.asarray(base(x), dtype=float) + shift

    return replace(spec, drift=drift, label=f"{spec.label}|tilted")


@dataclass
class Estimate:
    """A Monte Carlo mean with its sampling error and provenance."""

    mean: float
    std_error: float
    n_effective: float
    n_paths: int
    dt: float
    seed: int
    boundary_id: str = ""
    label: str = ""
    truncation_bound: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "mean": self.mean,
            "std_error": self.std_error,
            "n_effective": self.n_effective,
            "n_paths": self.n_paths,
            "dt": self.dt,
            "seed": self.seed,
            "boundary_id": self.boundary_id,
            "label": self.label,
        }
        if self.truncation_bound is not None:
            out["truncation_bound"] = self.truncation_bound
        return out


@dataclass
class TimeBounds:
    """Sandwich for a time derivative: lower <= d/dt <= upper pathwise in mean."""

    lower: Estimate
    upper: Estimate
    tightened: Optional[Estimate] = None


def mean_se(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    mean = float(values.mean()) if n else math.nan
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


def difference_se(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Mean and standard error of a - b computed pathwise (paired)."""
    return mean_se(a - b)


def ratio_with_se(num: np.ndarray, den: np.ndarray) -> tuple[float, float]:
    """Delta-method mean and standard error of mean(num)/mean(den), paired."""
    n = num.size
    a, b = float(num.mean()), float(den.mean())
    if b == 0.0:
        raise ParameterError("ratio denominator has zero sample mean")
    r = a / b
    cov = np.cov(num, den, ddof=1)
    var = (cov[0, 0] - 2 * r * cov[0, 1] + r * r * cov[1, 1]) / (n * b * b)
    return r, math.sqrt(max(var, 0.0))


class _Ctx:
    """Evaluation context at one time index of the kernel loop."""

    __slots__ = ("t", "s", "x", "flow", "cols", "disc")

    def __init__(self, t, s, x, flow, cols, disc):
        self.t = t
        self.s = s
        self.x = x
        self.flow = flow
        self.cols = cols
        self.disc = disc

    def flow_col(self, axis: int) -> np.ndarray:
        return self.flow[:, :, self.cols[axis]]

    def take(self, idx) -> "_Ctx":
        return _Ctx(
            self.t,
            self.s,
            self.x[idx],
            None if self.flow is None else self.flow[idx],
            self.cols,
            self.disc,
        )


@dataclass
class _Functional:
    name: str
    flow_axes: tuple = ()
    integrand: Optional[Callable] = None
    at_stop: Optional[Callable] = None
    at_terminal: Optional[Callable] = None
    fd_fallback: bool = False


def _dot_rows(grad, col):
    return np.einsum("...i,...i->...", np.asarray(grad, dtype=float), col)


def custom_functional(
    name: str,
    *,
    integrand: Optional[Callable] = None,
    at_stop: Optional[Callable] = None,
    at_terminal: Optional[Callable] = None,
    flow_axes=(),
) -> _Functional:
    """A user-defined pathwise functional for ``sample_functionals``.

    Each callable receives a context with attributes ``t`` (absolute time),
    ``s`` (time since the start), ``x`` (states, shape (m, d)), ``disc`` (the
    kill-rate discount) and method ``flow_col(axis)`` for the requested flow
    columns, and returns per-path values of shape (m,).
    """
    return _Functional(
        name=name,
        flow_axes=tuple(int(k) for k in flow_axes),
        integrand=integrand,
        at_stop=at_stop,
        at_terminal=at_terminal,
    )


def _make_functional(spec: ProblemSpec, request) -> _Functional:
    if isinstance(request, _Functional):
        return request
    if isinstance(request, str):
        kind, axis = request, None
    else:
        kind, axis = request[0], (request[1] if len(request) > 1 else None)
    finite = spec.finite_horizon
    T = spec.horizon

    if kind == "value":
        spec.require("running", "obstacle")
        term = None
        if finite:
            spec.require("terminal")
            term = lambda c: c.disc * np.asarray(spec.terminal(c.x), dtype=float)
        return _Functional(
            name="value",
            integrand=lambda c: c.disc * np.asarray(spec.running(c.t, c.x), dtype=float),
            at_stop=lambda c: c.disc * np.asarray(spec.obstacle(c.t, c.x), dtype=float),
            at_terminal=term,
        )

    if kind == "grad":
        spec.require("running_grad", "obstacle_grad")
        k = int(axis)
        term = None
        if finite:
            spec.require("terminal_grad")
            term = lambda c: c.disc * _dot_rows(spec.terminal_grad(c.x), c.flow_col(k))
        return _Functional(
            name=f"grad{k}",
            flow_axes=(k,),
            integrand=lambda c: c.disc * _dot_rows(spec.running_grad(c.t, c.x), c.flow_col(k)),
            at_stop=lambda c: c.disc * _dot_rows(spec.obstacle_grad(c.t, c.x), c.flow_col(k)),
            at_terminal=term,
        )

    if kind in ("vt_upper", "vt_lower", "vt_tight"):
        spec.require("running_t", "obstacle_t")
        if not finite:
            raise UnsupportedError(
                "time-derivative bounds need a finite horizon; truncate first"
            )

        def run(c):
            return c.disc * np.asarray(spec.running_t(c.t, c.x), dtype=float)

        def stop(c):
            return c.disc * np.asarray(spec.obstacle_t(c.t, c.x), dtype=float)

        if kind == "vt_tight":
            term = lambda c: c.disc * np.asarray(spec.obstacle_t(T, c.x), dtype=float)
        else:
            def end_load(c):
                h_end = np.asarray(spec.running(T, c.x), dtype=float)
                n_end = terminal_generator(spec, c.x)
                return h_end + n_end

            if kind == "vt_upper":
                term = lambda c: -c.disc * end_load(c)
            else:
                term = lambda c: -c.disc * (
                    np.abs(end_load(c))
                    + np.abs(np.asarray(spec.obstacle_t(T, c.x), dtype=float))
                )
        return _Functional(name=kind, integrand=run, at_stop=stop, at_terminal=term)

    if kind in ("wt_upper", "wt_lower"):
        fd = spec.hm_t is None

        def run(c):
            val, _ = hm_time_derivative(spec, c.t, c.x)
            return c.disc * val

        term = None
        if finite:
            def end_load(c):
                h_end = np.asarray(spec.running(T, c.x), dtype=float)
                ft_end = np.asarray(spec.obstacle_t(T, c.x), dtype=float)
                n_end = terminal_generator(spec, c.x)
                return h_end + ft_end + n_end

            if kind == "wt_upper":
                term = lambda c: -c.disc * end_load(c)
            else:
                term = lambda c: -c.disc * np.abs(end_load(c))
        return _Functional(name=kind, integrand=run, at_terminal=term, fd_fallback=fd)

    if kind == "wcirc":
        k = int(axis)
        fd = spec.hm_grad is None

        def run(c):
            grad, _ = hm_gradient(spec, c.t, c.x)
            return c.disc * _dot_rows(grad, c.flow_col(k))

        term = None
        if finite:
            spec.require("terminal_grad", "obstacle_grad")
            term = lambda c: c.disc * _dot_rows(
                np.asarray(spec.terminal_grad(c.x), dtype=float)
                - np.asarray(spec.obstacle_grad(T, c.x), dtype=float),
                c.flow_col(k),
            )
        return _Functional(
            name=f"wcirc{k}", flow_axes=(k,), integrand=run, at_terminal=term, fd_fallback=fd
        )

    if kind == "what":
        if spec.dim != 1:
            raise UnsupportedError("the scalar excess-slope bound is one-dimensional")
        fd = spec.hm_grad is None

        def run(c):
            grad, _ = hm_gradient(spec, c.t, c.x)
            return c.disc * c.flow_col(0)[:, 0] * grad[..., 0]

        return _Functional(name="what", flow_axes=(0,), integrand=run, fd_fallback=fd)

    raise ParameterError(f"unknown functional request {request!r}")


def _resolve_span(spec: ProblemSpec, t: float, span: Optional[float]):
    if spec.finite_horizon:
        implied = spec.horizon - t
        if implied <= 0:
            raise ParameterError(f"start time {t} leaves no room before the horizon")
        if span is not None and abs(span - implied) > 1e-12 * max(1.0, implied):
            raise ParameterError("finite-horizon runs use span = horizon - t")
        return implied, False
    if span is None:
        span = min(-math.log(_TRUNCATION_TARGET) / spec.kill_rate, _TRUNCATION_CAP)
    return float(span), True


@dataclass
class PathSample:
    """Per-path functional values from one kernel run."""

    spec_label: str
    t0: float
    x0: np.ndarray
    dt: float
    seed: int
    span: float
    boundary_id: str
    n_paths: int
    functionals: dict
    tau: np.ndarray
    hit_terminal: np.ndarray
    valid: np.ndarray
    truncated: bool
    truncation_bound: Optional[float]
    event_weight: Optional[np.ndarray] = None
    fd_fallback: bool = False

    def values(self, name: str) -> np.ndarray:
        return self.functionals[name][self.valid]

    def estimate(self, name: str) -> Estimate:
        vals = self.values(name)
        mean, se = mean_se(vals)
        if self.event_weight is not None:
            w = self.event_weight[self.valid]
            n_eff = float((w.sum() ** 2) / (w @ w)) if w.size else 0.0
        else:
            n_eff = float(vals.size)
        return Estimate(
            mean=mean,
            std_error=se,
            n_effective=n_eff,
            n_paths=self.n_paths,
            dt=self.dt,
            seed=self.seed,
            boundary_id=self.boundary_id,
            label=f"{self.spec_label}:{name}",
            truncation_bound=self.truncation_bound,
        )


def sample_functionals(
    spec: ProblemSpec,
    t: float,
    x,
    boundary,
    n_paths: int,
    dt: float,
    requests,
    *,
    seed: int = 0,
    span: Optional[float] = None,
    measure_change: Optional[MeasureChange] = None,
    mode: str = "reweight",
    chunk_size: Optional[int] = None,
) -> PathSample:
    """Run the streaming kernel and return per-path functional values.

    ``requests`` is a list of functional kinds: "value", ("grad", k),
    ("wcirc", k), "vt_upper", "vt_lower", "vt_tight", "wt_upper",
    "wt_lower", "what".  With a measure change, ``mode="reweight"``
    simulates the original dynamics and weights contributions, while
    ``mode="shifted"`` simulates the tilted drift with unit weights.
    """
    span_eff, truncated = _resolve_span(spec, t, span)
    funcs = [_make_functional(spec, req) for req in requests]
    names = [f.name for f in funcs]
    if len(set(names)) != len(names):
        raise ParameterError("duplicate functional requests")
    return _run_kernel(
        spec,
        t,
        x,
        boundary,
        n_paths,
        dt,
        funcs,
        span_eff=span_eff,
        truncated=truncated,
        seed=seed,
        measure_change=measure_change,
        mode=mode,
        chunk_size=chunk_size,
    )


def _run_kernel(
    spec: ProblemSpec,
    t: float,
    x,
    boundary,
    n_paths: int,
    dt: float,
    funcs,
    *,
    span_eff: float,
    truncated: bool,
    seed: int = 0,
    measure_change: Optional[MeasureChange] = None,
    mode: str = "reweight",
    chunk_size: Optional[int] = None,
) -> PathSample:
    if n_paths < 1:
        raise ParameterError(f"n_paths must be >= 1, got {n_paths}")
    if mode not in ("reweight", "shifted"):
        raise ParameterError(f"mode must be 'reweight' or 'shifted', got {mode!r}")
    x0 = np.asarray(x, dtype=float).reshape(spec.dim)
    names = [f.name for f in funcs]

    times = step_grid(dt, span_eff)
    n_steps = len(times) - 1
    dts = np.diff(times)
    sqdts = np.sqrt(dts)
    d = spec.dim
    r = spec.kill_rate
    discs = np.exp(-r * times)

    cols = sorted({k for f in funcs for k in f.flow_axes})
    col_pos = {k: i for i, k in enumerate(cols)}
    need_flow = bool(cols)

    reweight = measure_change is not None and mode == "reweight"
    shift = (
        measure_change.drift_shift(spec.sigma)
        if (measure_change is not None and mode == "shifted")
        else None
    )
    eta = measure_change.eta if reweight else None

    orientation = getattr(boundary, "orientation", spec.boundary_orientation)
    below = orientation == "stop-below"

    b_steps = None
    if d == 1:
        b_steps = np.asarray(
            boundary.evaluate(t + times[:-1], np.empty((n_steps, 0))), dtype=float
        )
        b_steps = np.broadcast_to(b_steps, (n_steps,))

    totals = {name: np.zeros(n_paths) for name in names}
    tau = np.full(n_paths, span_eff)
    hit_terminal = np.ones(n_paths, dtype=bool)
    valid = np.ones(n_paths, dtype=bool)
    event_weight = np.ones(n_paths) if reweight else None

    if chunk_size is None:
        chunk_size = default_chunk(n_paths, n_steps, d)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore", under="ignore"):
        for lo, hi in chunk_ranges(n_paths, chunk_size):
            m = hi - lo
            xi = draw_increments(seed, lo, hi, n_steps, d)
            xs = np.broadcast_to(x0, (m, d)).copy()
            F = None
            if need_flow:
                F = np.zeros((m, d, len(cols)))
                for k, pos in col_pos.items():
                    F[:, k, pos] = 1.0
            logw = np.zeros(m) if reweight else None
            active = np.ones(m, dtype=bool)
            prev_g = None
            seg_mask = None
            for j in range(n_steps + 1):
                s = times[j]
                disc = discs[j]
                fresh_bad = active & ~np.isfinite(xs).all(axis=1)
                if fresh_bad.any():
                    gidx = np.nonzero(fresh_bad)[0]
                    valid[lo + gidx] = False
                    active[fresh_bad] = False
                w_now = None
                if reweight:
                    w_now = np.exp(logw)
                    if active.any() and not (w_now[active] > 0.0).all():
                        raise NumericOverflowError(
                            "a change-of-measure weight underflowed to zero; "
                            "analytically the weights are strictly positive"
                        )
                ctx = _Ctx(t + s, s, xs, F, col_pos, disc)
                g_now = {}
                for f in funcs:
                    if f.integrand is not None:
                        vals = np.asarray(f.integrand(ctx), dtype=float)
                        if reweight:
                            vals = vals * w_now
                        g_now[f.name] = vals
                if j > 0 and seg_mask is not None and seg_mask.any():
                    half_dt = 0.5 * dts[j - 1]
                    for name, gv in g_now.items():
                        seg = (prev_g[name][seg_mask] + gv[seg_mask]) * half_dt
                        totals[name][lo:hi][seg_mask] += seg
                if j < n_steps:
                    if d == 1:
                        b = b_steps[j]
                    else:
                        b = np.asarray(
                            boundary.evaluate(float(t + s), xs[:, 1:]), dtype=float
                        )
                        b = np.broadcast_to(b, (m,))
                    crossed = xs[:, 0] <= b if below else xs[:, 0] >= b
                    newly = active & crossed
                    if newly.any():
                        idx = np.nonzero(newly)[0]
                        sub = ctx.take(idx)
                        wq = w_now[idx] if reweight else 1.0
                        for f in funcs:
                            if f.at_stop is not None:
                                contrib = np.asarray(f.at_stop(sub), dtype=float) * wq
                                totals[f.name][lo + idx] += contrib
                        tau[lo + idx] = s
                        hit_terminal[lo + idx] = False
                        if reweight:
                            event_weight[lo + idx] = w_now[idx]
                        active[newly] = False
                    if not active.any():
                        break
                    seg_mask = active.copy()
                    db = xi[:, j] * sqdts[j]
                    mu = np.asarray(spec.drift(xs), dtype=float)
                    if shift is not None:
                        mu = mu + shift
                    if need_flow:
                        jac = np.asarray(spec.grad_drift(xs), dtype=float)
                        F = F + dts[j] * (jac @ F)
                    xs = xs + mu * dts[j] + db @ spec.sigma.T
                    if reweight:
                        logw = logw + measure_change.log_weight_increment(db, dts[j])
                else:
                    if active.any():
                        idx = np.nonzero(active)[0]
                        sub = ctx.take(idx)
                        wq = w_now[idx] if reweight else 1.0
                        for f in funcs:
                            if f.at_terminal is not None:
                                contrib = np.asarray(f.at_terminal(sub), dtype=float) * wq
                                totals[f.name][lo + idx] += contrib
                        if reweight:
                            event_weight[lo + idx] = w_now[idx]
                prev_g = g_now

    n_bad = int((~valid).sum())
    if n_bad:
        warnings.warn(
            f"{n_bad} of {n_paths} paths reached non-finite states and were "
            "excluded from the estimate",
            RuntimeWarning,
        )
    return PathSample(
        spec_label=spec.label,
        t0=float(t),
        x0=x0,
        dt=float(dt),
        seed=int(seed),
        span=span_eff,
        boundary_id=getattr(boundary, "label", ""),
        n_paths=n_paths,
        functionals=totals,
        tau=tau,
        hit_terminal=hit_terminal,
        valid=valid,
        truncated=truncated,
        truncation_bound=math.exp(-r * span_eff) if truncated else None,
        event_weight=event_weight,
        fd_fallback=any(f.fd_fallback for f in funcs),
    )


def estimate_value(
    spec: ProblemSpec, t: float, x, boundary, n_paths: int, dt: float, **kw
) -> Estimate:
    """Mean discounted reward of stopping at the supplied boundary."""
    return sample_functionals(spec, t, x, boundary, n_paths, dt, ["value"], **kw).estimate(
        "value"
    )


def estimate_grad_v(
    spec: ProblemSpec, t: float, x, boundary, n_paths: int, dt: float, axis: int = 0, **kw
) -> Estimate:
    """Pathwise-derivative estimate of d v / d x_axis at the probe point.

    Valid on the continuation side wherever the value is differentiable; the
    stopping rule is kept fixed at the supplied boundary while the starting
    point moves, which is exactly the envelope argument behind the pathwise
    derivative.
    """
    if not 0 <= axis < spec.dim:
        raise ParameterError(f"axis {axis} out of range for dim {spec.dim}")
    sample = sample_functionals(spec, t, x, boundary, n_paths, dt, [("grad", axis)], **kw)
    return sample.estimate(f"grad{axis}")


def estimate_time_bounds(
    spec: ProblemSpec,
    t: float,
    x,
    boundary,
    n_paths: int,
    dt: float,
    *,
    target: str = "value",
    tightened: bool = False,
    **kw,
) -> TimeBounds:
    """Sandwich estimates for the time derivative of v (or of w = v - f).

    The lower and upper functionals differ only through the sign treatment of
    the horizon load, so on common paths the lower estimate never exceeds the
    upper one.  With ``tightened=True`` (valid when the end reward equals the
    stop reward at the horizon, or up to an added constant) the sharper upper
    bound that follows from that identification is returned as well.
    """
    if target not in ("value", "excess"):
        raise ParameterError(f"target must be 'value' or 'excess', got {target!r}")
    if not spec.finite_horizon:
        raise UnsupportedError(
            "time-derivative bounds need a finite horizon; truncate first"
        )
    if target == "value":
        requests = ["vt_lower", "vt_upper"] + (["vt_tight"] if tightened else [])
    else:
        requests = ["wt_lower", "wt_upper"]
        if tightened:
            raise ParameterError("the tightened bound applies to target='value' only")
    sample = sample_functionals(spec, t, x, boundary, n_paths, dt, requests, **kw)
    lo = sample.estimate(requests[0])
    hi = sample.estimate(requests[1])
    tight = sample.estimate("vt_tight") if tightened else None
    return TimeBounds(lower=lo, upper=hi, tightened=tight)


def estimate_wcirc(
    spec: ProblemSpec, t: float, x, boundary, n_paths: int, dt: float, axis: int = 0, **kw
) -> Estimate:
    """Excess-gradient representation along coordinate ``axis``.

    For axis 0 under a drift whose other components do not depend on the
    first coordinate, the flow column collapses to its scalar first entry,
    which the kernel reproduces exactly (the remaining entries stay zero).
    """
    if not 0 <= axis < spec.dim:
        raise ParameterError(f"axis {axis} out of range for dim {spec.dim}")
    sample = sample_functionals(spec, t, x, boundary, n_paths, dt, [("wcirc", axis)], **kw)
    return sample.estimate(f"wcirc{axis}")


def estimate_what_phi(
    spec: ProblemSpec, t: float, x, boundary, n_paths: int, dt: float, **kw
) -> tuple[Estimate, Estimate]:
    """One-dimensional excess-slope lower bound and mean time to stop."""
    sample = sample_functionals(spec, t, x, boundary, n_paths, dt, ["what"], **kw)
    what = sample.estimate("what")
    tau = sample.tau[sample.valid]
    mean, se = mean_se(tau)
    phi = Estimate(
        mean=mean,
        std_error=se,
        n_effective=float(tau.size),
        n_paths=sample.n_paths,
        dt=sample.dt,
        seed=sample.seed,
        boundary_id=sample.boundary_id,
        label=f"{spec.label}:phi",
        truncation_bound=sample.truncation_bound,
    )
    return what, phi


def estimate_martingale_checkpoints(
    spec: ProblemSpec,
    surface,
    boundary,
    t: float,
    x,
    checkpoints,
    n_paths: int,
    dt: float,
    *,
    seed: int = 0,
    chunk_size: Optional[int] = None,
) -> list[Estimate]:
    """Estimates of E[discounted surface value at s ^ tau plus running reward].

    For the exact value function this expectation does not depend on the
    checkpoint s, so drift across checkpoints beyond a few standard errors
    reveals an inconsistency between the surface, the boundary and the
    dynamics.  Checkpoint 0 returns the interpolated surface value with zero
    error by construction.
    """
    x0 = np.asarray(x, dtype=float).reshape(spec.dim)
    out = []
    for s_c in checkpoints:
        if s_c < 0:
            raise ParameterError("checkpoints must be nonnegative time offsets")
        if s_c == 0:
            out.append(
                Estimate(
                    mean=surface.value_at(t, x0),
                    std_error=0.0,
                    n_effective=float(n_paths),
                    n_paths=n_paths,
                    dt=dt,
                    seed=seed,
                    boundary_id=getattr(boundary, "label", ""),
                    label=f"{spec.label}:mg@0",
                )
            )
            continue

        def snap(c):
            return c.disc * surface.values_at(c.t, c.x)

        horizon_room = spec.horizon - t if spec.finite_horizon else math.inf
        if s_c > horizon_room + 1e-12:
            raise ParameterError(
                f"checkpoint {s_c} exceeds the remaining horizon {horizon_room}"
            )
        func = _Functional(
            name="mg",
            integrand=lambda c: c.disc * np.asarray(spec.running(c.t, c.x), dtype=float),
            at_stop=snap,
            at_terminal=snap,
        )
        sample = _run_kernel(
            spec,
            t,
            x0,
            boundary,
            n_paths,
            dt,
            [func],
            span_eff=float(s_c),
            truncated=False,
            seed=seed,
            chunk_size=chunk_size,
        )
        est = sample.estimate("mg")
        est.label = f"{spec.label}:mg@{s_c:g}"
        out.append(est)
    return out


def apply_measure_change(
    spec: ProblemSpec, change: MeasureChange, bundle: PathBundle
) -> PathBundle:
    """Fill a bundle's cumulative change-of-measure weights from its noise.

    Weights are exp(eta . B_s - 0.5 |eta|^2 s) per step.  In exact arithmetic
    they are strictly positive with mean one at every fixed step; a
    nonpositive computed weight raises ``NumericOverflowError``.
    """
    eta = change.eta
    if eta.shape != (spec.dim,):
        raise ParameterError(
            f"eta must have shape ({spec.dim},), got {eta.shape}"
        )
    logw = bundle.brownian @ eta - 0.5 * float(eta @ eta) * bundle.times[None, :]
    with np.errstate(over="raise"):
        try:
            weights = np.exp(logw)
        except FloatingPointError as exc:
            raise NumericOverflowError(
                "a change-of-measure weight overflowed"
            ) from exc
    if not (weights > 0.0).all():
        raise NumericOverflowError(
            "a change-of-measure weight underflowed to zero; analytically "
            "the weights are strictly positive"
        )
    bundle.weights = weights
    return bundle
