"""Problem data for finite and infinite horizon optimal stopping of diffusions.

A problem consists of a time-homogeneous diffusion

    dX_t = drift(X_t) dt + sigma dB_t,        X_0 = x in R^d,

a running reward h(t, x), a stop reward f(t, x) collected on early stopping,
an optional end reward g(x) collected if the horizon T is reached, and a kill
rate r >= 0 that discounts all rewards by exp(-r s).  The diffusion matrix
sigma is constant and sigma sigma^T may be degenerate.

All callables are vectorised: spatial arguments have shape (..., d) and value
callables return shape (...), gradients return (..., d), Hessians and drift
Jacobians return (..., d, d).  Scalar time arguments broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DiagnosticError, ParameterError

__all__ = [
    "ProblemSpec",
    "GeneratorImage",
    "evaluate_m_n",
    "hm_value",
    "hm_gradient",
    "hm_time_derivative",
    "gamma_curve",
    "freeze_axis",
    "truncate_horizon",
]

# Relative step for the central finite-difference fallback on derivative data
# that was not supplied analytically.  Uses of the fallback are flagged.
FD_STEP_SCALE = 1e-6


@dataclass(frozen=True)
class ProblemSpec:
    """Full description of one stopping problem.

    ``horizon`` may be ``math.inf``; in that case no end reward is allowed and
    the kill rate must be positive so that values stay finite.  Derivative
    callables may be omitted (``None``) when constructing partial problems;
    operations that need a missing piece raise ``ConfigurationError`` naming
    it.
    """

    dim: int
    horizon: float
    kill_rate: float
    drift: Callable
    grad_drift: Callable
    sigma: np.ndarray
    running: Callable
    running_t: Optional[Callable] = None
    running_grad: Optional[Callable] = None
    obstacle: Callable = None
    obstacle_t: Optional[Callable] = None
    obstacle_grad: Optional[Callable] = None
    obstacle_hess: Optional[Callable] = None
    terminal: Optional[Callable] = None
    terminal_grad: Optional[Callable] = None
    terminal_hess: Optional[Callable] = None
    boundary_orientation: str = "stop-below"
    hm_t: Optional[Callable] = None
    hm_grad: Optional[Callable] = None
    obstacle_tt: Optional[Callable] = None
    label: str = "custom"

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError(f"dim must be >= 1, got {self.dim}")
        if not (self.horizon > 0):
            raise ParameterError(f"horizon must be positive, got {self.horizon}")
        if self.kill_rate < 0:
            raise ParameterError(f"kill_rate must be >= 0, got {self.kill_rate}")
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.shape != (self.dim, self.dim):
            raise ParameterError(
                f"sigma must have shape ({self.dim}, {self.dim}), got {sigma.shape}"
            )
        object.__setattr__(self, "sigma", sigma)
        a = sigma @ sigma.T
        eigmin = float(np.linalg.eigvalsh(a).min())
        if eigmin < -1e-10 * max(1.0, float(np.abs(a).max())):
            raise ParameterError("sigma sigma^T must be positive semi-definite")
        if self.boundary_orientation not in ("stop-below", "stop-above"):
            raise ParameterError(
                f"boundary_orientation must be 'stop-below' or 'stop-above', "
                f"got {self.boundary_orientation!r}"
            )
        if math.isinf(self.horizon):
            if self.terminal is not None:
                raise ParameterError("infinite horizon problems take no end reward")
            if self.kill_rate <= 0:
                raise ParameterError("infinite horizon requires kill_rate > 0")
        if self.drift is None or self.grad_drift is None:
            raise ConfigurationError("drift and grad_drift are both required")
        if self.running is None or self.obstacle is None:
            raise ConfigurationError("running and obstacle rewards are required")

    @property
    def diffusion(self) -> np.ndarray:
        """The matrix sigma sigma^T."""
        return self.sigma @ self.sigma.T

    @property
    def finite_horizon(self) -> bool:
        return math.isfinite(self.horizon)

    def require(self, *names: str) -> None:
        """Raise ConfigurationError naming the first missing callable."""
        for name in names:
            if getattr(self, name) is None:
                raise ConfigurationError(
                    f"problem {self.label!r} is missing {name!r}, which this "
                    "operation requires"
                )


@dataclass(frozen=True)
class GeneratorImage:
    """Generator-corrected reward data at one point.

    ``m_value`` is the stop reward pushed through the problem operator,
    d/dt f + L f - r f, ``n_value`` is L g - r g (None without an end reward)
    and ``hm_value`` is h + m.  Optional partials of h + m are included when
    requested; ``fd_fallback`` records whether any of them came from the
    finite-difference fallback rather than supplied callables.
    """

    m_value: float
    n_value: Optional[float]
    hm_value: float
    hm_grad: Optional[np.ndarray] = None
    hm_t: Optional[float] = None
    fd_fallback: bool = False


def _points(spec: ProblemSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape == () and spec.dim == 1:
        x = x.reshape(1)
    if x.shape[-1] != spec.dim:
        raise ParameterError(
            f"points must have last axis of size {spec.dim}, got shape {x.shape}"
        )
    return x


def generator_apply(spec: ProblemSpec, x, time_part, grad, hess, value):
    """Apply d/dt + (1/2) tr(a D^2) + drift . D - r to supplied derivative data."""
    a = spec.diffusion
    x = _points(spec, x)
    mu = np.asarray(spec.drift(x), dtype=float)
    second = 0.5 * np.einsum("ij,...ij->...", a, np.asarray(hess, dtype=float))
    first = np.einsum("...i,...i->...", mu, np.asarray(grad, dtype=float))
    return np.asarray(time_part, dtype=float) + second + first - spec.kill_rate * np.asarray(value, dtype=float)


def obstacle_generator(spec: ProblemSpec, t, x):
    """m(t, x) = (d/dt + L - r) f at (t, x), vectorised."""
    spec.require("obstacle", "obstacle_t", "obstacle_grad", "obstacle_hess")
    x = _points(spec, x)
    return generator_apply(
        spec,
        x,
        spec.obstacle_t(t, x),
        spec.obstacle_grad(t, x),
        spec.obstacle_hess(t, x),
        spec.obstacle(t, x),
    )


def terminal_generator(spec: ProblemSpec, x):
    """n(x) = (L - r) g at x, vectorised.  Requires an end reward."""
    spec.require("terminal", "terminal_grad", "terminal_hess")
    x = _points(spec, x)
    return generator_apply(
        spec,
        x,
        0.0,
        spec.terminal_grad(x),
        spec.terminal_hess(x),
        spec.terminal(x),
    )


def hm_value(spec: ProblemSpec, t, x):
    """h + m at (t, x), vectorised over points."""
    x = _points(spec, x)
    return np.asarray(spec.running(t, x), dtype=float) + obstacle_generator(spec, t, x)


def hm_gradient(spec: ProblemSpec, t, x):
    """Spatial gradient of h + m.

    Returns ``(grad, used_fd)`` where grad has shape (..., d).  Uses the
    supplied callable when present, otherwise central differences of h + m
    with step FD_STEP_SCALE * (1 + |x_k|) per coordinate.
    """
    x = _points(spec, x)
    if spec.hm_grad is not None:
        return np.asarray(spec.hm_grad(t, x), dtype=float), False
    out = np.empty(x.shape, dtype=float)
    for k in range(spec.dim):
        step = FD_STEP_SCALE * (1.0 + np.abs(x[..., k]))
        xp = x.copy()
        xm = x.copy()
        xp[..., k] = x[..., k] + step
        xm[..., k] = x[..., k] - step
        out[..., k] = (hm_value(spec, t, xp) - hm_value(spec, t, xm)) / (2.0 * step)
    return out, True


def hm_time_derivative(spec: ProblemSpec, t, x):
    """Time derivative of h + m; returns ``(value, used_fd)``."""
    x = _points(spec, x)
    if spec.hm_t is not None:
        return np.asarray(spec.hm_t(t, x), dtype=float), False
    step = FD_STEP_SCALE * (1.0 + abs(float(t)))
    return (hm_value(spec, t + step, x) - hm_value(spec, t - step, x)) / (2.0 * step), True


def evaluate_m_n(spec: ProblemSpec, t: float, x, partials: bool = False) -> GeneratorImage:
    """Evaluate m, n and h + m at a single point (t, x).

    With ``partials=True`` the gradient and time derivative of h + m are
    included, falling back to finite differences (and flagging it) when the
    analytic callables were not supplied.
    """
    x = _points(spec, x)
    m = float(obstacle_generator(spec, t, x))
    h = float(np.asarray(spec.running(t, x), dtype=float))
    n = float(terminal_generator(spec, x)) if spec.terminal is not None else None
    grad = None
    dt_ = None
    used_fd = False
    if partials:
        grad, fd_g = hm_gradient(spec, t, x)
        dt_arr, fd_t = hm_time_derivative(spec, t, x)
        dt_ = float(dt_arr)
        used_fd = fd_g or fd_t
    return GeneratorImage(
        m_value=m,
        n_value=n,
        hm_value=h + m,
        hm_grad=grad,
        hm_t=dt_,
        fd_fallback=used_fd,
    )


def gamma_curve(
    spec: ProblemSpec,
    t: float,
    tail=(),
    bracket: tuple[float, float] = (-30.0, 30.0),
    n_scan: int = 256,
    xtol: Optional[float] = None,
) -> float:
    """Smallest first coordinate above which h + m is positive.

    Scans ``n_scan`` points of the bracket at fixed (t, tail), then bisects
    the single sign change.  Returns ``-inf`` when h + m > 0 already at the
    left end, ``+inf`` when it is nonpositive on the whole bracket.  More
    than one sign change on the scan grid means the sign convention this
    curve relies on fails, which raises ``DiagnosticError``.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ParameterError(f"bracket must be increasing, got {bracket}")
    tail = np.asarray(tail, dtype=float).reshape(-1)
    if tail.shape[0] != spec.dim - 1:
        raise ParameterError(
            f"tail must have {spec.dim - 1} coordinates, got {tail.shape[0]}"
        )
    xs = np.linspace(lo, hi, n_scan)
    pts = np.empty((n_scan, spec.dim), dtype=float)
    pts[:, 0] = xs
    pts[:, 1:] = tail
    vals = hm_value(spec, t, pts)
    if not np.all(np.isfinite(vals)):
        raise DiagnosticError("h + m is not finite on the scan grid")
    pos = vals > 0.0
    flips = int(np.count_nonzero(np.diff(pos)))
    if flips == 0:
        return -math.inf if pos[0] else math.inf
    if flips > 1 or pos[0]:
        raise DiagnosticError(
            "h + m changes sign more than once along the first coordinate; "
            "the level curve is not well defined under the assumed monotone "
            "sign pattern"
        )
    i = int(np.argmax(pos))  # first positive index; sign change in (i-1, i)
    a, b = xs[i - 1], xs[i]
    if xtol is None:
        xtol = (hi - lo) * 1e-9
    point = np.empty(spec.dim, dtype=float)
    point[1:] = tail
    while b - a > xtol:
        mid = 0.5 * (a + b)
        point[0] = mid
        if float(hm_value(spec, t, point)) > 0.0:
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


def _wrap_insert(fn, axis, value):
    if fn is None:
        return None

    def wrapped(*args):
        x = np.insert(np.asarray(args[-1], dtype=float), axis, value, axis=-1)
        return fn(*args[:-1], x)

    return wrapped


def _drop_component(fn, axis):
    if fn is None:
        return None

    def wrapped(*args):
        return np.delete(np.asarray(fn(*args), dtype=float), axis, axis=-1)

    return wrapped


def _drop_row_col(fn, axis):
    if fn is None:
        return None

    def wrapped(*args):
        out = np.asarray(fn(*args), dtype=float)
        out = np.delete(out, axis, axis=-1)
        return np.delete(out, axis, axis=-2)

    return wrapped


def freeze_axis(spec: ProblemSpec, axis: int, value: float) -> ProblemSpec:
    """Restrict a problem to the hyperplane x_axis = value.

    Only valid for inert coordinates: the frozen coordinate must carry no
    noise (zero sigma row and column) and no drift, so that X_axis stays at
    ``value`` forever.  The first coordinate, which parametrises the stopping
    boundary, cannot be frozen.
    """
    if axis == 0:
        raise ParameterError("the first coordinate cannot be frozen")
    if not 0 < axis < spec.dim:
        raise ParameterError(f"axis {axis} out of range for dim {spec.dim}")
    if np.abs(spec.sigma[axis, :]).max() > 0 or np.abs(spec.sigma[:, axis]).max() > 0:
        raise ParameterError(
            f"coordinate {axis} carries noise and cannot be frozen"
        )
    rng = np.random.default_rng(0)
    probes = rng.normal(scale=1.0 + abs(value), size=(8, spec.dim))
    probes[:, axis] = value
    mu = np.asarray(spec.drift(probes), dtype=float)
    if np.abs(mu[:, axis]).max() > 1e-12:
        raise ParameterError(f"coordinate {axis} has drift and cannot be frozen")

    def sub_drift(x):
        full = np.insert(np.asarray(x, dtype=float), axis, value, axis=-1)
        return np.delete(np.asarray(spec.drift(full), dtype=float), axis, axis=-1)

    def sub_grad_drift(x):
        full = np.insert(np.asarray(x, dtype=float), axis, value, axis=-1)
        out = np.asarray(spec.grad_drift(full), dtype=float)
        out = np.delete(out, axis, axis=-1)
        return np.delete(out, axis, axis=-2)

    sigma = np.delete(np.delete(spec.sigma, axis, axis=0), axis, axis=1)

    def wrap_t(fn):
        return _wrap_insert(fn, axis, value)

    return replace(
        spec,
        dim=spec.dim - 1,
        drift=sub_drift,
        grad_drift=sub_grad_drift,
        sigma=sigma,
        running=wrap_t(spec.running),
        running_t=wrap_t(spec.running_t),
        running_grad=_drop_component(wrap_t(spec.running_grad), axis),
        obstacle=wrap_t(spec.obstacle),
        obstacle_t=wrap_t(spec.obstacle_t),
        obstacle_grad=_drop_component(wrap_t(spec.obstacle_grad), axis),
        obstacle_hess=_drop_row_col(wrap_t(spec.obstacle_hess), axis),
        obstacle_tt=wrap_t(spec.obstacle_tt),
        terminal=wrap_t(spec.terminal),
        terminal_grad=_drop_component(wrap_t(spec.terminal_grad), axis),
        terminal_hess=_drop_row_col(wrap_t(spec.terminal_hess), axis),
        hm_t=wrap_t(spec.hm_t),
        hm_grad=_drop_component(wrap_t(spec.hm_grad), axis),
        label=f"{spec.label}|x{axis + 1}={value:g}",
    )


def truncate_horizon(spec: ProblemSpec, span: float) -> ProblemSpec:
    """Replace an infinite horizon by a forced stop at time ``span``.

    The end reward of the truncated problem is the stop reward at the cut,
    g := f(span, .), so the truncated value is a lower approximation whose
    error is controlled by the discount exp(-r * span).
    """
    if spec.finite_horizon:
        raise ParameterError("truncate_horizon applies to infinite-horizon problems")
    if not (span > 0 and math.isfinite(span)):
        raise ParameterError(f"span must be finite and positive, got {span}")
    f, ft, fg, fh = spec.obstacle, spec.obstacle_t, spec.obstacle_grad, spec.obstacle_hess

    terminal = (lambda x: f(span, x)) if f is not None else None
    terminal_grad = (lambda x: fg(span, x)) if fg is not None else None
    terminal_hess = (lambda x: fh(span, x)) if fh is not None else None
    return replace(
        spec,
        horizon=span,
        terminal=terminal,
        terminal_grad=terminal_grad,
        terminal_hess=terminal_hess,
        label=f"{spec.label}|T={span:g}",
    )
