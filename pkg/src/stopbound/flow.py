"""Euler simulation of diffusion paths, first-variation flows and hitting times.

Randomness is counter-based: path ``i`` of a run with seed ``s`` always draws
its Gaussian increments from an independent Philox stream keyed by ``(s, i)``.
Results therefore do not depend on evaluation order or on how many additional
paths are simulated alongside, and chunked or parallel execution reproduces
the sequential result bit for bit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BoundaryEvaluationError, ParameterError
from .problem import ProblemSpec

__all__ = [
    "PathBundle",
    "HittingResult",
    "DiagnosticsReport",
    "path_generator",
    "draw_increments",
    "step_grid",
    "simulate_paths",
    "derivative_flow",
    "hitting_time",
    "diagnostics",
]

# Target footprint of one chunk of Gaussian increments, in float64 count.
_CHUNK_BUDGET = 8_000_000


def path_generator(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for one path."""
    if seed < 0 or seed >= 2**64:
        raise ParameterError("seed must fit in an unsigned 64-bit integer")
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) + int(index)))


def draw_increments(seed: int, lo: int, hi: int, n_steps: int, dim: int) -> np.ndarray:
    """Standard normal increments for paths lo..hi-1, shape (hi-lo, n_steps, dim)."""
    out = np.empty((hi - lo, n_steps, dim), dtype=float)
    for i in range(lo, hi):
        out[i - lo] = path_generator(seed, i).standard_normal((n_steps, dim))
    return out


def step_grid(dt: float, span: float) -> np.ndarray:
    """Time offsets 0 = s_0 < ... < s_n = span with uniform step dt.

    When span is not a multiple of dt the final step is shortened so the grid
    lands exactly on span.
    """
    if not (dt > 0):
        raise ParameterError(f"dt must be positive, got {dt}")
    if not (span > 0 and math.isfinite(span)):
        raise ParameterError(f"span must be finite and positive, got {span}")
    n = max(1, int(math.ceil(span / dt - 1e-12)))
    times = np.minimum(np.arange(n + 1) * dt, span)
    times[-1] = span
    return times


def chunk_ranges(n: int, size: int):
    for lo in range(0, n, size):
        yield lo, min(lo + size, n)


def default_chunk(n_paths: int, n_steps: int, dim: int) -> int:
    per_path = max(1, n_steps * dim)
    return max(1, min(n_paths, _CHUNK_BUDGET // per_path))


@dataclass
class PathBundle:
    """Simulated paths plus, optionally, their first-variation flows.

    ``states[i, j]`` is path i at time offset ``times[j]`` from ``t0``.
    ``flow[i, j]`` is the d x d sensitivity matrix whose entry (r, k) is the
    derivative of state component r at step j with respect to the k-th
    starting coordinate.  ``brownian`` holds the driving Brownian path and
    ``weights``, when present, the strictly positive cumulative change-of-
    measure weights per step.  Paths that reached a non-finite state are
    flagged in ``invalid`` and excluded from downstream statistics.
    """

    t0: float
    x0: np.ndarray
    dt: float
    n_steps: int
    n_paths: int
    times: np.ndarray
    states: np.ndarray
    brownian: np.ndarray
    rng_seed: int
    flow: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    invalid: np.ndarray = field(default=None)
    label: str = ""

    @property
    def span(self) -> float:
        return float(self.times[-1])

    def times_abs(self) -> np.ndarray:
        return self.t0 + self.times

    def to_npz(self, path) -> None:
        data = {
            "t0": self.t0,
            "x0": self.x0,
            "dt": self.dt,
            "times": self.times,
            "states": self.states,
            "brownian": self.brownian,
            "rng_seed": self.rng_seed,
            "invalid": self.invalid,
        }
        if self.flow is not None:
            data["flow"] = self.flow
        if self.weights is not None:
            data["weights"] = self.weights
        np.savez_compressed(path, **data)

    def to_csv(self, path) -> None:
        """Flat trace: one row per (path, step) with states and flow entries."""
        d = self.states.shape[-1]
        with open(path, "w") as fh:
            cols = ["path", "step", "time"]
            cols += [f"x{r + 1}" for r in range(d)]
            if self.flow is not None:
                cols += [f"dx{r + 1}_dx0{k + 1}" for r in range(d) for k in range(d)]
            if self.weights is not None:
                cols.append("weight")
            fh.write(",".join(cols) + "\n")
            for i in range(self.n_paths):
                for j in range(self.n_steps + 1):
                    row = [str(i), str(j), format(self.times[j], ".17g")]
                    row += [format(v, ".17g") for v in self.states[i, j]]
                    if self.flow is not None:
                        row += [format(v, ".17g") for v in self.flow[i, j].ravel()]
                    if self.weights is not None:
                        row.append(format(self.weights[i, j], ".17g"))
                    fh.write(",".join(row) + "\n")


def simulate_paths(
    spec: ProblemSpec,
    t0: float,
    x0,
    n_paths: int,
    dt: float,
    *,
    span: Optional[float] = None,
    seed: int = 0,
    chunk_size: Optional[int] = None,
) -> PathBundle:
    """Euler scheme for the problem diffusion started at (t0, x0).

    For finite-horizon problems the span defaults to horizon - t0.  Infinite
    horizons need an explicit truncation span.  Non-finite paths are flagged
    invalid with a counted warning rather than raising.
    """
    if n_paths < 1:
        raise ParameterError(f"n_paths must be >= 1, got {n_paths}")
    x0 = np.asarray(x0, dtype=float).reshape(spec.dim)
    if span is None:
        if not spec.finite_horizon:
            raise ParameterError("infinite horizon: an explicit span is required")
        span = spec.horizon - t0
    if not (span > 0):
        raise ParameterError(f"start time {t0} leaves no room before the horizon")
    times = step_grid(dt, span)
    n_steps = len(times) - 1
    d = spec.dim
    states = np.empty((n_paths, n_steps + 1, d), dtype=float)
    brownian = np.empty((n_paths, n_steps + 1, d), dtype=float)
    if chunk_size is None:
        chunk_size = default_chunk(n_paths, n_steps, d)
    dts = np.diff(times)
    sqdts = np.sqrt(dts)
    with np.errstate(all="ignore"):
        for lo, hi in chunk_ranges(n_paths, chunk_size):
            xi = draw_increments(seed, lo, hi, n_steps, d)
            x = np.broadcast_to(x0, (hi - lo, d)).copy()
            b = np.zeros((hi - lo, d))
            states[lo:hi, 0] = x
            brownian[lo:hi, 0] = b
            for j in range(n_steps):
                db = xi[:, j] * sqdts[j]
                x = x + np.asarray(spec.drift(x), dtype=float) * dts[j] + db @ spec.sigma.T
                b = b + db
                states[lo:hi, j + 1] = x
                brownian[lo:hi, j + 1] = b
    invalid = ~np.isfinite(states).all(axis=(1, 2))
    n_bad = int(invalid.sum())
    if n_bad:
        warnings.warn(
            f"{n_bad} of {n_paths} paths reached non-finite states and are "
            "flagged invalid",
            RuntimeWarning,
        )
    return PathBundle(
        t0=float(t0),
        x0=x0,
        dt=float(dt),
        n_steps=n_steps,
        n_paths=n_paths,
        times=times,
        states=states,
        brownian=brownian,
        rng_seed=int(seed),
        invalid=invalid,
        label=spec.label,
    )


def derivative_flow(spec: ProblemSpec, bundle: PathBundle) -> PathBundle:
    """Fill ``bundle.flow`` with the forward-Euler first-variation flow.

    The flow solves the linearised dynamics dF = grad_drift(X) F dt with
    F(0) = I, stepped on the same grid as the states.
    """
    n, n1, d = bundle.states.shape
    flow = np.empty((n, n1, d, d), dtype=float)
    flow[:, 0] = np.eye(d)
    dts = np.diff(bundle.times)
    for j in range(n1 - 1):
        jac = np.asarray(spec.grad_drift(bundle.states[:, j]), dtype=float)
        flow[:, j + 1] = flow[:, j] + dts[j] * (jac @ flow[:, j])
    bundle.flow = flow
    return bundle


@dataclass
class HittingResult:
    """First entry of the stopped region, per path.

    ``tau_index[i]`` is the first step index at which path i is on the stop
    side of the boundary, or ``n_steps`` when no crossing happens strictly
    before the final step; in that case ``hit_terminal[i]`` is True and the
    path is treated as running to the horizon.
    """

    tau_index: np.ndarray
    tau_offset: np.ndarray
    hit_terminal: np.ndarray
    state_at_tau: np.ndarray
    boundary_label: str = ""


def boundary_values_at(boundary, t_abs, tails) -> np.ndarray:
    vals = np.asarray(boundary.evaluate(t_abs, tails), dtype=float)
    if np.isnan(vals).any():
        i = int(np.argmax(np.isnan(vals)))
        t_bad = t_abs if np.isscalar(t_abs) else np.asarray(t_abs).ravel()[min(i, np.asarray(t_abs).size - 1)]
        tail_bad = np.asarray(tails)[i] if np.asarray(tails).size else ()
        raise BoundaryEvaluationError(
            f"boundary evaluated to NaN at t={float(t_bad):.6g}, tail={tail_bad}"
        )
    return vals


def hitting_time(bundle: PathBundle, boundary) -> HittingResult:
    """First step at which each path sits on the stop side of ``boundary``.

    The crossing test runs over steps 0..n_steps-1 only: reaching the final
    step without a prior crossing counts as running to the horizon, even if
    the final state happens to lie past the boundary.
    """
    states = bundle.states
    n, n1, d = states.shape
    n_steps = n1 - 1
    orientation = getattr(boundary, "orientation", "stop-below")
    below = orientation == "stop-below"
    t_abs = bundle.times_abs()
    if d == 1:
        b = boundary_values_at(boundary, t_abs[:-1], np.empty((n_steps, 0)))
        b = np.broadcast_to(b, (n_steps,))
        x1 = states[:, :-1, 0]
        crossed = x1 <= b[None, :] if below else x1 >= b[None, :]
    else:
        crossed = np.empty((n, n_steps), dtype=bool)
        for j in range(n_steps):
            bj = boundary_values_at(boundary, float(t_abs[j]), states[:, j, 1:])
            bj = np.broadcast_to(bj, (n,))
            crossed[:, j] = states[:, j, 0] <= bj if below else states[:, j, 0] >= bj
    any_cross = crossed.any(axis=1)
    first = np.argmax(crossed, axis=1)
    tau_index = np.where(any_cross, first, n_steps)
    state_at_tau = states[np.arange(n), tau_index]
    return HittingResult(
        tau_index=tau_index,
        tau_offset=bundle.times[tau_index],
        hit_terminal=~any_cross,
        state_at_tau=state_at_tau,
        boundary_label=getattr(boundary, "label", ""),
    )


@dataclass
class DiagnosticsReport:
    """Unconditional sanity checks on a simulated bundle.

    The flow check asserts the pathwise bound

        sup_j ||flow column k at step j||^2 <= 2 exp(span * sum_j ||J(X_j)||_F^2 dt_j)

    which holds for the exact flow regardless of stopping data; violations
    point at a discretisation or coding bug.  The hitting check asserts the
    first-moment bound P(tau = span) <= E[tau] / span within three standard
    errors.
    """

    n_paths: int
    n_invalid: int
    flow_checked: bool = False
    flow_violations: list = field(default_factory=list)
    flow_max_ratio: float = 0.0
    hitting_checked: bool = False
    hitting_margin: float = 0.0
    hitting_se: float = 0.0
    hitting_violated: bool = False

    @property
    def ok(self) -> bool:
        return not self.flow_violations and not self.hitting_violated


def diagnostics(
    spec: ProblemSpec,
    bundle: PathBundle,
    hitting: Optional[HittingResult] = None,
) -> DiagnosticsReport:
    """Run the pathwise flow bound and, given hitting data, the tau bound."""
    valid = ~bundle.invalid
    report = DiagnosticsReport(n_paths=bundle.n_paths, n_invalid=int(bundle.invalid.sum()))
    if bundle.flow is not None:
        n, n1, d, _ = bundle.flow.shape
        dts = np.diff(bundle.times)
        span = bundle.span
        integral = np.zeros(n)
        supsq = np.ones((n, d))
        for j in range(n1 - 1):
            jac = np.asarray(spec.grad_drift(bundle.states[:, j]), dtype=float)
            integral += (jac * jac).sum(axis=(1, 2)) * dts[j]
            colsq = (bundle.flow[:, j + 1] ** 2).sum(axis=1)
            supsq = np.maximum(supsq, colsq)
        bound = 2.0 * np.exp(span * integral)
        ratio = supsq / bound[:, None]
        ratio[~valid] = 0.0
        report.flow_checked = True
        report.flow_max_ratio = float(ratio.max()) if ratio.size else 0.0
        bad = np.argwhere(ratio > 1.0 + 1e-9)
        report.flow_violations = [
            (int(i), int(k), float(ratio[i, k])) for i, k in bad
        ]
    if hitting is not None:
        span = bundle.span
        diff = hitting.hit_terminal[valid].astype(float) - hitting.tau_offset[valid] / span
        n_ok = diff.size
        mean = float(diff.mean()) if n_ok else 0.0
        se = float(diff.std(ddof=1) / math.sqrt(n_ok)) if n_ok > 1 else 0.0
        report.hitting_checked = True
        report.hitting_margin = mean
        report.hitting_se = se
        report.hitting_violated = mean > 3.0 * se + 1e-12
    return report
