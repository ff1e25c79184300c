"""Free-boundary extraction, slope estimation and Lipschitz summaries.

The stopping region is assumed to be the region on one side of a graph
x1 = b(t, x2, ..., xd) (orientation "stop-below" means stopping at x1 <= b).
``extract_boundary`` reads b off a solved value surface as the level set
w = delta of the excess w = v - f; delta = 0 recovers the boundary itself,
small positive delta gives an implementable approximation that always lies
on the continuation side.  Slopes of the delta-level boundary follow from
the implicit function theorem: a ratio of derivatives of w, estimated either
from the grid solve (one dimension) or by Monte Carlo representations
(higher dimensions).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    BoundaryEvaluationError,
    DegenerateRatioError,
    ParameterError,
)
from .pde import ValueSurface, fd_derivatives
from .represent import ratio_with_se, sample_functionals

__all__ = [
    "BoundarySurface",
    "SlopeEstimate",
    "LipschitzReport",
    "ConvergenceReport",
    "extract_boundary",
    "freeze_time",
    "boundary_slopes",
    "lipschitz_estimate",
    "convergence_check",
]


@dataclass
class BoundarySurface:
    """A stopping boundary sampled on a (t, x2, ..., xd) grid or given in closed form.

    ``values`` may contain +inf (whole column stopping) and -inf (whole column
    continuation); evaluation interpolates linearly between finite cells and
    snaps to the nearest cell when a neighbouring cell is not finite.
    Queries outside the sampled ranges are clamped to the nearest edge.
    """

    t: np.ndarray
    tail_axes: tuple
    values: Optional[np.ndarray]
    orientation: str
    provenance: str
    delta: Optional[float] = None
    label: str = ""
    fn: Optional[Callable] = None
    dx1: float = 0.0
    n_multicross: int = 0

    def __post_init__(self):
        self.t = np.atleast_1d(np.asarray(self.t, dtype=float))
        self.tail_axes = tuple(np.asarray(a, dtype=float) for a in self.tail_axes)
        if self.values is not None:
            self.values = np.asarray(self.values, dtype=float)
            want = (self.t.size,) + tuple(a.size for a in self.tail_axes)
            if self.values.shape != want:
                raise ParameterError(
                    f"boundary values have shape {self.values.shape}, expected {want}"
                )
        elif self.fn is None:
            raise ParameterError("a boundary needs sampled values or a callable")
        if self.orientation not in ("stop-below", "stop-above"):
            raise ParameterError(f"unknown orientation {self.orientation!r}")

    @classmethod
    def constant(cls, value: float, orientation: str, label: str = "") -> "BoundarySurface":
        v = float(value)
        return cls(
            t=np.array([0.0]),
            tail_axes=(),
            values=None,
            orientation=orientation,
            provenance="analytic",
            label=label or f"const({v:g})",
            fn=lambda t, tails: np.full(np.shape(t) or (tails.shape[0],), v),
        )

    @classmethod
    def from_callable(
        cls, fn: Callable, orientation: str, label: str = "analytic"
    ) -> "BoundarySurface":
        return cls(
            t=np.array([0.0]),
            tail_axes=(),
            values=None,
            orientation=orientation,
            provenance="analytic",
            label=label,
            fn=fn,
        )

    @property
    def n_tails(self) -> int:
        return len(self.tail_axes)

    def evaluate(self, t, tails) -> np.ndarray:
        """Boundary level at times ``t`` (scalar or (m,)) and tails (m, d-1)."""
        tails = np.asarray(tails, dtype=float)
        if tails.ndim != 2:
            raise ParameterError("tails must be a 2-d array (m, n_tails)")
        m = tails.shape[0]
        t_arr = np.broadcast_to(np.asarray(t, dtype=float), (m,))
        if self.fn is not None:
            out = np.asarray(self.fn(t_arr, tails), dtype=float)
            return np.broadcast_to(out, (m,)).copy()
        if tails.shape[1] != self.n_tails:
            raise ParameterError(
                f"expected {self.n_tails} tail coordinates, got {tails.shape[1]}"
            )

        axes = (self.t,) + self.tail_axes
        queries = (t_arr,) + tuple(tails[:, j] for j in range(self.n_tails))
        idxs, fracs = [], []
        for ax, q in zip(axes, queries):
            if ax.size == 1:
                idxs.append(np.zeros(m, dtype=int))
                fracs.append(np.zeros(m))
                continue
            step = ax[1] - ax[0]
            pos = np.clip((q - ax[0]) / step, 0.0, ax.size - 1.0)
            ik = np.clip(np.floor(pos).astype(int), 0, ax.size - 2)
            idxs.append(ik)
            fracs.append(pos - ik)

        n_axes = len(axes)
        corners = []
        weights = []
        for corner in range(2**n_axes):
            weight = np.ones(m)
            sel = []
            for k, ax in enumerate(axes):
                bk = (corner >> k) & 1
                weight = weight * (fracs[k] if bk else (1.0 - fracs[k]))
                sel.append(np.minimum(idxs[k] + bk, ax.size - 1))
            corners.append(self.values[tuple(sel)])
            weights.append(weight)
        corners = np.stack(corners)
        weights = np.stack(weights)
        finite = np.isfinite(corners).all(axis=0)
        safe = np.where(np.isfinite(corners), corners, 0.0)
        lerp = (weights * safe).sum(axis=0)
        near_sel = tuple(
            np.minimum(idxs[k] + (fracs[k] > 0.5), axes[k].size - 1)
            for k in range(n_axes)
        )
        nearest = self.values[near_sel]
        return np.where(finite, lerp, nearest)

    def value_at(self, t: float, tail=()) -> float:
        tails = np.asarray(tail, dtype=float).reshape(1, -1)
        return float(self.evaluate(float(t), tails)[0])

    def rows(self):
        """Yield (t, *tails, b) tuples over all sampled cells."""
        if self.values is None:
            raise ParameterError("a callable boundary has no sampled cells")
        tail_grids = np.meshgrid(*self.tail_axes, indexing="ij") if self.tail_axes else []
        for i, tv in enumerate(self.t):
            slab = np.atleast_1d(self.values[i])
            for flat in range(slab.size):
                idx = np.unravel_index(flat, slab.shape)
                tails = tuple(float(g[idx]) for g in tail_grids)
                yield (float(tv),) + tails + (float(slab[idx]),)


def freeze_time(bsurf: BoundarySurface, t_index: int = 0) -> BoundarySurface:
    """A time-independent copy holding one time slice (stationary boundary)."""
    if bsurf.values is None:
        raise ParameterError("cannot freeze a callable boundary")
    return BoundarySurface(
        t=bsurf.t[t_index : t_index + 1],
        tail_axes=bsurf.tail_axes,
        values=bsurf.values[t_index : t_index + 1].copy(),
        orientation=bsurf.orientation,
        provenance=bsurf.provenance,
        delta=bsurf.delta,
        label=f"{bsurf.label}|stationary",
        dx1=bsurf.dx1,
        n_multicross=bsurf.n_multicross,
    )


def _extract_columns(cols: np.ndarray, xs: np.ndarray, level: float, interp: bool):
    """Crossing scan along the last axis; stopping side at small index."""
    n1 = xs.size
    lead_shape = cols.shape[:-1]
    flat = cols.reshape(-1, n1)
    below = flat <= level
    all_below = below.all(axis=1)

    trans = below[:, :-1] & ~below[:, 1:]
    top_hit = below[:, -1] & ~all_below
    counts = trans.sum(axis=1) + top_hit

    b = np.full(flat.shape[0], -np.inf)
    b[all_below] = np.inf

    has_trans = trans.any(axis=1)
    i_last = (n1 - 2) - np.argmax(trans[:, ::-1], axis=1)
    pick = has_trans & ~top_hit
    if pick.any():
        rows = np.nonzero(pick)[0]
        i = i_last[rows]
        lo = flat[rows, i]
        hi = flat[rows, i + 1]
        if interp:
            frac = (level - lo) / (hi - lo)
            b[rows] = xs[i] + frac * (xs[i + 1] - xs[i])
        else:
            b[rows] = xs[i]
    b[top_hit] = xs[-1]
    n_multi = int((counts > 1).sum())
    return b.reshape(lead_shape), n_multi


def extract_boundary(
    surface: ValueSurface, delta: float, *, tol: Optional[float] = None
) -> BoundarySurface:
    """Level-set boundary b_delta of the excess w on the surface's grid.

    Per (t, tail)-column: the largest x1 where linear interpolation of w
    crosses ``delta`` (a warning counts columns with several crossings, which
    signal discretisation error).  delta = 0 returns the largest node
    classified as stopping, snapped to the grid.  Columns entirely on one
    side record -inf or +inf rather than erroring.

    The x1 face node on the continuation side carries the solver's
    artificial clamp to the stop reward, not problem data, so the scan
    excludes it; crossings within one grid step of that face are invisible
    (the solver's face warning covers this case).

    When the end reward equals the stop reward the terminal slab has w = 0
    identically, which would classify every terminal column as stopping and
    make near-terminal interpolation swallow whole paths during sampling.
    Hitting the horizon is the terminal case, not a crossing, so such a
    degenerate slab takes the left limit (the penultimate slice) instead.
    """
    if delta < 0:
        raise ParameterError(f"delta must be nonnegative, got {delta}")
    grid = surface.grid
    xs = grid.axes[0]
    w = surface.w
    orientation = surface.spec.boundary_orientation
    if delta == 0:
        level = tol if tol is not None else 1e-9 * (1.0 + surface.f_scale)
        interp = False
    else:
        level = delta
        interp = True

    if grid.dim == 1:
        cols = w
        tail_axes = ()
    else:
        cols = np.moveaxis(w, 1, -1)
        tail_axes = (grid.axes[1],)

    if orientation == "stop-below":
        b, n_multi = _extract_columns(cols[..., :-1], xs[:-1], level, interp)
    else:
        flipped = cols[..., :0:-1]
        b_neg, n_multi = _extract_columns(flipped, -xs[:0:-1], level, interp)
        b = -b_neg

    if n_multi:
        warnings.warn(
            f"{n_multi} boundary columns crossed the level {level:g} more than "
            "once; the outermost crossing was kept (refine the grid to resolve)",
            RuntimeWarning,
        )
    slab_tol = 1e-9 * (1.0 + surface.f_scale)
    if grid.t.size >= 2 and float(np.abs(w[-1]).max()) <= slab_tol:
        b[-1] = b[-2]
    provenance = "pde-exact" if delta == 0 else "delta-level"
    return BoundarySurface(
        t=grid.t.copy(),
        tail_axes=tail_axes,
        values=b,
        orientation=orientation,
        provenance=provenance,
        delta=float(delta),
        label=f"{surface.spec.label}|b(delta={delta:g})",
        dx1=grid.dx[0],
        n_multicross=n_multi,
    )


@dataclass
class SlopeEstimate:
    """Boundary slopes at one cell, with standard errors where sampled."""

    t: float
    tail: tuple
    anchor: float
    method: str
    space_slopes: dict
    time_interval: Optional[tuple] = None
    time_interval_se: tuple = (0.0, 0.0)
    denominator_mean: Optional[float] = None
    denominator_se: Optional[float] = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "tail": list(self.tail),
            "anchor": self.anchor,
            "method": self.method,
            "space_slopes": {
                str(k): {"slope": s, "std_error": se}
                for k, (s, se) in sorted(self.space_slopes.items())
            },
            "time_interval": None if self.time_interval is None else list(self.time_interval),
            "time_interval_se": list(self.time_interval_se),
            "denominator_mean": self.denominator_mean,
            "denominator_se": self.denominator_se,
            "notes": list(self.notes),
        }


def _fd_cell_slopes(bsurf: BoundarySurface, t: float, tail: tuple) -> SlopeEstimate:
    if bsurf.values is None:
        raise ParameterError("finite differences need a sampled boundary")
    axes = (bsurf.t,) + bsurf.tail_axes
    coords = (float(t),) + tuple(float(c) for c in tail)
    idx = []
    for ax, c in zip(axes, coords):
        i = int(round((c - ax[0]) / (ax[1] - ax[0]))) if ax.size > 1 else 0
        if not 0 <= i < ax.size:
            raise ParameterError(f"cell coordinate {c} outside the boundary grid")
        idx.append(i)
    idx = tuple(idx)

    def centered(axis_no: int):
        ax = axes[axis_no]
        if ax.size == 1:
            return 0.0
        i = idx[axis_no]
        lo = max(i - 1, 0)
        hi = min(i + 1, ax.size - 1)
        sel_lo = idx[:axis_no] + (lo,) + idx[axis_no + 1 :]
        sel_hi = idx[:axis_no] + (hi,) + idx[axis_no + 1 :]
        b_lo = bsurf.values[sel_lo]
        b_hi = bsurf.values[sel_hi]
        if not (math.isfinite(b_lo) and math.isfinite(b_hi)):
            raise BoundaryEvaluationError(
                f"finite-difference slope at cell {idx} needs finite neighbours "
                f"along axis {axis_no}; got {b_lo} and {b_hi}"
            )
        return float((b_hi - b_lo) / (ax[hi] - ax[lo]))

    anchor = float(bsurf.values[idx])
    if not math.isfinite(anchor):
        raise BoundaryEvaluationError(f"boundary cell {idx} is not finite")
    slope_t = centered(0)
    space = {k + 1: (centered(k + 1), 0.0) for k in range(bsurf.n_tails)}
    return SlopeEstimate(
        t=float(t),
        tail=tuple(float(c) for c in tail),
        anchor=anchor,
        method="finite-difference",
        space_slopes=space,
        time_interval=(slope_t, slope_t),
    )


def boundary_slopes(
    spec,
    bsurf: BoundarySurface,
    cell,
    *,
    method: str = "implicit-ratio",
    surface: Optional[ValueSurface] = None,
    stop_boundary: Optional[BoundarySurface] = None,
    axes=None,
    n_paths: int = 20_000,
    dt: float = 1e-3,
    seed: int = 0,
    span: Optional[float] = None,
    chunk_size: Optional[int] = None,
) -> SlopeEstimate:
    """Slopes of the delta-level boundary at ``cell`` = (t, x2, ..., xd).

    Two methods: "finite-difference" differentiates the sampled boundary
    across neighbouring cells; "implicit-ratio" differentiates the level-set
    identity w(t, b, tail) = delta instead, giving d b / d x_k as a ratio of
    derivatives of w.  In one dimension the ratio uses grid derivatives of
    the solved surface; in higher dimensions both entries of each ratio are
    Monte Carlo representations sampled on common paths from the cell (probed
    at the delta-level, which lies strictly inside the continuation region,
    while the paths stop at ``stop_boundary``).  The time slope is reported
    as an interval because the time derivative of w is only sandwiched.
    """
    t = float(cell[0])
    tail = tuple(float(v) for v in cell[1:])
    if method == "finite-difference":
        return _fd_cell_slopes(bsurf, t, tail)
    if method != "implicit-ratio":
        raise ParameterError(f"unknown slope method {method!r}")
    if bsurf.delta is None or bsurf.delta <= 0:
        raise ParameterError(
            "the implicit-ratio method probes the delta-level boundary and "
            "needs delta > 0 (the cell must lie in the continuation region)"
        )
    anchor = bsurf.value_at(t, tail)
    if not math.isfinite(anchor):
        raise BoundaryEvaluationError(
            f"boundary is not finite at t={t:g}, tail={tail}"
        )

    if spec.dim == 1:
        if surface is None:
            raise ParameterError(
                "one-dimensional implicit-ratio slopes need the solved surface"
            )
        wt, grad = fd_derivatives(surface, t, [anchor], field_name="w")
        wx = float(grad[0])
        scale = abs(wt) + abs(wx)
        if abs(wx) <= 1e-12 * max(1.0, scale):
            raise DegenerateRatioError(
                f"level-set denominator d w / d x1 = {wx:.3e} is numerically zero"
            )
        slope = -wt / wx
        return SlopeEstimate(
            t=t,
            tail=(),
            anchor=anchor,
            method="implicit-ratio",
            space_slopes={},
            time_interval=(slope, slope),
            denominator_mean=wx,
        )

    if stop_boundary is None:
        raise ParameterError(
            "implicit-ratio slopes stop paths at the exact boundary; pass "
            "stop_boundary (typically the delta=0 extraction)"
        )
    if axes is None:
        axes = list(range(1, spec.dim))
    axes = [int(k) for k in axes]
    for k in axes:
        if not 1 <= k < spec.dim:
            raise ParameterError(f"slope axis {k} out of range")

    requests = [("wcirc", 0)] + [("wcirc", k) for k in axes]
    want_time = spec.finite_horizon
    if want_time:
        requests += ["wt_lower", "wt_upper"]
    x0 = np.concatenate([[anchor], np.asarray(tail, dtype=float)])
    sample = sample_functionals(
        spec,
        t,
        x0,
        stop_boundary,
        n_paths,
        dt,
        requests,
        seed=seed,
        span=span,
        chunk_size=chunk_size,
    )
    den = sample.values("wcirc0")
    den_est = sample.estimate("wcirc0")
    if den_est.mean < 3.0 * den_est.std_error:
        raise DegenerateRatioError(
            "the level-set denominator (excess gradient along x1) is not "
            f"significantly positive: mean {den_est.mean:.3e}, "
            f"std error {den_est.std_error:.3e}"
        )
    space = {}
    for k in axes:
        num = sample.values(f"wcirc{k}")
        ratio, se = ratio_with_se(num, den)
        space[k] = (-ratio, se)
    time_interval = None
    time_se = (0.0, 0.0)
    notes = []
    if want_time:
        up, up_se = ratio_with_se(sample.values("wt_upper"), den)
        lo, lo_se = ratio_with_se(sample.values("wt_lower"), den)
        time_interval = (-up, -lo)
        time_se = (up_se, lo_se)
    else:
        notes.append("time slope skipped: stationary problem (no horizon)")
    if sample.fd_fallback:
        notes.append("excess-gradient partials fell back to finite differences")
    return SlopeEstimate(
        t=t,
        tail=tuple(float(c) for c in tail),
        anchor=anchor,
        method="implicit-ratio",
        space_slopes=space,
        time_interval=time_interval,
        time_interval_se=time_se,
        denominator_mean=den_est.mean,
        denominator_se=den_est.std_error,
        notes=notes,
    )


@dataclass
class LipschitzReport:
    """Largest absolute finite-difference slopes of a boundary over a window."""

    window: dict
    l_time: float
    l_space: dict
    steps: dict
    n_cells: int

    def to_dict(self) -> dict:
        return {
            "window": {k: list(v) for k, v in self.window.items()},
            "L_t": self.l_time,
            "L_space": {str(k): v for k, v in sorted(self.l_space.items())},
            "steps": dict(self.steps),
            "n_cells": self.n_cells,
        }


def lipschitz_estimate(
    bsurf: BoundarySurface, window: Optional[dict] = None, *, collar: float = 0.05
) -> LipschitzReport:
    """Max |slope| of the sampled boundary per axis over a sub-rectangle.

    The default window spans the full tail axes but stops short of the last
    ``collar`` fraction of the time axis, where the boundary need not stay
    Lipschitz.  Infinite cells inside the window are an error (listed).
    """
    if bsurf.values is None:
        raise ParameterError("Lipschitz estimates need a sampled boundary")
    axes = {"t": bsurf.t}
    for j, ax in enumerate(bsurf.tail_axes):
        axes[f"x{j + 2}"] = ax
    window = dict(window or {})
    if "t" not in window and bsurf.t.size > 1:
        t0, t1 = bsurf.t[0], bsurf.t[-1]
        window["t"] = (t0, t1 - collar * (t1 - t0))
    sels = []
    used = {}
    for name, ax in axes.items():
        lo, hi = window.get(name, (ax[0], ax[-1]))
        mask = (ax >= lo - 1e-12) & (ax <= hi + 1e-12)
        if mask.sum() < (2 if ax.size > 1 else 1):
            raise ParameterError(f"window along {name} keeps fewer than 2 nodes")
        sels.append(np.nonzero(mask)[0])
        used[name] = (float(ax[mask][0]), float(ax[mask][-1]))

    sub = bsurf.values[np.ix_(*sels)]
    if not np.isfinite(sub).all():
        bad = np.argwhere(~np.isfinite(sub))
        cells = []
        for row in bad[:10]:
            coords = tuple(
                float(axes[name][sels[i][row[i]]]) for i, name in enumerate(axes)
            )
            cells.append(coords)
        more = "" if bad.shape[0] <= 10 else f" (+{bad.shape[0] - 10} more)"
        raise BoundaryEvaluationError(
            f"window contains non-finite boundary cells at {cells}{more}"
        )

    steps = {}
    l_time = 0.0
    l_space = {}
    for axis_no, name in enumerate(axes):
        ax = axes[name]
        if ax.size == 1 or sub.shape[axis_no] < 2:
            slope = 0.0
            step = 0.0
        else:
            step = float(ax[1] - ax[0])
            slope = float(np.abs(np.diff(sub, axis=axis_no)).max() / step)
        steps[name] = step
        if axis_no == 0:
            l_time = slope
        else:
            l_space[axis_no + 1] = slope
    return LipschitzReport(
        window=used, l_time=l_time, l_space=l_space, steps=steps, n_cells=int(sub.size)
    )


@dataclass
class ConvergenceReport:
    """Monotonicity and gap summary for a family of level boundaries."""

    deltas: list
    base_delta: float
    tolerance: float
    monotone_ok: bool
    worst_cell: Optional[tuple]
    worst_violation: float
    sup_gaps: dict
    n_mismatched: int

    @property
    def ok(self) -> bool:
        return self.monotone_ok

    def to_dict(self) -> dict:
        return {
            "deltas": list(self.deltas),
            "base_delta": self.base_delta,
            "tolerance": self.tolerance,
            "monotone_ok": self.monotone_ok,
            "worst_cell": None if self.worst_cell is None else list(self.worst_cell),
            "worst_violation": self.worst_violation,
            "sup_gaps": {f"{k:g}": v for k, v in self.sup_gaps.items()},
            "n_mismatched": self.n_mismatched,
        }


def convergence_check(family) -> ConvergenceReport:
    """Check that level boundaries decrease toward the exact boundary.

    ``family`` is ordered by strictly decreasing delta; a trailing delta = 0
    member (exact boundary) serves as the gap baseline, otherwise the
    smallest-delta member does.  Decrease is required cellwise within half an
    x1 grid step (level sets of a monotone profile cannot violate this by
    more than interpolation error).  For stop-above orientation the
    comparison flips, since the level boundaries approach from below.
    """
    family = list(family)
    if not family:
        raise ParameterError("empty boundary family")
    for b in family:
        if b.values is None:
            raise ParameterError("convergence checks need sampled boundaries")
        if b.values.shape != family[0].values.shape:
            raise ParameterError("boundary family must share one grid")
        if b.orientation != family[0].orientation:
            raise ParameterError("boundary family must share one orientation")
    deltas = [float(b.delta) for b in family]
    if any(d2 >= d1 for d1, d2 in zip(deltas, deltas[1:])):
        raise ParameterError(f"deltas must be strictly decreasing, got {deltas}")

    sign = 1.0 if family[0].orientation == "stop-below" else -1.0
    tol = max(b.dx1 for b in family) / 2.0
    monotone_ok = True
    worst_cell = None
    worst = 0.0
    for b_hi, b_lo in zip(family, family[1:]):
        hi = sign * b_hi.values
        lo = sign * b_lo.values
        with np.errstate(invalid="ignore"):
            viol = lo - hi
        viol = np.where(np.isnan(viol), 0.0, viol)
        w = float(viol.max())
        if w > tol:
            monotone_ok = False
            if w > worst:
                worst = w
                flat = int(np.argmax(viol))
                idx = np.unravel_index(flat, viol.shape)
                coords = (float(b_hi.t[idx[0]]),) + tuple(
                    float(ax[i]) for ax, i in zip(b_hi.tail_axes, idx[1:])
                )
                worst_cell = (b_hi.delta, b_lo.delta) + coords

    base = family[-1]
    sup_gaps = {}
    n_mismatched = 0
    for b in family[:-1]:
        both = np.isfinite(b.values) & np.isfinite(base.values)
        same_inf = ~np.isfinite(b.values) & (b.values == base.values)
        n_mismatched += int((~both & ~same_inf).sum())
        gap = float(np.abs(b.values[both] - base.values[both]).max()) if both.any() else math.inf
        sup_gaps[float(b.delta)] = gap
    return ConvergenceReport(
        deltas=deltas,
        base_delta=float(base.delta),
        tolerance=tol,
        monotone_ok=monotone_ok,
        worst_cell=worst_cell,
        worst_violation=worst,
        sup_gaps=sup_gaps,
        n_mismatched=n_mismatched,
    )
