"""Sampled verification of the structural conditions behind the boundary
regularity machinery.

Each check evaluates its inequalities on a scrambled low-discrepancy sample
of a bounded box plus the box corners.  Sampling can refute an inequality
but never prove it, so passing verdicts read ``holds-on-sample``, never
"holds".  Clauses involving moments of path functionals depend on the law
of the state and are reported ``not-checkable``.

Condition tags (the report vocabulary):

* ``A``   end reward dominates the stop reward at the horizon, in value and
          in first-coordinate slope.
* ``B``   drift of every coordinate after the first does not depend on the
          first coordinate.
* ``C``   the gain of waiting, running reward plus generator-corrected stop
          reward, is nondecreasing in the first coordinate.
* ``D``   its time derivative is controlled by c (1 + first slope).
* ``E``   its partials exist and are finite; the companion square-moment
          requirement is not checkable by sampling.
* ``F``   all partials of the waiting gain are dominated by a multiple of
          the first slope, with a matching horizon clause.
* ``G``   first slope bounded away from zero, all partials grow at most
          like 1 + first slope, plus one of two horizon clauses.
* ``Cor3.2-i``  the end reward coincides with the stop reward at the
          horizon (tight time-derivative bound, zero slack).
* ``Cor3.2-ii`` the horizon waiting gain admits one global lower bound
          (tight bound up to a constant); probed by region inflation.
* ``AssumptionRegularity``  standing local-regularity and moment
          assumptions; sampled data finiteness only.

Constant-existence conditions (D, F, G) report the smallest constant that
makes every sampled inequality hold, and are declared violated only when no
finite constant works on the sample, i.e. the dominating side vanishes (or
has the wrong sign) while the dominated side does not.

A problem with ``stop-above`` orientation is handled by flipping the sign
of every first-coordinate slope factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import qmc

from .errors import ParameterError, UnsupportedError
from .problem import (
    ProblemSpec,
    gamma_curve,
    hm_gradient,
    hm_time_derivative,
    terminal_generator,
)

__all__ = [
    "CONDITION_TAGS",
    "ConditionReport",
    "check_condition",
    "LipschitzInputsReport",
    "check_lipschitz_inputs",
]

CONDITION_TAGS = (
    "A",
    "B",
    "C",
    "D",
    "E",
    "F",
    "G",
    "Cor3.2-i",
    "Cor3.2-ii",
    "AssumptionRegularity",
)

_VERDICTS = ("holds-on-sample", "violated", "not-checkable")

# Dependence threshold for the paired-point drift probe of condition B.
_B_THRESHOLD = 1e-10

_MOMENT_NOTE = (
    "moment clauses depend on the law of the state and are not checkable by "
    "sampling; the path sampler offers spot-estimates"
)


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of one sampled condition check.

    ``witnesses`` are the worst offending sample points, each a dict with
    keys t, x, margin (negative slack) and clause.  ``constants`` holds the
    smallest constants found and is populated only on a passing verdict.
    """

    tag: str
    region: dict
    verdict: str
    witnesses: tuple
    constants: dict
    notes: tuple
    n_samples: int
    seed: int

    def __post_init__(self):
        if self.verdict not in _VERDICTS:
            raise ParameterError(f"unknown verdict {self.verdict!r}")
        if self.verdict == "violated" and not self.witnesses:
            raise ParameterError("a violated verdict requires at least one witness")
        if self.verdict != "holds-on-sample" and self.constants:
            raise ParameterError("constants are reported only on passing verdicts")

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "region": {
                "t": list(self.region["t"]),
                "x": [list(b) for b in self.region["x"]],
            },
            "verdict": self.verdict,
            "witnesses": [dict(w) for w in self.witnesses],
            "constants": dict(self.constants),
            "notes": list(self.notes),
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


def _normalize_region(spec: ProblemSpec, region) -> tuple:
    region = dict(region or {})
    if "x" not in region:
        raise ParameterError(
            "region must carry 'x': one (low, high) pair per coordinate"
        )
    x_bounds = [(float(lo), float(hi)) for lo, hi in region["x"]]
    if len(x_bounds) != spec.dim:
        raise ParameterError(
            f"region has {len(x_bounds)} coordinate ranges, problem has dim "
            f"{spec.dim}"
        )
    for lo, hi in x_bounds:
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ParameterError(f"coordinate range ({lo}, {hi}) must be bounded")
    default_hi = spec.horizon if spec.finite_horizon else 50.0
    t_lo, t_hi = region.get("t", (0.0, default_hi))
    t_lo, t_hi = float(t_lo), float(t_hi)
    if not (0.0 <= t_lo <= t_hi and math.isfinite(t_hi)):
        raise ParameterError(f"time range ({t_lo}, {t_hi}) must be bounded")
    if spec.finite_horizon:
        t_hi = min(t_hi, spec.horizon)
    return t_lo, t_hi, x_bounds


def _sample_box(t_range, x_bounds, n_samples, seed):
    """Low-discrepancy sample of [t] x box, plus all box corners.

    The sample size is rounded up to a power of two.  Prefixes of the
    scrambled sequence are stable in n, so enlarging the sample only adds
    points: a violation found at some n is found again at any larger n.
    """
    dim = 1 + len(x_bounds)
    n = max(4, int(n_samples))
    n = 1 << (n - 1).bit_length()
    eng = qmc.Sobol(d=dim, scramble=True, seed=np.random.default_rng(seed))
    u = eng.random(n)
    lows = np.array([t_range[0]] + [b[0] for b in x_bounds])
    highs = np.array([t_range[1]] + [b[1] for b in x_bounds])
    pts = lows + u * (highs - lows)
    corners = np.stack(
        np.meshgrid(*zip(lows, highs), indexing="ij"), axis=-1
    ).reshape(-1, dim)
    pts = np.vstack([pts, corners])
    return pts[:, 0], pts[:, 1:]


def _witnesses(ts, xs, slack, clause, limit=5):
    """Worst offenders among samples with negative slack."""
    bad = np.nonzero(slack < 0)[0]
    order = bad[np.argsort(slack[bad])][:limit]
    return tuple(
        {
            "t": float(ts[i]),
            "x": [float(v) for v in np.atleast_1d(xs[i])],
            "margin": float(slack[i]),
            "clause": clause,
        }
        for i in order
    )


def _partials(spec, ts, xs, *, need_grad=True, need_t=True):
    """Gradient and time derivative of the waiting gain at sample points."""
    grad, dt, used_fd = None, None, False
    if need_grad:
        grad, fd = hm_gradient(spec, ts, xs)
        used_fd |= fd
    if need_t:
        if spec.hm_t is not None:
            dt = np.asarray(spec.hm_t(ts, xs), dtype=float)
        else:
            dt = np.array(
                [
                    float(hm_time_derivative(spec, float(t), x)[0])
                    for t, x in zip(ts, xs)
                ]
            )
            used_fd = True
    return grad, dt, used_fd


def _dominated_constant(num, den, tol):
    """Feasibility of num <= c * den for nonnegative num.

    Returns (c_star, bad): c_star is the smallest admissible constant over
    samples with positive den; bad flags samples where no finite positive c
    works (den vanishes or is negative while num stays positive, or den is
    strictly negative).
    """
    bad = ((den <= tol) & (num > tol)) | (den < -tol)
    pos = den > tol
    c = float((num[pos] / den[pos]).max()) if pos.any() else 0.0
    return max(c, 0.0), bad


def _terminal_pieces(spec, ts, xs):
    spec.require(
        "terminal", "terminal_grad", "terminal_hess", "obstacle_t", "obstacle_grad"
    )
    T = spec.horizon
    h_end = np.asarray(spec.running(T, xs), dtype=float)
    hTn = h_end + np.asarray(terminal_generator(spec, xs), dtype=float)
    ft_end = np.asarray(spec.obstacle_t(T, xs), dtype=float)
    dgap = np.asarray(spec.terminal_grad(xs), dtype=float) - np.asarray(
        spec.obstacle_grad(T, xs), dtype=float
    )
    return hTn, ft_end, dgap


def _drift_grad_sup(spec, xs) -> float:
    jac = np.asarray(spec.grad_drift(xs), dtype=float)
    return float(np.linalg.norm(jac, axis=-1).sum(axis=-1).max())


def _check_A(spec, ts, xs, s, x_bounds, seed):
    if not spec.finite_horizon:
        note = "no finite horizon, so the end-reward comparison is vacuous"
        return "holds-on-sample", (), {}, (note,)
    spec.require("terminal", "obstacle", "terminal_grad", "obstacle_grad")
    T = spec.horizon
    g = np.asarray(spec.terminal(xs), dtype=float)
    f_end = np.asarray(spec.obstacle(T, xs), dtype=float)
    dgap = np.asarray(spec.terminal_grad(xs), dtype=float) - np.asarray(
        spec.obstacle_grad(T, xs), dtype=float
    )
    scale = 1.0 + max(np.abs(g).max(), np.abs(f_end).max())
    tol = 1e-9 * scale
    wit = _witnesses(ts, xs, (g - f_end) + tol, "end reward below stop reward")
    wit += _witnesses(ts, xs, s * dgap[:, 0] + tol, "end-reward slope below stop-reward slope")
    if wit:
        return "violated", wit, {}, ()
    return "holds-on-sample", (), {}, ()


def _check_B(spec, ts, xs, s, x_bounds, seed):
    if spec.dim == 1:
        return "holds-on-sample", (), {}, ("one coordinate only: nothing to check",)
    lo, hi = x_bounds[0]
    pts = np.repeat(xs[:, None, :], 10, axis=1)
    pts[:, :, 0] = np.linspace(lo, hi, 10)
    mu = np.asarray(spec.drift(pts), dtype=float)
    spread = np.ptp(mu[:, :, 1:], axis=1).max(axis=1)
    wit = _witnesses(ts, xs, _B_THRESHOLD - spread, "tail drift varies with the first coordinate")
    if wit:
        return "violated", wit, {}, ()
    note = f"dependence probed at 10 first-coordinate values per sample, threshold {_B_THRESHOLD:g}"
    return "holds-on-sample", (), {}, (note,)


def _check_C(spec, ts, xs, s, x_bounds, seed):
    grad, _, used_fd = _partials(spec, ts, xs, need_t=False)
    d1 = s * grad[:, 0]
    tol = 1e-10 * (1.0 + np.abs(d1).max())
    notes = [_MOMENT_NOTE]
    if used_fd:
        notes.append("waiting-gain slope obtained by finite differences")
    wit = _witnesses(ts, xs, d1 + tol, "waiting gain decreasing in the first coordinate")
    if wit:
        return "violated", wit, {}, tuple(notes)
    return "holds-on-sample", (), {"min_slope": float(d1.min())}, tuple(notes)


def _check_D(spec, ts, xs, s, x_bounds, seed):
    grad, dt, used_fd = _partials(spec, ts, xs)
    num = dt
    den = 1.0 + s * grad[:, 0]
    tol = 1e-10 * (1.0 + max(np.abs(num).max(), np.abs(den).max()))
    # num <= c*den: positive den gives lower bounds on c, negative den upper
    c_lo, c_hi = 0.0, math.inf
    pos, neg = den > tol, den < -tol
    if pos.any():
        c_lo = max(c_lo, float((num[pos] / den[pos]).max()))
    if neg.any():
        c_hi = float((num[neg] / den[neg]).min())
    stuck = ~pos & ~neg & (num > tol)
    notes = [_MOMENT_NOTE]
    if used_fd:
        notes.append("waiting-gain partials obtained by finite differences")
    if stuck.any():
        wit = _witnesses(ts, xs, np.where(stuck, -num, 0.0), "dominating side vanishes")
        return "violated", wit, {}, tuple(notes)
    if c_lo > c_hi:
        slack = np.where(neg, c_hi * den - num, 0.0)
        wit = _witnesses(ts, xs, slack, "no single constant fits all samples")
        return "violated", wit, {}, tuple(notes)
    return "holds-on-sample", (), {"c": c_lo}, tuple(notes)


def _check_E(spec, ts, xs, s, x_bounds, seed):
    spec.require("running_t", "running_grad")
    grad, dt, used_fd = _partials(spec, ts, xs)
    m_grad = grad - np.asarray(spec.running_grad(ts, xs), dtype=float)
    m_t = dt - np.asarray(spec.running_t(ts, xs), dtype=float)
    finite = np.isfinite(m_grad).all(axis=1) & np.isfinite(m_t)
    notes = ["sampled partials of the corrected stop reward are finite", _MOMENT_NOTE]
    if used_fd:
        notes.append("partials obtained by finite differences")
    if not finite.all():
        wit = _witnesses(
            ts, xs, np.where(finite, 0.0, -1.0), "partial derivative not finite"
        )
        return "violated", wit, {}, tuple(notes[1:])
    return "not-checkable", (), {}, tuple(notes)


def _check_F(spec, ts, xs, s, x_bounds, seed):
    grad, dt, used_fd = _partials(spec, ts, xs)
    num = np.abs(grad).sum(axis=1) + np.abs(dt)
    den = s * grad[:, 0]
    tol = 1e-10 * (1.0 + max(num.max(), np.abs(den).max()))
    c_run, bad_run = _dominated_constant(num, den, tol)
    wit = _witnesses(
        ts, xs, np.where(bad_run, den - num, 0.0), "first slope cannot dominate"
    )
    c_term = 0.0
    notes = []
    if used_fd:
        notes.append("waiting-gain partials obtained by finite differences")
    if spec.finite_horizon:
        hTn, ft_end, dgap = _terminal_pieces(spec, ts, xs)
        num_t = np.abs(hTn) + 2.0 * np.abs(ft_end) + np.abs(dgap).sum(axis=1)
        den_t = s * dgap[:, 0]
        tol_t = 1e-10 * (1.0 + max(num_t.max(), np.abs(den_t).max()))
        c_term, bad_t = _dominated_constant(num_t, den_t, tol_t)
        wit += _witnesses(
            ts,
            xs,
            np.where(bad_t, den_t - num_t, 0.0),
            "horizon clause: end-reward slope gap cannot dominate",
        )
    else:
        notes.append("horizon clause vacuous: no finite horizon")
    if wit:
        return "violated", wit, {}, tuple(notes)
    constants = {"c": max(c_run, c_term), "drift_grad_sup": _drift_grad_sup(spec, xs)}
    return "holds-on-sample", (), constants, tuple(notes)


def _check_G(spec, ts, xs, s, x_bounds, seed):
    grad, dt, used_fd = _partials(spec, ts, xs)
    d1 = s * grad[:, 0]
    tol = 1e-10 * (1.0 + np.abs(d1).max())
    notes = []
    if used_fd:
        notes.append("waiting-gain partials obtained by finite differences")
    wit = _witnesses(ts, xs, d1 - tol, "first slope not bounded away from zero")
    if wit:
        return "violated", wit, {}, tuple(notes)
    c1 = float(d1.min())
    num3 = np.abs(grad).sum(axis=1) + np.abs(dt)
    den3 = 1.0 + d1
    c2, bad3 = _dominated_constant(num3, den3, tol)
    wit = _witnesses(ts, xs, np.where(bad3, den3 - num3, 0.0), "growth clause infeasible")
    if wit:
        return "violated", wit, {}, tuple(notes)
    mode = None
    if spec.finite_horizon:
        hTn, ft_end, dgap = _terminal_pieces(spec, ts, xs)
        den_t = 1.0 + s * dgap[:, 0]
        sum_gap = np.abs(dgap).sum(axis=1)
        num_a = np.abs(hTn) + 2.0 * np.abs(ft_end) + sum_gap
        tol_t = 1e-10 * (1.0 + max(num_a.max(), np.abs(den_t).max()))
        c_a, bad_a = _dominated_constant(num_a, den_t, tol_t)
        c_b, bad_b = _dominated_constant(sum_gap, den_t, tol_t)
        ft_here = np.abs(np.asarray(spec.obstacle_t(ts, xs), dtype=float))
        poly = (np.abs(hTn) + ft_here) / (1.0 + np.linalg.norm(xs, axis=1))
        b_ok = not bad_b.any() and bool(np.isfinite(poly).all())
        c_b = max(c_b, float(poly.max())) if b_ok else math.inf
        if bad_a.any() and not b_ok:
            wit = _witnesses(
                ts,
                xs,
                np.where(bad_a & (bad_b | ~np.isfinite(poly)), -num_a, 0.0),
                "no horizon clause feasible",
            )
            return "violated", wit, {}, tuple(notes)
        # both alternatives may hold on a bounded sample; keep the cheaper
        # constant (alternative (a) often needs a constant that grows with
        # the region when the gap slope vanishes)
        if bad_a.any() or c_b < c_a:
            mode = "b"
            c2 = max(c2, c_b)
            notes.append(
                "polynomial growth clause checked with exponent 1; any bounded "
                "sample satisfies it, so it adds no evidence"
            )
        else:
            mode = "a"
            c2 = max(c2, c_a)
    constants = {
        "c1": c1,
        "c2": c2,
        "terminal_mode": mode,
        "drift_grad_sup": _drift_grad_sup(spec, xs),
    }
    if mode == "b":
        constants["p"] = 1.0
    return "holds-on-sample", (), constants, tuple(notes)


def _check_cor_i(spec, ts, xs, s, x_bounds, seed):
    if not spec.finite_horizon:
        return "not-checkable", (), {}, ("needs a finite horizon",)
    spec.require("terminal", "obstacle")
    gap = np.asarray(spec.terminal(xs), dtype=float) - np.asarray(
        spec.obstacle(spec.horizon, xs), dtype=float
    )
    tol = 1e-9 * (1.0 + np.abs(gap).max())
    wit = _witnesses(ts, xs, tol - np.abs(gap), "end reward differs from stop reward")
    if wit:
        return "violated", wit, {}, ()
    return "holds-on-sample", (), {}, ("rewards agree at the horizon on the sample",)


def _required_floor(spec, t_range, x_bounds, n, seed):
    """Smallest constant bounding the horizon waiting gain from below."""
    ts, xs = _sample_box(t_range, x_bounds, n, seed)
    hTn, ft_end, _ = _terminal_pieces(spec, ts, xs)
    short = -(hTn + ft_end)
    i = int(np.argmax(short))
    return max(0.0, float(short[i])), float(ts[i]), xs[i]


def _check_cor_ii(spec, ts, xs, s, x_bounds, seed):
    if not spec.finite_horizon:
        return "not-checkable", (), {}, ("needs a finite horizon",)
    t_range = (0.0, spec.horizon)
    n = len(ts)
    levels = []
    for factor in (1.0, 2.0, 4.0):
        scaled = [
            (0.5 * (lo + hi) - 0.5 * factor * (hi - lo), 0.5 * (lo + hi) + 0.5 * factor * (hi - lo))
            for lo, hi in x_bounds
        ]
        levels.append(_required_floor(spec, t_range, scaled, n, seed))
    (c_1, _, _), (c_2, _, _), (c_4, t_w, x_w) = levels
    inc1, inc2 = c_2 - c_1, c_4 - c_2
    tol = 1e-9 * (1.0 + c_1)
    note = (
        "a global lower bound cannot be proven by sampling; the verdict tracks "
        "growth of the required constant under region inflation by factors 1, 2, 4"
    )
    if inc2 <= tol:
        return "holds-on-sample", (), {"c": c_4}, (note,)
    if inc2 >= inc1 - tol:
        wit = (
            {
                "t": t_w,
                "x": [float(v) for v in np.atleast_1d(x_w)],
                "margin": -float(inc2),
                "clause": "required constant keeps growing under region inflation",
            },
        )
        return "violated", wit, {}, (note,)
    return (
        "not-checkable",
        (),
        {},
        (note, "required constant still grows but decelerates; no sampled verdict"),
    )


def _check_regularity(spec, ts, xs, s, x_bounds, seed):
    fields = [
        np.asarray(spec.drift(xs), dtype=float),
        np.asarray(spec.grad_drift(xs), dtype=float),
        np.asarray(spec.running(ts, xs), dtype=float),
        np.asarray(spec.obstacle(ts, xs), dtype=float),
    ]
    if spec.terminal is not None:
        fields.append(np.asarray(spec.terminal(xs), dtype=float))
    ok = np.ones(len(ts), dtype=bool)
    for arr in fields:
        ok &= np.isfinite(arr).reshape(len(ts), -1).all(axis=1)
    if not ok.all():
        wit = _witnesses(ts, xs, np.where(ok, 0.0, -1.0), "non-finite problem data")
        return "violated", wit, {}, ()
    notes = (
        "sampled drift and reward data are finite",
        _MOMENT_NOTE,
    )
    return "not-checkable", (), {}, notes


_CHECKS = {
    "A": _check_A,
    "B": _check_B,
    "C": _check_C,
    "D": _check_D,
    "E": _check_E,
    "F": _check_F,
    "G": _check_G,
    "Cor3.2-i": _check_cor_i,
    "Cor3.2-ii": _check_cor_ii,
    "AssumptionRegularity": _check_regularity,
}


def check_condition(
    spec: ProblemSpec, tag: str, region, n_samples: int = 512, seed: int = 0
) -> ConditionReport:
    """Check one tagged condition on a bounded box.

    ``region`` maps "x" to one (low, high) pair per coordinate and
    optionally "t" to a time range (default: the whole horizon, capped at
    50 for infinite-horizon problems).  Identical inputs give identical
    reports; enlarging ``n_samples`` keeps all previously sampled points,
    so a violated verdict never flips back to passing.
    """
    if tag not in CONDITION_TAGS:
        raise ParameterError(
            f"unknown condition tag {tag!r}; choose one of {', '.join(CONDITION_TAGS)}"
        )
    t_lo, t_hi, x_bounds = _normalize_region(spec, region)
    ts, xs = _sample_box((t_lo, t_hi), x_bounds, n_samples, seed)
    s = 1.0 if spec.boundary_orientation == "stop-below" else -1.0
    verdict, witnesses, constants, notes = _CHECKS[tag](
        spec, ts, xs, s, x_bounds, seed
    )
    return ConditionReport(
        tag=tag,
        region={"t": (t_lo, t_hi), "x": x_bounds},
        verdict=verdict,
        witnesses=witnesses,
        constants=constants,
        notes=notes,
        n_samples=len(ts),
        seed=seed,
    )


@dataclass(frozen=True)
class LipschitzInputsReport:
    """Applicability data for the one-dimensional boundary slope bound.

    The ratio argument needs, on a candidate time interval: a finite
    boundary point, a finite supremum of the waiting-gain sign-change
    level, and a level above it where the waiting-gain slope admits a
    positive floor on the half-line below.
    """

    t_interval: tuple
    level_r: float
    gamma_bar: float
    alpha_r: float
    drift_slope_min: float
    boundary_finite: Optional[bool]
    applicable: bool
    notes: tuple

    def to_dict(self) -> dict:
        return {
            "t_interval": list(self.t_interval),
            "level_r": self.level_r,
            "gamma_bar": self.gamma_bar,
            "alpha_r": self.alpha_r,
            "drift_slope_min": self.drift_slope_min,
            "boundary_finite": self.boundary_finite,
            "applicable": self.applicable,
            "notes": list(self.notes),
        }


def check_lipschitz_inputs(
    spec: ProblemSpec,
    t_interval,
    level_r: float,
    *,
    boundary_value: Optional[float] = None,
    x_floor: Optional[float] = None,
    n_t: int = 33,
    n_x: int = 257,
    gamma_bracket=(-30.0, 30.0),
) -> LipschitzInputsReport:
    """Grid-check the interval hypotheses of the d=1 slope bound.

    ``t_interval`` is the candidate interval, ``level_r`` the candidate
    level that must exceed the largest sign-change level of the waiting
    gain.  The slope floor is evaluated on the strip below ``level_r``,
    truncated at ``x_floor`` (default: 40 units below the level).
    ``boundary_value``, when supplied, is a known boundary point used for
    the finiteness hypothesis; it is not recomputed here.
    """
    if spec.dim != 1:
        raise UnsupportedError(
            "the interval applicability check covers one spatial dimension"
        )
    if spec.boundary_orientation != "stop-below":
        raise UnsupportedError(
            "the interval applicability check assumes stop-below orientation; "
            "mirror the problem first"
        )
    t1, t2 = float(t_interval[0]), float(t_interval[1])
    if not (0.0 <= t1 < t2 <= spec.horizon):
        raise ParameterError(
            f"t_interval ({t1}, {t2}) must sit inside [0, {spec.horizon}]"
        )
    level_r = float(level_r)
    notes = []
    t_grid = np.linspace(t1, t2, n_t)
    gammas = np.array([gamma_curve(spec, t, bracket=gamma_bracket) for t in t_grid])
    gamma_bar = float(gammas.max())
    gamma_ok = math.isfinite(gamma_bar)
    if not gamma_ok:
        notes.append("sign-change level unbounded on the interval")
    level_ok = gamma_ok and level_r > gamma_bar
    if gamma_ok and not level_ok:
        notes.append(f"level {level_r:g} does not exceed the supremum {gamma_bar:g}")

    floor = level_r - 40.0 if x_floor is None else float(x_floor)
    if floor >= level_r:
        raise ParameterError("x_floor must lie below level_r")
    x_grid = np.linspace(floor, level_r, n_x)
    pts = x_grid[:, None]
    alpha_r = math.inf
    for t in t_grid:
        grad, _ = hm_gradient(spec, float(t), pts)
        alpha_r = min(alpha_r, float(grad[:, 0].min()))
    notes.append(f"slope floor evaluated on the truncated strip [{floor:g}, {level_r:g}]")
    alpha_ok = alpha_r > 0.0

    jac = np.asarray(spec.grad_drift(pts), dtype=float)
    drift_slope_min = float(jac[..., 0, 0].min())

    boundary_finite = None
    if boundary_value is not None:
        boundary_finite = bool(math.isfinite(float(boundary_value)))
        if not boundary_finite:
            notes.append("supplied boundary point is not finite")
    applicable = bool(
        gamma_ok and level_ok and alpha_ok and boundary_finite in (True, None)
    )
    return LipschitzInputsReport(
        t_interval=(t1, t2),
        level_r=level_r,
        gamma_bar=gamma_bar,
        alpha_r=alpha_r,
        drift_slope_min=drift_slope_min,
        boundary_finite=boundary_finite,
        applicable=applicable,
        notes=tuple(notes),
    )
