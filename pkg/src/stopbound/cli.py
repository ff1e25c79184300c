"""Batch front door: load a run config, execute the full pipeline, emit files.

Pipeline order: condition checks, grid solve, boundary extraction for a
delta family, slope and Lipschitz analysis, Monte Carlo verification at
probe points.  Artifacts land in the output directory:

* ``conditions.json``    one report per requested condition tag
* ``value_surface.csv``  t, x coordinates, value v, excess w (gnuplot-ready)
* ``boundary.csv``       delta, t, tail coordinates, boundary level
* ``slopes.json``        slope estimates, Lipschitz constants, applicability
* ``summary.json``       every verification check with pass/fail and margin
* ``MANIFEST.json``      sha256 of each artifact plus a completeness flag

Exit status: 0 when every verification check passes, 1 when a check fails
or a pipeline stage errors out, 2 for invalid configs or parameters.
Condition violations are informational and do not affect the exit status.
Numbers are written with full round-trip precision, so two runs with the
same config and seed produce byte-identical artifacts regardless of chunk
size or thread count.
"""

from __future__ import annotations

import argparse
import hashlib
import importlib
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import examples as ex
from .boundary import (
    boundary_slopes,
    convergence_check,
    extract_boundary,
    lipschitz_estimate,
)
from .conditions import CONDITION_TAGS, check_condition, check_lipschitz_inputs
from .errors import (
    BoundaryEvaluationError,
    ConfigurationError,
    DegenerateRatioError,
    ParameterError,
    StopboundError,
    ValidationError,
)
from .flow import derivative_flow, diagnostics, hitting_time, simulate_paths
from .pde import Grid, classify_regions, fd_derivatives, solve_vi
from .problem import truncate_horizon
from .represent import estimate_martingale_checkpoints, sample_functionals

__all__ = ["RunConfig", "default_config", "run_pipeline", "main"]

SCHEMA_VERSION = 1

_GRID_DEFAULTS = {
    "example1": {"nx": [241], "nt": 201},
    "example2a": {"nx": [251, 25], "nt": 201},
    "example2b": {"nx": [141, 25], "nt": 251},
    "example2c": {"nx": [129, 25], "nt": 251},
}

_MC_DT_DEFAULTS = {
    "example1": 5e-3,
    "example2a": 1e-2,
    "example2b": 5e-2,
    "example2c": 5e-2,
}


@dataclass
class RunConfig:
    """Validated run configuration; see ``default_config`` for the schema."""

    example: str = ""
    problem: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    seed: int = 0
    out_dir: str = "stopbound-out"
    grid: dict = field(default_factory=dict)
    mc: dict = field(default_factory=dict)
    deltas: list = field(default_factory=lambda: [1e-2, 1e-3, 1e-4])
    conditions: list | None = None
    condition_region: dict | None = None
    condition_samples: int = 512
    probes: list | None = None
    slope_cells: list | None = None
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ValidationError(
                f"config schema_version {self.schema_version} is not supported "
                f"(this build reads version {SCHEMA_VERSION})"
            )
        if bool(self.example) == bool(self.problem):
            raise ValidationError(
                "config must name exactly one of 'example' or 'problem'"
            )
        if self.example and self.example not in ex.EXAMPLE_NAMES:
            raise ValidationError(
                f"unknown example {self.example!r}; choose one of "
                f"{', '.join(ex.EXAMPLE_NAMES)}"
            )
        n_paths = int(self.mc.get("n_paths", 0) or 0)
        if "n_paths" in self.mc and n_paths < 1:
            raise ValidationError(f"mc.n_paths must be >= 1, got {self.mc['n_paths']}")
        if "dt" in self.mc and not float(self.mc["dt"]) > 0:
            raise ValidationError(f"mc.dt must be positive, got {self.mc['dt']}")
        deltas = [float(d) for d in self.deltas]
        if any(d <= 0 for d in deltas):
            raise ValidationError(f"deltas must be positive, got {deltas}")
        if sorted(deltas, reverse=True) != deltas or len(set(deltas)) != len(deltas):
            raise ValidationError(f"deltas must be strictly decreasing, got {deltas}")
        for tag in self.conditions or ():
            if tag not in CONDITION_TAGS:
                raise ValidationError(f"unknown condition tag {tag!r}")
        if self.probes is not None:
            for p in self.probes:
                if len(p) != 2:
                    raise ValidationError(f"probe {p!r} must be [t, [x...]]")


def default_config(name: str, params: dict | None = None) -> RunConfig:
    """Config with per-example desk-scale defaults for grids and sampling."""
    eid = ex.example_id(name, **(params or {}))
    g = dict(_GRID_DEFAULTS[name])
    g["box"] = [list(b) for b in ex.default_box(eid)]
    g.update({"z_value": 0.0, "theta": 1.0, "omega": 1.5})
    cfg = RunConfig(
        example=name,
        params=dict(eid.params),
        grid=g,
        mc={"n_paths": 20_000, "dt": _MC_DT_DEFAULTS[name], "chunk_size": None},
        conditions=list(CONDITION_TAGS),
    )
    cfg.validate()
    return cfg


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _fmt(value) -> str:
    """Full round-trip decimal text for one CSV cell."""
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj]
    return obj


class _Artifacts:
    """Writes output files and tracks their hashes for the MANIFEST."""

    def __init__(self, out_dir):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.hashes: dict[str, str] = {}

    def write_text(self, name: str, text: str) -> None:
        (self.out / name).write_text(text, encoding="utf-8")
        self.hashes[name] = _sha256(text)

    def write_json(self, name: str, obj) -> None:
        self.write_text(
            name, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
        )

    def write_csv(self, name: str, header, rows) -> None:
        lines = [",".join(header)]
        lines.extend(",".join(_fmt(v) for v in row) for row in rows)
        self.write_text(name, "\n".join(lines) + "\n")

    def manifest(self, complete: bool, error: str | None) -> None:
        body = {
            "complete": complete,
            "error": error,
            "files": dict(sorted(self.hashes.items())),
        }
        (self.out / "MANIFEST.json").write_text(
            json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def _load_problem(cfg: RunConfig):
    """(spec, eid-or-None) for the configured example or custom factory."""
    if cfg.example:
        eid = ex.example_id(cfg.example, **cfg.params)
        return ex.build_example(eid), eid
    ref = cfg.problem.get("factory", "")
    if ":" not in ref:
        raise ValidationError(
            "problem.factory must be 'package.module:callable' returning the "
            "problem description"
        )
    mod_name, attr = ref.split(":", 1)
    factory = getattr(importlib.import_module(mod_name), attr)
    return factory(**cfg.problem.get("kwargs", {})), None


def _condition_region(cfg, spec, eid):
    if cfg.condition_region is not None:
        return cfg.condition_region
    if eid is None:
        raise ValidationError(
            "custom problems need an explicit condition_region in the config"
        )
    box = [list(b) for b in ex.default_box(eid)]
    if spec.dim == 3:
        z = float(cfg.grid.get("z_value", 0.0))
        box.append([z - 1.0, z + 1.0])
    return {"x": box}


def _solve_setup(cfg, spec, eid):
    """Solvable (frozen, truncated) spec plus grid and horizon notes."""
    notes = {"truncated": False, "residual_discount": None}
    if eid is not None and eid.name != "example1":
        spec = ex.frozen_spec(eid, float(cfg.grid.get("z_value", 0.0)))
    if not spec.finite_horizon:
        trunc = None
        if eid is not None:
            trunc = ex.truncation_span(eid)
        if trunc is None:
            span = float(cfg.mc.get("span") or 50.0)
            trunc = (span, math.exp(-spec.kill_rate * span))
        spec = truncate_horizon(spec, trunc[0])
        notes.update(truncated=True, residual_discount=trunc[1])
    box = cfg.grid.get("box")
    if box is None:
        if eid is None:
            raise ValidationError("custom problems need grid.box in the config")
        box = ex.default_box(eid)
    if len(box) != spec.dim:
        raise ValidationError(
            f"grid.box has {len(box)} axes, the solvable problem has {spec.dim}"
        )
    nx = cfg.grid.get("nx", [201] * spec.dim)
    nt = int(cfg.grid.get("nt", 201))
    grid = Grid.regular(0.0, spec.horizon, nt, box, nx)
    return spec, grid, notes


def _analytic_gamma_on(b0, eid, z_value):
    """gamma levels matching b0's cells, or None when unavailable."""
    if eid is None:
        return None
    gamma = ex.analytic_reference(eid, "gamma")
    if np.isscalar(gamma) or isinstance(gamma, float):
        return np.full(b0.values.shape, float(gamma))
    tails = b0.tail_axes[0]
    vals = np.asarray(gamma(tails, z_value), dtype=float)
    return np.broadcast_to(vals, b0.values.shape)


def _check(checks, name, passed, margin, detail=""):
    checks.append(
        {
            "name": name,
            "passed": bool(passed),
            "margin": float(margin),
            "detail": detail,
        }
    )
    word = "PASS" if passed else "FAIL"
    print(f"[{word}] {name} (margin={margin:.6g}) {detail}".rstrip())


def _fill_example_defaults(cfg: RunConfig) -> RunConfig:
    """Example configs inherit the desk-scale defaults for unset keys.

    A config that names an example and a partial grid or sampling block must
    behave exactly like the fully spelled-out default config, so sparse and
    complete configs produce identical artifacts.
    """
    if not cfg.example:
        return cfg
    base = default_config(cfg.example, cfg.params)
    grid = dict(base.grid)
    grid.update(cfg.grid or {})
    mc = dict(base.mc)
    mc.update(cfg.mc or {})
    conditions = base.conditions if cfg.conditions is None else cfg.conditions
    out = replace(cfg, grid=grid, mc=mc, params=dict(base.params), conditions=conditions)
    out.validate()
    return out


def run_pipeline(cfg: RunConfig, out_dir: str | None = None) -> int:
    """Execute the configured pipeline; returns the process exit status."""
    cfg = _fill_example_defaults(cfg)
    art = _Artifacts(out_dir or cfg.out_dir)
    checks: list[dict] = []
    error: str | None = None
    status = 0
    try:
        status = _run_stages(cfg, art, checks)
    except StopboundError as exc:
        error = f"{type(exc).__name__}: {exc}"
        print(f"error: {error}", file=sys.stderr)
        status = 2 if isinstance(exc, (ValidationError, ParameterError, ConfigurationError)) else 1
    finally:
        art.manifest(complete=error is None, error=error)
    return status


def _run_stages(cfg: RunConfig, art: _Artifacts, checks: list) -> int:
    seed = int(cfg.seed)
    spec_full, eid = _load_problem(cfg)
    label = spec_full.label
    print(f"problem: {label} (dim {spec_full.dim}, seed {seed})")

    # conditions (informational)
    tags = list(CONDITION_TAGS if cfg.conditions is None else cfg.conditions)
    reports = []
    if tags:
        region = _condition_region(cfg, spec_full, eid)
        for tag in tags:
            rep = check_condition(
                spec_full, tag, region, n_samples=cfg.condition_samples, seed=seed
            )
            reports.append(rep)
            print(f"condition {tag}: {rep.verdict}")
    art.write_json("conditions.json", [r.to_dict() for r in reports])

    # grid solve
    spec, grid, horizon_notes = _solve_setup(cfg, spec_full, eid)
    surface = solve_vi(
        spec,
        grid,
        theta=float(cfg.grid.get("theta", 1.0)),
        omega=float(cfg.grid.get("omega", 1.5)),
    )
    print(
        f"solved {grid.shape} grid (dt={grid.dt:.4g}, dx1={grid.dx[0]:.4g}, "
        f"{max(surface.sweeps)} max sweeps)"
    )
    mesh = np.meshgrid(grid.t, *grid.axes, indexing="ij")
    cols = [m.ravel() for m in mesh]
    header = ["t"] + [f"x{k + 1}" for k in range(grid.dim)] + ["v", "w"]
    rows = zip(*(c.tolist() for c in cols + [surface.v.ravel(), surface.w.ravel()]))
    art.write_csv("value_surface.csv", header, rows)

    # boundary family
    family = [extract_boundary(surface, d) for d in cfg.deltas]
    b0 = extract_boundary(surface, 0.0)
    conv = convergence_check(family + [b0])
    brows = []
    for b in family + [b0]:
        brows.extend((b.delta,) + row for row in b.rows())
    art.write_csv(
        "boundary.csv",
        ["delta", "t"] + [f"x{k + 2}" for k in range(len(b0.tail_axes))] + ["b"],
        brows,
    )

    mask = classify_regions(surface)
    # the x1 face node on the continuation side is the solver's artificial
    # clamp, not data
    if spec.boundary_orientation == "stop-below":
        diffs = np.diff(mask[:, :-1].astype(np.int8), axis=1)
        bad = int((diffs > 0).sum())
    else:
        diffs = np.diff(mask[:, 1:].astype(np.int8), axis=1)
        bad = int((diffs < 0).sum())
    _check(checks, "stop-mask-columnwise-monotone", bad == 0, -bad)

    gamma_vals = _analytic_gamma_on(b0, eid, float(cfg.grid.get("z_value", 0.0)))
    if gamma_vals is not None:
        # drop the terminal slab (w vanishes there identically) and the
        # clamped tail-face columns, which stop artificially
        sl = (slice(None, -1) if spec.finite_horizon else slice(None),) + (
            slice(1, -1),
        ) * len(b0.tail_axes)
        b_int, g_int = b0.values[sl], gamma_vals[sl]
        use = np.isfinite(g_int)
        gap = float((b_int[use] - g_int[use] - grid.dx[0]).max()) if use.any() else -math.inf
        _check(
            checks,
            "boundary-below-gamma",
            gap <= 0,
            -gap,
            "terminal slice and tail faces excluded",
        )

    _check(
        checks,
        "delta-family-monotone",
        conv.monotone_ok,
        -conv.worst_violation,
        f"tolerance {conv.tolerance:.4g}",
    )
    gaps = [conv.sup_gaps[d] for d in sorted(conv.sup_gaps, reverse=True) if d > 0]
    finite_gaps = [g for g in gaps if math.isfinite(g)]
    dec = all(b < a for a, b in zip(finite_gaps, finite_gaps[1:]))
    worst = max((b - a for a, b in zip(finite_gaps, finite_gaps[1:])), default=-math.inf)
    _check(checks, "delta-gaps-decreasing", dec, -worst, f"gaps {gaps}")

    # slopes and Lipschitz data
    n_paths = int(cfg.mc.get("n_paths", 20_000))
    mc_dt = float(cfg.mc.get("dt", 1e-2))
    chunk = cfg.mc.get("chunk_size")
    slope_payload = {"cells": [], "lipschitz": None, "applicability": None, "notes": []}
    b_small = family[-1]
    cells = cfg.slope_cells
    if cells is None:
        t_mid = 0.5 * (grid.t[0] + grid.t[-1])
        if grid.dim == 1:
            cells = [[t_mid]]
        else:
            ax = b0.tail_axes[0]
            cells = [[t_mid, float(ax[len(ax) // 3])], [t_mid, float(ax[2 * len(ax) // 3])]]
    for i, cell in enumerate(cells):
        t_c, tail_c = float(cell[0]), tuple(float(v) for v in cell[1:])
        try:
            est = boundary_slopes(
                spec,
                b_small,
                (t_c,) + tail_c,
                method="implicit-ratio",
                surface=surface,
                stop_boundary=b0,
                n_paths=n_paths,
                dt=mc_dt,
                seed=seed + 2000 + i,
                chunk_size=chunk,
            )
            slope_payload["cells"].append(est.to_dict())
        except (DegenerateRatioError, BoundaryEvaluationError) as exc:
            slope_payload["notes"].append(f"slope cell {cell}: {exc}")
    try:
        slope_payload["lipschitz"] = lipschitz_estimate(b0).to_dict()
    except BoundaryEvaluationError as exc:
        slope_payload["notes"].append(f"lipschitz: {exc}")
    if eid is not None:
        route = ex.applicability(eid)
        slope_payload["applicability"] = route
        if eid.name == "example1":
            g = ex.analytic_reference(eid, "gamma")
            if math.isfinite(g):
                T = spec.horizon
                rep = check_lipschitz_inputs(
                    spec, (0.1 * T, 0.9 * T), g + 1.0, x_floor=grid.axes[0][0]
                )
                slope_payload["applicability"] = {**route, "interval_check": rep.to_dict()}
        if eid.name == "example2c":
            bound = ex.analytic_reference(eid, "slope_bound")
            slope_payload["notes"].append(
                f"tail-slope reference bound at positive anchors: {bound:.6g}"
            )
    art.write_json("slopes.json", slope_payload)

    # Monte Carlo verification at probes
    probes = cfg.probes
    if probes is None and eid is not None:
        probes = [[t, list(x)] for t, x in ex.default_probes(eid)]
    probes = probes or []
    tight = (
        eid is not None
        and eid.name == "example1"
        and ex.analytic_reference(eid, "tight_upper_applies")
    )
    tol_fd = 2.0 * (grid.dx[0] ** 2 + grid.dt)
    z_value = float(cfg.grid.get("z_value", 0.0))
    for i, (t_p, x_p) in enumerate(probes):
        x_p = np.asarray(x_p, dtype=float)
        if x_p.size == spec.dim + 1:
            if abs(x_p[-1] - z_value) > 1e-9:
                raise ValidationError(
                    f"probe {i} sits at x{spec.dim + 1}={x_p[-1]}, but the solve "
                    f"froze that coordinate at {z_value}"
                )
            x_p = x_p[: spec.dim]
        requests = ["value", ("grad", 0), "vt_lower", "vt_upper"]
        if tight:
            requests.append("vt_tight")
        sample = sample_functionals(
            spec,
            float(t_p),
            x_p,
            b0,
            n_paths,
            mc_dt,
            requests,
            seed=seed + 1000 + i,
            chunk_size=chunk,
        )
        vt_fd, grad_fd = fd_derivatives(surface, float(t_p), x_p)
        val = sample.estimate("value")
        gap = abs(val.mean - surface.value_at(float(t_p), x_p))
        _check(
            checks,
            f"probe{i}-value",
            gap <= 3 * val.std_error + tol_fd,
            3 * val.std_error + tol_fd - gap,
        )
        g_est = sample.estimate("grad0")
        gap = abs(g_est.mean - grad_fd[0])
        _check(
            checks,
            f"probe{i}-gradient",
            gap <= 3 * g_est.std_error + tol_fd,
            3 * g_est.std_error + tol_fd - gap,
        )
        lo = sample.estimate("vt_lower")
        hi = sample.estimate("vt_upper")
        lo_b = lo.mean - 3 * lo.std_error - 5 * mc_dt
        hi_b = hi.mean + 3 * hi.std_error + 5 * mc_dt
        _check(
            checks,
            f"probe{i}-time-derivative-sandwich",
            lo_b <= vt_fd <= hi_b,
            min(vt_fd - lo_b, hi_b - vt_fd),
            f"fd={vt_fd:.4g} in [{lo_b:.4g}, {hi_b:.4g}]",
        )
        if tight:
            ti = sample.estimate("vt_tight")
            bound = ti.mean + 3 * ti.std_error + 5 * mc_dt
            _check(checks, f"probe{i}-time-derivative-tight", vt_fd <= bound, bound - vt_fd)

    # pathwise diagnostics and checkpoint constancy at the first probe
    if probes:
        t_p, x_p = float(probes[0][0]), np.asarray(probes[0][1], dtype=float)[: spec.dim]
        bundle = simulate_paths(
            spec, t_p, x_p, min(n_paths, 4000), mc_dt, seed=seed + 4000, chunk_size=chunk
        )
        derivative_flow(spec, bundle)
        hit = hitting_time(bundle, b0)
        diag = diagnostics(spec, bundle, hit)
        _check(
            checks,
            "pathwise-diagnostics",
            diag.ok,
            -len(diag.flow_violations) - diag.hitting_violated,
            f"flow ratio {diag.flow_max_ratio:.3g}",
        )
        span = spec.horizon - t_p
        mg = estimate_martingale_checkpoints(
            spec,
            surface,
            b0,
            t_p,
            x_p,
            [0.0, 0.25 * span, 0.5 * span],
            n_paths,
            mc_dt,
            seed=seed + 3000,
            chunk_size=chunk,
        )
        drift = max(abs(m.mean - mg[0].mean) for m in mg[1:])
        allow = max(3 * m.std_error for m in mg[1:]) + 5 * mc_dt
        _check(checks, "martingale-checkpoints", drift <= allow, allow - drift)

    n_failed = sum(not c["passed"] for c in checks)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "problem": label,
        "example": cfg.example or None,
        "params": dict(cfg.params),
        "seed": seed,
        "horizon": {"solve": spec.horizon, **horizon_notes},
        "grid": {
            "nt": len(grid.t),
            "nx": [len(a) for a in grid.axes],
            "dt": grid.dt,
            "dx": list(grid.dx),
        },
        "mc": {"n_paths": n_paths, "dt": mc_dt},
        "conditions": {r.tag: r.verdict for r in reports},
        "checks": checks,
        "n_failed": n_failed,
    }
    art.write_json("summary.json", summary)
    print(f"{len(checks) - n_failed}/{len(checks)} checks passed")
    return 0 if n_failed == 0 else 1


def _parse_params(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ValidationError(f"--param expects k=v, got {pair!r}")
        key, val = pair.split("=", 1)
        out[key.strip()] = float(val)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stopbound",
        description="Solve, extract and verify optimal stopping boundaries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a pipeline from a JSON config")
    p_run.add_argument("config", help="path to the run config (JSON)")
    p_ex = sub.add_parser("example", help="run a built-in example with defaults")
    p_ex.add_argument("name", help=f"one of {', '.join(ex.EXAMPLE_NAMES)}")
    p_ex.add_argument(
        "--param",
        action="append",
        metavar="K=V",
        help="override one example parameter (repeatable)",
    )
    for p in (p_run, p_ex):
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--probes", default=None, help="JSON file with [t, [x...]] probes")
    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
            cfg = RunConfig.from_dict(raw)
        else:
            cfg = default_config(args.name, _parse_params(args.param))
        if args.seed is not None:
            cfg.seed = int(args.seed)
        env_seed = os.environ.get("STOPBOUND_SEED")
        if env_seed is not None:
            cfg.seed = int(env_seed)
        if args.out is not None:
            cfg.out_dir = args.out
        if args.probes is not None:
            cfg.probes = json.loads(Path(args.probes).read_text(encoding="utf-8"))
            cfg.validate()
    except (StopboundError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    with warnings.catch_warnings():
        warnings.simplefilter("default")
        return run_pipeline(cfg)


if __name__ == "__main__":
    sys.exit(main())
