"""Backward theta-scheme with projected SOR for the stopping value function.

The value solves the parabolic variational inequality

    max( dv/dt + L v - r v + h,  f - v ) = 0,        v(T, .) = g,

where L is the diffusion generator.  Slices are stepped backward in time; at
each slice a linear complementarity problem is solved by projected SOR with
colored Gauss-Seidel sweeps, so every sweep is a handful of vectorised array
operations.  Space is discretised with central differences (including the
cross term in two dimensions); the lateral box faces are clamped to the stop
reward, which is a modelling approximation the solver warns about whenever a
face appears to sit in the numerical continuation region.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ParameterError, SolverError, StabilityError, UnsupportedError
from .problem import ProblemSpec

__all__ = ["Grid", "ValueSurface", "solve_vi", "fd_derivatives", "classify_regions"]


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid in time and space."""

    t: np.ndarray
    axes: tuple

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "axes", axes)
        for name, a in [("t", t)] + [(f"x{i + 1}", a) for i, a in enumerate(axes)]:
            if a.ndim != 1 or a.size < 3:
                raise ParameterError(f"axis {name} needs at least 3 nodes")
            steps = np.diff(a)
            if steps.min() <= 0:
                raise ParameterError(f"axis {name} must be strictly increasing")
            if steps.max() - steps.min() > 1e-9 * steps.max():
                raise ParameterError(f"axis {name} must be uniform")

    @classmethod
    def regular(cls, t0: float, t1: float, nt: int, box, nx) -> "Grid":
        box = [tuple(map(float, b)) for b in box]
        if np.isscalar(nx):
            nx = [int(nx)] * len(box)
        if len(nx) != len(box):
            raise ParameterError(
                f"nx has {len(nx)} entries for a {len(box)}-dimensional box"
            )
        if any(hi <= lo for lo, hi in box):
            raise ParameterError("box intervals must have lo < hi")
        axes = tuple(np.linspace(lo, hi, n) for (lo, hi), n in zip(box, nx))
        return cls(t=np.linspace(t0, t1, nt), axes=axes)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def dx(self) -> tuple:
        return tuple(float(a[1] - a[0]) for a in self.axes)

    @property
    def shape(self) -> tuple:
        return (self.t.size,) + tuple(a.size for a in self.axes)

    def mesh(self) -> np.ndarray:
        """Spatial nodes, shape (*n_space, dim)."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)


@dataclass
class ValueSurface:
    """Solved value v and excess w = v - f on a grid, plus solver metadata."""

    grid: Grid
    spec: ProblemSpec
    v: np.ndarray
    w: np.ndarray
    theta: float
    omega: float
    sweeps: np.ndarray
    residuals: np.ndarray
    f_scale: float
    face_warnings: list = field(default_factory=list)

    def _locate(self, axis: np.ndarray, value: float) -> tuple[int, float]:
        step = axis[1] - axis[0]
        pos = (value - axis[0]) / step
        i = int(np.clip(np.floor(pos), 0, axis.size - 2))
        return i, float(pos - i)

    def value_at(self, t: float, x, field_name: str = "v") -> float:
        """Multilinear interpolation of v or w at an off-node point."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return float(self.values_at(t, x[None, :], field_name)[0])

    def values_at(self, t: float, x: np.ndarray, field_name: str = "v") -> np.ndarray:
        """Vectorised multilinear interpolation at points ``x`` of shape (m, dim).

        Points outside the box are clamped to the nearest face, which matches
        the solver's treatment of the faces themselves.
        """
        arr = self.v if field_name == "v" else self.w
        x = np.asarray(x, dtype=float)
        m = x.shape[0]
        it, wt = self._locate(self.grid.t, float(t))

        idxs = []
        fracs = []
        for k, ax in enumerate(self.grid.axes):
            step = ax[1] - ax[0]
            pos = np.clip((x[:, k] - ax[0]) / step, 0.0, ax.size - 1.0)
            ik = np.clip(np.floor(pos).astype(int), 0, ax.size - 2)
            idxs.append(ik)
            fracs.append(pos - ik)

        out = np.zeros(m)
        for corner in range(2 ** self.grid.dim):
            weight = np.ones(m)
            sel = []
            for k in range(self.grid.dim):
                bk = (corner >> k) & 1
                weight = weight * (fracs[k] if bk else (1.0 - fracs[k]))
                sel.append(idxs[k] + bk)
            sel = tuple(sel)
            vals = (1.0 - wt) * arr[(it,) + sel] + wt * arr[(it + 1,) + sel]
            out += weight * vals
        return out


def _check_cfl(spec: ProblemSpec, grid: Grid, theta: float, mu_field: np.ndarray):
    if theta >= 1.0:
        return
    a = spec.diffusion
    dx = grid.dx
    load = spec.kill_rate
    for k in range(grid.dim):
        load += a[k, k] / dx[k] ** 2
        load += float(np.abs(mu_field[..., k]).max()) / dx[k]
    if grid.dim == 2:
        load += abs(a[0, 1]) / (dx[0] * dx[1])
    limit = 1.0 / ((1.0 - theta) * load) if load > 0 else math.inf
    if grid.dt > limit * (1 + 1e-12):
        raise StabilityError(
            f"theta={theta} violates the explicit stability bound: "
            f"dt={grid.dt:.3e} exceeds {limit:.3e}; refine the time grid",
            required_dt=limit,
        )


def _lcp_residual(diag, nb_sum, rhs, v_int, f_int):
    return float(np.abs(np.minimum(diag * v_int - nb_sum - rhs, v_int - f_int)).max())


def solve_vi(
    spec: ProblemSpec,
    grid: Grid,
    *,
    theta: float = 1.0,
    omega: float = 1.5,
    tol: float = 1e-10,
    max_sweeps: int = 10_000,
) -> ValueSurface:
    """Solve the stopping problem on ``grid`` backward from the horizon.

    Only one- and two-dimensional state spaces are supported; higher
    dimensions are verified by Monte Carlo instead.  The terminal slice is
    set to the end reward exactly, every earlier slice solves the projected
    linear system to an LCP residual below ``tol`` (projected SOR with
    relaxation ``omega``), and the returned surface satisfies v >= f
    everywhere up to the projection tolerance.
    """
    if spec.dim not in (1, 2):
        raise UnsupportedError(
            f"grid solves support dim 1 or 2, got {spec.dim}; use the Monte "
            "Carlo estimators for higher dimensions"
        )
    if not spec.finite_horizon:
        raise UnsupportedError(
            "the grid solver needs a finite horizon; truncate the problem first"
        )
    if grid.dim != spec.dim:
        raise ParameterError("grid dimension does not match the problem")
    if abs(grid.t[-1] - spec.horizon) > 1e-9 * max(1.0, spec.horizon):
        raise ParameterError("the time axis must end exactly at the horizon")
    if not (0.0 <= theta <= 1.0):
        raise ParameterError(f"theta must lie in [0, 1], got {theta}")
    if not (0.0 < omega < 2.0):
        raise ParameterError(f"omega must lie in (0, 2), got {omega}")
    spec.require("running", "obstacle", "terminal")

    mesh = grid.mesh()
    mu_field = np.asarray(spec.drift(mesh), dtype=float)
    _check_cfl(spec, grid, theta, mu_field)
    a = spec.diffusion
    r = spec.kill_rate
    dt = grid.dt
    nt = grid.t.size
    shape = tuple(ax.size for ax in grid.axes)

    v = np.empty((nt,) + shape)
    w = np.empty((nt,) + shape)
    sweeps_used = np.zeros(nt - 1, dtype=int)
    final_residuals = np.zeros(nt - 1)

    if spec.dim == 1:
        dx = grid.dx[0]
        mu = mu_field[..., 0]
        diff = 0.5 * a[0, 0] / dx**2
        c_e = diff + mu / (2 * dx)
        c_w = diff - mu / (2 * dx)
        c_c = -2.0 * diff
        diag = 1.0 / dt + theta * (r - c_c)

        def nb_sum(vs):
            return c_e[1:-1] * vs[2:] + c_w[1:-1] * vs[:-2]

        def explicit_part(vs):
            return nb_sum(vs) + (c_c - r) * vs[1:-1]

        def interior(arr):
            return arr[1:-1]

        def set_faces(vs, fs):
            vs[0] = fs[0]
            vs[-1] = fs[-1]

        red_black = None
    else:
        dx1, dx2 = grid.dx
        mu1 = mu_field[..., 0]
        mu2 = mu_field[..., 1]
        c_e1 = 0.5 * a[0, 0] / dx1**2 + mu1 / (2 * dx1)
        c_w1 = 0.5 * a[0, 0] / dx1**2 - mu1 / (2 * dx1)
        c_e2 = 0.5 * a[1, 1] / dx2**2 + mu2 / (2 * dx2)
        c_w2 = 0.5 * a[1, 1] / dx2**2 - mu2 / (2 * dx2)
        c_x = a[0, 1] / (4 * dx1 * dx2)
        c_c = -(a[0, 0] / dx1**2 + a[1, 1] / dx2**2)
        diag = 1.0 / dt + theta * (r - c_c)

        def nb_sum(vs):
            out = (
                c_e1[1:-1, 1:-1] * vs[2:, 1:-1]
                + c_w1[1:-1, 1:-1] * vs[:-2, 1:-1]
                + c_e2[1:-1, 1:-1] * vs[1:-1, 2:]
                + c_w2[1:-1, 1:-1] * vs[1:-1, :-2]
            )
            if c_x != 0.0:
                out += c_x * (vs[2:, 2:] + vs[:-2, :-2] - vs[2:, :-2] - vs[:-2, 2:])
            return out

        def explicit_part(vs):
            return nb_sum(vs) + (c_c - r) * vs[1:-1, 1:-1]

        def interior(arr):
            return arr[1:-1, 1:-1]

        def set_faces(vs, fs):
            vs[0, :] = fs[0, :]
            vs[-1, :] = fs[-1, :]
            vs[:, 0] = fs[:, 0]
            vs[:, -1] = fs[:, -1]

        i_idx = np.arange(shape[0] - 2)[:, None]
        j_idx = np.arange(shape[1] - 2)[None, :]
        red_black = [
            ((i_idx % 2 == pi) & (j_idx % 2 == pj)) for pi in (0, 1) for pj in (0, 1)
        ]

    diag_int = interior(np.broadcast_to(diag, shape).copy()) if np.ndim(diag) else diag

    g_end = np.asarray(spec.terminal(mesh), dtype=float)
    f_end = np.asarray(spec.obstacle(grid.t[-1], mesh), dtype=float)
    v[-1] = g_end
    w[-1] = g_end - f_end
    f_scale = float(np.abs(f_end).max())

    h_next = np.asarray(spec.running(grid.t[-1], mesh), dtype=float)
    v_next = v[-1]
    for i in range(nt - 2, -1, -1):
        t_i = grid.t[i]
        f_i = np.asarray(spec.obstacle(t_i, mesh), dtype=float)
        h_i = np.asarray(spec.running(t_i, mesh), dtype=float)
        f_scale = max(f_scale, float(np.abs(f_i).max()))
        rhs = interior(v_next) / dt + theta * interior(h_i) + (1 - theta) * interior(h_next)
        if theta < 1.0:
            rhs = rhs + (1 - theta) * explicit_part(v_next)

        vs = v_next.copy()
        set_faces(vs, f_i)
        np.maximum(vs, f_i, out=vs)
        f_int = interior(f_i)

        converged = False
        for sweep in range(1, max_sweeps + 1):
            if spec.dim == 1:
                n = vs.size
                for start in (1, 2):
                    idx = np.arange(start, n - 1, 2)
                    num = rhs[idx - 1] + theta * (
                        c_e[idx] * vs[idx + 1] + c_w[idx] * vs[idx - 1]
                    )
                    cand = (1 - omega) * vs[idx] + omega * num / (
                        diag[idx] if np.ndim(diag) else diag
                    )
                    vs[idx] = np.maximum(f_i[idx], cand)
                nbs = theta * nb_sum(vs)
                res = _lcp_residual(
                    diag[1:-1] if np.ndim(diag) else diag, nbs, rhs, vs[1:-1], f_int
                )
            else:
                vi_view = vs[1:-1, 1:-1]
                for mask in red_black:
                    nbs = theta * nb_sum(vs)
                    num = rhs + nbs
                    cand = (1 - omega) * vi_view + omega * num / diag_int
                    vi_view[mask] = np.maximum(interior(f_i)[mask], cand[mask])
                nbs = theta * nb_sum(vs)
                res = _lcp_residual(diag_int, nbs, rhs, vi_view, f_int)
            if res < tol:
                converged = True
                sweeps_used[i] = sweep
                final_residuals[i] = res
                break
        if not converged:
            raise SolverError(
                f"projected SOR did not converge on slice {i} "
                f"(t={t_i:.6g}): residual {res:.3e} after {max_sweeps} sweeps"
            )
        v[i] = vs
        w[i] = vs - f_i
        v_next = vs
        h_next = h_i

    surface = ValueSurface(
        grid=grid,
        spec=spec,
        v=v,
        w=w,
        theta=theta,
        omega=omega,
        sweeps=sweeps_used,
        residuals=final_residuals,
        f_scale=f_scale,
    )
    _warn_faces(surface)
    return surface


def _warn_faces(surface: ValueSurface) -> None:
    """Flag box faces whose neighbouring interior layer looks like continuation."""
    w = surface.w
    w_max = float(w.max())
    thresh = max(1e-6 * w_max, 1e-9)
    names = []
    if surface.grid.dim == 1:
        layers = {"x1-low": w[:, 1], "x1-high": w[:, -2]}
    else:
        layers = {
            "x1-low": w[:, 1, :],
            "x1-high": w[:, -2, :],
            "x2-low": w[:, :, 1],
            "x2-high": w[:, :, -2],
        }
    for name, layer in layers.items():
        if float(layer.max()) > thresh:
            names.append(name)
    surface.face_warnings = names
    if names:
        warnings.warn(
            "lateral faces clamped to the stop reward appear to sit in the "
            f"continuation region: {', '.join(names)}; consider widening the box",
            RuntimeWarning,
        )


def _node_time_derivative(arr: np.ndarray, it: int, dt: float) -> np.ndarray:
    if it == 0:
        return (arr[1] - arr[0]) / dt
    if it == arr.shape[0] - 1:
        return (arr[-1] - arr[-2]) / dt
    return (arr[it + 1] - arr[it - 1]) / (2 * dt)


def fd_derivatives(
    surface: ValueSurface, t: float, x, field_name: str = "v"
) -> tuple[float, np.ndarray]:
    """Time derivative and spatial gradient of the solved surface at (t, x).

    Space uses central differences (the probe must sit at least one node away
    from every spatial face), time uses one-sided differences at the two ends
    of the axis.  Off-node probes are interpolated multilinearly from the
    nodal derivative values.
    """
    grid = surface.grid
    arr = surface.v if field_name == "v" else surface.w
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != grid.dim:
        raise ParameterError(f"probe must have {grid.dim} coordinates")
    for k, ax in enumerate(grid.axes):
        if not (ax[1] <= x[k] <= ax[-2]):
            raise ParameterError(
                f"probe coordinate x{k + 1}={x[k]:.6g} is too close to the "
                "spatial box edge for central differences"
            )
    if not (grid.t[0] <= t <= grid.t[-1] + 1e-12):
        raise ParameterError("probe time is outside the grid")

    it, wt = surface._locate(grid.t, float(t))
    locs = [surface._locate(ax, float(c)) for ax, c in zip(grid.axes, x)]
    dxs = grid.dx

    dt_val = 0.0
    grad = np.zeros(grid.dim)
    for bt in (0, 1):
        t_weight = (1 - wt) if bt == 0 else wt
        if t_weight == 0.0:
            continue
        slab_dt = _node_time_derivative(arr, it + bt, grid.dt)
        slab = arr[it + bt]
        for corner in range(2 ** grid.dim):
            weight = t_weight
            idx = []
            for k, (ik, wk) in enumerate(locs):
                bk = (corner >> k) & 1
                weight *= (1 - wk) if bk == 0 else wk
                idx.append(ik + bk)
            if weight == 0.0:
                continue
            idx = tuple(idx)
            dt_val += weight * float(slab_dt[idx])
            for k in range(grid.dim):
                up = idx[:k] + (idx[k] + 1,) + idx[k + 1 :]
                dn = idx[:k] + (idx[k] - 1,) + idx[k + 1 :]
                grad[k] += weight * (float(slab[up]) - float(slab[dn])) / (2 * dxs[k])
    return dt_val, grad


def classify_regions(surface: ValueSurface, tol: Optional[float] = None) -> np.ndarray:
    """Boolean stopping mask over all nodes: True where w <= tol."""
    if tol is None:
        tol = 1e-9 * (1.0 + surface.f_scale)
    return surface.w <= tol
