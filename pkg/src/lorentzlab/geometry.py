"""Chart-level Lorentzian geometry on rectangular grids.

A SpacetimeSpec holds a 2D chart: coordinate names (time first), a
rectangular domain, and the three metric component expressions of a
symmetric bilinear form

    g = g_tt dt^2 + 2 g_tx dt dx + g_xx dx^2.

Signature convention is (-, +): timelike vectors have g(v, v) < 0.
Chart time must be future-oriented, so g_tt < 0 is required everywhere;
we additionally require g_xx > 0 so constant-t slices are spacelike
(every construction downstream slices the grid by t).

GridSpacetime samples the metric and its inverse on a uniform lattice
and is immutable after construction.  Gradients of scalar fields use
central differences in the interior and one-sided differences on the
boundary; index raising goes through the cached inverse metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exprs import Expr, Num, eval_expr, free_vars, pretty

EPS_NULL = 1e-9  # relative half-width of the null band in classify_vector
INVERSE_TOL = 1e-10  # max |g . g^-1 - id| allowed at any node


class DomainError(ValueError):
    pass


class SignatureError(ValueError):
    """Metric fails the Lorentzian checks somewhere; names the point."""

    def __init__(self, message, point=None):
        if point:
            where = ", ".join(f"{k}={v:.6g}" for k, v in point.items())
            message = f"{message} at ({where})"
        super().__init__(message)
        self.point = point or {}


@dataclass(frozen=True)
class SpacetimeSpec:
    """Symbolic chart: names, rectangular domain, metric components."""

    name: str
    coords: tuple  # (time_name, space_name)
    domain: tuple  # ((t_lo, t_hi), (x_lo, x_hi))
    g_tt: Expr
    g_tx: Expr
    g_xx: Expr
    time_orientation: int = 1  # +1: increasing chart time is the future

    def __post_init__(self):
        if len(self.coords) != 2 or self.coords[0] == self.coords[1]:
            raise ValueError("exactly two distinct coordinates required")
        for (lo, hi), cname in zip(self.domain, self.coords):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"domain of {cname} must be a finite interval")
        allowed = set(self.coords)
        for label, expr in (("g_tt", self.g_tt), ("g_tx", self.g_tx), ("g_xx", self.g_xx)):
            extra = free_vars(expr) - allowed
            if extra:
                raise ValueError(f"{label} references unknown names: {sorted(extra)}")
        if self.time_orientation not in (1, -1):
            raise ValueError("time_orientation must be +1 or -1")

    def contains(self, t, x):
        (tlo, thi), (xlo, xhi) = self.domain
        return (tlo <= t <= thi) and (xlo <= x <= xhi)

    def components_at(self, t, x):
        """Evaluate (g_tt, g_tx, g_xx) without signature checks."""
        bind = {self.coords[0]: t, self.coords[1]: x}
        return (
            eval_expr(self.g_tt, bind),
            eval_expr(self.g_tx, bind),
            eval_expr(self.g_xx, bind),
        )

    def describe(self):
        return {
            "name": self.name,
            "coords": list(self.coords),
            "domain": [list(self.domain[0]), list(self.domain[1])],
            "g_tt": pretty(self.g_tt),
            "g_tx": pretty(self.g_tx),
            "g_xx": pretty(self.g_xx),
        }


def metric_at(spec, t, x):
    """2x2 metric matrix at an in-domain point, signature checked."""
    if not spec.contains(t, x):
        raise DomainError(
            f"point ({t:.6g}, {x:.6g}) outside the domain of {spec.name!r}"
        )
    tt, tx, xx = spec.components_at(t, x)
    _check_signature(
        np.asarray(tt, float), np.asarray(tx, float), np.asarray(xx, float),
        {spec.coords[0]: t, spec.coords[1]: x},
    )
    return np.array([[tt, tx], [tx, xx]], dtype=float)


def _check_signature(tt, tx, xx, point_or_grid):
    """Raise SignatureError where the chart is not Lorentzian.

    point_or_grid is either a {name: value} dict (scalar case) or a
    callable mapping a flat index mask to the first offending point.
    """
    det = tt * xx - tx * tx
    ok = np.isfinite(tt) & np.isfinite(tx) & np.isfinite(xx)
    problems = (
        (~ok, "metric component not finite"),
        (ok & (det >= 0), "det(g) must be negative"),
        (ok & (tt >= 0), "g(dt, dt) must be negative (chart time not timelike)"),
        (ok & (xx <= 0), "g(dx, dx) must be positive (t-slices not spacelike)"),
    )
    for bad, message in problems:
        if np.any(bad):
            if callable(point_or_grid):
                raise SignatureError(message, point_or_grid(np.asarray(bad)))
            raise SignatureError(message, point_or_grid)


def classify_vector(metric, v, eps=EPS_NULL):
    """Causal character of a tangent vector under a 2x2 metric.

    Returns one of "timelike", "lightlike", "spacelike", "zero".  The
    null cone is thickened to |g(v,v)| <= eps * |v|^2 (Euclidean norm)
    so the test is invariant under scaling of v.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (2,):
        raise ValueError("expected a 2-component vector")
    norm2 = float(v @ v)
    if norm2 == 0.0:
        return "zero"
    q = float(v @ np.asarray(metric, dtype=float) @ v)
    band = eps * norm2
    if abs(q) <= band:
        return "lightlike"
    return "timelike" if q < 0 else "spacelike"


def _axis_values(lo, hi, step):
    n = int(round((hi - lo) / step))
    if abs(lo + n * step - hi) > 1e-9 * max(1.0, abs(hi)):
        n = int(np.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(n + 1)


class GridSpacetime:
    """Uniform lattice with cached metric data.  Immutable once built."""

    def __init__(self, spec, spacing, periodic_x=False, excluded=None):
        if np.isscalar(spacing):
            spacing = (float(spacing), float(spacing))
        ht, hx = (float(spacing[0]), float(spacing[1]))
        if ht <= 0 or hx <= 0:
            raise ValueError("grid spacing must be positive")
        self.spec = spec
        self.ht = ht
        self.hx = hx
        self.periodic_x = bool(periodic_x)
        self.excluded_region = excluded

        (tlo, thi), (xlo, xhi) = spec.domain
        self.t_vals = _axis_values(tlo, thi, ht)
        self.x_vals = _axis_values(xlo, xhi, hx)
        self.nt = len(self.t_vals)
        self.nx = len(self.x_vals)
        if self.nt < 8 or self.nx < 8:
            raise ValueError(
                f"need at least 8 nodes per axis, got {self.nt} x {self.nx}"
            )

        tmesh, xmesh = np.meshgrid(self.t_vals, self.x_vals, indexing="ij")
        self.t_mesh = tmesh
        self.x_mesh = xmesh

        if excluded is not None:
            mask = np.asarray(excluded(tmesh, xmesh), dtype=bool)
            if mask.shape != tmesh.shape:
                raise ValueError("excluded predicate must broadcast over the mesh")
        else:
            mask = np.zeros(tmesh.shape, dtype=bool)
        self.mask = mask  # True = node removed from the chart

        bind = {spec.coords[0]: tmesh, spec.coords[1]: xmesh}
        tt = np.broadcast_to(np.asarray(eval_expr(spec.g_tt, bind), float), tmesh.shape)
        tx = np.broadcast_to(np.asarray(eval_expr(spec.g_tx, bind), float), tmesh.shape)
        xx = np.broadcast_to(np.asarray(eval_expr(spec.g_xx, bind), float), tmesh.shape)

        def first_bad(bad):
            live = bad & ~mask
            if not np.any(live):
                return {}
            it, ix = np.unravel_index(np.flatnonzero(live.ravel())[0], live.shape)
            return {
                spec.coords[0]: float(self.t_vals[it]),
                spec.coords[1]: float(self.x_vals[ix]),
            }

        live = ~mask
        tt_chk = np.where(live, tt, -1.0)
        tx_chk = np.where(live, tx, 0.0)
        xx_chk = np.where(live, xx, 1.0)
        _check_signature(tt_chk, tx_chk, xx_chk, first_bad)

        metric = np.empty(tmesh.shape + (2, 2))
        metric[..., 0, 0] = tt
        metric[..., 0, 1] = tx
        metric[..., 1, 0] = tx
        metric[..., 1, 1] = xx
        det = tt * xx - tx * tx
        inv = np.empty_like(metric)
        inv[..., 0, 0] = xx / det
        inv[..., 0, 1] = -tx / det
        inv[..., 1, 0] = -tx / det
        inv[..., 1, 1] = tt / det
        self.metric = metric
        self.inv_metric = inv

        ident = np.einsum("...ij,...jk->...ik", metric, inv)
        err = np.abs(ident - np.eye(2))
        err[mask] = 0.0
        worst = float(err.max())
        if worst > INVERSE_TOL:
            raise SignatureError(f"metric inverse check failed ({worst:.3e})")

        boundary = np.zeros(tmesh.shape, dtype=bool)
        boundary[0, :] = True
        boundary[-1, :] = True
        if not self.periodic_x:
            boundary[:, 0] = True
            boundary[:, -1] = True
        near_mask = mask.copy()
        near_mask[1:, :] |= mask[:-1, :]
        near_mask[:-1, :] |= mask[1:, :]
        near_mask[:, 1:] |= mask[:, :-1]
        near_mask[:, :-1] |= mask[:, 1:]
        self.boundary = boundary
        self.interior = ~boundary & ~near_mask

        area = np.full(tmesh.shape, ht * hx)
        wt = np.ones(self.nt)
        wt[0] = wt[-1] = 0.5
        wx = np.ones(self.nx)
        if not self.periodic_x:
            wx[0] = wx[-1] = 0.5
        area *= wt[:, None] * wx[None, :]
        area[mask] = 0.0
        self.cell_area = area

        for arr in (
            self.t_vals, self.x_vals, self.t_mesh, self.x_mesh, self.mask,
            self.metric, self.inv_metric, self.boundary, self.interior,
            self.cell_area,
        ):
            arr.setflags(write=False)

    @property
    def shape(self):
        return (self.nt, self.nx)

    def level_index(self, t):
        """Index of the t-row at chart time t (must sit on the lattice)."""
        k = int(round((t - self.t_vals[0]) / self.ht))
        if k < 0 or k >= self.nt or abs(self.t_vals[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise DomainError(f"t={t:.6g} is not a lattice level of this grid")
        return k

    def nearest_node(self, t, x):
        """Snap a chart point to the nearest unmasked node.

        Returns ((it, ix), snap_distance) with Euclidean chart distance.
        """
        if not self.spec.contains(t, x):
            raise DomainError(f"point ({t:.6g}, {x:.6g}) outside the chart domain")
        it = int(np.clip(round((t - self.t_vals[0]) / self.ht), 0, self.nt - 1))
        ix = int(np.clip(round((x - self.x_vals[0]) / self.hx), 0, self.nx - 1))
        if self.mask[it, ix]:
            live = np.argwhere(~self.mask)
            d2 = (self.t_vals[live[:, 0]] - t) ** 2 + (self.x_vals[live[:, 1]] - x) ** 2
            it, ix = map(int, live[int(np.argmin(d2))])
        dist = float(np.hypot(self.t_vals[it] - t, self.x_vals[ix] - x))
        return (it, ix), dist

    def point_of(self, node):
        it, ix = node
        return float(self.t_vals[it]), float(self.x_vals[ix])


@dataclass(frozen=True)
class ScalarField:
    """Node-sampled scalar; values at masked nodes are ignored."""

    grid: GridSpacetime
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError("field shape does not match the grid")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid, fn):
        return cls(grid, np.asarray(fn(grid.t_mesh, grid.x_mesh), dtype=float))

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.shape, float(value)))


def partial_derivatives(grid, values):
    """(d/dt, d/dx) of a node array: central interior, one-sided edges."""
    values = np.asarray(values, dtype=float)
    dt = np.empty_like(values)
    dx = np.empty_like(values)
    dt[1:-1, :] = (values[2:, :] - values[:-2, :]) / (2 * grid.ht)
    dt[0, :] = (values[1, :] - values[0, :]) / grid.ht
    dt[-1, :] = (values[-1, :] - values[-2, :]) / grid.ht
    if grid.periodic_x:
        dx[:, :] = (np.roll(values, -1, axis=1) - np.roll(values, 1, axis=1)) / (
            2 * grid.hx
        )
    else:
        dx[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2 * grid.hx)
        dx[:, 0] = (values[:, 1] - values[:, 0]) / grid.hx
        dx[:, -1] = (values[:, -1] - values[:, -2]) / grid.hx
    return dt, dx


def gradient(field):
    """Index-raised gradient: components (nt, nx, 2) of g^{ab} d_b f."""
    dt, dx = partial_derivatives(field.grid, field.values)
    cov = np.stack([dt, dx], axis=-1)
    return np.einsum("...ab,...b->...a", field.grid.inv_metric, cov)


def lorentz_square_of_gradient(field):
    """g(grad f, grad f) nodewise, computed on the covector side."""
    dt, dx = partial_derivatives(field.grid, field.values)
    inv = field.grid.inv_metric
    return (
        inv[..., 0, 0] * dt * dt
        + 2 * inv[..., 0, 1] * dt * dx
        + inv[..., 1, 1] * dx * dx
    )


def lorentz_square_of_vector(grid, vec):
    """g(v, v) for a node-sampled vector field of shape (nt, nx, 2)."""
    return np.einsum("...a,...ab,...b->...", vec, grid.metric, vec)
