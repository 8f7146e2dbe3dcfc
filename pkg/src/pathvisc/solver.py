"""Monotone explicit solver for ``du = F(D^2u, Du, u, x) dt + (g^{-1}(x) Du, Du) dxi``.

The spatial domain is a periodic box in one or two dimensions.  Each time
slice between consecutive signal breakpoints (and output times) is advanced by
Lie splitting: first the ``dt`` part with an explicit monotone step for ``F``,
then the ``dxi`` part with a global Lax-Friedrichs step using the slice's
constant ``xi'``.  Both sub-steps are monotone under their CFL limits, which
are enforced by automatic substepping.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from ._backend import kernels
from .errors import CFLFailure
from .signals import Modulus

__all__ = [
    "Grid",
    "GridFunction",
    "Control",
    "FSpec",
    "Trajectory",
    "IsaacsCheck",
    "step_hamiltonian",
    "step_F",
    "solve",
    "hopf_lax_flat",
    "isaacs_condition_check",
    "metric_on_grid",
]

TWO_PI = 2.0 * math.pi
MAX_SUBSTEPS = 10_000_000


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``points`` nodes per axis on ``[origin, origin + period)``."""

    dim: int
    points: int
    period: float = TWO_PI
    origin: float = 0.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("only dimensions 1 and 2 are supported")
        if self.points < 3:
            raise ValueError("need at least 3 points per axis")
        if not self.period > 0:
            raise ValueError("period must be positive")

    @property
    def h(self):
        return self.period / self.points

    @property
    def shape(self):
        return (self.points,) * self.dim

    @property
    def axis(self):
        return self.origin + self.h * np.arange(self.points)

    def nodes(self):
        """Node coordinates with shape ``shape + (dim,)``."""
        ax = self.axis
        if self.dim == 1:
            return ax[:, None]
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([X, Y], axis=-1)

    def refined(self, factor=2):
        return Grid(self.dim, self.points * factor, self.period, self.origin)

    def function(self, fn, time=0.0):
        """Sample ``fn(points)`` (points of shape ``(..., dim)``) into a GridFunction."""
        return GridFunction(self, np.asarray(fn(self.nodes()), float).reshape(self.shape), time)


@dataclass
class GridFunction:
    """Nodal values of ``u(., t)`` on a periodic grid."""

    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values must have shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        self.values = v

    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    def lipschitz(self):
        """Largest one-sided difference quotient over all axes."""
        h = self.grid.h
        return max(float(np.max(np.abs(np.diff(self.values, axis=k, append=np.take(self.values, [0], axis=k))))) / h
                   for k in range(self.grid.dim))

    def copy(self, values=None, time=None):
        return GridFunction(self.grid, self.values.copy() if values is None else values,
                            self.time if time is None else time)

    def to_csv(self, path):
        nodes = self.grid.nodes().reshape(-1, self.grid.dim)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(self.grid.dim)] + ["value"])
            for p, v in zip(nodes, self.values.ravel()):
                w.writerow([repr(float(c)) for c in p] + [repr(float(v))])


def metric_on_grid(metric, grid):
    """``g^{-1}`` at the nodes: ``(ginv,)`` in 1-D, ``(g11, g12, g22)`` in 2-D."""
    if metric.dim != grid.dim:
        raise ValueError("metric and grid dimensions differ")
    gi = metric.ginv(grid.nodes())
    if grid.dim == 1:
        return (np.ascontiguousarray(gi[..., 0, 0]),)
    return tuple(np.ascontiguousarray(gi[..., i, j]) for i, j in ((0, 0), (0, 1), (1, 1)))


# ---------------------------------------------------------------------------
# the second-order part


def _field(value, nodes, tail):
    """Evaluate a constant or a callable of node coordinates, broadcast to the grid."""
    v = value(nodes) if callable(value) else np.asarray(value, float)
    return np.broadcast_to(v, nodes.shape[:-1] + tail)


@dataclass(frozen=True)
class Control:
    """One ``(alpha, beta)`` member of an Isaacs family.

    Contributes ``tr(sigma sigma^T(x) M) + drift(x) . p + source(x) - c(x) r``.
    Each field is a constant or a callable of points with shape ``(..., N)``.
    """

    sigma: object = 0.0
    drift: object = 0.0
    source: object = 0.0
    c: object = 0.0

    def fields(self, nodes, dim):
        s = _field(self.sigma, nodes, (dim, dim)) if np.ndim(self.sigma) or callable(self.sigma) \
            else np.broadcast_to(float(self.sigma) * np.eye(dim), nodes.shape[:-1] + (dim, dim))
        a = np.einsum("...ik,...jk->...ij", s, s)
        b = _field(self.drift, nodes, (dim,)) if np.ndim(self.drift) or callable(self.drift) \
            else np.broadcast_to(np.full(dim, float(self.drift)), nodes.shape[:-1] + (dim,))
        return a, b, _field(self.source, nodes, ()), _field(self.c, nodes, ())

    def sigma_at(self, x, dim):
        if callable(self.sigma):
            return np.asarray(self.sigma(np.asarray(x, float)), float)
        s = np.asarray(self.sigma, float)
        return s if s.ndim == 2 else float(s) * np.eye(dim)

    def drift_at(self, x, dim):
        if callable(self.drift):
            return np.asarray(self.drift(np.asarray(x, float)), float)
        d = np.asarray(self.drift, float)
        return d if d.ndim == 1 else np.full(dim, float(d))

    def scalar_at(self, name, x):
        v = getattr(self, name)
        return float(v(np.asarray(x, float))) if callable(v) else float(v)


@dataclass(frozen=True)
class FSpec:
    """The ``dt`` part of the equation.

    Parameters
    ----------
    kind : {"zero", "linear_diffusion", "isaacs"}
    a, nu : diffusion matrix (constant or callable) and scale for
        ``F = nu tr(a M) - rho r``.
    controls : list of lists of Control
        Isaacs family; ``F = inf_alpha sup_beta`` over ``controls[alpha][beta]``.
    rho : monotonicity constant.
    F_modulus : Modulus for the doubled-variable continuity condition.
    L_lip : Lipschitz constant in ``r``.
    """

    kind: str = "zero"
    a: object = None
    nu: float = 1.0
    controls: tuple = ()
    rho: float = 0.0
    F_modulus: Modulus = field(default_factory=lambda: Modulus(0.0, 0.0))
    L_lip: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "linear_diffusion", "isaacs"):
            raise ValueError(f"unknown F kind {self.kind!r}")
        if self.kind == "linear_diffusion" and self.a is None:
            raise ValueError("linear_diffusion needs a diffusion matrix")
        if self.kind == "isaacs":
            ctr = tuple(tuple(row) for row in self.controls)
            if not ctr or not all(ctr):
                raise ValueError("isaacs needs a nonempty family of controls")
            object.__setattr__(self, "controls", ctr)
        if self.kind != "zero" and self.nu < 0:
            raise ValueError("nu must be nonnegative")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def linear_diffusion(cls, a, nu=1.0, rho=1.0, F_modulus=None):
        return cls("linear_diffusion", a=a, nu=nu, rho=rho, L_lip=rho,
                   F_modulus=Modulus(0.0, 0.0) if F_modulus is None else F_modulus)

    @classmethod
    def isaacs(cls, controls, rho=None, F_modulus=None, L_lip=None):
        return cls("isaacs", controls=controls, rho=0.0 if rho is None else rho,
                   F_modulus=Modulus(0.0, 0.0) if F_modulus is None else F_modulus,
                   L_lip=0.0 if L_lip is None else L_lip)

    def members(self, nodes, dim):
        """``[[(a, b, source, c), ...], ...]`` evaluated at the nodes."""
        if self.kind == "linear_diffusion":
            a = self.nu * _field(self.a, nodes, (dim, dim))
            z = np.zeros(nodes.shape[:-1])
            b = np.zeros(nodes.shape[:-1] + (dim,))
            return [[(a, b, z, np.full(nodes.shape[:-1], float(self.rho)))]]
        if self.kind == "isaacs":
            return [[c.fields(nodes, dim) for c in row] for row in self.controls]
        return []

    def F_sup(self, grid):
        """``sup_x |F(0, 0, 0, x)|`` over the grid nodes."""
        if self.kind != "isaacs":
            return 0.0
        nodes = grid.nodes()
        vals = [np.max(np.stack([m[2] for m in row]), axis=0)
                for row in self.members(nodes, grid.dim)]
        return float(np.max(np.abs(np.min(np.stack(vals), axis=0))))


def _shift(u, k, axis):
    return np.roll(u, -k, axis=axis)


def _second_order(u, a, h, dim):
    """Monotone discretization of ``tr(a D^2 u)``; returns ``(Lu, center_weight)``."""
    if dim == 1:
        a11 = a[..., 0, 0]
        lap = (_shift(u, 1, 0) - 2 * u + _shift(u, -1, 0)) / (h * h)
        return a11 * lap, 2 * a11 / (h * h)
    a11, a12, a22 = a[..., 0, 0], a[..., 0, 1], a[..., 1, 1]
    up = lambda i, j: np.roll(np.roll(u, -i, axis=0), -j, axis=1)  # noqa: E731
    dxx = (up(1, 0) - 2 * u + up(-1, 0)) / (h * h)
    dyy = (up(0, 1) - 2 * u + up(0, -1)) / (h * h)
    # seven-point cross derivative, oriented by the sign of a12
    pos = (up(1, 1) - up(1, 0) - up(0, 1) + 2 * u - up(-1, 0) - up(0, -1) + up(-1, -1)) / (2 * h * h)
    neg = -(up(1, -1) - up(1, 0) - up(0, -1) + 2 * u - up(-1, 0) - up(0, 1) + up(-1, 1)) / (2 * h * h)
    dxy = np.where(a12 >= 0, pos, neg)
    center = (2 * a11 + 2 * a22 - 2 * np.abs(a12)) / (h * h)
    return a11 * dxx + a22 * dyy + 2 * a12 * dxy, center


def _first_order(u, b, h, dim):
    """Upwind ``b . Du``; returns ``(value, center_weight)``."""
    val = np.zeros_like(u)
    center = np.zeros_like(u)
    for k in range(dim):
        bk = b[..., k]
        fwd = (_shift(u, 1, k) - u) / h
        bwd = (u - _shift(u, -1, k)) / h
        val += np.where(bk > 0, bk * fwd, bk * bwd)
        center += np.abs(bk) / h
    return val, center


def _check_diag_dominance(a, dim):
    if dim == 2 and np.any(np.abs(a[..., 0, 1]) > np.minimum(a[..., 0, 0], a[..., 1, 1]) + 1e-14):
        raise ValueError("seven-point stencil needs a11, a22 >= |a12| for monotonicity")


def step_F(u, f, t, dt, max_substeps=MAX_SUBSTEPS):
    """Advance ``u_t = F(D^2u, Du, u, x)`` by ``dt`` with explicit monotone substeps.

    When every member shares one constant ``c`` the zeroth-order term is applied
    exactly as ``exp(-c dt)``; otherwise it is part of the explicit step.
    """
    if f.kind == "zero" or dt <= 0:
        return u.copy(time=u.time + max(dt, 0.0))
    grid = u.grid
    h, dim = grid.h, grid.dim
    nodes = grid.nodes()
    members = f.members(nodes, dim)
    cs = np.array([np.asarray(m[3]) for row in members for m in row])
    c_const = bool(np.all(cs == cs.flat[0]))
    c0 = float(cs.flat[0]) if c_const else 0.0
    weight = 0.0
    for row in members:
        for a, b, _, c in row:
            _check_diag_dominance(a, dim)
            d2w = _second_order(np.zeros(grid.shape), a, h, dim)[1]
            d1w = _first_order(np.zeros(grid.shape), b, h, dim)[1]
            wmax = d2w + d1w + (0.0 if c_const else np.maximum(np.asarray(c), 0.0))
            weight = max(weight, float(np.max(wmax)))
    # explicit monotone limit, with the parabolic bound dt * 2N |a| / h^2 <= 1/2 built in
    dt_sub = dt if weight == 0.0 else min(dt, 0.5 / weight)
    n = int(math.ceil(dt / dt_sub - 1e-12))
    if n > max_substeps:
        raise CFLFailure(f"step_F needs {n} substeps (cap {max_substeps})")
    dt_sub = dt / n
    v = u.values.copy()
    for _ in range(n):
        rows = []
        for row in members:
            vals = []
            for a, b, src, c in row:
                val = _second_order(v, a, h, dim)[0] + _first_order(v, b, h, dim)[0] + src
                if not c_const:
                    val = val - c * v
                vals.append(val)
            rows.append(np.max(np.stack(vals), axis=0))
        v = v + dt_sub * np.min(np.stack(rows), axis=0)
        if c_const and c0 != 0.0:
            v = v * math.exp(-c0 * dt_sub)
    return u.copy(values=v, time=u.time + dt)


# ---------------------------------------------------------------------------
# the first-order part


def step_hamiltonian(u, metric, xi_dot, dt, cfl=0.9, max_substeps=MAX_SUBSTEPS, ginv=None,
                     p_bound=0.0):
    """Advance ``u_t = xi' (g^{-1}(x) Du, Du)`` by ``dt`` with global Lax-Friedrichs.

    The dissipation coefficient ``sigma = 2 |xi'| max(g^{-1} |p|)`` is recomputed
    at every substep and the substep obeys ``dt sigma / h <= cfl``, which keeps the
    scheme monotone for either sign of ``xi'``.  Slopes below ``p_bound`` are
    raised to it; a ``p_bound`` above every difference quotient of the inputs
    fixes ``sigma``, so the step is order preserving across different inputs.

    Raises
    ------
    CFLFailure
        If more than ``max_substeps`` substeps are needed.
    """
    grid = u.grid
    if xi_dot == 0.0 or dt <= 0.0:
        return u.copy(time=u.time + max(dt, 0.0))
    g = metric_on_grid(metric, grid) if ginv is None else ginv
    vals = np.ascontiguousarray(u.values)
    if grid.dim == 1:
        out, n = kernels.lf_advance_1d(vals, g[0], float(xi_dot), float(dt), grid.h, cfl,
                                       max_substeps, float(p_bound))
    else:
        out, n = kernels.lf_advance_2d(vals, g[0], g[1], g[2], float(xi_dot), float(dt),
                                       grid.h, cfl, max_substeps, float(p_bound))
    if n < 0:
        raise CFLFailure(f"Lax-Friedrichs step needs more than {max_substeps} substeps")
    res = u.copy(values=np.asarray(out), time=u.time + dt)
    res.substeps = n
    return res


@dataclass
class Trajectory:
    """Snapshots at the requested output times plus per-slice diagnostics."""

    times: list
    snapshots: list
    diagnostics: list

    DIAG_FIELDS = ("t0", "t1", "xi_dot", "substeps_F", "substeps_H", "sup_norm", "lipschitz")

    @property
    def final(self):
        return self.snapshots[-1]

    def at(self, t, tol=1e-12):
        for s in self.snapshots:
            if abs(s.time - t) <= tol * max(1.0, abs(t)):
                return s
        raise KeyError(f"no snapshot at t = {t}")

    def write_diagnostics(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.DIAG_FIELDS)
            for d in self.diagnostics:
                w.writerow([repr(d[k]) if isinstance(d[k], float) else d[k] for k in self.DIAG_FIELDS])

    def write_snapshots(self, path, stride=1):
        g = self.snapshots[0].grid
        nodes = g.nodes().reshape(-1, g.dim)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time"] + [f"x{i}" for i in range(g.dim)] + ["value"])
            for s in self.snapshots[::stride]:
                for p, v in zip(nodes, s.values.ravel()):
                    w.writerow([repr(float(s.time))] + [repr(float(c)) for c in p] + [repr(float(v))])


def _slice_times(xi, T, output_times, dt_max):
    bp = xi.breakpoints
    pts = set(float(t) for t in bp[(bp > 0) & (bp < T)])
    pts.update(float(t) for t in output_times if 0 < t < T)
    pts.update((0.0, float(T)))
    knots = np.array(sorted(pts))
    # drop near-duplicates introduced by floating output times
    keep = np.concatenate([[True], np.diff(knots) > 1e-13 * max(1.0, T)])
    knots = knots[keep]
    knots[-1] = T
    if dt_max is None or not math.isfinite(dt_max):
        return knots
    out = [knots[0]]
    for a, b in zip(knots[:-1], knots[1:]):
        m = max(1, int(math.ceil((b - a) / dt_max - 1e-12)))
        out.extend(a + (b - a) * np.arange(1, m + 1) / m)
    out[-1] = T
    return np.array(out)


def solve(u0, metric, f, xi, T=None, dt_max=None, output_times=None, cfl=0.9,
          max_substeps=MAX_SUBSTEPS):
    """Solve on ``[0, T]`` by Lie splitting over slices between breakpoints.

    Parameters
    ----------
    dt_max : float, optional
        Largest slice length.  Defaults to no limit for ``F = 0`` and ``0.01``
        otherwise.
    output_times : sequence of float, optional
        Snapshot times in ``(0, T]``; ``0`` and ``T`` are always included.
    """
    T = xi.T if T is None else float(T)
    if T > xi.T + 1e-12:
        from .errors import HorizonMismatch
        raise HorizonMismatch(f"signal ends at {xi.T}, solve requested to {T}")
    if dt_max is None:
        dt_max = math.inf if f.kind == "zero" else 0.01
    output_times = [] if output_times is None else [float(t) for t in output_times]
    knots = _slice_times(xi, T, output_times, dt_max)
    wanted = sorted(set(output_times) | {T})
    ginv = metric_on_grid(metric, u0.grid)
    u = u0.copy(time=0.0)
    snaps = [u0.copy(time=0.0)]
    times = [0.0]
    diags = []
    wi = 0
    while wi < len(wanted) and wanted[wi] <= 0.0:
        wi += 1
    for a, b in zip(knots[:-1], knots[1:]):
        dt = float(b - a)
        slope = xi.slope_at(0.5 * (a + b))
        nF = 0
        if f.kind != "zero":
            u = step_F(u, f, a, dt, max_substeps)
            nF = 1
        u = step_hamiltonian(u, metric, slope, dt, cfl, max_substeps, ginv=ginv)
        u.time = float(b)
        diags.append({
            "t0": float(a), "t1": float(b), "xi_dot": float(slope), "substeps_F": nF,
            "substeps_H": int(getattr(u, "substeps", 0)),
            "sup_norm": u.sup_norm(), "lipschitz": u.lipschitz(),
        })
        while wi < len(wanted) and wanted[wi] <= b + 1e-12 * max(1.0, T):
            snaps.append(u.copy(time=wanted[wi]))
            times.append(wanted[wi])
            wi += 1
    return Trajectory(times, snaps, diags)


def hopf_lax_flat(u0, s):
    """``max_y (u0(y) - d(x, y)^2 / (4 s))`` with periodic minimum-image distance."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s == 0:
        return u0.copy()
    grid = u0.grid
    if grid.dim == 1:
        v = kernels.hopf_lax_1d(np.ascontiguousarray(u0.values), grid.h, grid.period, float(s))
        return u0.copy(values=np.asarray(v), time=u0.time + s)
    n = grid.points
    idx = np.arange(n)
    d = np.abs(idx[:, None] - idx[None, :]) * grid.h
    d = np.minimum(d, grid.period - d) ** 2
    vals = u0.values
    # separable: max over y2 first, then y1
    inner = np.max(vals[:, None, :] - d[None, :, :] / (4 * s), axis=2)   # [y1, x2]
    out = np.max(inner[None, :, :] - d[:, :, None] / (4 * s), axis=1)    # [x1, x2]
    return u0.copy(values=out, time=u0.time + s)


# ---------------------------------------------------------------------------
# the doubled-variable continuity condition


@dataclass
class IsaacsCheck:
    """Worst excess of the doubled-variable inequality over a capped-linear modulus.

    ``lhs`` uses the explicit admissible pair ``X = B11 - sI``, ``Y = sI - B22``;
    ``lhs_bound`` is the pair-independent upper bound
    ``max tr(S^T B S) + b(p, x) - b(q, y) + (c(y) - c(x)) r`` that the modulus
    must dominate.
    """

    worst_excess: float
    modulus: Modulus
    fitted: bool
    arguments: np.ndarray
    lhs: np.ndarray
    lhs_bound: np.ndarray
    lower_ok: bool = True


def _isaacs_value(f, Xm, p, r, x, dim):
    rows = []
    for row in f.controls:
        vals = []
        for ctl in row:
            s = ctl.sigma_at(x, dim)
            vals.append(float(np.trace(s @ s.T @ Xm)) + float(ctl.drift_at(x, dim) @ p)
                        + ctl.scalar_at("source", x) - ctl.scalar_at("c", x) * r)
        rows.append(max(vals))
    return min(rows)


def isaacs_condition_check(f, metric, xs, ys, alpha=1.0, eps=0.1, r_values=(0.0,),
                           modulus=None, options=geometry.DEFAULT_OPTIONS):
    """Evaluate the doubled-variable inequality for an Isaacs operator on sample pairs.

    With ``A = D^2 e_g`` and ``B = alpha A + eps A^2`` the check evaluates
    ``F(X, alpha D_x e, r, x) - F(Y, -alpha D_y e, r, y)`` and its upper bound,
    then compares against ``omega(alpha e + d + eps)``.  Without ``modulus``
    (and ``f.F_modulus`` zero) a capped-linear modulus is fitted to the bounds.
    """
    if f.kind != "isaacs":
        raise ValueError("isaacs_condition_check needs an isaacs FSpec")
    n = metric.dim
    args, lhs, bnd = [], [], []
    lower_ok = True
    for x, y in zip(xs, ys):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        gx, gy = geometry.grad_energy(metric, x, y, options)
        e = float(geometry.energy(metric, x, y, options))
        A = geometry.hessian_energy(metric, x, y, options)
        B = alpha * A + eps * A @ A
        s = float(np.linalg.norm(B[:n, n:], 2))
        Xm = B[:n, :n] - s * np.eye(n)
        Ym = s * np.eye(n) - B[n:, n:]
        floor = -(alpha ** 2 / eps + float(np.linalg.norm(A, 2)))
        lower_ok &= bool(np.linalg.eigvalsh(Xm)[0] >= floor - 1e-12 and np.linalg.eigvalsh(-Ym)[0] >= floor - 1e-12)
        p, q = alpha * gx, -alpha * gy
        for r in r_values:
            lhs.append(_isaacs_value(f, Xm, p, r, x, n) - _isaacs_value(f, Ym, q, r, y, n))
            best = -math.inf
            for row in f.controls:
                for ctl in row:
                    S = np.vstack([ctl.sigma_at(x, n), ctl.sigma_at(y, n)])
                    val = (float(np.trace(S.T @ B @ S)) + float(ctl.drift_at(x, n) @ p)
                           - float(ctl.drift_at(y, n) @ q)
                           + ctl.scalar_at("source", x) - ctl.scalar_at("source", y)
                           + (ctl.scalar_at("c", y) - ctl.scalar_at("c", x)) * r)
                    best = max(best, val)
            bnd.append(best)
            args.append(alpha * e + math.sqrt(max(e, 0.0)) + eps)
    args, lhs, bnd = np.array(args), np.array(lhs), np.array(bnd)
    given = modulus if modulus is not None else f.F_modulus
    fitted = False
    # bounds within roundoff of zero need no modulus
    tiny = 1e-12 * (1.0 + float(np.max(np.abs(bnd)))) if bnd.size else 0.0
    if modulus is None and given.lipschitz_L == 0.0 and given.cap_M == 0.0 and np.any(bnd > tiny):
        L = float(np.max(np.maximum(bnd, 0.0) / args))
        M = float(np.max(np.maximum(bnd, 0.0)))
        given, fitted = Modulus(L, M), True
    excess = float(np.max(bnd - given(args))) if bnd.size else 0.0
    if abs(excess) <= tiny:
        excess = 0.0
    return IsaacsCheck(excess, given, fitted, args, lhs, bnd, lower_ok)
