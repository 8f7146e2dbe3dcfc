"""End-to-end stability experiments built on the solver and the bound formulas.

Every experiment solves the two equations on the configured grid and on a
once-refined grid; the difference of the measured fields between the two
resolutions, doubled, is the scheme margin added to each theoretical bound.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import doubling, geometry, signals, solver
from .errors import EmptyGamma, SmallnessViolated
from .signals import Modulus, PathSignal

__all__ = [
    "InitialData",
    "ExperimentConfig",
    "StabilityReport",
    "CauchyTable",
    "UniformityTable",
    "certified_upsilon",
    "run_comparison_thm1",
    "run_comparison_thm2",
    "run_extension_cauchy",
    "cauchy_trend_fraction",
    "modulus_uniformity_probe",
    "write_reports",
]


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class InitialData:
    """Initial datum ``u0`` with its sup norm and its modulus in ``d_g``."""

    name: str
    fn: object
    modulus: Modulus
    sup_norm: float

    def __call__(self, pts):
        return self.fn(pts)

    @classmethod
    def sine(cls, amplitude=0.5, frequency=1.0, phase=0.0, axis=0, offset=0.0, ellipticity_c=1.0):
        """``offset + amplitude sin(frequency x_axis + phase)``."""
        a, f = float(amplitude), float(frequency)

        def fn(p):
            return offset + a * np.sin(f * p[..., axis] + phase)

        mod = Modulus.from_euclidean(abs(a * f), 2.0 * abs(a), ellipticity_c)
        return cls(f"sine({a!r},{f!r})", fn, mod, abs(offset) + abs(a))

    @classmethod
    def neg_abs(cls, center=0.0, period=2.0, ellipticity_c=1.0):
        """``-|x - center|`` periodized with minimum-image distance (1-D)."""

        def fn(p):
            d = np.abs(p[..., 0] - center) % period
            return -np.minimum(d, period - d)

        return cls("neg_abs", fn, Modulus.from_euclidean(1.0, period / 2.0, ellipticity_c), period / 2.0)

    @classmethod
    def constant(cls, value=0.0):
        v = float(value)
        return cls(f"constant({v!r})", lambda p: np.full(p.shape[:-1], v), Modulus(0.0, 0.0), abs(v))


@dataclass
class ExperimentConfig:
    """Everything an experiment needs; built directly or from an INI file."""

    metric: geometry.MetricField
    grid: solver.Grid
    u0: InitialData
    v0: InitialData
    xi: PathSignal = None
    zeta: PathSignal = None
    F: solver.FSpec = field(default_factory=solver.FSpec.zero)
    T: float = None
    output_count: int = 64
    dt_max: float = None
    upsilon: float = None
    margin_abs: float = 0.0
    refine: int = 2
    seed: int = 0
    levels: tuple = (3, 9)
    trend_from: int = 5
    gamma_grid: tuple = doubling.DEFAULT_GAMMA_GRID
    radius_grid: tuple = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
    probe_samples: int = 32
    name: str = "experiment"

    def __post_init__(self):
        if self.margin_abs < 0:
            raise ValueError("margins must be nonnegative")
        if self.refine < 2:
            raise ValueError("refine must be >= 2")
        if self.T is None:
            Ts = [s.T for s in (self.xi, self.zeta) if s is not None]
            self.T = min(Ts) if Ts else 1.0

    def output_times(self, *sigs):
        """Uniform snapshot times plus every breakpoint of the given signals."""
        t = set(np.linspace(0.0, self.T, self.output_count + 1)[1:].tolist())
        for s in sigs:
            if s is not None:
                b = s.breakpoints
                t.update(b[(b > 0) & (b <= self.T)].tolist())
        return sorted(t)


_UPSILON_CACHE = {}


def certified_upsilon(cfg):
    """``cfg.upsilon`` if given, else the probed radius (cached per metric object)."""
    if cfg.upsilon is not None:
        return float(cfg.upsilon)
    key = (id(cfg.metric), cfg.radius_grid, cfg.probe_samples, cfg.seed)
    if key not in _UPSILON_CACHE:
        rep = geometry.probe_injectivity(cfg.metric, cfg.probe_samples, cfg.radius_grid,
                                         seed=cfg.seed, hessian_samples=0)
        _UPSILON_CACHE[key] = rep.upsilon_estimate
    return _UPSILON_CACHE[key]


# ---------------------------------------------------------------------------
# reports


@dataclass
class StabilityReport:
    """Measured left-hand side against theorem bound plus scheme margin."""

    name: str
    measured_sup_gap: float
    theorem_bound: float
    scheme_margin: float
    metadata: dict = field(default_factory=dict)

    CSV_FIELDS = ("name", "measured_sup_gap", "theorem_bound", "scheme_margin", "pass")

    @property
    def passed(self):
        b = self.theorem_bound + self.scheme_margin
        return bool(math.isfinite(self.measured_sup_gap) and self.measured_sup_gap <= b)

    def csv_row(self):
        return [self.name, repr(float(self.measured_sup_gap)), repr(float(self.theorem_bound)),
                repr(float(self.scheme_margin)), "PASS" if self.passed else "FAIL"]


def write_reports(path, reports):
    """One CSV row per report; metadata keys become extra columns."""
    extra = sorted({k for r in reports for k in r.metadata})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(StabilityReport.CSV_FIELDS) + extra)
        for r in reports:
            meta = [_fmt(r.metadata.get(k, "")) for k in extra]
            w.writerow(r.csv_row() + meta)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ---------------------------------------------------------------------------
# solving helpers


def _solve_stack(cfg, grid, u0, xi, times):
    """Snapshots of one solve at ``times``, stacked as ``(len(times) + 1, *shape)``."""
    g0 = grid.function(u0)
    tr = solver.solve(g0, cfg.metric, cfg.F, xi, cfg.T, cfg.dt_max, times)
    return np.stack([s.values for s in tr.snapshots])


def _coarsen(fine, refine, dim):
    sl = (slice(None),) + (slice(None, None, refine),) * dim
    return fine[sl]


def _gap_fields(cfg, grid, times):
    u = _solve_stack(cfg, grid, cfg.u0, cfg.xi, times)
    v = _solve_stack(cfg, grid, cfg.v0, cfg.zeta, times)
    return u - v


def _measure(cfg):
    times = cfg.output_times(cfg.xi, cfg.zeta)
    w = _gap_fields(cfg, cfg.grid, times)
    wf = _gap_fields(cfg, cfg.grid.refined(cfg.refine), times)
    margin = 2.0 * float(np.max(np.abs(w - _coarsen(wf, cfg.refine, cfg.grid.dim)))) + cfg.margin_abs
    return float(np.max(w)), margin


def _initial_gap(cfg):
    nodes = cfg.grid.refined(cfg.refine).nodes()
    return float(np.max(cfg.u0(nodes) - cfg.v0(nodes)))


def _require_signals(cfg):
    if cfg.xi is None or cfg.zeta is None:
        raise ValueError("comparison experiments need two signals")


# ---------------------------------------------------------------------------
# experiments


def run_comparison_thm1(cfg, strict=True):
    """First-order comparison: measured ``sup(u - v)`` against the theorem bound.

    With ``strict=False`` a smallness violation yields a failing report with an
    infinite bound instead of an exception.
    """
    _require_signals(cfg)
    if cfg.F.kind != "zero":
        raise ValueError("the first-order comparison needs F = zero")
    ups = certified_upsilon(cfg)
    dp, dm = signals.delta_pm(cfg.xi, cfg.zeta, cfg.T)
    sup0 = _initial_gap(cfg)
    meta = {"delta_plus": dp, "delta_minus": dm, "upsilon": ups,
            "lambda": math.inf if dp == 0 else 1.0 / dp}
    try:
        bound = doubling.rhs_bound_thm1(cfg.u0.modulus, cfg.v0.modulus, sup0, cfg.xi, cfg.zeta,
                                        cfg.T, cfg.u0.sup_norm, cfg.v0.sup_norm, ups)
    except SmallnessViolated as exc:
        if strict:
            raise
        meta["error"] = str(exc)
        bound = math.inf
        return StabilityReport(cfg.name, math.nan, bound, 0.0, meta)
    measured, margin = _measure(cfg)
    return StabilityReport(cfg.name, measured, bound, margin, meta)


def run_comparison_thm2(cfg, strict=True):
    """Second-order comparison with the ``dt`` part active."""
    _require_signals(cfg)
    ups = certified_upsilon(cfg)
    if not cfg.F.rho > 0:
        raise ValueError("the second-order comparison needs rho > 0")
    K = doubling.KConstant(cfg.F.rho, cfg.F.F_sup(cfg.grid), cfg.u0.sup_norm, cfg.v0.sup_norm)
    sup0 = _initial_gap(cfg)
    meta = {"K": K.K, "upsilon": ups}
    try:
        b = doubling.rhs_bound_thm2(K, cfg.u0.modulus, cfg.v0.modulus, cfg.F.F_modulus, cfg.xi,
                                    cfg.zeta, cfg.T, ups, cfg.gamma_grid, sup_gap=sup0)
    except EmptyGamma as exc:
        if strict:
            raise
        meta["error"] = str(exc)
        return StabilityReport(cfg.name, math.nan, math.inf, 0.0, meta)
    dp, dm = signals.delta_gamma_pm(cfg.xi, cfg.zeta, b.gamma, cfg.T) if math.isfinite(b.value) \
        else (math.nan, math.nan)
    meta.update({"gamma": b.gamma, "gamma_on_boundary": b.on_boundary,
                 "delta_gamma_plus": dp, "delta_gamma_minus": dm})
    measured, margin = _measure(cfg)
    return StabilityReport(cfg.name, measured, b.value, margin, meta)


@dataclass
class CauchyTable:
    """Pairwise differences of solutions driven by dyadic levels of one path.

    Each row is ``(n, m, D, s, delta_plus, delta_minus, bound, margin, ok)``
    where ``bound`` is ``inf`` when the smallness condition fails for the pair.
    """

    seed: int
    levels: tuple
    rows: list
    trend_from: int

    FIELDS = ("n", "m", "D", "s", "delta_plus", "delta_minus", "bound", "margin", "ok")

    def D(self, n, m):
        for r in self.rows:
            if (r[0], r[1]) in ((n, m), (m, n)):
                return r[2]
        raise KeyError((n, m))

    def consecutive(self):
        lo, hi = self.levels
        return [(n, self.D(n, n + 1)) for n in range(lo, hi)]

    @property
    def trend_ok(self):
        """``D_{n, n+1}`` nonincreasing for ``n >= trend_from``."""
        c = [d for n, d in self.consecutive() if n >= self.trend_from]
        return all(b <= a for a, b in zip(c, c[1:]))

    @property
    def bounds_ok(self):
        return all(r[8] for r in self.rows)

    @property
    def unbounded_pairs(self):
        return [(r[0], r[1]) for r in self.rows if not math.isfinite(r[6])]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.FIELDS)
            for r in self.rows:
                w.writerow([r[0], r[1]] + [repr(float(v)) for v in r[2:8]] + [int(r[8])])


def _two_sided_bound(w, dp, dm, s_norm, ups):
    """``max(theta(w, 1/D+), theta(w, 1/D-))`` if the smallness condition holds, else inf."""
    lhs = dp + dm
    rhs = math.inf if s_norm == 0 else ups ** 2 / (2.0 * s_norm)
    if not lhs < rhs:
        return math.inf
    t = [0.0 if d == 0.0 else signals.theta(w, 1.0 / d) for d in (dp, dm)]
    return max(t)


def run_extension_cauchy(cfg, seed=None, levels=None):
    """Solve with every dyadic level of one Brownian path and tabulate ``D_{n,m}``.

    ``D`` is the sup over the grid and over the finest level's breakpoints.
    Pairs violating the smallness condition get an infinite bound and are
    reported, not raised.
    """
    seed = cfg.seed if seed is None else seed
    lo, hi = cfg.levels if levels is None else levels
    T = cfg.T
    ups = certified_upsilon(cfg)
    paths = {n: signals.sample_brownian(T, n, seed) for n in range(lo, hi + 1)}
    times = np.linspace(0.0, T, 2 ** hi + 1)[1:].tolist()
    fields, errs = {}, {}
    fine = cfg.grid.refined(cfg.refine)
    for n, xi in paths.items():
        u = _solve_stack(cfg, cfg.grid, cfg.u0, xi, times)
        uf = _solve_stack(cfg, fine, cfg.u0, xi, times)
        fields[n] = u
        errs[n] = float(np.max(np.abs(u - _coarsen(uf, cfg.refine, cfg.grid.dim))))
    w = cfg.u0.modulus
    rows = []
    for n in range(lo, hi + 1):
        for m in range(n, hi + 1):
            D = float(np.max(np.abs(fields[n] - fields[m])))
            s = signals.sup_distance(paths[n], paths[m], T)
            dp, dm = signals.delta_pm(paths[n], paths[m], T)
            bound = 0.0 if n == m else _two_sided_bound(w, dp, dm, 2.0 * cfg.u0.sup_norm, ups)
            margin = 2.0 * (errs[n] + errs[m]) + cfg.margin_abs
            ok = (not math.isfinite(bound)) or D <= bound + margin
            rows.append((n, m, D, s, dp, dm, bound, margin, ok))
    return CauchyTable(seed, (lo, hi), rows, cfg.trend_from)


def cauchy_trend_fraction(cfg, seeds):
    """Fraction of seeds whose consecutive differences are nonincreasing."""
    tables = [run_extension_cauchy(cfg, seed=s) for s in seeds]
    return sum(t.trend_ok for t in tables) / len(tables), tables


@dataclass
class UniformityTable:
    """Largest Lipschitz estimate over time for each signal in a family."""

    names: list
    lipschitz: list
    initial_lipschitz: float
    per_time: list

    @property
    def spread(self):
        a = np.asarray(self.lipschitz)
        return float((a.max() - a.min()) / a.mean()) if a.size else 0.0

    def ok(self, tolerance=0.1):
        return self.spread <= tolerance

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["signal", "time", "lipschitz"])
            for name, rows in zip(self.names, self.per_time):
                for t, lip in rows:
                    w.writerow([name, repr(float(t)), repr(float(lip))])


def modulus_uniformity_probe(cfg, family):
    """Spatial Lipschitz estimates of ``u(., t)`` for each signal in ``family``.

    ``family`` is a sequence of ``(name, PathSignal)``.
    """
    g0 = cfg.grid.function(cfg.u0)
    names, lips, per_time = [], [], []
    for name, xi in family:
        tr = solver.solve(g0, cfg.metric, cfg.F, xi, cfg.T, cfg.dt_max)
        rows = [(0.0, g0.lipschitz())] + [(d["t1"], d["lipschitz"]) for d in tr.diagnostics]
        names.append(name)
        lips.append(max(r[1] for r in rows))
        per_time.append(rows)
    return UniformityTable(names, lips, g0.lipschitz(), per_time)


def with_signals(cfg, xi, zeta=None, **kw):
    """Copy of ``cfg`` with new signals (and any other field overrides)."""
    return replace(cfg, xi=xi, zeta=signals.zero_signal(xi.T) if zeta is None else zeta, **kw)
