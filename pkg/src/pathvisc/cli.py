"""Command-line front end: ``pathvisc VERB --config FILE [--out DIR] [--seed N]``.

Exit status is 0 when every check passes, 1 when any fails and 2 on a
configuration error.  The output directory defaults to ``$PATHVISC_OUT`` or
``./out``.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import doubling, geometry, harness, signals, solver
from .config import load_config
from .errors import ConfigError, PathviscError

__all__ = ["Check", "VERBS", "dispatch", "emit_summary", "main"]

log = logging.getLogger("pathvisc")


@dataclass
class Check:
    """A named pass/fail line with the measured value, its bound and a margin."""

    name: str
    measured: float
    bound: float
    margin: float = 0.0
    passed: bool = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.passed is None:
            self.passed = bool(math.isfinite(self.measured) and self.measured <= self.bound + self.margin)


def _as_check(rep):
    if isinstance(rep, Check):
        return rep
    return Check(rep.name, rep.measured_sup_gap, rep.theorem_bound, rep.scheme_margin,
                 rep.passed, dict(rep.metadata))


def emit_summary(reports):
    """Header plus one line per report, failures first."""
    checks = [_as_check(r) for r in reports]
    checks.sort(key=lambda c: c.passed)
    lines = [f"{'name':<32} {'measured':>14} {'bound':>14} {'margin':>12}  status"]
    for c in checks:
        lines.append(f"{c.name:<32} {c.measured:>14.6g} {c.bound:>14.6g} {c.margin:>12.4g}  "
                     f"{'PASS' if c.passed else 'FAIL'}")
    return "\n".join(lines)


def exit_status(reports):
    return 0 if all(_as_check(r).passed for r in reports) else 1


# ---------------------------------------------------------------------------
# verbs


def _pairs(metric, count, radius, seed):
    rng = np.random.default_rng(seed)
    return geometry.sample_pairs(metric, count, radius, rng)


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def cmd_geometry_check(lc, out):
    cfg = lc.experiment
    m = cfg.metric
    rep = geometry.probe_injectivity(m, lc.get("samples", 32, int), cfg.radius_grid, seed=cfg.seed,
                                     hessian_samples=lc.get("hessian_samples", 10, int))
    _write_rows(os.path.join(out, "geometry.csv"), geometry.GeometryReport.CSV_FIELDS, [rep.csv_row()])
    checks = [Check("certified_radius_positive", 0.0, rep.upsilon_estimate, 0.0,
                    rep.upsilon_estimate > 0)]
    if rep.upsilon_estimate > 0:
        xs, ys = _pairs(m, lc.get("eikonal_samples", 20, int), rep.upsilon_estimate, cfg.seed + 1)
        worst = 0.0
        for x, y in zip(xs, ys):
            e = geometry.energy(m, x, y)
            worst = max(worst, max(geometry.verify_eikonal(m, x, y)) / (1.0 + e))
        checks.append(Check("eikonal_residual", worst, 1e-6))
    if m.is_constant:
        checks.append(Check("gradsum_flat", rep.gradsum_bound_L, 1e-10))
    else:
        checks.append(Check("gradsum_finite", rep.gradsum_bound_L, math.inf, 0.0,
                            math.isfinite(rep.gradsum_bound_L)))
    return checks


def cmd_phi_check(lc, out):
    cfg = lc.experiment
    harness._require_signals(cfg)
    gamma = lc.get("gamma", 0.0)
    dp, _ = signals.delta_gamma_pm(cfg.xi, cfg.zeta, gamma, cfg.T)
    lam = lc.get("lam", 0.5 / dp if dp > 0 else 1.0)
    test = doubling.DoubledTest(cfg.metric, cfg.xi, cfg.zeta, lam, gamma)
    ups = harness.certified_upsilon(cfg)
    xs, ys = _pairs(cfg.metric, lc.get("samples", 20, int), 0.5 * ups, cfg.seed)
    bps = np.union1d(cfg.xi.breakpoints, cfg.zeta.breakpoints)
    bps = bps[bps <= cfg.T]
    ts = 0.5 * (bps[:-1] + bps[1:])
    ts = ts[:: max(1, len(ts) // 8)]
    doubling.write_phi_sweep(os.path.join(out, "phi_sweep.csv"), test, xs, ys, ts)
    worst = 0.0
    for x, y in zip(xs, ys):
        for t in ts:
            r = doubling.phi_pde_residual(test, x, y, t)
            worst = max(worst, r / (1.0 + doubling.phi_eval(test, x, y, t)))
    checks = [Check("phi_pde_residual", worst, 1e-6)]
    if gamma == 0.0:
        checks.append(Check("phi_sandwich", doubling.phi_sandwich_check(test, xs, ys, ts), 1e-12))
    return checks


def cmd_solve(lc, out):
    cfg = lc.experiment
    xi = cfg.xi if cfg.xi is not None else signals.zero_signal(cfg.T)
    u0 = cfg.grid.function(cfg.u0)
    tr = solver.solve(u0, cfg.metric, cfg.F, xi, cfg.T, cfg.dt_max, cfg.output_times(xi))
    tr.write_snapshots(os.path.join(out, "trajectory.csv"), lc.get("stride", 1, int))
    tr.write_diagnostics(os.path.join(out, "diagnostics.csv"))
    sup = max(s.sup_norm() for s in tr.snapshots)
    if cfg.F.kind == "zero":
        return [Check("sup_norm_bound", sup, u0.sup_norm(), 1e-12)]
    return [Check("solution_finite", sup, math.inf, 0.0, math.isfinite(sup))]


def cmd_compare(lc, out, which):
    cfg = lc.experiment
    fn = harness.run_comparison_thm1 if which == 1 else harness.run_comparison_thm2
    rep = fn(cfg, strict=False)
    harness.write_reports(os.path.join(out, f"compare{which}.csv"), [rep])
    return [rep]


def cmd_extend(lc, out):
    cfg = lc.experiment
    tab = harness.run_extension_cauchy(cfg)
    tab.to_csv(os.path.join(out, "extension.csv"))
    excess = max((r[2] - r[6] - r[7] for r in tab.rows if math.isfinite(r[6])), default=0.0)
    cons = [d for n, d in tab.consecutive() if n >= tab.trend_from]
    rise = max((b - a for a, b in zip(cons, cons[1:])), default=0.0)
    return [Check("extension_bound", excess, 0.0), Check("extension_trend", rise, 0.0)]


def cmd_isaacs_check(lc, out):
    cfg = lc.experiment
    ups = harness.certified_upsilon(cfg)
    xs, ys = _pairs(cfg.metric, lc.get("samples", 40, int), 0.5 * ups, cfg.seed)
    res = solver.isaacs_condition_check(cfg.F, cfg.metric, xs, ys, lc.get("alpha", 1.0),
                                        lc.get("eps", 0.1), lc.get("r_values", [0.0], list))
    _write_rows(os.path.join(out, "isaacs.csv"), ["argument", "lhs", "lhs_bound"],
                zip(res.arguments, res.lhs, res.lhs_bound))
    return [Check("isaacs_excess", res.worst_excess, 0.0,
                  detail={"L": res.modulus.lipschitz_L, "M": res.modulus.cap_M})]


VERBS = {
    "geometry-check": cmd_geometry_check,
    "phi-check": cmd_phi_check,
    "solve": cmd_solve,
    "compare1": lambda lc, out: cmd_compare(lc, out, 1),
    "compare2": lambda lc, out: cmd_compare(lc, out, 2),
    "extend": cmd_extend,
    "isaacs-check": cmd_isaacs_check,
}


def dispatch(verb, config_path, out_dir=None, seed=None, stream=None):
    """Run one verb; returns ``(exit_status, reports)``."""
    stream = sys.stdout if stream is None else stream
    if verb not in VERBS:
        print(f"error: unknown verb {verb!r}", file=sys.stderr)
        return 2, []
    try:
        lc = load_config(config_path, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2, []
    out = out_dir or os.environ.get("PATHVISC_OUT") or "out"
    os.makedirs(out, exist_ok=True)
    try:
        reports = VERBS[verb](lc, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2, []
    except PathviscError as exc:
        reports = [Check(verb, math.nan, math.nan, 0.0, False, {"error": str(exc)})]
        print(f"error: {exc}", file=sys.stderr)
    print(emit_summary(reports), file=stream)
    return exit_status(reports), reports


def build_parser():
    p = argparse.ArgumentParser(prog="pathvisc", description=__doc__.splitlines()[0])
    p.add_argument("verb", help=" | ".join(VERBS))
    p.add_argument("--config", required=True, help="INI experiment file")
    p.add_argument("--out", default=None, help="output directory (default $PATHVISC_OUT or ./out)")
    p.add_argument("--seed", type=int, default=None, help="override [run] seed")
    p.add_argument("--verbose", "-v", action="store_true")
    return p


def main(argv=None):
    p = build_parser()
    try:
        args = p.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    status, _ = dispatch(args.verb, args.config, args.out, args.seed)
    return status


if __name__ == "__main__":
    sys.exit(main())
