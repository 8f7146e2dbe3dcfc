"""INI experiment files.

Sections are flat: ``[metric]``, ``[grid]``, ``[signal.a]``, ``[signal.b]``,
``[initial.u]``, ``[initial.v]``, ``[F]`` and ``[run]``.  Numbers accept
``pi`` multiples (``2pi``) and ``inf``.  Scalar fields are written as sums of
terms, for example ``0.1 + lin(0.5,0) + 0.2*sin(1,0) + -0.1*sin(0,2,p=0.3)``.
An Isaacs family is written as rows separated by ``;`` (the outer inf), members
separated by ``|`` (the inner sup), each member a list of ``key=expr`` with keys
``sigma``, ``drift``, ``source`` and ``c``.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import doubling, geometry, signals, solver
from .errors import ConfigError
from .harness import ExperimentConfig, InitialData
from .signals import Modulus

__all__ = ["LoadedConfig", "load_config", "parse_number", "parse_scalar_field", "parse_matrix"]

_SECTIONS = ("metric", "grid", "signal.a", "signal.b", "initial.u", "initial.v", "F", "run")


def parse_number(text):
    """Float with ``pi`` multiples and ``inf``: ``"2pi"``, ``"-0.5pi"``, ``"1e-3"``."""
    s = str(text).strip().lower().replace(" ", "")
    m = re.fullmatch(r"([+-]?[0-9.eE+-]*)\*?pi", s)
    if m:
        coef = m.group(1)
        c = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
        return c * math.pi
    return float(s)


def _split_top(text, sep):
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [p.strip() for p in out]


_SIN = re.compile(r"(?:([^*]+)\*)?sin\(([^)]*)\)")
_LIN = re.compile(r"lin\(([^)]*)\)")


def parse_scalar_field(text, dim):
    """Build a ScalarField from ``const + lin(...) + amp*sin(f1,...,fN[,p=phase])``."""
    const = 0.0
    lin = np.zeros(dim)
    terms = []
    for term in _split_top(str(text).replace(" ", ""), "+"):
        if not term:
            continue
        m = _SIN.fullmatch(term)
        if m:
            amp = 1.0 if m.group(1) in (None, "") else parse_number(m.group(1))
            args = [a for a in m.group(2).split(",") if a]
            phase = 0.0
            if args and args[-1].startswith("p="):
                phase = parse_number(args.pop()[2:])
            freq = [parse_number(a) for a in args]
            if len(freq) == 1 and dim > 1:
                freq = freq + [0.0] * (dim - 1)
            if len(freq) != dim:
                raise ValueError(f"sin term needs {dim} frequencies: {term!r}")
            terms.append((amp, freq, phase))
            continue
        m = _LIN.fullmatch(term)
        if m:
            vals = [parse_number(a) for a in m.group(1).split(",")]
            if len(vals) != dim:
                raise ValueError(f"lin term needs {dim} coefficients: {term!r}")
            lin = lin + np.array(vals)
            continue
        const += parse_number(term)
    return geometry.ScalarField(dim, const, lin, tuple(terms))


def parse_matrix(text, dim):
    """``"a,b;c,d"`` or a single number (a multiple of the identity)."""
    rows = [r for r in str(text).replace(" ", "").split(";") if r]
    if len(rows) == 1 and "," not in rows[0]:
        return parse_number(rows[0]) * np.eye(dim)
    M = np.array([[parse_number(v) for v in r.split(",")] for r in rows])
    if M.shape != (dim, dim):
        raise ValueError(f"matrix must be {dim}x{dim}")
    return M


def _field_callable(sf):
    if not sf.terms and not any(sf.lin):
        return sf.const
    return sf.value


def parse_isaacs_family(text, dim):
    rows = []
    for row in _split_top(text, ";"):
        members = []
        for mem in _split_top(row, "|"):
            kw = {}
            for item in mem.split():
                if "=" not in item:
                    raise ValueError(f"isaacs member fields are key=expr, got {item!r}")
                k, v = item.split("=", 1)
                if k not in ("sigma", "drift", "source", "c"):
                    raise ValueError(f"unknown isaacs field {k!r}")
                sf = parse_scalar_field(v, dim)
                kw[k] = _scaled_identity(sf, dim) if k == "sigma" else _field_callable(sf)
                if k == "drift" and callable(kw[k]):
                    f = kw[k]
                    kw[k] = (lambda f: lambda x: np.repeat(np.asarray(f(x))[..., None], dim, axis=-1))(f)
            members.append(solver.Control(**kw))
        rows.append(members)
    return rows


def _scaled_identity(sf, dim):
    c = _field_callable(sf)
    if not callable(c):
        return c * np.eye(dim)
    return lambda x: np.asarray(c(x))[..., None, None] * np.eye(dim)


@dataclass
class LoadedConfig:
    """Parsed experiment plus the raw ``[run]`` options for verb-specific settings."""

    experiment: ExperimentConfig
    run: dict
    path: str = ""
    sections: dict = field(default_factory=dict)

    def get(self, key, default=None, kind=float):
        if key not in self.run:
            return default
        raw = self.run[key]
        try:
            if kind is float:
                return parse_number(raw)
            if kind is int:
                return int(parse_number(raw))
            if kind is list:
                return [parse_number(v) for v in raw.replace(";", ",").split(",") if v.strip()]
            return raw
        except ValueError as exc:
            raise ConfigError(str(exc), "run", key, self._line("run", key)) from None

    def _line(self, section, key):
        return self.sections.get((section, key))


class _Reader:
    def __init__(self, cp, lines):
        self.cp = cp
        self.lines = lines

    def has(self, sec):
        return self.cp.has_section(sec)

    def raw(self, sec, key, default=None, required=False):
        if self.cp.has_option(sec, key):
            return self.cp.get(sec, key)
        if required:
            raise ConfigError("missing required field", sec, key, self.lines.get((sec, None)))
        return default

    def num(self, sec, key, default=None, required=False, kind=float):
        raw = self.raw(sec, key, None, required)
        if raw is None:
            return default
        try:
            v = parse_number(raw)
        except ValueError:
            raise ConfigError(f"not a number: {raw!r}", sec, key, self.lines.get((sec, key))) from None
        if kind is int:
            if v != int(v):
                raise ConfigError(f"expected an integer: {raw!r}", sec, key, self.lines.get((sec, key)))
            return int(v)
        return v

    def wrap(self, sec, key, fn, *args):
        raw = self.raw(sec, key, required=True)
        try:
            return fn(raw, *args)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc), sec, key, self.lines.get((sec, key))) from None


def _line_map(text):
    out, sec = {}, None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            sec = m.group(1).strip()
            out[(sec, None)] = i
            continue
        m = re.match(r"([A-Za-z0-9_.]+)\s*[=:]", s)
        if m and sec is not None:
            out[(sec, m.group(1).lower())] = i
    return out


def _metric(r):
    sec = "metric"
    fam = r.raw(sec, "family", "identity").strip().lower()
    dim = r.num(sec, "dim", 1, kind=int)
    if dim < 1:
        raise ConfigError("dimension must be positive", sec, "dim", r.lines.get((sec, "dim")))
    lo = r.num(sec, "domain_lo", 0.0)
    hi = r.num(sec, "domain_hi", 2 * math.pi)
    dom = (np.full(dim, lo), np.full(dim, hi))
    try:
        if fam == "identity":
            return geometry.IdentityMetric(dim, dom)
        if fam == "constant":
            return geometry.ConstantMetric(r.wrap(sec, "matrix", parse_matrix, dim), dom)
        if fam == "conformal":
            return geometry.ConformalMetric(r.wrap(sec, "phi", parse_scalar_field, dim), dim, dom)
        if fam == "diagonal":
            fields = [r.wrap(sec, f"psi{i + 1}", parse_scalar_field, dim) for i in range(dim)]
            return geometry.DiagonalMetric(fields, dom)
    except ValueError as exc:
        raise ConfigError(str(exc), sec, None, r.lines.get((sec, None))) from None
    raise ConfigError(f"unknown metric family {fam!r}", sec, "family", r.lines.get((sec, "family")))


def _grid(r, dim):
    sec = "grid"
    try:
        return solver.Grid(dim, r.num(sec, "points", 200, kind=int), r.num(sec, "period", 2 * math.pi),
                           r.num(sec, "origin", 0.0))
    except ValueError as exc:
        raise ConfigError(str(exc), sec, None, r.lines.get((sec, None))) from None


def _signal(r, sec, T):
    if not r.has(sec):
        return None
    gen = r.raw(sec, "generator", "zero").strip().lower()
    T = r.num(sec, "T", T)
    line = r.lines.get((sec, "generator"))
    try:
        if gen == "zero":
            return signals.zero_signal(T)
        if gen == "linear":
            return signals.linear_signal(r.num(sec, "rate", 1.0), T)
        if gen == "zigzag":
            return signals.zigzag_signal(r.num(sec, "amplitude", required=True),
                                         r.num(sec, "periods", 1, kind=int), T)
        if gen == "brownian":
            return signals.sample_brownian(T, r.num(sec, "level", 8, kind=int),
                                           r.num(sec, "seed", 0, kind=int))
        if gen == "file":
            return signals.PathSignal.from_csv(r.raw(sec, "path", required=True))
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc), sec, None, line) from None
    raise ConfigError(f"unknown signal generator {gen!r}", sec, "generator", line)


def _initial(r, sec, c):
    if not r.has(sec):
        return InitialData.sine(0.5, ellipticity_c=c)
    gen = r.raw(sec, "generator", "sine").strip().lower()
    if gen == "sine":
        data = InitialData.sine(r.num(sec, "amplitude", 0.5), r.num(sec, "frequency", 1.0),
                                r.num(sec, "phase", 0.0), r.num(sec, "axis", 0, kind=int),
                                r.num(sec, "offset", 0.0), c)
    elif gen == "neg_abs":
        data = InitialData.neg_abs(r.num(sec, "center", 0.0), r.num(sec, "period", 2.0), c)
    elif gen == "constant":
        data = InitialData.constant(r.num(sec, "value", 0.0))
    else:
        raise ConfigError(f"unknown initial generator {gen!r}", sec, "generator",
                          r.lines.get((sec, "generator")))
    L = r.num(sec, "modulus_L", None)
    M = r.num(sec, "modulus_M", None)
    if L is not None or M is not None:
        data = InitialData(data.name, data.fn,
                           Modulus(data.modulus.lipschitz_L if L is None else L,
                                   data.modulus.cap_M if M is None else M), data.sup_norm)
    return data


def _fspec(r, dim):
    sec = "F"
    if not r.has(sec):
        return solver.FSpec.zero()
    kind = r.raw(sec, "kind", "zero").strip().lower()
    L = r.num(sec, "modulus_L", None)
    M = r.num(sec, "modulus_M", math.inf if L is not None else None)
    mod = None if L is None else Modulus(L, M)
    try:
        if kind == "zero":
            return solver.FSpec.zero()
        if kind == "linear_diffusion":
            return solver.FSpec.linear_diffusion(r.wrap(sec, "a", parse_matrix, dim),
                                                 r.num(sec, "nu", 1.0), r.num(sec, "rho", 1.0), mod)
        if kind == "isaacs":
            fam = r.wrap(sec, "family", parse_isaacs_family, dim)
            return solver.FSpec.isaacs(fam, r.num(sec, "rho", 0.0), mod, r.num(sec, "lipschitz", 0.0))
    except ValueError as exc:
        raise ConfigError(str(exc), sec, None, r.lines.get((sec, None))) from None
    raise ConfigError(f"unknown F kind {kind!r}", sec, "kind", r.lines.get((sec, "kind")))


def load_config(path, seed=None):
    """Parse an INI experiment file.

    Raises
    ------
    ConfigError
        With section, field and line information where available.
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return loads_config(text, seed, path)


def loads_config(text, seed=None, path="<string>"):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], line=getattr(exc, "lineno", None)) from None
    lines = _line_map(text)
    for sec in cp.sections():
        if sec not in _SECTIONS:
            raise ConfigError("unknown section", sec, line=lines.get((sec, None)))
    r = _Reader(cp, lines)
    metric = _metric(r)
    grid = _grid(r, metric.dim)
    T = r.num("run", "T", 1.0)
    xi = _signal(r, "signal.a", T)
    zeta = _signal(r, "signal.b", T)
    c = metric.ellipticity_c
    u0 = _initial(r, "initial.u", c)
    v0 = _initial(r, "initial.v", c) if r.has("initial.v") else u0
    F = _fspec(r, metric.dim)
    run = dict(cp.items("run")) if cp.has_section("run") else {}
    seed = r.num("run", "seed", 0, kind=int) if seed is None else int(seed)
    levels = tuple(int(v) for v in _list(r, "levels", [3, 9]))
    kmin, kmax = (int(v) for v in _list(r, "gamma_exponents", [-6, 12]))
    up = r.raw("run", "upsilon", None)
    try:
        cfg = ExperimentConfig(
            metric=metric, grid=grid, u0=u0, v0=v0, xi=xi, zeta=zeta, F=F, T=T,
            output_count=r.num("run", "output_count", 64, kind=int),
            dt_max=r.num("run", "dt_max", None),
            upsilon=None if up is None or up.strip().lower() == "probe" else r.num("run", "upsilon"),
            margin_abs=r.num("run", "margin_abs", 0.0),
            refine=r.num("run", "refine", 2, kind=int),
            seed=seed, levels=levels,
            trend_from=r.num("run", "trend_from", 5, kind=int),
            gamma_grid=tuple(2.0 ** k for k in range(kmin, kmax + 1)),
            radius_grid=tuple(_list(r, "radius_grid", [0.25, 0.5, 1.0, 2.0, 4.0, 8.0])),
            probe_samples=r.num("run", "probe_samples", 32, kind=int),
            name=r.raw("run", "name", "experiment"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc), "run", line=lines.get(("run", None))) from None
    return LoadedConfig(cfg, run, str(path), lines)


def _list(r, key, default):
    raw = r.raw("run", key, None)
    if raw is None:
        return default
    try:
        return [parse_number(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"not a number list: {raw!r}", "run", key, r.lines.get(("run", key))) from None


# re-exported for the CLI
LAMBDA_READINGS = doubling.LAMBDA_READINGS
