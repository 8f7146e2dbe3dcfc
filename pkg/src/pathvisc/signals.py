"""Piecewise-linear driving signals, capped-linear moduli and gap functionals.

Signals start at zero and are stored by their breakpoints, so every running
maximum and every exponentially weighted increment below is computed exactly
from breakpoint values.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HorizonMismatch, ThetaTildeInfinite

__all__ = [
    "PathSignal",
    "Modulus",
    "linear_signal",
    "zero_signal",
    "zigzag_signal",
    "sample_brownian",
    "brownian_levels",
    "delta_pm",
    "delta_gamma_pm",
    "weighted_increment",
    "theta",
    "theta_tilde",
    "sup_distance",
]

_TIME_TOL = 1e-12


@dataclass(frozen=True)
class PathSignal:
    """Continuous piecewise-linear path on ``[0, T]`` with ``value(0) == 0``."""

    breakpoints: np.ndarray
    values: np.ndarray
    T: float = field(default=None)

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if b.ndim != 1 or b.shape != v.shape or b.size < 2:
            raise ValueError("breakpoints and values must be 1-D of equal length >= 2")
        if b[0] != 0.0:
            raise ValueError("first breakpoint must be 0")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if v[0] != 0.0:
            raise ValueError("signal must start at 0")
        if not np.all(np.isfinite(v)):
            raise ValueError("signal values must be finite")
        T = float(b[-1]) if self.T is None else float(self.T)
        if abs(T - b[-1]) > _TIME_TOL * max(1.0, T):
            raise ValueError("T must equal the last breakpoint")
        b.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "T", T)

    def __call__(self, t):
        return np.interp(t, self.breakpoints, self.values)

    @property
    def slopes(self):
        return np.diff(self.values) / np.diff(self.breakpoints)

    def slope_at(self, t):
        """Derivative on the segment containing ``t``; ``t`` may be a left endpoint."""
        k = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        k = min(max(k, 0), self.breakpoints.size - 2)
        return float(self.slopes[k])

    def is_breakpoint(self, t, tol=1e-12):
        return bool(np.any(np.abs(self.breakpoints - t) <= tol * max(1.0, self.T)))

    def total_variation(self):
        return float(np.sum(np.abs(np.diff(self.values))))

    def restrict(self, T):
        """The signal on ``[0, T]`` (T may fall inside a segment)."""
        if T > self.T + _TIME_TOL:
            raise HorizonMismatch(f"signal ends at {self.T}, requested {T}")
        inner = self.breakpoints[self.breakpoints < T - _TIME_TOL]
        b = np.append(inner, T)
        return PathSignal(b, self(b))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "value"])
            for t, v in zip(self.breakpoints, self.values):
                w.writerow([repr(float(t)), repr(float(v))])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if rows and rows[0] and not _is_number(rows[0][0]):
            rows = rows[1:]
        data = np.array([[float(r[0]), float(r[1])] for r in rows if r])
        return cls(data[:, 0], data[:, 1])


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class Modulus:
    """Capped-linear modulus ``omega(r) = min(L r, M)``.

    Moduli are measured in the energy distance ``d_g`` unless built with
    :meth:`from_euclidean`.
    """

    lipschitz_L: float
    cap_M: float = math.inf

    def __post_init__(self):
        if self.lipschitz_L < 0 or self.cap_M < 0:
            raise ValueError("modulus parameters must be nonnegative")

    def __call__(self, r):
        return np.minimum(self.lipschitz_L * np.asarray(r, dtype=float), self.cap_M)

    @property
    def bounded(self):
        return math.isfinite(self.cap_M)

    def meet(self, other):
        # parameterwise min: an upper bound for the pointwise min within the family
        return Modulus(min(self.lipschitz_L, other.lipschitz_L), min(self.cap_M, other.cap_M))

    @classmethod
    def from_euclidean(cls, lipschitz_L, cap_M=math.inf, ellipticity_c=1.0):
        """Convert a Euclidean modulus to one in ``d_g`` using ``|x-y| <= 2 c d_g``."""
        return cls(2.0 * ellipticity_c * lipschitz_L, cap_M)


def zero_signal(T=1.0):
    return PathSignal(np.array([0.0, T]), np.array([0.0, 0.0]))


def linear_signal(rate=1.0, T=1.0):
    return PathSignal(np.array([0.0, T]), np.array([0.0, rate * T]))


def zigzag_signal(amplitude, periods, T=1.0):
    """``periods`` excursions 0 -> amplitude -> 0, each of duration ``T / periods``."""
    if periods < 1:
        raise ValueError("periods must be >= 1")
    t = np.linspace(0.0, T, 2 * periods + 1)
    v = np.zeros_like(t)
    v[1::2] = amplitude
    return PathSignal(t, v)


def brownian_levels(T, level, rng_seed):
    """Node values of one Brownian path on dyadic grids ``0..level``.

    Level ``k`` is produced from level ``k - 1`` by Brownian-bridge midpoints,
    with one fixed random stream, so every level is a consistent sample of the
    same path.  Returns ``(values_per_level, offsets_per_level)``.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    rng = np.random.default_rng(rng_seed)
    vals = np.array([0.0, math.sqrt(T) * rng.standard_normal()])
    levels = [vals]
    offsets = [np.empty(0)]
    for k in range(1, level + 1):
        dt = T / 2 ** (k - 1)
        off = math.sqrt(dt / 4.0) * rng.standard_normal(vals.size - 1)
        mid = 0.5 * (vals[:-1] + vals[1:]) + off
        new = np.empty(2 * vals.size - 1)
        new[0::2] = vals
        new[1::2] = mid
        vals = new
        levels.append(vals)
        offsets.append(off)
    return levels, offsets


def sample_brownian(T, level, rng_seed):
    """Piecewise-linear Brownian sample on the dyadic grid ``2**-level * T``."""
    levels, _ = brownian_levels(T, level, rng_seed)
    v = levels[level]
    return PathSignal(np.linspace(0.0, T, v.size), v)


def _merged(xi, zeta, T):
    for s in (xi, zeta):
        if s.T < T - _TIME_TOL:
            raise HorizonMismatch(f"signal ends at {s.T} before horizon {T}")
    t = np.union1d(xi.breakpoints, zeta.breakpoints)
    t = t[t < T - _TIME_TOL]
    return np.append(t, T)


def delta_pm(xi, zeta, T=None):
    """Running maxima ``(max_s (xi - zeta), max_s (zeta - xi))`` over ``[0, T]``."""
    T = min(xi.T, zeta.T) if T is None else T
    t = _merged(xi, zeta, T)
    gap = xi(t) - zeta(t)
    return float(max(0.0, gap.max())), float(max(0.0, (-gap).max()))


def _weighted_path(xi, zeta, gamma, t):
    """``I(t_k) = int_0^{t_k} e^{gamma s} (xi' - zeta') ds`` at merged breakpoints."""
    dgap = np.diff(xi(t) - zeta(t))
    dt = np.diff(t)
    if gamma == 0.0:
        inc = dgap
    else:
        with np.errstate(over="ignore", invalid="ignore"):
            # slope * (e^{g b} - e^{g a}) / g, written to stay accurate for small g*dt
            inc = (dgap / dt) * np.exp(gamma * t[:-1]) * np.expm1(gamma * dt) / gamma
    with np.errstate(invalid="ignore"):
        return np.concatenate([[0.0], np.cumsum(inc)])


def weighted_increment(xi, zeta, gamma, t):
    """``int_0^t e^{gamma s} (xi'_s - zeta'_s) ds`` for a single time ``t``."""
    if t <= 0.0:
        return 0.0
    if gamma == 0.0:
        return float(xi(t) - zeta(t))
    return float(_weighted_path(xi, zeta, gamma, _merged(xi, zeta, t))[-1])


def delta_gamma_pm(xi, zeta, gamma, T=None):
    """Exponentially weighted gaps ``(Delta^{gamma,+}_T, Delta^{gamma,-}_T)``.

    The integrand keeps one sign on every merged segment, so the integral is
    monotone there and its extrema sit on breakpoints.  Overflow for large
    ``gamma * T`` yields ``inf``.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    T = min(xi.T, zeta.T) if T is None else T
    t = _merged(xi, zeta, T)
    if gamma == 0.0:
        return delta_pm(xi, zeta, T)
    path = _weighted_path(xi, zeta, gamma, t)
    path = np.where(np.isnan(path), np.inf, path)
    return float(max(0.0, np.max(path))), float(max(0.0, np.max(-path)))


def theta(omega, lam):
    """``sup_{r >= 0} (omega(r) - lam r^2 / 2)`` in closed form."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    L, M = omega.lipschitz_L, omega.cap_M
    if L == 0.0 or M == 0.0:
        return 0.0
    if math.isinf(lam):
        return 0.0
    if math.isinf(M) or lam >= L * L / M:
        return L * L / (2.0 * lam)
    return M - lam * M * M / (2.0 * L * L)


def theta_tilde(omega, gamma):
    """``sup_{r >= 0} (omega(r) - gamma r / 2)`` in closed form."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    L, M = omega.lipschitz_L, omega.cap_M
    if gamma / 2.0 >= L or M == 0.0:
        return 0.0
    if math.isinf(M):
        raise ThetaTildeInfinite(f"uncapped modulus with slope {L} > gamma/2 = {gamma / 2}")
    return M * (1.0 - gamma / (2.0 * L))


def sup_distance(xi, zeta, T=None):
    T = min(xi.T, zeta.T) if T is None else T
    t = _merged(xi, zeta, T)
    return float(np.max(np.abs(xi(t) - zeta(t))))
