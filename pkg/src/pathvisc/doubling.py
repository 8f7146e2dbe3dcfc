"""Doubled-variable test functions and the stability bounds built from them.

For two signals ``xi, zeta`` and parameters ``lam > 0``, ``gamma >= 0`` the test
function is::

    Phi(x, y, t) = lam e^{gamma t} e_g(x, y) / (1 - lam I(t)),
    I(t) = int_0^t e^{gamma s} (xi'_s - zeta'_s) ds,

which solves ``w_t - gamma w - H(x, D_x w) xi' + H(y, D_y w) zeta' = 0`` away
from signal breakpoints whenever ``lam * sup_t I(t) < 1``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import (
    BreakpointTime,
    DenominatorVanishing,
    EmptyGamma,
    EmptyWindow,
    SmallnessViolated,
    ThetaTildeInfinite,
)
from .signals import delta_gamma_pm, delta_pm, theta, theta_tilde, weighted_increment

__all__ = [
    "DoubledTest",
    "KConstant",
    "Thm2Bound",
    "phi_eval",
    "phi_sandwich_check",
    "phi_pde_residual",
    "admissible_lambda_window",
    "smallness_thm1",
    "rhs_bound_thm1",
    "rhs_bound_thm2",
    "gamma_set",
    "DEFAULT_GAMMA_GRID",
    "write_phi_sweep",
]

log = logging.getLogger(__name__)

DEFAULT_GAMMA_GRID = tuple(2.0 ** k for k in range(-6, 13))

LAMBDA_READINGS = ("squared", "linear")


@dataclass(frozen=True)
class DoubledTest:
    """Parameters of ``Phi^{lam, gamma}``; ``gamma = 0`` gives ``Phi^lam``."""

    metric: geometry.MetricField
    xi: object
    zeta: object
    lam: float
    gamma: float = 0.0
    options: geometry.ShootingOptions = geometry.DEFAULT_OPTIONS

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")

    @property
    def T(self):
        return min(self.xi.T, self.zeta.T)

    def weighted_gap(self, t):
        return weighted_increment(self.xi, self.zeta, self.gamma, t)

    def denominator(self, t):
        return 1.0 - self.lam * self.weighted_gap(t)

    def prefactor(self, t):
        """``a(t) = lam e^{gamma t} / (1 - lam I(t))``."""
        den = self.denominator(t)
        if not den > 0:
            raise DenominatorVanishing(f"1 - lam I(t) = {den:.3e} at t = {t}")
        return self.lam * math.exp(self.gamma * t) / den

    def is_admissible(self):
        dp, _ = delta_gamma_pm(self.xi, self.zeta, self.gamma, self.T)
        return self.lam * dp < 1.0


@dataclass(frozen=True)
class KConstant:
    """``K = (2 / rho) F_sup + |u_0| + |v_0|``."""

    rho: float
    F_sup: float
    u0_norm: float
    v0_norm: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.F_sup < 0 or self.u0_norm < 0 or self.v0_norm < 0:
            raise ValueError("norms must be nonnegative")

    @property
    def K(self):
        return 2.0 / self.rho * self.F_sup + self.u0_norm + self.v0_norm


def phi_eval(test, x, y, t):
    """``Phi(x, y, t)``; at ``t = 0`` this is ``lam e_g(x, y)``."""
    a = test.prefactor(t)
    return a * geometry.energy(test.metric, x, y, test.options)


def phi_sandwich_check(test, xs, ys, ts):
    """Worst normalized violation of ``lam e/(1 + lam D-) <= Phi <= lam e/(1 - lam D+)``.

    Each violation is divided by ``1 + Phi``; a result ``<= 0`` means both
    inequalities hold everywhere on the sample set.
    """
    if test.gamma != 0.0:
        raise ValueError("the sandwich inequality is stated for gamma = 0")
    T = test.T
    dp, dm = delta_pm(test.xi, test.zeta, T)
    lam = test.lam
    if lam * dp >= 1.0:
        raise DenominatorVanishing(f"lam * Delta+ = {lam * dp:.6g} >= 1")
    worst = -math.inf
    energies = [geometry.energy(test.metric, x, y, test.options) for x, y in zip(xs, ys)]
    for e in energies:
        lo = lam * e / (1.0 + lam * dm)
        hi = lam * e / (1.0 - lam * dp)
        for t in ts:
            phi = test.prefactor(t) * e
            worst = max(worst, (lo - phi) / (1.0 + phi), (phi - hi) / (1.0 + phi))
    return worst


def phi_pde_residual(test, x, y, t):
    """``|w_t - gamma w - H(x, D_x w) xi' + H(y, D_y w) zeta'|`` at one point.

    ``w_t`` uses the exact derivative ``a' = gamma a + a^2 (xi' - zeta')`` of the
    prefactor; spatial gradients come from the shooting identities.

    Raises
    ------
    BreakpointTime
        If ``t`` is a breakpoint of either signal, where ``xi'`` is undefined.
    """
    for s in (test.xi, test.zeta):
        if s.is_breakpoint(t):
            raise BreakpointTime(f"t = {t} is a signal breakpoint")
    if not 0.0 < t < test.T:
        raise ValueError("t must lie strictly inside (0, T)")
    xd = test.xi.slope_at(t)
    zd = test.zeta.slope_at(t)
    a = test.prefactor(t)
    m = test.metric
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if np.array_equal(x, y):
        return 0.0
    r = geometry.invert_endpoint(m, x, y, test.options)
    e = r.energy
    w = a * e
    w_t = (test.gamma * a + a * a * (xd - zd)) * e
    hx = float(geometry.hamiltonian(m, x, -a * r.p0))
    hy = float(geometry.hamiltonian(m, y, a * r.P1))
    return abs(w_t - test.gamma * w - hx * xd + hy * zd)


def admissible_lambda_window(K, xi, zeta, gamma, T, upsilon, reading="squared"):
    """Admissible interval ``(lam_lower, lam_upper)`` for a fixed ``gamma``.

    ``lam_upper = 1 / Delta^{gamma,+}`` (infinite when the gap is zero) and
    ``lam_lower = 4K / (U - 4K Delta^{gamma,-})`` where ``U = upsilon**2``
    (``reading="squared"``, the default) or ``U = upsilon`` (``"linear"``).

    Raises
    ------
    EmptyWindow
        If ``U <= 4K Delta^{gamma,-}`` or ``lam_lower >= lam_upper``.
    """
    if reading not in LAMBDA_READINGS:
        raise ValueError(f"reading must be one of {LAMBDA_READINGS}")
    Kv = K.K if isinstance(K, KConstant) else float(K)
    dp, dm = delta_gamma_pm(xi, zeta, gamma, T)
    upper = math.inf if dp == 0.0 else 1.0 / dp
    U = upsilon ** 2 if reading == "squared" else upsilon
    room = U - 4.0 * Kv * dm
    if Kv == 0.0:
        lower = 0.0
    elif not room > 0:
        raise EmptyWindow(f"{reading} reading: U = {U:.6g} <= 4 K Delta- = {4 * Kv * dm:.6g}")
    else:
        lower = 4.0 * Kv / room
    if lower >= upper:
        raise EmptyWindow(f"lam_lower = {lower:.6g} >= lam_upper = {upper:.6g}")
    return lower, upper


def smallness_thm1(xi, zeta, T, u0_norm, v0_norm, upsilon):
    """Both forms of the first-order smallness condition.

    Returns ``(lhs, rhs_stated, rhs_proof)`` with
    ``lhs = Delta+ + Delta-``, ``rhs_stated = U^2 / (2 S)`` and
    ``rhs_proof = U^2 / (4 S)`` where ``S = |u_0| + |v_0|``.
    """
    dp, dm = delta_pm(xi, zeta, T)
    s = u0_norm + v0_norm
    if s == 0.0:
        return dp + dm, math.inf, math.inf
    return dp + dm, upsilon ** 2 / (2.0 * s), upsilon ** 2 / (4.0 * s)


def rhs_bound_thm1(u0_mod, v0_mod, sup_gap, xi, zeta, T, u0_norm=0.0, v0_norm=0.0,
                   upsilon=math.inf):
    """``sup_gap + theta(w_u0 ^ w_v0, 1 / Delta+)`` after checking smallness.

    Raises
    ------
    SmallnessViolated
        If ``Delta+ + Delta- >= upsilon^2 / (2 (|u_0| + |v_0|))``.
    """
    lhs, rhs, rhs_proof = smallness_thm1(xi, zeta, T, u0_norm, v0_norm, upsilon)
    if not lhs < rhs:
        raise SmallnessViolated(lhs, rhs, "first-order condition")
    if not lhs < rhs_proof:
        log.info("smallness holds as stated (%.6g < %.6g) but not with the factor 4 (%.6g)",
                 lhs, rhs, rhs_proof)
    dp, _ = delta_pm(xi, zeta, T)
    if dp == 0.0:
        return float(sup_gap)
    return float(sup_gap) + theta(u0_mod.meet(v0_mod), 1.0 / dp)


@dataclass
class Thm2Bound:
    """Result of the second-order bound with the minimizing ``gamma``.

    ``terms`` holds ``(theta, theta_tilde / rho, omega_F(...) / rho)`` at the
    minimizer; ``on_boundary`` flags a minimizer at either end of the grid.
    """

    value: float
    gamma: float
    on_boundary: bool
    terms: tuple
    sup_gap: float = 0.0
    admissible: tuple = field(default_factory=tuple)

    def __float__(self):
        return float(self.value)


def gamma_set(K, xi, zeta, T, upsilon, gamma_grid=DEFAULT_GAMMA_GRID):
    """Grid points satisfying ``D+ + D- < U^2 / (4K)`` and ``D- < 1``.

    Returns a list of ``(gamma, Delta+, Delta-)``.
    """
    Kv = K.K if isinstance(K, KConstant) else float(K)
    cap = math.inf if Kv == 0.0 else upsilon ** 2 / (4.0 * Kv)
    out = []
    for gam in gamma_grid:
        if not gam > 0:
            continue
        dp, dm = delta_gamma_pm(xi, zeta, gam, T)
        if dp + dm < cap and dm < 1.0:
            out.append((float(gam), dp, dm))
    return out


def rhs_bound_thm2(K, u0_mod, v0_mod, F_modulus, xi, zeta, T, upsilon,
                   gamma_grid=DEFAULT_GAMMA_GRID, sup_gap=0.0):
    """Second-order bound minimized over the admissible part of a ``gamma`` grid.

    The value is ``max(sup_gap, 0)`` plus the minimum over admissible ``gamma``
    of ``theta(w, 1/D+) + theta_tilde(w_F, gamma)/rho + w_F(2 sqrt(K (D+ + D-)))/rho``.

    Raises
    ------
    EmptyGamma
        If no grid point is admissible.
    """
    if not isinstance(K, KConstant):
        raise TypeError("K must be a KConstant")
    grid = sorted(float(g) for g in gamma_grid)
    adm = gamma_set(K, xi, zeta, T, upsilon, grid)
    if not adm:
        raise EmptyGamma(f"no admissible gamma on a grid of {len(grid)} points")
    w = u0_mod.meet(v0_mod)
    rho = K.rho
    best = (math.inf, None, ())
    for gam, dp, dm in adm:
        t1 = 0.0 if dp == 0.0 else theta(w, 1.0 / dp)
        try:
            t2 = theta_tilde(F_modulus, gam) / rho
        except ThetaTildeInfinite:
            continue
        t3 = float(F_modulus(2.0 * math.sqrt(K.K * (dp + dm)))) / rho
        total = t1 + t2 + t3
        if total < best[0]:
            best = (total, gam, (t1, t2, t3))
    base = max(float(sup_gap), 0.0)
    if best[1] is None:
        return Thm2Bound(math.inf, math.nan, False, (), base, tuple(a[0] for a in adm))
    on_boundary = best[1] in (grid[0], grid[-1])
    return Thm2Bound(base + best[0], best[1], on_boundary, best[2], base,
                     tuple(a[0] for a in adm))


def write_phi_sweep(path, test, xs, ys, ts):
    """CSV rows ``x_*, y_*, t, phi, residual, lower_violation, upper_violation``.

    Residuals are blank at breakpoints; the sandwich columns are blank for
    ``gamma > 0``.
    """
    n = test.metric.dim
    dp, dm = delta_pm(test.xi, test.zeta, test.T)
    header = [f"x{i}" for i in range(n)] + [f"y{i}" for i in range(n)]
    header += ["t", "phi", "residual", "lower_violation", "upper_violation"]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for x, y in zip(xs, ys):
            e = geometry.energy(test.metric, x, y, test.options)
            for t in ts:
                phi = test.prefactor(t) * e
                try:
                    res = repr(phi_pde_residual(test, x, y, t))
                except (BreakpointTime, ValueError):
                    res = ""
                if test.gamma == 0.0:
                    lo = repr(test.lam * e / (1.0 + test.lam * dm) - phi)
                    hi = repr(phi - test.lam * e / (1.0 - test.lam * dp))
                else:
                    lo = hi = ""
                wr.writerow([repr(float(v)) for v in x] + [repr(float(v)) for v in y]
                            + [repr(float(t)), repr(float(phi)), res, lo, hi])
