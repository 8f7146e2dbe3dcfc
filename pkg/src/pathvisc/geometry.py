"""Riemannian energy, distance and their derivatives by geodesic shooting.

The energy of a pair is ``e_g(x, y) = inf 1/4 int_0^1 (g(c) c', c') dt`` and the
distance is ``d_g = sqrt(e_g)``, so the identity metric gives
``e = |x - y|^2 / 4``.  Both are evaluated through the characteristic flow of
``H(x, p) = (g^{-1}(x) p, p)``::

    X' = 2 g^{-1}(X) P,        P' = -(D g^{-1}(X) P, P),

whose time-one position ``E_x(p) = X_1`` is inverted by Newton's method with
the tangent flow ``alpha_1 = D_p X_1`` as Jacobian.  Then
``e = H(x, p)``, ``D_x e = -p`` and ``D_y e = P_1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import DriftExceeded, NoConvergence, SingularTangent

__all__ = [
    "ScalarField",
    "MetricField",
    "ConstantMetric",
    "IdentityMetric",
    "DiagonalMetric",
    "ConformalMetric",
    "ShootingOptions",
    "ShootingResult",
    "GeometryReport",
    "christoffel",
    "hamiltonian",
    "geodesic_flow",
    "tangent_flow",
    "endpoint_map",
    "invert_endpoint",
    "energy",
    "distance",
    "grad_energy",
    "hessian_energy",
    "mixed_block_defect",
    "verify_eikonal",
    "straight_line_energy",
    "probe_injectivity",
    "sample_pairs",
    "hessian_ratio",
]

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# scalar fields and metric families


@dataclass(frozen=True)
class ScalarField:
    """``psi(x) = const + lin . x + sum_j amp_j sin(freq_j . x + phase_j)``.

    Parameters
    ----------
    dim : int
        Spatial dimension.
    const : float
    lin : array_like, shape (dim,), optional
    terms : sequence of (amp, freq, phase)
        ``freq`` has shape ``(dim,)``.
    """

    dim: int
    const: float = 0.0
    lin: tuple = None
    terms: tuple = ()

    def __post_init__(self):
        lin = np.zeros(self.dim) if self.lin is None else np.asarray(self.lin, float)
        if lin.shape != (self.dim,):
            raise ValueError(f"lin must have shape ({self.dim},)")
        terms = []
        for amp, freq, phase in self.terms:
            freq = np.asarray(freq, float).reshape(-1)
            if freq.shape != (self.dim,):
                raise ValueError(f"frequency vectors must have length {self.dim}")
            terms.append((float(amp), tuple(freq), float(phase)))
        object.__setattr__(self, "const", float(self.const))
        object.__setattr__(self, "lin", tuple(lin))
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def sine(cls, dim, amplitude, axis=0, frequency=1.0, phase=0.0):
        """``amplitude * sin(frequency * x_axis + phase)``."""
        f = np.zeros(dim)
        f[axis] = frequency
        return cls(dim, terms=((amplitude, f, phase),))

    @property
    def arrays(self):
        """``(const, lin, amp, phase, freq)`` as arrays; ``freq`` has shape (m, dim)."""
        m = len(self.terms)
        amp = np.array([t[0] for t in self.terms], float)
        freq = np.array([t[1] for t in self.terms], float).reshape(m, self.dim)
        phase = np.array([t[2] for t in self.terms], float)
        return self.const, np.array(self.lin), amp, phase, freq

    def value(self, x):
        c, lin, amp, phase, freq = self.arrays
        x = np.asarray(x, float)
        return c + x @ lin + np.sin(x @ freq.T + phase) @ amp

    def grad(self, x):
        c, lin, amp, phase, freq = self.arrays
        x = np.asarray(x, float)
        return lin + (np.cos(x @ freq.T + phase) * amp) @ freq

    def hess(self, x):
        c, lin, amp, phase, freq = self.arrays
        x = np.asarray(x, float)
        w = -np.sin(x @ freq.T + phase) * amp
        return np.einsum("...j,jk,jl->...kl", w, freq, freq)

    def bounds(self, lo, hi):
        """Analytic lower and upper bounds of ``psi`` over the box ``[lo, hi]``."""
        c, lin, amp, _, _ = self.arrays
        lo = np.broadcast_to(np.asarray(lo, float), (self.dim,))
        hi = np.broadcast_to(np.asarray(hi, float), (self.dim,))
        a, b = lin * lo, lin * hi
        osc = float(np.sum(np.abs(amp)))
        return c + float(np.sum(np.minimum(a, b))) - osc, c + float(np.sum(np.maximum(a, b))) + osc

    def c2_norm(self, lo, hi):
        """Crude bound on ``sup|psi| + sup|D psi| + sup|D^2 psi|`` over the box."""
        _, lin, amp, _, freq = self.arrays
        lo_b, hi_b = self.bounds(lo, hi)
        fn = np.linalg.norm(freq, axis=1) if freq.size else np.zeros(0)
        d1 = float(np.linalg.norm(lin) + np.sum(np.abs(amp) * fn))
        d2 = float(np.sum(np.abs(amp) * fn * fn))
        return max(abs(lo_b), abs(hi_b)) + d1 + d2


class MetricField:
    """Smooth symmetric positive definite matrix field ``g`` on a box in R^N.

    Subclasses provide ``g``, ``ginv`` (batched over leading axes) and the
    pointwise derivative arrays ``dg``, ``dginv``, ``d2g``, ``d2ginv`` indexed
    ``[k, i, j] = d_k g_ij`` and ``[k, l, i, j] = d_k d_l g_ij``.
    """

    family_tag = "abstract"

    def __init__(self, dim, domain=None):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)
        if domain is None:
            domain = (np.zeros(dim), np.full(dim, TWO_PI))
        lo, hi = (np.broadcast_to(np.asarray(d, float), (dim,)).copy() for d in domain)
        if np.any(hi <= lo):
            raise ValueError("domain must have hi > lo")
        self.domain = (lo, hi)

    # interface ------------------------------------------------------------
    def g(self, x):
        raise NotImplementedError

    def ginv(self, x):
        raise NotImplementedError

    def dg(self, x):
        raise NotImplementedError

    def dginv(self, x):
        raise NotImplementedError

    def d2g(self, x):
        raise NotImplementedError

    def d2ginv(self, x):
        raise NotImplementedError

    @property
    def ellipticity_c(self):
        raise NotImplementedError

    @property
    def is_constant(self):
        return False

    # shared ---------------------------------------------------------------
    @property
    def c2_bound_M(self):
        """``1 + |g|_{C^2} + |g^{-1}|_{C^2}`` with sup norms sampled over the domain."""
        if not hasattr(self, "_c2_cache"):
            rng = np.random.default_rng(12345)
            lo, hi = self.domain
            pts = lo + (hi - lo) * rng.random((256, self.dim))
            parts = np.zeros(6)
            for x in pts:
                parts = np.maximum(parts, [
                    np.max(np.abs(self.g(x))), np.max(np.abs(self.dg(x))),
                    np.max(np.abs(self.d2g(x))), np.max(np.abs(self.ginv(x))),
                    np.max(np.abs(self.dginv(x))), np.max(np.abs(self.d2ginv(x))),
                ])
            self._c2_cache = 1.0 + float(parts.sum())
        return self._c2_cache

    def sample_points(self, count, rng):
        lo, hi = self.domain
        return lo + (hi - lo) * rng.random((count, self.dim))

    def describe(self):
        return f"{self.family_tag}(N={self.dim})"

    def __repr__(self):
        return f"<{type(self).__name__} {self.describe()}>"


class ConstantMetric(MetricField):
    """``g(x) = A`` for a fixed SPD matrix ``A``; geodesics are straight lines."""

    family_tag = "constant"

    def __init__(self, matrix, domain=None):
        A = np.atleast_2d(np.asarray(matrix, float))
        if A.shape[0] != A.shape[1]:
            raise ValueError("metric matrix must be square")
        if not np.allclose(A, A.T, rtol=0, atol=1e-14 * max(1.0, np.abs(A).max())):
            raise ValueError("metric matrix must be symmetric")
        ev = np.linalg.eigvalsh(A)
        if ev[0] <= 0:
            raise ValueError("metric matrix must be positive definite")
        super().__init__(A.shape[0], domain)
        self.A = A
        self.Ainv = np.linalg.inv(A)
        self.Ainv = 0.5 * (self.Ainv + self.Ainv.T)
        self._c = math.sqrt(max(ev[-1], 1.0 / ev[0]))

    @property
    def is_constant(self):
        return True

    def g(self, x):
        x = np.asarray(x, float)
        return np.broadcast_to(self.A, x.shape[:-1] + self.A.shape).copy()

    def ginv(self, x):
        x = np.asarray(x, float)
        return np.broadcast_to(self.Ainv, x.shape[:-1] + self.A.shape).copy()

    def dg(self, x):
        n = self.dim
        return np.zeros((n, n, n))

    dginv = dg

    def d2g(self, x):
        n = self.dim
        return np.zeros((n, n, n, n))

    d2ginv = d2g

    @property
    def ellipticity_c(self):
        return self._c

    @property
    def c2_bound_M(self):
        return 1.0 + float(np.abs(self.A).max() + np.abs(self.Ainv).max())


class IdentityMetric(ConstantMetric):
    family_tag = "identity"

    def __init__(self, dim, domain=None):
        super().__init__(np.eye(dim), domain)


class DiagonalMetric(MetricField):
    """``g(x) = diag(exp(2 psi_1(x)), ..., exp(2 psi_N(x)))``."""

    family_tag = "diagonal"

    def __init__(self, fields, domain=None):
        fields = tuple(fields)
        dim = len(fields)
        if any(f.dim != dim for f in fields):
            raise ValueError("every scalar field must have the metric's dimension")
        super().__init__(dim, domain)
        self.fields = fields
        self._kernel = self._pack()
        lo, hi = self.domain
        b = np.array([f.bounds(lo, hi) for f in fields])
        self._c = math.exp(max(b[:, 1].max(), -b[:, 0].min(), 0.0))

    def _pack(self):
        n = self.dim
        m = max(1, max(len(f.terms) for f in self.fields))
        base = np.zeros(n)
        lin = np.zeros((n, n))
        amp = np.zeros((n, m))
        phase = np.zeros((n, m))
        freq = np.zeros((n, m, n))
        for i, f in enumerate(self.fields):
            c, li, a, ph, fr = f.arrays
            base[i] = c
            lin[i] = li
            k = a.size
            amp[i, :k], phase[i, :k], freq[i, :k] = a, ph, fr
        return base, lin, amp, phase, freq

    @property
    def kernel_params(self):
        """``(base, lin, amp, phase, freq)`` in the layout the flow kernels expect."""
        return self._kernel

    def _psi(self, x):
        x = np.asarray(x, float)
        return np.stack([f.value(x) for f in self.fields], axis=-1)

    def _diag_matrix(self, d):
        out = np.zeros(d.shape + (self.dim,))
        idx = np.arange(self.dim)
        out[..., idx, idx] = d
        return out

    def g(self, x):
        return self._diag_matrix(np.exp(2.0 * self._psi(x)))

    def ginv(self, x):
        return self._diag_matrix(np.exp(-2.0 * self._psi(x)))

    def gdiag(self, x):
        return np.exp(2.0 * self._psi(x))

    def ginv_diag(self, x):
        return np.exp(-2.0 * self._psi(x))

    def _derivs(self, x, sign):
        n = self.dim
        x = np.asarray(x, float)
        d1 = np.zeros((n, n, n))
        d2 = np.zeros((n, n, n, n))
        for i, f in enumerate(self.fields):
            gi = math.exp(sign * 2.0 * float(f.value(x)))
            gr = f.grad(x)
            he = f.hess(x)
            d1[:, i, i] = sign * 2.0 * gr * gi
            d2[:, :, i, i] = (4.0 * np.outer(gr, gr) + sign * 2.0 * he) * gi
        return d1, d2

    def dg(self, x):
        return self._derivs(x, 1.0)[0]

    def d2g(self, x):
        return self._derivs(x, 1.0)[1]

    def dginv(self, x):
        return self._derivs(x, -1.0)[0]

    def d2ginv(self, x):
        return self._derivs(x, -1.0)[1]

    @property
    def ellipticity_c(self):
        return self._c

    @property
    def is_constant(self):
        return all(not f.terms and not np.any(f.lin) for f in self.fields)


class ConformalMetric(DiagonalMetric):
    """``g(x) = exp(2 phi(x)) I``."""

    family_tag = "conformal"

    def __init__(self, phi, dim=None, domain=None):
        dim = phi.dim if dim is None else dim
        if phi.dim != dim:
            raise ValueError("phi dimension mismatch")
        self.phi = phi
        super().__init__([phi] * dim, domain)

    def conformal_factor(self, x):
        return np.exp(2.0 * self.phi.value(x))


# ---------------------------------------------------------------------------
# pointwise geometry


def christoffel(metric, x):
    """``G[k, i, j] = g^{kl} (d_i g_lj + d_j g_li - d_l g_ij)``.

    This is twice the Levi-Civita symbol, so geodesics satisfy
    ``c'' + 1/2 G(c', c') = 0``.
    """
    x = np.asarray(x, float)
    gi = metric.ginv(x)
    dg = metric.dg(x)  # [m, a, b] = d_m g_ab
    # T[l, i, j] = d_i g_lj + d_j g_li - d_l g_ij
    T = np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg
    return np.einsum("kl,lij->kij", gi, T)


def hamiltonian(metric, x, p):
    """``H(x, p) = (g^{-1}(x) p, p)``; batched over leading axes."""
    p = np.asarray(p, float)
    return np.einsum("...ij,...i,...j->...", metric.ginv(x), p, p)


# ---------------------------------------------------------------------------
# characteristic flow and shooting


@dataclass(frozen=True)
class ShootingOptions:
    """Integrator and Newton settings.

    ``newton_tol`` and ``drift_rel`` are relative: the effective tolerances are
    ``newton_tol * (1 + |x - y|)`` and ``drift_rel * (1 + |p|^2)``.
    """

    steps: int = 256
    newton_tol: float = 1e-10
    max_iter: int = 50
    drift_rel: float = 1e-8
    max_halvings: int = 30

    def drift_budget(self, p):
        return self.drift_rel * (1.0 + float(np.dot(p, p)))

    def tol(self, x, y):
        return self.newton_tol * (1.0 + float(np.linalg.norm(np.asarray(y) - np.asarray(x))))


DEFAULT_OPTIONS = ShootingOptions()


@dataclass
class ShootingResult:
    """Trajectory of the characteristic flow started at ``(x, p0)``."""

    x: np.ndarray
    p0: np.ndarray
    X_traj: np.ndarray
    P_traj: np.ndarray
    alpha1: np.ndarray
    beta1: np.ndarray
    energy: float
    hamiltonian_drift: float
    iterations: int = 0
    residual: float = 0.0

    @property
    def X1(self):
        return self.X_traj[-1]

    @property
    def P1(self):
        return self.P_traj[-1]


def _flow(metric, x, p, steps, tangent):
    x = np.ascontiguousarray(x, float)
    p = np.ascontiguousarray(p, float)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if metric.is_constant:
        Ainv = metric.ginv(x)
        t = np.linspace(0.0, 1.0, steps + 1)[:, None]
        X = x + 2.0 * t * (Ainv @ p)
        P = np.broadcast_to(p, X.shape).copy()
        return X, P, 2.0 * Ainv, np.eye(metric.dim), 0.0
    if not isinstance(metric, DiagonalMetric):
        raise TypeError(f"no flow kernel for {type(metric).__name__}")
    X, P, a, b, drift = kernels.diag_flow(*metric.kernel_params, x, p, int(steps), bool(tangent))
    return np.asarray(X), np.asarray(P), np.asarray(a), np.asarray(b), float(drift)


def geodesic_flow(metric, x, p, steps=None, options=DEFAULT_OPTIONS, tangent=False):
    """Integrate the characteristic equations on ``[0, 1]`` with classical RK4.

    Raises
    ------
    DriftExceeded
        If ``max_t |H(X_t, P_t) - H(x, p)|`` exceeds the drift budget.
    """
    steps = options.steps if steps is None else steps
    X, P, a, b, drift = _flow(metric, x, p, steps, tangent)
    budget = options.drift_budget(p)
    if drift > budget:
        raise DriftExceeded(drift, budget)
    return ShootingResult(
        x=np.asarray(x, float), p0=np.asarray(p, float), X_traj=X, P_traj=P,
        alpha1=a, beta1=b, energy=float(hamiltonian(metric, x, p)), hamiltonian_drift=drift,
    )


def tangent_flow(metric, x, p, steps=None, options=DEFAULT_OPTIONS):
    """``(alpha_1, beta_1) = (D_p X_1, D_p P_1)`` from the linearized flow."""
    r = geodesic_flow(metric, x, p, steps, options, tangent=True)
    return r.alpha1, r.beta1


def endpoint_map(metric, x, p, steps=None, options=DEFAULT_OPTIONS):
    """``E_x(p) = X_1(x, p)``."""
    return geodesic_flow(metric, x, p, steps, options).X1


def invert_endpoint(metric, x, y, options=DEFAULT_OPTIONS, p_init=None):
    """Solve ``E_x(p) = y`` by damped Newton iteration.

    Parameters
    ----------
    p_init : array_like, optional
        Warm start; defaults to ``1/2 g(x) (y - x)``, exact for constant metrics.

    Raises
    ------
    NoConvergence
        After ``options.max_iter`` iterations, or if damping stalls.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.shape != (metric.dim,) or y.shape != (metric.dim,):
        raise ValueError(f"points must have shape ({metric.dim},)")
    if metric.is_constant:
        p = 0.5 * metric.g(x) @ (y - x)
        r = geodesic_flow(metric, x, p, options=options, tangent=True)
        return r
    tol = options.tol(x, y)
    p = 0.5 * metric.g(x) @ (y - x) if p_init is None else np.array(p_init, float)
    cur = geodesic_flow(metric, x, p, options=options, tangent=True)
    res = float(np.linalg.norm(cur.X1 - y))
    it = 0
    while res > tol:
        if it >= options.max_iter:
            raise NoConvergence(it, res)
        it += 1
        try:
            step = np.linalg.solve(cur.alpha1, y - cur.X1)
        except np.linalg.LinAlgError:
            raise NoConvergence(it, res) from None
        t = 1.0
        for _ in range(options.max_halvings):
            try:
                trial = geodesic_flow(metric, x, p + t * step, options=options, tangent=True)
            except DriftExceeded:
                t *= 0.5
                continue
            tres = float(np.linalg.norm(trial.X1 - y))
            if tres < res or tres <= tol:
                break
            t *= 0.5
        else:
            raise NoConvergence(it, res)
        p, cur, res = p + t * step, trial, tres
    cur.iterations = it
    cur.residual = res
    return cur


def energy(metric, x, y, options=DEFAULT_OPTIONS):
    """``e_g(x, y) = H(x, E_x^{-1}(y))``."""
    if np.array_equal(np.asarray(x, float), np.asarray(y, float)):
        return 0.0
    return invert_endpoint(metric, x, y, options).energy


def distance(metric, x, y, options=DEFAULT_OPTIONS):
    """``d_g(x, y) = sqrt(e_g(x, y))``."""
    return math.sqrt(max(energy(metric, x, y, options), 0.0))


def grad_energy(metric, x, y, options=DEFAULT_OPTIONS, p_init=None):
    """``(D_x e, D_y e) = (-p_0, P_1)`` from one shooting solve."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if np.array_equal(x, y):
        z = np.zeros(metric.dim)
        return z, z.copy()
    r = invert_endpoint(metric, x, y, options, p_init=p_init)
    return -r.p0, r.P1.copy()


def _grad_pair(metric, x, y, options, p_init):
    r = invert_endpoint(metric, x, y, options, p_init=p_init)
    return np.concatenate([-r.p0, r.P1])


def hessian_energy(metric, x, y, options=DEFAULT_OPTIONS, h_hess=None):
    """Full ``2N x 2N`` Hessian of ``e_g`` in ``(x, y)``.

    Central differences of the shooting gradient with step
    ``1e-4 (1 + |x - y|)``, symmetrized.  At ``x = y`` the limit
    ``1/2 [[g, -g], [-g, g]]`` is returned.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n = metric.dim
    if np.array_equal(x, y):
        g = metric.g(x)
        return 0.5 * np.block([[g, -g], [-g, g]])
    if metric.is_constant:
        g = metric.g(x)
        return 0.5 * np.block([[g, -g], [-g, g]])
    base = invert_endpoint(metric, x, y, options)
    h = 1e-4 * (1.0 + float(np.linalg.norm(x - y))) if h_hess is None else h_hess
    z = np.concatenate([x, y])
    Hm = np.empty((2 * n, 2 * n))
    for j in range(2 * n):
        cols = []
        for s in (1.0, -1.0):
            zz = z.copy()
            zz[j] += s * h
            cols.append(_grad_pair(metric, zz[:n], zz[n:], options, base.p0))
        Hm[:, j] = (cols[0] - cols[1]) / (2.0 * h)
    return 0.5 * (Hm + Hm.T)


def mixed_block_defect(metric, x, y, hessian=None, options=DEFAULT_OPTIONS):
    """``max |D_xy e + alpha_1^{-1}|`` comparing the Hessian with the tangent flow."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    n = metric.dim
    H = hessian_energy(metric, x, y, options) if hessian is None else hessian
    if np.array_equal(x, y):
        a = 2.0 * metric.ginv(x)
    else:
        a = invert_endpoint(metric, x, y, options).alpha1
    if np.linalg.cond(a) > 1e12:
        raise SingularTangent(f"alpha_1 condition number {np.linalg.cond(a):.3e}")
    return float(np.max(np.abs(H[:n, n:] + np.linalg.inv(a))))


def verify_eikonal(metric, x, y, options=DEFAULT_OPTIONS, method="shooting"):
    """Residuals ``|H(x, D_x e) - e|`` and ``|H(y, D_y e) - e|``.

    ``method="fd"`` uses central differences of the energy for the gradients
    instead of the shooting identities.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if np.array_equal(x, y):
        return 0.0, 0.0
    r = invert_endpoint(metric, x, y, options)
    e = r.energy
    if method == "shooting":
        gx, gy = -r.p0, r.P1
    elif method == "fd":
        gx, gy = _fd_grad(metric, x, y, options, r.p0)
    else:
        raise ValueError(f"unknown method {method!r}")
    return abs(float(hamiltonian(metric, x, gx)) - e), abs(float(hamiltonian(metric, y, gy)) - e)


def _fd_grad(metric, x, y, options, p0, h=None):
    n = metric.dim
    h = 1e-5 * (1.0 + float(np.linalg.norm(x - y))) if h is None else h
    z = np.concatenate([x, y])
    out = np.empty(2 * n)
    for j in range(2 * n):
        vals = []
        for s in (1.0, -1.0):
            zz = z.copy()
            zz[j] += s * h
            vals.append(invert_endpoint(metric, zz[:n], zz[n:], options, p_init=p0).energy)
        out[j] = (vals[0] - vals[1]) / (2.0 * h)
    return out[:n], out[n:]


def straight_line_energy(metric, x, y, nodes=32):
    """``1/4 int_0^1 (g(x + t v) v, v) dt`` with ``v = y - x`` (Gauss-Legendre)."""
    x = np.asarray(x, float)
    v = np.asarray(y, float) - x
    t, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (t + 1.0)
    pts = x + t[:, None] * v
    vals = np.einsum("kij,i,j->k", metric.g(pts), v, v)
    return 0.125 * float(np.dot(w, vals))


# ---------------------------------------------------------------------------
# certification


@dataclass
class GeometryReport:
    """Empirical injectivity radius and fitted derivative constants.

    ``delta_formula`` is ``M^{-4} / c``, the shape of the qualitative radius
    from the existence argument with its unknown constant set to one.
    """

    upsilon_estimate: float
    hessian_bound_L: float
    gradsum_bound_L: float
    delta_formula: float = 0.0
    samples: int = 0
    converged: int = 0
    max_drift: float = 0.0
    max_eikonal_residual: float = 0.0
    family: str = ""
    radius_grid: tuple = field(default_factory=tuple)

    CSV_FIELDS = (
        "family", "upsilon_estimate", "hessian_bound_L", "gradsum_bound_L",
        "delta_formula", "samples", "converged", "max_drift", "max_eikonal_residual",
    )

    def csv_row(self):
        out = []
        for k in self.CSV_FIELDS:
            v = getattr(self, k)
            out.append(repr(float(v)) if isinstance(v, float) else str(v))
        return out


def sample_pairs(metric, count, rmax, rng):
    """Pairs with Euclidean separation up to ``2 rmax / c``, so ``d_g <= rmax``."""
    c = metric.ellipticity_c
    x = metric.sample_points(count, rng)
    d = rng.standard_normal((count, metric.dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    s = (2.0 * rmax / c) * rng.random(count) ** (1.0 / metric.dim)
    return x, x + s[:, None] * d


def probe_injectivity(metric, sample_count=64, radius_grid=(0.25, 0.5, 1.0, 1.5, 2.0),
                      seed=0, hessian_samples=None, directions=50, options=DEFAULT_OPTIONS):
    """Certify a shooting radius by probing and fit the derivative constants.

    For each radius ``r`` on the sorted grid, ``sample_count`` pairs with
    ``d_g <= r`` are shot.  A pair passes when Newton converges and the
    geodesic energy does not exceed the straight-line energy.  The estimate is
    the largest ``r`` below which every pair passed.

    Over passing pairs the report fits
    ``gradsum_bound_L = max |D_x e + D_y e| / |x - y|^2`` and, on up to
    ``hessian_samples`` pairs with ``directions`` random ``(p, q)`` each,
    ``hessian_bound_L = max Q / (|p - q|^2 + |x - y|^2 (|p|^2 + |q|^2))``.
    """
    rng = np.random.default_rng(seed)
    radius_grid = tuple(sorted(float(r) for r in radius_grid))
    ok_pairs = []
    upsilon = 0.0
    samples = 0
    max_drift = 0.0
    max_eik = 0.0
    for r in radius_grid:
        xs, ys = sample_pairs(metric, sample_count, r, rng)
        good = True
        level = []
        for x, y in zip(xs, ys):
            samples += 1
            try:
                res = invert_endpoint(metric, x, y, options)
            except (NoConvergence, DriftExceeded):
                good = False
                continue
            e = res.energy
            if e > straight_line_energy(metric, x, y) * (1.0 + 1e-9) + 1e-14 or e > r * r * (1 + 1e-9):
                good = False
                continue
            level.append((x, y, res))
            max_drift = max(max_drift, res.hamiltonian_drift)
            max_eik = max(max_eik, abs(float(hamiltonian(metric, y, res.P1)) - e))
        ok_pairs.extend(level)
        if not good:
            break
        upsilon = r

    gradsum = 0.0
    for x, y, res in ok_pairs:
        d2 = float(np.dot(x - y, x - y))
        if d2 > 0:
            gradsum = max(gradsum, float(np.linalg.norm(res.P1 - res.p0)) / d2)

    hess_L = 0.0
    pool = ok_pairs if hessian_samples is None else ok_pairs[:hessian_samples]
    n = metric.dim
    for x, y, _ in pool:
        H = hessian_energy(metric, x, y, options)
        hess_L = max(hess_L, hessian_ratio(H, x, y, rng, directions))

    M = metric.c2_bound_M
    return GeometryReport(
        upsilon_estimate=upsilon,
        hessian_bound_L=hess_L,
        gradsum_bound_L=gradsum,
        delta_formula=M ** -4 / metric.ellipticity_c,
        samples=samples,
        converged=len(ok_pairs),
        max_drift=max_drift,
        max_eikonal_residual=max_eik,
        family=metric.family_tag,
        radius_grid=radius_grid,
    )


def hessian_ratio(H, x, y, rng, directions):
    """Largest ``Q(p, q) / (|p - q|^2 + |x - y|^2 (|p|^2 + |q|^2))`` over random directions."""
    n = len(x)
    d2 = float(np.dot(np.asarray(x) - y, np.asarray(x) - y))
    best = 0.0
    for _ in range(directions):
        v = rng.standard_normal(2 * n)
        p, q = v[:n], v[n:]
        den = float(np.dot(p - q, p - q)) + d2 * float(np.dot(p, p) + np.dot(q, q))
        if den > 0:
            best = max(best, float(v @ H @ v) / den)
    return best
