"""Pure numpy implementations of the hot kernels.

Signatures match the compiled ``_core`` module exactly; ``_backend`` picks one
at import time.
"""

import numpy as np


def _fields(base, lin, amp, phase, freq, x):
    # psi_i(x) = base_i + lin_i . x + sum_j amp_ij sin(freq_ij . x + phase_ij)
    arg = freq @ x + phase
    s, c = np.sin(arg), np.cos(arg)
    psi = base + lin @ x + np.sum(amp * s, axis=1)
    grad = lin + np.einsum("ij,ijk->ik", amp * c, freq)
    hess = -np.einsum("ij,ijk,ijl->ikl", amp * s, freq, freq)
    return psi, grad, hess


def _rhs(base, lin, amp, phase, freq, state, n, tangent):
    X = state[:n]
    P = state[n:2 * n]
    psi, grad, hess = _fields(base, lin, amp, phase, freq, X)
    gi = np.exp(-2.0 * psi)                                  # g^{ii}
    dgi = -2.0 * grad * gi[:, None]                          # [i, k] = d_k g^{ii}
    out = np.empty_like(state)
    out[:n] = 2.0 * gi * P
    P2 = P * P
    out[n:2 * n] = -(dgi.T @ P2)
    if tangent:
        a = state[2 * n:2 * n + n * n].reshape(n, n)
        b = state[2 * n + n * n:].reshape(n, n)
        d2gi = (4.0 * grad[:, :, None] * grad[:, None, :] - 2.0 * hess) * gi[:, None, None]
        da = 2.0 * (dgi * P[:, None]) @ a + 2.0 * gi[:, None] * b
        db = -np.einsum("ikl,i,lj->kj", d2gi, P2, a) - 2.0 * (dgi.T * P[None, :]) @ b
        out[2 * n:2 * n + n * n] = da.ravel()
        out[2 * n + n * n:] = db.ravel()
    return out


def _ham(base, lin, amp, phase, freq, X, P):
    psi = _fields(base, lin, amp, phase, freq, X)[0]
    return float(np.sum(np.exp(-2.0 * psi) * P * P))


def diag_flow(base, lin, amp, phase, freq, x0, p0, steps, tangent):
    """RK4 for the characteristic (and optionally tangent) flow on ``[0, 1]``.

    Metric is ``g = diag(exp(2 psi_i))``.  Returns ``(X, P, alpha1, beta1, drift)``.
    """
    n = x0.shape[0]
    size = 2 * n + (2 * n * n if tangent else 0)
    y = np.zeros(size)
    y[:n] = x0
    y[n:2 * n] = p0
    if tangent:
        y[2 * n + n * n:] = np.eye(n).ravel()
    X = np.empty((steps + 1, n))
    P = np.empty((steps + 1, n))
    X[0], P[0] = x0, p0
    h = 1.0 / steps
    H0 = _ham(base, lin, amp, phase, freq, y[:n], y[n:2 * n])
    drift = 0.0
    args = (base, lin, amp, phase, freq)
    for s in range(steps):
        k1 = _rhs(*args, y, n, tangent)
        k2 = _rhs(*args, y + 0.5 * h * k1, n, tangent)
        k3 = _rhs(*args, y + 0.5 * h * k2, n, tangent)
        k4 = _rhs(*args, y + h * k3, n, tangent)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        X[s + 1] = y[:n]
        P[s + 1] = y[n:2 * n]
        drift = max(drift, abs(_ham(*args, y[:n], y[n:2 * n]) - H0))
    if tangent:
        alpha = y[2 * n:2 * n + n * n].reshape(n, n).copy()
        beta = y[2 * n + n * n:].reshape(n, n).copy()
    else:
        alpha = np.full((n, n), np.nan)
        beta = np.full((n, n), np.nan)
    return X, P, alpha, beta, drift


def lf_advance_1d(u, ginv, xi_dot, duration, h, cfl, max_substeps, p_bound=0.0):
    """Lax-Friedrichs steps for ``u_t = xi_dot * ginv(x) u_x^2`` over ``duration``.

    Returns ``(u_new, substeps)``; ``substeps == -1`` flags the cap being hit.
    ``p_bound`` floors the slopes entering the dissipation coefficient.
    """
    u = np.array(u, dtype=float)
    if xi_dot == 0.0 or duration <= 0.0:
        return u, 0
    a = abs(xi_dot)
    remaining = duration
    count = 0
    while remaining > 0.0:
        if count >= max_substeps:
            return u, -1
        up = np.roll(u, -1)
        um = np.roll(u, 1)
        dp = (up - u) / h
        dm = (u - um) / h
        sigma = 2.0 * a * float(np.max(ginv * np.maximum(np.maximum(np.abs(dp), np.abs(dm)), p_bound)))
        dt = remaining if sigma == 0.0 else min(remaining, cfl * h / sigma)
        pbar = 0.5 * (dp + dm)
        u = u + dt * (xi_dot * ginv * pbar * pbar + 0.5 * sigma * (dp - dm))
        remaining -= dt
        count += 1
        if remaining <= 1e-15 * duration:
            break
    return u, count


def lf_advance_2d(u, g11, g12, g22, xi_dot, duration, h, cfl, max_substeps, p_bound=0.0):
    """2-D analogue of :func:`lf_advance_1d` with ``H = (g^{-1} p, p)``."""
    u = np.array(u, dtype=float)
    if xi_dot == 0.0 or duration <= 0.0:
        return u, 0
    a = abs(xi_dot)
    remaining = duration
    count = 0
    while remaining > 0.0:
        if count >= max_substeps:
            return u, -1
        dxp = (np.roll(u, -1, axis=0) - u) / h
        dxm = (u - np.roll(u, 1, axis=0)) / h
        dyp = (np.roll(u, -1, axis=1) - u) / h
        dym = (u - np.roll(u, 1, axis=1)) / h
        px = np.maximum(np.maximum(np.abs(dxp), np.abs(dxm)), p_bound)
        py = np.maximum(np.maximum(np.abs(dyp), np.abs(dym)), p_bound)
        sx = 2.0 * a * float(np.max(np.abs(g11) * px + np.abs(g12) * py))
        sy = 2.0 * a * float(np.max(np.abs(g12) * px + np.abs(g22) * py))
        rate = (sx + sy) / h
        dt = remaining if rate == 0.0 else min(remaining, cfl / rate)
        qx = 0.5 * (dxp + dxm)
        qy = 0.5 * (dyp + dym)
        ham = g11 * qx * qx + 2.0 * g12 * qx * qy + g22 * qy * qy
        u = u + dt * (xi_dot * ham + 0.5 * sx * (dxp - dxm) + 0.5 * sy * (dyp - dym))
        remaining -= dt
        count += 1
        if remaining <= 1e-15 * duration:
            break
    return u, count


def hopf_lax_1d(u0, h, period, s):
    """``max_j (u0_j - d(x_i, x_j)^2 / (4 s))`` with periodic minimum-image distance."""
    u0 = np.asarray(u0, dtype=float)
    n = u0.size
    idx = np.arange(n)
    d = np.abs(idx[:, None] - idx[None, :]) * h
    d = np.minimum(d, period - d)
    return np.max(u0[None, :] - d * d / (4.0 * s), axis=1)


BACKEND = "python"
