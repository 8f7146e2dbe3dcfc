# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: characteristic/tangent flow, Lax-Friedrichs sweeps, Hopf-Lax.

Every function mirrors the pure numpy version in ``_fallback`` argument for
argument and returns the same objects.
"""

import numpy as np
from libc.math cimport sin, cos, exp, fabs, fmin, fmax
from libc.stdlib cimport malloc, free

BACKEND = "compiled"


cdef struct Fields:
    int n
    int m
    const double* const_
    const double* lin      # [i, k]
    const double* amp      # [i, j]
    const double* phase    # [i, j]
    const double* freq     # [i, j, k]


cdef void _metric(Fields* F, const double* x, double* gi, double* dgi, double* d2gi,
                  double* grad, double* hess, bint second) noexcept nogil:
    # gi[i] = g^{ii}; dgi[i*n+k] = d_k g^{ii}; d2gi[(i*n+k)*n+l] = d_kl g^{ii}
    cdef int n = F.n, m = F.m
    cdef int i, j, k, l
    cdef double psi, arg, a, s, c
    for i in range(n):
        psi = F.const_[i]
        for k in range(n):
            psi += F.lin[i * n + k] * x[k]
            grad[k] = F.lin[i * n + k]
            if second:
                for l in range(n):
                    hess[k * n + l] = 0.0
        for j in range(m):
            a = F.amp[i * m + j]
            if a == 0.0:
                continue
            arg = F.phase[i * m + j]
            for k in range(n):
                arg += F.freq[(i * m + j) * n + k] * x[k]
            s = sin(arg)
            c = cos(arg)
            psi += a * s
            for k in range(n):
                grad[k] += a * c * F.freq[(i * m + j) * n + k]
                if second:
                    for l in range(n):
                        hess[k * n + l] -= a * s * F.freq[(i * m + j) * n + k] * F.freq[(i * m + j) * n + l]
        gi[i] = exp(-2.0 * psi)
        for k in range(n):
            dgi[i * n + k] = -2.0 * grad[k] * gi[i]
            if second:
                for l in range(n):
                    d2gi[(i * n + k) * n + l] = (4.0 * grad[k] * grad[l] - 2.0 * hess[k * n + l]) * gi[i]


cdef double _ham(Fields* F, const double* y, double* gi, double* dgi, double* d2gi,
                 double* grad, double* hess) noexcept nogil:
    cdef int i, n = F.n
    cdef double H = 0.0
    _metric(F, y, gi, dgi, d2gi, grad, hess, False)
    for i in range(n):
        H += gi[i] * y[n + i] * y[n + i]
    return H


cdef void _rhs(Fields* F, const double* y, double* out, bint tangent,
               double* gi, double* dgi, double* d2gi, double* grad, double* hess) noexcept nogil:
    cdef int n = F.n
    cdef int i, j, k, l
    cdef double acc, Pi
    cdef const double* P = y + n
    cdef const double* A = y + 2 * n
    cdef const double* B = y + 2 * n + n * n
    _metric(F, y, gi, dgi, d2gi, grad, hess, tangent)
    for i in range(n):
        out[i] = 2.0 * gi[i] * P[i]
    for k in range(n):
        acc = 0.0
        for i in range(n):
            acc += dgi[i * n + k] * P[i] * P[i]
        out[n + k] = -acc
    if not tangent:
        return
    for i in range(n):
        Pi = P[i]
        for j in range(n):
            acc = 2.0 * gi[i] * B[i * n + j]
            for k in range(n):
                acc += 2.0 * dgi[i * n + k] * Pi * A[k * n + j]
            out[2 * n + i * n + j] = acc
    for k in range(n):
        for j in range(n):
            acc = 0.0
            for i in range(n):
                Pi = P[i]
                acc -= 2.0 * dgi[i * n + k] * Pi * B[i * n + j]
                for l in range(n):
                    acc -= d2gi[(i * n + k) * n + l] * Pi * Pi * A[l * n + j]
            out[2 * n + n * n + k * n + j] = acc


def diag_flow(base, lin, amp, phase, freq, x0, p0, int steps, bint tangent):
    """RK4 for the characteristic (and optionally tangent) flow on ``[0, 1]``.

    Metric is ``g = diag(exp(2 psi_i))``.  Returns ``(X, P, alpha1, beta1, drift)``.
    """
    cdef double[::1] c_const = np.ascontiguousarray(base, dtype=np.float64)
    cdef double[::1] c_lin = np.ascontiguousarray(lin, dtype=np.float64).ravel()
    amp_a = np.ascontiguousarray(amp, dtype=np.float64)
    cdef double[::1] c_amp = amp_a.ravel()
    cdef double[::1] c_phase = np.ascontiguousarray(phase, dtype=np.float64).ravel()
    cdef double[::1] c_freq = np.ascontiguousarray(freq, dtype=np.float64).ravel()
    cdef int n = c_const.shape[0]
    cdef int m = amp_a.shape[1] if amp_a.ndim == 2 else 0
    cdef Fields F
    # zero-length memoryviews have no valid data pointer; point at a dummy
    cdef double dummy = 0.0
    F.n = n
    F.m = m
    F.const_ = &c_const[0]
    F.lin = &c_lin[0]
    F.amp = &c_amp[0] if m > 0 else &dummy
    F.phase = &c_phase[0] if m > 0 else &dummy
    F.freq = &c_freq[0] if m > 0 else &dummy

    cdef int size = 2 * n + (2 * n * n if tangent else 0)
    X_out = np.empty((steps + 1, n))
    P_out = np.empty((steps + 1, n))
    cdef double[:, ::1] Xv = X_out
    cdef double[:, ::1] Pv = P_out
    cdef double[::1] xv = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(p0, dtype=np.float64)

    cdef double* work = <double*> malloc(sizeof(double) * (6 * size + 3 * n + 2 * n * n * n + 2 * n * n + n))
    if work == NULL:
        raise MemoryError()
    cdef double* y = work
    cdef double* k1 = work + size
    cdef double* k2 = work + 2 * size
    cdef double* k3 = work + 3 * size
    cdef double* k4 = work + 4 * size
    cdef double* tmp = work + 5 * size
    cdef double* gi = work + 6 * size
    cdef double* grad = gi + n
    cdef double* dgi = grad + n
    cdef double* hess = dgi + n * n
    cdef double* d2gi = hess + n * n

    cdef int i, s
    cdef double h = 1.0 / steps
    cdef double H0, Ht, drift = 0.0
    try:
        with nogil:
            for i in range(size):
                y[i] = 0.0
            for i in range(n):
                y[i] = xv[i]
                y[n + i] = pv[i]
                Xv[0, i] = xv[i]
                Pv[0, i] = pv[i]
            if tangent:
                for i in range(n):
                    y[2 * n + n * n + i * n + i] = 1.0
            H0 = _ham(&F, y, gi, dgi, d2gi, grad, hess)
            for s in range(steps):
                _rhs(&F, y, k1, tangent, gi, dgi, d2gi, grad, hess)
                for i in range(size):
                    tmp[i] = y[i] + 0.5 * h * k1[i]
                _rhs(&F, tmp, k2, tangent, gi, dgi, d2gi, grad, hess)
                for i in range(size):
                    tmp[i] = y[i] + 0.5 * h * k2[i]
                _rhs(&F, tmp, k3, tangent, gi, dgi, d2gi, grad, hess)
                for i in range(size):
                    tmp[i] = y[i] + h * k3[i]
                _rhs(&F, tmp, k4, tangent, gi, dgi, d2gi, grad, hess)
                for i in range(size):
                    y[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                for i in range(n):
                    Xv[s + 1, i] = y[i]
                    Pv[s + 1, i] = y[n + i]
                Ht = _ham(&F, y, gi, dgi, d2gi, grad, hess)
                drift = fmax(drift, fabs(Ht - H0))
        if tangent:
            alpha = np.array([y[2 * n + i] for i in range(n * n)]).reshape(n, n)
            beta = np.array([y[2 * n + n * n + i] for i in range(n * n)]).reshape(n, n)
        else:
            alpha = np.full((n, n), np.nan)
            beta = np.full((n, n), np.nan)
    finally:
        free(work)
    return X_out, P_out, alpha, beta, drift


def lf_advance_1d(u, ginv, double xi_dot, double duration, double h, double cfl, int max_substeps,
                  double p_bound=0.0):
    """Lax-Friedrichs steps for ``u_t = xi_dot * ginv(x) u_x^2`` over ``duration``.

    Returns ``(u_new, substeps)``; ``substeps == -1`` flags the cap being hit.
    ``p_bound`` floors the slopes entering the dissipation coefficient.
    """
    out = np.array(u, dtype=np.float64)
    if xi_dot == 0.0 or duration <= 0.0:
        return out, 0
    cdef double[::1] v = out
    cdef double[::1] g = np.ascontiguousarray(ginv, dtype=np.float64)
    cdef int n = v.shape[0]
    new = np.empty(n)
    cdef double[::1] w = new
    cdef double a = fabs(xi_dot)
    cdef double remaining = duration, sigma, dt, dp, dm, pbar
    cdef int count = 0, i, ip, im
    with nogil:
        while remaining > 0.0:
            if count >= max_substeps:
                count = -1
                break
            sigma = 0.0
            for i in range(n):
                ip = i + 1 if i + 1 < n else 0
                im = i - 1 if i > 0 else n - 1
                dp = fabs(v[ip] - v[i])
                dm = fabs(v[i] - v[im])
                sigma = fmax(sigma, g[i] * fmax(fmax(dp, dm), p_bound * h))
            sigma = 2.0 * a * sigma / h
            if sigma == 0.0:
                dt = remaining
            else:
                dt = fmin(remaining, cfl * h / sigma)
            for i in range(n):
                ip = i + 1 if i + 1 < n else 0
                im = i - 1 if i > 0 else n - 1
                dp = (v[ip] - v[i]) / h
                dm = (v[i] - v[im]) / h
                pbar = 0.5 * (dp + dm)
                w[i] = v[i] + dt * (xi_dot * g[i] * pbar * pbar + 0.5 * sigma * (dp - dm))
            for i in range(n):
                v[i] = w[i]
            remaining -= dt
            count += 1
            if remaining <= 1e-15 * duration:
                break
    return out, count


def lf_advance_2d(u, g11, g12, g22, double xi_dot, double duration, double h, double cfl,
                  int max_substeps, double p_bound=0.0):
    """2-D analogue of :func:`lf_advance_1d` with ``H = (g^{-1} p, p)``."""
    out = np.array(u, dtype=np.float64, order="C")
    if xi_dot == 0.0 or duration <= 0.0:
        return out, 0
    cdef double[:, ::1] v = out
    cdef double[:, ::1] a11 = np.ascontiguousarray(g11, dtype=np.float64)
    cdef double[:, ::1] a12 = np.ascontiguousarray(g12, dtype=np.float64)
    cdef double[:, ::1] a22 = np.ascontiguousarray(g22, dtype=np.float64)
    cdef int nx = v.shape[0], ny = v.shape[1]
    new = np.empty((nx, ny))
    cdef double[:, ::1] w = new
    cdef double a = fabs(xi_dot)
    cdef double remaining = duration, sx, sy, rate, dt
    cdef double dxp, dxm, dyp, dym, px, py, qx, qy, ham
    cdef int count = 0, i, j, ip, im, jp, jm
    with nogil:
        while remaining > 0.0:
            if count >= max_substeps:
                count = -1
                break
            sx = 0.0
            sy = 0.0
            for i in range(nx):
                ip = i + 1 if i + 1 < nx else 0
                im = i - 1 if i > 0 else nx - 1
                for j in range(ny):
                    jp = j + 1 if j + 1 < ny else 0
                    jm = j - 1 if j > 0 else ny - 1
                    px = fmax(fmax(fabs(v[ip, j] - v[i, j]), fabs(v[i, j] - v[im, j])) / h, p_bound)
                    py = fmax(fmax(fabs(v[i, jp] - v[i, j]), fabs(v[i, j] - v[i, jm])) / h, p_bound)
                    sx = fmax(sx, fabs(a11[i, j]) * px + fabs(a12[i, j]) * py)
                    sy = fmax(sy, fabs(a12[i, j]) * px + fabs(a22[i, j]) * py)
            sx *= 2.0 * a
            sy *= 2.0 * a
            rate = (sx + sy) / h
            if rate == 0.0:
                dt = remaining
            else:
                dt = fmin(remaining, cfl / rate)
            for i in range(nx):
                ip = i + 1 if i + 1 < nx else 0
                im = i - 1 if i > 0 else nx - 1
                for j in range(ny):
                    jp = j + 1 if j + 1 < ny else 0
                    jm = j - 1 if j > 0 else ny - 1
                    dxp = (v[ip, j] - v[i, j]) / h
                    dxm = (v[i, j] - v[im, j]) / h
                    dyp = (v[i, jp] - v[i, j]) / h
                    dym = (v[i, j] - v[i, jm]) / h
                    qx = 0.5 * (dxp + dxm)
                    qy = 0.5 * (dyp + dym)
                    ham = a11[i, j] * qx * qx + 2.0 * a12[i, j] * qx * qy + a22[i, j] * qy * qy
                    w[i, j] = v[i, j] + dt * (xi_dot * ham + 0.5 * sx * (dxp - dxm)
                                              + 0.5 * sy * (dyp - dym))
            for i in range(nx):
                for j in range(ny):
                    v[i, j] = w[i, j]
            remaining -= dt
            count += 1
            if remaining <= 1e-15 * duration:
                break
    return out, count


def hopf_lax_1d(u0, double h, double period, double s):
    """``max_j (u0_j - d(x_i, x_j)^2 / (4 s))`` with periodic minimum-image distance."""
    cdef double[::1] u = np.ascontiguousarray(u0, dtype=np.float64)
    cdef int n = u.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    cdef int i, j, k
    cdef double best, d, val, inv = 1.0 / (4.0 * s)
    with nogil:
        for i in range(n):
            best = -1e308
            for j in range(n):
                k = i - j if i >= j else j - i
                d = k * h
                d = fmin(d, period - d)
                val = u[j] - d * d * inv
                if val > best:
                    best = val
            o[i] = best
    return out
