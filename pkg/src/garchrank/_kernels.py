"""Numba kernels for the GARCH recursions and their exact derivatives.

The volatility recursion is sequential, so these inner loops are jitted.
All kernels operate on the flat parameter vector theta = (omega, alpha_1..p,
beta_1..q) and treat values exceeding OVERFLOW as divergence (ok=False)
rather than propagating infinities.
"""

from __future__ import annotations

import numpy as np
from numba import njit

OVERFLOW = 1e300


@njit(cache=True)
def recursion(theta, x2, p, q, omega_init):
    """Volatility recursion sigma2_t, t=1..n, with pre-sample values set to
    omega (omega_init) or to x2[0]."""
    n = x2.shape[0]
    omega = theta[0]
    m = max(p, q)
    c = omega if omega_init else x2[0]
    s2 = np.empty(n + m)
    xx = np.empty(n + m)
    for i in range(m):
        s2[i] = c
        xx[i] = c
    for i in range(n):
        xx[m + i] = x2[i]
    for t in range(m, n + m):
        v = omega
        for i in range(p):
            v += theta[1 + i] * xx[t - 1 - i]
        for j in range(q):
            v += theta[1 + p + j] * s2[t - 1 - j]
        if not np.isfinite(v) or v > OVERFLOW:
            return s2[m:], False
        s2[t] = v
    return s2[m:].copy(), True


@njit(cache=True)
def recursion_grad(theta, x2, p, q, omega_init):
    """Volatility recursion plus d sigma2_t / d theta, t=1..n.

    The gradient differentiates exactly what ``recursion`` computes: under
    omega-init the pre-sample constants equal omega, so both the pre-sample
    sigma2 terms and the pre-sample squared observations contribute to the
    omega derivative.
    """
    n = x2.shape[0]
    d = 1 + p + q
    omega = theta[0]
    m = max(p, q)
    c = omega if omega_init else x2[0]
    s2 = np.empty(n + m)
    g = np.zeros((n + m, d))
    xx = np.empty(n + m)
    for i in range(m):
        s2[i] = c
        xx[i] = c
        if omega_init:
            g[i, 0] = 1.0
    for i in range(n):
        xx[m + i] = x2[i]
    for t in range(m, n + m):
        v = omega
        g[t, 0] = 1.0
        for i in range(p):
            a = theta[1 + i]
            v += a * xx[t - 1 - i]
            g[t, 1 + i] += xx[t - 1 - i]
            if omega_init and t - 1 - i < m:
                g[t, 0] += a
        for j in range(q):
            b = theta[1 + p + j]
            v += b * s2[t - 1 - j]
            g[t, 1 + p + j] += s2[t - 1 - j]
            for l in range(d):
                g[t, l] += b * g[t - 1 - j, l]
        if not np.isfinite(v) or v > OVERFLOW:
            return s2[m:], g[m:], False
        s2[t] = v
    return s2[m:].copy(), g[m:].copy(), True


@njit(cache=True)
def nll_grad(theta, x2, p, q, omega_init):
    """Mean Gaussian quasi-negative-log-likelihood and its theta gradient."""
    n = x2.shape[0]
    d = 1 + p + q
    omega = theta[0]
    m = max(p, q)
    c = omega if omega_init else x2[0]
    s2 = np.empty(n + m)
    g = np.zeros((n + m, d))
    xx = np.empty(n + m)
    grad = np.zeros(d)
    for i in range(m):
        s2[i] = c
        xx[i] = c
        if omega_init:
            g[i, 0] = 1.0
    for i in range(n):
        xx[m + i] = x2[i]
    nll = 0.0
    for t in range(m, n + m):
        v = omega
        g[t, 0] = 1.0
        for i in range(p):
            a = theta[1 + i]
            v += a * xx[t - 1 - i]
            g[t, 1 + i] += xx[t - 1 - i]
            if omega_init and t - 1 - i < m:
                g[t, 0] += a
        for j in range(q):
            b = theta[1 + p + j]
            v += b * s2[t - 1 - j]
            g[t, 1 + p + j] += s2[t - 1 - j]
            for l in range(d):
                g[t, l] += b * g[t - 1 - j, l]
        if not np.isfinite(v) or v > OVERFLOW:
            return np.inf, grad, False
        s2[t] = v
        r = xx[t] / v
        nll += np.log(v) + r
        w = (1.0 - r) / v
        for l in range(d):
            grad[l] += w * g[t, l]
    return nll / n, grad / n, True


@njit(cache=True)
def simulate_path(theta, eps, p, q):
    """Generate (x_t, sigma2_t) from innovations, recursion seeded at omega."""
    n = eps.shape[0]
    omega = theta[0]
    m = max(p, q)
    s2 = np.empty(n + m)
    xx = np.empty(n + m)
    x = np.empty(n)
    for i in range(m):
        s2[i] = omega
        xx[i] = omega
    for t in range(m, n + m):
        v = omega
        for i in range(p):
            v += theta[1 + i] * xx[t - 1 - i]
        for j in range(q):
            v += theta[1 + p + j] * s2[t - 1 - j]
        if not np.isfinite(v) or v > OVERFLOW:
            return x, s2[m:], False
        s2[t] = v
        val = np.sqrt(v) * eps[t - m]
        x[t - m] = val
        xx[t] = val * val
    return x, s2[m:].copy(), True


@njit(cache=True)
def lyapunov_paths(alpha, beta, e2, renorm_every):
    """Per-replicate estimates of t^-1 log ||Delta_1 ... Delta_t||.

    ``e2`` has shape (reps, t_max).  The companion matrix layout drops
    degenerate blocks: dim = p+q, with the squared-observation block first.
    """
    p = alpha.shape[0]
    q = beta.shape[0]
    dim = p + q
    reps, tmax = e2.shape
    out = np.empty(reps)
    P = np.empty((dim, dim))
    D = np.zeros((dim, dim))
    T = np.empty((dim, dim))
    for r in range(reps):
        for i in range(dim):
            for j in range(dim):
                P[i, j] = 1.0 if i == j else 0.0
        acc = 0.0
        for t in range(tmax):
            e = e2[r, t]
            for i in range(dim):
                for j in range(dim):
                    D[i, j] = 0.0
            if p >= 1:
                for j in range(p):
                    D[0, j] = alpha[j] * e
                for j in range(q):
                    D[0, p + j] = beta[j] * e
                for i in range(1, p):
                    D[i, i - 1] = 1.0
                if q >= 1:
                    for j in range(p):
                        D[p, j] = alpha[j]
                    for j in range(q):
                        D[p, p + j] = beta[j]
                    for i in range(1, q):
                        D[p + i, p + i - 1] = 1.0
            else:
                for j in range(q):
                    D[0, j] = beta[j]
                for i in range(1, q):
                    D[i, i - 1] = 1.0
            for i in range(dim):
                for j in range(dim):
                    s = 0.0
                    for l in range(dim):
                        s += D[i, l] * P[l, j]
                    T[i, j] = s
            for i in range(dim):
                for j in range(dim):
                    P[i, j] = T[i, j]
            if (t + 1) % renorm_every == 0:
                f = 0.0
                for i in range(dim):
                    for j in range(dim):
                        f += P[i, j] * P[i, j]
                f = np.sqrt(f)
                if f <= 0.0:
                    acc = -np.inf
                    break
                acc += np.log(f)
                for i in range(dim):
                    for j in range(dim):
                        P[i, j] /= f
        if np.isfinite(acc):
            f = 0.0
            for i in range(dim):
                for j in range(dim):
                    f += P[i, j] * P[i, j]
            acc += 0.5 * np.log(f)
        out[r] = acc / tmax
    return out


@njit(cache=True)
def kde_eval(sample, h, points):
    """Gaussian kernel density estimate of ``sample`` evaluated at ``points``."""
    n = sample.shape[0]
    m = points.shape[0]
    out = np.empty(m)
    c = 1.0 / (n * h * np.sqrt(2.0 * np.pi))
    for i in range(m):
        acc = 0.0
        xi = points[i]
        for s in range(n):
            z = (xi - sample[s]) / h
            acc += np.exp(-0.5 * z * z)
        out[i] = c * acc
    return out
