"""Gaussian quasi-maximum-likelihood fitting and per-model diagnostics.

The fit minimizes

    I_n(theta) = (1/n) sum_t [ log sigma2_t(theta) + x_t^2 / sigma2_t(theta) ]

over the positive orthant via an exp reparameterization, with deterministic
multi-starts.  Diagnostics are the plug-in quantities consumed by the
dispersion-matrix assembly: U_hat (outer product of the relative volatility
gradient u_t), tau_hat = mean(u_t)/2, kappa_hat (standardized fourth moment
of the residuals) and delta_hat = U_hat^{-1} mean(u_t).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import _kernels
from .errors import FitError
from .garch import GarchSpec, InitRule, _check_series

IDENTIFIABILITY_FLOOR = 20
BOUNDARY_EPS = 1e-8


@dataclass(frozen=True)
class FitResult:
    """QML estimate with fitted volatilities, residuals and fit metadata."""

    spec_hat: GarchSpec
    objective: float
    sigma2: np.ndarray
    residuals: np.ndarray
    converged: bool
    iterations: int
    init_rule: InitRule
    boundary: bool = False
    n_starts: int = 1


@dataclass(frozen=True)
class ModelDiagnostics:
    """Plug-in estimates feeding the dispersion-matrix assembly."""

    U_hat: np.ndarray
    tau_hat: np.ndarray
    kappa_hat: float
    delta_hat: np.ndarray


def negative_quasi_loglik(spec: GarchSpec, x, init_rule: InitRule = InitRule.OMEGA) -> float:
    """Mean Gaussian quasi-negative-log-likelihood at ``spec``."""
    x = _check_series(x)
    value, _, ok = _kernels.nll_grad(spec.theta, x * x, spec.p, spec.q,
                                     init_rule is InitRule.OMEGA)
    if not ok:
        raise _divergence()
    return float(value)


def negative_quasi_loglik_grad(spec: GarchSpec, x, init_rule: InitRule = InitRule.OMEGA) -> np.ndarray:
    """Gradient of the quasi-likelihood objective with respect to theta."""
    x = _check_series(x)
    _, grad, ok = _kernels.nll_grad(spec.theta, x * x, spec.p, spec.q,
                                    init_rule is InitRule.OMEGA)
    if not ok:
        raise _divergence()
    return grad


def _divergence():
    from .errors import DivergenceError

    return DivergenceError("volatility recursion overflowed")


def _default_starts(v: float, p: int, q: int, starts: int) -> list[np.ndarray]:
    patterns = [(0.10, 0.20), (0.30, 0.50), (0.05, 0.80)]
    out, seen = [], set()
    for i in range(starts):
        a_tot, b_tot = patterns[i % len(patterns)]
        scale = 1.0 + 0.5 * (i // len(patterns))
        if p == 0:
            a_tot = 0.0
        if q == 0:
            b_tot = 0.0
        omega = max(v * (1.0 - a_tot - b_tot), 1e-8 * v) * scale
        theta = np.empty(1 + p + q)
        theta[0] = omega
        theta[1:1 + p] = a_tot / p if p else 0.0
        theta[1 + p:] = b_tot / q if q else 0.0
        key = tuple(np.round(theta, 12))
        if key not in seen:
            seen.add(key)
            out.append(theta)
    return out


def fit(x, p: int, q: int, *, init_rule: InitRule = InitRule.OMEGA, starts: int = 3,
        tol: float = 1e-8, maxiter: int = 300, start_theta=None) -> FitResult:
    """QML fit of a GARCH(p, q) model.

    Minimizes the quasi-likelihood by limited-memory quasi-Newton descent
    over log coordinates with ``starts``
    deterministic initial points (or a single caller-supplied
    ``start_theta``).  The returned result carries converged=False when the
    gradient tolerance was not met; a FitError is raised only when every
    start diverged.
    """
    x = _check_series(x)
    n = x.size
    d = 1 + p + q
    if p < 0 or q < 0:
        raise ValueError("model orders must be nonnegative")
    if n < IDENTIFIABILITY_FLOOR * d:
        raise ValueError(f"need at least {IDENTIFIABILITY_FLOOR * d} observations "
                         f"to fit {d} parameters, got {n}")
    v = float(np.mean(x * x))
    if v <= 0.0:
        raise FitError("series is identically zero")

    # Standardizing x makes the optimizer path scale-free; theta is mapped
    # back afterwards (omega scales by the squared factor).
    s2_scale = v
    u2 = (x * x) / s2_scale
    omega_init = init_rule is InitRule.OMEGA

    def objective(z):
        theta = np.exp(np.clip(z, -600.0, 600.0))
        value, grad, ok = _kernels.nll_grad(theta, u2, p, q, omega_init)
        if not ok or not np.isfinite(value):
            return 1e10 * (1.0 + float(z @ z)), 2e10 * z
        return value, grad * theta

    if start_theta is not None:
        theta0 = np.asarray(start_theta, dtype=float).copy()
        if theta0.shape != (d,):
            raise ValueError(f"start_theta must have length {d}")
        theta0[0] = theta0[0] / s2_scale
        start_list = [np.maximum(theta0, 1e-10)]
    else:
        start_list = _default_starts(1.0, p, q, starts)

    best = None
    for theta0 in start_list:
        res = minimize(objective, np.log(theta0), jac=True, method="L-BFGS-B",
                       options={"gtol": tol, "ftol": 1e-12, "maxiter": maxiter})
        value = float(res.fun)
        if not np.isfinite(value) or value >= 1e9:
            continue
        if best is None or value < best[0]:
            best = (value, res)
    if best is None:
        raise FitError("all optimizer starts diverged", partial=start_list)

    _, res = best
    theta_hat = np.exp(np.clip(res.x, -600.0, 600.0))
    theta_hat[0] *= s2_scale
    converged = bool(res.success)

    boundary = False
    lag = theta_hat[1:]
    small = lag < BOUNDARY_EPS
    if np.any(small):
        lag[small] = 0.0
        boundary = True
    beta_sum = theta_hat[1 + p:].sum()
    if beta_sum >= 1.0:
        theta_hat[1 + p:] *= (1.0 - 1e-6) / beta_sum
        boundary = True
        converged = False

    spec_hat = GarchSpec.from_theta(theta_hat, p, q)
    value, _, ok = _kernels.nll_grad(theta_hat, x * x, p, q, omega_init)
    if not ok:
        raise FitError("fitted parameters diverge on the original data", partial=theta_hat)
    s2, _ = _kernels.recursion(theta_hat, x * x, p, q, omega_init)
    return FitResult(spec_hat=spec_hat, objective=float(value), sigma2=s2,
                     residuals=x / np.sqrt(s2), converged=converged,
                     iterations=int(res.nit), init_rule=init_rule,
                     boundary=boundary, n_starts=len(start_list))


def evaluate_at(spec: GarchSpec, x, init_rule: InitRule = InitRule.OMEGA) -> FitResult:
    """FitResult at a fixed parameter vector (no optimization).

    Used for oracles and diagnostics at a known theta.
    """
    x = _check_series(x)
    value, _, ok = _kernels.nll_grad(spec.theta, x * x, spec.p, spec.q,
                                     init_rule is InitRule.OMEGA)
    if not ok:
        raise _divergence()
    s2, _ = _kernels.recursion(spec.theta, x * x, spec.p, spec.q,
                               init_rule is InitRule.OMEGA)
    return FitResult(spec_hat=spec, objective=float(value), sigma2=s2,
                     residuals=x / np.sqrt(s2), converged=True, iterations=0,
                     init_rule=init_rule, boundary=False, n_starts=0)


def _u_matrix(fit_result: FitResult, x) -> np.ndarray:
    """Relative volatility gradient u_t = (1/sigma2_t) d sigma2_t / d theta."""
    x = _check_series(x)
    spec = fit_result.spec_hat
    _, g, ok = _kernels.recursion_grad(spec.theta, x * x, spec.p, spec.q,
                                       fit_result.init_rule is InitRule.OMEGA)
    if not ok:
        raise _divergence()
    return g / fit_result.sigma2[:, None]


def estimate_U(fit_result: FitResult, x) -> np.ndarray:
    """Symmetrized sample second moment of u_t (positive semidefinite)."""
    u = _u_matrix(fit_result, x)
    U = u.T @ u / u.shape[0]
    return 0.5 * (U + U.T)


def is_near_singular(U: np.ndarray, rel: float = 1e-12) -> bool:
    eig = np.linalg.eigvalsh(U)
    return bool(eig[0] < rel * np.trace(U))


def ridge_solve(U: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve U z = b, adding a 1e-8*trace ridge when U is flagged singular."""
    if is_near_singular(U):
        U = U + 1e-8 * np.trace(U) * np.eye(U.shape[0])
    return np.linalg.solve(U, b)


def estimate_tau(fit_result: FitResult, x) -> np.ndarray:
    """tau_hat = mean_t(u_t) / 2, the residual-process drift coefficient."""
    u = _u_matrix(fit_result, x)
    return 0.5 * u.mean(axis=0)


def estimate_kappa(residuals) -> float:
    """Fourth moment of the residuals after rescaling to unit second moment."""
    e = np.asarray(residuals, dtype=float)
    if e.size < 10:
        raise ValueError("need at least 10 residuals")
    m2 = np.mean(e * e)
    if m2 <= 0.0:
        raise ValueError("residuals are identically zero")
    return float(np.mean(e ** 4) / m2 ** 2)


def estimate_delta(fit_result: FitResult, x) -> np.ndarray:
    """delta_hat = U_hat^{-1} mean(u_t), with ridge if U_hat is near singular."""
    u = _u_matrix(fit_result, x)
    U = u.T @ u / u.shape[0]
    U = 0.5 * (U + U.T)
    return ridge_solve(U, u.mean(axis=0))


def model_diagnostics(fit_result: FitResult, x) -> ModelDiagnostics:
    """All plug-in diagnostics in one gradient pass."""
    u = _u_matrix(fit_result, x)
    U = u.T @ u / u.shape[0]
    U = 0.5 * (U + U.T)
    u_bar = u.mean(axis=0)
    return ModelDiagnostics(U_hat=U, tau_hat=0.5 * u_bar,
                            kappa_hat=estimate_kappa(fit_result.residuals),
                            delta_hat=ridge_solve(U, u_bar))


def compute_A(fit_result: FitResult, x, theta0: GarchSpec) -> float:
    """Simulation diagnostic A = sqrt(n) (theta_hat - theta0)' tau_hat."""
    if theta0.p != fit_result.spec_hat.p or theta0.q != fit_result.spec_hat.q:
        raise ValueError("theta0 orders must match the fitted model")
    tau = estimate_tau(fit_result, x)
    n = fit_result.residuals.size
    return float(np.sqrt(n) * (fit_result.spec_hat.theta - theta0.theta) @ tau)
