"""End-to-end k-sample decision procedures.

``asymptotic_test`` fits each group by QML, ranks the pooled residuals,
assembles the plug-in dispersion matrix and refers

    L_N = N (T - mu)' Sigma_hat^{-1} (T - mu)

to the chi-square(k) upper tail.  ``bootstrap_test`` recreates the null by
simulating Gaussian-innovation paths from the fitted parameters, refitting,
and recomputing the statistic per replicate; the decision compares the
observed statistic with the (1-r) bootstrap quantile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._special import chi2_survival
from .covariance import SigmaHat, assemble_sigma, kde
from .errors import FitError
from .garch import GarchSpec, InitRule, StandardNormal, simulate
from .qml import FitResult, compute_A, evaluate_at, fit, model_diagnostics
from .ranks import (PooledSample, Score, linear_statistics,
                    linear_statistics_rectangular, null_mean)
from .rng import stream

__all__ = [
    "TestResult", "BootstrapResult", "RemainderDiagnostic",
    "asymptotic_test", "bootstrap_test", "decompose_diagnostic",
    "chi2_survival",
]


@dataclass(frozen=True)
class TestResult:
    """Outcome of the asymptotic chi-square(k) rank test."""

    T: np.ndarray
    mu: np.ndarray
    sigma_hat: SigmaHat
    L_N: float
    p_asymptotic: float
    fits: list[FitResult]
    score: Score
    level: float
    reject: bool


@dataclass(frozen=True)
class BootstrapResult:
    """Outcome of the smoothed parametric bootstrap test."""

    observed: TestResult
    replicates: np.ndarray
    p_bootstrap: float
    critical_value: float
    reject: bool
    B: int
    n0: int
    seed: int
    dropped: int = 0
    warning: str | None = None


def _normalize_orders(orders, k: int) -> list[tuple[int, int]]:
    if isinstance(orders, tuple) and len(orders) == 2 and all(
            isinstance(v, (int, np.integer)) for v in orders):
        return [tuple(orders)] * k
    orders = [tuple(o) for o in orders]
    if len(orders) != k:
        raise ValueError(f"need one (p, q) pair per group, got {len(orders)} for k={k}")
    return orders


def _quadratic_form(pooled: PooledSample, T: np.ndarray, mu: np.ndarray,
                    sigma: SigmaHat) -> float:
    s = T - mu
    try:
        z = np.linalg.solve(sigma.matrix, s)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("dispersion estimate singular after ridge") from exc
    return max(float(pooled.N * (s @ z)), 0.0)


def asymptotic_test(x_samples, orders, score: Score, level: float = 0.05, *,
                    init_rule: InitRule = InitRule.OMEGA, starts: int = 3,
                    min_lambda: float | None = 0.01) -> TestResult:
    """Chi-square(k) test that the k innovation distributions coincide."""
    k = len(x_samples)
    if k < 2:
        raise ValueError("need at least two groups")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    orders = _normalize_orders(orders, k)
    fits = []
    for j, (x, (p, q)) in enumerate(zip(x_samples, orders)):
        try:
            fits.append(fit(x, p, q, init_rule=init_rule, starts=starts))
        except (FitError, ValueError) as exc:
            raise FitError(f"group {j + 1}: {exc}") from exc
    residuals = [f.residuals for f in fits]
    pooled = PooledSample.from_groups(residuals, min_lambda=min_lambda)
    T = linear_statistics(pooled, score)
    mu = np.full(k, null_mean(score))
    diagnostics = [model_diagnostics(f, x) for f, x in zip(fits, x_samples)]
    sigma = assemble_sigma(residuals, score, diagnostics)
    L = _quadratic_form(pooled, T, mu, sigma)
    p = float(chi2_survival(L, k))
    return TestResult(T=T, mu=mu, sigma_hat=sigma, L_N=L, p_asymptotic=p,
                      fits=fits, score=score, level=level, reject=p < level)


def bootstrap_test(x_samples, orders, score: Score, level: float = 0.05,
                   B: int = 199, n0: int = 500, seed: int = 0, *,
                   init_rule: InitRule = InitRule.OMEGA, starts: int = 3,
                   min_lambda: float | None = 0.01, recompute_sigma: bool = True,
                   rect_m: int | None = None) -> BootstrapResult:
    """Smoothed parametric bootstrap version of the k-sample test.

    Per replicate and group: simulate a Gaussian-innovation path from the
    fitted parameters (warm-up n0), refit, take the bootstrap residuals from
    t=2 on, then recompute the rank statistic and (by default) the
    dispersion estimate.  Failed refits are retried once with a fresh
    stream, then the replicate is dropped and counted.
    """
    if B < 99:
        raise ValueError("B must be >= 99")
    observed = asymptotic_test(x_samples, orders, score, level,
                               init_rule=init_rule, starts=starts,
                               min_lambda=min_lambda)
    orders = _normalize_orders(orders, len(x_samples))
    mu = observed.mu
    stats = []
    dropped = 0
    for b in range(B):
        value = _replicate_stat(observed, orders, score, mu, seed, b, n0,
                                init_rule, recompute_sigma, rect_m)
        if value is None:
            dropped += 1
        else:
            stats.append(value)
    replicates = np.array(stats)
    b_eff = replicates.size
    if b_eff == 0:
        raise RuntimeError("every bootstrap replicate failed")
    p_boot = (1.0 + float(np.sum(replicates >= observed.L_N))) / (b_eff + 1.0)
    idx = int(np.ceil((1.0 - level) * b_eff)) - 1
    critical = float(np.sort(replicates)[min(max(idx, 0), b_eff - 1)])
    warning = None
    if dropped > 0.1 * B:
        warning = f"{dropped} of {B} bootstrap replicates dropped after refit failures"
    return BootstrapResult(observed=observed, replicates=replicates,
                           p_bootstrap=p_boot, critical_value=critical,
                           reject=observed.L_N > critical, B=B, n0=n0,
                           seed=seed, dropped=dropped, warning=warning)


def _replicate_stat(observed: TestResult, orders, score, mu, seed, b, n0,
                    init_rule, recompute_sigma, rect_m):
    k = len(observed.fits)
    residuals = []
    fits = []
    for j in range(k):
        p, q = orders[j]
        n_j = observed.fits[j].residuals.size
        theta_hat = observed.fits[j].spec_hat
        refit = None
        for attempt in (0, 1):
            rng = stream(seed, j, b, attempt)
            sim = simulate(theta_hat, StandardNormal(), n_j, n0, rng)
            try:
                refit = fit(sim.values, p, q, init_rule=init_rule,
                            start_theta=theta_hat.theta)
                refit_x = sim.values
                break
            except (FitError, ValueError):
                continue
        if refit is None:
            return None
        fits.append((refit, refit_x))
        residuals.append(refit.residuals[1:])
    pooled = PooledSample.from_groups(residuals, min_lambda=None)
    if rect_m is None:
        T = linear_statistics(pooled, score)
    else:
        T = linear_statistics_rectangular(pooled, score, rect_m)
    if recompute_sigma:
        diagnostics = [model_diagnostics(fr, x) for fr, x in fits]
        # diagnostics are computed on the full refit, matching the residual
        # set up to the dropped first point
        sigma = assemble_sigma(residuals, score, diagnostics)
    else:
        sigma = observed.sigma_hat
    return _quadratic_form(pooled, T, mu, sigma)


@dataclass(frozen=True)
class RemainderDiagnostic:
    """Evaluation of the residual-process decomposition on a grid.

    ``shift`` is sqrt(n) (F_resid@theta_hat - F_resid@theta0), ``drift`` is
    A_hat * x * f_hat(x) and ``xi`` their difference; the true-CDF-dependent
    halves are populated only when a true CDF callable is supplied.
    """

    grid: np.ndarray
    shift: np.ndarray
    drift: np.ndarray
    xi: np.ndarray
    sup_norm: float
    A_hat: float
    B_hat: np.ndarray | None = None
    E_hat: np.ndarray | None = None


def decompose_diagnostic(x, theta0: GarchSpec, *, init_rule: InitRule = InitRule.OMEGA,
                         starts: int = 3, grid=None, true_cdf=None,
                         fitted: FitResult | None = None) -> RemainderDiagnostic:
    """Simulation-context check that the estimation drift explains the gap
    between the residual EDFs at theta_hat and at theta0."""
    x = np.asarray(x, dtype=float)
    fitted = fitted if fitted is not None else fit(x, theta0.p, theta0.q,
                                                   init_rule=init_rule, starts=starts)
    at_truth = evaluate_at(theta0, x, init_rule=init_rule)
    n = x.size
    eps_hat = np.sort(fitted.residuals)
    eps_true = np.sort(at_truth.residuals)
    if grid is None:
        lo = min(eps_hat[0], eps_true[0]) - 1.0
        hi = max(eps_hat[-1], eps_true[-1]) + 1.0
        grid = np.linspace(lo, hi, 201)
    else:
        grid = np.asarray(grid, dtype=float)
    F_hat = np.searchsorted(eps_hat, grid, side="right") / n
    F_true = np.searchsorted(eps_true, grid, side="right") / n
    shift = np.sqrt(n) * (F_hat - F_true)
    A_hat = compute_A(fitted, x, theta0)
    density = kde(at_truth.residuals)
    drift = A_hat * grid * density(grid)
    xi = shift - drift
    B_hat = E_hat = None
    if true_cdf is not None:
        F0 = np.asarray(true_cdf(grid), dtype=float)
        B_hat = np.sqrt(n) * (F_hat - F0)
        E_hat = np.sqrt(n) * (F_true - F0)
    return RemainderDiagnostic(grid=grid, shift=shift, drift=drift, xi=xi,
                               sup_norm=float(np.max(np.abs(xi))), A_hat=A_hat,
                               B_hat=B_hat, E_hat=E_hat)
