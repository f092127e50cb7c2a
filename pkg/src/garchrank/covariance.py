"""Plug-in estimation of the dispersion matrix of the k rank statistics.

Diagonal entries combine four pieces

    sigma_jj = sigma1_jj + sigma2_jj + sigma3_jj + gamma_jj

where sigma1 is the classical rank-covariance double integral over
Gamma_m(x, y) = F_m(x)(1 - F_m(y)) J'(H(x)) J'(H(y)), sigma2/sigma3 are the
quadratic forms produced by the parameter-estimation drift, and gamma
collects the cross moments K1 + K2.  Off-diagonals combine the three
Gamma families with the L1 + L2 drift cross terms.

Every population object is replaced by its empirical counterpart: F_j by
the group EDF, H_N by the clipped pooled EDF (N/(N+1)) H + 1/(2(N+1))
(keeping J' arguments inside (0,1)), f_j by a Gaussian KDE with Silverman
bandwidth, and expectations by sample means.  Double integrals over
{x < y} are exact double sums over the empirical measures, evaluated with
sorted prefix sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import kde_eval
from .qml import ModelDiagnostics, ridge_solve
from .ranks import PooledSample, Score

RIDGE_TRIGGER = 1e-3


@dataclass(frozen=True)
class DensityEstimate:
    """Gaussian-kernel density estimate (nonnegative, integrates to one)."""

    sample: np.ndarray
    bandwidth: float

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return kde_eval(self.sample, self.bandwidth, x)


def kde(residuals, bandwidth_rule: str = "silverman") -> DensityEstimate:
    """Gaussian KDE with h = 0.9 min(sd, IQR/1.34) n^(-1/5)."""
    sample = np.ascontiguousarray(residuals, dtype=float)
    if sample.ndim != 1 or sample.size == 0:
        raise ValueError("sample must be a nonempty 1-d array")
    if bandwidth_rule != "silverman":
        raise ValueError(f"unknown bandwidth rule {bandwidth_rule!r}")
    n = sample.size
    sd = float(np.std(sample, ddof=1)) if n > 1 else 0.0
    iqr = float(np.subtract(*np.percentile(sample, [75, 25])))
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    if spread <= 0.0:
        if n == 1:
            spread = 1.0
        else:
            raise ValueError("sample has zero spread; no density estimate")
    return DensityEstimate(sample=sample, bandwidth=0.9 * spread * n ** (-0.2))


@dataclass(frozen=True)
class SigmaHat:
    """k x k dispersion estimate with its per-entry breakdown."""

    matrix: np.ndarray
    ridge_applied: float
    components: dict = field(default_factory=dict)


class SigmaContext:
    """Shared empirical machinery for one dispersion-matrix assembly.

    Holds the sorted residual groups plus every cross-evaluated quantity the
    entry formulas need: group EDFs at all points, the clipped pooled EDF,
    J' values, kernel densities, the partial moments M_m(x) and prefix sums
    for the ordered double integrals.
    """

    def __init__(self, groups, score: Score, diagnostics: list[ModelDiagnostics]):
        groups = [np.asarray(g, dtype=float) for g in groups]
        k = len(groups)
        if k < 2:
            raise ValueError("need at least two groups")
        if len(diagnostics) != k:
            raise ValueError("one diagnostics record per group is required")
        if any(g.size < 2 for g in groups):
            raise ValueError("each group needs at least 2 residuals")
        self.k = k
        self.score = score
        self.diag = diagnostics
        self.e = [np.sort(g) for g in groups]
        self.n = np.array([g.size for g in groups])
        self.N = int(self.n.sum())
        self.lam = self.n / self.N
        self.kde = [kde(g) for g in groups]

        # F_m and strict-below counts at every group's points
        self.F = [[np.searchsorted(self.e[m], self.e[a], side="right") / self.n[m]
                   for a in range(k)] for m in range(k)]
        self.counts_lt = [[np.searchsorted(self.e[a], self.e[b], side="left")
                           for b in range(k)] for a in range(k)]

        # clipped pooled EDF and J' at every group's points
        scale = self.N / (self.N + 1.0)
        shift = 0.5 / (self.N + 1.0)
        self.Hc = [scale * sum(self.lam[m] * self.F[m][a] for m in range(k)) + shift
                   for a in range(k)]
        self.Jp = [score.J_prime(self.Hc[a]) for a in range(k)]

        # kernel densities evaluated across groups
        self.fh = [[self.kde[m](self.e[a]) for a in range(k)] for m in range(k)]

        # M_m(x) = (1/n_m) sum (e^2 - 1) 1{e <= x} at every group's points
        self.M = []
        for m in range(k):
            cums = np.concatenate(([0.0], np.cumsum(self.e[m] ** 2 - 1.0))) / self.n[m]
            self.M.append([cums[np.searchsorted(self.e[m], self.e[a], side="right")]
                           for a in range(k)])

        # prefix sums of F_m(x) J'(H(x)) over each group, and the
        # (1 - F_m(y)) J'(H(y)) integrand arrays
        self.cs_u = [[np.concatenate(([0.0], np.cumsum(self.F[m][a] * self.Jp[a])))
                      for a in range(k)] for m in range(k)]
        self.v = [[(1.0 - self.F[m][b]) * self.Jp[b] for b in range(k)]
                  for m in range(k)]

        # diagnostics-derived scalars
        self.tau = [d.tau_hat for d in diagnostics]
        self.kappa = np.array([d.kappa_hat for d in diagnostics])
        self.delta = [d.delta_hat for d in diagnostics]
        self.U = [d.U_hat for d in diagnostics]
        self.tau_delta = np.array([float(t @ dl) for t, dl in zip(self.tau, self.delta)])

    # -- point evaluators (arbitrary arguments, used by gamma_kernel/tests) --

    def F_at(self, m: int, x):
        return np.searchsorted(self.e[m], np.asarray(x, dtype=float),
                               side="right") / self.n[m]

    def Hc_at(self, x):
        H = sum(self.lam[m] * self.F_at(m, x) for m in range(self.k))
        return H * self.N / (self.N + 1.0) + 0.5 / (self.N + 1.0)


def build_context(groups, score: Score, diagnostics) -> SigmaContext:
    return SigmaContext(groups, score, diagnostics)


def gamma_kernel(ctx: SigmaContext, j: int, x, y):
    """Plug-in Gamma_j(x, y) = F_j(x)(1-F_j(y)) J'(H(x)) J'(H(y))."""
    jp = ctx.score.J_prime
    return (ctx.F_at(j, x) * (1.0 - ctx.F_at(j, y))
            * jp(ctx.Hc_at(x)) * jp(ctx.Hc_at(y)))


def _D(ctx: SigmaContext, m: int, a: int, b: int) -> float:
    """Double sum of Gamma_m(x, y) over {x < y}, x from group a, y from b."""
    prefix = ctx.cs_u[m][a][ctx.counts_lt[a][b]]
    return float(prefix @ ctx.v[m][b]) / (ctx.n[a] * ctx.n[b])


def sigma1_diag(ctx: SigmaContext, j: int) -> float:
    """Rank-covariance variance contribution for group j."""
    k, lam = ctx.k, ctx.lam
    first = sum(lam[i] * _D(ctx, i, j, j) for i in range(k) if i != j)
    second = sum(lam[i] ** 2 * _D(ctx, j, i, i) for i in range(k) if i != j)
    cross = 0.0
    for i in range(k):
        for i2 in range(k):
            if i == i2 or i == j or i2 == j:
                continue
            cross += lam[i] * lam[i2] * (_D(ctx, j, i, i2) + _D(ctx, j, i2, i))
    return 2.0 * (first + second / lam[j]) + cross / lam[j]


def _x_density_integral(ctx: SigmaContext, m: int, a: int) -> float:
    """integral of x f_m(x) J'(H(x)) dF_a(x)."""
    return float(np.mean(ctx.e[a] * ctx.fh[m][a] * ctx.Jp[a]))


def _h_weight_integral(ctx: SigmaContext, m: int, a: int) -> float:
    """integral of M_m(x) J'(H(x)) dF_a(x)."""
    return float(np.mean(ctx.M[m][a] * ctx.Jp[a]))


def omega_vec(ctx: SigmaContext, j: int) -> np.ndarray:
    """Drift weight omega_jN (vector proportional to tau_j)."""
    s = sum(ctx.lam[i] * _x_density_integral(ctx, j, i)
            for i in range(ctx.k) if i != j)
    return -(ctx.lam[j] ** -0.5) * s * ctx.tau[j]


def nu_vec(ctx: SigmaContext, i: int, j: int) -> np.ndarray:
    """Drift weight nu_iN entering group j's sigma3 (proportional to tau_i)."""
    return (ctx.lam[i] ** 0.5) * _x_density_integral(ctx, i, j) * ctx.tau[i]


def sigma2_diag(ctx: SigmaContext, j: int) -> float:
    """(kappa_j - 1) omega' U_j^{-1} omega."""
    w = omega_vec(ctx, j)
    return float((ctx.kappa[j] - 1.0) * (w @ ridge_solve(ctx.U[j], w)))


def sigma3_diag(ctx: SigmaContext, j: int) -> float:
    """sum over i != j of (kappa_i - 1) nu_i' U_i^{-1} nu_i."""
    total = 0.0
    for i in range(ctx.k):
        if i == j:
            continue
        v = nu_vec(ctx, i, j)
        total += (ctx.kappa[i] - 1.0) * float(v @ ridge_solve(ctx.U[i], v))
    return total


def h_func(ctx: SigmaContext, i: int, l: int, v) -> np.ndarray:
    """h_i^l(v) = delta_i^l * (1/n_i) sum (e^2 - 1) 1{e <= v} (l is 0-based)."""
    e = ctx.e[i]
    cums = np.concatenate(([0.0], np.cumsum(e ** 2 - 1.0))) / ctx.n[i]
    M = cums[np.searchsorted(e, np.asarray(v, dtype=float), side="right")]
    return ctx.delta[i][l] * M


def gamma_diag(ctx: SigmaContext, j: int) -> float:
    """K1 + K2: the drift/rank cross moments on the diagonal."""
    lam = ctx.lam
    k1 = 2.0 * sum(lam[i] * ctx.tau_delta[i]
                   * _h_weight_integral(ctx, i, j) * _x_density_integral(ctx, i, j)
                   for i in range(ctx.k) if i != j)
    k2 = (2.0 / lam[j]) * sum(lam[i] ** 2 * ctx.tau_delta[j]
                              * _h_weight_integral(ctx, j, i)
                              * _x_density_integral(ctx, j, i)
                              for i in range(ctx.k) if i != j)
    return k1 + k2


def sigma1_offdiag(ctx: SigmaContext, j: int, j2: int) -> float:
    """Rank-covariance contribution to entry (j, j2), j != j2."""
    k, lam = ctx.k, ctx.lam
    total = 0.0
    for i in range(k):
        total -= lam[i] * (_D(ctx, j, i, j2) + _D(ctx, j, j2, i))
        total -= lam[i] * (_D(ctx, j2, i, j) + _D(ctx, j2, j, i))
        total += lam[i] * (_D(ctx, i, j, j2) + _D(ctx, i, j2, j))
    return total


def sigma2_offdiag(ctx: SigmaContext, j: int, j2: int) -> float:
    """L1 + L2: drift cross moments for entry (j, j2), j != j2."""
    lam = ctx.lam
    l1 = 0.0
    l2 = 0.0
    for i in range(ctx.k):
        l1 -= lam[i] * (ctx.tau_delta[j] * _h_weight_integral(ctx, j, i)
                        * _x_density_integral(ctx, j, j2)
                        + ctx.tau_delta[j2] * _h_weight_integral(ctx, j2, i)
                        * _x_density_integral(ctx, j2, j))
        l2 -= lam[i] * (ctx.tau_delta[j] * _x_density_integral(ctx, j, i)
                        * _h_weight_integral(ctx, j, j2)
                        + ctx.tau_delta[j2] * _x_density_integral(ctx, j2, i)
                        * _h_weight_integral(ctx, j2, j))
    return l1 + l2


def sigma_offdiag(ctx: SigmaContext, j: int, j2: int) -> float:
    return sigma1_offdiag(ctx, j, j2) + sigma2_offdiag(ctx, j, j2)


def assemble_sigma(groups, score: Score, diagnostics) -> SigmaHat:
    """Full dispersion estimate: diagonals sigma1+sigma2+sigma3+gamma,
    off-diagonals sigma1+L1+L2, symmetrized, ridged to positive definiteness.
    """
    ctx = build_context(groups, score, diagnostics)
    k = ctx.k
    comp = {name: np.zeros((k, k)) for name in
            ("sigma1", "sigma2", "sigma3", "gamma", "sigma1_off", "sigma2_off")}
    mat = np.zeros((k, k))
    for j in range(k):
        comp["sigma1"][j, j] = sigma1_diag(ctx, j)
        comp["sigma2"][j, j] = sigma2_diag(ctx, j)
        comp["sigma3"][j, j] = sigma3_diag(ctx, j)
        comp["gamma"][j, j] = gamma_diag(ctx, j)
        mat[j, j] = (comp["sigma1"][j, j] + comp["sigma2"][j, j]
                     + comp["sigma3"][j, j] + comp["gamma"][j, j])
    for j in range(k):
        for j2 in range(j + 1, k):
            s1 = sigma1_offdiag(ctx, j, j2)
            s2 = sigma2_offdiag(ctx, j, j2)
            comp["sigma1_off"][j, j2] = comp["sigma1_off"][j2, j] = s1
            comp["sigma2_off"][j, j2] = comp["sigma2_off"][j2, j] = s2
            mat[j, j2] = mat[j2, j] = s1 + s2
    mat = 0.5 * (mat + mat.T)
    trace = float(np.trace(mat))
    if trace <= 0.0:
        raise RuntimeError("dispersion estimate has nonpositive trace")
    # The statistics satisfy an exact linear identity, so the dispersion has
    # a near-null direction by construction and its smallest eigenvalue
    # fluctuates around zero (often below it: the drift cross terms are not
    # PSD).  The ridge floors that eigenvalue at its natural noise scale,
    # 1e-3 * trace — far below the informative eigenvalues — which keeps the
    # quadratic form finite without distorting healthy directions.
    ridge = 0.0
    min_eig = float(np.linalg.eigvalsh(mat)[0])
    floor = RIDGE_TRIGGER * trace
    if min_eig < floor:
        ridge = floor - min_eig
        mat = mat + ridge * np.eye(k)
    return SigmaHat(matrix=mat, ridge_applied=ridge, components=comp)


def sigma_from_pooled(pooled: PooledSample, score: Score, diagnostics) -> SigmaHat:
    return assemble_sigma([pooled.group(j) for j in range(pooled.k)],
                          score, diagnostics)
