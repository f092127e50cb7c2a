"""Score-generating functions, empirical distribution functions and the
k-sample linear rank statistics.

The pooled residuals are ranked with a deterministic lexicographic
tie-break (value, group index, within-group time index); with continuous
data ties have probability zero and both statistic routes — the rank form
sum of J(i/(N+1)) and the integral of J((N/(N+1)) H_N) against each group's
EDF — produce identical numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._special import inv_norm_cdf, norm_pdf


class Score:
    """A score-generating function J on (0,1) with derivative and null mean."""

    name: str = ""
    null_mean: float = 0.0

    def J(self, u):
        raise NotImplementedError

    def J_prime(self, u):
        raise NotImplementedError


class Wilcoxon(Score):
    name = "wilcoxon"
    null_mean = 0.5

    def J(self, u):
        return np.asarray(u, dtype=float)

    def J_prime(self, u):
        return np.ones_like(np.asarray(u, dtype=float))


class VanDerWaerden(Score):
    name = "vdw"
    null_mean = 0.0

    def J(self, u):
        return inv_norm_cdf(u)

    def J_prime(self, u):
        return 1.0 / norm_pdf(inv_norm_cdf(u))


class Mood(Score):
    name = "mood"
    null_mean = 1.0 / 12.0

    def J(self, u):
        u = np.asarray(u, dtype=float)
        return (u - 0.5) ** 2

    def J_prime(self, u):
        u = np.asarray(u, dtype=float)
        return 2.0 * u - 1.0


class Klotz(Score):
    name = "klotz"
    null_mean = 1.0

    def J(self, u):
        return inv_norm_cdf(u) ** 2

    def J_prime(self, u):
        z = inv_norm_cdf(u)
        return 2.0 * z / norm_pdf(z)


_SCORES = {
    "wilcoxon": Wilcoxon,
    "w": Wilcoxon,
    "vdw": VanDerWaerden,
    "van_der_waerden": VanDerWaerden,
    "mood": Mood,
    "klotz": Klotz,
}


def score_by_name(name: str) -> Score:
    try:
        return _SCORES[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown score {name!r}; choose from "
                         "wilcoxon, vdw, mood, klotz") from None


def score_eval(score: Score, u):
    """(J(u), J'(u)) for u strictly inside (0, 1)."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError("score argument must lie strictly inside (0, 1)")
    return score.J(u), score.J_prime(u)


def null_mean(score: Score) -> float:
    """integral of J over (0,1): the common mu_jN under the null."""
    return score.null_mean


@dataclass(frozen=True)
class Edf:
    """Right-continuous empirical distribution function."""

    sorted_values: np.ndarray

    @classmethod
    def from_sample(cls, values) -> "Edf":
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            raise ValueError("empty sample")
        return cls(np.sort(values))

    @property
    def n(self) -> int:
        return self.sorted_values.size

    def __call__(self, x):
        idx = np.searchsorted(self.sorted_values, np.asarray(x, dtype=float),
                              side="right")
        return idx / self.n


def edf(values) -> Edf:
    """EDF of a sample, evaluable at arbitrary points by binary search."""
    return Edf.from_sample(values)


@dataclass(frozen=True)
class PooledSample:
    """Concatenated residual groups with their pooling weights.

    ``order`` is the tie-broken ascending ordering of the pooled values
    (primary key value, then group index, then within-group position).
    """

    values: np.ndarray
    labels: np.ndarray
    n: np.ndarray
    order: np.ndarray

    @classmethod
    def from_groups(cls, groups, min_lambda: float | None = None) -> "PooledSample":
        groups = [np.asarray(g, dtype=float) for g in groups]
        if len(groups) < 1 or any(g.ndim != 1 or g.size == 0 for g in groups):
            raise ValueError("each group must be a nonempty 1-d array")
        values = np.concatenate(groups)
        if not np.all(np.isfinite(values)):
            raise ValueError("groups contain non-finite values")
        n = np.array([g.size for g in groups])
        labels = np.repeat(np.arange(len(groups)), n)
        time_idx = np.concatenate([np.arange(m) for m in n])
        order = np.lexsort((time_idx, labels, values))
        if min_lambda is not None:
            k = len(groups)
            if min_lambda > 1.0 / k:
                raise ValueError("min_lambda must not exceed 1/k")
            lam = n / n.sum()
            if lam.min() < min_lambda or lam.max() > 1.0 - min_lambda:
                raise ValueError(
                    f"group weights {np.round(lam, 4)} violate the "
                    f"[{min_lambda}, {1 - min_lambda}] balance bounds")
        return cls(values=values, labels=labels, n=n, order=order)

    @property
    def N(self) -> int:
        return int(self.n.sum())

    @property
    def k(self) -> int:
        return self.n.size

    @property
    def lambdas(self) -> np.ndarray:
        return self.n / self.N

    def group(self, j: int) -> np.ndarray:
        return self.values[self.labels == j]


def pooled_edf(pooled: PooledSample) -> Edf:
    """EDF of the pooled values; identical to the lambda-weighted combination
    of the per-group EDFs."""
    return Edf.from_sample(pooled.values)


def linear_statistics(pooled: PooledSample, score: Score) -> np.ndarray:
    """Rank-form statistics T_j = (1/n_j) sum of J(i/(N+1)) over the pooled
    ranks i held by group j."""
    N = pooled.N
    ranks_scores = score.J(np.arange(1, N + 1) / (N + 1.0))
    sums = np.bincount(pooled.labels[pooled.order], weights=ranks_scores,
                       minlength=pooled.k)
    return sums / pooled.n


def linear_statistics_integral(pooled: PooledSample, score: Score) -> np.ndarray:
    """Integral-form statistics: mean of J((N/(N+1)) H_N) over each group.

    Equals the rank form exactly when the pooled values are distinct.
    """
    N = pooled.N
    H = pooled_edf(pooled)
    out = np.empty(pooled.k)
    for j in range(pooled.k):
        g = pooled.group(j)
        out[j] = float(np.mean(score.J(H(g) * N / (N + 1.0))))
    return out


def linear_statistics_rectangular(pooled: PooledSample, score: Score,
                                  m: int = 512) -> np.ndarray:
    """Rectangular-rule approximation of the integral form with m cells.

    Converges to the exact statistic as m grows; kept as a cross-check mode.
    """
    if m < 2:
        raise ValueError("need at least 2 cells")
    N = pooled.N
    H = pooled_edf(pooled)
    lo = pooled.values.min()
    hi = pooled.values.max()
    span = max(hi - lo, 1.0)
    edges = np.linspace(lo - 1e-9 * span, hi, m + 1)
    Hvals = H(edges[1:]) * N / (N + 1.0)
    out = np.empty(pooled.k)
    for j in range(pooled.k):
        Fj = Edf.from_sample(pooled.group(j))
        dF = np.diff(Fj(edges))
        mask = dF > 0
        out[j] = float(np.sum(score.J(Hvals[mask]) * dF[mask]))
    return out
