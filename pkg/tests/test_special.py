import numpy as np
import pytest
import scipy.special as sps
import scipy.stats

from garchrank._special import chi2_survival, inv_norm_cdf, norm_cdf, norm_pdf


def test_inv_norm_cdf_against_scipy_grid():
    u = np.linspace(1e-12, 1 - 1e-12, 100_000)
    err = np.abs(inv_norm_cdf(u) - sps.ndtri(u))
    assert err.max() <= 1e-9


def test_inv_norm_cdf_extreme_tails():
    for u in (1e-12, 1e-9, 0.5, 1 - 1e-9, 1 - 1e-12):
        assert abs(inv_norm_cdf(u) - sps.ndtri(u)) <= 1e-9


def test_inv_norm_cdf_scalar_and_domain():
    assert inv_norm_cdf(0.5) == pytest.approx(0.0, abs=1e-12)
    for bad in (0.0, 1.0, -0.3, 1.7):
        with pytest.raises(ValueError):
            inv_norm_cdf(bad)


def test_norm_cdf_pdf():
    assert norm_cdf(0.0) == pytest.approx(0.5, abs=1e-15)
    assert norm_pdf(0.0) == pytest.approx(1.0 / np.sqrt(2 * np.pi), abs=1e-15)
    x = np.linspace(-8, 8, 1001)
    assert np.abs(norm_cdf(x) - scipy.stats.norm.cdf(x)).max() < 1e-14


def test_chi2_survival_basics():
    assert chi2_survival(0.0, 3) == 1.0
    # 95% quantile of chi2(3)
    assert chi2_survival(7.814727903251179, 3) == pytest.approx(0.05, abs=1e-10)


def test_chi2_survival_against_scipy():
    ks = [1, 2, 3, 5, 10, 30]
    x = np.concatenate([np.linspace(0, 80, 400), [1e-8, 1e-4, 150.0]])
    for k in ks:
        err = np.abs(chi2_survival(x, k) - scipy.stats.chi2.sf(x, k))
        assert err.max() <= 1e-10, k


def test_chi2_survival_monotone():
    x = np.linspace(0, 40, 500)
    vals = chi2_survival(x, 3)
    assert np.all(np.diff(vals) < 0)


def test_chi2_survival_domain():
    with pytest.raises(ValueError):
        chi2_survival(-1.0, 3)
    with pytest.raises(ValueError):
        chi2_survival(1.0, 0)
