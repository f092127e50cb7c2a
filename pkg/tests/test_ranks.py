import numpy as np
import pytest
from scipy.integrate import quad

from garchrank import (Klotz, Mood, PooledSample, VanDerWaerden, Wilcoxon,
                       edf, linear_statistics, null_mean, pooled_edf,
                       score_by_name, score_eval)
from garchrank.ranks import (linear_statistics_integral,
                             linear_statistics_rectangular)

ALL_SCORES = [Wilcoxon(), VanDerWaerden(), Mood(), Klotz()]


class TestEdf:
    def test_basic_counts(self):
        F = edf([1.0, 2.0, 3.0])
        assert F(2.0) == pytest.approx(2 / 3)
        assert F(1.5) == pytest.approx(1 / 3)
        assert F(0.0) == 0.0
        assert F(100.0) == 1.0

    def test_rank_over_n_at_data_points(self, rng):
        x = rng.standard_normal(40)
        F = edf(x)
        s = np.sort(x)
        assert np.allclose(F(s), np.arange(1, 41) / 40)

    def test_duplicates(self):
        F = edf([1.0, 1.0, 2.0])
        assert F(1.0) == pytest.approx(2 / 3)

    def test_empty(self):
        with pytest.raises(ValueError):
            edf([])


class TestPooled:
    def test_weights_and_sizes(self):
        pooled = PooledSample.from_groups([[1.0, 2.0], [3.0], [4.0]])
        assert pooled.N == 4 and pooled.k == 3
        assert np.allclose(pooled.lambdas, [0.5, 0.25, 0.25])

    def test_balance_check(self):
        with pytest.raises(ValueError):
            PooledSample.from_groups([np.ones(99), [1.0]], min_lambda=0.05)
        with pytest.raises(ValueError):
            PooledSample.from_groups([[1.0], [2.0], [3.0]], min_lambda=0.5)

    def test_pooled_edf_identity(self, rng):
        groups = [rng.standard_normal(n) for n in (13, 7, 21)]
        pooled = PooledSample.from_groups(groups)
        H = pooled_edf(pooled)
        lam = pooled.lambdas
        Fs = [edf(g) for g in groups]
        xs = rng.uniform(-3, 3, 100)
        weighted = sum(l * F(xs) for l, F in zip(lam, Fs))
        assert np.allclose(H(xs), weighted, atol=1e-15)

    def test_pooled_edf_small_case(self):
        pooled = PooledSample.from_groups([[1.0], [2.0]])
        assert pooled_edf(pooled)(1.5) == pytest.approx(0.5)

    def test_order_statistic_values(self, rng):
        pooled = PooledSample.from_groups([rng.standard_normal(9),
                                           rng.standard_normal(6)])
        H = pooled_edf(pooled)
        s = np.sort(pooled.values)
        assert np.allclose(H(s), np.arange(1, 16) / 15)


class TestScores:
    def test_wilcoxon(self):
        J, Jp = score_eval(Wilcoxon(), 0.3)
        assert J == pytest.approx(0.3)
        assert Jp == pytest.approx(1.0)

    def test_vdw_values(self):
        score = VanDerWaerden()
        assert score.J(0.5) == pytest.approx(0.0, abs=1e-12)
        assert score.J(0.975) == pytest.approx(1.959963985, abs=1e-6)

    def test_mood_klotz(self):
        assert Mood().J(0.5) == 0.0
        assert null_mean(Klotz()) == 1.0

    def test_null_means_by_quadrature(self):
        for score, target in zip(ALL_SCORES, (0.5, 0.0, 1 / 12, 1.0)):
            val, err = quad(lambda u: float(score.J(u)), 0, 1, limit=200)
            assert val == pytest.approx(target, abs=1e-6)
            assert null_mean(score) == pytest.approx(target, abs=1e-12)

    def test_domain_errors(self):
        for score in ALL_SCORES:
            with pytest.raises(ValueError):
                score_eval(score, 0.0)
            with pytest.raises(ValueError):
                score_eval(score, 1.0)

    def test_score_by_name(self):
        assert isinstance(score_by_name("wilcoxon"), Wilcoxon)
        assert isinstance(score_by_name("VdW"), VanDerWaerden)
        with pytest.raises(ValueError):
            score_by_name("nope")

    def test_jprime_matches_finite_differences(self):
        u = np.linspace(0.02, 0.98, 25)
        h = 1e-7
        for score in ALL_SCORES:
            fd = (score.J(u + h) - score.J(u - h)) / (2 * h)
            assert np.allclose(score.J_prime(u), fd, rtol=1e-5, atol=1e-5)

    def test_growth_envelope(self):
        # |J| <= K [u(1-u)]^(-1/2+delta) and |J'| <= K [u(1-u)]^(-3/2+delta),
        # checked numerically with delta = 1/4, K = 8
        u = np.concatenate([np.geomspace(1e-10, 0.5, 300),
                            1 - np.geomspace(1e-10, 0.5, 300)])
        K, delta = 8.0, 0.25
        env_J = K * (u * (1 - u)) ** (-0.5 + delta)
        env_Jp = K * (u * (1 - u)) ** (-1.5 + delta)
        for score in ALL_SCORES:
            assert np.all(np.abs(score.J(u)) <= env_J)
            assert np.all(np.abs(score.J_prime(u)) <= env_Jp)


class TestLinearStatistics:
    def test_hand_case(self):
        pooled = PooledSample.from_groups([[1.0, 3.0], [2.0, 4.0]])
        T = linear_statistics(pooled, Wilcoxon())
        assert T[0] == pytest.approx(0.5 * (1 / 5 + 3 / 5))
        assert T[1] == pytest.approx(0.5 * (2 / 5 + 4 / 5))

    def test_single_group_is_data_free(self, rng):
        score = VanDerWaerden()
        a = linear_statistics(PooledSample.from_groups([rng.standard_normal(30)]), score)
        b = linear_statistics(PooledSample.from_groups([rng.uniform(5, 9, 30)]), score)
        assert a[0] == pytest.approx(b[0], abs=1e-14)

    def test_exchangeable_groups_have_similar_means(self, rng):
        score = Wilcoxon()
        Ts = []
        for _ in range(400):
            pooled = PooledSample.from_groups([rng.standard_normal(25)
                                               for _ in range(3)])
            Ts.append(linear_statistics(pooled, score))
        means = np.mean(Ts, axis=0)
        assert np.abs(means - means.mean()).max() < 0.01

    def test_route_equality(self, rng):
        for trial in range(100):
            k = rng.integers(2, 5)
            groups = [rng.standard_normal(rng.integers(5, 40)) for _ in range(k)]
            pooled = PooledSample.from_groups(groups)
            for score in ALL_SCORES:
                rank_form = linear_statistics(pooled, score)
                integral_form = linear_statistics_integral(pooled, score)
                assert np.abs(rank_form - integral_form).max() < 1e-12

    def test_monotone_invariance_exact(self, rng):
        groups = [rng.standard_normal(20) for _ in range(3)]
        transformed = [np.exp(g) + 5 for g in groups]
        for score in ALL_SCORES:
            a = linear_statistics(PooledSample.from_groups(groups), score)
            b = linear_statistics(PooledSample.from_groups(transformed), score)
            assert np.array_equal(a, b)

    def test_weighted_identity_exact(self, rng):
        groups = [rng.standard_normal(n) for n in (11, 17, 6)]
        pooled = PooledSample.from_groups(groups)
        N = pooled.N
        for score in ALL_SCORES:
            T = linear_statistics(pooled, score)
            lhs = float(pooled.lambdas @ T)
            rhs = float(np.mean(score.J(np.arange(1, N + 1) / (N + 1))))
            assert lhs == pytest.approx(rhs, abs=1e-14)

    def test_tie_breaking_deterministic(self):
        # duplicated value across groups: ties broken by (value, group, time)
        pooled = PooledSample.from_groups([[1.0, 2.0], [1.0]])
        T = linear_statistics(pooled, Wilcoxon())
        # sorted order: (1.0, g0), (1.0, g1), (2.0, g0) -> ranks 1,2,3
        assert T[0] == pytest.approx(0.5 * (1 / 4 + 3 / 4))
        assert T[1] == pytest.approx(2 / 4)

    def test_rectangular_mode_converges(self, rng):
        groups = [rng.standard_normal(n) for n in (30, 25, 35)]
        pooled = PooledSample.from_groups(groups)
        for score in (Wilcoxon(), VanDerWaerden()):
            exact = linear_statistics(pooled, score)
            approx = linear_statistics_rectangular(pooled, score, m=4096)
            assert np.abs(exact - approx).max() < 5e-3
