import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import weibull_min

from stochcap.estimate import (EstimationError, OptimizerConfig, fit_mle, log_likelihood,
                               plm_estimate, survival_to_cdf, weibull_cdf, weibull_pdf)
from stochcap.model import StepSurvivalFunction, WeibullParams
from stochcap.simulate import DemandConfig, synth_observations

from conftest import NO_VSL, make_obs

params_st = st.builds(WeibullParams, st.floats(10.0, 500.0), st.floats(0.5, 20.0))


class TestWeibullCdf:
    def test_zero(self):
        assert weibull_cdf(NO_VSL, 0.0) == 0.0

    @pytest.mark.parametrize("shape", [0.7, 1.0, 6.75, 15.0])
    def test_at_scale(self, shape):
        assert weibull_cdf(WeibullParams(120.0, shape), 120.0) == pytest.approx(1 - math.exp(-1), abs=1e-12)

    def test_ten_percent_level_of_no_vsl_fit(self):
        assert weibull_cdf(NO_VSL, 104.9) == pytest.approx(0.100, abs=5e-4)

    def test_negative_intensity(self):
        with pytest.raises(ValueError):
            weibull_cdf(NO_VSL, -1.0)

    @pytest.mark.filterwarnings("ignore:divide by zero")
    @given(params_st, st.floats(0.0, 1000.0))
    def test_matches_scipy(self, p, x):
        assert weibull_cdf(p, x) == pytest.approx(weibull_min(p.shape, scale=p.scale).cdf(x),
                                                  rel=1e-9, abs=1e-300)
        assert weibull_pdf(p, x) == pytest.approx(weibull_min(p.shape, scale=p.scale).pdf(x),
                                                  rel=1e-9, abs=1e-300)

    @given(params_st, st.floats(1.0, 400.0), st.floats(1.01, 1.5))
    def test_increasing(self, p, x, factor):
        lo, hi = weibull_cdf(p, x), weibull_cdf(p, x * factor)
        assert hi >= lo
        if 1e-12 < lo < 1 - 1e-12:
            assert hi > lo

    @given(params_st, st.floats(0.0, 400.0), st.floats(0.1, 10.0))
    def test_scale_equivariance(self, p, x, c):
        scaled = WeibullParams(p.scale * c, p.shape)
        assert weibull_cdf(scaled, c * x) == pytest.approx(weibull_cdf(p, x), rel=1e-9, abs=1e-300)


class TestPlm:
    def test_small_hand_example(self):
        s = plm_estimate(make_obs([(50, False), (60, True), (70, False), (80, True)]))
        assert list(s.level_from) == [60, 80]
        assert s(60) == pytest.approx(2 / 3)
        assert s(80) == 0.0
        assert s(59) == 1.0 and s(75) == pytest.approx(2 / 3)

    def test_all_censored(self):
        s = plm_estimate(make_obs([(50, False), (60, False)]))
        assert len(s) == 0
        assert np.all(s(np.arange(40, 80)) == 1.0)

    def test_ties_share_a_level(self):
        s = plm_estimate(make_obs([(56, True), (56, True), (56, False), (70, False)]))
        assert s.events[0] == 2 and s.at_risk[0] == 4

    def test_grouping_and_exposure(self):
        obs = make_obs([(50, False), (56, True), (57, False), (58, False), (60, True),
                        (60, False), (61, False)])
        s = plm_estimate(obs)
        assert list(s.level_from) == [56, 60]
        assert list(s.level_to) == [59, 61]
        assert list(s.exposure) == [1, 2]
        assert list(s.exposure_group) == [3, 3]
        assert list(s.at_risk) == [6, 3]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            plm_estimate(make_obs([]))

    def test_partial_failure_with_large_risk_set(self):
        # 2 breakdowns at level 56 with 6445 records at or above it
        obs = make_obs([(56, True)] * 2 + [(56, False)] * 296 + [(70, False)] * 6147)
        s = plm_estimate(obs)
        assert s.at_risk[0] == 6445
        assert s.partial_failure[0] == pytest.approx(0.00031, abs=5e-6)

    @given(st.lists(st.integers(40, 120), min_size=1, max_size=60))
    def test_uncensored_only_gives_ecdf(self, values):
        s = plm_estimate(make_obs([(v, True) for v in values]))
        x = np.arange(35, 125)
        ecdf = np.array([np.mean(np.array(values) <= v) for v in x])
        np.testing.assert_allclose(1 - s(x), ecdf, atol=1e-12)

    def test_survival_to_cdf(self):
        one = StepSurvivalFunction([60], [70], [0], [5], [1], [3], [1.0])
        assert survival_to_cdf(one)[0] == 0.0
        s = StepSurvivalFunction([56, 112], [111, 114], [2, 1], [6445, 6], [298, 2], [1159, 6],
                                 [0.99945, 0.64231])
        np.testing.assert_allclose(survival_to_cdf(s), [0.00055, 0.35769], atol=1e-12)


def loglik_oracle(p, obs, kind):
    """Term-by-term log-likelihood with scipy's Weibull."""
    dist = weibull_min(p.shape, scale=p.scale)
    total = 0.0
    for o in obs:
        if o.breakdown:
            total += math.log(dist.cdf(o.intensity) if kind == "new" else dist.pdf(o.intensity))
        else:
            total += math.log(dist.sf(o.intensity))
    return total


class TestLogLikelihood:
    def test_single_censored(self):
        p = WeibullParams(100.0 / math.log(2), 1.0)  # F(100) = 0.5
        assert log_likelihood(p, make_obs([(100, False)])) == pytest.approx(math.log(0.5))

    def test_single_uncensored(self):
        p = WeibullParams(100.0 / math.log(2), 1.0)
        assert log_likelihood(p, make_obs([(100, True)])) == pytest.approx(-0.693147, abs=1e-6)

    def test_two_terms(self):
        obs = make_obs([(100, True), (90, False)])
        dist = weibull_min(6.75, scale=146.42)
        expected = math.log(dist.cdf(100)) + math.log(1 - dist.cdf(90))
        assert log_likelihood(NO_VSL, obs) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("kind", ["new", "old"])
    def test_matches_oracle(self, kind):
        rng = np.random.default_rng(3)
        obs = make_obs([(int(i), bool(b)) for i, b in
                        zip(rng.integers(45, 115, 200), rng.random(200) < 0.1)])
        assert log_likelihood(NO_VSL, obs, kind) == pytest.approx(loglik_oracle(NO_VSL, obs, kind),
                                                                   rel=1e-10)

    def test_floor_keeps_values_finite(self):
        p = WeibullParams(1000.0, 10.0)
        assert np.isfinite(log_likelihood(p, make_obs([(1, True)]), "new"))
        assert np.isfinite(log_likelihood(WeibullParams(1.0, 10.0), make_obs([(500, False)])))

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            log_likelihood(NO_VSL, make_obs([(50, True)]), "newest")

    @settings(max_examples=30)
    @given(st.permutations(list(range(12))))
    def test_permutation_invariant(self, perm):
        pairs = [(50 + 5 * i, i % 4 == 0) for i in range(12)]
        a = log_likelihood(NO_VSL, make_obs(pairs))
        b = log_likelihood(NO_VSL, make_obs([pairs[i] for i in perm]))
        assert a == pytest.approx(b, rel=1e-13)

    def test_central_differences_match_analytic_gradient(self):
        rng = np.random.default_rng(11)
        obs = make_obs([(int(i), bool(b)) for i, b in
                        zip(rng.integers(45, 115, 500), rng.random(500) < 0.05)])
        lam, gam = 146.42, 6.75
        x = obs.intensity.astype(float)
        d = obs.breakdown.astype(float)
        z = (x / lam) ** gam
        weight = d / np.expm1(z) - (1 - d)
        grad = np.array([np.sum(weight * (-gam * z / lam)), np.sum(weight * z * np.log(x / lam))])

        def ll(a, b):
            return log_likelihood(WeibullParams(a, b), obs)

        h = 1e-5
        num = np.array([
            (ll(lam * (1 + h), gam) - ll(lam * (1 - h), gam)) / (2 * lam * h),
            (ll(lam, gam * (1 + h)) - ll(lam, gam * (1 - h))) / (2 * gam * h),
        ])
        np.testing.assert_allclose(num, grad, rtol=1e-5)
        # smooth: second differences shrink like h^2
        f0 = ll(lam, gam)
        second = [abs(ll(lam * (1 + s), gam) - 2 * f0 + ll(lam * (1 - s), gam)) for s in (1e-2, 1e-3)]
        assert second[1] < second[0] / 50


def synthetic(seed, duration=60000, truth=NO_VSL, demand=None):
    demand = demand or DemandConfig(mean=28, volatility=1.2, reversion=0.03, daily_amplitude=6)
    obs, _ = synth_observations(truth, demand, duration, seed, min_intensity=45)
    return obs


class TestFit:
    def test_recovers_truth(self):
        fit = fit_mle(synthetic(7, 200000))
        assert fit.converged and fit.kind == "new"
        assert fit.params.scale == pytest.approx(146.42, rel=0.02)
        assert fit.params.shape == pytest.approx(6.75, rel=0.10)

    def test_optimum_beats_brute_force_grid(self):
        obs = synthetic(8)
        fit = fit_mle(obs)
        best = max(log_likelihood(WeibullParams(a, b), obs)
                   for a in np.linspace(120, 180, 61) for b in np.linspace(4, 10, 61))
        assert fit.loglik >= best - 1e-9
        assert fit.loglik == pytest.approx(log_likelihood(fit.params, obs), rel=1e-12)

    def test_old_likelihood_is_steeper(self):
        obs = synthetic(9, 100000)
        new, old = fit_mle(obs, "new").params, fit_mle(obs, "old").params
        assert old.shape > 1.3 * new.shape
        # steeper: lower breakdown probability at low intensity, higher at high intensity
        assert weibull_cdf(old, 60) < weibull_cdf(NO_VSL, 60)
        assert weibull_cdf(old, 140) > weibull_cdf(NO_VSL, 140)

    def test_deterministic(self):
        obs = synthetic(10)
        assert fit_mle(obs) == fit_mle(obs)

    def test_provenance_carried(self):
        obs = make_obs([(60, False), (70, True), (80, False), (90, True)] * 3,
                       window_minutes=5, eval_step_minutes=2)
        p = fit_mle(obs).params
        assert (p.window_minutes, p.eval_step_minutes) == (5, 2)

    def test_no_breakdowns(self):
        with pytest.raises(EstimationError, match="degenerate"):
            fit_mle(make_obs([(60, False), (70, False)]))

    def test_no_censored(self):
        with pytest.raises(EstimationError):
            fit_mle(make_obs([(60, True)]))

    def test_non_convergence_carries_best(self):
        with pytest.raises(EstimationError) as info:
            fit_mle(synthetic(12), opt=OptimizerConfig(max_iter=3))
        assert isinstance(info.value.best, WeibullParams)

    def test_more_censoring_at_a_level_lowers_fitted_probability(self):
        base = synthetic(13)
        probs = []
        for extra in (0, 50, 200, 800):
            obs = make_obs(list(zip(base.intensity, base.breakdown)) + [(100, False)] * extra)
            probs.append(weibull_cdf(fit_mle(obs).params, 100))
        assert all(b <= a + 1e-12 for a, b in zip(probs, probs[1:]))
