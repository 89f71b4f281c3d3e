// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "simharness/dgm.hpp"
#include "simharness/errors.hpp"
#include "simharness/estimators.hpp"
#include "simharness/mathutil.hpp"
#include "simharness/rng.hpp"

using namespace simharness;
using namespace simharness::estimators;

namespace {

SurvivalDataset random_trial(std::uint64_t seed, std::size_t n, double gamma,
                             double censor) {
  dgm::SurvivalDgmSpec spec;
  spec.n_obs = n;
  spec.lambda = 0.1;
  spec.gamma = gamma;
  spec.theta = -0.5;
  spec.censor_time = censor;
  rng::Generator g = rng::init_generator(seed, 0);
  return dgm::generate_survival(g, spec);
}

}  // namespace

TEST_CASE("normal quantile and CDF agree with the quadrature oracle") {
  for (const double p : {0.001, 0.025, 0.1, 0.5, 0.9, 0.975, 0.999}) {
    CHECK(mathutil::norm_quantile(p) == doctest::Approx(oracles::norm_quantile(p)).epsilon(1e-7));
  }
  for (const double x : {-3.0, -1.0, 0.0, 0.5, 1.96, 4.0}) {
    CHECK(mathutil::norm_cdf(x) == doctest::Approx(oracles::norm_cdf(x)).epsilon(1e-10));
  }
  // Acklam's raw approximation stays within its advertised relative error.
  for (double u = 0.0005; u < 1.0; u += 0.0007) {
    const double refined = mathutil::norm_quantile(u);
    CHECK(std::fabs(mathutil::norm_inv_cdf(u) - refined) <
          1.2e-9 * std::max(1.0, std::fabs(refined)));
  }
}

TEST_CASE("t quantile matches independent CDF inversion") {
  CHECK(mathutil::t_quantile(0.975, 2.0) ==
        doctest::Approx(oracles::t_quantile(0.975, 2.0)).epsilon(1e-7));
  CHECK(mathutil::t_quantile(0.975, 2.0) == doctest::Approx(4.3027).epsilon(1e-4));
  CHECK(mathutil::t_quantile(0.975, 29.0) ==
        doctest::Approx(oracles::t_quantile(0.975, 29.0)).epsilon(1e-7));
}

TEST_CASE("exponential fit: symmetric arms give theta 0, se 1") {
  SurvivalDataset d;
  d.subjects = {{0, 1.0, 1}, {0, 2.0, 1}, {1, 1.0, 1}, {1, 2.0, 1}};
  const Estimate e = fit_exponential_ph(d, 0.05);
  REQUIRE(e.converged);
  CHECK(e.theta_hat == doctest::Approx(0.0));
  CHECK(e.se_hat == doctest::Approx(1.0));
  CHECK(e.ci_low == doctest::Approx(-mathutil::norm_quantile(0.975)).epsilon(1e-12));
  CHECK(std::isinf(e.df));
}

TEST_CASE("exponential fit matches numeric likelihood maximization") {
  const SurvivalDataset d = random_trial(11, 200, 1.0, 5.0);
  const Estimate e = fit_exponential_ph(d, 0.05);
  REQUIRE(e.converged);
  CHECK(std::fabs(e.theta_hat - oracles::exponential_theta(d)) < 1e-8);
}

TEST_CASE("zero events in an arm is recorded as no_events, not thrown") {
  SurvivalDataset d;
  d.subjects = {{0, 1.0, 1}, {0, 2.0, 1}, {1, 1.0, 0}, {1, 2.0, 0}};
  const Estimate e = fit_exponential_ph(d, 0.05);
  CHECK_FALSE(e.converged);
  CHECK(e.error_code == FitErrorCode::no_events);
  CHECK(std::isnan(e.theta_hat));
}

TEST_CASE("weibull fit recovers the shape on a large shape-1 dataset") {
  const SurvivalDataset d = random_trial(21, 100'000, 1.0, 1e9);
  WeibullParams params;
  const Estimate e = fit_weibull_ph(d, 0.05, {}, &params);
  REQUIRE(e.converged);
  const double gamma_hat = std::exp(params.log_gamma);
  CHECK(gamma_hat > 0.99);
  CHECK(gamma_hat < 1.01);
  // On shape-1 data the Weibull and exponential estimates agree closely.
  const Estimate exp_fit = fit_exponential_ph(d, 0.05);
  CHECK(std::fabs(e.theta_hat - exp_fit.theta_hat) < 0.01);
}

TEST_CASE("weibull fit matches the 3-D grid-search oracle on a fixed dataset") {
  const SurvivalDataset d = random_trial(33, 20, 1.5, 6.0);
  const Estimate e = fit_weibull_ph(d, 0.05);
  REQUIRE(e.converged);
  CHECK(std::fabs(e.theta_hat - oracles::weibull_theta(d)) < 1e-6);
}

TEST_CASE("weibull fit needs two events") {
  SurvivalDataset d;
  d.subjects = {{0, 1.0, 1}, {1, 2.0, 0}, {1, 3.0, 0}};
  const Estimate e = fit_weibull_ph(d, 0.05);
  CHECK_FALSE(e.converged);
  CHECK(e.error_code == FitErrorCode::no_events);
}

TEST_CASE("cox fit: alternating events match the 1-D grid oracle") {
  SurvivalDataset d;
  d.subjects = {{0, 1.0, 1}, {1, 2.0, 1}, {0, 3.0, 1}, {1, 4.0, 1},
                {0, 5.0, 1}, {1, 6.0, 1}, {0, 7.0, 1}, {1, 8.0, 1}};
  const Estimate e = fit_cox_ph(d, 0.05);
  REQUIRE(e.converged);
  CHECK(std::fabs(e.theta_hat - oracles::cox_theta(d)) < 1e-6);
}

TEST_CASE("cox fit on a generated dataset matches the oracle") {
  const SurvivalDataset d = random_trial(55, 60, 1.5, 6.0);
  const Estimate e = fit_cox_ph(d, 0.05);
  REQUIRE(e.converged);
  CHECK(std::fabs(e.theta_hat - oracles::cox_theta(d)) < 1e-6);
}

TEST_CASE("cox failure modes: all censored, and single-arm events") {
  SurvivalDataset censored;
  censored.subjects = {{0, 1.0, 0}, {1, 2.0, 0}};
  CHECK(fit_cox_ph(censored, 0.05).error_code == FitErrorCode::no_events);

  SurvivalDataset separated;
  separated.subjects = {{0, 5.0, 0}, {0, 6.0, 0}, {1, 1.0, 1}, {1, 2.0, 1}};
  const Estimate e = fit_cox_ph(separated, 0.05);
  CHECK_FALSE(e.converged);
  CHECK(e.error_code == FitErrorCode::separation);
}

TEST_CASE("t-interval: zero-variance data give a degenerate interval") {
  NumericDataset d;
  d.y = {0.0, 0.0, 0.0, 0.0};
  const Estimate e = fit_normal_mean_t(d, 0.05);
  REQUIRE(e.converged);
  CHECK(e.theta_hat == 0.0);
  CHECK(e.se_hat == 0.0);
  CHECK(e.ci_low == 0.0);
  CHECK(e.ci_high == 0.0);
  CHECK(e.p_value == 1.0);  // theta0 = 0 equals the estimate
}

TEST_CASE("t-interval on {1,2,3} reproduces the textbook interval") {
  NumericDataset d;
  d.y = {1.0, 2.0, 3.0};
  const Estimate e = fit_normal_mean_t(d, 0.05);
  REQUIRE(e.converged);
  CHECK(e.theta_hat == doctest::Approx(2.0));
  CHECK(e.se_hat == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(e.df == doctest::Approx(2.0));
  CHECK(e.ci_low == doctest::Approx(-0.4841).epsilon(1e-3));
  CHECK(e.ci_high == doctest::Approx(4.4841).epsilon(1e-3));
}

TEST_CASE("t-interval needs at least two observations") {
  NumericDataset d;
  d.y = {1.0};
  CHECK_THROWS_AS(fit_normal_mean_t(d, 0.05), Error);
}

TEST_CASE("wald test: null point, boundary rejection, and z=1") {
  Estimate e;
  e.theta_hat = 1.0;
  e.se_hat = 0.5;
  e.df = std::numeric_limits<double>::infinity();
  e.converged = true;

  const auto at_null = wald_test(e, 1.0, 0.05);
  CHECK(at_null.p_value == doctest::Approx(1.0));
  CHECK_FALSE(at_null.reject);

  // z = 1.96 -> p = 0.0500 (4 dp) and ties are rejected.
  e.theta_hat = 1.96;
  e.se_hat = 1.0;
  const auto boundary = wald_test(e, 0.0, 0.05);
  CHECK(boundary.p_value == doctest::Approx(0.0500).epsilon(2e-3));
  CHECK(boundary.p_value <= 0.05);
  CHECK(boundary.reject);

  e.theta_hat = 1.0;
  const auto z1 = wald_test(e, 0.0, 0.05);
  CHECK(z1.p_value == doctest::Approx(0.3173).epsilon(1e-3));
  CHECK(z1.p_value ==
        doctest::Approx(2.0 * (1.0 - oracles::norm_cdf(1.0))).epsilon(1e-9));

  e.se_hat = 0.0;
  CHECK(wald_test(e, 0.0, 0.05).p_value == 0.0);
  CHECK(wald_test(e, 1.0, 0.05).p_value == 1.0);
}

TEST_CASE("label symmetry: swapping arms negates theta and keeps the se") {
  for (const std::uint64_t seed : {3u, 17u, 29u}) {
    SurvivalDataset d = random_trial(seed, 120, 1.3, 4.0);
    SurvivalDataset flipped = d;
    for (auto& s : flipped.subjects) s.x = 1 - s.x;
    for (const auto fit : {+[](const SurvivalDataset& data) {
                             return fit_exponential_ph(data, 0.05);
                           },
                           +[](const SurvivalDataset& data) {
                             return fit_weibull_ph(data, 0.05, {});
                           },
                           +[](const SurvivalDataset& data) {
                             return fit_cox_ph(data, 0.05, {});
                           }}) {
      const Estimate a = fit(d);
      const Estimate b = fit(flipped);
      REQUIRE(a.converged);
      REQUIRE(b.converged);
      CHECK(b.theta_hat == doctest::Approx(-a.theta_hat).epsilon(1e-6));
      CHECK(b.se_hat == doctest::Approx(a.se_hat).epsilon(1e-6));
    }
  }
}

TEST_CASE("time-scale invariance of theta and of the Cox se") {
  SurvivalDataset d = random_trial(71, 150, 1.2, 4.0);
  SurvivalDataset scaled = d;
  for (auto& s : scaled.subjects) s.time *= 37.5;

  const Estimate exp_a = fit_exponential_ph(d, 0.05);
  const Estimate exp_b = fit_exponential_ph(scaled, 0.05);
  CHECK(exp_b.theta_hat == doctest::Approx(exp_a.theta_hat).epsilon(1e-10));
  CHECK(exp_b.se_hat == doctest::Approx(exp_a.se_hat).epsilon(1e-10));

  const Estimate weib_a = fit_weibull_ph(d, 0.05);
  const Estimate weib_b = fit_weibull_ph(scaled, 0.05);
  CHECK(weib_b.theta_hat == doctest::Approx(weib_a.theta_hat).epsilon(1e-6));

  const Estimate cox_a = fit_cox_ph(d, 0.05);
  const Estimate cox_b = fit_cox_ph(scaled, 0.05);
  CHECK(cox_b.theta_hat == doctest::Approx(cox_a.theta_hat).epsilon(1e-10));
  CHECK(cox_b.se_hat == doctest::Approx(cox_a.se_hat).epsilon(1e-10));
}

TEST_CASE("reported standard errors are positive whenever converged") {
  for (const std::uint64_t seed : {2u, 4u, 6u, 8u}) {
    const SurvivalDataset d = random_trial(seed, 80, 1.4, 3.0);
    for (const Estimate& e : {fit_exponential_ph(d, 0.05), fit_weibull_ph(d, 0.05, {}),
                              fit_cox_ph(d, 0.05, {})}) {
      if (!e.converged) continue;
      CHECK(e.se_hat > 0.0);
      CHECK(e.ci_low <= e.theta_hat);
      CHECK(e.theta_hat <= e.ci_high);
    }
  }
}

TEST_CASE("oracle equivalence holds across randomized small datasets") {
  // A lighter version of the acceptance sweep, kept here so estimator
  // regressions surface in the unit suite.
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const SurvivalDataset d = random_trial(seed, 25, 1.0 + (seed % 3) * 0.25, 5.0);
    const Estimate exp_fit = fit_exponential_ph(d, 0.05);
    if (exp_fit.converged)
      CHECK(std::fabs(exp_fit.theta_hat - oracles::exponential_theta(d)) < 1e-8);
    const Estimate weib_fit = fit_weibull_ph(d, 0.05);
    if (weib_fit.converged)
      CHECK(std::fabs(weib_fit.theta_hat - oracles::weibull_theta(d)) < 1e-6);
    const Estimate cox_fit = fit_cox_ph(d, 0.05);
    if (cox_fit.converged)
      CHECK(std::fabs(cox_fit.theta_hat - oracles::cox_theta(d)) < 1e-6);
  }
}
