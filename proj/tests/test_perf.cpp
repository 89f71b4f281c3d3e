// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "simharness/errors.hpp"
#include "simharness/perf.hpp"

using namespace simharness;
using namespace simharness::perf;

namespace {

EstimatesData make_data(const std::vector<double>& theta_hats,
                        const std::vector<double>& se_hats, double q = 1.96) {
  EstimatesData data;
  for (std::size_t i = 0; i < theta_hats.size(); ++i) {
    EstimatesRecord r;
    r.dgm_id = "1";
    r.repetition = i + 1;
    r.method_id = "m";
    r.estimand_id = "theta";
    r.estimate.theta_hat = theta_hats[i];
    r.estimate.se_hat = se_hats[i];
    r.estimate.ci_low = theta_hats[i] - q * se_hats[i];
    r.estimate.ci_high = theta_hats[i] + q * se_hats[i];
    r.estimate.p_value = 0.5;
    r.estimate.converged = true;
    data.rows.push_back(r);
  }
  return data;
}

double cell(const PerfResult& result, Measure m, const std::string& method = "m",
            bool mcse = false) {
  for (const auto& p : result.estimates)
    if (p.measure == m && p.method_id == method) return mcse ? p.mcse : p.estimate;
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

TEST_CASE("bias, empse and mse on {1,2,3} with theta=1 match the definitions") {
  const EstimatesData data = make_data({1.0, 2.0, 3.0}, {0.1, 0.1, 0.1});
  PerfOptions options;
  options.measures = {Measure::bias, Measure::empse, Measure::mse, Measure::mean};
  const PerfResult result = summarize(data, {{{"1", "theta"}, 1.0}}, options);

  CHECK(cell(result, Measure::bias) == doctest::Approx(1.0));
  CHECK(cell(result, Measure::bias, "m", true) ==
        doctest::Approx(std::sqrt(2.0 / 6.0)).epsilon(1e-12));
  CHECK(cell(result, Measure::empse) == doctest::Approx(1.0));
  CHECK(cell(result, Measure::empse, "m", true) == doctest::Approx(0.5));
  CHECK(cell(result, Measure::mse) == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
  CHECK(cell(result, Measure::mean) == doctest::Approx(2.0));
  // MSE identity: bias^2 + (n-1)/n * EmpSE^2
  CHECK(cell(result, Measure::mse) ==
        doctest::Approx(1.0 + (2.0 / 3.0) * 1.0).epsilon(1e-12));
}

TEST_CASE("degenerate sample: all estimates equal the truth") {
  const EstimatesData data = make_data({2.0, 2.0, 2.0, 2.0}, {0.5, 0.5, 0.5, 0.5});
  PerfOptions options;
  options.measures = {Measure::bias, Measure::coverage};
  const PerfResult result = summarize(data, {{{"1", "theta"}, 2.0}}, options);
  CHECK(cell(result, Measure::bias) == 0.0);
  CHECK(cell(result, Measure::bias, "m", true) == 0.0);
  CHECK(cell(result, Measure::coverage) == 100.0);
  CHECK(cell(result, Measure::coverage, "m", true) == 0.0);
}

TEST_CASE("MSE identity holds to 1e-12 on randomized vectors") {
  std::mt19937_64 gen(12345);
  std::normal_distribution<double> dist(0.3, 1.7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen() % 500;
    std::vector<double> theta(n), se(n, 0.1);
    for (auto& v : theta) v = dist(gen);
    const EstimatesData data = make_data(theta, se);
    PerfOptions options;
    options.measures = {Measure::bias, Measure::empse, Measure::mse};
    const PerfResult result = summarize(data, {{{"1", "theta"}, 0.25}}, options);
    const double bias = cell(result, Measure::bias);
    const double empse = cell(result, Measure::empse);
    const double mse = cell(result, Measure::mse);
    const double nd = static_cast<double>(n);
    CHECK(std::fabs(mse - (bias * bias + (nd - 1.0) / nd * empse * empse)) < 1e-12);
  }
}

TEST_CASE("shift equivariance") {
  std::mt19937_64 gen(77);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> theta(40), se(40);
  for (auto& v : theta) v = dist(gen);
  for (auto& v : se) v = 0.5 + std::fabs(dist(gen));
  const double c = 3.25;
  std::vector<double> shifted = theta;
  for (auto& v : shifted) v += c;

  PerfOptions options;
  options.measures = {Measure::bias, Measure::mean, Measure::empse, Measure::mse,
                      Measure::be_coverage};
  const PerfResult a = summarize(make_data(theta, se), {{{"1", "theta"}, 0.1}}, options);
  const PerfResult b =
      summarize(make_data(shifted, se), {{{"1", "theta"}, 0.1 + c}}, options);

  CHECK(cell(b, Measure::bias) == doctest::Approx(cell(a, Measure::bias)).epsilon(1e-9));
  CHECK(cell(b, Measure::mean) == doctest::Approx(cell(a, Measure::mean) + c).epsilon(1e-12));
  CHECK(cell(b, Measure::empse) == doctest::Approx(cell(a, Measure::empse)).epsilon(1e-12));
  CHECK(cell(b, Measure::mse) == doctest::Approx(cell(a, Measure::mse)).epsilon(1e-9));
  CHECK(cell(b, Measure::be_coverage) == cell(a, Measure::be_coverage));
}

TEST_CASE("scale equivariance") {
  std::mt19937_64 gen(78);
  std::normal_distribution<double> dist(0.4, 1.0);
  std::vector<double> theta(60), se(60);
  for (auto& v : theta) v = dist(gen);
  for (auto& v : se) v = 0.5 + std::fabs(dist(gen));
  const double c = 2.5;
  std::vector<double> theta_s = theta, se_s = se;
  for (auto& v : theta_s) v *= c;
  for (auto& v : se_s) v *= c;

  PerfOptions options;
  options.measures = {Measure::bias, Measure::empse, Measure::mse, Measure::coverage,
                      Measure::be_coverage, Measure::avg_modse, Measure::rel_err_modse};
  const PerfResult a = summarize(make_data(theta, se), {{{"1", "theta"}, 0.4}}, options);
  const PerfResult b =
      summarize(make_data(theta_s, se_s), {{{"1", "theta"}, 0.4 * c}}, options);

  CHECK(cell(b, Measure::bias) == doctest::Approx(c * cell(a, Measure::bias)).epsilon(1e-9));
  CHECK(cell(b, Measure::empse) == doctest::Approx(c * cell(a, Measure::empse)).epsilon(1e-12));
  CHECK(cell(b, Measure::mse) == doctest::Approx(c * c * cell(a, Measure::mse)).epsilon(1e-9));
  CHECK(cell(b, Measure::avg_modse) ==
        doctest::Approx(c * cell(a, Measure::avg_modse)).epsilon(1e-12));
  CHECK(cell(b, Measure::coverage) == cell(a, Measure::coverage));
  CHECK(cell(b, Measure::be_coverage) == cell(a, Measure::be_coverage));
  CHECK(cell(b, Measure::rel_err_modse) ==
        doctest::Approx(cell(a, Measure::rel_err_modse)).epsilon(1e-9));
}

namespace {

EstimatesData two_method_data(const std::vector<double>& a, const std::vector<double>& b) {
  EstimatesData data;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (const auto& [method, value] : {std::pair{"A", a[i]}, std::pair{"B", b[i]}}) {
      EstimatesRecord r;
      r.dgm_id = "1";
      r.repetition = i + 1;
      r.method_id = method;
      r.estimand_id = "theta";
      r.estimate.theta_hat = value;
      r.estimate.se_hat = 0.3;
      r.estimate.ci_low = value - 0.6;
      r.estimate.ci_high = value + 0.6;
      r.estimate.p_value = 0.5;
      r.estimate.converged = true;
      data.rows.push_back(r);
    }
  }
  return data;
}

double relprec(const EstimatesData& data, const std::string& method,
               const std::string& comparator) {
  PerfOptions options;
  options.measures = {Measure::rel_precision};
  options.comparator_method_id = comparator;
  const PerfResult result = summarize(data, {{{"1", "theta"}, 0.0}}, options);
  return cell(result, Measure::rel_precision, method);
}

}  // namespace

TEST_CASE("relative precision antisymmetry: (1+r_AB/100)(1+r_BA/100) = 1") {
  std::mt19937_64 gen(4242);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> a(80), b(80);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = dist(gen);
    b[i] = 0.6 * a[i] + 0.4 * dist(gen);
  }
  const EstimatesData data = two_method_data(a, b);
  const double r_ba = relprec(data, "B", "A");  // B vs comparator A
  const double r_ab = relprec(data, "A", "B");  // A vs comparator B
  CHECK(std::fabs((1.0 + r_ab / 100.0) * (1.0 + r_ba / 100.0) - 1.0) < 1e-12);

  // Comparator's own row is exactly zero with zero MCSE.
  PerfOptions options;
  options.measures = {Measure::rel_precision};
  options.comparator_method_id = "A";
  const PerfResult result = summarize(data, {{{"1", "theta"}, 0.0}}, options);
  CHECK(cell(result, Measure::rel_precision, "A") == 0.0);
  CHECK(cell(result, Measure::rel_precision, "A", true) == 0.0);
  CHECK(cell(result, Measure::rel_precision, "B", true) > 0.0);
}

TEST_CASE("rel_precision pairs only repetitions where both methods converged") {
  std::vector<double> a(30), b(30);
  std::mt19937_64 gen(9);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = dist(gen);
    b[i] = dist(gen) * 2.0;
  }
  EstimatesData data = two_method_data(a, b);
  // Break convergence of B on repetitions 1-10.
  for (auto& r : data.rows)
    if (r.method_id == "B" && r.repetition <= 10) {
      r.estimate.converged = false;
      r.estimate.error_code = estimators::FitErrorCode::nonconvergence;
    }
  PerfOptions options;
  options.measures = {Measure::rel_precision};
  options.comparator_method_id = "A";
  const PerfResult result = summarize(data, {{{"1", "theta"}, 0.0}}, options);
  for (const auto& p : result.estimates)
    if (p.measure == Measure::rel_precision && p.method_id == "B")
      CHECK(p.n_used == 20);
}

TEST_CASE("coverage counts boundary hits and complements to 1 exactly") {
  EstimatesData data = make_data({0.0, 1.0, 5.0}, {0.5, 0.5, 0.5});
  // theta = 0.98: interval 2 is [0.02, 1.98] (covers), interval 1 is
  // [-0.98, 0.98] (boundary hit counts as covered), interval 3 misses.
  PerfOptions options;
  options.measures = {Measure::coverage};
  const PerfResult result = summarize(data, {{{"1", "theta"}, 0.98}}, options);
  CHECK(cell(result, Measure::coverage) == doctest::Approx(100.0 * 2.0 / 3.0));
}

TEST_CASE("measures are skipped with diagnostics when inputs are missing") {
  EstimatesData data = make_data({1.0, 2.0}, {0.1, 0.2});
  data.has_ci = false;
  PerfOptions options;
  options.measures = {Measure::coverage, Measure::bias};
  const PerfResult result = summarize(data, {{{"1", "theta"}, 1.0}}, options);
  CHECK(std::isnan(cell(result, Measure::coverage)));
  CHECK_FALSE(std::isnan(cell(result, Measure::bias)));
  REQUIRE(result.diagnostics.size() == 1);
  CHECK(result.diagnostics[0].measure == Measure::coverage);

  // EmpSE of zero makes rel_err_modse undefined.
  const EstimatesData constant = make_data({1.0, 1.0, 1.0}, {0.1, 0.1, 0.1});
  options.measures = {Measure::rel_err_modse};
  const PerfResult r2 = summarize(constant, {{{"1", "theta"}, 1.0}}, options);
  CHECK(r2.estimates.empty());
  REQUIRE(r2.diagnostics.size() == 1);
}

TEST_CASE("single converged repetition skips variance-based measures") {
  const EstimatesData data = make_data({1.0}, {0.1});
  PerfOptions options;
  options.measures = {Measure::bias, Measure::convergence_pct};
  const PerfResult result = summarize(data, {{{"1", "theta"}, 1.0}}, options);
  CHECK(std::isnan(cell(result, Measure::bias)));
  CHECK(cell(result, Measure::convergence_pct) == 100.0);
}

TEST_CASE("conditional coverage: one group equals unconditional coverage") {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> theta(500), se(500);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    theta[i] = dist(gen);
    se[i] = 0.8 + 0.2 * std::fabs(dist(gen));
  }
  const EstimatesData data = make_data(theta, se);
  const auto rows = conditional_coverage(data, {{{"1", "theta"}, 0.0}}, 1);
  REQUIRE(rows.size() == 2);  // overall + single group
  CHECK(rows[0].group == 0);
  CHECK(rows[1].group == 1);
  CHECK(rows[0].coverage_pct == rows[1].coverage_pct);
  CHECK(rows[0].n_used == rows[1].n_used);

  PerfOptions options;
  options.measures = {Measure::coverage};
  const PerfResult overall = summarize(data, {{{"1", "theta"}, 0.0}}, options);
  CHECK(rows[0].coverage_pct == doctest::Approx(cell(overall, Measure::coverage)));
}

TEST_CASE("conditional coverage with constant model SE gives equal bins for a deterministic pattern") {
  // Coverage indicator alternates independently of the (constant) se, so
  // equal-size bins split it exactly evenly.
  std::vector<double> theta(300), se(300, 1.0);
  for (std::size_t i = 0; i < theta.size(); ++i)
    theta[i] = (i % 2 == 0) ? 0.0 : 100.0;  // alternating cover / miss of theta=0
  const EstimatesData data = make_data(theta, se);
  const auto rows = conditional_coverage(data, {{{"1", "theta"}, 0.0}}, 3);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].n_used == 100);
    CHECK(rows[i].coverage_pct == doctest::Approx(rows[0].coverage_pct));
  }
}

TEST_CASE("conditional coverage needs at least as many rows as groups") {
  const EstimatesData data = make_data({1.0, 2.0}, {0.1, 0.2});
  CHECK_THROWS_AS(conditional_coverage(data, {{{"1", "theta"}, 1.0}}, 3), Error);
}

TEST_CASE("required_nsim reproduces the published planning numbers") {
  CHECK(required_nsim(NsimKind::coverage_or_power, 95.0, 0.5) == 1900);
  CHECK(required_nsim(NsimKind::coverage_or_power, 50.0, 0.5) == 10000);
  CHECK(required_nsim(NsimKind::bias, 0.0, 0.005, 0.04) == 1600);
  CHECK_THROWS_AS(required_nsim(NsimKind::coverage_or_power, 0.0, 0.5), Error);
  CHECK_THROWS_AS(required_nsim(NsimKind::coverage_or_power, 100.0, 0.5), Error);
  CHECK_THROWS_AS(required_nsim(NsimKind::coverage_or_power, 95.0, 0.0), Error);
  CHECK_THROWS_AS(required_nsim(NsimKind::bias, 0.0, 0.005), Error);
}

TEST_CASE("coverage under bias matches the normal-CDF oracle") {
  CHECK(coverage_under_bias(0.0, 0.05) == doctest::Approx(0.95).epsilon(1e-9));
  const double expected =
      oracles::norm_cdf(1.0 + oracles::norm_quantile(0.975)) -
      oracles::norm_cdf(1.0 - oracles::norm_quantile(0.975));
  CHECK(coverage_under_bias(1.0, 0.05) == doctest::Approx(expected).epsilon(1e-7));
  CHECK(coverage_under_bias(1.0, 0.05) == doctest::Approx(0.8300).epsilon(2e-4));
  CHECK(coverage_under_bias(-1.0, 0.05) == coverage_under_bias(1.0, 0.05));
}

TEST_CASE("coverage-under-bias curves: declining for shrinking-n bias, constant otherwise") {
  // Method with bias b = sqrt(n)/5 in SE units: coverage declines with n.
  double prev = 1.0;
  for (const double n : {10.0, 30.0, 50.0, 70.0, 90.0}) {
    const double cov = coverage_under_bias(1.0 / (5.0 * std::pow(n, -0.5)), 0.05);
    CHECK(cov < prev);
    prev = cov;
  }
  // Constant bias in SE units: coverage is constant in n.
  const double c = coverage_under_bias(1.0, 0.05);
  for (int i = 0; i < 5; ++i) CHECK(coverage_under_bias(1.0, 0.05) == c);
}

TEST_CASE("missingness report partitions repetitions by error code") {
  EstimatesData data = make_data({1.0, 2.0, 3.0, 4.0, 5.0}, {1, 1, 1, 1, 1});
  data.rows[1].estimate.converged = false;
  data.rows[1].estimate.error_code = estimators::FitErrorCode::separation;
  data.rows[4].estimate.converged = false;
  data.rows[4].estimate.error_code = estimators::FitErrorCode::nonconvergence;
  const auto cells = missingness_report(data);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].n_total == 5);
  CHECK(cells[0].n_converged == 3);
  CHECK(cells[0].failures.at(estimators::FitErrorCode::separation) == 1);
  CHECK(cells[0].failures.at(estimators::FitErrorCode::nonconvergence) == 1);
}

TEST_CASE("performance CSV round-trips") {
  const EstimatesData data = make_data({1.0, 2.0, 3.0}, {0.1, 0.1, 0.1});
  PerfOptions options;
  options.measures = {Measure::bias, Measure::coverage};
  const PerfResult result = summarize(data, {{{"1", "theta"}, 1.0}}, options);
  const PerfResult back = perf_from_csv(perf_to_csv(result));
  REQUIRE(back.estimates.size() == result.estimates.size());
  for (std::size_t i = 0; i < back.estimates.size(); ++i) {
    CHECK(back.estimates[i].estimate == result.estimates[i].estimate);
    CHECK(back.estimates[i].mcse == result.estimates[i].mcse);
    CHECK(back.estimates[i].measure == result.estimates[i].measure);
  }
}
