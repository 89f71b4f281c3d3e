// SPDX-License-Identifier: Apache-2.0
#ifndef SIMHARNESS_ESTIMATORS_HPP
#define SIMHARNESS_ESTIMATORS_HPP

#include <limits>
#include <string>

#include "simharness/dataset.hpp"

namespace simharness::estimators {

/// Why a method failed on a dataset. Failures are data, not exceptions:
/// they become a row with empty numeric fields in the estimates file.
enum class FitErrorCode { none, nonconvergence, separation, no_events, numeric };

const char* fit_error_name(FitErrorCode c);
FitErrorCode fit_error_from_name(const std::string& name);

struct Estimate {
  double theta_hat = std::numeric_limits<double>::quiet_NaN();
  double se_hat = std::numeric_limits<double>::quiet_NaN();
  double df = std::numeric_limits<double>::infinity();
  double ci_low = std::numeric_limits<double>::quiet_NaN();
  double ci_high = std::numeric_limits<double>::quiet_NaN();
  double p_value = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  FitErrorCode error_code = FitErrorCode::none;
};

struct FitControl {
  double tolerance = 1e-8;  // gradient max-norm
  int max_iterations = 50;
  int max_step_halvings = 20;
};

struct WaldResult {
  double p_value = 1.0;
  bool reject = false;
};

/// Exponential proportional-hazards fit, closed form:
/// theta = log(d1/T1) - log(d0/T0), se = sqrt(1/d1 + 1/d0).
Estimate fit_exponential_ph(const SurvivalDataset& d, double alpha);

struct WeibullParams {
  double log_lambda = 0.0;
  double log_gamma = 0.0;
  double theta = 0.0;
};

/// Weibull proportional-hazards MLE of (log lambda, log gamma, theta) by
/// Newton-Raphson with step halving; se from the inverse observed
/// information. params_out, when given, receives the full MLE.
Estimate fit_weibull_ph(const SurvivalDataset& d, double alpha,
                        const FitControl& control = {},
                        WeibullParams* params_out = nullptr);

/// Cox fit for the scalar binary-arm log hazard ratio, Breslow ties.
Estimate fit_cox_ph(const SurvivalDataset& d, double alpha,
                    const FitControl& control = {});

/// Sample mean with a t-based confidence interval, df = n - 1.
Estimate fit_normal_mean_t(const NumericDataset& d, double alpha);

/// Two-sided Wald test of theta = theta0 using the estimate's reference
/// distribution (normal when df is infinite, t otherwise). Ties at alpha
/// are rejected.
WaldResult wald_test(const Estimate& e, double theta0, double alpha);

// Log-likelihood evaluators shared with the fitters (the test oracles use
// their own, independently coded, objective functions).
double exponential_ph_loglik(const SurvivalDataset& d, double log_lambda, double theta);
double weibull_ph_loglik(const SurvivalDataset& d, double log_lambda,
                         double log_gamma, double theta);
double cox_ph_partial_loglik(const SurvivalDataset& d, double theta);

}  // namespace simharness::estimators

#endif
