// SPDX-License-Identifier: Apache-2.0
#include "simharness/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "simharness/errors.hpp"
#include "simharness/mathutil.hpp"

namespace simharness::estimators {

namespace {

constexpr double kParamBound = 50.0;  // |parameter| beyond this is treated as divergence

void finish_wald_interval(Estimate& e, double alpha) {
  const double q = std::isinf(e.df) ? mathutil::norm_quantile(1.0 - alpha / 2.0)
                                    : mathutil::t_quantile(1.0 - alpha / 2.0, e.df);
  e.ci_low = e.theta_hat - q * e.se_hat;
  e.ci_high = e.theta_hat + q * e.se_hat;
  e.converged = true;
  e.error_code = FitErrorCode::none;
  e.p_value = wald_test(e, 0.0, alpha).p_value;
}

Estimate failed(FitErrorCode code) {
  Estimate e;
  e.converged = false;
  e.error_code = code;
  e.df = std::numeric_limits<double>::quiet_NaN();
  return e;
}

struct ArmTotals {
  double events0 = 0, events1 = 0;
  double time0 = 0, time1 = 0;
};

ArmTotals arm_totals(const SurvivalDataset& d) {
  ArmTotals t;
  for (const auto& s : d.subjects) {
    if (s.x) {
      t.events1 += s.event;
      t.time1 += s.time;
    } else {
      t.events0 += s.event;
      t.time0 += s.time;
    }
  }
  return t;
}

// Solves the symmetric 3x3 system H x = b in place; returns false when the
// pivoting degenerates.
bool solve3(std::array<std::array<double, 3>, 3> h, std::array<double, 3>& b) {
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::fabs(h[r][col]) > std::fabs(h[piv][col])) piv = r;
    if (std::fabs(h[piv][col]) < 1e-300) return false;
    std::swap(h[piv], h[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = h[r][col] / h[col][col];
      for (int c = col; c < 3; ++c) h[r][c] -= f * h[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int col = 2; col >= 0; --col) {
    for (int c = col + 1; c < 3; ++c) b[col] -= h[col][c] * b[c];
    b[col] /= h[col][col];
  }
  return true;
}

// Inverts the negated Hessian and returns the theta-theta diagonal entry,
// or a negative value when -H is not positive definite.
double theta_variance_from_hessian(const std::array<std::array<double, 3>, 3>& hess) {
  std::array<std::array<double, 3>, 3> info;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) info[r][c] = -hess[r][c];
  // Cholesky: info = L L^T
  std::array<std::array<double, 3>, 3> L{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c <= r; ++c) {
      double sum = info[r][c];
      for (int k = 0; k < c; ++k) sum -= L[r][k] * L[c][k];
      if (r == c) {
        if (sum <= 0.0) return -1.0;
        L[r][r] = std::sqrt(sum);
      } else {
        L[r][c] = sum / L[c][c];
      }
    }
  }
  // Solve info * v = e_theta (theta is parameter index 2).
  std::array<double, 3> y{}, v{};
  std::array<double, 3> e{0.0, 0.0, 1.0};
  for (int r = 0; r < 3; ++r) {
    double sum = e[r];
    for (int k = 0; k < r; ++k) sum -= L[r][k] * y[k];
    y[r] = sum / L[r][r];
  }
  for (int r = 2; r >= 0; --r) {
    double sum = y[r];
    for (int k = r + 1; k < 3; ++k) sum -= L[k][r] * v[k];
    v[r] = sum / L[r][r];
  }
  return v[2];
}

}  // namespace

const char* fit_error_name(FitErrorCode c) {
  switch (c) {
    case FitErrorCode::none: return "none";
    case FitErrorCode::nonconvergence: return "nonconvergence";
    case FitErrorCode::separation: return "separation";
    case FitErrorCode::no_events: return "no_events";
    case FitErrorCode::numeric: return "numeric";
  }
  return "numeric";
}

FitErrorCode fit_error_from_name(const std::string& name) {
  if (name == "none" || name.empty()) return FitErrorCode::none;
  if (name == "nonconvergence") return FitErrorCode::nonconvergence;
  if (name == "separation") return FitErrorCode::separation;
  if (name == "no_events") return FitErrorCode::no_events;
  return FitErrorCode::numeric;
}

double exponential_ph_loglik(const SurvivalDataset& d, double log_lambda, double theta) {
  double ll = 0.0;
  const double lambda = std::exp(log_lambda);
  for (const auto& s : d.subjects) {
    const double linpred = log_lambda + s.x * theta;
    ll += s.event * linpred - lambda * std::exp(s.x * theta) * s.time;
  }
  return ll;
}

Estimate fit_exponential_ph(const SurvivalDataset& d, double alpha) {
  for (const auto& s : d.subjects)
    if (!(s.time > 0.0) || !std::isfinite(s.time)) return failed(FitErrorCode::numeric);
  const ArmTotals t = arm_totals(d);
  if (t.events0 < 1.0 || t.events1 < 1.0) return failed(FitErrorCode::no_events);
  Estimate e;
  e.theta_hat = std::log(t.events1 / t.time1) - std::log(t.events0 / t.time0);
  e.se_hat = std::sqrt(1.0 / t.events1 + 1.0 / t.events0);
  e.df = std::numeric_limits<double>::infinity();
  finish_wald_interval(e, alpha);
  return e;
}

double weibull_ph_loglik(const SurvivalDataset& d, double log_lambda,
                         double log_gamma, double theta) {
  const double gamma = std::exp(log_gamma);
  double ll = 0.0;
  for (const auto& s : d.subjects) {
    if (!(s.time > 0.0)) return -std::numeric_limits<double>::infinity();
    const double lt = std::log(s.time);
    const double cumhaz = std::exp(log_lambda + gamma * lt + s.x * theta);
    ll += s.event * (log_lambda + log_gamma + (gamma - 1.0) * lt + s.x * theta) - cumhaz;
  }
  return ll;
}

Estimate fit_weibull_ph(const SurvivalDataset& d, double alpha,
                        const FitControl& control, WeibullParams* params_out) {
  double total_events = 0.0;
  for (const auto& s : d.subjects) {
    total_events += s.event;
    if (!(s.time > 0.0) || !std::isfinite(s.time)) return failed(FitErrorCode::numeric);
  }
  if (total_events < 2.0) return failed(FitErrorCode::no_events);

  // Start from the exponential closed form when available, log gamma = 0.
  const ArmTotals t = arm_totals(d);
  double a = (t.events0 > 0 && t.time0 > 0)
                 ? std::log(t.events0 / t.time0)
                 : std::log(total_events / (t.time0 + t.time1));
  double b = 0.0;
  double theta = (t.events0 > 0 && t.events1 > 0)
                     ? std::log(t.events1 / t.time1) - std::log(t.events0 / t.time0)
                     : 0.0;

  std::vector<double> logt(d.subjects.size());
  for (std::size_t i = 0; i < d.subjects.size(); ++i)
    logt[i] = std::log(d.subjects[i].time);

  double ll = weibull_ph_loglik(d, a, b, theta);
  if (!std::isfinite(ll)) return failed(FitErrorCode::numeric);

  std::array<std::array<double, 3>, 3> hess{};
  for (int iter = 0; iter < control.max_iterations; ++iter) {
    const double gamma = std::exp(b);
    std::array<double, 3> grad{0.0, 0.0, 0.0};
    hess = {};
    for (std::size_t i = 0; i < d.subjects.size(); ++i) {
      const auto& s = d.subjects[i];
      const double glt = gamma * logt[i];
      const double w = std::exp(a + glt + s.x * theta);  // cumulative hazard
      grad[0] += s.event - w;
      grad[1] += s.event * (1.0 + glt) - w * glt;
      grad[2] += s.x * (s.event - w);
      hess[0][0] -= w;
      hess[0][1] -= w * glt;
      hess[0][2] -= s.x * w;
      hess[1][1] += s.event * glt - w * glt * (1.0 + glt);
      hess[1][2] -= s.x * w * glt;
      hess[2][2] -= s.x * w;
    }
    hess[1][0] = hess[0][1];
    hess[2][0] = hess[0][2];
    hess[2][1] = hess[1][2];

    const double gmax = std::max({std::fabs(grad[0]), std::fabs(grad[1]), std::fabs(grad[2])});
    if (!std::isfinite(gmax)) return failed(FitErrorCode::numeric);
    if (gmax < control.tolerance) {
      const double var = theta_variance_from_hessian(hess);
      if (!(var > 0.0)) return failed(FitErrorCode::numeric);
      if (params_out) *params_out = {a, b, theta};
      Estimate e;
      e.theta_hat = theta;
      e.se_hat = std::sqrt(var);
      e.df = std::numeric_limits<double>::infinity();
      finish_wald_interval(e, alpha);
      return e;
    }

    std::array<double, 3> step = grad;
    for (auto& v : step) v = -v;
    if (!solve3(hess, step)) return failed(FitErrorCode::numeric);

    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half <= control.max_step_halvings; ++half) {
      const double na = a + scale * step[0];
      const double nb = b + scale * step[1];
      const double nth = theta + scale * step[2];
      const double nll = weibull_ph_loglik(d, na, nb, nth);
      if (std::isfinite(nll) && nll >= ll - 1e-14 * std::fabs(ll)) {
        a = na;
        b = nb;
        theta = nth;
        ll = nll;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) return failed(FitErrorCode::nonconvergence);
    if (std::fabs(a) > kParamBound || std::fabs(b) > kParamBound ||
        std::fabs(theta) > kParamBound)
      return failed(FitErrorCode::nonconvergence);
  }
  return failed(FitErrorCode::nonconvergence);
}

namespace {

// Breslow sufficient statistics for a binary covariate: per distinct event
// time, the event count, events in arm 1, and the at-risk counts per arm.
struct CoxSuffStats {
  std::vector<double> d_events, s_arm1, risk0, risk1;
  double total_events = 0.0, total_arm1_events = 0.0;
};

CoxSuffStats cox_suffstats(const SurvivalDataset& d) {
  std::vector<std::size_t> order(d.subjects.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return d.subjects[i].time < d.subjects[j].time;
  });

  CoxSuffStats st;
  double at_risk0 = 0.0, at_risk1 = 0.0;
  for (const auto& s : d.subjects) (s.x ? at_risk1 : at_risk0) += 1.0;

  std::size_t i = 0;
  const std::size_t n = order.size();
  while (i < n) {
    const double t = d.subjects[order[i]].time;
    double dev = 0.0, s1 = 0.0, leave0 = 0.0, leave1 = 0.0;
    std::size_t j = i;
    while (j < n && d.subjects[order[j]].time == t) {
      const auto& s = d.subjects[order[j]];
      if (s.event) {
        dev += 1.0;
        s1 += s.x;
      }
      (s.x ? leave1 : leave0) += 1.0;
      ++j;
    }
    if (dev > 0.0) {
      st.d_events.push_back(dev);
      st.s_arm1.push_back(s1);
      st.risk0.push_back(at_risk0);
      st.risk1.push_back(at_risk1);
      st.total_events += dev;
      st.total_arm1_events += s1;
    }
    at_risk0 -= leave0;
    at_risk1 -= leave1;
    i = j;
  }
  return st;
}

}  // namespace

double cox_ph_partial_loglik(const SurvivalDataset& d, double theta) {
  const CoxSuffStats st = cox_suffstats(d);
  double ll = 0.0;
  for (std::size_t k = 0; k < st.d_events.size(); ++k)
    ll += st.s_arm1[k] * theta -
          st.d_events[k] * std::log(st.risk0[k] + st.risk1[k] * std::exp(theta));
  return ll;
}

Estimate fit_cox_ph(const SurvivalDataset& d, double alpha, const FitControl& control) {
  for (const auto& s : d.subjects)
    if (!(s.time > 0.0) || !std::isfinite(s.time)) return failed(FitErrorCode::numeric);
  const CoxSuffStats st = cox_suffstats(d);
  if (st.total_events < 1.0) return failed(FitErrorCode::no_events);
  // Monotone partial likelihood: every event in one arm.
  if (st.total_arm1_events == 0.0 || st.total_arm1_events == st.total_events)
    return failed(FitErrorCode::separation);

  auto loglik = [&](double th) {
    double ll = 0.0;
    for (std::size_t k = 0; k < st.d_events.size(); ++k)
      ll += st.s_arm1[k] * th -
            st.d_events[k] * std::log(st.risk0[k] + st.risk1[k] * std::exp(th));
    return ll;
  };

  double theta = 0.0;
  double ll = loglik(theta);
  for (int iter = 0; iter < control.max_iterations; ++iter) {
    double score = 0.0, info = 0.0;
    const double eth = std::exp(theta);
    for (std::size_t k = 0; k < st.d_events.size(); ++k) {
      const double denom = st.risk0[k] + st.risk1[k] * eth;
      const double mean1 = st.risk1[k] * eth / denom;
      score += st.s_arm1[k] - st.d_events[k] * mean1;
      info += st.d_events[k] * mean1 * (1.0 - mean1);
    }
    if (!std::isfinite(score) || !std::isfinite(info)) return failed(FitErrorCode::numeric);
    if (std::fabs(score) < control.tolerance) {
      if (!(info > 0.0)) return failed(FitErrorCode::separation);
      Estimate e;
      e.theta_hat = theta;
      e.se_hat = 1.0 / std::sqrt(info);
      e.df = std::numeric_limits<double>::infinity();
      finish_wald_interval(e, alpha);
      return e;
    }
    if (!(info > 0.0)) return failed(FitErrorCode::separation);

    double step = score / info;
    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half <= control.max_step_halvings; ++half) {
      const double nth = theta + scale * step;
      const double nll = loglik(nth);
      if (std::isfinite(nll) && nll >= ll - 1e-14 * std::fabs(ll)) {
        theta = nth;
        ll = nll;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) return failed(FitErrorCode::nonconvergence);
    if (std::fabs(theta) > kParamBound) return failed(FitErrorCode::separation);
  }
  return failed(FitErrorCode::nonconvergence);
}

Estimate fit_normal_mean_t(const NumericDataset& d, double alpha) {
  const std::size_t n = d.y.size();
  if (n < 2)
    throw Error(ErrorCode::insufficient_data,
                "normal-mean method needs at least 2 observations");
  for (double v : d.y)
    if (!std::isfinite(v))
      throw Error(ErrorCode::invalid_parameter, "normal-mean method: non-finite value");
  const double mean = std::accumulate(d.y.begin(), d.y.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : d.y) ss += (v - mean) * (v - mean);
  Estimate e;
  e.theta_hat = mean;
  e.se_hat = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  e.df = static_cast<double>(n - 1);
  finish_wald_interval(e, alpha);
  return e;
}

WaldResult wald_test(const Estimate& e, double theta0, double alpha) {
  WaldResult r;
  if (e.se_hat == 0.0) {
    r.p_value = (e.theta_hat == theta0) ? 1.0 : 0.0;
  } else {
    const double z = std::fabs((e.theta_hat - theta0) / e.se_hat);
    r.p_value = std::isinf(e.df) ? 2.0 * (1.0 - mathutil::norm_cdf(z))
                                 : 2.0 * (1.0 - mathutil::t_cdf(z, e.df));
    r.p_value = std::clamp(r.p_value, 0.0, 1.0);
  }
  r.reject = r.p_value <= alpha;
  return r;
}

}  // namespace simharness::estimators
