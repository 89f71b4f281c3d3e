// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace oracles {

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  // n even
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double adaptive(const std::function<double(double)>& f, double a, double b) {
  double prev = simpson(f, a, b, 64);
  for (int n = 128; n <= 65536; n *= 2) {
    const double cur = simpson(f, a, b, n);
    if (std::fabs(cur - prev) < 1e-13) return cur;
    prev = cur;
  }
  return prev;
}

double bisect(const std::function<double(double)>& f, double target, double lo,
              double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Golden-section can only localise an optimum to about sqrt(eps) because
// likelihood differences vanish quadratically; a parabolic vertex fit with
// Richardson extrapolation recovers the remaining digits.
double parabolic_polish(const std::function<double(double)>& f, double x) {
  const auto vertex = [&](double h) {
    const double gp = f(x + h), gm = f(x - h), g0 = f(x);
    const double denom = 2.0 * g0 - gp - gm;
    if (!(denom > 0.0)) return x;
    return x + h * (gp - gm) / (2.0 * denom);
  };
  const double coarse = vertex(1e-3);
  const double fine = vertex(5e-4);
  return (4.0 * fine - coarse) / 3.0;
}

// Maximises a unimodal function on [a, b] by golden-section search.
double golden_max(const std::function<double(double)>& f, double a, double b,
                  double tol) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double norm_cdf(double x) {
  const auto density = [](double t) {
    return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI);
  };
  if (x < -12.0) return 0.0;
  if (x > 12.0) return 1.0;
  if (x >= 0.0) return 0.5 + adaptive(density, 0.0, x);
  return 0.5 - adaptive(density, 0.0, -x);
}

double norm_quantile(double p) {
  return bisect([](double x) { return norm_cdf(x); }, p, -12.0, 12.0);
}

double t_cdf(double x, double df) {
  const double logc = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) -
                      0.5 * std::log(df * M_PI);
  const auto density = [&](double t) {
    return std::exp(logc - (df + 1.0) / 2.0 * std::log1p(t * t / df));
  };
  if (x < -300.0) return 0.0;
  if (x > 300.0) return 1.0;
  if (x >= 0.0) return 0.5 + adaptive(density, 0.0, x);
  return 0.5 - adaptive(density, 0.0, -x);
}

double t_quantile(double p, double df) {
  return bisect([&](double x) { return t_cdf(x, df); }, p, -300.0, 300.0);
}

namespace {

double exp_loglik(const simharness::SurvivalDataset& d, double log_lambda,
                  double theta) {
  double ll = 0.0;
  for (const auto& s : d.subjects)
    ll += s.event * (log_lambda + s.x * theta) -
          std::exp(log_lambda + s.x * theta) * s.time;
  return ll;
}

double weib_loglik(const simharness::SurvivalDataset& d, double log_lambda,
                   double log_gamma, double theta) {
  const double lambda = std::exp(log_lambda);
  const double gamma = std::exp(log_gamma);
  double ll = 0.0;
  for (const auto& s : d.subjects) {
    const double hazard =
        lambda * gamma * std::pow(s.time, gamma - 1.0) * std::exp(s.x * theta);
    const double cumhaz = lambda * std::pow(s.time, gamma) * std::exp(s.x * theta);
    ll += s.event * std::log(hazard) - cumhaz;
  }
  return ll;
}

// Breslow partial log-likelihood, direct O(n^2) definition.
double cox_partial(const simharness::SurvivalDataset& d, double theta) {
  double ll = 0.0;
  for (const auto& ev : d.subjects) {
    if (!ev.event) continue;
    double denom = 0.0;
    for (const auto& s : d.subjects)
      if (s.time >= ev.time) denom += std::exp(theta * s.x);
    ll += theta * ev.x - std::log(denom);
  }
  return ll;
}

}  // namespace

double exponential_theta(const simharness::SurvivalDataset& d) {
  // Coarse grid to bracket the optimum, then nested golden-section.
  double best_theta = 0.0, best_ll = -1e300;
  for (double theta = -6.0; theta <= 6.0; theta += 0.25) {
    for (double la = -10.0; la <= 4.0; la += 0.25) {
      const double ll = exp_loglik(d, la, theta);
      if (ll > best_ll) {
        best_ll = ll;
        best_theta = theta;
      }
    }
  }
  const auto profile = [&](double theta) {
    return exp_loglik(
        d, golden_max([&](double la) { return exp_loglik(d, la, theta); }, -12.0, 6.0, 1e-12),
        theta);
  };
  const double rough = golden_max(profile, best_theta - 0.5, best_theta + 0.5, 1e-9);
  return parabolic_polish(profile, rough);
}

double weibull_theta(const simharness::SurvivalDataset& d) {
  double lo[3] = {-10.0, -2.5, -6.0};
  double hi[3] = {4.0, 2.5, 6.0};
  double best[3] = {0.0, 0.0, 0.0};
  constexpr int kPoints = 11;
  for (int round = 0; round < 40; ++round) {
    double best_ll = -1e300;
    double step[3];
    for (int k = 0; k < 3; ++k) step[k] = (hi[k] - lo[k]) / (kPoints - 1);
    for (int i = 0; i < kPoints; ++i)
      for (int j = 0; j < kPoints; ++j)
        for (int k = 0; k < kPoints; ++k) {
          const double la = lo[0] + i * step[0];
          const double lg = lo[1] + j * step[1];
          const double th = lo[2] + k * step[2];
          const double ll = weib_loglik(d, la, lg, th);
          if (ll > best_ll) {
            best_ll = ll;
            best[0] = la;
            best[1] = lg;
            best[2] = th;
          }
        }
    for (int k = 0; k < 3; ++k) {
      lo[k] = best[k] - 1.5 * step[k];
      hi[k] = best[k] + 1.5 * step[k];
    }
    if (step[2] < 1e-10) break;
  }
  return best[2];
}

double cox_theta(const simharness::SurvivalDataset& d) {
  double best_theta = 0.0, best_ll = -1e300;
  for (double theta = -6.0; theta <= 6.0; theta += 0.05) {
    const double ll = cox_partial(d, theta);
    if (ll > best_ll) {
      best_ll = ll;
      best_theta = theta;
    }
  }
  return golden_max([&](double th) { return cox_partial(d, th); }, best_theta - 0.2,
                    best_theta + 0.2, 1e-11);
}

double ks_uniform(std::vector<double> draws) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double d = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double hi = (i + 1.0) / n - draws[i];
    const double lo = draws[i] - i / n;
    d = std::max({d, hi, lo});
  }
  return d;
}

}  // namespace oracles
