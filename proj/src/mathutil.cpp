// SPDX-License-Identifier: Apache-2.0
#include "simharness/mathutil.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>

#include "simharness/errors.hpp"

namespace simharness::mathutil {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Acklam's coefficients.
constexpr double kA[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                          -2.759285104469687e+02, 1.383577518672690e+02,
                          -3.066479806614716e+01, 2.506628277459239e+00};
constexpr double kB[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                          -1.556989798598866e+02, 6.680131188771972e+01,
                          -1.328068155288572e+01};
constexpr double kC[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                          -2.400758277161838e+00, -2.549732539343734e+00,
                          4.374664141464968e+00,  2.938163982698783e+00};
constexpr double kD[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                          2.445134137142996e+00, 3.754408661907416e+00};
constexpr double kPLow = 0.02425;

double tail_value(double q) {
  return (((((kC[0] * q + kC[1]) * q + kC[2]) * q + kC[3]) * q + kC[4]) * q + kC[5]) /
         ((((kD[0] * q + kD[1]) * q + kD[2]) * q + kD[3]) * q + 1.0);
}

}  // namespace

double norm_inv_cdf(double u) {
  if (!(u > 0.0 && u < 1.0))
    throw Error(ErrorCode::invalid_parameter, "norm_inv_cdf: u must lie in (0,1)");
  if (u == 0.5) return 0.0;
  if (u < kPLow) {
    return tail_value(std::sqrt(-2.0 * std::log(u)));
  }
  if (u > 1.0 - kPLow) {
    return -tail_value(std::sqrt(-2.0 * std::log(1.0 - u)));
  }
  const double q = u - 0.5;
  const double r = q * q;
  return (((((kA[0] * r + kA[1]) * r + kA[2]) * r + kA[3]) * r + kA[4]) * r + kA[5]) * q /
         (((((kB[0] * r + kB[1]) * r + kB[2]) * r + kB[3]) * r + kB[4]) * r + 1.0);
}

double norm_quantile(double p) {
  double x = norm_inv_cdf(p);
  // One Halley step against the erfc-based CDF.
  const double e = norm_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

double t_cdf(double x, double df) {
  if (!(df > 0.0)) throw Error(ErrorCode::invalid_parameter, "t_cdf: df must be positive");
  if (std::isinf(df)) return norm_cdf(x);
  boost::math::students_t_distribution<double> dist(df);
  return boost::math::cdf(dist, x);
}

double t_quantile(double p, double df) {
  if (!(df > 0.0)) throw Error(ErrorCode::invalid_parameter, "t_quantile: df must be positive");
  if (!(p > 0.0 && p < 1.0))
    throw Error(ErrorCode::invalid_parameter, "t_quantile: p must lie in (0,1)");
  if (std::isinf(df)) return norm_quantile(p);
  boost::math::students_t_distribution<double> dist(df);
  return boost::math::quantile(dist, p);
}

std::string fmt_g17(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace simharness::mathutil
