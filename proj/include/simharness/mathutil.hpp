// SPDX-License-Identifier: Apache-2.0
#ifndef SIMHARNESS_MATHUTIL_HPP
#define SIMHARNESS_MATHUTIL_HPP

#include <string>

namespace simharness::mathutil {

// Standard normal CDF via erfc.
double norm_cdf(double x);

// Inverse standard normal CDF, Acklam's rational approximation
// (|relative error| < 1.2e-9). Exactly antisymmetric about u = 0.5 for
// inputs u whose complement 1-u is representable: the sampler relies on
// invnorm(1-u) == -invnorm(u).
double norm_inv_cdf(double u);

// Inverse standard normal CDF polished with one Halley step against
// norm_cdf; near full double precision. Used for quantiles in statistics
// code, not for sampling.
double norm_quantile(double p);

// Student t CDF and quantile for df > 0 (df may be infinite).
double t_cdf(double x, double df);
double t_quantile(double p, double df);

// Shortest-round-trip style float formatting: 17 significant digits,
// strtod-exact. NaN encodes as the empty string, infinities as "inf"/"-inf".
std::string fmt_g17(double v);

// 64-bit FNV-1a over a byte buffer; used for content digests.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 14695981039346656037ull);

}  // namespace simharness::mathutil

#endif
