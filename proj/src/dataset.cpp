// SPDX-License-Identifier: Apache-2.0
#include "simharness/dataset.hpp"

#include <cstring>

#include "simharness/mathutil.hpp"

namespace simharness {

namespace {
void mix_double(std::uint64_t& h, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  h = mathutil::fnv1a64(&bits, sizeof(bits), h);
}
void mix_int(std::uint64_t& h, std::int64_t v) {
  h = mathutil::fnv1a64(&v, sizeof(v), h);
}
}  // namespace

std::uint64_t dataset_hash(const SurvivalDataset& d) {
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& s : d.subjects) {
    mix_int(h, s.x);
    mix_double(h, s.time);
    mix_int(h, s.event);
  }
  return h;
}

std::uint64_t dataset_hash(const NumericDataset& d) {
  std::uint64_t h = 14695981039346656037ull;
  for (double v : d.y) mix_double(h, v);
  return h;
}

std::string to_csv(const SurvivalDataset& d) {
  std::string out = "id,x,time,event\n";
  for (std::size_t i = 0; i < d.subjects.size(); ++i) {
    const auto& s = d.subjects[i];
    out += std::to_string(i + 1);
    out += ',';
    out += std::to_string(s.x);
    out += ',';
    out += mathutil::fmt_g17(s.time);
    out += ',';
    out += std::to_string(s.event);
    out += '\n';
  }
  return out;
}

std::string to_csv(const NumericDataset& d) {
  std::string out = "id,y\n";
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += mathutil::fmt_g17(d.y[i]);
    out += '\n';
  }
  return out;
}

}  // namespace simharness
