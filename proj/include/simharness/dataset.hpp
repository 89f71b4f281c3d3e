// SPDX-License-Identifier: Apache-2.0
#ifndef SIMHARNESS_DATASET_HPP
#define SIMHARNESS_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace simharness {

/// Per-subject randomised-trial survival data: treatment arm, observed
/// follow-up time, event indicator (0 = censored).
struct SurvivalSubject {
  int x = 0;
  double time = 0.0;
  int event = 0;
};

struct SurvivalDataset {
  std::vector<SurvivalSubject> subjects;
  std::size_t size() const noexcept { return subjects.size(); }
};

struct NumericDataset {
  std::vector<double> y;
  std::size_t size() const noexcept { return y.size(); }
};

// Content digests over exact bit patterns; used for same-dataset and
// reproducibility checks.
std::uint64_t dataset_hash(const SurvivalDataset& d);
std::uint64_t dataset_hash(const NumericDataset& d);

// CSV export (header `id,x,time,event` / `id,y`), UTF-8, LF endings.
std::string to_csv(const SurvivalDataset& d);
std::string to_csv(const NumericDataset& d);

}  // namespace simharness

#endif
