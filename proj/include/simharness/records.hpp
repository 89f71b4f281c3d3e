// SPDX-License-Identifier: Apache-2.0
#ifndef SIMHARNESS_RECORDS_HPP
#define SIMHARNESS_RECORDS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "simharness/estimators.hpp"
#include "simharness/rng.hpp"

namespace simharness {

/// One estimates-file row: everything one method reported about one
/// estimand on one simulated dataset.
struct EstimatesRecord {
  std::string dgm_id;
  std::uint64_t repetition = 0;
  std::string method_id;
  std::string estimand_id;
  estimators::Estimate estimate;
};

struct EstimatesData {
  std::vector<EstimatesRecord> rows;
  // Which optional columns the source provided (always true for harness
  // output; foreign files may lack some).
  bool has_se = true;
  bool has_ci = true;
  bool has_p = true;
  bool has_df = true;
};

struct StatesData {
  std::vector<rng::StatesRecord> rows;
};

// Fixed CSV schemas (17-significant-digit floats, empty = missing).
std::string estimates_to_csv(const EstimatesData& data);
EstimatesData estimates_from_csv(const std::string& text);
std::string states_to_csv(const StatesData& data);
StatesData states_from_csv(const std::string& text);

}  // namespace simharness

#endif
