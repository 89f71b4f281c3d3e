// SPDX-License-Identifier: Apache-2.0
#ifndef SIMHARNESS_STUDY_CONFIG_HPP
#define SIMHARNESS_STUDY_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "simharness/dgm.hpp"

namespace simharness {

enum class MechanismKind { survival, normal, resample };
enum class MethodKind { exponential_ph, weibull_ph, cox_ph, normal_mean_t };

const char* mechanism_kind_name(MechanismKind k);
const char* method_kind_name(MethodKind k);

struct MethodSpec {
  std::string id;
  MethodKind kind = MethodKind::exponential_ph;
  std::string estimand_id;  // defaults to the study's first estimand
  double tolerance = 1e-8;
  int max_iterations = 50;
};

/// How the true value of an estimand is obtained per DGM.
struct EstimandSpec {
  std::string id;
  enum class TruthRule { from_dgm, fixed, estimate_by_simulation } rule =
      TruthRule::from_dgm;
  double fixed_value = 0.0;
  std::uint64_t big_n = 1'000'000;  // estimate_by_simulation only
  std::string truth_method_id;      // estimate_by_simulation; empty = comparator
};

struct StreamPolicy {
  bool per_chunk = false;
  std::uint64_t chunk_size = 0;  // repetitions per stream when per_chunk
};

/// Fault-injection hook: the named method is forced to fail (recorded as a
/// missing value) on one repetition. Used to exercise failure trapping.
struct FaultInjection {
  std::string dgm_id;
  std::uint64_t repetition = 0;
  std::string method_id;
};

/// Declarative study description; the configuration file is its JSON image.
struct StudyConfig {
  std::string name = "study";
  std::uint64_t seed = 0;
  std::uint64_t n_sim = 0;

  MechanismKind mechanism = MechanismKind::survival;
  dgm::SurvivalDgmSpec survival_base;
  dgm::NormalDgmSpec normal_base;
  std::string resample_source_csv;  // resample mechanism
  std::size_t resample_n_obs = 0;
  std::optional<dgm::FactorGrid> grid;

  std::vector<MethodSpec> methods;
  std::vector<EstimandSpec> estimands;
  double theta0 = 0.0;
  double alpha = 0.05;
  std::vector<std::string> measures;  // perf measure names; empty = all
  std::string comparator_method_id;
  StreamPolicy streams;
  std::size_t conditional_coverage_groups = 0;  // 0 = skip
  std::string output_dir;                       // default set by the caller
  std::vector<FaultInjection> fault_injections;

  void validate() const;
};

/// One expanded data-generating mechanism of a study.
struct DgmInstance {
  std::string id;  // "1", "2", ... in expansion order
  dgm::FactorAssignment factors;
  MechanismKind mechanism = MechanismKind::survival;
  dgm::SurvivalDgmSpec survival;
  dgm::NormalDgmSpec normal;
  std::size_t resample_n_obs = 0;
};

std::vector<DgmInstance> expand_dgms(const StudyConfig& cfg);

// JSON round trip. Parsing rejects unknown keys at every level.
StudyConfig config_from_json(const std::string& json_text);
StudyConfig config_from_file(const std::string& path);
std::string config_to_json(const StudyConfig& cfg);

/// FNV-1a digest of the canonical JSON image, hex encoded.
std::string config_digest(const StudyConfig& cfg);

/// Built-in example studies: "survival" (three proportional-hazards fitters
/// under exponential and Weibull mechanisms) and "conditional-coverage"
/// (t-interval coverage by model-SE tertile).
StudyConfig builtin_example(const std::string& name);

}  // namespace simharness

#endif
