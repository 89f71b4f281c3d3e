// SPDX-License-Identifier: Apache-2.0
#ifndef SIMHARNESS_ENGINE_HPP
#define SIMHARNESS_ENGINE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "simharness/perf.hpp"
#include "simharness/records.hpp"
#include "simharness/study_config.hpp"

namespace simharness::engine {

struct RunOptions {
  int threads = 1;
  bool export_all_datasets = false;
  // Specific (dgm_id, repetition) datasets to export regardless of the flag.
  std::vector<std::pair<std::string, std::uint64_t>> export_datasets;
};

/// True estimand values per (dgm_id, estimand_id).
using TruthMap = std::map<std::pair<std::string, std::string>, double>;

struct RunResult {
  EstimatesData estimates;
  StatesData states;
  TruthMap true_theta;
  std::vector<DgmInstance> dgms;
  // dgm_id -> stream ids consumed by the main run, in chunk order.
  std::map<std::string, std::vector<std::uint64_t>> stream_map;
  std::uint64_t n_sim = 0;
  // (dgm_id, repetition) -> exported dataset CSV text.
  std::map<std::pair<std::string, std::uint64_t>, std::string> exported_datasets;
};

/// Runs every repetition of every data-generating mechanism: one stream
/// per (chunk, dgm) under the study seed, state captured at the start of
/// each repetition plus a final end-state record, every method applied to
/// the same simulated dataset, failures recorded as missing values.
RunResult run_study(const StudyConfig& cfg, const RunOptions& options = {});

/// Extends a completed run in out_dir by `extra` repetitions per DGM from
/// the recorded end states. The merged outputs are byte-identical to a
/// single run of n_sim + extra repetitions. extra == 0 is a no-op.
RunResult continue_study(const StudyConfig& cfg, const std::string& out_dir,
                         std::uint64_t extra, const RunOptions& options = {});

struct RerunResult {
  std::string dgm_id;
  std::uint64_t repetition = 0;
  std::string dataset_csv;
  std::uint64_t dataset_hash = 0;
  std::vector<EstimatesRecord> rows;
};

/// Reproduces one repetition from its stored start state.
RerunResult rerun_repetition(const StudyConfig& cfg, const StatesData& states,
                             const std::string& dgm_id, std::uint64_t repetition);

/// Estimates the estimand value from one dataset of size big_n generated
/// on a dedicated stream (default: a stream disjoint from every stream the
/// main run can ever claim). method_id empty = the study comparator, or
/// the first method.
double estimate_true_theta(const StudyConfig& cfg, const std::string& dgm_id,
                           std::uint64_t big_n,
                           std::optional<std::uint64_t> stream_id = std::nullopt,
                           const std::string& method_id = {});

/// Stream ids the main run uses for one DGM (chunk-major allocation).
std::vector<std::uint64_t> main_run_streams(const StudyConfig& cfg,
                                            std::size_t dgm_index,
                                            std::uint64_t n_sim);

/// Resolves every estimand's true value per DGM (running big-n estimation
/// where the config requests it).
TruthMap resolve_true_theta(const StudyConfig& cfg,
                            const std::vector<DgmInstance>& dgms);

/// Writes estimates.csv, states.csv, manifest.json, study_config.json and
/// any exported datasets under out_dir.
void write_run_outputs(const StudyConfig& cfg, const RunResult& result,
                       const std::string& out_dir);

struct AnalysisOutputs {
  perf::PerfResult perf;
  std::vector<perf::ConditionalCoverageRow> conditional;
  std::vector<perf::MissingnessCell> missingness;
};

/// Performance estimation per the study config; writes performance.csv,
/// missingness.csv and (when configured) conditional_coverage.csv.
AnalysisOutputs analyze_and_write(const StudyConfig& cfg, const EstimatesData& estimates,
                                  const TruthMap& truth, const std::string& out_dir);

/// Loads the truth map recorded in out_dir's manifest.json.
TruthMap truth_from_manifest(const std::string& manifest_path);

std::string manifest_to_json(const StudyConfig& cfg, const RunResult& result,
                             double wall_clock_seconds);

}  // namespace simharness::engine

#endif
