// SPDX-License-Identifier: Apache-2.0
#ifndef SIMHARNESS_PERF_HPP
#define SIMHARNESS_PERF_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "simharness/records.hpp"

namespace simharness::perf {

enum class Measure {
  convergence_pct,
  bias,
  mean,
  empse,
  rel_precision,
  mse,
  avg_modse,
  rel_err_modse,
  coverage,
  be_coverage,
  rejection_pct,
};

const char* measure_name(Measure m);
std::optional<Measure> measure_from_name(const std::string& name);
std::vector<Measure> all_measures();

/// True when the published Monte Carlo SE formula for this measure is an
/// approximation (flagged in rendered tables).
bool measure_mcse_approximate(Measure m);

/// Percent-scale measures (coverage and friends) whose estimates and MCSEs
/// are reported in percentage points.
bool measure_percent_scale(Measure m);

struct PerformanceEstimate {
  std::string dgm_id;
  std::string method_id;
  std::string estimand_id;
  Measure measure = Measure::bias;
  double estimate = 0.0;
  double mcse = 0.0;
  std::size_t n_used = 0;
  std::string comparator_method_id;  // rel_precision only
};

struct PerfOptions {
  std::vector<Measure> measures = all_measures();
  double alpha = 0.05;
  std::string comparator_method_id;  // required for rel_precision
};

/// A skipped (measure, cell) with the reason, e.g. fewer than two usable
/// repetitions or a zero empirical SE.
struct PerfDiagnostic {
  std::string dgm_id;
  std::string method_id;
  std::string estimand_id;
  Measure measure;
  std::string reason;
};

struct PerfResult {
  std::vector<PerformanceEstimate> estimates;
  std::vector<PerfDiagnostic> diagnostics;
};

/// Estimates every requested measure with its Monte Carlo SE for each
/// (dgm, method, estimand) cell. true_theta maps (dgm_id, estimand_id)
/// -> true value. Non-converged repetitions are excluded from all measures
/// except convergence_pct; rel_precision pairs repetitions where both the
/// method and the comparator converged.
PerfResult summarize(const EstimatesData& estimates,
                     const std::map<std::pair<std::string, std::string>, double>& true_theta,
                     const PerfOptions& options);

struct ConditionalCoverageRow {
  std::string dgm_id;
  std::string method_id;
  std::string estimand_id;
  std::size_t group = 0;  // 0 = overall, 1..groups ascending model SE
  double coverage_pct = 0.0;
  double mcse = 0.0;
  std::size_t n_used = 0;
};

/// Coverage within equal-size groups of ascending model SE (ties broken by
/// repetition index), plus the overall row per cell.
std::vector<ConditionalCoverageRow> conditional_coverage(
    const EstimatesData& estimates,
    const std::map<std::pair<std::string, std::string>, double>& true_theta,
    std::size_t groups);

enum class NsimKind { coverage_or_power, bias };

/// Smallest n_sim whose Monte Carlo SE is at most target_mcse. Coverage
/// kind works on the percent scale: n = E(100-E)/target^2.
std::uint64_t required_nsim(NsimKind kind, double expected, double target_mcse,
                            std::optional<double> var_theta = std::nullopt);

/// Coverage of a normal-based interval of correct width in the presence of
/// bias b (in SE units): Phi(b + z) - Phi(b - z).
double coverage_under_bias(double bias_over_se, double alpha);

struct MissingnessCell {
  std::string dgm_id;
  std::string method_id;
  std::size_t n_total = 0;
  std::size_t n_converged = 0;
  std::map<estimators::FitErrorCode, std::size_t> failures;
};

std::vector<MissingnessCell> missingness_report(const EstimatesData& estimates);

// Fixed CSV schemas (plus a JSON mirror of the performance file).
std::string perf_to_csv(const PerfResult& result);
std::string perf_to_json(const PerfResult& result);
PerfResult perf_from_csv(const std::string& text);
std::string conditional_coverage_to_csv(const std::vector<ConditionalCoverageRow>& rows);
std::string missingness_to_csv(const std::vector<MissingnessCell>& cells);

}  // namespace simharness::perf

#endif
