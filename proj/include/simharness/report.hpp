// SPDX-License-Identifier: Apache-2.0
#ifndef SIMHARNESS_REPORT_HPP
#define SIMHARNESS_REPORT_HPP

#include <map>
#include <string>
#include <vector>

#include "simharness/dgm.hpp"
#include "simharness/perf.hpp"
#include "simharness/records.hpp"

namespace simharness::report {

/// Ordering and labelling shared by the emitters. Empty orders are derived
/// from the data (sorted unique ids).
struct RenderContext {
  std::vector<std::string> dgm_order;
  std::vector<std::string> method_order;
  std::map<std::string, std::string> dgm_labels;
  std::string estimand_id;                      // empty = first seen
  std::map<std::string, double> true_theta;     // dgm_id -> theta for the estimand
  double alpha = 0.05;
};

/// A rendered figure: deterministic SVG plus a CSV sidecar from which every
/// plotted coordinate can be recomputed (axis calibration rows included).
struct Figure {
  std::string svg;
  std::string sidecar_csv;
};

/// Sidecar schema shared by all figures:
/// element,facet,series,index,data_x,data_y,data_x2,data_y2,svg_x,svg_y,svg_x2,svg_y2
extern const char* kSidecarHeader;

struct TableLayout {
  std::vector<std::string> dgm_order;
  std::vector<std::string> method_order;
  std::vector<perf::Measure> measure_order;  // empty = order of appearance
  std::map<std::string, std::string> dgm_labels;
};

struct TableOutput {
  std::string text;
  std::string csv;
};

/// Rounds an estimate so the unit of its last printed digit is at most
/// max(mcse, 1e-6), with at least one significant digit; 3 decimals when
/// the MCSE is degenerate. The MCSE itself prints with at most 3 decimals,
/// falling back to "<unit" when it rounds to zero there.
struct RoundedCell {
  std::string estimate;
  std::string mcse;
};
RoundedCell round_by_mcse(double estimate, double mcse);

/// Plain-text performance table: methods side by side, measures stacked,
/// one row per (measure, dgm), MCSEs parenthesized, approximate-MCSE
/// measures starred.
TableOutput render_table(const perf::PerfResult& perf, const TableLayout& layout);

/// Confidence intervals ranked by the fractional centile of |z|, coloured
/// by coverage, with Monte Carlo coverage-interval rules and the true
/// value marked. zoom_top restricts to the top 20% of ranks.
Figure render_zip_plot(const EstimatesData& estimates, const RenderContext& ctx,
                       bool zoom_top = false);

/// Stems from each measure's reference line to the estimate, with Monte
/// Carlo 95% intervals drawn as parenthesis glyphs. Measures stack
/// vertically, methods one row each, DGMs across columns.
Figure render_lollipop(const perf::PerfResult& perf,
                       const std::vector<perf::Measure>& measures,
                       const RenderContext& ctx);

/// Step lines per method across a fully factorial DGM grid ordered
/// lexicographically by the given factor nesting (first factor slowest),
/// with factor-level bands beneath the axis.
Figure render_nested_loop(const perf::PerfResult& perf, perf::Measure measure,
                          const std::vector<std::pair<std::string, dgm::FactorAssignment>>& dgm_factors,
                          const std::vector<std::string>& factor_order,
                          const RenderContext& ctx);

/// Estimates and model SEs against repetition index with sample-mean
/// markers; one facet per (dgm, method, panel).
Figure render_strip(const EstimatesData& estimates, const RenderContext& ctx);

/// Method-versus-method matrix for one DGM: estimates in the upper
/// triangle, model SEs in the lower, equality lines drawn.
Figure render_scatter_matrix(const EstimatesData& estimates, const std::string& dgm_id,
                             const RenderContext& ctx);

/// Difference against pairwise mean relative to a comparator method,
/// zero line drawn (limits-of-agreement view).
Figure render_diff_vs_mean(const EstimatesData& estimates, const std::string& comparator,
                           const RenderContext& ctx);

}  // namespace simharness::report

#endif
