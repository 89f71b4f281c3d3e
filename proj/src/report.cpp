// SPDX-License-Identifier: Apache-2.0
#include "simharness/report.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "simharness/errors.hpp"
#include "simharness/mathutil.hpp"
#include "simharness/svg.hpp"

namespace simharness::report {

const char* kSidecarHeader =
    "element,facet,series,index,data_x,data_y,data_x2,data_y2,svg_x,svg_y,svg_x2,svg_y2";

namespace {

using svg::LinearMap;

constexpr double kMarginLeft = 84;
constexpr double kMarginTop = 44;
constexpr double kMarginRight = 24;
constexpr double kMarginBottom = 56;
constexpr double kFacetGap = 20;

struct Sidecar {
  std::string text;
  Sidecar() { text = std::string(kSidecarHeader) + "\n"; }

  // Full-precision values so plotted coordinates recompute exactly.
  static std::string fmt(double v) { return mathutil::fmt_g17(v); }

  void row(const std::string& element, const std::string& facet,
           const std::string& series, const std::string& index, double dx,
           double dy, double dx2, double dy2, double sx, double sy, double sx2,
           double sy2) {
    text += element + ',' + facet + ',' + series + ',' + index + ',' + fmt(dx) +
            ',' + fmt(dy) + ',' + fmt(dx2) + ',' + fmt(dy2) + ',' + fmt(sx) +
            ',' + fmt(sy) + ',' + fmt(sx2) + ',' + fmt(sy2) + '\n';
  }

  void axes(const std::string& facet, const LinearMap& x, const LinearMap& y) {
    const double nan = std::nan("");
    row("axis_x", facet, "", "", x.d0, nan, x.d1, nan, x.p0, nan, x.p1, nan);
    row("axis_y", facet, "", "", nan, y.d0, nan, y.d1, nan, y.p0, nan, y.p1);
  }
};

const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> ordered_or(const std::vector<std::string>& given,
                                    const std::set<std::string>& seen) {
  if (!given.empty()) return given;
  return {seen.begin(), seen.end()};
}

std::string pick_estimand(const std::string& requested, const EstimatesData& data) {
  if (!requested.empty()) return requested;
  return data.rows.empty() ? std::string() : data.rows.front().estimand_id;
}

std::string dgm_label(const RenderContext& ctx, const std::string& id) {
  const auto it = ctx.dgm_labels.find(id);
  return it == ctx.dgm_labels.end() ? "dgm " + id : it->second;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool ok() const { return lo <= hi; }
  void pad(double frac) {
    if (!ok()) return;
    double span = hi - lo;
    if (span <= 0) span = std::max(1.0, std::fabs(lo));
    lo -= frac * span;
    hi += frac * span;
  }
};

// Converged rows of one (dgm, method) cell for one estimand.
struct FacetRows {
  std::vector<std::uint64_t> reps;
  std::vector<double> theta, se, lo, hi;
};

std::map<std::pair<std::string, std::string>, FacetRows> collect_cells(
    const EstimatesData& data, const std::string& estimand) {
  std::map<std::pair<std::string, std::string>, FacetRows> cells;
  for (const auto& r : data.rows) {
    if (r.estimand_id != estimand || !r.estimate.converged) continue;
    auto& f = cells[{r.dgm_id, r.method_id}];
    f.reps.push_back(r.repetition);
    f.theta.push_back(r.estimate.theta_hat);
    f.se.push_back(r.estimate.se_hat);
    f.lo.push_back(r.estimate.ci_low);
    f.hi.push_back(r.estimate.ci_high);
  }
  return cells;
}

}  // namespace

RoundedCell round_by_mcse(double estimate, double mcse) {
  int d;
  if (!(mcse > 0.0)) {
    d = 3;  // degenerate MCSE
  } else {
    const double unit_bound = std::max(mcse, 1e-6);
    d = static_cast<int>(std::ceil(-std::log10(unit_bound) - 1e-9));
    d = std::clamp(d, 0, 6);
  }
  // Keep at least one significant digit of a nonzero estimate.
  if (estimate != 0.0 && std::isfinite(estimate) &&
      std::fabs(estimate) < 0.5 * std::pow(10.0, -d)) {
    const int needed = static_cast<int>(std::ceil(-std::log10(std::fabs(estimate))));
    d = std::clamp(std::max(d, needed), 0, 12);
  }

  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", d, estimate);
  RoundedCell out;
  out.estimate = buf;

  if (!(mcse >= 0.0)) {
    out.mcse = "";
    return out;
  }
  if (mcse == 0.0) {
    out.mcse = "0";
    return out;
  }
  const int dm = std::min(d, 3);
  if (mcse < 0.5 * std::pow(10.0, -dm)) {
    std::snprintf(buf, sizeof(buf), "<%.*f", dm, std::pow(10.0, -dm));
    out.mcse = buf;
  } else {
    std::snprintf(buf, sizeof(buf), "%.*f", dm, mcse);
    out.mcse = buf;
  }
  return out;
}

namespace {

std::string measure_label(perf::Measure m, const std::string& comparator) {
  switch (m) {
    case perf::Measure::convergence_pct: return "Convergence (%)";
    case perf::Measure::bias: return "Bias";
    case perf::Measure::mean: return "Mean";
    case perf::Measure::empse: return "Empirical SE";
    case perf::Measure::rel_precision:
      return comparator.empty() ? "Relative precision gain (%) *"
                                : "Relative precision gain vs " + comparator + " (%) *";
    case perf::Measure::mse: return "MSE";
    case perf::Measure::avg_modse: return "Average model SE *";
    case perf::Measure::rel_err_modse: return "Relative error in model SE (%) *";
    case perf::Measure::coverage: return "Coverage (%)";
    case perf::Measure::be_coverage: return "Bias-eliminated coverage (%)";
    case perf::Measure::rejection_pct: return "Rejection (%)";
  }
  return "?";
}

}  // namespace

TableOutput render_table(const perf::PerfResult& perf, const TableLayout& layout) {
  if (perf.estimates.empty())
    throw Error(ErrorCode::insufficient_data, "render_table: no performance estimates");

  std::set<std::string> dgms_seen, methods_seen;
  std::vector<perf::Measure> measures_seen;
  std::string comparator;
  for (const auto& p : perf.estimates) {
    dgms_seen.insert(p.dgm_id);
    methods_seen.insert(p.method_id);
    if (std::find(measures_seen.begin(), measures_seen.end(), p.measure) ==
        measures_seen.end())
      measures_seen.push_back(p.measure);
    if (!p.comparator_method_id.empty()) comparator = p.comparator_method_id;
  }
  const auto dgms = ordered_or(layout.dgm_order, dgms_seen);
  const auto methods = ordered_or(layout.method_order, methods_seen);
  const auto measures = layout.measure_order.empty() ? measures_seen : layout.measure_order;

  auto find_cell = [&perf](perf::Measure m, const std::string& dgm,
                           const std::string& method) -> const perf::PerformanceEstimate* {
    for (const auto& p : perf.estimates)
      if (p.measure == m && p.dgm_id == dgm && p.method_id == method) return &p;
    return nullptr;
  };

  auto label_of = [&layout](const std::string& dgm) {
    const auto it = layout.dgm_labels.find(dgm);
    return it == layout.dgm_labels.end() ? dgm : it->second;
  };

  // Assemble cells first, then size the columns.
  struct Row {
    std::string measure, dgm;
    std::vector<std::string> cells;
  };
  std::vector<Row> rows;
  std::string csv = "measure,dgm_id,method_id,estimate,mcse,printed\n";
  bool any_approximate = false;
  for (const auto m : measures) {
    bool first_of_measure = true;
    for (const auto& dgm : dgms) {
      Row row;
      row.measure = first_of_measure ? measure_label(m, comparator) : "";
      row.dgm = label_of(dgm);
      bool any = false;
      for (const auto& method : methods) {
        const auto* p = find_cell(m, dgm, method);
        if (!p) {
          row.cells.push_back("");
          continue;
        }
        any = true;
        if (perf::measure_mcse_approximate(m)) any_approximate = true;
        const RoundedCell cell = round_by_mcse(p->estimate, p->mcse);
        const std::string printed = cell.estimate + " (" + cell.mcse + ")";
        row.cells.push_back(printed);
        csv += std::string(perf::measure_name(m)) + ',' + dgm + ',' + method + ',' +
               mathutil::fmt_g17(p->estimate) + ',' + mathutil::fmt_g17(p->mcse) +
               ',' + printed + '\n';
      }
      if (any) {
        rows.push_back(std::move(row));
        first_of_measure = false;
      }
    }
  }

  std::size_t w_measure = std::string("Performance measure").size();
  std::size_t w_dgm = std::string("DGM").size();
  std::vector<std::size_t> w_cell(methods.size());
  for (std::size_t c = 0; c < methods.size(); ++c) w_cell[c] = methods[c].size();
  for (const auto& row : rows) {
    w_measure = std::max(w_measure, row.measure.size());
    w_dgm = std::max(w_dgm, row.dgm.size());
    for (std::size_t c = 0; c < row.cells.size(); ++c)
      w_cell[c] = std::max(w_cell[c], row.cells[c].size());
  }

  auto pad = [](const std::string& s, std::size_t w) {
    return s + std::string(w - s.size(), ' ');
  };
  auto pad_left = [](const std::string& s, std::size_t w) {
    return std::string(w - s.size(), ' ') + s;
  };

  std::string text = pad("Performance measure", w_measure) + "  " + pad("DGM", w_dgm);
  for (std::size_t c = 0; c < methods.size(); ++c)
    text += "  " + pad_left(methods[c], w_cell[c]);
  text += '\n';
  std::size_t total = text.size() - 1;
  text += std::string(total, '-') + '\n';
  for (const auto& row : rows) {
    text += pad(row.measure, w_measure) + "  " + pad(row.dgm, w_dgm);
    for (std::size_t c = 0; c < methods.size(); ++c)
      text += "  " + pad_left(c < row.cells.size() ? row.cells[c] : "", w_cell[c]);
    text += '\n';
  }
  if (any_approximate)
    text += "* Monte Carlo SEs are approximate for this measure.\n";
  return {text, csv};
}

Figure render_zip_plot(const EstimatesData& estimates, const RenderContext& ctx,
                       bool zoom_top) {
  if (!estimates.has_se || !estimates.has_ci)
    throw Error(ErrorCode::config_error,
                "zip plot needs se_hat and ci_low/ci_high columns");
  const std::string estimand = pick_estimand(ctx.estimand_id, estimates);
  const auto cells = collect_cells(estimates, estimand);
  std::set<std::string> dgms_seen, methods_seen;
  for (const auto& [key, _] : cells) {
    dgms_seen.insert(key.first);
    methods_seen.insert(key.second);
  }
  const auto dgms = ordered_or(ctx.dgm_order, dgms_seen);
  const auto methods = ordered_or(ctx.method_order, methods_seen);
  if (dgms.empty() || methods.empty())
    throw Error(ErrorCode::insufficient_data, "zip plot: no converged rows");

  const double facet_w = 250, facet_h = 190;
  const int width = static_cast<int>(kMarginLeft + methods.size() * facet_w +
                                     (methods.size() - 1) * kFacetGap + kMarginRight);
  const int height = static_cast<int>(kMarginTop + dgms.size() * facet_h +
                                      (dgms.size() - 1) * kFacetGap + kMarginBottom);
  svg::Builder b(width, height);
  b.style(svg::default_css());
  Sidecar sc;

  const double y_lo = zoom_top ? 80.0 : 0.0;
  for (std::size_t r = 0; r < dgms.size(); ++r) {
    for (std::size_t c = 0; c < methods.size(); ++c) {
      const std::string facet = "dgm=" + dgms[r] + "|method=" + methods[c];
      const double px0 = kMarginLeft + c * (facet_w + kFacetGap);
      const double py0 = kMarginTop + r * (facet_h + kFacetGap);
      const LinearMap ymap{y_lo, 100.0, py0 + facet_h, py0};

      if (r == 0) b.text(px0 + facet_w / 2, py0 - 8, methods[c], "title");
      if (c == 0)
        b.text(px0 - 54, py0 + facet_h / 2, dgm_label(ctx, dgms[r]), "label");

      const auto it = cells.find({dgms[r], methods[c]});
      if (it == cells.end() || it->second.theta.empty()) {
        b.text(px0 + facet_w / 2, py0 + facet_h / 2, "no converged repetitions",
               "annotation");
        continue;
      }
      const FacetRows& f = it->second;
      const auto theta_it = ctx.true_theta.find(dgms[r]);
      if (theta_it == ctx.true_theta.end())
        throw Error(ErrorCode::config_error,
                    "zip plot: true theta unknown for dgm " + dgms[r]);
      const double theta = theta_it->second;

      const std::size_t n = f.theta.size();
      std::vector<double> absz(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (f.se[i] > 0.0)
          absz[i] = std::fabs((f.theta[i] - theta) / f.se[i]);
        else
          absz[i] = f.theta[i] == theta ? 0.0 : std::numeric_limits<double>::infinity();
      }
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t bdx) {
        if (absz[a] != absz[bdx]) return absz[a] < absz[bdx];
        return f.reps[a] < f.reps[bdx];
      });

      Range xr;
      for (std::size_t i = 0; i < n; ++i) {
        xr.add(f.lo[i]);
        xr.add(f.hi[i]);
      }
      xr.add(theta);
      xr.pad(0.03);
      const LinearMap xmap{xr.lo, xr.hi, px0, px0 + facet_w};
      sc.axes(facet, xmap, ymap);

      double covered = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (f.lo[i] <= theta && theta <= f.hi[i]) covered += 1.0;
      const double cov_pct = 100.0 * covered / static_cast<double>(n);
      const double mcse_pct =
          100.0 * std::sqrt((covered / n) * (1.0 - covered / n) / static_cast<double>(n));

      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = order[k];
        const double rank_pct = 100.0 * (static_cast<double>(k) + 0.5) /
                                static_cast<double>(n);
        if (zoom_top && rank_pct < y_lo) continue;
        const bool covers = f.lo[i] <= theta && theta <= f.hi[i];
        const double y = ymap.at(rank_pct);
        b.line(xmap.at(f.lo[i]), y, xmap.at(f.hi[i]), y,
               covers ? "cover" : "noncover");
        sc.row(covers ? "interval_cover" : "interval_noncover", facet, methods[c],
               std::to_string(f.reps[i]), f.lo[i], rank_pct, f.hi[i], rank_pct,
               xmap.at(f.lo[i]), y, xmap.at(f.hi[i]), y);
      }

      b.line(xmap.at(theta), py0, xmap.at(theta), py0 + facet_h, "reference");
      sc.row("reference", facet, methods[c], "", theta, kNaN, theta, kNaN,
             xmap.at(theta), py0, xmap.at(theta), py0 + facet_h);
      for (const double bound : {cov_pct - 1.96 * mcse_pct, cov_pct + 1.96 * mcse_pct}) {
        if (bound < y_lo || bound > 100.0) continue;  // outside the plotted range
        b.line(px0, ymap.at(bound), px0 + facet_w, ymap.at(bound), "mcse");
        sc.row("mcse_rule", facet, methods[c], "", kNaN, bound, kNaN, bound, px0,
               ymap.at(bound), px0 + facet_w, ymap.at(bound));
      }

      b.line(px0, py0 + facet_h, px0 + facet_w, py0 + facet_h, "axis");
      b.line(px0, py0, px0, py0 + facet_h, "axis");
      for (double tick = y_lo; tick <= 100.0; tick += zoom_top ? 5.0 : 25.0) {
        b.text(px0 - 6, ymap.at(tick) + 3, svg::num(tick), "label", "end");
      }
    }
  }
  b.text(width / 2.0, height - 16.0,
         "confidence intervals, ranked by fractional centile of |z|", "label");
  return {b.finish(), sc.text};
}

Figure render_lollipop(const perf::PerfResult& perf,
                       const std::vector<perf::Measure>& measures_in,
                       const RenderContext& ctx) {
  std::set<std::string> dgms_seen, methods_seen;
  std::vector<perf::Measure> measures_seen;
  for (const auto& p : perf.estimates) {
    dgms_seen.insert(p.dgm_id);
    methods_seen.insert(p.method_id);
    if (std::find(measures_seen.begin(), measures_seen.end(), p.measure) ==
        measures_seen.end())
      measures_seen.push_back(p.measure);
  }
  const auto dgms = ordered_or(ctx.dgm_order, dgms_seen);
  const auto methods = ordered_or(ctx.method_order, methods_seen);
  const auto measures = measures_in.empty() ? measures_seen : measures_in;
  if (dgms.empty() || methods.empty() || measures.empty())
    throw Error(ErrorCode::insufficient_data, "lollipop: no performance estimates");

  auto reference_for = [&ctx](perf::Measure m, const std::string& dgm) -> double {
    switch (m) {
      case perf::Measure::coverage:
      case perf::Measure::be_coverage:
        return 100.0 * (1.0 - ctx.alpha);
      case perf::Measure::rejection_pct:
        return 100.0 * ctx.alpha;
      case perf::Measure::convergence_pct:
        return 100.0;
      case perf::Measure::mean: {
        const auto it = ctx.true_theta.find(dgm);
        return it == ctx.true_theta.end() ? 0.0 : it->second;
      }
      default:
        return 0.0;  // bias, empse, mse, modse and relative measures
    }
  };

  const double row_h = 22, block_header = 20;
  const double facet_w = 260;
  const double block_h = block_header + methods.size() * row_h + 8;
  const int width = static_cast<int>(kMarginLeft + 110 + dgms.size() * facet_w +
                                     (dgms.size() - 1) * kFacetGap + kMarginRight);
  const int height =
      static_cast<int>(kMarginTop + measures.size() * (block_h + 12) + kMarginBottom);
  svg::Builder b(width, height);
  b.style(svg::default_css());
  Sidecar sc;

  const double left0 = kMarginLeft + 110;
  for (std::size_t di = 0; di < dgms.size(); ++di)
    b.text(left0 + di * (facet_w + kFacetGap) + facet_w / 2, kMarginTop - 10,
           dgm_label(ctx, dgms[di]), "title");

  for (std::size_t mi = 0; mi < measures.size(); ++mi) {
    const perf::Measure m = measures[mi];
    const double block_y = kMarginTop + mi * (block_h + 12);
    b.text(kMarginLeft - 70, block_y + block_header + 2,
           perf::measure_name(m), "label", "start");

    // Shared x range per measure so the dgm columns are comparable.
    Range xr;
    for (const auto& p : perf.estimates) {
      if (p.measure != m) continue;
      xr.add(p.estimate - 1.96 * p.mcse);
      xr.add(p.estimate + 1.96 * p.mcse);
    }
    for (const auto& dgm : dgms) xr.add(reference_for(m, dgm));
    if (!xr.ok()) continue;
    xr.pad(0.08);

    for (std::size_t di = 0; di < dgms.size(); ++di) {
      const std::string facet =
          "measure=" + std::string(perf::measure_name(m)) + "|dgm=" + dgms[di];
      const double px0 = left0 + di * (facet_w + kFacetGap);
      const LinearMap xmap{xr.lo, xr.hi, px0, px0 + facet_w};
      const LinearMap ymap{0.0, static_cast<double>(methods.size()),
                           block_y + block_header + methods.size() * row_h,
                           block_y + block_header};
      sc.axes(facet, xmap, ymap);

      const double ref = reference_for(m, dgms[di]);
      b.line(xmap.at(ref), block_y + block_header - 4,
             xmap.at(ref), block_y + block_header + methods.size() * row_h + 4,
             "reference");
      sc.row("reference", facet, "", "", ref, kNaN, ref, kNaN, xmap.at(ref),
             block_y + block_header - 4, xmap.at(ref),
             block_y + block_header + methods.size() * row_h + 4);

      for (std::size_t ri = 0; ri < methods.size(); ++ri) {
        const perf::PerformanceEstimate* cell = nullptr;
        for (const auto& p : perf.estimates)
          if (p.measure == m && p.dgm_id == dgms[di] && p.method_id == methods[ri])
            cell = &p;
        const double y = ymap.at(static_cast<double>(ri) + 0.5);
        if (di == 0)
          b.text(px0 - 8, y + 3, methods[ri], "label", "end");
        if (!cell) continue;
        const double lo = cell->estimate - 1.96 * cell->mcse;
        const double hi = cell->estimate + 1.96 * cell->mcse;
        b.line(xmap.at(ref), y, xmap.at(cell->estimate), y, "stem");
        sc.row("stem", facet, methods[ri], "", ref, kNaN, cell->estimate, kNaN,
               xmap.at(ref), y, xmap.at(cell->estimate), y);
        b.circle(xmap.at(cell->estimate), y, 2.6, "point");
        sc.row("point", facet, methods[ri], "", cell->estimate, kNaN, kNaN, kNaN,
               xmap.at(cell->estimate), y, kNaN, kNaN);
        b.text(xmap.at(lo), y + 4, "(", "paren");
        sc.row("paren_low", facet, methods[ri], "", lo, kNaN, kNaN, kNaN,
               xmap.at(lo), y + 4, kNaN, kNaN);
        b.text(xmap.at(hi), y + 4, ")", "paren");
        sc.row("paren_high", facet, methods[ri], "", hi, kNaN, kNaN, kNaN,
               xmap.at(hi), y + 4, kNaN, kNaN);
      }
      b.line(px0, block_y + block_header + methods.size() * row_h, px0 + facet_w,
             block_y + block_header + methods.size() * row_h, "axis");
    }
  }
  return {b.finish(), sc.text};
}

Figure render_nested_loop(
    const perf::PerfResult& perf, perf::Measure measure,
    const std::vector<std::pair<std::string, dgm::FactorAssignment>>& dgm_factors,
    const std::vector<std::string>& factor_order, const RenderContext& ctx) {
  if (dgm_factors.empty())
    throw Error(ErrorCode::non_factorial_grid, "nested-loop plot: no factor metadata");

  // Level order = first appearance in expansion order.
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> levels;
  for (const auto& [_, assignment] : dgm_factors) {
    for (const auto& [name, level] : assignment) {
      if (!levels.count(name)) names.push_back(name);
      auto& lv = levels[name];
      if (std::find(lv.begin(), lv.end(), level) == lv.end()) lv.push_back(level);
    }
  }
  std::vector<std::string> order = factor_order.empty() ? names : factor_order;
  for (const auto& f : order)
    if (!levels.count(f))
      throw Error(ErrorCode::non_factorial_grid,
                  "nested-loop plot: unknown factor \"" + f + "\"");

  std::size_t expected = 1;
  for (const auto& f : order) expected *= levels[f].size();
  if (expected != dgm_factors.size())
    throw Error(ErrorCode::non_factorial_grid,
                "nested-loop plot: DGM grid is not fully factorial over the given factors");

  auto level_index = [&](const dgm::FactorAssignment& a, const std::string& f) {
    for (const auto& [name, level] : a)
      if (name == f) {
        const auto& lv = levels[f];
        return static_cast<std::size_t>(
            std::find(lv.begin(), lv.end(), level) - lv.begin());
      }
    throw Error(ErrorCode::non_factorial_grid,
                "nested-loop plot: dgm missing factor \"" + f + "\"");
  };

  // Lexicographic ordering, first factor slowest.
  std::vector<std::size_t> position(dgm_factors.size());
  for (std::size_t i = 0; i < dgm_factors.size(); ++i) position[i] = i;
  std::vector<std::vector<std::size_t>> keys(dgm_factors.size());
  std::set<std::vector<std::size_t>> unique_keys;
  for (std::size_t i = 0; i < dgm_factors.size(); ++i) {
    for (const auto& f : order) keys[i].push_back(level_index(dgm_factors[i].second, f));
    if (!unique_keys.insert(keys[i]).second)
      throw Error(ErrorCode::non_factorial_grid,
                  "nested-loop plot: duplicate factor combination");
  }
  std::sort(position.begin(), position.end(),
            [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

  std::set<std::string> methods_seen;
  for (const auto& p : perf.estimates)
    if (p.measure == measure) methods_seen.insert(p.method_id);
  const auto methods = ordered_or(ctx.method_order, methods_seen);
  if (methods.empty())
    throw Error(ErrorCode::insufficient_data,
                "nested-loop plot: no rows for the requested measure");

  auto value_of = [&](const std::string& dgm, const std::string& method) {
    for (const auto& p : perf.estimates)
      if (p.measure == measure && p.dgm_id == dgm && p.method_id == method)
        return p.estimate;
    return kNaN;
  };

  const std::size_t k = dgm_factors.size();
  const double plot_w = std::max(360.0, 26.0 * static_cast<double>(k));
  const double plot_h = 220;
  const double band_h = 26;
  const double bands_h = band_h * static_cast<double>(order.size());
  const int width = static_cast<int>(kMarginLeft + plot_w + 170 + kMarginRight);
  const int height =
      static_cast<int>(kMarginTop + plot_h + 14 + bands_h + kMarginBottom);
  svg::Builder b(width, height);
  b.style(svg::default_css());
  Sidecar sc;

  Range yr;
  for (std::size_t i = 0; i < k; ++i)
    for (const auto& m : methods)
      yr.add(value_of(dgm_factors[i].first, m));
  if (!yr.ok())
    throw Error(ErrorCode::insufficient_data, "nested-loop plot: no finite values");
  yr.pad(0.08);

  const LinearMap xmap{1.0, static_cast<double>(k + 1), kMarginLeft,
                       kMarginLeft + plot_w};
  const LinearMap ymap{yr.lo, yr.hi, kMarginTop + plot_h, kMarginTop};
  sc.axes("main", xmap, ymap);

  b.text(kMarginLeft + plot_w / 2, kMarginTop - 10,
         std::string(perf::measure_name(measure)) + " across data-generating mechanisms",
         "title");

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const std::string cls = "step step" + std::to_string(mi % 6);
    double prev_y = kNaN;
    for (std::size_t pos = 0; pos < k; ++pos) {
      const auto& [dgm_id, _] = dgm_factors[position[pos]];
      const double v = value_of(dgm_id, methods[mi]);
      if (std::isnan(v)) continue;
      const double x1 = xmap.at(static_cast<double>(pos) + 1.0);
      const double x2 = xmap.at(static_cast<double>(pos) + 2.0);
      const double y = ymap.at(v);
      if (!std::isnan(prev_y)) b.line(x1, prev_y, x1, y, cls);
      b.line(x1, y, x2, y, cls);
      sc.row("step", "main", methods[mi], std::to_string(pos + 1),
             static_cast<double>(pos + 1), v, kNaN, kNaN, x1, y, x2, y);
      prev_y = y;
    }
    b.text(kMarginLeft + plot_w + 10, kMarginTop + 14 + 14 * mi, methods[mi],
           "label", "start");
    b.line(kMarginLeft + plot_w + 60, kMarginTop + 10 + 14 * mi,
           kMarginLeft + plot_w + 80, kMarginTop + 10 + 14 * mi, cls);
  }

  b.line(kMarginLeft, kMarginTop + plot_h, kMarginLeft + plot_w, kMarginTop + plot_h,
         "axis");
  b.line(kMarginLeft, kMarginTop, kMarginLeft, kMarginTop + plot_h, "axis");
  for (int t = 0; t <= 4; ++t) {
    const double v = yr.lo + (yr.hi - yr.lo) * t / 4.0;
    b.text(kMarginLeft - 6, ymap.at(v) + 3, svg::num(v), "label", "end");
  }

  // Factor-level bands beneath the axis.
  for (std::size_t fi = 0; fi < order.size(); ++fi) {
    const auto& f = order[fi];
    const double band_top = kMarginTop + plot_h + 14 + fi * band_h;
    const std::size_t n_levels = levels[f].size();
    const LinearMap bmap{0.0, static_cast<double>(n_levels - 1 > 0 ? n_levels - 1 : 1),
                         band_top + band_h - 6, band_top + 4};
    for (std::size_t pos = 0; pos < k; ++pos) {
      const std::size_t li = keys[position[pos]][fi];
      const double x1 = xmap.at(static_cast<double>(pos) + 1.0);
      const double x2 = xmap.at(static_cast<double>(pos) + 2.0);
      const double y = bmap.at(static_cast<double>(li));
      b.line(x1, y, x2, y, "factorband");
      sc.row("factor_band", "main", f, std::to_string(pos + 1),
             static_cast<double>(pos + 1), levels[f][li], kNaN, kNaN, x1, y, x2, y);
    }
    std::string label = f + ":";
    for (const double lv : levels[f]) label += " " + svg::num(lv);
    b.text(kMarginLeft + plot_w + 10, band_top + band_h / 2 + 3, label, "label",
           "start");
  }
  return {b.finish(), sc.text};
}

Figure render_strip(const EstimatesData& estimates, const RenderContext& ctx) {
  const std::string estimand = pick_estimand(ctx.estimand_id, estimates);
  const auto cells = collect_cells(estimates, estimand);
  std::set<std::string> dgms_seen, methods_seen;
  for (const auto& [key, _] : cells) {
    dgms_seen.insert(key.first);
    methods_seen.insert(key.second);
  }
  const auto dgms = ordered_or(ctx.dgm_order, dgms_seen);
  const auto methods = ordered_or(ctx.method_order, methods_seen);
  if (dgms.empty() || methods.empty())
    throw Error(ErrorCode::insufficient_data, "strip plot: no converged rows");

  const char* panels[2] = {"theta_hat", "se_hat"};
  const double facet_w = 170, facet_h = 170;
  const std::size_t n_cols = methods.size() * 2;
  const int width = static_cast<int>(kMarginLeft + n_cols * facet_w +
                                     (n_cols - 1) * kFacetGap + kMarginRight);
  const int height = static_cast<int>(kMarginTop + dgms.size() * facet_h +
                                      (dgms.size() - 1) * kFacetGap + kMarginBottom);
  svg::Builder b(width, height);
  b.style(svg::default_css());
  Sidecar sc;

  for (std::size_t r = 0; r < dgms.size(); ++r) {
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      for (int panel = 0; panel < 2; ++panel) {
        const std::size_t col = mi * 2 + panel;
        const double px0 = kMarginLeft + col * (facet_w + kFacetGap);
        const double py0 = kMarginTop + r * (facet_h + kFacetGap);
        const std::string facet = "dgm=" + dgms[r] + "|method=" + methods[mi] +
                                  "|panel=" + panels[panel];
        if (r == 0)
          b.text(px0 + facet_w / 2, py0 - 8, methods[mi] + std::string(" ") + panels[panel],
                 "title");
        if (col == 0)
          b.text(px0 - 60, py0 + facet_h / 2, dgm_label(ctx, dgms[r]), "label");

        const auto it = cells.find({dgms[r], methods[mi]});
        if (it == cells.end() || it->second.theta.empty()) {
          b.text(px0 + facet_w / 2, py0 + facet_h / 2, "no converged repetitions",
                 "annotation");
          continue;
        }
        if (panel == 1 && !estimates.has_se) {
          b.text(px0 + facet_w / 2, py0 + facet_h / 2, "no se_hat column", "annotation");
          continue;
        }
        const FacetRows& f = it->second;
        const std::vector<double>& values = panel == 0 ? f.theta : f.se;
        Range xr;
        for (double v : values) xr.add(v);
        xr.pad(0.05);
        Range repr;
        for (auto rep : f.reps) repr.add(static_cast<double>(rep));
        const LinearMap xmap{xr.lo, xr.hi, px0, px0 + facet_w};
        const LinearMap ymap{repr.lo, repr.hi, py0 + facet_h, py0};
        sc.axes(facet, xmap, ymap);

        for (std::size_t i = 0; i < values.size(); ++i) {
          const double x = xmap.at(values[i]);
          const double y = ymap.at(static_cast<double>(f.reps[i]));
          b.circle(x, y, 1.1, "point");
          sc.row("point", facet, methods[mi], std::to_string(f.reps[i]), values[i],
                 static_cast<double>(f.reps[i]), kNaN, kNaN, x, y, kNaN, kNaN);
        }
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        b.line(xmap.at(mean), py0, xmap.at(mean), py0 + facet_h, "mean");
        sc.row("mean_marker", facet, methods[mi], "", mean, kNaN, kNaN, kNaN,
               xmap.at(mean), py0, xmap.at(mean), py0 + facet_h);
        b.line(px0, py0 + facet_h, px0 + facet_w, py0 + facet_h, "axis");
      }
    }
  }
  return {b.finish(), sc.text};
}

namespace {

// Pairs two cells' converged repetitions.
void paired_values(const FacetRows& a, const FacetRows& b, bool use_se,
                   std::vector<std::uint64_t>& reps, std::vector<double>& va,
                   std::vector<double>& vb) {
  std::size_t i = 0, j = 0;
  while (i < a.reps.size() && j < b.reps.size()) {
    if (a.reps[i] == b.reps[j]) {
      reps.push_back(a.reps[i]);
      va.push_back(use_se ? a.se[i] : a.theta[i]);
      vb.push_back(use_se ? b.se[j] : b.theta[j]);
      ++i;
      ++j;
    } else if (a.reps[i] < b.reps[j]) {
      ++i;
    } else {
      ++j;
    }
  }
}

}  // namespace

Figure render_scatter_matrix(const EstimatesData& estimates, const std::string& dgm_id,
                             const RenderContext& ctx) {
  const std::string estimand = pick_estimand(ctx.estimand_id, estimates);
  const auto cells = collect_cells(estimates, estimand);
  std::set<std::string> methods_seen;
  for (const auto& [key, _] : cells)
    if (key.first == dgm_id) methods_seen.insert(key.second);
  const auto methods = ordered_or(ctx.method_order, methods_seen);
  if (methods.size() < 2)
    throw Error(ErrorCode::insufficient_methods,
                "scatter matrix needs at least 2 methods");

  const double facet_w = 170, facet_h = 170;
  const std::size_t m = methods.size();
  const int width = static_cast<int>(kMarginLeft + m * facet_w + (m - 1) * kFacetGap +
                                     kMarginRight);
  const int height = static_cast<int>(kMarginTop + m * facet_h + (m - 1) * kFacetGap +
                                      kMarginBottom);
  svg::Builder b(width, height);
  b.style(svg::default_css());
  Sidecar sc;
  b.text(width / 2.0, kMarginTop - 24,
         "dgm " + dgm_id + ": theta_hat (upper), se_hat (lower)", "title");

  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      const double px0 = kMarginLeft + c * (facet_w + kFacetGap);
      const double py0 = kMarginTop + r * (facet_h + kFacetGap);
      if (r == c) {
        b.text(px0 + facet_w / 2, py0 + facet_h / 2, methods[r], "title");
        continue;
      }
      const bool use_se = r > c;  // lower triangle shows model SEs
      if (use_se && !estimates.has_se) continue;
      const std::string facet = "dgm=" + dgm_id + "|x=" + methods[c] +
                                "|y=" + methods[r] + "|panel=" +
                                (use_se ? "se_hat" : "theta_hat");
      const auto ax = cells.find({dgm_id, methods[c]});
      const auto ay = cells.find({dgm_id, methods[r]});
      if (ax == cells.end() || ay == cells.end()) continue;
      std::vector<std::uint64_t> reps;
      std::vector<double> xs, ys;
      paired_values(ax->second, ay->second, use_se, reps, xs, ys);
      if (reps.empty()) continue;
      Range range;
      for (double v : xs) range.add(v);
      for (double v : ys) range.add(v);
      range.pad(0.05);
      const LinearMap xmap{range.lo, range.hi, px0, px0 + facet_w};
      const LinearMap ymap{range.lo, range.hi, py0 + facet_h, py0};
      sc.axes(facet, xmap, ymap);
      b.line(xmap.at(range.lo), ymap.at(range.lo), xmap.at(range.hi), ymap.at(range.hi),
             "equality");
      sc.row("equality", facet, "", "", range.lo, range.lo, range.hi, range.hi,
             xmap.at(range.lo), ymap.at(range.lo), xmap.at(range.hi),
             ymap.at(range.hi));
      for (std::size_t i = 0; i < reps.size(); ++i) {
        b.circle(xmap.at(xs[i]), ymap.at(ys[i]), 1.1, "point");
        sc.row("point", facet, "", std::to_string(reps[i]), xs[i], ys[i], kNaN, kNaN,
               xmap.at(xs[i]), ymap.at(ys[i]), kNaN, kNaN);
      }
      b.line(px0, py0 + facet_h, px0 + facet_w, py0 + facet_h, "axis");
      b.line(px0, py0, px0, py0 + facet_h, "axis");
    }
  }
  return {b.finish(), sc.text};
}

Figure render_diff_vs_mean(const EstimatesData& estimates, const std::string& comparator,
                           const RenderContext& ctx) {
  const std::string estimand = pick_estimand(ctx.estimand_id, estimates);
  const auto cells = collect_cells(estimates, estimand);
  std::set<std::string> dgms_seen, methods_seen;
  for (const auto& [key, _] : cells) {
    dgms_seen.insert(key.first);
    methods_seen.insert(key.second);
  }
  if (!methods_seen.count(comparator))
    throw Error(ErrorCode::insufficient_methods,
                "diff-vs-mean: comparator \"" + comparator + "\" has no converged rows");
  const auto dgms = ordered_or(ctx.dgm_order, dgms_seen);
  std::vector<std::string> others;
  for (const auto& m : ordered_or(ctx.method_order, methods_seen))
    if (m != comparator) others.push_back(m);
  if (others.empty())
    throw Error(ErrorCode::insufficient_methods,
                "diff-vs-mean needs at least one non-comparator method");

  const double facet_w = 220, facet_h = 180;
  const int width = static_cast<int>(kMarginLeft + others.size() * facet_w +
                                     (others.size() - 1) * kFacetGap + kMarginRight);
  const int height = static_cast<int>(kMarginTop + dgms.size() * facet_h +
                                      (dgms.size() - 1) * kFacetGap + kMarginBottom);
  svg::Builder b(width, height);
  b.style(svg::default_css());
  Sidecar sc;

  for (std::size_t r = 0; r < dgms.size(); ++r) {
    for (std::size_t c = 0; c < others.size(); ++c) {
      const double px0 = kMarginLeft + c * (facet_w + kFacetGap);
      const double py0 = kMarginTop + r * (facet_h + kFacetGap);
      const std::string facet = "dgm=" + dgms[r] + "|method=" + others[c];
      if (r == 0)
        b.text(px0 + facet_w / 2, py0 - 8, others[c] + " - " + comparator, "title");
      if (c == 0)
        b.text(px0 - 60, py0 + facet_h / 2, dgm_label(ctx, dgms[r]), "label");

      const auto am = cells.find({dgms[r], others[c]});
      const auto ac = cells.find({dgms[r], comparator});
      if (am == cells.end() || ac == cells.end()) continue;
      std::vector<std::uint64_t> reps;
      std::vector<double> vm, vc;
      paired_values(am->second, ac->second, false, reps, vm, vc);
      if (reps.empty()) continue;

      Range xr, yr;
      std::vector<double> means(reps.size()), diffs(reps.size());
      for (std::size_t i = 0; i < reps.size(); ++i) {
        means[i] = 0.5 * (vm[i] + vc[i]);
        diffs[i] = vm[i] - vc[i];
        xr.add(means[i]);
        yr.add(diffs[i]);
      }
      yr.add(0.0);
      xr.pad(0.05);
      yr.pad(0.10);
      const LinearMap xmap{xr.lo, xr.hi, px0, px0 + facet_w};
      const LinearMap ymap{yr.lo, yr.hi, py0 + facet_h, py0};
      sc.axes(facet, xmap, ymap);

      b.line(px0, ymap.at(0.0), px0 + facet_w, ymap.at(0.0), "zero");
      sc.row("zero_line", facet, others[c], "", kNaN, 0.0, kNaN, 0.0, px0,
             ymap.at(0.0), px0 + facet_w, ymap.at(0.0));
      for (std::size_t i = 0; i < reps.size(); ++i) {
        b.circle(xmap.at(means[i]), ymap.at(diffs[i]), 1.1, "point");
        sc.row("point", facet, others[c], std::to_string(reps[i]), means[i], diffs[i],
               kNaN, kNaN, xmap.at(means[i]), ymap.at(diffs[i]), kNaN, kNaN);
      }
      b.line(px0, py0 + facet_h, px0 + facet_w, py0 + facet_h, "axis");
      b.line(px0, py0, px0, py0 + facet_h, "axis");
    }
  }
  return {b.finish(), sc.text};
}

}  // namespace simharness::report
