// SPDX-License-Identifier: Apache-2.0
#include "simharness/perf.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "simharness/csv.hpp"
#include "simharness/errors.hpp"
#include "simharness/mathutil.hpp"

namespace simharness::perf {

namespace {

struct CellKey {
  std::string dgm, method, estimand;
  bool operator<(const CellKey& o) const {
    return std::tie(dgm, method, estimand) < std::tie(o.dgm, o.method, o.estimand);
  }
};

struct CellData {
  // Converged repetitions only, in repetition order.
  std::vector<std::uint64_t> reps;
  std::vector<double> theta, se, ci_low, ci_high, p;
  std::size_t n_total = 0;  // all repetitions, converged or not
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Sum of squared deviations about the mean.
double ss_about_mean(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s;
}

struct Proportion {
  double pct, mcse;
};

Proportion proportion_pct(double count, double n) {
  const double p = count / n;
  return {100.0 * p, 100.0 * std::sqrt(p * (1.0 - p) / n)};
}

}  // namespace

const char* measure_name(Measure m) {
  switch (m) {
    case Measure::convergence_pct: return "convergence_pct";
    case Measure::bias: return "bias";
    case Measure::mean: return "mean";
    case Measure::empse: return "empse";
    case Measure::rel_precision: return "rel_precision";
    case Measure::mse: return "mse";
    case Measure::avg_modse: return "avg_modse";
    case Measure::rel_err_modse: return "rel_err_modse";
    case Measure::coverage: return "coverage";
    case Measure::be_coverage: return "be_coverage";
    case Measure::rejection_pct: return "rejection_pct";
  }
  return "bias";
}

std::optional<Measure> measure_from_name(const std::string& name) {
  for (Measure m : all_measures())
    if (name == measure_name(m)) return m;
  return std::nullopt;
}

std::vector<Measure> all_measures() {
  return {Measure::convergence_pct, Measure::bias,        Measure::mean,
          Measure::empse,           Measure::rel_precision, Measure::mse,
          Measure::avg_modse,       Measure::rel_err_modse, Measure::coverage,
          Measure::be_coverage,     Measure::rejection_pct};
}

bool measure_mcse_approximate(Measure m) {
  return m == Measure::rel_precision || m == Measure::avg_modse ||
         m == Measure::rel_err_modse;
}

bool measure_percent_scale(Measure m) {
  return m == Measure::convergence_pct || m == Measure::coverage ||
         m == Measure::be_coverage || m == Measure::rejection_pct ||
         m == Measure::rel_precision || m == Measure::rel_err_modse;
}

PerfResult summarize(
    const EstimatesData& estimates,
    const std::map<std::pair<std::string, std::string>, double>& true_theta,
    const PerfOptions& options) {
  std::map<CellKey, CellData> cells;
  for (const auto& r : estimates.rows) {
    CellData& c = cells[{r.dgm_id, r.method_id, r.estimand_id}];
    ++c.n_total;
    if (!r.estimate.converged) continue;
    c.reps.push_back(r.repetition);
    c.theta.push_back(r.estimate.theta_hat);
    c.se.push_back(r.estimate.se_hat);
    c.ci_low.push_back(r.estimate.ci_low);
    c.ci_high.push_back(r.estimate.ci_high);
    c.p.push_back(r.estimate.p_value);
  }

  const bool want_relprec =
      std::find(options.measures.begin(), options.measures.end(),
                Measure::rel_precision) != options.measures.end();
  if (want_relprec && options.comparator_method_id.empty())
    throw Error(ErrorCode::config_error,
                "rel_precision requires a comparator method");

  PerfResult result;
  auto skip = [&result](const CellKey& key, Measure m, const std::string& why) {
    result.diagnostics.push_back({key.dgm, key.method, key.estimand, m, why});
  };

  for (const auto& [key, cell] : cells) {
    const std::size_t n = cell.theta.size();
    auto push = [&](Measure m, double est, double mcse, std::size_t n_used,
                    const std::string& comparator = "") {
      result.estimates.push_back(
          {key.dgm, key.method, key.estimand, m, est, mcse, n_used, comparator});
    };

    const auto theta_it = true_theta.find({key.dgm, key.estimand});
    const bool have_truth = theta_it != true_theta.end();
    const double truth = have_truth ? theta_it->second : 0.0;

    const double theta_bar = n > 0 ? mean_of(cell.theta) : 0.0;
    const double ss_theta = n > 0 ? ss_about_mean(cell.theta, theta_bar) : 0.0;
    const double nd = static_cast<double>(n);
    const double empse = n >= 2 ? std::sqrt(ss_theta / (nd - 1.0)) : 0.0;

    for (Measure m : options.measures) {
      if (m == Measure::convergence_pct) {
        const auto [pct, mcse] =
            proportion_pct(static_cast<double>(n), static_cast<double>(cell.n_total));
        push(m, pct, mcse, cell.n_total);
        continue;
      }
      if (n < 2) {
        skip(key, m, "fewer than 2 converged repetitions");
        continue;
      }
      switch (m) {
        case Measure::bias: {
          if (!have_truth) { skip(key, m, "true theta unknown"); break; }
          push(m, theta_bar - truth, std::sqrt(ss_theta / (nd * (nd - 1.0))), n);
          break;
        }
        case Measure::mean:
          push(m, theta_bar, std::sqrt(ss_theta / (nd * (nd - 1.0))), n);
          break;
        case Measure::empse:
          push(m, empse, empse / std::sqrt(2.0 * (nd - 1.0)), n);
          break;
        case Measure::mse: {
          if (!have_truth) { skip(key, m, "true theta unknown"); break; }
          double mse = 0.0;
          for (double th : cell.theta) mse += (th - truth) * (th - truth);
          mse /= nd;
          double ss = 0.0;
          for (double th : cell.theta) {
            const double dev = (th - truth) * (th - truth) - mse;
            ss += dev * dev;
          }
          push(m, mse, std::sqrt(ss / (nd * (nd - 1.0))), n);
          break;
        }
        case Measure::avg_modse:
        case Measure::rel_err_modse: {
          if (!estimates.has_se) { skip(key, m, "no se_hat column"); break; }
          std::vector<double> var(cell.se.size());
          for (std::size_t i = 0; i < cell.se.size(); ++i) var[i] = cell.se[i] * cell.se[i];
          const double mean_var = mean_of(var);
          const double var_of_var = ss_about_mean(var, mean_var) / (nd - 1.0);
          const double modse = std::sqrt(mean_var);
          if (m == Measure::avg_modse) {
            push(m, modse, std::sqrt(var_of_var / (4.0 * nd * mean_var)), n);
          } else {
            if (empse == 0.0) { skip(key, m, "empirical SE is zero"); break; }
            const double ratio = modse / empse;
            const double mcse =
                100.0 * ratio *
                std::sqrt(var_of_var / (4.0 * nd * mean_var * mean_var) +
                          1.0 / (2.0 * (nd - 1.0)));
            push(m, 100.0 * (ratio - 1.0), mcse, n);
          }
          break;
        }
        case Measure::coverage:
        case Measure::be_coverage: {
          if (!estimates.has_ci) { skip(key, m, "no ci_low/ci_high columns"); break; }
          if (m == Measure::coverage && !have_truth) {
            skip(key, m, "true theta unknown");
            break;
          }
          const double target = m == Measure::coverage ? truth : theta_bar;
          double covered = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            if (cell.ci_low[i] <= target && target <= cell.ci_high[i]) covered += 1.0;
          const auto [pct, mcse] = proportion_pct(covered, nd);
          push(m, pct, mcse, n);
          break;
        }
        case Measure::rejection_pct: {
          if (!estimates.has_p) { skip(key, m, "no p_value column"); break; }
          double rejected = 0.0;
          for (double p : cell.p)
            if (p <= options.alpha) rejected += 1.0;
          const auto [pct, mcse] = proportion_pct(rejected, nd);
          push(m, pct, mcse, n);
          break;
        }
        case Measure::rel_precision: {
          const auto comp_it =
              cells.find({key.dgm, options.comparator_method_id, key.estimand});
          if (comp_it == cells.end()) {
            skip(key, m, "comparator method has no rows for this cell");
            break;
          }
          // Pair repetitions where both methods converged.
          const CellData& comp = comp_it->second;
          std::vector<double> mine, theirs;
          std::size_t i = 0, j = 0;
          while (i < cell.reps.size() && j < comp.reps.size()) {
            if (cell.reps[i] == comp.reps[j]) {
              mine.push_back(cell.theta[i]);
              theirs.push_back(comp.theta[j]);
              ++i;
              ++j;
            } else if (cell.reps[i] < comp.reps[j]) {
              ++i;
            } else {
              ++j;
            }
          }
          const std::size_t np = mine.size();
          if (np < 2) {
            skip(key, m, "fewer than 2 paired converged repetitions");
            break;
          }
          const double npd = static_cast<double>(np);
          const double mean_b = mean_of(mine), mean_a = mean_of(theirs);
          const double ss_b = ss_about_mean(mine, mean_b);
          const double ss_a = ss_about_mean(theirs, mean_a);
          if (ss_b == 0.0) { skip(key, m, "method empirical SE is zero"); break; }
          double cross = 0.0;
          for (std::size_t r = 0; r < np; ++r)
            cross += (theirs[r] - mean_a) * (mine[r] - mean_b);
          const double corr = (ss_a > 0.0) ? cross / std::sqrt(ss_a * ss_b) : 0.0;
          const double ratio2 = ss_a / ss_b;  // (EmpSE_A / EmpSE_B)^2
          const double mcse = 200.0 * ratio2 *
                              std::sqrt(std::max(0.0, 1.0 - corr * corr) / (npd - 1.0));
          push(m, 100.0 * (ratio2 - 1.0), mcse, np, options.comparator_method_id);
          break;
        }
        case Measure::convergence_pct:
          break;  // handled above
      }
    }
  }
  return result;
}

std::vector<ConditionalCoverageRow> conditional_coverage(
    const EstimatesData& estimates,
    const std::map<std::pair<std::string, std::string>, double>& true_theta,
    std::size_t groups) {
  if (groups < 1)
    throw Error(ErrorCode::invalid_parameter, "conditional coverage needs groups >= 1");
  if (!estimates.has_ci || !estimates.has_se)
    throw Error(ErrorCode::config_error,
                "conditional coverage needs se_hat and ci_low/ci_high columns");

  struct Row {
    std::uint64_t rep;
    double se, lo, hi;
  };
  std::map<CellKey, std::vector<Row>> cells;
  for (const auto& r : estimates.rows) {
    if (!r.estimate.converged) continue;
    cells[{r.dgm_id, r.method_id, r.estimand_id}].push_back(
        {r.repetition, r.estimate.se_hat, r.estimate.ci_low, r.estimate.ci_high});
  }

  std::vector<ConditionalCoverageRow> out;
  for (auto& [key, rows] : cells) {
    const auto theta_it = true_theta.find({key.dgm, key.estimand});
    if (theta_it == true_theta.end())
      throw Error(ErrorCode::config_error,
                  "conditional coverage: true theta unknown for dgm " + key.dgm);
    const double truth = theta_it->second;
    if (rows.size() < groups)
      throw Error(ErrorCode::insufficient_data,
                  "conditional coverage: fewer converged repetitions than groups");
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      if (a.se != b.se) return a.se < b.se;
      return a.rep < b.rep;
    });

    const std::size_t n = rows.size();
    auto covered_in = [&](std::size_t lo, std::size_t hi) {
      double c = 0.0;
      for (std::size_t i = lo; i < hi; ++i)
        if (rows[i].lo <= truth && truth <= rows[i].hi) c += 1.0;
      return c;
    };

    ConditionalCoverageRow overall{key.dgm, key.method, key.estimand, 0, 0, 0, n};
    const double cov_all = covered_in(0, n);
    overall.coverage_pct = 100.0 * cov_all / static_cast<double>(n);
    overall.mcse = 100.0 * std::sqrt((cov_all / n) * (1.0 - cov_all / n) / n);
    out.push_back(overall);

    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t lo = g * n / groups;
      const std::size_t hi = (g + 1) * n / groups;
      const double ng = static_cast<double>(hi - lo);
      const double cov = covered_in(lo, hi);
      ConditionalCoverageRow row{key.dgm, key.method, key.estimand, g + 1, 0, 0,
                                 hi - lo};
      row.coverage_pct = 100.0 * cov / ng;
      row.mcse = 100.0 * std::sqrt((cov / ng) * (1.0 - cov / ng) / ng);
      out.push_back(row);
    }
  }
  return out;
}

std::uint64_t required_nsim(NsimKind kind, double expected, double target_mcse,
                            std::optional<double> var_theta) {
  if (!(target_mcse > 0.0))
    throw Error(ErrorCode::invalid_parameter, "required_nsim: target_mcse must be positive");
  double n;
  if (kind == NsimKind::coverage_or_power) {
    if (!(expected > 0.0 && expected < 100.0))
      throw Error(ErrorCode::invalid_parameter,
                  "required_nsim: expected coverage/power must lie in (0,100) percent");
    n = expected * (100.0 - expected) / (target_mcse * target_mcse);
  } else {
    if (!var_theta || !(*var_theta > 0.0))
      throw Error(ErrorCode::invalid_parameter,
                  "required_nsim: bias kind needs positive var_theta");
    n = *var_theta / (target_mcse * target_mcse);
  }
  const auto rounded = static_cast<std::uint64_t>(std::ceil(n - 1e-9));
  return rounded == 0 ? 1 : rounded;
}

double coverage_under_bias(double bias_over_se, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::invalid_parameter, "coverage_under_bias: alpha must lie in (0,1)");
  const double b = std::fabs(bias_over_se);
  const double z = mathutil::norm_quantile(1.0 - alpha / 2.0);
  return mathutil::norm_cdf(b + z) - mathutil::norm_cdf(b - z);
}

std::vector<MissingnessCell> missingness_report(const EstimatesData& estimates) {
  std::map<std::pair<std::string, std::string>, MissingnessCell> cells;
  for (const auto& r : estimates.rows) {
    auto& cell = cells[{r.dgm_id, r.method_id}];
    cell.dgm_id = r.dgm_id;
    cell.method_id = r.method_id;
    ++cell.n_total;
    if (r.estimate.converged)
      ++cell.n_converged;
    else
      ++cell.failures[r.estimate.error_code];
  }
  std::vector<MissingnessCell> out;
  out.reserve(cells.size());
  for (auto& [_, cell] : cells) out.push_back(std::move(cell));
  return out;
}

std::string perf_to_csv(const PerfResult& result) {
  std::string out = "dgm_id,method_id,estimand_id,measure,estimate,mcse,n_used,comparator\n";
  for (const auto& p : result.estimates) {
    out += p.dgm_id;
    out += ',';
    out += p.method_id;
    out += ',';
    out += p.estimand_id;
    out += ',';
    out += measure_name(p.measure);
    out += ',';
    out += mathutil::fmt_g17(p.estimate);
    out += ',';
    out += mathutil::fmt_g17(p.mcse);
    out += ',';
    out += std::to_string(p.n_used);
    out += ',';
    out += p.comparator_method_id;
    out += '\n';
  }
  return out;
}

std::string perf_to_json(const PerfResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : result.estimates) {
    nlohmann::json row{{"dgm_id", p.dgm_id},
                       {"method_id", p.method_id},
                       {"estimand_id", p.estimand_id},
                       {"measure", measure_name(p.measure)},
                       {"estimate", p.estimate},
                       {"mcse", p.mcse},
                       {"n_used", p.n_used},
                       {"mcse_approximate", measure_mcse_approximate(p.measure)}};
    if (!p.comparator_method_id.empty()) row["comparator"] = p.comparator_method_id;
    rows.push_back(std::move(row));
  }
  return rows.dump(2) + "\n";
}

PerfResult perf_from_csv(const std::string& text) {
  const csv::Table t = csv::parse(text);
  const int c_dgm = t.column("dgm_id");
  const int c_method = t.column("method_id");
  const int c_estimand = t.column("estimand_id");
  const int c_measure = t.column("measure");
  const int c_est = t.column("estimate");
  const int c_mcse = t.column("mcse");
  const int c_n = t.column("n_used");
  const int c_comp = t.column("comparator");
  if (c_dgm < 0 || c_method < 0 || c_measure < 0 || c_est < 0 || c_mcse < 0)
    throw Error(ErrorCode::config_error, "performance file is missing required columns");
  PerfResult result;
  for (const auto& row : t.rows) {
    const auto m = measure_from_name(row[c_measure]);
    if (!m)
      throw Error(ErrorCode::config_error, "unknown measure: " + row[c_measure]);
    PerformanceEstimate p;
    p.dgm_id = row[c_dgm];
    p.method_id = row[c_method];
    p.estimand_id = c_estimand >= 0 ? row[c_estimand] : "estimand";
    p.measure = *m;
    p.estimate = csv::parse_double(row[c_est]);
    p.mcse = csv::parse_double(row[c_mcse]);
    p.n_used = c_n >= 0 ? std::strtoull(row[c_n].c_str(), nullptr, 10) : 0;
    p.comparator_method_id = c_comp >= 0 ? row[c_comp] : "";
    result.estimates.push_back(std::move(p));
  }
  return result;
}

std::string conditional_coverage_to_csv(const std::vector<ConditionalCoverageRow>& rows) {
  std::string out = "dgm_id,method_id,estimand_id,group,n_used,coverage_pct,mcse\n";
  for (const auto& r : rows) {
    out += r.dgm_id;
    out += ',';
    out += r.method_id;
    out += ',';
    out += r.estimand_id;
    out += ',';
    out += r.group == 0 ? "overall" : std::to_string(r.group);
    out += ',';
    out += std::to_string(r.n_used);
    out += ',';
    out += mathutil::fmt_g17(r.coverage_pct);
    out += ',';
    out += mathutil::fmt_g17(r.mcse);
    out += '\n';
  }
  return out;
}

std::string missingness_to_csv(const std::vector<MissingnessCell>& cells) {
  std::string out =
      "dgm_id,method_id,n_total,n_converged,nonconvergence,separation,no_events,numeric\n";
  for (const auto& c : cells) {
    auto count = [&c](estimators::FitErrorCode code) {
      const auto it = c.failures.find(code);
      return it == c.failures.end() ? std::size_t{0} : it->second;
    };
    out += c.dgm_id;
    out += ',';
    out += c.method_id;
    out += ',';
    out += std::to_string(c.n_total);
    out += ',';
    out += std::to_string(c.n_converged);
    out += ',';
    out += std::to_string(count(estimators::FitErrorCode::nonconvergence));
    out += ',';
    out += std::to_string(count(estimators::FitErrorCode::separation));
    out += ',';
    out += std::to_string(count(estimators::FitErrorCode::no_events));
    out += ',';
    out += std::to_string(count(estimators::FitErrorCode::numeric));
    out += '\n';
  }
  return out;
}

}  // namespace simharness::perf
