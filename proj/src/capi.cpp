// SPDX-License-Identifier: Apache-2.0
#include "simharness.h"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <json.hpp>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include "simharness/csv.hpp"
#include "simharness/engine.hpp"
#include "simharness/errors.hpp"
#include "simharness/perf.hpp"
#include "simharness/report.hpp"
#include "simharness/study_config.hpp"
#include "simharness/svg.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace simharness;

struct simh_study {
  StudyConfig cfg;
  engine::RunOptions options;
};

namespace {

thread_local std::string g_last_error;

simh_status status_of(const Error& e) {
  return e.code() == ErrorCode::io_error ? SIMH_ERR_IO : SIMH_ERR_INVALID;
}

template <typename Fn>
simh_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return SIMH_OK;
  } catch (const Error& e) {
    g_last_error = std::string(error_code_name(e.code())) + ": " + e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SIMH_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SIMH_ERR_INTERNAL;
  }
}

void require(bool ok, const char* message) {
  if (!ok) throw Error(ErrorCode::invalid_parameter, message);
}

report::TableLayout layout_from(const StudyConfig& cfg,
                                const std::vector<DgmInstance>& dgms) {
  report::TableLayout layout;
  for (const auto& inst : dgms) {
    layout.dgm_order.push_back(inst.id);
    std::string label;
    for (const auto& [name, level] : inst.factors) {
      if (!label.empty()) label += ", ";
      label += name + "=" + svg::num(level);
    }
    if (!label.empty()) layout.dgm_labels[inst.id] = label;
  }
  for (const auto& m : cfg.methods) layout.method_order.push_back(m.id);
  for (const auto& name : cfg.measures)
    layout.measure_order.push_back(*perf::measure_from_name(name));
  return layout;
}

void write_analysis_artifacts(const StudyConfig& cfg,
                              const std::vector<DgmInstance>& dgms,
                              const EstimatesData& estimates,
                              const engine::TruthMap& truth, const std::string& out_dir) {
  const auto outputs = engine::analyze_and_write(cfg, estimates, truth, out_dir);
  const auto table = report::render_table(outputs.perf, layout_from(cfg, dgms));
  csv::write_text_file((fs::path(out_dir) / "table.txt").string(), table.text);
  csv::write_text_file((fs::path(out_dir) / "table.csv").string(), table.csv);
  const fs::path log_path = fs::path(out_dir) / "analysis_log.txt";
  if (outputs.perf.diagnostics.empty()) {
    std::error_code ec;
    fs::remove(log_path, ec);  // drop stale warnings from earlier analyses
  } else {
    std::string log;
    for (const auto& d : outputs.perf.diagnostics)
      log += "skipped " + std::string(perf::measure_name(d.measure)) + " for dgm " +
             d.dgm_id + ", method " + d.method_id + ": " + d.reason + "\n";
    csv::write_text_file(log_path.string(), log);
  }
}

void run_and_write(simh_study* study, const std::string& out_dir, bool analyze,
                   bool continuation, std::uint64_t extra) {
  const auto t0 = std::chrono::steady_clock::now();
  engine::RunResult result =
      continuation ? engine::continue_study(study->cfg, out_dir, extra, study->options)
                   : engine::run_study(study->cfg, study->options);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (continuation && extra == 0) return;  // validated no-op, files untouched
  engine::write_run_outputs(study->cfg, result, out_dir);
  csv::write_text_file((fs::path(out_dir) / "manifest.json").string(),
                       engine::manifest_to_json(study->cfg, result, seconds));
  if (analyze)
    write_analysis_artifacts(study->cfg, result.dgms, result.estimates,
                             result.true_theta, out_dir);
}

// Shared by analyze/plot: assembles estimates, config, truth and context
// from paths plus a JSON override blob.
struct AnalysisInputs {
  EstimatesData estimates;
  std::optional<StudyConfig> cfg;
  engine::TruthMap truth;
  json overrides = json::object();
  std::vector<DgmInstance> dgms;
};

AnalysisInputs load_inputs(const char* estimates_path, const char* config_path,
                           const char* overrides_json) {
  AnalysisInputs in;
  if (estimates_path && *estimates_path)
    in.estimates = estimates_from_csv(csv::read_text_file(estimates_path));
  if (config_path && *config_path) {
    in.cfg = config_from_file(config_path);
    in.dgms = expand_dgms(*in.cfg);
  }
  if (overrides_json && *overrides_json) {
    try {
      in.overrides = json::parse(overrides_json);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::invalid_parameter,
                  std::string("overrides are not valid JSON: ") + e.what());
    }
    if (!in.overrides.is_object())
      throw Error(ErrorCode::invalid_parameter, "overrides must be a JSON object");
  }

  // Truth resolution precedence: explicit override, then manifest, then
  // config resolution (which may itself simulate).
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& r : in.estimates.rows) keys.insert({r.dgm_id, r.estimand_id});
  if (in.overrides.contains("true_theta")) {
    const json& tv = in.overrides["true_theta"];
    if (tv.is_number()) {
      for (const auto& k : keys) in.truth[k] = tv.get<double>();
    } else if (tv.is_object()) {
      for (const auto& k : keys)
        if (tv.contains(k.first)) in.truth[k] = tv[k.first].get<double>();
    } else {
      throw Error(ErrorCode::invalid_parameter,
                  "true_theta override must be a number or {dgm: value}");
    }
  } else if (in.overrides.contains("manifest")) {
    in.truth = engine::truth_from_manifest(in.overrides["manifest"].get<std::string>());
  } else if (estimates_path && *estimates_path) {
    const fs::path manifest = fs::path(estimates_path).parent_path() / "manifest.json";
    std::error_code ec;
    if (fs::exists(manifest, ec))
      in.truth = engine::truth_from_manifest(manifest.string());
  }
  if (in.truth.empty() && in.cfg) in.truth = engine::resolve_true_theta(*in.cfg, in.dgms);
  return in;
}

StudyConfig analysis_config(const AnalysisInputs& in) {
  StudyConfig cfg;
  if (in.cfg) cfg = *in.cfg;
  const json& o = in.overrides;
  if (o.contains("alpha")) cfg.alpha = o["alpha"].get<double>();
  if (o.contains("comparator")) cfg.comparator_method_id = o["comparator"].get<std::string>();
  if (o.contains("conditional_groups"))
    cfg.conditional_coverage_groups = o["conditional_groups"].get<std::size_t>();
  if (o.contains("measures")) {
    cfg.measures.clear();
    for (const auto& m : o["measures"]) {
      const auto parsed = perf::measure_from_name(m.get<std::string>());
      if (!parsed)
        throw Error(ErrorCode::invalid_parameter,
                    "unknown measure \"" + m.get<std::string>() + "\"");
      cfg.measures.push_back(m.get<std::string>());
    }
  }
  if (!in.cfg && cfg.measures.empty()) {
    // Foreign estimates with no config: every measure whose prerequisites
    // exist (summarize skips the rest with diagnostics).
    for (auto m : perf::all_measures()) {
      if (m == perf::Measure::rel_precision && cfg.comparator_method_id.empty())
        continue;
      cfg.measures.push_back(perf::measure_name(m));
    }
  }
  return cfg;
}

report::RenderContext context_from(const AnalysisInputs& in, const StudyConfig& cfg) {
  report::RenderContext ctx;
  ctx.alpha = cfg.alpha;
  if (in.overrides.contains("estimand"))
    ctx.estimand_id = in.overrides["estimand"].get<std::string>();
  for (const auto& inst : in.dgms) {
    ctx.dgm_order.push_back(inst.id);
    std::string label;
    for (const auto& [name, level] : inst.factors) {
      if (!label.empty()) label += ", ";
      label += name + "=" + svg::num(level);
    }
    if (!label.empty()) ctx.dgm_labels[inst.id] = label;
  }
  if (in.cfg)
    for (const auto& m : in.cfg->methods) ctx.method_order.push_back(m.id);
  const std::string estimand =
      !ctx.estimand_id.empty()
          ? ctx.estimand_id
          : (in.estimates.rows.empty() ? std::string()
                                       : in.estimates.rows.front().estimand_id);
  for (const auto& [key, value] : in.truth)
    if (key.second == estimand) ctx.true_theta[key.first] = value;
  return ctx;
}

}  // namespace

extern "C" {

const char* simh_version(void) { return "1.0.0"; }

const char* simh_last_error(void) { return g_last_error.c_str(); }

simh_status simh_study_open(const char* config_path, simh_study** out) {
  return guarded([&] {
    require(config_path && out, "config_path and out must not be null");
    auto study = std::make_unique<simh_study>();
    study->cfg = config_from_file(config_path);
    *out = study.release();
  });
}

simh_status simh_study_from_json(const char* json_text, simh_study** out) {
  return guarded([&] {
    require(json_text && out, "json_text and out must not be null");
    auto study = std::make_unique<simh_study>();
    study->cfg = config_from_json(json_text);
    *out = study.release();
  });
}

simh_status simh_study_builtin(const char* example_name, simh_study** out) {
  return guarded([&] {
    require(example_name && out, "example_name and out must not be null");
    auto study = std::make_unique<simh_study>();
    study->cfg = builtin_example(example_name);
    *out = study.release();
  });
}

void simh_study_free(simh_study* study) { delete study; }

simh_status simh_study_set_u64(simh_study* study, const char* key, uint64_t value) {
  return guarded([&] {
    require(study && key, "study and key must not be null");
    const std::string k = key;
    if (k == "seed") study->cfg.seed = value;
    else if (k == "n_sim") study->cfg.n_sim = value;
    else if (k == "threads") study->options.threads = static_cast<int>(value);
    else if (k == "chunk_size") {
      study->cfg.streams.per_chunk = true;
      study->cfg.streams.chunk_size = value;
    } else if (k == "conditional_coverage_groups")
      study->cfg.conditional_coverage_groups = value;
    else
      throw Error(ErrorCode::invalid_parameter, "unknown u64 key \"" + k + "\"");
  });
}

simh_status simh_study_set_f64(simh_study* study, const char* key, double value) {
  return guarded([&] {
    require(study && key, "study and key must not be null");
    const std::string k = key;
    if (k == "alpha") study->cfg.alpha = value;
    else if (k == "theta0") study->cfg.theta0 = value;
    else if (k == "censor_time") study->cfg.survival_base.censor_time = value;
    else throw Error(ErrorCode::invalid_parameter, "unknown f64 key \"" + k + "\"");
  });
}

simh_status simh_study_set_str(simh_study* study, const char* key, const char* value) {
  return guarded([&] {
    require(study && key && value, "study, key and value must not be null");
    const std::string k = key, v = value;
    if (k == "name") study->cfg.name = v;
    else if (k == "output_dir") study->cfg.output_dir = v;
    else if (k == "comparator") study->cfg.comparator_method_id = v;
    else if (k == "censor_time" && v == "none") study->cfg.survival_base.censor_time.reset();
    else if (k == "streams") {
      if (v == "per_dgm") study->cfg.streams.per_chunk = false;
      else if (v == "per_chunk") study->cfg.streams.per_chunk = true;
      else throw Error(ErrorCode::invalid_parameter, "streams must be per_dgm or per_chunk");
    } else if (k == "export_data") {
      if (v == "all") study->options.export_all_datasets = true;
      else if (v == "none") study->options.export_all_datasets = false;
      else throw Error(ErrorCode::invalid_parameter, "export_data must be all or none");
    } else {
      throw Error(ErrorCode::invalid_parameter, "unknown str key \"" + k + "\"");
    }
  });
}

simh_status simh_study_save_config(const simh_study* study, const char* path) {
  return guarded([&] {
    require(study && path, "study and path must not be null");
    csv::write_text_file(path, config_to_json(study->cfg));
  });
}

simh_status simh_study_get_output_dir(const simh_study* study, char* buf,
                                      uint64_t buflen) {
  return guarded([&] {
    require(study && buf && buflen > 0, "study and buf must not be null");
    const std::string& dir = study->cfg.output_dir;
    if (dir.size() + 1 > buflen)
      throw Error(ErrorCode::invalid_parameter, "buffer too small for output dir");
    std::memcpy(buf, dir.c_str(), dir.size() + 1);
  });
}

simh_status simh_study_run(simh_study* study, const char* out_dir, int analyze) {
  return guarded([&] {
    require(study && out_dir, "study and out_dir must not be null");
    run_and_write(study, out_dir, analyze != 0, false, 0);
  });
}

simh_status simh_study_continue(simh_study* study, const char* out_dir,
                                uint64_t extra, int analyze) {
  return guarded([&] {
    require(study && out_dir, "study and out_dir must not be null");
    run_and_write(study, out_dir, analyze != 0, true, extra);
  });
}

simh_status simh_study_rerun(simh_study* study, const char* out_dir,
                             const char* states_csv, const char* dgm_id,
                             uint64_t repetition) {
  return guarded([&] {
    require(study && out_dir && states_csv && dgm_id,
            "study, out_dir, states_csv and dgm_id must not be null");
    const StatesData states = states_from_csv(csv::read_text_file(states_csv));
    const auto result = engine::rerun_repetition(study->cfg, states, dgm_id, repetition);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::io_error, std::string("cannot create ") + out_dir);
    const std::string stem =
        "rerun_dgm" + result.dgm_id + "_rep" + std::to_string(result.repetition);
    csv::write_text_file((fs::path(out_dir) / (stem + ".csv")).string(),
                         result.dataset_csv);
    EstimatesData rows;
    rows.rows = result.rows;
    csv::write_text_file((fs::path(out_dir) / (stem + "_estimates.csv")).string(),
                         estimates_to_csv(rows));
  });
}

simh_status simh_study_true_theta(simh_study* study, const char* dgm_id,
                                  uint64_t big_n, int64_t stream_id,
                                  const char* method_id, double* out_value) {
  return guarded([&] {
    require(study && dgm_id && out_value, "study, dgm_id and out_value must not be null");
    std::optional<std::uint64_t> stream;
    if (stream_id >= 0) stream = static_cast<std::uint64_t>(stream_id);
    *out_value = engine::estimate_true_theta(study->cfg, dgm_id, big_n, stream,
                                             method_id ? method_id : "");
  });
}

simh_status simh_analyze_file(const char* estimates_csv_path, const char* config_path,
                              const char* overrides_json, const char* out_dir) {
  return guarded([&] {
    require(estimates_csv_path && out_dir,
            "estimates_csv_path and out_dir must not be null");
    AnalysisInputs in = load_inputs(estimates_csv_path, config_path, overrides_json);
    const StudyConfig cfg = analysis_config(in);
    write_analysis_artifacts(cfg, in.dgms, in.estimates, in.truth, out_dir);
  });
}

simh_status simh_plot(const char* kind, const char* estimates_csv_path,
                      const char* perf_csv_path, const char* config_path,
                      const char* overrides_json, const char* out_dir) {
  return guarded([&] {
    require(kind && out_dir, "kind and out_dir must not be null");
    AnalysisInputs in = load_inputs(estimates_csv_path, config_path, overrides_json);
    const StudyConfig cfg = analysis_config(in);
    const report::RenderContext ctx = context_from(in, cfg);

    perf::PerfResult perf_result;
    if (perf_csv_path && *perf_csv_path)
      perf_result = perf::perf_from_csv(csv::read_text_file(perf_csv_path));

    const std::string k = kind;
    report::Figure figure;
    std::string stem = k;
    std::replace(stem.begin(), stem.end(), '-', '_');
    if (k == "zip") {
      const bool zoom = in.overrides.value("zoom", false);
      figure = report::render_zip_plot(in.estimates, ctx, zoom);
    } else if (k == "lollipop") {
      std::vector<perf::Measure> measures;
      for (const auto& name : cfg.measures) {
        const auto m = perf::measure_from_name(name);
        if (m) measures.push_back(*m);
      }
      figure = report::render_lollipop(perf_result, measures, ctx);
    } else if (k == "nested-loop" || k == "nested_loop") {
      std::vector<std::pair<std::string, dgm::FactorAssignment>> dgm_factors;
      for (const auto& inst : in.dgms) dgm_factors.emplace_back(inst.id, inst.factors);
      std::vector<std::string> factor_order;
      if (in.overrides.contains("factor_order"))
        for (const auto& f : in.overrides["factor_order"])
          factor_order.push_back(f.get<std::string>());
      perf::Measure measure = perf::Measure::bias;
      if (in.overrides.contains("measure")) {
        const auto m = perf::measure_from_name(in.overrides["measure"].get<std::string>());
        if (!m) throw Error(ErrorCode::invalid_parameter, "unknown measure override");
        measure = *m;
      } else if (!perf_result.estimates.empty()) {
        measure = perf_result.estimates.front().measure;
      }
      figure = report::render_nested_loop(perf_result, measure, dgm_factors,
                                          factor_order, ctx);
    } else if (k == "strip") {
      figure = report::render_strip(in.estimates, ctx);
    } else if (k == "scatter-matrix" || k == "scatter_matrix") {
      std::string dgm = in.overrides.value("dgm", "");
      if (dgm.empty() && !in.estimates.rows.empty()) dgm = in.estimates.rows.front().dgm_id;
      figure = report::render_scatter_matrix(in.estimates, dgm, ctx);
      stem += "_dgm" + dgm;
    } else if (k == "diff-vs-mean" || k == "diff_vs_mean") {
      std::string comparator = in.overrides.value("comparator", cfg.comparator_method_id);
      if (comparator.empty())
        throw Error(ErrorCode::invalid_parameter,
                    "diff-vs-mean needs a comparator (config or override)");
      figure = report::render_diff_vs_mean(in.estimates, comparator, ctx);
    } else {
      throw Error(ErrorCode::invalid_parameter, "unknown figure kind \"" + k + "\"");
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::io_error, std::string("cannot create ") + out_dir);
    csv::write_text_file((fs::path(out_dir) / (stem + ".svg")).string(), figure.svg);
    csv::write_text_file((fs::path(out_dir) / (stem + ".csv")).string(),
                         figure.sidecar_csv);
  });
}

simh_status simh_required_nsim(const char* kind, double expected, double target_mcse,
                               double var_theta, uint64_t* out_nsim) {
  return guarded([&] {
    require(kind && out_nsim, "kind and out_nsim must not be null");
    const std::string k = kind;
    if (k == "coverage" || k == "power" || k == "coverage_or_power") {
      *out_nsim = perf::required_nsim(perf::NsimKind::coverage_or_power, expected,
                                      target_mcse);
    } else if (k == "bias") {
      *out_nsim =
          perf::required_nsim(perf::NsimKind::bias, expected, target_mcse, var_theta);
    } else {
      throw Error(ErrorCode::invalid_parameter,
                  "nsim kind must be coverage, power or bias");
    }
  });
}

simh_status simh_coverage_under_bias(double bias_over_se, double alpha,
                                     double* out_coverage) {
  return guarded([&] {
    require(out_coverage, "out_coverage must not be null");
    *out_coverage = perf::coverage_under_bias(bias_over_se, alpha);
  });
}

}  // extern "C"
