// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end for the simharness shared library. Data files go
// to the output directory; progress and diagnostics go to standard error.
#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

#include "simharness.h"

namespace {

using nlohmann::json;

int exit_code(simh_status status) {
  switch (status) {
    case SIMH_OK: return 0;
    case SIMH_ERR_IO: return 2;
    default: return 1;
  }
}

int fail(simh_status status) {
  std::fprintf(stderr, "error: %s\n", simh_last_error());
  return exit_code(status);
}

struct StudyHandle {
  simh_study* ptr = nullptr;
  ~StudyHandle() { simh_study_free(ptr); }
};

struct Overrides {
  std::uint64_t seed = 0, n_sim = 0, threads = 0, chunk_size = 0;
  bool has_seed = false, has_n_sim = false;
  std::string censor_time, streams, comparator;
  bool export_data = false;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Override the study seed")
        ->each([this](const std::string&) { has_seed = true; });
    cmd->add_option("--n-sim", n_sim, "Override the number of repetitions")
        ->each([this](const std::string&) { has_n_sim = true; });
    cmd->add_option("--threads", threads, "Worker thread cap (default 1)");
    cmd->add_option("--chunk-size", chunk_size,
                    "Repetitions per random-number stream (enables per-chunk streams)");
    cmd->add_option("--censor-time", censor_time,
                    "Override administrative censoring time (number or \"none\")");
    cmd->add_option("--streams", streams, "Stream policy: per_dgm or per_chunk");
    cmd->add_option("--comparator", comparator, "Comparator method id");
    cmd->add_flag("--export-data", export_data, "Export every simulated dataset");
  }

  simh_status apply(simh_study* study) const {
    simh_status s = SIMH_OK;
    auto run = [&s](simh_status r) { if (s == SIMH_OK) s = r; };
    if (has_seed) run(simh_study_set_u64(study, "seed", seed));
    if (has_n_sim) run(simh_study_set_u64(study, "n_sim", n_sim));
    if (threads > 0) run(simh_study_set_u64(study, "threads", threads));
    if (chunk_size > 0) run(simh_study_set_u64(study, "chunk_size", chunk_size));
    if (!censor_time.empty()) {
      if (censor_time == "none") run(simh_study_set_str(study, "censor_time", "none"));
      else run(simh_study_set_f64(study, "censor_time",
                                  std::strtod(censor_time.c_str(), nullptr)));
    }
    if (!streams.empty()) run(simh_study_set_str(study, "streams", streams.c_str()));
    if (!comparator.empty()) run(simh_study_set_str(study, "comparator", comparator.c_str()));
    if (export_data) run(simh_study_set_str(study, "export_data", "all"));
    return s;
  }
};

std::string default_out_dir(const std::string& cli_value, simh_study* study) {
  if (!cli_value.empty()) return cli_value;
  if (study) {
    char buf[4096];
    if (simh_study_get_output_dir(study, buf, sizeof(buf)) == SIMH_OK && buf[0])
      return buf;
  }
  if (const char* env = std::getenv("SIMHARNESS_OUT"); env && *env) return env;
  return "out";
}

// "--true-theta -0.5" or "--true-theta 1=-0.5,2=-0.25"
json parse_true_theta(const std::string& text) {
  if (text.find('=') == std::string::npos) return json(std::strtod(text.c_str(), nullptr));
  json by_dgm = json::object();
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(pos, comma - pos);
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--true-theta", "expected dgm=value");
    by_dgm[item.substr(0, eq)] = std::strtod(item.c_str() + eq + 1, nullptr);
    pos = comma + 1;
  }
  return by_dgm;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simharness: a config-driven Monte Carlo simulation-study harness"};
  app.require_subcommand(1);

  // run ----------------------------------------------------------------
  auto* run_cmd = app.add_subcommand("run", "Run a study from a config file");
  std::string run_config, run_out;
  bool run_analyze = false;
  run_cmd->add_option("--config", run_config, "Study config JSON")->required();
  run_cmd->add_option("--out", run_out, "Output directory");
  run_cmd->add_flag("--analyze", run_analyze, "Also compute performance measures");
  Overrides run_over;
  run_over.add_flags(run_cmd);

  // analyze -------------------------------------------------------------
  auto* an_cmd = app.add_subcommand("analyze", "Estimate performance from an estimates CSV");
  std::string an_estimates, an_config, an_out, an_true_theta, an_measures;
  double an_alpha = -1.0;
  std::string an_comparator;
  std::uint64_t an_groups = 0;
  an_cmd->add_option("estimates", an_estimates, "Estimates CSV path")->required();
  an_cmd->add_option("--config", an_config, "Study config JSON");
  an_cmd->add_option("--out", an_out, "Output directory");
  an_cmd->add_option("--alpha", an_alpha, "Nominal significance level");
  an_cmd->add_option("--comparator", an_comparator, "Comparator method id");
  an_cmd->add_option("--true-theta", an_true_theta, "True value: number or dgm=value,...");
  an_cmd->add_option("--groups", an_groups, "Conditional-coverage groups");
  an_cmd->add_option("--measures", an_measures, "Comma-separated measure names");

  // plot ----------------------------------------------------------------
  auto* plot_cmd = app.add_subcommand("plot", "Render a figure");
  std::string plot_kind, plot_estimates, plot_perf, plot_config, plot_out;
  std::string plot_measure, plot_factor_order, plot_dgm, plot_comparator, plot_true_theta;
  bool plot_zoom = false;
  plot_cmd->add_option("kind", plot_kind,
                       "zip | lollipop | nested-loop | strip | scatter-matrix | diff-vs-mean")
      ->required();
  plot_cmd->add_option("--estimates", plot_estimates, "Estimates CSV path");
  plot_cmd->add_option("--perf", plot_perf, "Performance CSV path");
  plot_cmd->add_option("--config", plot_config, "Study config JSON");
  plot_cmd->add_option("--out", plot_out, "Output directory");
  plot_cmd->add_option("--measure", plot_measure, "Measure for nested-loop plots");
  plot_cmd->add_option("--factor-order", plot_factor_order, "Comma-separated factor names");
  plot_cmd->add_option("--dgm", plot_dgm, "DGM id for scatter-matrix plots");
  plot_cmd->add_option("--comparator", plot_comparator, "Comparator for diff-vs-mean");
  plot_cmd->add_option("--true-theta", plot_true_theta, "True value: number or dgm=value,...");
  plot_cmd->add_flag("--zoom", plot_zoom, "Zip plot: zoom to the top 20% of ranks");

  // nsim ----------------------------------------------------------------
  auto* nsim_cmd = app.add_subcommand("nsim", "Repetitions needed for a target Monte Carlo SE");
  std::string nsim_kind;
  double nsim_expected = 0.0, nsim_mcse = 0.0, nsim_var = 0.0;
  nsim_cmd->add_option("--kind", nsim_kind, "coverage | power | bias")->required();
  nsim_cmd->add_option("--expected", nsim_expected, "Expected coverage/power (percent)");
  nsim_cmd->add_option("--mcse", nsim_mcse, "Target Monte Carlo SE")->required();
  nsim_cmd->add_option("--var-theta", nsim_var, "Var(theta_hat), bias kind only");

  // rerun ---------------------------------------------------------------
  auto* rerun_cmd = app.add_subcommand("rerun", "Reproduce one repetition from stored states");
  std::string rr_config, rr_states, rr_dgm, rr_out;
  std::uint64_t rr_rep = 0;
  rerun_cmd->add_option("--config", rr_config, "Study config JSON")->required();
  rerun_cmd->add_option("--states", rr_states, "States CSV path")->required();
  rerun_cmd->add_option("--dgm", rr_dgm, "DGM id")->required();
  rerun_cmd->add_option("--rep", rr_rep, "Repetition number")->required();
  rerun_cmd->add_option("--out", rr_out, "Output directory");

  // continue ------------------------------------------------------------
  auto* cont_cmd = app.add_subcommand("continue", "Extend a completed run");
  std::string ct_config, ct_out;
  std::uint64_t ct_extra = 0;
  bool ct_analyze = false;
  cont_cmd->add_option("--config", ct_config, "Study config JSON")->required();
  cont_cmd->add_option("--extra", ct_extra, "Additional repetitions per DGM")->required();
  cont_cmd->add_option("--out", ct_out, "Directory holding the completed run");
  cont_cmd->add_flag("--analyze", ct_analyze, "Recompute performance afterwards");
  Overrides ct_over;
  ct_over.add_flags(cont_cmd);

  // example -------------------------------------------------------------
  auto* ex_cmd = app.add_subcommand("example", "Materialise and run a built-in example study");
  std::string ex_name, ex_out;
  ex_cmd->add_option("name", ex_name, "survival | conditional-coverage")->required();
  ex_cmd->add_option("--out", ex_out, "Output directory");
  Overrides ex_over;
  ex_over.add_flags(ex_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (run_cmd->parsed() || ex_cmd->parsed()) {
    const bool is_example = ex_cmd->parsed();
    StudyHandle study;
    simh_status s = is_example ? simh_study_builtin(ex_name.c_str(), &study.ptr)
                               : simh_study_open(run_config.c_str(), &study.ptr);
    if (s != SIMH_OK) return fail(s);
    s = (is_example ? ex_over : run_over).apply(study.ptr);
    if (s != SIMH_OK) return fail(s);
    const std::string out =
        default_out_dir(is_example ? ex_out : run_out, study.ptr);
    if (is_example) {
      const std::string cfg_path = out + "/config.json";
      std::fprintf(stderr, "writing example config to %s\n", cfg_path.c_str());
      // The directory may not exist yet; run creates it, so save after.
      s = simh_study_run(study.ptr, out.c_str(), 1);
      if (s != SIMH_OK) return fail(s);
      s = simh_study_save_config(study.ptr, cfg_path.c_str());
      if (s != SIMH_OK) return fail(s);
    } else {
      std::fprintf(stderr, "running study into %s\n", out.c_str());
      s = simh_study_run(study.ptr, out.c_str(), run_analyze ? 1 : 0);
      if (s != SIMH_OK) return fail(s);
    }
    return 0;
  }

  if (an_cmd->parsed()) {
    json overrides = json::object();
    if (an_alpha >= 0.0) overrides["alpha"] = an_alpha;
    if (!an_comparator.empty()) overrides["comparator"] = an_comparator;
    if (an_groups > 0) overrides["conditional_groups"] = an_groups;
    if (!an_true_theta.empty()) {
      try {
        overrides["true_theta"] = parse_true_theta(an_true_theta);
      } catch (const CLI::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
      }
    }
    if (!an_measures.empty()) {
      json arr = json::array();
      std::size_t pos = 0;
      while (pos <= an_measures.size()) {
        std::size_t comma = an_measures.find(',', pos);
        if (comma == std::string::npos) comma = an_measures.size();
        arr.push_back(an_measures.substr(pos, comma - pos));
        pos = comma + 1;
      }
      overrides["measures"] = arr;
    }
    const std::string out = default_out_dir(an_out, nullptr);
    const std::string blob = overrides.dump();
    const simh_status s = simh_analyze_file(
        an_estimates.c_str(), an_config.empty() ? nullptr : an_config.c_str(),
        blob == "{}" ? nullptr : blob.c_str(), out.c_str());
    if (s != SIMH_OK) return fail(s);
    // Skipped measures (missing columns, too few repetitions) are warnings.
    if (FILE* log = std::fopen((out + "/analysis_log.txt").c_str(), "r")) {
      char line[512];
      while (std::fgets(line, sizeof(line), log))
        std::fprintf(stderr, "warning: %s", line);
      std::fclose(log);
    }
    std::fprintf(stderr, "performance written to %s/performance.csv\n", out.c_str());
    return 0;
  }

  if (plot_cmd->parsed()) {
    json overrides = json::object();
    if (!plot_measure.empty()) overrides["measure"] = plot_measure;
    if (!plot_dgm.empty()) overrides["dgm"] = plot_dgm;
    if (!plot_comparator.empty()) overrides["comparator"] = plot_comparator;
    if (plot_zoom) overrides["zoom"] = true;
    if (!plot_true_theta.empty()) overrides["true_theta"] = parse_true_theta(plot_true_theta);
    if (!plot_factor_order.empty()) {
      json arr = json::array();
      std::size_t pos = 0;
      while (pos <= plot_factor_order.size()) {
        std::size_t comma = plot_factor_order.find(',', pos);
        if (comma == std::string::npos) comma = plot_factor_order.size();
        arr.push_back(plot_factor_order.substr(pos, comma - pos));
        pos = comma + 1;
      }
      overrides["factor_order"] = arr;
    }
    const std::string out = default_out_dir(plot_out, nullptr);
    const std::string blob = overrides.dump();
    const simh_status s = simh_plot(
        plot_kind.c_str(), plot_estimates.empty() ? nullptr : plot_estimates.c_str(),
        plot_perf.empty() ? nullptr : plot_perf.c_str(),
        plot_config.empty() ? nullptr : plot_config.c_str(),
        blob == "{}" ? nullptr : blob.c_str(), out.c_str());
    if (s != SIMH_OK) return fail(s);
    return 0;
  }

  if (nsim_cmd->parsed()) {
    uint64_t n = 0;
    const simh_status s =
        simh_required_nsim(nsim_kind.c_str(), nsim_kind == "bias" ? 0.0 : nsim_expected,
                           nsim_mcse, nsim_var, &n);
    if (s != SIMH_OK) return fail(s);
    std::printf("%llu\n", static_cast<unsigned long long>(n));
    return 0;
  }

  if (rerun_cmd->parsed()) {
    StudyHandle study;
    simh_status s = simh_study_open(rr_config.c_str(), &study.ptr);
    if (s != SIMH_OK) return fail(s);
    const std::string out = default_out_dir(rr_out, study.ptr);
    s = simh_study_rerun(study.ptr, out.c_str(), rr_states.c_str(), rr_dgm.c_str(), rr_rep);
    if (s != SIMH_OK) return fail(s);
    std::fprintf(stderr, "repetition %llu of dgm %s rerun into %s\n",
                 static_cast<unsigned long long>(rr_rep), rr_dgm.c_str(), out.c_str());
    return 0;
  }

  if (cont_cmd->parsed()) {
    StudyHandle study;
    simh_status s = simh_study_open(ct_config.c_str(), &study.ptr);
    if (s != SIMH_OK) return fail(s);
    s = ct_over.apply(study.ptr);
    if (s != SIMH_OK) return fail(s);
    const std::string out = default_out_dir(ct_out, study.ptr);
    s = simh_study_continue(study.ptr, out.c_str(), ct_extra, ct_analyze ? 1 : 0);
    if (s != SIMH_OK) return fail(s);
    return 0;
  }

  return 1;
}
