// SPDX-License-Identifier: Apache-2.0
#include "simharness/study_config.hpp"

#include <json.hpp>
#include <set>

#include "simharness/csv.hpp"
#include "simharness/errors.hpp"
#include "simharness/mathutil.hpp"
#include "simharness/perf.hpp"

namespace simharness {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) {
  throw Error(ErrorCode::config_error, msg);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) bad("unknown key \"" + key + "\" in " + where);
}

double require_number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) bad("missing key \"" + key + "\" in " + where);
  if (!obj[key].is_number()) bad("key \"" + key + "\" in " + where + " must be a number");
  return obj[key].get<double>();
}

std::string require_string(const json& obj, const std::string& key,
                           const std::string& where) {
  if (!obj.contains(key)) bad("missing key \"" + key + "\" in " + where);
  if (!obj[key].is_string()) bad("key \"" + key + "\" in " + where + " must be a string");
  return obj[key].get<std::string>();
}

void check_id(const std::string& id, const std::string& what) {
  if (id.empty()) bad(what + " must not be empty");
  for (char c : id)
    if (c == ',' || c == '"' || c == '\n' || c == '\r')
      bad(what + " \"" + id + "\" contains characters not allowed in CSV fields");
}

dgm::FactorGrid parse_grid(const json& j) {
  reject_unknown_keys(j, {"factors", "design", "base_case", "cases"}, "dgm grid");
  dgm::FactorGrid grid;
  if (!j.contains("factors") || !j["factors"].is_array()) bad("dgm grid needs a factors array");
  for (const auto& f : j["factors"]) {
    reject_unknown_keys(f, {"name", "levels"}, "factor");
    dgm::FactorGrid::Factor factor;
    factor.name = require_string(f, "name", "factor");
    if (!f.contains("levels") || !f["levels"].is_array()) bad("factor needs a levels array");
    for (const auto& l : f["levels"]) {
      if (!l.is_number()) bad("factor levels must be numbers");
      factor.levels.push_back(l.get<double>());
    }
    grid.factors.push_back(std::move(factor));
  }
  const std::string design = j.contains("design")
                                 ? require_string(j, "design", "dgm grid")
                                 : "full_factorial";
  if (design == "full_factorial") {
    grid.design = dgm::GridDesign::full_factorial;
  } else if (design == "one_at_a_time") {
    grid.design = dgm::GridDesign::one_at_a_time;
    if (!j.contains("base_case") || !j["base_case"].is_array())
      throw Error(ErrorCode::missing_base_case,
                  "one_at_a_time design requires a base_case array");
    for (const auto& b : j["base_case"])
      grid.base_case.push_back(b.get<std::size_t>());
  } else if (design == "explicit_list") {
    grid.design = dgm::GridDesign::explicit_list;
    if (!j.contains("cases") || !j["cases"].is_array())
      bad("explicit_list design requires a cases array");
    for (const auto& c : j["cases"]) {
      std::vector<double> levels;
      for (const auto& v : c) levels.push_back(v.get<double>());
      grid.explicit_cases.push_back(std::move(levels));
    }
  } else {
    bad("unknown grid design \"" + design + "\"");
  }
  return grid;
}

json grid_to_json(const dgm::FactorGrid& grid) {
  json j;
  j["factors"] = json::array();
  for (const auto& f : grid.factors)
    j["factors"].push_back({{"name", f.name}, {"levels", f.levels}});
  switch (grid.design) {
    case dgm::GridDesign::full_factorial: j["design"] = "full_factorial"; break;
    case dgm::GridDesign::one_at_a_time:
      j["design"] = "one_at_a_time";
      j["base_case"] = grid.base_case;
      break;
    case dgm::GridDesign::explicit_list:
      j["design"] = "explicit_list";
      j["cases"] = grid.explicit_cases;
      break;
  }
  return j;
}

MethodKind method_kind_from_name(const std::string& name) {
  if (name == "exponential_ph") return MethodKind::exponential_ph;
  if (name == "weibull_ph") return MethodKind::weibull_ph;
  if (name == "cox_ph") return MethodKind::cox_ph;
  if (name == "normal_mean_t") return MethodKind::normal_mean_t;
  bad("unknown method kind \"" + name + "\"");
}

}  // namespace

const char* mechanism_kind_name(MechanismKind k) {
  switch (k) {
    case MechanismKind::survival: return "survival";
    case MechanismKind::normal: return "normal";
    case MechanismKind::resample: return "resample";
  }
  return "survival";
}

const char* method_kind_name(MethodKind k) {
  switch (k) {
    case MethodKind::exponential_ph: return "exponential_ph";
    case MethodKind::weibull_ph: return "weibull_ph";
    case MethodKind::cox_ph: return "cox_ph";
    case MethodKind::normal_mean_t: return "normal_mean_t";
  }
  return "exponential_ph";
}

void StudyConfig::validate() const {
  if (n_sim < 1) bad("n_sim must be at least 1");
  if (methods.empty()) bad("at least one method is required");
  if (estimands.empty()) bad("at least one estimand is required");
  std::set<std::string> method_ids;
  for (const auto& m : methods) {
    check_id(m.id, "method id");
    if (!method_ids.insert(m.id).second) bad("duplicate method id \"" + m.id + "\"");
    const bool survival_method = m.kind != MethodKind::normal_mean_t;
    const bool survival_data = mechanism == MechanismKind::survival;
    if (survival_method != survival_data)
      bad("method \"" + m.id + "\" cannot be applied to a " +
          std::string(mechanism_kind_name(mechanism)) + " mechanism");
    if (!(m.tolerance > 0.0)) bad("method tolerance must be positive");
    if (m.max_iterations < 1) bad("method max_iterations must be at least 1");
  }
  std::set<std::string> estimand_ids;
  for (const auto& e : estimands) {
    check_id(e.id, "estimand id");
    if (!estimand_ids.insert(e.id).second) bad("duplicate estimand id \"" + e.id + "\"");
  }
  for (const auto& m : methods)
    if (!m.estimand_id.empty() && !estimand_ids.count(m.estimand_id))
      bad("method \"" + m.id + "\" names unknown estimand \"" + m.estimand_id + "\"");
  if (!(alpha > 0.0 && alpha < 1.0)) bad("alpha must lie in (0,1)");
  if (!comparator_method_id.empty() && !method_ids.count(comparator_method_id))
    bad("comparator \"" + comparator_method_id + "\" is not a method id");
  for (const auto& name : measures) {
    const auto m = perf::measure_from_name(name);
    if (!m) bad("unknown measure \"" + name + "\"");
    if (*m == perf::Measure::rel_precision && comparator_method_id.empty())
      bad("measure rel_precision requires a comparator method");
  }
  if (streams.per_chunk && streams.chunk_size < 1)
    bad("per-chunk streams require chunk_size >= 1");
  if (mechanism == MechanismKind::resample) {
    if (resample_source_csv.empty()) bad("resample mechanism needs a source file");
    if (resample_n_obs == 0) bad("resample mechanism needs n_obs >= 1");
  }
  // Mechanism base specs are validated at expansion, after factors apply.
}

std::vector<DgmInstance> expand_dgms(const StudyConfig& cfg) {
  std::vector<dgm::FactorAssignment> points;
  if (cfg.grid) {
    points = dgm::expand_grid(*cfg.grid);
  } else {
    points.push_back({});  // single design point, base spec as-is
  }

  std::vector<DgmInstance> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    DgmInstance inst;
    inst.id = std::to_string(i + 1);
    inst.factors = points[i];
    inst.mechanism = cfg.mechanism;
    inst.survival = cfg.survival_base;
    inst.normal = cfg.normal_base;
    inst.resample_n_obs = cfg.resample_n_obs;
    for (const auto& [name, level] : points[i]) {
      if (cfg.mechanism == MechanismKind::survival) {
        if (name == "n_obs") inst.survival.n_obs = static_cast<std::size_t>(level);
        else if (name == "lambda") inst.survival.lambda = level;
        else if (name == "gamma") inst.survival.gamma = level;
        else if (name == "theta") inst.survival.theta = level;
        else if (name == "allocation_p") inst.survival.allocation_p = level;
        else if (name == "censor_time") {
          if (level < 0) inst.survival.censor_time.reset();
          else inst.survival.censor_time = level;
        } else bad("unknown survival factor \"" + name + "\"");
      } else if (cfg.mechanism == MechanismKind::normal) {
        if (name == "n_obs") inst.normal.n_obs = static_cast<std::size_t>(level);
        else if (name == "mu") inst.normal.mu = level;
        else if (name == "sigma") inst.normal.sigma = level;
        else bad("unknown normal factor \"" + name + "\"");
      } else {
        if (name == "n_obs") inst.resample_n_obs = static_cast<std::size_t>(level);
        else bad("unknown resample factor \"" + name + "\"");
      }
    }
    if (cfg.mechanism == MechanismKind::survival) inst.survival.validate();
    if (cfg.mechanism == MechanismKind::normal) inst.normal.validate();
    out.push_back(std::move(inst));
  }
  return out;
}

StudyConfig config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("config root must be a JSON object");
  reject_unknown_keys(j,
                      {"name", "seed", "n_sim", "dgm", "methods", "estimands",
                       "targets", "measures", "comparator", "streams", "outputs",
                       "conditional_coverage_groups", "fault_injection"},
                      "config");

  StudyConfig cfg;
  if (j.contains("name")) cfg.name = require_string(j, "name", "config");
  cfg.seed = static_cast<std::uint64_t>(require_number(j, "seed", "config"));
  cfg.n_sim = static_cast<std::uint64_t>(require_number(j, "n_sim", "config"));

  if (!j.contains("dgm") || !j["dgm"].is_object()) bad("config needs a dgm object");
  const json& dj = j["dgm"];
  reject_unknown_keys(dj, {"kind", "base", "factors", "design", "base_case", "cases"},
                      "dgm");
  const std::string kind = require_string(dj, "kind", "dgm");
  if (kind == "survival") cfg.mechanism = MechanismKind::survival;
  else if (kind == "normal") cfg.mechanism = MechanismKind::normal;
  else if (kind == "resample") cfg.mechanism = MechanismKind::resample;
  else bad("unknown dgm kind \"" + kind + "\"");

  if (!dj.contains("base") || !dj["base"].is_object()) bad("dgm needs a base object");
  const json& base = dj["base"];
  if (cfg.mechanism == MechanismKind::survival) {
    reject_unknown_keys(
        base, {"n_obs", "lambda", "gamma", "theta", "allocation_p", "censor_time"},
        "dgm base");
    cfg.survival_base.n_obs =
        static_cast<std::size_t>(require_number(base, "n_obs", "dgm base"));
    cfg.survival_base.lambda = require_number(base, "lambda", "dgm base");
    cfg.survival_base.gamma = require_number(base, "gamma", "dgm base");
    cfg.survival_base.theta = require_number(base, "theta", "dgm base");
    if (base.contains("allocation_p"))
      cfg.survival_base.allocation_p = base["allocation_p"].get<double>();
    if (base.contains("censor_time")) {
      if (base["censor_time"].is_string()) {
        if (base["censor_time"] != "none") bad("censor_time must be a number or \"none\"");
        cfg.survival_base.censor_time.reset();
      } else {
        cfg.survival_base.censor_time = base["censor_time"].get<double>();
      }
    }
  } else if (cfg.mechanism == MechanismKind::normal) {
    reject_unknown_keys(base, {"n_obs", "mu", "sigma"}, "dgm base");
    cfg.normal_base.n_obs =
        static_cast<std::size_t>(require_number(base, "n_obs", "dgm base"));
    cfg.normal_base.mu = require_number(base, "mu", "dgm base");
    cfg.normal_base.sigma = require_number(base, "sigma", "dgm base");
  } else {
    reject_unknown_keys(base, {"n_obs", "source_csv"}, "dgm base");
    cfg.resample_n_obs =
        static_cast<std::size_t>(require_number(base, "n_obs", "dgm base"));
    cfg.resample_source_csv = require_string(base, "source_csv", "dgm base");
  }
  if (dj.contains("factors")) {
    json grid_json;
    grid_json["factors"] = dj["factors"];
    if (dj.contains("design")) grid_json["design"] = dj["design"];
    if (dj.contains("base_case")) grid_json["base_case"] = dj["base_case"];
    if (dj.contains("cases")) grid_json["cases"] = dj["cases"];
    cfg.grid = parse_grid(grid_json);
  } else if (dj.contains("design") || dj.contains("base_case") || dj.contains("cases")) {
    bad("dgm design options require a factors array");
  }

  if (!j.contains("methods") || !j["methods"].is_array()) bad("config needs a methods array");
  for (const auto& mj : j["methods"]) {
    reject_unknown_keys(mj, {"id", "kind", "estimand", "tolerance", "max_iterations"},
                        "method");
    MethodSpec m;
    m.id = require_string(mj, "id", "method");
    m.kind = method_kind_from_name(require_string(mj, "kind", "method"));
    if (mj.contains("estimand")) m.estimand_id = mj["estimand"].get<std::string>();
    if (mj.contains("tolerance")) m.tolerance = mj["tolerance"].get<double>();
    if (mj.contains("max_iterations")) m.max_iterations = mj["max_iterations"].get<int>();
    cfg.methods.push_back(std::move(m));
  }

  if (!j.contains("estimands") || !j["estimands"].is_array())
    bad("config needs an estimands array");
  for (const auto& ej : j["estimands"]) {
    reject_unknown_keys(ej, {"id", "true_value", "big_n", "truth_method"}, "estimand");
    EstimandSpec e;
    e.id = require_string(ej, "id", "estimand");
    if (ej.contains("true_value")) {
      const json& tv = ej["true_value"];
      if (tv.is_number()) {
        e.rule = EstimandSpec::TruthRule::fixed;
        e.fixed_value = tv.get<double>();
      } else if (tv.is_string() && tv == "from_dgm") {
        e.rule = EstimandSpec::TruthRule::from_dgm;
      } else if (tv.is_string() && tv == "estimate_by_simulation") {
        e.rule = EstimandSpec::TruthRule::estimate_by_simulation;
      } else {
        bad("estimand true_value must be a number, \"from_dgm\" or "
            "\"estimate_by_simulation\"");
      }
    }
    if (ej.contains("big_n")) e.big_n = ej["big_n"].get<std::uint64_t>();
    if (ej.contains("truth_method")) e.truth_method_id = ej["truth_method"].get<std::string>();
    cfg.estimands.push_back(std::move(e));
  }
  // A method with no explicit estimand targets the study's first one.
  for (auto& m : cfg.methods)
    if (m.estimand_id.empty()) m.estimand_id = cfg.estimands.front().id;

  if (j.contains("targets")) {
    reject_unknown_keys(j["targets"], {"theta0", "alpha"}, "targets");
    if (j["targets"].contains("theta0")) cfg.theta0 = j["targets"]["theta0"].get<double>();
    if (j["targets"].contains("alpha")) cfg.alpha = j["targets"]["alpha"].get<double>();
  }
  if (j.contains("measures")) {
    if (j["measures"].is_string() && j["measures"] == "all") {
      for (auto m : perf::all_measures()) cfg.measures.push_back(perf::measure_name(m));
    } else if (j["measures"].is_array()) {
      for (const auto& m : j["measures"]) cfg.measures.push_back(m.get<std::string>());
    } else {
      bad("measures must be \"all\" or an array of measure names");
    }
  }
  if (j.contains("comparator")) cfg.comparator_method_id = j["comparator"].get<std::string>();
  if (j.contains("streams")) {
    reject_unknown_keys(j["streams"], {"policy", "chunk_size"}, "streams");
    const std::string policy = require_string(j["streams"], "policy", "streams");
    if (policy == "per_dgm") {
      cfg.streams.per_chunk = false;
    } else if (policy == "per_chunk") {
      cfg.streams.per_chunk = true;
      cfg.streams.chunk_size = static_cast<std::uint64_t>(
          require_number(j["streams"], "chunk_size", "streams"));
    } else {
      bad("stream policy must be per_dgm or per_chunk");
    }
  }
  if (j.contains("outputs")) {
    reject_unknown_keys(j["outputs"], {"dir"}, "outputs");
    if (j["outputs"].contains("dir")) cfg.output_dir = j["outputs"]["dir"].get<std::string>();
  }
  if (j.contains("conditional_coverage_groups"))
    cfg.conditional_coverage_groups = j["conditional_coverage_groups"].get<std::size_t>();
  if (j.contains("fault_injection")) {
    for (const auto& fj : j["fault_injection"]) {
      reject_unknown_keys(fj, {"dgm_id", "repetition", "method_id"}, "fault_injection");
      FaultInjection f;
      f.dgm_id = require_string(fj, "dgm_id", "fault_injection");
      f.repetition = static_cast<std::uint64_t>(require_number(fj, "repetition", "fault_injection"));
      f.method_id = require_string(fj, "method_id", "fault_injection");
      cfg.fault_injections.push_back(std::move(f));
    }
  }

  cfg.validate();
  return cfg;
}

StudyConfig config_from_file(const std::string& path) {
  return config_from_json(csv::read_text_file(path));
}

std::string config_to_json(const StudyConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  j["n_sim"] = cfg.n_sim;
  json dj;
  dj["kind"] = mechanism_kind_name(cfg.mechanism);
  json base;
  if (cfg.mechanism == MechanismKind::survival) {
    base["n_obs"] = cfg.survival_base.n_obs;
    base["lambda"] = cfg.survival_base.lambda;
    base["gamma"] = cfg.survival_base.gamma;
    base["theta"] = cfg.survival_base.theta;
    base["allocation_p"] = cfg.survival_base.allocation_p;
    if (cfg.survival_base.censor_time)
      base["censor_time"] = *cfg.survival_base.censor_time;
    else
      base["censor_time"] = "none";
  } else if (cfg.mechanism == MechanismKind::normal) {
    base["n_obs"] = cfg.normal_base.n_obs;
    base["mu"] = cfg.normal_base.mu;
    base["sigma"] = cfg.normal_base.sigma;
  } else {
    base["n_obs"] = cfg.resample_n_obs;
    base["source_csv"] = cfg.resample_source_csv;
  }
  dj["base"] = base;
  if (cfg.grid) {
    json gj = grid_to_json(*cfg.grid);
    dj["factors"] = gj["factors"];
    dj["design"] = gj["design"];
    if (gj.contains("base_case")) dj["base_case"] = gj["base_case"];
    if (gj.contains("cases")) dj["cases"] = gj["cases"];
  }
  j["dgm"] = dj;
  j["methods"] = json::array();
  for (const auto& m : cfg.methods) {
    json mj{{"id", m.id}, {"kind", method_kind_name(m.kind)}, {"estimand", m.estimand_id}};
    mj["tolerance"] = m.tolerance;
    mj["max_iterations"] = m.max_iterations;
    j["methods"].push_back(mj);
  }
  j["estimands"] = json::array();
  for (const auto& e : cfg.estimands) {
    json ej{{"id", e.id}};
    switch (e.rule) {
      case EstimandSpec::TruthRule::from_dgm: ej["true_value"] = "from_dgm"; break;
      case EstimandSpec::TruthRule::fixed: ej["true_value"] = e.fixed_value; break;
      case EstimandSpec::TruthRule::estimate_by_simulation:
        ej["true_value"] = "estimate_by_simulation";
        ej["big_n"] = e.big_n;
        if (!e.truth_method_id.empty()) ej["truth_method"] = e.truth_method_id;
        break;
    }
    j["estimands"].push_back(ej);
  }
  j["targets"] = {{"theta0", cfg.theta0}, {"alpha", cfg.alpha}};
  if (!cfg.measures.empty()) j["measures"] = cfg.measures;
  if (!cfg.comparator_method_id.empty()) j["comparator"] = cfg.comparator_method_id;
  if (cfg.streams.per_chunk)
    j["streams"] = {{"policy", "per_chunk"}, {"chunk_size", cfg.streams.chunk_size}};
  else
    j["streams"] = {{"policy", "per_dgm"}};
  if (!cfg.output_dir.empty()) j["outputs"] = {{"dir", cfg.output_dir}};
  if (cfg.conditional_coverage_groups > 0)
    j["conditional_coverage_groups"] = cfg.conditional_coverage_groups;
  if (!cfg.fault_injections.empty()) {
    j["fault_injection"] = json::array();
    for (const auto& f : cfg.fault_injections)
      j["fault_injection"].push_back({{"dgm_id", f.dgm_id},
                                      {"repetition", f.repetition},
                                      {"method_id", f.method_id}});
  }
  return j.dump(2) + "\n";
}

std::string config_digest(const StudyConfig& cfg) {
  const std::string canonical = config_to_json(cfg);
  const std::uint64_t h = mathutil::fnv1a64(canonical.data(), canonical.size());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

StudyConfig builtin_example(const std::string& name) {
  if (name == "survival") {
    StudyConfig cfg;
    cfg.name = "survival-trial-example";
    cfg.seed = 72789;
    cfg.n_sim = 1600;
    cfg.mechanism = MechanismKind::survival;
    cfg.survival_base = {500, 0.1, 1.0, -0.5, 0.5, 3.0};
    dgm::FactorGrid grid;
    grid.factors.push_back({"gamma", {1.0, 1.5}});
    grid.design = dgm::GridDesign::full_factorial;
    cfg.grid = grid;
    cfg.methods = {{"exponential", MethodKind::exponential_ph, "theta", 1e-8, 50},
                   {"weibull", MethodKind::weibull_ph, "theta", 1e-8, 50},
                   {"cox", MethodKind::cox_ph, "theta", 1e-8, 50}};
    cfg.estimands = {{"theta", EstimandSpec::TruthRule::from_dgm, 0.0, 1'000'000, ""}};
    cfg.theta0 = 0.0;
    cfg.alpha = 0.05;
    cfg.measures = {"bias",      "coverage",  "be_coverage",  "empse",
                    "rel_precision", "avg_modse", "rel_err_modse"};
    cfg.comparator_method_id = "weibull";
    return cfg;
  }
  if (name == "conditional-coverage") {
    StudyConfig cfg;
    cfg.name = "conditional-coverage-example";
    cfg.seed = 72789;
    cfg.n_sim = 30000;
    cfg.mechanism = MechanismKind::normal;
    cfg.normal_base = {30, 0.0, 1.0};
    cfg.methods = {{"t_interval", MethodKind::normal_mean_t, "mu", 1e-8, 50}};
    cfg.estimands = {{"mu", EstimandSpec::TruthRule::from_dgm, 0.0, 1'000'000, ""}};
    cfg.theta0 = 0.0;
    cfg.alpha = 0.05;
    cfg.measures = {"coverage"};
    cfg.conditional_coverage_groups = 3;
    return cfg;
  }
  throw Error(ErrorCode::invalid_parameter,
              "unknown example \"" + name + "\" (try survival or conditional-coverage)");
}

}  // namespace simharness
