// SPDX-License-Identifier: Apache-2.0
#include "simharness/engine.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "simharness/csv.hpp"
#include "simharness/errors.hpp"
#include "simharness/mathutil.hpp"

namespace simharness::engine {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Stream allocation: the main run owns the even ids, chunk-major
// (stream = 2 * (chunk * n_dgms + dgm_index)), so adding repetitions only
// claims new even ids. Odd ids are reserved for true-theta estimation.
std::uint64_t main_stream_id(std::size_t n_dgms, std::size_t dgm_index,
                             std::uint64_t chunk) {
  return 2 * (chunk * n_dgms + dgm_index);
}

std::uint64_t truth_stream_id(std::size_t dgm_index) { return 2 * dgm_index + 1; }

std::uint64_t chunk_of(const StudyConfig& cfg, std::uint64_t repetition) {
  if (!cfg.streams.per_chunk) return 0;
  return (repetition - 1) / cfg.streams.chunk_size;
}

struct GeneratedData {
  MechanismKind kind = MechanismKind::survival;
  SurvivalDataset survival;
  NumericDataset numeric;

  std::uint64_t hash() const {
    return kind == MechanismKind::survival ? dataset_hash(survival)
                                           : dataset_hash(numeric);
  }
  std::string csv() const {
    return kind == MechanismKind::survival ? to_csv(survival) : to_csv(numeric);
  }
};

struct EngineContext {
  const StudyConfig& cfg;
  std::vector<DgmInstance> dgms;
  NumericDataset resample_source;  // resample mechanism only
};

NumericDataset load_resample_source(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  int col = t.column("y");
  if (col < 0 && t.header.size() == 1) col = 0;
  if (col < 0)
    throw Error(ErrorCode::config_error,
                "resample source must have a y column: " + path);
  NumericDataset d;
  d.y.reserve(t.rows.size());
  for (const auto& row : t.rows) d.y.push_back(csv::parse_double(row[col]));
  if (d.y.empty()) throw Error(ErrorCode::empty_source, "resample source is empty");
  return d;
}

EngineContext make_context(const StudyConfig& cfg) {
  cfg.validate();
  EngineContext ctx{cfg, expand_dgms(cfg), {}};
  if (cfg.mechanism == MechanismKind::resample)
    ctx.resample_source = load_resample_source(cfg.resample_source_csv);
  return ctx;
}

GeneratedData generate_dataset(const EngineContext& ctx, const DgmInstance& inst,
                               rng::Generator& gen) {
  GeneratedData d;
  d.kind = inst.mechanism;
  switch (inst.mechanism) {
    case MechanismKind::survival:
      d.survival = dgm::generate_survival(gen, inst.survival);
      break;
    case MechanismKind::normal:
      d.numeric = dgm::generate_normal(gen, inst.normal);
      break;
    case MechanismKind::resample:
      d.numeric = dgm::resample(gen, ctx.resample_source, inst.resample_n_obs);
      break;
  }
  return d;
}

estimators::Estimate apply_method(const StudyConfig& cfg, const MethodSpec& m,
                                  const GeneratedData& data) {
  estimators::Estimate e;
  try {
    const estimators::FitControl control{m.tolerance, m.max_iterations, 20};
    switch (m.kind) {
      case MethodKind::exponential_ph:
        e = estimators::fit_exponential_ph(data.survival, cfg.alpha);
        break;
      case MethodKind::weibull_ph:
        e = estimators::fit_weibull_ph(data.survival, cfg.alpha, control);
        break;
      case MethodKind::cox_ph:
        e = estimators::fit_cox_ph(data.survival, cfg.alpha, control);
        break;
      case MethodKind::normal_mean_t:
        e = estimators::fit_normal_mean_t(data.numeric, cfg.alpha);
        break;
    }
  } catch (const std::exception&) {
    e = estimators::Estimate{};
    e.converged = false;
    e.error_code = estimators::FitErrorCode::numeric;
    return e;
  }
  if (e.converged)
    e.p_value = estimators::wald_test(e, cfg.theta0, cfg.alpha).p_value;
  return e;
}

bool fault_injected(const StudyConfig& cfg, const std::string& dgm_id,
                    std::uint64_t rep, const std::string& method_id) {
  for (const auto& f : cfg.fault_injections)
    if (f.dgm_id == dgm_id && f.repetition == rep && f.method_id == method_id)
      return true;
  return false;
}

struct ChunkTask {
  std::size_t dgm_index = 0;
  std::uint64_t chunk = 0;
  std::uint64_t first_rep = 0, last_rep = 0;
  // When set, the chunk resumes from this serialized state instead of a
  // fresh stream (continuation of a partially finished chunk).
  std::optional<std::string> resume_state_hex;
};

struct ChunkOutput {
  std::vector<EstimatesRecord> rows;
  std::vector<rng::StatesRecord> states;
  std::string end_state_hex;  // state after the chunk's last repetition
  std::map<std::pair<std::string, std::uint64_t>, std::string> exports;
};

ChunkOutput run_chunk(const EngineContext& ctx, const ChunkTask& task,
                      const RunOptions& options) {
  const StudyConfig& cfg = ctx.cfg;
  const DgmInstance& inst = ctx.dgms[task.dgm_index];
  ChunkOutput out;
  rng::Generator gen =
      task.resume_state_hex
          ? rng::Generator::deserialize_state(*task.resume_state_hex)
          : rng::init_generator(cfg.seed, main_stream_id(ctx.dgms.size(),
                                                         task.dgm_index, task.chunk));
  for (std::uint64_t rep = task.first_rep; rep <= task.last_rep; ++rep) {
    out.states.push_back(rng::capture_state(gen, inst.id, rep));
    const GeneratedData data = generate_dataset(ctx, inst, gen);
    const bool export_this =
        options.export_all_datasets ||
        std::find(options.export_datasets.begin(), options.export_datasets.end(),
                  std::make_pair(inst.id, rep)) != options.export_datasets.end();
    if (export_this) out.exports[{inst.id, rep}] = data.csv();
    for (const auto& m : cfg.methods) {
      EstimatesRecord rec;
      rec.dgm_id = inst.id;
      rec.repetition = rep;
      rec.method_id = m.id;
      rec.estimand_id = m.estimand_id;
      if (fault_injected(cfg, inst.id, rep, m.id)) {
        rec.estimate.converged = false;
        rec.estimate.error_code = estimators::FitErrorCode::numeric;
      } else {
        rec.estimate = apply_method(cfg, m, data);
      }
      out.rows.push_back(std::move(rec));
    }
  }
  out.end_state_hex = gen.serialize_state();
  return out;
}

// Runs tasks on up to `threads` workers; outputs land in order-stable slots.
std::vector<ChunkOutput> run_tasks(const EngineContext& ctx,
                                   const std::vector<ChunkTask>& tasks,
                                   const RunOptions& options) {
  std::vector<ChunkOutput> outputs(tasks.size());
  const int threads = std::max(1, options.threads);
  if (threads == 1 || tasks.size() <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      outputs[i] = run_chunk(ctx, tasks[i], options);
    return outputs;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        outputs[i] = run_chunk(ctx, tasks[i], options);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), tasks.size());
  pool.reserve(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return outputs;
}

std::vector<ChunkTask> chunk_layout(const StudyConfig& cfg, std::size_t dgm_index,
                                    std::uint64_t first_rep, std::uint64_t last_rep) {
  std::vector<ChunkTask> tasks;
  if (first_rep > last_rep) return tasks;
  std::uint64_t rep = first_rep;
  while (rep <= last_rep) {
    const std::uint64_t chunk = chunk_of(cfg, rep);
    std::uint64_t chunk_last = last_rep;
    if (cfg.streams.per_chunk)
      chunk_last = std::min(last_rep, (chunk + 1) * cfg.streams.chunk_size);
    tasks.push_back({dgm_index, chunk, rep, chunk_last, std::nullopt});
    rep = chunk_last + 1;
  }
  return tasks;
}

// The end-state record holds the state repetition n_sim+1 would start at:
// mid-chunk that is the running generator's state; on a chunk boundary it
// is the fresh state of the next chunk's stream.
std::string end_state_hex(const EngineContext& ctx, std::size_t dgm_index,
                          std::uint64_t n_sim, const std::string& last_chunk_end) {
  const StudyConfig& cfg = ctx.cfg;
  if (cfg.streams.per_chunk && n_sim % cfg.streams.chunk_size == 0) {
    const std::uint64_t next_chunk = n_sim / cfg.streams.chunk_size;
    return rng::init_generator(cfg.seed, main_stream_id(ctx.dgms.size(), dgm_index,
                                                        next_chunk))
        .serialize_state();
  }
  return last_chunk_end;
}

void assemble(RunResult& result, const EngineContext& ctx,
              std::vector<std::vector<ChunkTask>> per_dgm_tasks,
              std::vector<ChunkOutput> outputs, std::uint64_t n_sim,
              bool append_end_state) {
  // Flatten back in (dgm, chunk) order; run_tasks already kept slots stable.
  std::size_t slot = 0;
  for (std::size_t d = 0; d < per_dgm_tasks.size(); ++d) {
    std::string last_end;
    for (std::size_t c = 0; c < per_dgm_tasks[d].size(); ++c, ++slot) {
      auto& out = outputs[slot];
      for (auto& r : out.rows) result.estimates.rows.push_back(std::move(r));
      for (auto& s : out.states) result.states.rows.push_back(std::move(s));
      for (auto& [k, v] : out.exports) result.exported_datasets[k] = std::move(v);
      last_end = out.end_state_hex;
    }
    if (append_end_state) {
      result.states.rows.push_back(
          {ctx.dgms[d].id, n_sim + 1, end_state_hex(ctx, d, n_sim, last_end)});
    }
  }
}

void sort_run_outputs(RunResult& result, const std::vector<DgmInstance>& dgms,
                      const StudyConfig& cfg) {
  // Deterministic output order: (dgm in expansion order, repetition,
  // method in config order). Chunk tasks already produce this within a
  // dgm, but continuation merges need a real sort.
  std::map<std::string, std::size_t> dgm_rank;
  for (std::size_t i = 0; i < dgms.size(); ++i) dgm_rank[dgms[i].id] = i;
  std::map<std::string, std::size_t> method_rank;
  for (std::size_t i = 0; i < cfg.methods.size(); ++i)
    method_rank[cfg.methods[i].id] = i;
  std::stable_sort(result.estimates.rows.begin(), result.estimates.rows.end(),
                   [&](const EstimatesRecord& a, const EstimatesRecord& b) {
                     return std::tuple(dgm_rank.at(a.dgm_id), a.repetition,
                                       method_rank.at(a.method_id)) <
                            std::tuple(dgm_rank.at(b.dgm_id), b.repetition,
                                       method_rank.at(b.method_id));
                   });
  std::stable_sort(result.states.rows.begin(), result.states.rows.end(),
                   [&](const rng::StatesRecord& a, const rng::StatesRecord& b) {
                     return std::tuple(dgm_rank.at(a.dgm_id), a.repetition) <
                            std::tuple(dgm_rank.at(b.dgm_id), b.repetition);
                   });
}

double dgm_truth(const DgmInstance& inst, const NumericDataset* source) {
  switch (inst.mechanism) {
    case MechanismKind::survival: return inst.survival.theta;
    case MechanismKind::normal: return inst.normal.mu;
    case MechanismKind::resample: {
      // The implicit population is the source dataset itself.
      double s = 0.0;
      for (double v : source->y) s += v;
      return s / static_cast<double>(source->y.size());
    }
  }
  return 0.0;
}

}  // namespace

std::vector<std::uint64_t> main_run_streams(const StudyConfig& cfg,
                                            std::size_t dgm_index,
                                            std::uint64_t n_sim) {
  const std::size_t n_dgms = expand_dgms(cfg).size();
  std::vector<std::uint64_t> streams;
  const std::uint64_t n_chunks =
      cfg.streams.per_chunk
          ? (n_sim + cfg.streams.chunk_size - 1) / cfg.streams.chunk_size
          : 1;
  for (std::uint64_t c = 0; c < n_chunks; ++c)
    streams.push_back(main_stream_id(n_dgms, dgm_index, c));
  return streams;
}

TruthMap resolve_true_theta(const StudyConfig& cfg,
                            const std::vector<DgmInstance>& dgms) {
  TruthMap truth;
  const NumericDataset source =
      cfg.mechanism == MechanismKind::resample
          ? load_resample_source(cfg.resample_source_csv)
          : NumericDataset{};
  for (const auto& est : cfg.estimands) {
    for (const auto& inst : dgms) {
      double value = 0.0;
      switch (est.rule) {
        case EstimandSpec::TruthRule::fixed: value = est.fixed_value; break;
        case EstimandSpec::TruthRule::from_dgm:
          value = dgm_truth(inst, &source);
          break;
        case EstimandSpec::TruthRule::estimate_by_simulation:
          value = estimate_true_theta(cfg, inst.id, est.big_n, std::nullopt,
                                      est.truth_method_id);
          break;
      }
      truth[{inst.id, est.id}] = value;
    }
  }
  return truth;
}

RunResult run_study(const StudyConfig& cfg, const RunOptions& options) {
  EngineContext ctx = make_context(cfg);
  RunResult result;
  result.n_sim = cfg.n_sim;
  result.dgms = ctx.dgms;
  for (std::size_t d = 0; d < ctx.dgms.size(); ++d)
    result.stream_map[ctx.dgms[d].id] = main_run_streams(cfg, d, cfg.n_sim);

  std::vector<std::vector<ChunkTask>> per_dgm;
  std::vector<ChunkTask> flat;
  for (std::size_t d = 0; d < ctx.dgms.size(); ++d) {
    per_dgm.push_back(chunk_layout(cfg, d, 1, cfg.n_sim));
    for (const auto& t : per_dgm.back()) flat.push_back(t);
  }
  auto outputs = run_tasks(ctx, flat, options);
  assemble(result, ctx, per_dgm, std::move(outputs), cfg.n_sim, true);
  sort_run_outputs(result, ctx.dgms, cfg);
  result.true_theta = resolve_true_theta(cfg, ctx.dgms);
  return result;
}

RunResult continue_study(const StudyConfig& cfg, const std::string& out_dir,
                         std::uint64_t extra, const RunOptions& options) {
  EngineContext ctx = make_context(cfg);
  const fs::path dir(out_dir);
  EstimatesData old_estimates =
      estimates_from_csv(csv::read_text_file((dir / "estimates.csv").string()));
  StatesData old_states =
      states_from_csv(csv::read_text_file((dir / "states.csv").string()));

  // The completed repetition count comes from the estimates rows; the
  // states file must then hold the matching end-state record (a truncated
  // states file must not silently look like a shorter run).
  std::map<std::string, std::uint64_t> max_rep;
  {
    std::set<std::string> known_dgms, known_methods;
    for (const auto& d : ctx.dgms) known_dgms.insert(d.id);
    for (const auto& m : cfg.methods) known_methods.insert(m.id);
    for (const auto& r : old_estimates.rows) {
      if (!known_dgms.count(r.dgm_id) || !known_methods.count(r.method_id))
        throw Error(ErrorCode::cannot_continue,
                    "existing estimates do not match the study config (dgm " +
                        r.dgm_id + ", method " + r.method_id + ")");
      max_rep[r.dgm_id] = std::max(max_rep[r.dgm_id], r.repetition);
    }
  }
  if (max_rep.size() != ctx.dgms.size())
    throw Error(ErrorCode::cannot_continue,
                "estimates file does not cover every data-generating mechanism");
  std::uint64_t base_n = 0;
  for (const auto& [_, m] : max_rep) {
    if (base_n == 0) base_n = m;
    if (m != base_n)
      throw Error(ErrorCode::cannot_continue,
                  "estimates file has unequal repetition counts across dgms");
  }
  if (base_n < 1)
    throw Error(ErrorCode::cannot_continue, "estimates file has no repetitions");

  RunResult result;
  result.n_sim = base_n + extra;
  result.dgms = ctx.dgms;
  for (std::size_t d = 0; d < ctx.dgms.size(); ++d)
    result.stream_map[ctx.dgms[d].id] = main_run_streams(cfg, d, result.n_sim);
  result.estimates = std::move(old_estimates);

  if (extra == 0) {
    result.states = std::move(old_states);
    result.true_theta = resolve_true_theta(cfg, ctx.dgms);
    return result;
  }

  // Old end-state records become the start records of repetition base_n+1.
  std::map<std::string, std::string> end_state;
  for (const auto& s : old_states.rows)
    if (s.repetition == base_n + 1) end_state[s.dgm_id] = s.state_hex;
  for (const auto& inst : ctx.dgms)
    if (!end_state.count(inst.id))
      throw Error(ErrorCode::cannot_continue,
                  "missing end-state record for dgm " + inst.id);
  result.states.rows = std::move(old_states.rows);
  result.states.rows.erase(
      std::remove_if(result.states.rows.begin(), result.states.rows.end(),
                     [&](const rng::StatesRecord& s) { return s.repetition == base_n + 1; }),
      result.states.rows.end());

  std::vector<std::vector<ChunkTask>> per_dgm;
  std::vector<ChunkTask> flat;
  for (std::size_t d = 0; d < ctx.dgms.size(); ++d) {
    auto tasks = chunk_layout(cfg, d, base_n + 1, base_n + extra);
    // The first continued chunk resumes from the stored end state.
    tasks.front().resume_state_hex = end_state.at(ctx.dgms[d].id);
    per_dgm.push_back(tasks);
    for (const auto& t : tasks) flat.push_back(t);
  }
  auto outputs = run_tasks(ctx, flat, options);
  assemble(result, ctx, per_dgm, std::move(outputs), base_n + extra, true);
  sort_run_outputs(result, ctx.dgms, cfg);
  result.true_theta = resolve_true_theta(cfg, ctx.dgms);
  return result;
}

RerunResult rerun_repetition(const StudyConfig& cfg, const StatesData& states,
                             const std::string& dgm_id, std::uint64_t repetition) {
  EngineContext ctx = make_context(cfg);
  const DgmInstance* inst = nullptr;
  for (const auto& d : ctx.dgms)
    if (d.id == dgm_id) inst = &d;
  if (!inst)
    throw Error(ErrorCode::unknown_repetition, "unknown dgm id \"" + dgm_id + "\"");
  const rng::StatesRecord* record = nullptr;
  for (const auto& s : states.rows)
    if (s.dgm_id == dgm_id && s.repetition == repetition) record = &s;
  if (!record)
    throw Error(ErrorCode::unknown_repetition,
                "no stored state for dgm " + dgm_id + ", repetition " +
                    std::to_string(repetition));

  rng::Generator gen = rng::restore_state(*record);
  const GeneratedData data = generate_dataset(ctx, *inst, gen);
  RerunResult out;
  out.dgm_id = dgm_id;
  out.repetition = repetition;
  out.dataset_csv = data.csv();
  out.dataset_hash = data.hash();
  for (const auto& m : cfg.methods) {
    EstimatesRecord rec;
    rec.dgm_id = dgm_id;
    rec.repetition = repetition;
    rec.method_id = m.id;
    rec.estimand_id = m.estimand_id;
    rec.estimate = fault_injected(cfg, dgm_id, repetition, m.id)
                       ? [] {
                           estimators::Estimate e;
                           e.converged = false;
                           e.error_code = estimators::FitErrorCode::numeric;
                           return e;
                         }()
                       : apply_method(cfg, m, data);
    out.rows.push_back(std::move(rec));
  }
  return out;
}

double estimate_true_theta(const StudyConfig& cfg, const std::string& dgm_id,
                           std::uint64_t big_n,
                           std::optional<std::uint64_t> stream_id,
                           const std::string& method_id) {
  if (big_n == 0)
    throw Error(ErrorCode::invalid_parameter, "estimate_true_theta: big_n must be positive");
  EngineContext ctx = make_context(cfg);
  std::size_t dgm_index = ctx.dgms.size();
  for (std::size_t d = 0; d < ctx.dgms.size(); ++d)
    if (ctx.dgms[d].id == dgm_id) dgm_index = d;
  if (dgm_index == ctx.dgms.size())
    throw Error(ErrorCode::invalid_parameter, "unknown dgm id \"" + dgm_id + "\"");

  const std::uint64_t stream =
      stream_id ? *stream_id : truth_stream_id(dgm_index);
  // Even ids belong to the main run (any chunk, any continuation length).
  if (stream % 2 == 0)
    throw Error(ErrorCode::stream_reuse,
                "stream " + std::to_string(stream) +
                    " is reserved for the main run; use an odd stream id");

  const MethodSpec* method = nullptr;
  std::string wanted = method_id;
  if (wanted.empty()) wanted = cfg.comparator_method_id;
  if (wanted.empty()) wanted = cfg.methods.front().id;
  for (const auto& m : cfg.methods)
    if (m.id == wanted) method = &m;
  if (!method)
    throw Error(ErrorCode::invalid_parameter,
                "unknown truth-estimation method \"" + wanted + "\"");

  DgmInstance big = ctx.dgms[dgm_index];
  switch (big.mechanism) {
    case MechanismKind::survival: big.survival.n_obs = big_n; break;
    case MechanismKind::normal: big.normal.n_obs = big_n; break;
    case MechanismKind::resample: big.resample_n_obs = big_n; break;
  }
  rng::Generator gen = rng::init_generator(cfg.seed, stream);
  const GeneratedData data = generate_dataset(ctx, big, gen);
  const estimators::Estimate e = apply_method(cfg, *method, data);
  if (!e.converged)
    throw Error(ErrorCode::config_error,
                std::string("true-theta estimation failed: method reported ") +
                    estimators::fit_error_name(e.error_code));
  return e.theta_hat;
}

std::string manifest_to_json(const StudyConfig& cfg, const RunResult& result,
                             double wall_clock_seconds) {
  json j;
  j["name"] = cfg.name;
  j["schema_version"] = 1;
  j["seed"] = cfg.seed;
  j["n_sim"] = result.n_sim;
  j["alpha"] = cfg.alpha;
  j["theta0"] = cfg.theta0;
  j["generator"] = {{"family", "xoshiro256++"}, {"state_format", 1},
                    {"stream_separation", "long-jump 2^192"}};
  StudyConfig effective = cfg;
  effective.n_sim = result.n_sim;
  j["config_digest"] = config_digest(effective);
  j["streams"] = {{"policy", cfg.streams.per_chunk ? "per_chunk" : "per_dgm"},
                  {"chunk_size", cfg.streams.per_chunk ? cfg.streams.chunk_size : 0}};
  json map = json::object();
  for (const auto& [dgm, streams] : result.stream_map) map[dgm] = streams;
  j["streams"]["map"] = map;
  j["dgms"] = json::array();
  for (const auto& inst : result.dgms) {
    json dj{{"id", inst.id}, {"mechanism", mechanism_kind_name(inst.mechanism)}};
    json factors = json::object();
    for (const auto& [name, level] : inst.factors) factors[name] = level;
    dj["factors"] = factors;
    if (inst.mechanism == MechanismKind::survival) {
      dj["spec"] = {{"n_obs", inst.survival.n_obs},
                    {"lambda", inst.survival.lambda},
                    {"gamma", inst.survival.gamma},
                    {"theta", inst.survival.theta},
                    {"allocation_p", inst.survival.allocation_p}};
      if (inst.survival.censor_time)
        dj["spec"]["censor_time"] = *inst.survival.censor_time;
      else
        dj["spec"]["censor_time"] = "none";
    } else if (inst.mechanism == MechanismKind::normal) {
      dj["spec"] = {{"n_obs", inst.normal.n_obs},
                    {"mu", inst.normal.mu},
                    {"sigma", inst.normal.sigma}};
    } else {
      dj["spec"] = {{"n_obs", inst.resample_n_obs}};
    }
    j["dgms"].push_back(dj);
  }
  j["methods"] = json::array();
  for (const auto& m : cfg.methods)
    j["methods"].push_back({{"id", m.id}, {"kind", method_kind_name(m.kind)}});
  j["estimands"] = json::array();
  for (const auto& e : cfg.estimands) {
    json ej{{"id", e.id}};
    switch (e.rule) {
      case EstimandSpec::TruthRule::from_dgm: ej["true_value"] = "from_dgm"; break;
      case EstimandSpec::TruthRule::fixed: ej["true_value"] = e.fixed_value; break;
      case EstimandSpec::TruthRule::estimate_by_simulation:
        ej["true_value"] = "estimate_by_simulation";
        ej["big_n"] = e.big_n;
        ej["truth_method"] = e.truth_method_id.empty()
                                 ? (cfg.comparator_method_id.empty()
                                        ? cfg.methods.front().id
                                        : cfg.comparator_method_id)
                                 : e.truth_method_id;
        break;
    }
    j["estimands"].push_back(ej);
  }
  json truth = json::object();
  for (const auto& [key, value] : result.true_theta) {
    const auto& [dgm, estimand] = key;
    truth[dgm][estimand] = value;
  }
  j["true_theta"] = truth;
  j["platform"] = {{"os",
#if defined(__linux__)
                    "linux"
#elif defined(__APPLE__)
                    "darwin"
#else
                    "other"
#endif
                   },
                   {"compiler", __VERSION__}};
  j["wall_clock_seconds"] = wall_clock_seconds;
  return j.dump(2) + "\n";
}

void write_run_outputs(const StudyConfig& cfg, const RunResult& result,
                       const std::string& out_dir) {
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create directory " + out_dir);
  csv::write_text_file((dir / "estimates.csv").string(),
                       estimates_to_csv(result.estimates));
  csv::write_text_file((dir / "states.csv").string(), states_to_csv(result.states));
  StudyConfig effective = cfg;
  effective.n_sim = result.n_sim;
  csv::write_text_file((dir / "study_config.json").string(), config_to_json(effective));
  if (!result.exported_datasets.empty()) {
    fs::create_directories(dir / "data", ec);
    for (const auto& [key, text] : result.exported_datasets) {
      const auto& [dgm, rep] = key;
      csv::write_text_file(
          (dir / "data" / ("dgm" + dgm + "_rep" + std::to_string(rep) + ".csv")).string(),
          text);
    }
  }
}

AnalysisOutputs analyze_and_write(const StudyConfig& cfg, const EstimatesData& estimates,
                                  const TruthMap& truth, const std::string& out_dir) {
  perf::PerfOptions options;
  options.alpha = cfg.alpha;
  options.comparator_method_id = cfg.comparator_method_id;
  if (!cfg.measures.empty()) {
    options.measures.clear();
    for (const auto& name : cfg.measures)
      options.measures.push_back(*perf::measure_from_name(name));
  }

  AnalysisOutputs out;
  out.perf = perf::summarize(estimates, truth, options);
  out.missingness = perf::missingness_report(estimates);
  if (cfg.conditional_coverage_groups > 0)
    out.conditional =
        perf::conditional_coverage(estimates, truth, cfg.conditional_coverage_groups);

  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create directory " + out_dir);
  csv::write_text_file((dir / "performance.csv").string(), perf::perf_to_csv(out.perf));
  csv::write_text_file((dir / "performance.json").string(), perf::perf_to_json(out.perf));
  csv::write_text_file((dir / "missingness.csv").string(),
                       perf::missingness_to_csv(out.missingness));
  if (!out.conditional.empty())
    csv::write_text_file((dir / "conditional_coverage.csv").string(),
                         perf::conditional_coverage_to_csv(out.conditional));
  return out;
}

TruthMap truth_from_manifest(const std::string& manifest_path) {
  json j;
  try {
    j = json::parse(csv::read_text_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::config_error,
                std::string("manifest is not valid JSON: ") + e.what());
  }
  TruthMap truth;
  if (j.contains("true_theta"))
    for (const auto& [dgm, per_estimand] : j["true_theta"].items())
      for (const auto& [estimand, value] : per_estimand.items())
        truth[{dgm, estimand}] = value.get<double>();
  return truth;
}

}  // namespace simharness::engine
