#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marsbid/baselines.hpp"
#include "marsbid/checkpoint.hpp"
#include "marsbid/config.hpp"
#include "marsbid/evaluation.hpp"
#include "marsbid/mars.hpp"

namespace marsbid {

namespace fs = std::filesystem;

/// Where every artifact of a run lives.
struct RunContext {
  RunConfig config;
  fs::path out;
  std::size_t workers = 1;
  std::ostream* log = &std::cout;

  std::ostream& say() const { return *log; }
  fs::path series_path() const { return out / "data" / "series.csv"; }
  fs::path seed_dir(std::uint64_t seed) const { return out / ("seed_" + std::to_string(seed)); }
  fs::path checkpoint_path(std::uint64_t seed, const std::string& name) const { return seed_dir(seed) / (name + ".ckpt"); }
  fs::path eval_dir(const std::string& policy, const std::string& split) const { return out / "eval" / policy / split; }
  std::string stamp(std::uint64_t seed) const {
    return "marsbid config_hash=" + config.hash + " seed=" + std::to_string(seed);
  }
};

inline std::vector<Role> worker_roles(std::size_t k) {
  std::vector<Role> r{Role::safe, Role::spec};
  if (k == 3) r.push_back(Role::neutral);
  return r;
}

inline std::string meta_name(std::size_t k) { return "meta_k" + std::to_string(k); }

// ---------------------------------------------------------------------------
// Data

inline MarketSeries cmd_generate_data(const RunContext& ctx) {
  MarketSeries s = generate_synthetic(ctx.config.synthetic);
  fs::create_directories(ctx.series_path().parent_path());
  write_csv(ctx.series_path().string(), s, ctx.stamp(ctx.config.synthetic.seed));
  const auto st = [&](Field f) {
    double mean = 0.0, sd = 0.0;
    for (const auto& r : s.records) mean += r[f];
    mean /= static_cast<double>(s.size());
    for (const auto& r : s.records) sd += (r[f] - mean) * (r[f] - mean);
    return std::make_pair(mean, std::sqrt(sd / static_cast<double>(s.size())));
  };
  const auto [da_m, da_s] = st(Field::lmp_da);
  const auto [rt_m, rt_s] = st(Field::lmp_rt);
  ctx.say() << "wrote " << s.size() << " hours to " << ctx.series_path().string() << "\n"
            << "  lmp_da mean " << da_m << " std " << da_s << "\n"
            << "  lmp_rt mean " << rt_m << " std " << rt_s << "\n";
  return s;
}

/// Reads a CSV through the configured schema, repairs gaps and writes the
/// canonical series used by every later command.
inline MarketSeries cmd_ingest(const RunContext& ctx, const std::string& path) {
  const MarketSeries raw = ingest_csv(path, ctx.config.schema);
  const auto gaps = raw.timestamp_gaps();
  MarketSeries repaired = repair_gaps(raw, ctx.config.seasonal_period);
  std::size_t filled = 0;
  for (const auto& f : repaired.fill_mask) {
    for (bool b : f) filled += b ? 1 : 0;
  }
  fs::create_directories(ctx.series_path().parent_path());
  write_csv(ctx.series_path().string(), repaired, ctx.stamp(0));
  ctx.say() << "ingested " << raw.size() << " rows (" << gaps.size() << " timestamp gaps), repaired series has "
            << repaired.size() << " hours, " << filled << " filled values\n";
  return repaired;
}

inline std::shared_ptr<const MarketSeries> load_canonical_series(const RunContext& ctx) {
  if (!fs::exists(ctx.series_path())) {
    throw PrerequisiteError("missing market data " + ctx.series_path().string() +
                            " (run `generate-data` or `ingest` first)");
  }
  MarketSeries s = ingest_csv(ctx.series_path().string());
  if (!s.is_uniform_hourly() || s.has_missing_values()) s = repair_gaps(s, ctx.config.seasonal_period);
  return std::make_shared<const MarketSeries>(std::move(s));
}

struct SplitEnvs {
  std::shared_ptr<const MarketSeries> train, test1, test2;
  double load_scale = 1.0;
};

inline SplitEnvs load_splits(const RunContext& ctx) {
  const auto full = load_canonical_series(ctx);
  SplitResult parts = split(*full, ctx.config.split);
  SplitEnvs out;
  out.train = std::make_shared<const MarketSeries>(std::move(parts.train));
  out.test1 = std::make_shared<const MarketSeries>(std::move(parts.test1));
  out.test2 = std::make_shared<const MarketSeries>(std::move(parts.test2));
  out.load_scale = ctx.config.env.load_scale > 0.0 ? ctx.config.env.load_scale
                                                   : std::max(1.0, out.train->max_of(Field::load_forecast));
  return out;
}

inline BiddingEnv make_env(const RunContext& ctx, const SplitEnvs& data, const std::string& split_name) {
  EnvConfig cfg = ctx.config.env;
  cfg.load_scale = data.load_scale;
  if (split_name == "train") return BiddingEnv(data.train, ctx.config.generator, cfg);
  if (split_name == "test1") return BiddingEnv(data.test1, ctx.config.generator, cfg);
  if (split_name == "test2") return BiddingEnv(data.test2, ctx.config.generator, cfg);
  throw ConfigError("unknown split '" + split_name + "' (expected train|test1|test2)");
}

// ---------------------------------------------------------------------------
// Training

inline void write_training_artifacts(const RunContext& ctx, std::uint64_t seed, const std::string& name,
                                     const TrainResult& res) {
  fs::create_directories(ctx.seed_dir(seed));
  save_checkpoint(ctx.checkpoint_path(seed, name).string(),
                  Checkpoint{name.rfind("meta", 0) == 0 ? "meta" : name, res.policy, res.steps,
                             fnv1a(ctx.config.hash)});
  res.log.write_csv((ctx.seed_dir(seed) / ("train_" + name + ".csv")).string(), ctx.stamp(seed));
}

inline UpdateCallback periodic_checkpoints(const RunContext& ctx, std::uint64_t seed, const std::string& name) {
  if (ctx.config.checkpoint_every == 0) return {};
  return [&ctx, seed, name](const TrainingLogRow& row, const ActorCritic& net) {
    if (row.update % ctx.config.checkpoint_every != 0) return;
    fs::create_directories(ctx.seed_dir(seed));
    const std::string role = name.rfind("meta", 0) == 0 ? "meta" : name;
    save_checkpoint((ctx.seed_dir(seed) / (name + "_u" + std::to_string(row.update) + ".ckpt")).string(),
                    Checkpoint{role, net, row.steps, fnv1a(ctx.config.hash)});
  };
}

inline std::vector<std::size_t> expected_dims(const RunContext& ctx, const PpoConfig& p) {
  std::vector<std::size_t> dims{Observation::dim(ctx.config.env.weather_features)};
  dims.insert(dims.end(), p.hidden.begin(), p.hidden.end());
  return dims;
}

inline Checkpoint load_role_checkpoint(const RunContext& ctx, std::uint64_t seed, const std::string& name,
                                       const PpoConfig& p) {
  const auto path = ctx.checkpoint_path(seed, name);
  if (!fs::exists(path)) {
    throw PrerequisiteError("missing checkpoint " + path.string() + " (train the '" + name + "' policy first)");
  }
  return load_checkpoint(path.string(), expected_dims(ctx, p));
}

inline std::shared_ptr<const AgentEnsemble> load_ensemble(const RunContext& ctx, std::uint64_t seed, std::size_t k) {
  std::vector<Worker> workers;
  std::vector<std::string> missing;
  for (Role r : worker_roles(k)) {
    if (!fs::exists(ctx.checkpoint_path(seed, std::string(to_string(r))))) missing.emplace_back(to_string(r));
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw PrerequisiteError("meta phase needs frozen worker checkpoints (missing: " + names + ") in " +
                            ctx.seed_dir(seed).string() + "; run `train --phase university` first");
  }
  for (Role r : worker_roles(k)) {
    workers.push_back(Worker{r, load_role_checkpoint(ctx, seed, std::string(to_string(r)), ctx.config.ppo_base).network});
  }
  return std::make_shared<const AgentEnsemble>(std::move(workers));
}

inline HierarchyTrainingConfig hierarchy_config(const RunContext& ctx) {
  return HierarchyTrainingConfig{ctx.config.ppo_base, ctx.config.ppo_meta, ctx.config.shaping, ctx.workers};
}

inline void train_single(const RunContext& ctx, const BiddingEnv& env, std::uint64_t seed, Role role) {
  const std::string name(to_string(role));
  ctx.say() << "[seed " << seed << "] training " << name << " for " << ctx.config.ppo_base.total_steps << " steps\n";
  const TrainResult res = train_role_agent(env, role, ctx.config.ppo_base, ctx.config.shaping, seed, ctx.workers,
                                           periodic_checkpoints(ctx, seed, name));
  write_training_artifacts(ctx, seed, name, res);
}

inline void train_meta_phase(const RunContext& ctx, const BiddingEnv& env, std::uint64_t seed, std::size_t k) {
  const auto ensemble = load_ensemble(ctx, seed, k);
  const std::string name = meta_name(k);
  ctx.say() << "[seed " << seed << "] training " << name << " for " << ctx.config.ppo_meta.total_steps << " steps\n";
  const TrainResult res = train_meta(env, ensemble, hierarchy_config(ctx), seed, periodic_checkpoints(ctx, seed, name));
  write_training_artifacts(ctx, seed, name, res);
}

/// phase: university | meta | vanilla | cvar
inline void cmd_train(const RunContext& ctx, const std::string& phase) {
  const SplitEnvs data = load_splits(ctx);
  const BiddingEnv env = make_env(ctx, data, "train");
  for (std::uint64_t seed : ctx.config.eval.seeds) {
    if (phase == "university") {
      for (Role r : worker_roles(ctx.config.ensemble_k)) train_single(ctx, env, seed, r);
    } else if (phase == "meta") {
      train_meta_phase(ctx, env, seed, ctx.config.ensemble_k);
    } else if (phase == "vanilla") {
      train_single(ctx, env, seed, Role::vanilla);
    } else if (phase == "cvar") {
      train_single(ctx, env, seed, Role::cvar);
    } else {
      throw ConfigError("unknown training phase '" + phase + "' (expected university|meta|vanilla|cvar)");
    }
  }
}

/// Trains `name` unless a checkpoint produced under the same config exists.
inline void ensure_trained(const RunContext& ctx, const BiddingEnv& env, std::uint64_t seed, const std::string& name) {
  const auto path = ctx.checkpoint_path(seed, name);
  if (fs::exists(path)) {
    try {
      if (load_checkpoint(path.string()).config_hash == fnv1a(ctx.config.hash)) return;
    } catch (const CheckpointError&) {
    }
  }
  if (name == "meta_k2" || name == "meta_k3") {
    const std::size_t k = name == "meta_k2" ? 2 : 3;
    for (Role r : worker_roles(k)) ensure_trained(ctx, env, seed, std::string(to_string(r)));
    train_meta_phase(ctx, env, seed, k);
  } else {
    train_single(ctx, env, seed, parse_role(name));
  }
}

// ---------------------------------------------------------------------------
// Evaluation

inline const std::vector<std::string>& known_policies() {
  static const std::vector<std::string> p{"mars",  "mars_k2", "mars_k3",     "static",     "static_k2",  "static_k3",
                                          "safe",  "spec",    "neutral",     "vanilla",    "cvar",       "rolling_opt",
                                          "best_single"};
  return p;
}

/// Checkpoints a policy spec depends on.
inline std::vector<std::string> policy_requirements(const RunContext& ctx, const std::string& spec) {
  const auto k_of = [&](const std::string& s) -> std::size_t {
    if (s.ends_with("_k2")) return 2;
    if (s.ends_with("_k3")) return 3;
    return ctx.config.ensemble_k;
  };
  if (spec.rfind("mars", 0) == 0) {
    std::vector<std::string> r;
    for (Role role : worker_roles(k_of(spec))) r.emplace_back(to_string(role));
    r.push_back(meta_name(k_of(spec)));
    return r;
  }
  if (spec.rfind("static", 0) == 0) {
    std::vector<std::string> r;
    for (Role role : worker_roles(k_of(spec))) r.emplace_back(to_string(role));
    return r;
  }
  if (spec == "safe" || spec == "spec" || spec == "neutral" || spec == "vanilla" || spec == "cvar") return {spec};
  if (spec == "rolling_opt") return {};
  if (spec == "best_single") return {"safe", "spec", "vanilla", "cvar"};
  throw ConfigError("unknown policy '" + spec + "'");
}

inline std::unique_ptr<BiddingPolicy> make_policy(const RunContext& ctx, const SplitEnvs& data, std::uint64_t seed,
                                                  const std::string& spec, std::string* resolved = nullptr);

/// Candidate with the best train-split Sharpe among single policies.
inline std::string select_best_single(const RunContext& ctx, const SplitEnvs& data, std::uint64_t seed) {
  std::string best;
  double best_sharpe = -std::numeric_limits<double>::infinity();
  for (const std::string cand : {"safe", "spec", "vanilla", "cvar", "rolling_opt"}) {
    auto pol = make_policy(ctx, data, seed, cand);
    BiddingEnv env = make_env(ctx, data, "train");
    const EpisodeLedger l = run_full_pass(env, *pol, ctx.config.shaping);
    const MaybeDouble s = sharpe(l.profits());
    const double v = s.value_or(-std::numeric_limits<double>::infinity());
    if (best.empty() || v > best_sharpe) {
      best = cand;
      best_sharpe = v;
    }
  }
  return best;
}

inline std::unique_ptr<BiddingPolicy> make_policy(const RunContext& ctx, const SplitEnvs& data, std::uint64_t seed,
                                                  const std::string& spec, std::string* resolved) {
  if (resolved) *resolved = spec;
  const auto k_of = [&](const std::string& s) -> std::size_t {
    if (s.ends_with("_k2")) return 2;
    if (s.ends_with("_k3")) return 3;
    return ctx.config.ensemble_k;
  };
  if (spec == "rolling_opt") return std::make_unique<RollingOptPolicy>(ctx.config.rolling_opt);
  if (spec == "best_single") {
    const std::string chosen = select_best_single(ctx, data, seed);
    if (resolved) *resolved = "best_single:" + chosen;
    return make_policy(ctx, data, seed, chosen);
  }
  if (spec == "mars" || spec == "mars_k2" || spec == "mars_k3") {
    const std::size_t k = k_of(spec);
    auto ensemble = load_ensemble(ctx, seed, k);
    auto meta = std::make_shared<const ActorCritic>(load_role_checkpoint(ctx, seed, meta_name(k), ctx.config.ppo_meta).network);
    return std::make_unique<HierarchicalPolicy>(std::move(ensemble), std::move(meta), true);
  }
  if (spec == "static" || spec == "static_k2" || spec == "static_k3") {
    return make_static_blend(load_ensemble(ctx, seed, k_of(spec)));
  }
  if (spec == "safe" || spec == "spec" || spec == "neutral" || spec == "vanilla" || spec == "cvar") {
    return std::make_unique<NetworkPolicy>(
        std::make_shared<const ActorCritic>(load_role_checkpoint(ctx, seed, spec, ctx.config.ppo_base).network));
  }
  throw ConfigError("unknown policy '" + spec + "'");
}

/// Episode starts for a split: one contiguous pass, or eval.episodes random
/// windows drawn from the seed alone so every policy sees the same starts.
inline std::vector<std::pair<std::size_t, std::size_t>> episode_windows(const RunContext& ctx, std::size_t series_len,
                                                                         std::uint64_t seed) {
  require<DataError>(series_len > kHistoryHours + 1, "evaluation split too short");
  if (ctx.config.eval.episodes == 1) return {{kHistoryHours, series_len - kHistoryHours}};
  const std::size_t len = std::min(ctx.config.env.episode_len, series_len - kHistoryHours);
  std::mt19937_64 rng(seed ^ 0xE7A1ULL);
  std::uniform_int_distribution<std::size_t> pick(kHistoryHours, series_len - len);
  std::vector<std::pair<std::size_t, std::size_t>> w;
  for (std::size_t i = 0; i < ctx.config.eval.episodes; ++i) w.emplace_back(pick(rng), len);
  return w;
}

inline EpisodeLedger evaluate_policy(const RunContext& ctx, const SplitEnvs& data, BiddingPolicy& policy,
                                     const std::string& split_name, std::uint64_t seed) {
  BiddingEnv env = make_env(ctx, data, split_name);
  EpisodeLedger all;
  for (const auto& [start, len] : episode_windows(ctx, env.series().size(), seed)) {
    EpisodeLedger l = run_episode(env, policy, start, len, ctx.config.shaping);
    all.roles = l.roles;
    all.rows.insert(all.rows.end(), std::make_move_iterator(l.rows.begin()), std::make_move_iterator(l.rows.end()));
  }
  return all;
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

struct EvaluationOutcome {
  std::vector<MetricReport> per_seed;
  std::map<std::string, Aggregate> aggregate;
};

inline nlohmann::json aggregate_json(const RunContext& ctx, const std::string& policy, const std::string& split_name,
                                     const EvaluationOutcome& res) {
  nlohmann::json j;
  j["policy"] = policy;
  j["split"] = split_name;
  j["config_hash"] = ctx.config.hash;
  std::vector<std::uint64_t> seeds;
  for (const auto& m : res.per_seed) seeds.push_back(m.seed);
  j["seeds"] = seeds;
  for (const auto& [k, a] : res.aggregate) {
    j["mean"][k] = a.mean ? nlohmann::json(*a.mean) : nlohmann::json(nullptr);
    j["std"][k] = a.std ? nlohmann::json(*a.std) : nlohmann::json(nullptr);
  }
  j["convention"] = std::string(kRatioConvention);
  return j;
}

inline EvaluationOutcome cmd_evaluate(const RunContext& ctx, const std::string& policy_spec,
                                      const std::string& split_name) {
  if (std::find(known_policies().begin(), known_policies().end(), policy_spec) == known_policies().end()) {
    throw ConfigError("unknown policy '" + policy_spec + "'");
  }
  if (split_name != "train" && split_name != "test1" && split_name != "test2") {
    throw ConfigError("unknown split '" + split_name + "' (expected train|test1|test2)");
  }
  const SplitEnvs data = load_splits(ctx);
  const fs::path dir = ctx.eval_dir(policy_spec, split_name);
  fs::create_directories(dir);
  EvaluationOutcome res;
  std::ofstream seeds_csv(dir / "per_seed.csv", std::ios::binary);
  seeds_csv << "# " << ctx.stamp(0) << '\n' << kReportCsvHeader << '\n';
  for (std::uint64_t seed : ctx.config.eval.seeds) {
    std::string resolved;
    auto policy = make_policy(ctx, data, seed, policy_spec, &resolved);
    const EpisodeLedger ledger = evaluate_policy(ctx, data, *policy, split_name, seed);
    MetricReport m = compute_report(ledger);
    m.policy = resolved;
    m.split = split_name;
    m.seed = seed;
    m.config_hash = ctx.config.hash;
    const std::string stem = "seed_" + std::to_string(seed);
    ledger.write_csv((dir / (stem + "_ledger.csv")).string(), ctx.stamp(seed));
    write_rolling_csv((dir / (stem + "_rolling.csv")).string(), ledger.profits(), ctx.config.eval.rolling_window,
                      ctx.stamp(seed));
    write_json(dir / (stem + "_report.json"), to_json(m));
    {
      std::ofstream row(dir / (stem + "_report.csv"), std::ios::binary);
      row << "# " << ctx.stamp(seed) << '\n' << kReportCsvHeader << '\n' << report_csv_row(m) << '\n';
    }
    seeds_csv << report_csv_row(m) << '\n';
    ctx.say() << "[seed " << seed << "] " << resolved << " on " << split_name << ": cumulative "
              << m.cumulative_return << ", sharpe " << format_optional(m.sharpe) << ", max drawdown "
              << m.max_drawdown_abs << "\n";
    res.per_seed.push_back(std::move(m));
  }
  res.aggregate = aggregate_reports(res.per_seed);
  write_json(dir / "aggregate.json", aggregate_json(ctx, policy_spec, split_name, res));
  {
    std::ofstream agg(dir / "aggregate.csv", std::ios::binary);
    agg << "# " << ctx.stamp(0) << '\n' << "metric,mean,std,defined\n";
    for (const auto& [k, a] : res.aggregate) {
      agg << k << ',' << format_optional(a.mean) << ',' << format_optional(a.std) << ',' << a.defined << '\n';
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Ablation

struct AblationRow {
  std::string configuration;
  std::string policy;
  Aggregate sharpe;
  Aggregate max_drawdown_abs;
  Aggregate max_drawdown_rel;
  Aggregate cumulative_return;
  std::vector<MetricReport> per_seed;
};

inline const std::vector<std::pair<std::string, std::string>>& ablation_matrix() {
  static const std::vector<std::pair<std::string, std::string>> m{
      {"MARS-DA (K=2)", "mars_k2"},        {"MARS-DA (K=3, neutral)", "mars_k3"}, {"Static 50/50", "static_k2"},
      {"Vanilla PPO", "vanilla"},          {"CVaR-shaped PPO", "cvar"},          {"RollingOpt", "rolling_opt"},
      {"Best-Single", "best_single"}};
  return m;
}

inline std::vector<AblationRow> cmd_ablate(const RunContext& ctx) {
  const SplitEnvs data = load_splits(ctx);
  const BiddingEnv train_env = make_env(ctx, data, "train");
  for (std::uint64_t seed : ctx.config.eval.seeds) {
    for (const auto& name : {"safe", "spec", "neutral", "vanilla", "cvar", "meta_k2", "meta_k3"}) {
      ensure_trained(ctx, train_env, seed, name);
    }
  }
  std::vector<AblationRow> rows;
  for (const auto& [label, spec] : ablation_matrix()) {
    const EvaluationOutcome ev = cmd_evaluate(ctx, spec, ctx.config.eval.split);
    AblationRow row{label, spec, ev.aggregate.at("sharpe"), ev.aggregate.at("max_drawdown_abs"),
                    ev.aggregate.at("max_drawdown_rel"), ev.aggregate.at("cumulative_return"), ev.per_seed};
    rows.push_back(std::move(row));
  }
  const fs::path dir = ctx.out / "ablate";
  fs::create_directories(dir);
  std::ofstream out(dir / "ablation.csv", std::ios::binary);
  out << "# " << ctx.stamp(0) << " split=" << ctx.config.eval.split << '\n'
      << "configuration,policy,seeds,sharpe_mean,sharpe_std,max_drawdown_abs_mean,max_drawdown_rel_mean,"
         "cumulative_return_mean\n";
  for (const auto& r : rows) {
    out << r.configuration << ',' << r.policy << ',' << r.per_seed.size() << ',' << format_optional(r.sharpe.mean) << ','
        << format_optional(r.sharpe.std) << ',' << format_optional(r.max_drawdown_abs.mean) << ','
        << format_optional(r.max_drawdown_rel.mean) << ',' << format_optional(r.cumulative_return.mean) << '\n';
  }
  ctx.say() << "ablation table written to " << (dir / "ablation.csv").string() << "\n";
  return rows;
}

// ---------------------------------------------------------------------------
// Report

/// Collects every aggregate.json under out/eval into one summary table.
inline std::string cmd_report(const RunContext& ctx) {
  const fs::path root = ctx.out / "eval";
  if (!fs::exists(root)) throw PrerequisiteError("no evaluation results under " + root.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() == "aggregate.json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::ostringstream table;
  table << "policy,split,seeds,cumulative_return_mean,sharpe_mean,sortino_mean,max_drawdown_abs_mean,"
           "allocation_entropy_mean,regime_alignment_mean\n";
  for (const auto& f : files) {
    std::ifstream in(f);
    const nlohmann::json j = nlohmann::json::parse(in);
    const auto get = [&](const char* k) {
      const auto& v = j.at("mean").at(k);
      return v.is_null() ? std::string("NA") : format_double(v.get<double>());
    };
    table << j.at("policy").get<std::string>() << ',' << j.at("split").get<std::string>() << ','
          << j.at("seeds").size() << ',' << get("cumulative_return") << ',' << get("sharpe") << ',' << get("sortino")
          << ',' << get("max_drawdown_abs") << ',' << get("allocation_entropy") << ',' << get("regime_alignment")
          << '\n';
  }
  std::ofstream out(ctx.out / "report.csv", std::ios::binary);
  out << "# " << ctx.stamp(0) << '\n' << table.str();
  ctx.say() << table.str();
  return table.str();
}

}  // namespace marsbid
