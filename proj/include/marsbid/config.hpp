#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "marsbid/baselines.hpp"
#include "marsbid/bidding_env.hpp"
#include "marsbid/error.hpp"
#include "marsbid/market_data.hpp"
#include "marsbid/ppo.hpp"
#include "marsbid/reward_shaping.hpp"
#include "marsbid/text.hpp"

namespace marsbid {

struct EvalConfig {
  std::string split = "test1";
  std::size_t episodes = 1;  // 1 = one contiguous pass over the split
  std::size_t rolling_window = 720;
  std::vector<std::uint64_t> seeds = {7};
};

struct RunConfig {
  // data
  CsvSchema schema;
  std::string data_path;  // CSV consumed by `ingest`
  std::int64_t seasonal_period = 168;
  SyntheticConfig synthetic;
  SplitSpec split;
  // simulation
  GeneratorSpec generator;
  EnvConfig env;
  ShapingParams shaping;
  PpoConfig ppo_base;
  PpoConfig ppo_meta;
  std::size_t ensemble_k = 2;
  RollingOptConfig rolling_opt;
  EvalConfig eval;
  std::size_t checkpoint_every = 0;  // updates; 0 = final checkpoint only

  std::string hash;                                 // hex FNV-1a of the canonical key=value listing
  std::map<std::string, std::string> effective;     // every key with its effective value
};

namespace detail {

inline const std::map<std::string, std::string>& config_defaults() {
  static const std::map<std::string, std::string> defaults = [] {
    std::map<std::string, std::string> d{
        {"data.path", ""},
        {"data.seasonal_period", "168"},
        {"data.col_timestamp", "timestamp"},
        {"synthetic.n_hours", "67200"},
        {"synthetic.start", "2018-01-01T00:00:00Z"},
        {"synthetic.calm_mean", "40"},
        {"synthetic.calm_std", "4"},
        {"synthetic.volatile_mean", "45"},
        {"synthetic.volatile_std", "12"},
        {"synthetic.regime_dwell_hours", "96"},
        {"synthetic.rt_spread_std", "4"},
        {"synthetic.diurnal_amplitude", "8"},
        {"synthetic.rt_premium_calm", "4"},
        {"synthetic.rt_spike_prob", "0.08"},
        {"synthetic.rt_spike_mean", "-120"},
        {"synthetic.load_mean", "10000"},
        {"synthetic.load_amplitude", "2000"},
        {"synthetic.gas_mean", "4"},
        {"synthetic.gas_daily_std", "0.05"},
        {"synthetic.seed", "7"},
        {"split.train", "2018-01-01:2021-12-31"},
        {"split.test1", "2022-01-01:2022-12-31"},
        {"split.test2", "2024-09-01:2025-08-31"},
        {"generator.p_max", "100"},
        {"generator.p_min", "40"},
        {"generator.ramp_rate", "50"},
        {"generator.min_up", "4"},
        {"generator.min_down", "4"},
        {"generator.startup_cost", "500"},
        {"generator.heat_rate", "7.5"},
        {"generator.ramp_penalty", "10"},
        {"generator.mutd_penalty", "1000"},
        {"env.episode_len", "168"},
        {"env.price_scale", "100"},
        {"env.load_scale", "0"},
        {"env.dispatch_mode", "always_on"},
        {"env.weather_features", "false"},
        {"shaping.lambda_role", "0.5"},
        {"shaping.lambda_risk", "5"},
        {"shaping.s_linear", "1000"},
        {"shaping.s_var", "100"},
        {"shaping.neutral_band", "0.2"},
        {"shaping.cvar_alpha", "0.05"},
        {"shaping.cvar_window", "500"},
        {"ensemble.k", "2"},
        {"rolling_opt.window", "24"},
        {"rolling_opt.hysteresis", "0"},
        {"eval.split", "test1"},
        {"eval.episodes", "1"},
        {"eval.rolling_window", "720"},
        {"eval.seeds", "7"},
        {"io.checkpoint_every", "0"},
    };
    for (std::size_t f = 0; f < kFieldCount; ++f) d["data.col_" + std::string(kFieldNames[f])] = std::string(kFieldNames[f]);
    for (const char* sec : {"ppo_base", "ppo_meta"}) {
      const std::string s = sec;
      d[s + ".clip_epsilon"] = "0.2";
      d[s + ".gamma"] = "0.99";
      d[s + ".gae_lambda"] = "0.95";
      d[s + ".epochs"] = "10";
      d[s + ".minibatch_size"] = "64";
      d[s + ".learning_rate"] = "0.0003";
      d[s + ".value_coef"] = "0.5";
      d[s + ".entropy_coef"] = "0.01";
      d[s + ".max_grad_norm"] = "0.5";
      d[s + ".steps_per_update"] = "2048";
      d[s + ".target_kl"] = "0.02";
      d[s + ".normalize_reward"] = "true";
      d[s + ".hidden"] = "64,64";
    }
    d["ppo_base.total_steps"] = "200000";
    d["ppo_meta.total_steps"] = "100000";
    return d;
  }();
  return defaults;
}

class ValueReader {
 public:
  explicit ValueReader(const std::map<std::string, std::string>& kv) : kv_(kv) {}

  const std::string& str(const std::string& key) const { return kv_.at(key); }

  double num(const std::string& key) const {
    const auto v = parse_double(str(key));
    if (!v || !std::isfinite(*v)) throw ConfigError(key + ": expected a number, got '" + str(key) + "'");
    return *v;
  }

  std::int64_t integer(const std::string& key) const {
    const auto v = parse_int(str(key));
    if (!v) throw ConfigError(key + ": expected an integer, got '" + str(key) + "'");
    return *v;
  }

  std::size_t count(const std::string& key) const {
    const auto v = integer(key);
    if (v < 0) throw ConfigError(key + ": must be >= 0");
    return static_cast<std::size_t>(v);
  }

  bool flag(const std::string& key) const {
    const auto& s = str(key);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError(key + ": expected true/false, got '" + s + "'");
  }

  std::vector<std::size_t> counts(const std::string& key) const {
    std::vector<std::size_t> out;
    for (auto part : split(str(key), ',')) {
      const auto v = parse_int(part);
      if (!v || *v <= 0) throw ConfigError(key + ": expected a comma list of positive integers");
      out.push_back(static_cast<std::size_t>(*v));
    }
    return out;
  }

 private:
  const std::map<std::string, std::string>& kv_;
};

inline PpoConfig read_ppo(const ValueReader& r, const std::string& s) {
  PpoConfig p;
  p.clip_epsilon = r.num(s + ".clip_epsilon");
  p.gamma = r.num(s + ".gamma");
  p.gae_lambda = r.num(s + ".gae_lambda");
  p.epochs_per_update = r.count(s + ".epochs");
  p.minibatch_size = r.count(s + ".minibatch_size");
  p.learning_rate = r.num(s + ".learning_rate");
  p.value_coef = r.num(s + ".value_coef");
  p.entropy_coef = r.num(s + ".entropy_coef");
  p.max_grad_norm = r.num(s + ".max_grad_norm");
  p.total_steps = r.count(s + ".total_steps");
  p.steps_per_update = r.count(s + ".steps_per_update");
  p.target_kl = r.num(s + ".target_kl");
  p.normalize_reward = r.flag(s + ".normalize_reward");
  p.hidden = r.counts(s + ".hidden");
  p.validate();
  return p;
}

inline std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

/// Source of key/value overrides, applied in order: file, environment, --set.
struct ConfigSources {
  std::string file_text;                 // contents of the config file (may be empty)
  std::vector<std::string> set_flags;    // "section.key=value"
  bool read_environment = true;          // MARSBID_<SECTION>__<KEY>
};

/// Parses "[section]" / "key = value" text into section.key entries.
inline std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::string section;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(detail::concat("config line ", line_no, ": malformed section header"));
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(detail::concat("config line ", line_no, ": expected key = value"));
    const std::string key = std::string(trim(line.substr(0, eq)));
    if (section.empty()) throw ConfigError(detail::concat("config line ", line_no, ": key outside any [section]"));
    kv[section + "." + key] = std::string(trim(line.substr(eq + 1)));
  }
  return kv;
}

inline RunConfig build_config(const std::map<std::string, std::string>& overrides) {
  std::map<std::string, std::string> kv = detail::config_defaults();
  for (const auto& [k, v] : overrides) {
    if (!kv.count(k)) throw ConfigError("unknown config key '" + k + "'");
    kv[k] = v;
  }
  const detail::ValueReader r(kv);
  RunConfig c;
  c.effective = kv;

  c.data_path = r.str("data.path");
  c.seasonal_period = r.integer("data.seasonal_period");
  c.schema.timestamp = r.str("data.col_timestamp");
  for (std::size_t f = 0; f < kFieldCount; ++f) c.schema.columns[f] = r.str("data.col_" + std::string(kFieldNames[f]));

  auto& s = c.synthetic;
  s.n_hours = r.integer("synthetic.n_hours");
  try {
    s.start = parse_utc_hour(r.str("synthetic.start"));
  } catch (const DataError& e) {
    throw ConfigError(std::string("synthetic.start: ") + e.what());
  }
  s.calm_mean = r.num("synthetic.calm_mean");
  s.calm_std = r.num("synthetic.calm_std");
  s.volatile_mean = r.num("synthetic.volatile_mean");
  s.volatile_std = r.num("synthetic.volatile_std");
  s.regime_dwell_hours = r.num("synthetic.regime_dwell_hours");
  s.rt_spread_std = r.num("synthetic.rt_spread_std");
  s.diurnal_amplitude = r.num("synthetic.diurnal_amplitude");
  s.rt_premium_calm = r.num("synthetic.rt_premium_calm");
  s.rt_spike_prob = r.num("synthetic.rt_spike_prob");
  s.rt_spike_mean = r.num("synthetic.rt_spike_mean");
  s.load_mean = r.num("synthetic.load_mean");
  s.load_amplitude = r.num("synthetic.load_amplitude");
  s.gas_mean = r.num("synthetic.gas_mean");
  s.gas_daily_std = r.num("synthetic.gas_daily_std");
  s.seed = static_cast<std::uint64_t>(r.integer("synthetic.seed"));
  s.validate();

  c.split.train = parse_date_range(r.str("split.train"));
  c.split.test1 = parse_date_range(r.str("split.test1"));
  c.split.test2 = parse_date_range(r.str("split.test2"));
  c.split.validate();

  auto& g = c.generator;
  g.p_max = r.num("generator.p_max");
  g.p_min = r.num("generator.p_min");
  g.ramp_rate = r.num("generator.ramp_rate");
  g.min_up = static_cast<int>(r.integer("generator.min_up"));
  g.min_down = static_cast<int>(r.integer("generator.min_down"));
  g.startup_cost = r.num("generator.startup_cost");
  g.heat_rate = r.num("generator.heat_rate");
  g.ramp_penalty = r.num("generator.ramp_penalty");
  g.mutd_penalty = r.num("generator.mutd_penalty");
  g.validate();

  c.env.episode_len = r.count("env.episode_len");
  c.env.price_scale = r.num("env.price_scale");
  c.env.load_scale = r.num("env.load_scale");
  c.env.dispatch_mode = parse_dispatch_mode(r.str("env.dispatch_mode"));
  c.env.weather_features = r.flag("env.weather_features");
  c.env.validate();

  auto& sh = c.shaping;
  sh.lambda_role = r.num("shaping.lambda_role");
  sh.lambda_risk = r.num("shaping.lambda_risk");
  sh.s_linear = r.num("shaping.s_linear");
  sh.s_var = r.num("shaping.s_var");
  sh.neutral_band = r.num("shaping.neutral_band");
  sh.cvar_alpha = r.num("shaping.cvar_alpha");
  sh.cvar_window = r.count("shaping.cvar_window");
  sh.validate();

  c.ppo_base = detail::read_ppo(r, "ppo_base");
  c.ppo_meta = detail::read_ppo(r, "ppo_meta");
  c.ensemble_k = r.count("ensemble.k");
  require<ConfigError>(c.ensemble_k == 2 || c.ensemble_k == 3, "ensemble.k must be 2 or 3");

  c.rolling_opt.window = r.count("rolling_opt.window");
  c.rolling_opt.hysteresis = r.num("rolling_opt.hysteresis");
  c.rolling_opt.validate();

  c.eval.split = r.str("eval.split");
  require<ConfigError>(c.eval.split == "train" || c.eval.split == "test1" || c.eval.split == "test2",
                       "eval.split must be train|test1|test2");
  c.eval.episodes = r.count("eval.episodes");
  require<ConfigError>(c.eval.episodes >= 1, "eval.episodes must be >= 1");
  c.eval.rolling_window = r.count("eval.rolling_window");
  require<ConfigError>(c.eval.rolling_window >= 2, "eval.rolling_window must be >= 2");
  c.eval.seeds.clear();
  for (auto part : split(r.str("eval.seeds"), ',')) {
    const auto v = parse_int(part);
    if (!v || *v < 0) throw ConfigError("eval.seeds: expected a comma list of non-negative integers");
    c.eval.seeds.push_back(static_cast<std::uint64_t>(*v));
  }
  c.checkpoint_every = r.count("io.checkpoint_every");

  std::string canonical;
  for (const auto& [k, v] : kv) canonical += k + "=" + v + "\n";
  c.hash = hex64(fnv1a(canonical));
  return c;
}

/// Layers file text, MARSBID_ environment variables and --set flags (flags win).
inline RunConfig load_config(const ConfigSources& src) {
  std::map<std::string, std::string> kv = parse_config_text(src.file_text);
  const auto& defaults = detail::config_defaults();
  if (src.read_environment) {
    for (const auto& [key, _] : defaults) {
      const auto dot = key.find('.');
      const std::string var = "MARSBID_" + detail::upper(key.substr(0, dot)) + "__" + detail::upper(key.substr(dot + 1));
      if (const char* v = std::getenv(var.c_str())) kv[key] = v;
    }
  }
  for (const auto& flag : src.set_flags) {
    const auto eq = flag.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + flag + "'");
    kv[std::string(trim(std::string_view(flag).substr(0, eq)))] = std::string(trim(std::string_view(flag).substr(eq + 1)));
  }
  return build_config(kv);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Every key with its effective value, in file syntax.
inline std::string dump_config(const RunConfig& c) {
  std::string out;
  std::string section;
  for (const auto& [k, v] : c.effective) {
    const auto dot = k.find('.');
    const std::string sec = k.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
      section = sec;
    }
    out += k.substr(dot + 1) + " = " + v + "\n";
  }
  return out;
}

}  // namespace marsbid
