#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "marsbid/ledger.hpp"
#include "marsbid/metrics.hpp"
#include "marsbid/text.hpp"

namespace marsbid {

struct MetricReport {
  std::string policy;
  std::string split;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t steps = 0;
  double cumulative_return = 0.0;
  MaybeDouble sharpe;
  MaybeDouble sortino;
  double max_drawdown_abs = 0.0;
  MaybeDouble max_drawdown_rel;
  double mean_alpha = 0.0;
  MaybeDouble allocation_entropy;
  MaybeDouble regime_alignment;         // w_spec vs 24h volatility
  MaybeDouble regime_alignment_expost;  // w_spec vs [RT beat DA this hour]
  std::string convention = std::string(kRatioConvention);
};

inline MetricReport compute_report(const EpisodeLedger& ledger) {
  require(ledger.rows.size() >= 2, "ledger needs at least 2 steps for metrics");
  MetricReport m;
  const std::vector<double> profits = ledger.profits();
  m.steps = profits.size();
  const std::vector<double> equity = cumulative(profits);
  m.cumulative_return = equity.back();
  m.sharpe = sharpe(profits);
  m.sortino = sortino(profits);
  const Drawdown dd = max_drawdown(equity);
  m.max_drawdown_abs = dd.abs;
  m.max_drawdown_rel = dd.rel;
  double alpha_sum = 0.0;
  for (const auto& r : ledger.rows) alpha_sum += r.alpha;
  m.mean_alpha = alpha_sum / static_cast<double>(ledger.rows.size());

  if (ledger.hierarchical()) {
    m.allocation_entropy = allocation_entropy(ledger.weights());
    std::size_t spec = ledger.roles.size();
    for (std::size_t k = 0; k < ledger.roles.size(); ++k) {
      if (ledger.roles[k] == "spec") spec = k;
    }
    if (spec < ledger.roles.size()) {
      std::vector<double> w, vol, expost;
      for (const auto& r : ledger.rows) {
        w.push_back(r.weights[spec]);
        vol.push_back(r.volatility);
        expost.push_back(r.lmp_rt > r.lmp_da ? 1.0 : 0.0);
      }
      m.regime_alignment = regime_alignment(w, vol);
      m.regime_alignment_expost = pearson(w, expost);
    }
  }
  return m;
}

inline nlohmann::json to_json(const MetricReport& m) {
  const auto opt = [](const MaybeDouble& v) -> nlohmann::json { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return nlohmann::json{{"policy", m.policy},
                        {"split", m.split},
                        {"seed", m.seed},
                        {"config_hash", m.config_hash},
                        {"steps", m.steps},
                        {"cumulative_return", m.cumulative_return},
                        {"sharpe", opt(m.sharpe)},
                        {"sortino", opt(m.sortino)},
                        {"max_drawdown_abs", m.max_drawdown_abs},
                        {"max_drawdown_rel", opt(m.max_drawdown_rel)},
                        {"mean_alpha", m.mean_alpha},
                        {"allocation_entropy", opt(m.allocation_entropy)},
                        {"regime_alignment", opt(m.regime_alignment)},
                        {"regime_alignment_expost", opt(m.regime_alignment_expost)},
                        {"convention", m.convention}};
}

inline MetricReport report_from_json(const nlohmann::json& j) {
  const auto opt = [&](const char* k) -> MaybeDouble {
    if (!j.contains(k) || j.at(k).is_null()) return std::nullopt;
    return j.at(k).get<double>();
  };
  MetricReport m;
  m.policy = j.at("policy").get<std::string>();
  m.split = j.at("split").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.steps = j.at("steps").get<std::size_t>();
  m.cumulative_return = j.at("cumulative_return").get<double>();
  m.sharpe = opt("sharpe");
  m.sortino = opt("sortino");
  m.max_drawdown_abs = j.at("max_drawdown_abs").get<double>();
  m.max_drawdown_rel = opt("max_drawdown_rel");
  m.mean_alpha = j.at("mean_alpha").get<double>();
  m.allocation_entropy = opt("allocation_entropy");
  m.regime_alignment = opt("regime_alignment");
  m.regime_alignment_expost = opt("regime_alignment_expost");
  return m;
}

inline constexpr std::string_view kReportCsvHeader =
    "policy,split,seed,config_hash,steps,cumulative_return,sharpe,sortino,max_drawdown_abs,max_drawdown_rel,"
    "mean_alpha,allocation_entropy,regime_alignment,regime_alignment_expost";

inline std::string report_csv_row(const MetricReport& m) {
  return m.policy + "," + m.split + "," + std::to_string(m.seed) + "," + m.config_hash + "," +
         std::to_string(m.steps) + "," + format_double(m.cumulative_return) + "," + format_optional(m.sharpe) + "," +
         format_optional(m.sortino) + "," + format_double(m.max_drawdown_abs) + "," +
         format_optional(m.max_drawdown_rel) + "," + format_double(m.mean_alpha) + "," +
         format_optional(m.allocation_entropy) + "," + format_optional(m.regime_alignment) + "," +
         format_optional(m.regime_alignment_expost);
}

/// Mean and sample std across seeds of one metric; NA when undefined everywhere.
struct Aggregate {
  MaybeDouble mean;
  MaybeDouble std;
  std::size_t defined = 0;
};

inline Aggregate aggregate(const std::vector<MaybeDouble>& values) {
  Aggregate a;
  std::vector<double> v;
  for (const auto& x : values) {
    if (x) v.push_back(*x);
  }
  a.defined = v.size();
  if (v.empty()) return a;
  double s = 0.0;
  for (double x : v) s += x;
  a.mean = s / static_cast<double>(v.size());
  if (v.size() >= 2) {
    double ss = 0.0;
    for (double x : v) ss += (x - *a.mean) * (x - *a.mean);
    a.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return a;
}

inline std::map<std::string, Aggregate> aggregate_reports(const std::vector<MetricReport>& reports) {
  std::map<std::string, std::vector<MaybeDouble>> cols;
  for (const auto& m : reports) {
    cols["cumulative_return"].push_back(m.cumulative_return);
    cols["sharpe"].push_back(m.sharpe);
    cols["sortino"].push_back(m.sortino);
    cols["max_drawdown_abs"].push_back(m.max_drawdown_abs);
    cols["max_drawdown_rel"].push_back(m.max_drawdown_rel);
    cols["mean_alpha"].push_back(m.mean_alpha);
    cols["allocation_entropy"].push_back(m.allocation_entropy);
    cols["regime_alignment"].push_back(m.regime_alignment);
    cols["regime_alignment_expost"].push_back(m.regime_alignment_expost);
  }
  std::map<std::string, Aggregate> out;
  for (const auto& [k, v] : cols) out[k] = aggregate(v);
  return out;
}

inline void write_rolling_csv(const std::string& path, std::span<const double> profits, std::size_t window,
                              const std::string& comment = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "index,rolling_mean,rolling_sharpe\n";
  if (profits.size() < window) return;
  for (const auto& p : rolling_metrics(profits, window)) {
    out << p.index << ',' << format_double(p.mean) << ',' << format_optional(p.sharpe) << '\n';
  }
}

}  // namespace marsbid
