#pragma once

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "marsbid/bidding_env.hpp"
#include "marsbid/text.hpp"

namespace marsbid {

struct LedgerRow {
  UtcHour timestamp;
  double lmp_da = 0.0;
  double lmp_rt = 0.0;
  double volatility = 0.0;  // unscaled 24h DA volatility seen by the policy
  double action = 0.0;      // executed raw action in [-1,1]
  double alpha = 0.0;
  double profit = 0.0;
  ProfitComponents components;
  double reward_meta = 0.0;
  std::vector<double> weights;    // hierarchical runs only
  std::vector<double> proposals;  // worker raw actions, hierarchical/ensemble runs only
};

/// Per-step record of one evaluation pass.
struct EpisodeLedger {
  std::vector<std::string> roles;  // names of the weight/proposal columns
  std::vector<LedgerRow> rows;

  bool hierarchical() const { return !rows.empty() && !rows.front().weights.empty(); }

  std::vector<double> profits() const {
    std::vector<double> p;
    p.reserve(rows.size());
    for (const auto& r : rows) p.push_back(r.profit);
    return p;
  }

  std::vector<std::vector<double>> weights() const {
    std::vector<std::vector<double>> w;
    w.reserve(rows.size());
    for (const auto& r : rows) w.push_back(r.weights);
    return w;
  }

  void write_csv(std::ostream& out, const std::string& comment = {}) const {
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "timestamp,lmp_da,lmp_rt,volatility,action,alpha,profit,revenue_da,revenue_rt,cost_marginal,cost_startup,"
           "penalty,reward_meta";
    const bool has_w = hierarchical();
    const bool has_p = !rows.empty() && !rows.front().proposals.empty();
    if (has_w) {
      for (const auto& r : roles) out << ",w_" << r;
    }
    if (has_p) {
      for (const auto& r : roles) out << ",a_" << r;
    }
    out << '\n';
    for (const auto& r : rows) {
      out << format_utc_hour(r.timestamp) << ',' << format_double(r.lmp_da) << ',' << format_double(r.lmp_rt) << ','
          << format_double(r.volatility) << ',' << format_double(r.action) << ',' << format_double(r.alpha) << ','
          << format_double(r.profit) << ',' << format_double(r.components.revenue_da) << ','
          << format_double(r.components.revenue_rt) << ',' << format_double(r.components.cost_marginal) << ','
          << format_double(r.components.cost_startup) << ',' << format_double(r.components.penalty) << ','
          << format_double(r.reward_meta);
      if (has_w) {
        for (double w : r.weights) out << ',' << format_double(w);
      }
      if (has_p) {
        for (double a : r.proposals) out << ',' << format_double(a);
      }
      out << '\n';
    }
  }

  void write_csv(const std::string& path, const std::string& comment = {}) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    write_csv(out, comment);
  }
};

}  // namespace marsbid
