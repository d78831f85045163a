#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "marsbid/pipeline.hpp"

namespace {

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out = "out";
  std::vector<std::uint64_t> seeds;
  std::size_t workers = 1;
};

marsbid::RunContext make_context(const GlobalOptions& g) {
  marsbid::ConfigSources src;
  if (!g.config_path.empty()) src.file_text = marsbid::read_text_file(g.config_path);
  src.set_flags = g.sets;
  if (!g.seeds.empty()) {
    std::string list;
    for (auto s : g.seeds) list += (list.empty() ? "" : ",") + std::to_string(s);
    src.set_flags.push_back("eval.seeds=" + list);
  }
  marsbid::RunContext ctx;
  ctx.config = marsbid::load_config(src);
  ctx.out = g.out;
  ctx.workers = g.workers;
  if (ctx.workers == 0) throw marsbid::ConfigError("--workers must be >= 1");
  return ctx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-settlement bidding with a hierarchy of PPO agents"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config_path, "Config file (INI style)");
  app.add_option("--set", g.sets, "Override section.key=value (repeatable)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--seed", g.seeds, "Seed(s); overrides eval.seeds");
  app.add_option("--workers", g.workers, "Rollout worker threads")->capture_default_str();

  auto* gen = app.add_subcommand("generate-data", "Write the synthetic market series");
  auto* ingest = app.add_subcommand("ingest", "Load, validate and repair a market CSV");
  std::string csv_path;
  ingest->add_option("csv", csv_path, "Input CSV (defaults to data.path)");

  auto* train = app.add_subcommand("train", "Train one phase");
  std::string phase;
  train->add_option("--phase", phase, "university|meta|vanilla|cvar")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a policy on a split");
  std::string policy = "mars", split_name;
  evaluate->add_option("--policy", policy, "Policy spec")->capture_default_str();
  evaluate->add_option("--split", split_name, "train|test1|test2 (defaults to eval.split)");

  auto* ablate = app.add_subcommand("ablate", "Train missing models and evaluate the ablation matrix");
  auto* report = app.add_subcommand("report", "Summarise every evaluation under --out");
  auto* dump = app.add_subcommand("config", "Print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const marsbid::RunContext ctx = make_context(g);
    if (*gen) {
      marsbid::cmd_generate_data(ctx);
    } else if (*ingest) {
      const std::string path = csv_path.empty() ? ctx.config.data_path : csv_path;
      if (path.empty()) throw marsbid::ConfigError("no CSV given (pass a path or set data.path)");
      marsbid::cmd_ingest(ctx, path);
    } else if (*train) {
      marsbid::cmd_train(ctx, phase);
    } else if (*evaluate) {
      marsbid::cmd_evaluate(ctx, policy, split_name.empty() ? ctx.config.eval.split : split_name);
    } else if (*ablate) {
      marsbid::cmd_ablate(ctx);
    } else if (*report) {
      marsbid::cmd_report(ctx);
    } else if (*dump) {
      std::cout << marsbid::dump_config(ctx.config);
    }
  } catch (const marsbid::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
