// Small end-to-end run: synthetic data, two workers, a meta-controller and
// a comparison against the static blend on held-out hours.
#include <iostream>
#include <memory>

#include "marsbid/baselines.hpp"
#include "marsbid/evaluation.hpp"
#include "marsbid/mars.hpp"

int main() {
  using namespace marsbid;

  SyntheticConfig syn;
  syn.n_hours = 24 * 7 * 16;
  syn.seed = 11;
  const MarketSeries full = generate_synthetic(syn);
  const std::size_t cut = full.size() * 3 / 4;
  auto train = std::make_shared<const MarketSeries>(
      MarketSeries{{full.records.begin(), full.records.begin() + cut}, full.provenance, {}});
  auto test = std::make_shared<const MarketSeries>(
      MarketSeries{{full.records.begin() + cut, full.records.end()}, full.provenance, {}});

  EnvConfig env_cfg;
  env_cfg.load_scale = train->max_of(Field::load_forecast);
  const BiddingEnv train_env(train, GeneratorSpec{}, env_cfg);
  BiddingEnv test_env(test, GeneratorSpec{}, env_cfg);

  HierarchyTrainingConfig cfg;
  cfg.base.total_steps = 20000;
  cfg.meta.total_steps = 10000;

  std::vector<Worker> workers;
  for (const auto& [worker, log] : train_university(train_env, {Role::safe, Role::spec}, cfg, 1)) {
    std::cout << to_string(worker.role) << ": " << log.rows.size() << " updates\n";
    workers.push_back(worker);
  }
  auto ensemble = std::make_shared<const AgentEnsemble>(std::move(workers));
  auto meta = std::make_shared<const ActorCritic>(train_meta(train_env, ensemble, cfg, 1).policy);

  HierarchicalPolicy mars(ensemble, meta);
  auto fixed = make_static_blend(ensemble);
  for (auto* p : {static_cast<BiddingPolicy*>(&mars), fixed.get()}) {
    const MetricReport m = compute_report(run_full_pass(test_env, *p, cfg.shaping));
    std::cout << (p == &mars ? "mars  " : "static") << "  cumulative " << m.cumulative_return << "  sharpe "
              << format_optional(m.sharpe) << "  max drawdown " << m.max_drawdown_abs << '\n';
  }
}
