#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "hapsnav/config.hpp"
#include "hapsnav/harness.hpp"
#include "hapsnav/raim.hpp"
#include "hapsnav/solver.hpp"

using namespace hapsnav;

namespace {

struct Epoch {
  std::vector<SourceState> sources;
  std::vector<Observation> observations;
};

// One synthesized dense-urban epoch with all six platforms.
Epoch sample_epoch() {
  const ScenarioConfig cfg = load_config(std::string(HAPSNAV_CONFIG_DIR) + "/dense_urban.toml");
  Epoch e;
  for (const auto& o : cfg.satellites()) e.sources.push_back(circular_orbit_state(o, 0.0));
  for (const auto& h : cfg.haps_platforms()) e.sources.push_back(haps_position(h, 0.0));
  GaussMarkovBank bank(10.0, 6.0);
  std::mt19937_64 rng(1);
  std::vector<std::string> ids;
  for (const auto& s : e.sources) ids.push_back(s.id);
  bank.advance(ids, 1.0, rng);
  const EpochTruth truth{0.0, cfg.truth_position(0.0), cfg.truth_clock(0.0)};
  e.observations = synthesize_epoch(truth, e.sources, EnvironmentModel::suburban(), cfg.synthesis_options(), bank, rng);
  return e;
}

void BM_SolveEpoch(benchmark::State& state) {
  const Epoch e = sample_epoch();
  const DelaysProvider delays = make_delays_provider(AtmosphereModel{}, 388800.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_epoch(e.observations, e.sources, delays, SolverConfig{}));
  }
  state.counters["sources"] = static_cast<double>(e.observations.size());
}
BENCHMARK(BM_SolveEpoch);

void BM_SolveEpochRaim(benchmark::State& state) {
  const Epoch e = sample_epoch();
  const DelaysProvider delays = make_delays_provider(AtmosphereModel{}, 388800.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_epoch_raim(e.observations, e.sources, delays, SolverConfig{}, RaimConfig{}));
  }
}
BENCHMARK(BM_SolveEpochRaim);

void BM_LsqStep(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  EpochGeometry g;
  const auto n = static_cast<Eigen::Index>(state.range(0));
  g.H.resize(n, 4);
  g.b.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d u = Eigen::Vector3d(nd(rng), nd(rng), std::abs(nd(rng)) + 0.2).normalized();
    g.H.row(i) << -u.transpose(), 1.0;
    g.b(i) = nd(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(lsq_step(g));
}
BENCHMARK(BM_LsqStep)->Arg(6)->Arg(12)->Arg(24);

void BM_Campaign(benchmark::State& state) {
  ScenarioConfig cfg = load_config(std::string(HAPSNAV_CONFIG_DIR) + "/suburban.toml");
  cfg.receiver.n_epochs = 100;
  const auto variants = parse_variants("gps,gps+6haps,gps+6haps+raim");
  const std::vector<std::uint64_t> seeds{1};
  for (auto _ : state) benchmark::DoNotOptimize(run_campaign(cfg, variants, seeds, {1}));
  state.SetItemsProcessed(state.iterations() * 100 * 3);
}
BENCHMARK(BM_Campaign)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
