#include <benchmark/benchmark.h>

#include <random>

#include "dcar/affinity.hpp"
#include "dcar/classifier.hpp"
#include "dcar/embedding_objective.hpp"
#include "dcar/gmm.hpp"
#include "dcar/spd.hpp"
#include "dcar/synthetic.hpp"

namespace {

using Eigen::MatrixXd;

MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> n;
  MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = n(rng);
  return g * g.transpose() + MatrixXd::Identity(d, d);
}

std::vector<dcar::LabeledComponent> components(int per_event, int dim) {
  dcar::ComponentSpec spec;
  spec.per_event = per_event;
  spec.dim = dim;
  std::vector<dcar::LabeledComponent> out;
  for (const auto& item : dcar::generate_components(spec)) {
    out.push_back({item.gmm.components.front(), std::stoi(item.label.substr(2)),
                   item.gmm.track_id});
  }
  return out;
}

void BM_SpdDistance(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto d = state.range(0);
  const dcar::SpdMatrix a(random_spd(rng, d)), b(random_spd(rng, d));
  const auto metric = static_cast<dcar::SpdMetric>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(dcar::spd_distance(metric, a, b));
  state.SetLabel(std::string(dcar::metric_name(metric)));
}
BENCHMARK(BM_SpdDistance)->ArgsProduct({{10, 40}, {0, 1, 2}});

void BM_ObjectiveGradient(benchmark::State& state) {
  const auto labeled = components(static_cast<int>(state.range(0)), 20);
  std::vector<dcar::GaussianComponent> comps;
  for (const auto& c : labeled) comps.push_back(c.component);
  const dcar::AffinityGraph graph = dcar::build_affinity(labeled);
  const dcar::EmbeddingObjective f(comps, graph, 1.0);
  const dcar::Embedding w = dcar::Embedding::random(20, 5, 3);
  for (auto _ : state) benchmark::DoNotOptimize(f.value_and_gradient(w.matrix()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.edge_count()));
}
BENCHMARK(BM_ObjectiveGradient)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_EmFit(benchmark::State& state) {
  dcar::SyntheticSpec spec;
  spec.events = 2;
  spec.train_per_event = 1;
  spec.test_per_event = 0;
  spec.frames = static_cast<int>(state.range(0));
  spec.dim = 20;
  const auto data = dcar::generate_synthetic(spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dcar::fit_track_gmm(data.tracks.front(), 5, 1));
  }
}
BENCHMARK(BM_EmFit)->Arg(500)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_KrrTrain(benchmark::State& state) {
  const auto labeled = components(static_cast<int>(state.range(0)), 10);
  std::vector<dcar::KernelPoint> points;
  std::vector<int> labels;
  for (const auto& c : labeled) {
    points.push_back(dcar::KernelPoint::from_component(c.component));
    labels.push_back(c.label);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(dcar::train_krr(points, labels, 3, dcar::KernelParams{}));
  }
}
BENCHMARK(BM_KrrTrain)->Arg(50)->Arg(300)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
