#include <benchmark/benchmark.h>

#include <random>

#include "movingout/bass.hpp"
#include "movingout/distance_field.hpp"
#include "movingout/maps.hpp"
#include "movingout/nn.hpp"
#include "movingout/physics.hpp"
#include "movingout/policies.hpp"

using namespace movingout;

namespace {

JointAction drift(int k) {
  JointAction a{};
  const double angle = 0.1 * k;
  a[0].move = 0.02;
  a[0].heading = {std::cos(angle), std::sin(angle)};
  a[1].move = -0.01;
  a[1].heading = {std::cos(-angle), std::sin(-angle)};
  return a;
}

}  // namespace

static void BM_PhysicsStep(benchmark::State& st) {
  const WorldState s0 = initial_state(builtin_map(static_cast<int>(st.range(0))));
  WorldState s = s0;
  int k = 0;
  for (auto _ : st) {
    s = step(s, drift(k++));
    benchmark::DoNotOptimize(s);
    if (k % 300 == 0) s = s0;
  }
}
BENCHMARK(BM_PhysicsStep)->Arg(1)->Arg(5)->Arg(12);

static void BM_DistanceFieldBuild(benchmark::State& st) {
  const Arena arena = *builtin_map(static_cast<int>(st.range(0))).arena();
  for (auto _ : st) benchmark::DoNotOptimize(DistanceField::build(arena));
}
BENCHMARK(BM_DistanceFieldBuild)->Arg(1)->Arg(8)->Arg(12);

static void BM_ProgressFieldBuild(benchmark::State& st) {
  const WorldState s = initial_state(builtin_map(static_cast<int>(st.range(0))));
  for (auto _ : st) benchmark::DoNotOptimize(ProgressField(s));
}
BENCHMARK(BM_ProgressFieldBuild)->Arg(3)->Arg(12);

static void BM_OracleSelect(benchmark::State& st) {
  const MapSpec map = builtin_map(static_cast<int>(st.range(0)));
  const WorldState s = initial_state(map);
  const PolicyPtr policy = make_policy(parse_policy_arg("scripted-helper:0.5"), map);
  const ProgressField field(s);
  SelectionConfig cfg;
  cfg.n = static_cast<int>(st.range(1));
  Rng rng = make_rng(0, 100);
  const ActionCommand proposal = policy->act(encode_observation(s, 0), &rng);
  for (auto _ : st) benchmark::DoNotOptimize(select_action(s, 0, *policy, proposal, nullptr, field, cfg, rng));
}
BENCHMARK(BM_OracleSelect)->Args({3, 8})->Args({12, 8})->Args({12, 32})->Unit(benchmark::kMicrosecond);

static void BM_NetForward(benchmark::State& st) {
  const int batch = static_cast<int>(st.range(0));
  const nn::DenseNet net({76, 128, 128, 4}, {nn::Activation::kRelu, nn::Activation::kRelu, nn::Activation::kIdentity},
                         1);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  nn::Matrix x(76, batch);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  for (auto _ : st) benchmark::DoNotOptimize(net.forward(x));
  st.SetItemsProcessed(st.iterations() * batch);
}
BENCHMARK(BM_NetForward)->Arg(1)->Arg(8)->Arg(256);

BENCHMARK_MAIN();
