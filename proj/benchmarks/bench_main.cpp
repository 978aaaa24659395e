#include "fusionpose/hungarian.hpp"
#include "fusionpose/losses.hpp"
#include "fusionpose/model.hpp"
#include "fusionpose/ops.hpp"
#include "fusionpose/synthdata.hpp"
#include "fusionpose/tape.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace fusionpose;

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t({rows, cols});
  for (double& x : t.data()) x = u(rng);
  return t;
}

Points3 random_points(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Points3 p(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
  return p;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor(n, n, rng), b = random_tensor(n, n, rng);
  for (auto _ : state) {
    Tape tape;
    Var c = ad::matmul(tape.constant(a), tape.constant(b));
    benchmark::DoNotOptimize(c.value().data().data());
  }
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

void BM_Hungarian(benchmark::State& state) {
  const auto n = state.range(0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  RowMatrix cost(n, n);
  for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(hungarian(cost));
}
BENCHMARK(BM_Hungarian)->Arg(8)->Arg(32)->Arg(64);

void BM_Chamfer(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const Points3 a = random_points(static_cast<std::size_t>(state.range(0)), rng);
  const Points3 b = random_points(256, rng);
  for (auto _ : state) benchmark::DoNotOptimize(chamfer(a, b));
}
BENCHMARK(BM_Chamfer)->Arg(21)->Arg(210);

void BM_GenerateSequence(benchmark::State& state) {
  const SceneConfig scene = reference_scene(4, 3, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    SequenceData s = generate_sequence(scene);
    benchmark::DoNotOptimize(s.frames.size());
  }
}
BENCHMARK(BM_GenerateSequence)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_WindowForwardBackward(benchmark::State& state) {
  ModelConfig c;
  c.width = static_cast<std::size_t>(state.range(0));
  Model m(c, 5);
  std::mt19937_64 rng(6);
  std::vector<FrameInput> frames(c.window);
  for (FrameInput& f : frames) {
    f.points = random_tensor(c.points, 3, rng);
    f.image = random_tensor(c.image_height * c.image_width, 3, rng);
    f.center = Eigen::Vector3d(9.0, 0.0, 0.0);
    f.point_uv.assign(c.points, Eigen::Vector2d(0.5, 0.5));
    f.point_uv_valid.assign(c.points, true);
  }
  std::vector<const FrameInput*> ptrs;
  for (const auto& f : frames) ptrs.push_back(&f);
  for (auto _ : state) {
    Tape tape;
    const auto out = m.forward_window(tape, ptrs);
    std::vector<Var> terms;
    for (const auto& o : out) terms.push_back(ad::sum(o.final_pose));
    Var loss = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) loss = ad::add(loss, terms[i]);
    tape.backward(loss);
  }
}
BENCHMARK(BM_WindowForwardBackward)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
