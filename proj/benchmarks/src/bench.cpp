// Microbenchmarks for the hot paths: spatial queries, warp evaluation,
// system assembly and the end-to-end registration loop.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "topowarp/icp.hpp"
#include "topowarp/kd_tree.hpp"
#include "topowarp/solver.hpp"
#include "topowarp/synthetic.hpp"
#include "topowarp/topology.hpp"
#include "topowarp/warp.hpp"

namespace tw = topowarp;

namespace {

std::vector<tw::Vec3> random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> box(0.0, 0.5);
  std::vector<tw::Vec3> pts(n);
  for (auto& p : pts) p = tw::Vec3(box(gen), box(gen), box(gen));
  return pts;
}

void bm_kdtree_build(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    tw::KdTree tree(pts);
    benchmark::DoNotOptimize(tree);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_kdtree_build)->Arg(1000)->Arg(10000)->Arg(50000);

void bm_kdtree_knn(benchmark::State& state) {
  const auto pts = random_points(20000, 2);
  const auto queries = random_points(static_cast<std::size_t>(state.range(0)), 3);
  const tw::KdTree tree(pts);
  for (auto _ : state) {
    for (const auto& q : queries) benchmark::DoNotOptimize(tree.knn(q, 8));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_kdtree_knn)->Arg(1000)->Arg(10000);

void bm_kdtree_radius(benchmark::State& state) {
  const auto pts = random_points(20000, 4);
  const auto queries = random_points(1000, 5);
  const tw::KdTree tree(pts);
  for (auto _ : state) {
    for (const auto& q : queries) benchmark::DoNotOptimize(tree.radius(q, 0.02));
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(bm_kdtree_radius);

void bm_graph_to_dense(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 6);
  tw::DeformationGraph g = tw::build_graph(pts, 0.025, 4);
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> small(-0.05, 0.05);
  for (auto& p : g.params) {
    p.angles = tw::Vec3(small(gen), small(gen), small(gen));
    p.offsets = tw::Vec3(small(gen), small(gen), small(gen));
  }
  for (auto _ : state) benchmark::DoNotOptimize(tw::graph_to_dense(g, pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_graph_to_dense)->Arg(5000)->Arg(20000);

void bm_build_system(benchmark::State& state) {
  tw::SceneParams params;
  params.spacing = 0.008;
  const tw::SyntheticScene scene = tw::generate_scene(tw::SceneKind::Hinge, params, 8);
  const tw::DeformationGraph g = tw::build_graph(scene.source.points, 0.025, 4);
  tw::CorrespondenceSet corr;
  for (int i = 0; i < static_cast<int>(scene.source.size()); ++i) corr.dense.push_back({i, i});
  const tw::WarpProblem problem(g, scene.source, scene.target, corr, tw::ObjectiveConfig{});
  const Eigen::VectorXd theta = Eigen::VectorXd::Zero(problem.unknowns());
  for (auto _ : state) benchmark::DoNotOptimize(problem.build_system(theta));
}
BENCHMARK(bm_build_system)->Unit(benchmark::kMillisecond);

void bm_stretch(benchmark::State& state) {
  const tw::SyntheticScene scene = tw::generate_scene(tw::SceneKind::Separation, {}, 9);
  const tw::DenseWarp warp = scene.gt_warp;
  for (auto _ : state) benchmark::DoNotOptimize(tw::stretch(scene.source, warp, 0.015));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(scene.source.size()));
}
BENCHMARK(bm_stretch)->Unit(benchmark::kMillisecond);

void bm_register_rigid(benchmark::State& state) {
  tw::SceneParams params;
  params.spacing = 0.01;
  const tw::SyntheticScene scene = tw::generate_scene(tw::SceneKind::Rigid, params, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tw::register_clouds(scene.source, scene.target, tw::IcpConfig{}));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(scene.source.size()));
}
BENCHMARK(bm_register_rigid)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
