#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "feedloc/pipeline.hpp"
#include "feedloc/refine.hpp"
#include "feedloc/scale.hpp"
#include "feedloc/simulator.hpp"

namespace {

using namespace feedloc;

Intrinsics bench_intrinsics() { return {500.0, 500.0, 320.0, 240.0, 640, 480}; }

void BM_Stage2Ransac(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.02);
  const Mat3 r_align = sim::random_rotation(rng);
  std::vector<Vec3> gt;
  std::vector<Vec3> local;
  for (int i = 0; i < n; ++i) {
    const double a = 0.2 * i;
    gt.emplace_back(4.0 * std::cos(a), 4.0 * std::sin(a), 1.5);
    local.push_back(r_align.transpose() * gt.back() / 2.5 + Vec3(noise(rng), noise(rng), noise(rng)));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(stage2_ransac_scale(local, gt, r_align, Stage2Config{}));
  }
}
BENCHMARK(BM_Stage2Ransac)->Arg(5)->Arg(10)->Arg(50);

void BM_StructureOnlyBa(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> px(0.0, 1.0);
  std::vector<RigidPose> poses;
  for (int i = 0; i < 5; ++i) {
    const double a = 0.4 * (i - 2);
    poses.push_back(sim::look_at(Vec3(4.0 * std::sin(a), -4.0 * std::cos(a), 1.0), Vec3(0, 0, 0.5)));
  }
  const std::vector<Intrinsics> intrinsics(poses.size(), bench_intrinsics());
  std::vector<Track> tracks;
  for (int t = 0; t < state.range(0); ++t) {
    const Vec3 x(u(rng), u(rng), 0.5 + 0.5 * u(rng));
    Track track;
    for (std::size_t v = 0; v < poses.size(); ++v) {
      track.observations.push_back({static_cast<int>(v), project(poses[v], intrinsics[v], x) + Vec2(px(rng), px(rng))});
    }
    track.point = x + 0.05 * Vec3(u(rng), u(rng), u(rng));
    tracks.push_back(track);
  }
  for (auto _ : state) {
    std::vector<Track> work = tracks;
    structure_only_ba(work, poses, intrinsics, BaConfig{});
    benchmark::DoNotOptimize(work.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StructureOnlyBa)->Arg(300)->Arg(3000);

std::vector<Correspondence2D3D> pnp_problem(std::mt19937_64& rng, const RigidPose& truth, int n) {
  const Intrinsics k = bench_intrinsics();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Correspondence2D3D> corr;
  for (int i = 0; i < n; ++i) {
    Correspondence2D3D c;
    c.track = i;
    c.query_keypoint = i;
    c.point = backproject(truth, k, Vec2(u(rng) * 639.0, u(rng) * 479.0), 2.0 + 10.0 * u(rng));
    c.query_pixel = project(truth, k, c.point) + (i % 10 < 3 ? Vec2(40.0, -30.0) : Vec2(u(rng) - 0.5, u(rng) - 0.5));
    corr.push_back(c);
  }
  return corr;
}

void BM_PnpRefine(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const RigidPose truth{Mat3::Identity(), Vec3(0.1, -0.2, 0.3)};
  const auto corr = pnp_problem(rng, truth, static_cast<int>(state.range(0)));
  const RigidPose init{Eigen::AngleAxisd(0.02, Vec3::UnitY()).toRotationMatrix(), Vec3(0.15, -0.2, 0.3)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(pnp_refine(corr, init, bench_intrinsics(), PnpConfig{}));
  }
}
BENCHMARK(BM_PnpRefine)->Arg(50)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_GuidedMatch(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  const Intrinsics k = bench_intrinsics();
  const int dim = 64;
  FeatureSet query;
  query.descriptors.resize(2000, dim);
  for (int i = 0; i < 2000; ++i) {
    query.keypoints.emplace_back(u(rng) * 639.0, u(rng) * 479.0);
    for (int d = 0; d < dim; ++d) query.descriptors(i, d) = n(rng);
    query.descriptors.row(i).normalize();
  }
  std::vector<Track> tracks(static_cast<std::size_t>(state.range(0)));
  for (Track& t : tracks) {
    t.point = backproject(RigidPose{}, k, Vec2(u(rng) * 639.0, u(rng) * 479.0), 2.0 + 10.0 * u(rng));
    t.descriptor = query.descriptors.row(static_cast<int>(u(rng) * 2000)).transpose();
    t.converged = true;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(guided_match(tracks, RigidPose{}, query, k));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GuidedMatch)->Arg(1000)->Arg(10000);

void BM_Localize(benchmark::State& state) {
  sim::SceneSpec spec;
  spec.num_references = static_cast<int>(state.range(0));
  sim::CorruptionSpec c;
  c.sim_scale = 2.0;
  c.keypoint_noise_sigma = 1.0;
  c.pointmap_noise_sigma = 0.02;
  const sim::SimulatedScene scene = sim::simulate(spec, c, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(localize(scene.bundle, RunConfig{}));
  }
}
BENCHMARK(BM_Localize)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
