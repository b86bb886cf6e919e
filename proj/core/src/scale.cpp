#include "feedloc/scale.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "feedloc/error.hpp"
#include "feedloc/stats.hpp"

namespace feedloc {

std::string_view to_string(ScaleStage stage) { return stage == ScaleStage::Stage1 ? "stage1" : "stage2"; }

std::string_view to_string(ScaleMode mode) {
  switch (mode) {
    case ScaleMode::Auto: return "auto";
    case ScaleMode::TriOnly: return "tri_only";
    case ScaleMode::TrajOnly: return "traj_only";
  }
  return "auto";
}

int select_confidence_anchor(const PredictionSet& predictions, std::span<const int> references) {
  int best = references.front();
  double best_sum = -std::numeric_limits<double>::infinity();
  for (int ref : references) {
    const double s = predictions.confidence_maps.at(ref).sum();
    if (s > best_sum) {
      best_sum = s;
      best = ref;
    }
  }
  return best;
}

std::vector<std::pair<int, int>> sample_baseline_pairs(std::span<const RigidPose> gt_poses, double min_baseline,
                                                       double max_baseline) {
  std::vector<std::pair<int, int>> pairs;
  const int n = static_cast<int>(gt_poses.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = (gt_poses[i].center - gt_poses[j].center).norm();
      if (d >= min_baseline && d <= max_baseline) pairs.emplace_back(i, j);
    }
  }
  if (pairs.empty()) throw Error(ErrorCode::NoValidPairs, "no reference pair has a baseline in range");
  return pairs;
}

std::vector<DepthRatioSample> collect_depth_samples(const SceneBundle& bundle, std::span<const int> references,
                                                    std::span<const std::pair<int, int>> pairs,
                                                    double confidence_floor) {
  std::vector<DepthRatioSample> samples;
  for (const auto& [pi, pj] : pairs) {
    const int vi = references[pi];
    const int vj = references[pj];
    const RigidPose& pose_i = bundle.views[vi].gt_pose.value();
    const RigidPose& pose_j = bundle.views[vj].gt_pose.value();
    const Intrinsics& k_i = bundle.views[vi].intrinsics;
    const Intrinsics& k_j = bundle.views[vj].intrinsics;
    const FeatureSet& f_i = bundle.features[vi];
    const FeatureSet& f_j = bundle.features[vj];
    for (const auto& [a, b] : bundle.matches_between(vi, vj).pairs) {
      const Vec2& u_i = f_i.keypoints[a];
      Vec3 x;
      try {
        x = triangulate_pair(u_i, f_j.keypoints[b], pose_i, pose_j, k_i, k_j);
      } catch (const Error&) {
        continue;
      }
      const auto local = sample_point(bundle.predictions.point_maps[vi], bundle.predictions.confidence_maps[vi], u_i,
                                      confidence_floor);
      if (!local) continue;
      samples.push_back({pose_i.to_camera(x).z(), local->z(), vi, u_i});
    }
  }
  return samples;
}

double stage1_scale(std::span<const DepthRatioSample> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptySamples, "no depth samples for the triangulation scale");
  std::vector<double> ratios;
  ratios.reserve(samples.size());
  for (const auto& s : samples) ratios.push_back(s.gt_depth / s.local_depth);
  return median(std::move(ratios));
}

TrajectoryStats trajectory_stats(std::span<const Vec3> centers) {
  TrajectoryStats stats;
  if (centers.empty()) return stats;
  for (const Vec3& c : centers) stats.centroid += c;
  stats.centroid /= static_cast<double>(centers.size());
  double sq = 0.0;
  for (const Vec3& c : centers) sq += (c - stats.centroid).squaredNorm();
  stats.radius = std::sqrt(sq / static_cast<double>(centers.size()));
  return stats;
}

TrajectoryDeviation trajectory_deviation(double scale, std::span<const Vec3> local_centers,
                                         std::span<const Vec3> gt_centers) {
  if (local_centers.size() != gt_centers.size() || gt_centers.size() < 2) {
    throw Error(ErrorCode::TooFewCameras, "trajectory deviation needs matching center sets of size >= 2");
  }
  TrajectoryDeviation out;
  out.local = trajectory_stats(local_centers);
  out.gt = trajectory_stats(gt_centers);
  if (out.gt.radius < 1e-9) throw Error(ErrorCode::DegenerateRadius, "ground-truth trajectory radius is zero");
  out.deviation = std::abs(scale * out.local.radius / out.gt.radius - 1.0);
  return out;
}

Mat3 rotation_align(const Mat3& local_rotation, const Mat3& gt_rotation) {
  return orthonormalize(gt_rotation * local_rotation.transpose());
}

Stage2Result stage2_ransac_scale(std::span<const Vec3> local_centers, std::span<const Vec3> gt_centers,
                                 const Mat3& r_align, const Stage2Config& config) {
  const std::size_t n = local_centers.size();
  if (n < 2 || gt_centers.size() != n) throw Error(ErrorCode::TooFewCameras, "stage 2 needs at least two cameras");

  std::vector<Vec3> aligned(n);
  for (std::size_t i = 0; i < n; ++i) aligned[i] = r_align * local_centers[i];

  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dl = (local_centers[i] - local_centers[j]).norm();
      const double dg = (gt_centers[i] - gt_centers[j]).norm();
      if (dl >= 1e-9 && dg > 0.0) candidates.emplace_back(i, j);
    }
  }
  if (candidates.empty()) throw Error(ErrorCode::AllCandidatesDegenerate, "every camera pair has zero local distance");

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);

  Stage2Result best;
  best.inliers = -1;
  for (int it = 0; it < config.iterations; ++it) {
    const auto [i, j] = candidates[pick(rng)];
    const double s = (gt_centers[i] - gt_centers[j]).norm() / (local_centers[i] - local_centers[j]).norm();
    // Translation from the sampled pair itself so outlier cameras cannot
    // contaminate the hypothesis.
    const Vec3 t = 0.5 * ((gt_centers[i] - s * aligned[i]) + (gt_centers[j] - s * aligned[j]));

    int inliers = 0;
    double err_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double e = (s * aligned[k] + t - gt_centers[k]).norm();
      if (e <= config.inlier_radius) {
        ++inliers;
        err_sum += e;
      }
    }
    const double mean_err = inliers > 0 ? err_sum / inliers : std::numeric_limits<double>::infinity();
    if (inliers > best.inliers || (inliers == best.inliers && mean_err < best.mean_inlier_error)) {
      best = {s, t, inliers, mean_err};
    }
  }

  // Report the offset refit on the winning inlier set.
  if (best.inliers > 0) {
    Vec3 sum = Vec3::Zero();
    int count = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if ((best.scale * aligned[k] + best.translation_offset - gt_centers[k]).norm() <= config.inlier_radius) {
        sum += gt_centers[k] - best.scale * aligned[k];
        ++count;
      }
    }
    best.translation_offset = sum / count;
  }
  return best;
}

ScaleEstimate choose_scale(std::optional<double> s_tri, const Stage2Producer& run_stage2,
                           std::span<const Vec3> local_centers, std::span<const Vec3> gt_centers,
                           const Mat3& r_align, double stage1_threshold, ScaleMode mode) {
  ScaleEstimate est;
  est.r_align = r_align;
  est.s_tri = s_tri;

  auto deviation_of = [&](double s) -> std::optional<double> {
    try {
      return trajectory_deviation(s, local_centers, gt_centers).deviation;
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  if (s_tri) est.d_tri = deviation_of(*s_tri);

  auto adopt_stage1 = [&] {
    est.scale = *s_tri;
    est.stage_used = ScaleStage::Stage1;
    return est;
  };

  if (mode == ScaleMode::TriOnly) {
    if (!s_tri) throw Error(ErrorCode::NoScaleAvailable, "tri_only mode but the triangulation scale is unavailable");
    return adopt_stage1();
  }
  if (mode == ScaleMode::Auto && s_tri && est.d_tri && *est.d_tri <= stage1_threshold) {
    return adopt_stage1();
  }

  est.stage2_ran = true;
  const std::optional<Stage2Result> traj = run_stage2();
  if (traj) {
    est.s_traj = traj->scale;
    est.d_traj = deviation_of(traj->scale);
  }

  auto adopt_stage2 = [&] {
    est.scale = traj->scale;
    est.translation_offset = traj->translation_offset;
    est.stage2_inliers = traj->inliers;
    est.stage_used = ScaleStage::Stage2;
    return est;
  };

  if (mode == ScaleMode::TrajOnly) {
    if (!traj) throw Error(ErrorCode::NoScaleAvailable, "traj_only mode but the trajectory scale is unavailable");
    return adopt_stage2();
  }
  if (!traj) {
    if (s_tri) return adopt_stage1();
    throw Error(ErrorCode::NoScaleAvailable, "neither the triangulation nor the trajectory scale is available");
  }
  if (!s_tri) return adopt_stage2();
  if (est.d_tri && (!est.d_traj || *est.d_tri <= *est.d_traj)) return adopt_stage1();
  if (!est.d_tri && !est.d_traj) return adopt_stage1();
  return adopt_stage2();
}

RigidPose init_query_pose(const ScaleEstimate& estimate, const RigidPose& anchor_local, const RigidPose& anchor_gt,
                          const RigidPose& query_local) {
  RigidPose init;
  init.rotation = orthonormalize(estimate.r_align * query_local.rotation);
  init.center = anchor_gt.center + estimate.r_align * (estimate.scale * (query_local.center - anchor_local.center));
  return init;
}

}  // namespace feedloc
