#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "feedloc/bundle.hpp"
#include "feedloc/geometry.hpp"

namespace feedloc {

enum class ScaleStage { Stage1, Stage2 };
enum class ScaleMode { Auto, TriOnly, TrajOnly };

std::string_view to_string(ScaleStage stage);
std::string_view to_string(ScaleMode mode);

/// RMS distance of a set of camera centers to their centroid.
struct TrajectoryStats {
  double radius = 0.0;
  Vec3 centroid = Vec3::Zero();
};

struct TrajectoryDeviation {
  TrajectoryStats local;
  TrajectoryStats gt;
  double deviation = 0.0;  // |scale * r_local / r_gt - 1|
};

/// One metric/local depth pair for the triangulation scale.
struct DepthRatioSample {
  double gt_depth = 0.0;
  double local_depth = 0.0;
  int view_index = 0;
  Vec2 pixel = Vec2::Zero();
};

struct Stage2Config {
  int iterations = 500;
  double inlier_radius = 0.10;  // meters
  std::uint64_t seed = 0;
};

struct Stage2Result {
  double scale = 1.0;
  Vec3 translation_offset = Vec3::Zero();
  int inliers = 0;
  double mean_inlier_error = 0.0;
};

struct ScaleEstimate {
  double scale = 1.0;
  Mat3 r_align = Mat3::Identity();
  std::optional<double> s_tri;
  std::optional<double> s_traj;
  std::optional<double> d_tri;
  std::optional<double> d_traj;
  ScaleStage stage_used = ScaleStage::Stage1;
  Vec3 translation_offset = Vec3::Zero();
  int stage2_inliers = 0;
  bool stage2_ran = false;
};

/// Reference with the largest total confidence; ties go to the earliest entry.
int select_confidence_anchor(const PredictionSet& predictions, std::span<const int> references);

inline constexpr double kMinPairBaseline = 0.3;
inline constexpr double kMaxPairBaseline = 10.0;

/// All unordered pairs (positions into `gt_poses`) whose center distance lies
/// in [min_baseline, max_baseline]. Throws NoValidPairs when there are none.
std::vector<std::pair<int, int>> sample_baseline_pairs(std::span<const RigidPose> gt_poses,
                                                       double min_baseline = kMinPairBaseline,
                                                       double max_baseline = kMaxPairBaseline);

/// Triangulates every match of each reference pair with the ground-truth
/// poses and pairs the depth in the pair's first camera with the local depth
/// read from that camera's point map at the keypoint.
std::vector<DepthRatioSample> collect_depth_samples(const SceneBundle& bundle, std::span<const int> references,
                                                    std::span<const std::pair<int, int>> pairs,
                                                    double confidence_floor = 0.0);

/// Median of gt_depth / local_depth. Throws EmptySamples.
double stage1_scale(std::span<const DepthRatioSample> samples);

TrajectoryStats trajectory_stats(std::span<const Vec3> centers);

/// Throws DegenerateRadius when the ground-truth radius is below 1e-9 m.
TrajectoryDeviation trajectory_deviation(double scale, std::span<const Vec3> local_centers,
                                         std::span<const Vec3> gt_centers);

/// R_gt * R_local^T, re-orthonormalized.
Mat3 rotation_align(const Mat3& local_rotation, const Mat3& gt_rotation);

/// RANSAC over camera pairs: each hypothesis takes its scale from one pair's
/// distance ratio and keeps the candidate with the most cameras within
/// `inlier_radius` of their ground-truth position.
Stage2Result stage2_ransac_scale(std::span<const Vec3> local_centers, std::span<const Vec3> gt_centers,
                                 const Mat3& r_align, const Stage2Config& config);

using Stage2Producer = std::function<std::optional<Stage2Result>()>;

/// Picks between the triangulation scale and the trajectory scale. Stage 2 is
/// only invoked when needed (d_tri above threshold, Stage 1 unavailable, or a
/// forced traj_only mode). Throws NoScaleAvailable.
ScaleEstimate choose_scale(std::optional<double> s_tri, const Stage2Producer& run_stage2,
                           std::span<const Vec3> local_centers, std::span<const Vec3> gt_centers,
                           const Mat3& r_align, double stage1_threshold = 0.05, ScaleMode mode = ScaleMode::Auto);

/// Coarse query pose: rotation R_align * R_q_local, center
/// c_anchor_gt + R_align * (S * (c_q_local - c_anchor_local)).
RigidPose init_query_pose(const ScaleEstimate& estimate, const RigidPose& anchor_local, const RigidPose& anchor_gt,
                          const RigidPose& query_local);

}  // namespace feedloc
