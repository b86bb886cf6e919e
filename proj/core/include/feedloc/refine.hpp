#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "feedloc/bundle.hpp"
#include "feedloc/geometry.hpp"

namespace feedloc {

struct Observation {
  int view = 0;
  Vec2 pixel = Vec2::Zero();
};

/// One anchor keypoint with its matched observations in other references and
/// the 3D point they share. The anchor observation is always first.
struct Track {
  int anchor_keypoint = 0;
  std::vector<Observation> observations;
  Vec3 point = Vec3::Zero();
  Eigen::VectorXd descriptor;

  // Filled by structure_only_ba.
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  bool behind_camera = false;

  bool usable() const { return converged && !behind_camera; }
};

struct Correspondence2D3D {
  int track = 0;
  int query_keypoint = 0;
  Vec2 query_pixel = Vec2::Zero();
  Vec3 point = Vec3::Zero();
  double descriptor_distance = 0.0;
};

struct BaConfig {
  double robust_scale = 1.0;  // Soft-L1 transition, pixels
  int max_iterations = 50;
  double gradient_tolerance = 1e-10;
  double parameter_tolerance = 1e-8;
};

struct PnpConfig {
  int ransac_iterations = 1000;
  double reproj_inlier_px = 5.0;
  int lm_max_iterations = 100;
  std::uint64_t seed = 0;
};

struct PnpResult {
  RigidPose pose;
  std::vector<bool> inlier_mask;
  bool refined = false;
  RigidPose ransac_pose;  // winning hypothesis before Levenberg-Marquardt

  int inlier_count() const;
};

/// Merges anchor-to-reference matches into tracks keyed by anchor keypoint.
/// `matches` holds (reference view, matches oriented anchor -> reference).
/// Duplicate matches of one anchor keypoint within a reference keep the
/// best-scoring pair (the first one when scores are absent).
std::vector<Track> build_tracks(int anchor_view, std::span<const std::pair<int, MatchSet>> matches,
                                std::span<const FeatureSet> features);

/// Back-projects the anchor keypoint at scale * (point-map depth). Throws
/// InvalidDepth when the point map has no valid depth there.
Vec3 init_track_point(const Track& track, const Intrinsics& anchor_intrinsics, const PointMap& anchor_points,
                      const ConfidenceMap& anchor_confidence, double scale, const RigidPose& anchor_gt);

/// Soft-L1 on a squared residual: 2 c^2 (sqrt(1 + s / c^2) - 1).
double soft_l1(double squared_residual, double c);
double soft_l1_derivative(double squared_residual, double c);

/// d(pixel) / d(world point), 2 x 3.
Eigen::Matrix<double, 2, 3> projection_jacobian(const RigidPose& pose, const Intrinsics& k, const Vec3& x_world);

/// Robust reprojection cost of a point against a track's observations;
/// +inf if the point is behind any observing camera.
double track_cost(const Track& track, const Vec3& point, std::span<const RigidPose> poses,
                  std::span<const Intrinsics> intrinsics, double robust_scale);

/// Damped Gauss-Newton on one track's point with poses fixed. Uphill steps
/// are rejected, so final_cost <= initial_cost.
void refine_track_point(Track& track, std::span<const RigidPose> poses, std::span<const Intrinsics> intrinsics,
                        const BaConfig& config);

/// Structure-only bundle adjustment. Poses and intrinsics are indexed by view;
/// every track is solved independently.
void structure_only_ba(std::vector<Track>& tracks, std::span<const RigidPose> poses,
                       std::span<const Intrinsics> intrinsics, const BaConfig& config);

inline constexpr double kDefaultSearchRadiusPx = 20.0;
inline constexpr double kDefaultMaxDescriptorDistance = 0.9;

/// Projects each usable track into the query and takes the descriptor nearest
/// neighbour among query keypoints within `radius` pixels.
std::vector<Correspondence2D3D> guided_match(std::span<const Track> tracks, const RigidPose& init_pose,
                                             const FeatureSet& query, const Intrinsics& query_intrinsics,
                                             double radius = kDefaultSearchRadiusPx,
                                             double max_descriptor_distance = kDefaultMaxDescriptorDistance);

/// Reprojection inliers of a pose (positive depth, error <= threshold).
std::vector<bool> inlier_mask(const RigidPose& pose, const Intrinsics& k,
                              std::span<const Correspondence2D3D> correspondences, double threshold_px);

/// P3P RANSAC (the initial pose is scored as a free hypothesis) followed by
/// Levenberg-Marquardt on the winning inlier set. Throws
/// TooFewCorrespondences (< 4) or SolverDegenerate.
PnpResult pnp_refine(std::span<const Correspondence2D3D> correspondences, const RigidPose& init_pose,
                     const Intrinsics& k, const PnpConfig& config);

/// Levenberg-Marquardt on the summed squared reprojection error.
RigidPose refine_pose_lm(const RigidPose& start, const Intrinsics& k, std::span<const Vec2> pixels,
                         std::span<const Vec3> points, int max_iterations);

/// Keeps whichever of the refined and initial poses has more inliers on the
/// same correspondences (ties go to the refined pose). A missing refined
/// result yields the initial pose with refined = false.
PnpResult select_final(const std::optional<PnpResult>& refined, const RigidPose& init_pose, const Intrinsics& k,
                       std::span<const Correspondence2D3D> correspondences, double reproj_inlier_px);

}  // namespace feedloc
