#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "feedloc/bundle.hpp"
#include "feedloc/geometry.hpp"
#include "feedloc/scale.hpp"

namespace feedloc {

struct RunConfig {
  int k_max = 10;
  double min_baseline = 0.3;
  double baseline_min = kMinPairBaseline;
  double baseline_max = kMaxPairBaseline;
  double stage1_threshold = 0.05;
  int ransac_iterations = 500;
  double inlier_radius = 0.10;
  double search_radius = 20.0;
  ScaleMode scale_mode = ScaleMode::Auto;
  double pnp_inlier_px = 5.0;
  int pnp_iterations = 1000;
  double max_descriptor_distance = 0.9;
  double confidence_floor = 0.0;
  std::uint64_t seed = 0;

  /// Throws InvalidSpec.
  void validate() const;
};

struct LocalizationResult {
  std::string query_id;
  RigidPose pose;          // emitted pose
  RigidPose coarse_pose;   // P_q^init
  RigidPose ransac_pose;   // PnP winner before Levenberg-Marquardt (coarse pose when PnP did not run)
  ScaleEstimate scale;
  int confidence_anchor = 0;
  int refinement_anchor = 0;
  std::vector<int> references;
  std::size_t depth_samples = 0;
  std::size_t tracks_built = 0;
  std::size_t tracks_dropped = 0;  // no valid depth at the anchor keypoint
  std::size_t tracks_usable = 0;
  std::size_t correspondences = 0;
  int init_inliers = 0;
  int refined_inliers = 0;  // -1 when PnP did not produce a pose
  bool fallback = false;
  std::string fallback_reason;
};

/// Coarse localization followed by structure refinement and PnP. Throws
/// NoScaleAvailable when neither scale stage succeeds; bundle problems
/// surface as the corresponding dataio errors.
LocalizationResult localize(const SceneBundle& bundle, const RunConfig& config);

/// Deterministic JSON document for one query.
std::string result_to_json(const LocalizationResult& result);

}  // namespace feedloc
