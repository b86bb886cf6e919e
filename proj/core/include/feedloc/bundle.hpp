#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "feedloc/geometry.hpp"
#include "feedloc/pointmap.hpp"

namespace feedloc {

using DescriptorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ViewRecord {
  Intrinsics intrinsics;
  std::optional<RigidPose> gt_pose;
  std::string image_id;
};

/// Network output surrogate: one entry per view, all views share the same
/// canonical local frame for `local_poses`.
struct PredictionSet {
  std::vector<PointMap> point_maps;
  std::vector<ConfidenceMap> confidence_maps;
  std::vector<RigidPose> local_poses;
};

struct FeatureSet {
  std::vector<Vec2> keypoints;
  DescriptorMatrix descriptors;  // N x D, unit-norm rows

  std::size_t size() const { return keypoints.size(); }
};

struct MatchSet {
  std::vector<std::pair<int, int>> pairs;  // (index in A, index in B)
  std::vector<double> scores;              // empty, or one similarity per pair

  bool has_scores() const { return !scores.empty(); }
  std::size_t size() const { return pairs.size(); }
  MatchSet swapped() const;
};

/// View 0 is the query; views 1..K are references. `retrieval` lists the
/// reference view indices by descending retrieval score.
struct SceneBundle {
  std::vector<ViewRecord> views;
  std::vector<int> retrieval;
  PredictionSet predictions;
  std::vector<FeatureSet> features;
  std::map<std::pair<int, int>, MatchSet> matches;  // keyed (a, b) with a < b

  int num_views() const { return static_cast<int>(views.size()); }
  int num_references() const { return num_views() - 1; }

  /// Matches oriented from view a to view b; empty when the pair has none.
  MatchSet matches_between(int a, int b) const;
};

/// Re-checks every container invariant. Throws InvariantViolation or
/// ShapeMismatch on the first violation.
void validate_bundle(const SceneBundle& bundle);

void write_bundle(const SceneBundle& bundle, const std::filesystem::path& directory);
SceneBundle read_bundle(const std::filesystem::path& directory);

/// Greedy scan of the retrieval ranking keeping a reference only if its
/// ground-truth center is at least `min_baseline` meters from every kept one.
std::vector<int> filter_references(const SceneBundle& bundle, int k_max, double min_baseline);

// Raw array blobs: "L3BL", u32 rank, u32 dims..., little-endian float32 payload.
struct Blob {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

void write_blob(const std::filesystem::path& path, std::span<const std::uint32_t> dims,
                std::span<const float> values);
Blob read_blob(const std::filesystem::path& path);

/// Poses travel as 12 row-major numbers [R | c] (camera-to-world).
std::vector<double> pose_to_row_major(const RigidPose& pose);
RigidPose pose_from_row_major(std::span<const double> values);

}  // namespace feedloc
