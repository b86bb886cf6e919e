#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "feedloc/geometry.hpp"
#include "feedloc/refine.hpp"
#include "feedloc/simulator.hpp"

namespace feedloc::testing {

Intrinsics test_intrinsics();

/// Pose looking roughly along +z from a random center in a box of half-size `spread`.
RigidPose random_pose(std::mt19937_64& rng, double spread = 2.0, double max_tilt_deg = 20.0);

/// Half-resolution default scene; same geometry, a quarter of the pixels.
sim::SceneSpec small_scene_spec(int num_references = 10);

sim::SimulatedScene simulate_small(const sim::CorruptionSpec& corruption, std::uint64_t seed,
                                   int num_references = 10);

/// Random similarity with the given scale.
sim::CorruptionSpec random_similarity(std::mt19937_64& rng, double scale);

/// Random point visible in `pose` at depth 2 to 12, away from the image border.
Vec3 visible_point(std::mt19937_64& rng, const RigidPose& pose, const Intrinsics& k);

/// `n` exact 2D-3D correspondences generated from `pose`.
std::vector<Correspondence2D3D> clean_correspondences(std::mt19937_64& rng, const RigidPose& pose,
                                                      const Intrinsics& k, int n);

/// `p` rotated by `degrees` about a random axis and moved `meters` in a random direction.
RigidPose perturbed(std::mt19937_64& rng, const RigidPose& p, double meters, double degrees);

/// Tracks, query features and pose for a guided-matching trial.
struct MatchConfig {
  std::vector<Track> tracks;
  FeatureSet query;
  RigidPose pose;
};

MatchConfig random_match_config(std::mt19937_64& rng);

/// Exhaustive guided matching: every track against every query keypoint.
/// Returns (track, query keypoint) pairs in track order.
std::vector<std::pair<int, int>> brute_force_match(const std::vector<Track>& tracks, const RigidPose& pose,
                                                   const FeatureSet& query, const Intrinsics& k, double radius,
                                                   double max_descriptor_distance);

/// Directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

bool files_identical(const std::filesystem::path& a, const std::filesystem::path& b);

/// True when both directory trees hold the same relative paths with identical bytes.
bool trees_identical(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace feedloc::testing
