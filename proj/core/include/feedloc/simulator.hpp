#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "feedloc/bundle.hpp"
#include "feedloc/geometry.hpp"

namespace feedloc::sim {

struct Plane {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

/// Metric scene layout. Cameras sit on an arc of a horizontal ring around the
/// origin and look at the centroid of the plane anchor points.
struct SceneSpec {
  int num_references = 10;
  int num_world_points = 400;
  double scene_extent = 5.0;  // side of the square patch sampled on each plane, meters
  double camera_ring_radius = 4.0;
  double camera_height = 1.5;
  double height_jitter = 0.2;
  double arc_degrees = 100.0;
  double look_at_jitter = 0.2;
  int image_width = 640;
  int image_height = 480;
  double focal = 525.0;
  int descriptor_dim = 32;
  std::vector<Plane> planes = default_planes();
  std::uint64_t rng_seed = 0;

  static std::vector<Plane> default_planes();
  void validate() const;
};

/// Maps metric truth to the "network" local frame and degrades it.
/// metric = sim_scale * sim_rotation * local + sim_translation.
struct CorruptionSpec {
  double sim_scale = 1.0;
  Mat3 sim_rotation = Mat3::Identity();
  Vec3 sim_translation = Vec3::Zero();
  double pointmap_noise_sigma = 0.0;     // local units
  double pose_center_noise_sigma = 0.0;  // local units
  double keypoint_noise_sigma = 0.0;     // pixels
  double descriptor_noise_sigma = 0.0;
  double outlier_fraction_centers = 0.0;
  double outlier_center_offset = 1.0;  // meters, before mapping to local units
  double outlier_fraction_matches = 0.0;

  void validate() const;
};

/// Exact metric geometry shared by rendering and corruption.
struct SceneGeometry {
  SceneSpec spec;
  std::vector<Intrinsics> intrinsics;           // per view, view 0 = query
  std::vector<RigidPose> poses;                 // metric camera-to-world, per view
  std::vector<Vec3> world_points;
  std::vector<std::vector<int>> keypoint_ids;   // per view: world point id of each keypoint
  std::vector<std::vector<Vec2>> keypoints;     // per view: exact projections
  std::vector<Eigen::VectorXd> base_descriptors;  // per world point, unit norm
};

struct RenderedMaps {
  std::vector<PointMap> points;  // metric, camera frame
  std::vector<ConfidenceMap> confidence;
};

struct OracleRecord {
  std::string query_id;
  RigidPose gt_query_pose;
  double true_scale = 1.0;
  Mat3 true_align_rotation = Mat3::Identity();
  Vec3 true_translation = Vec3::Zero();
  double scene_extent = 0.0;
  int confidence_anchor = 1;
  std::vector<int> corrupted_references;
  std::vector<Vec3> world_points;
  std::vector<std::vector<int>> keypoint_ids;
};

struct SimulatedScene {
  SceneGeometry geometry;
  SceneBundle bundle;
  OracleRecord oracle;
};

/// Camera at `center` looking at `target` with image y pointing down.
RigidPose look_at(const Vec3& center, const Vec3& target, const Vec3& up = Vec3::UnitZ());

/// Uniformly distributed rotation.
Mat3 random_rotation(std::mt19937_64& rng);

/// Throws InvalidSpec or InvisibleScene (a camera sees fewer than 8 points).
SceneGeometry generate_scene(const SceneSpec& spec);

/// Analytic ray-plane intersection per pixel; misses get point (0,0,0) and
/// confidence 0.
RenderedMaps render_pointmaps(const SceneGeometry& geometry);

/// Builds the bundle seen by the pipeline plus the ground truth it must recover.
std::pair<SceneBundle, OracleRecord> corrupt(const SceneGeometry& geometry, RenderedMaps maps,
                                             const CorruptionSpec& corruption, std::uint64_t seed);

/// generate_scene + render_pointmaps + corrupt, all driven by one seed.
SimulatedScene simulate(SceneSpec spec, const CorruptionSpec& corruption, std::uint64_t seed);

SceneSpec scene_spec_from_json_text(const std::string& text);
CorruptionSpec corruption_from_json_text(const std::string& text);

void write_oracle(const OracleRecord& oracle, const std::filesystem::path& path);
OracleRecord read_oracle(const std::filesystem::path& path);

}  // namespace feedloc::sim
