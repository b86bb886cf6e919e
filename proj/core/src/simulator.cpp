#include "feedloc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <numbers>
#include <numeric>
#include <optional>

#include "feedloc/error.hpp"

namespace feedloc::sim {
namespace {

using json = nlohmann::json;

constexpr int kMinVisiblePoints = 8;
constexpr double kMaxRenderDepth = 1e4;
constexpr double kMinPointDepth = 0.05;
constexpr double kMinGrazingCosine = 0.1;
constexpr double kBorderMarginPx = 2.0;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); }

std::pair<Vec3, Vec3> plane_basis(const Vec3& normal) {
  const Vec3 helper = std::abs(normal.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 e1 = normal.cross(helper).normalized();
  return {e1, normal.cross(e1).normalized()};
}

/// Depth (camera z) of the nearest plane hit along a camera-frame ray with z = 1.
struct Hit {
  double depth = 0.0;
  std::size_t plane = 0;
};

std::optional<Hit> nearest_hit(const std::vector<Plane>& planes, const RigidPose& pose, const Vec3& ray_camera) {
  const Vec3 dir = pose.rotation * ray_camera;
  std::optional<Hit> best;
  for (std::size_t i = 0; i < planes.size(); ++i) {
    const Plane& pl = planes[i];
    const double denom = pl.normal.dot(dir);
    if (std::abs(denom) < 1e-12) continue;
    const double t = pl.normal.dot(pl.point - pose.center) / denom;
    if (t > kMinDepth && t < kMaxRenderDepth && (!best || t < best->depth)) best = Hit{t, i};
  }
  return best;
}

/// Pixel of x in `view` if x is unoccluded, away from the border and not at a
/// grazing angle, and the four pixels around it all see x's plane, so that the
/// rendered point map interpolates exactly at the keypoint.
std::optional<Vec2> visible_pixel(const SceneGeometry& g, int view, const Vec3& x, std::size_t plane_index) {
  const RigidPose& pose = g.poses[view];
  const Intrinsics& k = g.intrinsics[view];
  const Plane& plane = g.spec.planes[plane_index];
  const Vec3 pc = pose.to_camera(x);
  if (pc.z() < kMinPointDepth) return std::nullopt;
  const Vec2 u(k.cx + k.fx * pc.x() / pc.z(), k.cy + k.fy * pc.y() / pc.z());
  if (u.x() < kBorderMarginPx || u.y() < kBorderMarginPx || u.x() > k.width - 1 - kBorderMarginPx ||
      u.y() > k.height - 1 - kBorderMarginPx) {
    return std::nullopt;
  }
  const Vec3 ray = pc / pc.z();
  if (std::abs(plane.normal.dot((pose.rotation * ray).normalized())) < kMinGrazingCosine) return std::nullopt;
  const auto hit = nearest_hit(g.spec.planes, pose, ray);
  if (!hit || hit->depth < pc.z() * (1.0 - 1e-9)) return std::nullopt;
  for (const double col : {std::floor(u.x()), std::ceil(u.x())}) {
    for (const double row : {std::floor(u.y()), std::ceil(u.y())}) {
      const auto corner = nearest_hit(g.spec.planes, pose, Vec3((col - k.cx) / k.fx, (row - k.cy) / k.fy, 1.0));
      if (!corner || corner->plane != plane_index) return std::nullopt;
    }
  }
  return u;
}

Eigen::VectorXd random_unit_vector(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  do {
    for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  } while (v.norm() < 1e-12);
  return v.normalized();
}

Vec3 vec3_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Mat3 mat3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 9) invalid("rotation must be 9 row-major numbers");
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = j.at(3 * r + c).get<double>();
  }
  return m;
}

json mat3_to_json(const Mat3& m) {
  json out = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.push_back(m(r, c));
  }
  return out;
}

}  // namespace

std::vector<Plane> SceneSpec::default_planes() {
  return {
      {Vec3(0.0, 0.0, 0.0), Vec3(0.0, 0.0, 1.0)},                         // floor
      {Vec3(0.0, -2.5, 1.5), Vec3(0.0, 1.0, 0.0)},                        // back wall
      {Vec3(-3.0, 0.0, 1.5), Vec3(1.0, 0.4, 0.0).normalized()},           // left wall, slanted
      {Vec3(3.5, 0.0, 1.5), Vec3(-1.0, 0.4, 0.0).normalized()},           // right wall, slanted
  };
}

void SceneSpec::validate() const {
  if (num_references < 1) invalid("num_references must be >= 1");
  if (num_world_points < 1) invalid("num_world_points must be >= 1");
  if (!(scene_extent > 0.0)) invalid("scene_extent must be positive");
  if (!(camera_ring_radius > 0.0)) invalid("camera_ring_radius must be positive");
  if (!(arc_degrees > 0.0 && arc_degrees <= 360.0)) invalid("arc_degrees must be in (0, 360]");
  if (height_jitter < 0.0 || look_at_jitter < 0.0) invalid("jitter must be nonnegative");
  if (image_width < 8 || image_height < 8) invalid("image must be at least 8x8");
  if (!(focal > 0.0)) invalid("focal must be positive");
  if (descriptor_dim < 1) invalid("descriptor_dim must be >= 1");
  if (planes.empty()) invalid("at least one plane is required");
  for (const Plane& p : planes) {
    if (!(p.normal.norm() > 0.0)) invalid("plane normal must be nonzero");
  }
}

void CorruptionSpec::validate() const {
  if (!(sim_scale > 0.0)) invalid("sim_scale must be positive");
  const Mat3 rtr = sim_rotation.transpose() * sim_rotation;
  if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 || std::abs(sim_rotation.determinant() - 1.0) > 1e-9) {
    invalid("sim_rotation must be a rotation matrix");
  }
  if (pointmap_noise_sigma < 0.0 || pose_center_noise_sigma < 0.0 || keypoint_noise_sigma < 0.0 ||
      descriptor_noise_sigma < 0.0) {
    invalid("noise sigmas must be nonnegative");
  }
  if (!(outlier_fraction_centers >= 0.0 && outlier_fraction_centers < 1.0)) {
    invalid("outlier_fraction_centers must be in [0, 1)");
  }
  if (!(outlier_fraction_matches >= 0.0 && outlier_fraction_matches < 1.0)) {
    invalid("outlier_fraction_matches must be in [0, 1)");
  }
  if (outlier_center_offset < 0.0) invalid("outlier_center_offset must be nonnegative");
}

RigidPose look_at(const Vec3& center, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - center).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-9) x = z.cross(Vec3::UnitX());
  x.normalize();
  const Vec3 y = z.cross(x);
  RigidPose pose;
  pose.rotation.col(0) = x;
  pose.rotation.col(1) = y;
  pose.rotation.col(2) = z;
  pose.center = center;
  return pose;
}

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
  q.normalize();
  return q.toRotationMatrix();
}

SceneGeometry generate_scene(const SceneSpec& spec) {
  spec.validate();
  SceneGeometry g;
  g.spec = spec;
  for (Plane& p : g.spec.planes) p.normal.normalize();

  std::seed_seq seq{static_cast<std::uint32_t>(spec.rng_seed), static_cast<std::uint32_t>(spec.rng_seed >> 32),
                    0x5ce4eu};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  Vec3 target = Vec3::Zero();
  for (const Plane& p : g.spec.planes) target += p.point;
  target /= static_cast<double>(g.spec.planes.size());

  const double arc = spec.arc_degrees * std::numbers::pi / 180.0;
  const double arc_start = std::numbers::pi / 2.0 - arc / 2.0;
  auto camera_at = [&](double angle) {
    const Vec3 c(spec.camera_ring_radius * std::cos(angle), spec.camera_ring_radius * std::sin(angle),
                 spec.camera_height + spec.height_jitter * unit(rng));
    const Vec3 aim = target + spec.look_at_jitter * Vec3(unit(rng), unit(rng), unit(rng));
    return look_at(c, aim);
  };

  const RigidPose query = camera_at(arc_start + arc * 0.5 * (1.0 + unit(rng)));
  std::vector<RigidPose> refs;
  const double spacing = arc / spec.num_references;
  for (int i = 0; i < spec.num_references; ++i) {
    refs.push_back(camera_at(arc_start + spacing * (i + 0.5) + 0.25 * spacing * unit(rng)));
  }
  // Retrieval order: ascending distance to the query.
  std::stable_sort(refs.begin(), refs.end(), [&](const RigidPose& a, const RigidPose& b) {
    return (a.center - query.center).norm() < (b.center - query.center).norm();
  });

  const double cx = (spec.image_width - 1) / 2.0;
  const double cy = (spec.image_height - 1) / 2.0;
  const Intrinsics k{spec.focal, spec.focal, cx, cy, spec.image_width, spec.image_height};
  g.poses.push_back(query);
  g.poses.insert(g.poses.end(), refs.begin(), refs.end());
  g.intrinsics.assign(g.poses.size(), k);
  const int num_views = static_cast<int>(g.poses.size());

  g.keypoint_ids.assign(num_views, {});
  g.keypoints.assign(num_views, {});
  std::uniform_int_distribution<std::size_t> pick_plane(0, g.spec.planes.size() - 1);
  const long max_attempts = 400L * spec.num_world_points;
  for (long attempt = 0; attempt < max_attempts && static_cast<int>(g.world_points.size()) < spec.num_world_points;
       ++attempt) {
    const std::size_t plane_index = pick_plane(rng);
    const Plane& plane = g.spec.planes[plane_index];
    const auto [e1, e2] = plane_basis(plane.normal);
    const Vec3 x = plane.point + 0.5 * spec.scene_extent * (unit(rng) * e1 + unit(rng) * e2);
    std::vector<std::pair<int, Vec2>> seen;
    for (int v = 0; v < num_views; ++v) {
      if (auto u = visible_pixel(g, v, x, plane_index)) seen.emplace_back(v, *u);
    }
    if (seen.size() < 2) continue;
    const int id = static_cast<int>(g.world_points.size());
    g.world_points.push_back(x);
    for (const auto& [v, u] : seen) {
      g.keypoint_ids[v].push_back(id);
      g.keypoints[v].push_back(u);
    }
  }

  for (int v = 0; v < num_views; ++v) {
    if (static_cast<int>(g.keypoints[v].size()) < kMinVisiblePoints) {
      throw Error(ErrorCode::InvisibleScene,
                  "view " + std::to_string(v) + " sees only " + std::to_string(g.keypoints[v].size()) + " points");
    }
    // Shuffle keypoint order so keypoint indices carry no cross-view meaning.
    std::vector<std::size_t> perm(g.keypoints[v].size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> ids(perm.size());
    std::vector<Vec2> kps(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      ids[i] = g.keypoint_ids[v][perm[i]];
      kps[i] = g.keypoints[v][perm[i]];
    }
    g.keypoint_ids[v] = std::move(ids);
    g.keypoints[v] = std::move(kps);
  }

  g.base_descriptors.reserve(g.world_points.size());
  for (std::size_t i = 0; i < g.world_points.size(); ++i) {
    g.base_descriptors.push_back(random_unit_vector(rng, spec.descriptor_dim));
  }
  return g;
}

RenderedMaps render_pointmaps(const SceneGeometry& g) {
  RenderedMaps maps;
  for (std::size_t v = 0; v < g.poses.size(); ++v) {
    const Intrinsics& k = g.intrinsics[v];
    const RigidPose& pose = g.poses[v];
    // Planes in the camera frame: n_c . x = offset.
    std::vector<std::pair<Vec3, double>> planes;
    for (const Plane& pl : g.spec.planes) {
      planes.emplace_back(pose.rotation.transpose() * pl.normal, pl.normal.dot(pl.point - pose.center));
    }
    PointMap pm(k.width, k.height);
    ConfidenceMap cm(k.width, k.height, 0.0);
    double* out = pm.data().data();
    double* conf = cm.data().data();
    for (int row = 0; row < k.height; ++row) {
      const double ry = (row - k.cy) / k.fy;
      for (int col = 0; col < k.width; ++col, out += 3, ++conf) {
        const double rx = (col - k.cx) / k.fx;
        double best = kMaxRenderDepth;
        for (const auto& [n, offset] : planes) {
          const double denom = n.x() * rx + n.y() * ry + n.z();
          if (std::abs(denom) < 1e-12) continue;
          const double t = offset / denom;
          if (t > kMinDepth && t < best) best = t;
        }
        if (best < kMaxRenderDepth) {
          out[0] = best * rx;
          out[1] = best * ry;
          out[2] = best;
          *conf = 1.0;
        }
      }
    }
    maps.points.push_back(std::move(pm));
    maps.confidence.push_back(std::move(cm));
  }
  return maps;
}

std::pair<SceneBundle, OracleRecord> corrupt(const SceneGeometry& g, RenderedMaps maps,
                                             const CorruptionSpec& c, std::uint64_t seed) {
  c.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0xc0441u};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const int num_views = static_cast<int>(g.poses.size());
  const int num_refs = num_views - 1;
  const Mat3 qt = c.sim_rotation.transpose();
  const std::string prefix = "s" + std::to_string(g.spec.rng_seed);

  SceneBundle bundle;
  OracleRecord oracle;
  oracle.query_id = prefix + "_query";
  oracle.gt_query_pose = g.poses[0];
  oracle.true_scale = c.sim_scale;
  oracle.true_align_rotation = c.sim_rotation;
  oracle.true_translation = c.sim_translation;
  oracle.scene_extent = g.spec.scene_extent;
  oracle.world_points = g.world_points;
  oracle.keypoint_ids = g.keypoint_ids;

  // The highest-confidence reference pivots the coarse pose, so it is never
  // chosen as a center outlier.
  int anchor = 1;
  for (int v = 2; v < num_views; ++v) {
    if (maps.confidence[v].sum() > maps.confidence[anchor].sum()) anchor = v;
  }
  oracle.confidence_anchor = anchor;
  std::vector<int> candidates;
  for (int v = 1; v < num_views; ++v) {
    if (v != anchor) candidates.push_back(v);
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);
  const auto num_outliers = std::min<std::size_t>(
      candidates.size(), static_cast<std::size_t>(std::lround(c.outlier_fraction_centers * num_refs)));
  oracle.corrupted_references.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(num_outliers));
  std::sort(oracle.corrupted_references.begin(), oracle.corrupted_references.end());

  for (int v = 0; v < num_views; ++v) {
    ViewRecord view;
    view.intrinsics = g.intrinsics[v];
    view.gt_pose = g.poses[v];
    view.image_id = v == 0 ? oracle.query_id : prefix + "_ref" + std::to_string(v);
    bundle.views.push_back(view);

    RigidPose local;
    local.rotation = qt * g.poses[v].rotation;
    local.center = qt * (g.poses[v].center - c.sim_translation) / c.sim_scale;
    if (c.pose_center_noise_sigma > 0.0) {
      local.center += c.pose_center_noise_sigma * Vec3(normal(rng), normal(rng), normal(rng));
    }
    if (std::binary_search(oracle.corrupted_references.begin(), oracle.corrupted_references.end(), v)) {
      Vec3 dir(normal(rng), normal(rng), normal(rng));
      local.center += (c.outlier_center_offset / c.sim_scale) * dir.normalized();
    }
    bundle.predictions.local_poses.push_back(local);

    PointMap& pm = maps.points[v];
    ConfidenceMap& cm = maps.confidence[v];
    std::vector<double>& values = pm.data();
    for (std::size_t i = 0; i < cm.data().size(); ++i) {
      if (cm.data()[i] <= 0.0) continue;
      for (std::size_t a = 3 * i; a < 3 * i + 3; ++a) {
        values[a] /= c.sim_scale;
        if (c.pointmap_noise_sigma > 0.0) values[a] += c.pointmap_noise_sigma * normal(rng);
      }
    }
    bundle.predictions.point_maps.push_back(std::move(pm));
    bundle.predictions.confidence_maps.push_back(std::move(cm));

    FeatureSet f;
    const std::size_t n = g.keypoints[v].size();
    f.descriptors.resize(static_cast<Eigen::Index>(n), g.spec.descriptor_dim);
    const Intrinsics& k = g.intrinsics[v];
    for (std::size_t i = 0; i < n; ++i) {
      Vec2 u = g.keypoints[v][i];
      if (c.keypoint_noise_sigma > 0.0) {
        u += c.keypoint_noise_sigma * Vec2(normal(rng), normal(rng));
        u.x() = std::clamp(u.x(), -0.5, k.width - 0.5 - 1e-3);
        u.y() = std::clamp(u.y(), -0.5, k.height - 0.5 - 1e-3);
      }
      f.keypoints.push_back(u);
      Eigen::VectorXd d = g.base_descriptors[g.keypoint_ids[v][i]];
      if (c.descriptor_noise_sigma > 0.0) {
        for (Eigen::Index j = 0; j < d.size(); ++j) d(j) += c.descriptor_noise_sigma * normal(rng);
        d.normalize();
      }
      f.descriptors.row(static_cast<Eigen::Index>(i)) = d.transpose();
    }
    bundle.features.push_back(std::move(f));
  }

  bundle.retrieval.resize(num_refs);
  std::iota(bundle.retrieval.begin(), bundle.retrieval.end(), 1);

  for (int a = 1; a < num_views; ++a) {
    std::vector<int> index_in_b(g.world_points.size(), -1);
    for (int b = a + 1; b < num_views; ++b) {
      std::fill(index_in_b.begin(), index_in_b.end(), -1);
      for (std::size_t j = 0; j < g.keypoint_ids[b].size(); ++j) index_in_b[g.keypoint_ids[b][j]] = static_cast<int>(j);
      MatchSet set;
      const int nb = static_cast<int>(g.keypoint_ids[b].size());
      for (std::size_t i = 0; i < g.keypoint_ids[a].size(); ++i) {
        int j = index_in_b[g.keypoint_ids[a][i]];
        if (j < 0) continue;
        if (c.outlier_fraction_matches > 0.0 && nb > 1 && uniform(rng) < c.outlier_fraction_matches) {
          std::uniform_int_distribution<int> other(0, nb - 2);
          const int r = other(rng);
          j = r >= j ? r + 1 : r;
        }
        set.pairs.emplace_back(static_cast<int>(i), j);
        set.scores.push_back(
            bundle.features[a].descriptors.row(static_cast<Eigen::Index>(i)).dot(bundle.features[b].descriptors.row(j)));
      }
      if (!set.pairs.empty()) bundle.matches.emplace(std::make_pair(a, b), std::move(set));
    }
  }
  return {std::move(bundle), std::move(oracle)};
}

SimulatedScene simulate(SceneSpec spec, const CorruptionSpec& corruption, std::uint64_t seed) {
  spec.rng_seed = seed;
  SimulatedScene scene;
  scene.geometry = generate_scene(spec);
  auto [bundle, oracle] = corrupt(scene.geometry, render_pointmaps(scene.geometry), corruption, seed);
  scene.bundle = std::move(bundle);
  scene.oracle = std::move(oracle);
  return scene;
}

SceneSpec scene_spec_from_json_text(const std::string& text) {
  SceneSpec spec;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) invalid("scene spec must be a JSON object");
    spec.num_references = j.value("num_references", spec.num_references);
    spec.num_world_points = j.value("num_world_points", spec.num_world_points);
    spec.scene_extent = j.value("scene_extent", spec.scene_extent);
    spec.camera_ring_radius = j.value("camera_ring_radius", spec.camera_ring_radius);
    spec.camera_height = j.value("camera_height", spec.camera_height);
    spec.height_jitter = j.value("height_jitter", spec.height_jitter);
    spec.arc_degrees = j.value("arc_degrees", spec.arc_degrees);
    spec.look_at_jitter = j.value("look_at_jitter", spec.look_at_jitter);
    spec.image_width = j.value("image_width", spec.image_width);
    spec.image_height = j.value("image_height", spec.image_height);
    spec.focal = j.value("focal", spec.focal);
    spec.descriptor_dim = j.value("descriptor_dim", spec.descriptor_dim);
    spec.rng_seed = j.value("rng_seed", spec.rng_seed);
    if (j.contains("planes")) {
      spec.planes.clear();
      for (const json& p : j.at("planes")) spec.planes.push_back({vec3_from_json(p.at("point")), vec3_from_json(p.at("normal"))});
    }
  } catch (const json::exception& e) {
    invalid(std::string("malformed scene spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

CorruptionSpec corruption_from_json_text(const std::string& text) {
  CorruptionSpec c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) invalid("corruption spec must be a JSON object");
    c.sim_scale = j.value("sim_scale", c.sim_scale);
    if (j.contains("sim_rotation")) c.sim_rotation = mat3_from_json(j.at("sim_rotation"));
    if (j.contains("sim_translation")) c.sim_translation = vec3_from_json(j.at("sim_translation"));
    c.pointmap_noise_sigma = j.value("pointmap_noise_sigma", c.pointmap_noise_sigma);
    c.pose_center_noise_sigma = j.value("pose_center_noise_sigma", c.pose_center_noise_sigma);
    c.keypoint_noise_sigma = j.value("keypoint_noise_sigma", c.keypoint_noise_sigma);
    c.descriptor_noise_sigma = j.value("descriptor_noise_sigma", c.descriptor_noise_sigma);
    c.outlier_fraction_centers = j.value("outlier_fraction_centers", c.outlier_fraction_centers);
    c.outlier_center_offset = j.value("outlier_center_offset", c.outlier_center_offset);
    c.outlier_fraction_matches = j.value("outlier_fraction_matches", c.outlier_fraction_matches);
  } catch (const json::exception& e) {
    invalid(std::string("malformed corruption spec: ") + e.what());
  }
  c.validate();
  return c;
}

void write_oracle(const OracleRecord& o, const std::filesystem::path& path) {
  json j;
  j["query_id"] = o.query_id;
  j["gt_query_pose"] = pose_to_row_major(o.gt_query_pose);
  j["true_scale"] = o.true_scale;
  j["true_align_rotation"] = mat3_to_json(o.true_align_rotation);
  j["true_translation"] = vec3_to_json(o.true_translation);
  j["scene_extent"] = o.scene_extent;
  j["confidence_anchor"] = o.confidence_anchor;
  j["corrupted_references"] = o.corrupted_references;
  json points = json::array();
  for (const Vec3& p : o.world_points) points.push_back(vec3_to_json(p));
  j["world_points"] = std::move(points);
  j["keypoint_world_ids"] = o.keypoint_ids;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

OracleRecord read_oracle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  OracleRecord o;
  try {
    const json j = json::parse(in);
    o.query_id = j.at("query_id").get<std::string>();
    o.gt_query_pose = pose_from_row_major(j.at("gt_query_pose").get<std::vector<double>>());
    o.true_scale = j.at("true_scale").get<double>();
    o.true_align_rotation = mat3_from_json(j.at("true_align_rotation"));
    o.true_translation = vec3_from_json(j.at("true_translation"));
    o.scene_extent = j.value("scene_extent", 0.0);
    o.confidence_anchor = j.value("confidence_anchor", 1);
    o.corrupted_references = j.value("corrupted_references", std::vector<int>{});
    for (const json& p : j.at("world_points")) o.world_points.push_back(vec3_from_json(p));
    o.keypoint_ids = j.at("keypoint_world_ids").get<std::vector<std::vector<int>>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvariantViolation, "malformed oracle " + path.string() + ": " + e.what());
  }
  return o;
}

}  // namespace feedloc::sim
