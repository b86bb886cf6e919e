#include "feedloc/refine.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "feedloc/error.hpp"

namespace feedloc {

std::vector<Track> build_tracks(int anchor_view, std::span<const std::pair<int, MatchSet>> matches,
                                std::span<const FeatureSet> features) {
  struct Candidate {
    int keypoint;
    double score;
  };
  // anchor keypoint -> (position in `matches` -> best candidate)
  std::map<int, std::map<std::size_t, Candidate>> merged;
  for (std::size_t m = 0; m < matches.size(); ++m) {
    const MatchSet& set = matches[m].second;
    for (std::size_t p = 0; p < set.pairs.size(); ++p) {
      const auto [a, b] = set.pairs[p];
      const double score = set.has_scores() ? set.scores[p] : 0.0;
      auto& per_ref = merged[a];
      const auto it = per_ref.find(m);
      if (it == per_ref.end()) {
        per_ref.emplace(m, Candidate{b, score});
      } else if (set.has_scores() && score > it->second.score) {
        it->second = {b, score};
      }
    }
  }

  const FeatureSet& anchor_features = features[anchor_view];
  std::vector<Track> tracks;
  tracks.reserve(merged.size());
  for (const auto& [kp, per_ref] : merged) {
    Track t;
    t.anchor_keypoint = kp;
    t.descriptor = anchor_features.descriptors.row(kp).transpose();
    t.observations.push_back({anchor_view, anchor_features.keypoints[kp]});
    for (const auto& [m, cand] : per_ref) {
      const int view = matches[m].first;
      t.observations.push_back({view, features[view].keypoints[cand.keypoint]});
    }
    tracks.push_back(std::move(t));
  }
  return tracks;
}

Vec3 init_track_point(const Track& track, const Intrinsics& anchor_intrinsics, const PointMap& anchor_points,
                      const ConfidenceMap& anchor_confidence, double scale, const RigidPose& anchor_gt) {
  const Vec2& pixel = track.observations.front().pixel;
  const auto local = sample_point(anchor_points, anchor_confidence, pixel);
  if (!local || !(scale * local->z() > 0.0)) {
    throw Error(ErrorCode::InvalidDepth, "no valid point-map depth at anchor keypoint " +
                                             std::to_string(track.anchor_keypoint));
  }
  return backproject(anchor_gt, anchor_intrinsics, pixel, scale * local->z());
}

double soft_l1(double squared_residual, double c) {
  const double c2 = c * c;
  return 2.0 * c2 * (std::sqrt(1.0 + squared_residual / c2) - 1.0);
}

double soft_l1_derivative(double squared_residual, double c) {
  return 1.0 / std::sqrt(1.0 + squared_residual / (c * c));
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const RigidPose& pose, const Intrinsics& k, const Vec3& x_world) {
  const Vec3 p = pose.to_camera(x_world);
  const double iz = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> d_pixel_d_cam;
  d_pixel_d_cam << k.fx * iz, 0.0, -k.fx * p.x() * iz * iz, 0.0, k.fy * iz, -k.fy * p.y() * iz * iz;
  return d_pixel_d_cam * pose.world_to_camera_rotation();
}

double track_cost(const Track& track, const Vec3& point, std::span<const RigidPose> poses,
                  std::span<const Intrinsics> intrinsics, double robust_scale) {
  double cost = 0.0;
  for (const Observation& obs : track.observations) {
    const RigidPose& pose = poses[obs.view];
    const Vec3 p = pose.to_camera(point);
    if (!(p.z() > kMinDepth)) return std::numeric_limits<double>::infinity();
    const Intrinsics& k = intrinsics[obs.view];
    const Vec2 u(k.cx + k.fx * p.x() / p.z(), k.cy + k.fy * p.y() / p.z());
    cost += soft_l1((u - obs.pixel).squaredNorm(), robust_scale);
  }
  return cost;
}

void refine_track_point(Track& track, std::span<const RigidPose> poses, std::span<const Intrinsics> intrinsics,
                        const BaConfig& config) {
  Vec3 x = track.point;
  double cost = track_cost(track, x, poses, intrinsics, config.robust_scale);
  track.initial_cost = cost;
  track.final_cost = cost;
  track.iterations = 0;
  track.converged = false;
  track.behind_camera = !std::isfinite(cost);
  if (track.behind_camera) return;

  double lambda = 1e-4;
  while (track.iterations < config.max_iterations) {
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    Vec3 g = Vec3::Zero();
    for (const Observation& obs : track.observations) {
      const RigidPose& pose = poses[obs.view];
      const Intrinsics& k = intrinsics[obs.view];
      const Vec2 r = project(pose, k, x) - obs.pixel;
      const Eigen::Matrix<double, 2, 3> j = projection_jacobian(pose, k, x);
      const double w = soft_l1_derivative(r.squaredNorm(), config.robust_scale);
      h += w * j.transpose() * j;
      g += w * j.transpose() * r;
    }
    if (g.lpNorm<Eigen::Infinity>() <= config.gradient_tolerance) {
      track.converged = true;
      break;
    }

    ++track.iterations;
    Eigen::Matrix3d damped = h;
    damped.diagonal() += lambda * h.diagonal().cwiseMax(1e-12);
    const Vec3 step = damped.ldlt().solve(-g);
    const Vec3 candidate = x + step;
    const double candidate_cost = track_cost(track, candidate, poses, intrinsics, config.robust_scale);
    if (candidate_cost < cost) {
      x = candidate;
      cost = candidate_cost;
      lambda = std::max(lambda * 0.1, 1e-12);
      if (step.norm() <= config.parameter_tolerance * (x.norm() + config.parameter_tolerance)) {
        track.converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) {
        // No descent direction left at double precision.
        track.converged = true;
        break;
      }
    }
  }
  track.point = x;
  track.final_cost = cost;
}

void structure_only_ba(std::vector<Track>& tracks, std::span<const RigidPose> poses,
                       std::span<const Intrinsics> intrinsics, const BaConfig& config) {
  for (Track& t : tracks) refine_track_point(t, poses, intrinsics, config);
}

namespace {

// Uniform grid over query keypoints with cells of the search radius, so each
// lookup touches at most 3 x 3 cells.
class KeypointGrid {
 public:
  KeypointGrid(std::span<const Vec2> keypoints, double cell) : cell_(cell) {
    for (std::size_t i = 0; i < keypoints.size(); ++i) {
      cells_[key(cell_index(keypoints[i].x()), cell_index(keypoints[i].y()))].push_back(static_cast<int>(i));
    }
  }

  template <typename Fn>
  void for_each_near(const Vec2& p, Fn&& fn) const {
    const long cx = cell_index(p.x());
    const long cy = cell_index(p.y());
    for (long dy = -1; dy <= 1; ++dy) {
      for (long dx = -1; dx <= 1; ++dx) {
        const auto it = cells_.find(key(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (int idx : it->second) fn(idx);
      }
    }
  }

 private:
  long cell_index(double v) const { return static_cast<long>(std::floor(v / cell_)); }
  static long long key(long x, long y) { return (static_cast<long long>(x) << 32) ^ (y & 0xffffffffLL); }

  double cell_;
  std::unordered_map<long long, std::vector<int>> cells_;
};

}  // namespace

std::vector<Correspondence2D3D> guided_match(std::span<const Track> tracks, const RigidPose& init_pose,
                                             const FeatureSet& query, const Intrinsics& query_intrinsics,
                                             double radius, double max_descriptor_distance) {
  std::vector<Correspondence2D3D> out;
  if (query.keypoints.empty() || radius <= 0.0) return out;
  const KeypointGrid grid(query.keypoints, radius);
  const double radius2 = radius * radius;

  for (std::size_t t = 0; t < tracks.size(); ++t) {
    const Track& track = tracks[t];
    if (!track.usable()) continue;
    const Vec3 pc = init_pose.to_camera(track.point);
    if (!(pc.z() > kMinDepth)) continue;
    const Vec2 projected(query_intrinsics.cx + query_intrinsics.fx * pc.x() / pc.z(),
                         query_intrinsics.cy + query_intrinsics.fy * pc.y() / pc.z());
    if (!query_intrinsics.contains(projected)) continue;

    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    grid.for_each_near(projected, [&](int idx) {
      if ((query.keypoints[idx] - projected).squaredNorm() > radius2) return;
      const double d = (query.descriptors.row(idx).transpose() - track.descriptor).norm();
      if (d < best_dist || (d == best_dist && idx < best)) {
        best_dist = d;
        best = idx;
      }
    });
    if (best >= 0 && best_dist <= max_descriptor_distance) {
      out.push_back({static_cast<int>(t), best, query.keypoints[best], track.point, best_dist});
    }
  }
  return out;
}

}  // namespace feedloc
