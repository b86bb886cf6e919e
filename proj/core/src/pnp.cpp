#include <Eigen/Cholesky>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "feedloc/error.hpp"
#include "feedloc/p3p.hpp"
#include "feedloc/refine.hpp"

namespace feedloc {
namespace {

double squared_reprojection(const RigidPose& pose, const Intrinsics& k, const Vec3& x, const Vec2& u) {
  const Vec3 p = pose.to_camera(x);
  if (!(p.z() > kMinDepth)) return std::numeric_limits<double>::infinity();
  return (Vec2(k.cx + k.fx * p.x() / p.z(), k.cy + k.fy * p.y() / p.z()) - u).squaredNorm();
}

struct Score {
  int inliers = -1;
  double error = std::numeric_limits<double>::infinity();
};

Score score_pose(const RigidPose& pose, const Intrinsics& k, std::span<const Correspondence2D3D> corr,
                 double threshold2) {
  Score s{0, 0.0};
  for (const auto& c : corr) {
    const double e = squared_reprojection(pose, k, c.point, c.query_pixel);
    if (e <= threshold2) {
      ++s.inliers;
      s.error += e;
    }
  }
  return s;
}

}  // namespace

int PnpResult::inlier_count() const {
  return static_cast<int>(std::count(inlier_mask.begin(), inlier_mask.end(), true));
}

std::vector<bool> inlier_mask(const RigidPose& pose, const Intrinsics& k,
                              std::span<const Correspondence2D3D> correspondences, double threshold_px) {
  std::vector<bool> mask;
  mask.reserve(correspondences.size());
  const double t2 = threshold_px * threshold_px;
  for (const auto& c : correspondences) mask.push_back(squared_reprojection(pose, k, c.point, c.query_pixel) <= t2);
  return mask;
}

RigidPose refine_pose_lm(const RigidPose& start, const Intrinsics& k, std::span<const Vec2> pixels,
                         std::span<const Vec3> points, int max_iterations) {
  // Parameterized in world-to-camera form with a left perturbation:
  // R' = exp(w) R, t' = exp(w) t + dt.
  Mat3 r = start.world_to_camera_rotation();
  Vec3 t = start.world_to_camera_translation();
  auto cost_of = [&](const Mat3& rr, const Vec3& tt) {
    double cost = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Vec3 p = rr * points[i] + tt;
      if (!(p.z() > kMinDepth)) return std::numeric_limits<double>::infinity();
      cost += (Vec2(k.cx + k.fx * p.x() / p.z(), k.cy + k.fy * p.y() / p.z()) - pixels[i]).squaredNorm();
    }
    return cost;
  };

  double cost = cost_of(r, t);
  if (!std::isfinite(cost)) return start;
  double lambda = 1e-4;
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Vec3 p = r * points[i] + t;
      const double iz = 1.0 / p.z();
      const Vec2 res(k.cx + k.fx * p.x() * iz - pixels[i].x(), k.cy + k.fy * p.y() * iz - pixels[i].y());
      Eigen::Matrix<double, 2, 3> dpix;
      dpix << k.fx * iz, 0.0, -k.fx * p.x() * iz * iz, 0.0, k.fy * iz, -k.fy * p.y() * iz * iz;
      Eigen::Matrix<double, 3, 6> dp;
      dp.leftCols<3>() = -skew(p);
      dp.rightCols<3>() = Mat3::Identity();
      const Eigen::Matrix<double, 2, 6> j = dpix * dp;
      h += j.transpose() * j;
      g += j.transpose() * res;
    }
    if (g.lpNorm<Eigen::Infinity>() < 1e-12) break;

    Eigen::Matrix<double, 6, 6> damped = h;
    damped.diagonal() += lambda * h.diagonal().cwiseMax(1e-12);
    const Eigen::Matrix<double, 6, 1> step = damped.ldlt().solve(-g);
    const Mat3 dr = exp_so3(step.head<3>());
    const Mat3 r_new = dr * r;
    const Vec3 t_new = dr * t + step.tail<3>();
    const double cost_new = cost_of(r_new, t_new);
    if (cost_new < cost) {
      const double rel = (cost - cost_new) / std::max(cost, 1e-300);
      r = orthonormalize(r_new);
      t = t_new;
      cost = cost_new;
      lambda = std::max(lambda * 0.1, 1e-12);
      if (step.norm() < 1e-14 || rel < 1e-16) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  return {r.transpose(), -(r.transpose() * t)};
}

PnpResult pnp_refine(std::span<const Correspondence2D3D> correspondences, const RigidPose& init_pose,
                     const Intrinsics& k, const PnpConfig& config) {
  const std::size_t n = correspondences.size();
  if (n < 4) {
    throw Error(ErrorCode::TooFewCorrespondences, "PnP needs at least 4 correspondences, got " + std::to_string(n));
  }
  const double threshold2 = config.reproj_inlier_px * config.reproj_inlier_px;

  std::vector<Vec3> bearings(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 xn = k.normalize(correspondences[i].query_pixel);
    bearings[i] = Vec3(xn.x(), xn.y(), 1.0).normalized();
  }

  RigidPose best_pose = init_pose;
  Score best = score_pose(init_pose, k, correspondences, threshold2);

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(n);
  bool any_solvable = false;
  for (int it = 0; it < config.ransac_iterations; ++it) {
    // Partial Fisher-Yates: the first four entries become a uniform sample.
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t s = 0; s < 4; ++s) {
      std::uniform_int_distribution<std::size_t> pick(s, n - 1);
      std::swap(order[s], order[pick(rng)]);
    }
    const std::array<Vec3, 3> pts{correspondences[order[0]].point, correspondences[order[1]].point,
                                  correspondences[order[2]].point};
    if (p3p_degenerate(pts)) continue;
    any_solvable = true;
    const std::array<Vec3, 3> rays{bearings[order[0]], bearings[order[1]], bearings[order[2]]};
    const Correspondence2D3D& check = correspondences[order[3]];
    for (const RigidPose& hypothesis : solve_p3p(rays, pts)) {
      if (squared_reprojection(hypothesis, k, check.point, check.query_pixel) > threshold2) continue;
      const Score s = score_pose(hypothesis, k, correspondences, threshold2);
      if (s.inliers > best.inliers || (s.inliers == best.inliers && s.error < best.error)) {
        best = s;
        best_pose = hypothesis;
      }
    }
  }
  if (!any_solvable) throw Error(ErrorCode::SolverDegenerate, "every minimal sample was collinear");

  PnpResult result;
  result.ransac_pose = best_pose;
  result.pose = best_pose;
  const std::vector<bool> winners = inlier_mask(best_pose, k, correspondences, config.reproj_inlier_px);
  std::vector<Vec2> pixels;
  std::vector<Vec3> points;
  for (std::size_t i = 0; i < n; ++i) {
    if (!winners[i]) continue;
    pixels.push_back(correspondences[i].query_pixel);
    points.push_back(correspondences[i].point);
  }
  if (points.size() >= 3) {
    result.pose = refine_pose_lm(best_pose, k, pixels, points, config.lm_max_iterations);
  }
  result.inlier_mask = inlier_mask(result.pose, k, correspondences, config.reproj_inlier_px);
  result.refined = true;
  return result;
}

PnpResult select_final(const std::optional<PnpResult>& refined, const RigidPose& init_pose, const Intrinsics& k,
                       std::span<const Correspondence2D3D> correspondences, double reproj_inlier_px) {
  PnpResult fallback;
  fallback.pose = init_pose;
  fallback.ransac_pose = init_pose;
  fallback.inlier_mask = inlier_mask(init_pose, k, correspondences, reproj_inlier_px);
  fallback.refined = false;
  if (!refined || correspondences.empty()) return fallback;

  PnpResult candidate = *refined;
  candidate.inlier_mask = inlier_mask(candidate.pose, k, correspondences, reproj_inlier_px);
  if (candidate.inlier_count() >= fallback.inlier_count()) {
    candidate.refined = true;
    return candidate;
  }
  return fallback;
}

}  // namespace feedloc
