#include "feedloc/geometry.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "feedloc/error.hpp"

namespace feedloc {

Vec2 project(const RigidPose& pose, const Intrinsics& k, const Vec3& x_world) {
  const Vec3 xc = pose.to_camera(x_world);
  if (!(xc.z() > kMinDepth)) {
    throw Error(ErrorCode::NonPositiveDepth, "point has camera depth " + std::to_string(xc.z()));
  }
  return {k.cx + k.fx * xc.x() / xc.z(), k.cy + k.fy * xc.y() / xc.z()};
}

Vec3 backproject(const RigidPose& pose, const Intrinsics& k, const Vec2& pixel, double depth) {
  if (!(depth > 0.0)) {
    throw Error(ErrorCode::NonPositiveDepth, "backprojection depth " + std::to_string(depth));
  }
  const Vec2 n = k.normalize(pixel);
  return pose.to_world(Vec3(n.x() * depth, n.y() * depth, depth));
}

double rotation_angle(const Mat3& ra, const Mat3& rb) {
  const Mat3 m = ra * rb.transpose();
  // atan2 of (sin, cos) stays accurate near 0 and 180 degrees where the
  // arccos of the trace loses half the available digits.
  const double cos_part = std::clamp((m.trace() - 1.0) / 2.0, -1.0, 1.0);
  const Vec3 axis(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
  const double sin_part = 0.5 * axis.norm();
  return std::atan2(sin_part, cos_part) * 180.0 / std::numbers::pi;
}

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) *= -1.0;
  }
  return u * v.transpose();
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

Mat3 exp_so3(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta < 1e-12) {
    return Mat3::Identity() + skew(omega);
  }
  return Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix();
}

Vec3 triangulate_pair(const Vec2& ua, const Vec2& ub, const RigidPose& pa, const RigidPose& pb,
                      const Intrinsics& ka, const Intrinsics& kb, double max_reproj_px) {
  if ((pa.center - pb.center).norm() < 1e-6) {
    throw Error(ErrorCode::DegenerateBaseline, "camera centers coincide");
  }
  // Work relative to camera a's center to keep the DLT well conditioned for
  // scenes far from the world origin.
  const Vec3 origin = pa.center;
  auto projection_rows = [&](const RigidPose& pose, const Vec2& normalized, Eigen::Matrix4d& a, int row) {
    Eigen::Matrix<double, 3, 4> p;
    p.leftCols<3>() = pose.world_to_camera_rotation();
    p.col(3) = -(pose.world_to_camera_rotation() * (pose.center - origin));
    a.row(row) = normalized.x() * p.row(2) - p.row(0);
    a.row(row + 1) = normalized.y() * p.row(2) - p.row(1);
  };
  Eigen::Matrix4d a;
  projection_rows(pa, ka.normalize(ua), a, 0);
  projection_rows(pb, kb.normalize(ub), a, 2);
  for (int r = 0; r < 4; ++r) {
    a.row(r).normalize();
  }
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(a, Eigen::ComputeFullV);
  const Eigen::Vector4d h = svd.matrixV().col(3);
  if (std::abs(h(3)) < 1e-15) {
    throw Error(ErrorCode::CheiralityFailure, "point at infinity");
  }
  const Vec3 x = h.head<3>() / h(3) + origin;

  if (!(pa.to_camera(x).z() > kMinDepth) || !(pb.to_camera(x).z() > kMinDepth)) {
    throw Error(ErrorCode::CheiralityFailure, "triangulated point behind a camera");
  }
  const double err_a = (project(pa, ka, x) - ua).norm();
  const double err_b = (project(pb, kb, x) - ub).norm();
  if (err_a > max_reproj_px || err_b > max_reproj_px) {
    throw Error(ErrorCode::ReprojectionRejected,
                "reprojection error " + std::to_string(std::max(err_a, err_b)) + " px");
  }
  return x;
}

}  // namespace feedloc
