#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace feedloc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Camera-to-world rigid transform. `rotation` maps camera axes into the world
/// frame and `center` is the camera position, so a camera-frame point x maps to
/// rotation * x + center. World-to-camera quantities are derived on demand.
struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 center = Vec3::Zero();

  static RigidPose identity() { return {}; }

  /// World point expressed in this camera's frame.
  Vec3 to_camera(const Vec3& x_world) const { return rotation.transpose() * (x_world - center); }
  Vec3 to_world(const Vec3& x_camera) const { return rotation * x_camera + center; }

  Mat3 world_to_camera_rotation() const { return rotation.transpose(); }
  Vec3 world_to_camera_translation() const { return -(rotation.transpose() * center); }

  /// The inverse transform, itself expressed as a camera-to-world pose.
  RigidPose inverse() const { return {rotation.transpose(), -(rotation.transpose() * center)}; }
};

/// Pinhole intrinsics. Pixel (i, j) has its center at continuous coordinate
/// (i, j); the image covers [-0.5, width - 0.5) x [-0.5, height - 0.5).
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 && cx < width && cy >= 0.0 &&
           cy < height;
  }
  bool contains(const Vec2& pixel) const {
    return pixel.x() >= -0.5 && pixel.x() < width - 0.5 && pixel.y() >= -0.5 && pixel.y() < height - 0.5;
  }
  Mat3 matrix() const {
    Mat3 k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }
  /// Normalized image-plane coordinates (x/z, y/z) of a pixel.
  Vec2 normalize(const Vec2& pixel) const { return {(pixel.x() - cx) / fx, (pixel.y() - cy) / fy}; }
};

/// x -> scale * rotation * x + translation.
struct SimilarityTransform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return scale * (rotation * x) + translation; }
  SimilarityTransform inverse() const {
    const Mat3 rt = rotation.transpose();
    return {1.0 / scale, rt, -(rt * translation) / scale};
  }
};

// Below this camera-frame depth a point counts as behind the camera.
inline constexpr double kMinDepth = 1e-9;

/// Pixel of a world point. Throws NonPositiveDepth when the camera-frame depth
/// is <= 1e-9.
Vec2 project(const RigidPose& pose, const Intrinsics& k, const Vec3& x_world);

/// World point at the given camera-frame depth along the pixel's ray.
Vec3 backproject(const RigidPose& pose, const Intrinsics& k, const Vec2& pixel, double depth);

/// Angle in degrees of ra * rb^T, in [0, 180].
double rotation_angle(const Mat3& ra, const Mat3& rb);

/// Nearest rotation matrix (polar decomposition), det = +1.
Mat3 orthonormalize(const Mat3& m);

/// Rotation for an axis-angle vector (exponential map on SO(3)).
Mat3 exp_so3(const Vec3& omega);

Mat3 skew(const Vec3& v);

inline constexpr double kTriangulationMaxReprojPx = 4.0;

/// Linear two-view triangulation followed by a cheirality check and a
/// reprojection filter (max_reproj_px in both views).
Vec3 triangulate_pair(const Vec2& ua, const Vec2& ub, const RigidPose& pa, const RigidPose& pb,
                      const Intrinsics& ka, const Intrinsics& kb,
                      double max_reproj_px = kTriangulationMaxReprojPx);

}  // namespace feedloc
