#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "feedloc/error.hpp"
#include "feedloc/geometry.hpp"
#include "test_support.hpp"

namespace feedloc {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Mat3 rot_x(double deg) { return Eigen::AngleAxisd(deg * kDeg, Vec3::UnitX()).toRotationMatrix(); }
Mat3 rot_z(double deg) { return Eigen::AngleAxisd(deg * kDeg, Vec3::UnitZ()).toRotationMatrix(); }

void expect_error(ErrorCode code, const auto& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TEST(Project, OnAxisPointHitsPrincipalPoint) {
  const Intrinsics k = testing::test_intrinsics();
  const Vec2 u = project(RigidPose{}, k, Vec3(0, 0, 5));
  EXPECT_DOUBLE_EQ(u.x(), 320.0);
  EXPECT_DOUBLE_EQ(u.y(), 240.0);
}

TEST(Project, OffAxisPoint) {
  const Vec2 u = project(RigidPose{}, testing::test_intrinsics(), Vec3(1, 0, 5));
  EXPECT_DOUBLE_EQ(u.x(), 420.0);
  EXPECT_DOUBLE_EQ(u.y(), 240.0);
}

TEST(Project, TranslatedCamera) {
  RigidPose p;
  p.center = Vec3(0, 0, -5);
  const Vec2 u = project(p, testing::test_intrinsics(), Vec3::Zero());
  EXPECT_DOUBLE_EQ(u.x(), 320.0);
  EXPECT_DOUBLE_EQ(u.y(), 240.0);
}

TEST(Project, RejectsPointsBehindCamera) {
  expect_error(ErrorCode::NonPositiveDepth, [] { project(RigidPose{}, testing::test_intrinsics(), Vec3(0, 0, -1)); });
  expect_error(ErrorCode::NonPositiveDepth, [] { project(RigidPose{}, testing::test_intrinsics(), Vec3(1, 0, 0)); });
}

TEST(Backproject, Examples) {
  const Intrinsics k = testing::test_intrinsics();
  EXPECT_TRUE(backproject(RigidPose{}, k, Vec2(320, 240), 5.0).isApprox(Vec3(0, 0, 5)));
  EXPECT_LT((backproject(RigidPose{}, k, Vec2(420, 240), 5.0) - Vec3(1, 0, 5)).norm(), 1e-12);
  expect_error(ErrorCode::NonPositiveDepth, [&] { backproject(RigidPose{}, k, Vec2(1, 1), 0.0); });
}

TEST(Backproject, RoundTripsWithProject) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> px(0.0, 639.0);
  std::uniform_real_distribution<double> depth(0.5, 50.0);
  const Intrinsics k = testing::test_intrinsics();
  for (int i = 0; i < 1000; ++i) {
    const RigidPose pose = testing::random_pose(rng, 5.0, 180.0);
    const Vec2 u(px(rng), px(rng) * 0.75);
    const double d = depth(rng);
    const Vec3 x = backproject(pose, k, u, d);
    EXPECT_LT((project(pose, k, x) - u).norm(), 1e-9);
    EXPECT_NEAR(pose.to_camera(x).z(), d, 1e-9 * d);
    const Vec2 v = project(pose, k, x);
    EXPECT_LT((backproject(pose, k, v, d) - x).norm(), 1e-9 * (1.0 + x.norm()));
  }
}

TEST(RigidPose, DoubleInverseIsIdentity) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const RigidPose p = testing::random_pose(rng, 10.0, 180.0);
    const RigidPose q = p.inverse().inverse();
    EXPECT_LT((q.rotation - p.rotation).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((q.center - p.center).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(RotationAngle, Examples) {
  EXPECT_DOUBLE_EQ(rotation_angle(Mat3::Identity(), Mat3::Identity()), 0.0);
  EXPECT_NEAR(rotation_angle(Mat3::Identity(), rot_z(90)), 90.0, 1e-12);
  EXPECT_NEAR(rotation_angle(rot_x(10), rot_x(40)), 30.0, 1e-12);
  EXPECT_NEAR(rotation_angle(Mat3::Identity(), rot_x(180)), 180.0, 1e-12);
}

TEST(RotationAngle, SmallAnglesKeepPrecision) {
  for (double deg : {1e-3, 1e-6, 1e-8}) {
    EXPECT_NEAR(rotation_angle(rot_z(deg), Mat3::Identity()), deg, 1e-12);
  }
}

TEST(RotationAngle, SymmetricAndTriangleInequality) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 a = sim::random_rotation(rng);
    const Mat3 b = sim::random_rotation(rng);
    const Mat3 c = sim::random_rotation(rng);
    EXPECT_NEAR(rotation_angle(a, b), rotation_angle(b, a), 1e-9);
    EXPECT_LE(rotation_angle(a, c), rotation_angle(a, b) + rotation_angle(b, c) + 1e-9);
  }
}

TEST(Orthonormalize, ProducesProperRotation) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1e-3);
  for (int i = 0; i < 100; ++i) {
    Mat3 m = sim::random_rotation(rng);
    for (int k = 0; k < 9; ++k) m.data()[k] += n(rng);
    const Mat3 r = orthonormalize(m);
    EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
    EXPECT_LT(rotation_angle(r, m), 0.5);
  }
}

TEST(ExpSo3, MatchesAngleAxis) {
  const Vec3 w(0.1, -0.2, 0.3);
  EXPECT_TRUE(exp_so3(w).isApprox(Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix(), 1e-14));
  EXPECT_TRUE(exp_so3(Vec3::Zero()).isApprox(Mat3::Identity()));
}

struct TwoCameras {
  RigidPose a;
  RigidPose b;
};

TwoCameras one_meter_baseline() {
  TwoCameras cams;
  cams.b.center = Vec3(1, 0, 0);
  return cams;
}

TEST(TriangulatePair, RecoversForwardProjectedPoint) {
  const Intrinsics k = testing::test_intrinsics();
  const TwoCameras c = one_meter_baseline();
  const Vec3 x(0.3, -0.2, 4.0);
  const Vec3 est = triangulate_pair(project(c.a, k, x), project(c.b, k, x), c.a, c.b, k, k);
  EXPECT_LT((est - x).norm(), 1e-6);
}

TEST(TriangulatePair, PointBehindCameraFailsCheirality) {
  const Intrinsics k = testing::test_intrinsics();
  const TwoCameras c = one_meter_baseline();
  // Pixels consistent with a point behind both cameras: the DLT solution lies at z < 0.
  const Vec3 x(0.3, -0.2, -4.0);
  const auto proj = [&](const RigidPose& p) {
    const Vec3 xc = p.to_camera(x);
    return Vec2(k.cx + k.fx * xc.x() / xc.z(), k.cy + k.fy * xc.y() / xc.z());
  };
  expect_error(ErrorCode::CheiralityFailure, [&] { triangulate_pair(proj(c.a), proj(c.b), c.a, c.b, k, k); });
}

TEST(TriangulatePair, CoincidentCentersAreDegenerate) {
  const Intrinsics k = testing::test_intrinsics();
  expect_error(ErrorCode::DegenerateBaseline,
               [&] { triangulate_pair(Vec2(300, 200), Vec2(310, 200), RigidPose{}, RigidPose{}, k, k); });
}

TEST(TriangulatePair, InconsistentPixelsAreRejected) {
  const Intrinsics k = testing::test_intrinsics();
  const TwoCameras c = one_meter_baseline();
  const Vec3 x(0.3, -0.2, 4.0);
  const Vec2 ub = project(c.b, k, x) + Vec2(0, 40);
  expect_error(ErrorCode::ReprojectionRejected, [&] { triangulate_pair(project(c.a, k, x), ub, c.a, c.b, k, k); });
}

TEST(TriangulatePair, NoiselessRecoveryAcrossBaselinesAndDepths) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> baseline(0.3, 10.0);
  std::uniform_real_distribution<double> depth(1.0, 50.0);
  const Intrinsics k = testing::test_intrinsics();
  int trials = 0;
  while (trials < 1000) {
    RigidPose a = testing::random_pose(rng, 20.0, 10.0);
    const double z = depth(rng);
    const Vec3 x = a.to_world(Vec3(0.3 * z * unit(rng), 0.2 * z * unit(rng), z));
    RigidPose b = a;
    b.center = a.center + baseline(rng) * a.rotation * Vec3(unit(rng), 0.2 * unit(rng), 0.1 * unit(rng)).normalized();
    b.rotation = a.rotation * exp_so3(0.05 * Vec3(unit(rng), unit(rng), unit(rng)));
    const Vec3 xb = b.to_camera(x);
    if (xb.z() < 1.0) continue;
    const Vec2 ua = project(a, k, x);
    const Vec2 ub = project(b, k, x);
    ++trials;
    const Vec3 est = triangulate_pair(ua, ub, a, b, k, k);
    EXPECT_LT((est - x).norm(), 1e-6) << "baseline " << (a.center - b.center).norm() << " depth " << z;
  }
}

}  // namespace
}  // namespace feedloc
