#include "feedloc/p3p.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace feedloc {
namespace {

using Poly = std::vector<double>;  // ascending powers

Poly multiply(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

Poly add(Poly a, const Poly& b, double weight = 1.0) {
  if (b.size() > a.size()) a.resize(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += weight * b[i];
  return a;
}

double evaluate(const Poly& p, double x) {
  double acc = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double evaluate_derivative(const Poly& p, double x) {
  double acc = 0.0;
  for (std::size_t i = p.size() - 1; i >= 1; --i) {
    acc = acc * x + static_cast<double>(i) * p[i];
  }
  return acc;
}

}  // namespace

std::vector<double> real_polynomial_roots(std::vector<double> coefficients) {
  const double scale = std::accumulate(coefficients.begin(), coefficients.end(), 0.0,
                                       [](double m, double c) { return std::max(m, std::abs(c)); });
  if (scale == 0.0) return {};
  while (coefficients.size() > 1 && std::abs(coefficients.back()) <= 1e-14 * scale) coefficients.pop_back();
  const std::size_t degree = coefficients.size() - 1;
  if (degree == 0) return {};

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(degree), static_cast<Eigen::Index>(degree));
  for (std::size_t i = 0; i < degree; ++i) {
    companion(0, static_cast<Eigen::Index>(i)) = -coefficients[degree - 1 - i] / coefficients[degree];
    if (i + 1 < degree) companion(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = 1.0;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  std::vector<double> roots;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const std::complex<double> z = solver.eigenvalues()(i);
    if (std::abs(z.imag()) > 1e-6 * (1.0 + std::abs(z.real()))) continue;
    double x = z.real();
    for (int polish = 0; polish < 3; ++polish) {
      const double d = evaluate_derivative(coefficients, x);
      if (d == 0.0) break;
      const double next = x - evaluate(coefficients, x) / d;
      if (std::abs(evaluate(coefficients, next)) >= std::abs(evaluate(coefficients, x))) break;
      x = next;
    }
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

bool p3p_degenerate(const std::array<Vec3, 3>& points) {
  const Vec3 e1 = points[1] - points[0];
  const Vec3 e2 = points[2] - points[0];
  const double longest = std::max({e1.squaredNorm(), e2.squaredNorm(), (points[2] - points[1]).squaredNorm()});
  return longest == 0.0 || e1.cross(e2).norm() <= 1e-6 * longest;
}

std::vector<RigidPose> solve_p3p(const std::array<Vec3, 3>& bearings, const std::array<Vec3, 3>& points) {
  std::vector<RigidPose> solutions;
  if (p3p_degenerate(points)) return solutions;

  const std::array<Vec3, 3> f{bearings[0].normalized(), bearings[1].normalized(), bearings[2].normalized()};
  const double a2 = (points[1] - points[2]).squaredNorm();
  const double b2 = (points[0] - points[2]).squaredNorm();
  const double c2 = (points[0] - points[1]).squaredNorm();
  const double cos_alpha = f[1].dot(f[2]);
  const double cos_beta = f[0].dot(f[2]);
  const double cos_gamma = f[0].dot(f[1]);

  // With s2 = u s1 and s3 = v s1, eliminating u^2 between the law-of-cosines
  // equations gives u = N(v) / D(v); substituting into the (b, c) equation
  // N^2 - 2 cos_gamma N D + M D^2 = 0 leaves a quartic in v.
  const double k = (a2 - c2) / b2;
  const Poly n{1.0 + k, -2.0 * k * cos_beta, k - 1.0};
  const Poly d{2.0 * cos_gamma, -2.0 * cos_alpha};
  const Poly m{(b2 - c2) / b2, 2.0 * (c2 / b2) * cos_beta, -c2 / b2};
  Poly quartic = multiply(n, n);
  quartic = add(quartic, multiply(n, d), -2.0 * cos_gamma);
  quartic = add(quartic, multiply(m, multiply(d, d)));

  for (double v : real_polynomial_roots(quartic)) {
    const double den = evaluate(d, v);
    if (std::abs(den) < 1e-12) continue;
    const double u = evaluate(n, v) / den;
    const double q = 1.0 + v * v - 2.0 * v * cos_beta;
    if (!(q > 0.0)) continue;
    const double s1 = std::sqrt(b2 / q);
    const double s2 = u * s1;
    const double s3 = v * s1;
    if (!(s1 > 0.0 && s2 > 0.0 && s3 > 0.0)) continue;

    Eigen::Matrix3d world;
    Eigen::Matrix3d camera;
    const std::array<double, 3> depth{s1, s2, s3};
    for (int i = 0; i < 3; ++i) {
      world.col(i) = points[i];
      camera.col(i) = depth[i] * f[i];
    }
    const Eigen::Matrix4d t = Eigen::umeyama(world, camera, false);
    const Mat3 r_cw = t.topLeftCorner<3, 3>();
    const Vec3 t_cw = t.topRightCorner<3, 1>();
    solutions.push_back({r_cw.transpose(), -(r_cw.transpose() * t_cw)});
  }
  return solutions;
}

}  // namespace feedloc
