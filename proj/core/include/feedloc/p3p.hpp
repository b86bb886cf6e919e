#pragma once

#include <array>
#include <vector>

#include "feedloc/geometry.hpp"

namespace feedloc {

/// Grunert's three-point absolute pose solver. `bearings` are unit rays in
/// the camera frame, `points` the matching world points. Returns up to four
/// camera-to-world poses; empty when the points are (near) collinear.
std::vector<RigidPose> solve_p3p(const std::array<Vec3, 3>& bearings, const std::array<Vec3, 3>& points);

/// True when the three points are too close to collinear for P3P.
bool p3p_degenerate(const std::array<Vec3, 3>& points);

/// Real roots of c[0] + c[1] x + ... + c[n] x^n.
std::vector<double> real_polynomial_roots(std::vector<double> coefficients);

}  // namespace feedloc
