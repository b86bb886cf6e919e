#include "feedloc/pointmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace feedloc {

double ConfidenceMap::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

std::optional<Vec3> sample_point(const PointMap& points, const ConfidenceMap& confidence, const Vec2& pixel,
                                 double confidence_floor) {
  const int w = points.width();
  const int h = points.height();
  if (w <= 0 || h <= 0 || !std::isfinite(pixel.x()) || !std::isfinite(pixel.y())) {
    return std::nullopt;
  }
  const double u = std::clamp(pixel.x(), 0.0, static_cast<double>(w - 1));
  const double v = std::clamp(pixel.y(), 0.0, static_cast<double>(h - 1));
  const int c0 = std::min(static_cast<int>(std::floor(u)), std::max(w - 2, 0));
  const int r0 = std::min(static_cast<int>(std::floor(v)), std::max(h - 2, 0));
  const int c1 = std::min(c0 + 1, w - 1);
  const int r1 = std::min(r0 + 1, h - 1);
  const double fu = u - c0;
  const double fv = v - r0;

  const std::array<int, 4> rows{r0, r0, r1, r1};
  const std::array<int, 4> cols{c0, c1, c0, c1};
  const std::array<double, 4> weights{(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv};

  double sx = 0.0;
  double sy = 0.0;
  double inv_z = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (weights[n] <= 0.0) {
      continue;
    }
    const Vec3 p = points.at(rows[n], cols[n]);
    if (!(p.z() > kMinSampleDepth) || confidence.at(rows[n], cols[n]) < confidence_floor) {
      return std::nullopt;
    }
    sx += weights[n] * p.x() / p.z();
    sy += weights[n] * p.y() / p.z();
    inv_z += weights[n] / p.z();
  }
  const double z = 1.0 / inv_z;
  return Vec3(sx * z, sy * z, z);
}

}  // namespace feedloc
