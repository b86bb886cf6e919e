#pragma once

#include <optional>
#include <vector>

#include "feedloc/geometry.hpp"

namespace feedloc {

/// Dense per-pixel 3-vectors in the owning camera's frame, row-major H x W x 3.
class PointMap {
 public:
  PointMap() = default;
  PointMap(int width, int height) : width_(width), height_(height), data_(3 * width * height, 0.0) {}

  int width() const { return width_; }
  int height() const { return height_; }

  Vec3 at(int row, int col) const {
    const std::size_t i = index(row, col);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set(int row, int col, const Vec3& p) {
    const std::size_t i = index(row, col);
    data_[i] = p.x();
    data_[i + 1] = p.y();
    data_[i + 2] = p.z();
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t index(int row, int col) const { return 3 * (static_cast<std::size_t>(row) * width_ + col); }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Nonnegative per-pixel confidence, row-major H x W.
class ConfidenceMap {
 public:
  ConfidenceMap() = default;
  ConfidenceMap(int width, int height, double fill = 0.0)
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int row, int col) const { return data_[static_cast<std::size_t>(row) * width_ + col]; }
  void set(int row, int col, double c) { data_[static_cast<std::size_t>(row) * width_ + col] = c; }
  double sum() const;

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

inline constexpr double kMinSampleDepth = 1e-6;

/// Samples the point map at a subpixel location. Interpolation is
/// perspective-correct: x/z, y/z and 1/z are blended bilinearly, which is
/// exact wherever the four neighbours lie on one plane. Returns nullopt when
/// any contributing neighbour has depth <= 1e-6 or confidence below
/// `confidence_floor`.
std::optional<Vec3> sample_point(const PointMap& points, const ConfidenceMap& confidence, const Vec2& pixel,
                                 double confidence_floor = 0.0);

}  // namespace feedloc
