#pragma once

#include <cstddef>
#include <vector>

#include "fmeac/common/vec3.hpp"

namespace fmeac {

// Regular grid of surface heights (m) anchored at the origin. Cell (ix, iy) covers
// [ix*cell, (ix+1)*cell) x [iy*cell, (iy+1)*cell).
class Heightfield {
 public:
  Heightfield() = default;
  Heightfield(std::size_t nx, std::size_t ny, double cell_size, double fill = 0.0);

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  double cell_size() const { return cell_; }
  double extent_x() const { return static_cast<double>(nx_) * cell_; }
  double extent_y() const { return static_cast<double>(ny_) * cell_; }

  double& at(std::size_t ix, std::size_t iy) { return heights_[iy * nx_ + ix]; }
  double at(std::size_t ix, std::size_t iy) const { return heights_[iy * nx_ + ix]; }

  // Height of the cell containing (x, y); points outside are clamped onto the edge cells.
  double height_at(double x, double y) const;
  double max_height() const;

  const std::vector<double>& data() const { return heights_; }

  // Segment test sampled at cell-size resolution: samples = ceil(horizontal_len / cell) + 1,
  // evenly spaced including both end points. Clear iff every sample is strictly above the
  // surface or level with it.
  bool line_of_sight(Vec3 a, Vec3 b) const { return line_of_sight(a, b, 1.0); }
  // Same test with the sample spacing divided by `oversample`.
  bool line_of_sight(Vec3 a, Vec3 b, double oversample) const;

  friend bool operator==(const Heightfield&, const Heightfield&) = default;

 private:
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  double cell_ = 1.0;
  std::vector<double> heights_;
};

}  // namespace fmeac
