#include "fmeac/common/heightfield.hpp"

#include <algorithm>
#include <cmath>

#include "fmeac/common/errors.hpp"

namespace fmeac {

Heightfield::Heightfield(std::size_t nx, std::size_t ny, double cell_size, double fill)
    : nx_(nx), ny_(ny), cell_(cell_size), heights_(nx * ny, fill) {
  if (nx == 0 || ny == 0 || !(cell_size > 0.0)) {
    throw ContractError("heightfield needs positive dimensions and cell size");
  }
}

double Heightfield::height_at(double x, double y) const {
  auto index = [this](double v, std::size_t n) {
    const double i = std::floor(v / cell_);
    if (i < 0.0) return std::size_t{0};
    return std::min(static_cast<std::size_t>(i), n - 1);
  };
  return at(index(x, nx_), index(y, ny_));
}

double Heightfield::max_height() const {
  return heights_.empty() ? 0.0 : *std::max_element(heights_.begin(), heights_.end());
}

bool Heightfield::line_of_sight(Vec3 a, Vec3 b, double oversample) const {
  const Vec3 d = b - a;
  const double step = cell_ / oversample;
  const auto intervals = static_cast<std::size_t>(std::ceil(d.horizontal_norm() / step));
  for (std::size_t k = 0; k <= intervals; ++k) {
    const double t = intervals == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(intervals);
    const Vec3 p = a + d * t;
    if (height_at(p.x, p.y) > p.z) return false;
  }
  return true;
}

}  // namespace fmeac
