#include "topowarp/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <tuple>

namespace topowarp {

std::vector<Vec3> voxel_downsample(const std::vector<Vec3>& points, double bin_size) {
  if (points.empty()) {
    throw std::invalid_argument("empty point set");
  }
  if (!(bin_size > 0.0)) {
    throw std::invalid_argument("non-positive bin size");
  }

  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
  std::map<Key, std::vector<Vec3>> cells;
  for (const Vec3& p : points) {
    Key key{static_cast<std::int64_t>(std::floor(p.x() / bin_size)),
            static_cast<std::int64_t>(std::floor(p.y() / bin_size)),
            static_cast<std::int64_t>(std::floor(p.z() / bin_size))};
    cells[key].push_back(p);
  }

  std::vector<Vec3> out;
  out.reserve(cells.size());
  for (auto& [key, members] : cells) {
    std::sort(members.begin(), members.end(), [](const Vec3& a, const Vec3& b) {
      return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
    });
    Vec3 sum = Vec3::Zero();
    for (const Vec3& p : members) sum += p;
    out.push_back(sum / static_cast<double>(members.size()));
  }
  return out;
}

}  // namespace topowarp
