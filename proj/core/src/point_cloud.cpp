#include "topowarp/point_cloud.hpp"

#include <cmath>
#include <stdexcept>

namespace topowarp {

bool is_valid_normal(const Vec3& n) {
  return n.squaredNorm() > 0.0;
}

void OrientedPointCloud::validate() const {
  if (normals.size() != points.size() || colors.size() != points.size()) {
    throw std::invalid_argument("point/normal/color count mismatch");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite() || !normals[i].allFinite() || !colors[i].allFinite()) {
      throw std::invalid_argument("non-finite value in cloud at index " + std::to_string(i));
    }
    const double nn = normals[i].norm();
    if (nn != 0.0 && std::abs(nn - 1.0) > 1e-6) {
      throw std::invalid_argument("non-unit normal at index " + std::to_string(i));
    }
    if (colors[i].minCoeff() < 0.0 || colors[i].maxCoeff() > 1.0) {
      throw std::invalid_argument("color out of [0,1] at index " + std::to_string(i));
    }
  }
  if (!keypoints.empty()) {
    const Eigen::Index dim = keypoints.front().descriptor.size();
    for (const Keypoint& kp : keypoints) {
      if (kp.descriptor.size() != dim) {
        throw std::invalid_argument("keypoint descriptor length mismatch");
      }
    }
  }
}

}  // namespace topowarp
