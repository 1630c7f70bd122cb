#pragma once

#include "topowarp/kd_tree.hpp"
#include "topowarp/point_cloud.hpp"

namespace topowarp {

struct NormalEstimationParams {
  // radius > 0 selects neighborhoods by radius; otherwise the k nearest
  // neighbors (including the query point itself) are used.
  int k = 30;
  double radius = 0.0;
};

// PCA plane-fit normals, oriented to face the viewpoint. Neighborhoods that
// do not span a plane (fewer than 3 points, or rank < 2 covariance) yield a
// zero normal, which marks the point invalid. The result order matches the
// input point order.
std::vector<Vec3> estimate_normals(const std::vector<Vec3>& points,
                                   const NormalEstimationParams& params,
                                   const Vec3& viewpoint);

// Convenience overload reusing a prebuilt index over `points`.
std::vector<Vec3> estimate_normals(const std::vector<Vec3>& points, const KdTree& index,
                                   const NormalEstimationParams& params,
                                   const Vec3& viewpoint);

}  // namespace topowarp
