#include "topowarp/normals.hpp"

#include <Eigen/Eigenvalues>

#include "topowarp/parallel.hpp"

namespace topowarp {

std::vector<Vec3> estimate_normals(const std::vector<Vec3>& points,
                                   const NormalEstimationParams& params,
                                   const Vec3& viewpoint) {
  KdTree index(points);
  return estimate_normals(points, index, params, viewpoint);
}

std::vector<Vec3> estimate_normals(const std::vector<Vec3>& points, const KdTree& index,
                                   const NormalEstimationParams& params,
                                   const Vec3& viewpoint) {
  std::vector<Vec3> normals(points.size(), Vec3::Zero());

  parallel_for(points.size(), [&](std::size_t i) {
    std::vector<KdTree::Hit> hood = params.radius > 0.0
                                        ? index.radius(points[i], params.radius)
                                        : index.knn(points[i], params.k);
    if (hood.size() < 3) {
      return;  // not enough support for a plane
    }

    Vec3 mean = Vec3::Zero();
    for (const auto& h : hood) mean += index.points()[h.index];
    mean /= static_cast<double>(hood.size());

    Mat3 cov = Mat3::Zero();
    for (const auto& h : hood) {
      const Vec3 d = index.points()[h.index] - mean;
      cov += d * d.transpose();
    }

    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    // Eigenvalues come back ascending. A neighborhood that is collinear
    // (or coincident) has its second-smallest eigenvalue at numerical zero;
    // there is no well-defined plane, so leave the normal invalid.
    const double lmid = eig.eigenvalues()(1);
    const double lmax = eig.eigenvalues()(2);
    if (lmax <= 0.0 || lmid <= 1e-9 * lmax) {
      return;
    }

    Vec3 n = eig.eigenvectors().col(0).normalized();
    if (n.dot(viewpoint - points[i]) < 0.0) {
      n = -n;
    }
    normals[i] = n;
  });

  return normals;
}

}  // namespace topowarp
