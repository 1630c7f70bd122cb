#include "topowarp/warp.hpp"

#include <cmath>
#include <stdexcept>

#include "topowarp/parallel.hpp"
#include "topowarp/voxel.hpp"

namespace topowarp {

DeformationGraph build_graph(const std::vector<Vec3>& points, double bin_size, int interp_k) {
  if (interp_k < 1) {
    throw std::invalid_argument("interp_k must be positive");
  }
  DeformationGraph g;
  g.nodes = voxel_downsample(points, bin_size);
  if (static_cast<int>(g.nodes.size()) < interp_k) {
    throw std::invalid_argument("graph too small");
  }
  g.params.assign(g.nodes.size(), EulerParams6::zero());
  g.sigma = bin_size / 2.0;
  g.interp_k = interp_k;
  g.node_index = KdTree(g.nodes);
  return g;
}

std::vector<std::pair<int, double>> interp_support(const DeformationGraph& g, const Vec3& x) {
  const auto hits = g.node_index.knn(x, g.interp_k);
  const double inv_two_sigma2 = 1.0 / (2.0 * g.sigma * g.sigma);

  std::vector<std::pair<int, double>> support(hits.size());
  double wsum = 0.0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const double w = std::exp(-hits[i].dist * hits[i].dist * inv_two_sigma2);
    support[i] = {hits[i].index, w};
    wsum += w;
  }
  if (wsum == 0.0) {
    // Query far outside the graph: every weight underflowed. Fall back to
    // an unweighted average so distant points still move with the graph.
    const double u = 1.0 / static_cast<double>(support.size());
    for (auto& s : support) s.second = u;
  } else {
    for (auto& s : support) s.second /= wsum;
  }
  return support;
}

EulerParams6 interpolate_params(const DeformationGraph& g, const Vec3& x) {
  EulerParams6 p;
  for (const auto& [idx, w] : interp_support(g, x)) {
    p.angles += w * g.params[idx].angles;
    p.offsets += w * g.params[idx].offsets;
  }
  return p;
}

RigidTransform transform_at(const DeformationGraph& g, const Vec3& x) {
  return euler_to_transform(interpolate_params(g, x));
}

Vec3 warp_point(const DeformationGraph& g, const Vec3& x) {
  return transform_at(g, x).apply(x);
}

DenseWarp graph_to_dense(const DeformationGraph& g, const std::vector<Vec3>& support) {
  DenseWarp w;
  w.transforms.resize(support.size());
  parallel_for(support.size(), [&](std::size_t i) { w.transforms[i] = transform_at(g, support[i]); });
  return w;
}

OrientedPointCloud apply_warp(const DenseWarp& w, const OrientedPointCloud& cloud) {
  if (w.size() != cloud.size()) {
    throw std::invalid_argument("support size mismatch");
  }
  OrientedPointCloud out;
  out.points.resize(cloud.size());
  out.normals.resize(cloud.size());
  out.colors = cloud.colors;
  parallel_for(cloud.size(), [&](std::size_t i) {
    const RigidTransform& T = w.transforms[i];
    out.points[i] = T.apply(cloud.points[i]);
    const Vec3 n = T.R * cloud.normals[i];
    const double len = n.norm();
    out.normals[i] = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
  });
  if (!cloud.keypoints.empty()) {
    KdTree support_index(cloud.points);
    out.keypoints = cloud.keypoints;
    for (Keypoint& kp : out.keypoints) {
      kp.position = w.transforms[support_index.nearest(kp.position).index].apply(kp.position);
    }
  }
  return out;
}

OrientedPointCloud warp_cloud(const DeformationGraph& g, const OrientedPointCloud& cloud) {
  return apply_warp(graph_to_dense(g, cloud.points), cloud);
}

DenseWarp compose(const DeformationGraph& outer, const DenseWarp& inner,
                  const std::vector<Vec3>& support) {
  if (inner.size() != support.size()) {
    throw std::invalid_argument("support size mismatch");
  }
  DenseWarp out;
  out.transforms.resize(support.size());
  parallel_for(support.size(), [&](std::size_t i) {
    const Vec3 moved = inner.transforms[i].apply(support[i]);
    out.transforms[i] = transform_at(outer, moved).compose(inner.transforms[i]);
  });
  return out;
}

DenseWarp compose(const DenseWarp& outer, const DenseWarp& inner) {
  if (outer.size() != inner.size()) {
    throw std::invalid_argument("support size mismatch");
  }
  DenseWarp out;
  out.transforms.resize(inner.size());
  for (std::size_t i = 0; i < inner.size(); ++i) {
    out.transforms[i] = outer.transforms[i].compose(inner.transforms[i]);
  }
  return out;
}

DenseWarp invert_rebase(const DenseWarp& warp_over_x, const std::vector<Vec3>& x_points,
                        const std::vector<Vec3>& y_points) {
  if (warp_over_x.size() != x_points.size()) {
    throw std::invalid_argument("support size mismatch");
  }
  std::vector<Vec3> warped(x_points.size());
  for (std::size_t i = 0; i < x_points.size(); ++i) {
    warped[i] = warp_over_x.transforms[i].apply(x_points[i]);
  }
  KdTree warped_index(warped);

  DenseWarp out;
  out.transforms.resize(y_points.size());
  parallel_for(y_points.size(), [&](std::size_t i) {
    const int j = warped_index.nearest(y_points[i]).index;
    out.transforms[i] = warp_over_x.transforms[j].inverse();
  });
  return out;
}

}  // namespace topowarp
