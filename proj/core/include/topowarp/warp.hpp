#pragma once

#include "topowarp/kd_tree.hpp"
#include "topowarp/point_cloud.hpp"
#include "topowarp/se3.hpp"

#include <utility>
#include <vector>

namespace topowarp {

// Sparse deformation model: a set of node centers g_i, each carrying six
// local motion parameters, with Gaussian radial weights of common width
// sigma. A point is moved by the transform interpolated from its interp_k
// nearest nodes.
struct DeformationGraph {
  std::vector<Vec3> nodes;
  std::vector<EulerParams6> params;
  double sigma = 0.0;
  int interp_k = 4;
  KdTree node_index;

  std::size_t size() const { return nodes.size(); }
};

// Fully evaluated warp: one rigid transform per point of the cloud it was
// sampled for. transforms[i] belongs to point i of that support cloud.
struct DenseWarp {
  std::vector<RigidTransform> transforms;

  static DenseWarp identity(std::size_t n) {
    DenseWarp w;
    w.transforms.assign(n, RigidTransform::identity());
    return w;
  }
  std::size_t size() const { return transforms.size(); }
};

// Nodes from grid downsampling of `points` at cell size bin_size; sigma is
// fixed to bin_size / 2, params start at identity. Throws
// std::invalid_argument("graph too small") when fewer than interp_k cells
// are occupied.
DeformationGraph build_graph(const std::vector<Vec3>& points, double bin_size,
                             int interp_k = 4);

// The interp_k nearest nodes of x with their normalized Gaussian weights.
// When all raw weights underflow to zero (x far outside the graph's
// support), falls back to uniform weights so the result stays defined.
std::vector<std::pair<int, double>> interp_support(const DeformationGraph& g, const Vec3& x);

// Weighted average of the support nodes' parameters.
EulerParams6 interpolate_params(const DeformationGraph& g, const Vec3& x);

// Rigid transform acting at x, i.e. euler_to_transform(interpolate_params).
RigidTransform transform_at(const DeformationGraph& g, const Vec3& x);

Vec3 warp_point(const DeformationGraph& g, const Vec3& x);

// Samples the graph warp at each support point.
DenseWarp graph_to_dense(const DeformationGraph& g, const std::vector<Vec3>& support);

// Moves points by their transforms and rotates (re-normalized) normals.
// Keypoints ride along with the transform of their nearest support point.
// Throws std::invalid_argument("support size mismatch") if sizes differ.
OrientedPointCloud apply_warp(const DenseWarp& w, const OrientedPointCloud& cloud);

// Graph warp applied to a whole cloud; identical to
// apply_warp(graph_to_dense(g, cloud.points), cloud).
OrientedPointCloud warp_cloud(const DeformationGraph& g, const OrientedPointCloud& cloud);

// Composition (outer after inner) for a warp accumulated over `support`:
// the outer graph is evaluated at the inner-warped position of each point.
DenseWarp compose(const DeformationGraph& outer, const DenseWarp& inner,
                  const std::vector<Vec3>& support);

// Pointwise composition of two warps sampled over the same support.
DenseWarp compose(const DenseWarp& outer, const DenseWarp& inner);

// Rebase the inverse of a warp defined over X onto new support Y: each
// y in Y adopts the inverted transform of the nearest warped X point.
// This is how a target->source warp is turned into a source->target
// "backward" hypothesis (and vice versa).
DenseWarp invert_rebase(const DenseWarp& warp_over_x, const std::vector<Vec3>& x_points,
                        const std::vector<Vec3>& y_points);

}  // namespace topowarp
