#include "topowarp/icp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace topowarp {

RegistrationResult register_clouds(const OrientedPointCloud& source,
                                   const OrientedPointCloud& target, const IcpConfig& cfg,
                                   const DenseWarp* w0, const OrganizedCloud* target_frame) {
  if (source.empty() || target.empty()) {
    throw std::invalid_argument("empty point set");
  }
  if (cfg.mode == CorrespondenceMode::Projective && target_frame == nullptr) {
    throw std::invalid_argument("projective mode needs a target frame");
  }
  if (w0 != nullptr && w0->size() != source.size()) {
    throw std::invalid_argument("support size mismatch");
  }

  RegistrationResult result;
  result.warp = w0 != nullptr ? *w0 : DenseWarp::identity(source.size());

  const KdTree target_index(target.points);

  // Node set for the non-rebuilding mode; advected along with the surface.
  std::vector<Vec3> pinned_nodes;

  for (int iter = 0; iter < cfg.max_outer_iters; ++iter) {
    const OrientedPointCloud warped = apply_warp(result.warp, source);

    DeformationGraph graph;
    if (cfg.rebuild_graph || iter == 0) {
      graph = build_graph(warped.points, cfg.bin_size, cfg.interp_k);
      if (!cfg.rebuild_graph) pinned_nodes = graph.nodes;
    } else {
      graph.nodes = pinned_nodes;
      graph.params.assign(pinned_nodes.size(), EulerParams6::zero());
      graph.sigma = cfg.bin_size / 2.0;
      graph.interp_k = cfg.interp_k;
      graph.node_index = KdTree(pinned_nodes);
    }

    CorrespondenceSet corr;
    corr.dense = cfg.mode == CorrespondenceMode::Projective
                     ? find_dense_projective(warped, *target_frame, cfg.gating)
                     : find_dense_nn(warped, target, target_index, cfg.gating);
    if (cfg.use_keypoints) {
      corr.sparse = match_keypoints(warped, target, cfg.gating, cfg.lowe_ratio);
    }

    GaussNewtonResult gn;
    try {
      gn = gauss_newton(graph, warped, target, corr, cfg.objective);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(std::string(e.what()) + " (outer iteration " +
                               std::to_string(iter + 1) + ")");
    }
    graph.params = gn.params;

    IterationStats stats;
    stats.dense_pairs = static_cast<int>(corr.dense.size());
    stats.sparse_pairs = static_cast<int>(corr.sparse.size());
    stats.energy_trace = gn.energy_trace;
    stats.objective = gn.energy_trace.back();
    for (const EulerParams6& p : gn.params) {
      stats.max_node_rotation =
          std::max(stats.max_node_rotation, rotation_angle(euler_to_transform(p).R));
      stats.max_node_translation = std::max(stats.max_node_translation, p.offsets.norm());
    }

    result.warp = compose(graph, result.warp, source.points);
    result.graph_final = graph;
    result.final_objective = stats.objective;
    result.iterations_used = iter + 1;
    result.per_iter_stats.push_back(std::move(stats));

    if (result.per_iter_stats.back().max_node_rotation < cfg.conv_rot &&
        result.per_iter_stats.back().max_node_translation < cfg.conv_trans) {
      break;
    }

    if (!cfg.rebuild_graph) {
      // Carry the node set along with the motion it just produced so the
      // nodes keep covering the surface.
      for (Vec3& node : pinned_nodes) {
        node = warp_point(graph, node);
      }
    }
  }

  return result;
}

BidirectionalResult register_bidirectional(const OrientedPointCloud& source,
                                           const OrientedPointCloud& target, const IcpConfig& cfg,
                                           const DenseWarp* w0,
                                           const OrganizedCloud* target_frame,
                                           const OrganizedCloud* source_frame) {
  BidirectionalResult out;
  try {
    out.forward = register_clouds(source, target, cfg, w0, target_frame);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("forward: ") + e.what());
  }
  // The backward pass projects against the source frame; without one it
  // falls back to kd-tree matching.
  IcpConfig back_cfg = cfg;
  if (back_cfg.mode == CorrespondenceMode::Projective && source_frame == nullptr) {
    back_cfg.mode = CorrespondenceMode::NearestNeighbor;
  }
  try {
    out.backward = register_clouds(target, source, back_cfg, nullptr, source_frame);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("backward: ") + e.what());
  }
  return out;
}

}  // namespace topowarp
