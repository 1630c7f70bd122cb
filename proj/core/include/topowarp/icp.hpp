#pragma once

#include "topowarp/correspondence.hpp"
#include "topowarp/solver.hpp"
#include "topowarp/warp.hpp"

#include <optional>

namespace topowarp {

enum class CorrespondenceMode { NearestNeighbor, Projective };

struct IcpConfig {
  double bin_size = 0.025;  // deformation graph cell size r_b
  int interp_k = 4;
  GatingThresholds gating;
  ObjectiveConfig objective;
  int max_outer_iters = 10;
  // The loop stops once the incremental warp is close to identity: every
  // node of the last increment rotated less than conv_rot and moved less
  // than conv_trans.
  double conv_rot = 0.008726646259971648;  // 0.5 degrees
  double conv_trans = 0.001;               // bin_size / 25 for the default cell
  CorrespondenceMode mode = CorrespondenceMode::NearestNeighbor;
  bool use_keypoints = true;
  double lowe_ratio = 0.8;
  // true: nodes are resampled from the warped cloud every outer iteration;
  // false: the initial node set is kept and advected by each increment.
  bool rebuild_graph = true;
};

struct IterationStats {
  int dense_pairs = 0;
  int sparse_pairs = 0;
  double objective = 0.0;               // after the iteration's optimization
  std::vector<double> energy_trace;     // objective per accepted solver step
  double max_node_rotation = 0.0;       // of the incremental warp
  double max_node_translation = 0.0;
};

struct RegistrationResult {
  DenseWarp warp;                 // accumulated warp over the source points
  DeformationGraph graph_final;   // last increment's graph (optimized params)
  int iterations_used = 0;
  double final_objective = 0.0;
  std::vector<IterationStats> per_iter_stats;
};

// Non-rigid alignment of source onto target: repeatedly warp the source by
// the accumulated warp, search correspondences against the target, fit an
// incremental graph warp on the warped cloud, and compose. w0 (when given)
// must hold one transform per source point.
// Projective mode requires target_frame; it is ignored otherwise.
RegistrationResult register_clouds(const OrientedPointCloud& source,
                                   const OrientedPointCloud& target, const IcpConfig& cfg,
                                   const DenseWarp* w0 = nullptr,
                                   const OrganizedCloud* target_frame = nullptr);

// Forward (source->target) and backward (target->source) registrations;
// the backward pass builds its deformation graph over the target cloud.
// w0 and target_frame apply to the forward pass, source_frame is the
// backward pass's projective target (without it the backward pass uses
// kd-tree matching).
struct BidirectionalResult {
  RegistrationResult forward;
  RegistrationResult backward;
};
BidirectionalResult register_bidirectional(const OrientedPointCloud& source,
                                           const OrientedPointCloud& target, const IcpConfig& cfg,
                                           const DenseWarp* w0 = nullptr,
                                           const OrganizedCloud* target_frame = nullptr,
                                           const OrganizedCloud* source_frame = nullptr);

}  // namespace topowarp
