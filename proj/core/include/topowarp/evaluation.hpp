#pragma once

#include "topowarp/depth.hpp"
#include "topowarp/kd_tree.hpp"
#include "topowarp/topology.hpp"

namespace topowarp {

struct Flow2D {
  int width = 0;
  int height = 0;
  std::vector<double> u;  // pixel displacement, row-major
  std::vector<double> v;
  std::vector<std::uint8_t> valid;

  std::size_t pixels() const { return u.size(); }
};

// Projects a 3d warp of an organized cloud to image-space flow: for every
// valid source pixel, the displacement between the projections of the
// warped and original point. Warped points behind the camera are invalid.
Flow2D warp_to_flow(const OrganizedCloud& source, const DenseWarp& warp);

struct FlowError {
  std::vector<double> per_pixel;  // one entry per jointly valid pixel, row-major order
  double mean = 0.0;
};

// Endpoint error |est - gt| per jointly valid pixel.
// Throws std::invalid_argument("no jointly valid pixels") if none exist.
FlowError epe(const Flow2D& estimate, const Flow2D& ground_truth);

// Angular error in degrees between homogeneous flow vectors (u, v, 1),
// with the cosine clamped to [-1, 1].
FlowError ae(const Flow2D& estimate, const Flow2D& ground_truth);

// Symmetric fraction of points within rho of the other set (Eq. of the
// overlap ratio): (|close(X1->X2)| + |close(X2->X1)|) / (|X1| + |X2|).
// Throws std::invalid_argument("empty set") when either set is empty.
double overlap_rho(const std::vector<Vec3>& x1, const std::vector<Vec3>& x2, double rho);

struct MatchedPair {
  int gt;
  int det;
  double overlap;
  int delay;  // t_gt - t_det, signed
};

struct EventMatchReport {
  std::vector<MatchedPair> matches;  // all admissible pairs
  std::vector<int> gt_to_det;        // best detected event per gt event (-1 = none)
  std::vector<int> det_to_gt;        // best gt event per detected event (-1 = none)
  double matched_fraction_gt = 0.0;  // percent of gt events with a match
  double matched_fraction_det = 0.0; // percent of detected events with a match
  double mean_overlap = 0.0;         // over the gt->det mapping
  double mean_delay = 0.0;           // over the gt->det mapping
  double mean_overlap_det = 0.0;     // over the det->gt mapping
  double mean_delay_det = 0.0;       // over the det->gt mapping
};

// Admissible matches need the same label, timestamps within dt_max frames,
// and point-set overlap (at radius rho) of at least min_overlap; each event
// is then mapped to its highest-overlap partner (ties to the lower index).
// Empty inputs produce zero fractions, not an error.
EventMatchReport match_events(const std::vector<TopologyEvent>& gt,
                              const std::vector<TopologyEvent>& det, double rho, int dt_max,
                              double min_overlap);

struct SepError {
  double mean_mm = 0.0;
  int points_used = 0;
  int points_occluded = 0;
};

// Registration error restricted to an annotated region: masked source
// points are warped, those hidden behind the target geometry (depth excess
// over the target's depth map greater than dz_occ) are discarded, and the
// rest contribute their nearest-neighbor distance to the target cloud.
// Points projecting outside the frame or onto pixels without depth cannot
// be occlusion-tested and are kept. Throws std::invalid_argument("empty
// mask") / ("no visible points") respectively.
SepError separation_registration_error(const OrientedPointCloud& source, const DenseWarp& warp,
                                       const std::vector<int>& mask,
                                       const OrientedPointCloud& target,
                                       const DepthFrame& target_depth, double dz_occ);

}  // namespace topowarp
