#pragma once

#include "topowarp/icp.hpp"

namespace topowarp {

struct TopologyConfig {
  double rho_s = 0.015;       // stretch neighborhood radius
  double tau = 2.2;           // absolute score threshold
  double alpha = 1.5;         // stretch/compress dominance ratio
  double rho_e = 0.075;       // event influence radius for blending
  double cluster_dist = 0.02; // single-linkage distance for event clustering
  int min_event_points = 75;  // components smaller than this are noise
  // false: blend against the raw candidate point sets (default); true:
  // blend against the points of the surviving clustered events only.
  bool blend_use_clustered = false;
};

// Per-point local stretch of a warp: the worst expansion ratio of the
// distances to the rho_s-neighbors.
struct StretchField {
  std::vector<double> values;
  double rho_s = 0.0;
};

enum class EventLabel { Contact, Separation };

struct TopologyEvent {
  EventLabel label = EventLabel::Contact;
  int timestamp = 0;
  std::vector<Vec3> points;
  std::vector<int> indices;  // into the cloud the detection ran on
};

struct BlendWeights {
  std::vector<double> w_f;
  std::vector<double> w_b;
};

// Candidate event points (indices into the source cloud).
struct EventCandidates {
  std::vector<int> con;
  std::vector<int> sep;
};

// values[i] = max over neighbors j within rho_s of
// |W(x_i) - W(x_j)| / |x_i - x_j|; exactly 1 when i has no neighbors.
// Coincident pairs (distance < 1e-9) carry no information and are skipped.
StretchField stretch(const OrientedPointCloud& cloud, const DenseWarp& warp, double rho_s);

// Pulls a stretch field computed on the target back onto the source: each
// source point reads the value at the target point nearest to its warped
// position. High values indicate that the source neighborhood is being
// compressed onto previously separate geometry.
std::vector<double> compress_map(const OrientedPointCloud& source,
                                 const OrientedPointCloud& target, const DenseWarp& forward,
                                 const StretchField& stretch_target, const KdTree& target_index);

// Classify each point from the combined forward/backward evidence: the
// dominant effect (by factor alpha) must also exceed the absolute
// threshold tau. With alpha > 1 no point can be in both sets.
EventCandidates extract_events(const StretchField& stretch_f, const StretchField& stretch_b,
                               const std::vector<double>& compress_f,
                               const std::vector<double>& compress_b, double tau, double alpha);

// Euclidean single-linkage components per class; components with fewer
// than min_points members are dropped. Events are ordered contacts first,
// then by their smallest member index.
std::vector<TopologyEvent> cluster_events(const std::vector<Vec3>& points,
                                          const EventCandidates& candidates, int timestamp,
                                          double cluster_dist, int min_points);

// Per-point convex blend of the two forward hypotheses. Contact evidence
// pulls toward the plain forward warp (base weight 1 plus kernels), and
// separation evidence toward the inverted-backward warp; Gaussian kernels
// of bandwidth rho_e/3 are accumulated over event points within rho_e.
// The blended rotation is projected back onto SO(3). Points with zero
// separation influence keep their forward transform bit-for-bit.
std::pair<DenseWarp, BlendWeights> blend(const std::vector<Vec3>& source_points,
                                         const DenseWarp& warp_f, const DenseWarp& warp_b,
                                         const std::vector<Vec3>& con_points,
                                         const std::vector<Vec3>& sep_points, double rho_e);

struct PipelineConfig {
  IcpConfig icp;
  TopologyConfig topology;
  bool topology_enabled = true;  // false = plain forward warp (F mode)
  int timestamp = 0;             // stamped onto detected events
};

struct TopologyAwareResult {
  DenseWarp warp;  // final warp over the source (blended in FB mode)
  std::vector<TopologyEvent> events;
  BlendWeights weights;
  RegistrationResult forward;
  RegistrationResult backward;  // default-constructed in F mode
};

// Full pipeline: bidirectional registration, warp inversion onto the
// opposite support, stretch/compress evidence, event extraction and
// clustering, and the final blended warp.
TopologyAwareResult topology_aware_register(const OrientedPointCloud& source,
                                            const OrientedPointCloud& target,
                                            const PipelineConfig& cfg,
                                            const DenseWarp* w0 = nullptr,
                                            const OrganizedCloud* target_frame = nullptr,
                                            const OrganizedCloud* source_frame = nullptr);

}  // namespace topowarp
