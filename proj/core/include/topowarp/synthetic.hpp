#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topowarp/depth.hpp"
#include "topowarp/point_cloud.hpp"
#include "topowarp/topology.hpp"
#include "topowarp/warp.hpp"

namespace topowarp {

// Procedural two-frame test scenes with exact ground truth.
//   rigid       one box under a random rigid motion
//   hinge       two boxes joined along a face, one swings open
//   separation  joined boxes; one translates away along the split axis
//   contact     time-reversed separation (segments meet)
//   slide       box translating tangentially on a slab; keeps surface
//               contact, so there is no ground-truth event — the detector's
//               known blind spot
enum class SceneKind { Rigid, Hinge, Separation, Contact, Slide };

SceneKind scene_kind_from(const std::string& name);  // throws on unknown name
std::string to_string(SceneKind kind);

struct SceneParams {
  double box = 0.12;     // per-segment extent along the split axis [m]
  double height = 0.12;  // y extent
  double depth = 0.12;   // z extent
  double spacing = 0.005;
  double jitter = 0.0005;  // in-plane sampling jitter
  double gap = 0.05;       // separation / contact travel
  double hinge_angle = 0.15;
  double max_rotation = 0.2617993877991494;  // rigid scenes, 15 degrees
  double max_translation = 0.05;
  double slide_dist = 0.04;
  int keypoints_per_segment = 12;
  int descriptor_dim = 16;
  double keypoint_margin = 0.03;    // keep keypoints away from the interface
  double annotation_band = 0.015;   // ground-truth event band at the interface
  double camera_distance = 0.8;     // scene center depth in camera space
  double focal = 140.0;
  int frame_width = 160;
  int frame_height = 120;
};

// Both frames live in camera space (camera at the origin, looking +z).
// target is source moved by the per-segment ground-truth motion, point for
// point: gt_warp applied to source reproduces target exactly.
struct SyntheticScene {
  OrientedPointCloud source;
  OrientedPointCloud target;
  DenseWarp gt_warp;
  std::vector<TopologyEvent> gt_events;  // source-frame coordinates
  std::vector<int> gt_segment_labels;    // per source point
  std::vector<int> gt_mask;              // source indices in the event band
  Intrinsics intrinsics;
  int frame_width = 0;
  int frame_height = 0;
};

SyntheticScene generate_scene(SceneKind kind, const SceneParams& params, std::uint64_t seed);

}  // namespace topowarp
