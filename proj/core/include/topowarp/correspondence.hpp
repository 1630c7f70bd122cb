#pragma once

#include "topowarp/depth.hpp"
#include "topowarp/kd_tree.hpp"
#include "topowarp/point_cloud.hpp"

#include <vector>

namespace topowarp {

// Acceptance gates applied to every candidate pair: positions closer than
// max_distance, normals within max_normal_angle (radians), and RGB colors
// within max_color_distance (Euclidean in [0,1]^3). Pairs where either
// normal is invalid are rejected outright.
struct GatingThresholds {
  double max_distance = 0.15;
  double max_normal_angle = 0.2617993877991494;  // 15 degrees
  double max_color_distance = 0.4;
};

struct IndexPair {
  int src;
  int dst;
};

struct CorrespondenceSet {
  std::vector<IndexPair> dense;
  std::vector<IndexPair> sparse;
};

bool gate_pair(const Vec3& ps, const Vec3& ns, const Vec3& cs, const Vec3& pd, const Vec3& nd,
               const Vec3& cd, const GatingThresholds& g);

// Nearest neighbor in the target for every (already warped) source point,
// kept only if it passes the gates. Pairs come out ordered by source index.
std::vector<IndexPair> find_dense_nn(const OrientedPointCloud& warped_source,
                                     const OrientedPointCloud& target,
                                     const KdTree& target_index, const GatingThresholds& g);

// Projective variant: each warped source point is associated with the
// target point stored at the pixel it projects to. Points that project
// outside the image, onto an invalid pixel, or behind the camera are
// skipped.
std::vector<IndexPair> find_dense_projective(const OrientedPointCloud& warped_source,
                                             const OrganizedCloud& target,
                                             const GatingThresholds& g);

// Descriptor matching between the clouds' keypoints: mutual nearest
// neighbors in descriptor space, pruned by the classic best/second-best
// ratio test and the same three spatial gates (evaluated on the host
// points). Returned indices address the clouds' points, not the keypoint
// arrays; a keypoint's host is its nearest cloud point. Either side having
// no keypoints yields an empty set. Throws
// std::invalid_argument("descriptor length mismatch") on inconsistent
// descriptor sizes.
std::vector<IndexPair> match_keypoints(const OrientedPointCloud& source,
                                       const OrientedPointCloud& target,
                                       const GatingThresholds& g, double lowe_ratio = 0.8);

}  // namespace topowarp
