#pragma once

#include "topowarp/normals.hpp"
#include "topowarp/point_cloud.hpp"

#include <vector>

namespace topowarp {

struct Intrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  double depth_scale = 0.001;  // meters per raw depth unit
};

// Organized range image. Depth is stored in meters; values <= 0 are invalid.
// Colors are optional (empty or one RGB triple in [0,1] per pixel).
struct DepthFrame {
  int width = 0;
  int height = 0;
  Intrinsics intr;
  std::vector<double> depth;
  std::vector<Vec3> color;

  double depth_at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
  bool in_bounds(int u, int v) const { return u >= 0 && u < width && v >= 0 && v < height; }
};

// Pinhole camera mapping, pixel centers at integer coordinates.
inline Vec3 backproject(const Intrinsics& intr, int u, int v, double z) {
  return {(u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z};
}
// Continuous pixel coordinates of a camera-space point (z must be > 0).
inline Eigen::Vector2d project(const Intrinsics& intr, const Vec3& p) {
  return {intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy};
}

// Cloud extracted from a frame together with the pixel <-> point mapping
// that flow computation and projective matching need.
struct OrganizedCloud {
  OrientedPointCloud cloud;
  std::vector<int> pixel_to_index;  // width*height, -1 where invalid
  std::vector<int> index_to_pixel;  // flat pixel id per cloud point
  int width = 0;
  int height = 0;
  Intrinsics intr;
};

// Back-projects all pixels with 0 < depth <= max_depth, estimates normals
// (viewpoint = camera origin) and copies colors (mid-gray when the frame
// has none). Row-major pixel order. Throws std::invalid_argument("empty
// frame") when no pixel survives.
OrganizedCloud organize(const DepthFrame& frame, double max_depth,
                        const NormalEstimationParams& normal_params);

OrientedPointCloud depth_to_cloud(const DepthFrame& frame, double max_depth,
                                  const NormalEstimationParams& normal_params);

// Point-splat z-buffer rendering of a cloud into a frame (nearest depth per
// pixel wins; that point's color is kept). Points behind the camera or
// outside the image are dropped.
DepthFrame render_depth(const OrientedPointCloud& cloud, const Intrinsics& intr, int width,
                        int height);

}  // namespace topowarp
