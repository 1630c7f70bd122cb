#include "topowarp/depth.hpp"

#include <cmath>
#include <stdexcept>

namespace topowarp {

OrganizedCloud organize(const DepthFrame& frame, double max_depth,
                        const NormalEstimationParams& normal_params) {
  if (frame.width <= 0 || frame.height <= 0 ||
      frame.depth.size() != static_cast<std::size_t>(frame.width) * frame.height) {
    throw std::invalid_argument("malformed depth frame");
  }
  OrganizedCloud out;
  out.width = frame.width;
  out.height = frame.height;
  out.intr = frame.intr;
  out.pixel_to_index.assign(frame.depth.size(), -1);

  const bool has_color = frame.color.size() == frame.depth.size();
  for (int v = 0; v < frame.height; ++v) {
    for (int u = 0; u < frame.width; ++u) {
      const std::size_t pix = static_cast<std::size_t>(v) * frame.width + u;
      const double z = frame.depth[pix];
      if (z <= 0.0 || z > max_depth) continue;
      out.pixel_to_index[pix] = static_cast<int>(out.cloud.points.size());
      out.index_to_pixel.push_back(static_cast<int>(pix));
      out.cloud.points.push_back(backproject(frame.intr, u, v, z));
      out.cloud.colors.push_back(has_color ? frame.color[pix] : Vec3(0.5, 0.5, 0.5));
    }
  }
  if (out.cloud.points.empty()) {
    throw std::invalid_argument("empty frame");
  }
  out.cloud.normals = estimate_normals(out.cloud.points, normal_params, Vec3::Zero());
  return out;
}

OrientedPointCloud depth_to_cloud(const DepthFrame& frame, double max_depth,
                                  const NormalEstimationParams& normal_params) {
  return organize(frame, max_depth, normal_params).cloud;
}

DepthFrame render_depth(const OrientedPointCloud& cloud, const Intrinsics& intr, int width,
                        int height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("non-positive frame size");
  }
  DepthFrame frame;
  frame.width = width;
  frame.height = height;
  frame.intr = intr;
  frame.depth.assign(static_cast<std::size_t>(width) * height, 0.0);
  frame.color.assign(frame.depth.size(), Vec3(0.5, 0.5, 0.5));

  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (p.z() <= 0.0) continue;
    const Eigen::Vector2d uv = project(intr, p);
    const int u = static_cast<int>(std::lround(uv.x()));
    const int v = static_cast<int>(std::lround(uv.y()));
    if (!frame.in_bounds(u, v)) continue;
    const std::size_t pix = static_cast<std::size_t>(v) * width + u;
    if (frame.depth[pix] <= 0.0 || p.z() < frame.depth[pix]) {
      frame.depth[pix] = p.z();
      if (i < cloud.colors.size()) frame.color[pix] = cloud.colors[i];
    }
  }
  return frame;
}

}  // namespace topowarp
